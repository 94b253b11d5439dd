#!/usr/bin/env python3
# Copyright 2026 The rona Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Build the desk-scale MNIST subset used by the acceptance suite.

The 10,000 digits shipped with the `mnist` npm package (pixels stored as
byte/255 rounded to three decimals) are converted back to bytes, shuffled
with a fixed seed and written as gzipped IDX files: 8,000 training samples
and 2,000 test samples.

Usage: scripts/fetch_mnist.py [OUT_DIR]   (default: data/mnist)
"""

import gzip
import json
import os
import random
import struct
import subprocess
import sys
import tarfile
import tempfile

TRAIN = 8000
SIDE = 28


def write_idx(path, magic, dims, payload):
    header = struct.pack(">I", magic) + b"".join(struct.pack(">I", d) for d in dims)
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(header + payload)


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join("data", "mnist")
    os.makedirs(out, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(["npm", "pack", "mnist@1.1.0"], cwd=tmp, check=True,
                       stdout=subprocess.DEVNULL)
        with tarfile.open(os.path.join(tmp, "mnist-1.1.0.tgz")) as tar:
            tar.extractall(tmp)
        samples = []
        for digit in range(10):
            with open(os.path.join(tmp, "package", "src", "digits", f"{digit}.json")) as f:
                data = json.load(f)["data"]
            n = len(data) // (SIDE * SIDE)
            for i in range(n):
                px = data[i * SIDE * SIDE:(i + 1) * SIDE * SIDE]
                samples.append((bytes(int(round(v * 255)) for v in px), digit))

    random.Random(0).shuffle(samples)
    parts = {"train": samples[:TRAIN], "t10k": samples[TRAIN:]}
    for name, part in parts.items():
        images = b"".join(s[0] for s in part)
        labels = bytes(s[1] for s in part)
        write_idx(os.path.join(out, f"{name}-images-idx3-ubyte.gz"), 0x803,
                  [len(part), SIDE, SIDE], images)
        write_idx(os.path.join(out, f"{name}-labels-idx1-ubyte.gz"), 0x801,
                  [len(part)], labels)
        print(f"{name}: {len(part)} samples")


if __name__ == "__main__":
    main()
