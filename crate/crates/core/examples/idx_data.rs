// Copyright 2026 The rona Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Write a small IDX pair, read it back and split it into public and
//! sensitive parts.
//!
//! cargo run --example idx_data

use rona::data::{load_idx, split, write_idx, SplitSpec};

fn main() -> rona::Result<()> {
    let dir = std::env::temp_dir().join("rona-idx-example");
    std::fs::create_dir_all(&dir)?;
    let (rows, cols, n) = (4, 4, 12);
    let pixels: Vec<u8> = (0..n * rows * cols).map(|i| (i * 29 % 256) as u8).collect();
    let labels: Vec<u8> = (0..n).map(|i| (i % 3) as u8).collect();
    let (img, lbl) = (dir.join("images.gz"), dir.join("labels.gz"));
    write_idx(&img, &lbl, rows, cols, &pixels, &labels)?;

    let ds = load_idx(&img, &lbl)?;
    println!("{} samples of shape {:?}, {} classes", ds.len(), ds.sample_shape(), ds.class_count());

    let (public, sensitive) = split(&ds, &SplitSpec::fraction(0.25, 0)?)?;
    println!("fraction split: public {:?}, sensitive {:?}", public.source_indices(), sensitive.source_indices());
    let (public, sensitive) = split(&ds, &SplitSpec::class_mask([2]))?;
    println!("class 2 masked: {} public, {} sensitive", public.len(), sensitive.len());
    Ok(())
}
