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

//! Binary checkpoint format.
//!
//! ```text
//! "RONA"                      magic, 4 bytes
//! version: u32 LE
//! repeated until EOF:
//!   name_len: u32 LE, name: UTF-8 bytes
//!   rank: u32 LE, dims: rank × u32 LE
//!   values: product(dims) × f32 LE
//! ```

use std::io::{self, Read, Write};

use super::network::Network;
use super::tensor::Tensor;
use crate::error::{RonaError, Result};

pub const MAGIC: &[u8; 4] = b"RONA";
pub const FORMAT_VERSION: u32 = 1;

pub fn write_tensors<W: Write>(mut w: W, tensors: &[(String, &Tensor)]) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    for (name, t) in tensors {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(t.shape().len() as u32).to_le_bytes())?;
        for &d in t.shape() {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(t.len() * 4);
        for v in t.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

/// Read every tensor in a checkpoint, in file order.
pub fn read_tensors<R: Read>(mut r: R) -> Result<Vec<(String, Tensor)>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| RonaError::Checkpoint("file too short for magic".into()))?;
    if &magic != MAGIC {
        return Err(RonaError::Checkpoint(format!("bad magic {magic:?}")));
    }
    let version = read_u32(&mut r).map_err(|_| RonaError::Checkpoint("missing version".into()))?;
    if version != FORMAT_VERSION {
        return Err(RonaError::Checkpoint(format!("unsupported format version {version}")));
    }
    let mut out = Vec::new();
    loop {
        let mut first = [0u8; 4];
        let got = r.read(&mut first)?;
        if got == 0 {
            break;
        }
        if got < 4 {
            r.read_exact(&mut first[got..])
                .map_err(|_| RonaError::Checkpoint("truncated tensor header".into()))?;
        }
        let truncated = |_| RonaError::Checkpoint(format!("truncated tensor #{}", out.len()));
        let name_len = u32::from_le_bytes(first) as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name).map_err(truncated)?;
        let name = String::from_utf8(name).map_err(|_| RonaError::Checkpoint("tensor name is not UTF-8".into()))?;
        let rank = read_u32(&mut r).map_err(truncated)? as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(read_u32(&mut r).map_err(truncated)? as usize);
        }
        let n: usize = dims.iter().product();
        let mut raw = vec![0u8; n * 4];
        r.read_exact(&mut raw).map_err(truncated)?;
        let data = raw.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect();
        out.push((name, Tensor::new(dims, data).map_err(|e| RonaError::Checkpoint(e.to_string()))?));
    }
    Ok(out)
}

pub fn save_network<W: Write>(net: &Network, w: W) -> Result<()> {
    write_tensors(w, &net.named_params())
}

/// Load parameters into an already-built network of the same architecture.
pub fn load_network<R: Read>(net: &mut Network, r: R) -> Result<()> {
    let tensors = read_tensors(r)?;
    let expected: Vec<(String, Vec<usize>)> = net
        .named_params()
        .into_iter()
        .map(|(n, t)| (n, t.shape().to_vec()))
        .collect();
    if tensors.len() != expected.len() {
        return Err(RonaError::Checkpoint(format!(
            "checkpoint holds {} tensors, {} expects {}",
            tensors.len(),
            net.name(),
            expected.len()
        )));
    }
    for ((name, t), (en, es)) in tensors.iter().zip(&expected) {
        if name != en || t.shape() != es.as_slice() {
            return Err(RonaError::Checkpoint(format!(
                "tensor {name} {:?} does not match {en} {es:?}",
                t.shape()
            )));
        }
    }
    let mut it = tensors.into_iter();
    for i in 0..net.layers().len() {
        if net.layers()[i].params().is_none() {
            continue;
        }
        let (_, w) = it.next().expect("checked length");
        let (_, b) = it.next().expect("checked length");
        let p = net.layer_params_mut(i).expect("layer has params");
        p.weight = w;
        p.bias = b;
    }
    Ok(())
}
