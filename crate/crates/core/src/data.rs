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

//! Datasets: IDX ingestion, the synthetic blob generator, per-sample
//! standardization and public/sensitive splitting.
//!
//! Every sample carries an [`Origin`] tag. Splitting assigns `Public` or
//! `Sensitive`; the training pipeline refuses to feed anything but `Public`
//! samples to the student.

use std::collections::BTreeSet;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{RonaError, Result};
use crate::nn::Tensor;

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    /// Not yet assigned by a split (held-out test sets, freshly loaded data).
    Unsplit,
    Public,
    Sensitive,
}

/// Immutable labelled image set, `N × C × H × W`, standardized per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    images: Tensor,
    labels: Vec<usize>,
    class_count: usize,
    origins: Vec<Origin>,
    source: Vec<usize>,
}

impl Dataset {
    /// Build from pixels in `[0, 1]`; each sample is standardized to zero
    /// mean and unit variance.
    pub fn from_unit_pixels(images: Tensor, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        let n = images.rows();
        if images.shape().len() != 4 {
            return Err(RonaError::usage(format!("images must be N x C x H x W, got {:?}", images.shape())));
        }
        if labels.len() != n {
            return Err(RonaError::usage(format!("{n} images but {} labels", labels.len())));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(RonaError::usage(format!("label {bad} outside {class_count} classes")));
        }
        let mut images = images;
        for i in 0..n {
            standardize(images.row_mut(i));
        }
        Ok(Dataset {
            images,
            labels,
            class_count,
            origins: vec![Origin::Unsplit; n],
            source: (0..n).collect(),
        })
    }

    pub fn images(&self) -> &Tensor {
        &self.images
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn origins(&self) -> &[Origin] {
        &self.origins
    }

    /// Index of each sample in the dataset it was loaded or generated as.
    pub fn source_indices(&self) -> &[usize] {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sample_shape(&self) -> &[usize] {
        self.images.row_shape()
    }

    /// Widen the label space, e.g. so a test set lacking some digits agrees
    /// with its training set.
    pub fn with_class_count(mut self, class_count: usize) -> Result<Self> {
        if class_count < self.class_count {
            return Err(RonaError::usage(format!(
                "cannot shrink {} classes to {class_count}",
                self.class_count
            )));
        }
        self.class_count = class_count;
        Ok(self)
    }

    /// Rows `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Ok(Dataset {
            images: self.images.select_rows(indices)?,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_count: self.class_count,
            origins: indices.iter().map(|&i| self.origins[i]).collect(),
            source: indices.iter().map(|&i| self.source[i]).collect(),
        })
    }

    /// A batch of images with its labels.
    pub fn batch(&self, indices: &[usize]) -> Result<(Tensor, Vec<usize>)> {
        Ok((self.images.select_rows(indices)?, indices.iter().map(|&i| self.labels[i]).collect()))
    }

    /// Like [`Dataset::batch`], but fails if any selected sample is not
    /// tagged `Public`.
    pub fn public_batch(&self, indices: &[usize]) -> Result<(Tensor, Vec<usize>)> {
        if let Some(&i) = indices.iter().find(|&&i| self.origins[i] != Origin::Public) {
            return Err(RonaError::Usage(format!(
                "sample {i} (source index {}) is {:?}; only public samples may reach the student",
                self.source[i], self.origins[i]
            )));
        }
        self.batch(indices)
    }

    /// Samples of `self` followed by those of `other`.
    pub fn concat(&self, other: &Dataset) -> Result<Self> {
        if self.sample_shape() != other.sample_shape() {
            return Err(RonaError::usage(format!(
                "cannot join samples of shape {:?} and {:?}",
                self.sample_shape(),
                other.sample_shape()
            )));
        }
        let mut data = self.images.data().to_vec();
        data.extend_from_slice(other.images.data());
        let mut shape = self.images.shape().to_vec();
        shape[0] = self.len() + other.len();
        Ok(Dataset {
            images: Tensor::new(shape, data)?,
            labels: self.labels.iter().chain(&other.labels).copied().collect(),
            class_count: self.class_count.max(other.class_count),
            origins: self.origins.iter().chain(&other.origins).copied().collect(),
            source: self.source.iter().chain(&other.source).copied().collect(),
        })
    }

    /// Fails unless every sample is tagged `Public`.
    pub fn assert_public(&self, context: &str) -> Result<()> {
        match self.origins.iter().position(|&o| o != Origin::Public) {
            None => Ok(()),
            Some(i) => Err(RonaError::Usage(format!(
                "{context}: sample {} (source index {}) is {:?}, only public samples are allowed",
                i, self.source[i], self.origins[i]
            ))),
        }
    }

    fn tagged(mut self, origin: Origin) -> Self {
        self.origins.fill(origin);
        self
    }
}

fn standardize(x: &mut [f32]) {
    let n = x.len() as f64;
    let mean = x.iter().map(|&v| v as f64).sum::<f64>() / n;
    let var = x.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
    let inv = if var > 1e-12 { 1.0 / var.sqrt() } else { 1.0 };
    for v in x.iter_mut() {
        *v = ((*v as f64 - mean) * inv) as f32;
    }
}

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice()).read_to_end(&mut out).map_err(|e| RonaError::Ingest {
            path: path.to_path_buf(),
            offset: 0,
            message: format!("gzip stream: {e}"),
        })?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], offset: usize, path: &Path) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| RonaError::Ingest {
            path: path.to_path_buf(),
            offset: offset as u64,
            message: format!("header truncated: expected at least {} bytes, found {}", offset + 4, bytes.len()),
        })
}

/// Parse an IDX file, returning its dimensions and payload.
fn parse_idx(path: &Path, magic: u32) -> Result<(Vec<usize>, Vec<u8>)> {
    let bytes = read_maybe_gz(path)?;
    let found = be_u32(&bytes, 0, path)?;
    if found != magic {
        return Err(RonaError::Ingest {
            path: path.to_path_buf(),
            offset: 0,
            message: format!("magic number {found:#010x}, expected {magic:#010x}"),
        });
    }
    let rank = (magic & 0xff) as usize;
    let dims = (0..rank)
        .map(|d| be_u32(&bytes, 4 + 4 * d, path).map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    let header = 4 + 4 * rank;
    let expected = header + dims.iter().product::<usize>();
    if bytes.len() != expected {
        return Err(RonaError::Ingest {
            path: path.to_path_buf(),
            offset: bytes.len().min(expected) as u64,
            message: format!("expected {expected} bytes, found {}", bytes.len()),
        });
    }
    Ok((dims, bytes[header..].to_vec()))
}

/// Load an IDX image/label pair (optionally gzipped). Pixels are scaled to
/// `[0, 1]` and standardized per sample; the class count is one more than
/// the largest label.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let (ipath, lpath) = (images_path.as_ref(), labels_path.as_ref());
    let (idims, pixels) = parse_idx(ipath, IMAGE_MAGIC)?;
    let (ldims, labels) = parse_idx(lpath, LABEL_MAGIC)?;
    if idims[0] != ldims[0] {
        return Err(RonaError::Ingest {
            path: lpath.to_path_buf(),
            offset: 4,
            message: format!("{} labels for {} images", ldims[0], idims[0]),
        });
    }
    if idims[0] == 0 {
        return Err(RonaError::Ingest {
            path: ipath.to_path_buf(),
            offset: 4,
            message: "no samples".into(),
        });
    }
    let labels: Vec<usize> = labels.into_iter().map(usize::from).collect();
    let class_count = labels.iter().max().map_or(0, |&m| m + 1).max(2);
    let data = pixels.into_iter().map(|p| p as f32 / 255.0).collect();
    let images = Tensor::new(vec![idims[0], 1, idims[1], idims[2]], data)?;
    Dataset::from_unit_pixels(images, labels, class_count)
}

/// Write an IDX image/label pair; paths ending in `.gz` are gzipped.
pub fn write_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    rows: usize,
    cols: usize,
    pixels: &[u8],
    labels: &[u8],
) -> Result<()> {
    if pixels.len() != labels.len() * rows * cols {
        return Err(RonaError::usage(format!(
            "{} pixels for {} images of {rows}x{cols}",
            pixels.len(),
            labels.len()
        )));
    }
    let n = labels.len() as u32;
    let mut img = Vec::with_capacity(16 + pixels.len());
    for v in [IMAGE_MAGIC, n, rows as u32, cols as u32] {
        img.extend_from_slice(&v.to_be_bytes());
    }
    img.extend_from_slice(pixels);
    let mut lbl = Vec::with_capacity(8 + labels.len());
    for v in [LABEL_MAGIC, n] {
        lbl.extend_from_slice(&v.to_be_bytes());
    }
    lbl.extend_from_slice(labels);
    write_file(images_path.as_ref(), &img)?;
    write_file(labels_path.as_ref(), &lbl)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if path.extension().is_some_and(|e| e == "gz") {
        let mut enc = GzEncoder::new(fs::File::create(path)?, Compression::default());
        enc.write_all(bytes)?;
        enc.finish()?;
    } else {
        fs::write(path, bytes)?;
    }
    Ok(())
}

/// How to divide a dataset into public and sensitive parts.
#[derive(Debug, Clone, PartialEq)]
pub enum SplitSpec {
    /// A seeded random `public_frac` of the samples is public.
    Fraction { public_frac: f64, seed: u64 },
    /// Every sample of a masked class is sensitive; all others are public.
    ClassMask(BTreeSet<usize>),
}

impl SplitSpec {
    pub fn fraction(public_frac: f64, seed: u64) -> Result<Self> {
        if !(public_frac > 0.0 && public_frac < 1.0) {
            return Err(RonaError::config(format!("public fraction must be in (0, 1), got {public_frac}")));
        }
        Ok(SplitSpec::Fraction { public_frac, seed })
    }

    pub fn class_mask(classes: impl IntoIterator<Item = usize>) -> Self {
        SplitSpec::ClassMask(classes.into_iter().collect())
    }
}

/// Partition into `(public, sensitive)`, preserving sample order within
/// each side.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let mut is_public = vec![false; ds.len()];
    match spec {
        SplitSpec::Fraction { public_frac, seed } => {
            if !(*public_frac > 0.0 && *public_frac < 1.0) {
                return Err(RonaError::config(format!("public fraction must be in (0, 1), got {public_frac}")));
            }
            let mut order: Vec<usize> = (0..ds.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
            let n_pub = (public_frac * ds.len() as f64).round() as usize;
            for &i in &order[..n_pub] {
                is_public[i] = true;
            }
        }
        SplitSpec::ClassMask(masked) => {
            if let Some(&bad) = masked.iter().find(|&&c| c >= ds.class_count()) {
                return Err(RonaError::config(format!(
                    "masked class {bad} outside {} classes",
                    ds.class_count()
                )));
            }
            for (p, l) in is_public.iter_mut().zip(ds.labels()) {
                *p = !masked.contains(l);
            }
        }
    }
    let public: Vec<usize> = (0..ds.len()).filter(|&i| is_public[i]).collect();
    let sensitive: Vec<usize> = (0..ds.len()).filter(|&i| !is_public[i]).collect();
    if public.is_empty() || sensitive.is_empty() {
        return Err(RonaError::config(format!(
            "split leaves {} public and {} sensitive samples; both sides must be nonempty",
            public.len(),
            sensitive.len()
        )));
    }
    Ok((
        ds.subset(&public)?.tagged(Origin::Public),
        ds.subset(&sensitive)?.tagged(Origin::Sensitive),
    ))
}

/// Side of the synthetic images.
pub const SYNTH_SIDE: usize = 8;
const SYNTH_NOISE: f64 = 0.15;
const SYNTH_JITTER: f64 = 0.5;

/// Synthetic `1 × 8 × 8` images: one Gaussian blob per class, centred on a
/// ring, with per-sample position jitter and pixel noise. Samples are
/// shuffled.
pub fn synth(classes: usize, per_class: usize, seed: u64) -> Result<Dataset> {
    if classes < 2 {
        return Err(RonaError::config(format!("synthetic data needs at least 2 classes, got {classes}")));
    }
    if per_class == 0 {
        return Err(RonaError::config("synthetic data needs at least one sample per class"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = SYNTH_SIDE as f64;
    let mid = (side - 1.0) / 2.0;
    let mut labels: Vec<usize> = (0..classes * per_class).map(|i| i % classes).collect();
    labels.shuffle(&mut rng);
    let mut data = Vec::with_capacity(labels.len() * SYNTH_SIDE * SYNTH_SIDE);
    for &c in &labels {
        let angle = std::f64::consts::TAU * c as f64 / classes as f64;
        let cy = mid + 2.4 * angle.sin() + SYNTH_JITTER * rng.sample::<f64, _>(StandardNormal);
        let cx = mid + 2.4 * angle.cos() + SYNTH_JITTER * rng.sample::<f64, _>(StandardNormal);
        for y in 0..SYNTH_SIDE {
            for x in 0..SYNTH_SIDE {
                let d2 = (y as f64 - cy).powi(2) + (x as f64 - cx).powi(2);
                let v = (-d2 / 3.0).exp() + SYNTH_NOISE * rng.sample::<f64, _>(StandardNormal);
                data.push(v.clamp(0.0, 1.0) as f32);
            }
        }
    }
    let images = Tensor::new(vec![labels.len(), 1, SYNTH_SIDE, SYNTH_SIDE], data)?;
    Dataset::from_unit_pixels(images, labels, classes)
}
