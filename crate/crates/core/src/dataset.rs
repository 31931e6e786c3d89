// Copyright 2026 The pfc-snn Authors
// SPDX-License-Identifier: Apache-2.0

//! IDX ingestion and stimulus selection.
//!
//! IDX layout: big-endian `u32` magic (`0x803` images, `0x801` labels),
//! big-endian `u32` dimension sizes, then the unsigned byte payload. Files
//! starting with the gzip signature `1f 8b` are inflated transparently.

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::N_INPUT;

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;
pub const SIDE: usize = 28;

pub const CLASS_TSHIRT: u8 = 0;
pub const CLASS_ANKLE_BOOT: u8 = 9;

/// A 28x28 grayscale image, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Image(Vec<u8>);

impl std::fmt::Debug for Image {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let lit = self.0.iter().filter(|&&p| p > 0).count();
        write!(f, "Image({lit} lit pixels)")
    }
}

impl Image {
    pub fn new(pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != N_INPUT {
            return Err(Error::WrongShape(pixels.len()));
        }
        Ok(Self(pixels))
    }

    pub fn blank() -> Self {
        Self(vec![0; N_INPUT])
    }

    pub fn pixels(&self) -> &[u8] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&p| p as f64).collect()
    }

    pub fn at(&self, row: usize, col: usize) -> u8 {
        self.0[row * SIDE + col]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImages {
    pub images: Vec<Image>,
    pub labels: Vec<u8>,
}

impl LabeledImages {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn indices_of(&self, class: u8) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |(_, &l)| l == class)
            .map(|(i, _)| i)
    }
}

fn read_maybe_gz(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..])
            .read_to_end(&mut out)
            .map_err(|e| Error::Truncated {
                path: path.to_path_buf(),
                detail: format!("gzip stream: {e}"),
            })?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Truncated {
            path: path.to_path_buf(),
            detail: "header shorter than expected".into(),
        })
}

fn check_magic(bytes: &[u8], expected: u32, path: &Path) -> Result<()> {
    let found = be_u32(bytes, 0, path)?;
    if found != expected {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            found,
            expected,
        });
    }
    Ok(())
}

pub fn parse_idx_images(bytes: &[u8], path: &Path) -> Result<Vec<Image>> {
    check_magic(bytes, IMAGE_MAGIC, path)?;
    let n = be_u32(bytes, 4, path)? as usize;
    let rows = be_u32(bytes, 8, path)? as usize;
    let cols = be_u32(bytes, 12, path)? as usize;
    if rows != SIDE || cols != SIDE {
        return Err(Error::InvalidArgument(format!(
            "{}: images are {rows}x{cols}, expected 28x28",
            path.display()
        )));
    }
    let payload = &bytes[16..];
    if payload.len() < n * N_INPUT {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            detail: format!("{} bytes for {n} images of {N_INPUT} pixels", payload.len()),
        });
    }
    Ok(payload[..n * N_INPUT]
        .chunks_exact(N_INPUT)
        .map(|c| Image(c.to_vec()))
        .collect())
}

pub fn parse_idx_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    check_magic(bytes, LABEL_MAGIC, path)?;
    let n = be_u32(bytes, 4, path)? as usize;
    let payload = &bytes[8..];
    if payload.len() < n {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            detail: format!("{} bytes for {n} labels", payload.len()),
        });
    }
    Ok(payload[..n].to_vec())
}

pub fn load_idx(path_images: &Path, path_labels: &Path) -> Result<LabeledImages> {
    let images = parse_idx_images(&read_maybe_gz(path_images)?, path_images)?;
    let labels = parse_idx_labels(&read_maybe_gz(path_labels)?, path_labels)?;
    if images.len() != labels.len() {
        return Err(Error::CountMismatch {
            images: images.len(),
            labels: labels.len(),
        });
    }
    Ok(LabeledImages { images, labels })
}

/// Uncompressed IDX encoding of an image set.
pub fn encode_idx_images(images: &[Image]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.len() * N_INPUT);
    for v in [IMAGE_MAGIC, images.len() as u32, SIDE as u32, SIDE as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    for im in images {
        out.extend_from_slice(&im.0);
    }
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

pub fn cosine_similarity(a: &Image, b: &Image) -> Result<f64> {
    let (mut dot, mut na, mut nb) = (0u64, 0u64, 0u64);
    for (&x, &y) in a.0.iter().zip(&b.0) {
        let (x, y) = (x as u64, y as u64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0 && nb == 0 {
        return Err(Error::ZeroVectors);
    }
    if na == 0 || nb == 0 {
        return Ok(0.0);
    }
    Ok(dot as f64 / ((na as f64).sqrt() * (nb as f64).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorPolicy {
    /// First image of the class in dataset order.
    First,
    /// Uniformly random image of the class, drawn from the selection seed.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub target_index: usize,
    pub non_target_index: usize,
    pub context_target_index: usize,
    pub context_non_target_index: usize,
    pub context_target_similarity: f64,
    pub context_non_target_similarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StimulusSet {
    pub target: Image,
    pub non_target: Image,
    pub context_target: Image,
    pub context_non_target: Image,
    pub provenance: Provenance,
}

/// Most similar same-class image to `anchor`, excluding the anchor itself.
/// Ties go to the lowest dataset index.
fn best_context(data: &LabeledImages, class: u8, anchor: usize) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for i in data.indices_of(class).filter(|&i| i != anchor) {
        let s = match cosine_similarity(&data.images[anchor], &data.images[i]) {
            Ok(s) => s,
            Err(Error::ZeroVectors) => continue,
            Err(e) => return Err(e),
        };
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best.ok_or(Error::InvalidArgument(format!(
        "class {class} needs at least two images to pick a context stimulus"
    )))
}

pub fn select_stimuli(
    data: &LabeledImages,
    target_class: u8,
    non_target_class: u8,
    policy: AnchorPolicy,
    seed: u64,
) -> Result<StimulusSet> {
    if target_class == non_target_class {
        return Err(Error::InvalidArgument(
            "target and non-target classes must differ".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pick = |class: u8| -> Result<usize> {
        let members: Vec<usize> = data.indices_of(class).collect();
        if members.is_empty() {
            return Err(Error::EmptyClass(class));
        }
        Ok(match policy {
            AnchorPolicy::First => members[0],
            AnchorPolicy::Random => members[rng.random_range(0..members.len())],
        })
    };
    let t = pick(target_class)?;
    let nt = pick(non_target_class)?;
    let (ct, ct_sim) = best_context(data, target_class, t)?;
    let (cnt, cnt_sim) = best_context(data, non_target_class, nt)?;
    Ok(StimulusSet {
        target: data.images[t].clone(),
        non_target: data.images[nt].clone(),
        context_target: data.images[ct].clone(),
        context_non_target: data.images[cnt].clone(),
        provenance: Provenance {
            target_index: t,
            non_target_index: nt,
            context_target_index: ct,
            context_non_target_index: cnt,
            context_target_similarity: ct_sim,
            context_non_target_similarity: cnt_sim,
        },
    })
}
