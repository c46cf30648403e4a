//! Datasets, `*vecs` file I/O and synthetic workloads.

mod synth;
mod vecs;

pub use synth::{
    gen_klein, gen_queries, gen_sphere, klein_point, KLEIN_MAJOR_RADIUS, KLEIN_MINOR_RADIUS,
    DEFAULT_KLEIN_NOISE, DEFAULT_P_NEAR, DEFAULT_SPHERE_NOISE,
};
pub use vecs::{read_vecs, read_vecs_from, write_vecs, write_vecs_to, ElementKind};

use crate::error::{check_dim, parameter, Result};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: impl IntoIterator<Item = u8>) -> u64 {
    bytes
        .into_iter()
        .fold(FNV_OFFSET, |h, b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// `n` points of dimension `d`, row-major, with a content checksum.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    points: Vec<f64>,
    checksum: u64,
}

impl Dataset {
    pub fn new(dim: usize, points: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(parameter("dataset dimension must be positive"));
        }
        if points.is_empty() {
            return Err(parameter("dataset must contain at least one point"));
        }
        if !points.len().is_multiple_of(dim) {
            return Err(parameter(format!(
                "{} values do not split into rows of dimension {dim}",
                points.len()
            )));
        }
        if let Some(i) = points.iter().position(|x| !x.is_finite()) {
            return Err(parameter(format!("non-finite value in point {}", i / dim)));
        }
        let checksum = fnv1a64(points.iter().flat_map(|x| x.to_le_bytes()));
        Ok(Self { dim, points, checksum })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut points = Vec::with_capacity(dim * rows.len());
        for row in rows {
            check_dim(dim, row.as_ref().len())?;
            points.extend_from_slice(row.as_ref());
        }
        Self::new(dim, points)
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    /// Always false; datasets hold at least one point.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, id: usize) -> &[f64] {
        &self.points[id * self.dim..(id + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.points
    }

    /// FNV-1a over the little-endian bytes of every coordinate, row-major.
    pub fn checksum(&self) -> u64 {
        self.checksum
    }

    /// Bytes occupied by the coordinates in memory.
    pub fn byte_size(&self) -> usize {
        self.points.len() * std::mem::size_of::<f64>()
    }
}

/// Queries, with near/far labels and planted sources when synthetic.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySet {
    pub points: Dataset,
    /// `true` when the planted displacement has norm at most 1.
    pub labels: Option<Vec<bool>>,
    /// Dataset id each query was planted around.
    pub sources: Option<Vec<usize>>,
}

impl QuerySet {
    pub fn unlabeled(points: Dataset) -> Self {
        Self { points, labels: None, sources: None }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
