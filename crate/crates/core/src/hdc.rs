//! Hypervectors, random-projection encoding and cosine similarity.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand_distr::{Distribution, StandardNormal};

use crate::clustering::ClusterId;
use crate::error::{Error, Result};
use crate::seed;

/// A real-valued vector in the HDC space.
///
/// The length is fixed at construction. Values built through [`Hypervector::new`]
/// are checked to be finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypervector(Vec<f64>);

impl Hypervector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("hypervector"));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Hypervector(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Hypervector(vec![0.0; dim])
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        Hypervector(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    /// Unit-length copy. The zero vector stays zero.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        Hypervector(self.0.iter().map(|v| v / n).collect())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Hypervector(self.0.iter().map(|v| v * factor).collect())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Cosine of two slices given their precomputed norms. Zero norms give 0.
pub(crate) fn cosine_with_norms(a: &[f64], na: f64, b: &[f64], nb: f64) -> f64 {
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot(a, b) / (na * nb)).clamp(-1.0, 1.0)
}

/// `a·b / (‖a‖‖b‖)`, or 0 when either side is the zero vector.
pub fn cosine_similarity(a: &Hypervector, b: &Hypervector) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(cosine_with_norms(&a.0, a.norm(), &b.0, b.norm()))
}

/// Seeded `F×D` projection with i.i.d. standard normal entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    seed: Option<u64>,
    input_dim: usize,
    output_dim: usize,
    // row-major, one row of length output_dim per input feature
    entries: Vec<f64>,
}

impl ProjectionMatrix {
    /// Builds the matrix for `(seed, input_dim, output_dim)`. The same triple
    /// always produces bit-identical entries.
    pub fn new(seed: u64, input_dim: usize, output_dim: usize) -> Result<Self> {
        check_dims(input_dim, output_dim)?;
        let mut rng = seed::rng(seed, seed::stream::PROJECTION);
        let entries = (0..input_dim * output_dim)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        Ok(ProjectionMatrix { seed: Some(seed), input_dim, output_dim, entries })
    }

    /// Wraps explicit row-major entries.
    pub fn from_entries(input_dim: usize, output_dim: usize, entries: Vec<f64>) -> Result<Self> {
        check_dims(input_dim, output_dim)?;
        if entries.len() != input_dim * output_dim {
            return Err(Error::DimensionMismatch {
                expected: input_dim * output_dim,
                found: entries.len(),
            });
        }
        if let Some(pos) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(ProjectionMatrix { seed: None, input_dim, output_dim, entries })
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn encode(&self, features: &[f64]) -> Result<Hypervector> {
        if features.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                found: features.len(),
            });
        }
        let mut out = vec![0.0; self.output_dim];
        for (x, row) in features.iter().zip(self.entries.chunks_exact(self.output_dim)) {
            if *x == 0.0 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(row) {
                *o += x * p;
            }
        }
        Ok(Hypervector(out))
    }
}

fn check_dims(input_dim: usize, output_dim: usize) -> Result<()> {
    if input_dim == 0 {
        return Err(Error::invalid("input_dim", "must be at least 1"));
    }
    if output_dim == 0 {
        return Err(Error::invalid("output_dim", "must be at least 1"));
    }
    Ok(())
}

/// Row-vector product `features · proj`.
pub fn encode(features: &[f64], proj: &ProjectionMatrix) -> Result<Hypervector> {
    proj.encode(features)
}

/// Id of the centroid most cosine-similar to `h`; equal similarities resolve
/// to the lowest id.
pub fn nearest_centroid<'a, I>(h: &Hypervector, centroids: I) -> Result<ClusterId>
where
    I: IntoIterator<Item = (ClusterId, &'a Hypervector)>,
{
    let hn = h.norm();
    let mut best: Option<(ClusterId, f64)> = None;
    for (id, c) in centroids {
        if c.dim() != h.dim() {
            return Err(Error::DimensionMismatch { expected: h.dim(), found: c.dim() });
        }
        let sim = cosine_with_norms(&h.0, hn, &c.0, c.norm());
        best = match best {
            None => Some((id, sim)),
            Some((bid, bsim)) => match sim.partial_cmp(&bsim) {
                Some(Ordering::Greater) => Some((id, sim)),
                Some(Ordering::Equal) if id < bid => Some((id, sim)),
                _ => Some((bid, bsim)),
            },
        };
    }
    best.map(|(id, _)| id).ok_or(Error::Empty("centroid set"))
}
