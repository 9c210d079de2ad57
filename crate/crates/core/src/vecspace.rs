//! Embedding vectors and the cosine metric that weights every edge.
//!
//! All edge weights in this crate are cosine *distances* (`1 - similarity`),
//! so "smallest edge" always means "least diverse pair".

use std::cell::Cell;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VectorError {
    #[error("vector must have at least one component")]
    Empty,
    #[error("component {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("vector has zero norm")]
    ZeroNorm,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("non-finite result from metric")]
    NonFiniteResult,
}

/// A validated embedding: nonempty, finite, nonzero norm.
///
/// The Euclidean norm is computed once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    components: Vec<f64>,
    norm: f64,
}

impl Vector {
    pub fn new(components: Vec<f64>) -> Result<Self, VectorError> {
        if components.is_empty() {
            return Err(VectorError::Empty);
        }
        if let Some((index, &value)) = components.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(VectorError::NonFinite { index, value });
        }
        let norm = components.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(VectorError::NonFiniteResult);
        }
        if norm == 0.0 {
            return Err(VectorError::ZeroNorm);
        }
        Ok(Self { components, norm })
    }

    /// Widens single-precision storage to `f64`.
    pub fn from_f32(components: &[f32]) -> Result<Self, VectorError> {
        Self::new(components.iter().map(|&c| c as f64).collect())
    }

    /// Unit vector at `degrees` in the plane.
    pub fn from_angle_degrees(degrees: f64) -> Self {
        let r = degrees.to_radians();
        Self::new(vec![r.cos(), r.sin()]).expect("unit circle vectors are valid")
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }
}

impl AsRef<Vector> for Vector {
    fn as_ref(&self) -> &Vector {
        self
    }
}

fn check_dims(u: &Vector, v: &Vector) -> Result<(), VectorError> {
    if u.dim() != v.dim() {
        return Err(VectorError::DimensionMismatch { left: u.dim(), right: v.dim() });
    }
    Ok(())
}

/// `(u·v) / (‖u‖‖v‖)`, clamped to `[-1, 1]`.
pub fn cosine_similarity(u: &Vector, v: &Vector) -> Result<f64, VectorError> {
    check_dims(u, v)?;
    // Multiplication is commutative in IEEE-754, so swapping the arguments
    // yields bit-identical results.
    let dot: f64 = u.components.iter().zip(&v.components).map(|(a, b)| a * b).sum();
    let sim = dot / (u.norm * v.norm);
    if !sim.is_finite() {
        return Err(VectorError::NonFiniteResult);
    }
    Ok(sim.clamp(-1.0, 1.0))
}

/// `1 - cosine_similarity(u, v)`, always in `[0, 2]`.
pub fn cosine_distance(u: &Vector, v: &Vector) -> Result<f64, VectorError> {
    Ok(1.0 - cosine_similarity(u, v)?)
}

/// A pairwise distance over vectors.
///
/// The engine and matrix are generic over this so tests can count metric
/// evaluations.
pub trait Metric {
    fn distance(&self, u: &Vector, v: &Vector) -> Result<f64, VectorError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Cosine;

impl Metric for Cosine {
    #[inline]
    fn distance(&self, u: &Vector, v: &Vector) -> Result<f64, VectorError> {
        cosine_distance(u, v)
    }
}

/// Wraps a metric and counts how many times it was evaluated.
#[derive(Debug, Default)]
pub struct CountingMetric<M = Cosine> {
    inner: M,
    calls: Cell<u64>,
}

impl<M: Metric> CountingMetric<M> {
    pub fn new(inner: M) -> Self {
        Self { inner, calls: Cell::new(0) }
    }

    pub fn calls(&self) -> u64 {
        self.calls.get()
    }

    pub fn reset(&self) {
        self.calls.set(0);
    }
}

impl<M: Metric> Metric for CountingMetric<M> {
    fn distance(&self, u: &Vector, v: &Vector) -> Result<f64, VectorError> {
        self.calls.set(self.calls.get() + 1);
        self.inner.distance(u, v)
    }
}
