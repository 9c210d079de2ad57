//! Least-squares fits of timing against core-set size, and the total
//! construction time extrapolation built from them.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use super::EvalError;

pub const DEFAULT_REPLACE_FRACTION: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    /// `[1, k]`
    Linear,
    /// `[1, k, k²]`
    Quadratic,
}

impl Basis {
    pub fn coefficient_count(self) -> usize {
        match self {
            Basis::Linear => 2,
            Basis::Quadratic => 3,
        }
    }

    fn row(self, x: f64) -> impl Iterator<Item = f64> {
        (0..self.coefficient_count()).map(move |p| x.powi(p as i32))
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::Linear => "linear",
            Basis::Quadratic => "quadratic",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub basis: Basis,
    /// Ascending powers of k.
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
}

impl RegressionFit {
    pub fn predict(&self, k: f64) -> f64 {
        self.basis.row(k).zip(&self.coefficients).map(|(x, c)| x * c).sum()
    }
}

/// Ordinary least squares of `y` on the chosen basis of `x`, solved by SVD.
pub fn fit(points: &[(f64, f64)], basis: Basis) -> Result<RegressionFit, EvalError> {
    let p = basis.coefficient_count();
    let mut xs: Vec<f64> = points.iter().map(|&(x, _)| x).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < p {
        return Err(EvalError::SingularDesign { distinct: xs.len(), required: p });
    }
    let n = points.len();
    let design = DMatrix::from_row_iterator(n, p, points.iter().flat_map(|&(x, _)| basis.row(x)));
    let y = DVector::from_iterator(n, points.iter().map(|&(_, y)| y));
    let beta = design
        .clone()
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|_| EvalError::SingularDesign { distinct: xs.len(), required: p })?;

    let residual = &y - &design * &beta;
    let ss_res = residual.norm_squared();
    let mean = y.mean();
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res <= f64::EPSILON * y.norm_squared().max(1.0) {
        1.0
    } else {
        0.0
    };
    Ok(RegressionFit { basis, coefficients: beta.iter().copied().collect(), r_squared })
}

/// Higher R² wins; ties favour the simpler basis.
pub fn better_fit<'a>(a: Option<&'a RegressionFit>, b: Option<&'a RegressionFit>) -> Option<&'a RegressionFit> {
    match (a, b) {
        (Some(a), Some(b)) => {
            let simpler_first = if a.basis.coefficient_count() <= b.basis.coefficient_count() { (a, b) } else { (b, a) };
            Some(if simpler_first.1.r_squared > simpler_first.0.r_squared { simpler_first.1 } else { simpler_first.0 })
        }
        (a, b) => a.or(b),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolation {
    pub total_seconds: f64,
    /// A fit predicted a negative time and was clamped to zero.
    pub clamped: bool,
}

/// `build(k) + fraction · (N − k) · replace(k)`.
pub fn extrapolate_total(
    k: usize,
    elements_per_stream: usize,
    build_fit: &RegressionFit,
    replace_fit: &RegressionFit,
    replace_fraction: f64,
) -> Result<Extrapolation, EvalError> {
    if !(0.0..=1.0).contains(&replace_fraction) {
        return Err(EvalError::InvalidFraction(replace_fraction));
    }
    let kf = k as f64;
    let mut clamped = false;
    let mut clamp = |v: f64, what: &str| {
        if v < 0.0 {
            log::warn!("{what} fit predicts {v:.3e}s at k = {k}; clamping to 0");
            clamped = true;
            0.0
        } else {
            v
        }
    };
    let build = clamp(build_fit.predict(kf), "build");
    let replace = clamp(replace_fit.predict(kf), "replacement");
    let arrivals = elements_per_stream.saturating_sub(k) as f64;
    Ok(Extrapolation { total_seconds: build + replace_fraction * arrivals * replace, clamped })
}
