//! Stationary distribution of a finite irreducible CTMC by state reduction
//! (Grassmann–Taksar–Heyman). The elimination only adds and multiplies
//! nonnegative off-diagonal rates, so it stays accurate for rate ratios
//! spanning many orders of magnitude.

use crate::error::{Error, Result};
use crate::model::GeneratorMatrix;

/// Lower bound below which a computed probability is treated as evidence of a
/// malformed generator rather than rounding noise.
const NEGATIVE_TOLERANCE: f64 = -1e-14;

/// Balance residual accepted by [`StationaryDistribution::check`].
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    probabilities: Vec<f64>,
}

impl StationaryDistribution {
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probabilities[i]
    }

    /// Wraps an arbitrary vector, e.g. to measure the residual of a
    /// candidate. No normalization is applied.
    pub fn from_vec(probabilities: Vec<f64>) -> Self {
        Self { probabilities }
    }

    /// Returns `‖πQ‖∞` and fails if it exceeds [`RESIDUAL_TOLERANCE`].
    pub fn check(&self, generator: &GeneratorMatrix) -> Result<f64> {
        let res = residual(generator, self)?;
        if res < RESIDUAL_TOLERANCE {
            Ok(res)
        } else {
            Err(Error::MalformedGenerator(format!(
                "balance residual {res:e} exceeds {RESIDUAL_TOLERANCE:e}"
            )))
        }
    }
}

/// Solves `πQ = 0, Σπ = 1` by GTH elimination.
pub fn solve_stationary(generator: &GeneratorMatrix) -> Result<StationaryDistribution> {
    let n = generator.dim();
    if n == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            actual: 0,
        });
    }
    let mut a: Vec<f64> = (0..n)
        .flat_map(|i| generator.row(i).iter().copied())
        .collect();
    for i in 0..n {
        for j in 0..n {
            let v = a[i * n + j];
            if i != j && !(v >= 0.0 && v.is_finite()) {
                return Err(Error::MalformedGenerator(format!(
                    "off-diagonal entry ({i},{j}) = {v}"
                )));
            }
        }
    }

    // Fold state k into states 0..k. After the step, a[k][j] for j<k holds
    // the rate from k into j and `scale[k]` its total, which the back
    // substitution divides by.
    let mut scale = vec![0.0; n];
    for k in (1..n).rev() {
        let s: f64 = a[k * n..k * n + k].iter().sum();
        if s <= 0.0 {
            return Err(Error::MalformedGenerator(format!(
                "chain is reducible: state {k} cannot reach lower-indexed states"
            )));
        }
        scale[k] = s;
        for i in 0..k {
            let f = a[i * n + k] / s;
            if f == 0.0 {
                continue;
            }
            for j in 0..k {
                if j != i {
                    a[i * n + j] += f * a[k * n + j];
                }
            }
        }
    }

    let mut pi = vec![0.0; n];
    pi[0] = 1.0;
    for k in 1..n {
        let inflow: f64 = (0..k).map(|i| pi[i] * a[i * n + k]).sum();
        pi[k] = inflow / scale[k];
    }
    let total: f64 = pi.iter().sum();
    for p in &mut pi {
        *p /= total;
    }
    if let Some((i, p)) = pi
        .iter()
        .enumerate()
        .find(|(_, p)| p.is_nan() || **p < NEGATIVE_TOLERANCE)
    {
        return Err(Error::MalformedGenerator(format!(
            "probability of state {i} is {p}"
        )));
    }
    Ok(StationaryDistribution { probabilities: pi })
}

/// `‖πQ‖∞`
pub fn residual(generator: &GeneratorMatrix, pi: &StationaryDistribution) -> Result<f64> {
    let n = generator.dim();
    if pi.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: pi.len(),
        });
    }
    let mut flow = vec![0.0; n];
    for (i, p) in pi.probabilities.iter().enumerate() {
        for (f, q) in flow.iter_mut().zip(generator.row(i)) {
            *f += p * q;
        }
    }
    Ok(flow.iter().fold(0.0, |m, v| m.max(v.abs())))
}
