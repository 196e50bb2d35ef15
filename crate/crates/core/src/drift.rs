//! Embedded-chain drift of the FSU chain against the minimum-allocation
//! cooperative baseline.
//!
//! The drift of a state is the normalized balance of its outgoing rates:
//! `(a_r + a_u − a_l − a_*) / (a_r + a_u + a_l + a_*)`, with `a_r` PU
//! arrivals, `a_u` SU arrivals, `a_l` PU departures and `a_*` SU departures.
//! Negative values pull the chain away from the blocking and
//! forced-termination border.

use crate::error::{Error, Result};
use crate::model::{
    build_generator_with, enumerate_states, transition_rates_with, GeneratorMatrix, ServiceModel,
    SystemConfig, SystemState, Transition, TransitionKind,
};
use crate::stationary::solve_stationary;

/// Jump probabilities of the embedded discrete-time chain.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedChain {
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddedChain {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// `p_ij = q_ij / Σ_{k≠i} q_ik`
pub fn embedded_chain(generator: &GeneratorMatrix) -> Result<EmbeddedChain> {
    let dim = generator.dim();
    let mut data = vec![0.0; dim * dim];
    for i in 0..dim {
        let exit: f64 = generator
            .row(i)
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, q)| q)
            .sum();
        if exit <= 0.0 {
            return Err(Error::AbsorbingState(i));
        }
        for j in (0..dim).filter(|&j| j != i) {
            data[i * dim + j] = generator.get(i, j) / exit;
        }
    }
    Ok(EmbeddedChain { dim, data })
}

/// Where the forced-termination edge (right and down) enters the drift.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtConvention {
    /// Counted with the PU arrivals under `a_r`.
    Rightward,
    /// Left out of both numerator and denominator.
    Excluded,
}

/// Drift of one state from its outgoing transitions.
pub fn state_drift(rates: &[Transition], convention: FtConvention) -> f64 {
    let (mut up, mut down) = (0.0, 0.0);
    for t in rates {
        match t.kind {
            TransitionKind::PuArrival | TransitionKind::SuArrival => up += t.rate,
            TransitionKind::ForcedTermination { .. } => {
                if convention == FtConvention::Rightward {
                    up += t.rate;
                }
            }
            TransitionKind::PuDeparture | TransitionKind::SuDeparture => down += t.rate,
        }
    }
    let total = up + down;
    if total > 0.0 {
        (up - down) / total
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    pub model: ServiceModel,
    pub states: Vec<SystemState>,
    /// FT edges counted as rightward.
    pub drift: Vec<f64>,
    /// FT edges excluded.
    pub drift_strict4: Vec<f64>,
    /// Stationary probability of each state under this model.
    pub pi: Vec<f64>,
}

impl DriftReport {
    pub fn mean_drift(&self) -> f64 {
        self.pi.iter().zip(&self.drift).map(|(p, d)| p * d).sum()
    }

    pub fn mean_drift_strict4(&self) -> f64 {
        self.pi
            .iter()
            .zip(&self.drift_strict4)
            .map(|(p, d)| p * d)
            .sum()
    }

    pub fn drift_of(&self, state: SystemState) -> Option<f64> {
        self.states
            .iter()
            .position(|s| *s == state)
            .map(|i| self.drift[i])
    }
}

pub fn drift_report(cfg: &SystemConfig, model: ServiceModel) -> Result<DriftReport> {
    let space = enumerate_states(cfg);
    let q = build_generator_with(cfg, &space, model)?;
    let pi = solve_stationary(&q)?;
    let mut drift = Vec::with_capacity(space.len());
    let mut drift_strict4 = Vec::with_capacity(space.len());
    for &s in space.states() {
        let rates = transition_rates_with(cfg, s, model);
        drift.push(state_drift(&rates, FtConvention::Rightward));
        drift_strict4.push(state_drift(&rates, FtConvention::Excluded));
    }
    Ok(DriftReport {
        model,
        states: space.states().to_vec(),
        drift,
        drift_strict4,
        pi: pi.probabilities().to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftRow {
    pub state: SystemState,
    pub fsu: f64,
    pub baseline: f64,
    pub fsu_strict4: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftComparison {
    pub fsu: DriftReport,
    pub baseline: DriftReport,
    /// States present in both chains, in FSU order.
    pub rows: Vec<DriftRow>,
}

impl DriftComparison {
    /// Both drift functions averaged under the FSU stationary distribution,
    /// as `(fsu, baseline)`. Unlike the per-model means, this compares the
    /// drift functions on the same state weighting.
    pub fn means_under_fsu_pi(&self) -> (f64, f64) {
        self.rows
            .iter()
            .zip(&self.fsu.pi)
            .fold((0.0, 0.0), |(f, b), (row, p)| {
                (f + p * row.fsu, b + p * row.baseline)
            })
    }
}

/// FSU drift side by side with the minimum-allocation baseline, which
/// shares the admission and forced-termination rules but serves each SU at
/// exactly `μs`.
pub fn drift_comparison(cfg: &SystemConfig) -> Result<DriftComparison> {
    let fsu = drift_report(cfg, ServiceModel::FullSpectrum)?;
    let baseline = drift_report(cfg, ServiceModel::MinimumAllocation)?;
    let rows = fsu
        .states
        .iter()
        .enumerate()
        .filter_map(|(i, &state)| {
            Some(DriftRow {
                state,
                fsu: fsu.drift[i],
                baseline: baseline.drift_of(state)?,
                fsu_strict4: fsu.drift_strict4[i],
            })
        })
        .collect();
    Ok(DriftComparison {
        fsu,
        baseline,
        rows,
    })
}
