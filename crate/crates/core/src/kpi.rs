//! Blocking, forced-termination and per-SU throughput from the stationary
//! distribution.

use crate::error::{Error, Result};
use crate::model::{
    admit_su, build_generator, enumerate_states, pu_arrival_outcome, StateSpace, SystemConfig,
};
use crate::stationary::{solve_stationary, StationaryDistribution};

#[derive(Debug, Clone, PartialEq)]
pub struct KpiReport {
    pub config: SystemConfig,
    /// Number of reachable states.
    pub states: usize,
    /// `‖πQ‖∞` of the solve.
    pub residual: f64,
    pub p_block: f64,
    pub p_ft: f64,
    /// Reward-weighted sum over SU-occupied states, not conditioned on an
    /// SU being present.
    pub c_avg: f64,
    /// Probability that at least one SU is active.
    pub p_occupied: f64,
}

impl KpiReport {
    /// Mean channels per SU given that at least one SU is active:
    /// `c_avg / P(n_s ≥ 1)`.
    pub fn c_avg_conditional(&self) -> f64 {
        if self.p_occupied > 0.0 {
            self.c_avg / self.p_occupied
        } else {
            0.0
        }
    }
}

/// Probability that an arriving SU is rejected (PASTA): the mass of states
/// where `N·n_p + C_min·(n_s+1) + r > C`.
pub fn blocking_probability(
    cfg: &SystemConfig,
    space: &StateSpace,
    pi: &StationaryDistribution,
) -> f64 {
    space
        .iter()
        .filter(|(_, s)| !admit_su(cfg, *s))
        .map(|(i, _)| pi.get(i))
        .sum()
}

/// Forced-termination rate over admission rate:
/// `Σ U_d·λp·π / ((1 − P_B)·λs)`.
pub fn forced_termination_probability(
    cfg: &SystemConfig,
    space: &StateSpace,
    pi: &StationaryDistribution,
    p_block: f64,
) -> Result<f64> {
    let admitted = (1.0 - p_block) * cfg.lambda_s();
    if admitted <= 0.0 {
        return Err(Error::NoAdmissions);
    }
    Ok(forced_termination_rate(cfg, space, pi) / admitted)
}

/// Expected number of SUs force-terminated per unit time.
pub fn forced_termination_rate(
    cfg: &SystemConfig,
    space: &StateSpace,
    pi: &StationaryDistribution,
) -> f64 {
    space
        .iter()
        .filter_map(|(i, s)| {
            let (_, dropped) = pu_arrival_outcome(cfg, s).ok()?;
            (dropped > 0).then(|| dropped as f64 * cfg.lambda_p() * pi.get(i))
        })
        .sum()
}

/// Per-state reward: channels held by each SU, `N·(M − n_p)/n_s`.
pub fn channels_per_su(cfg: &SystemConfig, n_p: usize, n_s: usize) -> f64 {
    debug_assert!(n_s >= 1);
    (cfg.channels_per_band() * (cfg.bands() - n_p)) as f64 / n_s as f64
}

/// Markov-reward throughput `Σ_{n_s≥1} N(M−n_p)/n_s · π(n_p, n_s)`.
pub fn average_throughput(
    cfg: &SystemConfig,
    space: &StateSpace,
    pi: &StationaryDistribution,
) -> f64 {
    space
        .iter()
        .filter(|(_, s)| s.n_s >= 1)
        .map(|(i, s)| channels_per_su(cfg, s.n_p, s.n_s) * pi.get(i))
        .sum()
}

fn occupied_probability(space: &StateSpace, pi: &StationaryDistribution) -> f64 {
    space
        .iter()
        .filter(|(_, s)| s.n_s >= 1)
        .map(|(i, _)| pi.get(i))
        .sum()
}

/// Enumerate, assemble, solve and evaluate all three KPIs.
pub fn compute_kpis(cfg: &SystemConfig) -> Result<KpiReport> {
    let space = enumerate_states(cfg);
    let q = build_generator(cfg, &space)?;
    let pi = solve_stationary(&q)?;
    let residual = pi.check(&q)?;
    let p_block = blocking_probability(cfg, &space, &pi);
    let p_ft = forced_termination_probability(cfg, &space, &pi, p_block)?;
    Ok(KpiReport {
        config: *cfg,
        states: space.len(),
        residual,
        p_block,
        p_ft,
        c_avg: average_throughput(cfg, &space, &pi),
        p_occupied: occupied_probability(&space, &pi),
    })
}
