//! Discrete-event simulation of PU/SU traffic under three SU policies.
//!
//! All holding and inter-arrival times are exponential, so the next event is
//! drawn from the competing rates of the current state and every pending
//! clock is implicitly resampled at each state change. Under FSU this makes
//! the simulated `(n_p, n_s)` process identical in law to the analytical
//! chain, while individual SUs are still tracked so that departing and
//! force-terminated sessions can be picked uniformly at random.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::kpi::{compute_kpis, KpiReport};
use crate::model::{admit_su, pu_arrival_outcome, ServiceModel, SystemConfig, SystemState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SimPolicy {
    /// Full spectrum utilization with virtual reservation `r`.
    FsuVirtualReservation,
    /// Cooperative repacking and reservation, but each SU holds exactly
    /// `C_min` channels.
    MinAllocCooperative,
    /// Each SU grabs `C_min` idle channels on its own, without reservation;
    /// on PU arrival, displaced SUs try a sensing-based handoff to other idle
    /// channels and are terminated if none are left.
    NonCooperative,
}

impl SimPolicy {
    pub fn name(self) -> &'static str {
        match self {
            SimPolicy::FsuVirtualReservation => "fsu",
            SimPolicy::MinAllocCooperative => "min_alloc",
            SimPolicy::NonCooperative => "nc",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "fsu" => Some(SimPolicy::FsuVirtualReservation),
            "min_alloc" => Some(SimPolicy::MinAllocCooperative),
            "nc" => Some(SimPolicy::NonCooperative),
            _ => None,
        }
    }

    fn check(self, cfg: &SystemConfig) -> Result<()> {
        if self == SimPolicy::NonCooperative && cfg.reserved() != 0 {
            return Err(Error::InvalidSimulation(format!(
                "the non-cooperative policy has no reservation, but r = {}",
                cfg.reserved()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSettings {
    /// Simulated time per replication.
    pub horizon: f64,
    pub replications: usize,
    pub seed: u64,
}

impl SimSettings {
    fn check(&self) -> Result<()> {
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::InvalidSimulation(format!(
                "horizon must be positive (got {})",
                self.horizon
            )));
        }
        if self.replications == 0 {
            return Err(Error::InvalidSimulation(
                "at least one replication is required".into(),
            ));
        }
        Ok(())
    }
}

/// What happened at one simulation step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimEvent {
    PuArrival {
        dropped: usize,
    },
    /// PU arrival while every band is held by a PU.
    PuLost,
    SuAdmitted,
    SuBlocked,
    PuDeparture,
    SuDeparture,
}

/// Raw counters and time integrals of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationStats {
    pub su_arrivals: u64,
    pub admissions: u64,
    pub blocks: u64,
    pub ft_events: u64,
    pub pu_arrivals: u64,
    pub pu_lost: u64,
    pub time: f64,
    /// `∫ (channels held by SUs)/n_s dt` over periods with `n_s ≥ 1`.
    pub reward_integral: f64,
    /// Time with at least one active SU.
    pub occupied_time: f64,
    /// Time spent in each `(n_p, n_s)`.
    pub occupancy: Vec<(SystemState, f64)>,
}

impl ReplicationStats {
    pub fn p_block(&self) -> Option<f64> {
        (self.su_arrivals > 0).then(|| self.blocks as f64 / self.su_arrivals as f64)
    }

    pub fn p_ft(&self) -> f64 {
        if self.admissions > 0 {
            self.ft_events as f64 / self.admissions as f64
        } else {
            0.0
        }
    }

    pub fn c_avg(&self) -> f64 {
        self.reward_integral / self.time
    }

    pub fn c_avg_conditional(&self) -> f64 {
        if self.occupied_time > 0.0 {
            self.reward_integral / self.occupied_time
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone)]
struct Cooperative {
    service: ServiceModel,
    n_p: usize,
    /// Ids of active SUs.
    active: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Idle,
    Pu,
    Su(u64),
}

#[derive(Debug, Clone)]
struct NcSession {
    id: u64,
    channels: Vec<usize>,
}

#[derive(Debug, Clone)]
struct NonCooperative {
    slots: Vec<Slot>,
    pu_bands: Vec<bool>,
    active: Vec<NcSession>,
}

#[derive(Debug, Clone)]
enum Engine {
    Cooperative(Cooperative),
    NonCooperative(NonCooperative),
}

/// One independent simulation run, advanced event by event.
#[derive(Debug, Clone)]
pub struct Replication {
    cfg: SystemConfig,
    rng: ChaCha8Rng,
    horizon: f64,
    now: f64,
    next_id: u64,
    engine: Engine,
    stats: ReplicationStats,
    occupancy: Vec<f64>,
    su_stride: usize,
}

impl Replication {
    /// Replication `stream` of the master `seed`. Streams are independent
    /// ChaCha substreams, so replications can run in any order.
    pub fn new(
        cfg: &SystemConfig,
        policy: SimPolicy,
        horizon: f64,
        seed: u64,
        stream: u64,
    ) -> Result<Self> {
        policy.check(cfg)?;
        SimSettings {
            horizon,
            replications: 1,
            seed,
        }
        .check()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let engine = match policy {
            SimPolicy::FsuVirtualReservation => Engine::Cooperative(Cooperative {
                service: ServiceModel::FullSpectrum,
                n_p: 0,
                active: Vec::new(),
            }),
            SimPolicy::MinAllocCooperative => Engine::Cooperative(Cooperative {
                service: ServiceModel::MinimumAllocation,
                n_p: 0,
                active: Vec::new(),
            }),
            SimPolicy::NonCooperative => Engine::NonCooperative(NonCooperative {
                slots: vec![Slot::Idle; cfg.total_channels()],
                pu_bands: vec![false; cfg.bands()],
                active: Vec::new(),
            }),
        };
        let su_stride = cfg.total_channels() / cfg.c_min() + 1;
        Ok(Self {
            cfg: *cfg,
            rng,
            horizon,
            now: 0.0,
            next_id: 0,
            engine,
            stats: ReplicationStats {
                su_arrivals: 0,
                admissions: 0,
                blocks: 0,
                ft_events: 0,
                pu_arrivals: 0,
                pu_lost: 0,
                time: 0.0,
                reward_integral: 0.0,
                occupied_time: 0.0,
                occupancy: Vec::new(),
            },
            occupancy: vec![0.0; (cfg.bands() + 1) * su_stride],
            su_stride,
        })
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn state(&self) -> SystemState {
        match &self.engine {
            Engine::Cooperative(c) => SystemState::new(c.n_p, c.active.len()),
            Engine::NonCooperative(nc) => {
                SystemState::new(nc.pu_bands.iter().filter(|b| **b).count(), nc.active.len())
            }
        }
    }

    /// Channels held by PUs.
    pub fn pu_channels(&self) -> usize {
        self.state().n_p * self.cfg.channels_per_band()
    }

    /// Channels (or channel-equivalent share under FSU) held by each active
    /// SU.
    pub fn su_allocations(&self) -> Vec<f64> {
        match &self.engine {
            Engine::Cooperative(c) => {
                let n_s = c.active.len();
                let share = match c.service {
                    ServiceModel::FullSpectrum => {
                        let free = self.cfg.total_channels() - self.pu_channels();
                        free as f64 / n_s as f64
                    }
                    ServiceModel::MinimumAllocation => self.cfg.c_min() as f64,
                };
                vec![share; n_s]
            }
            Engine::NonCooperative(nc) => {
                nc.active.iter().map(|s| s.channels.len() as f64).collect()
            }
        }
    }

    fn su_departure_rate(&self, state: SystemState) -> f64 {
        match &self.engine {
            Engine::Cooperative(c) => c.service.su_departure_rate(&self.cfg, state),
            Engine::NonCooperative(_) => state.n_s as f64 * self.cfg.mu_s(),
        }
    }

    /// Total channels held by SUs, for the throughput reward.
    fn su_channels_total(&self, state: SystemState) -> f64 {
        if state.n_s == 0 {
            return 0.0;
        }
        match &self.engine {
            Engine::Cooperative(c) => match c.service {
                ServiceModel::FullSpectrum => {
                    (self.cfg.total_channels() - self.pu_channels()) as f64
                }
                ServiceModel::MinimumAllocation => (state.n_s * self.cfg.c_min()) as f64,
            },
            Engine::NonCooperative(nc) => {
                nc.active.iter().map(|s| s.channels.len()).sum::<usize>() as f64
            }
        }
    }

    fn accumulate(&mut self, state: SystemState, dt: f64) {
        self.stats.time += dt;
        self.occupancy[state.n_p * self.su_stride + state.n_s] += dt;
        if state.n_s > 0 {
            self.stats.occupied_time += dt;
            self.stats.reward_integral += dt * self.su_channels_total(state) / state.n_s as f64;
        }
    }

    /// Advances to the next event. Returns `None` once the horizon is
    /// reached, after accounting for the remaining time.
    pub fn step(&mut self) -> Option<SimEvent> {
        if self.now >= self.horizon {
            return None;
        }
        let state = self.state();
        let rates = [
            self.cfg.lambda_p(),
            self.cfg.lambda_s(),
            state.n_p as f64 * self.cfg.mu_p(),
            self.su_departure_rate(state),
        ];
        let total: f64 = rates.iter().sum();
        let dt = self.rng.sample::<f64, _>(Exp1) / total;
        if self.now + dt >= self.horizon {
            self.accumulate(state, self.horizon - self.now);
            self.now = self.horizon;
            return None;
        }
        self.accumulate(state, dt);
        self.now += dt;

        let mut u = self.rng.random::<f64>() * total;
        let mut which = rates.len() - 1;
        for (i, r) in rates.iter().enumerate() {
            if u < *r {
                which = i;
                break;
            }
            u -= r;
        }
        let event = match which {
            0 => self.pu_arrival(state),
            1 => self.su_arrival(state),
            2 => self.pu_departure(),
            _ => self.su_departure(),
        };
        Some(event)
    }

    fn pu_arrival(&mut self, state: SystemState) -> SimEvent {
        self.stats.pu_arrivals += 1;
        if state.n_p >= self.cfg.bands() {
            self.stats.pu_lost += 1;
            return SimEvent::PuLost;
        }
        let dropped = match &mut self.engine {
            Engine::Cooperative(c) => {
                let (next, dropped) =
                    pu_arrival_outcome(&self.cfg, state).expect("n_p < M checked above");
                for _ in 0..dropped {
                    let victim = self.rng.random_range(0..c.active.len());
                    c.active.swap_remove(victim);
                }
                c.n_p = next.n_p;
                dropped
            }
            Engine::NonCooperative(nc) => nc.pu_arrival(&self.cfg, &mut self.rng),
        };
        self.stats.ft_events += dropped as u64;
        SimEvent::PuArrival { dropped }
    }

    fn su_arrival(&mut self, state: SystemState) -> SimEvent {
        self.stats.su_arrivals += 1;
        let id = self.next_id;
        let admitted = match &mut self.engine {
            Engine::Cooperative(c) => {
                let ok = admit_su(&self.cfg, state);
                if ok {
                    c.active.push(id);
                }
                ok
            }
            Engine::NonCooperative(nc) => nc.admit(&self.cfg, id, &mut self.rng),
        };
        if admitted {
            self.next_id += 1;
            self.stats.admissions += 1;
            SimEvent::SuAdmitted
        } else {
            self.stats.blocks += 1;
            SimEvent::SuBlocked
        }
    }

    fn pu_departure(&mut self) -> SimEvent {
        match &mut self.engine {
            Engine::Cooperative(c) => c.n_p -= 1,
            Engine::NonCooperative(nc) => nc.pu_departure(&self.cfg, &mut self.rng),
        }
        SimEvent::PuDeparture
    }

    fn su_departure(&mut self) -> SimEvent {
        match &mut self.engine {
            Engine::Cooperative(c) => {
                let i = self.rng.random_range(0..c.active.len());
                c.active.swap_remove(i);
            }
            Engine::NonCooperative(nc) => {
                let i = self.rng.random_range(0..nc.active.len());
                let s = nc.active.swap_remove(i);
                nc.release(&s);
            }
        }
        SimEvent::SuDeparture
    }

    /// Runs to the horizon and returns the collected statistics.
    pub fn run(mut self) -> ReplicationStats {
        while self.step().is_some() {}
        self.finish()
    }

    pub fn finish(mut self) -> ReplicationStats {
        let stride = self.su_stride;
        self.stats.occupancy = self
            .occupancy
            .iter()
            .enumerate()
            .filter(|(_, t)| **t > 0.0)
            .map(|(i, t)| (SystemState::new(i / stride, i % stride), *t))
            .collect();
        self.stats
    }
}

impl NonCooperative {
    fn idle_channels(&self) -> Vec<usize> {
        self.slots
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Slot::Idle)
            .map(|(i, _)| i)
            .collect()
    }

    /// Picks `count` idle channels uniformly at random, if that many exist.
    fn grab(&mut self, count: usize, owner: u64, rng: &mut ChaCha8Rng) -> Option<Vec<usize>> {
        let idle = self.idle_channels();
        if idle.len() < count {
            return None;
        }
        let picked: Vec<usize> = sample(rng, idle.len(), count)
            .into_iter()
            .map(|k| idle[k])
            .collect();
        for &ch in &picked {
            self.slots[ch] = Slot::Su(owner);
        }
        Some(picked)
    }

    fn release(&mut self, session: &NcSession) {
        for &ch in &session.channels {
            self.slots[ch] = Slot::Idle;
        }
    }

    fn admit(&mut self, cfg: &SystemConfig, id: u64, rng: &mut ChaCha8Rng) -> bool {
        match self.grab(cfg.c_min(), id, rng) {
            Some(channels) => {
                self.active.push(NcSession { id, channels });
                true
            }
            None => false,
        }
    }

    /// PU takes a uniformly chosen free band; displaced SUs, in random
    /// order, try to replace the channels they lost. Returns the number of
    /// terminated SUs.
    fn pu_arrival(&mut self, cfg: &SystemConfig, rng: &mut ChaCha8Rng) -> usize {
        let n = cfg.channels_per_band();
        let free_bands: Vec<usize> = (0..cfg.bands()).filter(|b| !self.pu_bands[*b]).collect();
        let band = free_bands[rng.random_range(0..free_bands.len())];
        self.pu_bands[band] = true;
        let range = band * n..(band + 1) * n;
        for ch in range.clone() {
            self.slots[ch] = Slot::Pu;
        }
        let mut displaced = Vec::new();
        for (i, s) in self.active.iter_mut().enumerate() {
            let before = s.channels.len();
            s.channels.retain(|ch| !range.contains(ch));
            let lost = before - s.channels.len();
            if lost > 0 {
                displaced.push((i, lost));
            }
        }
        // Shuffle the handoff order.
        let order: Vec<usize> = sample(rng, displaced.len(), displaced.len()).into_vec();
        let mut terminated = Vec::new();
        for k in order {
            let (i, lost) = displaced[k];
            let id = self.active[i].id;
            match self.grab(lost, id, rng) {
                Some(extra) => self.active[i].channels.extend(extra),
                None => {
                    let s = self.active[i].clone();
                    self.release(&s);
                    terminated.push(i);
                }
            }
        }
        terminated.sort_unstable_by(|a, b| b.cmp(a));
        for i in &terminated {
            self.active.swap_remove(*i);
        }
        terminated.len()
    }

    fn pu_departure(&mut self, cfg: &SystemConfig, rng: &mut ChaCha8Rng) {
        let held: Vec<usize> = (0..cfg.bands()).filter(|b| self.pu_bands[*b]).collect();
        let band = held[rng.random_range(0..held.len())];
        self.pu_bands[band] = false;
        let n = cfg.channels_per_band();
        for ch in band * n..(band + 1) * n {
            self.slots[ch] = Slot::Idle;
        }
    }
}

/// Replication mean with a 95% Student-t half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Infinite for a single replication.
    pub half_width: f64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return Self {
                mean,
                half_width: f64::INFINITY,
            };
        }
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("dof ≥ 1")
            .inverse_cdf(0.975);
        Self {
            mean,
            half_width: t * (var / n as f64).sqrt(),
        }
    }

    pub fn covers(&self, value: f64) -> bool {
        (self.mean - value).abs() <= self.half_width
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimKpiReport {
    pub policy: SimPolicy,
    pub config: SystemConfig,
    pub settings: SimSettings,
    /// `None` when no SU arrived in any replication.
    pub p_block: Option<Estimate>,
    pub p_ft: Estimate,
    pub c_avg: Estimate,
    pub c_avg_conditional: Estimate,
    pub su_arrivals: u64,
    pub admissions: u64,
    pub blocks: u64,
    pub ft_events: u64,
    pub simulated_time: f64,
    /// Pooled fraction of time in each state, sorted by state.
    pub occupancy: Vec<(SystemState, f64)>,
    pub replications: Vec<ReplicationStats>,
}

/// Runs `settings.replications` independent replications (in parallel) and
/// aggregates them.
pub fn simulate(
    cfg: &SystemConfig,
    policy: SimPolicy,
    settings: SimSettings,
) -> Result<SimKpiReport> {
    settings.check()?;
    policy.check(cfg)?;
    let reps = (0..settings.replications as u64)
        .into_par_iter()
        .map(|k| {
            Replication::new(cfg, policy, settings.horizon, settings.seed, k).map(Replication::run)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(cfg, policy, settings, reps))
}

fn aggregate(
    cfg: &SystemConfig,
    policy: SimPolicy,
    settings: SimSettings,
    reps: Vec<ReplicationStats>,
) -> SimKpiReport {
    let block_samples: Vec<f64> = reps.iter().filter_map(ReplicationStats::p_block).collect();
    let collect = |f: fn(&ReplicationStats) -> f64| reps.iter().map(f).collect::<Vec<_>>();
    let total_time: f64 = reps.iter().map(|r| r.time).sum();
    let mut pooled = std::collections::BTreeMap::new();
    for r in &reps {
        for (s, t) in &r.occupancy {
            *pooled.entry(*s).or_insert(0.0) += t;
        }
    }
    SimKpiReport {
        policy,
        config: *cfg,
        settings,
        p_block: (!block_samples.is_empty()).then(|| Estimate::from_samples(&block_samples)),
        p_ft: Estimate::from_samples(&collect(ReplicationStats::p_ft)),
        c_avg: Estimate::from_samples(&collect(ReplicationStats::c_avg)),
        c_avg_conditional: Estimate::from_samples(&collect(ReplicationStats::c_avg_conditional)),
        su_arrivals: reps.iter().map(|r| r.su_arrivals).sum(),
        admissions: reps.iter().map(|r| r.admissions).sum(),
        blocks: reps.iter().map(|r| r.blocks).sum(),
        ft_events: reps.iter().map(|r| r.ft_events).sum(),
        simulated_time: total_time,
        occupancy: pooled
            .into_iter()
            .map(|(s, t)| (s, t / total_time))
            .collect(),
        replications: reps,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KpiCheck {
    pub kpi: &'static str,
    pub analytical: f64,
    pub simulated: f64,
    pub half_width: f64,
    pub abs_gap: f64,
    /// `abs_gap / |analytical|`; infinite when the analytical value is 0
    /// and the gap is not.
    pub rel_gap: f64,
    pub covered: bool,
}

impl KpiCheck {
    fn new(kpi: &'static str, analytical: f64, est: Option<Estimate>) -> Self {
        let Estimate { mean, half_width } = est.unwrap_or(Estimate {
            mean: f64::NAN,
            half_width: f64::NAN,
        });
        let abs_gap = (mean - analytical).abs();
        let rel_gap = if analytical != 0.0 {
            abs_gap / analytical.abs()
        } else if abs_gap == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        Self {
            kpi,
            analytical,
            simulated: mean,
            half_width,
            abs_gap,
            rel_gap,
            covered: abs_gap <= half_width,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub analytical: KpiReport,
    pub simulated: SimKpiReport,
    pub checks: Vec<KpiCheck>,
}

impl ValidationReport {
    /// Every KPI's confidence interval covers the analytical value.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.covered)
    }
}

/// Analytical KPIs against an FSU simulation of the same configuration.
pub fn validate(cfg: &SystemConfig, settings: SimSettings) -> Result<ValidationReport> {
    validate_pair(cfg, cfg, settings)
}

/// Analytical KPIs of `analytical_cfg` against a simulation of
/// `simulated_cfg`. With different configurations this is a negative
/// control: coverage should fail.
pub fn validate_pair(
    analytical_cfg: &SystemConfig,
    simulated_cfg: &SystemConfig,
    settings: SimSettings,
) -> Result<ValidationReport> {
    if settings.replications < 2 {
        return Err(Error::InvalidSimulation(
            "validation needs at least two replications for a confidence interval".into(),
        ));
    }
    let analytical = compute_kpis(analytical_cfg)?;
    let simulated = simulate(simulated_cfg, SimPolicy::FsuVirtualReservation, settings)?;
    let checks = vec![
        KpiCheck::new("p_block", analytical.p_block, simulated.p_block),
        KpiCheck::new("p_ft", analytical.p_ft, Some(simulated.p_ft)),
        KpiCheck::new("c_avg", analytical.c_avg, Some(simulated.c_avg)),
    ];
    Ok(ValidationReport {
        analytical,
        simulated,
        checks,
    })
}
