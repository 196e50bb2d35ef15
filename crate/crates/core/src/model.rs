//! System configuration, admission and forced-termination rules, and the
//! two-dimensional CTMC over `(n_p, n_s)`.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use crate::error::{Error, Result};

/// How the PU service rate is given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PuService {
    /// `μp`, the rate at which a PU releases its band.
    PerBand(f64),
    /// `μ1 = μp / N`.
    PerChannel(f64),
}

/// How the SU service rate is given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SuService {
    /// `μs`, the service rate of an SU holding exactly `C_min` channels.
    AtMinimum(f64),
    /// `μ2 = μs / C_min`.
    PerChannel(f64),
}

/// How the SU offered traffic is given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SuLoad {
    /// `λs`.
    ArrivalRate(f64),
    /// `ρs = λs / μ2`.
    Utilization(f64),
}

/// Unvalidated model parameters, in whichever rate convention the caller
/// has at hand. Integers are signed so that negative inputs can be rejected
/// with a proper message instead of failing to parse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawParams {
    pub bands: i64,
    pub channels_per_band: i64,
    pub c_min: i64,
    pub reserved: i64,
    pub lambda_p: f64,
    pub pu_service: PuService,
    pub su_service: SuService,
    pub su_load: SuLoad,
}

impl RawParams {
    /// Default operating point: M=4, N=5, C_min=2, λp=1.3, μ1=1, μ2=0.75,
    /// ρs=0.6, r=0.
    pub fn operating_point() -> Self {
        Self {
            bands: 4,
            channels_per_band: 5,
            c_min: 2,
            reserved: 0,
            lambda_p: 1.3,
            pu_service: PuService::PerChannel(1.0),
            su_service: SuService::PerChannel(0.75),
            su_load: SuLoad::Utilization(0.6),
        }
    }

    /// Parameters given directly as `λp, μp, λs, μs`.
    #[allow(clippy::too_many_arguments)]
    pub fn direct(
        bands: i64,
        channels_per_band: i64,
        c_min: i64,
        reserved: i64,
        lambda_p: f64,
        mu_p: f64,
        lambda_s: f64,
        mu_s: f64,
    ) -> Self {
        Self {
            bands,
            channels_per_band,
            c_min,
            reserved,
            lambda_p,
            pu_service: PuService::PerBand(mu_p),
            su_service: SuService::AtMinimum(mu_s),
            su_load: SuLoad::ArrivalRate(lambda_s),
        }
    }

    pub fn build(&self) -> Result<SystemConfig> {
        build_config(self)
    }
}

/// A validated system configuration. Immutable; use the `with_*` methods to
/// derive neighbouring configurations for sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    bands: usize,
    channels_per_band: usize,
    c_min: usize,
    reserved: usize,
    lambda_p: f64,
    mu_p: f64,
    lambda_s: f64,
    mu_s: f64,
}

fn invalid(param: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        param,
        reason: reason.into(),
    }
}

fn positive(param: &'static str, symbol: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(invalid(
            param,
            format!("{symbol} must be positive (got {value})"),
        ))
    }
}

/// Validates raw parameters and resolves the per-channel rate conventions
/// (`μp = N·μ1`, `μs = C_min·μ2`, `λs = ρs·μ2`).
pub fn build_config(raw: &RawParams) -> Result<SystemConfig> {
    if raw.bands < 1 {
        return Err(invalid(
            "M",
            format!("M must be at least 1 (got {})", raw.bands),
        ));
    }
    if raw.channels_per_band < 1 {
        return Err(invalid(
            "N",
            format!("N must be at least 1 (got {})", raw.channels_per_band),
        ));
    }
    let total = raw.bands * raw.channels_per_band;
    if raw.c_min < 1 || raw.c_min > total {
        return Err(invalid(
            "c_min",
            format!("C_min must lie in [1, C={total}] (got {})", raw.c_min),
        ));
    }
    if raw.reserved < 0 {
        return Err(invalid(
            "r",
            format!("r must be non-negative (got {})", raw.reserved),
        ));
    }
    if raw.c_min > total - raw.reserved {
        return Err(invalid(
            "r",
            format!(
                "r leaves no room for C_min: C - r = {} < C_min = {}",
                total - raw.reserved,
                raw.c_min
            ),
        ));
    }

    let n = raw.channels_per_band as f64;
    let c_min = raw.c_min as f64;
    let lambda_p = positive("lambda_p", "λp", raw.lambda_p)?;
    let mu_p = match raw.pu_service {
        PuService::PerBand(v) => positive("mu_p", "μp", v)?,
        PuService::PerChannel(v) => n * positive("mu_1", "μ1", v)?,
    };
    let mu_s = match raw.su_service {
        SuService::AtMinimum(v) => positive("mu_s", "μs", v)?,
        SuService::PerChannel(v) => c_min * positive("mu_2", "μ2", v)?,
    };
    let lambda_s = match raw.su_load {
        SuLoad::ArrivalRate(v) => positive("lambda_s", "λs", v)?,
        SuLoad::Utilization(v) => positive("rho_s", "ρs", v)? * mu_s / c_min,
    };

    Ok(SystemConfig {
        bands: raw.bands as usize,
        channels_per_band: raw.channels_per_band as usize,
        c_min: raw.c_min as usize,
        reserved: raw.reserved as usize,
        lambda_p,
        mu_p,
        lambda_s,
        mu_s,
    })
}

impl SystemConfig {
    /// `M`
    pub fn bands(&self) -> usize {
        self.bands
    }
    /// `N`
    pub fn channels_per_band(&self) -> usize {
        self.channels_per_band
    }
    /// `C = M·N`
    pub fn total_channels(&self) -> usize {
        self.bands * self.channels_per_band
    }
    pub fn c_min(&self) -> usize {
        self.c_min
    }
    /// `r`, the virtually reserved channels.
    pub fn reserved(&self) -> usize {
        self.reserved
    }
    pub fn lambda_p(&self) -> f64 {
        self.lambda_p
    }
    pub fn mu_p(&self) -> f64 {
        self.mu_p
    }
    pub fn lambda_s(&self) -> f64 {
        self.lambda_s
    }
    pub fn mu_s(&self) -> f64 {
        self.mu_s
    }
    /// `μ1 = μp / N`
    pub fn mu_1(&self) -> f64 {
        self.mu_p / self.channels_per_band as f64
    }
    /// `μ2 = μs / C_min`
    pub fn mu_2(&self) -> f64 {
        self.mu_s / self.c_min as f64
    }
    /// `ρp = λp / μp`
    pub fn rho_p(&self) -> f64 {
        self.lambda_p / self.mu_p
    }
    /// `ρs = λs / μ2`
    pub fn rho_s(&self) -> f64 {
        self.lambda_s / self.mu_2()
    }
    /// Largest admissible reservation, `C − C_min`.
    pub fn max_reserved(&self) -> usize {
        self.total_channels() - self.c_min
    }

    /// Back to raw form in the direct-rate convention.
    pub fn to_raw(&self) -> RawParams {
        RawParams::direct(
            self.bands as i64,
            self.channels_per_band as i64,
            self.c_min as i64,
            self.reserved as i64,
            self.lambda_p,
            self.mu_p,
            self.lambda_s,
            self.mu_s,
        )
    }

    pub fn with_reserved(&self, reserved: usize) -> Result<Self> {
        RawParams {
            reserved: reserved as i64,
            ..self.to_raw()
        }
        .build()
    }

    pub fn with_lambda_p(&self, lambda_p: f64) -> Result<Self> {
        RawParams {
            lambda_p,
            ..self.to_raw()
        }
        .build()
    }

    /// Channels left to SUs when `n_p` bands are held by PUs.
    fn free_channels(&self, n_p: usize) -> usize {
        self.total_channels() - self.channels_per_band * n_p
    }
}

/// One CTMC state: active PUs and active SUs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SystemState {
    pub n_p: usize,
    pub n_s: usize,
}

impl SystemState {
    pub const EMPTY: SystemState = SystemState { n_p: 0, n_s: 0 };

    pub fn new(n_p: usize, n_s: usize) -> Self {
        Self { n_p, n_s }
    }
}

impl fmt::Display for SystemState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.n_p, self.n_s)
    }
}

/// A new SU is admitted iff `C − N·n_p − r − C_min·(n_s+1) ≥ 0`.
pub fn admit_su(cfg: &SystemConfig, state: SystemState) -> bool {
    let need = cfg.channels_per_band * state.n_p + cfg.reserved + cfg.c_min * (state.n_s + 1);
    need <= cfg.total_channels()
}

/// Outcome of a PU arrival: the next state and how many SUs were forced to
/// terminate. Active SUs are repacked onto the remaining channels; only
/// those that cannot get `C_min` channels are dropped.
pub fn pu_arrival_outcome(cfg: &SystemConfig, state: SystemState) -> Result<(SystemState, usize)> {
    if state.n_p >= cfg.bands {
        return Err(Error::PuSaturated(state));
    }
    let free = cfg.free_channels(state.n_p + 1);
    let kept = if free >= cfg.c_min * state.n_s {
        state.n_s
    } else {
        free / cfg.c_min
    };
    Ok((SystemState::new(state.n_p + 1, kept), state.n_s - kept))
}

/// `U_p(n_s) = ⌊M − n_s·C_min/N⌋`, or `M` when no SU is active. Clamped at 0.
pub fn max_pu(cfg: &SystemConfig, n_s: usize) -> usize {
    if n_s == 0 {
        return cfg.bands;
    }
    cfg.total_channels().saturating_sub(n_s * cfg.c_min) / cfg.channels_per_band
}

/// `U_s(n_p) = ⌊(C − N·n_p − r)/C_min⌋`, floored at 0.
pub fn max_su(cfg: &SystemConfig, n_p: usize) -> usize {
    cfg.total_channels()
        .saturating_sub(cfg.channels_per_band * n_p + cfg.reserved)
        / cfg.c_min
}

/// The rate at which SUs leave the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ServiceModel {
    /// All idle channels are shared among active SUs: aggregate rate
    /// `N·(M − n_p)·μs / C_min`.
    FullSpectrum,
    /// Every SU holds exactly `C_min` channels: aggregate rate `n_s·μs`.
    MinimumAllocation,
}

impl ServiceModel {
    pub fn su_departure_rate(self, cfg: &SystemConfig, state: SystemState) -> f64 {
        if state.n_s == 0 {
            return 0.0;
        }
        match self {
            ServiceModel::FullSpectrum => {
                cfg.free_channels(state.n_p) as f64 * cfg.mu_s / cfg.c_min as f64
            }
            ServiceModel::MinimumAllocation => state.n_s as f64 * cfg.mu_s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionKind {
    PuArrival,
    /// PU arrival that evicts `dropped` SUs (the diagonal move).
    ForcedTermination {
        dropped: usize,
    },
    SuArrival,
    PuDeparture,
    SuDeparture,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub target: SystemState,
    pub rate: f64,
    pub kind: TransitionKind,
}

/// Nonzero outgoing rates of `state` in the FSU chain.
pub fn transition_rates(cfg: &SystemConfig, state: SystemState) -> Vec<Transition> {
    transition_rates_with(cfg, state, ServiceModel::FullSpectrum)
}

/// Nonzero outgoing rates of `state` under the given SU service model.
/// Admission and forced-termination rules are shared by both models.
pub fn transition_rates_with(
    cfg: &SystemConfig,
    state: SystemState,
    service: ServiceModel,
) -> Vec<Transition> {
    let mut out = Vec::with_capacity(4);
    if let Ok((target, dropped)) = pu_arrival_outcome(cfg, state) {
        let kind = if dropped == 0 {
            TransitionKind::PuArrival
        } else {
            TransitionKind::ForcedTermination { dropped }
        };
        out.push(Transition {
            target,
            rate: cfg.lambda_p,
            kind,
        });
    }
    if admit_su(cfg, state) {
        out.push(Transition {
            target: SystemState::new(state.n_p, state.n_s + 1),
            rate: cfg.lambda_s,
            kind: TransitionKind::SuArrival,
        });
    }
    if state.n_p >= 1 {
        out.push(Transition {
            target: SystemState::new(state.n_p - 1, state.n_s),
            rate: state.n_p as f64 * cfg.mu_p,
            kind: TransitionKind::PuDeparture,
        });
    }
    if state.n_s >= 1 {
        out.push(Transition {
            target: SystemState::new(state.n_p, state.n_s - 1),
            rate: service.su_departure_rate(cfg, state),
            kind: TransitionKind::SuDeparture,
        });
    }
    out
}

/// Ordered set of reachable states with a dense index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    states: Vec<SystemState>,
    index: HashMap<SystemState, usize>,
}

impl StateSpace {
    /// Builds a state space from an explicit ordering. Duplicates are
    /// rejected.
    pub fn from_states(states: Vec<SystemState>) -> Result<Self> {
        let mut index = HashMap::with_capacity(states.len());
        for (i, s) in states.iter().enumerate() {
            if index.insert(*s, i).is_some() {
                return Err(Error::MalformedGenerator(format!("duplicate state {s}")));
            }
        }
        Ok(Self { states, index })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[SystemState] {
        &self.states
    }

    pub fn index_of(&self, state: SystemState) -> Option<usize> {
        self.index.get(&state).copied()
    }

    pub fn contains(&self, state: SystemState) -> bool {
        self.index.contains_key(&state)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, SystemState)> + '_ {
        self.states.iter().copied().enumerate()
    }
}

/// Reachability closure from `(0,0)`, sorted lexicographically by
/// `(n_p, n_s)`. The set does not depend on the service model since rates
/// are all strictly positive.
pub fn enumerate_states(cfg: &SystemConfig) -> StateSpace {
    let mut seen = std::collections::HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(SystemState::EMPTY);
    queue.push_back(SystemState::EMPTY);
    while let Some(s) = queue.pop_front() {
        for t in transition_rates(cfg, s) {
            if seen.insert(t.target) {
                queue.push_back(t.target);
            }
        }
    }
    let mut states: Vec<_> = seen.into_iter().collect();
    states.sort_unstable();
    StateSpace::from_states(states).expect("set has no duplicates")
}

/// Dense infinitesimal generator, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl GeneratorMatrix {
    /// Builds a generator from off-diagonal rates; the diagonal entries of
    /// `rows` are ignored and recomputed as minus the row sum.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            let start = data.len();
            data.extend(row);
            data[start + i] = 0.0;
            let sum: f64 = data[start..start + dim].iter().sum();
            data[start + i] = -sum;
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Total exit rate of state `i`.
    pub fn exit_rate(&self, i: usize) -> f64 {
        -self.get(i, i)
    }
}

/// Assembles the FSU generator over `space`.
pub fn build_generator(cfg: &SystemConfig, space: &StateSpace) -> Result<GeneratorMatrix> {
    build_generator_with(cfg, space, ServiceModel::FullSpectrum)
}

pub fn build_generator_with(
    cfg: &SystemConfig,
    space: &StateSpace,
    service: ServiceModel,
) -> Result<GeneratorMatrix> {
    let dim = space.len();
    let mut data = vec![0.0; dim * dim];
    for (i, s) in space.iter() {
        let row = &mut data[i * dim..(i + 1) * dim];
        let mut exit = 0.0;
        for t in transition_rates_with(cfg, s, service) {
            let j = space.index_of(t.target).ok_or(Error::UnknownState {
                from: s,
                to: t.target,
            })?;
            row[j] += t.rate;
            exit += t.rate;
        }
        row[i] = -exit;
    }
    Ok(GeneratorMatrix { dim, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg_t1() -> SystemConfig {
        RawParams::direct(1, 1, 1, 0, 1.0, 1.0, 1.0, 1.0)
            .build()
            .unwrap()
    }

    fn cfg_x1() -> SystemConfig {
        RawParams::direct(3, 4, 2, 2, 1.0, 1.0, 1.0, 1.0)
            .build()
            .unwrap()
    }

    fn st(n_p: usize, n_s: usize) -> SystemState {
        SystemState::new(n_p, n_s)
    }

    #[test]
    fn default_point_per_channel_rates() {
        let cfg = RawParams::operating_point().build().unwrap();
        assert_eq!(cfg.total_channels(), 20);
        assert!((cfg.mu_p() - 5.0).abs() < 1e-15);
        assert!((cfg.mu_s() - 1.5).abs() < 1e-15);
        assert!((cfg.lambda_s() - 0.45).abs() < 1e-15);
        assert!((cfg.rho_p() - 0.26).abs() < 1e-15);
        assert!((cfg.rho_s() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn identity_scale_config() {
        let cfg = cfg_t1();
        assert_eq!(cfg.total_channels(), 1);
        assert_eq!(cfg.rho_p(), 1.0);
    }

    #[test]
    fn rejects_reservation_without_room() {
        let raw = RawParams {
            reserved: 19,
            ..RawParams::operating_point()
        };
        let err = raw.build().unwrap_err().to_string();
        assert!(err.contains("r leaves no room for C_min"), "{err}");
    }

    #[test]
    fn rejects_bad_values() {
        let negative_r = RawParams {
            reserved: -1,
            ..RawParams::operating_point()
        };
        assert!(matches!(
            negative_r.build(),
            Err(Error::InvalidConfig { param: "r", .. })
        ));
        let bad_rate = RawParams {
            lambda_p: 0.0,
            ..RawParams::operating_point()
        };
        let msg = bad_rate.build().unwrap_err().to_string();
        assert!(msg.contains("λp must be positive"), "{msg}");
        let nan = RawParams {
            su_service: SuService::PerChannel(f64::NAN),
            ..RawParams::operating_point()
        };
        assert!(nan.build().is_err());
        let big_cmin = RawParams {
            c_min: 21,
            ..RawParams::operating_point()
        };
        assert!(matches!(
            big_cmin.build(),
            Err(Error::InvalidConfig { param: "c_min", .. })
        ));
    }

    #[test]
    fn admission_boundary() {
        let t1 = cfg_t1();
        assert!(admit_su(&t1, st(0, 0)));
        assert!(!admit_su(&t1, st(0, 1)));
        assert!(!admit_su(&cfg_x1(), st(1, 3)));
    }

    #[test]
    fn pu_arrival_examples() {
        let x1 = cfg_x1();
        assert_eq!(pu_arrival_outcome(&x1, st(0, 4)).unwrap(), (st(1, 4), 0));
        assert_eq!(pu_arrival_outcome(&x1, st(1, 4)).unwrap(), (st(2, 2), 2));
        assert_eq!(
            pu_arrival_outcome(&cfg_t1(), st(0, 1)).unwrap(),
            (st(1, 0), 1)
        );
        assert_eq!(
            pu_arrival_outcome(&cfg_t1(), st(1, 0)),
            Err(Error::PuSaturated(st(1, 0)))
        );
    }

    #[test]
    fn bounds_examples() {
        let p1 = RawParams::operating_point().build().unwrap();
        assert_eq!(max_pu(&p1, 3), 2);
        assert_eq!(max_pu(&p1, 0), 4);
        assert_eq!(max_pu(&cfg_t1(), 1), 0);
        assert_eq!(max_pu(&cfg_x1(), 4), 1);

        assert_eq!(max_su(&cfg_x1(), 1), 3);
        assert_eq!(max_su(&cfg_t1(), 0), 1);
        assert_eq!(max_su(&p1.with_reserved(2).unwrap(), 3), 1);
        assert_eq!(max_su(&cfg_t1(), 1), 0);
    }

    #[test]
    fn t1_state_space() {
        let space = enumerate_states(&cfg_t1());
        assert_eq!(space.states(), &[st(0, 0), st(0, 1), st(1, 0)]);
    }

    #[test]
    fn x1_overflow_state() {
        let space = enumerate_states(&cfg_x1());
        assert!(space.contains(st(1, 4)));
        assert!(!space.contains(st(2, 4)));
        assert!(space.contains(st(2, 2)));
    }

    #[test]
    fn t1_rates() {
        let t1 = cfg_t1();
        let rates = transition_rates(&t1, st(0, 1));
        assert_eq!(
            rates,
            vec![
                Transition {
                    target: st(1, 0),
                    rate: 1.0,
                    kind: TransitionKind::ForcedTermination { dropped: 1 }
                },
                Transition {
                    target: st(0, 0),
                    rate: 1.0,
                    kind: TransitionKind::SuDeparture
                },
            ]
        );
        let rates = transition_rates(&t1, st(1, 0));
        assert_eq!(rates.len(), 1);
        assert_eq!(rates[0].target, st(0, 0));
        assert_eq!(rates[0].kind, TransitionKind::PuDeparture);
    }

    #[test]
    fn x1_overflow_rates() {
        let x1 = RawParams::direct(3, 4, 2, 2, 1.0, 1.0, 1.0, 0.7)
            .build()
            .unwrap();
        let rates = transition_rates(&x1, st(1, 4));
        let dep = rates
            .iter()
            .find(|t| t.kind == TransitionKind::SuDeparture)
            .unwrap();
        assert!((dep.rate - 4.0 * 0.7).abs() < 1e-15);
        assert!(rates.iter().all(|t| t.kind != TransitionKind::SuArrival));
    }

    #[test]
    fn no_su_departure_from_empty() {
        let rates = transition_rates(&cfg_x1(), SystemState::EMPTY);
        assert!(rates.iter().all(|t| t.kind != TransitionKind::SuDeparture));
    }

    #[test]
    fn t1_generator() {
        let cfg = cfg_t1();
        let q = build_generator(&cfg, &enumerate_states(&cfg)).unwrap();
        let expected = [[-2.0, 1.0, 1.0], [1.0, -2.0, 1.0], [1.0, 0.0, -1.0]];
        for (i, row) in expected.iter().enumerate() {
            assert_eq!(q.row(i), row);
        }
    }

    #[test]
    fn generator_rejects_unenumerated_target() {
        let cfg = cfg_t1();
        let partial = StateSpace::from_states(vec![st(0, 0), st(0, 1)]).unwrap();
        assert!(matches!(
            build_generator(&cfg, &partial),
            Err(Error::UnknownState { .. })
        ));
    }

    #[test]
    fn x1_generator_dimension() {
        let cfg = cfg_x1();
        let space = enumerate_states(&cfg);
        assert_eq!(build_generator(&cfg, &space).unwrap().dim(), space.len());
    }

    #[test]
    fn duplicate_states_rejected() {
        assert!(StateSpace::from_states(vec![st(0, 0), st(0, 0)]).is_err());
    }
}
