//! Command dispatch and CSV output for the `crvirtres` binary.
//!
//! Every command writes one CSV table with a fixed header to the given
//! writer. Floats use Rust's shortest round-trip formatting, so analytical
//! output is exactly reproducible and simulation output is byte-identical
//! for a fixed seed.

use std::io::{self, Write};
use std::path::PathBuf;

use clap::{CommandFactory, Parser, ValueEnum};
use rayon::prelude::*;

use crate::drift::drift_comparison;
use crate::error::{Error, Result};
use crate::kpi::{compute_kpis, KpiReport};
use crate::model::{PuService, RawParams, SuLoad};
use crate::optimizer;
use crate::scenario::Scenario;
use crate::sim::{simulate, validate};

pub const SOLVE_HEADER: &str = "M,N,c_min,r,lambda_p,mu_p,lambda_s,mu_s,rho_p,rho_s,states,residual,p_block,p_ft,c_avg_unconditioned,c_avg_conditional";
pub const SWEEP_HEADER: &str = "axis_value,lambda_p,rho_p,mu_1,rho_s,c_min,r,p_block,p_ft,c_avg_unconditioned,c_avg_conditional";
pub const SIMULATE_HEADER: &str = "policy,M,N,c_min,r,lambda_p,lambda_s,horizon,replications,seed,su_arrivals,admissions,blocks,ft_events,p_block,p_block_hw,p_ft,p_ft_hw,c_avg_unconditioned,c_avg_unconditioned_hw,c_avg_conditional,c_avg_conditional_hw";
pub const VALIDATE_HEADER: &str = "kpi,analytical,simulated,half_width,abs_gap,rel_gap,covered";
pub const OPTIMIZE_HEADER: &str = "lambda_p,rho_s,alpha,r_star,zeta_star";
pub const DRIFT_HEADER: &str = "n_p,n_s,drift_fsu,drift_baseline,drift_fsu_strict4";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Analytical KPIs of the [system] block.
    Solve,
    /// Discrete-event simulation under the scenario's policy.
    Simulate,
    /// Analytical KPIs against an FSU simulation; exit 1 if any CI misses.
    Validate,
    /// Optimal reservation over the lambda_p x rho_s grid.
    Optimize,
    /// KPIs against lambda_p, per r (forced termination view).
    SweepPft,
    /// KPIs against lambda_p, per r (blocking view).
    SweepPb,
    /// KPIs against lambda_p, per r (throughput view).
    SweepThroughput,
    /// KPIs against mu_1, per rho_s and r.
    SweepMu1,
    /// KPIs against c_min, per rho_s and r.
    SweepCmin,
    /// Per-state drift of FSU and the minimum-allocation baseline.
    Drift,
}

#[derive(Debug, Parser)]
#[command(
    name = "crvirtres",
    version,
    about = "Virtual channel reservation for cognitive radio networks"
)]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// Scenario file; defaults apply when omitted.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Weight of forced termination relative to blocking.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Simulated time per replication.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub reps: Option<usize>,
}

impl Args {
    /// Loads the scenario and applies command-line overrides.
    pub fn scenario(&self) -> Result<Scenario> {
        let mut sc = match &self.scenario {
            Some(path) => Scenario::from_file(path)?,
            None => Scenario::default(),
        };
        if let Some(a) = self.alpha {
            sc.alpha = a;
        }
        if let Some(s) = self.seed {
            sc.simulation.seed = s;
        }
        if let Some(h) = self.horizon {
            sc.simulation.horizon = h;
        }
        if let Some(k) = self.reps {
            sc.simulation.replications = k;
        }
        sc.check()?;
        Ok(sc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    ValidationFailed,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::ValidationFailed => 1,
        }
    }
}

fn io_err(e: io::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn run_command(command: Command, sc: &Scenario, out: &mut dyn Write) -> Result<Outcome> {
    let mut buf = String::new();
    let outcome = match command {
        Command::Solve => {
            let k = compute_kpis(&sc.config()?)?;
            buf.push_str(SOLVE_HEADER);
            buf.push('\n');
            buf.push_str(&solve_row(&k));
            Outcome::Success
        }
        Command::Simulate => {
            buf = simulate_table(sc)?;
            Outcome::Success
        }
        Command::Validate => {
            let report = validate(&sc.config()?, sc.simulation)?;
            buf.push_str(VALIDATE_HEADER);
            buf.push('\n');
            for c in &report.checks {
                buf.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    c.kpi, c.analytical, c.simulated, c.half_width, c.abs_gap, c.rel_gap, c.covered
                ));
            }
            if report.passed() {
                Outcome::Success
            } else {
                Outcome::ValidationFailed
            }
        }
        Command::Optimize => {
            let cfg = sc.config()?;
            let lambda = sc.sweep.lambda_p.clone().unwrap_or(vec![cfg.lambda_p()]);
            let rho = sc.sweep.rho_s.clone().unwrap_or(vec![cfg.rho_s()]);
            buf.push_str(OPTIMIZE_HEADER);
            buf.push('\n');
            for row in optimizer::sweep(&cfg, sc.alpha, &lambda, &rho)? {
                buf.push_str(&format!(
                    "{},{},{},{},{}\n",
                    row.lambda_p,
                    row.rho_s,
                    sc.alpha,
                    row.policy.r_star,
                    row.policy.best().zeta
                ));
            }
            Outcome::Success
        }
        Command::SweepPft | Command::SweepPb | Command::SweepThroughput => {
            let cfg = sc.config()?;
            let grid = sc.sweep.lambda_p.clone().unwrap_or(vec![cfg.lambda_p()]);
            buf = sweep_table(sc, &grid, |raw, v| RawParams { lambda_p: v, ..raw })?;
            Outcome::Success
        }
        Command::SweepMu1 => {
            let cfg = sc.config()?;
            let grid = sc.sweep.mu_1.clone().unwrap_or(vec![cfg.mu_1()]);
            buf = sweep_table(sc, &grid, |raw, v| RawParams {
                pu_service: PuService::PerChannel(v),
                ..raw
            })?;
            Outcome::Success
        }
        Command::SweepCmin => {
            let cfg = sc.config()?;
            let grid: Vec<f64> = sc
                .sweep
                .c_min
                .clone()
                .unwrap_or(vec![cfg.c_min()])
                .into_iter()
                .map(|c| c as f64)
                .collect();
            buf = sweep_table(sc, &grid, |raw, v| RawParams {
                c_min: v as i64,
                ..raw
            })?;
            Outcome::Success
        }
        Command::Drift => {
            let cmp = drift_comparison(&sc.config()?)?;
            buf.push_str(DRIFT_HEADER);
            buf.push('\n');
            for r in &cmp.rows {
                buf.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.state.n_p, r.state.n_s, r.fsu, r.baseline, r.fsu_strict4
                ));
            }
            Outcome::Success
        }
    };
    out.write_all(buf.as_bytes()).map_err(io_err)?;
    Ok(outcome)
}

fn solve_row(k: &KpiReport) -> String {
    let c = &k.config;
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        c.bands(),
        c.channels_per_band(),
        c.c_min(),
        c.reserved(),
        c.lambda_p(),
        c.mu_p(),
        c.lambda_s(),
        c.mu_s(),
        c.rho_p(),
        c.rho_s(),
        k.states,
        k.residual,
        k.p_block,
        k.p_ft,
        k.c_avg,
        k.c_avg_conditional()
    )
}

/// Rows ordered by axis value, then `ρs`, then `r`.
fn sweep_table(
    sc: &Scenario,
    axis: &[f64],
    apply: impl Fn(RawParams, f64) -> RawParams + Sync,
) -> Result<String> {
    let base = sc.config()?;
    let rho = sc.sweep.rho_s.clone().unwrap_or(vec![base.rho_s()]);
    let rs = sc.sweep.r.clone().unwrap_or(vec![base.reserved()]);
    let mut points = Vec::new();
    for &v in axis {
        for &rho_s in &rho {
            for &r in &rs {
                points.push((v, rho_s, r));
            }
        }
    }
    // ρs overrides only apply when a grid is given, so a scenario that
    // states λs directly keeps it.
    let rho_given = sc.sweep.rho_s.is_some();
    let rows = points
        .into_par_iter()
        .map(|(v, rho_s, r)| {
            let mut raw = apply(sc.system, v);
            raw.reserved = r as i64;
            if rho_given {
                raw.su_load = SuLoad::Utilization(rho_s);
            }
            let k = compute_kpis(&raw.build()?)?;
            let c = &k.config;
            Ok(format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                v,
                c.lambda_p(),
                c.rho_p(),
                c.mu_1(),
                c.rho_s(),
                c.c_min(),
                c.reserved(),
                k.p_block,
                k.p_ft,
                k.c_avg,
                k.c_avg_conditional()
            ))
        })
        .collect::<Result<Vec<String>>>()?;
    let mut buf = String::from(SWEEP_HEADER);
    buf.push('\n');
    rows.iter().for_each(|r| buf.push_str(r));
    Ok(buf)
}

fn simulate_table(sc: &Scenario) -> Result<String> {
    let cfg = sc.config()?;
    let rep = simulate(&cfg, sc.policy, sc.simulation)?;
    let (pb, pb_hw) = match rep.p_block {
        Some(e) => (e.mean.to_string(), e.half_width.to_string()),
        None => ("no arrivals".to_string(), "no arrivals".to_string()),
    };
    Ok(format!(
        "{SIMULATE_HEADER}\n{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        sc.policy.name(),
        cfg.bands(),
        cfg.channels_per_band(),
        cfg.c_min(),
        cfg.reserved(),
        cfg.lambda_p(),
        cfg.lambda_s(),
        sc.simulation.horizon,
        sc.simulation.replications,
        sc.simulation.seed,
        rep.su_arrivals,
        rep.admissions,
        rep.blocks,
        rep.ft_events,
        pb,
        pb_hw,
        rep.p_ft.mean,
        rep.p_ft.half_width,
        rep.c_avg.mean,
        rep.c_avg.half_width,
        rep.c_avg_conditional.mean,
        rep.c_avg_conditional.half_width
    ))
}

/// Entry point shared by the binary and the tests: parses `argv`, runs the
/// command and returns the process exit code (0 ok, 1 validation failure,
/// 2 input error).
pub fn main_with_args<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            if !e.use_stderr() {
                return 0;
            }
            if !e.render().to_string().contains("Usage:") {
                let _ = writeln!(err, "\n{}", Args::command().render_usage());
            }
            return 2;
        }
    };
    let result = args
        .scenario()
        .and_then(|sc| run_command(args.command, &sc, out));
    match result {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}
