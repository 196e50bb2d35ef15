//! Scenario files: a small `key = value` format with `[section]` headers.
//!
//! ```text
//! # comments start with '#', blank lines are ignored
//! [system]
//! M = 4
//! N = 5
//! c_min = 2
//! r = 0
//! lambda_p = 1.3
//! mu_1 = 1          # or: mu_p = 5
//! mu_2 = 0.75       # or: mu_s = 1.5
//! rho_s = 0.6       # or: lambda_s = 0.45
//!
//! [sweep]
//! lambda_p = 0.5:3.0:0.5   # start:stop:step, inclusive
//! rho_s = 0.4, 0.6, 0.8    # or an explicit list
//! r = 0, 2, 4
//! mu_1 = 0.5, 1, 2, 4
//! c_min = 1, 2, 4
//!
//! [optimize]
//! alpha = 1
//!
//! [simulation]
//! horizon = 1e6
//! replications = 10
//! seed = 1
//! policy = fsu             # fsu | min_alloc | nc
//! ```
//!
//! Omitted keys take the default operating point above. Each rate may be
//! given in one convention only.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{PuService, RawParams, SuLoad, SuService, SystemConfig};
use crate::sim::{SimPolicy, SimSettings};

/// Sweep axes; `None` means the axis was not given and the single value of
/// the `[system]` block applies.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepAxes {
    pub lambda_p: Option<Vec<f64>>,
    pub rho_s: Option<Vec<f64>>,
    pub r: Option<Vec<usize>>,
    pub mu_1: Option<Vec<f64>>,
    pub c_min: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub system: RawParams,
    pub sweep: SweepAxes,
    pub alpha: f64,
    pub simulation: SimSettings,
    pub policy: SimPolicy,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            system: RawParams::operating_point(),
            sweep: SweepAxes::default(),
            alpha: 1.0,
            simulation: SimSettings {
                horizon: 1e6,
                replications: 10,
                seed: 1,
            },
            policy: SimPolicy::FsuVirtualReservation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    System,
    Sweep,
    Optimize,
    Simulation,
}

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::ScenarioSyntax {
        line,
        message: message.into(),
    }
}

fn value_error(key: &str, message: impl Into<String>) -> Error {
    Error::ScenarioValue {
        key: key.to_string(),
        message: message.into(),
    }
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64> {
    v.parse()
        .map_err(|_| syntax(line, format!("`{key}` expects a number, got `{v}`")))
}

fn parse_int<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| syntax(line, format!("`{key}` expects an integer, got `{v}`")))
}

fn parse_f64_grid(line: usize, key: &str, v: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    if parts.len() == 3 {
        let start = parse_f64(line, key, parts[0])?;
        let stop = parse_f64(line, key, parts[1])?;
        let step = parse_f64(line, key, parts[2])?;
        if step.is_nan() || step <= 0.0 || stop < start {
            return Err(syntax(
                line,
                format!("`{key}` range needs start <= stop and a positive step"),
            ));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|i| start + i as f64 * step).collect());
    }
    v.split(',')
        .map(|s| parse_f64(line, key, s.trim()))
        .collect()
}

fn parse_int_grid(line: usize, key: &str, v: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    if parts.len() == 3 {
        let start: usize = parse_int(line, key, parts[0])?;
        let stop: usize = parse_int(line, key, parts[1])?;
        let step: usize = parse_int(line, key, parts[2])?;
        if step == 0 || stop < start {
            return Err(syntax(
                line,
                format!("`{key}` range needs start <= stop and a positive step"),
            ));
        }
        return Ok((start..=stop).step_by(step).collect());
    }
    v.split(',')
        .map(|s| parse_int(line, key, s.trim()))
        .collect()
}

/// Tracks which convention each rate was given in, to reject duplicates.
#[derive(Default)]
struct Seen {
    pu: Option<&'static str>,
    su: Option<&'static str>,
    load: Option<&'static str>,
}

fn once(slot: &mut Option<&'static str>, key: &'static str, line: usize) -> Result<()> {
    match slot.replace(key) {
        Some(prev) => Err(syntax(
            line,
            format!("`{key}` conflicts with `{prev}` given earlier"),
        )),
        None => Ok(()),
    }
}

impl Scenario {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut sc = Scenario::default();
        let mut section = None;
        let mut seen = Seen::default();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| syntax(line, "unterminated section header"))?;
                section = Some(match name.trim() {
                    "system" => Section::System,
                    "sweep" => Section::Sweep,
                    "optimize" => Section::Optimize,
                    "simulation" => Section::Simulation,
                    other => return Err(syntax(line, format!("unknown section `[{other}]`"))),
                });
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| syntax(line, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            if value.is_empty() {
                return Err(syntax(line, format!("`{key}` has no value")));
            }
            let section = section.ok_or_else(|| syntax(line, "key outside of any section"))?;
            sc.assign(section, key, value, line, &mut seen)?;
        }
        sc.check()?;
        Ok(sc)
    }

    fn assign(
        &mut self,
        section: Section,
        key: &str,
        v: &str,
        line: usize,
        seen: &mut Seen,
    ) -> Result<()> {
        let sys = &mut self.system;
        match (section, key) {
            (Section::System, "M") => sys.bands = parse_int(line, key, v)?,
            (Section::System, "N") => sys.channels_per_band = parse_int(line, key, v)?,
            (Section::System, "c_min") => sys.c_min = parse_int(line, key, v)?,
            (Section::System, "r") => sys.reserved = parse_int(line, key, v)?,
            (Section::System, "lambda_p") => sys.lambda_p = parse_f64(line, key, v)?,
            (Section::System, "mu_p") => {
                once(&mut seen.pu, "mu_p", line)?;
                sys.pu_service = PuService::PerBand(parse_f64(line, key, v)?);
            }
            (Section::System, "mu_1") => {
                once(&mut seen.pu, "mu_1", line)?;
                sys.pu_service = PuService::PerChannel(parse_f64(line, key, v)?);
            }
            (Section::System, "mu_s") => {
                once(&mut seen.su, "mu_s", line)?;
                sys.su_service = SuService::AtMinimum(parse_f64(line, key, v)?);
            }
            (Section::System, "mu_2") => {
                once(&mut seen.su, "mu_2", line)?;
                sys.su_service = SuService::PerChannel(parse_f64(line, key, v)?);
            }
            (Section::System, "lambda_s") => {
                once(&mut seen.load, "lambda_s", line)?;
                sys.su_load = SuLoad::ArrivalRate(parse_f64(line, key, v)?);
            }
            (Section::System, "rho_s") => {
                once(&mut seen.load, "rho_s", line)?;
                sys.su_load = SuLoad::Utilization(parse_f64(line, key, v)?);
            }
            (Section::Sweep, "lambda_p") => {
                self.sweep.lambda_p = Some(parse_f64_grid(line, key, v)?)
            }
            (Section::Sweep, "rho_s") => self.sweep.rho_s = Some(parse_f64_grid(line, key, v)?),
            (Section::Sweep, "mu_1") => self.sweep.mu_1 = Some(parse_f64_grid(line, key, v)?),
            (Section::Sweep, "r") => self.sweep.r = Some(parse_int_grid(line, key, v)?),
            (Section::Sweep, "c_min") => self.sweep.c_min = Some(parse_int_grid(line, key, v)?),
            (Section::Optimize, "alpha") => self.alpha = parse_f64(line, key, v)?,
            (Section::Simulation, "horizon") => self.simulation.horizon = parse_f64(line, key, v)?,
            (Section::Simulation, "replications") => {
                self.simulation.replications = parse_int(line, key, v)?
            }
            (Section::Simulation, "seed") => self.simulation.seed = parse_int(line, key, v)?,
            (Section::Simulation, "policy") => {
                self.policy = SimPolicy::from_name(v).ok_or_else(|| {
                    syntax(line, format!("unknown policy `{v}` (fsu, min_alloc, nc)"))
                })?
            }
            _ => return Err(syntax(line, format!("unknown key `{key}` in this section"))),
        }
        Ok(())
    }

    /// Validates every value against the model invariants.
    pub fn check(&self) -> Result<()> {
        let wrap = |prefix: &str, e: Error| match e {
            Error::InvalidConfig { param, .. } => {
                value_error(&format!("{prefix}{param}"), e.to_string())
            }
            other => other,
        };
        self.system.build().map_err(|e| wrap("", e))?;
        let sweep = &self.sweep;
        let grids: [(&str, Option<usize>); 5] = [
            ("lambda_p", sweep.lambda_p.as_ref().map(Vec::len)),
            ("rho_s", sweep.rho_s.as_ref().map(Vec::len)),
            ("r", sweep.r.as_ref().map(Vec::len)),
            ("mu_1", sweep.mu_1.as_ref().map(Vec::len)),
            ("c_min", sweep.c_min.as_ref().map(Vec::len)),
        ];
        for (key, len) in grids {
            if len == Some(0) {
                return Err(value_error(&format!("sweep.{key}"), "grid is empty"));
            }
        }
        for &v in sweep.lambda_p.iter().flatten() {
            RawParams {
                lambda_p: v,
                ..self.system
            }
            .build()
            .map_err(|e| wrap("sweep.", e))?;
        }
        for &v in sweep.rho_s.iter().flatten() {
            RawParams {
                su_load: SuLoad::Utilization(v),
                ..self.system
            }
            .build()
            .map_err(|e| wrap("sweep.", e))?;
        }
        for &v in sweep.mu_1.iter().flatten() {
            RawParams {
                pu_service: PuService::PerChannel(v),
                ..self.system
            }
            .build()
            .map_err(|e| wrap("sweep.", e))?;
        }
        for &v in sweep.r.iter().flatten() {
            RawParams {
                reserved: v as i64,
                ..self.system
            }
            .build()
            .map_err(|e| wrap("sweep.", e))?;
        }
        for &v in sweep.c_min.iter().flatten() {
            RawParams {
                c_min: v as i64,
                ..self.system
            }
            .build()
            .map_err(|e| wrap("sweep.", e))?;
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(value_error(
                "alpha",
                format!("α must be finite and non-negative (got {})", self.alpha),
            ));
        }
        if !(self.simulation.horizon.is_finite() && self.simulation.horizon > 0.0) {
            return Err(value_error("horizon", "horizon must be positive"));
        }
        if self.simulation.replications == 0 {
            return Err(value_error(
                "replications",
                "at least one replication is required",
            ));
        }
        Ok(())
    }

    pub fn config(&self) -> Result<SystemConfig> {
        self.system.build()
    }

    /// Canonical text form; `parse(to_text())` reproduces the scenario.
    pub fn to_text(&self) -> String {
        fn list<T: ToString>(v: &[T]) -> String {
            v.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
        }
        let s = &self.system;
        let mut out = String::new();
        out.push_str("[system]\n");
        let _ = writeln!(out, "M = {}", s.bands);
        let _ = writeln!(out, "N = {}", s.channels_per_band);
        let _ = writeln!(out, "c_min = {}", s.c_min);
        let _ = writeln!(out, "r = {}", s.reserved);
        let _ = writeln!(out, "lambda_p = {}", s.lambda_p);
        let _ = match s.pu_service {
            PuService::PerBand(v) => writeln!(out, "mu_p = {v}"),
            PuService::PerChannel(v) => writeln!(out, "mu_1 = {v}"),
        };
        let _ = match s.su_service {
            SuService::AtMinimum(v) => writeln!(out, "mu_s = {v}"),
            SuService::PerChannel(v) => writeln!(out, "mu_2 = {v}"),
        };
        let _ = match s.su_load {
            SuLoad::ArrivalRate(v) => writeln!(out, "lambda_s = {v}"),
            SuLoad::Utilization(v) => writeln!(out, "rho_s = {v}"),
        };
        out.push_str("\n[sweep]\n");
        if let Some(v) = &self.sweep.lambda_p {
            let _ = writeln!(out, "lambda_p = {}", list(v));
        }
        if let Some(v) = &self.sweep.rho_s {
            let _ = writeln!(out, "rho_s = {}", list(v));
        }
        if let Some(v) = &self.sweep.r {
            let _ = writeln!(out, "r = {}", list(v));
        }
        if let Some(v) = &self.sweep.mu_1 {
            let _ = writeln!(out, "mu_1 = {}", list(v));
        }
        if let Some(v) = &self.sweep.c_min {
            let _ = writeln!(out, "c_min = {}", list(v));
        }
        out.push_str("\n[optimize]\n");
        let _ = writeln!(out, "alpha = {}", self.alpha);
        out.push_str("\n[simulation]\n");
        let _ = writeln!(out, "horizon = {}", self.simulation.horizon);
        let _ = writeln!(out, "replications = {}", self.simulation.replications);
        let _ = writeln!(out, "seed = {}", self.simulation.seed);
        let _ = writeln!(out, "policy = {}", self.policy.name());
        out
    }
}
