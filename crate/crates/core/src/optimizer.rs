//! Cost-optimal virtual reservation: minimize `ζ = α·P_FT + P_B` over the
//! integer reservation level `r ∈ [0, C − C_min]`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kpi::compute_kpis;
use crate::model::{RawParams, SuLoad, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostPoint {
    pub r: usize,
    pub alpha: f64,
    pub p_ft: f64,
    pub p_block: f64,
    pub zeta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalPolicy {
    pub config: SystemConfig,
    pub r_star: usize,
    /// One point per `r = 0..=C − C_min`.
    pub curve: Vec<CostPoint>,
}

impl OptimalPolicy {
    pub fn best(&self) -> &CostPoint {
        &self.curve[self.r_star]
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig {
            param: "alpha",
            reason: format!("α must be finite and non-negative (got {alpha})"),
        })
    }
}

/// `ζ` at the configuration's own reservation level.
pub fn objective(cfg: &SystemConfig, alpha: f64) -> Result<CostPoint> {
    check_alpha(alpha)?;
    let k = compute_kpis(cfg)?;
    Ok(CostPoint {
        r: cfg.reserved(),
        alpha,
        p_ft: k.p_ft,
        p_block: k.p_block,
        zeta: alpha * k.p_ft + k.p_block,
    })
}

/// Exhaustive search over every feasible `r`; ties go to the smallest `r`.
/// The reservation level of `template` is ignored.
pub fn optimal_reservation(template: &SystemConfig, alpha: f64) -> Result<OptimalPolicy> {
    check_alpha(alpha)?;
    let curve = (0..=template.max_reserved())
        .map(|r| objective(&template.with_reserved(r)?, alpha))
        .collect::<Result<Vec<_>>>()?;
    let r_star = curve.iter().fold(
        0,
        |best, p| if p.zeta < curve[best].zeta { p.r } else { best },
    );
    Ok(OptimalPolicy {
        config: *template,
        r_star,
        curve,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub lambda_p: f64,
    pub rho_s: f64,
    pub policy: OptimalPolicy,
}

/// One optimal policy per `(ρs, λp)` grid point, `ρs` outermost. `ρs` is
/// applied in the per-channel convention `λs = ρs·μ2`.
pub fn sweep(
    template: &SystemConfig,
    alpha: f64,
    lambda_p_grid: &[f64],
    rho_s_grid: &[f64],
) -> Result<Vec<SweepRow>> {
    check_alpha(alpha)?;
    let points: Vec<(f64, f64)> = rho_s_grid
        .iter()
        .flat_map(|&rho| lambda_p_grid.iter().map(move |&lp| (rho, lp)))
        .collect();
    points
        .into_par_iter()
        .map(|(rho_s, lambda_p)| {
            let cfg = RawParams {
                lambda_p,
                su_load: SuLoad::Utilization(rho_s),
                ..template.to_raw()
            }
            .build()?;
            Ok(SweepRow {
                lambda_p,
                rho_s,
                policy: optimal_reservation(&cfg, alpha)?,
            })
        })
        .collect()
}
