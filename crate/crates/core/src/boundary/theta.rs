//! The θ-state family `α|θ⟩⟨θ| + (1−α) ρ_A ⊗ I/2`, where steering can be one-way.

use serde::{Deserialize, Serialize};

use super::{bisect_segment, BisectOptions, RayOutcome};
use crate::canonical::canonicalize;
use crate::error::{invalid, Result};
use crate::qstate::{make_family, DensityMatrix, StateFamily};
use crate::radius::{analytic_bounds, tstate_analytic, uniform_bound, Direction, RadiusSolver};

/// The pure θ-state is maximally steerable from B to A, so by scaling `α*_BA = R(|θ⟩) = 1/2`.
pub const ALPHA_BA_EXACT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaRow {
    pub theta: f64,
    pub alpha_ab: RayOutcome,
    pub alpha_ba: RayOutcome,
    pub alpha_ba_exact: f64,
    /// `α*_AB` lies in this interval by the analytic lower and upper bounds on `R`.
    pub analytic_window: (f64, f64),
}

fn theta_state(theta: f64, alpha: f64) -> Result<DensityMatrix> {
    make_family(&StateFamily::Theta { theta, alpha })
}

/// Largest `α` at which the analytic lower bound still certifies `R ≥ 1`, and smallest `α` at
/// which the analytic upper bound certifies `R < 1`, both to 1e-9.
pub fn theta_analytic_window(theta: f64) -> Result<(f64, f64)> {
    if !(theta > 0.0) {
        return Err(invalid(format!("theta = {theta} must be positive")));
    }
    let bounds = |alpha: f64| -> Result<(f64, f64)> {
        let c = match canonicalize(&theta_state(theta, alpha)?) {
            Ok(c) if !c.is_degenerate() => c,
            _ => return Ok((f64::INFINITY, f64::INFINITY)),
        };
        let (lo, _) = analytic_bounds(&c)?;
        let hi = tstate_analytic(&c.s())?;
        Ok((lo.max(uniform_bound(&c)), hi))
    };
    let crossing = |pick: &dyn Fn((f64, f64)) -> f64| -> Result<f64> {
        let (mut lo, mut hi) = (0.0, 1.0);
        while hi - lo > 1e-9 {
            let mid = 0.5 * (lo + hi);
            if pick(bounds(mid)?) >= 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    };
    Ok((crossing(&|b| b.0)?, crossing(&|b| b.1)?))
}

/// Brackets `α*_AB` and `α*_BA` for each θ on the segment from `ρ_A ⊗ I/2` to `|θ⟩⟨θ|`.
/// The B→A bracket comes from one evaluation through the scaling identity.
pub fn theta_scan(solver: &RadiusSolver, thetas: &[f64], opts: &BisectOptions) -> Result<Vec<ThetaRow>> {
    thetas
        .iter()
        .map(|&theta| {
            if !(theta > 0.0) {
                return Err(invalid(format!("theta = {theta} must lie in (0, pi/4]")));
            }
            let start = theta_state(theta, 0.0)?;
            let end = theta_state(theta, 1.0)?;
            Ok(ThetaRow {
                theta,
                alpha_ab: bisect_segment(solver, &start, &end, Direction::AtoB, opts)?,
                alpha_ba: bisect_segment(solver, &start, &end, Direction::BtoA, opts)?,
                alpha_ba_exact: ALPHA_BA_EXACT,
                analytic_window: theta_analytic_window(theta)?,
            })
        })
        .collect()
}
