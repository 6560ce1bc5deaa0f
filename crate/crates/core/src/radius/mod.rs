//! Certified brackets `[R_in, R_out]` on the critical radius, with steerability verdicts.

pub mod analytic;

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::canonical::{abnormal_radius, canonicalize, classify, CanonicalState, Normality, DEGENERACY_TOL};
use crate::error::{invalid, Error, Result};
use crate::extreal::ExtReal;
use crate::lp::axial::{build_axial_lp, solve_axial};
use crate::lp::{build_lp, solve_warm, LpOptions, LpSolution, LpStatus};
use crate::polytope::{by_name, enumerate_facet_normals, scale, FacetNormal, FacetNormalSet, SpherePolytope};
use crate::qstate::{swap_parties, DensityMatrix};

pub use analytic::{
    analytic_bounds, axial_closed_form, tstate_analytic, tstate_gradient, tstate_gradient_operator, uniform_bound,
    TStateQuadrature,
};

/// Vertex triples beyond which plane enumeration is refused.
pub const MAX_ENUMERATED_PLANES: u128 = 50_000_000;

/// Tolerance for recognising an axially symmetric canonical state.
pub const AXIAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    AtoB,
    BtoA,
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ab" | "atob" | "a->b" => Ok(Direction::AtoB),
            "ba" | "btoa" | "b->a" => Ok(Direction::BtoA),
            _ => Err(invalid(format!("unknown direction '{s}', expected 'ab' or 'ba'"))),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::AtoB => "AtoB",
            Direction::BtoA => "BtoA",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Steerable,
    Unsteerable,
    Undecided,
}

impl Verdict {
    /// Steerable iff `R_out < 1`, unsteerable iff `R_in ≥ 1`.
    pub fn from_bounds(r_in: ExtReal, r_out: ExtReal) -> Self {
        if r_out < ExtReal::Finite(1.0) {
            Verdict::Steerable
        } else if r_in >= ExtReal::Finite(1.0) {
            Verdict::Unsteerable
        } else {
            Verdict::Undecided
        }
    }
}

/// Evidence for a decided verdict, in the canonical frame of the state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// Local hidden state ensemble on the inner polytope with principal radius `R_in ≥ 1`.
    Weights { weights: Vec<f64> },
    /// Observable `(c0, c)` whose fraction on the optimal outer ensemble is `value < 1`.
    Inequality { c0: f64, c: [f64; 3], value: f64 },
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusBounds {
    #[serde(rename = "R_in")]
    pub r_in: ExtReal,
    #[serde(rename = "R_out")]
    pub r_out: ExtReal,
    pub verdict: Verdict,
    pub direction: Direction,
    pub polytope: String,
    pub certificate: Certificate,
    /// Set when a shortcut replaced the linear programs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl RadiusBounds {
    fn exact(value: ExtReal, direction: Direction, polytope: &str, reason: &str) -> Self {
        Self {
            r_in: value,
            r_out: value,
            verdict: Verdict::from_bounds(value, value),
            direction,
            polytope: polytope.to_string(),
            certificate: Certificate::None,
            reason: Some(reason.to_string()),
        }
    }

    /// Bounds for `noise_mix(ρ, α)` given those of `ρ`.
    pub fn scaled_by(&self, alpha: f64) -> Self {
        let r_in = self.r_in.scale(1.0 / alpha);
        let r_out = self.r_out.scale(1.0 / alpha);
        Self { r_in, r_out, verdict: Verdict::from_bounds(r_in, r_out), certificate: Certificate::None, ..self.clone() }
    }
}

/// Tight planes of a previous solve, used to seed the next one.
#[derive(Debug, Clone, Default)]
pub struct WarmStart {
    inner: Vec<FacetNormal>,
    outer: Vec<FacetNormal>,
}

/// Inner and outer solutions for one canonical state.
#[derive(Debug, Clone)]
pub struct LpPair {
    pub inner: LpSolution,
    pub outer: LpSolution,
}

/// A polytope with its outer companion and lazily enumerated planes, reused across states.
pub struct RadiusSolver {
    inner: SpherePolytope,
    outer: SpherePolytope,
    normals: OnceLock<(FacetNormalSet, FacetNormalSet)>,
    pub options: LpOptions,
}

impl RadiusSolver {
    pub fn new(polytope: SpherePolytope) -> Result<Self> {
        let outer = scale(&polytope, 1.0 / polytope.r_in())?;
        Ok(Self { inner: polytope, outer, normals: OnceLock::new(), options: LpOptions::default() })
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Self::new(by_name(name)?)
    }

    pub fn polytope(&self) -> &SpherePolytope {
        &self.inner
    }

    pub fn outer_polytope(&self) -> &SpherePolytope {
        &self.outer
    }

    fn normals(&self) -> Result<&(FacetNormalSet, FacetNormalSet)> {
        if let Some(n) = self.normals.get() {
            return Ok(n);
        }
        let n = self.inner.len() as u128;
        let triples = n * n.saturating_sub(1) * n.saturating_sub(2) / 6;
        if triples > MAX_ENUMERATED_PLANES {
            return Err(invalid(format!(
                "polytope '{}' has {triples} vertex triples; plane enumeration is limited to {MAX_ENUMERATED_PLANES} \
                 (axial polytopes only support axially symmetric states)",
                self.inner.name()
            )));
        }
        let inner = enumerate_facet_normals(&self.inner);
        let outer = inner.scaled(self.outer.scale_factor());
        Ok(self.normals.get_or_init(|| (inner, outer)))
    }

    pub fn bounds(&self, rho: &DensityMatrix, direction: Direction) -> Result<RadiusBounds> {
        self.bounds_warm(rho, direction, &mut WarmStart::default())
    }

    /// As [`RadiusSolver::bounds`], seeding the LPs from `warm` and storing the new tight planes.
    pub fn bounds_warm(&self, rho: &DensityMatrix, direction: Direction, warm: &mut WarmStart) -> Result<RadiusBounds> {
        let swapped;
        let rho = match direction {
            Direction::AtoB => rho,
            Direction::BtoA => {
                swapped = swap_parties(rho);
                &swapped
            }
        };
        let name = self.inner.name();
        let class = classify(rho);
        match class.kind {
            Normality::Abnormal => return Ok(RadiusBounds::exact(abnormal_radius(rho), direction, name, "abnormal")),
            Normality::Degenerate => {
                let c = canonicalize(rho)?;
                return Ok(degenerate_bounds(&c, direction, name));
            }
            Normality::Normal => {}
        }
        let c = canonicalize(rho)?;
        let pair = self.solve_canonical(&c, warm)?;
        Ok(self.assemble(&pair, direction))
    }

    /// Bounds for a canonical state given directly.
    pub fn canonical_bounds(&self, c: &CanonicalState, direction: Direction, warm: &mut WarmStart) -> Result<RadiusBounds> {
        if c.is_degenerate() {
            return Ok(degenerate_bounds(c, direction, self.inner.name()));
        }
        let pair = self.solve_canonical(c, warm)?;
        Ok(self.assemble(&pair, direction))
    }

    fn assemble(&self, pair: &LpPair, direction: Direction) -> RadiusBounds {
        let r_in = ExtReal::from(pair.inner.verified_value);
        let r_out = ExtReal::from(pair.outer.value);
        let verdict = Verdict::from_bounds(r_in, r_out);
        let certificate = match verdict {
            Verdict::Unsteerable => Certificate::Weights { weights: pair.inner.weights.clone() },
            Verdict::Steerable => match pair.outer.minimizing_normal {
                Some(n) => Certificate::Inequality { c0: n.c0, c: [n.c.x, n.c.y, n.c.z], value: pair.outer.verified_value },
                None => Certificate::None,
            },
            Verdict::Undecided => Certificate::None,
        };
        RadiusBounds {
            r_in,
            r_out,
            verdict,
            direction,
            polytope: self.inner.name().to_string(),
            certificate,
            reason: None,
        }
    }

    /// Solves the inner and outer LPs for a non-degenerate canonical state.
    pub fn solve_canonical(&self, c: &CanonicalState, warm: &mut WarmStart) -> Result<LpPair> {
        if c.is_degenerate() {
            return Err(Error::Degenerate { min_singular: c.min_singular() });
        }
        let opts = &self.options;
        let axial = self.inner.axial().and(c.axial_form(AXIAL_TOL));
        let (inner, outer) = if let Some(form) = axial {
            let c = form.to_canonical();
            let inner_lp = build_axial_lp(&c, &self.inner)?.with_warm_start(warm.inner.clone());
            let outer_lp = build_axial_lp(&c, &self.outer)?.with_warm_start(warm.outer.clone());
            rayon::join(|| solve_axial(&inner_lp, opts), || solve_axial(&outer_lp, opts))
        } else {
            let (ni, no) = self.normals()?;
            let inner_lp = build_lp(c, &self.inner, ni)?;
            let outer_lp = build_lp(c, &self.outer, no)?;
            let wi: Vec<usize> = warm.inner.iter().filter_map(|n| ni.index_of(n)).collect();
            let wo: Vec<usize> = warm.outer.iter().filter_map(|n| no.index_of(n)).collect();
            rayon::join(|| solve_warm(&inner_lp, opts, &wi), || solve_warm(&outer_lp, opts, &wo))
        };
        for (sol, which) in [(&inner, "inner"), (&outer, "outer")] {
            if sol.status != LpStatus::Optimal {
                return Err(Error::Solver(format!(
                    "{which} LP on '{}' ended with status {:?} after {} rounds",
                    self.inner.name(),
                    sol.status,
                    sol.rounds
                )));
            }
        }
        warm.inner = inner.tight_normals.iter().map(|t| t.normal).collect();
        warm.outer = outer.tight_normals.iter().map(|t| t.normal).collect();
        Ok(LpPair { inner, outer })
    }
}

/// Degenerate states are separable. Without correlations the state is a product and the
/// radius is exactly `1/‖a‖`; otherwise only `R ≥ 1` is known.
fn degenerate_bounds(c: &CanonicalState, direction: Direction, polytope: &str) -> RadiusBounds {
    if c.s().amax() < DEGENERACY_TOL {
        return RadiusBounds::exact(ExtReal::recip_of(c.a().norm()), direction, polytope, "product");
    }
    let (r_in, r_out) = (ExtReal::Finite(1.0), ExtReal::Infinite);
    RadiusBounds {
        r_in,
        r_out,
        verdict: Verdict::Unsteerable,
        direction,
        polytope: polytope.to_string(),
        certificate: Certificate::None,
        reason: Some("separable".into()),
    }
}

/// One-shot convenience wrapper around [`RadiusSolver`].
pub fn critical_radius_bounds(rho: &DensityMatrix, polytope_name: &str, direction: Direction) -> Result<RadiusBounds> {
    RadiusSolver::by_name(polytope_name)?.bounds(rho, direction)
}
