//! Sections through the plane spanned by `(a, 0)` and `(0, diag s)`, located by scaling alone.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::extreal::ExtReal;
use crate::qstate::{density_from_bloch, BlochTensor, DensityMatrix};
use crate::radius::{Direction, RadiusBounds, RadiusSolver};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricPoint {
    /// Polar angle for A→B, the fixed `x` for B→A.
    pub parameter: f64,
    /// Boundary points at `R_in` and `R_out`; `hi` is absent when `R_out = +∞`.
    pub lo: (f64, f64),
    pub hi: Option<(f64, f64)>,
    pub bounds: RadiusBounds,
    /// The boundary point lies outside the proper states.
    pub improper: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricSection {
    pub a: [f64; 3],
    pub s: [f64; 3],
    pub polytope: String,
    pub ab: Vec<SymmetricPoint>,
    pub ba: Vec<SymmetricPoint>,
}

/// The state at plane coordinates `(x, y)`: Alice vector `x·a`, correlations `y·diag(s)`.
pub fn section_state(a: &Vector3<f64>, s: &Vector3<f64>, x: f64, y: f64) -> DensityMatrix {
    density_from_bloch(&BlochTensor::new(a * x, Vector3::zeros(), Matrix3::from_diagonal(&(s * y))))
}

fn finite(r: ExtReal) -> Option<f64> {
    r.finite()
}

/// Boundary curves in both directions from `samples` evaluations each.
///
/// A→B uses `R[(λa, λs)] = R[(a, s)]/λ` on the unit circle, so the boundary along angle `φ` sits
/// at radius `R(φ)`. B→A keeps `x` fixed and scales only the correlations, so for each
/// `x ∈ (−1/‖a‖, 1/‖a‖)` the boundary sits at `y = ±R^{B→A}[(x a, ±s)]`.
/// Points outside the proper states are dropped unless `allow_improper`.
pub fn symmetric_section(
    solver: &RadiusSolver,
    a: Vector3<f64>,
    s: Vector3<f64>,
    samples: usize,
    allow_improper: bool,
) -> Result<SymmetricSection> {
    let na = a.norm();
    if !(na > 0.0) || !(s.amax() > 0.0) || !na.is_finite() || s.iter().any(|x| !x.is_finite()) {
        return Err(invalid("symmetric section needs nonzero a and s"));
    }
    if samples < 2 {
        return Err(invalid(format!("symmetric section needs at least 2 samples, got {samples}")));
    }
    let point = |parameter: f64, bounds: RadiusBounds, at: &dyn Fn(f64) -> (f64, f64)| {
        let lo = at(bounds.r_in.to_f64());
        let hi = finite(bounds.r_out).map(at);
        let probe = hi.unwrap_or(lo);
        let improper = probe.0.is_finite()
            && probe.1.is_finite()
            && section_state(&a, &s, probe.0, probe.1).is_improper();
        SymmetricPoint { parameter, lo, hi, bounds, improper }
    };

    let mut ab = Vec::with_capacity(samples);
    for k in 0..samples {
        let phi = 2.0 * PI * k as f64 / samples as f64;
        let (c, sn) = (phi.cos(), phi.sin());
        let bounds = solver.bounds(&section_state(&a, &s, c, sn), Direction::AtoB)?;
        ab.push(point(phi, bounds, &|r| (r * c, r * sn)));
    }

    let mut ba = Vec::with_capacity(2 * samples);
    for k in 0..samples {
        let x = (-1.0 + (2 * k + 1) as f64 / samples as f64) / na;
        for sign in [1.0, -1.0] {
            let bounds = solver.bounds(&section_state(&a, &s, x, sign), Direction::BtoA)?;
            ba.push(point(x, bounds, &|r| (x, sign * r)));
        }
    }

    if !allow_improper {
        ab.retain(|p| !p.improper);
        ba.retain(|p| !p.improper);
    }
    Ok(SymmetricSection { a: a.into(), s: s.into(), polytope: solver.polytope().name().to_string(), ab, ba })
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

impl SymmetricSection {
    /// CSV with columns `direction, parameter, x_lo, y_lo, x_hi, y_hi, R_in, R_out, improper`;
    /// missing outer points are written as empty fields.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["direction", "parameter", "x_lo", "y_lo", "x_hi", "y_hi", "R_in", "R_out", "improper"])?;
        for (direction, pts) in [(Direction::AtoB, &self.ab), (Direction::BtoA, &self.ba)] {
            for p in pts {
                let (xh, yh) = p.hi.map(|(x, y)| (num(x), num(y))).unwrap_or_default();
                w.write_record([
                    direction.to_string(),
                    num(p.parameter),
                    num(p.lo.0),
                    num(p.lo.1),
                    xh,
                    yh,
                    p.bounds.r_in.to_string(),
                    p.bounds.r_out.to_string(),
                    p.improper.to_string(),
                ])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_spans_are_rejected() {
        let solver = RadiusSolver::by_name("oct-6").unwrap();
        let z = Vector3::zeros();
        let v = Vector3::new(0.1, 0.2, 0.3);
        assert!(symmetric_section(&solver, z, v, 8, false).is_err());
        assert!(symmetric_section(&solver, v, z, 8, false).is_err());
    }
}
