//! Random two-dimensional sections through the maximally mixed state.

use std::path::Path;

use nalgebra::{Complex, Matrix4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bisect_ray, BisectOptions, RayOutcome};
use crate::error::{invalid, Result};
use crate::extreal::ExtReal;
use crate::qstate::random::{rng, random_state_with};
use crate::qstate::{ppt_min_eigenvalue, reduced_states, DensityMatrix, POSITIVITY_TOL, C64};
use crate::radius::{Direction, RadiusBounds, RadiusSolver, Verdict};

/// How far beyond the proper states a ray extends when improper states are allowed.
pub const IMPROPER_EXTENSION: f64 = 1.5;

/// Rays stop short of the radius where a marginal becomes singular by this factor.
const MARGINAL_MARGIN: f64 = 0.99;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionSpec {
    pub seed: u64,
    pub rays: usize,
    pub polytope: String,
    /// Classified points per ray, evenly spaced in the mixing parameter.
    pub grid: usize,
    pub bisect: BisectOptions,
    pub allow_improper: bool,
}

impl Default for SectionSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            rays: 200,
            polytope: "icosa-92".into(),
            grid: 4,
            bisect: BisectOptions::default(),
            allow_improper: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointClass {
    Separable,
    EntangledUnsteerable,
    OneWayAB,
    OneWayBA,
    TwoWay,
    Uncertain,
    Improper,
}

impl PointClass {
    pub fn classify(improper: bool, ppt_min: f64, ab: Verdict, ba: Verdict) -> Self {
        use Verdict::*;
        if improper {
            return PointClass::Improper;
        }
        if ppt_min >= POSITIVITY_TOL {
            return PointClass::Separable;
        }
        match (ab, ba) {
            (Undecided, _) | (_, Undecided) => PointClass::Uncertain,
            (Steerable, Steerable) => PointClass::TwoWay,
            (Steerable, Unsteerable) => PointClass::OneWayAB,
            (Unsteerable, Steerable) => PointClass::OneWayBA,
            (Unsteerable, Unsteerable) => PointClass::EntangledUnsteerable,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PointClass::Separable => "Separable",
            PointClass::EntangledUnsteerable => "EntangledUnsteerable",
            PointClass::OneWayAB => "OneWayAB",
            PointClass::OneWayBA => "OneWayBA",
            PointClass::TwoWay => "TwoWay",
            PointClass::Uncertain => "Uncertain",
            PointClass::Improper => "Improper",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedPoint {
    pub ray_index: usize,
    pub coords: (f64, f64),
    pub class: PointClass,
    pub r_ab: RadiusBounds,
    pub r_ba: RadiusBounds,
    pub ppt_min: f64,
}

/// Crossing on one ray for one direction, in plane coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionBoundary {
    pub ray_index: usize,
    pub direction: Direction,
    pub outcome: RayOutcome,
    /// Points at the two ends of the bracket; absent without a crossing.
    pub lo: Option<(f64, f64)>,
    pub hi: Option<(f64, f64)>,
    /// The undecided band reaches the end of the ray or the bracket exceeds the tolerance.
    pub uncertain: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub spec: SectionSpec,
    pub polytope_hash: String,
    pub r_in: f64,
    pub points: Vec<ClassifiedPoint>,
    /// Boundary polylines, ordered by ray.
    pub boundary_ab: Vec<SectionBoundary>,
    pub boundary_ba: Vec<SectionBoundary>,
}

/// Orthonormal traceless directions spanning the plane through `I/4` and the anchors.
fn plane_basis(r1: &DensityMatrix, r2: &DensityMatrix) -> Result<(Matrix4<C64>, Matrix4<C64>)> {
    let centre = DensityMatrix::maximally_mixed();
    let x1 = r1.matrix() - centre.matrix();
    let x2 = r2.matrix() - centre.matrix();
    let dot = |a: &Matrix4<C64>, b: &Matrix4<C64>| (a.adjoint() * b).trace().re;
    let n1 = dot(&x1, &x1).sqrt();
    if n1 < 1e-9 {
        return Err(invalid("first anchor coincides with the maximally mixed state"));
    }
    let e1 = x1 / Complex::new(n1, 0.0);
    let r = x2 - e1 * Complex::new(dot(&e1, &x2), 0.0);
    let n2 = dot(&r, &r).sqrt();
    if n2 < 1e-9 {
        return Err(invalid("anchors are linearly dependent with the maximally mixed state"));
    }
    Ok((e1, r / Complex::new(n2, 0.0)))
}

/// `I/4 + r·D` for a traceless Hermitian `D`.
fn along(d: &Matrix4<C64>, r: f64) -> DensityMatrix {
    DensityMatrix::from_hermitian(DensityMatrix::maximally_mixed().matrix() + d * Complex::new(r, 0.0))
}

/// Radius at which the ray leaves the proper states, or the extended radius for improper runs.
fn ray_length(d: &Matrix4<C64>, allow_improper: bool) -> f64 {
    // λ_min(I/4 + D) = 1/4 + λ_min(D), and λ_min(D) < 0 for traceless D ≠ 0.
    let lam = along(d, 1.0).min_eigenvalue() - 0.25;
    let proper = -0.25 / lam;
    if !allow_improper {
        return proper;
    }
    let unit = along(d, 1.0);
    let (ra, rb) = reduced_states(&unit);
    let marginal = [ra.eigenvalues()[0], rb.eigenvalues()[0]]
        .iter()
        .map(|&m| {
            let slope = m - 0.5;
            if slope < 0.0 {
                -0.5 / slope
            } else {
                f64::INFINITY
            }
        })
        .fold(f64::INFINITY, f64::min);
    (IMPROPER_EXTENSION * proper).min(MARGINAL_MARGIN * marginal).max(proper)
}

struct RayResult {
    points: Vec<ClassifiedPoint>,
    ab: SectionBoundary,
    ba: SectionBoundary,
}

fn trace_ray(solver: &RadiusSolver, spec: &SectionSpec, k: usize, e1: &Matrix4<C64>, e2: &Matrix4<C64>) -> Result<RayResult> {
    let phi = 2.0 * std::f64::consts::PI * k as f64 / spec.rays as f64;
    let (c, s) = (phi.cos(), phi.sin());
    let d = e1 * Complex::new(c, 0.0) + e2 * Complex::new(s, 0.0);
    let length = ray_length(&d, spec.allow_improper);
    let end = along(&d, length);
    let at = |alpha: f64| (alpha * length * c, alpha * length * s);

    let boundary = |direction: Direction| -> Result<SectionBoundary> {
        let outcome = bisect_ray(solver, &end, direction, &spec.bisect)?;
        let (lo, hi, uncertain) = match outcome.bracket() {
            None => (None, None, false),
            Some(b) => (Some(at(b.lo)), Some(at(b.hi)), !b.hi_certified || b.width() > spec.bisect.tol),
        };
        Ok(SectionBoundary { ray_index: k, direction, outcome, lo, hi, uncertain })
    };
    let ab = boundary(Direction::AtoB)?;
    let ba = boundary(Direction::BtoA)?;

    let mut points = Vec::with_capacity(spec.grid);
    for g in 1..=spec.grid {
        let alpha = g as f64 / spec.grid as f64;
        let rho = along(&d, alpha * length);
        let r_ab = solver.bounds(&rho, Direction::AtoB)?;
        let r_ba = solver.bounds(&rho, Direction::BtoA)?;
        let ppt_min = ppt_min_eigenvalue(&rho);
        let class = PointClass::classify(rho.is_improper(), ppt_min, r_ab.verdict, r_ba.verdict);
        let r_ab = RadiusBounds { certificate: crate::radius::Certificate::None, ..r_ab };
        let r_ba = RadiusBounds { certificate: crate::radius::Certificate::None, ..r_ba };
        points.push(ClassifiedPoint { ray_index: k, coords: at(alpha), class, r_ab, r_ba, ppt_min });
    }
    Ok(RayResult { points, ab, ba })
}

/// Draws two seeded random states, spans the plane through `I/4`, and traces both boundaries
/// along `spec.rays` rays. Rays are independent and run in parallel; output is ordered by ray.
pub fn cross_section(spec: &SectionSpec) -> Result<Section> {
    if spec.rays < 8 {
        return Err(invalid(format!("a section needs at least 8 rays, got {}", spec.rays)));
    }
    let solver = RadiusSolver::by_name(&spec.polytope)?;
    let mut r = rng(spec.seed);
    let r1 = random_state_with(&mut r, 4)?;
    let r2 = random_state_with(&mut r, 4)?;
    let (e1, e2) = plane_basis(&r1, &r2)?;
    let rays: Vec<RayResult> =
        (0..spec.rays).into_par_iter().map(|k| trace_ray(&solver, spec, k, &e1, &e2)).collect::<Result<_>>()?;
    let mut section = Section {
        spec: spec.clone(),
        polytope_hash: solver.polytope().content_hash(),
        r_in: solver.polytope().r_in(),
        points: Vec::new(),
        boundary_ab: Vec::new(),
        boundary_ba: Vec::new(),
    };
    for ray in rays {
        section.points.extend(ray.points);
        section.boundary_ab.push(ray.ab);
        section.boundary_ba.push(ray.ba);
    }
    Ok(section)
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn ext(x: ExtReal) -> String {
    match x {
        ExtReal::Finite(v) => num(v),
        ExtReal::Infinite => "+inf".into(),
    }
}

impl Section {
    /// CSV with columns `ray_index, x, y, class, R_ab_in, R_ab_out, R_ba_in, R_ba_out, ppt_min`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["ray_index", "x", "y", "class", "R_ab_in", "R_ab_out", "R_ba_in", "R_ba_out", "ppt_min"])?;
        for p in &self.points {
            w.write_record([
                p.ray_index.to_string(),
                num(p.coords.0),
                num(p.coords.1),
                p.class.as_str().to_string(),
                ext(p.r_ab.r_in),
                ext(p.r_ab.r_out),
                ext(p.r_ba.r_in),
                ext(p.r_ba.r_out),
                num(p.ppt_min),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Sidecar record: spec, polytope, tolerances, version and the boundary polylines.
    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "spec": self.spec,
            "polytope": { "name": self.spec.polytope, "sha256": self.polytope_hash, "r_in": self.r_in },
            "tolerances": {
                "bisect_tol": self.spec.bisect.tol,
                "bisect_max_iterations": self.spec.bisect.max_iterations,
                "lp_violation_tol": crate::lp::LpOptions::default().violation_tol,
                "separable_ppt_tol": POSITIVITY_TOL,
            },
            "version": env!("CARGO_PKG_VERSION"),
            "boundary_ab": self.boundary_ab,
            "boundary_ba": self.boundary_ba,
        })
    }
}

/// Writes the CSV to `path` and the sidecar JSON next to it with extension `.json`.
pub fn write_section(section: &Section, path: &Path) -> Result<()> {
    std::fs::write(path, section.to_csv()?)?;
    let side = serde_json::to_string_pretty(&section.sidecar())?;
    std::fs::write(path.with_extension("json"), side + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_is_a_partition() {
        use Verdict::*;
        let verdicts = [Steerable, Unsteerable, Undecided];
        for &ab in &verdicts {
            for &ba in &verdicts {
                assert_eq!(PointClass::classify(true, -1.0, ab, ba), PointClass::Improper);
                assert_eq!(PointClass::classify(false, 0.0, ab, ba), PointClass::Separable);
            }
        }
        assert_eq!(PointClass::classify(false, -0.1, Steerable, Unsteerable), PointClass::OneWayAB);
        assert_eq!(PointClass::classify(false, -0.1, Unsteerable, Steerable), PointClass::OneWayBA);
        assert_eq!(PointClass::classify(false, -0.1, Undecided, Steerable), PointClass::Uncertain);
    }

    #[test]
    fn ray_length_reaches_the_boundary() {
        let mut r = rng(3);
        let a = random_state_with(&mut r, 4).unwrap();
        let b = random_state_with(&mut r, 4).unwrap();
        let (e1, _) = plane_basis(&a, &b).unwrap();
        let len = ray_length(&e1, false);
        assert!(along(&e1, len).min_eigenvalue().abs() < 1e-12);
        assert!(ray_length(&e1, true) > len);
    }
}
