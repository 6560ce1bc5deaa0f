//! Tracing the steerable/unsteerable boundary: bisection along segments, random cross-sections,
//! symmetric sections and the θ-state scan.

mod section;
mod symmetric;
mod theta;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::qstate::{max_entry_diff, pauli, reduced_states, DensityMatrix, C64};
use crate::radius::{Direction, RadiusBounds, RadiusSolver, Verdict, WarmStart};

pub use section::{cross_section, write_section, ClassifiedPoint, PointClass, Section, SectionBoundary, SectionSpec};
pub use symmetric::{section_state, symmetric_section, SymmetricPoint, SymmetricSection};
pub use theta::{theta_analytic_window, theta_scan, ThetaRow, ALPHA_BA_EXACT};

/// Entries within this distance count as the same operator when detecting exact scaling.
const SAME_STATE_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BisectOptions {
    /// Target width of the bracket on the mixing parameter.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for BisectOptions {
    fn default() -> Self {
        Self { tol: 1e-3, max_iterations: 30 }
    }
}

/// Bracket `lo ≤ α* ≤ hi` on the crossing of `R = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    /// The state at `lo` is certified unsteerable (or `lo` is the start of the segment).
    pub lo: f64,
    /// The state at `hi` is certified steerable when `hi_certified`; otherwise `hi` is the end
    /// of the segment and the undecided band reaches it.
    pub hi: f64,
    pub hi_certified: bool,
    /// Whether the bracket came from the exact scaling identity instead of bisection.
    pub exact_scaling: bool,
    /// Number of bound evaluations spent.
    pub evaluations: usize,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RayOutcome {
    /// The whole segment is certified unsteerable.
    NoCrossing,
    Crossing(Bracket),
}

impl RayOutcome {
    pub fn bracket(&self) -> Option<&Bracket> {
        match self {
            RayOutcome::NoCrossing => None,
            RayOutcome::Crossing(b) => Some(b),
        }
    }
}

/// `I/2 ⊗ ρ_B` of `rho` in the frame of `direction`, expressed in the original frame.
fn noise_base(rho: &DensityMatrix, direction: Direction) -> DensityMatrix {
    let half = nalgebra::Matrix2::<C64>::identity() * C64::new(0.5, 0.0);
    let (ra, rb) = reduced_states(rho);
    let m = match direction {
        Direction::AtoB => pauli::kron(&half, rb.matrix()),
        Direction::BtoA => pauli::kron(ra.matrix(), &half),
    };
    DensityMatrix::from_hermitian(m)
}

/// Whether `start` is the noise base of `end`, so that `R(α) = R(1)/α` along the segment.
pub fn is_noise_segment(start: &DensityMatrix, end: &DensityMatrix, direction: Direction) -> bool {
    max_entry_diff(start.matrix(), noise_base(end, direction).matrix()) <= SAME_STATE_TOL
}

/// Locates the crossing on the segment `(1−α)·start + α·end`, `α ∈ [0, 1]`, where `start` is
/// unsteerable. Level sets of `R` are convex, so there is at most one crossing.
///
/// When `start` is the noise base of `end` the bracket follows from one evaluation at `α = 1`.
/// Otherwise the bracket is shrunk below `opts.tol` by bisection with false-position steps;
/// if a point lands in the undecided band the two certified ends are then bisected separately.
pub fn bisect_segment(
    solver: &RadiusSolver,
    start: &DensityMatrix,
    end: &DensityMatrix,
    direction: Direction,
    opts: &BisectOptions,
) -> Result<RayOutcome> {
    let mut warm = WarmStart::default();
    let at_end = solver.bounds_warm(end, direction, &mut warm)?;
    if is_noise_segment(start, end, direction) {
        return Ok(scaled_crossing(&at_end));
    }
    if at_end.verdict == Verdict::Unsteerable {
        return Ok(RayOutcome::NoCrossing);
    }
    let at_start = solver.bounds(start, direction)?;
    if at_start.verdict != Verdict::Unsteerable {
        return Err(Error::Bisection(format!(
            "segment start is not certified unsteerable (R_in = {}, R_out = {})",
            at_start.r_in, at_start.r_out
        )));
    }
    let mut search = Search {
        solver,
        start,
        end,
        direction,
        warm,
        evaluations: 2,
        budget: opts.max_iterations,
        tol: opts.tol,
    };
    let lo = Point { alpha: 0.0, value: at_start.r_in.to_f64() };
    let (lo, hi, hi_certified) = match at_end.verdict {
        Verdict::Steerable => {
            let hi = Point { alpha: 1.0, value: geometric_mid(&at_end) };
            match search.joint(lo, hi)? {
                Joint::Closed(lo, hi) => (lo.alpha, hi.alpha, true),
                Joint::Grey(lo, grey, hi) => {
                    let lo = search.one_sided(lo, grey, Side::Inner)?;
                    let hi = search.one_sided(grey, hi, Side::Outer)?;
                    (lo, hi, true)
                }
            }
        }
        _ => {
            let grey = Point { alpha: 1.0, value: at_end.r_in.to_f64() };
            (search.one_sided(lo, grey, Side::Inner)?, 1.0, false)
        }
    };
    Ok(RayOutcome::Crossing(Bracket { lo, hi, hi_certified, exact_scaling: false, evaluations: search.evaluations }))
}

/// [`bisect_segment`] starting from the maximally mixed state.
pub fn bisect_ray(
    solver: &RadiusSolver,
    end: &DensityMatrix,
    direction: Direction,
    opts: &BisectOptions,
) -> Result<RayOutcome> {
    bisect_segment(solver, &DensityMatrix::maximally_mixed(), end, direction, opts)
}

/// `α·R(α) = R(1)`, so the crossing lies in `[R_in(1), R_out(1)]`.
fn scaled_crossing(at_end: &RadiusBounds) -> RayOutcome {
    if at_end.r_in >= ExtReal::Finite(1.0) {
        return RayOutcome::NoCrossing;
    }
    let lo = at_end.r_in.to_f64().max(0.0);
    let r_out = at_end.r_out.to_f64();
    RayOutcome::Crossing(Bracket {
        lo,
        hi: r_out.min(1.0),
        hi_certified: r_out < 1.0,
        exact_scaling: true,
        evaluations: 1,
    })
}

fn geometric_mid(b: &RadiusBounds) -> f64 {
    (b.r_in.to_f64() * b.r_out.to_f64()).sqrt()
}

#[derive(Debug, Clone, Copy)]
struct Point {
    alpha: f64,
    /// Estimate of `R` at `alpha`, used only to choose the next point.
    value: f64,
}

enum Joint {
    Closed(Point, Point),
    Grey(Point, Point, Point),
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    /// Bisect on `R_in ≥ 1`.
    Inner,
    /// Bisect on `R_out < 1`.
    Outer,
}

struct Search<'a> {
    solver: &'a RadiusSolver,
    start: &'a DensityMatrix,
    end: &'a DensityMatrix,
    direction: Direction,
    warm: WarmStart,
    evaluations: usize,
    budget: usize,
    tol: f64,
}

impl Search<'_> {
    fn eval(&mut self, alpha: f64) -> Result<RadiusBounds> {
        self.evaluations += 1;
        self.budget = self.budget.saturating_sub(1);
        let rho = self.start.lerp(self.end, alpha);
        self.solver.bounds_warm(&rho, self.direction, &mut self.warm)
    }

    /// Next point: false position on `R − 1` in `log R`, kept away from the ends; plain
    /// bisection when the last step failed to halve the bracket or a value is unknown.
    fn next(&self, lo: Point, hi: Point, halve: bool) -> f64 {
        let mid = 0.5 * (lo.alpha + hi.alpha);
        let (fl, fh) = (lo.value.ln(), hi.value.ln());
        if halve || !fl.is_finite() || !fh.is_finite() || fl <= fh {
            return mid;
        }
        let guess = lo.alpha + (hi.alpha - lo.alpha) * fl / (fl - fh);
        // Aim just past the root so that the next step can close the bracket.
        let guard = (0.5 * self.tol).min(0.25 * (hi.alpha - lo.alpha));
        guess.clamp(lo.alpha + guard, hi.alpha - guard)
    }

    fn joint(&mut self, mut lo: Point, mut hi: Point) -> Result<Joint> {
        let mut halve = false;
        while hi.alpha - lo.alpha > self.tol && self.budget > 0 {
            let width = hi.alpha - lo.alpha;
            let alpha = self.next(lo, hi, halve);
            let b = self.eval(alpha)?;
            let p = Point { alpha, value: geometric_mid(&b) };
            match b.verdict {
                Verdict::Unsteerable => lo = p,
                Verdict::Steerable => hi = p,
                Verdict::Undecided => return Ok(Joint::Grey(lo, p, hi)),
            }
            halve = hi.alpha - lo.alpha > 0.5 * width;
        }
        Ok(Joint::Closed(lo, hi))
    }

    /// Shrinks `[lo, hi]` on one bound only; returns the certified end.
    fn one_sided(&mut self, mut lo: Point, mut hi: Point, side: Side) -> Result<f64> {
        let mut halve = false;
        while hi.alpha - lo.alpha > self.tol && self.budget > 0 {
            let width = hi.alpha - lo.alpha;
            let alpha = self.next(lo, hi, halve);
            let b = self.eval(alpha)?;
            let inconsistent = match side {
                Side::Inner => b.verdict == Verdict::Steerable,
                Side::Outer => b.verdict == Verdict::Unsteerable,
            };
            if inconsistent {
                return Err(Error::Bisection(format!(
                    "non-monotone bounds at alpha = {alpha}: R_in = {}, R_out = {} inside the undecided band",
                    b.r_in, b.r_out
                )));
            }
            let (value, below) = match side {
                Side::Inner => (b.r_in.to_f64(), b.r_in >= ExtReal::Finite(1.0)),
                Side::Outer => (b.r_out.to_f64(), b.r_out >= ExtReal::Finite(1.0)),
            };
            let p = Point { alpha, value };
            if below {
                lo = p;
            } else {
                hi = p;
            }
            halve = hi.alpha - lo.alpha > 0.5 * width;
        }
        Ok(match side {
            Side::Inner => lo.alpha,
            Side::Outer => hi.alpha,
        })
    }
}

/// Bounds in both directions.
pub fn both_directions(solver: &RadiusSolver, rho: &DensityMatrix) -> Result<(RadiusBounds, RadiusBounds)> {
    let (ab, ba) = rayon::join(|| solver.bounds(rho, Direction::AtoB), || solver.bounds(rho, Direction::BtoA));
    Ok((ab?, ba?))
}
