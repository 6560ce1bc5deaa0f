//! The critical-radius linear program over ensemble weights on polytope vertices.

pub mod axial;
pub mod export;
mod master;
pub mod simplex;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canonical::CanonicalState;
use crate::error::{Error, Result};
use crate::polytope::{FacetNormal, FacetNormalSet, SpherePolytope};
use master::{Cut, CutSource, Separation};
pub use export::export_lp_text;
pub use simplex::SimplexOptions;

/// Denominators below this are the `+∞` branch of the fraction and never bind.
pub const VACUOUS_TOL: f64 = 1e-12;
/// Tolerance on the normalization and barycenter of a weight vector.
pub const MINIMAL_REQUIREMENT_TOL: f64 = 1e-8;
/// Smallest weight accepted by [`principal_radius`].
pub const WEIGHT_TOL: f64 = -1e-9;

#[derive(Debug, Clone, Copy)]
pub struct LpOptions {
    /// A plane is violated when its fraction is below `t·(1 − violation_tol)`.
    pub violation_tol: f64,
    /// Most violated planes added per round; 0 picks the number of weights, at least 64.
    pub cuts_per_round: usize,
    pub max_rounds: usize,
    pub simplex: SimplexOptions,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self { violation_tol: 1e-10, cuts_per_round: 0, max_rounds: 5000, simplex: SimplexOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    NumericalTrouble,
}

/// A plane whose constraint carries a positive multiplier at the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TightNormal {
    /// Position in the [`FacetNormalSet`], when the plane came from one.
    pub index: Option<usize>,
    pub normal: FacetNormal,
    pub dual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpSolution {
    /// Optimal `t` of the restricted master; an upper bound on the LP value.
    pub value: f64,
    /// Minimum of the fraction over all planes at `weights`; a lower bound on the LP value.
    pub verified_value: f64,
    /// One weight per polytope vertex.
    pub weights: Vec<f64>,
    pub tight_normals: Vec<TightNormal>,
    /// Plane attaining `verified_value`.
    pub minimizing_normal: Option<FacetNormal>,
    pub status: LpStatus,
    pub rounds: usize,
    /// Planes in the final master problem.
    pub cuts: usize,
}

/// `‖c0·a + diag(s)·c‖`.
#[inline]
pub fn denominator(n: &FacetNormal, a: &Vector3<f64>, s: &Vector3<f64>) -> f64 {
    (n.c0 * a + s.component_mul(&n.c)).norm()
}

/// `Σ_i u_i |c0 + c·t_i| / ‖c0·a + diag(s)·c‖`, or `None` when the denominator vanishes.
pub fn fraction(
    n: &FacetNormal,
    a: &Vector3<f64>,
    s: &Vector3<f64>,
    vertices: &[Vector3<f64>],
    weights: &[f64],
) -> Option<f64> {
    let d = denominator(n, a, s);
    if d < VACUOUS_TOL {
        return None;
    }
    let num: f64 = vertices.iter().zip(weights).map(|(t, u)| u * n.eval(t).abs()).sum();
    Some(num / d)
}

/// The LP for one canonical state on one polytope.
#[derive(Debug, Clone)]
pub struct RadiusLp<'a> {
    polytope: &'a SpherePolytope,
    normals: &'a FacetNormalSet,
    a: Vector3<f64>,
    s: Vector3<f64>,
    vacuous: usize,
}

pub fn build_lp<'a>(
    canonical: &CanonicalState,
    polytope: &'a SpherePolytope,
    normals: &'a FacetNormalSet,
) -> Result<RadiusLp<'a>> {
    if canonical.is_degenerate() {
        return Err(Error::Degenerate { min_singular: canonical.min_singular() });
    }
    if normals.source_polytope != polytope.name() {
        return Err(Error::Validation(format!(
            "facet normals belong to '{}', not '{}'",
            normals.source_polytope,
            polytope.name()
        )));
    }
    let (a, s) = (canonical.a(), canonical.s());
    let vacuous = (0..normals.len())
        .into_par_iter()
        .filter(|&k| denominator(&normals.get(k), &a, &s) < VACUOUS_TOL)
        .count();
    Ok(RadiusLp { polytope, normals, a, s, vacuous })
}

impl<'a> RadiusLp<'a> {
    pub fn polytope(&self) -> &'a SpherePolytope {
        self.polytope
    }

    pub fn normals(&self) -> &'a FacetNormalSet {
        self.normals
    }

    pub fn a(&self) -> Vector3<f64> {
        self.a
    }

    pub fn s(&self) -> Vector3<f64> {
        self.s
    }

    /// Weights plus `t`.
    pub fn variable_count(&self) -> usize {
        self.polytope.len() + 1
    }

    pub fn inequality_count(&self) -> usize {
        self.normals.len() - self.vacuous
    }

    /// Normalization plus three barycenter rows.
    pub fn equality_count(&self) -> usize {
        4
    }

    pub fn vacuous_count(&self) -> usize {
        self.vacuous
    }

    /// Indices of the planes kept as constraints.
    pub fn active_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.normals.len()).filter(|&k| denominator(&self.normals.get(k), &self.a, &self.s) >= VACUOUS_TOL)
    }
}

/// Candidate ordered by `(ratio, index)` so the heap keeps the smallest.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    ratio: f64,
    index: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ratio.total_cmp(&other.ratio).then(self.index.cmp(&other.index))
    }
}

#[derive(Debug, Clone)]
struct ScanAcc {
    best: Option<Candidate>,
    top: BinaryHeap<Candidate>,
}

impl ScanAcc {
    fn new() -> Self {
        Self { best: None, top: BinaryHeap::new() }
    }

    fn push(&mut self, c: Candidate, threshold: f64, limit: usize) {
        if self.best.is_none_or(|b| c < b) {
            self.best = Some(c);
        }
        self.push_top(c, threshold, limit);
    }

    fn merge(mut self, other: Self, threshold: f64, limit: usize) -> Self {
        if let Some(b) = other.best {
            if self.best.is_none_or(|x| b < x) {
                self.best = Some(b);
            }
        }
        for c in other.top {
            self.push_top(c, threshold, limit);
        }
        self
    }

    fn push_top(&mut self, c: Candidate, threshold: f64, limit: usize) {
        if c.ratio < threshold && limit > 0 {
            if self.top.len() < limit {
                self.top.push(c);
            } else if c < *self.top.peek().expect("nonempty") {
                self.top.pop();
                self.top.push(c);
            }
        }
    }
}

/// Vertices sharing one weight variable, each carrying an equal share of it.
#[derive(Debug, Clone)]
struct WeightGroups {
    groups: Vec<Vec<usize>>,
    /// Whether the groups are antipodal pairs, making the barycenter vanish identically.
    paired: bool,
}

impl WeightGroups {
    /// Antipodal pairs when `a = 0` on an inversion-symmetric polytope. There the map
    /// `t → −t` on the weights carries the fraction of `(c0, c)` to that of `(c0, −c)`; the
    /// planes are closed under this map and the radius is concave in the weights, so the
    /// symmetrised optimum is an optimum. With `a ≠ 0` the denominators differ and it is not.
    fn for_lp(lp: &RadiusLp) -> Self {
        let p = lp.polytope;
        let v = p.vertices();
        if p.inversion_symmetric() && lp.a == Vector3::zeros() {
            let key = |x: &Vector3<f64>| [x.x.to_bits(), x.y.to_bits(), x.z.to_bits()];
            let index: std::collections::HashMap<[u64; 3], usize> =
                v.iter().enumerate().map(|(i, x)| (key(x), i)).collect();
            let mut seen = vec![false; v.len()];
            let mut groups = Vec::with_capacity(v.len() / 2);
            for i in 0..v.len() {
                if seen[i] {
                    continue;
                }
                match index.get(&key(&-v[i])) {
                    Some(&j) if j != i && !seen[j] => {
                        seen[i] = true;
                        seen[j] = true;
                        groups.push(vec![i, j]);
                    }
                    _ => return Self::singletons(v.len()),
                }
            }
            Self { groups, paired: true }
        } else {
            Self::singletons(v.len())
        }
    }

    fn singletons(n: usize) -> Self {
        Self { groups: (0..n).map(|i| vec![i]).collect(), paired: false }
    }

    fn expand(&self, w: &[f64], n: usize) -> Vec<f64> {
        let mut u = vec![0.0; n];
        for (g, &wg) in self.groups.iter().zip(w) {
            for &i in g {
                u[i] = wg / g.len() as f64;
            }
        }
        u
    }
}

/// `(c0, c)` and `(c0, −c)` have equal fractions at antipodally symmetric weights; this keeps
/// the member of each such couple whose `c` is lexicographically positive.
fn is_mirror_representative(n: &FacetNormal) -> bool {
    for x in [n.c.x, n.c.y, n.c.z] {
        if x.abs() > crate::polytope::COLLINEAR_TOL {
            return x > 0.0;
        }
    }
    true
}

/// Scans every plane, touching only the vertices with positive weight.
struct GeneralSource<'l, 'a> {
    lp: &'l RadiusLp<'a>,
    groups: WeightGroups,
    seeds: Vec<usize>,
}

impl GeneralSource<'_, '_> {
    fn cut(&self, k: usize) -> Cut {
        let n = self.lp.normals.get(k);
        let v = self.lp.polytope.vertices();
        Cut {
            key: [k as i64, 0, 0, 0],
            index: Some(k),
            normal: n,
            coeffs: self
                .groups
                .groups
                .iter()
                .map(|g| g.iter().map(|&i| n.eval(&v[i]).abs()).sum::<f64>() / g.len() as f64)
                .collect(),
            denom: denominator(&n, &self.lp.a, &self.lp.s),
        }
    }

    fn considered(&self, n: &FacetNormal) -> bool {
        !self.groups.paired || is_mirror_representative(n)
    }
}

impl CutSource for GeneralSource<'_, '_> {
    fn weight_count(&self) -> usize {
        self.groups.groups.len()
    }

    fn barycenter_rows(&self) -> Vec<Vec<f64>> {
        if self.groups.paired {
            return Vec::new();
        }
        let v = self.lp.polytope.vertices();
        (0..3).map(|c| self.groups.groups.iter().map(|g| v[g[0]][c]).collect()).collect()
    }

    fn seed_cuts(&self) -> Vec<Cut> {
        self.seeds.iter().filter(|&&k| self.considered(&self.lp.normals.get(k))).map(|&k| self.cut(k)).collect()
    }

    fn scan_is_exhaustive(&self) -> bool {
        true
    }

    fn separate(&self, weights: &[f64], threshold: f64, limit: usize, _exhaustive: bool) -> Separation {
        let verts = self.lp.polytope.vertices();
        let mut support: Vec<(Vector3<f64>, f64)> = Vec::new();
        for (g, &w) in self.groups.groups.iter().zip(weights) {
            if w > 0.0 {
                for &i in g {
                    support.push((verts[i], w / g.len() as f64));
                }
            }
        }
        let (a, s) = (self.lp.a, self.lp.s);
        let normals = self.lp.normals;
        let acc = (0..normals.len())
            .into_par_iter()
            .with_min_len(4096)
            .fold(ScanAcc::new, |mut acc, k| {
                let n = normals.get(k);
                if !self.considered(&n) {
                    return acc;
                }
                let d = denominator(&n, &a, &s);
                if d >= VACUOUS_TOL {
                    let num: f64 = support.iter().map(|(t, u)| u * n.eval(t).abs()).sum();
                    acc.push(Candidate { ratio: num / d, index: k }, threshold, limit);
                }
                acc
            })
            .reduce(ScanAcc::new, |x, y| x.merge(y, threshold, limit));
        let mut top = acc.top.into_vec();
        top.sort();
        Separation {
            min_ratio: acc.best.map_or(f64::INFINITY, |b| b.ratio),
            argmin: acc.best.map(|b| (Some(b.index), normals.get(b.index))),
            violated: top.into_iter().map(|c| self.cut(c.index)).collect(),
        }
    }
}

fn finish(outcome: master::MasterOutcome, expand: impl FnOnce(&[f64]) -> Vec<f64>) -> LpSolution {
    LpSolution {
        value: outcome.value,
        verified_value: outcome.verified_value,
        weights: expand(&outcome.weights),
        tight_normals: outcome.tight,
        minimizing_normal: outcome.minimizer.map(|(_, n)| n),
        status: outcome.status,
        rounds: outcome.rounds,
        cuts: outcome.cuts,
    }
}

fn solve_seeded(lp: &RadiusLp, seeds: Vec<usize>, opts: &LpOptions) -> LpSolution {
    let source = GeneralSource { lp, groups: WeightGroups::for_lp(lp), seeds };
    let n = lp.polytope.len();
    let mut sol = finish(master::run(&source, opts), |w| {
        if w.is_empty() {
            Vec::new()
        } else {
            source.groups.expand(w, n)
        }
    });
    if sol.status == LpStatus::Infeasible && lp.polytope.inversion_symmetric() {
        // Uniform weights are feasible here, so the solver went astray.
        sol.status = LpStatus::NumericalTrouble;
    }
    sol
}

/// Row generation seeded with the hull facets.
pub fn solve(lp: &RadiusLp) -> LpSolution {
    solve_with(lp, &LpOptions::default())
}

pub fn solve_with(lp: &RadiusLp, opts: &LpOptions) -> LpSolution {
    solve_warm(lp, opts, &[])
}

/// Row generation seeded with the hull facets and the planes `warm` (indices into the LP's
/// normal set), typically the tight planes of a nearby state.
pub fn solve_warm(lp: &RadiusLp, opts: &LpOptions, warm: &[usize]) -> LpSolution {
    let seeds: Vec<usize> = lp
        .polytope
        .hull_facet_normals()
        .iter()
        .filter_map(|f| lp.normals.index_of(f))
        .chain(warm.iter().copied().filter(|&k| k < lp.normals.len()))
        .filter(|&k| denominator(&lp.normals.get(k), &lp.a, &lp.s) >= VACUOUS_TOL)
        .collect();
    let mut seeds = seeds;
    seeds.sort_unstable();
    seeds.dedup();
    solve_seeded(lp, seeds, opts)
}

/// Solves with every plane in the master from the start.
pub fn solve_full(lp: &RadiusLp) -> LpSolution {
    solve_seeded(lp, lp.active_indices().collect(), &LpOptions::default())
}

/// Checks normalization, positivity and the barycenter of a weight vector.
pub fn check_minimal_requirement(vertices: &[Vector3<f64>], weights: &[f64]) -> Result<()> {
    if vertices.len() != weights.len() {
        return Err(Error::Validation(format!("{} weights for {} vertices", weights.len(), vertices.len())));
    }
    if let Some((i, &w)) = weights.iter().enumerate().find(|(_, &w)| w < WEIGHT_TOL || !w.is_finite()) {
        return Err(Error::MinimalRequirement(format!("weight {i} is {w:e}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > MINIMAL_REQUIREMENT_TOL {
        return Err(Error::MinimalRequirement(format!("weights sum to {total}, residual {:e}", total - 1.0)));
    }
    let bary: Vector3<f64> = vertices.iter().zip(weights).map(|(t, u)| t * *u).sum();
    if bary.norm() > MINIMAL_REQUIREMENT_TOL {
        return Err(Error::MinimalRequirement(format!("barycenter residual {:e}", bary.norm())));
    }
    Ok(())
}

/// Minimum of the fraction over all planes for fixed weights; `+∞` if every plane is vacuous.
pub fn principal_radius(
    canonical: &CanonicalState,
    vertices: &[Vector3<f64>],
    weights: &[f64],
    normals: &FacetNormalSet,
) -> Result<f64> {
    check_minimal_requirement(vertices, weights)?;
    let (a, s) = (canonical.a(), canonical.s());
    Ok((0..normals.len())
        .into_par_iter()
        .filter_map(|k| fraction(&normals.get(k), &a, &s, vertices, weights))
        .min_by(f64::total_cmp)
        .unwrap_or(f64::INFINITY))
}
