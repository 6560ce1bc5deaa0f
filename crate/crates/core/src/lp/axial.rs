//! Ring-weight LP for axially symmetric states on axial polytopes.
//!
//! With `a = (0, 0, a_z)` and `s = (s⊥, s⊥, s_z)` the fraction is invariant under rotations about
//! z and the reflection `y → −y`. The axial polytope is invariant under the dihedral group of
//! order `4q` generated by the rotation by `π/q` and that reflection, and the radius is concave in
//! the weights, so averaging an optimal ensemble over the group keeps it optimal. Weights are
//! therefore constant on each ring, leaving `p + 2` variables and one barycenter row.
//!
//! Separation sweeps pencils of planes. Every plane through three vertices contains a vertex
//! that a group element moves to azimuth 0, and the reflection then places a second vertex at
//! azimuth in `[0, π]`. Along the pencil through these two vertices the remaining vertices give
//! breakpoints, which are exactly the planes of the pencil through a third vertex.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use nalgebra::{Vector3, Vector4};
use rayon::prelude::*;

use super::master::{self, Cut, CutSource, Separation};
use super::{denominator, LpOptions, LpSolution, LpStatus, VACUOUS_TOL};
use crate::canonical::CanonicalState;
use crate::error::{Error, Result};
use crate::polytope::{AxialLayout, FacetNormal, SpherePolytope, COLLINEAR_TOL, DEDUP_GRID};

/// Cuts added per round by default.
const AXIAL_BATCH: usize = 16384;

/// Breakpoints closer than this (in angle) are treated as one plane.
const ANGLE_TIE: f64 = 1e-13;

/// Symmetric ring-weight problem for one axial state on one axial polytope.
#[derive(Debug, Clone)]
pub struct AxialLp<'a> {
    polytope: &'a SpherePolytope,
    layout: &'a AxialLayout,
    rings: Vec<Vec<usize>>,
    ring_index: Vec<usize>,
    a: Vector3<f64>,
    s: Vector3<f64>,
    warm: Vec<FacetNormal>,
}

/// Builds the ring LP. `canonical` must already be in axial form about z.
pub fn build_axial_lp<'a>(canonical: &CanonicalState, polytope: &'a SpherePolytope) -> Result<AxialLp<'a>> {
    let layout = polytope
        .axial()
        .ok_or_else(|| Error::Validation(format!("polytope '{}' is not axial", polytope.name())))?;
    if canonical.is_degenerate() {
        return Err(Error::Degenerate { min_singular: canonical.min_singular() });
    }
    let (a, s) = (canonical.a(), canonical.s());
    if a.x != 0.0 || a.y != 0.0 || s.x != s.y {
        return Err(Error::Validation("state is not in axial form about z".into()));
    }
    let mut rings = vec![Vec::new(); layout.ring_count()];
    let ring_index: Vec<usize> = (0..polytope.len()).map(|i| layout.ring_of(i)).collect();
    for (i, &j) in ring_index.iter().enumerate() {
        rings[j].push(i);
    }
    Ok(AxialLp { polytope, layout, rings, ring_index, a, s, warm: Vec::new() })
}

impl<'a> AxialLp<'a> {
    pub fn weight_count(&self) -> usize {
        self.rings.len()
    }

    /// Extra planes for the initial master, typically the tight planes of a nearby state.
    pub fn with_warm_start(mut self, normals: impl IntoIterator<Item = FacetNormal>) -> Self {
        self.warm.extend(normals);
        self
    }

    /// Representative vertex of ring `j`, at azimuth 0 for latitude rings.
    fn representative(&self, j: usize) -> usize {
        self.rings[j][0]
    }

    /// Vertices at azimuth in `[0, π]`, where poles count.
    fn in_upper_half(&self, i: usize) -> bool {
        let per = 2 * self.layout.q;
        i >= self.layout.p * per || i % per <= self.layout.q
    }

    fn coefficients(&self, n: &FacetNormal) -> Vec<f64> {
        let v = self.polytope.vertices();
        self.rings
            .iter()
            .map(|r| r.iter().map(|&i| n.eval(&v[i]).abs()).sum::<f64>() / r.len() as f64)
            .collect()
    }

    fn cut(&self, n: FacetNormal) -> Cut {
        let coeffs = self.coefficients(&n);
        Cut { key: orbit_key(&n, self.layout.q), index: None, normal: n, denom: denominator(&n, &self.a, &self.s), coeffs }
    }

    fn vertex_weights(&self, w: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.polytope.len()];
        for (r, &wr) in self.rings.iter().zip(w) {
            for &i in r {
                u[i] = wr / r.len() as f64;
            }
        }
        u
    }

    /// Minimum fraction over all vertex-triple planes at ring weights `w`, with its plane.
    pub fn principal_radius(&self, w: &[f64]) -> (f64, Option<FacetNormal>) {
        let sep = self.scan(w, f64::NEG_INFINITY, 0, true);
        (sep.min_ratio, sep.argmin.map(|(_, n)| n))
    }

    fn scan(&self, w: &[f64], threshold: f64, limit: usize, exhaustive: bool) -> Separation {
        let u = self.vertex_weights(w);
        let v = self.polytope.vertices();
        let support: Vec<usize> = (0..v.len()).filter(|&i| u[i] > 0.0).collect();
        let support_rings: Vec<usize> = (0..self.rings.len()).filter(|&j| w[j] > 0.0).collect();
        let (firsts, seconds, breaks): (Vec<usize>, Vec<usize>, Vec<usize>) = if exhaustive {
            (
                (0..self.rings.len()).map(|j| self.representative(j)).collect(),
                (0..v.len()).filter(|&i| self.in_upper_half(i)).collect(),
                (0..v.len()).collect(),
            )
        } else {
            (
                support_rings.iter().map(|&j| self.representative(j)).collect(),
                support.iter().copied().filter(|&i| self.in_upper_half(i)).collect(),
                support.clone(),
            )
        };
        // A plane is reached from its vertex in the lowest ring, so the other two vertices can
        // be restricted to rings at or above the first.
        let ring = &self.ring_index;
        let pairs: Vec<(usize, usize)> = firsts
            .iter()
            .flat_map(|&f| seconds.iter().filter(move |&&s| s != f && ring[s] >= ring[f]).map(move |&s| (f, s)))
            .collect();
        let ctx = PencilCtx { v, u: &u, a: self.a, s: self.s, breaks: &breaks, ring };
        let q = self.layout.q;
        let acc = pairs
            .par_iter()
            .with_min_len(16)
            .fold(
                || KeyedTop::new(limit),
                |mut acc, &(i1, i2)| {
                    ctx.sweep(i1, i2, |ratio, n| acc.offer(ratio, n, q, threshold));
                    acc
                },
            )
            .reduce(|| KeyedTop::new(limit), KeyedTop::merge);
        // The sweep accumulates its numerator; the reported minimum is recomputed directly.
        let argmin = acc.best.map(|(_, n)| n);
        let min_ratio = argmin
            .map(|n| super::fraction(&n, &self.a, &self.s, v, &u).unwrap_or(f64::INFINITY))
            .unwrap_or(f64::INFINITY);
        Separation {
            min_ratio,
            argmin: argmin.map(|n| (None, n)),
            violated: acc.into_sorted().into_iter().map(|n| self.cut(n)).collect(),
        }
    }
}

struct PencilCtx<'a> {
    v: &'a [Vector3<f64>],
    u: &'a [f64],
    a: Vector3<f64>,
    s: Vector3<f64>,
    breaks: &'a [usize],
    ring: &'a [usize],
}

fn lift(v: &Vector3<f64>) -> Vector4<f64> {
    Vector4::new(1.0, v.x, v.y, v.z)
}

/// Orthonormal basis of the complement of `span(x1, x2)` in R⁴.
fn complement(x1: &Vector4<f64>, x2: &Vector4<f64>) -> Option<(Vector4<f64>, Vector4<f64>)> {
    let q1 = x1.normalize();
    let r2 = x2 - q1 * q1.dot(x2);
    if r2.norm() < 1e-12 {
        return None;
    }
    let q2 = r2.normalize();
    let mut basis: Vec<Vector4<f64>> = vec![q1, q2];
    let mut candidates: Vec<Vector4<f64>> = (0..4)
        .map(|k| {
            let e = Vector4::from_fn(|i, _| if i == k { 1.0 } else { 0.0 });
            e - q1 * q1.dot(&e) - q2 * q2.dot(&e)
        })
        .collect();
    candidates.sort_by(|x, y| y.norm().total_cmp(&x.norm()));
    for c in candidates {
        let mut r = c;
        for b in &basis {
            r -= b * b.dot(&r);
        }
        if r.norm() > 1e-6 {
            basis.push(r.normalize());
        }
        if basis.len() == 4 {
            break;
        }
    }
    Some((basis[2], basis[3]))
}

impl PencilCtx<'_> {
    fn map(&self, x: &Vector4<f64>) -> Vector3<f64> {
        x[0] * self.a + self.s.component_mul(&Vector3::new(x[1], x[2], x[3]))
    }

    /// Visits every plane through vertices `i1`, `i2` and one breakpoint vertex whose ring is
    /// not below that of `i1`.
    fn sweep(&self, i1: usize, i2: usize, mut visit: impl FnMut(f64, FacetNormal)) {
        let Some((e1, e2)) = complement(&lift(&self.v[i1]), &lift(&self.v[i2])) else {
            return;
        };
        // (pseudo-angle, cos τ, sin τ, change of the numerator coefficients, visited) per breakpoint.
        let mut events: Vec<(f64, f64, f64, f64, f64, bool)> = Vec::with_capacity(self.breaks.len());
        let min_ring = self.ring[i1];
        let (mut sa, mut sb) = (0.0, 0.0);
        for &i in self.breaks {
            if i == i1 || i == i2 {
                continue;
            }
            let x = lift(&self.v[i]);
            let (al, be) = (e1.dot(&x), e2.dot(&x));
            let r = al.hypot(be);
            if r < 1e-12 {
                continue;
            }
            // Zero of al·cos τ + be·sin τ with sin τ ≥ 0. The form increases through the zero
            // at (be, −al)/r and decreases through its antipode, which fixes the sign before it.
            let (mut c, mut sn) = (be / r, -al / r);
            let mut before = -1.0;
            if sn < 0.0 || (sn == 0.0 && c < 0.0) {
                c = -c;
                sn = -sn;
                before = 1.0;
            }
            let ui = self.u[i] * before;
            sa += ui * al;
            sb += ui * be;
            let visited = self.ring[i] >= min_ring;
            events.push((1.0 - c / (c.abs() + sn), c, sn, -2.0 * ui * al, -2.0 * ui * be, visited));
        }
        events.sort_by(|x, y| x.0.total_cmp(&y.0));

        let (p, q) = (self.map(&e1), self.map(&e2));
        let (c1, c2) = (Vector3::new(e1[1], e1[2], e1[3]), Vector3::new(e2[1], e2[2], e2[3]));
        let mut k = 0;
        while k < events.len() {
            let (tau, ct, st, ..) = events[k];
            let mut end = k + 1;
            while end < events.len() && events[end].0 - tau <= ANGLE_TIE {
                end += 1;
            }
            let visited = events[k..end].iter().any(|e| e.5);
            let cnorm = (c1 * ct + c2 * st).norm();
            if visited && cnorm > COLLINEAR_TOL {
                let d = (p * ct + q * st).norm() / cnorm;
                if d >= VACUOUS_TOL {
                    let num = (sa * ct + sb * st).abs() / cnorm;
                    let plane = e1 * ct + e2 * st;
                    let n = FacetNormal::new(plane[0] / cnorm, Vector3::new(plane[1], plane[2], plane[3]) / cnorm);
                    visit(num / d, n);
                }
            }
            for e in &events[k..end] {
                sa += e.3;
                sb += e.4;
            }
            k = end;
        }
    }
}

/// Key shared by all images of a plane under the polytope's dihedral symmetry.
fn orbit_key(n: &FacetNormal, q: usize) -> [i64; 4] {
    let (mut c0, mut cz) = (n.c0, n.c.z);
    let rho = n.c.x.hypot(n.c.y);
    let mut phi = n.c.y.atan2(n.c.x);
    // Negating the plane maps azimuth φ to φ + π, which lies in the same orbit.
    let flip = if c0.abs() > COLLINEAR_TOL { c0 < 0.0 } else { cz.abs() > COLLINEAR_TOL && cz < 0.0 };
    if flip {
        c0 = -c0;
        cz = -cz;
        phi += std::f64::consts::PI;
    }
    let sector = std::f64::consts::PI / q as f64;
    phi = phi.rem_euclid(sector);
    if phi > sector / 2.0 {
        phi = sector - phi;
    }
    let g = |x: f64| (x / DEDUP_GRID).round() as i64;
    [g(c0), g(cz), g(rho), g(rho * phi)]
}

/// Smallest fractions below a threshold, one entry per orbit.
struct KeyedTop {
    limit: usize,
    best: Option<(f64, FacetNormal)>,
    order: BTreeSet<(OrdF64, [i64; 4])>,
    entries: HashMap<[i64; 4], (f64, FacetNormal)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);
impl Eq for OrdF64 {}
impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl KeyedTop {
    fn new(limit: usize) -> Self {
        Self { limit, best: None, order: BTreeSet::new(), entries: HashMap::new() }
    }

    fn offer(&mut self, ratio: f64, n: FacetNormal, q: usize, threshold: f64) {
        let better = match self.best {
            None => true,
            Some((b, bn)) => ratio < b || (ratio == b && orbit_key(&n, q) < orbit_key(&bn, q)),
        };
        if better {
            self.best = Some((ratio, n));
        }
        if ratio < threshold && self.limit > 0 {
            if self.order.len() >= self.limit && ratio > self.order.last().expect("nonempty").0 .0 {
                return;
            }
            self.insert(ratio, orbit_key(&n, q), n);
        }
    }

    fn insert(&mut self, ratio: f64, key: [i64; 4], n: FacetNormal) {
        if let Some(&(old, _)) = self.entries.get(&key) {
            if ratio >= old {
                return;
            }
            self.order.remove(&(OrdF64(old), key));
        } else if self.order.len() >= self.limit {
            let &(worst, wkey) = self.order.last().expect("nonempty");
            if (OrdF64(ratio), key) >= (worst, wkey) {
                return;
            }
            self.order.pop_last();
            self.entries.remove(&wkey);
        }
        self.order.insert((OrdF64(ratio), key));
        self.entries.insert(key, (ratio, n));
    }

    fn merge(mut self, other: Self) -> Self {
        if let Some((r, n)) = other.best {
            let better = match self.best {
                None => true,
                Some((b, _)) => r < b,
            };
            if better {
                self.best = Some((r, n));
            }
        }
        for (key, (r, n)) in other.entries {
            self.insert(r, key, n);
        }
        self
    }

    fn into_sorted(self) -> Vec<FacetNormal> {
        let entries = self.entries;
        self.order.into_iter().map(|(_, k)| entries[&k].1).collect()
    }
}

impl CutSource for AxialLp<'_> {
    fn weight_count(&self) -> usize {
        self.rings.len()
    }

    fn barycenter_rows(&self) -> Vec<Vec<f64>> {
        vec![self.layout.ring_heights()]
    }

    fn seed_cuts(&self) -> Vec<Cut> {
        let q = self.layout.q;
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for n in self.warm.iter().chain(self.polytope.hull_facet_normals()) {
            if denominator(n, &self.a, &self.s) >= VACUOUS_TOL && seen.insert(orbit_key(n, q)) {
                out.push(self.cut(*n));
            }
        }
        out
    }

    fn separate(&self, weights: &[f64], threshold: f64, limit: usize, exhaustive: bool) -> Separation {
        self.scan(weights, threshold, limit, exhaustive)
    }

    fn scan_is_exhaustive(&self) -> bool {
        false
    }

    // Scans dominate and the master stays tiny, so large batches save rounds.
    fn default_batch(&self) -> usize {
        AXIAL_BATCH
    }
}

/// Solves the ring LP; the weights returned are per vertex.
pub fn solve_axial(lp: &AxialLp, opts: &LpOptions) -> LpSolution {
    let out = master::run(lp, opts);
    let weights = if out.weights.is_empty() { Vec::new() } else { lp.vertex_weights(&out.weights) };
    let mut status = out.status;
    if status == LpStatus::Infeasible {
        status = LpStatus::NumericalTrouble;
    }
    LpSolution {
        value: out.value,
        verified_value: out.verified_value,
        weights,
        tight_normals: out.tight,
        minimizing_normal: out.minimizer.map(|(_, n)| n),
        status,
        rounds: out.rounds,
        cuts: out.cuts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{build_lp, solve};
    use crate::polytope::{axial_polytope, enumerate_facet_normals, LatitudeScheme};

    fn compare(a_z: f64, s_perp: f64, s_z: f64, p: usize, q: usize) {
        let poly = axial_polytope(p, q, LatitudeScheme::GaussLegendre).unwrap();
        let c = CanonicalState::new(Vector3::new(0.0, 0.0, a_z), Vector3::new(s_perp, s_perp, s_z));
        let normals = enumerate_facet_normals(&poly);
        let general = solve(&build_lp(&c, &poly, &normals).unwrap());
        let lp = build_axial_lp(&c, &poly).unwrap();
        let ring = solve_axial(&lp, &LpOptions::default());
        assert_eq!(ring.status, LpStatus::Optimal);
        let brute = crate::lp::principal_radius(&c, poly.vertices(), &ring.weights, &normals).unwrap();
        assert!((brute - ring.verified_value).abs() < 1e-12, "{brute} vs {}", ring.verified_value);
        assert!(
            (general.value - ring.value).abs() < 1e-9 * general.value,
            "general {} vs ring {}",
            general.value,
            ring.value
        );
        assert!((ring.verified_value - ring.value).abs() < 1e-9 * ring.value);
    }

    #[test]
    fn ring_lp_matches_general_lp() {
        compare(0.0, 1.0, 1.0, 3, 4);
        compare(0.3, 0.6, 0.9, 3, 5);
        compare(0.5, 0.8, 0.4, 4, 4);
        compare(0.2, 0.9, 0.7, 5, 7);
    }

    #[test]
    fn pencil_scan_matches_brute_force() {
        let poly = axial_polytope(3, 5, LatitudeScheme::UniformAngle).unwrap();
        let c = CanonicalState::new(Vector3::new(0.0, 0.0, 0.2), Vector3::new(0.7, 0.7, 0.5));
        let lp = build_axial_lp(&c, &poly).unwrap();
        let w: Vec<f64> = {
            let z = poly.axial().unwrap().ring_heights();
            // Nonuniform but centered: equal weight on rings mirrored in z.
            let raw: Vec<f64> = (0..z.len()).map(|j| 1.0 + (j as f64 * 0.37).sin().abs()).collect();
            let sym: Vec<f64> = (0..z.len())
                .map(|j| {
                    let m = (0..z.len()).find(|&k| (z[k] + z[j]).abs() < 1e-15).unwrap();
                    raw[j] + raw[m]
                })
                .collect();
            let total: f64 = sym.iter().sum();
            sym.iter().map(|x| x / total).collect()
        };
        let (r, _) = lp.principal_radius(&w);
        let normals = enumerate_facet_normals(&poly);
        let u = lp.vertex_weights(&w);
        let brute = crate::lp::principal_radius(&c, poly.vertices(), &u, &normals).unwrap();
        assert!((r - brute).abs() < 1e-12, "{r} vs {brute}");
    }

    #[test]
    fn orbit_key_identifies_rotated_planes() {
        let q = 5;
        let n = FacetNormal::new(0.3, Vector3::new(0.6, 0.2, 0.5).normalize());
        let rot = nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), 3.0 * std::f64::consts::PI / q as f64);
        let m = FacetNormal::new(0.3, rot * n.c);
        assert_eq!(orbit_key(&n, q), orbit_key(&m, q));
        let r = FacetNormal::new(0.3, Vector3::new(n.c.x, -n.c.y, n.c.z));
        assert_eq!(orbit_key(&n, q), orbit_key(&r, q));
        let neg = FacetNormal::new(-n.c0, -n.c);
        assert_eq!(orbit_key(&n, q), orbit_key(&neg, q));
    }
}
