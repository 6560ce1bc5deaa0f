//! Generalised measurements on two qubits: the n-outcome inverse fraction and an annealed
//! estimate of the 4-outcome principal radius.

use std::path::Path;

use nalgebra::{Matrix2, Matrix4, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canonical::{canonicalize, CanonicalState};
use crate::error::{invalid, Error, Result};
use crate::lp::{check_minimal_requirement, fraction, principal_radius, MINIMAL_REQUIREMENT_TOL, WEIGHT_TOL};
use crate::polytope::{FacetNormal, FacetNormalSet, SpherePolytope};
use crate::qstate::pauli::qubit_operator;
use crate::qstate::random::random_state;
use crate::qstate::{BlochTensor, C64};

pub const EFFECT_SUM_TOL: f64 = 1e-10;
pub const EFFECT_PSD_TOL: f64 = -1e-12;
pub const Z_SUM_TOL: f64 = 1e-12;
/// Denominators below this are treated as zero.
const DENOMINATOR_FLOOR: f64 = 1e-13;
const ENSEMBLE_RETRIES: usize = 10;

/// Coefficients `(x0, x)` of `x0 I + x·σ`.
pub type QubitCoeffs = [f64; 4];

fn op(c: &QubitCoeffs) -> Matrix2<C64> {
    qubit_operator(c[0], [c[1], c[2], c[3]])
}

fn coeffs(m: &Matrix2<C64>) -> QubitCoeffs {
    let p = crate::qstate::pauli::qubit_coords(m);
    [0.5 * p[0], 0.5 * p[1], 0.5 * p[2], 0.5 * p[3]]
}

fn vec3(c: &QubitCoeffs) -> Vector3<f64> {
    Vector3::new(c[1], c[2], c[3])
}

/// Effects `E_i` and observables `Z_i` in Pauli coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmCandidate {
    pub effects: Vec<QubitCoeffs>,
    pub z: Vec<QubitCoeffs>,
}

impl PovmCandidate {
    pub fn new(effects: Vec<QubitCoeffs>, z: Vec<QubitCoeffs>) -> Result<Self> {
        let c = Self { effects, z };
        c.check()?;
        Ok(c)
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    /// `ΣE = I`, `E_i ≥ 0`, `ΣZ = 0` and `Σ‖Z_i‖² = 1` (or `Z = 0`).
    pub fn check(&self) -> Result<()> {
        if self.effects.len() != self.z.len() || self.effects.is_empty() {
            return Err(invalid(format!("{} effects and {} observables", self.effects.len(), self.z.len())));
        }
        let sum_e = sum(&self.effects);
        let dev = (sum_e[0] - 1.0).abs().max(vec3(&sum_e).amax());
        if dev > EFFECT_SUM_TOL {
            return Err(invalid(format!("effects sum to identity only within {dev:e}")));
        }
        for (i, e) in self.effects.iter().enumerate() {
            let min_eig = e[0] - vec3(e).norm();
            if min_eig < EFFECT_PSD_TOL {
                return Err(invalid(format!("effect {i} has eigenvalue {min_eig:e}")));
            }
        }
        let sum_z = sum(&self.z);
        if sum_z.iter().any(|x| x.abs() > Z_SUM_TOL) {
            return Err(invalid("observables do not sum to zero"));
        }
        let norm = z_norm(&self.z);
        if norm != 0.0 && (norm - 1.0).abs() > Z_SUM_TOL {
            return Err(invalid(format!("observables have norm {norm}, expected 1")));
        }
        Ok(())
    }
}

fn sum(v: &[QubitCoeffs]) -> QubitCoeffs {
    v.iter().fold([0.0; 4], |mut acc, x| {
        for k in 0..4 {
            acc[k] += x[k];
        }
        acc
    })
}

/// Hilbert–Schmidt norm `√(Σ Tr Z_i²)`.
fn z_norm(z: &[QubitCoeffs]) -> f64 {
    (2.0 * z.iter().flat_map(|c| c.iter()).map(|x| x * x).sum::<f64>()).sqrt()
}

fn check_ensemble(state: &BlochTensor, vertices: &[Vector3<f64>], weights: &[f64]) -> Result<()> {
    if vertices.len() != weights.len() {
        return Err(invalid(format!("{} weights for {} vertices", weights.len(), vertices.len())));
    }
    if let Some((i, &w)) = weights.iter().enumerate().find(|(_, &w)| w < WEIGHT_TOL || !w.is_finite()) {
        return Err(Error::MinimalRequirement(format!("weight {i} is {w:e}")));
    }
    let total: f64 = weights.iter().sum();
    let bary: Vector3<f64> = vertices.iter().zip(weights).map(|(t, u)| t * *u).sum();
    let residual = (total - 1.0).abs().max((bary - state.b).norm());
    if residual > MINIMAL_REQUIREMENT_TOL {
        return Err(Error::MinimalRequirement(format!("ensemble does not reproduce Bob's marginal, residual {residual:e}")));
    }
    Ok(())
}

/// Inverse fraction with the numerator-dominated convention: zero whenever the numerator
/// vanishes. The ensemble is `Σ u_v (I + t_v·σ)/2` and must reproduce Bob's marginal.
pub fn inverse_fraction(
    state: &BlochTensor,
    vertices: &[Vector3<f64>],
    weights: &[f64],
    cand: &PovmCandidate,
) -> Result<f64> {
    check_ensemble(state, vertices, weights)?;
    Ok(Evaluator::new(state, vertices, weights).value(cand))
}

/// Inverse fraction without validation, for the annealer's inner loop.
struct Evaluator<'a> {
    theta: Matrix4<f64>,
    b: Vector3<f64>,
    vertices: &'a [Vector3<f64>],
    weights: &'a [f64],
}

impl<'a> Evaluator<'a> {
    fn new(state: &BlochTensor, vertices: &'a [Vector3<f64>], weights: &'a [f64]) -> Self {
        Self { theta: state.theta(), b: state.b, vertices, weights }
    }

    fn value(&self, cand: &PovmCandidate) -> f64 {
        // Tr[ρ (E⊗Z)] = eᵀ Θ z; its row-0 part cancels the offset exactly, so drop it.
        let mut num = 0.0;
        let mut offset = 0.0;
        for (e, z) in cand.effects.iter().zip(&cand.z) {
            for mu in 1..4 {
                for nu in 0..4 {
                    num += e[mu] * self.theta[(mu, nu)] * z[nu];
                }
            }
            offset += e[0] * (z[0] + vec3(z).dot(&self.b));
        }
        if num == 0.0 {
            return 0.0;
        }
        let mut top = 0.0;
        for (t, u) in self.vertices.iter().zip(self.weights) {
            let best = cand.z.iter().map(|z| z[0] + vec3(z).dot(t)).fold(f64::NEG_INFINITY, f64::max);
            top += u * best;
        }
        let den = top - offset;
        if den <= DENOMINATOR_FLOOR * z_norm(&cand.z) {
            // The denominator bounds the numerator for any ensemble with full support, so a
            // vanishing denominator carries no information.
            return 0.0;
        }
        num / den
    }
}

/// `1/r₂`, the supremum over projective measurements, from the plane enumeration.
pub fn exact_r2_inverse(c: &CanonicalState, vertices: &[Vector3<f64>], weights: &[f64], normals: &FacetNormalSet) -> Result<f64> {
    Ok(1.0 / principal_radius(c, vertices, weights, normals)?)
}

/// The two-outcome candidate attaining `1/r₂`: `Z = ±C/‖·‖`, `E₁` the projector along
/// `c0 a + diag(s) c`.
pub fn best_two_outcome(
    c: &CanonicalState,
    vertices: &[Vector3<f64>],
    weights: &[f64],
    normals: &FacetNormalSet,
) -> Result<(f64, PovmCandidate)> {
    check_minimal_requirement(vertices, weights)?;
    let (a, s) = (c.a(), c.s());
    let (k, r2) = (0..normals.len())
        .into_par_iter()
        .filter_map(|k| fraction(&normals.get(k), &a, &s, vertices, weights).map(|f| (k, f)))
        .min_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)))
        .ok_or_else(|| invalid("every plane is vacuous for this state"))?;
    Ok((1.0 / r2, two_outcome_candidate(c, &normals.get(k))))
}

fn two_outcome_candidate(c: &CanonicalState, n: &FacetNormal) -> PovmCandidate {
    let v = c.a() * n.c0 + c.s().component_mul(&n.c);
    let m = v.normalize();
    let q = [0.5, 0.5 * m.x, 0.5 * m.y, 0.5 * m.z];
    let rest = [0.5, -0.5 * m.x, -0.5 * m.y, -0.5 * m.z];
    let z = [n.c0, n.c.x, n.c.y, n.c.z];
    let neg = z.map(|x| -x);
    let mut cand = PovmCandidate { effects: vec![q, rest], z: vec![z, neg] };
    normalize_z(&mut cand.z);
    cand
}

/// Pads a candidate with empty outcomes.
fn padded(mut cand: PovmCandidate, outcomes: usize) -> PovmCandidate {
    while cand.effects.len() < outcomes {
        cand.effects.push([0.0; 4]);
        cand.z.push([0.0; 4]);
    }
    cand
}

fn normalize_z(z: &mut [QubitCoeffs]) {
    let n = z.len() as f64;
    let mean = sum(z).map(|x| x / n);
    for zi in z.iter_mut() {
        for k in 0..4 {
            zi[k] -= mean[k];
        }
    }
    let norm = z_norm(z);
    if norm > 0.0 {
        for zi in z.iter_mut() {
            for x in zi.iter_mut() {
                *x /= norm;
            }
        }
    }
}

/// Restores `ΣE = I` by `E_i → S E_i S` with `S = (ΣE)^{-1/2}`; rank is preserved.
fn sandwich(effects: &mut [QubitCoeffs]) -> bool {
    let total = sum(effects);
    let r = vec3(&total).norm();
    let (hi, lo) = (total[0] + r, total[0] - r);
    if !(lo > 1e-12) {
        return false;
    }
    let (fh, fl) = (hi.powf(-0.5), lo.powf(-0.5));
    let axis = if r > 0.0 { vec3(&total) / r } else { Vector3::zeros() };
    let half = 0.5 * (fh - fl);
    let s = op(&[0.5 * (fh + fl), half * axis.x, half * axis.y, half * axis.z]);
    for e in effects.iter_mut() {
        *e = coeffs(&(s * op(e) * s));
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub initial_temperature: f64,
    pub cooling: f64,
    pub steps_per_temperature: usize,
    pub temperatures: usize,
    /// Proposal scale at the initial temperature; shrinks with `√(T/T₀)`.
    pub step_size: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self {
            initial_temperature: 0.1,
            cooling: 0.95,
            steps_per_temperature: 200,
            temperatures: 20,
            step_size: 0.2,
            restarts: 5,
            seed: 0,
        }
    }
}

impl AnnealSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.cooling > 0.0 && self.cooling < 1.0) {
            return Err(invalid(format!("cooling factor {} outside (0, 1)", self.cooling)));
        }
        if self.steps_per_temperature == 0 || self.temperatures == 0 || self.restarts == 0 {
            return Err(invalid("annealing needs at least one step, temperature and restart"));
        }
        if !(self.initial_temperature > 0.0 && self.step_size > 0.0) {
            return Err(invalid("temperature and step size must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealResult {
    /// `1 / best inverse value`, an upper bound on `r_n`.
    pub radius: f64,
    pub inverse: f64,
    pub candidate: PovmCandidate,
}

fn random_candidate(rng: &mut ChaCha8Rng, outcomes: usize) -> PovmCandidate {
    loop {
        let mut effects: Vec<QubitCoeffs> = (0..outcomes)
            .map(|_| {
                let m = gaussian3(rng).normalize();
                let w: f64 = rng.sample(Exp1);
                [0.5 * w, 0.5 * w * m.x, 0.5 * w * m.y, 0.5 * w * m.z]
            })
            .collect();
        if sandwich(&mut effects) {
            let mut z: Vec<QubitCoeffs> = (0..outcomes).map(|_| gaussian4(rng)).collect();
            normalize_z(&mut z);
            return PovmCandidate { effects, z };
        }
    }
}

fn gaussian3(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    Vector3::from_fn(|_, _| rng.sample(StandardNormal))
}

fn gaussian4(rng: &mut ChaCha8Rng) -> QubitCoeffs {
    std::array::from_fn(|_| rng.sample(StandardNormal))
}

/// Moves one outcome: either its effect (direction and weight) or its observable.
fn propose(rng: &mut ChaCha8Rng, cand: &PovmCandidate, step: f64) -> Option<PovmCandidate> {
    let mut next = cand.clone();
    let i = rng.random_range(0..cand.outcomes());
    if rng.random_bool(0.5) {
        let e = next.effects[i];
        let w = 2.0 * e[0];
        let dir = if vec3(&e).norm() > 0.0 { vec3(&e).normalize() } else { gaussian3(rng).normalize() };
        let m = (dir + gaussian3(rng) * step).normalize();
        let w = (w.max(1e-3) * (step * rng.sample::<f64, _>(StandardNormal)).exp()).max(0.0);
        next.effects[i] = [0.5 * w, 0.5 * w * m.x, 0.5 * w * m.y, 0.5 * w * m.z];
        if !sandwich(&mut next.effects) {
            return None;
        }
    } else {
        let g = gaussian4(rng);
        for k in 0..4 {
            next.z[i][k] += step * g[k];
        }
        normalize_z(&mut next.z);
    }
    debug_assert!(next.check().is_ok(), "{:?}", next.check());
    Some(next)
}

fn chain(eval: &Evaluator<'_>, start: PovmCandidate, schedule: &AnnealSchedule, seed: u64) -> (f64, PovmCandidate) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = start;
    let mut value = eval.value(&current);
    let mut best = (value, current.clone());
    let mut temp = schedule.initial_temperature;
    for _ in 0..schedule.temperatures {
        let step = schedule.step_size * (temp / schedule.initial_temperature).sqrt();
        for _ in 0..schedule.steps_per_temperature {
            let Some(next) = propose(&mut rng, &current, step) else { continue };
            let v = eval.value(&next);
            if v >= value || rng.random::<f64>() < ((v - value) / temp).exp() {
                current = next;
                value = v;
                if value > best.0 {
                    best = (value, current.clone());
                }
            }
        }
        temp *= schedule.cooling;
    }
    // Greedy polish from the best point with a shrinking step.
    let mut step = schedule.step_size * (temp / schedule.initial_temperature).sqrt();
    let (mut value, mut current) = best;
    let mut misses = 0;
    for _ in 0..schedule.steps_per_temperature * 5 {
        let Some(next) = propose(&mut rng, &current, step) else { continue };
        let v = eval.value(&next);
        if v > value {
            (value, current) = (v, next);
            misses = 0;
        } else {
            misses += 1;
            if misses >= 20 {
                step *= 0.5;
                misses = 0;
            }
        }
    }
    (value, current)
}

/// Annealed maximum of the inverse fraction over rank-1 candidates with `outcomes` outcomes.
/// Restart 0 starts at `seed_point` when given; the result is the best over restarts.
pub fn anneal(
    state: &BlochTensor,
    vertices: &[Vector3<f64>],
    weights: &[f64],
    outcomes: usize,
    schedule: &AnnealSchedule,
    seed_point: Option<&PovmCandidate>,
) -> Result<AnnealResult> {
    schedule.validate()?;
    check_ensemble(state, vertices, weights)?;
    if outcomes < 2 {
        return Err(invalid(format!("need at least 2 outcomes, got {outcomes}")));
    }
    let eval = Evaluator::new(state, vertices, weights);
    let runs: Vec<(f64, PovmCandidate)> = (0..schedule.restarts)
        .into_par_iter()
        .map(|r| {
            let seed = schedule.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(r as u64);
            let start = match (r, seed_point) {
                (0, Some(p)) => padded(p.clone(), outcomes),
                _ => random_candidate(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5EED), outcomes),
            };
            chain(&eval, start, schedule, seed)
        })
        .collect();
    let (inverse, candidate) = runs
        .into_iter()
        .reduce(|x, y| if y.0 > x.0 { y } else { x })
        .expect("at least one restart");
    Ok(AnnealResult { radius: 1.0 / inverse, inverse, candidate })
}

/// Upper bound on `r₄` by annealing, seeded with the best two-outcome candidate so that the
/// result never exceeds `r₂`.
pub fn anneal_r4(
    c: &CanonicalState,
    vertices: &[Vector3<f64>],
    weights: &[f64],
    normals: &FacetNormalSet,
    schedule: &AnnealSchedule,
) -> Result<AnnealResult> {
    let (_, seed) = best_two_outcome(c, vertices, weights, normals)?;
    anneal(&c.bloch(), vertices, weights, 4, schedule, Some(&seed))
}

/// Positive weights satisfying the minimal requirement for Bob's marginal `I/2`.
pub fn random_ensemble(polytope: &SpherePolytope, seed: u64) -> Result<Vec<f64>> {
    if !polytope.inversion_symmetric() {
        return Err(invalid(format!("polytope '{}' is not inversion symmetric", polytope.name())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..ENSEMBLE_RETRIES {
        let mut w: Vec<f64> = (0..polytope.len()).map(|_| rng.sample(Exp1)).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        if let Some(u) = project_minimal(polytope.vertices(), &w) {
            return Ok(u);
        }
    }
    Err(Error::MinimalRequirement(format!("no feasible ensemble after {ENSEMBLE_RETRIES} draws")))
}

/// Moves `w` onto `{Σu = 1, Σu t = 0, u ≥ 0}`: least-squares projection onto the affine set,
/// clipping negative entries to zero and re-projecting the rest until none are negative.
pub fn project_minimal(vertices: &[Vector3<f64>], w: &[f64]) -> Option<Vec<f64>> {
    let n = vertices.len();
    let row = |i: usize| nalgebra::Vector4::new(1.0, vertices[i].x, vertices[i].y, vertices[i].z);
    let target = nalgebra::Vector4::new(1.0, 0.0, 0.0, 0.0);
    let mut free = vec![true; n];
    let mut u = w.to_vec();
    for _ in 0..=n {
        let mut gram = nalgebra::Matrix4::<f64>::zeros();
        let mut res = -target;
        for i in (0..n).filter(|&i| free[i]) {
            let r = row(i);
            gram += r * r.transpose();
            res += r * w[i];
        }
        let lambda = gram.try_inverse()? * res;
        let mut clipped = false;
        for i in 0..n {
            if free[i] {
                u[i] = w[i] - row(i).dot(&lambda);
                if u[i] < 0.0 {
                    free[i] = false;
                    clipped = true;
                }
            }
            if !free[i] {
                u[i] = 0.0;
            }
        }
        if !clipped {
            let total: f64 = u.iter().sum();
            let bary: Vector3<f64> = vertices.iter().zip(&u).map(|(t, x)| t * *x).sum();
            return ((total - 1.0).abs() <= 1e-10 && bary.norm() <= 1e-10).then_some(u);
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PovmReportRow {
    pub state_seed: u64,
    pub ensemble_seed: u64,
    pub r2: f64,
    pub r4_annealed: f64,
    /// `(r₂ − r₄)/r₂`.
    pub rel_gap: f64,
}

/// One row per random state: a random full-rank state in canonical form, a random ensemble,
/// the exact `r₂` and the annealed `r₄`.
pub fn povm_report(
    polytope: &SpherePolytope,
    normals: &FacetNormalSet,
    samples: usize,
    seed: u64,
    schedule: &AnnealSchedule,
) -> Result<Vec<PovmReportRow>> {
    let mut rows = Vec::with_capacity(samples);
    let mut k = 0u64;
    while rows.len() < samples {
        let state_seed = seed.wrapping_add(k);
        let ensemble_seed = seed.wrapping_add(1_000_000 + k);
        k += 1;
        let c = match canonicalize(&random_state(state_seed, 4)?) {
            Ok(c) if !c.is_degenerate() => c,
            _ => continue,
        };
        let weights = random_ensemble(polytope, ensemble_seed)?;
        let r2 = 1.0 / exact_r2_inverse(&c, polytope.vertices(), &weights, normals)?;
        let sched = AnnealSchedule { seed: schedule.seed.wrapping_add(state_seed), ..*schedule };
        let r4 = anneal_r4(&c, polytope.vertices(), &weights, normals, &sched)?.radius;
        rows.push(PovmReportRow { state_seed, ensemble_seed, r2, r4_annealed: r4, rel_gap: (r2 - r4) / r2 });
    }
    Ok(rows)
}

pub fn write_report(rows: &[PovmReportRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
