use nalgebra::{Rotation3, Vector3};
use proptest::prelude::*;
use rand::Rng;
use steering_core::canonical::{canonicalize, CanonicalState};
use steering_core::polytope::{enumerate_facet_normals, load_covering, SpherePolytope};
use steering_core::povm::{
    anneal, anneal_r4, best_two_outcome, exact_r2_inverse, inverse_fraction, povm_report, random_ensemble,
    AnnealSchedule, PovmCandidate, QubitCoeffs,
};
use steering_core::qstate::random::{random_state, rng};

fn bell() -> CanonicalState {
    CanonicalState::new(Vector3::zeros(), Vector3::new(1.0, 1.0, 1.0))
}

/// Rank-1 effects `w_i (I + m_i·σ)/2` for unit `m_i` with `Σ w_i = 2`, `Σ w_i m_i = 0`.
fn effects(dirs: &[Vector3<f64>], w: &[f64]) -> Vec<QubitCoeffs> {
    dirs.iter().zip(w).map(|(m, w)| [0.5 * w, 0.5 * w * m.x, 0.5 * w * m.y, 0.5 * w * m.z]).collect()
}

/// Random observables with `ΣZ = 0` and `√(Σ Tr Z²) = 1`.
fn random_z(r: &mut impl Rng, n: usize) -> Vec<QubitCoeffs> {
    let mut z: Vec<QubitCoeffs> = (0..n).map(|_| std::array::from_fn(|_| r.random_range(-1.0..1.0))).collect();
    for k in 0..4 {
        let mean = z.iter().map(|c| c[k]).sum::<f64>() / n as f64;
        z.iter_mut().for_each(|c| c[k] -= mean);
    }
    let norm = (2.0 * z.iter().flatten().map(|x| x * x).sum::<f64>()).sqrt();
    z.iter_mut().flatten().for_each(|x| *x /= norm);
    z
}

fn random_candidate(r: &mut impl Rng, n: usize) -> PovmCandidate {
    let rot = Rotation3::from_scaled_axis(Vector3::from_fn(|_, _| r.random_range(-3.0..3.0)));
    let (dirs, w): (Vec<Vector3<f64>>, Vec<f64>) = match n {
        2 => (vec![rot * Vector3::z(), -(rot * Vector3::z())], vec![1.0, 1.0]),
        3 => {
            let trine = (0..3).map(|k| {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                rot * Vector3::new(phi.cos(), phi.sin(), 0.0)
            });
            (trine.collect(), vec![2.0 / 3.0; 3])
        }
        4 => {
            let s = 1.0 / 3.0f64.sqrt();
            let tetra = [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];
            (tetra.iter().map(|v| rot * (Vector3::from(*v) * s)).collect(), vec![0.5; 4])
        }
        _ => unreachable!(),
    };
    PovmCandidate::new(effects(&dirs, &w), random_z(r, n)).unwrap()
}

fn fast_schedule(seed: u64) -> AnnealSchedule {
    AnnealSchedule { steps_per_temperature: 100, temperatures: 15, restarts: 3, seed, ..AnnealSchedule::default() }
}

#[test]
fn zero_observables_give_zero() {
    let p = load_covering("icosa-12").unwrap();
    let w = vec![1.0 / 12.0; 12];
    let mut cand = random_candidate(&mut rng(1), 4);
    cand.z = vec![[0.0; 4]; 4];
    assert_eq!(inverse_fraction(&bell().bloch(), p.vertices(), &w, &cand).unwrap(), 0.0);
}

#[test]
fn off_centre_weights_are_an_error() {
    let p = load_covering("oct-6").unwrap();
    let mut w = vec![1.0 / 6.0; 6];
    w[0] += 0.05;
    w[1] -= 0.05;
    let cand = random_candidate(&mut rng(2), 2);
    assert!(inverse_fraction(&bell().bloch(), p.vertices(), &w, &cand).is_err());
}

#[test]
fn random_candidates_stay_below_the_pvm_value_for_the_singlet() {
    let p = load_covering("icosa-42").unwrap();
    let n = enumerate_facet_normals(&p);
    let w = vec![1.0 / 42.0; 42];
    let c = canonicalize(&steering_core::DensityMatrix::singlet()).unwrap();
    let bound = exact_r2_inverse(&c, p.vertices(), &w, &n).unwrap();
    let mut r = rng(3);
    for k in 0..300 {
        let cand = random_candidate(&mut r, [2, 3, 4][k % 3]);
        let v = inverse_fraction(&c.bloch(), p.vertices(), &w, &cand).unwrap();
        assert!(v <= bound + 1e-9, "{v} > {bound}");
    }
}

#[test]
fn exact_r2_on_the_octahedron_matches_brute_force() {
    let p = load_covering("oct-6").unwrap();
    let n = enumerate_facet_normals(&p);
    let v = p.vertices();
    let u = vec![1.0 / 6.0; 6];
    let mut best = f64::INFINITY;
    for i in 0..6 {
        for j in i + 1..6 {
            for k in j + 1..6 {
                let c = (v[j] - v[i]).cross(&(v[k] - v[i]));
                if c.norm() < 1e-12 {
                    continue;
                }
                let c0 = -c.dot(&v[i]);
                let num: f64 = v.iter().zip(&u).map(|(t, w)| w * (c0 + c.dot(t)).abs()).sum();
                best = best.min(num / c.norm());
            }
        }
    }
    let inv = exact_r2_inverse(&bell(), v, &u, &n).unwrap();
    assert!((inv - 1.0 / best).abs() <= 1e-12 * inv, "{inv} vs {}", 1.0 / best);
}

#[test]
fn n2_slice_supremum_is_the_exact_value() {
    let p = load_covering("icosa-12").unwrap();
    let n = enumerate_facet_normals(&p);
    let w = random_ensemble(&p, 5).unwrap();
    let c = canonicalize(&random_state(9, 4).unwrap()).unwrap();
    let exact = exact_r2_inverse(&c, p.vertices(), &w, &n).unwrap();
    // Sweep the facet normals: Z = ±(c0, c), E₁ the projector along c0·a + s∘c.
    let mut sup: f64 = 0.0;
    for k in 0..n.len() {
        let f = n.get(k);
        let v = c.a() * f.c0 + c.s().component_mul(&f.c);
        if v.norm() == 0.0 {
            continue;
        }
        let m = v.normalize();
        let z = [f.c0, f.c.x, f.c.y, f.c.z];
        let norm = (4.0 * z.iter().map(|x| x * x).sum::<f64>()).sqrt();
        let z = z.map(|x| x / norm);
        let cand = PovmCandidate::new(effects(&[m, -m], &[1.0, 1.0]), vec![z, z.map(|x| -x)]).unwrap();
        sup = sup.max(inverse_fraction(&c.bloch(), p.vertices(), &w, &cand).unwrap());
    }
    assert!((sup - exact).abs() <= 1e-9 * exact, "{sup} vs {exact}");
    let (inv, _) = best_two_outcome(&c, p.vertices(), &w, &n).unwrap();
    assert!((inv - exact).abs() <= 1e-12 * exact);
}

#[test]
fn annealing_the_two_outcome_slice_recovers_r2() {
    let p = load_covering("icosa-42").unwrap();
    let n = enumerate_facet_normals(&p);
    let w = random_ensemble(&p, 11).unwrap();
    let c = canonicalize(&random_state(12, 4).unwrap()).unwrap();
    let exact = exact_r2_inverse(&c, p.vertices(), &w, &n).unwrap();
    let res = anneal(&c.bloch(), p.vertices(), &w, 2, &AnnealSchedule::default(), None).unwrap();
    assert!((1.0 / res.radius - exact).abs() <= 1e-3 * exact, "{} vs {}", res.inverse, exact);
    assert!(res.inverse <= exact + 1e-9);
}

#[test]
fn seeded_annealing_is_deterministic_and_never_worse_than_r2() {
    let p = load_covering("icosa-12").unwrap();
    let n = enumerate_facet_normals(&p);
    for seed in 0..3 {
        let w = random_ensemble(&p, 100 + seed).unwrap();
        let c = canonicalize(&random_state(seed, 4).unwrap()).unwrap();
        let exact = exact_r2_inverse(&c, p.vertices(), &w, &n).unwrap();
        let sched = fast_schedule(seed);
        let r1 = anneal_r4(&c, p.vertices(), &w, &n, &sched).unwrap();
        let r2 = anneal_r4(&c, p.vertices(), &w, &n, &sched).unwrap();
        assert_eq!(r1, r2);
        assert!(r1.inverse >= exact - 1e-9, "{} < {exact}", r1.inverse);
        r1.candidate.check().unwrap();
        assert_eq!(r1.candidate.outcomes(), 4);
    }
}

#[test]
fn schedule_validation() {
    let p = load_covering("oct-6").unwrap();
    let w = vec![1.0 / 6.0; 6];
    for bad in [
        AnnealSchedule { cooling: 1.0, ..AnnealSchedule::default() },
        AnnealSchedule { steps_per_temperature: 0, ..AnnealSchedule::default() },
        AnnealSchedule { restarts: 0, ..AnnealSchedule::default() },
    ] {
        assert!(anneal(&bell().bloch(), p.vertices(), &w, 4, &bad, None).is_err());
    }
    assert!(anneal(&bell().bloch(), p.vertices(), &w, 1, &AnnealSchedule::default(), None).is_err());
}

#[test]
fn random_ensembles() {
    let p = load_covering("icosa-42").unwrap();
    let (u1, u2) = (random_ensemble(&p, 1).unwrap(), random_ensemble(&p, 2).unwrap());
    assert_ne!(u1, u2);
    for u in [&u1, &u2] {
        assert!(u.iter().all(|&x| x >= 0.0));
        assert!((u.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        let bary: Vector3<f64> = p.vertices().iter().zip(u.iter()).map(|(t, x)| t * *x).sum();
        assert!(bary.norm() <= 1e-10);
    }
    assert_eq!(random_ensemble(&p, 1).unwrap(), u1);
    let s = 1.0 / 3.0f64.sqrt();
    let tetra = [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]];
    let tetra = SpherePolytope::from_vertices("tetra", tetra.iter().map(|v| Vector3::from(*v) * s).collect()).unwrap();
    assert!(!tetra.inversion_symmetric());
    assert!(random_ensemble(&tetra, 1).is_err());
}

#[test]
fn report_rows() {
    let p = load_covering("icosa-12").unwrap();
    let n = enumerate_facet_normals(&p);
    let rows = povm_report(&p, &n, 2, 7, &fast_schedule(0)).unwrap();
    assert_eq!(rows.len(), 2);
    for row in &rows {
        assert!(row.r4_annealed <= row.r2 * (1.0 + 1e-9));
        assert!((row.rel_gap - (row.r2 - row.r4_annealed) / row.r2).abs() < 1e-15);
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gap.csv");
    steering_core::povm::write_report(&rows, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("state_seed,ensemble_seed,r2,r4_annealed,rel_gap"));
    assert_eq!(text.lines().count(), 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn r2_inverse_scales_linearly(seed in any::<u64>(), lambda in 0.1f64..1.0) {
        let p = load_covering("icosa-12").unwrap();
        let n = enumerate_facet_normals(&p);
        let w = vec![1.0 / 12.0; 12];
        let c = canonicalize(&random_state(seed, 4).unwrap()).unwrap();
        let (x, y) = (exact_r2_inverse(&c.scaled(lambda), p.vertices(), &w, &n).unwrap(), exact_r2_inverse(&c, p.vertices(), &w, &n).unwrap());
        prop_assert!((x - lambda * y).abs() <= 1e-9 * y);
    }

    #[test]
    fn candidates_never_beat_r2_for_random_states(seed in any::<u64>()) {
        let p = load_covering("icosa-12").unwrap();
        let n = enumerate_facet_normals(&p);
        let w = random_ensemble(&p, seed).unwrap();
        let c = canonicalize(&random_state(seed, 4).unwrap()).unwrap();
        let exact = exact_r2_inverse(&c, p.vertices(), &w, &n).unwrap();
        let mut r = rng(seed);
        let cand = random_candidate(&mut r, 2);
        prop_assert!(inverse_fraction(&c.bloch(), p.vertices(), &w, &cand).unwrap() <= exact + 1e-9);
    }
}
