use nalgebra::Vector3;
use proptest::prelude::*;
use steering_core::canonical::{canonicalize, CanonicalState};
use steering_core::lp::{build_lp, export_lp_text, principal_radius, solve, solve_full, LpStatus};
use steering_core::polytope::{enumerate_facet_normals, load_covering, FacetNormalSet, SpherePolytope};
use steering_core::qstate::random::random_state;
use steering_core::Error;

fn bell() -> CanonicalState {
    CanonicalState::new(Vector3::zeros(), Vector3::new(1.0, 1.0, 1.0))
}

fn setup(name: &str) -> (SpherePolytope, FacetNormalSet) {
    let p = load_covering(name).unwrap();
    let n = enumerate_facet_normals(&p);
    (p, n)
}

fn value(c: &CanonicalState, p: &SpherePolytope, n: &FacetNormalSet) -> f64 {
    let sol = solve(&build_lp(c, p, n).unwrap());
    assert_eq!(sol.status, LpStatus::Optimal);
    sol.verified_value
}

/// Plane through three points, as `(c0, c)` with `c0 + c·t = 0` on the plane.
fn plane(t1: &Vector3<f64>, t2: &Vector3<f64>, t3: &Vector3<f64>) -> Option<(f64, Vector3<f64>)> {
    let c = (t2 - t1).cross(&(t3 - t1));
    if c.norm() < 1e-12 {
        return None;
    }
    Some((-c.dot(t1), c))
}

#[test]
fn octahedron_brute_force_over_all_triples() {
    let (p, n) = setup("oct-6");
    let v = p.vertices();
    let u = vec![1.0 / 6.0; 6];
    let (a, s) = (Vector3::zeros(), Vector3::new(1.0, 1.0, 1.0));
    let mut best = f64::INFINITY;
    let mut triples = 0;
    for i in 0..6 {
        for j in i + 1..6 {
            for k in j + 1..6 {
                triples += 1;
                let Some((c0, c)) = plane(&v[i], &v[j], &v[k]) else { continue };
                let den = (a * c0 + s.component_mul(&c)).norm();
                let num: f64 = v.iter().zip(&u).map(|(t, w)| w * (c0 + c.dot(t)).abs()).sum();
                best = best.min(num / den);
            }
        }
    }
    assert_eq!(triples, 20);
    let r = principal_radius(&bell(), v, &u, &n).unwrap();
    assert!((r - best).abs() <= 1e-15 * best, "{r} vs {best}");
}

#[test]
fn optimal_weights_reproduce_the_value() {
    let (p, n) = setup("icosa-42");
    let c = canonicalize(&random_state(5, 4).unwrap()).unwrap();
    let sol = solve(&build_lp(&c, &p, &n).unwrap());
    let r = principal_radius(&c, p.vertices(), &sol.weights, &n).unwrap();
    assert!((r - sol.value).abs() < 1e-7, "{r} {}", sol.value);
}

#[test]
fn off_centre_weights_are_rejected() {
    let (p, n) = setup("oct-6");
    // All weight on +z and −z, tilted toward +z: barycenter 0.1·z.
    let mut u = vec![0.0; 6];
    for (i, t) in p.vertices().iter().enumerate() {
        if t.z > 0.5 {
            u[i] = 0.55;
        } else if t.z < -0.5 {
            u[i] = 0.45;
        }
    }
    let err = principal_radius(&bell(), p.vertices(), &u, &n).unwrap_err();
    assert!(matches!(err, Error::MinimalRequirement(ref m) if m.contains("barycenter")), "{err}");
}

#[test]
fn bell_on_icosa_92() {
    let (p, n) = setup("icosa-92");
    let v = value(&bell(), &p, &n);
    assert!((0.47..=0.5).contains(&v), "{v}");
}

#[test]
fn werner_inner_value_is_below_the_closed_form() {
    let (p, n) = setup("icosa-42");
    for w in [0.3, 0.6, 0.9] {
        let c = CanonicalState::new(Vector3::zeros(), Vector3::new(w, w, w));
        let v = value(&c, &p, &n);
        assert!(v <= 1.0 / (2.0 * w) + 1e-9, "{w}: {v}");
        assert!(v >= 0.9 / (2.0 * w), "{w}: {v}");
    }
}

#[test]
fn monotone_in_the_polytope() {
    let (small, ns) = setup("oct-6");
    let (big, nb) = setup("icosa-42");
    // The octahedron's vertices are among those of the 42-vertex set, so its hull is inside.
    for t in small.vertices() {
        assert!(big.vertices().iter().any(|u| (u - t).norm() < 1e-12), "{t}");
    }
    for seed in 0..5 {
        let c = canonicalize(&random_state(seed, 4).unwrap()).unwrap();
        assert!(value(&c, &small, &ns) <= value(&c, &big, &nb) + 1e-9);
    }
}

#[test]
fn export_shape() {
    let (p, n) = setup("oct-6");
    let text = export_lp_text(&build_lp(&bell(), &p, &n).unwrap());
    assert!(text.contains("Maximize"));
    let body = text.split("Subject To").nth(1).unwrap().split("Bounds").next().unwrap();
    let rows = body.lines().filter(|l| l.trim_start().contains(':')).count();
    assert_eq!(rows, 11 + 4);
    let vars: std::collections::BTreeSet<&str> =
        text.split_whitespace().filter(|w| *w == "t" || (w.starts_with('u') && w[1..].parse::<usize>().is_ok())).collect();
    assert_eq!(vars.len(), 7);
    assert!(text.trim_end().ends_with("End"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn solution_invariants(seed in any::<u64>()) {
        let (p, n) = setup("icosa-42");
        let c = canonicalize(&random_state(seed, 4).unwrap()).unwrap();
        let sol = solve(&build_lp(&c, &p, &n).unwrap());
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        prop_assert!(sol.weights.iter().all(|&w| w >= -1e-9));
        prop_assert!((sol.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        let bary: Vector3<f64> = p.vertices().iter().zip(&sol.weights).map(|(t, u)| t * *u).sum();
        prop_assert!(bary.norm() <= 1e-8);
        let recheck = principal_radius(&c, p.vertices(), &sol.weights, &n).unwrap();
        prop_assert!((recheck - sol.value).abs() <= 1e-7);
    }

    #[test]
    fn exact_scaling(seed in any::<u64>(), lambda in 0.2f64..1.0) {
        let (p, n) = setup("icosa-12");
        let c = canonicalize(&random_state(seed, 4).unwrap()).unwrap();
        let v = value(&c, &p, &n);
        let vs = value(&c.scaled(lambda), &p, &n);
        prop_assert!((vs * lambda - v).abs() <= 1e-9 * v, "{} vs {}", vs * lambda, v);
    }

    #[test]
    fn sign_invariance(seed in any::<u64>()) {
        let (p, n) = setup("icosa-12");
        let c = canonicalize(&random_state(seed, 4).unwrap()).unwrap();
        let flipped = CanonicalState::new(-c.a(), c.s());
        let (v, vf) = (value(&c, &p, &n), value(&flipped, &p, &n));
        prop_assert!((v - vf).abs() <= 1e-9 * v);
    }

    #[test]
    fn row_generation_matches_the_full_lp(seed in any::<u64>(), which in 0usize..2) {
        let (p, n) = setup(["oct-6", "icosa-12"][which]);
        let c = canonicalize(&random_state(seed, 4).unwrap()).unwrap();
        let lp = build_lp(&c, &p, &n).unwrap();
        let (rg, full) = (solve(&lp), solve_full(&lp));
        prop_assert!((rg.verified_value - full.verified_value).abs() <= 1e-9);
        // Each run's certified lower bound stays below the other's upper bound.
        prop_assert!(rg.verified_value <= full.value + 1e-12 && full.verified_value <= rg.value + 1e-12);
    }
}
