use approx::assert_abs_diff_eq;
use nalgebra::{Complex, Matrix3, Vector3};
use proptest::prelude::*;
use steering_core::qstate::random::{random_state, random_unitary, rng};
use steering_core::qstate::{
    bloch_tensor, density_from_bloch, local_transform, make_family, noise_mix, ppt_min_eigenvalue, reduced_states,
    swap_parties, BlochTensor, DensityMatrix, StateFamily, StateSpec,
};

fn werner(w: f64) -> DensityMatrix {
    make_family(&StateFamily::Werner { w }).unwrap()
}

#[test]
fn round_trip_over_one_hundred_seeds() {
    for seed in 0..100 {
        let rho = random_state(seed, 1 + (seed as usize % 4)).unwrap();
        let back = density_from_bloch(&bloch_tensor(&rho));
        let diff = (back.matrix() - rho.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12, "seed {seed}: {diff:e}");
    }
}

#[test]
fn singlet_from_tensor() {
    let th = BlochTensor::new(Vector3::zeros(), Vector3::zeros(), -Matrix3::identity());
    let rho = density_from_bloch(&th);
    let diff = (rho.matrix() - DensityMatrix::singlet().matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(diff < 1e-15);
    let id = density_from_bloch(&BlochTensor::new(Vector3::zeros(), Vector3::zeros(), Matrix3::zeros()));
    assert_eq!(id, DensityMatrix::maximally_mixed());
}

#[test]
fn werner_ppt_threshold_is_one_third() {
    // Oracle: the partial transpose of a Werner state has eigenvalues (1+w)/4 (×3) and (1−3w)/4.
    for k in 0..=300 {
        let w = k as f64 / 300.0;
        let expect = ((1.0 + w) / 4.0).min((1.0 - 3.0 * w) / 4.0);
        assert_abs_diff_eq!(ppt_min_eigenvalue(&werner(w)), expect, epsilon = 1e-12);
    }
    assert!(ppt_min_eigenvalue(&werner(1.0 / 3.0 + 1e-9)) < 0.0);
    assert!(ppt_min_eigenvalue(&werner(1.0 / 3.0 - 1e-9)) > 0.0);
}

#[test]
fn theta_family_limits() {
    let theta = 0.6;
    let product = make_family(&StateFamily::Theta { theta, alpha: 0.0 }).unwrap();
    assert!(ppt_min_eigenvalue(&product) >= -1e-12);
    let pure = make_family(&StateFamily::Theta { theta, alpha: 1.0 }).unwrap();
    let (_, rb) = reduced_states(&pure);
    assert_abs_diff_eq!(rb.matrix()[(0, 0)].re, (theta / 2.0f64).cos().powi(2), epsilon = 1e-15);
    let swapped = swap_parties(&make_family(&StateFamily::Theta { theta, alpha: 0.4 }).unwrap());
    let (ra_new, _) = reduced_states(&swapped);
    let (_, rb_old) = reduced_states(&make_family(&StateFamily::Theta { theta, alpha: 0.4 }).unwrap());
    assert_abs_diff_eq!((ra_new.matrix() - rb_old.matrix()).norm(), 0.0, epsilon = 1e-15);
}

#[test]
fn out_of_range_parameters_are_rejected() {
    assert!(make_family(&StateFamily::Werner { w: 1.2 }).is_err());
    assert!(make_family(&StateFamily::Theta { theta: 1.0, alpha: 0.5 }).is_err());
    assert!(make_family(&StateFamily::Tstate { s: [1.5, 0.0, 0.0] }).is_err());
    assert!(make_family(&StateFamily::Random { seed: 1, rank: 5 }).is_err());
}

#[test]
fn state_file_forms() {
    let f = StateSpec::from_json_str(r#"{"family": {"tag": "werner", "w": 0.25}}"#).unwrap().build().unwrap();
    assert_eq!(f, werner(0.25));
    let b = StateSpec::from_json_str(r#"{"bloch": {"a": [0,0,0], "b": [0,0,0], "T": [[-0.25,0,0],[0,-0.25,0],[0,0,-0.25]]}}"#)
        .unwrap()
        .build()
        .unwrap();
    assert!((b.matrix() - f.matrix()).norm() < 1e-15);
    assert!(StateSpec::from_json_str(r#"{"bloch": {"a":[0,0,0],"b":[0,0,0],"T":0}, "family": {"tag":"werner","w":0.1}}"#).is_err());
    assert!(StateSpec::from_json_str("{}").is_err());
}

#[test]
fn improper_states_need_the_flag() {
    let mut m = DensityMatrix::maximally_mixed().matrix().clone();
    m[(0, 0)] = Complex::new(0.7, 0.0);
    m[(3, 3)] = Complex::new(-0.2, 0.0);
    assert!(DensityMatrix::new(m).is_err());
    assert!(DensityMatrix::new_allow_improper(m).unwrap().is_improper());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn proper_states_have_bounded_bloch_data(seed in any::<u64>(), rank in 1usize..=4) {
        let th = bloch_tensor(&random_state(seed, rank).unwrap());
        prop_assert!(th.a.norm() <= 1.0 + 1e-9);
        prop_assert!(th.b.norm() <= 1.0 + 1e-9);
        let sv = th.t.singular_values();
        prop_assert!(sv.max() <= 1.0 + 1e-9);
    }

    #[test]
    fn noise_line_preserves_bob_marginal(seed in any::<u64>(), alpha in 0.0f64..=1.0) {
        let rho = random_state(seed, 4).unwrap();
        let mixed = noise_mix(&rho, alpha);
        let (a0, b0) = reduced_states(&rho);
        let (a1, b1) = reduced_states(&mixed);
        prop_assert!((b0.matrix() - b1.matrix()).norm() < 1e-12);
        // Alice's marginal moves toward I/2 along the line.
        let half = nalgebra::Matrix2::<Complex<f64>>::identity() * Complex::new(0.5 * (1.0 - alpha), 0.0);
        prop_assert!((a0.matrix() * Complex::new(alpha, 0.0) + half - a1.matrix()).norm() < 1e-12);
    }

    #[test]
    fn products_are_ppt(s1 in any::<u64>(), s2 in any::<u64>()) {
        let mut r = rng(s1 ^ s2.rotate_left(17));
        let u = random_unitary(&mut r);
        let pa = random_state(s1, 4).unwrap();
        let pb = random_state(s2, 4).unwrap();
        let (ra, _) = reduced_states(&pa);
        let (_, rb) = reduced_states(&pb);
        let product = DensityMatrix::new(steering_core::qstate::pauli::kron(ra.matrix(), rb.matrix())).unwrap();
        let rotated = local_transform(&product, &u, &u).unwrap();
        prop_assert!(ppt_min_eigenvalue(&product) >= -1e-12);
        prop_assert!(ppt_min_eigenvalue(&rotated) >= -1e-12);
        // Tensor factorises: T = a bᵀ.
        let th = bloch_tensor(&product);
        prop_assert!((th.t - th.a * th.b.transpose()).amax() < 1e-12);
    }

    #[test]
    fn swap_is_an_involution(seed in any::<u64>()) {
        let rho = random_state(seed, 3).unwrap();
        let back = swap_parties(&swap_parties(&rho));
        prop_assert_eq!(back, rho.clone());
        let (t0, t1) = (bloch_tensor(&rho), bloch_tensor(&swap_parties(&rho)));
        prop_assert!((t0.a - t1.b).amax() < 1e-15 && (t0.t.transpose() - t1.t).amax() < 1e-15);
    }
}
