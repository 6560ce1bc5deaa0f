//! Seeded random states and local operations.
//!
//! All draws go through `ChaCha8Rng`, which produces the same stream on every platform.

use nalgebra::{Complex, DMatrix, Matrix2, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{DensityMatrix, C64};
use crate::error::{invalid, Result};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Ginibre state `G G† / Tr(G G†)` with `G` a 4×rank complex Gaussian matrix.
pub fn random_state(seed: u64, rank: usize) -> Result<DensityMatrix> {
    random_state_with(&mut rng(seed), rank)
}

pub fn random_state_with<R: Rng + ?Sized>(rng: &mut R, rank: usize) -> Result<DensityMatrix> {
    if !(1..=4).contains(&rank) {
        return Err(invalid(format!("rank must lie in 1..=4, got {rank}")));
    }
    let g = DMatrix::from_fn(4, rank, |_, _| complex_gaussian(rng));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    let m4 = Matrix4::from_fn(|r, c| m[(r, c)] / tr);
    Ok(DensityMatrix::from_hermitian(m4))
}

/// Haar-random 2×2 unitary (QR of a Ginibre matrix with phase fix).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R) -> Matrix2<C64> {
    let g = Matrix2::from_fn(|_, _| complex_gaussian(rng));
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut phases = Matrix2::<C64>::identity();
    for k in 0..2 {
        let d = r[(k, k)];
        phases[(k, k)] = if d.norm() > 0.0 { d / d.norm() } else { Complex::new(1.0, 0.0) };
    }
    q * phases
}

/// Random invertible 2×2 filter with condition number bounded by construction.
pub fn random_filter<R: Rng + ?Sized>(rng: &mut R) -> Matrix2<C64> {
    let u = random_unitary(rng);
    let w = random_unitary(rng);
    let d1: f64 = rng.random_range(0.5..2.0);
    let d2: f64 = rng.random_range(0.5..2.0);
    let d = Matrix2::new(Complex::new(d1, 0.0), Complex::new(0.0, 0.0), Complex::new(0.0, 0.0), Complex::new(d2, 0.0));
    u * d * w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_reproducible_and_distinct() {
        let a = random_state(7, 4).unwrap();
        let b = random_state(7, 4).unwrap();
        let c = random_state(8, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(!a.is_improper());
    }

    #[test]
    fn rank_one_is_pure() {
        let rho = random_state(1, 1).unwrap();
        let purity = (rho.matrix() * rho.matrix()).trace().re;
        assert!((purity - 1.0).abs() < 1e-12);
        assert!(random_state(1, 0).is_err());
        assert!(random_state(1, 5).is_err());
    }

    #[test]
    fn unitary_is_unitary() {
        let mut r = rng(3);
        let u = random_unitary(&mut r);
        let e = (u * u.adjoint() - Matrix2::identity()).norm();
        assert!(e < 1e-13);
    }
}
