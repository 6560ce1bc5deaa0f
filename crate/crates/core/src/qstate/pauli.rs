//! Pauli matrices in the fixed order (σ0, σx, σy, σz).

use nalgebra::{Complex, Matrix2, Matrix4};

pub type C64 = Complex<f64>;

const fn c(re: f64, im: f64) -> C64 {
    Complex { re, im }
}

/// `sigma(0)` is the identity; 1, 2, 3 are x, y, z.
pub fn sigma(i: usize) -> Matrix2<C64> {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    match i {
        0 => Matrix2::new(one, z, z, one),
        1 => Matrix2::new(z, one, one, z),
        2 => Matrix2::new(z, c(0.0, -1.0), c(0.0, 1.0), z),
        3 => Matrix2::new(one, z, z, -one),
        _ => panic!("Pauli index {i} out of range"),
    }
}

pub fn kron(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, col| a[(r / 2, col / 2)] * b[(r % 2, col % 2)])
}

/// `σ_i ⊗ σ_j`, cached.
pub fn sigma2(i: usize, j: usize) -> &'static Matrix4<C64> {
    use std::sync::OnceLock;
    static TABLE: OnceLock<Vec<Matrix4<C64>>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        (0..16)
            .map(|k| kron(&sigma(k / 4), &sigma(k % 4)))
            .collect()
    });
    &table[4 * i + j]
}

/// Qubit operator `(x0 I + x·σ)`, with the real coefficients given directly.
pub fn qubit_operator(x0: f64, x: [f64; 3]) -> Matrix2<C64> {
    let mut m = sigma(0) * c(x0, 0.0);
    for (k, xk) in x.iter().enumerate() {
        m += sigma(k + 1) * c(*xk, 0.0);
    }
    m
}

/// Pauli coordinates `x_i = Tr(X σ_i)` of a 2×2 operator.
pub fn qubit_coords(m: &Matrix2<C64>) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (i, o) in out.iter_mut().enumerate() {
        *o = (m * sigma(i)).trace().re;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_algebra() {
        let i = c(0.0, 1.0);
        assert_eq!(sigma(1) * sigma(2), sigma(3) * i);
        for k in 0..4 {
            assert_eq!(sigma(k) * sigma(k), sigma(0));
        }
    }

    #[test]
    fn kron_of_identities_is_identity() {
        assert_eq!(*sigma2(0, 0), Matrix4::identity());
    }
}
