//! Two-qubit states, their Bloch tensors, reduced states and named families.

mod family;
mod io;
pub mod pauli;
pub mod random;

use nalgebra::{Complex, Matrix2, Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
pub use family::{make_family, noise_mix, StateFamily};
pub use io::StateSpec;
pub use pauli::C64;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
/// Least eigenvalue allowed for a proper state.
pub const POSITIVITY_TOL: f64 = -1e-10;

fn cr(x: f64) -> C64 {
    Complex::new(x, 0.0)
}

/// Two-qubit density operator, Alice ⊗ Bob. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: Matrix4<C64>,
    improper: bool,
}

impl DensityMatrix {
    /// Validates hermiticity, trace and positivity.
    pub fn new(m: Matrix4<C64>) -> Result<Self> {
        let rho = Self::new_allow_improper(m)?;
        if rho.improper {
            return Err(invalid(format!(
                "not positive semidefinite: least eigenvalue {:.3e} < {POSITIVITY_TOL:e}",
                rho.min_eigenvalue()
            )));
        }
        Ok(rho)
    }

    /// Validates hermiticity and trace; negative spectra are flagged as improper.
    pub fn new_allow_improper(m: Matrix4<C64>) -> Result<Self> {
        let dev = (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if dev > HERMITIAN_TOL {
            return Err(invalid(format!("not Hermitian: max |ρ - ρ†| = {dev:.3e}")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(invalid(format!("trace is {tr}, expected 1")));
        }
        Ok(Self::from_hermitian(m))
    }

    /// Internal constructor for matrices that are Hermitian with unit trace by construction.
    pub(crate) fn from_hermitian(m: Matrix4<C64>) -> Self {
        let m = (m + m.adjoint()) * cr(0.5);
        let improper = min_eig4(&m) < POSITIVITY_TOL;
        Self { m, improper }
    }

    pub fn maximally_mixed() -> Self {
        Self::from_hermitian(Matrix4::identity() * cr(0.25))
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalised) nonzero vector.
    pub fn from_pure(psi: &Vector4<C64>) -> Result<Self> {
        let n2 = psi.norm_squared();
        if n2 < 1e-300 {
            return Err(invalid("zero state vector"));
        }
        Ok(Self::from_hermitian(psi * psi.adjoint() / cr(n2)))
    }

    pub fn singlet() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = Vector4::new(cr(0.0), cr(h), cr(-h), cr(0.0));
        Self::from_pure(&psi).expect("nonzero")
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.m
    }

    pub fn is_improper(&self) -> bool {
        self.improper
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eig4(&self.m)
    }

    /// `(1-t)·self + t·other`.
    pub fn lerp(&self, other: &Self, t: f64) -> Self {
        Self::from_hermitian(self.m * cr(1.0 - t) + other.m * cr(t))
    }
}

/// Largest entrywise modulus of `a - b`.
pub fn max_entry_diff<const R: usize, const C: usize>(
    a: &nalgebra::SMatrix<C64, R, C>,
    b: &nalgebra::SMatrix<C64, R, C>,
) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn min_eig4(m: &Matrix4<C64>) -> f64 {
    m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Single-qubit density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitDensity {
    m: Matrix2<C64>,
}

impl QubitDensity {
    pub fn matrix(&self) -> &Matrix2<C64> {
        &self.m
    }

    pub fn bloch(&self) -> Vector3<f64> {
        let c = pauli::qubit_coords(&self.m);
        Vector3::new(c[1], c[2], c[3])
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let r = self.bloch().norm();
        [0.5 * (1.0 - r), 0.5 * (1.0 + r)]
    }
}

/// Θ = [[1, bᵀ], [a, T]] in the Pauli basis; rows index Alice, columns Bob.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochTensor {
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
    #[serde(rename = "T")]
    pub t: Matrix3<f64>,
}

impl BlochTensor {
    pub fn new(a: Vector3<f64>, b: Vector3<f64>, t: Matrix3<f64>) -> Self {
        Self { a, b, t }
    }

    /// Full 4×4 tensor with Θ00 = 1.
    pub fn theta(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|i, j| match (i, j) {
            (0, 0) => 1.0,
            (0, j) => self.b[j - 1],
            (i, 0) => self.a[i - 1],
            (i, j) => self.t[(i - 1, j - 1)],
        })
    }

    pub fn from_theta(theta: &Matrix4<f64>) -> Self {
        Self {
            a: Vector3::new(theta[(1, 0)], theta[(2, 0)], theta[(3, 0)]),
            b: Vector3::new(theta[(0, 1)], theta[(0, 2)], theta[(0, 3)]),
            t: theta.fixed_view::<3, 3>(1, 1).into_owned(),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.theta() - other.theta()).amax()
    }
}

/// Θ_ij = Tr[ρ (σ_i ⊗ σ_j)].
pub fn bloch_tensor(rho: &DensityMatrix) -> BlochTensor {
    let theta = Matrix4::from_fn(|i, j| (rho.m * pauli::sigma2(i, j)).trace().re);
    BlochTensor::from_theta(&theta)
}

/// ρ = ¼ Σ Θ_ij σ_i ⊗ σ_j. Positivity is not enforced.
pub fn density_from_bloch(theta: &BlochTensor) -> DensityMatrix {
    let th = theta.theta();
    let mut m = Matrix4::<C64>::zeros();
    for i in 0..4 {
        for j in 0..4 {
            let x = th[(i, j)];
            if x != 0.0 {
                m += pauli::sigma2(i, j) * cr(0.25 * x);
            }
        }
    }
    DensityMatrix::from_hermitian(m)
}

/// Partial traces `(ρ_A, ρ_B)`.
pub fn reduced_states(rho: &DensityMatrix) -> (QubitDensity, QubitDensity) {
    let m = &rho.m;
    let ra = Matrix2::from_fn(|r, c| m[(2 * r, 2 * c)] + m[(2 * r + 1, 2 * c + 1)]);
    let rb = Matrix2::from_fn(|r, c| m[(r, c)] + m[(2 + r, 2 + c)]);
    (QubitDensity { m: ra }, QubitDensity { m: rb })
}

/// Least eigenvalue of the partial transpose on Bob.
pub fn ppt_min_eigenvalue(rho: &DensityMatrix) -> f64 {
    let m = &rho.m;
    let pt = Matrix4::from_fn(|r, c| {
        let (r1, r2, c1, c2) = (r / 2, r % 2, c / 2, c % 2);
        m[(2 * r1 + c2, 2 * c1 + r2)]
    });
    min_eig4(&pt)
}

/// SWAP·ρ·SWAP.
pub fn swap_parties(rho: &DensityMatrix) -> DensityMatrix {
    let m = &rho.m;
    let sw = |k: usize| 2 * (k % 2) + k / 2;
    let out = Matrix4::from_fn(|r, c| m[(sw(r), sw(c))]);
    DensityMatrix { m: out, improper: rho.improper }
}

/// φ_(U,V)(ρ) = (U⊗V) ρ (U⊗V)† / Tr[...]. `v` may be any invertible matrix.
pub fn local_transform(rho: &DensityMatrix, u: &Matrix2<C64>, v: &Matrix2<C64>) -> Result<DensityMatrix> {
    let k = pauli::kron(u, v);
    let m = k * rho.m * k.adjoint();
    let tr = m.trace().re;
    if tr.abs() < 1e-14 {
        return Err(invalid("local transformation annihilates the state"));
    }
    Ok(DensityMatrix::from_hermitian(m / cr(tr)))
}
