//! Normal / abnormal / degenerate classification and the canonical form `(a, diag(s))`.

use nalgebra::{Complex, Matrix2, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::qstate::{bloch_tensor, local_transform, reduced_states, BlochTensor, DensityMatrix, C64};

/// `1 - λ_max(ρ_B)` below this marks an abnormal state.
pub const PURITY_TOL: f64 = 1e-10;
/// Smallest canonical singular value below this marks a degenerate state.
pub const DEGENERACY_TOL: f64 = 1e-10;
/// Eigenvalue floor used when forming `ρ_B^{-1/2}`.
pub const FILTER_FLOOR: f64 = 1e-12;
/// Tolerance for the product test `T = a bᵀ` of abnormal states.
pub const PRODUCT_TOL: f64 = 1e-8;
/// Entries of the canonical `a` below this are rounding noise and set to zero.
pub const A_NOISE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Normality {
    Normal,
    Abnormal,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalityClass {
    pub kind: Normality,
    /// `1 - λ_max(ρ_B)`.
    pub purity_gap: f64,
    /// Smallest canonical singular value; absent for abnormal states.
    pub min_singular: Option<f64>,
}

/// Everything needed to replay the reduction on the original state.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalTransform {
    /// Bob's filter `V = ρ_B^{-1/2}`.
    pub filter: Matrix2<C64>,
    /// Trace of the filtered operator before renormalisation.
    pub normalization: f64,
    /// Left orthogonal factor: canonical `a = Lᵀ a₁`.
    pub l: Matrix3<f64>,
    /// Right orthogonal factor: `T₁ = L diag(s) R`.
    pub r: Matrix3<f64>,
    /// Reflections absorbed into `L` (and `R`) to make `a ≥ 0` componentwise; `-1` where flipped.
    pub signs: [f64; 3],
}

impl CanonicalTransform {
    /// Re-applies the reduction to `rho`, returning the resulting Bloch tensor.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<BlochTensor> {
        let id = Matrix2::identity();
        let filtered = local_transform(rho, &id, &self.filter)?;
        let th = bloch_tensor(&filtered);
        let lt = self.l.transpose();
        Ok(BlochTensor::new(lt * th.a, th.b, lt * th.t * self.r.transpose()))
    }
}

/// Canonical parameters `(a, s)` of a normal state. `s` is sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalState {
    a: Vector3<f64>,
    s: Vector3<f64>,
    transform: Option<CanonicalTransform>,
}

impl CanonicalState {
    /// Builds canonical parameters directly, without a source state. Any sign of `s` is
    /// accepted so that the scaling and sign identities can be probed.
    pub fn new(a: Vector3<f64>, s: Vector3<f64>) -> Self {
        Self { a, s, transform: None }
    }

    pub fn a(&self) -> Vector3<f64> {
        self.a
    }

    pub fn s(&self) -> Vector3<f64> {
        self.s
    }

    pub fn transform(&self) -> Option<&CanonicalTransform> {
        self.transform.as_ref()
    }

    pub fn min_singular(&self) -> f64 {
        self.s.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min)
    }

    pub fn is_degenerate(&self) -> bool {
        self.min_singular() < DEGENERACY_TOL
    }

    pub fn bloch(&self) -> BlochTensor {
        BlochTensor::new(self.a, Vector3::zeros(), Matrix3::from_diagonal(&self.s))
    }

    pub fn density(&self) -> DensityMatrix {
        crate::qstate::density_from_bloch(&self.bloch())
    }

    /// `(λa, λs)`: the canonical form of the noise-mixed state.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self::new(self.a * lambda, self.s * lambda)
    }

    /// Detects axial symmetry: two equal singular values with `a` on the remaining axis.
    pub fn axial_form(&self, tol: f64) -> Option<AxialForm> {
        let scale = self.s.amax().max(1e-300);
        for axis in (0..3).rev() {
            let (i, j) = match axis {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            if (self.s[i] - self.s[j]).abs() <= tol * scale
                && self.a[i].abs() <= tol
                && self.a[j].abs() <= tol
            {
                return Some(AxialForm {
                    axis,
                    a_axis: self.a[axis],
                    s_axis: self.s[axis],
                    s_perp: 0.5 * (self.s[i] + self.s[j]),
                });
            }
        }
        None
    }
}

/// Canonical state invariant under rotations about `axis`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxialForm {
    pub axis: usize,
    pub a_axis: f64,
    pub s_axis: f64,
    pub s_perp: f64,
}

impl AxialForm {
    /// Representation with the symmetry axis moved to z.
    pub fn to_canonical(&self) -> CanonicalState {
        CanonicalState::new(
            Vector3::new(0.0, 0.0, self.a_axis),
            Vector3::new(self.s_perp, self.s_perp, self.s_axis),
        )
    }
}

fn bob_gap(rho: &DensityMatrix) -> (f64, Matrix2<C64>) {
    let (_, rb) = reduced_states(rho);
    let gap = rb.eigenvalues()[0];
    (gap, *rb.matrix())
}

fn inverse_sqrt(m: &Matrix2<C64>) -> Matrix2<C64> {
    let eig = m.symmetric_eigen();
    let mut out = Matrix2::<C64>::zeros();
    for k in 0..2 {
        let lam = eig.eigenvalues[k].max(FILTER_FLOOR);
        let v = eig.eigenvectors.column(k);
        out += v * v.adjoint() * Complex::new(lam.powf(-0.5), 0.0);
    }
    out
}

pub fn classify(rho: &DensityMatrix) -> NormalityClass {
    let (gap, _) = bob_gap(rho);
    if gap < PURITY_TOL {
        return NormalityClass { kind: Normality::Abnormal, purity_gap: gap, min_singular: None };
    }
    let c = reduce(rho);
    let ms = c.min_singular();
    let kind = if ms < DEGENERACY_TOL { Normality::Degenerate } else { Normality::Normal };
    NormalityClass { kind, purity_gap: gap, min_singular: Some(ms) }
}

/// Reduces a normal (possibly degenerate) state to `(a, diag(s))`.
pub fn canonicalize(rho: &DensityMatrix) -> Result<CanonicalState> {
    let (gap, _) = bob_gap(rho);
    if gap < PURITY_TOL {
        return Err(Error::Abnormal { gap });
    }
    Ok(reduce(rho))
}

fn reduce(rho: &DensityMatrix) -> CanonicalState {
    let (_, rb) = bob_gap(rho);
    let filter = inverse_sqrt(&rb);
    let kron = crate::qstate::pauli::kron(&Matrix2::identity(), &filter);
    let normalization = (kron * rho.matrix() * kron.adjoint()).trace().re;
    let filtered = local_transform(rho, &Matrix2::identity(), &filter).expect("filter of a normal state is invertible");
    let th = bloch_tensor(&filtered);

    let svd = th.t.svd(true, true);
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let mut l = Matrix3::from_fn(|r, c| u[(r, order[c])]);
    let mut r = Matrix3::from_fn(|row, c| vt[(order[row], c)]);
    let s = Vector3::from_fn(|k, _| svd.singular_values[order[k]]);

    align_degenerate_blocks(&mut l, &mut r, &s, &th.a);

    let mut a = l.transpose() * th.a;
    let mut signs = [1.0; 3];
    for k in 0..3 {
        if a[k].abs() <= A_NOISE_TOL {
            a[k] = 0.0;
        }
        if a[k] < 0.0 {
            signs[k] = -1.0;
            a[k] = -a[k];
            l.column_mut(k).neg_mut();
            r.row_mut(k).neg_mut();
        }
    }
    CanonicalState {
        a,
        s,
        transform: Some(CanonicalTransform { filter, normalization, l, r, signs }),
    }
}

/// Within each block of (numerically) equal singular values, rotate so that the projection
/// of `a` lies on the block's first axis. Makes the canonical form unique.
fn align_degenerate_blocks(l: &mut Matrix3<f64>, r: &mut Matrix3<f64>, s: &Vector3<f64>, a1: &Vector3<f64>) {
    let tol = 1e-12 * s.amax().max(1.0);
    let mut start = 0;
    while start < 3 {
        let mut end = start + 1;
        while end < 3 && (s[start] - s[end]).abs() <= tol {
            end += 1;
        }
        if end - start > 1 {
            let a = l.transpose() * a1;
            let block: Vec<usize> = (start..end).collect();
            let v: Vec<f64> = block.iter().map(|&k| a[k]).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-14 {
                // Householder reflection H with H v = ‖v‖ e_0 inside the block.
                let mut w = v.clone();
                w[0] -= norm;
                let wn = w.iter().map(|x| x * x).sum::<f64>();
                if wn > 1e-28 {
                    let n = block.len();
                    let h = nalgebra::DMatrix::from_fn(n, n, |i, j| {
                        let d = if i == j { 1.0 } else { 0.0 };
                        d - 2.0 * w[i] * w[j] / wn
                    });
                    let lcols: Vec<Vector3<f64>> = block.iter().map(|&k| l.column(k).into_owned()).collect();
                    let rrows: Vec<nalgebra::RowVector3<f64>> = block.iter().map(|&k| r.row(k).into_owned()).collect();
                    for (bi, &k) in block.iter().enumerate() {
                        let mut col = Vector3::zeros();
                        let mut row = nalgebra::RowVector3::zeros();
                        for bj in 0..n {
                            col += lcols[bj] * h[(bj, bi)];
                            row += rrows[bj] * h[(bj, bi)];
                        }
                        l.set_column(k, &col);
                        r.set_row(k, &row);
                    }
                }
            }
        }
        start = end;
    }
}

/// Exact critical radius of an abnormal state: `1/‖a‖` for products, `0` otherwise.
pub fn abnormal_radius(rho: &DensityMatrix) -> ExtReal {
    let th = bloch_tensor(rho);
    if (th.t - th.a * th.b.transpose()).amax() < PRODUCT_TOL {
        ExtReal::recip_of(th.a.norm())
    } else {
        ExtReal::Finite(0.0)
    }
}
