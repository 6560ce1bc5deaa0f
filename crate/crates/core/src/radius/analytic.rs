//! Closed forms and analytic bounds used as oracles for the linear programs.

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector3};

use crate::canonical::{CanonicalState, DEGENERACY_TOL};
use crate::error::{Error, Result};
use crate::qstate::{pauli, C64};
use crate::quadrature::gauss_legendre;

/// Product rule on the sphere: Gauss–Legendre in `cos θ` times the trapezoid rule in `φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TStateQuadrature {
    pub n_theta: usize,
    pub n_phi: usize,
    /// Nodes `(direction, weight)`; weights sum to `4π`.
    nodes: Vec<(Vector3<f64>, f64)>,
}

impl Default for TStateQuadrature {
    fn default() -> Self {
        Self::new(256, 512)
    }
}

impl TStateQuadrature {
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let (x, w) = gauss_legendre(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        for (&z, &wz) in x.iter().zip(&w) {
            let r = (1.0 - z * z).sqrt();
            for k in 0..n_phi {
                let phi = (k as f64 + 0.5) * dphi;
                nodes.push((Vector3::new(r * phi.cos(), r * phi.sin(), z), wz * dphi));
            }
        }
        Self { n_theta, n_phi, nodes }
    }

    /// Twice as many nodes in each direction.
    pub fn refined(&self) -> Self {
        Self::new(2 * self.n_theta, 2 * self.n_phi)
    }

    /// `∫ dS f(n)`.
    pub fn integrate(&self, f: impl Fn(&Vector3<f64>) -> f64) -> f64 {
        self.nodes.iter().map(|(n, w)| w * f(n)).sum()
    }

    /// `N_T⁻¹ = ∫ dS [nᵀ T⁻² n]⁻²` for `T = diag(s)`.
    pub fn inverse_nt(&self, s: &Vector3<f64>) -> f64 {
        let inv2 = s.map(|x| 1.0 / (x * x));
        self.integrate(|n| {
            let q = n.component_mul(n).dot(&inv2);
            1.0 / (q * q)
        })
    }

    pub fn nt(&self, s: &Vector3<f64>) -> f64 {
        1.0 / self.inverse_nt(s)
    }
}

fn check_nondegenerate(s: &Vector3<f64>) -> Result<()> {
    let min = s.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
    if !(min >= DEGENERACY_TOL) || s.iter().any(|x| !x.is_finite()) {
        return Err(Error::Degenerate { min_singular: min });
    }
    Ok(())
}

/// `R = 2π N_T |s₁s₂s₃|` for the Bell-diagonal state with `T = diag(s)`.
pub fn tstate_analytic(s: &Vector3<f64>) -> Result<f64> {
    tstate_analytic_with(s, &TStateQuadrature::default())
}

pub fn tstate_analytic_with(s: &Vector3<f64>, quad: &TStateQuadrature) -> Result<f64> {
    check_nondegenerate(s)?;
    Ok(2.0 * PI * quad.nt(s) * (s.x * s.y * s.z).abs())
}

/// Closed form for `T = diag(s, s, t)`, with `x = √(s²/t² − 1)` continued to imaginary `x`
/// through `artanh`.
pub fn axial_closed_form(s: f64, t: f64) -> f64 {
    let x2 = s * s / (t * t) - 1.0;
    // artg(x)/x as a function of x².
    let g = if x2.abs() < 1e-4 {
        1.0 - x2 / 3.0 + x2 * x2 / 5.0 - x2 * x2 * x2 / 7.0
    } else if x2 > 0.0 {
        let x = x2.sqrt();
        x.atan() / x
    } else {
        let x = (-x2).sqrt();
        x.atanh() / x
    };
    1.0 / (t.abs() * (1.0 + (1.0 + x2) * g))
}

/// `(lo, hi)` with `hi = 2π N_T |det T|` and `lo = hi / (1 + ‖T⁻¹a‖)`.
pub fn analytic_bounds(c: &CanonicalState) -> Result<(f64, f64)> {
    let s = c.s();
    let hi = tstate_analytic(&s)?;
    let tinv_a = c.a().component_div(&s);
    Ok((hi / (1.0 + tinv_a.norm()), hi))
}

/// Lower bound from the uniform ensemble on the sphere:
/// `½ inf (1 + c0²) / ‖c0 a + diag(s) c‖` over `c0 ∈ [−1, 1]`, `‖c‖ = 1`.
///
/// For fixed `c0` the maximum of `‖b + S c‖` over the unit sphere solves a secular equation,
/// so only `c0` is swept, then refined by golden-section search.
pub fn uniform_bound(c: &CanonicalState) -> f64 {
    let (a, s) = (c.a(), c.s());
    let g = |c0: f64| max_on_sphere(&(a * c0), &s) / (1.0 + c0 * c0);
    // (c0, c) and (−c0, −c) give the same value.
    const GRID: usize = 2000;
    let mut best = (0.0, g(0.0));
    for k in 1..=GRID {
        let c0 = k as f64 / GRID as f64;
        let v = g(c0);
        if v > best.1 {
            best = (c0, v);
        }
    }
    let h = 1.0 / GRID as f64;
    let (mut lo, mut hi) = ((best.0 - h).max(0.0), (best.0 + h).min(1.0));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if g(m1) >= g(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let top = best.1.max(g(0.5 * (lo + hi)));
    if top <= 0.0 {
        f64::INFINITY
    } else {
        0.5 / top
    }
}

/// `max ‖b + diag(s) c‖` over `‖c‖ = 1`.
fn max_on_sphere(b: &Vector3<f64>, s: &Vector3<f64>) -> f64 {
    // Stationary points satisfy (λ − s²) c = s∘b; the maximum has λ ≥ max s².
    let s2 = s.component_mul(s);
    let sb = s.component_mul(b);
    let top = s2.max();
    let norm2 = |lam: f64| (0..3).map(|i| (sb[i] / (lam - s2[i])).powi(2)).sum::<f64>();
    let value = |c: &Vector3<f64>| (b + s.component_mul(c)).norm();
    // Hard case: no weight on the top eigendirections and the rest is inside the sphere.
    let tied: Vec<usize> = (0..3).filter(|&i| s2[i] >= top - 1e-15 * top.max(1e-300)).collect();
    if tied.iter().all(|&i| sb[i] == 0.0) {
        let mut c = Vector3::zeros();
        for i in 0..3 {
            if !tied.contains(&i) {
                c[i] = sb[i] / (top - s2[i]);
            }
        }
        let rest = 1.0 - c.norm_squared();
        if rest >= 0.0 {
            c[tied[0]] = rest.sqrt();
            return value(&c);
        }
    }
    // norm2 decreases from +∞ to 0 on (top, ∞); bracket and bisect.
    let mut lo = top;
    let mut hi = top + sb.norm() + 1e-300;
    while norm2(hi) > 1.0 {
        hi = top + 2.0 * (hi - top);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if norm2(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lam = 0.5 * (lo + hi);
    let c = Vector3::from_fn(|i, _| sb[i] / (lam - s2[i]));
    value(&c.normalize())
}

/// `F_i = 2π ∂(|s₁s₂s₃| N_T)/∂s_i`, differentiated under the integral sign.
pub fn tstate_gradient(s: &Vector3<f64>) -> Result<Vector3<f64>> {
    tstate_gradient_with(s, &TStateQuadrature::default())
}

pub fn tstate_gradient_with(s: &Vector3<f64>, quad: &TStateQuadrature) -> Result<Vector3<f64>> {
    check_nondegenerate(s)?;
    let inv2 = s.map(|x| 1.0 / (x * x));
    let mut i0 = 0.0;
    let mut di = Vector3::zeros();
    for (n, w) in &quad.nodes {
        let n2 = n.component_mul(n);
        let q = n2.dot(&inv2);
        let q2 = q * q;
        i0 += w / q2;
        di += n2 * (w / (q2 * q));
    }
    // ∂I/∂s_i = 4/s_i³ ∫ n_i² q⁻³ dS.
    let di = Vector3::from_fn(|i, _| 4.0 * di[i] / s[i].powi(3));
    let g = (s.x * s.y * s.z).abs() / i0;
    Ok(Vector3::from_fn(|i, _| 2.0 * PI * (g / s[i] - g / i0 * di[i])))
}

/// Gradient of `R` at a T-state as an operator: `(1/16) Σ F_i σ_i⊗σ_i`.
pub fn tstate_gradient_operator(s: &Vector3<f64>) -> Result<Matrix4<C64>> {
    let f = tstate_gradient(s)?;
    let mut out = Matrix4::zeros();
    for i in 0..3 {
        out += pauli::sigma2(i + 1, i + 1) * C64::new(f[i] / 16.0, 0.0);
    }
    Ok(out)
}
