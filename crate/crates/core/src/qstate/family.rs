use std::f64::consts::FRAC_PI_4;
use std::str::FromStr;

use nalgebra::{Complex, Matrix2, Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use super::{bloch_tensor, density_from_bloch, pauli, random, reduced_states, BlochTensor, DensityMatrix, C64};
use crate::error::{invalid, Error, Result};

/// Named state families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateFamily {
    /// `w |ψ⁻⟩⟨ψ⁻| + (1-w) I/4`.
    Werner { w: f64 },
    /// Bell-diagonal state with `T = diag(s)`; may be improper.
    Tstate { s: [f64; 3] },
    /// `α|θ⟩⟨θ| + (1-α) ρ_A ⊗ I/2` with `|θ⟩ = cos(θ/2)|00⟩ + sin(θ/2)|11⟩`.
    Theta { theta: f64, alpha: f64 },
    /// `α ρ + (1-α) I/2 ⊗ ρ_B`.
    NoiseMix { base: Box<StateFamily>, alpha: f64 },
    /// Ginibre state of the given rank.
    Random { seed: u64, rank: usize },
    Explicit { re: [[f64; 4]; 4], im: [[f64; 4]; 4] },
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {x} outside [0, 1]")))
    }
}

pub fn make_family(f: &StateFamily) -> Result<DensityMatrix> {
    match f {
        StateFamily::Werner { w } => {
            check_unit("w", *w)?;
            let t = Matrix3::from_diagonal_element(-*w);
            Ok(density_from_bloch(&BlochTensor::new(Vector3::zeros(), Vector3::zeros(), t)))
        }
        StateFamily::Tstate { s } => {
            if s.iter().any(|x| !x.is_finite() || x.abs() > 1.0) {
                return Err(invalid(format!("tstate parameters {s:?} must satisfy |s_i| <= 1")));
            }
            let t = Matrix3::from_diagonal(&Vector3::from(*s));
            Ok(density_from_bloch(&BlochTensor::new(Vector3::zeros(), Vector3::zeros(), t)))
        }
        StateFamily::Theta { theta, alpha } => {
            if !(0.0..=FRAC_PI_4 + 1e-15).contains(theta) {
                return Err(invalid(format!("theta = {theta} outside [0, pi/4]")));
            }
            check_unit("alpha", *alpha)?;
            Ok(theta_state(*theta, *alpha))
        }
        StateFamily::NoiseMix { base, alpha } => {
            check_unit("alpha", *alpha)?;
            Ok(noise_mix(&make_family(base)?, *alpha))
        }
        StateFamily::Random { seed, rank } => random::random_state(*seed, *rank),
        StateFamily::Explicit { re, im } => {
            let m = Matrix4::from_fn(|r, c| Complex::new(re[r][c], im[r][c]));
            DensityMatrix::new_allow_improper(m)
        }
    }
}

fn theta_state(theta: f64, alpha: f64) -> DensityMatrix {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let z = Complex::new(0.0, 0.0);
    let psi = Vector4::new(Complex::new(c, 0.0), z, z, Complex::new(s, 0.0));
    let pure = DensityMatrix::from_pure(&psi).expect("normalised");
    let (rho_a, _) = reduced_states(&pure);
    let half = Matrix2::<C64>::identity() * Complex::new(0.5, 0.0);
    let noise = pauli::kron(rho_a.matrix(), &half);
    DensityMatrix::from_hermitian(pure.matrix() * Complex::new(alpha, 0.0) + noise * Complex::new(1.0 - alpha, 0.0))
}

/// `α ρ + (1-α) I/2 ⊗ ρ_B`. Any `α ≥ 0` is accepted; `α > 1` may leave the state space.
pub fn noise_mix(rho: &DensityMatrix, alpha: f64) -> DensityMatrix {
    let th = bloch_tensor(rho);
    // On the Bloch tensor the map scales a and T and leaves b untouched, which keeps
    // the result bit-compatible with the scaling identity.
    density_from_bloch(&BlochTensor::new(th.a * alpha, th.b, th.t * alpha))
}

impl FromStr for StateFamily {
    type Err = Error;

    /// Shorthand `name:p1,p2,...`, e.g. `werner:0.3`, `theta:0.5,0.8`, `tstate:1,1,0.5`,
    /// `random:42,4`, `singlet`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| invalid(format!("bad number '{x}' in '{s}': {e}"))))
                .collect::<Result<_>>()?
        };
        let want = |n: usize| -> Result<()> {
            if nums.len() == n {
                Ok(())
            } else {
                Err(invalid(format!("family '{name}' takes {n} parameter(s), got {}", nums.len())))
            }
        };
        match name {
            "singlet" => {
                want(0)?;
                Ok(StateFamily::Werner { w: 1.0 })
            }
            "werner" => {
                want(1)?;
                Ok(StateFamily::Werner { w: nums[0] })
            }
            "tstate" => {
                want(3)?;
                Ok(StateFamily::Tstate { s: [nums[0], nums[1], nums[2]] })
            }
            "theta" => {
                want(2)?;
                Ok(StateFamily::Theta { theta: nums[0], alpha: nums[1] })
            }
            "random" => {
                want(2)?;
                if nums.iter().any(|x| x.fract() != 0.0 || *x < 0.0) {
                    return Err(invalid("random takes a non-negative integer seed and rank"));
                }
                Ok(StateFamily::Random { seed: nums[0] as u64, rank: nums[1] as usize })
            }
            _ => Err(invalid(format!(
                "unknown family '{name}'; expected one of singlet, werner, tstate, theta, random"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{max_entry_diff, ppt_min_eigenvalue};
    use approx::assert_abs_diff_eq;

    #[test]
    fn werner_tensor() {
        let rho = make_family(&StateFamily::Werner { w: 0.4 }).unwrap();
        let th = bloch_tensor(&rho);
        assert_abs_diff_eq!(th.t, Matrix3::from_diagonal_element(-0.4), epsilon = 1e-15);
        assert_abs_diff_eq!(th.a, Vector3::zeros(), epsilon = 1e-15);
    }

    #[test]
    fn werner_entanglement_threshold() {
        // Closed-form PT spectrum: least eigenvalue (1 - 3w)/4.
        for k in 0..=100 {
            let w = k as f64 / 100.0;
            let rho = make_family(&StateFamily::Werner { w }).unwrap();
            assert_abs_diff_eq!(ppt_min_eigenvalue(&rho), (1.0 - 3.0 * w) / 4.0, epsilon = 1e-13);
        }
        let just_above = make_family(&StateFamily::Werner { w: 1.0 / 3.0 + 1e-9 }).unwrap();
        let just_below = make_family(&StateFamily::Werner { w: 1.0 / 3.0 - 1e-9 }).unwrap();
        assert!(ppt_min_eigenvalue(&just_above) < 0.0);
        assert!(ppt_min_eigenvalue(&just_below) > 0.0);
    }

    #[test]
    fn theta_state_marginals() {
        let theta = 0.7;
        let (c2, s2) = ((theta / 2.0f64).cos().powi(2), (theta / 2.0f64).sin().powi(2));
        let pure = make_family(&StateFamily::Theta { theta, alpha: 1.0 }).unwrap();
        let (_, rb) = reduced_states(&pure);
        assert_abs_diff_eq!(rb.matrix()[(0, 0)].re, c2, epsilon = 1e-15);
        assert_abs_diff_eq!(rb.matrix()[(1, 1)].re, s2, epsilon = 1e-15);
        for alpha in [0.0, 0.3, 0.9] {
            let rho = make_family(&StateFamily::Theta { theta, alpha }).unwrap();
            let (_, rb) = reduced_states(&rho);
            let expect_00 = alpha * c2 + (1.0 - alpha) / 2.0;
            let expect_11 = alpha * s2 + (1.0 - alpha) / 2.0;
            assert_abs_diff_eq!(rb.matrix()[(0, 0)].re, expect_00, epsilon = 1e-15);
            assert_abs_diff_eq!(rb.matrix()[(1, 1)].re, expect_11, epsilon = 1e-15);
        }
    }

    #[test]
    fn theta_bell_and_product_limits() {
        // At θ = π/4 the amplitudes cos(π/8), sin(π/8) are unequal, so the state is not maximally
        // entangled; singular values of T are (sin θ, sin θ, 1).
        let rho = make_family(&StateFamily::Theta { theta: FRAC_PI_4, alpha: 1.0 }).unwrap();
        let sv = bloch_tensor(&rho).t.singular_values();
        let mut sv: Vec<f64> = sv.iter().cloned().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let st = FRAC_PI_4.sin();
        assert_abs_diff_eq!(sv[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sv[1], st, epsilon = 1e-14);
        assert_abs_diff_eq!(sv[2], st, epsilon = 1e-14);
        let rho = make_family(&StateFamily::Theta { theta: FRAC_PI_4, alpha: 0.0 }).unwrap();
        assert!(ppt_min_eigenvalue(&rho) >= -1e-12);
        assert!(make_family(&StateFamily::Theta { theta: 1.0, alpha: 0.5 }).is_err());
        assert!(make_family(&StateFamily::Werner { w: 1.1 }).is_err());
    }

    #[test]
    fn noise_mix_keeps_marginals() {
        let base = DensityMatrix::singlet();
        let (a0, b0) = reduced_states(&base);
        for alpha in [0.0, 0.25, 0.8, 1.0] {
            let (a, b) = reduced_states(&noise_mix(&base, alpha));
            assert!(max_entry_diff(a.matrix(), a0.matrix()) < 1e-15);
            assert!(max_entry_diff(b.matrix(), b0.matrix()) < 1e-15);
        }
    }

    #[test]
    fn shorthand_parsing() {
        assert_eq!("werner:0.3".parse::<StateFamily>().unwrap(), StateFamily::Werner { w: 0.3 });
        assert_eq!(
            "theta:0.5,0.8".parse::<StateFamily>().unwrap(),
            StateFamily::Theta { theta: 0.5, alpha: 0.8 }
        );
        assert!("werner".parse::<StateFamily>().is_err());
        assert!("bogus:1".parse::<StateFamily>().is_err());
    }

    #[test]
    fn json_tagging() {
        let f: StateFamily = serde_json::from_str(r#"{"tag":"noise_mix","base":{"tag":"werner","w":1.0},"alpha":0.5}"#).unwrap();
        let rho = make_family(&f).unwrap();
        let th = bloch_tensor(&rho);
        assert_abs_diff_eq!(th.t, Matrix3::from_diagonal_element(-0.5), epsilon = 1e-15);
    }
}
