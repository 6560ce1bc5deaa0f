//! JSON state files: exactly one of `density`, `bloch` or `family`.

use std::path::Path;

use nalgebra::{Complex, Matrix3, Matrix4, Vector3};
use serde::Deserialize;
use serde_json::Value;

use super::{density_from_bloch, make_family, BlochTensor, DensityMatrix, StateFamily};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Density { re: [[f64; 4]; 4], im: [[f64; 4]; 4] },
    Bloch(BlochTensor),
    Family(StateFamily),
}

#[derive(Deserialize)]
struct DensityRepr {
    re: [[f64; 4]; 4],
    #[serde(default)]
    im: [[f64; 4]; 4],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BlochRepr {
    a: [f64; 3],
    b: [f64; 3],
    #[serde(rename = "T")]
    t: Value,
}

/// `T` may be a 3×3 array, a 3-vector (diagonal) or a scalar (multiple of the identity).
fn parse_correlation(v: &Value) -> Result<Matrix3<f64>> {
    if let Some(x) = v.as_f64() {
        return Ok(Matrix3::from_diagonal_element(x));
    }
    if let Ok(rows) = serde_json::from_value::<[[f64; 3]; 3]>(v.clone()) {
        return Ok(Matrix3::from_fn(|r, c| rows[r][c]));
    }
    if let Ok(diag) = serde_json::from_value::<[f64; 3]>(v.clone()) {
        return Ok(Matrix3::from_diagonal(&Vector3::from(diag)));
    }
    Err(invalid("\"T\" must be a 3x3 array, a 3-vector or a number"))
}

impl StateSpec {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s)?;
        Self::from_value(&v)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn from_value(v: &Value) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| invalid("state file must be a JSON object"))?;
        if obj.len() != 1 {
            return Err(invalid(format!(
                "state file must contain exactly one of \"density\", \"bloch\", \"family\"; found {} keys",
                obj.len()
            )));
        }
        let (key, body) = obj.iter().next().expect("one key");
        match key.as_str() {
            "density" => {
                let d: DensityRepr = serde_json::from_value(body.clone())?;
                Ok(StateSpec::Density { re: d.re, im: d.im })
            }
            "bloch" => {
                let b: BlochRepr = serde_json::from_value(body.clone())?;
                let t = parse_correlation(&b.t)?;
                Ok(StateSpec::Bloch(BlochTensor::new(Vector3::from(b.a), Vector3::from(b.b), t)))
            }
            "family" => Ok(StateSpec::Family(serde_json::from_value(body.clone())?)),
            other => Err(invalid(format!("unknown state key \"{other}\""))),
        }
    }

    /// Builds the state; improper results are flagged, not rejected.
    pub fn build(&self) -> Result<DensityMatrix> {
        match self {
            StateSpec::Density { re, im } => {
                let m = Matrix4::from_fn(|r, c| Complex::new(re[r][c], im[r][c]));
                DensityMatrix::new_allow_improper(m)
            }
            StateSpec::Bloch(th) => Ok(density_from_bloch(th)),
            StateSpec::Family(f) => make_family(f),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::bloch_tensor;

    #[test]
    fn scalar_correlation() {
        let spec = StateSpec::from_json_str(r#"{"bloch":{"a":[0,0,0],"b":[0,0,0],"T":0}}"#).unwrap();
        let rho = spec.build().unwrap();
        assert_eq!(bloch_tensor(&rho).t, Matrix3::zeros());
    }

    #[test]
    fn exactly_one_key() {
        let two = r#"{"bloch":{"a":[0,0,0],"b":[0,0,0],"T":0},"family":{"tag":"werner","w":0.1}}"#;
        assert!(StateSpec::from_json_str(two).is_err());
        assert!(StateSpec::from_json_str("{}").is_err());
        assert!(StateSpec::from_json_str(r#"{"foo":1}"#).is_err());
    }

    #[test]
    fn density_and_family_forms() {
        let d = r#"{"density":{"re":[[0.25,0,0,0],[0,0.25,0,0],[0,0,0.25,0],[0,0,0,0.25]],"im":[[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]]}}"#;
        let rho = StateSpec::from_json_str(d).unwrap().build().unwrap();
        assert_eq!(rho, DensityMatrix::maximally_mixed());
        let f = r#"{"family":{"tag":"werner","w":0.5}}"#;
        let rho = StateSpec::from_json_str(f).unwrap().build().unwrap();
        assert!((bloch_tensor(&rho).t[(0, 0)] + 0.5).abs() < 1e-15);
        let bad = r#"{"density":{"re":[[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}}"#;
        assert!(StateSpec::from_json_str(bad).unwrap().build().is_err());
    }
}
