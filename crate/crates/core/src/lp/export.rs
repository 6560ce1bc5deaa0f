//! Text export in the CPLEX LP format.

use std::fmt::Write as _;

use super::{denominator, RadiusLp};

/// Writes the LP with variables `t, u0, …, u{N-1}`; every coefficient has 17 significant digits.
pub fn export_lp_text(lp: &RadiusLp) -> String {
    let verts = lp.polytope().vertices();
    let n = verts.len();
    let (a, s) = (lp.a(), lp.s());
    let mut out = String::new();
    let w = &mut out;
    let term = |w: &mut String, coeff: f64, var: &str| {
        if coeff != 0.0 {
            let sign = if coeff < 0.0 { '-' } else { '+' };
            write!(w, " {sign} {:.16e} {var}", coeff.abs()).expect("string write");
        }
    };
    writeln!(w, "\\ critical radius LP on {} ({} vertices)", lp.polytope().name(), n).unwrap();
    writeln!(w, "Maximize").unwrap();
    writeln!(w, " obj: t").unwrap();
    writeln!(w, "Subject To").unwrap();
    write!(w, " norm:").unwrap();
    for i in 0..n {
        write!(w, " + u{i}").unwrap();
    }
    writeln!(w, " = 1").unwrap();
    for (c, label) in ["bx", "by", "bz"].iter().enumerate() {
        write!(w, " {label}:").unwrap();
        let mut any = false;
        for (i, t) in verts.iter().enumerate() {
            if t[c] != 0.0 {
                any = true;
            }
            term(w, t[c], &format!("u{i}"));
        }
        if !any {
            write!(w, " 0 u0").unwrap();
        }
        writeln!(w, " = 0").unwrap();
    }
    for k in lp.active_indices() {
        let normal = lp.normals().get(k);
        write!(w, " c{k}:").unwrap();
        for (i, t) in verts.iter().enumerate() {
            term(w, normal.eval(t).abs(), &format!("u{i}"));
        }
        term(w, -denominator(&normal, &a, &s), "t");
        writeln!(w, " >= 0").unwrap();
    }
    writeln!(w, "Bounds").unwrap();
    writeln!(w, " t free").unwrap();
    for i in 0..n {
        writeln!(w, " u{i} >= 0").unwrap();
    }
    writeln!(w, "End").unwrap();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canonical::CanonicalState;
    use crate::lp::build_lp;
    use crate::polytope::{enumerate_facet_normals, load_covering};
    use nalgebra::Vector3;

    #[test]
    fn octahedron_export_shape() {
        let p = load_covering("oct-6").unwrap();
        let normals = enumerate_facet_normals(&p);
        let c = CanonicalState::new(Vector3::zeros(), Vector3::new(1.0, 1.0, 1.0));
        let lp = build_lp(&c, &p, &normals).unwrap();
        let text = export_lp_text(&lp);
        assert!(text.contains("Maximize"));
        let rows = text.lines().filter(|l| l.contains(">= 0") && l.contains(':') || l.ends_with("= 1") || l.ends_with(" = 0")).count();
        assert_eq!(rows, 11 + 4);
        let bounds: Vec<&str> = text.split("Bounds\n").nth(1).unwrap().lines().take_while(|l| *l != "End").collect();
        assert_eq!(bounds.len(), 7);
    }
}
