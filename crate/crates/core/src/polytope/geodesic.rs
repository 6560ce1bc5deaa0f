//! Geodesic subdivisions of the icosahedron, antipodally symmetrised.

use std::collections::BTreeMap;

use nalgebra::Vector3;

use super::hull::ConvexHull;

fn icosahedron() -> Vec<Vector3<f64>> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v = Vec::new();
    for s1 in [-1.0, 1.0] {
        for s2 in [-1.0, 1.0] {
            v.push(Vector3::new(0.0, s1, s2 * phi));
            v.push(Vector3::new(s1, s2 * phi, 0.0));
            v.push(Vector3::new(s2 * phi, 0.0, s1));
        }
    }
    v.into_iter().map(|x| x.normalize()).collect()
}

fn key(v: &Vector3<f64>) -> [i64; 3] {
    [(v.x * 1e9).round() as i64, (v.y * 1e9).round() as i64, (v.z * 1e9).round() as i64]
}

/// Lexicographically positive representative of `{v, -v}`.
fn is_positive_rep(v: &Vector3<f64>) -> bool {
    for k in 0..3 {
        if v[k].abs() > 1e-9 {
            return v[k] > 0.0;
        }
    }
    false
}

/// Class-I geodesic polyhedron of the given frequency: `10 f² + 2` unit vectors, exactly
/// closed under `v → -v`.
pub fn geodesic_icosahedral(frequency: usize) -> Vec<Vector3<f64>> {
    assert!(frequency >= 1);
    let base = icosahedron();
    let hull = ConvexHull::new(&base).expect("icosahedron is full-dimensional");
    let f = frequency as f64;
    let mut points: BTreeMap<[i64; 3], Vector3<f64>> = BTreeMap::new();
    for facet in &hull.facets {
        let [a, b, c] = facet.vertices.map(|i| base[i]);
        for i in 0..=frequency {
            for j in 0..=(frequency - i) {
                let k = frequency - i - j;
                let p = (a * i as f64 + b * j as f64 + c * k as f64) / f;
                let p = p.normalize();
                points.entry(key(&p)).or_insert(p);
            }
        }
    }
    let mut reps: Vec<Vector3<f64>> = points.values().filter(|v| is_positive_rep(v)).cloned().collect();
    reps.sort_by(|a, b| {
        b.z.total_cmp(&a.z).then(a.y.total_cmp(&b.y)).then(a.x.total_cmp(&b.x))
    });
    let mut out = Vec::with_capacity(2 * reps.len());
    for r in &reps {
        out.push(*r);
        out.push(-*r);
    }
    debug_assert_eq!(out.len(), points.len());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_counts() {
        for f in 1..=5 {
            assert_eq!(geodesic_icosahedral(f).len(), 10 * f * f + 2);
        }
    }
}
