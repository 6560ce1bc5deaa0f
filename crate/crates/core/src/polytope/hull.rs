//! Incremental 3D convex hull.

use std::collections::HashSet;

use nalgebra::Vector3;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct HullFacet {
    pub vertices: [usize; 3],
    /// Outward unit normal.
    pub normal: Vector3<f64>,
    /// Plane offset: `normal · x = offset` on the facet.
    pub offset: f64,
}

#[derive(Debug, Clone)]
pub struct ConvexHull {
    pub facets: Vec<HullFacet>,
}

struct Face {
    v: [usize; 3],
    n: Vector3<f64>,
    d: f64,
    alive: bool,
}

fn make_face(pts: &[Vector3<f64>], v: [usize; 3], interior: &Vector3<f64>) -> Face {
    let (a, b, c) = (pts[v[0]], pts[v[1]], pts[v[2]]);
    let mut n = (b - a).cross(&(c - a));
    let norm = n.norm();
    n /= norm;
    let mut d = n.dot(&a);
    let mut v = v;
    if n.dot(interior) > d {
        n = -n;
        d = -d;
        v.swap(1, 2);
    }
    Face { v, n, d, alive: true }
}

impl ConvexHull {
    pub fn new(points: &[Vector3<f64>]) -> Result<Self> {
        let degenerate = |msg: &str| Error::DegenerateGeometry(msg.to_string());
        if points.len() < 4 {
            return Err(degenerate("fewer than four points"));
        }
        let scale = points.iter().map(|p| p.norm()).fold(0.0, f64::max).max(1e-300);
        let eps = 1e-12 * scale;

        let i0 = 0;
        let i1 = (0..points.len())
            .max_by(|&i, &j| (points[i] - points[i0]).norm().total_cmp(&(points[j] - points[i0]).norm()))
            .expect("nonempty");
        let line = points[i1] - points[i0];
        if line.norm() < eps {
            return Err(degenerate("all points coincide"));
        }
        let dist_line = |p: &Vector3<f64>| (p - points[i0]).cross(&line).norm() / line.norm();
        let i2 = (0..points.len())
            .max_by(|&i, &j| dist_line(&points[i]).total_cmp(&dist_line(&points[j])))
            .expect("nonempty");
        if dist_line(&points[i2]) < eps {
            return Err(degenerate("points are collinear"));
        }
        let pn = line.cross(&(points[i2] - points[i0])).normalize();
        let dist_plane = |p: &Vector3<f64>| (p - points[i0]).dot(&pn).abs();
        let i3 = (0..points.len())
            .max_by(|&i, &j| dist_plane(&points[i]).total_cmp(&dist_plane(&points[j])))
            .expect("nonempty");
        if dist_plane(&points[i3]) < eps {
            return Err(degenerate("points are coplanar"));
        }

        let interior = (points[i0] + points[i1] + points[i2] + points[i3]) / 4.0;
        let mut faces = vec![
            make_face(points, [i0, i1, i2], &interior),
            make_face(points, [i0, i1, i3], &interior),
            make_face(points, [i0, i2, i3], &interior),
            make_face(points, [i1, i2, i3], &interior),
        ];
        let seed: HashSet<usize> = [i0, i1, i2, i3].into_iter().collect();

        for (p_idx, p) in points.iter().enumerate() {
            if seed.contains(&p_idx) {
                continue;
            }
            let visible: Vec<usize> = faces
                .iter()
                .enumerate()
                .filter(|(_, f)| f.alive && f.n.dot(p) - f.d > eps)
                .map(|(k, _)| k)
                .collect();
            if visible.is_empty() {
                continue;
            }
            let mut edges = HashSet::new();
            for &k in &visible {
                let v = faces[k].v;
                for e in 0..3 {
                    edges.insert((v[e], v[(e + 1) % 3]));
                }
            }
            let horizon: Vec<(usize, usize)> = edges
                .iter()
                .filter(|&&(a, b)| !edges.contains(&(b, a)))
                .cloned()
                .collect();
            for &k in &visible {
                faces[k].alive = false;
            }
            let mut horizon = horizon;
            horizon.sort_unstable();
            for (a, b) in horizon {
                faces.push(make_face(points, [a, b, p_idx], &interior));
            }
        }

        let facets = faces
            .into_iter()
            .filter(|f| f.alive)
            .map(|f| HullFacet { vertices: f.v, normal: f.n, offset: f.d })
            .collect();
        Ok(Self { facets })
    }

    /// Smallest facet-plane distance from the origin; negative if the origin is outside.
    pub fn min_offset(&self) -> f64 {
        self.facets.iter().map(|f| f.offset).fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, x: &Vector3<f64>, tol: f64) -> bool {
        self.facets.iter().all(|f| f.normal.dot(x) <= f.offset + tol)
    }
}
