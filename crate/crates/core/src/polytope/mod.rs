//! Polytope approximations of Bob's Bloch sphere and the facet normals of their capacities.

pub mod geodesic;
pub mod hull;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::quadrature::gauss_legendre;
use hull::ConvexHull;

pub const POLYTOPE_DIR_ENV: &str = "STEERING_POLYTOPE_DIR";
/// Cross-product norm below which a vertex triple counts as collinear.
pub const COLLINEAR_TOL: f64 = 1e-12;
/// Grid used to merge coplanar triples.
pub const DEDUP_GRID: f64 = 1e-9;

pub const COVERING_NAMES: [&str; 6] = ["oct-6", "icosa-12", "icosa-42", "icosa-92", "icosa-162", "icosa-252"];

const BUNDLED: [(&str, &str); 6] = [
    ("oct-6", include_str!("../../data/oct-6.txt")),
    ("icosa-12", include_str!("../../data/icosa-12.txt")),
    ("icosa-42", include_str!("../../data/icosa-42.txt")),
    ("icosa-92", include_str!("../../data/icosa-92.txt")),
    ("icosa-162", include_str!("../../data/icosa-162.txt")),
    ("icosa-252", include_str!("../../data/icosa-252.txt")),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatitudeScheme {
    UniformAngle,
    UniformZ,
    GaussLegendre,
}

impl LatitudeScheme {
    pub fn short_name(self) -> &'static str {
        match self {
            LatitudeScheme::UniformAngle => "ua",
            LatitudeScheme::UniformZ => "uz",
            LatitudeScheme::GaussLegendre => "gl",
        }
    }

    /// Ring heights in ascending order, exactly symmetric under `z → -z`.
    pub fn latitudes(self, p: usize) -> Vec<f64> {
        let pf = p as f64;
        let mut z: Vec<f64> = match self {
            LatitudeScheme::UniformAngle => (1..=p)
                .map(|j| -((j as f64 - 0.5) * std::f64::consts::PI / pf).cos())
                .collect(),
            LatitudeScheme::UniformZ => (1..=p).map(|j| -1.0 + (2.0 * j as f64 - 1.0) / pf).collect(),
            LatitudeScheme::GaussLegendre => gauss_legendre(p).0,
        };
        for j in 0..p / 2 {
            let m = 0.5 * (z[p - 1 - j] - z[j]);
            z[j] = -m;
            z[p - 1 - j] = m;
        }
        if p % 2 == 1 {
            z[p / 2] = 0.0;
        }
        z
    }
}

impl std::str::FromStr for LatitudeScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ua" | "uniform-angle" => Ok(LatitudeScheme::UniformAngle),
            "uz" | "uniform-z" => Ok(LatitudeScheme::UniformZ),
            "gl" | "gauss-legendre" => Ok(LatitudeScheme::GaussLegendre),
            _ => Err(invalid(format!("unknown latitude scheme '{s}' (uniform-angle, uniform-z, gauss-legendre)"))),
        }
    }
}

/// Layout of an axially symmetric polytope: `p` rings of `2q` vertices, then the south and
/// north poles. Vertex `j·2q + k` sits on ring `j` at azimuth `kπ/q`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxialLayout {
    pub p: usize,
    pub q: usize,
    pub scheme: LatitudeScheme,
    pub z: Vec<f64>,
}

impl AxialLayout {
    pub fn ring_count(&self) -> usize {
        self.p + 2
    }

    /// Ring heights including the poles: `p` latitudes, then `-1`, then `+1`.
    pub fn ring_heights(&self) -> Vec<f64> {
        let mut h = self.z.clone();
        h.push(-1.0);
        h.push(1.0);
        h
    }

    /// Number of vertices on each ring (poles count once).
    pub fn ring_sizes(&self) -> Vec<usize> {
        let mut s = vec![2 * self.q; self.p];
        s.push(1);
        s.push(1);
        s
    }

    pub fn ring_of(&self, vertex: usize) -> usize {
        let per = 2 * self.q;
        if vertex < self.p * per {
            vertex / per
        } else {
            self.p + (vertex - self.p * per)
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpherePolytope {
    name: String,
    vertices: Vec<Vector3<f64>>,
    r_in: f64,
    inversion_symmetric: bool,
    scale: f64,
    hull_facets: Vec<FacetNormal>,
    axial: Option<AxialLayout>,
}

impl SpherePolytope {
    /// Builds a polytope, computing its hull, inscribed radius and inversion symmetry.
    pub fn from_vertices(name: impl Into<String>, vertices: Vec<Vector3<f64>>) -> Result<Self> {
        let hull = ConvexHull::new(&vertices)?;
        let r_in = hull.min_offset();
        if r_in <= 0.0 {
            return Err(Error::DegenerateGeometry("convex hull does not contain the origin in its interior".into()));
        }
        let hull_facets = hull
            .facets
            .iter()
            .map(|f| FacetNormal { c0: -f.offset, c: f.normal }.canonical())
            .collect();
        let inversion_symmetric = check_inversion(&vertices);
        Ok(Self { name: name.into(), vertices, r_in, inversion_symmetric, scale: 1.0, hull_facets, axial: None })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn r_in(&self) -> f64 {
        self.r_in
    }

    pub fn inversion_symmetric(&self) -> bool {
        self.inversion_symmetric
    }

    /// Factor applied by [`scale`]; 1 for inner polytopes.
    pub fn scale_factor(&self) -> f64 {
        self.scale
    }

    pub fn axial(&self) -> Option<&AxialLayout> {
        self.axial.as_ref()
    }

    /// Normals of the hull facets, in canonical orientation.
    pub fn hull_facet_normals(&self) -> &[FacetNormal] {
        &self.hull_facets
    }

    /// SHA-256 of the vertex list as printed with 17 significant digits.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(vertices_to_text(&self.vertices).as_bytes());
        hex::encode(h.finalize())
    }

    /// Largest deviation of a vertex norm from the scale factor.
    pub fn max_radial_deviation(&self) -> f64 {
        self.vertices.iter().map(|v| (v.norm() - self.scale).abs()).fold(0.0, f64::max)
    }
}

fn check_inversion(vertices: &[Vector3<f64>]) -> bool {
    let key = |v: &Vector3<f64>| [(v.x * 1e9).round() as i64, (v.y * 1e9).round() as i64, (v.z * 1e9).round() as i64];
    let map: HashMap<[i64; 3], usize> = vertices.iter().enumerate().map(|(i, v)| (key(v), i)).collect();
    vertices.iter().all(|v| match map.get(&key(&-v)) {
        Some(&j) => (vertices[j] + v).amax() == 0.0,
        None => false,
    })
}

pub fn vertices_to_text(vertices: &[Vector3<f64>]) -> String {
    let mut s = String::new();
    for v in vertices {
        writeln!(s, "{:.16e} {:.16e} {:.16e}", v.x, v.y, v.z).expect("string write");
    }
    s
}

fn parse_vertices(name: &str, text: &str) -> Result<Vec<Vector3<f64>>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(|x| x.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| invalid(format!("{name}:{}: {e}", lineno + 1)))?;
        if nums.len() != 3 {
            return Err(invalid(format!("{name}:{}: expected 3 numbers, found {}", lineno + 1, nums.len())));
        }
        out.push(Vector3::new(nums[0], nums[1], nums[2]));
    }
    Ok(out)
}

/// Loads one of the bundled covering sets, or the same-named file from `$STEERING_POLYTOPE_DIR`.
pub fn load_covering(name: &str) -> Result<SpherePolytope> {
    let Some(&(_, bundled)) = BUNDLED.iter().find(|(n, _)| *n == name) else {
        return Err(Error::UnknownPolytope { name: name.to_string(), available: available_names() });
    };
    let text = match std::env::var_os(POLYTOPE_DIR_ENV) {
        Some(dir) => std::fs::read_to_string(PathBuf::from(dir).join(format!("{name}.txt")))?,
        None => bundled.to_string(),
    };
    let vertices = parse_vertices(name, &text)?;
    let p = SpherePolytope::from_vertices(name, vertices)?;
    let dev = p.max_radial_deviation();
    if dev > 1e-12 {
        return Err(invalid(format!("{name}: vertex off the unit sphere by {dev:.3e}")));
    }
    Ok(p)
}

fn available_names() -> String {
    let mut s = COVERING_NAMES.join(", ");
    s.push_str(", axial-<p>-<q>[-ua|-uz|-gl]");
    s
}

/// Resolves covering names and `axial-<p>-<q>[-scheme]`.
pub fn by_name(name: &str) -> Result<SpherePolytope> {
    if let Some(rest) = name.strip_prefix("axial-") {
        let parts: Vec<&str> = rest.split('-').collect();
        let unknown = || Error::UnknownPolytope { name: name.to_string(), available: available_names() };
        if parts.len() < 2 {
            return Err(unknown());
        }
        let p = parts[0].parse().map_err(|_| unknown())?;
        let q = parts[1].parse().map_err(|_| unknown())?;
        let scheme = if parts.len() > 2 { parts[2..].join("-").parse()? } else { LatitudeScheme::GaussLegendre };
        return axial_polytope(p, q, scheme);
    }
    load_covering(name)
}

pub fn axial_polytope(p: usize, q: usize, scheme: LatitudeScheme) -> Result<SpherePolytope> {
    if p < 1 || q < 3 {
        return Err(invalid(format!("axial polytope needs p >= 1 and q >= 3, got p={p}, q={q}")));
    }
    let z = scheme.latitudes(p);
    let per = 2 * q;
    let mut vertices = vec![Vector3::zeros(); p * per + 2];
    for j in 0..p {
        let r = (1.0 - z[j] * z[j]).sqrt();
        for k in 0..q {
            let phi = k as f64 * std::f64::consts::PI / q as f64;
            vertices[j * per + k] = Vector3::new(r * phi.cos(), r * phi.sin(), z[j]);
        }
    }
    // The opposite half of each ring is the exact negation of the mirrored ring.
    for j in 0..p {
        for k in q..per {
            vertices[j * per + k] = -vertices[(p - 1 - j) * per + (k - q)];
        }
    }
    vertices[p * per] = Vector3::new(0.0, 0.0, -1.0);
    vertices[p * per + 1] = Vector3::new(0.0, 0.0, 1.0);
    let name = format!("axial-{p}-{q}-{}", scheme.short_name());
    let mut poly = SpherePolytope::from_vertices(name, vertices)?;
    poly.axial = Some(AxialLayout { p, q, scheme, z });
    Ok(poly)
}

/// Minimum facet-plane distance of the hull from the origin.
pub fn inscribed_radius(p: &SpherePolytope) -> f64 {
    p.r_in
}

/// Multiplies all vertices by `eta`.
pub fn scale(p: &SpherePolytope, eta: f64) -> Result<SpherePolytope> {
    if !(eta > 0.0) {
        return Err(invalid(format!("scale factor must be positive, got {eta}")));
    }
    let mut out = p.clone();
    out.vertices = p.vertices.iter().map(|v| v * eta).collect();
    out.r_in = p.r_in * eta;
    out.scale = p.scale * eta;
    out.hull_facets = p.hull_facets.iter().map(|f| FacetNormal { c0: f.c0 * eta, c: f.c }).collect();
    if eta != 1.0 {
        out.name = format!("{}*{eta}", p.name);
    }
    Ok(out)
}

/// Observable `C = (c0, c)` with `‖c‖ = 1`: the plane `c0 + c·t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FacetNormal {
    pub c0: f64,
    pub c: Vector3<f64>,
}

impl FacetNormal {
    pub fn new(c0: f64, c: Vector3<f64>) -> Self {
        Self { c0, c }
    }

    /// `c0 + c·t`.
    #[inline]
    pub fn eval(&self, t: &Vector3<f64>) -> f64 {
        self.c0 + self.c.dot(t)
    }

    /// Flips the sign so that the first nonzero component of `(c0, c)` is positive.
    pub fn canonical(self) -> Self {
        for x in [self.c0, self.c.x, self.c.y, self.c.z] {
            if x.abs() > COLLINEAR_TOL {
                return if x > 0.0 { self } else { Self { c0: -self.c0, c: -self.c } };
            }
        }
        self
    }

    pub fn key(&self) -> [i64; 4] {
        let g = |x: f64| (x / DEDUP_GRID).round() as i64;
        [g(self.c0), g(self.c.x), g(self.c.y), g(self.c.z)]
    }

    /// Plane through three points, or `None` if they are collinear.
    pub fn through(t1: &Vector3<f64>, t2: &Vector3<f64>, t3: &Vector3<f64>) -> Option<Self> {
        let n = (t2 - t1).cross(&(t3 - t1));
        let norm = n.norm();
        if norm < COLLINEAR_TOL {
            return None;
        }
        let c = n / norm;
        Some(Self { c0: -c.dot(t1), c }.canonical())
    }
}

/// Planes through vertex triples. Storage is shared between a set and its scaled copies.
#[derive(Debug, Clone)]
pub struct FacetNormalSet {
    normals: Arc<Vec<FacetNormal>>,
    c0_scale: f64,
    pub source_polytope: String,
    pub count_before_dedup: usize,
}

impl FacetNormalSet {
    /// Wraps an explicit list, sorting it by dedup key so indices are deterministic.
    pub fn from_normals(mut normals: Vec<FacetNormal>, source_polytope: impl Into<String>) -> Self {
        let count_before_dedup = normals.len();
        normals = normals.into_iter().map(FacetNormal::canonical).collect();
        normals.sort_by_key(|n| n.key());
        normals.dedup_by_key(|n| n.key());
        Self { normals: Arc::new(normals), c0_scale: 1.0, source_polytope: source_polytope.into(), count_before_dedup }
    }

    pub fn len(&self) -> usize {
        self.normals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normals.is_empty()
    }

    #[inline]
    pub fn get(&self, k: usize) -> FacetNormal {
        let n = self.normals[k];
        FacetNormal { c0: n.c0 * self.c0_scale, c: n.c }
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = FacetNormal> + '_ {
        (0..self.len()).map(|k| self.get(k))
    }

    pub fn index_of(&self, n: &FacetNormal) -> Option<usize> {
        let key = FacetNormal { c0: n.c0 / self.c0_scale, c: n.c }.canonical().key();
        self.normals.binary_search_by(|m| m.key().cmp(&key)).ok()
    }

    /// The same planes for the polytope scaled by `eta`: `(c0, c) → (eta·c0, c)`.
    pub fn scaled(&self, eta: f64) -> FacetNormalSet {
        FacetNormalSet {
            normals: Arc::clone(&self.normals),
            c0_scale: self.c0_scale * eta,
            source_polytope: format!("{}*{eta}", self.source_polytope),
            count_before_dedup: self.count_before_dedup,
        }
    }
}

/// All planes through vertex triples, deduplicated on a `1e-9` grid.
pub fn enumerate_facet_normals(p: &SpherePolytope) -> FacetNormalSet {
    let v = p.vertices();
    let n = v.len();
    let mut all: Vec<([i64; 4], FacetNormal)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut local = Vec::new();
            for j in i + 1..n {
                for k in j + 1..n {
                    if let Some(f) = FacetNormal::through(&v[i], &v[j], &v[k]) {
                        local.push((f.key(), f));
                    }
                }
            }
            local
        })
        .collect();
    let count_before_dedup = all.len();
    all.par_sort_by_key(|(k, _)| *k);
    all.dedup_by_key(|(k, _)| *k);
    FacetNormalSet {
        normals: Arc::new(all.into_iter().map(|(_, f)| f).collect()),
        c0_scale: 1.0,
        source_polytope: p.name().to_string(),
        count_before_dedup,
    }
}
