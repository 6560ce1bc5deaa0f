//! Regenerates the bundled covering sets in `crates/core/data`.

use std::path::PathBuf;

use nalgebra::Vector3;
use steering_core::polytope::{geodesic::geodesic_icosahedral, vertices_to_text};

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    let octahedron: Vec<Vector3<f64>> = (0..3)
        .flat_map(|k| {
            let e = Vector3::ith(k, 1.0);
            [e, -e]
        })
        .collect();
    std::fs::write(
        dir.join("oct-6.txt"),
        format!("# octahedron, antipodal pairs\n{}", vertices_to_text(&octahedron)),
    )?;
    for f in 1..=5 {
        let v = geodesic_icosahedral(f);
        let name = format!("icosa-{}", v.len());
        let header = format!("# geodesic icosahedral subdivision, frequency {f}, antipodal pairs\n");
        std::fs::write(dir.join(format!("{name}.txt")), header + &vertices_to_text(&v))?;
        println!("{name}");
    }
    Ok(())
}
