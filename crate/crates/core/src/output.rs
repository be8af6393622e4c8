//! CSV and legacy VTK writers. Floats use `{:.17e}` so reruns are
//! byte-identical and values round-trip exactly.

use std::fmt::Write;

use crate::mesh::Mesh;
use crate::tensorfield::{compute_strain, DisplacementField};
use crate::Result;

/// `node,x,y,u_x,u_y`.
pub fn solution_csv(mesh: &Mesh, u: &DisplacementField) -> Result<String> {
    u.check_mesh(mesh)?;
    let mut s = String::from("node,x,y,u_x,u_y\n");
    for (v, (p, d)) in mesh.nodes().iter().zip(u.values()).enumerate() {
        writeln!(s, "{v},{:.17e},{:.17e},{:.17e},{:.17e}", p[0], p[1], d[0], d[1]).expect("string write");
    }
    Ok(s)
}

/// Header plus rows, newline-terminated.
pub fn csv(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

/// Legacy ASCII VTK unstructured grid: displacement as point vectors,
/// `div u` as cell scalars.
pub fn vtk(mesh: &Mesh, u: &DisplacementField) -> Result<String> {
    let strain = compute_strain(mesh, u)?;
    let mut s = String::new();
    let w = &mut s;
    writeln!(w, "# vtk DataFile Version 3.0").unwrap();
    writeln!(w, "orlicz-elastica displacement").unwrap();
    writeln!(w, "ASCII").unwrap();
    writeln!(w, "DATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(w, "POINTS {} double", mesh.n_nodes()).unwrap();
    for p in mesh.nodes() {
        writeln!(w, "{:.17e} {:.17e} 0", p[0], p[1]).unwrap();
    }
    writeln!(w, "CELLS {} {}", mesh.n_elements(), 4 * mesh.n_elements()).unwrap();
    for t in mesh.elements() {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(w, "CELL_TYPES {}", mesh.n_elements()).unwrap();
    for _ in mesh.elements() {
        writeln!(w, "5").unwrap();
    }
    writeln!(w, "POINT_DATA {}", mesh.n_nodes()).unwrap();
    writeln!(w, "VECTORS displacement double").unwrap();
    for d in u.values() {
        writeln!(w, "{:.17e} {:.17e} 0", d[0], d[1]).unwrap();
    }
    writeln!(w, "CELL_DATA {}", mesh.n_elements()).unwrap();
    writeln!(w, "SCALARS div_u double 1").unwrap();
    writeln!(w, "LOOKUP_TABLE default").unwrap();
    for st in &strain.strains {
        writeln!(w, "{:.17e}", st.div).unwrap();
    }
    Ok(s)
}
