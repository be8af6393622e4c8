//! Simplicial 2D meshes with Dirichlet/Neumann boundary tags and P1 geometry.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Spatial dimension of the generated meshes.
pub const DIM: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Dirichlet,
    Neumann,
}

impl BoundaryTag {
    pub fn letter(self) -> char {
        match self {
            BoundaryTag::Dirichlet => 'D',
            BoundaryTag::Neumann => 'N',
        }
    }
}

impl FromStr for BoundaryTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "D" => Ok(BoundaryTag::Dirichlet),
            "N" => Ok(BoundaryTag::Neumann),
            _ => Err(Error::InvalidParameter(format!("boundary tag must be D or N, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
}

/// Area and constant P1 basis gradients of one triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub area: f64,
    /// `grads[a]` is `∇λ_a` for local vertex `a`.
    pub grads: [[f64; 2]; 3],
}

impl ElementGeometry {
    /// Returns the signed area (positive for counterclockwise) together with
    /// the basis gradients.
    pub fn compute(p: [[f64; 2]; 3]) -> (f64, [[f64; 2]; 3]) {
        let [p0, p1, p2] = p;
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let inv = 1.0 / det;
        let grads = [
            [(p1[1] - p2[1]) * inv, (p2[0] - p1[0]) * inv],
            [(p2[1] - p0[1]) * inv, (p0[0] - p2[0]) * inv],
            [(p0[1] - p1[1]) * inv, (p1[0] - p0[0]) * inv],
        ];
        (0.5 * det, grads)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<[f64; 2]>,
    elements: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge>,
    geometry: Vec<ElementGeometry>,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    /// Builds and validates a mesh: every element counterclockwise with
    /// positive area, every edge on `∂Ω` tagged exactly once and no tags on
    /// interior edges.
    pub fn new(
        nodes: Vec<[f64; 2]>,
        elements: Vec<[usize; 3]>,
        boundary: Vec<BoundaryEdge>,
    ) -> Result<Self> {
        if nodes.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite node coordinate".into()));
        }
        let n = nodes.len();
        let mut geometry = Vec::with_capacity(elements.len());
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for (e, tri) in elements.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&v| v >= n) {
                return Err(Error::InvalidParameter(format!(
                    "element {e} references node {bad} but the mesh has {n} nodes"
                )));
            }
            let (area, grads) = ElementGeometry::compute(tri.map(|v| nodes[v]));
            if !(area > 0.0) {
                return Err(Error::Orientation { element: e, area });
            }
            geometry.push(ElementGeometry { area, grads });
            for k in 0..3 {
                *edge_count.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default() += 1;
            }
        }
        if let Some((&(a, b), &c)) = edge_count.iter().find(|(_, &c)| c > 2) {
            return Err(Error::InvalidParameter(format!(
                "edge ({a}, {b}) is shared by {c} elements"
            )));
        }
        let mut tagged: HashMap<(usize, usize), BoundaryTag> = HashMap::new();
        for be in &boundary {
            let key = edge_key(be.nodes[0], be.nodes[1]);
            match edge_count.get(&key) {
                Some(1) => {}
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "tagged edge ({}, {}) is not a boundary edge of exactly one element",
                        be.nodes[0], be.nodes[1]
                    )))
                }
            }
            if tagged.insert(key, be.tag).is_some() {
                return Err(Error::InvalidParameter(format!(
                    "boundary edge ({}, {}) is tagged twice",
                    be.nodes[0], be.nodes[1]
                )));
            }
        }
        // report untagged edges in element order for reproducible messages
        for tri in &elements {
            for k in 0..3 {
                let key = edge_key(tri[k], tri[(k + 1) % 3]);
                if edge_count[&key] == 1 && !tagged.contains_key(&key) {
                    return Err(Error::UntaggedEdge(tri[k], tri[(k + 1) % 3]));
                }
            }
        }
        Ok(Self { nodes, elements, boundary, geometry })
    }

    /// Structured triangulation of `[x₀,x₁]×[y₀,y₁]` with `nx × ny` cells,
    /// each split along its lower-left to upper-right diagonal.
    pub fn generate_rectangle(
        nx: usize,
        ny: usize,
        extent: [f64; 4],
        sides: RectangleSides,
    ) -> Result<Self> {
        let [x0, x1, y0, y1] = extent;
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidParameter(format!("grid must be at least 1x1, got {nx}x{ny}")));
        }
        if !(x1 > x0) || !(y1 > y0) || extent.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("degenerate extent {extent:?}")));
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                nodes.push([
                    x0 + (x1 - x0) * i as f64 / nx as f64,
                    y0 + (y1 - y0) * j as f64 / ny as f64,
                ]);
            }
        }
        let mut elements = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                elements.push([a, b, c]);
                elements.push([a, c, d]);
            }
        }
        let mut boundary = Vec::with_capacity(2 * (nx + ny));
        for i in 0..nx {
            boundary.push(BoundaryEdge { nodes: [id(i, 0), id(i + 1, 0)], tag: sides.bottom });
        }
        for j in 0..ny {
            boundary.push(BoundaryEdge { nodes: [id(nx, j), id(nx, j + 1)], tag: sides.right });
        }
        for i in (0..nx).rev() {
            boundary.push(BoundaryEdge { nodes: [id(i + 1, ny), id(i, ny)], tag: sides.top });
        }
        for j in (0..ny).rev() {
            boundary.push(BoundaryEdge { nodes: [id(0, j + 1), id(0, j)], tag: sides.left });
        }
        Self::new(nodes, elements, boundary)
    }

    pub fn unit_square(n: usize, sides: RectangleSides) -> Result<Self> {
        Self::generate_rectangle(n, n, [0.0, 1.0, 0.0, 1.0], sides)
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn boundary(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn geometry(&self) -> &[ElementGeometry] {
        &self.geometry
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn vertices(&self, e: usize) -> [[f64; 2]; 3] {
        self.elements[e].map(|v| self.nodes[v])
    }

    pub fn centroid(&self, e: usize) -> [f64; 2] {
        let p = self.vertices(e);
        [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]
    }

    pub fn total_area(&self) -> f64 {
        crate::numeric::compensated_sum(self.geometry.iter().map(|g| g.area))
    }

    /// Largest element diameter.
    pub fn mesh_size(&self) -> f64 {
        (0..self.n_elements())
            .map(|e| {
                let p = self.vertices(e);
                (0..3)
                    .map(|k| dist(p[k], p[(k + 1) % 3]))
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Diameter of the node cloud (equals `diam(Ω)` for polygonal meshes).
    pub fn diameter(&self) -> f64 {
        let b = self.boundary_node_flags();
        let pts: Vec<[f64; 2]> =
            (0..self.n_nodes()).filter(|&v| b[v]).map(|v| self.nodes[v]).collect();
        let mut d: f64 = 0.0;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                d = d.max(dist(pts[i], pts[j]));
            }
        }
        d
    }

    pub fn has_dirichlet(&self) -> bool {
        self.boundary.iter().any(|e| e.tag == BoundaryTag::Dirichlet)
    }

    /// True for every node on `∂Ω`, regardless of tag.
    pub fn boundary_node_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.n_nodes()];
        for e in &self.boundary {
            flags[e.nodes[0]] = true;
            flags[e.nodes[1]] = true;
        }
        flags
    }

    /// True for every node incident to a Dirichlet-tagged edge.
    pub fn dirichlet_node_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.n_nodes()];
        for e in self.boundary.iter().filter(|e| e.tag == BoundaryTag::Dirichlet) {
            flags[e.nodes[0]] = true;
            flags[e.nodes[1]] = true;
        }
        flags
    }

    /// Euclidean distance from `p` to the nearest boundary edge.
    pub fn distance_to_boundary(&self, p: [f64; 2]) -> f64 {
        self.boundary
            .iter()
            .map(|e| segment_distance(p, self.nodes[e.nodes[0]], self.nodes[e.nodes[1]]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Elements incident to each node, in increasing element order.
    pub fn node_elements(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_nodes()];
        for (e, tri) in self.elements.iter().enumerate() {
            for &v in tri {
                adj[v].push(e);
            }
        }
        adj
    }

    /// Lumped (row-sum) P1 mass: `Σ |T|/3` over incident elements.
    pub fn lumped_mass(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_nodes()];
        for (tri, g) in self.elements.iter().zip(&self.geometry) {
            for &v in tri {
                m[v] += g.area / 3.0;
            }
        }
        m
    }

    /// Parses the line-oriented text mesh format.
    pub fn parse(text: &str) -> Result<Self> {
        MeshReader::new(text).read()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Serialises to the text mesh format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "nodes {}", self.nodes.len());
        for p in &self.nodes {
            let _ = writeln!(s, "{:?} {:?}", p[0], p[1]);
        }
        let _ = writeln!(s, "elements {}", self.elements.len());
        for t in &self.elements {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        let _ = writeln!(s, "boundary {}", self.boundary.len());
        for b in &self.boundary {
            let _ = writeln!(s, "{} {} {}", b.nodes[0], b.nodes[1], b.tag.letter());
        }
        s
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    dist(p, [a[0] + t * dx, a[1] + t * dy])
}

/// Boundary tag per side of a generated rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RectangleSides {
    pub left: BoundaryTag,
    pub right: BoundaryTag,
    pub bottom: BoundaryTag,
    pub top: BoundaryTag,
}

impl RectangleSides {
    pub fn all(tag: BoundaryTag) -> Self {
        Self { left: tag, right: tag, bottom: tag, top: tag }
    }

    /// Parses `left:D,right:N,...`; sides not listed default to Dirichlet.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut sides = Self::all(BoundaryTag::Dirichlet);
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (side, tag) = item.split_once(':').ok_or_else(|| {
                Error::InvalidParameter(format!("boundary spec item `{item}` is not side:TAG"))
            })?;
            let tag: BoundaryTag = tag.trim().parse()?;
            match side.trim() {
                "left" => sides.left = tag,
                "right" => sides.right = tag,
                "bottom" => sides.bottom = tag,
                "top" => sides.top = tag,
                other => {
                    return Err(Error::InvalidParameter(format!("unknown side `{other}`")))
                }
            }
        }
        Ok(sides)
    }
}

struct MeshReader<'a> {
    lines: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    last_line: usize,
}

impl<'a> MeshReader<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
                .filter(|(_, l)| !l.is_empty()),
        );
        Self { lines: it.peekable(), last_line: 0 }
    }

    fn err(line: usize, msg: impl Into<String>) -> Error {
        Error::MeshParse { line, msg: msg.into() }
    }

    fn next_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.lines.next() {
            Some((n, l)) => {
                self.last_line = n;
                Ok((n, l))
            }
            None => Err(Self::err(self.last_line + 1, format!("unexpected end of file, expected {what}"))),
        }
    }

    fn header(&mut self, keyword: &str) -> Result<usize> {
        let (n, line) = self.next_line(&format!("`{keyword} <count>`"))?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(keyword) {
            return Err(Self::err(n, format!("expected `{keyword} <count>`, found `{line}`")));
        }
        let count = parts
            .next()
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| Self::err(n, format!("missing or invalid count after `{keyword}`")))?;
        if parts.next().is_some() {
            return Err(Self::err(n, "trailing tokens after count"));
        }
        Ok(count)
    }

    fn fields<const K: usize>(&mut self, what: &str) -> Result<(usize, [&'a str; K])> {
        let (n, line) = self.next_line(what)?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != K {
            return Err(Self::err(n, format!("expected {K} fields for {what}, found {}", parts.len())));
        }
        Ok((n, std::array::from_fn(|i| parts[i])))
    }

    fn read(mut self) -> Result<Mesh> {
        let nn = self.header("nodes")?;
        let mut nodes = Vec::with_capacity(nn);
        for _ in 0..nn {
            let (n, [x, y]) = self.fields::<2>("a node")?;
            let x: f64 = x.parse().map_err(|_| Self::err(n, format!("bad coordinate `{x}`")))?;
            let y: f64 = y.parse().map_err(|_| Self::err(n, format!("bad coordinate `{y}`")))?;
            nodes.push([x, y]);
        }
        let ne = self.header("elements")?;
        let mut elements = Vec::with_capacity(ne);
        let mut element_lines = Vec::with_capacity(ne);
        for _ in 0..ne {
            let (n, f) = self.fields::<3>("an element")?;
            let mut tri = [0usize; 3];
            for (slot, tok) in tri.iter_mut().zip(f) {
                *slot = tok.parse().map_err(|_| Self::err(n, format!("bad node index `{tok}`")))?;
                if *slot >= nn {
                    return Err(Self::err(n, format!("node index {slot} out of range (nodes {nn})")));
                }
            }
            elements.push(tri);
            element_lines.push(n);
        }
        let nb = self.header("boundary")?;
        let mut boundary = Vec::with_capacity(nb);
        for _ in 0..nb {
            let (n, [a, b, tag]) = self.fields::<3>("a boundary edge")?;
            let a: usize = a.parse().map_err(|_| Self::err(n, format!("bad node index `{a}`")))?;
            let b: usize = b.parse().map_err(|_| Self::err(n, format!("bad node index `{b}`")))?;
            let tag: BoundaryTag = tag.parse().map_err(|_| Self::err(n, format!("bad tag `{tag}`, expected D or N")))?;
            boundary.push(BoundaryEdge { nodes: [a, b], tag });
        }
        if let Some((n, l)) = self.lines.next() {
            return Err(Self::err(n, format!("unexpected content `{l}`")));
        }
        Mesh::new(nodes, elements, boundary)
    }
}

/// Degree-of-freedom layout for a `DIM`-component displacement field.
///
/// Numbering is component-major: dof `c * n_nodes + v` is component `c` at
/// node `v`.
#[derive(Debug, Clone)]
pub struct DofMap {
    n_nodes: usize,
    dirichlet_mask: Vec<bool>,
    free_dofs: Vec<usize>,
    /// `free_index[dof]` is the position among free dofs, `usize::MAX` if constrained.
    free_index: Vec<usize>,
    lumped_mass: Vec<f64>,
    rigid_modes: Option<Vec<Vec<f64>>>,
}

impl DofMap {
    pub fn build(mesh: &Mesh) -> Self {
        let n = mesh.n_nodes();
        let dnodes = mesh.dirichlet_node_flags();
        let dirichlet_mask: Vec<bool> = (0..DIM * n).map(|dof| dnodes[dof % n]).collect();
        let free_dofs: Vec<usize> = (0..DIM * n).filter(|&d| !dirichlet_mask[d]).collect();
        let mut free_index = vec![usize::MAX; DIM * n];
        for (k, &d) in free_dofs.iter().enumerate() {
            free_index[d] = k;
        }
        let lumped_mass = mesh.lumped_mass();
        let rigid_modes = (!mesh.has_dirichlet()).then(|| rigid_mode_basis(mesh, &lumped_mass));
        Self { n_nodes: n, dirichlet_mask, free_dofs, free_index, lumped_mass, rigid_modes }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_dofs(&self) -> usize {
        DIM * self.n_nodes
    }

    pub fn dof(&self, node: usize, comp: usize) -> usize {
        comp * self.n_nodes + node
    }

    pub fn dirichlet_mask(&self) -> &[bool] {
        &self.dirichlet_mask
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn free_index(&self, dof: usize) -> Option<usize> {
        let k = self.free_index[dof];
        (k != usize::MAX).then_some(k)
    }

    pub fn lumped_mass(&self) -> &[f64] {
        &self.lumped_mass
    }

    /// Rigid motions, orthonormal in the lumped-mass L² inner product.
    /// Present iff the mesh has no Dirichlet edge.
    pub fn rigid_modes(&self) -> Option<&[Vec<f64>]> {
        self.rigid_modes.as_deref()
    }

    /// Lumped-mass L² inner product of two full dof vectors.
    pub fn mass_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = self.n_nodes;
        let mut s = 0.0;
        for c in 0..DIM {
            for v in 0..n {
                s += self.lumped_mass[v] * a[c * n + v] * b[c * n + v];
            }
        }
        s
    }

    /// Removes the rigid-motion component of a full dof vector (no-op when
    /// Dirichlet data pins the body).
    pub fn project_out_rigid(&self, u: &mut [f64]) {
        if let Some(modes) = &self.rigid_modes {
            for m in modes {
                let c = self.mass_inner(u, m);
                for (ui, mi) in u.iter_mut().zip(m) {
                    *ui -= c * mi;
                }
            }
        }
    }

    /// Removes the rigid-motion component of a dual (residual) vector so it
    /// annihilates every rigid motion: `r ← r - Σ (r·ρ) Mρ`.
    pub fn project_dual(&self, r: &mut [f64]) {
        if let Some(modes) = &self.rigid_modes {
            let n = self.n_nodes;
            for m in modes {
                let c = crate::numeric::dot(r, m);
                for (dof, ri) in r.iter_mut().enumerate() {
                    *ri -= c * self.lumped_mass[dof % n] * m[dof];
                }
            }
        }
    }
}

/// `{(1,0), (0,1), (-y,x)}` at the nodes, Gram–Schmidt orthonormalised in the
/// lumped-mass inner product.
fn rigid_mode_basis(mesh: &Mesh, mass: &[f64]) -> Vec<Vec<f64>> {
    let n = mesh.n_nodes();
    let mut raw = vec![vec![0.0; DIM * n]; 3];
    for (v, p) in mesh.nodes().iter().enumerate() {
        raw[0][v] = 1.0;
        raw[1][n + v] = 1.0;
        raw[2][v] = -p[1];
        raw[2][n + v] = p[0];
    }
    let inner = |a: &[f64], b: &[f64]| -> f64 {
        (0..DIM * n).map(|d| mass[d % n] * a[d] * b[d]).sum()
    };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(3);
    for mut m in raw {
        for b in &basis {
            let c = inner(&m, b);
            for (mi, bi) in m.iter_mut().zip(b) {
                *mi -= c * bi;
            }
        }
        let norm = inner(&m, &m).sqrt();
        for mi in m.iter_mut() {
            *mi /= norm;
        }
        basis.push(m);
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use BoundaryTag::*;

    #[test]
    fn single_cell_counts() {
        let m = Mesh::unit_square(1, RectangleSides::all(Dirichlet)).unwrap();
        assert_eq!(m.n_nodes(), 4);
        assert_eq!(m.n_elements(), 2);
        assert_eq!(m.boundary().len(), 4);
        assert!(m.boundary().iter().all(|e| e.tag == Dirichlet));
    }

    #[test]
    fn areas_partition_domain() {
        let m = Mesh::unit_square(2, RectangleSides::all(Dirichlet)).unwrap();
        assert!((m.total_area() - 1.0).abs() < 1e-15);
        let m = Mesh::generate_rectangle(7, 3, [-1.0, 2.5, 0.5, 1.75], RectangleSides::all(Neumann)).unwrap();
        assert!((m.total_area() - 3.5 * 1.25).abs() <= 1e-12 * 4.375);
        assert_eq!(m.n_elements(), 2 * 7 * 3);
    }

    #[test]
    fn interior_valence_is_six() {
        let m = Mesh::unit_square(8, RectangleSides::all(Dirichlet)).unwrap();
        let boundary = m.boundary_node_flags();
        // oracle: count incidences by scanning the element list directly
        let mut valence = vec![0usize; m.n_nodes()];
        for tri in m.elements() {
            for &v in tri {
                valence[v] += 1;
            }
        }
        let interior: Vec<usize> = (0..m.n_nodes()).filter(|&v| !boundary[v]).collect();
        assert_eq!(interior.len(), 49);
        assert!(interior.iter().all(|&v| valence[v] == 6));
    }

    #[test]
    fn basis_gradients_sum_to_zero_and_match_coordinates() {
        let m = Mesh::generate_rectangle(3, 4, [0.0, 2.0, -1.0, 1.0], RectangleSides::all(Dirichlet)).unwrap();
        for (e, g) in m.geometry().iter().enumerate() {
            for k in 0..2 {
                let s: f64 = g.grads.iter().map(|gr| gr[k]).sum();
                assert!(s.abs() < 1e-12);
            }
            // ∇λ_a · (p_b - p_a) = δ_ab - 1 for the P1 hat functions
            let p = m.vertices(e);
            for a in 0..3 {
                for b in 0..3 {
                    let d = [p[b][0] - p[a][0], p[b][1] - p[a][1]];
                    let val = g.grads[a][0] * d[0] + g.grads[a][1] * d[1];
                    let expect = if a == b { 0.0 } else { -1.0 };
                    assert!((val - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn round_trip_through_text() {
        let m = Mesh::unit_square(1, RectangleSides::all(Dirichlet)).unwrap();
        let back = Mesh::parse(&m.to_text()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn clockwise_element_is_named() {
        let text = "nodes 4\n0 0\n1 0\n1 1\n0 1\nelements 2\n0 1 2\n0 3 2\nboundary 4\n0 1 D\n1 2 D\n2 3 D\n3 0 D\n";
        match Mesh::parse(text) {
            Err(Error::Orientation { element, .. }) => assert_eq!(element, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_tag_is_reported() {
        let text = "# square\nnodes 4\n0 0\n1 0\n1 1\n0 1\nelements 2\n0 1 2\n0 2 3\nboundary 3\n0 1 D\n1 2 N\n2 3 D\n";
        assert!(matches!(Mesh::parse(text), Err(Error::UntaggedEdge(3, 0))));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "nodes 2\n0 0\n1 zero\n";
        match Mesh::parse(text) {
            Err(Error::MeshParse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match Mesh::parse("nodes 1\n0 0\nelements 1\n0 1 2\n") {
            Err(Error::MeshParse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        match Mesh::parse("vertices 3\n") {
            Err(Error::MeshParse { line, .. }) => assert_eq!(line, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_rectangle_rejected() {
        assert!(Mesh::generate_rectangle(0, 2, [0.0, 1.0, 0.0, 1.0], RectangleSides::all(Dirichlet)).is_err());
        assert!(Mesh::generate_rectangle(2, 2, [1.0, 1.0, 0.0, 1.0], RectangleSides::all(Dirichlet)).is_err());
    }

    #[test]
    fn dofmap_dirichlet_and_rigid_modes() {
        let m = Mesh::unit_square(4, RectangleSides::all(Dirichlet)).unwrap();
        let d = DofMap::build(&m);
        let b = m.boundary_node_flags();
        for dof in 0..d.n_dofs() {
            assert_eq!(d.dirichlet_mask()[dof], b[dof % m.n_nodes()]);
        }
        assert!(d.rigid_modes().is_none());

        let m = Mesh::unit_square(4, RectangleSides::all(Neumann)).unwrap();
        let d = DofMap::build(&m);
        let modes = d.rigid_modes().unwrap();
        assert_eq!(modes.len(), 3);
        for i in 0..3 {
            for j in 0..3 {
                let g = d.mass_inner(&modes[i], &modes[j]);
                assert!((g - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        assert_eq!(d.n_free(), d.n_dofs());
    }

    #[test]
    fn mixed_corners_are_dirichlet() {
        let sides = RectangleSides::parse("left:D,right:N,bottom:N,top:N").unwrap();
        let m = Mesh::unit_square(2, sides).unwrap();
        let d = DofMap::build(&m);
        // corners (0,0) and (0,1) touch both a Dirichlet and a Neumann edge
        assert!(d.dirichlet_mask()[0]);
        assert!(d.dirichlet_mask()[6]);
        assert!(!d.dirichlet_mask()[2]);
        assert!(RectangleSides::parse("middle:D").is_err());
        assert!(RectangleSides::parse("left:X").is_err());
    }

    #[test]
    fn distance_to_boundary_on_square() {
        let m = Mesh::unit_square(4, RectangleSides::all(Dirichlet)).unwrap();
        assert!((m.distance_to_boundary([0.5, 0.5]) - 0.5).abs() < 1e-15);
        assert!((m.distance_to_boundary([0.1, 0.7]) - 0.1).abs() < 1e-15);
        assert!((m.diameter() - 2f64.sqrt()).abs() < 1e-15);
    }
}
