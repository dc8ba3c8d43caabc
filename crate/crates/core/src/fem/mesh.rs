use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Where a vertex of a refined mesh came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexOrigin {
    Vertex(usize),
    /// Midpoint of the coarse edge with these endpoints.
    EdgeMidpoint(usize, usize),
}

#[derive(Debug, Clone)]
pub struct Refinement {
    pub coarse: Arc<Mesh>,
    pub vertex_origin: Vec<VertexOrigin>,
}

/// Conforming triangulation with counterclockwise triangles.
///
/// Child triangles of a refined mesh are numbered `4t..4t+4` for coarse
/// triangle `t`, in the order corner at local vertex 0, 1, 2, then the
/// interior triangle.
#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    /// Edge ids of local edges (0,1), (1,2), (2,0).
    triangle_edges: Vec<[usize; 3]>,
    boundary_vertices: Vec<usize>,
    level: usize,
    parent: Option<Refinement>,
}

impl PartialEq for Mesh {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.triangles == other.triangles
    }
}

pub(crate) fn on_unit_square_boundary(p: Point) -> bool {
    p[0] == 0.0 || p[0] == 1.0 || p[1] == 0.0 || p[1] == 1.0
}

impl Mesh {
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        Self::build(vertices, triangles, 0, None)
    }

    fn build(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        level: usize,
        parent: Option<Refinement>,
    ) -> Result<Self> {
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidArgument(format!("triangle {t} references a missing vertex")));
            }
            let area = signed_area(&vertices, tri);
            if !(area > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "triangle {t} has non-positive signed area {area:e}"
                )));
            }
        }
        let mut edge_ids: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for tri in &triangles {
            let mut te = [0usize; 3];
            for (k, (a, b)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
                let key = [tri[a].min(tri[b]), tri[a].max(tri[b])];
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edges.len() - 1
                });
                te[k] = id;
            }
            triangle_edges.push(te);
        }
        let boundary_vertices = (0..vertices.len())
            .filter(|&v| on_unit_square_boundary(vertices[v]))
            .collect();
        Ok(Self {
            vertices,
            triangles,
            edges,
            triangle_edges,
            boundary_vertices,
            level,
            parent,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.triangle_edges
    }

    /// Vertices on the boundary of the unit square.
    pub fn boundary_vertices(&self) -> &[usize] {
        &self.boundary_vertices
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn parent(&self) -> Option<&Refinement> {
        self.parent.as_ref()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn area(&self, t: usize) -> f64 {
        signed_area(&self.vertices, &self.triangles[t])
    }

    /// Largest edge length.
    pub fn h_max(&self) -> f64 {
        self.edges
            .iter()
            .map(|&[a, b]| {
                let (p, q) = (self.vertices[a], self.vertices[b]);
                (p[0] - q[0]).hypot(p[1] - q[1])
            })
            .fold(0.0, f64::max)
    }

    /// Nodes as `x y` lines and triangles as `i j k` lines.
    pub fn to_node_text(&self) -> String {
        let mut out = String::new();
        for p in &self.vertices {
            let _ = writeln!(out, "{:.16e} {:.16e}", p[0], p[1]);
        }
        out
    }

    pub fn to_element_text(&self) -> String {
        let mut out = String::new();
        for t in &self.triangles {
            let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
        }
        out
    }

    pub fn write_node_element_files(&self, node_path: &Path, element_path: &Path) -> Result<()> {
        fs::write(node_path, self.to_node_text()).map_err(|e| Error::io(node_path, e))?;
        fs::write(element_path, self.to_element_text()).map_err(|e| Error::io(element_path, e))
    }
}

fn signed_area(vertices: &[Point], tri: &[usize; 3]) -> f64 {
    let [a, b, c] = tri.map(|v| vertices[v]);
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// `n × n` squares, each split along the diagonal from `(i, j)` to
/// `(i+1, j+1)`.
pub fn unit_square_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidArgument("unit square mesh needs n >= 1".into()));
    }
    let h = n as f64;
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 / h, j as f64 / h]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (v00, v10, v11, v01) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    Mesh::new(vertices, triangles)
}

/// Red refinement: each triangle splits into four through its edge midpoints.
/// Coarse vertices keep their indices; edge midpoints follow in edge order.
pub fn refine(coarse: &Arc<Mesh>) -> Mesh {
    let nv = coarse.num_vertices();
    let mut vertices = coarse.vertices.clone();
    let mut vertex_origin: Vec<VertexOrigin> = (0..nv).map(VertexOrigin::Vertex).collect();
    for &[a, b] in &coarse.edges {
        let (p, q) = (coarse.vertices[a], coarse.vertices[b]);
        vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
        vertex_origin.push(VertexOrigin::EdgeMidpoint(a, b));
    }
    let mut triangles = Vec::with_capacity(4 * coarse.num_triangles());
    for (tri, te) in coarse.triangles.iter().zip(&coarse.triangle_edges) {
        let [a, b, c] = *tri;
        let [mab, mbc, mca] = te.map(|e| nv + e);
        triangles.push([a, mab, mca]);
        triangles.push([mab, b, mbc]);
        triangles.push([mca, mbc, c]);
        triangles.push([mab, mbc, mca]);
    }
    Mesh::build(
        vertices,
        triangles,
        coarse.level + 1,
        Some(Refinement {
            coarse: Arc::clone(coarse),
            vertex_origin,
        }),
    )
    .expect("refinement of a valid mesh is valid")
}

/// Barycentric coordinates, relative to the parent triangle, of the vertices
/// of child `k` (see [`Mesh`] for the child order).
pub(crate) fn child_vertex_barycentrics(k: usize) -> [[f64; 3]; 3] {
    const V0: [f64; 3] = [1.0, 0.0, 0.0];
    const V1: [f64; 3] = [0.0, 1.0, 0.0];
    const V2: [f64; 3] = [0.0, 0.0, 1.0];
    const M01: [f64; 3] = [0.5, 0.5, 0.0];
    const M12: [f64; 3] = [0.0, 0.5, 0.5];
    const M20: [f64; 3] = [0.5, 0.0, 0.5];
    match k {
        0 => [V0, M01, M20],
        1 => [M01, V1, M12],
        2 => [M20, M12, V2],
        _ => [M01, M12, M20],
    }
}
