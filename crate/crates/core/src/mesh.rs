//! Structured triangulations of a rectangle with wall-tagged boundary edges
//! and one-level uniform refinement (the velocity mesh is the pressure mesh
//! refined once).

use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid mesh dimensions: {0}")]
    InvalidArgument(String),
}

/// The four straight walls of the rectangular domain. The order is fixed so
/// serialization and tag iteration are stable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WallTag {
    Left,
    Right,
    Bottom,
    Top,
}

impl WallTag {
    pub const ALL: [WallTag; 4] = [WallTag::Left, WallTag::Right, WallTag::Bottom, WallTag::Top];

    /// Outward unit normal of the wall.
    pub fn normal(self) -> [f64; 2] {
        match self {
            WallTag::Left => [-1.0, 0.0],
            WallTag::Right => [1.0, 0.0],
            WallTag::Bottom => [0.0, -1.0],
            WallTag::Top => [0.0, 1.0],
        }
    }

    /// Index of the velocity component tangential to the wall (0 = x, 1 = y).
    pub fn tangential_component(self) -> usize {
        match self {
            WallTag::Left | WallTag::Right => 1,
            WallTag::Bottom | WallTag::Top => 0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WallTag::Left => "left",
            WallTag::Right => "right",
            WallTag::Bottom => "bottom",
            WallTag::Top => "top",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub wall: WallTag,
}

/// Triangulated rectangle. Triangles are counter-clockwise; boundary edges
/// exactly cover the perimeter. `parent_map` is present on refined meshes and
/// maps each fine triangle to its coarse parent.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub parent_map: Option<Vec<usize>>,
    pub lx: f64,
    pub ly: f64,
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn signed_area(&self, tri: usize) -> f64 {
        let [a, b, c] = self.triangles[tri];
        let pa = self.nodes[a];
        let pb = self.nodes[b];
        let pc = self.nodes[c];
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.signed_area(t)).sum()
    }
}

/// Builds the structured triangulation of `[0, Lx] x [0, Ly]` with `nx` by
/// `ny` cells, each split along the diagonal from its lower-left corner.
pub fn build_rectangle(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Mesh, MeshError> {
    if !(lx > 0.0) || !(ly > 0.0) {
        return Err(MeshError::InvalidArgument(format!("domain extents must be positive, got {lx} x {ly}")));
    }
    if nx == 0 || ny == 0 {
        return Err(MeshError::InvalidArgument(format!("cell counts must be at least 1, got {nx} x {ny}")));
    }
    let node = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([lx * i as f64 / nx as f64, ly * j as f64 / ny as f64]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let a = node(i, j);
            let b = node(i + 1, j);
            let c = node(i + 1, j + 1);
            let d = node(i, j + 1);
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary_edges.push(BoundaryEdge { nodes: [node(i, 0), node(i + 1, 0)], wall: WallTag::Bottom });
        boundary_edges.push(BoundaryEdge { nodes: [node(i, ny), node(i + 1, ny)], wall: WallTag::Top });
    }
    for j in 0..ny {
        boundary_edges.push(BoundaryEdge { nodes: [node(0, j), node(0, j + 1)], wall: WallTag::Left });
        boundary_edges.push(BoundaryEdge { nodes: [node(nx, j), node(nx, j + 1)], wall: WallTag::Right });
    }
    Ok(Mesh { nodes, triangles, boundary_edges, parent_map: None, lx, ly })
}

/// Splits every triangle into four by edge midpoints. Coarse node indices are
/// a prefix of the fine node indices with identical coordinates.
pub fn refine_uniform(m: &Mesh) -> Mesh {
    let mut nodes = m.nodes.clone();
    let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut mid = |a: usize, b: usize, nodes: &mut Vec<[f64; 2]>| -> usize {
        let key = (a.min(b), a.max(b));
        *midpoint.entry(key).or_insert_with(|| {
            let pa = nodes[a];
            let pb = nodes[b];
            nodes.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
            nodes.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(4 * m.n_triangles());
    let mut parent_map = Vec::with_capacity(4 * m.n_triangles());
    for (t, &[v0, v1, v2]) in m.triangles.iter().enumerate() {
        let m01 = mid(v0, v1, &mut nodes);
        let m12 = mid(v1, v2, &mut nodes);
        let m20 = mid(v2, v0, &mut nodes);
        triangles.push([v0, m01, m20]);
        triangles.push([v1, m12, m01]);
        triangles.push([v2, m20, m12]);
        triangles.push([m01, m12, m20]);
        parent_map.extend_from_slice(&[t, t, t, t]);
    }
    let mut boundary_edges = Vec::with_capacity(2 * m.boundary_edges.len());
    for be in &m.boundary_edges {
        let [a, b] = be.nodes;
        let mm = mid(a, b, &mut nodes);
        boundary_edges.push(BoundaryEdge { nodes: [a, mm], wall: be.wall });
        boundary_edges.push(BoundaryEdge { nodes: [mm, b], wall: be.wall });
    }
    Mesh { nodes, triangles, boundary_edges, parent_map: Some(parent_map), lx: m.lx, ly: m.ly }
}

/// Nodes lying on the requested walls; a corner node belongs to both of its
/// adjacent walls.
pub fn wall_nodes(m: &Mesh, walls: &BTreeSet<WallTag>) -> BTreeSet<usize> {
    let mut out = BTreeSet::new();
    for be in &m.boundary_edges {
        if walls.contains(&be.wall) {
            out.insert(be.nodes[0]);
            out.insert(be.nodes[1]);
        }
    }
    out
}
