//! P1 finite-element spaces on the coarse (pressure) and fine (velocity,
//! phase) meshes, quadrature rules, and assembly of every bilinear and linear
//! form of the scheme.
//!
//! The interior rule is exact to polynomial degree 4 and the edge rule to
//! degree 5; the discrete energy identity relies on that exactness (the
//! highest interior integrand is degree 4).

use crate::linalg::CsrMatrix;
use crate::mesh::{Mesh, WallTag};
use std::collections::BTreeSet;
use std::sync::Arc;

/// Number of interior quadrature points per triangle.
pub const N_TRI_QP: usize = 6;
/// Number of quadrature points per boundary edge.
pub const N_EDGE_QP: usize = 3;

/// Degree-4 rule on the reference triangle: (barycentric coords, weight);
/// weights sum to 1 and are scaled by the triangle area.
pub const TRI_QP: [([f64; 3], f64); N_TRI_QP] = {
    const A: f64 = 0.445948490915965;
    const B: f64 = 0.091576213509771;
    const WA: f64 = 0.223381589678011;
    const WB: f64 = 0.109951743655322;
    [
        ([A, A, 1.0 - 2.0 * A], WA),
        ([A, 1.0 - 2.0 * A, A], WA),
        ([1.0 - 2.0 * A, A, A], WA),
        ([B, B, 1.0 - 2.0 * B], WB),
        ([B, 1.0 - 2.0 * B, B], WB),
        ([1.0 - 2.0 * B, B, B], WB),
    ]
};

/// 3-point Gauss rule on [0, 1]: (parameter, weight); weights sum to 1 and
/// are scaled by the edge length.
pub const EDGE_QP: [(f64, f64); N_EDGE_QP] = {
    // sqrt(3/5) to full f64 precision
    const S: f64 = 0.774596669241483_4;
    [
        (0.5 - 0.5 * S, 5.0 / 18.0),
        (0.5, 8.0 / 18.0),
        (0.5 + 0.5 * S, 5.0 / 18.0),
    ]
};

/// Per-triangle geometry: P1 basis gradients and area.
#[derive(Debug, Clone, Copy)]
pub struct TriGeom {
    pub grads: [[f64; 2]; 3],
    pub area: f64,
}

pub fn tri_geom(mesh: &Mesh, tri: usize) -> TriGeom {
    let [a, b, c] = mesh.triangles[tri];
    let pa = mesh.nodes[a];
    let pb = mesh.nodes[b];
    let pc = mesh.nodes[c];
    let det = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]);
    let area = 0.5 * det;
    let grads = [
        [(pb[1] - pc[1]) / det, (pc[0] - pb[0]) / det],
        [(pc[1] - pa[1]) / det, (pa[0] - pc[0]) / det],
        [(pa[1] - pb[1]) / det, (pb[0] - pa[0]) / det],
    ];
    TriGeom { grads, area }
}

/// Physical coordinates of a barycentric point in a triangle.
pub fn bary_to_xy(mesh: &Mesh, tri: usize, bary: [f64; 3]) -> [f64; 2] {
    let [a, b, c] = mesh.triangles[tri];
    let pa = mesh.nodes[a];
    let pb = mesh.nodes[b];
    let pc = mesh.nodes[c];
    [
        bary[0] * pa[0] + bary[1] * pb[0] + bary[2] * pc[0],
        bary[0] * pa[1] + bary[1] * pb[1] + bary[2] * pc[1],
    ]
}

/// Barycentric coordinates of a physical point with respect to a triangle.
pub fn xy_to_bary(mesh: &Mesh, tri: usize, xy: [f64; 2]) -> [f64; 3] {
    let geom = tri_geom(mesh, tri);
    let t = mesh.triangles[tri];
    let mut bary = [0.0; 3];
    for k in 0..3 {
        let p = mesh.nodes[t[k]];
        bary[k] = 1.0 + geom.grads[k][0] * (xy[0] - p[0]) + geom.grads[k][1] * (xy[1] - p[1]);
    }
    bary
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    Scalar,
    Vector,
}

/// A P1 space over a mesh, with a per-dof Dirichlet constraint mask.
#[derive(Debug, Clone)]
pub struct Space {
    pub mesh: Arc<Mesh>,
    pub kind: SpaceKind,
    /// Per dof: constrained flag. Only boundary dofs may be flagged.
    pub constrained: Vec<bool>,
    /// Prescribed values for constrained dofs (zero elsewhere).
    pub bc_values: Vec<f64>,
}

impl Space {
    pub fn scalar(mesh: Arc<Mesh>) -> Arc<Space> {
        let n = mesh.n_nodes();
        Arc::new(Space { mesh, kind: SpaceKind::Scalar, constrained: vec![false; n], bc_values: vec![0.0; n] })
    }

    /// The velocity space: x-velocity vanishes on the side walls, y-velocity
    /// on the entire boundary. This enforces u.n = 0 strongly everywhere and
    /// leaves tangential slip only on the bottom and top walls.
    pub fn velocity(mesh: Arc<Mesh>) -> Arc<Space> {
        let n = mesh.n_nodes();
        let mut constrained = vec![false; 2 * n];
        let sides = crate::mesh::wall_nodes(&mesh, &BTreeSet::from([WallTag::Left, WallTag::Right]));
        for &node in &sides {
            constrained[2 * node] = true;
        }
        let all = crate::mesh::wall_nodes(&mesh, &BTreeSet::from(WallTag::ALL));
        for &node in &all {
            constrained[2 * node + 1] = true;
        }
        Arc::new(Space { mesh, kind: SpaceKind::Vector, constrained, bc_values: vec![0.0; 2 * n] })
    }

    pub fn n_comp(&self) -> usize {
        match self.kind {
            SpaceKind::Scalar => 1,
            SpaceKind::Vector => 2,
        }
    }

    pub fn n_dof(&self) -> usize {
        self.mesh.n_nodes() * self.n_comp()
    }

    pub fn dof(&self, node: usize, comp: usize) -> usize {
        node * self.n_comp() + comp
    }
}

/// Coefficient vector over a space. Constrained entries hold their prescribed
/// boundary values exactly.
#[derive(Debug, Clone)]
pub struct Field {
    pub space: Arc<Space>,
    pub values: Vec<f64>,
}

impl Field {
    pub fn zeros(space: Arc<Space>) -> Field {
        let n = space.n_dof();
        Field { space, values: vec![0.0; n] }
    }

    /// Scalar field value at a barycentric point of a triangle.
    pub fn eval_scalar(&self, tri: usize, bary: [f64; 3]) -> f64 {
        debug_assert_eq!(self.space.kind, SpaceKind::Scalar);
        let t = self.space.mesh.triangles[tri];
        bary[0] * self.values[t[0]] + bary[1] * self.values[t[1]] + bary[2] * self.values[t[2]]
    }

    /// Vector field value at a barycentric point of a triangle.
    pub fn eval_vector(&self, tri: usize, bary: [f64; 3]) -> [f64; 2] {
        debug_assert_eq!(self.space.kind, SpaceKind::Vector);
        let t = self.space.mesh.triangles[tri];
        let mut out = [0.0; 2];
        for c in 0..2 {
            out[c] = bary[0] * self.values[2 * t[0] + c]
                + bary[1] * self.values[2 * t[1] + c]
                + bary[2] * self.values[2 * t[2] + c];
        }
        out
    }

    /// Gradient of a scalar field on a triangle (constant per triangle).
    pub fn grad_scalar(&self, tri: usize, geom: &TriGeom) -> [f64; 2] {
        let t = self.space.mesh.triangles[tri];
        let mut g = [0.0; 2];
        for k in 0..3 {
            g[0] += self.values[t[k]] * geom.grads[k][0];
            g[1] += self.values[t[k]] * geom.grads[k][1];
        }
        g
    }

    /// Component gradients of a vector field on a triangle.
    pub fn grad_vector(&self, tri: usize, geom: &TriGeom) -> [[f64; 2]; 2] {
        let t = self.space.mesh.triangles[tri];
        let mut g = [[0.0; 2]; 2];
        for k in 0..3 {
            for c in 0..2 {
                let v = self.values[2 * t[k] + c];
                g[c][0] += v * geom.grads[k][0];
                g[c][1] += v * geom.grads[k][1];
            }
        }
        g
    }
}

/// Nodal interpolant of an analytic scalar function.
pub fn interpolate(space: &Arc<Space>, f: impl Fn(f64, f64) -> f64) -> Field {
    assert_eq!(space.kind, SpaceKind::Scalar);
    let values = space.mesh.nodes.iter().map(|&[x, y]| f(x, y)).collect();
    Field { space: space.clone(), values }
}

/// Nodal interpolant of an analytic vector function; constrained entries are
/// overwritten with their prescribed boundary values.
pub fn interpolate_vector(space: &Arc<Space>, f: impl Fn(f64, f64) -> [f64; 2]) -> Field {
    assert_eq!(space.kind, SpaceKind::Vector);
    let mut values = Vec::with_capacity(space.n_dof());
    for &[x, y] in &space.mesh.nodes {
        let v = f(x, y);
        values.push(v[0]);
        values.push(v[1]);
    }
    for i in 0..space.n_dof() {
        if space.constrained[i] {
            values[i] = space.bc_values[i];
        }
    }
    Field { space: space.clone(), values }
}

/// Mass matrix weighted by a per-quad-point coefficient `w(tri, xy)`. For a
/// vector space the same scalar weight applies to both components.
pub fn assemble_weighted_mass(space: &Space, w: &dyn Fn(usize, usize, [f64; 2]) -> f64) -> CsrMatrix {
    let mesh = &space.mesh;
    let nc = space.n_comp();
    let n = space.n_dof();
    let mut trips = Vec::with_capacity(mesh.n_triangles() * 9 * nc);
    for t in 0..mesh.n_triangles() {
        let geom = tri_geom(mesh, t);
        let tri = mesh.triangles[t];
        let mut local = [[0.0f64; 3]; 3];
        for (qi, &(bary, wq)) in TRI_QP.iter().enumerate() {
            let xy = bary_to_xy(mesh, t, bary);
            let coeff = w(t, qi, xy) * wq * geom.area;
            if coeff == 0.0 {
                continue;
            }
            for i in 0..3 {
                for j in 0..3 {
                    local[i][j] += coeff * bary[i] * bary[j];
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                if local[i][j] != 0.0 {
                    for c in 0..nc {
                        trips.push((space.dof(tri[i], c), space.dof(tri[j], c), local[i][j]));
                    }
                }
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &mut trips)
}

pub fn assemble_mass(space: &Space) -> CsrMatrix {
    assemble_weighted_mass(space, &|_, _, _| 1.0)
}

/// Stiffness matrix `coeff * (grad u, grad v)`; for a vector space the form
/// sums over components.
pub fn assemble_stiffness(space: &Space, coeff: f64) -> CsrMatrix {
    let mesh = &space.mesh;
    let nc = space.n_comp();
    let n = space.n_dof();
    let mut trips = Vec::with_capacity(mesh.n_triangles() * 9 * nc);
    for t in 0..mesh.n_triangles() {
        let geom = tri_geom(mesh, t);
        let tri = mesh.triangles[t];
        for i in 0..3 {
            for j in 0..3 {
                let v = coeff * geom.area * (geom.grads[i][0] * geom.grads[j][0] + geom.grads[i][1] * geom.grads[j][1]);
                for c in 0..nc {
                    trips.push((space.dof(tri[i], c), space.dof(tri[j], c), v));
                }
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &mut trips)
}

/// Skew advection operator N with (N v, v) = 0 whenever u.n = 0 on the
/// boundary: entries (i,j) per component are
/// int (u . grad psi_j) psi_i + (1/2)(div u) psi_j psi_i.
pub fn assemble_convection_skew(u: &Field) -> CsrMatrix {
    let space = &u.space;
    assert_eq!(space.kind, SpaceKind::Vector);
    let mesh = &space.mesh;
    let n = space.n_dof();
    let mut trips = Vec::with_capacity(mesh.n_triangles() * 18);
    for t in 0..mesh.n_triangles() {
        let geom = tri_geom(mesh, t);
        let tri = mesh.triangles[t];
        let gu = u.grad_vector(t, &geom);
        let div_u = gu[0][0] + gu[1][1];
        let mut local = [[0.0f64; 3]; 3];
        for &(bary, wq) in TRI_QP.iter() {
            let uq = u.eval_vector(t, bary);
            let w = wq * geom.area;
            for i in 0..3 {
                for j in 0..3 {
                    let adv = (uq[0] * geom.grads[j][0] + uq[1] * geom.grads[j][1]) * bary[i];
                    let cmp = 0.5 * div_u * bary[j] * bary[i];
                    local[i][j] += w * (adv + cmp);
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                if local[i][j] != 0.0 {
                    for c in 0..2 {
                        trips.push((space.dof(tri[i], c), space.dof(tri[j], c), local[i][j]));
                    }
                }
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &mut trips)
}

/// Boundary mass on the requested walls with a per-edge-quad-point weight.
/// For a scalar space the form acts on the trace; for a vector space it acts
/// on the component tangential to each wall.
pub fn assemble_boundary_weighted_mass(
    space: &Space,
    walls: &BTreeSet<WallTag>,
    w: &dyn Fn(WallTag, usize, usize, [f64; 2]) -> f64,
) -> CsrMatrix {
    let mesh = &space.mesh;
    let n = space.n_dof();
    let mut trips = Vec::new();
    for (e, be) in mesh.boundary_edges.iter().enumerate() {
        if !walls.contains(&be.wall) {
            continue;
        }
        let [a, b] = be.nodes;
        let pa = mesh.nodes[a];
        let pb = mesh.nodes[b];
        let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
        let comp = match space.kind {
            SpaceKind::Scalar => 0,
            SpaceKind::Vector => be.wall.tangential_component(),
        };
        let dofs = [space.dof(a, comp), space.dof(b, comp)];
        let mut local = [[0.0f64; 2]; 2];
        for (qi, &(tq, wq)) in EDGE_QP.iter().enumerate() {
            let xy = [pa[0] + tq * (pb[0] - pa[0]), pa[1] + tq * (pb[1] - pa[1])];
            let coeff = w(be.wall, e, qi, xy) * wq * len;
            let shape = [1.0 - tq, tq];
            for i in 0..2 {
                for j in 0..2 {
                    local[i][j] += coeff * shape[i] * shape[j];
                }
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                trips.push((dofs[i], dofs[j], local[i][j]));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &mut trips)
}

/// Discrete pressure gradient G with G[(i,c), a] = int psi_i d_c chi_a, where
/// chi_a are coarse-mesh P1 basis functions integrated over the fine
/// triangles of the velocity mesh. Rows of constrained velocity dofs are
/// zeroed, so u^T G p realizes the pairing (u, grad p) on the constrained
/// space.
pub fn assemble_pressure_gradient(p_space: &Space, u_space: &Space) -> CsrMatrix {
    assert_eq!(p_space.kind, SpaceKind::Scalar);
    assert_eq!(u_space.kind, SpaceKind::Vector);
    let fine = &u_space.mesh;
    let coarse = &p_space.mesh;
    let parents = fine
        .parent_map
        .as_ref()
        .expect("velocity mesh must carry a parent map to the pressure mesh");
    let mut trips = Vec::with_capacity(fine.n_triangles() * 18);
    for t in 0..fine.n_triangles() {
        let geom = tri_geom(fine, t);
        let tri = fine.triangles[t];
        let pc = parents[t];
        let cgeom = tri_geom(coarse, pc);
        let ctri = coarse.triangles[pc];
        // int_t psi_i = area/3 for each P1 basis of the fine triangle
        let third = geom.area / 3.0;
        for i in 0..3 {
            for c in 0..2 {
                let row = u_space.dof(tri[i], c);
                if u_space.constrained[row] {
                    continue;
                }
                for a in 0..3 {
                    trips.push((row, ctri[a], third * cgeom.grads[a][c]));
                }
            }
        }
    }
    CsrMatrix::from_triplets(u_space.n_dof(), p_space.n_dof(), &mut trips)
}

/// Load vector with entries int f psi_i for a per-quad-point scalar value.
pub fn assemble_load(space: &Space, f: &dyn Fn(usize, usize, [f64; 2]) -> f64) -> Vec<f64> {
    assert_eq!(space.kind, SpaceKind::Scalar);
    let mesh = &space.mesh;
    let mut out = vec![0.0; space.n_dof()];
    for t in 0..mesh.n_triangles() {
        let geom = tri_geom(mesh, t);
        let tri = mesh.triangles[t];
        for (qi, &(bary, wq)) in TRI_QP.iter().enumerate() {
            let xy = bary_to_xy(mesh, t, bary);
            let v = f(t, qi, xy) * wq * geom.area;
            for i in 0..3 {
                out[tri[i]] += v * bary[i];
            }
        }
    }
    out
}

/// Vector-valued load with entries int f . psi_i e_c.
pub fn assemble_load_vector(space: &Space, f: &dyn Fn(usize, usize, [f64; 2]) -> [f64; 2]) -> Vec<f64> {
    assert_eq!(space.kind, SpaceKind::Vector);
    let mesh = &space.mesh;
    let mut out = vec![0.0; space.n_dof()];
    for t in 0..mesh.n_triangles() {
        let geom = tri_geom(mesh, t);
        let tri = mesh.triangles[t];
        for (qi, &(bary, wq)) in TRI_QP.iter().enumerate() {
            let xy = bary_to_xy(mesh, t, bary);
            let v = f(t, qi, xy);
            let w = wq * geom.area;
            for i in 0..3 {
                out[2 * tri[i]] += w * v[0] * bary[i];
                out[2 * tri[i] + 1] += w * v[1] * bary[i];
            }
        }
    }
    out
}

/// Boundary load on the requested walls. For a vector space the value loads
/// the tangential component of each wall.
pub fn assemble_boundary_load(
    space: &Space,
    walls: &BTreeSet<WallTag>,
    f: &dyn Fn(WallTag, usize, usize, [f64; 2]) -> f64,
) -> Vec<f64> {
    let mesh = &space.mesh;
    let mut out = vec![0.0; space.n_dof()];
    for (e, be) in mesh.boundary_edges.iter().enumerate() {
        if !walls.contains(&be.wall) {
            continue;
        }
        let [a, b] = be.nodes;
        let pa = mesh.nodes[a];
        let pb = mesh.nodes[b];
        let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
        let comp = match space.kind {
            SpaceKind::Scalar => 0,
            SpaceKind::Vector => be.wall.tangential_component(),
        };
        for (qi, &(tq, wq)) in EDGE_QP.iter().enumerate() {
            let xy = [pa[0] + tq * (pb[0] - pa[0]), pa[1] + tq * (pb[1] - pa[1])];
            let v = f(be.wall, e, qi, xy) * wq * len;
            out[space.dof(a, comp)] += v * (1.0 - tq);
            out[space.dof(b, comp)] += v * tq;
        }
    }
    out
}

/// L2 norm of a field over the domain (exact for P1 fields).
pub fn l2_norm(field: &Field) -> f64 {
    let mesh = &field.space.mesh;
    let mut acc = 0.0;
    for t in 0..mesh.n_triangles() {
        let geom = tri_geom(mesh, t);
        for &(bary, wq) in TRI_QP.iter() {
            let v2 = match field.space.kind {
                SpaceKind::Scalar => {
                    let v = field.eval_scalar(t, bary);
                    v * v
                }
                SpaceKind::Vector => {
                    let v = field.eval_vector(t, bary);
                    v[0] * v[0] + v[1] * v[1]
                }
            };
            acc += wq * geom.area * v2;
        }
    }
    acc.sqrt()
}

/// L2 norm of an arbitrary per-quad-point scalar over the domain.
pub fn l2_norm_fn(mesh: &Mesh, f: &dyn Fn(usize, usize, [f64; 2]) -> f64) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.n_triangles() {
        let geom = tri_geom(mesh, t);
        for (qi, &(bary, wq)) in TRI_QP.iter().enumerate() {
            let xy = bary_to_xy(mesh, t, bary);
            let v = f(t, qi, xy);
            acc += wq * geom.area * v * v;
        }
    }
    acc.sqrt()
}

/// L2 norm over the requested walls of a per-edge-quad-point scalar.
pub fn l2_norm_walls(mesh: &Mesh, walls: &BTreeSet<WallTag>, f: &dyn Fn(WallTag, usize, usize, [f64; 2]) -> f64) -> f64 {
    boundary_integral(mesh, walls, &|w, e, q, xy| {
        let v = f(w, e, q, xy);
        v * v
    })
    .sqrt()
}

/// Integral over the requested walls of a per-edge-quad-point scalar,
/// evaluated with the edge rule (the same nodes used in assembly).
pub fn boundary_integral(mesh: &Mesh, walls: &BTreeSet<WallTag>, f: &dyn Fn(WallTag, usize, usize, [f64; 2]) -> f64) -> f64 {
    let mut acc = 0.0;
    for (e, be) in mesh.boundary_edges.iter().enumerate() {
        if !walls.contains(&be.wall) {
            continue;
        }
        let [a, b] = be.nodes;
        let pa = mesh.nodes[a];
        let pb = mesh.nodes[b];
        let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
        for (qi, &(tq, wq)) in EDGE_QP.iter().enumerate() {
            let xy = [pa[0] + tq * (pb[0] - pa[0]), pa[1] + tq * (pb[1] - pa[1])];
            acc += wq * len * f(be.wall, e, qi, xy);
        }
    }
    acc
}

/// Linear interpolation of a scalar field along a boundary edge.
pub fn edge_value(field: &Field, edge: &crate::mesh::BoundaryEdge, t: f64) -> f64 {
    let [a, b] = edge.nodes;
    (1.0 - t) * field.values[a] + t * field.values[b]
}

/// Symmetric Dirichlet elimination in place: constrained rows and columns are
/// zeroed, diagonals set to 1, and the right-hand side adjusted so SPD
/// structure is preserved.
pub fn apply_dirichlet(a: &mut CsrMatrix, b: &mut [f64], constrained: &[bool], values: &[f64]) {
    assert_eq!(a.n_rows, a.n_cols);
    assert_eq!(b.len(), a.n_rows);
    for r in 0..a.n_rows {
        let lo = a.row_offsets[r];
        let hi = a.row_offsets[r + 1];
        if constrained[r] {
            for k in lo..hi {
                a.values[k] = if a.col_indices[k] == r { 1.0 } else { 0.0 };
            }
        } else {
            for k in lo..hi {
                let c = a.col_indices[k];
                if constrained[c] {
                    b[r] -= a.values[k] * values[c];
                    a.values[k] = 0.0;
                }
            }
        }
    }
    for r in 0..a.n_rows {
        if constrained[r] {
            b[r] = values[r];
        }
    }
}
