//! Global numbering of the trial space: continuous vector displacements in
//! `(Q^p)^3` plus one `(Q^{p-1,p-1})^3` traction field per mesh face.
//!
//! On a tensor grid the global `Q^p` space is the tensor product of three
//! global 1D hierarchical spaces. Along an axis with `n` intervals the 1D
//! space has `n p + 1` functions: interval `i` owns indices `i p ..= (i+1) p`,
//! with its vertex functions at the two ends and its bubbles in between.
//! All elements share the same axis orientation, so no sign bookkeeping is
//! needed for the displacement field.

use num_complex::Complex64 as C64;

use crate::fespace::quadrature::GaussRule;
use crate::fespace::shape1d::ShapeSet1D;
use crate::mesh::{tangential_axes, BoundaryKind, FaceCondition, FaceId, TensorMesh};

const FREE_NONE: usize = usize::MAX;

/// Displacement data on the Dirichlet boundary, used instead of the constant
/// patch values when provided.
pub type DirichletFn<'a> = &'a (dyn Fn([f64; 3]) -> [C64; 3] + Sync);

/// Map from a local 1D shape index to its offset within the interval.
#[inline]
pub fn local_1d_offset(a: usize, p: usize) -> usize {
    match a {
        0 => 0,
        1 => p,
        k => k - 1,
    }
}

/// Global dof ids of one element in local trial order, plus the traction
/// sign of each local face (+1 when the outward normal equals the face's
/// global `+e_axis` normal).
#[derive(Debug, Clone, PartialEq)]
pub struct ElementDofs {
    pub ids: Vec<usize>,
    pub face_signs: [f64; 6],
}

/// Local face order x-low, x-high, ... has outward normal `-e`, `+e`, ...
pub const LOCAL_FACE_SIGNS: [f64; 6] = [-1.0, 1.0, -1.0, 1.0, -1.0, 1.0];

#[derive(Debug, Clone)]
pub struct TrialDofMap {
    p: usize,
    nodes_1d: [usize; 3],
    n_displacement: usize,
    n_faces: usize,
    pinned: Vec<Option<C64>>,
    free_index: Vec<usize>,
    free_dofs: Vec<usize>,
}

impl TrialDofMap {
    /// Numbering with Dirichlet values taken from the mesh patches.
    pub fn build(mesh: &TensorMesh, p: usize) -> Self {
        Self::build_with(mesh, p, None)
    }

    /// Numbering with Dirichlet values taken from `g` on every Dirichlet face.
    pub fn build_with_dirichlet(mesh: &TensorMesh, p: usize, g: DirichletFn<'_>) -> Self {
        Self::build_with(mesh, p, Some(g))
    }

    fn build_with(mesh: &TensorMesh, p: usize, g: Option<DirichletFn<'_>>) -> Self {
        assert!(p >= 1, "trial order must be at least 1");
        let cells = mesh.cells_per_axis();
        let nodes_1d = cells.map(|n| n * p + 1);
        let n_displacement = 3 * nodes_1d.iter().product::<usize>();
        let n_faces = mesh.n_faces();
        let total = n_displacement + 3 * p * p * n_faces;
        let mut map = Self {
            p,
            nodes_1d,
            n_displacement,
            n_faces,
            pinned: vec![None; total],
            free_index: Vec::new(),
            free_dofs: Vec::new(),
        };
        map.pin_boundary(mesh, g);
        map.number_free();
        map
    }

    fn number_free(&mut self) {
        self.free_index = vec![FREE_NONE; self.pinned.len()];
        self.free_dofs.clear();
        for (g, pin) in self.pinned.iter().enumerate() {
            if pin.is_none() {
                self.free_index[g] = self.free_dofs.len();
                self.free_dofs.push(g);
            }
        }
    }

    fn pin_boundary(&mut self, mesh: &TensorMesh, g: Option<DirichletFn<'_>>) {
        let p = self.p;
        let shapes = ShapeSet1D::new(p);
        let rule = GaussRule::new(p + 4);
        let bubble_mass = bubble_mass_cholesky(&shapes, &rule);
        for f in 0..self.n_faces {
            let fid = FaceId(f);
            let FaceCondition::Boundary { plane, kind, .. } = mesh.face_condition(fid) else {
                continue;
            };
            let face = mesh.face(fid);
            let sign = plane.outward_sign();
            let (traction, components) = match kind {
                BoundaryKind::Traction { value } => (value, [false; 3]),
                BoundaryKind::Dirichlet { components, .. } => ([C64::new(0.0, 0.0); 3], components),
            };
            // traction: pinned on every component that is not displacement-constrained
            for c in 0..3 {
                if components[c] {
                    continue;
                }
                for m in 0..p * p {
                    let val = if m == 0 { traction[c] * sign } else { C64::new(0.0, 0.0) };
                    let dof = self.traction_dof(fid, c, m);
                    self.pinned[dof] = Some(val);
                }
            }
            let BoundaryKind::Dirichlet { value, components } = kind else {
                continue;
            };
            let rect = mesh.face_rect(&face);
            let plane_x = mesh.grid(face.axis)[face.plane_index];
            let [t1, t2] = tangential_axes(face.axis);
            let eval = |u: f64, v: f64| -> [C64; 3] {
                let mut x = [0.0; 3];
                x[face.axis] = plane_x;
                x[t1] = u;
                x[t2] = v;
                match g {
                    Some(g) => g(x),
                    None => value,
                }
            };
            let coeffs = lift_face(&eval, rect, &shapes, &rule, &bubble_mass);
            let mut node = [0usize; 3];
            node[face.axis] = face.plane_index * p;
            for alpha in 0..=p {
                for beta in 0..=p {
                    node[t1] = face.intervals[0] * p + local_1d_offset(alpha, p);
                    node[t2] = face.intervals[1] * p + local_1d_offset(beta, p);
                    let n = self.node_index(node);
                    for c in 0..3 {
                        if components[c] {
                            self.pinned[3 * n + c] = Some(coeffs[alpha][beta][c]);
                        }
                    }
                }
            }
        }
    }

    pub fn order(&self) -> usize {
        self.p
    }

    pub fn nodes_1d(&self) -> [usize; 3] {
        self.nodes_1d
    }

    pub fn n_displacement(&self) -> usize {
        self.n_displacement
    }

    pub fn n_traction(&self) -> usize {
        self.pinned.len() - self.n_displacement
    }

    pub fn n_total(&self) -> usize {
        self.pinned.len()
    }

    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn pinned_value(&self, dof: usize) -> Option<C64> {
        self.pinned[dof]
    }

    pub fn free_index(&self, dof: usize) -> Option<usize> {
        let i = self.free_index[dof];
        (i != FREE_NONE).then_some(i)
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    /// Scalar `Q^p` node index from global 1D indices.
    #[inline]
    pub fn node_index(&self, g: [usize; 3]) -> usize {
        g[0] + self.nodes_1d[0] * (g[1] + self.nodes_1d[1] * g[2])
    }

    #[inline]
    pub fn displacement_dof(&self, node: usize, comp: usize) -> usize {
        3 * node + comp
    }

    /// Traction dof for `comp` and Legendre mode `m = m1 + p m2` on a face.
    #[inline]
    pub fn traction_dof(&self, face: FaceId, comp: usize, mode: usize) -> usize {
        self.n_displacement + (face.0 * 3 + comp) * self.p * self.p + mode
    }

    pub fn local_dims(p: usize) -> (usize, usize) {
        (3 * (p + 1).pow(3), 18 * p * p)
    }

    pub fn element_dofs(&self, mesh: &TensorMesh, e: crate::mesh::ElementId) -> ElementDofs {
        let p = self.p;
        let ijk = mesh.element_ijk(e);
        let ns = (p + 1).pow(3);
        let (nd, nt) = Self::local_dims(p);
        let mut ids = vec![0; nd + nt];
        for c3 in 0..=p {
            for b in 0..=p {
                for a in 0..=p {
                    let s = a + (p + 1) * (b + (p + 1) * c3);
                    let node = self.node_index([
                        ijk[0] * p + local_1d_offset(a, p),
                        ijk[1] * p + local_1d_offset(b, p),
                        ijk[2] * p + local_1d_offset(c3, p),
                    ]);
                    for comp in 0..3 {
                        ids[comp * ns + s] = self.displacement_dof(node, comp);
                    }
                }
            }
        }
        for (lf, face) in mesh.element_faces(e).into_iter().enumerate() {
            for comp in 0..3 {
                for m in 0..p * p {
                    ids[nd + (lf * 3 + comp) * p * p + m] = self.traction_dof(face, comp, m);
                }
            }
        }
        ElementDofs {
            ids,
            face_signs: LOCAL_FACE_SIGNS,
        }
    }

    /// Full coefficient vector from free values, with pinned values filled in.
    pub fn expand(&self, free_values: &[C64]) -> Vec<C64> {
        self.pinned
            .iter()
            .enumerate()
            .map(|(g, pin)| match pin {
                Some(v) => *v,
                None => free_values[self.free_index[g]],
            })
            .collect()
    }

    /// Block-Jacobi groups in free numbering: displacement triples per node
    /// and the traction dofs of each face.
    pub fn preconditioner_blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = Vec::new();
        let n_nodes = self.n_displacement / 3;
        for node in 0..n_nodes {
            let b: Vec<usize> = (0..3)
                .filter_map(|c| self.free_index(3 * node + c))
                .collect();
            if !b.is_empty() {
                blocks.push(b);
            }
        }
        let per_face = 3 * self.p * self.p;
        for f in 0..self.n_faces {
            let start = self.n_displacement + f * per_face;
            let b: Vec<usize> = (start..start + per_face)
                .filter_map(|g| self.free_index(g))
                .collect();
            if !b.is_empty() {
                blocks.push(b);
            }
        }
        blocks
    }
}

fn bubble_mass_cholesky(shapes: &ShapeSet1D, rule: &GaussRule) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let nb = shapes.len() - 2;
    if nb == 0 {
        return None;
    }
    let mut m = nalgebra::DMatrix::<f64>::zeros(nb, nb);
    for (x, w) in rule.iter() {
        let v = shapes.values(x);
        for i in 0..nb {
            for j in 0..nb {
                m[(i, j)] += w * v[i + 2] * v[j + 2];
            }
        }
    }
    m.cholesky()
}

/// Hierarchical coefficients of a boundary lifting on one face: vertex
/// values, then L2 projections of the remainder onto edge bubbles and face
/// bubbles. Exact for data in the face trace space.
fn lift_face(
    eval: &dyn Fn(f64, f64) -> [C64; 3],
    rect: [[f64; 2]; 2],
    shapes: &ShapeSet1D,
    rule: &GaussRule,
    bubble_mass: &Option<nalgebra::Cholesky<f64, nalgebra::Dyn>>,
) -> Vec<Vec<[C64; 3]>> {
    let p = shapes.order();
    let zero = [C64::new(0.0, 0.0); 3];
    let mut c = vec![vec![zero; p + 1]; p + 1];
    let u = |s: f64| rect[0][0] + s * (rect[0][1] - rect[0][0]);
    let v = |s: f64| rect[1][0] + s * (rect[1][1] - rect[1][0]);
    for alpha in 0..2 {
        for beta in 0..2 {
            c[alpha][beta] = eval(u(alpha as f64), v(beta as f64));
        }
    }
    let Some(chol) = bubble_mass else {
        return c;
    };
    let nb = p - 1;
    let tab: Vec<Vec<f64>> = rule.points.iter().map(|&x| shapes.values(x)).collect();
    let solve = |rhs: Vec<C64>| -> Vec<C64> {
        let re = chol.solve(&nalgebra::DVector::from_iterator(nb, rhs.iter().map(|z| z.re)));
        let im = chol.solve(&nalgebra::DVector::from_iterator(nb, rhs.iter().map(|z| z.im)));
        (0..nb).map(|k| C64::new(re[k], im[k])).collect()
    };
    // edges along the first tangential direction (beta fixed), then the second
    for fixed in 0..2 {
        for dir in 0..2 {
            let mut rhs = vec![[C64::new(0.0, 0.0); 3]; nb];
            for (q, (x, w)) in rule.iter().enumerate() {
                let (val, vert) = if dir == 0 {
                    let val = eval(u(x), v(fixed as f64));
                    (val, [c[0][fixed], c[1][fixed]])
                } else {
                    let val = eval(u(fixed as f64), v(x));
                    (val, [c[fixed][0], c[fixed][1]])
                };
                for comp in 0..3 {
                    let r = val[comp] - vert[0][comp] * tab[q][0] - vert[1][comp] * tab[q][1];
                    for k in 0..nb {
                        rhs[k][comp] += r * (w * tab[q][k + 2]);
                    }
                }
            }
            for comp in 0..3 {
                let d = solve(rhs.iter().map(|r| r[comp]).collect());
                for k in 0..nb {
                    if dir == 0 {
                        c[k + 2][fixed][comp] = d[k];
                    } else {
                        c[fixed][k + 2][comp] = d[k];
                    }
                }
            }
        }
    }
    // interior bubbles: separable mass, so solve along each direction in turn
    let mut rhs = vec![vec![[C64::new(0.0, 0.0); 3]; nb]; nb];
    for (qx, (x, wx)) in rule.iter().enumerate() {
        for (qy, (y, wy)) in rule.iter().enumerate() {
            let val = eval(u(x), v(y));
            for comp in 0..3 {
                let mut r = val[comp];
                for alpha in 0..=p {
                    for beta in 0..=p {
                        if alpha >= 2 && beta >= 2 {
                            continue;
                        }
                        r -= c[alpha][beta][comp] * (tab[qx][alpha] * tab[qy][beta]);
                    }
                }
                for k in 0..nb {
                    for l in 0..nb {
                        rhs[k][l][comp] += r * (wx * wy * tab[qx][k + 2] * tab[qy][l + 2]);
                    }
                }
            }
        }
    }
    for comp in 0..3 {
        let mut tmp = vec![vec![C64::new(0.0, 0.0); nb]; nb];
        for l in 0..nb {
            let col = solve((0..nb).map(|k| rhs[k][l][comp]).collect());
            for k in 0..nb {
                tmp[k][l] = col[k];
            }
        }
        for k in 0..nb {
            let row = solve(tmp[k].clone());
            for l in 0..nb {
                c[k + 2][l + 2][comp] = row[l];
            }
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_box_mesh, BoundaryPatch, ElementId, FacePlane};

    fn clamped(cells: [usize; 3]) -> TensorMesh {
        let bbox = [[0.0, 2.0], [0.0, 1.0], [0.0, 1.0]];
        let patches = ["-x", "+x", "-y", "+y", "-z", "+z"]
            .iter()
            .map(|s| {
                BoundaryPatch::full_plane(s, FacePlane::parse(s).unwrap(), &bbox, [C64::new(0.0, 0.0); 3])
            })
            .collect();
        build_box_mesh(bbox, cells, patches).unwrap()
    }

    #[test]
    fn single_element_counts() {
        let m = clamped([1, 1, 1]);
        let map = TrialDofMap::build(&m, 1);
        assert_eq!(map.n_displacement(), 24);
        assert_eq!(map.n_traction(), 18);
        assert_eq!(map.n_free(), 18);
        for d in 0..24 {
            assert!(map.pinned_value(d).is_some());
        }
        let map = TrialDofMap::build(&m, 2);
        assert_eq!(map.n_displacement(), 27 * 3);
        assert_eq!(map.n_traction(), 6 * 3 * 4);
    }

    #[test]
    fn two_elements_share_the_interior_face() {
        let m = clamped([2, 1, 1]);
        let map = TrialDofMap::build(&m, 1);
        assert_eq!(map.n_displacement(), 36);
        assert_eq!(map.n_traction(), 33);
        let a = map.element_dofs(&m, ElementId(0));
        let b = map.element_dofs(&m, ElementId(1));
        let (nd, _) = TrialDofMap::local_dims(1);
        // x-high face of element 0 is the x-low face of element 1
        for comp in 0..3 {
            assert_eq!(a.ids[nd + 3 + comp], b.ids[nd + comp]);
        }
        assert_eq!(a.face_signs[1], 1.0);
        assert_eq!(b.face_signs[0], -1.0);
        // shared displacement nodes on the interface
        let shared = a.ids[..nd].iter().filter(|g| b.ids[..nd].contains(g)).count();
        assert_eq!(shared, 12);
    }

    #[test]
    fn lifting_reproduces_polynomial_traces() {
        let m = clamped([2, 1, 1]);
        let g = |x: [f64; 3]| {
            let v = x[0] * x[0] * x[1] - 0.5 * x[2] * x[1] + 0.25;
            [C64::new(v, 0.0), C64::new(0.0, v), C64::new(x[2], -x[0])]
        };
        let map = TrialDofMap::build_with_dirichlet(&m, 3, &g);
        // the interpolant at boundary vertices equals the data
        let p = 3;
        let [nx, ny, nz] = map.nodes_1d();
        for gz in [0, nz - 1] {
            for gy in (0..ny).step_by(p) {
                for gx in (0..nx).step_by(p) {
                    let x = [m.grid(0)[gx / p], m.grid(1)[gy / p], m.grid(2)[gz / p]];
                    let node = map.node_index([gx, gy, gz]);
                    let val = g(x);
                    for c in 0..3 {
                        let pinned = map.pinned_value(3 * node + c).unwrap();
                        assert!((pinned - val[c]).norm() < 1e-13);
                    }
                }
            }
        }
    }
}
