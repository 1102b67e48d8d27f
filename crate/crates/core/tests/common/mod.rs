//! Independent oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use dpg_visco::fespace::quadrature::GaussRule;
use dpg_visco::fespace::shape1d::{face_legendre, ShapeSet1D};
use dpg_visco::material::IsotropicMaterial;
use dpg_visco::mesh::{build_box_mesh, tangential_axes, BoundaryPatch, Cell, FacePlane, TensorMesh};
use dpg_visco::problem::Problem;
use dpg_visco::C64;
use nalgebra::DMatrix;

pub fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Largest entry modulus of `a - b` over the largest entry modulus of `b`.
pub fn rel_max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let scale = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let diff = (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max);
    diff / scale
}

/// Tensor Gauss points on the reference cube with per-point weight.
pub fn cube_points(n: usize) -> Vec<([f64; 3], f64)> {
    let g = GaussRule::new(n);
    let mut out = Vec::new();
    for (z, wz) in g.iter() {
        for (y, wy) in g.iter() {
            for (x, wx) in g.iter() {
                out.push(([x, y, z], wx * wy * wz));
            }
        }
    }
    out
}

/// Values and physical gradients of the tensor basis of `shapes` at `xi`,
/// first index fastest.
pub fn tensor_basis(shapes: &ShapeSet1D, cell: &Cell, xi: [f64; 3]) -> (Vec<f64>, Vec<[f64; 3]>) {
    let h = cell.size();
    let v: Vec<Vec<f64>> = xi.iter().map(|&x| shapes.values(x)).collect();
    let d: Vec<Vec<f64>> = xi.iter().map(|&x| shapes.derivatives(x)).collect();
    let n1 = shapes.len();
    let mut vals = Vec::with_capacity(n1 * n1 * n1);
    let mut grads = Vec::with_capacity(n1 * n1 * n1);
    for k in 0..n1 {
        for j in 0..n1 {
            for i in 0..n1 {
                vals.push(v[0][i] * v[1][j] * v[2][k]);
                grads.push([
                    d[0][i] * v[1][j] * v[2][k] / h[0],
                    v[0][i] * d[1][j] * v[2][k] / h[1],
                    v[0][i] * v[1][j] * d[2][k] / h[2],
                ]);
            }
        }
    }
    (vals, grads)
}

/// Full vector Gram matrix of the broken H1 test space on one cell, by
/// pointwise quadrature.
pub fn oracle_gram(cell: &Cell, p: usize, dp: usize) -> DMatrix<C64> {
    let test = ShapeSet1D::new(p + dp);
    let ns = test.len().pow(3);
    let mut gs = DMatrix::<f64>::zeros(ns, ns);
    for (xi, w) in cube_points(p + dp + 4) {
        let (v, g) = tensor_basis(&test, cell, xi);
        let w = w * cell.volume();
        for i in 0..ns {
            for j in 0..ns {
                gs[(i, j)] += w * (v[i] * v[j] + g[i][0] * g[j][0] + g[i][1] * g[j][1] + g[i][2] * g[j][2]);
            }
        }
    }
    let mut out = DMatrix::<C64>::zeros(3 * ns, 3 * ns);
    for comp in 0..3 {
        for i in 0..ns {
            for j in 0..ns {
                out[(comp * ns + i, comp * ns + j)] = c(gs[(i, j)], 0.0);
            }
        }
    }
    out
}

/// Element operator `b((u, t), v)` by pointwise quadrature: volume part
/// `(C* : grad u, grad v) - omega^2 rho (u, v)` and face part `-<t n, v>`,
/// with traction modes oriented along the global axis direction.
pub fn oracle_b(cell: &Cell, mat: &IsotropicMaterial, p: usize, dp: usize) -> DMatrix<C64> {
    let test = ShapeSet1D::new(p + dp);
    let trial = ShapeSet1D::new(p);
    let nst = test.len().pow(3);
    let nsu = trial.len().pow(3);
    let nd = 3 * nsu;
    let ntr = 18 * p * p;
    let c4 = mat.voigt().to_tensor();
    let w2rho = mat.omega * mat.omega * mat.rho;
    let mut b = DMatrix::<C64>::zeros(3 * nst, nd + ntr);
    for (xi, w) in cube_points(p + dp + 4) {
        let (tv, tg) = tensor_basis(&test, cell, xi);
        let (uv, ug) = tensor_basis(&trial, cell, xi);
        let w = w * cell.volume();
        for ci in 0..3 {
            for st in 0..nst {
                for d in 0..3 {
                    for su in 0..nsu {
                        let mut s = c(0.0, 0.0);
                        for l in 0..3 {
                            for k in 0..3 {
                                s += c4[ci][l][d][k] * (tg[st][l] * ug[su][k]);
                            }
                        }
                        if ci == d {
                            s -= w2rho * tv[st] * uv[su];
                        }
                        b[(ci * nst + st, d * nsu + su)] += s * w;
                    }
                }
            }
        }
    }
    let h = cell.size();
    let g = GaussRule::new(p + dp + 4);
    for lf in 0..6 {
        let axis = lf / 2;
        let side = lf % 2;
        let outward = if side == 0 { -1.0 } else { 1.0 };
        let [t1, t2] = tangential_axes(axis);
        let area = h[t1] * h[t2];
        for (s2, w2) in g.iter() {
            for (s1, w1) in g.iter() {
                let mut xi = [0.0; 3];
                xi[axis] = side as f64;
                xi[t1] = s1;
                xi[t2] = s2;
                let (tv, _) = tensor_basis(&test, cell, xi);
                let l1 = face_legendre(p, s1);
                let l2 = face_legendre(p, s2);
                for m2 in 0..p {
                    for m1 in 0..p {
                        let mode = l1[m1] * l2[m2];
                        for comp in 0..3 {
                            let col = nd + (lf * 3 + comp) * p * p + m1 + p * m2;
                            for st in 0..nst {
                                b[(comp * nst + st, col)] -= c(outward * w1 * w2 * area * mode * tv[st], 0.0);
                            }
                        }
                    }
                }
            }
        }
    }
    b
}

/// `B^H G^{-1} B` through an explicit dense inverse.
pub fn oracle_condensed(b: &DMatrix<C64>, gram: &DMatrix<C64>) -> DMatrix<C64> {
    let inv = gram.clone().try_inverse().expect("Gram matrix is invertible");
    b.adjoint() * inv * b
}

/// Polynomial vector field with monomial terms `coef x^a y^b z^c` per component.
#[derive(Debug, Clone)]
pub struct PolyField {
    pub terms: [Vec<([i32; 3], C64)>; 3],
}

fn monomial(e: [i32; 3], x: [f64; 3]) -> f64 {
    x[0].powi(e[0]) * x[1].powi(e[1]) * x[2].powi(e[2])
}

/// `d/dx_k` of a monomial as `(factor, exponents)`.
fn diff(e: [i32; 3], k: usize) -> (f64, [i32; 3]) {
    let f = e[k] as f64;
    let mut out = e;
    out[k] = (e[k] - 1).max(0);
    (f, out)
}

impl PolyField {
    /// Every monomial of total degree `<= degree`, with coefficients drawn
    /// from `next` in `[-1, 1]`.
    pub fn random(degree: i32, mut next: impl FnMut() -> f64) -> Self {
        let mut terms: [Vec<([i32; 3], C64)>; 3] = Default::default();
        for comp in &mut terms {
            for a in 0..=degree {
                for b in 0..=degree - a {
                    for cc in 0..=degree - a - b {
                        comp.push(([a, b, cc], c(next(), next())));
                    }
                }
            }
        }
        Self { terms }
    }

    pub fn value(&self, x: [f64; 3]) -> [C64; 3] {
        std::array::from_fn(|i| self.terms[i].iter().map(|(e, k)| k * monomial(*e, x)).sum())
    }

    pub fn gradient(&self, x: [f64; 3]) -> [[C64; 3]; 3] {
        std::array::from_fn(|i| {
            std::array::from_fn(|k| {
                self.terms[i]
                    .iter()
                    .map(|(e, coef)| {
                        let (f, d) = diff(*e, k);
                        coef * (f * monomial(d, x))
                    })
                    .sum()
            })
        })
    }

    fn second(&self, i: usize, j: usize, l: usize, x: [f64; 3]) -> C64 {
        self.terms[i]
            .iter()
            .map(|(e, coef)| {
                let (f1, d1) = diff(*e, j);
                let (f2, d2) = diff(d1, l);
                coef * (f1 * f2 * monomial(d2, x))
            })
            .sum()
    }

    /// `f_i = -omega^2 rho u_i - sum_jkl C_ijkl d_j d_l u_k`.
    pub fn body_force(&self, mat: &IsotropicMaterial, x: [f64; 3]) -> [C64; 3] {
        let c4 = mat.voigt().to_tensor();
        let u = self.value(x);
        let w2rho = mat.omega * mat.omega * mat.rho;
        std::array::from_fn(|i| {
            let mut s = -w2rho * u[i];
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        s -= c4[i][j][k][l] * self.second(k, j, l, x);
                    }
                }
            }
            s
        })
    }
}

/// Box with the exact field prescribed on the whole boundary and the
/// matching body force.
pub fn polynomial_problem(mesh_cells: [usize; 3], bbox: [[f64; 2]; 3], p: usize, mat: IsotropicMaterial, field: PolyField) -> Problem {
    let zero = [c(0.0, 0.0); 3];
    let patches = ["-x", "+x", "-y", "+y", "-z", "+z"]
        .iter()
        .map(|s| BoundaryPatch::full_plane(s, FacePlane::parse(s).unwrap(), &bbox, zero))
        .collect();
    let mesh = build_box_mesh(bbox, mesh_cells, patches).unwrap();
    let mesh = mesh.refine_axis_lines(0, &[0]);
    let field = Arc::new(field);
    let mut problem = Problem::new(mesh, mat, p);
    let f = field.clone();
    problem.body_force = Some(Arc::new(move |x| f.body_force(&mat, x)));
    let g = field.clone();
    problem.dirichlet = Some(Arc::new(move |x| g.value(x)));
    problem
}

/// `[lo, hi]` of the x-extent of each face touching the given mesh.
pub fn face_x_span(mesh: &TensorMesh, face: &dpg_visco::mesh::Face) -> [f64; 2] {
    let g = mesh.grid(0);
    if face.axis == 0 {
        let x = g[face.plane_index];
        [x, x]
    } else {
        let i = face.intervals[0];
        [g[i], g[i + 1]]
    }
}
