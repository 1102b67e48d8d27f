mod common;

use std::time::Duration;

use dpg_visco::dpg::{element_b, element_gram, element_load};
use dpg_visco::driver::manufactured;
use dpg_visco::driver::verify::default_material;
use dpg_visco::fespace::quadrature::{CellRule, GaussRule};
use dpg_visco::fespace::shape1d::ShapeSet1D;
use dpg_visco::fespace::{build_test_space, eval_basis, TrialDofMap};
use dpg_visco::material::IsotropicMaterial;
use dpg_visco::mesh::{build_box_mesh, BoundaryPatch, ElementId, FaceId, FacePlane, TensorMesh};
use dpg_visco::problem::DpgSolution;
use dpg_visco::solver::{SolveMethod, SolveReport};
use dpg_visco::C64;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use common::{c, cube_points, oracle_gram, rel_max_diff, tensor_basis};

fn cell() -> dpg_visco::mesh::Cell {
    dpg_visco::mesh::Cell {
        lo: [0.3, -0.1, 0.2],
        hi: [0.8, 0.6, 0.45],
    }
}

/// Coefficients of `x^e` in the 1D basis, by collocation at `p + 1` points.
fn collocate_1d(shapes: &ShapeSet1D, e: i32) -> Vec<f64> {
    let n = shapes.len();
    let pts: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let a = DMatrix::from_fn(n, n, |i, j| shapes.values(pts[i])[j]);
    let rhs = DVector::from_fn(n, |i, _| pts[i].powi(e));
    a.lu().solve(&rhs).unwrap().iter().copied().collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 30, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn tabulated_polynomials_match_monomials(p in 1usize..5, coefs in prop::collection::vec(-1.0..1.0f64, 125)) {
        // reference cube so monomials in x are monomials in xi
        let unit = dpg_visco::mesh::Cell { lo: [0.0; 3], hi: [1.0; 3] };
        let shapes = ShapeSet1D::new(p);
        let n1 = p + 1;
        let one_d: Vec<Vec<f64>> = (0..=p as i32).map(|e| collocate_1d(&shapes, e)).collect();
        let mut basis_coef = vec![0.0; n1.pow(3)];
        let mut terms = Vec::new();
        for a in 0..n1 {
            for b in 0..n1 {
                for cc in 0..n1 {
                    let k = coefs[a + 5 * (b + 5 * cc)];
                    terms.push(([a as i32, b as i32, cc as i32], k));
                    for i in 0..n1 {
                        for j in 0..n1 {
                            for l in 0..n1 {
                                basis_coef[i + n1 * (j + n1 * l)] += k * one_d[a][i] * one_d[b][j] * one_d[cc][l];
                            }
                        }
                    }
                }
            }
        }
        let tab = eval_basis(&shapes, &unit, &CellRule::for_degree(2 * p + 1));
        for q in 0..tab.points.len() {
            let x = tab.points[q];
            let direct: f64 = terms.iter().map(|(e, k)| k * x[0].powi(e[0]) * x[1].powi(e[1]) * x[2].powi(e[2])).sum();
            let tabulated: f64 = tab.values[q].iter().zip(&basis_coef).map(|(v, k)| v * k).sum();
            prop_assert!((direct - tabulated).abs() <= 1e-13 * (1.0 + direct.abs()));
        }
    }
}

#[test]
fn gram_leading_block_matches_high_degree_quadrature() {
    for (p, dp) in [(1, 1), (2, 1), (1, 3)] {
        let g = element_gram(&cell(), &build_test_space(p, dp)).unwrap().gram();
        let oracle = oracle_gram(&cell(), p, dp);
        let lead = |m: &DMatrix<C64>| m.view((0, 0), (10, 10)).into_owned();
        assert!(rel_max_diff(&lead(&g), &lead(&oracle)) < 1e-12);
        assert!(rel_max_diff(&g, &oracle) < 1e-12);
        assert!(g.iter().all(|z| z.im == 0.0));
        assert!(rel_max_diff(&g.transpose(), &g) < 1e-14);
    }
}

/// With `lambda = 0`, `mu = 1/2` and `omega = 0`, `C : grad u = sym grad u`.
#[test]
fn linear_displacement_column_is_classical_stiffness() {
    let mat = IsotropicMaterial::new(c(0.0, 0.0), c(0.5, 0.0), 1.0, 0.0).unwrap();
    let grad_u = [[0.3, -1.2, 0.5], [0.7, 0.1, -0.4], [-0.2, 0.9, 1.1]];
    let offset = [0.25, -0.5, 2.0];
    let p = 2;
    let test = build_test_space(p, 1);
    let b = element_b(&cell(), &mat, &test);
    let k = cell();
    let n1 = p + 1;
    let nsu = n1.pow(3);
    let mut u = DVector::<C64>::zeros(b.ncols());
    // nodal values at the vertices; bubbles stay zero for a linear field
    for cz in 0..2 {
        for cy in 0..2 {
            for cx in 0..2 {
                let corner = [cx, cy, cz];
                let x: [f64; 3] = std::array::from_fn(|a| if corner[a] == 0 { k.lo[a] } else { k.hi[a] });
                let s = cx + n1 * (cy + n1 * cz);
                for comp in 0..3 {
                    let val: f64 = offset[comp] + (0..3).map(|j| grad_u[comp][j] * x[j]).sum::<f64>();
                    u[comp * nsu + s] = c(val, 0.0);
                }
            }
        }
    }
    let got = &b * &u;
    let shapes = ShapeSet1D::new(p + 1);
    let nst = shapes.len().pow(3);
    let sym: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (grad_u[i][j] + grad_u[j][i])));
    let mut oracle = vec![0.0; 3 * nst];
    for (xi, w) in cube_points(6) {
        let (_, g) = tensor_basis(&shapes, &k, xi);
        for comp in 0..3 {
            for s in 0..nst {
                oracle[comp * nst + s] += w * k.volume() * (0..3).map(|l| sym[comp][l] * g[s][l]).sum::<f64>();
            }
        }
    }
    let scale = oracle.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for (a, o) in got.iter().zip(&oracle) {
        assert!((a - c(*o, 0.0)).norm() <= 1e-12 * scale);
    }
}

#[test]
fn manufactured_load_matches_quadrature() {
    let mat = default_material();
    let test = build_test_space(2, 1);
    let k = cell();
    let f = |x: [f64; 3]| manufactured::body_force(&mat, x);
    let l = element_load(&k, &f, &test, &CellRule::for_degree(24));
    let shapes = ShapeSet1D::new(3);
    let nst = shapes.len().pow(3);
    let mut oracle = vec![c(0.0, 0.0); 3 * nst];
    let g = GaussRule::new(16);
    for (z, wz) in g.iter() {
        for (y, wy) in g.iter() {
            for (x, wx) in g.iter() {
                let (v, _) = tensor_basis(&shapes, &k, [x, y, z]);
                let fx = f(k.map([x, y, z]));
                let w = wx * wy * wz * k.volume();
                for comp in 0..3 {
                    for s in 0..nst {
                        oracle[comp * nst + s] += fx[comp] * (w * v[s]);
                    }
                }
            }
        }
    }
    let scale = oracle.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
    for (a, o) in l.iter().zip(&oracle) {
        assert!((a - o).norm() <= 1e-12 * scale);
    }
}

fn clamped_box(bbox: [[f64; 2]; 3], cells: [usize; 3]) -> TensorMesh {
    let base = BoundaryPatch::full_plane("base", FacePlane::parse("-z").unwrap(), &bbox, [c(0.0, 0.0); 3]);
    build_box_mesh(bbox, cells, vec![base]).unwrap()
}

#[test]
fn traction_space_has_3p2_dofs_per_face() {
    for p in 1..=4 {
        let mesh = clamped_box([[0.0, 1.0]; 3], [1, 1, 1]);
        let map = TrialDofMap::build(&mesh, p);
        assert_eq!(map.n_traction(), 6 * 3 * p * p);
    }
}

#[test]
fn global_displacements_are_continuous() {
    let p = 3;
    let mesh = clamped_box([[0.0, 1.0], [0.0, 0.7], [0.0, 0.4]], [3, 2, 2]).refine_axis_lines(0, &[1]);
    let map = TrialDofMap::build(&mesh, p);
    let mut state = 0x9e37_79b9_7f4a_7c15_u64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state as f64 / u64::MAX as f64) * 2.0 - 1.0
    };
    let coefficients: Vec<C64> = (0..map.n_total()).map(|_| c(next(), next())).collect();
    let sol = DpgSolution {
        mesh: mesh.clone(),
        map,
        coefficients,
        residuals: vec![0.0; mesh.n_elements()],
        global_residual: 0.0,
        report: SolveReport {
            iterations: 0,
            relative_residual: 0.0,
            method: SolveMethod::DenseFallback,
            wall_time: Duration::ZERO,
        },
    };
    let shapes = ShapeSet1D::new(p);
    let ns = shapes.len().pow(3);
    let eval = |e: ElementId, xi: [f64; 3]| -> [C64; 3] {
        let (v, _) = tensor_basis(&shapes, &mesh.cell(e), xi);
        let coef = sol.element_displacement(e);
        std::array::from_fn(|comp| (0..ns).map(|s| coef[comp * ns + s] * v[s]).sum())
    };
    let g = GaussRule::new(4);
    let mut checked = 0;
    for f in 0..mesh.n_faces() {
        let face = mesh.face(FaceId(f));
        let [Some(lo), Some(hi)] = face.neighbors else {
            continue;
        };
        let [t1, t2] = dpg_visco::mesh::tangential_axes(face.axis);
        for (s1, _) in g.iter() {
            for (s2, _) in g.iter() {
                let mut a = [0.0; 3];
                a[t1] = s1;
                a[t2] = s2;
                let mut b = a;
                a[face.axis] = 1.0;
                b[face.axis] = 0.0;
                let ua = eval(lo, a);
                let ub = eval(hi, b);
                for comp in 0..3 {
                    assert!((ua[comp] - ub[comp]).norm() < 1e-12);
                }
                checked += 1;
            }
        }
    }
    assert!(checked > 0);
}
