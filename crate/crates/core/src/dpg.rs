//! Element kernels of the broken primal DPG method.
//!
//! Test space on each element is broken vector `Q^{p+dp}` with the H1 inner
//! product, so the Gram matrix is `I_3 (x) G_s` for a real scalar Gram `G_s`
//! and only `G_s` is factored. All volume and face integrals of tensor
//! polynomials are assembled from exact 1D integrals (sum factorization).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fespace::quadrature::{CellRule, GaussRule};
use crate::fespace::shape1d::{face_legendre, ShapeSet1D};
use crate::fespace::trial::LOCAL_FACE_SIGNS;
use crate::fespace::{eval_basis, TestSpace, TrialDofMap};
use crate::material::IsotropicMaterial;
use crate::mesh::{tangential_axes, Cell};

/// Exact 1D integrals between test shapes `psi` (order `P`), trial shapes
/// `phi` (order `p`) and face Legendre modes on `[0, 1]`.
#[derive(Debug, Clone)]
struct Integrals1D {
    /// `tu[dl][dk][i][j] = int psi_i^(dl) phi_j^(dk)`
    tu: [[Vec<Vec<f64>>; 2]; 2],
    tt_mass: Vec<Vec<f64>>,
    tt_stiff: Vec<Vec<f64>>,
    /// `ft[i][m] = int psi_i L_m`
    ft: Vec<Vec<f64>>,
    /// Test shape values at `x = 0` and `x = 1`.
    end: [Vec<f64>; 2],
}

impl Integrals1D {
    fn new(p: usize, test_order: usize) -> Self {
        let test = ShapeSet1D::new(test_order);
        let trial = ShapeSet1D::new(p);
        let rule = GaussRule::new(test_order + 2);
        let nt = test.len();
        let nu = trial.len();
        let zeros = |r: usize, c: usize| vec![vec![0.0; c]; r];
        let mut tu = [[zeros(nt, nu), zeros(nt, nu)], [zeros(nt, nu), zeros(nt, nu)]];
        let mut tt_mass = zeros(nt, nt);
        let mut tt_stiff = zeros(nt, nt);
        let mut ft = zeros(nt, p);
        for (x, w) in rule.iter() {
            let tv = [test.values(x), test.derivatives(x)];
            let uv = [trial.values(x), trial.derivatives(x)];
            let lm = face_legendre(p, x);
            for i in 0..nt {
                for dl in 0..2 {
                    for dk in 0..2 {
                        for j in 0..nu {
                            tu[dl][dk][i][j] += w * tv[dl][i] * uv[dk][j];
                        }
                    }
                }
                for j in 0..nt {
                    tt_mass[i][j] += w * tv[0][i] * tv[0][j];
                    tt_stiff[i][j] += w * tv[1][i] * tv[1][j];
                }
                for m in 0..p {
                    ft[i][m] += w * tv[0][i] * lm[m];
                }
            }
        }
        Self {
            tu,
            tt_mass,
            tt_stiff,
            ft,
            end: [test.values(0.0), test.values(1.0)],
        }
    }
}

#[inline]
fn split3(s: usize, n1: usize) -> [usize; 3] {
    [s % n1, (s / n1) % n1, s / (n1 * n1)]
}

/// Cholesky factor `L_s` of the scalar test Gram matrix.
#[derive(Debug, Clone)]
pub struct GramFactor {
    lower: DMatrix<C64>,
}

impl GramFactor {
    pub fn n_scalar(&self) -> usize {
        self.lower.nrows()
    }

    pub fn dim(&self) -> usize {
        3 * self.n_scalar()
    }

    /// `L^{-1} x` for the vector Gram `I_3 (x) L_s L_s^T`, columnwise.
    pub fn solve_lower(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        let n = self.n_scalar();
        let mut out = x.clone();
        for c in 0..3 {
            let mut block = out.rows_mut(c * n, n);
            let solved = self
                .lower
                .solve_lower_triangular(&block.clone_owned())
                .expect("Gram factor has a nonzero diagonal");
            block.copy_from(&solved);
        }
        out
    }

    pub fn solve_lower_vec(&self, x: &DVector<C64>) -> DVector<C64> {
        let m = DMatrix::from_column_slice(x.len(), 1, x.as_slice());
        let y = self.solve_lower(&m);
        DVector::from_column_slice(y.as_slice())
    }

    /// The full vector Gram matrix `L L^T`.
    pub fn gram(&self) -> DMatrix<C64> {
        let n = self.n_scalar();
        let gs = &self.lower * self.lower.adjoint();
        let mut g = DMatrix::zeros(3 * n, 3 * n);
        for c in 0..3 {
            g.view_mut((c * n, c * n), (n, n)).copy_from(&gs);
        }
        g
    }
}

fn scalar_gram(cell: &Cell, ints: &Integrals1D, n1: usize) -> DMatrix<f64> {
    let h = cell.size();
    let vol = cell.volume();
    let ns = n1.pow(3);
    DMatrix::from_fn(ns, ns, |r, c| {
        let i = split3(r, n1);
        let j = split3(c, n1);
        let m = [0, 1, 2].map(|a| ints.tt_mass[i[a]][j[a]]);
        let k = [0, 1, 2].map(|a| ints.tt_stiff[i[a]][j[a]]);
        vol * (m[0] * m[1] * m[2]
            + k[0] * m[1] * m[2] / (h[0] * h[0])
            + m[0] * k[1] * m[2] / (h[1] * h[1])
            + m[0] * m[1] * k[2] / (h[2] * h[2]))
    })
}

/// Factored H1 Gram matrix of the broken test space on one cell.
pub fn element_gram(cell: &Cell, test: &TestSpace) -> Result<GramFactor> {
    let ints = Integrals1D::new(test.trial_order, test.order());
    gram_from(cell, &ints, test.order() + 1)
}

fn gram_from(cell: &Cell, ints: &Integrals1D, n1: usize) -> Result<GramFactor> {
    let gs = scalar_gram(cell, ints, n1);
    let chol = gs.cholesky().ok_or(Error::GramNotSpd { element: 0 })?;
    Ok(GramFactor {
        lower: chol.l().map(|x| C64::new(x, 0.0)),
    })
}

/// Trial-to-test matrix (test dim x local trial dim) on one cell. Local
/// trial order: displacements `comp * (p+1)^3 + s`, then face tractions
/// `3 (p+1)^3 + (face * 3 + comp) p^2 + m1 + p m2`.
pub fn element_b(cell: &Cell, material: &IsotropicMaterial, test: &TestSpace) -> DMatrix<C64> {
    let ints = Integrals1D::new(test.trial_order, test.order());
    b_from(cell, material, test, &ints)
}

fn b_from(cell: &Cell, material: &IsotropicMaterial, test: &TestSpace, ints: &Integrals1D) -> DMatrix<C64> {
    let p = test.trial_order;
    let nt1 = test.order() + 1;
    let nu1 = p + 1;
    let nst = nt1.pow(3);
    let nsu = nu1.pow(3);
    let (nd, ntr) = TrialDofMap::local_dims(p);
    let h = cell.size();
    let c4 = material.voigt().to_tensor();
    let mass_coef = material.omega * material.omega * material.rho;
    let mut b = DMatrix::<C64>::zeros(3 * nst, nd + ntr);

    for st in 0..nst {
        let i = split3(st, nt1);
        for su in 0..nsu {
            let j = split3(su, nu1);
            // integral of d_l psi d_k phi (l, k = 0..3), index 3 is "no derivative"
            let mut ig = [[0.0; 4]; 4];
            for (l, row) in ig.iter_mut().enumerate() {
                for (k, val) in row.iter_mut().enumerate() {
                    let mut v = 1.0;
                    for a in 0..3 {
                        let dl = usize::from(a == l);
                        let dk = usize::from(a == k);
                        v *= ints.tu[dl][dk][i[a]][j[a]] * h[a].powi(1 - dl as i32 - dk as i32);
                    }
                    *val = v;
                }
            }
            for c in 0..3 {
                for d in 0..3 {
                    let mut s = C64::new(0.0, 0.0);
                    for l in 0..3 {
                        for k in 0..3 {
                            s += c4[c][l][d][k] * ig[l][k];
                        }
                    }
                    if c == d {
                        s -= mass_coef * ig[3][3];
                    }
                    b[(c * nst + st, d * nsu + su)] = s;
                }
            }
        }
    }

    for lf in 0..6 {
        let axis = lf / 2;
        let side = lf % 2;
        let sign = LOCAL_FACE_SIGNS[lf];
        let [t1, t2] = tangential_axes(axis);
        let area = h[t1] * h[t2];
        for st in 0..nst {
            let i = split3(st, nt1);
            let e = ints.end[side][i[axis]];
            if e == 0.0 {
                continue;
            }
            for m2 in 0..p {
                for m1 in 0..p {
                    let v = -sign * e * area * ints.ft[i[t1]][m1] * ints.ft[i[t2]][m2];
                    for c in 0..3 {
                        let col = nd + (lf * 3 + c) * p * p + m1 + p * m2;
                        b[(c * nst + st, col)] = C64::new(v, 0.0);
                    }
                }
            }
        }
    }
    b
}

/// Load vector `(f, v_i)_K` by cell quadrature.
pub fn element_load(
    cell: &Cell,
    f: &dyn Fn([f64; 3]) -> [C64; 3],
    test: &TestSpace,
    rule: &CellRule,
) -> DVector<C64> {
    let tab = eval_basis(&test.shapes(), cell, rule);
    let ns = tab.n_basis;
    let mut l = DVector::<C64>::zeros(3 * ns);
    for q in 0..tab.points.len() {
        let fx = f(tab.points[q]);
        let w = tab.weights[q];
        for (s, &v) in tab.values[q].iter().enumerate() {
            for c in 0..3 {
                l[c * ns + s] += fx[c] * (w * v);
            }
        }
    }
    l
}

/// Near-optimal local system: `W = L^{-1} B`, `W^H W` and `W^H L^{-1} l`.
#[derive(Debug, Clone)]
pub struct Condensed {
    pub w: DMatrix<C64>,
    pub stiffness: DMatrix<C64>,
}

pub fn condense(b: &DMatrix<C64>, gram: &GramFactor) -> Condensed {
    let w = gram.solve_lower(b);
    let x = w.ad_mul(&w);
    let scale = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let asym = (&x - x.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(asym <= 1e-12 * scale.max(f64::MIN_POSITIVE), "condensed matrix not Hermitian");
    let stiffness = (&x + x.adjoint()).scale(0.5);
    Condensed { w, stiffness }
}

/// Condensed load `W^H L^{-1} l`.
pub fn condense_load(cond: &Condensed, gram: &GramFactor, l: &DVector<C64>) -> DVector<C64> {
    cond.w.ad_mul(&gram.solve_lower_vec(l))
}

/// `r_K = |L^{-1}(B u - l)|`.
pub fn element_residual(b: &DMatrix<C64>, gram: &GramFactor, l: &DVector<C64>, u: &DVector<C64>) -> f64 {
    gram.solve_lower_vec(&(b * u - l)).norm()
}

/// Everything about an element that depends only on the cell size and the
/// material, shared between congruent cells.
#[derive(Debug, Clone)]
pub struct ElementKernel {
    pub b: DMatrix<C64>,
    pub gram: GramFactor,
    pub condensed: Condensed,
}

impl ElementKernel {
    /// Residual from a precomputed `L^{-1} l`.
    pub fn residual(&self, gram_load: &DVector<C64>, u: &DVector<C64>) -> f64 {
        (&self.condensed.w * u - gram_load).norm()
    }
}

/// Builds kernels for one trial/test pair, reusing the 1D integrals.
#[derive(Debug, Clone)]
pub struct KernelBuilder {
    test: TestSpace,
    ints: Integrals1D,
}

impl KernelBuilder {
    pub fn new(test: TestSpace) -> Self {
        Self {
            test,
            ints: Integrals1D::new(test.trial_order, test.order()),
        }
    }

    pub fn test_space(&self) -> &TestSpace {
        &self.test
    }

    pub fn build(&self, cell: &Cell, material: &IsotropicMaterial) -> Result<ElementKernel> {
        let gram = gram_from(cell, &self.ints, self.test.order() + 1)?;
        let b = b_from(cell, material, &self.test, &self.ints);
        let condensed = condense(&b, &gram);
        Ok(ElementKernel { b, gram, condensed })
    }
}
