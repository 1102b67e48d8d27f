//! Shape functions, quadrature and dof bookkeeping for the trial space and
//! the broken enriched test space.

pub mod quadrature;
pub mod shape1d;
pub mod trial;

use crate::mesh::Cell;
use quadrature::CellRule;
use shape1d::ShapeSet1D;

pub use trial::{ElementDofs, TrialDofMap};

/// Broken vector `Q^{p+dp}` test basis of one element. Vector functions are
/// ordered component-major: index `c * n_scalar + s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestSpace {
    pub trial_order: usize,
    pub enrichment: usize,
}

impl TestSpace {
    pub fn order(&self) -> usize {
        self.trial_order + self.enrichment
    }

    pub fn shapes(&self) -> ShapeSet1D {
        ShapeSet1D::new(self.order())
    }

    pub fn n_scalar(&self) -> usize {
        (self.order() + 1).pow(3)
    }

    pub fn dim(&self) -> usize {
        3 * self.n_scalar()
    }
}

pub fn build_test_space(p: usize, dp: usize) -> TestSpace {
    assert!(p >= 1 && dp >= 1, "need p >= 1 and dp >= 1");
    TestSpace {
        trial_order: p,
        enrichment: dp,
    }
}

/// Values and physical gradients of a scalar tensor `Q^n` basis at the
/// points of a cell rule. Basis index `s = a + (n+1)(b + (n+1)c)`.
#[derive(Debug, Clone)]
pub struct Tabulation {
    pub n_basis: usize,
    /// Physical quadrature points.
    pub points: Vec<[f64; 3]>,
    /// Physical weights (reference weight times cell volume).
    pub weights: Vec<f64>,
    /// `values[q][s]`
    pub values: Vec<Vec<f64>>,
    /// `grads[q][s]`
    pub grads: Vec<Vec<[f64; 3]>>,
}

pub fn eval_basis(shapes: &ShapeSet1D, cell: &Cell, rule: &CellRule) -> Tabulation {
    let n1 = shapes.len();
    let n_basis = n1.pow(3);
    let h = cell.size();
    let vol = cell.volume();
    let mut out = Tabulation {
        n_basis,
        points: Vec::with_capacity(rule.len()),
        weights: Vec::with_capacity(rule.len()),
        values: Vec::with_capacity(rule.len()),
        grads: Vec::with_capacity(rule.len()),
    };
    for (xi, w) in rule.points.iter().zip(&rule.weights) {
        let v: Vec<Vec<f64>> = xi.iter().map(|&x| shapes.values(x)).collect();
        let d: Vec<Vec<f64>> = xi.iter().map(|&x| shapes.derivatives(x)).collect();
        let mut vals = Vec::with_capacity(n_basis);
        let mut grads = Vec::with_capacity(n_basis);
        for c in 0..n1 {
            for b in 0..n1 {
                for a in 0..n1 {
                    vals.push(v[0][a] * v[1][b] * v[2][c]);
                    grads.push([
                        d[0][a] * v[1][b] * v[2][c] / h[0],
                        v[0][a] * d[1][b] * v[2][c] / h[1],
                        v[0][a] * v[1][b] * d[2][c] / h[2],
                    ]);
                }
            }
        }
        out.points.push(cell.map(*xi));
        out.weights.push(w * vol);
        out.values.push(vals);
        out.grads.push(grads);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_space_dims() {
        assert_eq!(build_test_space(1, 1).dim(), 81);
        assert_eq!(build_test_space(2, 1).dim(), 192);
        assert_eq!(build_test_space(1, 4).dim(), 648);
    }

    #[test]
    fn vertex_functions_sum_to_one_and_gradients_scale() {
        let cell = Cell {
            lo: [0.0, 1.0, -1.0],
            hi: [0.5, 3.0, 0.0],
        };
        let shapes = ShapeSet1D::new(3);
        let rule = CellRule::for_degree(5);
        let tab = eval_basis(&shapes, &cell, &rule);
        let n1 = 4;
        for q in 0..rule.len() {
            let mut sum = 0.0;
            for c in 0..2 {
                for b in 0..2 {
                    for a in 0..2 {
                        sum += tab.values[q][a + n1 * (b + n1 * c)];
                    }
                }
            }
            assert!((sum - 1.0).abs() < 1e-14);
        }
        // x-linear function: phi_1(x) phi_0+phi_1 (y) ... gradient 1/h_x
        let s_x: Vec<usize> = (0..4).map(|k| 1 + n1 * ((k % 2) + n1 * (k / 2))).collect();
        for q in 0..rule.len() {
            let g: f64 = s_x.iter().map(|&s| tab.grads[q][s][0]).sum();
            assert!((g - 2.0).abs() < 1e-13);
        }
        let vol: f64 = tab.weights.iter().sum();
        assert!((vol - 1.0).abs() < 1e-14);
    }
}
