//! Gauss-Legendre rules on `[0, 1]` and their tensor products.

use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// `n`-point rule, exact for polynomials of degree `2n - 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut points = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Newton iteration on P_n from the Chebyshev-like initial guess
            let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, t);
                dp = d;
                let dt = p / d;
                t -= dt;
                if dt.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, t);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - t * t) * dp * dp);
            // map from [-1,1] to [0,1]
            points[i] = 0.5 * (1.0 - t);
            points[n - 1 - i] = 0.5 * (1.0 + t);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Self { points, weights }
    }

    /// Smallest rule integrating degree `degree` exactly.
    pub fn for_degree(degree: usize) -> Self {
        Self::new(degree / 2 + 1)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

fn legendre_with_derivative(n: usize, t: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = t;
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * t * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, d)
}

/// Tensor-product rule on the reference cube (`D = 3`) or square (`D = 2`).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<const D: usize> {
    pub points: Vec<[f64; D]>,
    pub weights: Vec<f64>,
    /// Polynomial degree integrated exactly in each variable.
    pub degree: usize,
}

impl<const D: usize> QuadratureRule<D> {
    pub fn for_degree(degree: usize) -> Self {
        let g = GaussRule::for_degree(degree);
        let n = g.len();
        let total = n.pow(D as u32);
        let mut points = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut pt = [0.0; D];
            let mut w = 1.0;
            for x in pt.iter_mut() {
                let i = rem % n;
                rem /= n;
                *x = g.points[i];
                w *= g.weights[i];
            }
            points.push(pt);
            weights.push(w);
        }
        Self {
            points,
            weights,
            degree,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub type CellRule = QuadratureRule<3>;
pub type FaceRule = QuadratureRule<2>;
