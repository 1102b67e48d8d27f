//! Hierarchical 1D shape functions on `[0, 1]`.
//!
//! Index 0 and 1 are the linear vertex functions `1 - x` and `x`; indices
//! `k >= 2` are integrated Legendre bubbles of degree `k` that vanish at both
//! endpoints.

/// Legendre polynomials `P_0..=P_n` at `t` in `[-1, 1]`.
pub fn legendre(n: usize, t: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(1.0);
    if n >= 1 {
        p.push(t);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * t * p[k] - kf * p[k - 1]) / (kf + 1.0);
        p.push(next);
    }
    p
}

/// Shifted Legendre polynomials `P_m(2s - 1)`, `m < n`, on `[0, 1]`.
/// They form the traction basis on element faces.
pub fn face_legendre(n: usize, s: f64) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let mut p = legendre(n - 1, 2.0 * s - 1.0);
    p.truncate(n);
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ShapeSet1D {
    order: usize,
}

impl ShapeSet1D {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "shape order must be at least 1");
        Self { order }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.order + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Values of all shape functions at `x`.
    pub fn values(&self, x: f64) -> Vec<f64> {
        let t = 2.0 * x - 1.0;
        let p = legendre(self.order, t);
        let mut out = Vec::with_capacity(self.len());
        out.push(1.0 - x);
        out.push(x);
        for k in 2..=self.order {
            let scale = 1.0 / (2.0 * (2.0 * k as f64 - 1.0)).sqrt();
            out.push((p[k] - p[k - 2]) * scale);
        }
        out
    }

    /// Derivatives with respect to `x` of all shape functions.
    pub fn derivatives(&self, x: f64) -> Vec<f64> {
        let t = 2.0 * x - 1.0;
        let p = legendre(self.order, t);
        let mut out = Vec::with_capacity(self.len());
        out.push(-1.0);
        out.push(1.0);
        for k in 2..=self.order {
            // d/dt (P_k - P_{k-2}) = (2k - 1) P_{k-1}, and dt/dx = 2
            let c = (2.0 * k as f64 - 1.0) / (2.0 * (2.0 * k as f64 - 1.0)).sqrt();
            out.push(2.0 * c * p[k - 1]);
        }
        out
    }
}
