//! Smooth manufactured solution on the unit cube: every displacement
//! component equals `S(x) = sin(pi x) sin(pi y) sin(pi z)`, which vanishes on
//! the boundary.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::material::IsotropicMaterial;

fn sines(x: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    (x.map(|t| (PI * t).sin()), x.map(|t| (PI * t).cos()))
}

pub fn displacement(x: [f64; 3]) -> [C64; 3] {
    let (s, _) = sines(x);
    let v = C64::new(s[0] * s[1] * s[2], 0.0);
    [v; 3]
}

/// `grad[c][k] = d u_c / d x_k`.
pub fn gradient(x: [f64; 3]) -> [[C64; 3]; 3] {
    let (s, c) = sines(x);
    let g = [
        PI * c[0] * s[1] * s[2],
        PI * s[0] * c[1] * s[2],
        PI * s[0] * s[1] * c[2],
    ]
    .map(|v| C64::new(v, 0.0));
    [g; 3]
}

/// `f = -omega^2 rho u - div(C* : grad u)` in closed form:
/// `f_a = -omega^2 rho S - (lambda + mu) sum_b d_a d_b S + 3 pi^2 mu S`.
pub fn body_force(material: &IsotropicMaterial, x: [f64; 3]) -> [C64; 3] {
    let (s, c) = sines(x);
    let big_s = s[0] * s[1] * s[2];
    let pi2 = PI * PI;
    let mut hess = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            hess[a][b] = if a == b {
                -pi2 * big_s
            } else {
                let k = 3 - a - b;
                pi2 * c[a] * c[b] * s[k]
            };
        }
    }
    let lm = material.lambda_star + material.mu_star;
    let w2rho = material.omega * material.omega * material.rho;
    [0, 1, 2].map(|a| {
        let grad_div: f64 = hess[a].iter().sum();
        -w2rho * big_s - lm * grad_div + 3.0 * pi2 * material.mu_star * big_s
    })
}

/// `|u|_{H1}^2` over the unit cube: `3 (1/8 + 3 pi^2 / 8)`.
pub fn h1_norm_squared() -> f64 {
    3.0 * (0.125 + 3.0 * PI * PI / 8.0)
}
