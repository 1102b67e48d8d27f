//! Complex isotropic viscoelastic materials.
//!
//! The dynamic stiffness tensor `C*` is stored as a plain 6x6 Voigt matrix in
//! the ordering (11, 22, 33, 23, 13, 12). Entries are tensor components
//! `C_ijkl`, with no engineering-shear factors folded in, so contracting with
//! a displacement gradient needs no extra weights.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Voigt index for a symmetric pair of tensor indices.
pub const fn voigt_index(i: usize, j: usize) -> usize {
    match (i, j) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (1, 2) | (2, 1) => 3,
        (0, 2) | (2, 0) => 4,
        (0, 1) | (1, 0) => 5,
        _ => panic!("tensor index out of range"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoigtMatrix {
    pub entries: [[C64; 6]; 6],
}

impl VoigtMatrix {
    pub fn zeros() -> Self {
        Self {
            entries: [[C64::new(0.0, 0.0); 6]; 6],
        }
    }

    /// Fourth-order component `C_ijkl`.
    #[inline]
    pub fn component(&self, i: usize, j: usize, k: usize, l: usize) -> C64 {
        self.entries[voigt_index(i, j)][voigt_index(k, l)]
    }

    /// Full 3x3x3x3 tensor, indexed `[i][j][k][l]`.
    pub fn to_tensor(&self) -> [[[[C64; 3]; 3]; 3]; 3] {
        let mut t = [[[[C64::new(0.0, 0.0); 3]; 3]; 3]; 3];
        for (i, ti) in t.iter_mut().enumerate() {
            for (j, tij) in ti.iter_mut().enumerate() {
                for (k, tijk) in tij.iter_mut().enumerate() {
                    for (l, v) in tijk.iter_mut().enumerate() {
                        *v = self.component(i, j, k, l);
                    }
                }
            }
        }
        t
    }

    /// Stress `C : eps` for a symmetric strain given in tensor-component
    /// Voigt form. Shear components count twice in the contraction.
    pub fn apply(&self, strain: &[C64; 6]) -> [C64; 6] {
        let mut out = [C64::new(0.0, 0.0); 6];
        for (a, o) in out.iter_mut().enumerate() {
            for (b, e) in strain.iter().enumerate() {
                let w = if b < 3 { 1.0 } else { 2.0 };
                *o += self.entries[a][b] * e * w;
            }
        }
        out
    }

    pub fn real_part(&self) -> [[f64; 6]; 6] {
        let mut out = [[0.0; 6]; 6];
        for a in 0..6 {
            for b in 0..6 {
                out[a][b] = self.entries[a][b].re;
            }
        }
        out
    }

    /// Plain (non-conjugated) symmetry, the Voigt image of major symmetry.
    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        let scale = self
            .entries
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        (0..6).all(|a| {
            (0..6).all(|b| (self.entries[a][b] - self.entries[b][a]).norm() <= rel_tol * scale)
        })
    }
}

/// Isotropic `C*` from the complex Lame pair.
pub fn cstar_from_lame(lambda_star: C64, mu_star: C64) -> VoigtMatrix {
    let mut v = VoigtMatrix::zeros();
    for a in 0..3 {
        for b in 0..3 {
            v.entries[a][b] = lambda_star;
        }
        v.entries[a][a] = lambda_star + 2.0 * mu_star;
        v.entries[a + 3][a + 3] = mu_star;
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicModuli {
    pub g_star: C64,
    pub k_star: C64,
    pub e_star: C64,
    pub nu_star: C64,
}

pub fn moduli_from_lame(lambda_star: C64, mu_star: C64) -> Result<DynamicModuli> {
    let sum = lambda_star + mu_star;
    if sum.norm() < 1e-14 * (lambda_star.norm() + mu_star.norm()) || sum.norm() == 0.0 {
        return Err(Error::DegenerateModuli(sum.norm()));
    }
    Ok(DynamicModuli {
        g_star: mu_star,
        k_star: lambda_star + mu_star * (2.0 / 3.0),
        e_star: mu_star * (3.0 * lambda_star + 2.0 * mu_star) / sum,
        nu_star: lambda_star / (2.0 * sum),
    })
}

/// Inverse of [`moduli_from_lame`] for a given Young's modulus and Poisson ratio.
pub fn lame_from_young_poisson(e_star: C64, nu_star: C64) -> Result<(C64, C64)> {
    let one = C64::new(1.0, 0.0);
    let compress = one - 2.0 * nu_star;
    if compress.norm() < 1e-12 {
        return Err(Error::IncompressibleLimit(compress.norm()));
    }
    let expand = one + nu_star;
    if expand.norm() < 1e-12 {
        return Err(Error::DegenerateModuli(expand.norm()));
    }
    let lambda = e_star * nu_star / (expand * compress);
    let mu = e_star / (2.0 * expand);
    Ok((lambda, mu))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidityReport {
    /// Eigenvalues of `Re(C*)` in ascending order.
    pub eigenvalues: [f64; 6],
    /// Smallest eigenvalue magnitude, the coercivity proxy.
    pub lambda_min: f64,
    /// +1 when the storage tensor is positive definite, -1 when negative definite.
    pub sign: i8,
}

/// Accepts `C*` when `Re(C*)` is definite, so that the quadratic form
/// `conj(eps) : Re(C*) : eps` never vanishes for a nonzero symmetric strain.
///
/// In engineering-shear variables the quadratic form is exactly the plain
/// Voigt matrix, so its eigenvalues decide the sign pattern. Eigenvalues
/// smaller than `1e-12 * max|eig|` count as zero.
pub fn check_positivity(voigt: &VoigtMatrix) -> Result<ValidityReport> {
    let eig = symmetric_eigenvalues(voigt.real_part());
    let max_abs = eig.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
    let min_abs = eig.iter().fold(f64::INFINITY, |m, e| m.min(e.abs()));
    let all_pos = eig.iter().all(|&e| e > 0.0);
    let all_neg = eig.iter().all(|&e| e < 0.0);
    if !(all_pos || all_neg) || !(min_abs > 1e-12 * max_abs) {
        return Err(Error::IndefiniteMaterial {
            min: eig[0],
            max: eig[5],
        });
    }
    Ok(ValidityReport {
        eigenvalues: eig,
        lambda_min: min_abs,
        sign: if all_pos { 1 } else { -1 },
    })
}

/// Cyclic Jacobi rotations on a real symmetric 6x6 matrix.
fn symmetric_eigenvalues(mut a: [[f64; 6]; 6]) -> [f64; 6] {
    const N: usize = 6;
    for i in 0..N {
        for j in i + 1..N {
            let s = 0.5 * (a[i][j] + a[j][i]);
            a[i][j] = s;
            a[j][i] = s;
        }
    }
    for _sweep in 0..100 {
        let off: f64 = (0..N)
            .flat_map(|i| (0..N).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let diag: f64 = (0..N).map(|i| a[i][i] * a[i][i]).sum();
        if off <= 1e-32 * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..N {
            for q in p + 1..N {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..N {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..N {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig = [0.0; N];
    for i in 0..N {
        eig[i] = a[i][i];
    }
    eig.sort_by(|x, y| x.total_cmp(y));
    eig
}

/// Homogeneous isotropic viscoelastic material at one angular frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropicMaterial {
    pub lambda_star: C64,
    pub mu_star: C64,
    /// Density, kg/m^3.
    pub rho: f64,
    /// Angular frequency, rad/s.
    pub omega: f64,
}

impl IsotropicMaterial {
    /// Validates density, frequency and the storage-positivity condition.
    pub fn new(lambda_star: C64, mu_star: C64, rho: f64, omega: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidMaterial(format!("density must be positive, got {rho}")));
        }
        if !(omega >= 0.0 && omega.is_finite()) {
            return Err(Error::InvalidMaterial(format!(
                "angular frequency must be nonnegative, got {omega}"
            )));
        }
        if !(lambda_star.re.is_finite()
            && lambda_star.im.is_finite()
            && mu_star.re.is_finite()
            && mu_star.im.is_finite())
        {
            return Err(Error::InvalidMaterial("non-finite Lame parameters".into()));
        }
        let mat = Self {
            lambda_star,
            mu_star,
            rho,
            omega,
        };
        check_positivity(&mat.voigt())?;
        Ok(mat)
    }

    pub fn from_young_poisson(e_star: C64, nu_star: C64, rho: f64, omega: f64) -> Result<Self> {
        let (lambda, mu) = lame_from_young_poisson(e_star, nu_star)?;
        Self::new(lambda, mu, rho, omega)
    }

    pub fn voigt(&self) -> VoigtMatrix {
        cstar_from_lame(self.lambda_star, self.mu_star)
    }

    pub fn moduli(&self) -> Result<DynamicModuli> {
        moduli_from_lame(self.lambda_star, self.mu_star)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn shear_only_pattern() {
        let v = cstar_from_lame(c(0.0, 0.0), c(1.0, 0.0));
        for a in 0..6 {
            for b in 0..6 {
                let expect = if a == b {
                    if a < 3 {
                        2.0
                    } else {
                        1.0
                    }
                } else {
                    0.0
                };
                assert_eq!(v.entries[a][b], c(expect, 0.0));
            }
        }
    }

    #[test]
    fn equal_lame_pattern() {
        let z = c(1.0, 1.0);
        let v = cstar_from_lame(z, z);
        assert_eq!(v.entries[0][0], 3.0 * z);
        assert_eq!(v.entries[0][1], z);
        assert_eq!(v.entries[2][1], z);
        assert_eq!(v.entries[4][4], z);
        assert_eq!(v.entries[0][4], c(0.0, 0.0));
        assert!(v.is_symmetric(0.0));
    }

    #[test]
    fn moduli_special_cases() {
        let m = moduli_from_lame(c(1.0, 1.0), c(1.0, 1.0)).unwrap();
        assert_eq!(m.nu_star, c(0.25, 0.0));
        assert_relative_eq!(m.e_star.re, 2.5, epsilon = 1e-15);
        assert_relative_eq!(m.e_star.im, 2.5, epsilon = 1e-15);
        let m = moduli_from_lame(c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        assert_eq!(m.nu_star, c(0.0, 0.0));
        assert_eq!(m.e_star, c(2.0, 0.0));
        assert_eq!(m.g_star, c(1.0, 0.0));
        assert!(matches!(
            moduli_from_lame(c(1.0, 0.0), c(-1.0, 0.0)),
            Err(Error::DegenerateModuli(_))
        ));
    }

    #[test]
    fn young_poisson_inverse_cases() {
        let (l, m) = lame_from_young_poisson(c(2.0, 0.0), c(0.0, 0.0)).unwrap();
        assert_eq!(l, c(0.0, 0.0));
        assert_eq!(m, c(1.0, 0.0));
        let (l, m) = lame_from_young_poisson(c(2.5, 2.5), c(0.25, 0.0)).unwrap();
        assert_relative_eq!((l - c(1.0, 1.0)).norm(), 0.0, epsilon = 1e-15);
        assert_relative_eq!((m - c(1.0, 1.0)).norm(), 0.0, epsilon = 1e-15);
        assert!(matches!(
            lame_from_young_poisson(c(1.0, 0.0), c(0.5, 0.0)),
            Err(Error::IncompressibleLimit(_))
        ));
    }

    #[test]
    fn positivity_accepts_and_rejects() {
        let rep = check_positivity(&cstar_from_lame(c(1.0, 1.0), c(1.0, 1.0))).unwrap();
        assert_eq!(rep.sign, 1);
        // 3K = 5, 2G = 2 (twice), G = 1 (three times)
        let expect = [1.0, 1.0, 1.0, 2.0, 2.0, 5.0];
        for (e, x) in rep.eigenvalues.iter().zip(expect) {
            assert_relative_eq!(*e, x, epsilon = 1e-13);
        }
        assert!(matches!(
            check_positivity(&cstar_from_lame(c(0.0, 1.0), c(0.0, 1.0))),
            Err(Error::IndefiniteMaterial { .. })
        ));
        // negative bulk modulus with positive shear: indefinite
        assert!(check_positivity(&cstar_from_lame(c(-2.0, 0.0), c(1.0, 0.0))).is_err());
        // both negative: definite with negative sign
        let rep = check_positivity(&cstar_from_lame(c(-1.0, 0.0), c(-1.0, 0.0))).unwrap();
        assert_eq!(rep.sign, -1);
    }

    #[test]
    fn material_validation() {
        assert!(IsotropicMaterial::new(c(1.0, 0.0), c(1.0, 0.0), 0.0, 1.0).is_err());
        assert!(IsotropicMaterial::new(c(1.0, 0.0), c(1.0, 0.0), 1.0, -1.0).is_err());
        assert!(IsotropicMaterial::new(c(0.0, 1.0), c(0.0, 1.0), 1.0, 1.0).is_err());
        let m = IsotropicMaterial::from_young_poisson(c(2.5, 2.5), c(0.25, 0.0), 1.0, 0.0).unwrap();
        assert_relative_eq!(m.mu_star.re, 1.0, epsilon = 1e-14);
    }
}
