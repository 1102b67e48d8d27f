//! Convergence studies against the manufactured solution on the unit cube.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::driver::config::{RunConfig, Study, VerifyConfig};
use crate::driver::manufactured;
use crate::driver::output::ConvergenceRecord;
use crate::error::Result;
use crate::material::IsotropicMaterial;
use crate::mesh::{build_box_mesh, BoundaryPatch, FacePlane};
use crate::problem::{solve, DpgSolution, Problem};
use crate::solver::SolverOptions;

/// Least-squares line `y = slope x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LineFit {
        slope,
        intercept: my - slope * mx,
        r2,
    })
}

/// `lambda* = mu* = 1 + i`, `rho = omega = 1`.
pub fn default_material() -> IsotropicMaterial {
    let one = C64::new(1.0, 1.0);
    IsotropicMaterial::new(one, one, 1.0, 1.0).expect("admissible material")
}

/// Manufactured problem on `n^3` cubes with the exact trace on the whole
/// boundary.
pub fn manufactured_problem(n: usize, p: usize, material: IsotropicMaterial) -> Result<Problem> {
    let bbox = [[0.0, 1.0]; 3];
    let zero = [C64::new(0.0, 0.0); 3];
    let patches = ["-x", "+x", "-y", "+y", "-z", "+z"]
        .iter()
        .map(|s| BoundaryPatch::full_plane(s, FacePlane::parse(s).expect("valid plane"), &bbox, zero))
        .collect();
    let mesh = build_box_mesh(bbox, [n; 3], patches)?;
    let mut problem = Problem::new(mesh, material, p);
    problem.body_force = Some(Arc::new(move |x| manufactured::body_force(&material, x)));
    problem.dirichlet = Some(Arc::new(manufactured::displacement));
    Ok(problem)
}

pub fn relative_h1_error(sol: &DpgSolution) -> f64 {
    let degree = 2 * sol.order() + 6;
    let (err, _) = sol.h1_error(&manufactured::displacement, &manufactured::gradient, degree);
    err / manufactured::h1_norm_squared().sqrt()
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub study: Study,
    pub records: Vec<ConvergenceRecord>,
    /// h study: slope of log error against log h, over the levels after
    /// `fit_skip`. p study: slope of log error against `p^1.25`.
    pub fit: Option<LineFit>,
    /// The same fit over every level.
    pub fit_all: Option<LineFit>,
    pub strictly_decreasing: bool,
}

fn fit_of(records: &[ConvergenceRecord], study: Study) -> Option<LineFit> {
    let x: Vec<f64> = records
        .iter()
        .map(|r| match study {
            Study::H => r.h_max.ln(),
            Study::P => (r.p as f64).powf(1.25),
        })
        .collect();
    let y: Vec<f64> = records.iter().map(|r| r.rel_h1_error.unwrap_or(f64::NAN).ln()).collect();
    fit_line(&x, &y)
}

/// Runs one level at a time; `observe` sees each record as it is produced.
pub fn run_verify_with(
    vcfg: &VerifyConfig,
    p: usize,
    dp: usize,
    material: IsotropicMaterial,
    solver: &SolverOptions,
    mut observe: impl FnMut(&ConvergenceRecord, &DpgSolution) -> Result<()>,
) -> Result<VerifyReport> {
    let runs: Vec<(usize, usize)> = match vcfg.study {
        Study::H => vcfg.levels.iter().map(|&n| (n, p)).collect(),
        Study::P => vcfg.p_list.iter().map(|&q| (vcfg.cells, q)).collect(),
    };
    let mut records = Vec::with_capacity(runs.len());
    for (step, (n, q)) in runs.into_iter().enumerate() {
        let mut problem = manufactured_problem(n, q, material)?;
        problem.dp = dp;
        problem.solver = solver.clone();
        let sol = solve(&problem)?;
        let mut rec = ConvergenceRecord::from_solution(step, &sol);
        rec.rel_h1_error = Some(relative_h1_error(&sol));
        observe(&rec, &sol)?;
        records.push(rec);
    }
    let skip = match vcfg.study {
        Study::H => vcfg.fit_skip.min(records.len()),
        Study::P => 0,
    };
    let strictly_decreasing = records
        .windows(2)
        .all(|w| w[1].rel_h1_error < w[0].rel_h1_error);
    Ok(VerifyReport {
        study: vcfg.study,
        fit: fit_of(&records[skip..], vcfg.study),
        fit_all: fit_of(&records, vcfg.study),
        records,
        strictly_decreasing,
    })
}

pub fn run_verify(
    cfg: &RunConfig,
    observe: impl FnMut(&ConvergenceRecord, &DpgSolution) -> Result<()>,
) -> Result<VerifyReport> {
    let vcfg = cfg.verify.clone().unwrap_or_default();
    let omega = cfg.discretization.omega().unwrap_or(1.0);
    let material = match &cfg.material {
        Some(m) => m.build(omega)?,
        None => IsotropicMaterial { omega, ..default_material() },
    };
    run_verify_with(&vcfg, cfg.discretization.p, cfg.discretization.dp, material, &cfg.solver, observe)
}
