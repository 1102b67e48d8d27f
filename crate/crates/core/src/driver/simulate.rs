//! Adaptive forced-vibration runs with the clamp force as quantity of interest.

use std::path::Path;

use num_complex::Complex64 as C64;

use crate::adaptivity::{adapt_loop_with, AdaptStep};
use crate::driver::beam::{beam_mesh, MOVING_PATCHES};
use crate::driver::calibrate::invert;
use crate::driver::config::{PatchConfig, RunConfig};
use crate::driver::output::{write_convergence_csv, write_manifest, write_vtk, ConvergenceRecord};
use crate::error::{Error, Result};
use crate::material::IsotropicMaterial;
use crate::mesh::build_box_mesh;
use crate::problem::{DpgSolution, Problem};
use crate::solver::SolveMethod;

/// Everything a simulate run needs, resolved from the config.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub problem: Problem,
    pub qoi_patches: Vec<String>,
    /// Measured `|F*_exp|`, when a measurement is configured.
    pub reference_force: Option<f64>,
    /// Calibrated `E*`, when the material came from a measurement.
    pub calibrated_e: Option<C64>,
}

pub fn build_simulation(cfg: &RunConfig) -> Result<Simulation> {
    let disc = &cfg.discretization;
    let meas = cfg.measurement.map(|m| m.measurement());
    let omega = disc
        .omega()
        .or_else(|| meas.map(|m| 2.0 * std::f64::consts::PI * m.frequency_hz))
        .unwrap_or(0.0);
    let reference_force = meas.map(|m| m.force_magnitude()).transpose()?;

    let (mesh, qoi_patches, material, calibrated_e) = if let Some(beam) = &cfg.beam {
        let geom = beam.geometry();
        let amplitude = beam
            .drive_amplitude
            .or(meas.map(|m| m.amplitude))
            .ok_or_else(|| Error::Config("beam needs drive_amplitude or a [measurement] block".into()))?;
        let mesh = beam_mesh(&geom, beam.cells, beam.clamp_mode, amplitude)?;
        let (material, e) = match (cfg.material.filter(|m| m.has_moduli()), &meas) {
            (Some(m), _) => (m.build(omega)?, None),
            (None, Some(m)) => {
                let cal = cfg.calibration.clone().unwrap_or_default();
                let e = invert(m, &geom, &cal)?;
                let nu = match cal.g_star() {
                    Some(g) => e / (2.0 * g) - 1.0,
                    None => cal.nu_star(),
                };
                let rho = cfg.material.map_or(f64::NAN, |m| m.rho);
                (IsotropicMaterial::from_young_poisson(e, nu, rho, omega)?, Some(e))
            }
            (None, None) => return Err(Error::Config("simulate needs [material] or [measurement]".into())),
        };
        (mesh, MOVING_PATCHES.map(String::from).to_vec(), material, e)
    } else {
        let geo = cfg
            .geometry
            .as_ref()
            .ok_or_else(|| Error::Config("simulate needs [geometry] or [beam]".into()))?;
        let patches = cfg.patches.iter().map(PatchConfig::to_patch).collect::<Result<Vec<_>>>()?;
        let mesh = build_box_mesh(geo.bbox, geo.cells, patches)?;
        let qoi = cfg.patches.iter().filter(|p| p.moving).map(|p| p.name.clone()).collect();
        let material = cfg
            .material
            .as_ref()
            .ok_or_else(|| Error::Config("simulate needs a [material] block".into()))?
            .build(omega)?;
        (mesh, qoi, material, None)
    };

    let mut problem = Problem::new(mesh, material, disc.p);
    problem.dp = disc.dp;
    problem.quad_increment = disc.quad_increment;
    problem.solver = cfg.solver.clone();
    Ok(Simulation {
        problem,
        qoi_patches,
        reference_force,
        calibrated_e,
    })
}

impl Simulation {
    pub fn force(&self, sol: &DpgSolution) -> Result<Option<C64>> {
        if self.qoi_patches.is_empty() {
            return Ok(None);
        }
        let names: Vec<&str> = self.qoi_patches.iter().map(String::as_str).collect();
        sol.patch_force(&names, 2).map(Some)
    }
}

#[derive(Debug)]
pub struct SimulateOutcome {
    pub simulation: Simulation,
    pub history: Vec<AdaptStep>,
    pub records: Vec<ConvergenceRecord>,
    pub warnings: Vec<String>,
}

/// Fewer iterations than this fraction of the cap count as healthy.
const SLOW_SOLVE_FRACTION: f64 = 0.5;

pub fn run_simulate_with(cfg: &RunConfig, mut observe: impl FnMut(&AdaptStep, &ConvergenceRecord)) -> Result<SimulateOutcome> {
    let simulation = build_simulation(cfg)?;
    if simulation.problem.material.rho.is_nan() && simulation.problem.material.omega != 0.0 {
        return Err(Error::Config("a density is needed when omega > 0 (material.rho)".into()));
    }
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    let mut qoi_error = None;
    let history = adapt_loop_with(&simulation.problem, &cfg.adapt, |step| {
        let sol = &step.solution;
        let mut rec = ConvergenceRecord::from_solution(step.step, sol);
        match simulation.force(sol) {
            Ok(q) => rec.qoi = q,
            Err(e) => {
                qoi_error.get_or_insert(e);
            }
        }
        let r = &sol.report;
        if r.method == SolveMethod::Iterative && r.iterations as f64 > SLOW_SOLVE_FRACTION * cfg.solver.max_iter as f64 {
            warnings.push(format!(
                "step {}: {} CG iterations; omega may be close to a resonance of the structure",
                step.step, r.iterations
            ));
        }
        observe(step, &rec);
        records.push(rec);
    })?;
    if let Some(e) = qoi_error {
        return Err(e);
    }
    Ok(SimulateOutcome {
        simulation,
        history,
        records,
        warnings,
    })
}

/// Writes `convergence.csv`, `fields_step<k>.vtk` and `manifest.txt`.
pub fn write_simulation_outputs(dir: &Path, cfg: &RunConfig, outcome: &SimulateOutcome) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_convergence_csv(&dir.join("convergence.csv"), &outcome.records)?;
    for step in &outcome.history {
        let path = dir.join(format!("fields_step{}.vtk", step.step));
        write_vtk(&path, &step.solution, &format!("step {}", step.step))?;
    }
    let mut header = vec![
        ("mode".to_string(), "simulate".to_string()),
        ("steps".to_string(), outcome.history.len().to_string()),
    ];
    if let Some(e) = outcome.simulation.calibrated_e {
        header.push(("calibrated_E".into(), format!("{:.16e} {:+.16e}i", e.re, e.im)));
    }
    if let Some(f) = outcome.simulation.reference_force {
        header.push(("reference_force_abs".into(), format!("{f:.16e}")));
    }
    if let Some(q) = outcome.records.last().and_then(|r| r.qoi) {
        header.push(("final_force".into(), format!("{:.16e} {:+.16e}i", q.re, q.im)));
    }
    for w in &outcome.warnings {
        header.push(("warning".into(), w.clone()));
    }
    write_manifest(&dir.join("manifest.txt"), &header, &cfg.to_toml_string()?)
}
