//! Run configuration file (TOML). Lengths may be given in millimetres; they
//! are converted to metres once, at parse time, and the resolved config is
//! what the drivers and the manifest see.

use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::adaptivity::AdaptConfig;
use crate::calibration::{BeamGeometry, DmaMeasurement, Setup};
use crate::driver::beam::ClampMode;
use crate::error::{Error, Result};
use crate::material::IsotropicMaterial;
use crate::mesh::{BoundaryKind, BoundaryPatch, FacePlane};
use crate::solver::SolverOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Verify,
    Calibrate,
    Simulate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    M,
    Mm,
}

impl Units {
    fn scale(self) -> f64 {
        match self {
            Units::M => 1.0,
            Units::Mm => 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    #[serde(rename = "box")]
    pub bbox: [[f64; 2]; 3],
    pub cells: [usize; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatchType {
    Dirichlet,
    Traction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchConfig {
    pub name: String,
    pub plane: String,
    pub rect: [[f64; 2]; 2],
    #[serde(rename = "type")]
    pub kind: PatchType,
    /// Real part: displacement (length units) or traction (Pa).
    #[serde(default)]
    pub value: [f64; 3],
    #[serde(default)]
    pub value_imag: [f64; 3],
    /// Constrained displacement components of a Dirichlet patch.
    #[serde(default = "all_components", skip_serializing_if = "is_all_components")]
    pub components: Vec<String>,
    /// Part of the surface whose reaction force is reported.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub moving: bool,
}

fn all_components() -> Vec<String> {
    vec!["x".into(), "y".into(), "z".into()]
}

fn is_all_components(c: &[String]) -> bool {
    c == all_components().as_slice()
}

impl PatchConfig {
    pub fn to_patch(&self) -> Result<BoundaryPatch> {
        let plane = FacePlane::parse(&self.plane)
            .ok_or_else(|| Error::Config(format!("patch {}: bad plane {:?}", self.name, self.plane)))?;
        let value = [0, 1, 2].map(|c| C64::new(self.value[c], self.value_imag[c]));
        Ok(match self.kind {
            PatchType::Traction => BoundaryPatch::traction(&self.name, plane, self.rect, value),
            PatchType::Dirichlet => {
                let mut components = [false; 3];
                for c in &self.components {
                    let k = match c.as_str() {
                        "x" => 0,
                        "y" => 1,
                        "z" => 2,
                        _ => return Err(Error::Config(format!("patch {}: bad component {c:?}", self.name))),
                    };
                    components[k] = true;
                }
                BoundaryPatch {
                    name: self.name.clone(),
                    plane,
                    rect: self.rect,
                    kind: BoundaryKind::Dirichlet { value, components },
                }
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    #[serde(rename = "E_real", skip_serializing_if = "Option::is_none")]
    pub e_real: Option<f64>,
    #[serde(rename = "E_imag", skip_serializing_if = "Option::is_none")]
    pub e_imag: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu_real: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu_imag: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_real: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_imag: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_real: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_imag: Option<f64>,
    pub rho: f64,
}

impl MaterialConfig {
    /// False for a block that only carries the density, which leaves the
    /// moduli to the calibration.
    pub fn has_moduli(&self) -> bool {
        [self.e_real, self.nu_real, self.lambda_real, self.mu_real].iter().any(Option::is_some)
    }

    /// Complex Lamé pair from whichever parametrization was given.
    pub fn lame(&self) -> Result<(C64, C64)> {
        let im = |v: Option<f64>| v.unwrap_or(0.0);
        match (self.e_real, self.nu_real, self.lambda_real, self.mu_real) {
            (Some(e), Some(nu), None, None) => crate::material::lame_from_young_poisson(
                C64::new(e, im(self.e_imag)),
                C64::new(nu, im(self.nu_imag)),
            ),
            (None, None, Some(l), Some(m)) => {
                Ok((C64::new(l, im(self.lambda_imag)), C64::new(m, im(self.mu_imag))))
            }
            _ => Err(Error::Config(
                "material needs either E_real and nu_real or lambda_real and mu_real".into(),
            )),
        }
    }

    pub fn build(&self, omega: f64) -> Result<IsotropicMaterial> {
        let (l, m) = self.lame()?;
        IsotropicMaterial::new(l, m, self.rho, omega)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscretizationConfig {
    pub p: usize,
    pub dp: usize,
    pub quad_increment: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequency_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        Self {
            p: 1,
            dp: 1,
            quad_increment: 0,
            frequency_hz: None,
            omega: None,
        }
    }
}

impl DiscretizationConfig {
    /// Angular frequency, preferring an explicit `omega`.
    pub fn omega(&self) -> Option<f64> {
        self.omega
            .or_else(|| self.frequency_hz.map(|f| 2.0 * std::f64::consts::PI * f))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamConfig {
    pub setup: Setup,
    pub gap: f64,
    pub width: f64,
    pub thickness: f64,
    pub middle_clamp: f64,
    pub external_clamp: f64,
    pub total_length: f64,
    #[serde(default)]
    pub clamp_mode: ClampMode,
    pub cells: [usize; 3],
    /// Moving clamp displacement; defaults to the measured amplitude.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive_amplitude: Option<f64>,
}

impl BeamConfig {
    pub fn geometry(&self) -> BeamGeometry {
        BeamGeometry {
            setup: self.setup,
            gap: self.gap,
            width: self.width,
            thickness: self.thickness,
            middle_clamp: self.middle_clamp,
            external_clamp: self.external_clamp,
            total_length: self.total_length,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    pub frequency_hz: f64,
    pub amplitude: f64,
    pub inphase_force: f64,
    pub tan_delta: f64,
}

impl MeasurementConfig {
    pub fn measurement(&self) -> DmaMeasurement {
        DmaMeasurement {
            temperature: self.temperature.unwrap_or(f64::NAN),
            frequency_hz: self.frequency_hz,
            amplitude: self.amplitude,
            inphase_force: self.inphase_force,
            tan_delta: self.tan_delta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConfig {
    pub nu_real: f64,
    pub nu_imag: f64,
    /// Known shear modulus; switches to the shear-based inversion.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_real: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_imag: Option<f64>,
    /// CSV of readings; relative paths are taken from the config's directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measurements: Option<PathBuf>,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            nu_real: 0.33,
            nu_imag: 0.0,
            g_real: None,
            g_imag: None,
            measurements: None,
        }
    }
}

impl CalibrationConfig {
    pub fn nu_star(&self) -> C64 {
        C64::new(self.nu_real, self.nu_imag)
    }

    pub fn g_star(&self) -> Option<C64> {
        self.g_real.map(|g| C64::new(g, self.g_imag.unwrap_or(0.0)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Study {
    #[default]
    H,
    P,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub study: Study,
    /// Cells per axis of each uniform level (h study).
    pub levels: Vec<usize>,
    /// Orders of the p study, on a `cells^3` mesh.
    pub p_list: Vec<usize>,
    pub cells: usize,
    /// Coarsest h levels left out of the rate fit.
    pub fit_skip: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            study: Study::H,
            levels: vec![1, 2, 4, 8],
            p_list: vec![1, 2, 3, 4],
            cells: 2,
            fit_skip: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(default)]
    pub units: Units,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometryConfig>,
    #[serde(default, rename = "patch", skip_serializing_if = "Vec::is_empty")]
    pub patches: Vec<PatchConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<MaterialConfig>,
    #[serde(default)]
    pub discretization: DiscretizationConfig,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub adapt: AdaptConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beam: Option<BeamConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement: Option<MeasurementConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyConfig>,
}

impl RunConfig {
    /// Parses, converts lengths to metres and checks that the blocks the
    /// mode needs are present.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let cfg = raw.into_metres();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(cal) = cfg.calibration.as_mut() {
            if let Some(m) = cal.measurements.as_mut() {
                if m.is_relative() {
                    *m = path.parent().unwrap_or(Path::new(".")).join(&*m);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn into_metres(mut self) -> Self {
        let s = self.units.scale();
        if s == 1.0 {
            return self;
        }
        let sc2 = |r: &mut [f64; 2]| r.iter_mut().for_each(|v| *v *= s);
        if let Some(g) = self.geometry.as_mut() {
            g.bbox.iter_mut().for_each(sc2);
        }
        for p in &mut self.patches {
            p.rect.iter_mut().for_each(sc2);
            if p.kind == PatchType::Dirichlet {
                p.value.iter_mut().chain(p.value_imag.iter_mut()).for_each(|v| *v *= s);
            }
        }
        if let Some(b) = self.beam.as_mut() {
            for v in [
                &mut b.gap,
                &mut b.width,
                &mut b.thickness,
                &mut b.middle_clamp,
                &mut b.external_clamp,
                &mut b.total_length,
            ] {
                *v *= s;
            }
            if let Some(a) = b.drive_amplitude.as_mut() {
                *a *= s;
            }
        }
        if let Some(m) = self.measurement.as_mut() {
            m.amplitude *= s;
        }
        self.units = Units::M;
        self
    }

    /// Checks value ranges and that the blocks the mode needs are present.
    pub fn validate(&self) -> Result<()> {
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("{:?} mode needs {what}", self.mode)))
            }
        };
        let d = &self.discretization;
        if !(1..=6).contains(&d.p) {
            return Err(Error::Config(format!("p must be in 1..=6, got {}", d.p)));
        }
        if d.dp < 1 {
            return Err(Error::Config("dp must be at least 1".into()));
        }
        if !(self.solver.tol > 0.0 && self.solver.tol < 1.0) {
            return Err(Error::Config(format!("solver.tol must lie in (0, 1), got {}", self.solver.tol)));
        }
        self.adapt.validate()?;
        for p in &self.patches {
            p.to_patch()?;
        }
        match self.mode {
            Mode::Verify => Ok(()),
            Mode::Calibrate => {
                need(self.beam.is_some(), "a [beam] block")?;
                let file = self.calibration.as_ref().and_then(|c| c.measurements.as_ref());
                need(
                    self.measurement.is_some() || file.is_some(),
                    "a [measurement] block or calibration.measurements",
                )
            }
            Mode::Simulate => {
                if self.beam.is_some() {
                    need(
                        self.material.is_some() || self.measurement.is_some(),
                        "a [material] or [measurement] block",
                    )
                } else {
                    need(self.geometry.is_some(), "a [geometry] or [beam] block")?;
                    need(self.material.is_some(), "a [material] block")
                }
            }
        }
    }
}
