//! Timoshenko cantilever model of the DMA clamp fixtures and its inversion
//! for the dynamic Young's modulus.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Timoshenko shear coefficient of a rectangular section.
pub const KAPPA: f64 = 5.0 / 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setup {
    Single,
    Double,
}

impl Setup {
    pub fn beta_c(self) -> f64 {
        match self {
            Setup::Single => 12.0,
            Setup::Double => 24.0,
        }
    }
}

/// Sample and fixture dimensions, in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamGeometry {
    pub setup: Setup,
    /// Free distance between a static clamp edge and the moving clamp edge.
    pub gap: f64,
    pub width: f64,
    pub thickness: f64,
    pub middle_clamp: f64,
    pub external_clamp: f64,
    pub total_length: f64,
}

impl BeamGeometry {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.gap,
            self.width,
            self.thickness,
            self.middle_clamp,
            self.external_clamp,
            self.total_length,
        ];
        if all.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::BadMeasurement(format!("beam dimensions must be positive: {self:?}")));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.width * self.thickness
    }

    pub fn second_moment(&self) -> f64 {
        self.width * self.thickness.powi(3) / 12.0
    }

    /// Length over which the sample deforms: `L` or `2L`.
    pub fn deformed_span(&self) -> f64 {
        match self.setup {
            Setup::Single => self.gap,
            Setup::Double => 2.0 * self.gap,
        }
    }
}

/// One instrument reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmaMeasurement {
    pub temperature: f64,
    pub frequency_hz: f64,
    /// Displacement amplitude of the moving clamp, m.
    pub amplitude: f64,
    /// `|F| cos(delta)`, N.
    pub inphase_force: f64,
    pub tan_delta: f64,
}

impl DmaMeasurement {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::BadMeasurement(format!("amplitude must be positive, got {}", self.amplitude)));
        }
        if !(self.frequency_hz >= 0.0 && self.frequency_hz.is_finite()) {
            return Err(Error::BadMeasurement(format!(
                "frequency must be nonnegative, got {}",
                self.frequency_hz
            )));
        }
        if !self.inphase_force.is_finite() {
            return Err(Error::BadMeasurement("in-phase force is not finite".into()));
        }
        if !self.tan_delta.is_finite() {
            return Err(Error::BadPhase(self.tan_delta));
        }
        Ok(())
    }

    pub fn phase(&self) -> f64 {
        self.tan_delta.atan()
    }

    /// `|F|` recovered from the in-phase part.
    pub fn force_magnitude(&self) -> Result<f64> {
        let cos = self.phase().cos();
        if !(cos > 0.0) {
            return Err(Error::BadPhase(self.tan_delta));
        }
        Ok(self.inphase_force / cos)
    }

    /// `F*/u* = |F|/|u| e^{i delta}`.
    pub fn complex_stiffness(&self) -> Result<C64> {
        self.validate()?;
        Ok(C64::from_polar(self.force_magnitude()? / self.amplitude, self.phase()))
    }
}

/// Static Timoshenko deflection under the moving clamp for a real modulus:
/// `F L^3 / (beta_c E I) (1 + (2/kappa)(1 + nu)(t/L)^2)`.
pub fn forward_deflection(force: f64, geom: &BeamGeometry, e: f64, nu: f64) -> f64 {
    let l = geom.gap;
    let bending = force * l.powi(3) / (geom.setup.beta_c() * e * geom.second_moment());
    bending * (1.0 + (2.0 / KAPPA) * (1.0 + nu) * (geom.thickness / l).powi(2))
}

/// Manufacturer's clamping correction.
pub fn correction_alpha(geom: &BeamGeometry) -> f64 {
    let r = geom.gap / geom.thickness;
    0.7616 - 0.02713 * r.sqrt() + 0.1083 * r.ln()
}

/// `(1/alpha_c)(F*/u*)(L^3/(beta_c I))`, the modulus before the shear bracket.
fn bending_modulus(meas: &DmaMeasurement, geom: &BeamGeometry) -> Result<C64> {
    geom.validate()?;
    let k = meas.complex_stiffness()?;
    Ok(k * (geom.gap.powi(3) / (correction_alpha(geom) * geom.setup.beta_c() * geom.second_moment())))
}

/// Dynamic Young's modulus from a measurement and an assumed `nu*`.
pub fn invert_dma(meas: &DmaMeasurement, geom: &BeamGeometry, nu_star: C64) -> Result<C64> {
    let k = bending_modulus(meas, geom)?;
    let ratio = geom.thickness / geom.gap;
    Ok(k * (1.0 + 2.0 / KAPPA * (1.0 + nu_star) * ratio * ratio))
}

/// Dynamic Young's modulus from a measurement and a known `G*`, using
/// `nu* = E*/(2 G*) - 1`, which makes the relation linear in `E*`.
pub fn shear_variant_invert(meas: &DmaMeasurement, geom: &BeamGeometry, g_star: C64) -> Result<C64> {
    if g_star.norm() == 0.0 {
        return Err(Error::DegenerateShear(0.0));
    }
    let k = bending_modulus(meas, geom)?;
    let ratio = geom.thickness / geom.gap;
    let denom = 1.0 - k * (1.0 / KAPPA) * ratio * ratio / g_star;
    if denom.norm() < 1e-12 {
        return Err(Error::DegenerateShear(denom.norm()));
    }
    Ok(k / denom)
}

/// The reading an instrument would report for a sample with modulus
/// `e_star`, i.e. the exact inverse of [`invert_dma`].
pub fn synthetic_measurement(
    e_star: C64,
    nu_star: C64,
    geom: &BeamGeometry,
    amplitude: f64,
    frequency_hz: f64,
) -> DmaMeasurement {
    let ratio = geom.thickness / geom.gap;
    let bracket = 1.0 + 2.0 / KAPPA * (1.0 + nu_star) * ratio * ratio;
    let scale = geom.gap.powi(3) / (correction_alpha(geom) * geom.setup.beta_c() * geom.second_moment());
    let stiffness = e_star / (bracket * scale);
    let delta = stiffness.arg();
    DmaMeasurement {
        temperature: f64::NAN,
        frequency_hz,
        amplitude,
        inphase_force: stiffness.norm() * amplitude * delta.cos(),
        tan_delta: delta.tan(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_geom() -> BeamGeometry {
        BeamGeometry {
            setup: Setup::Single,
            gap: 1.0,
            width: 12.0,
            thickness: 1.0,
            middle_clamp: 0.1,
            external_clamp: 0.1,
            total_length: 2.0,
        }
    }

    #[test]
    fn alpha_at_unit_ratio() {
        assert!((correction_alpha(&unit_geom()) - 0.73447).abs() < 1e-15);
    }

    #[test]
    fn unit_forward_deflection() {
        // I = w t^3 / 12 = 1
        let g = unit_geom();
        let u = forward_deflection(12.0, &g, 1.0, 0.0);
        assert!((u - (1.0 + 12.0 / 5.0)).abs() < 1e-14);
        let thin = BeamGeometry { thickness: 1e-8, width: 12e24, ..g };
        let u = forward_deflection(12.0, &thin, 1.0, 0.0);
        assert!((u - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bad_phase_and_measurement() {
        let mut m = DmaMeasurement {
            temperature: 25.0,
            frequency_hz: 1.0,
            amplitude: 1e-5,
            inphase_force: 0.1,
            tan_delta: f64::INFINITY,
        };
        assert!(matches!(m.complex_stiffness(), Err(Error::BadPhase(_))));
        m.tan_delta = 0.1;
        m.amplitude = 0.0;
        assert!(matches!(m.complex_stiffness(), Err(Error::BadMeasurement(_))));
    }
}
