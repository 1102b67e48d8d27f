//! Batch inversion of DMA readings.

use std::path::Path;

use num_complex::Complex64 as C64;
use serde::Deserialize;

use crate::calibration::{invert_dma, shear_variant_invert, BeamGeometry, DmaMeasurement};
use crate::driver::config::{CalibrationConfig, RunConfig};
use crate::error::{Error, Result};

pub const MODULUS_HEADER: [&str; 5] = ["freq_hz", "E_re", "E_im", "E_abs", "tan_delta"];

#[derive(Debug, Deserialize)]
struct MeasurementRow {
    #[serde(rename = "temp_C")]
    temperature: Option<f64>,
    freq_hz: f64,
    amplitude_m: f64,
    #[serde(rename = "inphase_force_N")]
    inphase_force: f64,
    tan_delta: f64,
}

/// Reads the measurement table. Columns are matched by header name, so their
/// order is free; `#` lines are comments.
pub fn parse_measurements(text: &str) -> Result<Vec<DmaMeasurement>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let rows: Vec<DmaMeasurement> = reader
        .deserialize::<MeasurementRow>()
        .map(|row| {
            let r = row.map_err(|e| Error::BadMeasurement(e.to_string()))?;
            let m = DmaMeasurement {
                temperature: r.temperature.unwrap_or(f64::NAN),
                frequency_hz: r.freq_hz,
                amplitude: r.amplitude_m,
                inphase_force: r.inphase_force,
                tan_delta: r.tan_delta,
            };
            m.validate()?;
            Ok(m)
        })
        .collect::<Result<_>>()?;
    if rows.is_empty() {
        return Err(Error::BadMeasurement("measurement file has no readings".into()));
    }
    Ok(rows)
}

pub fn invert(meas: &DmaMeasurement, geom: &BeamGeometry, cal: &CalibrationConfig) -> Result<C64> {
    match cal.g_star() {
        Some(g) => shear_variant_invert(meas, geom, g),
        None => invert_dma(meas, geom, cal.nu_star()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulusRow {
    pub frequency_hz: f64,
    pub e_star: C64,
}

pub fn moduli_csv(rows: &[ModulusRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(MODULUS_HEADER).expect("in-memory write");
    for r in rows {
        let e = r.e_star;
        let fields = [r.frequency_hz, e.re, e.im, e.norm(), e.im / e.re].map(|v| format!("{v:.16e}"));
        w.write_record(&fields).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// Every reading of the run: the CSV file if one is named, else the single
/// `[measurement]` block.
pub fn measurements(cfg: &RunConfig) -> Result<Vec<DmaMeasurement>> {
    let cal = cfg.calibration.clone().unwrap_or_default();
    match (&cal.measurements, &cfg.measurement) {
        (Some(path), _) => read_measurements(path),
        (None, Some(m)) => Ok(vec![m.measurement()]),
        (None, None) => Err(Error::Config("no measurements given".into())),
    }
}

pub fn read_measurements(path: &Path) -> Result<Vec<DmaMeasurement>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_measurements(&text)
}

pub fn run_calibrate(cfg: &RunConfig) -> Result<Vec<ModulusRow>> {
    let geom = cfg
        .beam
        .as_ref()
        .ok_or_else(|| Error::Config("calibrate needs a [beam] block".into()))?
        .geometry();
    let cal = cfg.calibration.clone().unwrap_or_default();
    measurements(cfg)?
        .iter()
        .map(|m| {
            Ok(ModulusRow {
                frequency_hz: m.frequency_hz,
                e_star: invert(m, &geom, &cal)?,
            })
        })
        .collect()
}
