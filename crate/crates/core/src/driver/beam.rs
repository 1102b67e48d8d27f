//! Clamped-bar models of the single and double cantilever DMA fixtures.
//!
//! The bar spans `x` along its length, `y` across its width and `z` through
//! its thickness. Each clamp grips the full width on both the top and the
//! bottom face; the moving clamp drives the bar vertically.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::calibration::{BeamGeometry, Setup};
use crate::error::{Error, Result};
use crate::mesh::{build_box_mesh, BoundaryKind, BoundaryPatch, FacePlane, TensorMesh};

pub const MOVING_PATCHES: [&str; 2] = ["moving_top", "moving_bottom"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClampMode {
    /// All three displacement components prescribed under a clamp.
    #[default]
    Full,
    /// Only the vertical component prescribed; the footprint is otherwise free to slide.
    VerticalOnly,
}

impl ClampMode {
    fn components(self) -> [bool; 3] {
        match self {
            ClampMode::Full => [true; 3],
            ClampMode::VerticalOnly => [false, false, true],
        }
    }
}

/// `(name, x-interval, moving)` of every clamp along the bar.
pub fn clamp_layout(geom: &BeamGeometry) -> Result<Vec<(&'static str, [f64; 2], bool)>> {
    geom.validate()?;
    let (le, lm, l) = (geom.external_clamp, geom.middle_clamp, geom.gap);
    let layout = match geom.setup {
        Setup::Single => {
            let moving = [le + l, le + l + lm];
            if moving[1] > geom.total_length {
                return Err(Error::BadMeasurement("clamps do not fit on the sample".into()));
            }
            vec![("fixed", [0.0, le], false), ("moving", moving, true)]
        }
        Setup::Double => {
            let overhang = 0.5 * (geom.total_length - 2.0 * le - 2.0 * l - lm);
            if overhang < 0.0 {
                return Err(Error::BadMeasurement("clamps do not fit on the sample".into()));
            }
            let a = [overhang, overhang + le];
            let m = [a[1] + l, a[1] + l + lm];
            let b = [m[1] + l, m[1] + l + le];
            vec![("fixed_left", a, false), ("moving", m, true), ("fixed_right", b, false)]
        }
    };
    Ok(layout)
}

/// Bar mesh with top and bottom patches under every clamp. The moving clamp
/// displaces by `amplitude` in `z`.
pub fn beam_mesh(geom: &BeamGeometry, cells: [usize; 3], mode: ClampMode, amplitude: f64) -> Result<TensorMesh> {
    let bbox = [[0.0, geom.total_length], [0.0, geom.width], [0.0, geom.thickness]];
    let zero = C64::new(0.0, 0.0);
    let mut patches = Vec::new();
    for (name, span, moving) in clamp_layout(geom)? {
        let value = if moving {
            [zero, zero, C64::new(amplitude, 0.0)]
        } else {
            [zero; 3]
        };
        for (suffix, plane) in [("top", "+z"), ("bottom", "-z")] {
            let mut patch = BoundaryPatch::dirichlet(
                &format!("{name}_{suffix}"),
                FacePlane::parse(plane).expect("valid plane"),
                [span, [0.0, geom.width]],
                value,
            );
            if let BoundaryKind::Dirichlet { components, .. } = &mut patch.kind {
                *components = mode.components();
            }
            patches.push(patch);
        }
    }
    build_box_mesh(bbox, cells, patches)
}
