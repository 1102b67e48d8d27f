//! Axis-aligned tensor-product hexahedral meshes over a box.
//!
//! Elements are the cells of three strictly increasing coordinate arrays.
//! Element `(i, j, k)` has linear id `i + nx * (j + ny * k)`. Faces normal to
//! axis `a` are numbered in a block per axis; every face carries the fixed
//! global normal `+e_a`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Relative tolerance used when comparing coordinates to grid lines.
const SNAP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Low,
    High,
}

/// One of the six planes bounding the box, e.g. `+z` is the top face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FacePlane {
    pub axis: usize,
    pub side: Side,
}

impl FacePlane {
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        let (sign, rest) = s.split_at(1.min(s.len()));
        let side = match sign {
            "+" => Side::High,
            "-" => Side::Low,
            _ => return None,
        };
        let axis = match rest {
            "x" => 0,
            "y" => 1,
            "z" => 2,
            _ => return None,
        };
        Some(Self { axis, side })
    }

    /// Outward normal sign relative to `+e_axis`.
    pub fn outward_sign(&self) -> f64 {
        match self.side {
            Side::Low => -1.0,
            Side::High => 1.0,
        }
    }

    /// The two tangential axes in increasing order.
    pub fn tangential_axes(&self) -> [usize; 2] {
        tangential_axes(self.axis)
    }
}

impl std::fmt::Display for FacePlane {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sign = match self.side {
            Side::Low => '-',
            Side::High => '+',
        };
        write!(f, "{sign}{}", ['x', 'y', 'z'][self.axis])
    }
}

pub const fn tangential_axes(axis: usize) -> [usize; 2] {
    match axis {
        0 => [1, 2],
        1 => [0, 2],
        _ => [0, 1],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryKind {
    /// Prescribed displacement (m) on the selected components. Components
    /// that are not selected are traction free.
    Dirichlet { value: [C64; 3], components: [bool; 3] },
    /// Prescribed outward traction (Pa).
    Traction { value: [C64; 3] },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPatch {
    pub name: String,
    pub plane: FacePlane,
    /// Bounds along the two tangential axes (in increasing axis order).
    pub rect: [[f64; 2]; 2],
    pub kind: BoundaryKind,
}

impl BoundaryPatch {
    pub fn dirichlet(name: &str, plane: FacePlane, rect: [[f64; 2]; 2], value: [C64; 3]) -> Self {
        Self {
            name: name.to_string(),
            plane,
            rect,
            kind: BoundaryKind::Dirichlet {
                value,
                components: [true; 3],
            },
        }
    }

    pub fn traction(name: &str, plane: FacePlane, rect: [[f64; 2]; 2], value: [C64; 3]) -> Self {
        Self {
            name: name.to_string(),
            plane,
            rect,
            kind: BoundaryKind::Traction { value },
        }
    }

    /// A Dirichlet patch covering the whole plane of the box.
    pub fn full_plane(name: &str, plane: FacePlane, bounds: &[[f64; 2]; 3], value: [C64; 3]) -> Self {
        let [t1, t2] = plane.tangential_axes();
        Self::dirichlet(name, plane, [bounds[t1], bounds[t2]], value)
    }

    fn contains_point(&self, u: f64, v: f64, tol: [f64; 2]) -> bool {
        u >= self.rect[0][0] - tol[0]
            && u <= self.rect[0][1] + tol[0]
            && v >= self.rect[1][0] - tol[1]
            && v <= self.rect[1][1] + tol[1]
    }
}

/// Axis-aligned bounds of one element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Cell {
    pub fn size(&self) -> [f64; 3] {
        [
            self.hi[0] - self.lo[0],
            self.hi[1] - self.lo[1],
            self.hi[2] - self.lo[2],
        ]
    }

    pub fn volume(&self) -> f64 {
        let h = self.size();
        h[0] * h[1] * h[2]
    }

    pub fn diameter(&self) -> f64 {
        let h = self.size();
        (h[0] * h[0] + h[1] * h[1] + h[2] * h[2]).sqrt()
    }

    /// Affine map from the reference cube `[0,1]^3`.
    #[inline]
    pub fn map(&self, xi: [f64; 3]) -> [f64; 3] {
        [
            self.lo[0] + xi[0] * (self.hi[0] - self.lo[0]),
            self.lo[1] + xi[1] * (self.hi[1] - self.lo[1]),
            self.lo[2] + xi[2] * (self.hi[2] - self.lo[2]),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElementId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaceId(pub usize);

/// Boundary condition seen by a single face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaceCondition {
    Interior,
    /// Boundary face; `patch` is `None` for untagged (traction-free) faces.
    Boundary {
        plane: FacePlane,
        patch: Option<usize>,
        kind: BoundaryKind,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub id: FaceId,
    pub axis: usize,
    /// Grid-line index along `axis` where the face sits.
    pub plane_index: usize,
    /// Interval indices along the two tangential axes.
    pub intervals: [usize; 2],
    /// Element on the low side (global normal points out of it) and high side.
    pub neighbors: [Option<ElementId>; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorMesh {
    grids: [Vec<f64>; 3],
    patches: Vec<BoundaryPatch>,
}

impl TensorMesh {
    /// Builds a mesh from explicit grid lines. Patch rectangles must already
    /// align with grid lines.
    pub fn from_grids(grids: [Vec<f64>; 3], patches: Vec<BoundaryPatch>) -> Result<Self> {
        for (a, g) in grids.iter().enumerate() {
            if g.len() < 2 {
                return Err(Error::BadMesh(format!("axis {a} needs at least two grid lines")));
            }
            if g.windows(2).any(|w| !(w[1] > w[0]) || !w[0].is_finite() || !w[1].is_finite()) {
                return Err(Error::BadMesh(format!("axis {a} grid is not strictly increasing")));
            }
        }
        let mesh = Self { grids, patches };
        mesh.validate_patches()?;
        Ok(mesh)
    }

    fn validate_patches(&self) -> Result<()> {
        for (n, patch) in self.patches.iter().enumerate() {
            let [t1, t2] = patch.plane.tangential_axes();
            for (r, ax) in [t1, t2].into_iter().enumerate() {
                let [a, b] = patch.rect[r];
                let g = &self.grids[ax];
                let tol = SNAP_TOL * (g[g.len() - 1] - g[0]);
                if !(b > a) || a < g[0] - tol || b > g[g.len() - 1] + tol {
                    return Err(Error::BadPatch(format!(
                        "patch '{}' rectangle [{a}, {b}] lies off the {} boundary",
                        patch.name, patch.plane
                    )));
                }
            }
            for other in &self.patches[n + 1..] {
                if other.plane != patch.plane {
                    continue;
                }
                let overlap = (0..2).all(|r| {
                    patch.rect[r][0].max(other.rect[r][0]) < patch.rect[r][1].min(other.rect[r][1])
                });
                if overlap {
                    return Err(Error::BadPatch(format!(
                        "patches '{}' and '{}' overlap on {}",
                        patch.name, other.name, patch.plane
                    )));
                }
            }
        }
        let any_dirichlet = (0..self.n_faces()).any(|f| {
            matches!(
                self.face_condition(FaceId(f)),
                FaceCondition::Boundary {
                    kind: BoundaryKind::Dirichlet { .. },
                    ..
                }
            )
        });
        if !any_dirichlet {
            return Err(Error::BadPatch(
                "no Dirichlet boundary face; the displacement boundary must be nonempty".into(),
            ));
        }
        Ok(())
    }

    pub fn grid(&self, axis: usize) -> &[f64] {
        &self.grids[axis]
    }

    pub fn grids(&self) -> &[Vec<f64>; 3] {
        &self.grids
    }

    pub fn patches(&self) -> &[BoundaryPatch] {
        &self.patches
    }

    pub fn patch_index(&self, name: &str) -> Option<usize> {
        self.patches.iter().position(|p| p.name == name)
    }

    pub fn bounds(&self) -> [[f64; 2]; 3] {
        std::array::from_fn(|a| [self.grids[a][0], *self.grids[a].last().unwrap()])
    }

    pub fn cells_per_axis(&self) -> [usize; 3] {
        std::array::from_fn(|a| self.grids[a].len() - 1)
    }

    pub fn n_elements(&self) -> usize {
        let n = self.cells_per_axis();
        n[0] * n[1] * n[2]
    }

    pub fn element_index(&self, ijk: [usize; 3]) -> ElementId {
        let n = self.cells_per_axis();
        ElementId(ijk[0] + n[0] * (ijk[1] + n[1] * ijk[2]))
    }

    pub fn element_ijk(&self, e: ElementId) -> [usize; 3] {
        let n = self.cells_per_axis();
        [e.0 % n[0], (e.0 / n[0]) % n[1], e.0 / (n[0] * n[1])]
    }

    pub fn cell(&self, e: ElementId) -> Cell {
        let ijk = self.element_ijk(e);
        Cell {
            lo: std::array::from_fn(|a| self.grids[a][ijk[a]]),
            hi: std::array::from_fn(|a| self.grids[a][ijk[a] + 1]),
        }
    }

    pub fn h_max(&self) -> f64 {
        // the largest cell uses the largest interval on every axis
        let d: [f64; 3] = std::array::from_fn(|a| {
            self.grids[a]
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(0.0, f64::max)
        });
        (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
    }

    pub fn volume(&self) -> f64 {
        let b = self.bounds();
        (b[0][1] - b[0][0]) * (b[1][1] - b[1][0]) * (b[2][1] - b[2][0])
    }

    fn faces_on_axis(&self, axis: usize) -> usize {
        let n = self.cells_per_axis();
        let [t1, t2] = tangential_axes(axis);
        (n[axis] + 1) * n[t1] * n[t2]
    }

    fn face_offset(&self, axis: usize) -> usize {
        (0..axis).map(|a| self.faces_on_axis(a)).sum()
    }

    pub fn n_faces(&self) -> usize {
        (0..3).map(|a| self.faces_on_axis(a)).sum()
    }

    pub fn n_interior_faces(&self) -> usize {
        let n = self.cells_per_axis();
        (0..3)
            .map(|a| {
                let [t1, t2] = tangential_axes(a);
                (n[a] - 1) * n[t1] * n[t2]
            })
            .sum()
    }

    /// Face normal to `axis` at grid line `plane_index` over tangential intervals.
    pub fn face_id(&self, axis: usize, plane_index: usize, intervals: [usize; 2]) -> FaceId {
        let n = self.cells_per_axis();
        let [t1, t2] = tangential_axes(axis);
        let local = plane_index + (n[axis] + 1) * (intervals[0] + n[t1] * intervals[1]);
        debug_assert!(intervals[1] < n[t2]);
        FaceId(self.face_offset(axis) + local)
    }

    pub fn face(&self, f: FaceId) -> Face {
        let n = self.cells_per_axis();
        let mut axis = 0;
        let mut local = f.0;
        while local >= self.faces_on_axis(axis) {
            local -= self.faces_on_axis(axis);
            axis += 1;
        }
        let [t1, _] = tangential_axes(axis);
        let np = n[axis] + 1;
        let plane_index = local % np;
        let rest = local / np;
        let intervals = [rest % n[t1], rest / n[t1]];
        let mut ijk = [0; 3];
        let [ta, tb] = tangential_axes(axis);
        ijk[ta] = intervals[0];
        ijk[tb] = intervals[1];
        let low = (plane_index > 0).then(|| {
            ijk[axis] = plane_index - 1;
            self.element_index(ijk)
        });
        let high = (plane_index < n[axis]).then(|| {
            ijk[axis] = plane_index;
            self.element_index(ijk)
        });
        Face {
            id: f,
            axis,
            plane_index,
            intervals,
            neighbors: [low, high],
        }
    }

    /// Faces of an element in local order x-low, x-high, y-low, y-high, z-low, z-high.
    pub fn element_faces(&self, e: ElementId) -> [FaceId; 6] {
        let ijk = self.element_ijk(e);
        std::array::from_fn(|lf| {
            let axis = lf / 2;
            let [t1, t2] = tangential_axes(axis);
            self.face_id(axis, ijk[axis] + lf % 2, [ijk[t1], ijk[t2]])
        })
    }

    /// Rectangle of a face in physical coordinates along its tangential axes.
    pub fn face_rect(&self, face: &Face) -> [[f64; 2]; 2] {
        let [t1, t2] = tangential_axes(face.axis);
        [
            [self.grids[t1][face.intervals[0]], self.grids[t1][face.intervals[0] + 1]],
            [self.grids[t2][face.intervals[1]], self.grids[t2][face.intervals[1] + 1]],
        ]
    }

    pub fn face_area(&self, face: &Face) -> f64 {
        let r = self.face_rect(face);
        (r[0][1] - r[0][0]) * (r[1][1] - r[1][0])
    }

    /// Boundary plane of a face, if it lies on the box boundary.
    pub fn face_plane(&self, face: &Face) -> Option<FacePlane> {
        let n = self.cells_per_axis();
        if face.plane_index == 0 {
            Some(FacePlane {
                axis: face.axis,
                side: Side::Low,
            })
        } else if face.plane_index == n[face.axis] {
            Some(FacePlane {
                axis: face.axis,
                side: Side::High,
            })
        } else {
            None
        }
    }

    /// Patch containing a boundary face (by its center), if any.
    pub fn face_patch(&self, face: &Face) -> Option<usize> {
        let plane = self.face_plane(face)?;
        let r = self.face_rect(face);
        let center = [0.5 * (r[0][0] + r[0][1]), 0.5 * (r[1][0] + r[1][1])];
        let tol = [
            1e-3 * (r[0][1] - r[0][0]),
            1e-3 * (r[1][1] - r[1][0]),
        ];
        self.patches
            .iter()
            .position(|p| p.plane == plane && p.contains_point(center[0], center[1], [-tol[0], -tol[1]]))
    }

    pub fn face_condition(&self, f: FaceId) -> FaceCondition {
        let face = self.face(f);
        match self.face_plane(&face) {
            None => FaceCondition::Interior,
            Some(plane) => {
                let patch = self.face_patch(&face);
                let kind = match patch {
                    Some(p) => self.patches[p].kind,
                    None => BoundaryKind::Traction {
                        value: [C64::new(0.0, 0.0); 3],
                    },
                };
                FaceCondition::Boundary { plane, patch, kind }
            }
        }
    }

    /// Boundary faces lying inside any of the named patches.
    pub fn patch_faces(&self, names: &[&str]) -> Vec<FaceId> {
        let wanted: Vec<usize> = names.iter().filter_map(|n| self.patch_index(n)).collect();
        (0..self.n_faces())
            .map(FaceId)
            .filter(|&f| {
                let face = self.face(f);
                self.face_patch(&face).is_some_and(|p| wanted.contains(&p))
            })
            .collect()
    }

    /// Bisects the listed intervals of one axis. The mesh stays a conforming
    /// tensor grid, so the new lines cut through the whole box.
    pub fn refine_axis_lines(&self, axis: usize, line_indices: &[usize]) -> TensorMesh {
        let g = &self.grids[axis];
        let mut marked = vec![false; g.len() - 1];
        for &i in line_indices {
            if i < marked.len() {
                marked[i] = true;
            }
        }
        let mut out = Vec::with_capacity(g.len() + line_indices.len());
        for i in 0..g.len() - 1 {
            out.push(g[i]);
            if marked[i] {
                out.push(0.5 * (g[i] + g[i + 1]));
            }
        }
        out.push(g[g.len() - 1]);
        let mut grids = self.grids.clone();
        grids[axis] = out;
        TensorMesh {
            grids,
            patches: self.patches.clone(),
        }
    }

    pub fn refine_uniform(&self) -> TensorMesh {
        let mut mesh = self.clone();
        for axis in 0..3 {
            let all: Vec<usize> = (0..mesh.grids[axis].len() - 1).collect();
            mesh = mesh.refine_axis_lines(axis, &all);
        }
        mesh
    }
}

/// Uniform grid over `bbox` with `cells` intervals per axis; patch rectangle
/// edges are snapped to the grid by inserting extra grid lines.
pub fn build_box_mesh(
    bbox: [[f64; 2]; 3],
    cells: [usize; 3],
    patches: Vec<BoundaryPatch>,
) -> Result<TensorMesh> {
    for a in 0..3 {
        if cells[a] == 0 {
            return Err(Error::BadMesh(format!("axis {a} needs at least one cell")));
        }
        if !(bbox[a][1] > bbox[a][0]) {
            return Err(Error::BadMesh(format!("axis {a} interval is empty")));
        }
    }
    let mut grids: [Vec<f64>; 3] = std::array::from_fn(|a| {
        let [lo, hi] = bbox[a];
        (0..=cells[a])
            .map(|i| {
                if i == cells[a] {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / cells[a] as f64
                }
            })
            .collect()
    });
    for patch in &patches {
        let [t1, t2] = patch.plane.tangential_axes();
        for (r, ax) in [t1, t2].into_iter().enumerate() {
            let [lo, hi] = bbox[ax];
            let tol = SNAP_TOL * (hi - lo);
            for &x in &patch.rect[r] {
                if x < lo - tol || x > hi + tol {
                    return Err(Error::BadPatch(format!(
                        "patch '{}' edge {x} lies off the {} boundary",
                        patch.name, patch.plane
                    )));
                }
                insert_line(&mut grids[ax], x, tol);
            }
        }
    }
    TensorMesh::from_grids(grids, patches)
}

fn insert_line(grid: &mut Vec<f64>, x: f64, tol: f64) {
    if grid.iter().any(|&g| (g - x).abs() <= tol) {
        return;
    }
    let pos = grid.partition_point(|&g| g < x);
    grid.insert(pos, x);
}
