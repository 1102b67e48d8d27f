//! A boundary value problem on a tensor mesh, its DPG solve and the
//! post-processing of the discrete solution.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::dpg::{element_load, ElementKernel, KernelBuilder};
use crate::error::{Error, Result};
use crate::fespace::quadrature::{CellRule, GaussRule};
use crate::fespace::shape1d::{face_legendre, ShapeSet1D};
use crate::fespace::{build_test_space, eval_basis, TrialDofMap};
use crate::material::IsotropicMaterial;
use crate::mesh::{ElementId, FaceId, TensorMesh};
use crate::solver::{assemble, solve_hpd, LocalSystem, SolveReport, SolverOptions, SparseHermitian};

pub type VectorField = Arc<dyn Fn([f64; 3]) -> [C64; 3] + Send + Sync>;
pub type GradientField = Arc<dyn Fn([f64; 3]) -> [[C64; 3]; 3] + Send + Sync>;

#[derive(Clone)]
pub struct Problem {
    pub mesh: TensorMesh,
    pub material: IsotropicMaterial,
    pub p: usize,
    pub dp: usize,
    pub quad_increment: usize,
    pub body_force: Option<VectorField>,
    /// Overrides the constant patch values on every Dirichlet face.
    pub dirichlet: Option<VectorField>,
    pub solver: SolverOptions,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("cells", &self.mesh.cells_per_axis())
            .field("material", &self.material)
            .field("p", &self.p)
            .field("dp", &self.dp)
            .field("body_force", &self.body_force.is_some())
            .field("dirichlet", &self.dirichlet.is_some())
            .finish()
    }
}

impl Problem {
    pub fn new(mesh: TensorMesh, material: IsotropicMaterial, p: usize) -> Self {
        Self {
            mesh,
            material,
            p,
            dp: 1,
            quad_increment: 0,
            body_force: None,
            dirichlet: None,
            solver: SolverOptions::default(),
        }
    }

    pub fn with_mesh(&self, mesh: TensorMesh) -> Self {
        Self { mesh, ..self.clone() }
    }

    pub fn trial_map(&self) -> TrialDofMap {
        match &self.dirichlet {
            Some(g) => TrialDofMap::build_with_dirichlet(&self.mesh, self.p, g.as_ref()),
            None => TrialDofMap::build(&self.mesh, self.p),
        }
    }

    pub fn load_rule(&self) -> CellRule {
        CellRule::for_degree(2 * (self.p + self.dp) + 1 + self.quad_increment)
    }
}

#[derive(Debug, Clone)]
pub struct DpgSolution {
    pub mesh: TensorMesh,
    pub map: TrialDofMap,
    /// Every trial dof, pinned ones included.
    pub coefficients: Vec<C64>,
    pub residuals: Vec<f64>,
    pub global_residual: f64,
    pub report: SolveReport,
}

fn size_key(h: [f64; 3]) -> [u64; 3] {
    h.map(f64::to_bits)
}

struct ElementData {
    ids: Vec<usize>,
    gram_load: DVector<C64>,
    rhs: DVector<C64>,
}

/// The condensed global system of a problem, before the solve.
pub struct GlobalSystem {
    pub map: TrialDofMap,
    /// Hermitian positive definite matrix over the free dofs.
    pub matrix: SparseHermitian,
    pub rhs: Vec<C64>,
    kernels: Vec<ElementKernel>,
    kernel_of: Vec<usize>,
    elements: Vec<ElementData>,
}

/// Builds the element kernels (one per distinct cell size) and assembles
/// the condensed system.
pub fn assemble_system(problem: &Problem) -> Result<GlobalSystem> {
    let mesh = &problem.mesh;
    let test = build_test_space(problem.p, problem.dp);
    let builder = KernelBuilder::new(test);
    let map = problem.trial_map();
    let n_el = mesh.n_elements();

    let mut key_index: HashMap<[u64; 3], usize> = HashMap::new();
    let mut first_use: Vec<usize> = Vec::new();
    let kernel_of: Vec<usize> = (0..n_el)
        .map(|e| {
            let key = size_key(mesh.cell(ElementId(e)).size());
            *key_index.entry(key).or_insert_with(|| {
                first_use.push(e);
                first_use.len() - 1
            })
        })
        .collect();
    let kernels: Vec<ElementKernel> = first_use
        .par_iter()
        .map(|&e| {
            builder
                .build(&mesh.cell(ElementId(e)), &problem.material)
                .map_err(|_| Error::GramNotSpd { element: e })
        })
        .collect::<Result<_>>()?;

    let rule = problem.load_rule();
    let elements: Vec<ElementData> = (0..n_el)
        .into_par_iter()
        .map(|e| {
            let kernel = &kernels[kernel_of[e]];
            let ids = map.element_dofs(mesh, ElementId(e)).ids;
            let pinned = DVector::from_iterator(
                ids.len(),
                ids.iter().map(|&g| map.pinned_value(g).unwrap_or_default()),
            );
            let gram_load = match &problem.body_force {
                Some(f) => {
                    let l = element_load(&mesh.cell(ElementId(e)), f.as_ref(), &test, &rule);
                    kernel.gram.solve_lower_vec(&l)
                }
                None => DVector::zeros(kernel.gram.dim()),
            };
            let w = &kernel.condensed.w;
            let rhs = w.ad_mul(&(&gram_load - w * &pinned));
            ElementData { ids, gram_load, rhs }
        })
        .collect();

    let locals: Vec<LocalSystem<'_>> = elements
        .iter()
        .enumerate()
        .map(|(e, d)| LocalSystem {
            dofs: d.ids.iter().map(|&g| map.free_index(g)).collect(),
            matrix: &kernels[kernel_of[e]].condensed.stiffness,
            rhs: d.rhs.clone(),
        })
        .collect();
    let (matrix, rhs) = assemble(map.n_free(), &locals);
    drop(locals);
    Ok(GlobalSystem {
        map,
        matrix,
        rhs,
        kernels,
        kernel_of,
        elements,
    })
}

impl GlobalSystem {
    /// Solves and evaluates the element residuals.
    pub fn solve(self, mesh: &TensorMesh, opts: &SolverOptions) -> Result<DpgSolution> {
        let (x, report) = solve_hpd(&self.matrix, &self.rhs, &self.map.preconditioner_blocks(), opts)?;
        let coefficients = self.map.expand(&x);
        let residuals: Vec<f64> = self
            .elements
            .par_iter()
            .enumerate()
            .map(|(e, d)| {
                let u = DVector::from_iterator(d.ids.len(), d.ids.iter().map(|&g| coefficients[g]));
                self.kernels[self.kernel_of[e]].residual(&d.gram_load, &u)
            })
            .collect();
        let global_residual = residuals.iter().map(|r| r * r).sum::<f64>().sqrt();
        Ok(DpgSolution {
            mesh: mesh.clone(),
            map: self.map,
            coefficients,
            residuals,
            global_residual,
            report,
        })
    }
}

/// Assembles and solves the condensed system, then evaluates the element
/// residuals.
pub fn solve(problem: &Problem) -> Result<DpgSolution> {
    assemble_system(problem)?.solve(&problem.mesh, &problem.solver)
}

impl DpgSolution {
    pub fn order(&self) -> usize {
        self.map.order()
    }

    pub fn n_free(&self) -> usize {
        self.map.n_free()
    }

    /// Local displacement coefficients of an element, `comp * (p+1)^3 + s`.
    pub fn element_displacement(&self, e: ElementId) -> Vec<C64> {
        let (nd, _) = TrialDofMap::local_dims(self.order());
        self.map.element_dofs(&self.mesh, e).ids[..nd]
            .iter()
            .map(|&g| self.coefficients[g])
            .collect()
    }

    /// Displacement at a mesh vertex given by grid indices.
    pub fn vertex_displacement(&self, ijk: [usize; 3]) -> [C64; 3] {
        let p = self.order();
        let node = self.map.node_index(ijk.map(|i| i * p));
        [0, 1, 2].map(|c| self.coefficients[self.map.displacement_dof(node, c)])
    }

    /// Traction coefficient of a face in the face's global normal convention.
    pub fn traction_mode(&self, face: FaceId, comp: usize, mode: usize) -> C64 {
        self.coefficients[self.map.traction_dof(face, comp, mode)]
    }

    /// Largest |traction component| over a Gauss grid on the face.
    pub fn face_traction_max(&self, face: FaceId, comp: usize) -> f64 {
        let p = self.order();
        let rule = GaussRule::new(p + 1);
        let tab: Vec<Vec<f64>> = rule.points.iter().map(|&s| face_legendre(p, s)).collect();
        let mut worst: f64 = 0.0;
        for lx in &tab {
            for ly in &tab {
                let mut v = C64::new(0.0, 0.0);
                for m2 in 0..p {
                    for m1 in 0..p {
                        v += self.traction_mode(face, comp, m1 + p * m2) * (lx[m1] * ly[m2]);
                    }
                }
                worst = worst.max(v.norm());
            }
        }
        worst
    }

    /// Net force transmitted through the named boundary patches: the
    /// integral of the outward traction component `comp` over their faces.
    pub fn patch_force(&self, patches: &[&str], comp: usize) -> Result<C64> {
        let faces = self.mesh.patch_faces(patches);
        if faces.is_empty() {
            return Err(Error::EmptyPatch(patches.iter().map(|s| s.to_string()).collect()));
        }
        let mut total = C64::new(0.0, 0.0);
        for f in faces {
            let face = self.mesh.face(f);
            let sign = self
                .mesh
                .face_plane(&face)
                .expect("patch faces lie on the boundary")
                .outward_sign();
            total += self.traction_mode(f, comp, 0) * (sign * self.mesh.face_area(&face));
        }
        Ok(total)
    }

    /// Absolute and exact-solution H1 norms: `(|u - u_h|, |u|)`.
    pub fn h1_error(
        &self,
        exact: &(dyn Fn([f64; 3]) -> [C64; 3] + Sync),
        exact_grad: &(dyn Fn([f64; 3]) -> [[C64; 3]; 3] + Sync),
        degree: usize,
    ) -> (f64, f64) {
        let shapes = ShapeSet1D::new(self.order());
        let rule = CellRule::for_degree(degree);
        let parts: Vec<(f64, f64)> = (0..self.mesh.n_elements())
            .into_par_iter()
            .map(|e| {
                let id = ElementId(e);
                let tab = eval_basis(&shapes, &self.mesh.cell(id), &rule);
                let coef = self.element_displacement(id);
                let ns = tab.n_basis;
                let mut err = 0.0;
                let mut norm = 0.0;
                for q in 0..tab.points.len() {
                    let x = tab.points[q];
                    let u = exact(x);
                    let g = exact_grad(x);
                    let w = tab.weights[q];
                    for c in 0..3 {
                        let mut uh = C64::new(0.0, 0.0);
                        let mut gh = [C64::new(0.0, 0.0); 3];
                        for s in 0..ns {
                            let a = coef[c * ns + s];
                            uh += a * tab.values[q][s];
                            for k in 0..3 {
                                gh[k] += a * tab.grads[q][s][k];
                            }
                        }
                        err += w * (u[c] - uh).norm_sqr();
                        norm += w * u[c].norm_sqr();
                        for k in 0..3 {
                            err += w * (g[c][k] - gh[k]).norm_sqr();
                            norm += w * g[c][k].norm_sqr();
                        }
                    }
                }
                (err, norm)
            })
            .collect();
        let (err, norm) = parts
            .iter()
            .fold((0.0, 0.0), |(a, b), (e, n)| (a + e, b + n));
        (err.sqrt(), norm.sqrt())
    }
}
