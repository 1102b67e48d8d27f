//! Solve, estimate, mark, refine. Element marks are turned into bisections
//! of whole grid intervals so that the mesh stays a conforming tensor grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fespace::trial::TrialDofMap;
use crate::mesh::{ElementId, TensorMesh};
use crate::problem::{solve, DpgSolution, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptConfig {
    /// Dörfler fraction in `(0, 1]`.
    pub theta: f64,
    pub max_steps: usize,
    /// Largest system that may be solved. A refinement that would exceed it
    /// ends the loop instead.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dof_budget: Option<usize>,
    /// Stop once the global residual falls below this fraction of the first one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_drop: Option<f64>,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self {
            theta: 0.5,
            max_steps: 6,
            dof_budget: None,
            target_drop: None,
        }
    }
}

impl AdaptConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Config(format!("adapt.theta must lie in (0, 1], got {}", self.theta)));
        }
        if let Some(t) = self.target_drop {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Config(format!("adapt.target_drop must lie in (0, 1), got {t}")));
            }
        }
        Ok(())
    }
}

/// Greedy Dörfler marking: the fewest elements, largest residual first and
/// ties by ascending index, whose squared residuals reach `theta^2` of the
/// total. Returned in ascending index order.
pub fn mark(residuals: &[f64], theta: f64) -> Vec<ElementId> {
    let total: f64 = residuals.iter().map(|r| r * r).sum();
    if total == 0.0 {
        return Vec::new();
    }
    let mut out: Vec<usize> = if theta >= 1.0 {
        (0..residuals.len()).filter(|&e| residuals[e] > 0.0).collect()
    } else {
        let mut order: Vec<usize> = (0..residuals.len()).collect();
        order.sort_by(|&a, &b| residuals[b].total_cmp(&residuals[a]).then(a.cmp(&b)));
        let goal = theta * theta * total;
        let mut acc = 0.0;
        let mut picked = Vec::new();
        for e in order {
            if acc >= goal {
                break;
            }
            acc += residuals[e] * residuals[e];
            picked.push(e);
        }
        picked
    };
    out.sort_unstable();
    out.into_iter().map(ElementId).collect()
}

/// Grid intervals to bisect on each axis. An interval is refined when the
/// marked elements it contains carry more than the uniform share `1/n` of the
/// marked squared residual. A marked element left untouched by that rule
/// gets its longest interval refined.
pub fn lines_from_marks(mesh: &TensorMesh, residuals: &[f64], marked: &[ElementId]) -> [Vec<usize>; 3] {
    let n = mesh.cells_per_axis();
    let mut share: [Vec<f64>; 3] = n.map(|k| vec![0.0; k]);
    let mut refine: [Vec<bool>; 3] = n.map(|k| vec![false; k]);
    let total: f64 = marked.iter().map(|e| residuals[e.0] * residuals[e.0]).sum();
    for &e in marked {
        let ijk = mesh.element_ijk(e);
        for a in 0..3 {
            share[a][ijk[a]] += residuals[e.0] * residuals[e.0];
        }
    }
    if total > 0.0 {
        for a in 0..3 {
            let uniform = 1.0 / n[a] as f64;
            for (i, s) in share[a].iter().enumerate() {
                if s / total > uniform * (1.0 + 1e-9) {
                    refine[a][i] = true;
                }
            }
        }
    }
    // a marked element none of whose intervals qualified still gets its longest one
    for &e in marked {
        let ijk = mesh.element_ijk(e);
        if (0..3).any(|a| refine[a][ijk[a]]) {
            continue;
        }
        let h = mesh.cell(e).size();
        let longest = (0..3).fold(0, |best, a| if h[a] > h[best] * (1.0 + 1e-12) { a } else { best });
        refine[longest][ijk[longest]] = true;
    }
    refine.map(|r| r.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect())
}

/// Applies per-axis interval bisections.
pub fn refine_lines(mesh: &TensorMesh, lines: &[Vec<usize>; 3]) -> TensorMesh {
    let mut out = mesh.clone();
    for (axis, idx) in lines.iter().enumerate() {
        if !idx.is_empty() {
            out = out.refine_axis_lines(axis, idx);
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct AdaptStep {
    pub step: usize,
    pub solution: DpgSolution,
    /// Marks and refinements applied after this solve (empty on the last step).
    pub marked: Vec<ElementId>,
    pub refined: [Vec<usize>; 3],
}

/// Runs up to `max_steps` refinements; the history always holds the first solve.
pub fn adapt_loop(problem: &Problem, cfg: &AdaptConfig) -> Result<Vec<AdaptStep>> {
    adapt_loop_with(problem, cfg, |_| {})
}

/// As [`adapt_loop`], calling `observe` after every solve.
pub fn adapt_loop_with(
    problem: &Problem,
    cfg: &AdaptConfig,
    mut observe: impl FnMut(&AdaptStep),
) -> Result<Vec<AdaptStep>> {
    cfg.validate()?;
    let mut history: Vec<AdaptStep> = Vec::new();
    let mut current = problem.clone();
    let mut first_residual = None;
    for step in 0..=cfg.max_steps {
        let solution = solve(&current)?;
        let r0 = *first_residual.get_or_insert(solution.global_residual);
        let last = step == cfg.max_steps || cfg.target_drop.is_some_and(|t| solution.global_residual <= t * r0);
        let mut entry = AdaptStep {
            step,
            solution,
            marked: Vec::new(),
            refined: [Vec::new(), Vec::new(), Vec::new()],
        };
        let mut next = None;
        if !last {
            let sol = &entry.solution;
            let marked = mark(&sol.residuals, cfg.theta);
            let refined = lines_from_marks(&sol.mesh, &sol.residuals, &marked);
            entry.marked = marked;
            if refined.iter().any(|r| !r.is_empty()) {
                let candidate = current.with_mesh(refine_lines(&sol.mesh, &refined));
                let within = cfg.dof_budget.is_none_or(|b| TrialDofMap::build(&candidate.mesh, candidate.p).n_free() <= b);
                if within {
                    entry.refined = refined;
                    next = Some(candidate);
                }
            }
        }
        observe(&entry);
        history.push(entry);
        match next {
            Some(p) => current = p,
            None => break,
        }
    }
    Ok(history)
}
