//! Newton solve of τ = φ(x, f(τ)) on a grid of independent-variable points.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Grid, HodographSurface, SolveError};
use crate::geometry::PotentialEval;
use crate::par::Exec;

/// Below this |det| a point that fails to converge is taken to sit at the
/// fold of the implicit system rather than to be a plain Newton failure.
pub const FOLD_DET: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialGuess {
    /// τ⁰ = φ(x, u₀) with u₀ the surface's base point.
    BasePoint,
    /// τ⁰ = φ(x, u) for the given dependent values.
    FromU(Vec<f64>),
    Tau(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImplicitSolveConfig {
    /// Bound on max|τ − φ(x, f(τ))|, relative to max(1, |τ|).
    pub tolerance: f64,
    pub max_iterations: usize,
    pub initial: InitialGuess,
    pub catastrophe_threshold: f64,
    /// Retry a failed cold start from the previous converged point of the row.
    pub warm_start: bool,
    pub exec: Exec,
}

impl Default for ImplicitSolveConfig {
    fn default() -> Self {
        ImplicitSolveConfig {
            tolerance: 1e-12,
            max_iterations: 60,
            initial: InitialGuess::BasePoint,
            catastrophe_threshold: 1e-8,
            warm_start: true,
            exec: Exec::default(),
        }
    }
}

impl ImplicitSolveConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.tolerance > 0.0) || !(self.catastrophe_threshold > 0.0) {
            return Err(SolveError::Config("tolerance and catastrophe threshold must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Converged,
    /// |det(Id − ∂φ/∂u ∂f/∂τ)| fell below the threshold, or Newton stalled
    /// on the fold where the determinant vanishes.
    Catastrophe,
    Diverged,
}

impl PointStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PointStatus::Converged => "converged",
            PointStatus::Catastrophe => "catastrophe",
            PointStatus::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionPoint {
    pub x: Vec<f64>,
    /// Final iterate; the solution when `converged`.
    pub tau: Vec<f64>,
    pub u: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// max|τ − φ(x, f(τ))| at the final iterate.
    pub newton_residual: f64,
    pub det: f64,
    pub status: PointStatus,
    /// Filled in by the verifier.
    pub pde_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionField {
    pub independent: Vec<String>,
    pub params: Vec<String>,
    pub dependent: Vec<String>,
    /// Axis lengths of a tensor grid, empty for scattered points.
    pub shape: Vec<usize>,
    pub tolerance: f64,
    pub catastrophe_threshold: f64,
    pub points: Vec<SolutionPoint>,
}

impl SolutionField {
    pub fn count(&self, status: PointStatus) -> usize {
        self.points.iter().filter(|p| p.status == status).count()
    }

    pub fn converged(&self) -> impl Iterator<Item = (usize, &SolutionPoint)> {
        self.points.iter().enumerate().filter(|(_, p)| p.converged)
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut h: Vec<String> = self.independent.clone();
        h.extend(self.params.iter().cloned());
        h.extend(self.dependent.iter().cloned());
        h.extend(["newton_residual", "pde_residual", "det", "iterations", "status"].map(String::from));
        h
    }

    /// One row per point; numbers use the shortest round-trip form.
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.csv_header())?;
        for p in &self.points {
            let mut row: Vec<String> = p.x.iter().chain(&p.tau).chain(&p.u).map(|v| v.to_string()).collect();
            row.push(p.newton_residual.to_string());
            row.push(p.pde_residual.map(|r| r.to_string()).unwrap_or_default());
            row.push(p.det.to_string());
            row.push(p.iterations.to_string());
            row.push(p.status.as_str().to_string());
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

/// A surface, its potentials and a configuration, solvable point by point.
#[derive(Debug, Clone)]
pub struct ImplicitSolver {
    pub surface: Arc<HodographSurface>,
    pub potentials: Arc<Vec<PotentialEval>>,
    pub independent: Vec<String>,
    pub cfg: ImplicitSolveConfig,
}

struct Iterate {
    tau: Vec<f64>,
    u: Vec<f64>,
    g: DVector<f64>,
    j: DMatrix<f64>,
}

impl ImplicitSolver {
    pub fn new(
        surface: HodographSurface,
        potentials: Vec<PotentialEval>,
        independent: Vec<String>,
        cfg: ImplicitSolveConfig,
    ) -> Result<ImplicitSolver, SolveError> {
        cfg.validate()?;
        if potentials.len() != surface.k() {
            return Err(SolveError::Shape(format!(
                "{} potentials for a surface with {} parameters",
                potentials.len(),
                surface.k()
            )));
        }
        Ok(ImplicitSolver { surface: Arc::new(surface), potentials: Arc::new(potentials), independent, cfg })
    }

    fn iterate(&self, x: &[f64], tau: &[f64]) -> Result<Iterate, SolveError> {
        let k = tau.len();
        let (u, fj) = self.surface.eval_with_jacobian(tau)?;
        let mut g = DVector::zeros(k);
        let mut phiu = DMatrix::zeros(k, u.len());
        for (a, phi) in self.potentials.iter().enumerate() {
            g[a] = tau[a] - phi.value(x, &u)?;
            for (b, d) in phi.grad_u(x, &u)?.into_iter().enumerate() {
                phiu[(a, b)] = d;
            }
        }
        let j = DMatrix::identity(k, k) - phiu * fj;
        if g.iter().chain(j.iter()).any(|v| !v.is_finite()) {
            return Err(SolveError::OutsideSurface { tau: tau.to_vec() });
        }
        Ok(Iterate { tau: tau.to_vec(), u, g, j })
    }

    /// Starting τ for a cold solve at x.
    pub fn initial_tau(&self, x: &[f64]) -> Result<Vec<f64>, SolveError> {
        let u0 = match &self.cfg.initial {
            InitialGuess::Tau(t) => return Ok(t.clone()),
            InitialGuess::BasePoint => self.surface.base_u.clone(),
            InitialGuess::FromU(u) => u.clone(),
        };
        Ok(self.potentials.iter().map(|phi| phi.value(x, &u0)).collect::<Result<_, _>>()?)
    }

    fn converged(&self, it: &Iterate) -> bool {
        let scale = it.tau.iter().fold(1.0f64, |m, t| m.max(t.abs()));
        it.g.amax() <= self.cfg.tolerance * scale
    }

    /// Damped Newton from τ⁰; backtracks on ‖G‖₂ and stops when no step
    /// decreases it.
    pub fn newton(&self, x: &[f64], tau0: &[f64]) -> SolutionPoint {
        let k = tau0.len();
        let failed = |tau: Vec<f64>| SolutionPoint {
            x: x.to_vec(),
            tau,
            u: vec![f64::NAN; self.surface.q()],
            iterations: 0,
            converged: false,
            newton_residual: f64::INFINITY,
            det: f64::NAN,
            status: PointStatus::Diverged,
            pde_residual: None,
        };
        let Ok(mut it) = self.iterate(x, tau0) else { return failed(tau0.to_vec()) };
        let mut iterations = 0;
        let mut converged = self.converged(&it);
        while !converged && iterations < self.cfg.max_iterations {
            let Some(d) = it.j.clone().lu().solve(&it.g) else { break };
            let norm = it.g.norm();
            let mut lambda = 1.0;
            let mut next = None;
            while lambda >= 1e-10 {
                let cand: Vec<f64> = (0..k).map(|a| it.tau[a] - lambda * d[a]).collect();
                if let Ok(c) = self.iterate(x, &cand) {
                    if c.g.norm() <= (1.0 - 1e-4 * lambda) * norm || self.converged(&c) {
                        next = Some(c);
                        break;
                    }
                }
                lambda *= 0.5;
            }
            let Some(n) = next else { break };
            it = n;
            iterations += 1;
            converged = self.converged(&it);
        }
        let det = it.j.determinant();
        let status = if converged {
            if det.abs() < self.cfg.catastrophe_threshold {
                PointStatus::Catastrophe
            } else {
                PointStatus::Converged
            }
        } else if det.abs() < FOLD_DET {
            PointStatus::Catastrophe
        } else {
            PointStatus::Diverged
        };
        SolutionPoint {
            x: x.to_vec(),
            newton_residual: it.g.amax(),
            tau: it.tau,
            u: it.u,
            iterations,
            converged,
            det,
            status,
            pde_residual: None,
        }
    }

    /// Solves at x, trying `hint` first when given, then the cold start.
    pub fn solve_point(&self, x: &[f64], hint: Option<&[f64]>) -> SolutionPoint {
        let mut first = None;
        if let Some(h) = hint {
            let p = self.newton(x, h);
            if p.converged {
                return p;
            }
            first = Some(p);
        }
        let cold = match self.initial_tau(x) {
            Ok(t) => self.newton(x, &t),
            Err(_) => return first.unwrap_or_else(|| self.newton(x, &self.surface.base_tau)),
        };
        match first {
            Some(f) if !cold.converged && f.newton_residual < cold.newton_residual => f,
            _ => cold,
        }
    }

    /// Residual and determinant at a given τ, without iterating.
    pub fn evaluate(&self, x: &[f64], tau: &[f64]) -> Result<SolutionPoint, SolveError> {
        let it = self.iterate(x, tau)?;
        let det = it.j.determinant();
        let converged = self.converged(&it);
        let status = match (converged, det.abs() < self.cfg.catastrophe_threshold) {
            (true, false) => PointStatus::Converged,
            (_, true) => PointStatus::Catastrophe,
            (false, false) => PointStatus::Diverged,
        };
        Ok(SolutionPoint {
            x: x.to_vec(),
            newton_residual: it.g.amax(),
            tau: it.tau,
            u: it.u,
            iterations: 0,
            converged,
            det,
            status,
            pde_residual: None,
        })
    }

    fn solve_row(&self, row: &[Vec<f64>]) -> Vec<SolutionPoint> {
        let mut out: Vec<SolutionPoint> = Vec::with_capacity(row.len());
        for x in row {
            let mut p = self.solve_point(x, None);
            if !p.converged && self.cfg.warm_start {
                if let Some(prev) = out.iter().rev().find(|q| q.converged) {
                    let warm = self.newton(x, &prev.tau);
                    if warm.converged {
                        p = warm;
                    }
                }
            }
            out.push(p);
        }
        out
    }

    pub fn solve(&self, grid: &Grid) -> Result<SolutionField, SolveError> {
        if grid.is_empty() {
            return Err(SolveError::Grid(super::GridError::Empty));
        }
        if grid.names != self.independent {
            return Err(SolveError::Shape(format!(
                "grid variables {:?} differ from the independent variables {:?}",
                grid.names, self.independent
            )));
        }
        let rows: Vec<&[Vec<f64>]> = grid.points.chunks(grid.row_len()).collect();
        let points: Vec<SolutionPoint> = self.cfg.exec.map(&rows, |r| self.solve_row(r)).into_iter().flatten().collect();
        if !points.iter().any(|p| p.converged) {
            return Err(SolveError::AllDiverged { points: points.len() });
        }
        Ok(SolutionField {
            independent: self.independent.clone(),
            params: self.surface.params.clone(),
            dependent: self.surface.dependent.clone(),
            shape: grid.shape.clone(),
            tolerance: self.cfg.tolerance,
            catastrophe_threshold: self.cfg.catastrophe_threshold,
            points,
        })
    }
}

/// Solves τ = φ(x, f(τ)) at every grid point.
pub fn solve_implicit(
    surface: &HodographSurface,
    potentials: &[PotentialEval],
    independent: &[String],
    grid: &Grid,
    cfg: &ImplicitSolveConfig,
) -> Result<SolutionField, SolveError> {
    ImplicitSolver::new(surface.clone(), potentials.to_vec(), independent.to_vec(), cfg.clone())?.solve(grid)
}
