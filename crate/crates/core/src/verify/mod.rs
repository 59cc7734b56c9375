//! Independent numeric checks of solution fields: finite-difference
//! Jacobians, PDE residuals, recovery of T_xu = Σ ξ^σ γ_(σ)⊗λ^(σ) and
//! constancy of u along the common kernel of the λ's.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::expr::{compile_all, Compiled, EvalError, Point, Witness};
use crate::geometry::{Verdict, WaveElement};
use crate::linalg;
use crate::par::Exec;
use crate::solver::{ImplicitSolver, PointStatus, SolutionField};
use crate::system::{Jet, QuasilinearSystem, SystemError};

/// Default finite-difference step.
pub const FD_STEP: f64 = 1e-5;
/// Residual bound relative to 1 + the largest coefficient magnitude.
pub const RESIDUAL_TOL: f64 = 1e-6;
/// Reconstruction-error bound relative to 1 + ‖T_xu‖.
pub const DECOMPOSITION_TOL: f64 = 1e-6;
/// Bound on directional derivatives along the kernel of the λ's.
pub const KERNEL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("the solve diverged at the displaced point {point:?}")]
    NeighborDiverged { point: Vec<f64> },
    #[error("the γ⊗λ dyads are dependent at {point:?} (rank {rank} of {k})")]
    DegenerateElements { point: Vec<f64>, rank: usize, k: usize },
    #[error("shape error: {0}")]
    Shape(String),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Something that yields u at arbitrary x, for re-solving at displaced
/// points.
pub trait Resolve: Sync {
    /// u(x), or `None` where the solve fails. `hint` is the solver's own
    /// state at a nearby point (τ for the implicit solver).
    fn resolve(&self, x: &[f64], hint: Option<&[f64]>) -> Option<Vec<f64>>;
}

impl Resolve for ImplicitSolver {
    fn resolve(&self, x: &[f64], hint: Option<&[f64]>) -> Option<Vec<f64>> {
        let p = self.solve_point(x, hint);
        p.converged.then_some(p.u)
    }
}

/// A field given in closed form.
pub struct ClosedForm<F>(pub F);

impl<F: Fn(&[f64]) -> Vec<f64> + Sync> Resolve for ClosedForm<F> {
    fn resolve(&self, x: &[f64], _: Option<&[f64]>) -> Option<Vec<f64>> {
        let u = (self.0)(x);
        u.iter().all(|v| v.is_finite()).then_some(u)
    }
}

fn displaced(r: &dyn Resolve, x: &[f64], hint: Option<&[f64]>, dir: &[f64], h: f64) -> Result<Vec<f64>, VerifyError> {
    let xp: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a + h * d).collect();
    r.resolve(&xp, hint).ok_or(VerifyError::NeighborDiverged { point: xp })
}

/// (u(x + hθ) − u(x − hθ)) / 2h.
pub fn directional_derivative(
    r: &dyn Resolve,
    x: &[f64],
    hint: Option<&[f64]>,
    theta: &[f64],
    h: f64,
) -> Result<Vec<f64>, VerifyError> {
    let up = displaced(r, x, hint, theta, h)?;
    let um = displaced(r, x, hint, theta, -h)?;
    Ok(up.iter().zip(&um).map(|(a, b)| (a - b) / (2.0 * h)).collect())
}

/// Central-difference Jacobian ∂u^β/∂x^i (q×p) by re-solving at x ± h eᵢ.
/// With `richardson` the h and h/2 differences are combined to O(h⁴).
pub fn fd_jacobian(
    r: &dyn Resolve,
    x: &[f64],
    hint: Option<&[f64]>,
    h: f64,
    richardson: bool,
) -> Result<DMatrix<f64>, VerifyError> {
    let p = x.len();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(p);
    for i in 0..p {
        let mut e = vec![0.0; p];
        e[i] = 1.0;
        let d = directional_derivative(r, x, hint, &e, h)?;
        let d = if richardson {
            let d2 = directional_derivative(r, x, hint, &e, h / 2.0)?;
            d2.iter().zip(&d).map(|(a, b)| (4.0 * a - b) / 3.0).collect()
        } else {
            d
        };
        cols.push(d);
    }
    let q = cols.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(q, p, |b, i| cols[i][b]))
}

/// Jacobian at the `idx`-th point of a field, warm-started from its τ.
pub fn fd_jacobian_at(r: &dyn Resolve, field: &SolutionField, idx: usize, h: f64) -> Result<DMatrix<f64>, VerifyError> {
    let pt = field.points.get(idx).ok_or_else(|| VerifyError::Shape(format!("no point {idx}")))?;
    fd_jacobian(r, &pt.x, Some(&pt.tau), h, true)
}

/// FD Jacobians at every converged, non-catastrophic point of a field.
pub fn field_jacobians(
    r: &dyn Resolve,
    field: &SolutionField,
    h: f64,
    exec: Exec,
) -> Vec<Option<Result<DMatrix<f64>, VerifyError>>> {
    exec.map(&field.points, |pt| {
        (pt.converged && pt.status == PointStatus::Converged).then(|| fd_jacobian(r, &pt.x, Some(&pt.tau), h, true))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    /// ‖Σ Aⁱ ∂ᵢu − b‖₂ per point; `None` where nothing was checked.
    pub per_point: Vec<Option<f64>>,
    pub max: f64,
    pub mean: f64,
    pub fd_step: f64,
    pub tolerance: f64,
    pub checked: usize,
    /// Indices whose residual exceeds the bound or whose neighbours diverged.
    pub failures: Vec<usize>,
}

impl ResidualReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checked > 0
    }
}

/// PDE residuals of a field from precomputed Jacobians.
pub fn residual_report(
    sys: &QuasilinearSystem,
    field: &SolutionField,
    jacobians: &[Option<Result<DMatrix<f64>, VerifyError>>],
    h: f64,
) -> Result<ResidualReport, VerifyError> {
    let ev = sys.evaluator()?;
    let mut per_point = Vec::with_capacity(field.points.len());
    let mut failures = Vec::new();
    let (mut max, mut sum, mut checked) = (0.0f64, 0.0, 0);
    for (i, (pt, jac)) in field.points.iter().zip(jacobians).enumerate() {
        match jac {
            None => per_point.push(None),
            Some(Err(_)) => {
                per_point.push(None);
                failures.push(i);
            }
            Some(Ok(du)) => {
                let jet = Jet { x: pt.x.clone(), u: pt.u.clone(), du: du.clone() };
                let r = ev.residual(&jet)?.norm();
                let bound = RESIDUAL_TOL * (1.0 + ev.coefficient_scale(&pt.x, &pt.u)?);
                if !(r < bound) {
                    failures.push(i);
                }
                max = max.max(r);
                sum += r;
                checked += 1;
                per_point.push(Some(r));
            }
        }
    }
    Ok(ResidualReport {
        per_point,
        max,
        mean: if checked > 0 { sum / checked as f64 } else { 0.0 },
        fd_step: h,
        tolerance: RESIDUAL_TOL,
        checked,
        failures,
    })
}

/// Writes the residuals into the field's `pde_residual` column.
pub fn annotate(field: &mut SolutionField, report: &ResidualReport) {
    for (p, r) in field.points.iter_mut().zip(&report.per_point) {
        p.pde_residual = *r;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionRecovery {
    pub xi: Vec<f64>,
    /// ‖T_xu − Σ ξ^σ γ⊗λ‖_F.
    pub error: f64,
    pub rank: usize,
    pub accepted: bool,
}

/// Least-squares ξ with T_xu ≈ Σ ξ^σ γ_(σ) λ^(σ)ᵀ at one point.
pub fn recover_numeric(
    jac: &DMatrix<f64>,
    gammas: &[DVector<f64>],
    lambdas: &[DVector<f64>],
) -> Result<DecompositionRecovery, VerifyError> {
    let (q, p) = jac.shape();
    let k = gammas.len();
    if lambdas.len() != k || gammas.iter().any(|g| g.len() != q) || lambdas.iter().any(|l| l.len() != p) {
        return Err(VerifyError::Shape("elements do not match the Jacobian".into()));
    }
    let rank = linalg::rank(jac);
    if k == 0 {
        return Ok(DecompositionRecovery { xi: Vec::new(), error: jac.norm(), rank, accepted: jac.norm() <= DECOMPOSITION_TOL });
    }
    let mut a = DMatrix::zeros(q * p, k);
    for s in 0..k {
        let dyad = &gammas[s] * lambdas[s].transpose();
        a.column_mut(s).copy_from_slice(dyad.as_slice());
    }
    let dyad_rank = linalg::rank(&a);
    let gamma_rank = linalg::rank(&DMatrix::from_columns(gammas));
    if dyad_rank < k || gamma_rank < k {
        return Err(VerifyError::DegenerateElements { point: Vec::new(), rank: dyad_rank.min(gamma_rank), k });
    }
    let b = DVector::from_column_slice(jac.as_slice());
    let xi = linalg::lstsq(&a, &b).ok_or(VerifyError::DegenerateElements { point: Vec::new(), rank: 0, k })?;
    let error = (&b - &a * &xi).norm();
    Ok(DecompositionRecovery {
        xi: xi.iter().copied().collect(),
        error,
        rank,
        accepted: error <= DECOMPOSITION_TOL * (1.0 + jac.norm()),
    })
}

/// Compiled γ's and λ's of bound elements over (independent, dependent).
#[derive(Debug, Clone)]
pub struct ElementEval {
    gammas: Vec<Vec<Compiled>>,
    lambdas: Vec<Vec<Compiled>>,
}

impl ElementEval {
    pub fn new(elements: &[WaveElement], xs: &[String], us: &[String]) -> Result<ElementEval, VerifyError> {
        let slots: Vec<&String> = xs.iter().chain(us).collect();
        Ok(ElementEval {
            gammas: elements.iter().map(|e| compile_all(&e.gamma, &slots)).collect::<Result<_, _>>()?,
            lambdas: elements.iter().map(|e| compile_all(&e.lambda, &slots)).collect::<Result<_, _>>()?,
        })
    }

    fn eval(cs: &[Vec<Compiled>], v: &[f64]) -> Result<Vec<DVector<f64>>, VerifyError> {
        cs.iter()
            .map(|c| Ok(DVector::from_vec(c.iter().map(|e| e.eval(v)).collect::<Result<Vec<_>, _>>()?)))
            .collect()
    }

    pub fn at(&self, x: &[f64], u: &[f64]) -> Result<(Vec<DVector<f64>>, Vec<DVector<f64>>), VerifyError> {
        let v = [x, u].concat();
        Ok((Self::eval(&self.gammas, &v)?, Self::eval(&self.lambdas, &v)?))
    }

    /// k×p matrix of the λ's at (x, u).
    pub fn lambda_matrix(&self, x: &[f64], u: &[f64]) -> Result<DMatrix<f64>, VerifyError> {
        let (_, ls) = self.at(x, u)?;
        Ok(DMatrix::from_fn(ls.len(), x.len(), |s, i| ls[s][i]))
    }
}

/// [`recover_numeric`] with γ and λ evaluated from `elements` at `at`,
/// which must assign every independent and dependent variable.
pub fn recover_decomposition(
    jac: &DMatrix<f64>,
    elements: &[WaveElement],
    xs: &[String],
    us: &[String],
    at: &Point,
) -> Result<DecompositionRecovery, VerifyError> {
    let x = at.values_of(xs).ok_or_else(|| VerifyError::Shape("point misses an independent variable".into()))?;
    let u = at.values_of(us).ok_or_else(|| VerifyError::Shape("point misses a dependent variable".into()))?;
    let (g, l) = ElementEval::new(elements, xs, us)?.at(&x, &u)?;
    recover_numeric(jac, &g, &l).map_err(|e| match e {
        VerifyError::DegenerateElements { rank, k, .. } => VerifyError::DegenerateElements { point: x.clone(), rank, k },
        e => e,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub per_point: Vec<Option<DecompositionRecovery>>,
    pub max_error: f64,
    /// Smallest and largest recovered ξ^σ per element.
    pub xi_range: Vec<(f64, f64)>,
    /// How many points have each numerical rank.
    pub ranks: BTreeMap<usize, usize>,
    pub rejected: Vec<usize>,
}

impl DecompositionReport {
    pub fn passed(&self) -> bool {
        self.rejected.is_empty() && self.per_point.iter().any(Option::is_some)
    }
}

pub fn decomposition_report(
    field: &SolutionField,
    jacobians: &[Option<Result<DMatrix<f64>, VerifyError>>],
    elements: &ElementEval,
) -> Result<DecompositionReport, VerifyError> {
    let k = elements.gammas.len();
    let mut report = DecompositionReport {
        per_point: Vec::with_capacity(field.points.len()),
        max_error: 0.0,
        xi_range: vec![(f64::INFINITY, f64::NEG_INFINITY); k],
        ranks: BTreeMap::new(),
        rejected: Vec::new(),
    };
    for (i, (pt, jac)) in field.points.iter().zip(jacobians).enumerate() {
        let Some(Ok(jac)) = jac else {
            report.per_point.push(None);
            continue;
        };
        let (g, l) = elements.at(&pt.x, &pt.u)?;
        match recover_numeric(jac, &g, &l) {
            Ok(rec) => {
                report.max_error = report.max_error.max(rec.error);
                for (r, x) in report.xi_range.iter_mut().zip(&rec.xi) {
                    r.0 = r.0.min(*x);
                    r.1 = r.1.max(*x);
                }
                *report.ranks.entry(rec.rank).or_default() += 1;
                if !rec.accepted {
                    report.rejected.push(i);
                }
                report.per_point.push(Some(rec));
            }
            Err(VerifyError::DegenerateElements { .. }) => {
                report.rejected.push(i);
                report.per_point.push(None);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

/// Checks that u is constant along directions θ with ⟨λ^(s), θ⟩ = 0 for
/// all s. Without explicit directions a numeric kernel basis of the
/// stacked λ's is used at each point; a trivial kernel holds vacuously.
pub fn constancy_along_kernel(
    r: &dyn Resolve,
    field: &SolutionField,
    elements: &ElementEval,
    directions: Option<&[Vec<f64>]>,
    h: f64,
    max_points: usize,
) -> Verdict {
    let idx: Vec<usize> = field.converged().filter(|(_, p)| p.status == PointStatus::Converged).map(|(i, _)| i).collect();
    let stride = (idx.len() / max_points.max(1)).max(1);
    let mut verdicts = Vec::new();
    for &i in idx.iter().step_by(stride) {
        let pt = &field.points[i];
        let thetas: Vec<Vec<f64>> = match directions {
            Some(d) => d.to_vec(),
            None => match elements.lambda_matrix(&pt.x, &pt.u) {
                Ok(m) => linalg::null_space(&m, 1e-10).into_iter().map(|v| v.iter().copied().collect()).collect(),
                Err(e) => return Verdict::Inconclusive { reason: e.to_string() },
            },
        };
        for th in thetas {
            match directional_derivative(r, &pt.x, Some(&pt.tau), &th, h) {
                Ok(d) => {
                    let m = d.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                    if !(m < KERNEL_TOL) {
                        verdicts.push(Verdict::Fails {
                            check: format!("du along θ = {th:?}"),
                            witness: Witness { point: Point::zip(&field.independent, &pt.x), value: m },
                        });
                    }
                }
                Err(e) => verdicts.push(Verdict::Inconclusive { reason: e.to_string() }),
            }
        }
    }
    Verdict::combine(verdicts)
}
