//! Simple waves and k-waves: hodograph surfaces, the implicit solve for
//! the Riemann invariants τ and gradient-catastrophe monitoring.

mod grid;
mod hodograph;
mod implicit;

use thiserror::Error;

use crate::expr::{parse, EvalError, Expr, ParseError, VarSpace};
use crate::geometry::{Potential, WaveElement};
use crate::system::{HodographSection, QuasilinearSystem};

pub use grid::{Grid, GridAxis, GridError};
pub use hodograph::{
    build_hodograph, closed_form_surface, integrate_characteristic, FlowSpec, HodographSurface, Provenance,
    SurfaceChecks, SurfaceMethod, SURFACE_TOL, SWAP_TOL,
};
pub use implicit::{
    solve_implicit, ImplicitSolveConfig, ImplicitSolver, InitialGuess, PointStatus, SolutionField, SolutionPoint,
    FOLD_DET,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("the flow left every bound near τ = {tau:?} (u = {u:?})")]
    BlowUp { tau: Vec<f64>, u: Vec<f64> },
    #[error("step size underflow at s = {s}")]
    StiffnessAbort { s: f64 },
    #[error("flow orders disagree by {mismatch:.3e} at τ = {tau:?}; the weighted frame does not commute")]
    NonIntegrable { mismatch: f64, tau: Vec<f64> },
    #[error("the closed-form surface deviates from the flows by {deviation:.3e}")]
    ClosedFormMismatch { deviation: f64 },
    #[error("∂f/∂τ leaves span{{γ}} by {residual:.3e}")]
    NotTangent { residual: f64 },
    #[error("τ = {tau:?} is outside the sampled surface")]
    OutsideSurface { tau: Vec<f64> },
    #[error("Newton diverged at all {points} grid points")]
    AllDiverged { points: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("{entry}: {source}")]
    Parse { entry: String, source: ParseError },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Flow data for a `[hodograph]` section over the γ's of `elements`,
/// plus the parsed closed form when the section has one.
pub fn flow_spec_from_section(
    sec: &HodographSection,
    sys: &QuasilinearSystem,
    elements: &[WaveElement],
) -> Result<(FlowSpec, Option<Vec<Expr>>), SolveError> {
    let space = VarSpace::new(Vec::<String>::new(), sys.dependent().to_vec(), sec.params.clone())
        .and_then(|s| s.with_constants(sys.constants().iter().map(|(n, _)| n.clone())))
        .map_err(|e| SolveError::Shape(e.to_string()))?;
    let p = |entry: String, s: &str| {
        parse(s, &space).map(|e| sys.bind(&e)).map_err(|source| SolveError::Parse { entry, source })
    };
    let k = sec.params.len();
    if elements.len() != k {
        return Err(SolveError::Shape(format!("{} wave elements for {k} surface parameters", elements.len())));
    }
    let mut frame = Vec::with_capacity(k);
    for e in elements {
        let g: Vec<Expr> = e.gamma.iter().map(|g| sys.bind(g)).collect();
        if g.iter().any(|c| c.depends_on_any(sys.independent())) {
            return Err(SolveError::Unsupported(format!("γ of `{}` depends on the independent variables", e.label)));
        }
        frame.push(g);
    }
    let mut spec = FlowSpec::new(sec.params.clone(), sys.dependent().to_vec(), frame);
    if let Some(mu) = &sec.mu {
        spec.mu = mu
            .iter()
            .enumerate()
            .map(|(a, row)| row.iter().enumerate().map(|(b, s)| p(format!("hodograph.mu[{a}][{b}]"), s)).collect())
            .collect::<Result<_, _>>()?;
    }
    spec.base_tau = sec.base_tau.clone();
    spec.base_u = sec.base_u.clone();
    spec.tau_min = sec.tau_min.clone();
    spec.tau_max = sec.tau_max.clone();
    if let Some(h) = sec.step {
        spec.step = h;
    }
    let f = sec
        .f
        .as_ref()
        .map(|f| f.iter().enumerate().map(|(b, s)| p(format!("hodograph.f[{b}]"), s)).collect::<Result<Vec<_>, _>>())
        .transpose()?;
    Ok((spec, f))
}

/// The closed form when one is given (checked against the flows),
/// otherwise a flow-built surface.
pub fn surface_from_spec(spec: &FlowSpec, f: Option<&[Expr]>) -> Result<HodographSurface, SolveError> {
    match f {
        Some(f) => closed_form_surface(spec, f),
        None => build_hodograph(spec),
    }
}

/// Solver for the bundled double wave u = (−ln|y|, t): the closed-form
/// surface with the gauged potentials of the example2 fixture.
pub fn double_wave_solver() -> ImplicitSolver {
    let file = crate::fixtures::file("example2").expect("bundled fixture");
    let sys = file.to_system().expect("bundled fixture");
    let space = file.space().expect("bundled fixture");
    let elements: Vec<WaveElement> =
        file.waves.iter().map(|w| WaveElement::from_section(w, &space).expect("bundled fixture")).collect();
    let sec = file.hodograph.as_ref().expect("bundled fixture has a surface");
    let (spec, f) = flow_spec_from_section(sec, &sys, &elements).expect("bundled fixture");
    let surface = surface_from_spec(&spec, f.as_deref()).expect("bundled surface");
    let potentials = elements
        .iter()
        .map(|e| {
            Potential::Symbolic(e.potential.clone().expect("bundled potentials"))
                .evaluator(sys.independent(), sys.dependent())
                .expect("bundled potentials compile")
        })
        .collect();
    ImplicitSolver::new(surface, potentials, sys.independent().to_vec(), ImplicitSolveConfig::default())
        .expect("bundled solver")
}

/// The explicit double wave u = (−ln|y|, t), τ± = t ± 2√(−ln|y|),
/// evaluated on an 8×8×8 grid over t∈[1,3], x∈[1,3], y∈[0.2,0.9].
pub fn double_wave_fixture() -> SolutionField {
    let solver = double_wave_solver();
    let grid = Grid::from_spec("t=1:3:8, x=1:3:8, y=0.2:0.9:8", &solver.independent).expect("static grid");
    let points = grid
        .points
        .iter()
        .map(|x| {
            let (t, y) = (x[0], x[2]);
            let r = (-y.abs().ln()).sqrt();
            let mut p = solver.evaluate(x, &[t + 2.0 * r, t - 2.0 * r]).expect("inside the surface");
            p.u = vec![-y.abs().ln(), t];
            p
        })
        .collect();
    SolutionField {
        independent: solver.independent.clone(),
        params: solver.surface.params.clone(),
        dependent: solver.surface.dependent.clone(),
        shape: grid.shape.clone(),
        tolerance: solver.cfg.tolerance,
        catastrophe_threshold: solver.cfg.catastrophe_threshold,
        points,
    }
}
