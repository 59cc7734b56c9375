//! The end-to-end analysis behind the `kwave` binary: homogenize, find
//! wave elements, check the k-wave conditions, rescale the γ frame, solve
//! on a grid and verify the result.
//!
//! Every stage writes one artifact into the output directory. Reports are
//! deterministic for a fixed request and seed; wall-clock data goes to
//! `metadata.json` only.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use crate::expr::{DomainBox, Expr, ZeroTest};
use crate::frobenius::{rescale_frame, FrameRescaling, RescaleOptions};
use crate::geometry::{find_potential, kernel_elements, ConditionReport, KernelBasis, Potential, Verdict, WaveElement};
use crate::par::Exec;
use crate::solver::{
    flow_spec_from_section, surface_from_spec, Grid, GridAxis, HodographSurface, ImplicitSolveConfig, ImplicitSolver,
    InitialGuess, PointStatus, SolutionField, SolveError,
};
use crate::system::{HomogenizeOptions, QuasilinearSystem, SystemFile, WaveSection};
use crate::verify::{self, DecompositionReport, ElementEval, ResidualReport, FD_STEP};

/// Version tag written into every report.
pub const SCHEMA_VERSION: u32 = 1;
/// Points per axis when no grid is requested.
pub const DEFAULT_GRID_POINTS: usize = 10;
/// Points at which constancy along the kernel of the λ's is sampled.
pub const KERNEL_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Homogenize,
    Elements,
    Conditions,
    Rescale,
    Solve,
    Verify,
}

impl Stage {
    pub const ALL: [Stage; 6] =
        [Stage::Homogenize, Stage::Elements, Stage::Conditions, Stage::Rescale, Stage::Solve, Stage::Verify];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Homogenize => "homogenize",
            Stage::Elements => "elements",
            Stage::Conditions => "conditions",
            Stage::Rescale => "rescale",
            Stage::Solve => "solve",
            Stage::Verify => "verify",
        }
    }

    /// Parses a comma-separated list, which must be a prefix of the
    /// pipeline; `all` selects every stage.
    pub fn parse_list(s: &str) -> Result<Vec<Stage>, String> {
        if s.trim() == "all" {
            return Ok(Stage::ALL.to_vec());
        }
        let stages = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(Stage::from_str)
            .collect::<Result<Vec<_>, _>>()?;
        check_prefix(&stages)?;
        Ok(stages)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Stage, String> {
        Stage::ALL.into_iter().find(|st| st.name() == s).ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

fn check_prefix(stages: &[Stage]) -> Result<(), String> {
    if stages.is_empty() {
        return Err("no stages requested".into());
    }
    if stages.iter().zip(Stage::ALL).any(|(a, b)| *a != b) {
        let want: Vec<&str> = Stage::ALL[..stages.len().min(6)].iter().map(|s| s.name()).collect();
        return Err(format!("stages must be a prefix of the pipeline (expected {})", want.join(",")));
    }
    Ok(())
}

/// Where the system comes from: a file or a bundled fixture.
#[derive(Debug, Clone, PartialEq)]
pub enum SystemSource {
    Path(PathBuf),
    Fixture(String),
}

impl SystemSource {
    /// `fixture:<name>` selects a bundled system, anything else is a path.
    pub fn parse(s: &str) -> SystemSource {
        match s.strip_prefix("fixture:") {
            Some(name) => SystemSource::Fixture(name.to_string()),
            None => SystemSource::Path(PathBuf::from(s)),
        }
    }

    pub fn load(&self) -> Result<SystemFile, String> {
        match self {
            SystemSource::Fixture(name) => crate::fixtures::file(name).map_err(|e| e.to_string()),
            SystemSource::Path(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
                SystemFile::from_toml(&text).map_err(|e| format!("{}: {e}", p.display()))
            }
        }
    }
}

impl fmt::Display for SystemSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemSource::Path(p) => write!(f, "{}", p.display()),
            SystemSource::Fixture(n) => write!(f, "fixture:{n}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisRequest {
    pub system: SystemSource,
    /// Overrides the file's `[domain]` range by range.
    pub domain: Option<DomainBox>,
    pub stages: Vec<Stage>,
    /// Replaces the file's `[[waves]]` when nonempty.
    pub waves: Vec<WaveSection>,
    /// Grid spec such as `t=1:3:20, x=1:3:20, y=0.2:0.9:20`; the domain
    /// box with [`DEFAULT_GRID_POINTS`] per axis when absent.
    pub grid: Option<String>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub tol_newton: f64,
    pub tol_zero: f64,
    pub fd_step: f64,
    pub exec: Exec,
}

impl AnalysisRequest {
    pub fn new(system: SystemSource) -> AnalysisRequest {
        let zt = ZeroTest::default();
        AnalysisRequest {
            system,
            domain: None,
            stages: Stage::ALL.to_vec(),
            waves: Vec::new(),
            grid: None,
            seed: zt.seed,
            out: None,
            tol_newton: ImplicitSolveConfig::default().tolerance,
            tol_zero: zt.threshold,
            fd_step: FD_STEP,
            exec: Exec::default(),
        }
    }

    fn zero_test(&self) -> ZeroTest {
        ZeroTest { threshold: self.tol_zero, seed: self.seed, exec: self.exec, ..ZeroTest::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureKind {
    /// Unreadable or malformed input, including an empty grid.
    Input,
    /// A mathematical condition does not hold.
    Condition,
    /// The solve or its verification failed.
    Solver,
}

impl FailureKind {
    pub fn exit_code(self) -> i32 {
        match self {
            FailureKind::Input => 2,
            FailureKind::Condition => 3,
            FailureKind::Solver => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub stage: Option<Stage>,
    pub kind: FailureKind,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.stage {
            Some(s) => write!(f, "[{s}] {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

fn fail(stage: Stage, kind: FailureKind, message: impl fmt::Display) -> Failure {
    Failure { stage: Some(stage), kind, message: message.to_string() }
}

/// Everything a run produced, stage by stage.
#[derive(Debug, Default)]
pub struct Analysis {
    pub system: Option<QuasilinearSystem>,
    pub homogenized: Option<SystemFile>,
    pub elements: Vec<ElementSummary>,
    pub conditions: Option<ConditionReport>,
    pub rescaling: Option<FrameRescaling>,
    pub surface: Option<HodographSurface>,
    pub field: Option<SolutionField>,
    pub residual: Option<ResidualReport>,
    pub decomposition: Option<DecompositionReport>,
    pub kernel: Option<Verdict>,
    pub completed: Vec<Stage>,
    pub written: Vec<PathBuf>,
    pub failure: Option<Failure>,
    pub timings: Vec<(Stage, f64)>,
}

impl Analysis {
    pub fn exit_code(&self) -> i32 {
        self.failure.as_ref().map_or(0, |f| f.kind.exit_code())
    }

    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }
}

/// A wave element as found by the elements stage.
#[derive(Debug, Clone, Serialize)]
pub struct ElementSummary {
    pub label: String,
    pub lambda: Vec<String>,
    pub gamma: Vec<String>,
    /// `None` when the potential is a numerical line integral.
    pub potential: Option<String>,
    pub potential_method: crate::geometry::PotentialMethod,
    /// μ with μλ = dφ; λ and γ above already include it.
    pub factor: String,
    pub gamma_from_kernel: bool,
}

struct Ctx<'a> {
    req: &'a AnalysisRequest,
    zt: ZeroTest,
    file: SystemFile,
    sys: QuasilinearSystem,
    dom: DomainBox,
    elements: Vec<WaveElement>,
    potentials: Vec<Potential>,
    solver: Option<ImplicitSolver>,
    out: &'a mut Analysis,
}

/// Runs the requested stages in order, stopping at the first failure.
/// Artifacts are written as each stage completes when `out` is set.
pub fn run(req: &AnalysisRequest) -> Analysis {
    let mut analysis = Analysis::default();
    let started = SystemTime::now();
    if let Err(e) = run_inner(req, &mut analysis) {
        analysis.failure = Some(e);
    }
    if let Some(dir) = &req.out {
        let finished = SystemTime::now();
        if let Err(e) = write_metadata(dir, req, &analysis, started, finished) {
            analysis.failure.get_or_insert(Failure { stage: None, kind: FailureKind::Input, message: e });
        }
    }
    analysis
}

fn run_inner(req: &AnalysisRequest, analysis: &mut Analysis) -> Result<(), Failure> {
    let input = |m: String| Failure { stage: None, kind: FailureKind::Input, message: m };
    check_prefix(&req.stages).map_err(input)?;
    if let Some(dir) = &req.out {
        std::fs::create_dir_all(dir).map_err(|e| input(format!("{}: {e}", dir.display())))?;
    }
    let mut file = req.system.load().map_err(input)?;
    if !req.waves.is_empty() {
        file.waves = req.waves.clone();
    }
    let mut dom = file.domain_box();
    if let Some(d) = &req.domain {
        if d.is_empty() {
            return Err(input("empty domain".into()));
        }
        dom = dom.overlay(d);
    }
    let sys = file.to_system().map_err(|e| input(format!("{}: {e}", req.system)))?;
    analysis.system = Some(sys.clone());
    let mut ctx = Ctx {
        req,
        zt: req.zero_test(),
        file,
        sys,
        dom,
        elements: Vec::new(),
        potentials: Vec::new(),
        solver: None,
        out: analysis,
    };
    for &stage in &req.stages {
        let t0 = Instant::now();
        match stage {
            Stage::Homogenize => ctx.homogenize()?,
            Stage::Elements => ctx.find_elements()?,
            Stage::Conditions => ctx.conditions()?,
            Stage::Rescale => ctx.rescale()?,
            Stage::Solve => ctx.solve()?,
            Stage::Verify => ctx.verify()?,
        }
        ctx.out.timings.push((stage, t0.elapsed().as_secs_f64()));
        ctx.out.completed.push(stage);
    }
    Ok(())
}

fn report(kind: &str, body: impl Serialize) -> Value {
    let mut v = json!({ "schema": format!("kwave.{kind}/{SCHEMA_VERSION}") });
    if let (Value::Object(m), Ok(Value::Object(b))) = (&mut v, serde_json::to_value(body)) {
        m.extend(b);
    }
    v
}

impl Ctx<'_> {
    fn write(&mut self, stage: Stage, name: &str, contents: &str) -> Result<(), Failure> {
        let Some(dir) = &self.req.out else { return Ok(()) };
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| fail(stage, FailureKind::Input, format!("{}: {e}", path.display())))?;
        self.out.written.push(path);
        Ok(())
    }

    fn write_json(&mut self, stage: Stage, name: &str, v: &Value) -> Result<(), Failure> {
        let mut s = serde_json::to_string_pretty(v).map_err(|e| fail(stage, FailureKind::Input, e))?;
        s.push('\n');
        self.write(stage, name, &s)
    }

    fn homogenize(&mut self) -> Result<(), Failure> {
        let st = Stage::Homogenize;
        let opts = HomogenizeOptions {
            new_variable: self.file.homogenize.as_ref().and_then(|h| h.new_variable.clone()),
            domain: self.dom.clone(),
            zero_test: self.zt.clone(),
        };
        let h = self.sys.homogenize(&opts).map_err(|e| fail(st, FailureKind::Condition, e))?;
        let mut out = SystemFile::from_system(&h.system);
        out.set_domain(&h.domain);
        if h.all_sources_zero {
            // Already homogeneous: keep the file's own sections.
            out = SystemFile { domain: out.domain, homogenize: None, ..self.file.clone() };
        }
        let text = out.to_toml().map_err(|e| fail(st, FailureKind::Input, e))?;
        self.write(st, "homogenized.toml", &text)?;
        if !h.all_sources_zero {
            // Later stages work on the homogeneous system; user-supplied
            // waves and surfaces must then be written in its variables.
            self.file = SystemFile {
                waves: self.file.waves.clone(),
                hodograph: self.file.hodograph.clone(),
                solve: self.file.solve.clone(),
                ..out.clone()
            };
            self.sys = h.system;
            self.dom = h.domain;
        }
        self.out.homogenized = Some(out);
        Ok(())
    }

    fn find_elements(&mut self) -> Result<(), Failure> {
        let st = Stage::Elements;
        if self.file.waves.is_empty() {
            return Err(fail(st, FailureKind::Input, "no wave covectors given (add [[waves]] sections)"));
        }
        let space = self.file.space().map_err(|e| fail(st, FailureKind::Input, e))?;
        let (xs, us) = (self.sys.independent().to_vec(), self.sys.dependent().to_vec());
        let base = self.dom.center();
        for sec in &self.file.waves {
            let mut e = WaveElement::from_section(sec, &space).map_err(|e| fail(st, FailureKind::Input, e))?;
            let from_kernel = e.gamma.is_empty();
            if from_kernel {
                let lam: Vec<Expr> = e.lambda.iter().map(|l| self.sys.bind(l)).collect();
                match kernel_elements(&self.sys, &lam, &self.dom, &self.zt) {
                    Ok(KernelBasis::Symbolic(vs)) if vs.len() == 1 => e.gamma = vs.into_iter().next().unwrap_or_default(),
                    Ok(_) => {
                        return Err(fail(
                            st,
                            FailureKind::Condition,
                            format!("wave `{}`: no single symbolic kernel vector; give γ explicitly", e.label),
                        ))
                    }
                    Err(err) => return Err(fail(st, FailureKind::Condition, format!("wave `{}`: {err}", e.label))),
                }
            }
            let bound = e.bound(&self.sys);
            let found = find_potential(&bound, &xs, &us, &base, &self.dom, &self.zt)
                .map_err(|err| fail(st, FailureKind::Condition, format!("wave `{}`: {err}", e.label)))?;
            let applied = found.apply(&bound);
            self.out.elements.push(ElementSummary {
                label: applied.label.clone(),
                lambda: applied.lambda.iter().map(ToString::to_string).collect(),
                gamma: applied.gamma.iter().map(ToString::to_string).collect(),
                potential: applied.potential.as_ref().map(ToString::to_string),
                potential_method: found.method,
                factor: found.factor.to_string(),
                gamma_from_kernel: from_kernel,
            });
            self.elements.push(applied);
            self.potentials.push(found.potential);
        }
        let v = report("elements", json!({ "elements": self.out.elements }));
        self.write_json(st, "elements.json", &v)
    }

    fn conditions(&mut self) -> Result<(), Failure> {
        let st = Stage::Conditions;
        let rep = crate::geometry::check_kwave_conditions(&self.sys, &self.elements, &self.dom, &self.zt)
            .map_err(|e| fail(st, FailureKind::Condition, e))?;
        self.write_json(st, "conditions.json", &report("conditions", &rep))?;
        let ok = rep.all_hold();
        self.out.conditions = Some(rep);
        if !ok {
            return Err(fail(st, FailureKind::Condition, "not every k-wave condition holds (see conditions.json)"));
        }
        Ok(())
    }

    fn rescale(&mut self) -> Result<(), Failure> {
        let st = Stage::Rescale;
        let gammas: Vec<Vec<Expr>> = self.elements.iter().map(|e| e.gamma.clone()).collect();
        let opts = RescaleOptions { zero_test: self.zt.clone(), exec: self.req.exec, ..RescaleOptions::default() };
        let r = rescale_frame(&gammas, self.sys.dependent(), &self.dom, &opts)
            .map_err(|e| fail(st, FailureKind::Condition, e))?;
        self.write_json(st, "rescaling.json", &report("rescaling", &r))?;
        let ok = r.commutes();
        self.out.rescaling = Some(r);
        if !ok {
            return Err(fail(st, FailureKind::Condition, "the rescaled frame does not commute (see rescaling.json)"));
        }
        Ok(())
    }

    fn grid(&self) -> Result<Grid, Failure> {
        let st = Stage::Solve;
        let xs = self.sys.independent();
        match &self.req.grid {
            Some(spec) => Grid::from_spec(spec, xs).map_err(|e| fail(st, FailureKind::Input, e)),
            None => {
                let axes = xs
                    .iter()
                    .map(|x| {
                        let (lo, hi) = self.dom.get(x).ok_or_else(|| {
                            fail(st, FailureKind::Input, format!("no grid given and no domain range for `{x}`"))
                        })?;
                        Ok(GridAxis { name: x.clone(), lo, hi, n: DEFAULT_GRID_POINTS })
                    })
                    .collect::<Result<Vec<_>, Failure>>()?;
                Grid::tensor(&axes).map_err(|e| fail(st, FailureKind::Input, e))
            }
        }
    }

    fn solve(&mut self) -> Result<(), Failure> {
        let st = Stage::Solve;
        let grid = self.grid()?;
        let Some(sec) = self.file.hodograph.clone() else {
            return Err(fail(st, FailureKind::Input, "the system file has no [hodograph] section"));
        };
        let solver_err = |e: SolveError| fail(st, FailureKind::Solver, e);
        let (mut spec, f) = flow_spec_from_section(&sec, &self.sys, &self.elements).map_err(|e| match e {
            SolveError::Parse { .. } | SolveError::Shape(_) => fail(st, FailureKind::Input, e),
            e => solver_err(e),
        })?;
        // Without explicit weights the rescaling factors make the frame commute.
        if sec.mu.is_none() {
            if let Some(fs) = self.out.rescaling.as_ref().and_then(FrameRescaling::symbolic_factors) {
                let k = fs.len();
                spec.mu = (0..k)
                    .map(|a| (0..k).map(|b| if a == b { self.sys.bind(&fs[a]) } else { Expr::zero() }).collect())
                    .collect();
            }
        }
        spec.seed = self.req.seed;
        spec.exec = self.req.exec;
        let surface = surface_from_spec(&spec, f.as_deref()).map_err(solver_err)?;
        let (xs, us) = (self.sys.independent(), self.sys.dependent());
        let potentials = self
            .potentials
            .iter()
            .map(|p| match p {
                Potential::Symbolic(e) => Potential::Symbolic(self.sys.bind(e)).evaluator(xs, us),
                other => other.evaluator(xs, us),
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| solver_err(e.into()))?;
        let initial = match self.file.solve.as_ref().and_then(|s| s.initial_u.clone()) {
            Some(u) => InitialGuess::FromU(u),
            None => InitialGuess::BasePoint,
        };
        let cfg = ImplicitSolveConfig { tolerance: self.req.tol_newton, initial, exec: self.req.exec, ..Default::default() };
        let solver = ImplicitSolver::new(surface.clone(), potentials, xs.to_vec(), cfg).map_err(solver_err)?;
        let field = solver.solve(&grid).map_err(solver_err)?;
        let csv = field.to_csv().map_err(|e| fail(st, FailureKind::Input, e))?;
        self.write(st, "solution.csv", &csv)?;
        let bad = field.points.iter().filter(|p| p.status != PointStatus::Converged).count();
        let n = field.points.len();
        self.out.surface = Some(surface);
        self.out.field = Some(field);
        self.solver = Some(solver);
        if bad > 0 {
            return Err(fail(st, FailureKind::Solver, format!("{bad} of {n} grid points did not converge (see solution.csv)")));
        }
        Ok(())
    }

    fn verify(&mut self) -> Result<(), Failure> {
        let st = Stage::Verify;
        let (Some(solver), Some(mut field)) = (self.solver.as_ref(), self.out.field.clone()) else {
            return Err(fail(st, FailureKind::Solver, "nothing to verify"));
        };
        let h = self.req.fd_step;
        let err = |e: verify::VerifyError| fail(st, FailureKind::Solver, e);
        let jacs = verify::field_jacobians(solver, &field, h, self.req.exec);
        let residual = verify::residual_report(&self.sys, &field, &jacs, h).map_err(err)?;
        let ev = ElementEval::new(&self.elements, self.sys.independent(), self.sys.dependent()).map_err(err)?;
        let decomposition = verify::decomposition_report(&field, &jacs, &ev).map_err(err)?;
        let kernel = verify::constancy_along_kernel(solver, &field, &ev, None, h, KERNEL_SAMPLES);
        verify::annotate(&mut field, &residual);
        let csv = field.to_csv().map_err(|e| fail(st, FailureKind::Input, e))?;
        self.write(st, "solution.csv", &csv)?;
        let v = report(
            "verification",
            json!({ "residual": &residual, "decomposition": &decomposition, "kernel_constancy": &kernel }),
        );
        self.write_json(st, "verification.json", &v)?;
        let mut problems = Vec::new();
        if !residual.passed() {
            problems.push(format!("PDE residual above tolerance at {} points", residual.failures.len()));
        }
        if !decomposition.passed() {
            problems.push(format!("decomposition rejected at {} points", decomposition.rejected.len()));
        }
        if kernel.fails() {
            problems.push("u varies along the kernel of the λ's".to_string());
        }
        self.out.field = Some(field);
        self.out.residual = Some(residual);
        self.out.decomposition = Some(decomposition);
        self.out.kernel = Some(kernel);
        if !problems.is_empty() {
            return Err(fail(st, FailureKind::Solver, problems.join("; ")));
        }
        Ok(())
    }
}

fn write_metadata(
    dir: &Path,
    req: &AnalysisRequest,
    a: &Analysis,
    started: SystemTime,
    finished: SystemTime,
) -> Result<(), String> {
    let secs = |t: SystemTime| t.duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64());
    let v = json!({
        "schema": format!("kwave.metadata/{SCHEMA_VERSION}"),
        "version": env!("CARGO_PKG_VERSION"),
        "system": req.system.to_string(),
        "stages": req.stages,
        "completed": a.completed,
        "seed": req.seed,
        "exec": req.exec,
        "started_unix": secs(started),
        "finished_unix": secs(finished),
        "stage_seconds": a.timings.iter().map(|(s, t)| json!({ "stage": s, "seconds": t })).collect::<Vec<_>>(),
        "exit_code": a.exit_code(),
        "failure": a.failure,
    });
    let path = dir.join("metadata.json");
    let text = serde_json::to_string_pretty(&v).map_err(|e| e.to_string())? + "\n";
    std::fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))
}

/// A short human-readable summary: dimensions, homogeneity and the
/// variables in which the system is evolutionary.
pub fn describe(file: &SystemFile) -> Result<String, String> {
    let sys = file.to_system().map_err(|e| e.to_string())?;
    let mut head = format!("p={} ({}), q={}", sys.p(), sys.independent().join(","), sys.q());
    head.push_str(if sys.is_homogeneous() { ", homogeneous" } else { ", inhomogeneous" });
    let evo = sys.evolutionary_in();
    if !evo.is_empty() {
        head.push_str(&format!(", evolutionary in {}", evo.join(",")));
    }
    let mut lines = vec![head];
    lines.push(format!(
        "m={} equations in {} unknowns ({}){}",
        sys.m(),
        sys.q(),
        sys.dependent().join(","),
        if sys.properly_determined() { "" } else { ", not properly determined" }
    ));
    if !sys.constants().is_empty() {
        let cs: Vec<String> = sys.constants().iter().map(|(k, v)| format!("{k}={v}")).collect();
        lines.push(format!("parameters: {}", cs.join(", ")));
    }
    if !file.waves.is_empty() {
        let ls: Vec<&str> = file.waves.iter().map(|w| w.label.as_str()).collect();
        lines.push(format!("waves: {}", ls.join(", ")));
    }
    if let Some(h) = &file.hodograph {
        let kind = if h.f.is_some() { "closed form" } else { "flows" };
        lines.push(format!("hodograph surface in ({}), {kind}", h.params.join(",")));
    }
    Ok(lines.join("\n"))
}
