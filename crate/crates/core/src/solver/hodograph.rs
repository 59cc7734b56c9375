//! Hodograph surfaces u = f(τ) with ∂f/∂τ^α = Σ μ[α][α'] γ_(α')(f).
//!
//! A surface is either a closed form (checked against the flows) or a node
//! lattice filled by successive flows, first along τ¹ and then along τ²,
//! and interpolated by cubic Hermite patches that use the exact
//! derivatives from the flow equations.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::SolveError;
use crate::expr::{compile_all, Compiled, EvalError, Expr};
use crate::par::Exec;

/// Flow-order swap mismatch above which a frame counts as non-commuting.
pub const SWAP_TOL: f64 = 1e-7;
/// Largest allowed deviation of a closed form from the flows, and of a
/// sampled derivative from span{γ}.
pub const SURFACE_TOL: f64 = 1e-8;

const MAX_SUBSTEPS: usize = 1 << 12;
const BLOWUP: f64 = 1e12;

/// Everything needed to generate a hodograph surface by flows.
#[derive(Debug, Clone)]
pub struct FlowSpec {
    pub params: Vec<String>,
    pub dependent: Vec<String>,
    /// γ_(α) over the params and the dependent variables, constants bound.
    pub frame: Vec<Vec<Expr>>,
    /// `mu[α][α']` is the weight of γ_(α') in ∂f/∂τ^α.
    pub mu: Vec<Vec<Expr>>,
    pub base_tau: Vec<f64>,
    pub base_u: Vec<f64>,
    pub tau_min: Vec<f64>,
    pub tau_max: Vec<f64>,
    /// Largest RK4 substep.
    pub step: f64,
    /// Node spacing; `None` places nodes `step` apart.
    pub spacing: Option<f64>,
    /// Per-interval error bound of the halving estimate, relative to 1 + |u|.
    pub tol: f64,
    /// Stop a flow line where it breaks down instead of failing.
    pub truncate: bool,
    pub seed: u64,
    pub exec: Exec,
}

impl FlowSpec {
    pub fn new(params: Vec<String>, dependent: Vec<String>, frame: Vec<Vec<Expr>>) -> FlowSpec {
        let k = frame.len();
        let q = dependent.len();
        FlowSpec {
            mu: (0..k).map(|a| (0..k).map(|b| if a == b { Expr::one() } else { Expr::zero() }).collect()).collect(),
            base_tau: vec![0.0; k],
            base_u: vec![0.0; q],
            tau_min: vec![-1.0; k],
            tau_max: vec![1.0; k],
            step: 1e-2,
            spacing: None,
            tol: 1e-12,
            truncate: false,
            seed: 0,
            exec: Exec::default(),
            params,
            dependent,
            frame,
        }
    }

    fn k(&self) -> usize {
        self.params.len()
    }

    fn check_shape(&self) -> Result<(), SolveError> {
        let (k, q) = (self.k(), self.dependent.len());
        let bad = |m: &str| Err(SolveError::Shape(m.to_string()));
        if k == 0 {
            return bad("a surface needs at least one parameter");
        }
        if self.frame.len() != k || self.frame.iter().any(|g| g.len() != q) {
            return bad("the frame must have one vector of length q per parameter");
        }
        if self.mu.len() != k || self.mu.iter().any(|r| r.len() != k) {
            return bad("μ must be k×k");
        }
        if [&self.base_tau, &self.tau_min, &self.tau_max].iter().any(|v| v.len() != k) || self.base_u.len() != q {
            return bad("base point and τ-box must match the parameters and dependent variables");
        }
        if !(self.step > 0.0) || self.spacing.is_some_and(|h| !(h > 0.0)) {
            return bad("step must be positive");
        }
        for a in 0..k {
            if !(self.tau_min[a] <= self.base_tau[a] && self.base_tau[a] <= self.tau_max[a]) {
                return bad("the base τ must lie in the τ-box");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub frame: Vec<Vec<String>>,
    pub mu: Vec<Vec<String>>,
    pub method: SurfaceMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceMethod {
    ClosedForm,
    Flows,
}

/// Numbers gathered while building or validating a surface.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SurfaceChecks {
    /// Largest flow-order swap mismatch at the spot checks.
    pub swap_mismatch: Option<f64>,
    pub swap_checks: usize,
    /// Largest |∂f/∂τ − projection onto span{γ}| at sampled points.
    pub tangency_residual: f64,
    /// Largest |f_closed − f_flow| over the flow nodes.
    pub closed_form_deviation: Option<f64>,
    pub nodes: usize,
    /// Nodes the flows could not reach.
    pub missing_nodes: usize,
}

#[derive(Debug, Clone)]
struct Node {
    f: Vec<f64>,
    /// ∂f/∂τ^α per axis.
    d: Vec<Vec<f64>>,
    /// ∂²f/∂τ¹∂τ² (two-parameter lattices only).
    d12: Vec<f64>,
}

/// Nodes `origin + i h` on a tensor lattice, last axis fastest.
#[derive(Debug, Clone)]
struct Lattice {
    origin: Vec<f64>,
    h: Vec<f64>,
    dims: Vec<usize>,
    /// Index of the base node along each axis.
    base: Vec<usize>,
    nodes: Vec<Option<Node>>,
}

impl Lattice {
    fn new(spec: &FlowSpec, h: f64) -> Lattice {
        let k = spec.k();
        let mut origin = Vec::with_capacity(k);
        let mut dims = Vec::with_capacity(k);
        let mut base = Vec::with_capacity(k);
        for a in 0..k {
            let below = ((spec.base_tau[a] - spec.tau_min[a]) / h - 1e-9).ceil().max(0.0) as usize;
            let above = ((spec.tau_max[a] - spec.base_tau[a]) / h - 1e-9).ceil().max(0.0) as usize;
            origin.push(spec.base_tau[a] - below as f64 * h);
            dims.push(below + above + 1);
            base.push(below);
        }
        let n = dims.iter().product();
        Lattice { origin, h: vec![h; k], dims, base, nodes: vec![None; n] }
    }

    fn index(&self, ix: &[usize]) -> usize {
        ix.iter().zip(&self.dims).fold(0, |acc, (i, d)| acc * d + i)
    }

    fn tau(&self, ix: &[usize]) -> Vec<f64> {
        ix.iter().enumerate().map(|(a, &i)| self.origin[a] + i as f64 * self.h[a]).collect()
    }

    /// Cell index and local coordinate in [0, 1] along `axis`.
    fn locate(&self, axis: usize, t: f64) -> Option<(usize, f64)> {
        let n = self.dims[axis];
        let s = (t - self.origin[axis]) / self.h[axis];
        let slack = 1e-9;
        if n < 2 || s < -slack || s > (n - 1) as f64 + slack {
            return None;
        }
        let i = (s.floor().max(0.0) as usize).min(n - 2);
        Some((i, (s - i as f64).clamp(0.0, 1.0)))
    }
}

/// Cubic Hermite basis (value weights h00, h01; slope weights h10, h11)
/// and their derivatives.
fn hermite(s: f64) -> ([f64; 4], [f64; 4]) {
    let (s2, s3) = (s * s, s * s * s);
    (
        [2.0 * s3 - 3.0 * s2 + 1.0, -2.0 * s3 + 3.0 * s2, s3 - 2.0 * s2 + s, s3 - s2],
        [6.0 * s2 - 6.0 * s, -6.0 * s2 + 6.0 * s, 3.0 * s2 - 4.0 * s + 1.0, 3.0 * s2 - 2.0 * s],
    )
}

#[derive(Debug, Clone)]
enum Repr {
    Closed { f: Vec<Expr>, value: Vec<Compiled>, jac: Vec<Vec<Compiled>> },
    Grid(Arc<Lattice>),
}

/// A surface u = f(τ¹..τ^k) in the space of dependent variables.
#[derive(Debug, Clone)]
pub struct HodographSurface {
    pub params: Vec<String>,
    pub dependent: Vec<String>,
    pub base_tau: Vec<f64>,
    pub base_u: Vec<f64>,
    pub tau_min: Vec<f64>,
    pub tau_max: Vec<f64>,
    pub provenance: Provenance,
    pub checks: SurfaceChecks,
    repr: Repr,
}

impl HodographSurface {
    pub fn k(&self) -> usize {
        self.params.len()
    }

    pub fn q(&self) -> usize {
        self.dependent.len()
    }

    pub fn closed_form(&self) -> Option<&[Expr]> {
        match &self.repr {
            Repr::Closed { f, .. } => Some(f),
            Repr::Grid(_) => None,
        }
    }

    pub fn eval(&self, tau: &[f64]) -> Result<Vec<f64>, SolveError> {
        match &self.repr {
            Repr::Closed { value, .. } => Ok(value.iter().map(|c| c.eval(tau)).collect::<Result<_, _>>()?),
            Repr::Grid(_) => Ok(self.eval_with_jacobian(tau)?.0),
        }
    }

    /// f(τ) and the q×k matrix ∂f/∂τ.
    pub fn eval_with_jacobian(&self, tau: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>), SolveError> {
        if tau.len() != self.k() {
            return Err(SolveError::Shape(format!("expected {} parameters, got {}", self.k(), tau.len())));
        }
        match &self.repr {
            Repr::Closed { value, jac, .. } => {
                let mut st = Vec::new();
                let f = value.iter().map(|c| c.eval_in(tau, &mut st)).collect::<Result<Vec<_>, _>>()?;
                let mut j = DMatrix::zeros(self.q(), self.k());
                for (b, row) in jac.iter().enumerate() {
                    for (a, c) in row.iter().enumerate() {
                        j[(b, a)] = c.eval_in(tau, &mut st)?;
                    }
                }
                Ok((f, j))
            }
            Repr::Grid(l) => interpolate(l, tau, self.q()).ok_or_else(|| SolveError::OutsideSurface { tau: tau.to_vec() }),
        }
    }
}

fn interpolate(l: &Lattice, tau: &[f64], q: usize) -> Option<(Vec<f64>, DMatrix<f64>)> {
    match tau.len() {
        1 => {
            let (i, s) = l.locate(0, tau[0])?;
            let (a, b) = (l.nodes[i].as_ref()?, l.nodes[i + 1].as_ref()?);
            let h = l.h[0];
            let (w, dw) = hermite(s);
            let mut f = vec![0.0; q];
            let mut j = DMatrix::zeros(q, 1);
            for c in 0..q {
                f[c] = w[0] * a.f[c] + w[1] * b.f[c] + h * (w[2] * a.d[0][c] + w[3] * b.d[0][c]);
                j[(c, 0)] = (dw[0] * a.f[c] + dw[1] * b.f[c]) / h + dw[2] * a.d[0][c] + dw[3] * b.d[0][c];
            }
            Some((f, j))
        }
        2 => {
            let (i, s) = l.locate(0, tau[0])?;
            let (jx, t) = l.locate(1, tau[1])?;
            let (h1, h2) = (l.h[0], l.h[1]);
            let corner = |p: usize, r: usize| l.nodes[l.index(&[i + p, jx + r])].as_ref();
            let c = [[corner(0, 0)?, corner(0, 1)?], [corner(1, 0)?, corner(1, 1)?]];
            let (ws, dws) = hermite(s);
            let (wt, dwt) = hermite(t);
            let mut f = vec![0.0; q];
            let mut jac = DMatrix::zeros(q, 2);
            for p in 0..2 {
                for r in 0..2 {
                    let n = c[p][r];
                    // value weight index p / r, slope weight 2 + p / 2 + r
                    let (vs, ss, vt, st) = (ws[p], ws[2 + p], wt[r], wt[2 + r]);
                    let (dvs, dss, dvt, dst) = (dws[p], dws[2 + p], dwt[r], dwt[2 + r]);
                    for b in 0..q {
                        let (v, d1, d2, d12) = (n.f[b], h1 * n.d[0][b], h2 * n.d[1][b], h1 * h2 * n.d12[b]);
                        f[b] += vs * vt * v + ss * vt * d1 + vs * st * d2 + ss * st * d12;
                        jac[(b, 0)] += (dvs * vt * v + dss * vt * d1 + dvs * st * d2 + dss * st * d12) / h1;
                        jac[(b, 1)] += (vs * dvt * v + ss * dvt * d1 + vs * dst * d2 + ss * dst * d12) / h2;
                    }
                }
            }
            Some((f, jac))
        }
        _ => None,
    }
}

/// Compiled right-hand sides of the flow equations.
struct Flows {
    k: usize,
    q: usize,
    /// γ_(α)[β] over (τ, u).
    frame: Vec<Vec<Compiled>>,
    /// ∂γ_(α)[β]/∂u^c.
    dframe: Vec<Vec<Vec<Compiled>>>,
    mu: Vec<Vec<Compiled>>,
    /// ∂μ[α][α']/∂τ².
    dmu2: Vec<Vec<Compiled>>,
}

impl Flows {
    fn new(spec: &FlowSpec) -> Result<Flows, SolveError> {
        let slots: Vec<&String> = spec.params.iter().chain(&spec.dependent).collect();
        let frame = spec.frame.iter().map(|g| compile_all(g, &slots)).collect::<Result<Vec<_>, _>>()?;
        let dframe = spec
            .frame
            .iter()
            .map(|g| {
                g.iter()
                    .map(|e| spec.dependent.iter().map(|u| e.diff(u).compile(&slots)).collect::<Result<Vec<_>, _>>())
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mu = spec.mu.iter().map(|r| compile_all(r, &spec.params)).collect::<Result<Vec<_>, _>>()?;
        let second = spec.params.get(1).cloned().unwrap_or_default();
        let dmu2 = spec
            .mu
            .iter()
            .map(|r| r.iter().map(|e| e.diff(&second).compile(&spec.params)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Flows { k: spec.k(), q: spec.dependent.len(), frame, dframe, mu, dmu2 })
    }

    fn gammas(&self, tau: &[f64], u: &[f64]) -> Result<Vec<Vec<f64>>, EvalError> {
        let v = [tau, u].concat();
        let mut st = Vec::new();
        self.frame.iter().map(|g| g.iter().map(|c| c.eval_in(&v, &mut st)).collect()).collect()
    }

    /// ∂f/∂τ^α at (τ, u) for every α.
    fn derivatives(&self, tau: &[f64], u: &[f64]) -> Result<Vec<Vec<f64>>, EvalError> {
        let g = self.gammas(tau, u)?;
        let mut out = vec![vec![0.0; self.q]; self.k];
        for a in 0..self.k {
            for (ap, gv) in g.iter().enumerate() {
                let w = self.mu[a][ap].eval(tau)?;
                for b in 0..self.q {
                    out[a][b] += w * gv[b];
                }
            }
        }
        Ok(out)
    }

    /// ∂²f/∂τ²∂τ¹ from differentiating the τ¹ equation along τ².
    fn mixed(&self, tau: &[f64], u: &[f64], d2: &[f64]) -> Result<Vec<f64>, EvalError> {
        let v = [tau, u].concat();
        let g = self.gammas(tau, u)?;
        let mut out = vec![0.0; self.q];
        for ap in 0..self.k {
            let w = self.mu[0][ap].eval(tau)?;
            let dw = self.dmu2[0][ap].eval(tau)?;
            for b in 0..self.q {
                let mut dg = 0.0;
                for c in 0..self.q {
                    dg += self.dframe[ap][b][c].eval(&v)? * d2[c];
                }
                // γ may also depend on τ² explicitly.
                out[b] += dw * g[ap][b] + w * dg;
            }
        }
        if self.k > 1 {
            let gt = self.explicit_tau2(tau, u)?;
            for ap in 0..self.k {
                let w = self.mu[0][ap].eval(tau)?;
                for b in 0..self.q {
                    out[b] += w * gt[ap][b];
                }
            }
        }
        Ok(out)
    }

    /// ∂γ/∂τ² by central differences; zero for frames without τ.
    fn explicit_tau2(&self, tau: &[f64], u: &[f64]) -> Result<Vec<Vec<f64>>, EvalError> {
        let h = 1e-6 * (1.0 + tau[1].abs());
        let (mut tp, mut tm) = (tau.to_vec(), tau.to_vec());
        tp[1] += h;
        tm[1] -= h;
        let (gp, gm) = (self.gammas(&tp, u)?, self.gammas(&tm, u)?);
        Ok(gp.iter().zip(&gm).map(|(p, m)| p.iter().zip(m).map(|(p, m)| (p - m) / (2.0 * h)).collect()).collect())
    }

    /// RHS of the flow along `axis`, with the other parameters frozen at `tau`.
    fn along<'a>(&'a self, axis: usize, tau: &'a [f64]) -> impl Fn(f64, &[f64]) -> Result<Vec<f64>, EvalError> + 'a {
        move |s, u| {
            let mut t = tau.to_vec();
            t[axis] = s;
            let g = self.gammas(&t, u)?;
            let mut out = vec![0.0; self.q];
            for (ap, gv) in g.iter().enumerate() {
                let w = self.mu[axis][ap].eval(&t)?;
                for b in 0..self.q {
                    out[b] += w * gv[b];
                }
            }
            Ok(out)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Breakdown {
    BlowUp { s: f64 },
    Stiff { s: f64 },
}

/// One lattice interval s0 → s1 along `axis`: RK4 with n and 2n substeps,
/// n doubling until the halving estimate meets the tolerance; the
/// Richardson-corrected value is returned.
fn interval(fl: &Flows, spec: &FlowSpec, axis: usize, tau: &[f64], u: &[f64], s0: f64, s1: f64) -> Result<Vec<f64>, Breakdown> {
    let rhs = fl.along(axis, tau);
    let mut n = (((s1 - s0).abs() / spec.step).ceil() as usize).max(1);
    loop {
        let full = crate::ode::rk4_fixed(&rhs, s0, u, s1, n);
        let half = crate::ode::rk4_fixed(&rhs, s0, u, s1, 2 * n);
        if let (Ok(full), Ok(half)) = (&full, &half) {
            let scale = 1.0 + half.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let err = half.iter().zip(full).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / 15.0;
            if err.is_finite() && half.iter().all(|v| v.abs() < BLOWUP) {
                if err <= spec.tol * scale {
                    return Ok(half.iter().zip(full).map(|(a, b)| a + (a - b) / 15.0).collect());
                }
            } else {
                return Err(Breakdown::BlowUp { s: s0 });
            }
        }
        n *= 2;
        if n > MAX_SUBSTEPS {
            return if full.is_err() || half.is_err() { Err(Breakdown::BlowUp { s: s0 }) } else { Err(Breakdown::Stiff { s: s0 }) };
        }
    }
}

/// Marches along `axis` from lattice index `from` in both directions,
/// with the other coordinates fixed by `ix`. Stops at a breakdown when
/// truncating.
fn march(
    fl: &Flows,
    spec: &FlowSpec,
    lat: &Lattice,
    axis: usize,
    ix: &[usize],
    u_start: &[f64],
) -> Result<Vec<Option<Vec<f64>>>, (Breakdown, Vec<f64>)> {
    let n = lat.dims[axis];
    let from = ix[axis];
    let mut out = vec![None; n];
    out[from] = Some(u_start.to_vec());
    for dir in [1i64, -1] {
        let mut i = from as i64;
        let mut u = u_start.to_vec();
        loop {
            let j = i + dir;
            if j < 0 || j >= n as i64 {
                break;
            }
            let mut at = ix.to_vec();
            at[axis] = i as usize;
            let tau = lat.tau(&at);
            let s1 = lat.origin[axis] + j as f64 * lat.h[axis];
            match interval(fl, spec, axis, &tau, &u, tau[axis], s1) {
                Ok(v) => {
                    u = v;
                    out[j as usize] = Some(u.clone());
                    i = j;
                }
                Err(e) if spec.truncate => {
                    let _ = e;
                    break;
                }
                Err(e) => return Err((e, tau)),
            }
        }
    }
    Ok(out)
}

fn breakdown_error(b: Breakdown, tau: Vec<f64>, u: Vec<f64>) -> SolveError {
    match b {
        Breakdown::BlowUp { .. } => SolveError::BlowUp { tau, u },
        Breakdown::Stiff { s } => SolveError::StiffnessAbort { s },
    }
}

/// Fills a lattice by flows: the τ¹ line through the base, then τ² lines
/// through each of its nodes.
fn fill_lattice(fl: &Flows, spec: &FlowSpec, h: f64) -> Result<Lattice, SolveError> {
    let mut lat = Lattice::new(spec, h);
    let k = spec.k();
    let first = march(fl, spec, &lat, 0, &lat.base, &spec.base_u)
        .map_err(|(b, tau)| breakdown_error(b, tau, spec.base_u.clone()))?;
    let values: Vec<Option<Vec<f64>>> = if k == 1 {
        first
    } else {
        let lines = spec.exec.map(&(0..lat.dims[0]).collect::<Vec<_>>(), |&i| match &first[i] {
            None => Ok(vec![None; lat.dims[1]]),
            Some(u) => march(fl, spec, &lat, 1, &[i, lat.base[1]], u),
        });
        let mut all = Vec::with_capacity(lat.nodes.len());
        for (i, line) in lines.into_iter().enumerate() {
            let line = line.map_err(|(b, tau)| breakdown_error(b, tau, first[i].clone().unwrap_or_default()))?;
            all.extend(line);
        }
        all
    };
    let taus: Vec<Vec<f64>> = (0..lat.nodes.len())
        .map(|flat| {
            let mut ix = vec![0; k];
            let mut r = flat;
            for a in (0..k).rev() {
                ix[a] = r % lat.dims[a];
                r /= lat.dims[a];
            }
            lat.tau(&ix)
        })
        .collect();
    let nodes = spec.exec.map_range(values.len(), |i| {
        let u = values[i].as_ref()?;
        let d = fl.derivatives(&taus[i], u).ok()?;
        let d12 = if k == 2 { fl.mixed(&taus[i], u, &d[1]).ok()? } else { Vec::new() };
        Some(Node { f: u.clone(), d, d12 })
    });
    lat.nodes = nodes;
    Ok(lat)
}

/// Flows from the base along the axes in `order`, ending at `tau`.
fn flow_path(fl: &Flows, spec: &FlowSpec, order: &[usize], tau: &[f64]) -> Result<Vec<f64>, Breakdown> {
    let mut cur = spec.base_tau.clone();
    let mut u = spec.base_u.clone();
    for &axis in order {
        let (s0, s1) = (cur[axis], tau[axis]);
        let n = (((s1 - s0).abs() / spec.step).ceil() as usize).max(1);
        let h = (s1 - s0) / n as f64;
        for i in 0..n {
            let a = s0 + i as f64 * h;
            let b = if i + 1 == n { s1 } else { a + h };
            u = interval(fl, spec, axis, &cur, &u, a, b)?;
            cur[axis] = b;
        }
        cur[axis] = s1;
    }
    Ok(u)
}

fn provenance(spec: &FlowSpec, method: SurfaceMethod) -> Provenance {
    let strs = |m: &Vec<Vec<Expr>>| m.iter().map(|r| r.iter().map(ToString::to_string).collect()).collect();
    Provenance { frame: strs(&spec.frame), mu: strs(&spec.mu), method }
}

/// Largest distance of ∂f/∂τ^α from span{γ} at the given points.
fn tangency(fl: &Flows, surface: &HodographSurface, taus: &[Vec<f64>]) -> Result<f64, SolveError> {
    let mut worst = 0.0f64;
    for tau in taus {
        let Ok((f, j)) = surface.eval_with_jacobian(tau) else { continue };
        let g = fl.gammas(tau, &f)?;
        let gm = DMatrix::from_fn(f.len(), g.len(), |r, c| g[c][r]);
        for a in 0..j.ncols() {
            let d = j.column(a).into_owned();
            let r = match crate::linalg::lstsq(&gm, &d) {
                Some(c) => (&d - &gm * c).amax(),
                None => d.amax(),
            };
            worst = worst.max(r / (1.0 + d.amax()));
        }
    }
    Ok(worst)
}

fn spot_taus(spec: &FlowSpec, n: usize, salt: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ salt);
    (0..n)
        .map(|_| (0..spec.k()).map(|a| spec.tau_min[a] + (spec.tau_max[a] - spec.tau_min[a]) * rng.random::<f64>()).collect())
        .collect()
}

/// Swaps the first two flow orders at seeded spot points; returns the
/// largest mismatch, the τ where it occurred and how many spots ran.
fn swap_check(fl: &Flows, spec: &FlowSpec, spots: usize) -> (f64, Vec<f64>, usize) {
    let k = spec.k();
    let forward: Vec<usize> = (0..k).collect();
    let mut swapped = forward.clone();
    swapped.swap(0, 1);
    let taus = spot_taus(spec, spots, 0x5eed);
    let res = spec.exec.map(&taus, |tau| match (flow_path(fl, spec, &forward, tau), flow_path(fl, spec, &swapped, tau)) {
        (Ok(a), Ok(b)) => Some(a.iter().zip(&b).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))),
        _ => None,
    });
    let mut worst = (0.0, spec.base_tau.clone(), 0);
    for (tau, r) in taus.iter().zip(res) {
        if let Some(m) = r {
            worst.2 += 1;
            if m > worst.0 {
                worst.0 = m;
                worst.1 = tau.clone();
            }
        }
    }
    worst
}

const SWAP_SPOTS: usize = 12;

/// Builds u = f(τ) by successive flows. Surfaces with more than one
/// parameter are spot-checked for flow-order independence.
pub fn build_hodograph(spec: &FlowSpec) -> Result<HodographSurface, SolveError> {
    spec.check_shape()?;
    let k = spec.k();
    if k > 2 {
        return Err(SolveError::Unsupported(format!(
            "flow-built surfaces support one or two parameters, got {k}; supply a closed form"
        )));
    }
    let fl = Flows::new(spec)?;
    let mut checks = SurfaceChecks::default();
    if k == 2 {
        let (m, tau, n) = swap_check(&fl, spec, SWAP_SPOTS);
        if m > SWAP_TOL {
            return Err(SolveError::NonIntegrable { mismatch: m, tau });
        }
        checks.swap_mismatch = Some(m);
        checks.swap_checks = n;
    }
    let lat = fill_lattice(&fl, spec, spec.spacing.unwrap_or(spec.step))?;
    checks.nodes = lat.nodes.len();
    checks.missing_nodes = lat.nodes.iter().filter(|n| n.is_none()).count();
    let mut surface = HodographSurface {
        params: spec.params.clone(),
        dependent: spec.dependent.clone(),
        base_tau: spec.base_tau.clone(),
        base_u: spec.base_u.clone(),
        tau_min: spec.tau_min.clone(),
        tau_max: spec.tau_max.clone(),
        provenance: provenance(spec, SurfaceMethod::Flows),
        checks,
        repr: Repr::Grid(Arc::new(lat)),
    };
    surface.checks.tangency_residual = tangency(&fl, &surface, &spot_taus(spec, 64, 0x7a9))?;
    if surface.checks.tangency_residual > SURFACE_TOL {
        return Err(SolveError::NotTangent { residual: surface.checks.tangency_residual });
    }
    Ok(surface)
}

/// The simple-wave case: du/ds = α(s) γ(s, u), u(s0) = u0, on [lo, hi].
pub fn integrate_characteristic(
    gamma: &[Expr],
    alpha: &Expr,
    param: &str,
    dependent: &[String],
    u0: &[f64],
    s0: f64,
    range: (f64, f64),
    step: f64,
) -> Result<HodographSurface, SolveError> {
    let mut spec = FlowSpec::new(vec![param.to_string()], dependent.to_vec(), vec![gamma.to_vec()]);
    spec.mu = vec![vec![alpha.clone()]];
    spec.base_tau = vec![s0];
    spec.base_u = u0.to_vec();
    spec.tau_min = vec![range.0];
    spec.tau_max = vec![range.1];
    spec.step = step;
    build_hodograph(&spec)
}

/// Validates a closed-form f against the flows of `spec`: the value at the
/// base, the deviation from a flow lattice and the swap check.
pub fn closed_form_surface(spec: &FlowSpec, f: &[Expr]) -> Result<HodographSurface, SolveError> {
    spec.check_shape()?;
    if f.len() != spec.dependent.len() {
        return Err(SolveError::Shape("the closed form needs one expression per dependent variable".into()));
    }
    let value = compile_all(f, &spec.params)?;
    let jac = f
        .iter()
        .map(|e| spec.params.iter().map(|t| e.diff(t).compile(&spec.params)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let fl = Flows::new(spec)?;
    let mut checks = SurfaceChecks::default();
    let k = spec.k();

    // A coarse lattice suffices: it only has to reach the whole box.
    let span = (0..k).map(|a| spec.tau_max[a] - spec.tau_min[a]).fold(0.0, f64::max);
    let h = (span / 40.0).max(spec.step);
    let mut lenient = spec.clone();
    lenient.truncate = true;
    let lat = if k <= 2 { Some(fill_lattice(&fl, &lenient, h)?) } else { None };
    let mut dev = 0.0f64;
    let mut st = Vec::new();
    let at_base = value.iter().map(|c| c.eval_in(&spec.base_tau, &mut st)).collect::<Result<Vec<_>, _>>()?;
    for (a, b) in at_base.iter().zip(&spec.base_u) {
        dev = dev.max((a - b).abs());
    }
    if let Some(lat) = &lat {
        checks.nodes = lat.nodes.len();
        for flat in 0..lat.nodes.len() {
            let Some(node) = &lat.nodes[flat] else {
                checks.missing_nodes += 1;
                continue;
            };
            let mut ix = vec![0; k];
            let mut r = flat;
            for a in (0..k).rev() {
                ix[a] = r % lat.dims[a];
                r /= lat.dims[a];
            }
            let tau = lat.tau(&ix);
            if let Ok(v) = value.iter().map(|c| c.eval_in(&tau, &mut st)).collect::<Result<Vec<_>, _>>() {
                for (a, b) in v.iter().zip(&node.f) {
                    dev = dev.max((a - b).abs() / (1.0 + b.abs()));
                }
            }
        }
    }
    checks.closed_form_deviation = Some(dev);
    if dev > SURFACE_TOL {
        return Err(SolveError::ClosedFormMismatch { deviation: dev });
    }
    if k == 2 {
        let (m, tau, n) = swap_check(&fl, &lenient, SWAP_SPOTS);
        if m > SWAP_TOL {
            return Err(SolveError::NonIntegrable { mismatch: m, tau });
        }
        checks.swap_mismatch = Some(m);
        checks.swap_checks = n;
    }
    let mut surface = HodographSurface {
        params: spec.params.clone(),
        dependent: spec.dependent.clone(),
        base_tau: spec.base_tau.clone(),
        base_u: spec.base_u.clone(),
        tau_min: spec.tau_min.clone(),
        tau_max: spec.tau_max.clone(),
        provenance: provenance(spec, SurfaceMethod::ClosedForm),
        checks,
        repr: Repr::Closed { f: f.to_vec(), value, jac },
    };
    // Tangency only where the flows reach, i.e. on the lattice's nodes.
    let reached: Vec<Vec<f64>> = match &lat {
        Some(lat) => (0..lat.nodes.len())
            .filter(|&i| lat.nodes[i].is_some())
            .step_by(7)
            .map(|flat| {
                let mut ix = vec![0; k];
                let mut r = flat;
                for a in (0..k).rev() {
                    ix[a] = r % lat.dims[a];
                    r /= lat.dims[a];
                }
                lat.tau(&ix)
            })
            .collect(),
        None => spot_taus(spec, 64, 0x7a9),
    };
    surface.checks.tangency_residual = tangency(&fl, &surface, &reached)?;
    if surface.checks.tangency_residual > SURFACE_TOL {
        return Err(SolveError::NotTangent { residual: surface.checks.tangency_residual });
    }
    Ok(surface)
}
