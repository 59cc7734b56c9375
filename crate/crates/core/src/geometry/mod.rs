//! Wave covectors, characteristic vectors and the geometric conditions for
//! superposing simple waves.

mod bracket;
mod conditions;
mod frame;
mod integrate;
mod kernel;
mod potential;
mod xfields;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse, DomainBox, EvalError, Expr, Node, Point, VarSpace, Witness, ZeroTest, ZeroTestError};
use crate::system::{QuasilinearSystem, SystemError, WaveSection};

pub use bracket::lie_bracket;
pub use conditions::{check_kwave_conditions, ConditionReport, LabeledVerdict};
pub use frame::{decompose_in_frame, BracketDecomposition};
pub use integrate::integrate;
pub use kernel::{kernel_elements, KernelBasis, KernelSampler};
pub use potential::{
    closedness, exterior_derivative, find_potential, wedge_with, LineIntegral, Potential, PotentialEval,
    PotentialMethod, PotentialResult,
};
pub use xfields::x_fields;

/// Smallest singular value a frame or covector stack must keep.
pub const INDEPENDENCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("the system is not properly determined ({m} equations, {q} unknowns)")]
    NotProperlyDetermined { m: usize, q: usize },
    #[error("the covector vanishes identically")]
    ZeroCovector,
    #[error("the symbol is invertible (det = {:.3e} at {:?}); λ is not characteristic", .witness.value, .witness.point)]
    EmptyKernel { witness: Witness },
    #[error("degenerate frame: smallest singular value {:.3e} at {:?}", .witness.value, .witness.point)]
    DegenerateFrame { witness: Witness },
    #[error("the {which} are not independent: smallest singular value {:.3e} at {:?}", .witness.value, .witness.point)]
    DependentElements { which: &'static str, witness: Witness },
    #[error("dλ∧λ does not vanish ({:.3e} at {:?})", .witness.value, .witness.point)]
    NotClosed { witness: Witness },
    #[error("no integrating factor in the candidate family makes λ exact")]
    NoIntegratingFactor,
    #[error("line integrals along two paths differ by {mismatch:.3e} at {point:?}")]
    PathDependent { mismatch: f64, point: Point },
    #[error("shape error: {0}")]
    Shape(String),
    #[error(transparent)]
    ZeroTest(#[from] ZeroTestError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Outcome of one sampled check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Fails { check: String, witness: Witness },
    Inconclusive { reason: String },
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn fails(&self) -> bool {
        matches!(self, Verdict::Fails { .. })
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Verdict::Fails { witness, .. } => Some(witness),
            _ => None,
        }
    }

    /// Holds only if all hold; the first failure (largest defect) wins,
    /// otherwise the first inconclusive one.
    pub fn combine(vs: impl IntoIterator<Item = Verdict>) -> Verdict {
        let mut worst: Option<Verdict> = None;
        let mut inconclusive = None;
        for v in vs {
            match &v {
                Verdict::Holds => {}
                Verdict::Fails { witness, .. } => {
                    let better = match &worst {
                        Some(Verdict::Fails { witness: w, .. }) => witness.value.abs() > w.value.abs(),
                        _ => true,
                    };
                    if better {
                        worst = Some(v);
                    }
                }
                Verdict::Inconclusive { .. } => {
                    inconclusive.get_or_insert(v);
                }
            }
        }
        worst.or(inconclusive).unwrap_or(Verdict::Holds)
    }
}

/// Zero-tests labelled expressions on shared samples and folds the result.
pub fn verdict_all(zt: &ZeroTest, checks: &[(String, Expr)], dom: &DomainBox) -> Verdict {
    if checks.is_empty() {
        return Verdict::Holds;
    }
    let es: Vec<Expr> = checks.iter().map(|(_, e)| e.clone()).collect();
    match zt.check_all(&es, dom) {
        Ok(vs) => Verdict::combine(vs.into_iter().zip(checks).map(|(v, (label, _))| match v.witness() {
            Some(w) => Verdict::Fails { check: label.clone(), witness: w.clone() },
            None => Verdict::Holds,
        })),
        Err(e) => Verdict::Inconclusive { reason: e.to_string() },
    }
}

/// A wave element: covector λ over x, vector γ over u, optional φ.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveElement {
    pub label: String,
    pub lambda: Vec<Expr>,
    pub gamma: Vec<Expr>,
    pub potential: Option<Expr>,
}

impl WaveElement {
    pub fn new(label: &str, lambda: Vec<Expr>, gamma: Vec<Expr>) -> WaveElement {
        WaveElement { label: label.to_string(), lambda, gamma, potential: None }
    }

    /// Parses a file section. A missing γ is left empty for
    /// [`kernel_elements`] to fill in.
    pub fn from_section(sec: &WaveSection, space: &VarSpace) -> Result<WaveElement, SystemError> {
        let p = |entry: String, s: &str| parse(s, space).map_err(|source| SystemError::Parse { entry, source });
        let lambda = sec
            .lambda
            .iter()
            .enumerate()
            .map(|(i, s)| p(format!("waves.{}.lambda[{i}]", sec.label), s))
            .collect::<Result<Vec<_>, _>>()?;
        let gamma = match &sec.gamma {
            Some(g) => g
                .iter()
                .enumerate()
                .map(|(i, s)| p(format!("waves.{}.gamma[{i}]", sec.label), s))
                .collect::<Result<Vec<_>, _>>()?,
            None => Vec::new(),
        };
        let potential = sec.potential.as_deref().map(|s| p(format!("waves.{}.potential", sec.label), s)).transpose()?;
        if lambda.len() != space.p() || !(gamma.is_empty() || gamma.len() == space.q()) {
            return Err(SystemError::Shape(format!("wave `{}` has the wrong number of components", sec.label)));
        }
        Ok(WaveElement { label: sec.label.clone(), lambda, gamma, potential })
    }

    pub fn to_section(&self) -> WaveSection {
        WaveSection {
            label: self.label.clone(),
            lambda: self.lambda.iter().map(ToString::to_string).collect(),
            gamma: Some(self.gamma.iter().map(ToString::to_string).collect()),
            potential: self.potential.as_ref().map(ToString::to_string),
        }
    }

    /// Copy with constants replaced by their values.
    pub fn bound(&self, sys: &QuasilinearSystem) -> WaveElement {
        WaveElement {
            label: self.label.clone(),
            lambda: self.lambda.iter().map(|e| sys.bind(e)).collect(),
            gamma: self.gamma.iter().map(|e| sys.bind(e)).collect(),
            potential: self.potential.as_ref().map(|e| sys.bind(e)),
        }
    }

    /// (Σ λᵢ Aⁱ) γ, which must vanish.
    pub fn wave_relation(&self, sys: &QuasilinearSystem) -> Vec<Expr> {
        sys.symbol(&self.lambda).mul_vec(&self.gamma).iter().map(|e| sys.bind(e)).collect()
    }

    pub fn wave_relation_verdict(&self, sys: &QuasilinearSystem, dom: &DomainBox, zt: &ZeroTest) -> Verdict {
        let checks: Vec<(String, Expr)> = self
            .wave_relation(sys)
            .into_iter()
            .enumerate()
            .map(|(r, e)| (format!("wave relation of {} row {r}", self.label), e))
            .collect();
        verdict_all(&zt.stream(&format!("wave/{}", self.label)), &checks, dom)
    }

    /// The same element with λ scaled by `s` and γ by 1/s.
    pub fn rescaled(&self, s: &Expr) -> WaveElement {
        WaveElement {
            label: self.label.clone(),
            lambda: self.lambda.iter().map(|l| l * s).collect(),
            gamma: self.gamma.iter().map(|g| g / s).collect(),
            potential: None,
        }
    }

    /// Checks λ = d_xφ for the attached potential.
    pub fn potential_verdict(&self, independent: &[String], dom: &DomainBox, zt: &ZeroTest) -> Verdict {
        let Some(phi) = &self.potential else {
            return Verdict::Inconclusive { reason: "no potential attached".into() };
        };
        let checks: Vec<(String, Expr)> = independent
            .iter()
            .zip(&self.lambda)
            .map(|(x, l)| (format!("dphi/d{x} - lambda_{x}"), phi.diff(x) - l))
            .collect();
        verdict_all(&zt.stream(&format!("potential/{}", self.label)), &checks, dom)
    }
}

/// Number of nodes satisfying `pred`.
pub(crate) fn count_nodes(e: &Expr, pred: &dyn Fn(&Node) -> bool) -> usize {
    let own = usize::from(pred(e.node()));
    own + match e.node() {
        Node::Num(_) | Node::Var(_) => 0,
        Node::Add(ts) | Node::Mul(ts) => ts.iter().map(|t| count_nodes(t, pred)).sum(),
        Node::Neg(a) | Node::Call(_, a) => count_nodes(a, pred),
        Node::Div(a, b) | Node::Pow(a, b) => count_nodes(a, pred) + count_nodes(b, pred),
    }
}

/// Evaluates `exprs` at up to `n` domain samples, returning the points with
/// their values.
pub(crate) fn sample(
    exprs: &[Expr],
    dom: &DomainBox,
    zt: &ZeroTest,
    n: usize,
) -> Result<(Vec<String>, Vec<(Vec<f64>, Vec<f64>)>), GeometryError> {
    let names: Vec<String> = dom.names().into_iter().map(String::from).collect();
    let progs = exprs
        .iter()
        .map(|e| {
            e.compile(&names).map_err(|err| match err {
                EvalError::Unassigned(v) => GeometryError::ZeroTest(ZeroTestError::Unassigned(v)),
                other => GeometryError::Eval(other),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let vals = zt.clone().with_trials(n).sample_values(&progs, dom)?;
    Ok((names, vals))
}

/// Rejects stacks of vectors (rows) whose smallest singular value drops
/// below [`INDEPENDENCE_TOL`] at some sample.
pub(crate) fn check_independent(
    rows: &[Vec<Expr>],
    dom: &DomainBox,
    zt: &ZeroTest,
) -> Result<Result<(), Witness>, GeometryError> {
    if rows.is_empty() {
        return Ok(Ok(()));
    }
    let k = rows.len();
    let n = rows[0].len();
    let flat: Vec<Expr> = rows.iter().flatten().cloned().collect();
    let (names, vals) = sample(&flat, dom, zt, zt.trials)?;
    let mut worst: Option<(Vec<f64>, f64)> = None;
    for (x, v) in vals {
        let m = nalgebra::DMatrix::from_row_slice(k, n, &v);
        let s = if k > n { 0.0 } else { crate::linalg::sigma_min(&m) };
        if worst.as_ref().is_none_or(|(_, w)| s < *w) {
            worst = Some((x, s));
        }
    }
    Ok(match worst {
        Some((x, s)) if s <= INDEPENDENCE_TOL => Err(Witness { point: Point::zip(&names, &x), value: s }),
        _ => Ok(()),
    })
}
