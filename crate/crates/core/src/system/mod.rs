//! First-order quasilinear systems `Σᵢ Aⁱ(x,u) ∂u/∂xⁱ = b(x,u)`.

mod file;
mod homogenize;
mod matrix;
mod split;

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::expr::{Compiled, EvalError, Expr, ParseError, SpaceError, VarSpace};

pub use file::{FileError, HodographSection, HomogenizeSection, SolveSection, SystemFile, WaveSection};
pub use homogenize::{HomogenizeError, HomogenizeOptions, Homogenization, ReverseCheck};
pub use matrix::{CompiledMatrix, ExprMatrix};
pub use split::{SimpleElementMap, SplitError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("{entry}: {source}")]
    Parse { entry: String, source: ParseError },
    #[error("{entry} references undeclared variable `{name}`")]
    UnknownVariable { entry: String, name: String },
    #[error("evaluating {entry}: {source}")]
    Eval { entry: String, source: EvalError },
}

/// Value, first derivatives and location of a candidate solution at one
/// point. `du` is q×p with `du[(β, i)] = ∂u^β/∂xⁱ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub du: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuasilinearSystem {
    space: VarSpace,
    constants: Vec<(String, f64)>,
    a: Vec<ExprMatrix>,
    b: Vec<Expr>,
}

impl QuasilinearSystem {
    /// `a` holds one m×q matrix per independent variable, `b` has length m.
    /// The names of `constants` must match `space.constants`.
    pub fn new(
        space: VarSpace,
        constants: Vec<(String, f64)>,
        a: Vec<ExprMatrix>,
        b: Vec<Expr>,
    ) -> Result<QuasilinearSystem, SystemError> {
        space.validate()?;
        let (p, q, m) = (space.p(), space.q(), b.len());
        if a.len() != p {
            return Err(SystemError::Shape(format!("{} coefficient matrices for {p} independent variables", a.len())));
        }
        for (i, ai) in a.iter().enumerate() {
            if ai.shape() != (m, q) {
                return Err(SystemError::Shape(format!(
                    "A[{}] is {}×{}, expected {m}×{q}",
                    space.independent[i],
                    ai.rows(),
                    ai.cols()
                )));
            }
        }
        let cnames: Vec<&str> = constants.iter().map(|(n, _)| n.as_str()).collect();
        if cnames != space.constants.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(SystemError::Shape("constant values do not match the declared constants".into()));
        }
        let sys = QuasilinearSystem { space, constants, a, b };
        for (label, e) in sys.labelled_entries() {
            if let Some(name) = e.vars().into_iter().find(|v| !sys.space.contains(v)) {
                return Err(SystemError::UnknownVariable { entry: label, name });
            }
        }
        Ok(sys)
    }

    fn labelled_entries(&self) -> Vec<(String, &Expr)> {
        let mut out = Vec::new();
        for (i, ai) in self.a.iter().enumerate() {
            for r in 0..ai.rows() {
                for c in 0..ai.cols() {
                    out.push((format!("A[{}][{r},{c}]", self.space.independent[i]), ai.get(r, c)));
                }
            }
        }
        for (r, e) in self.b.iter().enumerate() {
            out.push((format!("b[{r}]"), e));
        }
        out
    }

    pub fn space(&self) -> &VarSpace {
        &self.space
    }

    pub fn independent(&self) -> &[String] {
        &self.space.independent
    }

    pub fn dependent(&self) -> &[String] {
        &self.space.dependent
    }

    pub fn constants(&self) -> &[(String, f64)] {
        &self.constants
    }

    pub fn p(&self) -> usize {
        self.space.p()
    }

    pub fn q(&self) -> usize {
        self.space.q()
    }

    /// Number of equations.
    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn properly_determined(&self) -> bool {
        self.m() == self.q()
    }

    pub fn a(&self) -> &[ExprMatrix] {
        &self.a
    }

    pub fn b(&self) -> &[Expr] {
        &self.b
    }

    /// Structurally zero source.
    pub fn is_homogeneous(&self) -> bool {
        self.b.iter().all(Expr::is_zero_const)
    }

    /// Independent variables whose coefficient matrix is structurally the
    /// identity (the evolutionary form).
    pub fn evolutionary_in(&self) -> Vec<String> {
        self.a
            .iter()
            .zip(&self.space.independent)
            .filter(|(ai, _)| ai.is_structural_delta() && ai.rows() == ai.cols())
            .map(|(_, n)| n.clone())
            .collect()
    }

    fn constant_map(&self) -> HashMap<String, Expr> {
        self.constants.iter().map(|(n, v)| (n.clone(), Expr::float(*v))).collect()
    }

    /// Substitutes the numeric value of every constant.
    pub fn bind(&self, e: &Expr) -> Expr {
        if self.constants.is_empty() {
            e.clone()
        } else {
            e.subst_many(&self.constant_map())
        }
    }

    /// Copy with every constant replaced by its value.
    pub fn instantiate(&self) -> QuasilinearSystem {
        let map = self.constant_map();
        let mut space = self.space.clone();
        space.constants.clear();
        QuasilinearSystem {
            space,
            constants: Vec::new(),
            a: self.a.iter().map(|m| m.map(|e| e.subst_many(&map))).collect(),
            b: self.b.iter().map(|e| e.subst_many(&map)).collect(),
        }
    }

    /// The symbol Σᵢ λᵢ Aⁱ for a covector λ.
    pub fn symbol(&self, lambda: &[Expr]) -> ExprMatrix {
        assert_eq!(lambda.len(), self.p(), "covector length must equal p");
        ExprMatrix::lincomb(lambda, &self.a)
    }

    /// Slot order used by compiled evaluators: independent then dependent.
    pub fn slots(&self) -> Vec<String> {
        self.space.independent.iter().chain(&self.space.dependent).cloned().collect()
    }

    /// Compiles all coefficients with constants bound.
    pub fn evaluator(&self) -> Result<SystemEval, SystemError> {
        let slots = self.slots();
        let compile = |label: String, e: &Expr| {
            self.bind(e).compile(&slots).map_err(|source| match source {
                EvalError::Unassigned(name) => SystemError::UnknownVariable { entry: label.clone(), name },
                source => SystemError::Eval { entry: label.clone(), source },
            })
        };
        let mut a = Vec::new();
        for (i, ai) in self.a.iter().enumerate() {
            let mut cm = Vec::new();
            for r in 0..ai.rows() {
                for c in 0..ai.cols() {
                    cm.push(compile(format!("A[{}][{r},{c}]", self.space.independent[i]), ai.get(r, c))?);
                }
            }
            a.push(cm);
        }
        let b = self.b.iter().enumerate().map(|(r, e)| compile(format!("b[{r}]"), e)).collect::<Result<_, _>>()?;
        Ok(SystemEval { p: self.p(), q: self.q(), m: self.m(), names: self.space.independent.clone(), a, b })
    }

    /// Σᵢ Aⁱ(x,u) uᵢ − b(x,u) at one jet.
    pub fn residual(&self, jet: &Jet) -> Result<DVector<f64>, SystemError> {
        self.evaluator()?.residual(jet)
    }
}

/// Compiled coefficients of a system for repeated numeric evaluation.
#[derive(Debug, Clone)]
pub struct SystemEval {
    p: usize,
    q: usize,
    m: usize,
    names: Vec<String>,
    a: Vec<Vec<Compiled>>,
    b: Vec<Compiled>,
}

impl SystemEval {
    fn vals(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.p, "wrong number of independent values");
        assert_eq!(u.len(), self.q, "wrong number of dependent values");
        x.iter().chain(u).copied().collect()
    }

    /// Numeric Aⁱ matrices and b at (x, u).
    pub fn coefficients(&self, x: &[f64], u: &[f64]) -> Result<(Vec<DMatrix<f64>>, DVector<f64>), SystemError> {
        let vals = self.vals(x, u);
        let mut st = Vec::new();
        let mut mats = Vec::with_capacity(self.p);
        for (i, cm) in self.a.iter().enumerate() {
            let mut m = DMatrix::zeros(self.m, self.q);
            for r in 0..self.m {
                for c in 0..self.q {
                    m[(r, c)] = cm[r * self.q + c].eval_in(&vals, &mut st).map_err(|source| SystemError::Eval {
                        entry: format!("A[{}][{r},{c}]", self.names[i]),
                        source,
                    })?;
                }
            }
            mats.push(m);
        }
        let mut b = DVector::zeros(self.m);
        for r in 0..self.m {
            b[r] = self.b[r]
                .eval_in(&vals, &mut st)
                .map_err(|source| SystemError::Eval { entry: format!("b[{r}]"), source })?;
        }
        Ok((mats, b))
    }

    pub fn residual(&self, jet: &Jet) -> Result<DVector<f64>, SystemError> {
        let (mats, b) = self.coefficients(&jet.x, &jet.u)?;
        let mut r = -b;
        for (i, ai) in mats.iter().enumerate() {
            r += ai * jet.du.column(i);
        }
        Ok(r)
    }

    /// Largest absolute coefficient at (x, u), used to scale tolerances.
    pub fn coefficient_scale(&self, x: &[f64], u: &[f64]) -> Result<f64, SystemError> {
        let (mats, b) = self.coefficients(x, u)?;
        Ok(mats.iter().map(|m| m.amax()).fold(b.amax(), f64::max))
    }

    /// Least-norm correction of `du` so that the jet solves the system at
    /// (x, u). Used to manufacture solution jets for transport tests.
    pub fn project_jet(&self, jet: &Jet) -> Result<Jet, SystemError> {
        let (mats, _) = self.coefficients(&jet.x, &jet.u)?;
        let r = self.residual(jet)?;
        // The map du ↦ Σ Aⁱ du[:, i] as an m × (q p) matrix on column-major du.
        let mut l = DMatrix::zeros(self.m, self.q * self.p);
        for (i, ai) in mats.iter().enumerate() {
            for beta in 0..self.q {
                for row in 0..self.m {
                    l[(row, i * self.q + beta)] = ai[(row, beta)];
                }
            }
        }
        let corr = crate::linalg::lstsq(&l, &r).ok_or_else(|| SystemError::Shape("singular projection".into()))?;
        let mut du = jet.du.clone();
        for i in 0..self.p {
            for beta in 0..self.q {
                du[(beta, i)] -= corr[i * self.q + beta];
            }
        }
        Ok(Jet { x: jet.x.clone(), u: jet.u.clone(), du })
    }
}
