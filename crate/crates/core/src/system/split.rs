//! The regular-stratum chart on simple integral elements: given λ and the
//! trailing components γ₂, solve `(A₁λ)γ₁ = b − (A₂λ)γ₂` for the leading
//! `q_h` components.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use super::{CompiledMatrix, QuasilinearSystem, SystemError};
use crate::expr::{Compiled, EvalError, Expr};
use crate::linalg;

/// Blocks with a larger 2-norm condition number count as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;
/// Allowed mismatch of an overdetermined block.
pub const CONSISTENCY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplitError {
    #[error("the {rows}×{cols} leading block has more unknowns than equations")]
    BlockShape { rows: usize, cols: usize },
    #[error("the leading block is singular here (condition number {cond:.3e})")]
    SingularBlock { cond: f64 },
    #[error("the overdetermined block is inconsistent here (residual {residual:.3e})")]
    Inconsistent { residual: f64 },
    #[error("split index {q_h} is outside 1..={q}")]
    BadPartition { q_h: usize, q: usize },
    #[error("expected {expected} trailing components, got {got}")]
    Arity { expected: usize, got: usize },
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("evaluating the symbol: {0}")]
    Eval(#[from] EvalError),
}

/// Numeric map (γ₂, x, u) ↦ γ₁ for a fixed covector λ.
#[derive(Debug, Clone)]
pub struct SimpleElementMap {
    q_h: usize,
    q: usize,
    symbol: CompiledMatrix,
    b: Vec<Compiled>,
}

impl QuasilinearSystem {
    /// Splits γ = (γ₁, γ₂) with γ₁ of length `q_h`. The m×q_h block must be
    /// square or tall; tall blocks are solved in the least-squares sense and
    /// accepted only when consistent.
    pub fn split_simple_element(&self, lambda: &[Expr], q_h: usize) -> Result<SimpleElementMap, SplitError> {
        let q = self.q();
        if q_h == 0 || q_h > q {
            return Err(SplitError::BadPartition { q_h, q });
        }
        if self.m() < q_h {
            return Err(SplitError::BlockShape { rows: self.m(), cols: q_h });
        }
        let slots = self.slots();
        let lambda: Vec<Expr> = lambda.iter().map(|e| self.bind(e)).collect();
        let symbol = self.instantiate().symbol(&lambda).compile(&slots)?;
        let b = self.b.iter().map(|e| self.bind(e).compile(&slots)).collect::<Result<_, _>>()?;
        Ok(SimpleElementMap { q_h, q, symbol, b })
    }
}

impl SimpleElementMap {
    fn eval(&self, x: &[f64], u: &[f64]) -> Result<(DMatrix<f64>, DVector<f64>), SplitError> {
        let vals: Vec<f64> = x.iter().chain(u).copied().collect();
        let s = self.symbol.eval(&vals).map_err(|(_, e)| SplitError::Eval(e))?;
        let b = self.b.iter().map(|c| c.eval(&vals)).collect::<Result<Vec<f64>, _>>()?;
        Ok((s, DVector::from_vec(b)))
    }

    /// γ₁ at (x, u) for the given γ₂.
    pub fn gamma1(&self, gamma2: &[f64], x: &[f64], u: &[f64]) -> Result<Vec<f64>, SplitError> {
        let expected = self.q - self.q_h;
        if gamma2.len() != expected {
            return Err(SplitError::Arity { expected, got: gamma2.len() });
        }
        let (s, b) = self.eval(x, u)?;
        let m = s.nrows();
        let a1 = s.columns(0, self.q_h).into_owned();
        let a2 = s.columns(self.q_h, expected).into_owned();
        let rhs = b - a2 * DVector::from_column_slice(gamma2);
        let cond = linalg::condition_number(&a1);
        if !(cond <= SINGULAR_CONDITION) {
            return Err(SplitError::SingularBlock { cond });
        }
        let g1 = if m == self.q_h {
            a1.clone().lu().solve(&rhs).ok_or(SplitError::SingularBlock { cond })?
        } else {
            let g = linalg::lstsq(&a1, &rhs).ok_or(SplitError::SingularBlock { cond })?;
            let residual = (&a1 * &g - &rhs).amax();
            if residual > CONSISTENCY_TOL * (1.0 + rhs.amax()) {
                return Err(SplitError::Inconsistent { residual });
            }
            g
        };
        Ok(g1.iter().copied().collect())
    }

    /// The full γ = (γ₁, γ₂).
    pub fn assemble(&self, gamma2: &[f64], x: &[f64], u: &[f64]) -> Result<Vec<f64>, SplitError> {
        let mut g = self.gamma1(gamma2, x, u)?;
        g.extend_from_slice(gamma2);
        Ok(g)
    }

    /// (Σ λᵢAⁱ)γ − b at (x, u).
    pub fn wave_residual(&self, gamma: &[f64], x: &[f64], u: &[f64]) -> Result<DVector<f64>, SplitError> {
        let (s, b) = self.eval(x, u)?;
        Ok(s * DVector::from_column_slice(gamma) - b)
    }
}
