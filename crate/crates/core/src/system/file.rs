//! The TOML system-definition format.
//!
//! ```toml
//! independent = ["t", "x"]
//! dependent = ["a", "c"]
//! A = [
//!   [["0", "0"], ["0", "-1"]],            # coefficient of ∂/∂t
//!   [["0", "1 + beta^2*x^2"], ["1", "0"]], # coefficient of ∂/∂x
//! ]
//! b = ["a", "0"]
//!
//! [parameters]
//! beta = 0.5
//! ```
//!
//! Optional sections: `[domain]` (name = [lo, hi]), `[homogenize]`,
//! `[[waves]]`, `[hodograph]` and `[solve]`. Expression strings are kept
//! verbatim, so reading and writing a file reproduces them bit for bit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ExprMatrix, QuasilinearSystem, SystemError};
use crate::expr::{parse, DomainBox, Expr, VarSpace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FileError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{0}")]
    Serialize(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub independent: Vec<String>,
    pub dependent: Vec<String>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<Vec<String>>>,
    pub b: Vec<String>,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub domain: BTreeMap<String, [f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homogenize: Option<HomogenizeSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub waves: Vec<WaveSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hodograph: Option<HodographSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomogenizeSection {
    /// Name of the added independent variable.
    pub new_variable: Option<String>,
}

/// A wave-element ansatz: λ over the independent variables, optionally γ
/// over the dependent ones and a potential φ with λ = d_xφ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveSection {
    pub label: String,
    pub lambda: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<String>,
}

/// Hodograph surface data: ∂f/∂τ^α = Σ μ^{α'}_α γ_{α'}(f), f(base_tau) = base_u.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HodographSection {
    pub params: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<Vec<String>>>,
    pub base_tau: Vec<f64>,
    pub base_u: Vec<f64>,
    /// Closed-form surface, validated against the numerical flows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<String>>,
    pub tau_min: Vec<f64>,
    pub tau_max: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    /// Dependent values whose potentials give the cold-start τ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_u: Option<Vec<f64>>,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

impl SystemFile {
    pub fn from_toml(text: &str) -> Result<SystemFile, FileError> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
            FileError::Syntax { line, column, message: e.message().to_string() }
        })
    }

    pub fn to_toml(&self) -> Result<String, FileError> {
        toml::to_string(self).map_err(|e| FileError::Serialize(e.to_string()))
    }

    pub fn space(&self) -> Result<VarSpace, SystemError> {
        Ok(VarSpace::new(self.independent.clone(), self.dependent.clone(), Vec::<String>::new())?
            .with_constants(self.parameters.keys().cloned())?)
    }

    /// Parses every expression into a system.
    pub fn to_system(&self) -> Result<QuasilinearSystem, SystemError> {
        let space = self.space()?;
        let p = |entry: String, s: &str| parse(s, &space).map_err(|source| SystemError::Parse { entry, source });
        let mut mats = Vec::new();
        for (i, m) in self.a.iter().enumerate() {
            let name = self.independent.get(i).cloned().unwrap_or_else(|| format!("#{i}"));
            let mut rows = Vec::new();
            for (r, row) in m.iter().enumerate() {
                if row.len() != self.dependent.len() {
                    return Err(SystemError::Shape(format!(
                        "A[{name}] row {r} has {} entries for {} dependent variables",
                        row.len(),
                        self.dependent.len()
                    )));
                }
                rows.push(
                    row.iter()
                        .enumerate()
                        .map(|(c, s)| p(format!("A[{name}][{r},{c}]"), s))
                        .collect::<Result<Vec<Expr>, _>>()?,
                );
            }
            if rows.len() != self.b.len() {
                return Err(SystemError::Shape(format!(
                    "A[{name}] has {} rows but b has {} entries",
                    rows.len(),
                    self.b.len()
                )));
            }
            mats.push(ExprMatrix::from_rows_or_empty(rows, self.dependent.len()));
        }
        let b = self.b.iter().enumerate().map(|(r, s)| p(format!("b[{r}]"), s)).collect::<Result<Vec<_>, _>>()?;
        let constants = self.parameters.iter().map(|(k, v)| (k.clone(), *v)).collect();
        QuasilinearSystem::new(space, constants, mats, b)
    }

    /// Builds a file from a system by printing its expressions.
    pub fn from_system(sys: &QuasilinearSystem) -> SystemFile {
        SystemFile {
            independent: sys.independent().to_vec(),
            dependent: sys.dependent().to_vec(),
            a: sys.a().iter().map(ExprMatrix::to_strings).collect(),
            b: sys.b().iter().map(ToString::to_string).collect(),
            parameters: sys.constants().iter().cloned().collect(),
            domain: BTreeMap::new(),
            homogenize: None,
            waves: Vec::new(),
            hodograph: None,
            solve: None,
        }
    }

    pub fn domain_box(&self) -> DomainBox {
        let mut d = DomainBox::new();
        for (k, [lo, hi]) in &self.domain {
            d.set(k, *lo, *hi);
        }
        d
    }

    pub fn set_domain(&mut self, d: &DomainBox) {
        self.domain = d.ranges.iter().map(|r| (r.name.clone(), [r.lo, r.hi])).collect();
    }
}
