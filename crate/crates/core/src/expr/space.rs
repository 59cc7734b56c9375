use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Func;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpaceError {
    #[error("variable `{0}` is declared more than once")]
    Duplicate(String),
    #[error("`{0}` is not a valid variable name")]
    InvalidName(String),
    #[error("`{0}` is a reserved function name")]
    Reserved(String),
}

/// The variables an analysis works with. Indices into each list are
/// stable for the lifetime of the space.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VarSpace {
    pub independent: Vec<String>,
    pub dependent: Vec<String>,
    /// Wave parameters such as `tau1` or `s`.
    pub parameters: Vec<String>,
    /// Named numeric constants of a system (for instance `beta`).
    #[serde(default)]
    pub constants: Vec<String>,
}

pub fn valid_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl VarSpace {
    pub fn new<S: Into<String>>(
        independent: impl IntoIterator<Item = S>,
        dependent: impl IntoIterator<Item = S>,
        parameters: impl IntoIterator<Item = S>,
    ) -> Result<VarSpace, SpaceError> {
        let sp = VarSpace {
            independent: independent.into_iter().map(Into::into).collect(),
            dependent: dependent.into_iter().map(Into::into).collect(),
            parameters: parameters.into_iter().map(Into::into).collect(),
            constants: Vec::new(),
        };
        sp.validate()?;
        Ok(sp)
    }

    pub fn with_constants<S: Into<String>>(mut self, cs: impl IntoIterator<Item = S>) -> Result<VarSpace, SpaceError> {
        self.constants = cs.into_iter().map(Into::into).collect();
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), SpaceError> {
        let mut seen = std::collections::HashSet::new();
        for n in self.all() {
            if !valid_ident(n) {
                return Err(SpaceError::InvalidName(n.to_string()));
            }
            if Func::from_name(n).is_some() {
                return Err(SpaceError::Reserved(n.to_string()));
            }
            if !seen.insert(n) {
                return Err(SpaceError::Duplicate(n.to_string()));
            }
        }
        Ok(())
    }

    pub fn all(&self) -> impl Iterator<Item = &str> {
        self.independent
            .iter()
            .chain(&self.dependent)
            .chain(&self.parameters)
            .chain(&self.constants)
            .map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.all().any(|n| n == name)
    }

    pub fn p(&self) -> usize {
        self.independent.len()
    }

    pub fn q(&self) -> usize {
        self.dependent.len()
    }
}

/// A numeric assignment of (some of) the variables in a space.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl Point {
    pub fn new() -> Point {
        Point::default()
    }

    pub fn from_pairs<S: AsRef<str>>(pairs: impl IntoIterator<Item = (S, f64)>) -> Point {
        let mut p = Point::new();
        for (n, v) in pairs {
            p.set(n.as_ref(), v);
        }
        p
    }

    pub fn zip<S: AsRef<str>>(names: &[S], values: &[f64]) -> Point {
        Point::from_pairs(names.iter().zip(values).map(|(n, v)| (n.as_ref(), *v)))
    }

    pub fn with(mut self, name: &str, v: f64) -> Point {
        self.set(name, v);
        self
    }

    pub fn set(&mut self, name: &str, v: f64) {
        match self.names.iter().position(|n| n == name) {
            Some(i) => self.values[i] = v,
            None => {
                self.names.push(name.to_string());
                self.values.push(v);
            }
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    /// Values of `names` in that order; `None` if any is missing.
    pub fn values_of<S: AsRef<str>>(&self, names: &[S]) -> Option<Vec<f64>> {
        names.iter().map(|n| self.get(n.as_ref())).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.names.iter().map(String::as_str).zip(self.values.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}
