use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("malformed grid entry `{0}` (expected name=lo:hi:n or name=value)")]
    Syntax(String),
    #[error("empty grid")]
    Empty,
    #[error("grid variables {got:?} do not match the independent variables {want:?}")]
    Variables { got: Vec<String>, want: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridAxis {
    pub fn values(&self) -> Vec<f64> {
        match self.n {
            0 => Vec::new(),
            1 => vec![self.lo],
            n => (0..n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (n - 1) as f64).collect(),
        }
    }
}

/// Points in the independent variables, grouped into rows. Rows are the
/// lines along the last axis of a tensor grid; scattered point lists
/// have one point per row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    pub names: Vec<String>,
    pub points: Vec<Vec<f64>>,
    /// Axis lengths for tensor grids, empty for scattered points.
    pub shape: Vec<usize>,
}

impl Grid {
    /// Tensor grid, last axis fastest.
    pub fn tensor(axes: &[GridAxis]) -> Result<Grid, GridError> {
        if axes.is_empty() || axes.iter().any(|a| a.n == 0) {
            return Err(GridError::Empty);
        }
        let vals: Vec<Vec<f64>> = axes.iter().map(GridAxis::values).collect();
        let mut points = vec![Vec::new()];
        for v in &vals {
            points = points.into_iter().flat_map(|p| v.iter().map(move |x| [p.as_slice(), &[*x]].concat())).collect();
        }
        Ok(Grid {
            names: axes.iter().map(|a| a.name.clone()).collect(),
            points,
            shape: axes.iter().map(|a| a.n).collect(),
        })
    }

    pub fn scattered(names: Vec<String>, points: Vec<Vec<f64>>) -> Result<Grid, GridError> {
        if points.is_empty() {
            return Err(GridError::Empty);
        }
        if points.iter().any(|p| p.len() != names.len()) {
            return Err(GridError::Syntax("point of the wrong length".into()));
        }
        Ok(Grid { names, points, shape: Vec::new() })
    }

    /// Parses `t=1:3:20, x=1:3:20, y=0.5`; a single value pins an axis.
    pub fn parse_spec(spec: &str) -> Result<Vec<GridAxis>, GridError> {
        let mut axes = Vec::new();
        for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, rng) = part.split_once('=').ok_or_else(|| GridError::Syntax(part.into()))?;
            let fields: Vec<&str> = rng.split(':').map(str::trim).collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| GridError::Syntax(part.into()));
            let axis = match fields[..] {
                [v] => {
                    let v = num(v)?;
                    GridAxis { name: name.trim().into(), lo: v, hi: v, n: 1 }
                }
                [lo, hi, n] => GridAxis {
                    name: name.trim().into(),
                    lo: num(lo)?,
                    hi: num(hi)?,
                    n: n.parse().map_err(|_| GridError::Syntax(part.into()))?,
                },
                _ => return Err(GridError::Syntax(part.into())),
            };
            if !(axis.lo <= axis.hi) {
                return Err(GridError::Syntax(part.into()));
            }
            axes.push(axis);
        }
        Ok(axes)
    }

    /// Reorders parsed axes to `independent`; every variable needs an axis.
    pub fn from_spec(spec: &str, independent: &[String]) -> Result<Grid, GridError> {
        let axes = Grid::parse_spec(spec)?;
        if axes.is_empty() || axes.iter().any(|a| a.n == 0) {
            return Err(GridError::Empty);
        }
        let mismatch = || GridError::Variables {
            got: axes.iter().map(|a| a.name.clone()).collect(),
            want: independent.to_vec(),
        };
        if axes.len() != independent.len() {
            return Err(mismatch());
        }
        let ordered = independent
            .iter()
            .map(|n| axes.iter().find(|a| &a.name == n).cloned().ok_or_else(mismatch))
            .collect::<Result<Vec<_>, _>>()?;
        Grid::tensor(&ordered)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn row_len(&self) -> usize {
        self.shape.last().copied().unwrap_or(1)
    }
}
