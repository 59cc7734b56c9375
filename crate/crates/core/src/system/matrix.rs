use nalgebra::DMatrix;

use crate::expr::{Compiled, EvalError, Expr};

/// Row-major matrix of expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Expr>,
}

impl ExprMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Expr>) -> ExprMatrix {
        assert_eq!(data.len(), rows * cols, "matrix data has the wrong length");
        ExprMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<Expr>>) -> ExprMatrix {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        ExprMatrix::new(r, c, rows.into_iter().flatten().collect())
    }

    /// Like `from_rows`, but keeps the column count when there are no rows.
    pub fn from_rows_or_empty(rows: Vec<Vec<Expr>>, cols: usize) -> ExprMatrix {
        if rows.is_empty() {
            ExprMatrix::zeros(0, cols)
        } else {
            ExprMatrix::from_rows(rows)
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> ExprMatrix {
        ExprMatrix::new(rows, cols, vec![Expr::zero(); rows * cols])
    }

    /// Ones on the main diagonal, also for rectangular shapes.
    pub fn delta(rows: usize, cols: usize) -> ExprMatrix {
        let mut m = ExprMatrix::zeros(rows, cols);
        for i in 0..rows.min(cols) {
            m.set(i, i, Expr::one());
        }
        m
    }

    pub fn identity(n: usize) -> ExprMatrix {
        ExprMatrix::delta(n, n)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, r: usize, c: usize) -> &Expr {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, e: Expr) {
        self.data[r * self.cols + c] = e;
    }

    pub fn row(&self, r: usize) -> &[Expr] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<Expr> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn entries(&self) -> &[Expr] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> ExprMatrix {
        ExprMatrix::new(self.rows, self.cols, self.data.iter().map(f).collect())
    }

    pub fn transpose(&self) -> ExprMatrix {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self.get(r, c).clone());
            }
        }
        ExprMatrix::new(self.cols, self.rows, data)
    }

    pub fn mul(&self, o: &ExprMatrix) -> ExprMatrix {
        assert_eq!(self.cols, o.rows, "shape mismatch in product");
        let mut data = Vec::with_capacity(self.rows * o.cols);
        for r in 0..self.rows {
            for c in 0..o.cols {
                data.push(Expr::add_all((0..self.cols).map(|k| self.get(r, k) * o.get(k, c))));
            }
        }
        ExprMatrix::new(self.rows, o.cols, data)
    }

    pub fn mul_vec(&self, v: &[Expr]) -> Vec<Expr> {
        assert_eq!(self.cols, v.len(), "shape mismatch in product");
        (0..self.rows).map(|r| Expr::add_all(self.row(r).iter().zip(v).map(|(a, b)| a * b))).collect()
    }

    /// Σ cᵢ Mᵢ over matrices of equal shape.
    pub fn lincomb(coeffs: &[Expr], mats: &[ExprMatrix]) -> ExprMatrix {
        assert_eq!(coeffs.len(), mats.len());
        let (r, c) = mats.first().map_or((0, 0), ExprMatrix::shape);
        let data = (0..r * c).map(|k| Expr::add_all(coeffs.iter().zip(mats).map(|(a, m)| a * &m.data[k]))).collect();
        ExprMatrix::new(r, c, data)
    }

    fn minor(&self, skip_r: usize, skip_c: usize) -> ExprMatrix {
        let mut data = Vec::new();
        for r in (0..self.rows).filter(|&r| r != skip_r) {
            for c in (0..self.cols).filter(|&c| c != skip_c) {
                data.push(self.get(r, c).clone());
            }
        }
        ExprMatrix::new(self.rows - 1, self.cols - 1, data)
    }

    /// Determinant by cofactor expansion; intended for small matrices.
    pub fn det(&self) -> Expr {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        match self.rows {
            0 => Expr::one(),
            1 => self.get(0, 0).clone(),
            2 => self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(1, 0),
            n => Expr::add_all((0..n).filter(|&c| !self.get(0, c).is_zero_const()).map(|c| {
                let t = self.get(0, c) * &self.minor(0, c).det();
                if c % 2 == 0 {
                    t
                } else {
                    t.neg()
                }
            })),
        }
    }

    /// Classical adjoint, so that `M·adj(M) = det(M)·I`.
    pub fn adjugate(&self) -> ExprMatrix {
        assert_eq!(self.rows, self.cols, "adjugate of a non-square matrix");
        let n = self.rows;
        if n == 1 {
            return ExprMatrix::identity(1);
        }
        let mut out = ExprMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                let m = self.minor(r, c).det();
                out.set(c, r, if (r + c) % 2 == 0 { m } else { m.neg() });
            }
        }
        out
    }

    /// True when every entry is structurally the corresponding entry of δ.
    pub fn is_structural_delta(&self) -> bool {
        (0..self.rows).all(|r| {
            (0..self.cols).all(|c| {
                let e = self.get(r, c);
                if r == c {
                    e.is_one_const()
                } else {
                    e.is_zero_const()
                }
            })
        })
    }

    pub fn to_strings(&self) -> Vec<Vec<String>> {
        (0..self.rows).map(|r| self.row(r).iter().map(ToString::to_string).collect()).collect()
    }

    pub fn compile<S: AsRef<str>>(&self, slots: &[S]) -> Result<CompiledMatrix, EvalError> {
        Ok(CompiledMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|e| e.compile(slots)).collect::<Result<_, _>>()?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct CompiledMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Compiled>,
}

impl CompiledMatrix {
    /// Evaluates every entry; on failure reports the (row, col) at fault.
    pub fn eval(&self, vals: &[f64]) -> Result<DMatrix<f64>, ((usize, usize), EvalError)> {
        let mut st = Vec::new();
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(r, c)] = self.data[r * self.cols + c].eval_in(vals, &mut st).map_err(|e| ((r, c), e))?;
            }
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_unchecked as p, DomainBox, ZeroTest};

    fn m(rows: &[&[&str]]) -> ExprMatrix {
        ExprMatrix::from_rows(rows.iter().map(|r| r.iter().map(|s| p(s).unwrap()).collect()).collect())
    }

    #[test]
    fn adjugate_identity() {
        let a = m(&[&["x", "y", "1"], &["2", "x*y", "0"], &["y", "3", "x"]]);
        let prod = a.mul(&a.adjugate());
        let det = a.det();
        let dom = DomainBox::new().with("x", -2.0, 2.0).with("y", -2.0, 2.0);
        for r in 0..3 {
            for c in 0..3 {
                let want = if r == c { det.clone() } else { Expr::zero() };
                let diff = prod.get(r, c) - &want;
                assert!(ZeroTest::default().check(&diff, &dom).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn delta_detection() {
        assert!(ExprMatrix::identity(3).is_structural_delta());
        assert!(ExprMatrix::delta(2, 3).is_structural_delta());
        assert!(!m(&[&["1", "x"], &["0", "1"]]).is_structural_delta());
    }
}
