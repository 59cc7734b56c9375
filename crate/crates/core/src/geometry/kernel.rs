use nalgebra::DVector;

use super::{count_nodes, sample, GeometryError};
use crate::expr::{DomainBox, EvalError, Expr, Node, Point, Witness, ZeroTest};
use crate::linalg;
use crate::system::{CompiledMatrix, QuasilinearSystem};

/// Relative singular-value cut for numeric kernels.
const KERNEL_REL_TOL: f64 = 1e-9;

/// Basis of ker(Σ λᵢAⁱ).
#[derive(Debug, Clone)]
pub enum KernelBasis {
    /// Closed-form kernel vectors.
    Symbolic(Vec<Vec<Expr>>),
    /// Pointwise SVD kernel, for large q or kernels of dimension > 1.
    Numeric(KernelSampler),
}

#[derive(Debug, Clone)]
pub struct KernelSampler {
    symbol: CompiledMatrix,
}

impl KernelSampler {
    /// Orthonormal kernel basis at (x, u).
    pub fn at(&self, x: &[f64], u: &[f64]) -> Result<Vec<DVector<f64>>, EvalError> {
        let vals: Vec<f64> = x.iter().chain(u).copied().collect();
        let m = self.symbol.eval(&vals).map_err(|(_, e)| e)?;
        Ok(linalg::null_space(&m, KERNEL_REL_TOL))
    }
}

/// Characteristic vectors for the covector `lambda`.
///
/// For q ≤ 3 a nonzero adjugate column of the symbol is a kernel vector
/// wherever the symbol has corank one. Otherwise, or when the adjugate
/// vanishes, a numeric sampler is returned.
pub fn kernel_elements(
    sys: &QuasilinearSystem,
    lambda: &[Expr],
    dom: &DomainBox,
    zt: &ZeroTest,
) -> Result<KernelBasis, GeometryError> {
    if !sys.properly_determined() {
        return Err(GeometryError::NotProperlyDetermined { m: sys.m(), q: sys.q() });
    }
    if lambda.len() != sys.p() {
        return Err(GeometryError::Shape(format!("covector has {} components, expected {}", lambda.len(), sys.p())));
    }
    let inst = sys.instantiate();
    let lambda: Vec<Expr> = lambda.iter().map(|e| sys.bind(e)).collect();
    let zt = zt.stream("kernel");
    if zt.check_all(&lambda, dom)?.iter().all(|v| v.is_zero()) {
        return Err(GeometryError::ZeroCovector);
    }
    let symbol = inst.symbol(&lambda);
    let q = sys.q();

    if q <= 3 {
        let det = symbol.det();
        if let Some(w) = zt.check(&det, dom)?.witness() {
            return Err(GeometryError::EmptyKernel { witness: w.clone() });
        }
        let adj = symbol.adjugate();
        let mut cols: Vec<Vec<Expr>> = Vec::new();
        for c in 0..q {
            let col = adj.col(c);
            if zt.check_all(&col, dom)?.iter().any(|v| !v.is_zero()) {
                cols.push(col);
            }
        }
        let divs = |v: &Vec<Expr>| v.iter().map(|e| count_nodes(e, &|n| matches!(n, Node::Div(..)))).sum::<usize>();
        let size = |v: &Vec<Expr>| v.iter().map(Expr::size).sum::<usize>();
        if let Some(best) = cols.into_iter().min_by_key(|v| (divs(v), size(v))) {
            return Ok(KernelBasis::Symbolic(vec![best]));
        }
    } else {
        // Generic invertibility shows up as a uniformly positive σ_min.
        let (names, vals) = sample(symbol.entries(), dom, &zt, zt.trials)?;
        let mut smallest: Option<(Vec<f64>, f64)> = None;
        for (x, v) in vals {
            let m = nalgebra::DMatrix::from_row_slice(q, q, &v);
            let s = linalg::sigma_min(&m) / m.norm().max(f64::MIN_POSITIVE);
            if smallest.as_ref().is_none_or(|(_, b)| s < *b) {
                smallest = Some((x, s));
            }
        }
        if let Some((x, s)) = smallest {
            if s > KERNEL_REL_TOL {
                return Err(GeometryError::EmptyKernel { witness: Witness { point: Point::zip(&names, &x), value: s } });
            }
        }
    }
    Ok(KernelBasis::Numeric(KernelSampler { symbol: symbol.compile(&sys.slots())? }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::fixtures;

    #[test]
    fn example2_kernel_is_spanned_by_gamma_plus() {
        let sys = fixtures::system("example2").unwrap();
        let dom = fixtures::domain("example2").unwrap();
        let lam: Vec<Expr> = ["1", "0", "-1/(y*sqrt(u1))"].iter().map(|s| parse(s, sys.space()).unwrap()).collect();
        let KernelBasis::Symbolic(vs) = kernel_elements(&sys, &lam, &dom, &ZeroTest::default()).unwrap() else {
            panic!("expected a symbolic kernel");
        };
        assert_eq!(vs.len(), 1);
        // Parallel to (sqrt(u1), 1): the 2×2 minor vanishes.
        let g = &vs[0];
        let minor = &g[0] - &(&g[1] * &parse("sqrt(u1)", sys.space()).unwrap());
        assert!(ZeroTest::default().check(&minor, &dom).unwrap().is_zero());
        assert!(!ZeroTest::default().check(&g[1], &dom).unwrap().is_zero());
    }

    #[test]
    fn non_characteristic_covector_has_empty_kernel() {
        let sys = fixtures::system("example2").unwrap();
        let dom = fixtures::domain("example2").unwrap();
        let lam: Vec<Expr> = ["1", "0", "1"].iter().map(|s| parse(s, sys.space()).unwrap()).collect();
        match kernel_elements(&sys, &lam, &dom, &ZeroTest::default()) {
            Err(GeometryError::EmptyKernel { witness }) => {
                // Independent oracle: det = 1 − y²u1 at the witness.
                let y = witness.point.get("y").unwrap();
                let u1 = witness.point.get("u1").unwrap();
                assert!((witness.value - (1.0 - y * y * u1)).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        // Ten random points, all with nonzero determinant.
        let (_, vals) = sample(&[parse("1 - y^2*u1", sys.space()).unwrap()], &dom, &ZeroTest::default(), 10).unwrap();
        assert!(vals.iter().all(|(_, v)| v[0].abs() > 1e-9));
    }

    #[test]
    fn identity_system_has_empty_kernel() {
        let sp = crate::expr::VarSpace::new(["t", "x"], ["u", "v"], Vec::<&str>::new()).unwrap();
        let sys = QuasilinearSystem::new(
            sp.clone(),
            vec![],
            vec![crate::system::ExprMatrix::identity(2), crate::system::ExprMatrix::zeros(2, 2)],
            vec![Expr::zero(), Expr::zero()],
        )
        .unwrap();
        let dom = DomainBox::new().with("t", 0.0, 1.0).with("x", 0.0, 1.0).with("u", 0.0, 1.0).with("v", 0.0, 1.0);
        let r = kernel_elements(&sys, &[Expr::one(), Expr::zero()], &dom, &ZeroTest::default());
        assert!(matches!(r, Err(GeometryError::EmptyKernel { .. })));
        // λ = dx makes the symbol zero: a two-dimensional kernel, sampled.
        let KernelBasis::Numeric(s) = kernel_elements(&sys, &[Expr::zero(), Expr::one()], &dom, &ZeroTest::default())
            .unwrap()
        else {
            panic!("expected a sampler");
        };
        assert_eq!(s.at(&[0.5, 0.5], &[0.1, 0.2]).unwrap().len(), 2);
    }

    #[test]
    fn scalar_example3_kernel_is_everything() {
        let sys = fixtures::system("example3").unwrap();
        let dom = fixtures::domain("example3").unwrap();
        let lam: Vec<Expr> = ["-(u*m + u^2*k)", "m/x", "k/y"].iter().map(|s| parse(s, sys.space()).unwrap()).collect();
        let KernelBasis::Symbolic(vs) = kernel_elements(&sys, &lam, &dom, &ZeroTest::default()).unwrap() else {
            panic!()
        };
        assert_eq!(vs, vec![vec![Expr::one()]]);
    }
}
