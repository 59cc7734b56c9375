use serde::Serialize;

use super::{check_independent, sample, verdict_all, GeometryError, Verdict};
use crate::expr::{DomainBox, Expr, ZeroTest};
use crate::system::ExprMatrix;

/// `v = Σ c^σ γ_(σ) + residual`, exact by construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketDecomposition {
    #[serde(serialize_with = "ser_exprs")]
    pub coefficients: Vec<Expr>,
    #[serde(serialize_with = "ser_exprs")]
    pub residual: Vec<Expr>,
    /// Holds when the residual vanishes, i.e. v lies in the frame's span.
    pub in_span: Verdict,
}

pub(crate) fn ser_exprs<S: serde::Serializer>(es: &[Expr], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(es.iter().map(ToString::to_string))
}

/// Replaces a sampled-constant value by an exact ratio when one with a
/// small denominator fits.
fn constant_expr(c: f64) -> Expr {
    for d in 1..=64i64 {
        let n = (c * d as f64).round();
        if (n / d as f64 - c).abs() <= 1e-12 * (1.0 + c.abs()) && n.abs() < 1e15 {
            return Expr::rat(n as i64, d);
        }
    }
    Expr::float(c)
}

/// Decomposes `v` in the frame `γ_(1)..γ_(k)` through the Gram system
/// `c = adj(G) Fᵀ v / det G`, `G = FᵀF`. Coefficients that are constant on
/// the samples are replaced by that constant.
pub fn decompose_in_frame(
    v: &[Expr],
    frame: &[Vec<Expr>],
    dom: &DomainBox,
    zt: &ZeroTest,
) -> Result<BracketDecomposition, GeometryError> {
    let n = v.len();
    if frame.iter().any(|g| g.len() != n) {
        return Err(GeometryError::Shape("frame vectors and v differ in length".into()));
    }
    let zt = zt.stream("frame");
    if let Err(witness) = check_independent(frame, dom, &zt)? {
        return Err(GeometryError::DegenerateFrame { witness });
    }
    let k = frame.len();
    let f = ExprMatrix::new(k, n, frame.iter().flatten().cloned().collect()); // rows are γ's
    let g = f.mul(&f.transpose());
    let det = g.det();
    let rhs = f.mul_vec(v);
    let adj = g.adjugate();
    let raw: Vec<Expr> = adj.mul_vec(&rhs).iter().map(|e| e / &det).collect();

    let (_, vals) = sample(&raw, dom, &zt, zt.trials)?;
    let coefficients: Vec<Expr> = raw
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let xs: Vec<f64> = vals.iter().map(|(_, v)| v[i]).collect();
            let mean = xs.iter().sum::<f64>() / xs.len().max(1) as f64;
            let spread = xs.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
            if !xs.is_empty() && spread <= 1e-10 * (1.0 + mean.abs()) {
                constant_expr(mean)
            } else {
                e.clone()
            }
        })
        .collect();
    let residual: Vec<Expr> = (0..n)
        .map(|b| &v[b] - &Expr::add_all(coefficients.iter().zip(frame).map(|(c, g)| c * &g[b])))
        .collect();
    let checks: Vec<(String, Expr)> =
        residual.iter().enumerate().map(|(i, e)| (format!("residual[{i}]"), e.clone())).collect();
    let in_span = verdict_all(&zt.stream("residual"), &checks, dom);
    Ok(BracketDecomposition { coefficients, residual, in_span })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_unchecked as p;
    use crate::geometry::lie_bracket;

    fn v(xs: &[&str]) -> Vec<Expr> {
        xs.iter().map(|s| p(s).unwrap()).collect()
    }

    fn dom() -> DomainBox {
        DomainBox::new().with("u1", 0.1, 1.7).with("u2", 1.0, 3.0)
    }

    #[test]
    fn frame_vector_decomposes_trivially() {
        let frame = vec![v(&["sqrt(u1)", "1"]), v(&["-sqrt(u1)", "1"])];
        let d = decompose_in_frame(&frame[0], &frame, &dom(), &ZeroTest::default()).unwrap();
        assert_eq!(d.coefficients, vec![Expr::one(), Expr::zero()]);
        assert!(d.in_span.holds());
    }

    #[test]
    fn vanishing_bracket_has_zero_coefficients() {
        let frame = vec![v(&["sqrt(u1)", "1"]), v(&["-sqrt(u1)", "1"])];
        let br = lie_bracket(&frame[0], &frame[1], &["u1", "u2"]);
        let d = decompose_in_frame(&br, &frame, &dom(), &ZeroTest::default()).unwrap();
        assert_eq!(d.coefficients, vec![Expr::zero(), Expr::zero()]);
        assert!(d.in_span.holds());
    }

    #[test]
    fn orthogonal_vector_is_not_in_span() {
        let d = decompose_in_frame(&v(&["1", "0"]), &[v(&["0", "1"])], &dom(), &ZeroTest::default()).unwrap();
        assert!(d.in_span.fails());
        assert!(d.in_span.witness().unwrap().value.abs() > 0.5);
    }

    #[test]
    fn nonconstant_coefficients_are_kept_symbolic() {
        let frame = vec![v(&["1", "0"]), v(&["0", "u1"])];
        let d = decompose_in_frame(&v(&["u2", "u1*u2"]), &frame, &dom(), &ZeroTest::default()).unwrap();
        assert!(d.in_span.holds());
        let c1 = d.coefficients[1].eval_with(&|n| match n {
            "u1" => Some(0.5),
            "u2" => Some(2.0),
            _ => None,
        });
        assert!((c1.unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_frame_is_rejected() {
        let frame = vec![v(&["u1", "1"]), v(&["2*u1", "2"])];
        assert!(matches!(
            decompose_in_frame(&v(&["1", "0"]), &frame, &dom(), &ZeroTest::default()),
            Err(GeometryError::DegenerateFrame { .. })
        ));
    }

    #[test]
    fn constants_are_rationalised() {
        assert_eq!(constant_expr(0.5), Expr::rat(1, 2));
        assert_eq!(constant_expr(-2.0 / 3.0), Expr::rat(-2, 3));
        assert_eq!(constant_expr(std::f64::consts::PI), Expr::float(std::f64::consts::PI));
    }
}
