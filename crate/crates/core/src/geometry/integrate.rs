use crate::expr::{Expr, Func, Node};

/// Derivative of `g` in `v` when it is nonzero and free of `v`, i.e. when
/// `g` is affine in `v`.
fn affine_slope(g: &Expr, v: &str) -> Option<Expr> {
    let a = g.diff(v);
    (!a.is_zero_const() && !a.depends_on(v)).then_some(a)
}

/// ∫ g^k dv for g affine in v and k free of v.
fn power_rule(g: &Expr, k: &Expr, v: &str) -> Option<Expr> {
    if k.depends_on(v) {
        return None;
    }
    let a = affine_slope(g, v)?;
    if k.as_number().is_some_and(|n| n.value() == -1.0) {
        return Some(g.abs().ln() / a);
    }
    let k1 = k + &Expr::one();
    Some(g.pow(&k1) / (&k1 * &a))
}

/// ∫ 1/d dv.
fn reciprocal(d: &Expr, v: &str) -> Option<Expr> {
    match d.node() {
        Node::Mul(fs) => {
            let (dep, rest): (Vec<&Expr>, Vec<&Expr>) = fs.iter().partition(|f| f.depends_on(v));
            match dep.as_slice() {
                [g] => Some(reciprocal(g, v)? / Expr::mul_all(rest.into_iter().cloned())),
                _ => None,
            }
        }
        Node::Neg(g) => Some(reciprocal(g, v)?.neg()),
        Node::Pow(g, k) => power_rule(g, &k.neg(), v),
        Node::Call(Func::Sqrt, g) => power_rule(g, &Expr::rat(-1, 2), v),
        _ => power_rule(d, &Expr::int(-1), v),
    }
}

/// Antiderivative in `v` for a small family of integrands (sums, constant
/// multiples, powers, reciprocals, exp/sin/cos of affine arguments).
/// Returns `None` when the integrand is outside that family.
pub fn integrate(e: &Expr, v: &str) -> Option<Expr> {
    if !e.depends_on(v) {
        return Some(e * &Expr::var(v));
    }
    match e.node() {
        Node::Num(_) => unreachable!("constants do not depend on v"),
        Node::Var(_) => Some(Expr::var(v).powi(2) / Expr::int(2)),
        Node::Add(ts) => ts.iter().map(|t| integrate(t, v)).collect::<Option<Vec<_>>>().map(Expr::add_all),
        Node::Neg(a) => integrate(a, v).map(|i| i.neg()),
        Node::Mul(fs) => {
            let (dep, rest): (Vec<&Expr>, Vec<&Expr>) = fs.iter().partition(|f| f.depends_on(v));
            match dep.as_slice() {
                [g] => Some(Expr::mul_all(rest.into_iter().cloned()) * integrate(g, v)?),
                _ => None,
            }
        }
        Node::Div(n, d) if !d.depends_on(v) => Some(integrate(n, v)? / d),
        Node::Div(n, d) if !n.depends_on(v) => Some(n * &reciprocal(d, v)?),
        Node::Div(..) => None,
        Node::Pow(g, k) => power_rule(g, k, v),
        Node::Call(f, g) => {
            let a = affine_slope(g, v)?;
            let prim = match f {
                Func::Exp => e.clone(),
                Func::Sin => g.cos().neg(),
                Func::Cos => g.sin(),
                Func::Sqrt => return power_rule(g, &Expr::rat(1, 2), v),
                Func::Ln | Func::Abs => return None,
            };
            Some(prim / a)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_unchecked as p, DomainBox, ZeroTest};

    fn check(src: &str, v: &str) {
        let e = p(src).unwrap();
        let i = integrate(&e, v).unwrap_or_else(|| panic!("no antiderivative for {src}"));
        let dom = DomainBox::new().with("x", 0.5, 2.0).with("y", 0.3, 0.9).with("u", 0.5, 2.0).with("t", -1.0, 1.0).with("m", 0.5, 2.0);
        let d = &i.diff(v) - &e;
        assert!(ZeroTest::default().check(&d, &dom).unwrap().is_zero(), "{src} -> {i}");
    }

    #[test]
    fn family_members_integrate() {
        check("m/x", "x");
        check("-1/(y*sqrt(u))", "y");
        check("-(u + u^2)", "t");
        check("3*x^2 - 2/x + exp(2*x + 1)", "x");
        check("sin(3*t)*u + cos(t)", "t");
        check("1/(2*x + 1)^2", "x");
        check("1/sqrt(x)", "x");
        check("sqrt(2*x)", "x");
        check("x", "x");
    }

    #[test]
    fn outside_the_family() {
        assert!(integrate(&p("x*exp(x)").unwrap(), "x").is_none());
        assert!(integrate(&p("ln(x)").unwrap(), "x").is_none());
        assert!(integrate(&p("1/(x^2 + 1)").unwrap(), "x").is_none());
    }
}
