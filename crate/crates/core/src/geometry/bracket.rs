use crate::expr::Expr;

/// Lie bracket of vector fields on the `wrt` coordinates:
/// `[a, b]^β = Σ_α (a^α ∂_α b^β − b^α ∂_α a^β)`. Variables not in `wrt`
/// are frozen parameters.
pub fn lie_bracket<S: AsRef<str>>(a: &[Expr], b: &[Expr], wrt: &[S]) -> Vec<Expr> {
    assert_eq!(a.len(), wrt.len(), "field length must match the coordinates");
    assert_eq!(b.len(), wrt.len(), "field length must match the coordinates");
    (0..wrt.len())
        .map(|beta| {
            Expr::add_all(wrt.iter().enumerate().flat_map(|(alpha, w)| {
                let w = w.as_ref();
                [&a[alpha] * &b[beta].diff(w), -(&b[alpha] * &a[beta].diff(w))]
            }))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_unchecked as p, DomainBox, ZeroTest};
    use proptest::prelude::*;

    fn v(xs: &[&str]) -> Vec<Expr> {
        xs.iter().map(|s| p(s).unwrap()).collect()
    }

    #[test]
    fn gamma_pm_commute() {
        let gp = v(&["sqrt(u1)", "1"]);
        let gm = v(&["-sqrt(u1)", "1"]);
        let br = lie_bracket(&gp, &gm, &["u1", "u2"]);
        let dom = DomainBox::new().with("u1", 0.1, 2.0).with("u2", 0.0, 1.0);
        for c in &br {
            assert!(ZeroTest::default().check(c, &dom).unwrap().is_zero(), "{c}");
        }
    }

    #[test]
    fn coordinate_formula_by_hand() {
        let br = lie_bracket(&v(&["1", "0"]), &v(&["u1", "0"]), &["u1", "u2"]);
        assert_eq!(br, v(&["1", "0"]));
        let br = lie_bracket(&v(&["u2", "0"]), &v(&["0", "u1"]), &["u1", "u2"]);
        let dom = DomainBox::new().with("u1", 0.0, 1.0).with("u2", 0.0, 1.0);
        for (c, want) in br.iter().zip(v(&["-u1", "u2"])) {
            assert!(ZeroTest::default().check(&(c - &want), &dom).unwrap().is_zero(), "{c}");
        }
    }

    #[test]
    fn self_bracket_vanishes_numerically() {
        let x = v(&["u1*u2", "sin(u1)"]);
        let dom = DomainBox::new().with("u1", 0.0, 1.0).with("u2", 0.0, 1.0);
        for c in lie_bracket(&x, &x, &["u1", "u2"]) {
            assert!(ZeroTest::default().check(&c, &dom).unwrap().is_zero());
        }
    }

    fn field() -> impl Strategy<Value = Vec<Expr>> {
        let atom = prop_oneof![
            Just("u1"),
            Just("u2"),
            Just("u1*u2"),
            Just("sqrt(u1)"),
            Just("sin(u2)"),
            Just("exp(u1/3)"),
            Just("1/(1 + u2^2)"),
            Just("x*u1"),
        ];
        prop::collection::vec((atom, -2i32..3), 2)
            .prop_map(|cs| cs.into_iter().map(|(a, k)| &p(a).unwrap() * &Expr::int(k as i64) + p("u2*u1^2").unwrap() * Expr::rat(k as i64, 3)).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn antisymmetry_and_jacobi(a in field(), b in field(), c in field()) {
            let w = ["u1", "u2"];
            let dom = DomainBox::new().with("u1", 0.2, 2.0).with("u2", -1.0, 1.0).with("x", 0.0, 1.0);
            let zt = ZeroTest::default().with_trials(20);
            let ab = lie_bracket(&a, &b, &w);
            let ba = lie_bracket(&b, &a, &w);
            for (l, r) in ab.iter().zip(&ba) {
                prop_assert!(zt.check(&(l + r), &dom).unwrap().is_zero());
            }
            let j1 = lie_bracket(&a, &lie_bracket(&b, &c, &w), &w);
            let j2 = lie_bracket(&b, &lie_bracket(&c, &a, &w), &w);
            let j3 = lie_bracket(&c, &lie_bracket(&a, &b, &w), &w);
            for i in 0..2 {
                let s = Expr::add_all([j1[i].clone(), j2[i].clone(), j3[i].clone()]);
                prop_assert!(zt.check(&s, &dom).unwrap().is_zero(), "{s}");
            }
        }
    }
}
