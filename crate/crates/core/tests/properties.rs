mod common;

use common::*;
use kwave::expr::{parse_unchecked, Point};
use kwave::geometry::{find_potential, lie_bracket, Potential, WaveElement};
use kwave::solver::{build_hodograph, FlowSpec};
use kwave::verify::recover_numeric;
use kwave::{DomainBox, Expr, ZeroTest};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn expr_from(seed: u64, depth: u32) -> Expr {
    random_expr(&mut ChaCha8Rng::seed_from_u64(seed), depth)
}

fn field_from(seed: u64) -> Vec<Expr> {
    (0..3).map(|i| expr_from(seed.wrapping_add(i), 2)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn derivative_matches_finite_differences(seed in any::<u64>(), depth in 1u32..=6) {
        let e = expr_from(seed, depth);
        let p = random_point(&mut ChaCha8Rng::seed_from_u64(!seed));
        for v in VARS {
            let d = e.diff(v).eval_point(&p).unwrap();
            let fd = fd_partial(&e, v, &p);
            prop_assert!((d - fd).abs() <= 1e-4 * d.abs().max(1.0), "{e} d/d{v}: {d} vs {fd}");
        }
    }

    #[test]
    fn printing_then_parsing_is_the_identity(seed in any::<u64>(), depth in 0u32..=6) {
        let e = expr_from(seed, depth);
        let text = e.to_string();
        let back = parse_unchecked(&text).unwrap();
        prop_assert_eq!(back.to_string(), text.clone());
        let p = random_point(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x55));
        let (a, b) = (e.eval_point(&p).unwrap(), back.eval_point(&p).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{text}");
    }

    #[test]
    fn an_expression_minus_itself_is_zero(seed in any::<u64>(), depth in 0u32..=5) {
        let e = expr_from(seed, depth);
        let dom = unit_box();
        let zt = ZeroTest::default();
        let reparsed = parse_unchecked(&e.to_string()).unwrap();
        prop_assert!(zt.check(&(&e - &reparsed), &dom).unwrap().is_zero());
        prop_assert!(zt.check(&(&(&e * &e) - &e.powi(2)), &dom).unwrap().is_zero());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn brackets_are_antisymmetric_and_satisfy_jacobi(a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let (fa, fb, fc) = (field_from(a), field_from(b), field_from(c));
        let dom = unit_box();
        let zt = ZeroTest::default().with_trials(16);
        let ab = lie_bracket(&fa, &fb, &VARS);
        let ba = lie_bracket(&fb, &fa, &VARS);
        for (l, r) in ab.iter().zip(&ba) {
            prop_assert!(zt.check(&(l + r), &dom).unwrap().is_zero());
        }
        let j1 = lie_bracket(&fa, &lie_bracket(&fb, &fc, &VARS), &VARS);
        let j2 = lie_bracket(&fb, &lie_bracket(&fc, &fa, &VARS), &VARS);
        let j3 = lie_bracket(&fc, &ab, &VARS);
        for i in 0..3 {
            let s = Expr::add_all([j1[i].clone(), j2[i].clone(), j3[i].clone()]);
            prop_assert!(zt.check(&s, &dom).unwrap().is_zero());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn decomposition_round_trips(seed in any::<u64>(), k in 1usize..=3, zeros in 0usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (q, p) = (3, 4);
        let gammas: Vec<_> = (0..k).map(|_| random_vector(&mut rng, q)).collect();
        let lambdas: Vec<_> = (0..k).map(|_| random_vector(&mut rng, p)).collect();
        let mut xi: Vec<f64> = (0..k).map(|_| rand::Rng::random_range(&mut rng, 0.5..2.0) * if rand::Rng::random_bool(&mut rng, 0.5) { 1.0 } else { -1.0 }).collect();
        for x in xi.iter_mut().take(zeros.min(k)) {
            *x = 0.0;
        }
        let jac = synthesize(&xi, &gammas, &lambdas);
        let rec = recover_numeric(&jac, &gammas, &lambdas).unwrap();
        for (a, b) in rec.xi.iter().zip(&xi) {
            prop_assert!((a - b).abs() < 1e-10, "{:?} vs {xi:?}", rec.xi);
        }
        prop_assert_eq!(rec.rank, xi.iter().filter(|x| **x != 0.0).count());
        prop_assert!(rec.accepted);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn potential_differential_is_lambda(seed in any::<u64>()) {
        let phi = random_potential(&mut ChaCha8Rng::seed_from_u64(seed));
        let xs = ["x".to_string(), "y".to_string()];
        let us = ["u".to_string()];
        let dom = DomainBox::new().with("x", 0.5, 1.5).with("y", 0.5, 1.5).with("u", -1.0, 1.0);
        let lambda: Vec<Expr> = xs.iter().map(|x| phi.diff(x)).collect();
        prop_assume!(lambda.iter().any(|l| !l.is_zero_const()));
        let el = WaveElement::new("w", lambda.clone(), vec![Expr::one()]);
        let zt = ZeroTest::default();
        let base = Point::new().with("x", 1.0).with("y", 1.0);
        let r = find_potential(&el, &xs, &us, &base, &dom, &zt).unwrap();
        match &r.potential {
            Potential::Symbolic(psi) => {
                for (x, l) in xs.iter().zip(&lambda) {
                    let d = &psi.diff(x) - &(&r.factor * l);
                    prop_assert!(zt.check(&d, &dom).unwrap().is_zero(), "{psi} vs {phi}");
                }
            }
            Potential::LineIntegral(li) => {
                let g = li.grad_x(&[0.8, 1.2], &[0.3]).unwrap();
                let pt = Point::new().with("x", 0.8).with("y", 1.2).with("u", 0.3);
                for (gi, l) in g.iter().zip(&lambda) {
                    let want = (&r.factor * l).eval_point(&pt).unwrap();
                    prop_assert!((gi - want).abs() < 1e-6 * want.abs().max(1.0));
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    // Frames a(u1)∂u1, b(u2)∂u2 commute, so accepted surfaces must pass
    // the flow-order swap check.
    #[test]
    fn accepted_surfaces_commute_under_swaps(i in 0usize..4, j in 0usize..4, c in 0.2f64..1.0) {
        let a = ["1", "1 + u1^2/4", "exp(u1/3)", "sqrt(u1)"];
        let b = ["1", "2 + sin(u2)", "1/(1 + u2^2)", "u2"];
        let frame = vec![
            vec![parse_unchecked(a[i]).unwrap(), Expr::zero()],
            vec![Expr::zero(), parse_unchecked(b[j]).unwrap()],
        ];
        let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let mut spec = FlowSpec::new(names(&["s1", "s2"]), names(&["u1", "u2"]), frame);
        spec.base_tau = vec![0.0, 0.0];
        spec.base_u = vec![1.0 + c, 1.0 + c];
        spec.tau_min = vec![-0.4, -0.4];
        spec.tau_max = vec![0.4, 0.4];
        spec.spacing = Some(0.05);
        let s = build_hodograph(&spec).unwrap();
        prop_assert!(s.checks.swap_mismatch.unwrap() < 1e-7);
    }
}
