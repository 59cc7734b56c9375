//! Generators and oracles shared by the acceptance run and the property
//! tests.
#![allow(dead_code)]

use kwave::expr::{Func, Point};
use kwave::{DomainBox, Expr};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub const VARS: [&str; 3] = ["x", "y", "z"];

pub fn unit_box() -> DomainBox {
    DomainBox::new().with("x", 0.5, 1.5).with("y", 0.5, 1.5).with("z", 0.5, 1.5)
}

/// A random expression of the given depth that stays finite and smooth on
/// [`unit_box`]: divisions and logarithms are guarded by 1 + (·)², and
/// exponentials only see bounded arguments.
pub fn random_expr<R: Rng>(rng: &mut R, depth: u32) -> Expr {
    if depth == 0 {
        return if rng.random_bool(0.7) {
            Expr::var(VARS[rng.random_range(0..VARS.len())])
        } else {
            Expr::rat(rng.random_range(-5..=5), rng.random_range(1..=3))
        };
    }
    let a = random_expr(rng, depth - 1);
    let one = Expr::one();
    match rng.random_range(0..9) {
        0 => &a + &random_expr(rng, depth - 1),
        1 => &a - &random_expr(rng, depth - 1),
        2 => &a * &random_expr(rng, depth - 1),
        3 => &a / &(&one + &random_expr(rng, depth - 1).powi(2)),
        4 => Expr::call(Func::Sin, &a),
        5 => Expr::call(Func::Cos, &a),
        6 => Expr::call(Func::Exp, &Expr::call(Func::Sin, &a)),
        7 => Expr::call(Func::Ln, &(&one + &a.powi(2))),
        _ => Expr::call(Func::Sqrt, &(&one + &a.powi(2))),
    }
}

pub fn random_point<R: Rng>(rng: &mut R) -> Point {
    Point::from_pairs(VARS.iter().map(|v| (*v, rng.random_range(0.5..1.5))))
}

/// ∂e/∂v at p by Richardson-extrapolated central differences.
pub fn fd_partial(e: &Expr, v: &str, p: &Point) -> f64 {
    let at = |d: f64| {
        let mut q = p.clone();
        q.set(v, p.get(v).unwrap() + d);
        e.eval_point(&q).unwrap()
    };
    let h = 1e-3;
    let d1 = (at(h) - at(-h)) / (2.0 * h);
    let d2 = (at(h / 2.0) - at(-h / 2.0)) / h;
    (4.0 * d2 - d1) / 3.0
}

/// Synthesizes Σ ξ^σ γ_σ ⊗ λ^σ.
pub fn synthesize(xi: &[f64], gammas: &[DVector<f64>], lambdas: &[DVector<f64>]) -> DMatrix<f64> {
    let (q, p) = (gammas[0].len(), lambdas[0].len());
    let mut m = DMatrix::zeros(q, p);
    for ((x, g), l) in xi.iter().zip(gammas).zip(lambdas) {
        m += *x * g * l.transpose();
    }
    m
}

pub fn random_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

/// A random potential over x, y with the dependent variable u frozen:
/// a sum of separable terms, so the exact λ = d_xφ is known.
pub fn random_potential<R: Rng>(rng: &mut R) -> Expr {
    let fx = ["x", "x^2", "sin(x)", "exp(x)", "ln(x)", "1/x"];
    let fy = ["1", "y", "y^3", "cos(y)", "exp(2*y)", "sqrt(y)"];
    let fu = ["1", "u", "u^2", "exp(u)"];
    let terms = rng.random_range(1..=3);
    let mut out = Expr::zero();
    for _ in 0..terms {
        let s = format!(
            "{} * {} * {} * {}",
            rng.random_range(1..=4),
            fx[rng.random_range(0..fx.len())],
            fy[rng.random_range(0..fy.len())],
            fu[rng.random_range(0..fu.len())]
        );
        out = &out + &kwave::expr::parse_unchecked(&s).unwrap();
    }
    out
}
