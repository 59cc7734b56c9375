//! Potentials φ with λ = d_xφ (u frozen), found symbolically where the
//! integrand allows it and otherwise as a line integral.

use std::sync::{Arc, OnceLock};

use super::{integrate, verdict_all, GeometryError, Verdict, WaveElement};
use crate::expr::{Compiled, DomainBox, EvalError, Expr, Point, ZeroTest};

/// Largest disagreement tolerated between two integration paths.
pub const PATH_TOL: f64 = 1e-8;
const GL_POINTS: usize = 16;
const GL_PANELS: usize = 4;

/// (dλ)_{ij} = ∂ᵢλⱼ − ∂ⱼλᵢ for i < j.
pub fn exterior_derivative(lambda: &[Expr], xs: &[String]) -> Vec<((usize, usize), Expr)> {
    let p = xs.len();
    let mut out = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            out.push(((i, j), &lambda[j].diff(&xs[i]) - &lambda[i].diff(&xs[j])));
        }
    }
    out
}

/// Components (i<j<k) of the 3-form ω∧λ for a 2-form ω given as in
/// [`exterior_derivative`].
pub fn wedge_with(omega: &[((usize, usize), Expr)], lambda: &[Expr]) -> Vec<((usize, usize, usize), Expr)> {
    let p = lambda.len();
    let w = |i: usize, j: usize| -> Expr {
        let (a, b, s) = if i < j { (i, j, false) } else { (j, i, true) };
        let e = omega.iter().find(|((x, y), _)| *x == a && *y == b).map(|(_, e)| e.clone()).unwrap_or_else(Expr::zero);
        if s {
            e.neg()
        } else {
            e
        }
    };
    let mut out = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            for k in j + 1..p {
                let e = Expr::add_all([&w(i, j) * &lambda[k], &w(j, k) * &lambda[i], &w(k, i) * &lambda[j]]);
                out.push(((i, j, k), e));
            }
        }
    }
    out
}

/// Verdict on d_xλ ∧ λ = 0 (vacuous for p < 3).
pub fn closedness(lambda: &[Expr], xs: &[String], dom: &DomainBox, zt: &ZeroTest) -> Verdict {
    let checks: Vec<(String, Expr)> = wedge_with(&exterior_derivative(lambda, xs), lambda)
        .into_iter()
        .map(|((i, j, k), e)| (format!("(dλ∧λ)[{},{},{}]", xs[i], xs[j], xs[k]), e))
        .collect();
    verdict_all(zt, &checks, dom)
}

fn exactness(lambda: &[Expr], xs: &[String], dom: &DomainBox, zt: &ZeroTest) -> Verdict {
    let checks: Vec<(String, Expr)> = exterior_derivative(lambda, xs)
        .into_iter()
        .map(|((i, j), e)| (format!("(dλ)[{},{}]", xs[i], xs[j]), e))
        .collect();
    verdict_all(zt, &checks, dom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialMethod {
    /// Supplied with the element and verified.
    Given,
    /// Symbolic antiderivative of λ.
    Integrated,
    /// Symbolic antiderivative of μλ for an integrating factor μ.
    IntegratingFactor,
    /// Numerical line integral from the base point.
    LineIntegral,
}

#[derive(Debug, Clone)]
pub enum Potential {
    Symbolic(Expr),
    LineIntegral(LineIntegral),
}

#[derive(Debug, Clone)]
pub struct PotentialResult {
    pub potential: Potential,
    /// μ with μλ = dφ; the element's γ must be divided by it.
    pub factor: Expr,
    pub method: PotentialMethod,
}

impl PotentialResult {
    /// The element rescaled by the factor, with the potential attached when
    /// it is symbolic.
    pub fn apply(&self, e: &WaveElement) -> WaveElement {
        let mut out = if self.factor.is_one_const() { e.clone() } else { e.rescaled(&self.factor) };
        out.potential = match &self.potential {
            Potential::Symbolic(phi) => Some(phi.clone()),
            Potential::LineIntegral(_) => None,
        };
        out
    }
}

/// φ(x; u) = ∫ λ(ξ, u)·dξ along the segment from `x0` to x.
#[derive(Debug, Clone)]
pub struct LineIntegral {
    lambda: Arc<Vec<Compiled>>,
    x0: Vec<f64>,
}

fn gauss_legendre() -> &'static (Vec<f64>, Vec<f64>) {
    static GL: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    GL.get_or_init(|| {
        let n = GL_POINTS;
        let mut xs = vec![0.0; n];
        let mut ws = vec![0.0; n];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = pk;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            xs[i] = x;
            ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (xs, ws)
    })
}

impl LineIntegral {
    fn integrand(&self, x: &[f64], u: &[f64], st: &mut Vec<f64>, buf: &mut Vec<f64>) -> Result<Vec<f64>, EvalError> {
        buf.clear();
        buf.extend_from_slice(x);
        buf.extend_from_slice(u);
        self.lambda.iter().map(|c| c.eval_in(buf, st)).collect()
    }

    /// ∫ λ·dξ along the segment a → b.
    fn segment(&self, a: &[f64], b: &[f64], u: &[f64]) -> Result<f64, EvalError> {
        let (nodes, weights) = gauss_legendre();
        let d: Vec<f64> = b.iter().zip(a).map(|(b, a)| b - a).collect();
        if d.iter().all(|&v| v == 0.0) {
            return Ok(0.0);
        }
        let (mut st, mut buf) = (Vec::new(), Vec::new());
        let mut acc = 0.0;
        let h = 1.0 / GL_PANELS as f64;
        for panel in 0..GL_PANELS {
            for (t, w) in nodes.iter().zip(weights) {
                let s = h * (panel as f64 + 0.5 * (t + 1.0));
                let xi: Vec<f64> = a.iter().zip(&d).map(|(a, d)| a + s * d).collect();
                let l = self.integrand(&xi, u, &mut st, &mut buf)?;
                acc += 0.5 * h * w * l.iter().zip(&d).map(|(l, d)| l * d).sum::<f64>();
            }
        }
        Ok(acc)
    }

    pub fn eval(&self, x: &[f64], u: &[f64]) -> Result<f64, EvalError> {
        self.segment(&self.x0, x, u)
    }

    /// The same integral along the coordinate staircase x0 → x.
    pub fn eval_staircase(&self, x: &[f64], u: &[f64]) -> Result<f64, EvalError> {
        let mut a = self.x0.clone();
        let mut acc = 0.0;
        for i in 0..x.len() {
            let mut b = a.clone();
            b[i] = x[i];
            acc += self.segment(&a, &b, u)?;
            a = b;
        }
        Ok(acc)
    }

    /// λ itself, which is the x-gradient of the integral.
    pub fn grad_x(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.integrand(x, u, &mut Vec::new(), &mut Vec::new())
    }
}

/// Compiled φ with its partial derivatives.
#[derive(Debug, Clone)]
pub enum PotentialEval {
    Symbolic { phi: Compiled, dx: Vec<Compiled>, du: Vec<Compiled>, p: usize },
    Line { li: LineIntegral, h: f64 },
}

impl Potential {
    pub fn expr(&self) -> Option<&Expr> {
        match self {
            Potential::Symbolic(e) => Some(e),
            Potential::LineIntegral(_) => None,
        }
    }

    /// Evaluator over slots (independent, then dependent).
    pub fn evaluator(&self, xs: &[String], us: &[String]) -> Result<PotentialEval, EvalError> {
        let slots: Vec<&String> = xs.iter().chain(us).collect();
        Ok(match self {
            Potential::Symbolic(phi) => PotentialEval::Symbolic {
                phi: phi.compile(&slots)?,
                dx: xs.iter().map(|x| phi.diff(x).compile(&slots)).collect::<Result<_, _>>()?,
                du: us.iter().map(|u| phi.diff(u).compile(&slots)).collect::<Result<_, _>>()?,
                p: xs.len(),
            },
            Potential::LineIntegral(li) => PotentialEval::Line { li: li.clone(), h: 1e-6 },
        })
    }
}

impl PotentialEval {
    pub fn value(&self, x: &[f64], u: &[f64]) -> Result<f64, EvalError> {
        match self {
            PotentialEval::Symbolic { phi, .. } => phi.eval(&[x, u].concat()),
            PotentialEval::Line { li, .. } => li.eval(x, u),
        }
    }

    pub fn grad_x(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>, EvalError> {
        match self {
            PotentialEval::Symbolic { dx, .. } => {
                let v = [x, u].concat();
                dx.iter().map(|c| c.eval(&v)).collect()
            }
            PotentialEval::Line { li, .. } => li.grad_x(x, u),
        }
    }

    /// ∂φ/∂u, by central differences for line integrals.
    pub fn grad_u(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>, EvalError> {
        match self {
            PotentialEval::Symbolic { du, p, .. } => {
                let v = [x, u].concat();
                debug_assert_eq!(*p, x.len());
                du.iter().map(|c| c.eval(&v)).collect()
            }
            PotentialEval::Line { li, h } => (0..u.len())
                .map(|b| {
                    let mut up = u.to_vec();
                    let mut um = u.to_vec();
                    up[b] += h;
                    um[b] -= h;
                    Ok((li.eval(x, &up)? - li.eval(x, &um)?) / (2.0 * h))
                })
                .collect(),
        }
    }
}

/// Sequential integration: integrate the part of λᵢ not yet explained by
/// the partial potential.
fn integrate_sequentially(lambda: &[Expr], xs: &[String], dom: &DomainBox, zt: &ZeroTest) -> Option<Expr> {
    let mut phi = Expr::zero();
    for (i, x) in xs.iter().enumerate() {
        let r = &lambda[i] - &phi.diff(x);
        if r.is_zero_const() || zt.check(&r, dom).ok()?.is_zero() {
            continue;
        }
        phi = &phi + &integrate(&r, x)?;
    }
    Some(phi)
}

fn gradient_matches(phi: &Expr, lambda: &[Expr], xs: &[String], dom: &DomainBox, zt: &ZeroTest) -> bool {
    let checks: Vec<(String, Expr)> =
        xs.iter().zip(lambda).map(|(x, l)| (format!("d/d{x}"), &phi.diff(x) - l)).collect();
    verdict_all(zt, &checks, dom).holds()
}

/// Candidate integrating factors: 1/λⱼ, powers xᵢ^{±1,±2} and pairwise
/// products of those.
fn factor_candidates(lambda: &[Expr], xs: &[String]) -> Vec<Expr> {
    let mut base: Vec<Expr> = lambda.iter().filter(|l| !l.is_zero_const()).map(|l| Expr::one() / l).collect();
    for x in xs {
        for k in [1, -1, 2, -2] {
            base.push(Expr::var(x).powi(k));
        }
    }
    let mut out = base.clone();
    for i in 0..base.len() {
        for j in i..base.len() {
            out.push(&base[i] * &base[j]);
        }
    }
    out
}

/// Finds φ with μλ = d_xφ for the element's λ, u frozen. The basepoint
/// (over the independent variables) anchors line-integral potentials.
pub fn find_potential(
    element: &WaveElement,
    xs: &[String],
    us: &[String],
    basepoint: &Point,
    dom: &DomainBox,
    zt: &ZeroTest,
) -> Result<PotentialResult, GeometryError> {
    let zt = zt.stream(&format!("find_potential/{}", element.label));
    let lambda = &element.lambda;
    if let Verdict::Fails { witness, .. } = closedness(lambda, xs, dom, &zt) {
        return Err(GeometryError::NotClosed { witness });
    }
    if let Some(phi) = &element.potential {
        if gradient_matches(phi, lambda, xs, dom, &zt) {
            return Ok(PotentialResult {
                potential: Potential::Symbolic(phi.clone()),
                factor: Expr::one(),
                method: PotentialMethod::Given,
            });
        }
    }

    let mut factor = Expr::one();
    let mut scaled = lambda.clone();
    let mut method = PotentialMethod::Integrated;
    if !exactness(lambda, xs, dom, &zt).holds() {
        let found = factor_candidates(lambda, xs).into_iter().find(|mu| {
            let ml: Vec<Expr> = lambda.iter().map(|l| mu * l).collect();
            exactness(&ml, xs, dom, &zt).holds()
        });
        factor = found.ok_or(GeometryError::NoIntegratingFactor)?;
        scaled = lambda.iter().map(|l| &factor * l).collect();
        method = PotentialMethod::IntegratingFactor;
    }

    if let Some(phi) = integrate_sequentially(&scaled, xs, dom, &zt) {
        if gradient_matches(&phi, &scaled, xs, dom, &zt) {
            return Ok(PotentialResult { potential: Potential::Symbolic(phi), factor, method });
        }
    }

    let slots: Vec<&String> = xs.iter().chain(us).collect();
    let compiled = scaled.iter().map(|l| l.compile(&slots)).collect::<Result<Vec<_>, _>>()?;
    let x0 = basepoint
        .values_of(xs)
        .ok_or_else(|| GeometryError::Shape("the base point must assign every independent variable".into()))?;
    let li = LineIntegral { lambda: Arc::new(compiled), x0 };

    // Spot-check path independence at a few domain points.
    let names: Vec<String> = dom.names().into_iter().map(String::from).collect();
    for s in dom.samples(zt.stream("paths").seed, 4) {
        let pt = Point::zip(&names, &s);
        let (Some(x), Some(u)) = (pt.values_of(xs), pt.values_of(us)) else {
            return Err(GeometryError::Shape("the domain must cover every variable".into()));
        };
        let (Ok(a), Ok(b)) = (li.eval(&x, &u), li.eval_staircase(&x, &u)) else { continue };
        let mismatch = (a - b).abs();
        if mismatch > PATH_TOL * (1.0 + a.abs()) {
            return Err(GeometryError::PathDependent { mismatch, point: pt });
        }
    }
    Ok(PotentialResult { potential: Potential::LineIntegral(li), factor, method: PotentialMethod::LineIntegral })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, parse_unchecked as p};
    use crate::fixtures;
    use crate::geometry::tests::example2_elements;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn example2_potentials() {
        let (sys, dom, els) = example2_elements();
        for (e, expected) in els.iter().zip(["t - ln(|y|)/sqrt(u1)", "t + ln(|y|)/sqrt(u1)"]) {
            let bare = WaveElement { potential: None, ..e.clone() };
            let r = find_potential(&bare, sys.independent(), sys.dependent(), &Point::new(), &dom, &ZeroTest::default())
                .unwrap();
            assert_eq!(r.method, PotentialMethod::Integrated);
            let phi = r.potential.expr().unwrap();
            let diff = phi - &parse(expected, sys.space()).unwrap();
            assert!(ZeroTest::default().check(&diff, &dom).unwrap().is_zero(), "{phi}");
        }
    }

    #[test]
    fn example3_potential_is_r() {
        let f = fixtures::file("example3").unwrap();
        let sys = f.to_system().unwrap();
        let dom = f.domain_box();
        let e = WaveElement::from_section(&f.waves[0], sys.space()).unwrap().bound(&sys);
        let r = find_potential(&e, sys.independent(), sys.dependent(), &Point::new(), &dom, &ZeroTest::default()).unwrap();
        let paper = sys.bind(&parse("-t*(u*m + u^2*k) + ln(|x^m*y^k|)", sys.space()).unwrap());
        let diff = r.potential.expr().unwrap() - &paper;
        assert!(ZeroTest::default().check(&diff, &dom).unwrap().is_zero());
    }

    #[test]
    fn coordinate_covector() {
        let xs = strings(&["a", "b"]);
        let e = WaveElement::new("dx", vec![Expr::one(), Expr::zero()], vec![]);
        let dom = DomainBox::new().with("a", 0.0, 1.0).with("b", 0.0, 1.0);
        let r = find_potential(&e, &xs, &[], &Point::new(), &dom, &ZeroTest::default()).unwrap();
        assert_eq!(r.potential.expr().unwrap(), &Expr::var("a"));
    }

    #[test]
    fn integrating_factor_is_found() {
        // λ = y dx − x dy is not closed but 1/y² λ = d(x/y).
        let xs = strings(&["x", "y"]);
        let e = WaveElement::new("w", vec![p("y").unwrap(), p("-x").unwrap()], vec![]);
        let dom = DomainBox::new().with("x", 0.5, 2.0).with("y", 0.5, 2.0);
        let r = find_potential(&e, &xs, &[], &Point::new(), &dom, &ZeroTest::default()).unwrap();
        assert_eq!(r.method, PotentialMethod::IntegratingFactor);
        let mu_l: Vec<Expr> = e.lambda.iter().map(|l| &r.factor * l).collect();
        assert!(gradient_matches(r.potential.expr().unwrap(), &mu_l, &xs, &dom, &ZeroTest::default()));
    }

    #[test]
    fn line_integral_fallback() {
        // Closed, but x·exp(x) is outside the integration family.
        let xs = strings(&["x", "y"]);
        let us = strings(&["u"]);
        let e = WaveElement::new("w", vec![p("x*exp(x)*u").unwrap(), p("1").unwrap()], vec![]);
        let dom = DomainBox::new().with("x", 0.0, 1.0).with("y", 0.0, 1.0).with("u", 1.0, 2.0);
        let base = Point::new().with("x", 0.0).with("y", 0.0);
        let r = find_potential(&e, &xs, &us, &base, &dom, &ZeroTest::default()).unwrap();
        assert_eq!(r.method, PotentialMethod::LineIntegral);
        let ev = r.potential.evaluator(&xs, &us).unwrap();
        // ∫₀ˣ s eˢ ds = (x − 1)eˣ + 1.
        let (x, y, u) = (0.7, 0.4, 1.5);
        let exact = u * ((x - 1.0) * f64::exp(x) + 1.0) + y;
        assert!((ev.value(&[x, y], &[u]).unwrap() - exact).abs() < 1e-13);
        let du = ev.grad_u(&[x, y], &[u]).unwrap()[0];
        assert!((du - ((x - 1.0) * f64::exp(x) + 1.0)).abs() < 1e-8);
    }

    #[test]
    fn non_closed_covector_is_rejected() {
        let (sys, dom, mut els) = example2_elements();
        els[0].lambda[0] = parse("1 + x", sys.space()).unwrap();
        els[0].potential = None;
        let r = find_potential(&els[0], sys.independent(), sys.dependent(), &Point::new(), &dom, &ZeroTest::default());
        assert!(matches!(r, Err(GeometryError::NotClosed { .. })));
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre();
        let s: f64 = x.iter().zip(w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((s - 2.0 / 31.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }
}
