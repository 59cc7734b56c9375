//! End-to-end acceptance run. Prints one line per criterion and exits
//! nonzero if any of them fails.

mod common;

use std::time::Instant;

use common::*;
use kwave::expr::{parse, parse_unchecked as p, Point};
use kwave::frobenius::{compatibility_check, rescale_frame, rescale_with_coefficients, FrobeniusError, RescaleOptions, RescalePath};
use kwave::geometry::{check_kwave_conditions, find_potential, lie_bracket, Potential, PotentialEval, WaveElement};
use kwave::pipeline::{self, AnalysisRequest, SystemSource};
use kwave::solver::{
    closed_form_surface, flow_spec_from_section, integrate_characteristic, surface_from_spec, FlowSpec, Grid,
    ImplicitSolveConfig, ImplicitSolver, InitialGuess, PointStatus,
};
use kwave::system::{HomogenizeOptions, Jet, QuasilinearSystem};
use kwave::verify::{self, fd_jacobian, recover_numeric, ClosedForm, FD_STEP};
use kwave::{fixtures, DomainBox, Exec, Expr, ZeroTest};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn names(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// Criterion 1: the example2 pipeline recovers u = (−ln|y|, t).
fn double_wave() -> Outcome {
    let mut req = AnalysisRequest::new(SystemSource::Fixture("example2".into()));
    req.grid = Some("t=1:3:20, x=1:3:20, y=0.2:0.9:20".into());
    req.exec = Exec::Sequential;
    let t0 = Instant::now();
    let a = pipeline::run(&req);
    let secs = t0.elapsed().as_secs_f64();
    if let Some(f) = &a.failure {
        return Err(f.to_string());
    }
    let field = a.field.as_ref().ok_or("no solution field")?;
    ensure(field.points.len() == 8000, || format!("{} points", field.points.len()))?;
    let mut dev = 0.0f64;
    for pt in &field.points {
        ensure(pt.status == PointStatus::Converged, || format!("{:?} at {:?}", pt.status, pt.x))?;
        dev = dev.max((pt.u[0] + pt.x[2].abs().ln()).abs()).max((pt.u[1] - pt.x[0]).abs());
    }
    ensure(dev < 1e-8, || format!("u deviates from (-ln|y|, t) by {dev:.2e}"))?;
    let res = a.residual.as_ref().ok_or("no residual report")?;
    ensure(res.max < 1e-6 && res.checked == 8000, || format!("residual max {:.2e}", res.max))?;
    let dec = a.decomposition.as_ref().ok_or("no decomposition report")?;
    let xi_dev = dec.xi_range.iter().map(|(lo, hi)| (lo - 0.5).abs().max((hi - 0.5).abs())).fold(0.0, f64::max);
    ensure(xi_dev < 1e-8, || format!("xi off 1/2 by {xi_dev:.2e}"))?;
    ensure(dec.ranks.len() == 1 && dec.ranks.get(&2) == Some(&8000), || format!("ranks {:?}", dec.ranks))?;
    ensure(secs < 10.0, || format!("took {secs:.2} s"))?;
    Ok(format!("u err {dev:.1e}, residual {:.1e}, |xi-1/2| {xi_dev:.1e}, rank 2 at 8000 points, {secs:.2} s", res.max))
}

fn simple_wave_solver(sign: f64, t0: f64, t0p: f64, start: f64) -> ImplicitSolver {
    let g1 = if sign > 0.0 { "sqrt(u1)" } else { "-sqrt(u1)" };
    let gamma = vec![p(g1).unwrap(), Expr::one()];
    let s0 = sign * (t0 + 2.0);
    let range = if sign > 0.0 { (t0 + 0.02, t0 + 8.0) } else { (-t0 - 8.0, -t0 - 0.02) };
    let surface =
        integrate_characteristic(&gamma, &Expr::one(), "tau", &names(&["u1", "u2"]), &[1.0, s0 - t0p], s0, range, 1e-2)
            .unwrap();
    let phi = if sign > 0.0 { "t - ln(|y|)/sqrt(u1)" } else { "t + ln(|y|)/sqrt(u1)" };
    let pot = Potential::Symbolic(p(phi).unwrap()).evaluator(&names(&["t", "y"]), &names(&["u1", "u2"])).unwrap();
    let cfg = ImplicitSolveConfig { initial: InitialGuess::Tau(vec![start]), exec: Exec::Sequential, ..Default::default() };
    ImplicitSolver::new(surface, vec![pot], names(&["t", "y"]), cfg).unwrap()
}

// Criterion 2: Newton-solved simple waves against the closed forms.
fn simple_waves() -> Outcome {
    let (t0, t0p) = (0.5, 0.25);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    // Branch-safe boxes: the quoted root has √u1 ≥ 0 for y > 1 (plus wave)
    // and for y < 1 (minus wave).
    for (sign, tb, yb, start) in [(1.0, (2.5, 4.0), (1.1, 1.6), t0 + 0.03), (-1.0, (1.0, 3.0), (0.2, 0.9), -(t0 + 2.0))] {
        let s = simple_wave_solver(sign, t0, t0p, start);
        for _ in 0..200 {
            let (t, y): (f64, f64) = (rng.random_range(tb.0..tb.1), rng.random_range(yb.0..yb.1));
            let tau = (t + sign * t0 - ((t - sign * t0).powi(2) - 8.0 * y.abs().ln()).sqrt()) / 2.0;
            let u1 = 0.25 * (sign * tau - t0).powi(2);
            let u2 = tau - t0p;
            let pt = s.solve_point(&[t, y], None);
            ensure(pt.converged, || format!("sign {sign}: no convergence at ({t}, {y})"))?;
            let e = (pt.tau[0] - tau).abs().max((pt.u[0] - u1).abs()).max((pt.u[1] - u2).abs());
            ensure(e < 1e-8, || format!("sign {sign} at ({t}, {y}): tau {} vs {tau}", pt.tau[0]))?;
            worst = worst.max(e);
        }
    }
    Ok(format!("400 points, max deviation {worst:.1e}"))
}

// Criterion 3: the example3 solve against its closed form, plus residuals.
fn example3() -> Outcome {
    let file = fixtures::file("example3").map_err(|e| e.to_string())?;
    let sys = file.to_system().map_err(|e| e.to_string())?;
    let dom = file.domain_box();
    let zt = ZeroTest::default();
    let el = WaveElement::from_section(&file.waves[0], sys.space()).map_err(|e| e.to_string())?.bound(&sys);
    let found = find_potential(&el, sys.independent(), sys.dependent(), &dom.center(), &dom, &zt)
        .map_err(|e| e.to_string())?;
    let el = found.apply(&el);
    let (spec, f) = flow_spec_from_section(file.hodograph.as_ref().unwrap(), &sys, std::slice::from_ref(&el))
        .map_err(|e| e.to_string())?;
    let surface = surface_from_spec(&spec, f.as_deref()).map_err(|e| e.to_string())?;
    let pot = found.potential.evaluator(sys.independent(), sys.dependent()).map_err(|e| e.to_string())?;
    let cfg = ImplicitSolveConfig { initial: InitialGuess::FromU(vec![-20.0]), exec: Exec::Sequential, ..Default::default() };
    let solver = ImplicitSolver::new(surface, vec![pot], sys.independent().to_vec(), cfg).map_err(|e| e.to_string())?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts: Vec<Vec<f64>> =
        (0..200).map(|_| vec![rng.random_range(0.1..1.0), rng.random_range(1.0..3.0), rng.random_range(1.0..3.0)]).collect();
    let grid = Grid::scattered(sys.independent().to_vec(), pts).map_err(|e| e.to_string())?;
    let field = solver.solve(&grid).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for pt in &field.points {
        let (t, x, y) = (pt.x[0], pt.x[1], pt.x[2]);
        let want = -((4.0 * t * (x * y).ln() + (t + 1.0).powi(2)).sqrt() + t + 1.0) / (2.0 * t);
        ensure(pt.converged, || format!("no convergence at {:?}", pt.x))?;
        worst = worst.max((pt.u[0] - want).abs());
    }
    ensure(worst < 1e-7, || format!("max deviation {worst:.2e}"))?;
    let jacs = verify::field_jacobians(&solver, &field, FD_STEP, Exec::Sequential);
    let res = verify::residual_report(&sys, &field, &jacs, FD_STEP).map_err(|e| e.to_string())?;
    ensure(res.max < 1e-6 && res.checked == 200, || format!("residual max {:.2e}", res.max))?;
    Ok(format!("200 points, max deviation {worst:.1e}, residual {:.1e}", res.max))
}

fn entries_match(sys: &QuasilinearSystem, want: &[Vec<Vec<&str>>], dom: &DomainBox) -> Result<usize, String> {
    let zt = ZeroTest::default().with_trials(32);
    let mut n = 0;
    ensure(sys.a().len() == want.len(), || format!("{} coefficient matrices", sys.a().len()))?;
    for (k, (a, w)) in sys.a().iter().zip(want).enumerate() {
        for (r, row) in w.iter().enumerate() {
            for (c, s) in row.iter().enumerate() {
                let e = sys.bind(&(a.get(r, c) - &parse(s, sys.space()).map_err(|e| e.to_string())?));
                let v = zt.check(&e, dom).map_err(|e| e.to_string())?;
                ensure(v.is_zero(), || format!("A[{k}][{r},{c}] = {} differs from {s}", a.get(r, c)))?;
                n += 1;
            }
        }
    }
    for b in sys.b() {
        ensure(b.is_zero_const(), || format!("source {b} left over"))?;
    }
    Ok(n)
}

fn transport_check(name: &str, seed: u64) -> Result<f64, String> {
    let sys = fixtures::system(name).map_err(|e| e.to_string())?;
    let dom = fixtures::domain(name).map_err(|e| e.to_string())?;
    let h = sys.homogenize(&HomogenizeOptions { domain: dom.clone(), ..Default::default() }).map_err(|e| e.to_string())?;
    let (ev, evh) = (sys.evaluator().unwrap(), h.system.evaluator().unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (p, q) = (sys.p(), sys.q());
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let s = dom.sample(&mut rng);
        let pt = Point::zip(&dom.names(), &s);
        let x = pt.values_of(sys.independent()).unwrap();
        let u = pt.values_of(sys.dependent()).unwrap();
        let du = DMatrix::from_fn(q, p, |_, _| rng.random_range(-1.0..1.0));
        let jet = ev.project_jet(&Jet { x, u, du }).map_err(|e| e.to_string())?;
        let shift = rng.random_range(0.0..0.3);
        let r = evh.residual(&h.transport_jet(&jet, shift)).map_err(|e| e.to_string())?.amax();
        worst = worst.max(r);
    }
    ensure(worst < 1e-9, || format!("{name}: transported residual {worst:.2e}"))?;
    Ok(worst)
}

// Criterion 4: homogenization of the brownian and trautman fixtures.
fn homogenization() -> Outcome {
    let mut n = 0;
    let sys = fixtures::system("brownian").map_err(|e| e.to_string())?;
    let file = fixtures::file("brownian").map_err(|e| e.to_string())?;
    let opts = HomogenizeOptions {
        new_variable: file.homogenize.as_ref().and_then(|h| h.new_variable.clone()),
        domain: file.domain_box(),
        ..Default::default()
    };
    let h = sys.homogenize(&opts).map_err(|e| e.to_string())?;
    let brownian = vec![
        vec![vec!["0", "0"], vec!["0", "-1"]],
        vec![vec!["0", "(1 + beta^2*x^2)/(a + y)"], vec!["1", "0"]],
        vec![vec!["1", "0"], vec!["0", "1"]],
    ];
    n += entries_match(&h.system, &brownian, &h.domain)?;

    let sys = fixtures::system("trautman").map_err(|e| e.to_string())?;
    let h = sys
        .homogenize(&HomogenizeOptions { domain: fixtures::domain("trautman").unwrap(), ..Default::default() })
        .map_err(|e| e.to_string())?;
    let w = h.new_variable.as_str();
    let (r1t, r2x) = (format!("(-v0 - {w})/(-k^2*u)"), format!("-(v0 + {w})/(k^2*u)"));
    let trautman = vec![
        vec![vec!["1/(-k^2*u)", "0", "0"], vec![r1t.as_str(), "0", "1"], vec!["-v1/(-k^2*u)", "0", "0"]],
        vec![vec!["0", "1/(k^2*u)", "0"], vec!["0", r2x.as_str(), "0"], vec!["0", "-v1/(k^2*u)", "1"]],
        vec![vec!["1", "0", "0"], vec!["0", "1", "0"], vec!["0", "0", "1"]],
    ];
    n += entries_match(&h.system, &trautman, &h.domain)?;
    let r1 = transport_check("brownian", 41)?;
    let r2 = transport_check("trautman", 42)?;
    Ok(format!("{n} entries match, transported residuals {:.1e} / {:.1e}", r1, r2))
}

fn example2_elements() -> (QuasilinearSystem, DomainBox, Vec<WaveElement>) {
    let file = fixtures::file("example2").unwrap();
    let sys = file.to_system().unwrap();
    let els = file.waves.iter().map(|w| WaveElement::from_section(w, sys.space()).unwrap()).collect();
    (sys, file.domain_box(), els)
}

// Criterion 5: the condition suite on the example2 pair.
fn conditions() -> Outcome {
    let (sys, dom, els) = example2_elements();
    let zt = ZeroTest { seed: 5, ..ZeroTest::default() };
    let r = check_kwave_conditions(&sys, &els, &dom, &zt).map_err(|e| e.to_string())?;
    ensure(zt.trials == 32, || "expected 32 samples".into())?;
    ensure(r.all_hold(), || format!("{r:?}"))?;
    let mut bad = els.clone();
    bad[0].lambda[0] = parse("1 + x", sys.space()).unwrap();
    let r = check_kwave_conditions(&sys, &bad, &dom, &zt).map_err(|e| e.to_string())?;
    let w = r.closedness.witness().ok_or("perturbed closedness did not fail")?;
    ensure(w.value.abs() > 1e-3, || format!("witness value {:.2e}", w.value))?;
    Ok(format!("four verdicts hold; perturbed closedness fails with |dλ∧λ| = {:.3}", w.value.abs()))
}

// Criterion 6: rescaling to commuting frames.
fn frobenius() -> Outcome {
    let plane = DomainBox::new().with("x", -1.0, 1.0).with("y", -1.0, 1.0);
    let fields = vec![vec![Expr::one(), Expr::zero()], vec![Expr::zero(), p("exp(x)").unwrap()]];
    let r = rescale_frame(&fields, &["x", "y"], &plane, &RescaleOptions::default()).map_err(|e| e.to_string())?;
    let rescaled = r.rescaled_fields().ok_or("no symbolic factors")?;
    let br = lie_bracket(&rescaled[0], &rescaled[1], &["x", "y"]);
    let sym = r.residuals.iter().map(|x| x.max_residual).fold(0.0, f64::max);
    ensure(br.iter().all(Expr::is_zero_const) || sym < 1e-10, || format!("symbolic residual {sym:.2e}"))?;

    let fields = vec![
        vec![p("1 + x^2 + w^2").unwrap(), Expr::zero(), Expr::zero(), Expr::zero()],
        vec![Expr::zero(), p("exp(x)").unwrap(), p("w*exp(x)").unwrap(), Expr::zero()],
        vec![Expr::zero(), Expr::zero(), p("2 + sin(w + x)").unwrap(), Expr::zero()],
    ];
    let dom = DomainBox::new().with("x", 0.0, 0.4).with("y", 0.0, 0.4).with("z", 0.0, 0.4).with("w", 0.0, 0.4);
    let opts = RescaleOptions { path: RescalePath::Grid, check_points: 100, ..Default::default() };
    let g = rescale_frame(&fields, &["x", "y", "z", "w"], &dom, &opts).map_err(|e| e.to_string())?;
    let grid = g.residuals.iter().map(|x| x.max_residual).fold(0.0, f64::max);
    ensure(g.commutes() && grid < 1e-6, || format!("grid residual {grid:.2e}"))?;

    let chi = ["c1", "c2"];
    let cdom = DomainBox::new().with("c1", -1.0, 1.0).with("c2", 0.5, 1.0);
    let v = compatibility_check(&[p("c2^2").unwrap(), Expr::zero()], &chi, &cdom, &ZeroTest::default());
    let w = v.witness().ok_or("incompatible fixture accepted")?;
    let h = [p("c2^2").unwrap(), Expr::zero()];
    ensure(
        matches!(rescale_with_coefficients(&h, &chi, &cdom, &ZeroTest::default()), Err(FrobeniusError::IncompatibleSystem { .. })),
        || "rescale_with_coefficients accepted an incompatible system".into(),
    )?;
    Ok(format!(
        "symbolic residual {sym:.1e}, grid residual {grid:.1e} at 100 points, incompatible fixture rejected (defect {:.3})",
        w.value
    ))
}

// Criterion 7: the property suites in seeded form.
fn properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let dom = unit_box();
    let zt = ZeroTest::default().with_trials(16);

    for _ in 0..20 {
        let f: Vec<Vec<Expr>> = (0..3).map(|_| (0..3).map(|_| random_expr(&mut rng, 2)).collect()).collect();
        let ab = lie_bracket(&f[0], &f[1], &VARS);
        let ba = lie_bracket(&f[1], &f[0], &VARS);
        let j = [
            lie_bracket(&f[0], &lie_bracket(&f[1], &f[2], &VARS), &VARS),
            lie_bracket(&f[1], &lie_bracket(&f[2], &f[0], &VARS), &VARS),
            lie_bracket(&f[2], &ab, &VARS),
        ];
        for i in 0..3 {
            ensure(zt.check(&(&ab[i] + &ba[i]), &dom).unwrap().is_zero(), || "antisymmetry".into())?;
            let s = Expr::add_all(j.iter().map(|v| v[i].clone()));
            ensure(zt.check(&s, &dom).unwrap().is_zero(), || "Jacobi identity".into())?;
        }
    }

    for _ in 0..100 {
        let e = random_expr(&mut rng, 6);
        let pt = random_point(&mut rng);
        for v in VARS {
            let d = e.diff(v).eval_point(&pt).unwrap();
            let fd = fd_partial(&e, v, &pt);
            ensure((d - fd).abs() <= 1e-4 * d.abs().max(1.0), || format!("d/d{v} of {e}: {d} vs {fd}"))?;
        }
    }

    let mut xi_err = 0.0f64;
    for trial in 0..50 {
        let k = 1 + trial % 3;
        let gs: Vec<_> = (0..k).map(|_| random_vector(&mut rng, 3)).collect();
        let ls: Vec<_> = (0..k).map(|_| random_vector(&mut rng, 4)).collect();
        let mut xi: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..2.0)).collect();
        if trial % 5 == 0 {
            xi[0] = 0.0;
        }
        let rec = recover_numeric(&synthesize(&xi, &gs, &ls), &gs, &ls).map_err(|e| e.to_string())?;
        for (a, b) in rec.xi.iter().zip(&xi) {
            xi_err = xi_err.max((a - b).abs());
        }
        let nz = xi.iter().filter(|x| **x != 0.0).count();
        ensure(rec.rank == nz, || format!("rank {} for {nz} nonzero coefficients", rec.rank))?;
    }
    ensure(xi_err < 1e-10, || format!("round-trip error {xi_err:.2e}"))?;

    let xs = names(&["x", "y"]);
    let pdom = DomainBox::new().with("x", 0.5, 1.5).with("y", 0.5, 1.5).with("u", -1.0, 1.0);
    for _ in 0..20 {
        let phi = random_potential(&mut rng);
        let lambda: Vec<Expr> = xs.iter().map(|x| phi.diff(x)).collect();
        let el = WaveElement::new("w", lambda.clone(), vec![Expr::one()]);
        let r = find_potential(&el, &xs, &names(&["u"]), &Point::new().with("x", 1.0).with("y", 1.0), &pdom, &zt)
            .map_err(|e| e.to_string())?;
        let psi = r.potential.expr().ok_or("line-integral potential for an exact form")?;
        for (x, l) in xs.iter().zip(&lambda) {
            ensure(zt.check(&(&psi.diff(x) - &(&r.factor * l)), &pdom).unwrap().is_zero(), || format!("dφ ≠ λ for {phi}"))?;
        }
    }

    // Flow-built double wave: the γ± frame with weights 1/2 commutes.
    let file = fixtures::file("example2").unwrap();
    let (sys, _, els) = example2_elements();
    let (mut spec, _) = flow_spec_from_section(file.hodograph.as_ref().unwrap(), &sys, &els).unwrap();
    spec.tau_min = vec![1.6, -0.4];
    spec.tau_max = vec![2.4, 0.4];
    spec.spacing = Some(0.05);
    let s = kwave::solver::build_hodograph(&spec).map_err(|e| e.to_string())?;
    let swap = s.checks.swap_mismatch.ok_or("no swap check")?;
    ensure(swap < 1e-7, || format!("swap mismatch {swap:.2e}"))?;

    let closed = ClosedForm(|x: &[f64]| vec![-x[2].abs().ln(), x[0]]);
    let x = [1.5, 2.0, 0.2];
    let err = |h: f64| (fd_jacobian(&closed, &x, None, h, false).unwrap()[(0, 2)] + 1.0 / 0.2).abs();
    let ratio = err(1e-4) / err(1e-5);
    ensure((50.0..=200.0).contains(&ratio), || format!("FD error ratio {ratio:.1}"))?;
    Ok(format!("brackets, derivatives, round trip ({xi_err:.1e}), potentials, swap {swap:.1e}, FD ratio {ratio:.1}"))
}

fn example3_solver() -> ImplicitSolver {
    let mut spec = FlowSpec::new(names(&["R"]), names(&["u"]), vec![vec![Expr::one()]]);
    spec.tau_min = vec![-25.0];
    spec.tau_max = vec![1.0];
    let surface = closed_form_surface(&spec, &[p("R").unwrap()]).unwrap();
    let pot: PotentialEval = Potential::Symbolic(p("-t*(u + u^2) + ln(|x*y|)").unwrap())
        .evaluator(&names(&["t", "x", "y"]), &names(&["u"]))
        .unwrap();
    let cfg = ImplicitSolveConfig { initial: InitialGuess::FromU(vec![-20.0]), exec: Exec::Sequential, ..Default::default() };
    ImplicitSolver::new(surface, vec![pot], names(&["t", "x", "y"]), cfg).unwrap()
}

// Criterion 8: the flagged catastrophe locus brackets the root of the
// discriminant (t + 1)² + 4t ln|xy|.
fn catastrophes() -> Outcome {
    let s = example3_solver();
    let mut cells = Vec::new();
    for (x, y) in [(0.3f64, 0.3f64), (0.5, 0.5), (0.4, 0.6)] {
        let spec = format!("t=0.05:0.6:111, x={x}, y={y}");
        let field = s.solve(&Grid::from_spec(&spec, &s.independent).unwrap()).map_err(|e| e.to_string())?;
        let disc = |t: f64| (t + 1.0).powi(2) + 4.0 * t * (x * y).ln();
        let i = field.points.iter().position(|p| p.status == PointStatus::Catastrophe).ok_or("nothing flagged")?;
        ensure(i > 0, || "flagged at the first grid point".into())?;
        let (ta, tb) = (field.points[i - 1].x[0], field.points[i].x[0]);
        // Scalar bisection for the first sign change of the discriminant.
        let (mut lo, mut hi) = (0.05, 0.6);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if disc(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        ensure(ta <= lo && lo <= tb, || format!("({x}, {y}): root {lo:.5} outside [{ta:.5}, {tb:.5}]"))?;
        ensure(field.points[..i].iter().all(|p| p.status == PointStatus::Converged), || "gap before the locus".into())?;
        cells.push(format!("{lo:.4} in [{ta:.3}, {tb:.3}]"));
    }
    Ok(cells.join(", "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("double-wave reproduction", double_wave),
        ("simple-wave closed forms", simple_waves),
        ("example-3 explicit solution", example3),
        ("homogenization fixtures", homogenization),
        ("condition suite", conditions),
        ("modified Frobenius rescaling", frobenius),
        ("property suites", properties),
        ("catastrophe detection", catastrophes),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("criterion {}: PASS {name} [{secs:.2} s] {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name} [{secs:.2} s] {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
