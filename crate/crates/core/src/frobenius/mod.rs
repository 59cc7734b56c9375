//! Rescaling a frame X₁..X_r whose pairwise brackets stay in the pair's own
//! span, `[Xᵢ, Xⱼ] = hⁱ Xᵢ + hʲ Xⱼ`, into commuting fields fᵢXᵢ.
//!
//! Two constructions are available. The symbolic one follows the inductive
//! proof for r ≤ 3: rescale the first pair, solve `Xᵢ ln|f₃| = −h³ᵢ` for the
//! third factor, then correct the first two factors along the rescaled
//! third field. The grid one works for any r: it builds, for each j, a
//! flow-box chart whose first coordinate χⱼ is constant along the other
//! fields, and takes `fⱼ = 1 / Xⱼ(χⱼ)`.

mod flowbox;

use serde::Serialize;
use thiserror::Error;

pub use flowbox::{FlowBox, FlowBoxOptions};

use crate::expr::{DomainBox, EvalError, Expr, Point, Witness, ZeroTest, ZeroTestError};
use crate::geometry::{self, decompose_in_frame, lie_bracket, verdict_all, GeometryError, Verdict};
use crate::par::Exec;

/// Grid-path commutation tolerance, relative to the field magnitudes.
pub const GRID_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrobeniusError {
    #[error("[X{i}, X{j}] leaves span{{X{i}, X{j}}}: residual {:.3e} at {:?}", .witness.value, .witness.point)]
    NotInSpan { i: usize, j: usize, witness: Witness },
    #[error("the fields are dependent: smallest singular value {:.3e} at {:?}", .witness.value, .witness.point)]
    DegenerateFrame { witness: Witness },
    #[error("incompatible stage-one system ({check}): {:.3e} at {:?}", .witness.value, .witness.point)]
    IncompatibleSystem { check: String, witness: Witness },
    #[error("flow-box straightening failed at {point:?}: {reason}")]
    StraighteningFailed { point: Vec<f64>, reason: String },
    #[error("no symbolic rescaling found: {0}")]
    SymbolicFailed(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error(transparent)]
    Geometry(GeometryError),
    #[error(transparent)]
    ZeroTest(#[from] ZeroTestError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl From<GeometryError> for FrobeniusError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::DegenerateFrame { witness } => FrobeniusError::DegenerateFrame { witness },
            GeometryError::ZeroTest(z) => FrobeniusError::ZeroTest(z),
            GeometryError::Eval(z) => FrobeniusError::Eval(z),
            other => FrobeniusError::Geometry(other),
        }
    }
}

/// `[Xᵢ, Xⱼ] = h_i Xᵢ + h_j Xⱼ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCoefficients {
    pub i: usize,
    pub j: usize,
    #[serde(serialize_with = "ser_expr")]
    pub h_i: Expr,
    #[serde(serialize_with = "ser_expr")]
    pub h_j: Expr,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairResidual {
    pub i: usize,
    pub j: usize,
    /// Largest sampled |[fᵢXᵢ, fⱼXⱼ]| (relative on the grid path).
    pub max_residual: f64,
    pub tolerance: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "path", rename_all = "snake_case")]
pub enum Factors {
    Symbolic {
        #[serde(serialize_with = "ser_exprs")]
        factors: Vec<Expr>,
    },
    Grid(GridFactors),
}

/// Factors evaluated on demand through a flow box, with a table of the
/// values at the check points for the report.
#[derive(Debug, Clone, Serialize)]
pub struct GridFactors {
    #[serde(skip)]
    pub flow_box: FlowBox,
    pub base_point: Point,
    pub flow_steps: usize,
    pub samples: Vec<FactorSample>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FactorSample {
    pub point: Point,
    pub factors: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameRescaling {
    pub variables: Vec<String>,
    #[serde(serialize_with = "ser_fields")]
    pub fields: Vec<Vec<Expr>>,
    pub coefficients: Vec<PairCoefficients>,
    pub factors: Factors,
    pub residuals: Vec<PairResidual>,
}

fn ser_expr<S: serde::Serializer>(e: &Expr, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(e)
}

fn ser_exprs<S: serde::Serializer>(es: &[Expr], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(es.iter().map(ToString::to_string))
}

fn ser_fields<S: serde::Serializer>(fs: &[Vec<Expr>], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(fs.iter().map(|f| f.iter().map(ToString::to_string).collect::<Vec<_>>()))
}

impl FrameRescaling {
    pub fn commutes(&self) -> bool {
        self.residuals.iter().all(|r| r.holds)
    }

    pub fn symbolic_factors(&self) -> Option<&[Expr]> {
        match &self.factors {
            Factors::Symbolic { factors } => Some(factors),
            Factors::Grid(_) => None,
        }
    }

    /// The commuting fields fᵢXᵢ, when the factors are symbolic.
    pub fn rescaled_fields(&self) -> Option<Vec<Vec<Expr>>> {
        let f = self.symbolic_factors()?;
        Some(self.fields.iter().zip(f).map(|(x, f)| x.iter().map(|c| f * c).collect()).collect())
    }

    /// Factor values at a point assigning every domain variable.
    pub fn factors_at(&self, p: &Point) -> Result<Vec<f64>, FrobeniusError> {
        match &self.factors {
            Factors::Symbolic { factors } => Ok(factors.iter().map(|f| f.eval_point(p)).collect::<Result<_, _>>()?),
            Factors::Grid(g) => g.flow_box.factors_at_point(p),
        }
    }
}

/// X(g) = Σ X^v ∂g/∂v.
pub fn apply_field<S: AsRef<str>>(field: &[Expr], vars: &[S], g: &Expr) -> Expr {
    Expr::add_all(field.iter().zip(vars).map(|(c, v)| c * &g.diff(v.as_ref())))
}

/// A variable in which `a` has a component and `b` structurally has none.
fn private_pivot(a: &[Expr], b: &[Expr]) -> Option<usize> {
    (0..a.len()).find(|&k| !a[k].is_zero_const() && b[k].is_zero_const())
}

/// The coefficients (hⁱ, hʲ) of `[Xi, Xj]` in span{Xi, Xj}.
pub fn pair_bracket_coefficients<S: AsRef<str>>(
    xi: &[Expr],
    xj: &[Expr],
    vars: &[S],
    dom: &DomainBox,
    zt: &ZeroTest,
) -> Result<(Expr, Expr), FrobeniusError> {
    let br = lie_bracket(xi, xj, vars);
    let frame = vec![xi.to_vec(), xj.to_vec()];
    // Fields with private components give the coefficients by division,
    // which keeps them readable; the Gram decomposition covers the rest.
    if let (Some(a), Some(b)) = (private_pivot(xi, xj), private_pivot(xj, xi)) {
        let (hi, hj) = (&br[a] / &xi[a], &br[b] / &xj[b]);
        let checks: Vec<(String, Expr)> = br
            .iter()
            .enumerate()
            .map(|(k, c)| (format!("residual[{k}]"), c - &(&hi * &xi[k]) - &hj * &xj[k]))
            .collect();
        if verdict_all(&zt.stream("pair/direct"), &checks, dom).holds() {
            return Ok((hi, hj));
        }
    }
    let d = decompose_in_frame(&br, &frame, dom, zt)?;
    match d.in_span {
        Verdict::Fails { witness, .. } => Err(FrobeniusError::NotInSpan { i: 0, j: 1, witness }),
        Verdict::Inconclusive { reason } => Err(FrobeniusError::SymbolicFailed(reason)),
        Verdict::Holds => Ok((d.coefficients[0].clone(), d.coefficients[1].clone())),
    }
}

/// All pairwise coefficients, with indices filled in.
pub fn all_pair_coefficients<S: AsRef<str>>(
    fields: &[Vec<Expr>],
    vars: &[S],
    dom: &DomainBox,
    zt: &ZeroTest,
) -> Result<Vec<PairCoefficients>, FrobeniusError> {
    let mut out = Vec::new();
    for i in 0..fields.len() {
        for j in i + 1..fields.len() {
            let zt = zt.stream(&format!("pair/{i}/{j}"));
            match pair_bracket_coefficients(&fields[i], &fields[j], vars, dom, &zt) {
                Ok((h_i, h_j)) => out.push(PairCoefficients { i, j, h_i, h_j }),
                Err(FrobeniusError::NotInSpan { witness, .. }) => {
                    return Err(FrobeniusError::NotInSpan { i, j, witness })
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

/// Cross-derivative test `∂hⱼ/∂χᵢ = ∂hᵢ/∂χⱼ` for the stage-one system
/// `∂ ln|f|/∂χᵢ = −hᵢ` in straightened coordinates χ.
pub fn compatibility_check<S: AsRef<str>>(h: &[Expr], chi: &[S], dom: &DomainBox, zt: &ZeroTest) -> Verdict {
    let mut checks = Vec::new();
    for i in 0..h.len() {
        for j in i + 1..h.len() {
            let (ci, cj) = (chi[i].as_ref(), chi[j].as_ref());
            checks.push((format!("d h[{j}]/d {ci} - d h[{i}]/d {cj}"), &h[j].diff(ci) - &h[i].diff(cj)));
        }
    }
    verdict_all(&zt.stream("compatibility"), &checks, dom)
}

/// The same test for commuting but not yet straightened fields Yᵢ, where
/// it reads Yᵢ(hⱼ) = Yⱼ(hᵢ).
pub fn compatibility_along<S: AsRef<str>>(
    h: &[Expr],
    fields: &[Vec<Expr>],
    vars: &[S],
    dom: &DomainBox,
    zt: &ZeroTest,
) -> Verdict {
    let mut checks = Vec::new();
    for i in 0..h.len() {
        for j in i + 1..h.len() {
            let d = &apply_field(&fields[i], vars, &h[j]) - &apply_field(&fields[j], vars, &h[i]);
            checks.push((format!("Y{i}(h[{j}]) - Y{j}(h[{i}])"), d));
        }
    }
    verdict_all(&zt.stream("compatibility"), &checks, dom)
}

/// Solves the stage-one system `∂ ln|f|/∂χᵢ = −hᵢ` after checking its
/// compatibility condition.
pub fn rescale_with_coefficients<S: AsRef<str>>(
    h: &[Expr],
    chi: &[S],
    dom: &DomainBox,
    zt: &ZeroTest,
) -> Result<Expr, FrobeniusError> {
    if let Verdict::Fails { check, witness } = compatibility_check(h, chi, dom, zt) {
        return Err(FrobeniusError::IncompatibleSystem { check, witness });
    }
    let coord_field = |i: usize| -> Vec<Expr> {
        (0..chi.len()).map(|k| if k == i { Expr::one() } else { Expr::zero() }).collect()
    };
    let eqs: Vec<(Vec<Expr>, Expr)> = h.iter().enumerate().map(|(i, hi)| (coord_field(i), hi.neg())).collect();
    let g = solve_transport(&eqs, chi, dom, zt)
        .ok_or_else(|| FrobeniusError::SymbolicFailed("the stage-one integrals are outside the supported family".into()))?;
    Ok(exp_of(&g))
}

fn exp_of(g: &Expr) -> Expr {
    if g.is_zero_const() {
        Expr::one()
    } else {
        g.exp()
    }
}

/// Finds g with Zₖ(g) = cₖ for every equation, integrating one variable at
/// a time and keeping a candidate only if all equations seen so far hold.
fn solve_transport<S: AsRef<str>>(
    eqs: &[(Vec<Expr>, Expr)],
    vars: &[S],
    dom: &DomainBox,
    zt: &ZeroTest,
) -> Option<Expr> {
    let zt = zt.stream("transport");
    let holds = |g: &Expr, upto: usize| -> bool {
        let checks: Vec<(String, Expr)> = eqs[..upto]
            .iter()
            .enumerate()
            .map(|(k, (z, c))| (format!("eq{k}"), &apply_field(z, vars, g) - c))
            .collect();
        verdict_all(&zt, &checks, dom).holds()
    };
    let mut g = Expr::zero();
    for (k, (z, c)) in eqs.iter().enumerate() {
        if holds(&g, k + 1) {
            continue;
        }
        let r = c - &apply_field(z, vars, &g);
        let found = vars.iter().enumerate().filter(|(v, _)| !z[*v].is_zero_const()).find_map(|(v, name)| {
            let cand = &g + &geometry::integrate(&(&r / &z[v]), name.as_ref())?;
            holds(&cand, k + 1).then_some(cand)
        });
        g = found?;
    }
    Some(g)
}

/// Factors f with [fᵢXᵢ, fⱼXⱼ] = 0 for two fields:
/// `X₂ ln f₁ = h¹` and `X₁ ln f₂ = −h²`.
fn rescale_pair<S: AsRef<str>>(
    x1: &[Expr],
    x2: &[Expr],
    h1: &Expr,
    h2: &Expr,
    vars: &[S],
    dom: &DomainBox,
    zt: &ZeroTest,
) -> Result<(Expr, Expr), FrobeniusError> {
    let fail = || FrobeniusError::SymbolicFailed("no closed-form solution for the pair equations".into());
    let g1 = solve_transport(&[(x2.to_vec(), h1.clone())], vars, dom, &zt.stream("f1")).ok_or_else(fail)?;
    let g2 = solve_transport(&[(x1.to_vec(), h2.neg())], vars, dom, &zt.stream("f2")).ok_or_else(fail)?;
    Ok((exp_of(&g1), exp_of(&g2)))
}

fn scale(f: &Expr, x: &[Expr]) -> Vec<Expr> {
    if f.is_one_const() {
        x.to_vec()
    } else {
        x.iter().map(|c| f * c).collect()
    }
}

/// The symbolic construction for r ≤ 3.
pub fn rescale_symbolic<S: AsRef<str>>(
    fields: &[Vec<Expr>],
    vars: &[S],
    dom: &DomainBox,
    zt: &ZeroTest,
) -> Result<Vec<Expr>, FrobeniusError> {
    let pairs = all_pair_coefficients(fields, vars, dom, zt)?;
    let h = |i: usize, j: usize| pairs.iter().find(|p| p.i == i && p.j == j).expect("all pairs computed");
    match fields.len() {
        0 => Ok(Vec::new()),
        1 => Ok(vec![Expr::one()]),
        2 => {
            let p = h(0, 1);
            let (f1, f2) = rescale_pair(&fields[0], &fields[1], &p.h_i, &p.h_j, vars, dom, zt)?;
            Ok(vec![f1, f2])
        }
        3 => {
            let p = h(0, 1);
            let (a1, a2) = rescale_pair(&fields[0], &fields[1], &p.h_i, &p.h_j, vars, dom, zt)?;
            let y = [scale(&a1, &fields[0]), scale(&a2, &fields[1])];
            let x3 = &fields[2];

            // Stage one: Yᵢ ln|f₃| = −h³ᵢ.
            let mut h3 = Vec::new();
            for (i, yi) in y.iter().enumerate() {
                let (_, h) = pair_bracket_coefficients(yi, x3, vars, dom, &zt.stream(&format!("stage1/{i}")))?;
                h3.push(h);
            }
            if let Verdict::Fails { check, witness } = compatibility_along(&h3, &y, vars, dom, zt) {
                return Err(FrobeniusError::IncompatibleSystem { check, witness });
            }
            let eqs: Vec<(Vec<Expr>, Expr)> = y.iter().zip(&h3).map(|(yi, h)| (yi.clone(), h.neg())).collect();
            let g3 = solve_transport(&eqs, vars, dom, &zt.stream("stage1"))
                .ok_or_else(|| FrobeniusError::SymbolicFailed("stage-one equations not integrable in closed form".into()))?;
            let f3 = exp_of(&g3);
            let xt = scale(&f3, x3);

            // Stage two: [Yᵢ, X̃₃] = cᵢYᵢ, and fᵢ with X̃₃ ln fᵢ = cᵢ, Yₖ fᵢ = 0.
            let mut out = Vec::new();
            for i in 0..2 {
                let (c, _) = pair_bracket_coefficients(&y[i], &xt, vars, dom, &zt.stream(&format!("stage2/{i}")))?;
                let eqs = vec![(xt.clone(), c), (y[1 - i].clone(), Expr::zero())];
                let g = solve_transport(&eqs, vars, dom, &zt.stream(&format!("stage2/{i}")))
                    .ok_or_else(|| FrobeniusError::SymbolicFailed("stage-two equation not integrable in closed form".into()))?;
                out.push(&[a1.clone(), a2.clone()][i] * &exp_of(&g));
            }
            out.push(f3);
            Ok(out)
        }
        r => Err(FrobeniusError::SymbolicFailed(format!("the symbolic path handles at most three fields, got {r}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RescalePath {
    /// Symbolic when it succeeds, grid otherwise.
    Auto,
    Symbolic,
    Grid,
}

#[derive(Debug, Clone)]
pub struct RescaleOptions {
    pub zero_test: ZeroTest,
    pub path: RescalePath,
    /// Number of points at which commutation is checked.
    pub check_points: usize,
    pub flow_box: FlowBoxOptions,
    pub exec: Exec,
}

impl Default for RescaleOptions {
    fn default() -> Self {
        RescaleOptions {
            zero_test: ZeroTest::default(),
            path: RescalePath::Auto,
            check_points: 100,
            flow_box: FlowBoxOptions::default(),
            exec: Exec::default(),
        }
    }
}

fn symbolic_residuals<S: AsRef<str>>(
    z: &[Vec<Expr>],
    vars: &[S],
    dom: &DomainBox,
    opts: &RescaleOptions,
) -> Result<Vec<PairResidual>, FrobeniusError> {
    let mut out = Vec::new();
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            let br = lie_bracket(&z[i], &z[j], vars);
            let zt = opts.zero_test.stream(&format!("residual/{i}/{j}"));
            let (_, vals) = geometry::sample(&br, dom, &zt, opts.check_points)?;
            let max_residual = vals.iter().flat_map(|(_, v)| v.iter()).fold(0.0f64, |a, v| a.max(v.abs()));
            let checks: Vec<(String, Expr)> =
                br.iter().enumerate().map(|(k, e)| (format!("[Z{i},Z{j}][{k}]"), e.clone())).collect();
            let holds = verdict_all(&zt, &checks, dom).holds();
            out.push(PairResidual { i, j, max_residual, tolerance: zt.threshold, holds });
        }
    }
    Ok(out)
}

/// Rescales `fields` (vectors over `vars`) into a commuting frame. Full
/// frames (r equal to the number of variables) are accepted.
pub fn rescale_frame<S: AsRef<str>>(
    fields: &[Vec<Expr>],
    vars: &[S],
    dom: &DomainBox,
    opts: &RescaleOptions,
) -> Result<FrameRescaling, FrobeniusError> {
    let n = vars.len();
    if fields.iter().any(|f| f.len() != n) {
        return Err(FrobeniusError::Shape("every field needs one component per variable".into()));
    }
    if fields.len() > n {
        return Err(FrobeniusError::Shape(format!("{} fields cannot be independent in {n} variables", fields.len())));
    }
    let zt = &opts.zero_test;
    let variables: Vec<String> = vars.iter().map(|v| v.as_ref().to_string()).collect();
    if let Err(witness) = geometry::check_independent(fields, dom, &zt.stream("frame"))? {
        return Err(FrobeniusError::DegenerateFrame { witness });
    }
    let coefficients = all_pair_coefficients(fields, vars, dom, zt)?;

    if opts.path != RescalePath::Grid {
        match rescale_symbolic(fields, vars, dom, zt) {
            Ok(factors) => {
                let z: Vec<Vec<Expr>> = fields.iter().zip(&factors).map(|(x, f)| scale(f, x)).collect();
                let residuals = symbolic_residuals(&z, vars, dom, opts)?;
                if residuals.iter().all(|r| r.holds) {
                    return Ok(FrameRescaling {
                        variables,
                        fields: fields.to_vec(),
                        coefficients,
                        factors: Factors::Symbolic { factors },
                        residuals,
                    });
                }
                if opts.path == RescalePath::Symbolic {
                    return Err(FrobeniusError::SymbolicFailed("the rescaled fields do not commute".into()));
                }
            }
            Err(e @ (FrobeniusError::IncompatibleSystem { .. } | FrobeniusError::NotInSpan { .. })) => return Err(e),
            Err(e) if opts.path == RescalePath::Symbolic => return Err(e),
            Err(_) => {}
        }
    }

    let fb = FlowBox::new(fields, &variables, dom, opts.flow_box)?;
    let names: Vec<String> = dom.names().into_iter().map(String::from).collect();
    let pts = dom.samples(zt.stream("grid/check").seed, opts.check_points);
    let results = opts.exec.map(&pts, |x| {
        let p = Point::zip(&names, x);
        fb.check_point(&p)
    });
    let mut samples = Vec::new();
    let pairs: Vec<(usize, usize)> = coefficients.iter().map(|c| (c.i, c.j)).collect();
    let mut worst = vec![0.0f64; pairs.len()];
    for (x, r) in pts.iter().zip(results) {
        let (factors, res) = r?;
        for (w, v) in worst.iter_mut().zip(res) {
            *w = w.max(v);
        }
        samples.push(FactorSample { point: Point::zip(&names, x), factors });
    }
    let residuals = pairs
        .iter()
        .zip(worst)
        .map(|(&(i, j), w)| PairResidual { i, j, max_residual: w, tolerance: GRID_TOL, holds: w < GRID_TOL })
        .collect();
    Ok(FrameRescaling {
        variables,
        fields: fields.to_vec(),
        coefficients,
        factors: Factors::Grid(GridFactors {
            base_point: fb.base_point(),
            flow_steps: fb.steps(),
            flow_box: fb,
            samples,
        }),
        residuals,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::expr::parse_unchecked as p;

    pub(crate) fn v(xs: &[&str]) -> Vec<Expr> {
        xs.iter().map(|s| p(s).unwrap()).collect()
    }

    fn plane() -> DomainBox {
        DomainBox::new().with("x", -1.0, 1.0).with("y", -1.0, 1.0)
    }

    /// X₁ = a₁∂x, X₂ = a₂(∂y + w∂z), X₃ = a₃∂z on R⁴.
    pub(crate) fn grid_fixture() -> (Vec<Vec<Expr>>, Vec<String>, DomainBox) {
        let fields = vec![
            v(&["1 + x^2 + w^2", "0", "0", "0"]),
            v(&["0", "exp(x)", "w*exp(x)", "0"]),
            v(&["0", "0", "2 + sin(w + x)", "0"]),
        ];
        let vars = ["x", "y", "z", "w"].map(String::from).to_vec();
        let dom = DomainBox::new().with("x", 0.0, 0.4).with("y", 0.0, 0.4).with("z", 0.0, 0.4).with("w", 0.0, 0.4);
        (fields, vars, dom)
    }

    #[test]
    fn pair_coefficients_by_hand() {
        let zt = ZeroTest::default();
        let (a, b) = pair_bracket_coefficients(&v(&["1", "0"]), &v(&["0", "exp(x)"]), &["x", "y"], &plane(), &zt).unwrap();
        assert_eq!((a, b), (Expr::zero(), Expr::one()));
        let (a, b) = pair_bracket_coefficients(&v(&["1", "0"]), &v(&["0", "1"]), &["x", "y"], &plane(), &zt).unwrap();
        assert_eq!((a, b), (Expr::zero(), Expr::zero()));
    }

    #[test]
    fn bracket_outside_the_pair_is_rejected() {
        let dom = plane().with("z", -1.0, 1.0);
        let zt = ZeroTest::default();
        // [∂x, x∂z] = ∂z is outside span{∂x, ∂y}.
        let br = lie_bracket(&v(&["1", "0", "0"]), &v(&["0", "0", "x"]), &["x", "y", "z"]);
        let d = decompose_in_frame(&br, &[v(&["1", "0", "0"]), v(&["0", "1", "0"])], &dom, &zt).unwrap();
        assert!(d.in_span.fails());
        // [∂x, ∂y + x∂z] = ∂z is outside span{∂x, ∂y + x∂z}.
        let r = pair_bracket_coefficients(&v(&["1", "0", "0"]), &v(&["0", "1", "x"]), &["x", "y", "z"], &dom, &zt);
        match r {
            Err(FrobeniusError::NotInSpan { witness, .. }) => assert!(witness.value.abs() > 0.1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn compatibility_examples() {
        let chi = ["c1", "c2"];
        let dom = DomainBox::new().with("c1", -1.0, 1.0).with("c2", 0.5, 1.0).with("e", 0.0, 1.0);
        let zt = ZeroTest::default();
        assert!(compatibility_check(&v(&["2", "-3"]), &chi, &dom, &zt).holds());
        assert!(compatibility_check(&v(&["e^2", "sin(e)"]), &chi, &dom, &zt).holds());
        let bad = compatibility_check(&v(&["c2^2", "0"]), &chi, &dom, &zt);
        let w = bad.witness().expect("fails");
        // The defect is -2χ₂.
        assert!((w.value + 2.0 * w.point.get("c2").unwrap()).abs() < 1e-12);
        assert!(matches!(
            rescale_with_coefficients(&v(&["c2^2", "0"]), &chi, &dom, &zt),
            Err(FrobeniusError::IncompatibleSystem { .. })
        ));
        let f = rescale_with_coefficients(&v(&["c2", "c1"]), &chi, &dom, &zt).unwrap();
        // ln f = -c1*c2.
        let want = p("exp(-c1*c2)").unwrap();
        assert!(zt.check(&(&f - &want), &dom).unwrap().is_zero(), "{f}");
    }

    #[test]
    fn exponential_pair_rescales_to_coordinate_fields() {
        let fields = vec![v(&["1", "0"]), v(&["0", "exp(x)"])];
        let r = rescale_frame(&fields, &["x", "y"], &plane(), &RescaleOptions::default()).unwrap();
        let f = r.symbolic_factors().unwrap();
        assert_eq!(f[0], Expr::one());
        let want = p("exp(-x)").unwrap();
        assert!(ZeroTest::default().check(&(&f[1] - &want), &plane()).unwrap().is_zero());
        assert!(r.residuals.iter().all(|r| r.max_residual < 1e-10));
    }

    #[test]
    fn commuting_frame_keeps_unit_factors() {
        let fields = vec![v(&["sqrt(u1)", "1"]), v(&["-sqrt(u1)", "1"])];
        let dom = DomainBox::new().with("u1", 0.1, 1.7).with("u2", 1.0, 3.0);
        let r = rescale_frame(&fields, &["u1", "u2"], &dom, &RescaleOptions::default()).unwrap();
        assert_eq!(r.symbolic_factors().unwrap(), &[Expr::one(), Expr::one()]);
        assert!(r.residuals.iter().all(|r| r.max_residual == 0.0));
    }

    #[test]
    fn three_scaled_coordinate_fields_symbolically() {
        let fields = vec![v(&["x^2 + 1", "0", "0"]), v(&["0", "exp(x)", "0"]), v(&["0", "0", "exp(y + x)"])];
        let dom = DomainBox::new().with("x", 0.0, 1.0).with("y", 0.0, 1.0).with("z", 0.0, 1.0);
        let r = rescale_frame(&fields, &["x", "y", "z"], &dom, &RescaleOptions { path: RescalePath::Symbolic, ..Default::default() })
            .unwrap();
        assert!(r.commutes(), "{:?}", r.residuals);
    }

    #[test]
    fn dependent_fields_are_rejected() {
        let fields = vec![v(&["1", "x"]), v(&["2", "2*x"])];
        assert!(matches!(
            rescale_frame(&fields, &["x", "y"], &plane(), &RescaleOptions::default()),
            Err(FrobeniusError::DegenerateFrame { .. })
        ));
    }

    #[test]
    fn grid_path_commutes_on_r4() {
        let (fields, vars, dom) = grid_fixture();
        let opts = RescaleOptions { path: RescalePath::Grid, check_points: 12, ..Default::default() };
        let r = rescale_frame(&fields, &vars, &dom, &opts).unwrap();
        assert!(r.commutes(), "{:?}", r.residuals);
        // Factors are one at the base point.
        let f = r.factors_at(&r_base(&r)).unwrap();
        assert!(f.iter().all(|v| (v - 1.0).abs() < 1e-12), "{f:?}");
    }

    fn r_base(r: &FrameRescaling) -> Point {
        match &r.factors {
            Factors::Grid(g) => g.base_point.clone(),
            _ => unreachable!(),
        }
    }
}
