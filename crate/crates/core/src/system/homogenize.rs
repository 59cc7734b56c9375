//! Reduction of an inhomogeneous system to a homogeneous one in one more
//! independent variable.
//!
//! With b¹ ≠ 0, the matrix M (row 0 = e₀ᵀ/b¹, row i = eᵢᵀ − (bⁱ/b¹)e₀ᵀ)
//! sends b to e₁. Shifting the first dependent variable, ũ = u − s·e₁,
//! turns `Σ MAⁱ uᵢ = e₁` into `Σ Ãⁱ ũᵢ + ũ_s = 0`.

use std::collections::HashMap;

use nalgebra::DMatrix;
use thiserror::Error;

use super::{ExprMatrix, Jet, QuasilinearSystem, SystemError};
use crate::expr::{DomainBox, Expr, Point, VarSpace, Witness, ZeroTest, ZeroTestError};

/// Magnitude below which b¹ counts as vanishing at a sample.
const SOURCE_FLOOR: f64 = 1e-10;
const SOURCE_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HomogenizeError {
    #[error("no source component is nonzero on the domain")]
    SourcesVanish,
    #[error("the leading source {entry} vanishes on the domain (|{entry}| = {:.3e} at {:?})", .witness.value.abs(), .witness.point)]
    DomainError { entry: String, witness: Witness },
    #[error("`{0}` is not usable as the new variable name")]
    BadName(String),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    ZeroTest(#[from] ZeroTestError),
}

#[derive(Debug, Clone, Default)]
pub struct HomogenizeOptions {
    /// Name of the new independent variable; `xh` (suffixed with `_`
    /// until unique) when absent.
    pub new_variable: Option<String>,
    /// Working domain. When empty, source vanishing is decided structurally.
    pub domain: DomainBox,
    pub zero_test: ZeroTest,
}

#[derive(Debug, Clone)]
pub struct Homogenization {
    pub system: QuasilinearSystem,
    /// m×m matrix with M·b = e₁ (identity when the input is homogeneous).
    pub m: ExprMatrix,
    pub new_variable: String,
    /// The dependent variable shifted by the new variable.
    pub substituted: String,
    /// Output row r is input row `permutation[r]`.
    pub permutation: Vec<usize>,
    /// Set when the input already had b ≡ 0 and was returned unchanged.
    pub all_sources_zero: bool,
    /// Working domain for the output variables.
    pub domain: DomainBox,
}

/// Outcome of testing whether a homogeneous solution descends to the
/// original system, i.e. whether ũ + s·e₁ is independent of s.
#[derive(Debug, Clone, PartialEq)]
pub struct ReverseCheck {
    pub max_dependence: f64,
    pub tolerance: f64,
    /// Original-variable point where the dependence is largest.
    pub witness: Option<Vec<f64>>,
}

impl ReverseCheck {
    pub fn descends(&self) -> bool {
        self.max_dependence <= self.tolerance
    }
}

fn fresh_name(space: &VarSpace, base: &str) -> String {
    let mut name = base.to_string();
    while space.contains(&name) {
        name.push('_');
    }
    name
}

impl QuasilinearSystem {
    pub fn homogenize(&self, opts: &HomogenizeOptions) -> Result<Homogenization, HomogenizeError> {
        let m = self.m();
        if self.is_homogeneous() {
            return Ok(Homogenization {
                system: self.clone(),
                m: ExprMatrix::identity(m),
                new_variable: String::new(),
                substituted: String::new(),
                permutation: (0..m).collect(),
                all_sources_zero: true,
                domain: opts.domain.clone(),
            });
        }
        if self.q() == 0 {
            return Err(SystemError::Shape("no dependent variables to shift".into()).into());
        }

        // Pick the first row whose source is not identically zero.
        let zt = opts.zero_test.stream("homogenize/source");
        let mut lead = None;
        for (r, b) in self.b.iter().enumerate() {
            if b.is_zero_const() {
                continue;
            }
            if opts.domain.is_empty() || !zt.check(&self.bind(b), &opts.domain)?.is_zero() {
                lead = Some(r);
                break;
            }
        }
        let lead = lead.ok_or(HomogenizeError::SourcesVanish)?;
        let mut permutation: Vec<usize> = (0..m).collect();
        permutation.remove(lead);
        permutation.insert(0, lead);

        let b: Vec<Expr> = permutation.iter().map(|&r| self.b[r].clone()).collect();
        if !opts.domain.is_empty() {
            self.check_lead_source(&b[0], lead, &opts.domain, &zt)?;
        }

        let mut mm = ExprMatrix::zeros(m, m);
        mm.set(0, 0, Expr::one() / &b[0]);
        for r in 1..m {
            mm.set(r, 0, -(&b[r] / &b[0]));
            mm.set(r, r, Expr::one());
        }

        let new_variable = match &opts.new_variable {
            Some(n) if self.space.contains(n) || !crate::expr::valid_ident(n) => {
                return Err(HomogenizeError::BadName(n.clone()))
            }
            Some(n) => n.clone(),
            None => fresh_name(&self.space, "xh"),
        };
        let substituted = self.space.dependent[0].clone();
        let shift: HashMap<String, Expr> =
            [(substituted.clone(), Expr::var(&substituted) + Expr::var(&new_variable))].into_iter().collect();

        let mut a: Vec<ExprMatrix> = self
            .a
            .iter()
            .map(|ai| {
                let permuted = ExprMatrix::from_rows_or_empty(
                    permutation.iter().map(|&r| ai.row(r).to_vec()).collect(),
                    self.q(),
                );
                mm.mul(&permuted).map(|e| e.subst_many(&shift))
            })
            .collect();
        a.push(ExprMatrix::delta(m, self.q()));

        let mut space = self.space.clone();
        space.independent.push(new_variable.clone());
        let system = QuasilinearSystem::new(space, self.constants.clone(), a, vec![Expr::zero(); m])?;

        let mut domain = opts.domain.clone();
        match domain.get(&substituted) {
            Some((lo, hi)) => {
                let w = (hi - lo) / 2.0;
                domain.set(&new_variable, 0.0, w);
                domain.set(&substituted, lo, hi - w);
            }
            None if !domain.is_empty() => domain.set(&new_variable, 0.0, 1.0),
            None => {}
        }

        Ok(Homogenization { system, m: mm, new_variable, substituted, permutation, all_sources_zero: false, domain })
    }

    /// Rejects a leading source that gets too close to zero on the domain.
    fn check_lead_source(&self, b1: &Expr, row: usize, dom: &DomainBox, zt: &ZeroTest) -> Result<(), HomogenizeError> {
        let names = dom.names();
        let prog = match self.bind(b1).compile(&names) {
            Ok(p) => p,
            Err(crate::expr::EvalError::Unassigned(v)) => return Err(ZeroTestError::Unassigned(v).into()),
            Err(e) => return Err(SystemError::Eval { entry: format!("b[{row}]"), source: e }.into()),
        };
        let mut worst: Option<(Vec<f64>, f64)> = None;
        for x in dom.samples(zt.seed, SOURCE_SAMPLES) {
            if let Ok(v) = prog.eval(&x) {
                if worst.as_ref().is_none_or(|(_, w)| v.abs() < w.abs()) {
                    worst = Some((x, v));
                }
            }
        }
        match worst {
            Some((x, v)) if v.abs() < SOURCE_FLOOR => Err(HomogenizeError::DomainError {
                entry: format!("b[{row}]"),
                witness: Witness { point: Point::zip(&names, &x), value: v },
            }),
            _ => Ok(()),
        }
    }
}

impl Homogenization {
    /// Jet of ũ(x, s) = u(x) − s·e₁ induced by a jet of u at x.
    pub fn transport_jet(&self, jet: &Jet, s: f64) -> Jet {
        if self.all_sources_zero {
            return jet.clone();
        }
        let (q, p) = jet.du.shape();
        let mut x = jet.x.clone();
        x.push(s);
        let mut u = jet.u.clone();
        u[0] -= s;
        let mut du = DMatrix::zeros(q, p + 1);
        du.view_mut((0, 0), (q, p)).copy_from(&jet.du);
        du[(0, p)] = -1.0;
        Jet { x, u, du }
    }

    /// Tests whether a solution ũ(x, s) of the homogeneous system gives a
    /// solution of the original one: ũ + s·e₁ must not depend on s.
    /// `points` are original-variable points, `s_values` the shifts tried.
    pub fn check_reverse(
        &self,
        u_tilde: &dyn Fn(&[f64]) -> Vec<f64>,
        points: &[Vec<f64>],
        s_values: &[f64],
        tolerance: f64,
    ) -> ReverseCheck {
        let mut max_dependence = 0.0f64;
        let mut witness = None;
        for x in points {
            let lifted = |s: f64| {
                let mut xs = x.clone();
                if !self.all_sources_zero {
                    xs.push(s);
                }
                let mut u = u_tilde(&xs);
                if !self.all_sources_zero {
                    u[0] += s;
                }
                u
            };
            let Some((&s0, rest)) = s_values.split_first() else { continue };
            let base = lifted(s0);
            for &s in rest {
                let d = lifted(s).iter().zip(&base).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                if d > max_dependence {
                    max_dependence = d;
                    witness = Some(x.clone());
                }
            }
        }
        ReverseCheck { max_dependence, tolerance, witness }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::fixtures;

    fn opts(dom: DomainBox) -> HomogenizeOptions {
        HomogenizeOptions { domain: dom, ..Default::default() }
    }

    #[test]
    fn m_maps_b_to_e1() {
        let sys = fixtures::system("trautman").unwrap();
        let dom = fixtures::domain("trautman").unwrap();
        let h = sys.homogenize(&opts(dom.clone())).unwrap();
        let b: Vec<Expr> = h.permutation.iter().map(|&r| sys.b()[r].clone()).collect();
        let mb = h.m.mul_vec(&b);
        for (r, e) in mb.iter().enumerate() {
            let target = if r == 0 { Expr::one() } else { Expr::zero() };
            let v = ZeroTest::default().check(&sys.bind(&(e - &target)), &dom).unwrap();
            assert!(v.is_zero(), "row {r}: {v:?}");
        }
    }

    #[test]
    fn homogeneous_input_is_flagged() {
        let sys = fixtures::system("example2").unwrap();
        let h = sys.homogenize(&HomogenizeOptions::default()).unwrap();
        assert!(h.all_sources_zero);
        assert_eq!(h.system, sys);
        assert!(h.m.is_structural_delta());
    }

    #[test]
    fn rows_are_permuted_to_a_nonzero_source() {
        let sp = VarSpace::new(["x"], ["u", "v"], Vec::<&str>::new()).unwrap();
        let p = |s: &str| parse(s, &sp).unwrap();
        let sys = QuasilinearSystem::new(
            sp.clone(),
            vec![],
            vec![ExprMatrix::from_rows(vec![vec![p("1"), p("0")], vec![p("0"), p("u")]])],
            vec![p("0"), p("v")],
        )
        .unwrap();
        let dom = DomainBox::new().with("x", 0.0, 1.0).with("u", 1.0, 2.0).with("v", 1.0, 2.0);
        let h = sys.homogenize(&opts(dom)).unwrap();
        assert_eq!(h.permutation, vec![1, 0]);
        assert_eq!(h.new_variable, "xh");
        assert_eq!(h.system.independent(), ["x", "xh"]);
    }

    #[test]
    fn identically_vanishing_sources_are_rejected() {
        let sp = VarSpace::new(["x"], ["u"], Vec::<&str>::new()).unwrap();
        let sys =
            QuasilinearSystem::new(sp.clone(), vec![], vec![ExprMatrix::identity(1)], vec![parse("x*(x - 1)", &sp).unwrap()])
                .unwrap();
        let wide = DomainBox::new().with("x", 0.0, 2.0).with("u", 0.0, 1.0);
        assert!(sys.homogenize(&opts(wide)).is_ok());
        let pinned = DomainBox::new().with("x", 1.0, 1.0).with("u", 0.0, 1.0);
        assert!(matches!(sys.homogenize(&opts(pinned)), Err(HomogenizeError::SourcesVanish)));
    }

    #[test]
    fn new_variable_avoids_collisions() {
        let sp = VarSpace::new(["xh"], ["u"], Vec::<&str>::new()).unwrap();
        let sys =
            QuasilinearSystem::new(sp.clone(), vec![], vec![ExprMatrix::identity(1)], vec![parse("u", &sp).unwrap()])
                .unwrap();
        let h = sys.homogenize(&HomogenizeOptions::default()).unwrap();
        assert_eq!(h.new_variable, "xh_");
        let named = HomogenizeOptions { new_variable: Some("u".into()), ..Default::default() };
        assert!(matches!(sys.homogenize(&named), Err(HomogenizeError::BadName(_))));
    }

    #[test]
    fn reverse_check_tells_descending_solutions_apart() {
        let sys = fixtures::system("brownian").unwrap();
        let h = sys.homogenize(&opts(fixtures::domain("brownian").unwrap())).unwrap();
        let pts = vec![vec![0.1, 0.2], vec![0.5, -0.3]];
        let good = |x: &[f64]| vec![(x[0] + x[1]).exp() - x[2], x[1]];
        let bad = |x: &[f64]| vec![x[0] + x[2] * x[2], 0.0];
        assert!(h.check_reverse(&good, &pts, &[0.0, 0.4, 1.0], 1e-12).descends());
        let r = h.check_reverse(&bad, &pts, &[0.0, 0.4, 1.0], 1e-12);
        assert!(!r.descends());
        assert!(r.witness.is_some());
    }

    #[test]
    fn tiny_lead_source_gives_a_witness() {
        let sp = VarSpace::new(["x"], ["u"], Vec::<&str>::new()).unwrap();
        let sys = QuasilinearSystem::new(sp.clone(), vec![], vec![ExprMatrix::identity(1)], vec![parse("u", &sp).unwrap()])
            .unwrap();
        // Nonzero for the identity test but below the source floor.
        let dom = DomainBox::new().with("x", 0.0, 1.0).with("u", 1e-12, 1e-12);
        let o = HomogenizeOptions { domain: dom, zero_test: ZeroTest { threshold: 1e-13, ..Default::default() }, new_variable: None };
        match sys.homogenize(&o) {
            Err(HomogenizeError::DomainError { entry, witness }) => {
                assert_eq!(entry, "b[0]");
                assert!(witness.value.abs() < SOURCE_FLOOR);
            }
            other => panic!("{other:?}"),
        }
    }
}
