use serde::Serialize;

use super::{check_independent, decompose_in_frame, lie_bracket, potential, verdict_all, GeometryError, Verdict, WaveElement};
use crate::expr::{DomainBox, Expr, ZeroTest};
use crate::system::{ExprMatrix, QuasilinearSystem};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledVerdict {
    pub check: String,
    #[serde(flatten)]
    pub verdict: Verdict,
}

/// Verdicts of the k-wave existence conditions for a family of elements.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub elements: Vec<String>,
    pub wave_relation: Vec<LabeledVerdict>,
    /// (a) the γ frame spans an involutive distribution.
    pub involutivity: Verdict,
    /// (b) bracket coefficients along third directions vanish.
    pub cross_coefficients: Verdict,
    /// (c) λ^(s) differentiated along γ_(σ) stays in span{λ^(s), λ^(σ)}.
    pub lambda_profile: Verdict,
    /// (d) d_xλ^(s) ∧ λ^(s) = 0.
    pub closedness: Verdict,
    /// The individual checks behind the four verdicts.
    pub details: Vec<LabeledVerdict>,
    pub threshold: f64,
    pub trials: usize,
    pub seed: u64,
}

impl ConditionReport {
    pub fn all_hold(&self) -> bool {
        self.wave_relation.iter().all(|v| v.verdict.holds())
            && [&self.involutivity, &self.cross_coefficients, &self.lambda_profile, &self.closedness]
                .iter()
                .all(|v| v.holds())
    }
}

/// All 3×3 minors of a 3×p matrix given by rows; empty when p < 3.
pub(crate) fn three_minors(rows: [&[Expr]; 3]) -> Vec<Expr> {
    let p = rows[0].len();
    let mut out = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            for k in j + 1..p {
                let m = ExprMatrix::from_rows(rows.iter().map(|r| vec![r[i].clone(), r[j].clone(), r[k].clone()]).collect());
                out.push(m.det());
            }
        }
    }
    out
}

/// Checks the wave relation, involutivity, vanishing cross coefficients,
/// the λ-profile condition and closedness for `elements`. The elements
/// must have pointwise independent λ's and γ's on the domain.
pub fn check_kwave_conditions(
    sys: &QuasilinearSystem,
    elements: &[WaveElement],
    dom: &DomainBox,
    zt: &ZeroTest,
) -> Result<ConditionReport, GeometryError> {
    let els: Vec<WaveElement> = elements.iter().map(|e| e.bound(sys)).collect();
    let (p, q) = (sys.p(), sys.q());
    for e in &els {
        if e.lambda.len() != p || e.gamma.len() != q {
            return Err(GeometryError::Shape(format!("element `{}` has the wrong number of components", e.label)));
        }
    }
    let lambdas: Vec<Vec<Expr>> = els.iter().map(|e| e.lambda.clone()).collect();
    let gammas: Vec<Vec<Expr>> = els.iter().map(|e| e.gamma.clone()).collect();
    if let Err(witness) = check_independent(&lambdas, dom, &zt.stream("independence/lambda"))? {
        return Err(GeometryError::DependentElements { which: "covectors λ", witness });
    }
    if let Err(witness) = check_independent(&gammas, dom, &zt.stream("independence/gamma"))? {
        return Err(GeometryError::DependentElements { which: "vectors γ", witness });
    }

    let wave_relation: Vec<LabeledVerdict> = elements
        .iter()
        .map(|e| LabeledVerdict { check: format!("wave relation of {}", e.label), verdict: e.wave_relation_verdict(sys, dom, zt) })
        .collect();

    let u = sys.dependent();
    let mut details = Vec::new();
    let mut inv = Vec::new();
    let mut cross = Vec::new();
    for a in 0..els.len() {
        for b in a + 1..els.len() {
            let (la, lb) = (&els[a].label, &els[b].label);
            let br = lie_bracket(&els[a].gamma, &els[b].gamma, u);
            let tag = format!("[{la},{lb}]");
            let dec = decompose_in_frame(&br, &gammas, dom, &zt.stream(&format!("bracket/{tag}")))?;
            let v = match dec.in_span {
                Verdict::Fails { witness, .. } => Verdict::Fails { check: format!("{tag} outside the γ frame"), witness },
                other => other,
            };
            details.push(LabeledVerdict { check: format!("involutivity {tag}"), verdict: v.clone() });
            inv.push(v);
            let checks: Vec<(String, Expr)> = dec
                .coefficients
                .iter()
                .enumerate()
                .filter(|&(s, _)| s != a && s != b)
                .map(|(s, c)| (format!("coefficient of {} in {tag}", els[s].label), c.clone()))
                .collect();
            let v = verdict_all(&zt.stream(&format!("cross/{tag}")), &checks, dom);
            details.push(LabeledVerdict { check: format!("cross coefficients {tag}"), verdict: v.clone() });
            cross.push(v);
        }
    }

    let mut profile = Vec::new();
    for (s, es) in els.iter().enumerate() {
        for (sg, eg) in els.iter().enumerate() {
            if s == sg {
                continue;
            }
            // λ^(s) differentiated along γ_(σ) in u.
            let dl: Vec<Expr> = es
                .lambda
                .iter()
                .map(|l| Expr::add_all(u.iter().zip(&eg.gamma).map(|(ub, g)| g * &l.diff(ub))))
                .collect();
            let minors = three_minors([&eg.lambda, &dl, &es.lambda]);
            let tag = format!("λ({})∧λ({}),γ({})∧λ({})", eg.label, es.label, eg.label, es.label);
            let checks: Vec<(String, Expr)> =
                minors.into_iter().enumerate().map(|(i, m)| (format!("{tag} minor {i}"), m)).collect();
            let v = verdict_all(&zt.stream(&format!("profile/{}/{}", es.label, eg.label)), &checks, dom);
            details.push(LabeledVerdict { check: format!("lambda profile {tag}"), verdict: v.clone() });
            profile.push(v);
        }
    }

    let mut closed = Vec::new();
    for e in &els {
        let v = potential::closedness(&e.lambda, sys.independent(), dom, &zt.stream(&format!("closed/{}", e.label)));
        details.push(LabeledVerdict { check: format!("closedness of {}", e.label), verdict: v.clone() });
        closed.push(v);
    }

    Ok(ConditionReport {
        elements: elements.iter().map(|e| e.label.clone()).collect(),
        wave_relation,
        involutivity: Verdict::combine(inv),
        cross_coefficients: Verdict::combine(cross),
        lambda_profile: Verdict::combine(profile),
        closedness: Verdict::combine(closed),
        details,
        threshold: zt.threshold,
        trials: zt.trials,
        seed: zt.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::geometry::tests::example2_elements;

    #[test]
    fn example2_pair_satisfies_every_condition() {
        let (sys, dom, els) = example2_elements();
        let r = check_kwave_conditions(&sys, &els, &dom, &ZeroTest::default()).unwrap();
        assert!(r.all_hold(), "{r:#?}");
    }

    #[test]
    fn single_element_has_vacuous_cross_conditions() {
        let (sys, dom, els) = example2_elements();
        let r = check_kwave_conditions(&sys, &els[..1], &dom, &ZeroTest::default()).unwrap();
        assert!(r.cross_coefficients.holds() && r.lambda_profile.holds() && r.involutivity.holds());
        assert!(r.details.iter().any(|d| d.check.starts_with("closedness")));
    }

    #[test]
    fn perturbed_lambda_breaks_closedness() {
        let (sys, dom, mut els) = example2_elements();
        els[0].lambda[0] = parse("1 + x", sys.space()).unwrap();
        let r = check_kwave_conditions(&sys, &els, &dom, &ZeroTest::default()).unwrap();
        let w = r.closedness.witness().expect("closedness must fail");
        // Coordinate formula: (dλ∧λ)_{txy} = −λ_y = 1/(y√u1).
        let (y, u1) = (w.point.get("y").unwrap(), w.point.get("u1").unwrap());
        assert!((w.value.abs() - 1.0 / (y * u1.sqrt())).abs() < 1e-12);
        assert!(w.value.abs() > 1e-3);
    }

    #[test]
    fn relabelling_permutes_verdicts_consistently() {
        let (sys, dom, els) = example2_elements();
        let rev: Vec<WaveElement> = els.iter().rev().cloned().collect();
        let a = check_kwave_conditions(&sys, &els, &dom, &ZeroTest::default()).unwrap();
        let b = check_kwave_conditions(&sys, &rev, &dom, &ZeroTest::default()).unwrap();
        assert_eq!(a.all_hold(), b.all_hold());
        let mut broken = els.clone();
        broken[1].lambda[0] = parse("1 + x", sys.space()).unwrap();
        let rb: Vec<WaveElement> = broken.iter().rev().cloned().collect();
        let a = check_kwave_conditions(&sys, &broken, &dom, &ZeroTest::default()).unwrap();
        let b = check_kwave_conditions(&sys, &rb, &dom, &ZeroTest::default()).unwrap();
        assert_eq!(a.closedness.fails(), b.closedness.fails());
        assert_eq!(a.closedness.witness(), b.closedness.witness());
    }

    #[test]
    fn dependent_elements_are_rejected() {
        let (sys, dom, els) = example2_elements();
        let twice = vec![els[0].clone(), WaveElement { label: "copy".into(), ..els[0].clone() }];
        assert!(matches!(
            check_kwave_conditions(&sys, &twice, &dom, &ZeroTest::default()),
            Err(GeometryError::DependentElements { .. })
        ));
    }
}
