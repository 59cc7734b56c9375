use crate::expr::Expr;
use crate::system::QuasilinearSystem;

/// For each γ_(a) and each equation α, the vector field on x-space
/// 𝔛^α_a = Σᵢ (Σ_β A^{iα}_β γ^β_(a)) ∂/∂xⁱ, indexed `[a][α][i]`.
/// ⟨λ, 𝔛^α_a⟩ vanishes for all α exactly when (λ, γ_(a)) satisfy the wave
/// relation.
pub fn x_fields(sys: &QuasilinearSystem, gammas: &[Vec<Expr>]) -> Vec<Vec<Vec<Expr>>> {
    gammas
        .iter()
        .map(|g| {
            let cols: Vec<Vec<Expr>> = sys.a().iter().map(|ai| ai.mul_vec(g)).collect();
            (0..sys.m()).map(|alpha| cols.iter().map(|c| c[alpha].clone()).collect()).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_unchecked as p, ZeroTest};
    use crate::fixtures;
    use crate::system::HomogenizeOptions;

    #[test]
    fn brownian_fields_with_gamma2_zero() {
        let f = fixtures::file("brownian").unwrap();
        let sys = f.to_system().unwrap();
        let opts = HomogenizeOptions { new_variable: Some("y".into()), ..Default::default() };
        let h = sys.homogenize(&opts).unwrap().system;
        let g = vec![p("g1").unwrap(), Expr::zero()];
        let xf = x_fields(&h, &[g]);
        // X₁ = γ¹ ∂_y, X₂ = γ¹ ∂_x in the (t, x, y) coordinates.
        assert_eq!(xf[0][0], vec![Expr::zero(), Expr::zero(), p("g1").unwrap()]);
        assert_eq!(xf[0][1], vec![Expr::zero(), p("g1").unwrap(), Expr::zero()]);
    }

    #[test]
    fn zero_gamma_gives_zero_fields() {
        let sys = fixtures::system("example2").unwrap();
        let xf = x_fields(&sys, &[vec![Expr::zero(), Expr::zero()]]);
        assert!(xf[0].iter().flatten().all(Expr::is_zero_const));
    }

    #[test]
    fn contraction_with_lambda_vanishes_for_wave_elements() {
        let sys = fixtures::system("example2").unwrap();
        let dom = fixtures::domain("example2").unwrap();
        let lam: Vec<Expr> = ["1", "0", "-1/(y*sqrt(u1))"].iter().map(|s| p(s).unwrap()).collect();
        let g = vec![p("sqrt(u1)").unwrap(), Expr::one()];
        let xf = x_fields(&sys, &[g]);
        for field in &xf[0] {
            let c = Expr::add_all(field.iter().zip(&lam).map(|(f, l)| f * l));
            assert!(ZeroTest::default().with_trials(20).check(&c, &dom).unwrap().is_zero());
        }
    }
}
