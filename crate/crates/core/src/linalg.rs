//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Singular-value ratio that marks a rank cut.
pub const RANK_GAP: f64 = 1e6;
/// Below this every singular value counts as zero.
pub const RANK_FLOOR: f64 = 1e-14;

/// Singular values in decreasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Numerical rank by the first singular-value gap exceeding `gap`.
pub fn rank_with(m: &DMatrix<f64>, gap: f64, floor: f64) -> usize {
    let s = singular_values(m);
    if s.first().is_none_or(|&s0| s0 <= floor) {
        return 0;
    }
    for i in 0..s.len() - 1 {
        if s[i + 1] <= floor || s[i] / s[i + 1] > gap {
            return i + 1;
        }
    }
    s.len()
}

pub fn rank(m: &DMatrix<f64>) -> usize {
    rank_with(m, RANK_GAP, RANK_FLOOR)
}

/// Smallest singular value (zero for an empty matrix).
pub fn sigma_min(m: &DMatrix<f64>) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// 2-norm condition number; infinite when singular.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&a), Some(&b)) if b > 0.0 => a / b,
        _ => f64::INFINITY,
    }
}

/// Orthonormal basis of the null space: right singular vectors whose
/// singular value is below `rel_tol` times the largest one.
pub fn null_space(m: &DMatrix<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
    let (r, c) = m.shape();
    if c == 0 {
        return Vec::new();
    }
    // Pad to at least square so the thin SVD yields a full right basis.
    let mut sq = DMatrix::zeros(r.max(c), c);
    sq.view_mut((0, 0), (r, c)).copy_from(m);
    let svd = sq.svd(false, true);
    let vt = svd.v_t.expect("requested V");
    let smax = svd.singular_values.max();
    let tol = rel_tol * smax.max(RANK_FLOOR);
    (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= tol)
        .map(|i| vt.row(i).transpose())
        .collect()
}

/// Least-squares solution of `a x = b` by SVD.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    svd.solve(b, smax * 1e-13).ok()
}

/// Orthonormal vectors completing `vs` (columns) to a basis of R^n.
pub fn orthonormal_complement(vs: &DMatrix<f64>) -> Vec<DVector<f64>> {
    null_space(&vs.transpose(), 1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_dyads() {
        let g = DVector::from_vec(vec![1.0, 2.0]);
        let l = DVector::from_vec(vec![0.5, -1.0, 3.0]);
        let m = &g * l.transpose();
        assert_eq!(rank(&m), 1);
        assert_eq!(rank(&DMatrix::<f64>::zeros(2, 3)), 0);
        assert_eq!(rank(&DMatrix::<f64>::identity(3, 3)), 3);
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let ns = null_space(&m, 1e-12);
        assert_eq!(ns.len(), 2);
        for v in ns {
            assert!((&m * v).norm() < 1e-14);
        }
    }

    #[test]
    fn complement_spans_the_rest() {
        let vs = DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 2.0]);
        let c = orthonormal_complement(&vs);
        assert_eq!(c.len(), 2);
        assert!(c.iter().all(|v| v[2].abs() < 1e-14));
    }
}
