//! Fixed-step and step-doubling RK4.

use thiserror::Error;

use crate::expr::EvalError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("step size underflow at s = {s}")]
    StepUnderflow { s: f64 },
    #[error("right-hand side: {0}")]
    Eval(#[from] EvalError),
}

/// One classical RK4 step of size `h` from (s, y).
pub fn rk4_step<F>(f: &F, s: f64, y: &[f64], h: f64) -> Result<Vec<f64>, EvalError>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>, EvalError>,
{
    let n = y.len();
    let shifted = |k: &[f64], c: f64| -> Vec<f64> { (0..n).map(|i| y[i] + c * k[i]).collect() };
    let k1 = f(s, y)?;
    let k2 = f(s + 0.5 * h, &shifted(&k1, 0.5 * h))?;
    let k3 = f(s + 0.5 * h, &shifted(&k2, 0.5 * h))?;
    let k4 = f(s + h, &shifted(&k3, h))?;
    Ok((0..n).map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect())
}

/// `steps` equal RK4 steps from s0 to s1. With the step count fixed the
/// result is a smooth function of (s0, s1, y0), which finite differences
/// of the flow rely on.
pub fn rk4_fixed<F>(f: &F, s0: f64, y0: &[f64], s1: f64, steps: usize) -> Result<Vec<f64>, EvalError>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>, EvalError>,
{
    if s1 == s0 {
        return Ok(y0.to_vec());
    }
    let steps = steps.max(1);
    let h = (s1 - s0) / steps as f64;
    let mut y = y0.to_vec();
    for k in 0..steps {
        y = rk4_step(f, s0 + k as f64 * h, &y, h)?;
    }
    Ok(y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Per-step error bound, relative to 1 + |y|.
    pub tol: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl { h_init: 1e-2, h_min: 1e-10, h_max: 1e-2, tol: 1e-12 }
    }
}

/// Step-doubling RK4 from s0 to s1. Each accepted step compares one full
/// step with two half steps and keeps the Richardson-corrected value.
/// `accept` sees every accepted (s, y) and may stop the integration by
/// returning false. Returns the trajectory including the start.
pub fn rk4_adaptive<F, A>(
    f: &F,
    s0: f64,
    y0: &[f64],
    s1: f64,
    ctl: StepControl,
    mut accept: A,
) -> Result<Vec<(f64, Vec<f64>)>, OdeError>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>, EvalError>,
    A: FnMut(f64, &[f64]) -> bool,
{
    let dir = if s1 >= s0 { 1.0 } else { -1.0 };
    let mut out = vec![(s0, y0.to_vec())];
    let (mut s, mut y) = (s0, y0.to_vec());
    let mut h = ctl.h_init.min(ctl.h_max);
    while dir * (s1 - s) > 1e-14 * (1.0 + s1.abs()) {
        h = h.min(dir * (s1 - s));
        let full = rk4_step(f, s, &y, dir * h)?;
        let half = rk4_step(f, s, &y, dir * h / 2.0)?;
        let two = rk4_step(f, s + dir * h / 2.0, &half, dir * h / 2.0)?;
        let scale = 1.0 + y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let err = if full.iter().chain(&two).all(|v| v.is_finite()) {
            full.iter().zip(&two).fold(0.0f64, |a, (p, q)| a.max((p - q).abs())) / 15.0
        } else {
            f64::INFINITY
        };
        let ok = err.is_finite() && err <= ctl.tol * scale;
        if ok {
            s += dir * h;
            y = two.iter().zip(&full).map(|(t, f)| t + (t - f) / 15.0).collect();
            out.push((s, y.clone()));
            if !accept(s, &y) {
                break;
            }
            let grow = if err == 0.0 { 2.0 } else { (0.9 * (ctl.tol * scale / err).powf(0.2)).clamp(0.2, 2.0) };
            h = (h * grow).min(ctl.h_max);
        } else if h <= ctl.h_min {
            return Err(OdeError::StepUnderflow { s });
        } else {
            let shrink = if err.is_finite() { (0.9 * (ctl.tol * scale / err).powf(0.2)).max(0.2) } else { 0.2 };
            h = (h * shrink).max(ctl.h_min);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_rhs_is_exact() {
        let f = |_: f64, _: &[f64]| Ok(vec![1.0]);
        let y = rk4_fixed(&f, 0.0, &[0.0], 0.73, 5).unwrap();
        assert!((y[0] - 0.73).abs() < 1e-15);
    }

    #[test]
    fn exponential_decay_to_tolerance() {
        let f = |_: f64, y: &[f64]| Ok(vec![-y[0]]);
        let tr = rk4_adaptive(&f, 0.0, &[1.0], 2.0, StepControl::default(), |_, _| true).unwrap();
        let (s, y) = tr.last().unwrap();
        assert_eq!(*s, 2.0);
        assert!((y[0] - (-2.0f64).exp()).abs() < 1e-11);
        let back = rk4_adaptive(&f, 2.0, &y.clone(), 0.0, StepControl::default(), |_, _| true).unwrap();
        assert!((back.last().unwrap().1[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn blow_up_underflows() {
        let f = |_: f64, y: &[f64]| Ok(vec![y[0] * y[0]]);
        let ctl = StepControl { h_min: 1e-6, ..Default::default() };
        assert!(matches!(rk4_adaptive(&f, 0.0, &[1.0], 2.0, ctl, |_, _| true), Err(OdeError::StepUnderflow { .. })));
    }
}
