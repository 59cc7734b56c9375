use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::FrobeniusError;
use crate::expr::{Compiled, DomainBox, Expr, Point};
use crate::linalg;
use crate::ode::rk4_fixed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowBoxOptions {
    /// Target RK4 step along flows; the step count is fixed per box.
    pub step: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Displacement used for the finite-difference commutation check.
    pub fd_step: f64,
}

impl Default for FlowBoxOptions {
    fn default() -> Self {
        FlowBoxOptions { step: 1e-2, newton_tol: 1e-13, max_newton: 30, fd_step: 1e-4 }
    }
}

#[derive(Debug)]
struct Programs {
    comps: Vec<Vec<Compiled>>,
    /// Row-major ∂Xᵃ/∂vᵇ per field.
    jac: Vec<Vec<Compiled>>,
}

/// Charts `Ψⱼ(t, s, η) = Π_{i≠j} flow_{Xᵢ}^{sᵢ} ∘ flow_{Xⱼ}^{t} (p₀ + Nη)`
/// around a base point p₀, N spanning a complement of the frame at p₀.
/// The coordinate t of Ψⱼ⁻¹ is constant along every Xᵢ with i ≠ j, so
/// fⱼ = 1/Xⱼ(t) makes the rescaled fields commute.
#[derive(Debug, Clone)]
pub struct FlowBox {
    n: usize,
    r: usize,
    vars: Vec<String>,
    params: Vec<String>,
    progs: Arc<Programs>,
    base: Vec<f64>,
    base_params: Vec<f64>,
    normals: DMatrix<f64>,
    steps: usize,
    opts: FlowBoxOptions,
}

fn err(p: &[f64], reason: impl Into<String>) -> FrobeniusError {
    FrobeniusError::StraighteningFailed { point: p.to_vec(), reason: reason.into() }
}

impl FlowBox {
    pub fn new(fields: &[Vec<Expr>], vars: &[String], dom: &DomainBox, opts: FlowBoxOptions) -> Result<FlowBox, FrobeniusError> {
        let n = vars.len();
        let r = fields.len();
        let params: Vec<String> =
            dom.names().into_iter().filter(|d| !vars.iter().any(|v| v == d)).map(String::from).collect();
        let slots: Vec<&String> = vars.iter().chain(&params).collect();
        let mut comps = Vec::new();
        let mut jac = Vec::new();
        for f in fields {
            comps.push(f.iter().map(|c| c.compile(&slots)).collect::<Result<Vec<_>, _>>()?);
            jac.push(
                f.iter()
                    .flat_map(|c| vars.iter().map(move |v| c.diff(v)))
                    .map(|d| d.compile(&slots))
                    .collect::<Result<Vec<_>, _>>()?,
            );
        }
        let center = dom.center();
        let base = center.values_of(vars).ok_or_else(|| err(&[], "the domain must cover the frame variables"))?;
        let base_params = center.values_of(&params).expect("parameters come from the domain");
        // A fixed number of steps keeps the charts smooth in their arguments.
        let diam = dom.names().iter().filter_map(|v| dom.get(v)).map(|(lo, hi)| (hi - lo).powi(2)).sum::<f64>().sqrt();
        let steps = ((diam / opts.step).ceil() as usize).clamp(8, 400);
        let mut fb = FlowBox {
            n,
            r,
            vars: vars.to_vec(),
            params,
            progs: Arc::new(Programs { comps, jac }),
            base,
            base_params,
            normals: DMatrix::zeros(n, 0),
            steps,
            opts,
        };
        let mut frame = DMatrix::zeros(n, r);
        for a in 0..r {
            let x = fb.field(a, &fb.base, &fb.base_params)?;
            frame.set_column(a, &DVector::from_vec(x));
        }
        if linalg::rank(&frame) < r {
            return Err(err(&fb.base, "the frame is degenerate at the base point"));
        }
        let comp = linalg::orthonormal_complement(&frame);
        if !comp.is_empty() {
            fb.normals = DMatrix::from_columns(&comp);
        }
        Ok(fb)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn base_point(&self) -> Point {
        let mut p = Point::zip(&self.vars, &self.base);
        for (k, v) in self.params.iter().zip(&self.base_params) {
            p.set(k, *v);
        }
        p
    }

    fn field(&self, a: usize, y: &[f64], params: &[f64]) -> Result<Vec<f64>, FrobeniusError> {
        let vals: Vec<f64> = y.iter().chain(params).copied().collect();
        Ok(self.progs.comps[a].iter().map(|c| c.eval(&vals)).collect::<Result<_, _>>()?)
    }

    /// Flow of Xₐ for time s from y, with its Jacobian from the
    /// variational equation integrated alongside.
    fn flow(&self, a: usize, s: f64, y: &[f64], params: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>), FrobeniusError> {
        let n = self.n;
        if s == 0.0 {
            return Ok((y.to_vec(), DMatrix::identity(n, n)));
        }
        let progs = &self.progs;
        let rhs = |_: f64, z: &[f64]| {
            let vals: Vec<f64> = z[..n].iter().chain(params).copied().collect();
            let mut st = Vec::new();
            let mut out = vec![0.0; n + n * n];
            let mut dx = vec![0.0; n * n];
            for i in 0..n {
                out[i] = progs.comps[a][i].eval_in(&vals, &mut st)?;
                for k in 0..n {
                    dx[i * n + k] = progs.jac[a][i * n + k].eval_in(&vals, &mut st)?;
                }
            }
            // M' = DX·M, M row-major after the state.
            for i in 0..n {
                for j in 0..n {
                    out[n + i * n + j] = (0..n).map(|k| dx[i * n + k] * z[n + k * n + j]).sum();
                }
            }
            Ok(out)
        };
        let mut z0 = y.to_vec();
        z0.extend(DMatrix::<f64>::identity(n, n).transpose().iter());
        let z = rk4_fixed(&rhs, 0.0, &z0, s, self.steps)?;
        let m = DMatrix::from_row_slice(n, n, &z[n..]);
        Ok((z[..n].to_vec(), m))
    }

    fn order(&self, j: usize) -> Vec<usize> {
        std::iter::once(j).chain((0..self.r).filter(|&i| i != j)).collect()
    }

    /// Ψⱼ(z) and its Jacobian, columns ordered (t, sᵢ for i ≠ j, η).
    fn chart(&self, j: usize, z: &[f64], params: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>), FrobeniusError> {
        let (n, r) = (self.n, self.r);
        let eta = DVector::from_column_slice(&z[r..]);
        let mut y: Vec<f64> = (DVector::from_column_slice(&self.base) + &self.normals * eta).iter().copied().collect();
        let mut normal_cols = self.normals.clone();
        let mut flow_cols: Vec<DVector<f64>> = Vec::with_capacity(r);
        for (l, a) in self.order(j).into_iter().enumerate() {
            let (y1, m) = self.flow(a, z[l], &y, params)?;
            for c in flow_cols.iter_mut() {
                *c = &m * &*c;
            }
            normal_cols = &m * normal_cols;
            flow_cols.push(DVector::from_vec(self.field(a, &y1, params)?));
            y = y1;
        }
        let mut jac = DMatrix::zeros(n, n);
        for (k, c) in flow_cols.iter().enumerate() {
            jac.set_column(k, c);
        }
        for k in 0..n - r {
            jac.set_column(r + k, &normal_cols.column(k));
        }
        Ok((DVector::from_vec(y), jac))
    }

    /// Newton inversion of Ψⱼ at p.
    fn invert(&self, j: usize, p: &[f64], params: &[f64], guess: Option<&[f64]>) -> Result<(Vec<f64>, DMatrix<f64>), FrobeniusError> {
        let (n, r) = (self.n, self.r);
        let target = DVector::from_column_slice(p);
        let mut z = match guess {
            Some(g) => g.to_vec(),
            None => {
                let mut lin = DMatrix::zeros(n, n);
                for (k, a) in self.order(j).into_iter().enumerate() {
                    lin.set_column(k, &DVector::from_vec(self.field(a, &self.base, params)?));
                }
                for k in 0..n - r {
                    lin.set_column(r + k, &self.normals.column(k));
                }
                let d = &target - DVector::from_column_slice(&self.base);
                lin.lu().solve(&d).ok_or_else(|| err(p, "singular frame at the base point"))?.iter().copied().collect()
            }
        };
        let scale = 1.0 + target.amax();
        for _ in 0..self.opts.max_newton {
            let (y, jac) = self.chart(j, &z, params)?;
            let f = y - &target;
            if f.amax() <= self.opts.newton_tol * scale {
                return Ok((z, jac));
            }
            let dz = jac.lu().solve(&f).ok_or_else(|| err(p, "singular chart Jacobian"))?;
            for (zi, d) in z.iter_mut().zip(dz.iter()) {
                *zi -= d;
            }
            if z.iter().any(|v| !v.is_finite()) {
                break;
            }
        }
        Err(err(p, format!("Newton did not converge in {} iterations", self.opts.max_newton)))
    }

    /// fⱼ at p with the chart coordinates found on the way.
    fn factor(&self, j: usize, p: &[f64], params: &[f64], guess: Option<&[f64]>) -> Result<(f64, Vec<f64>), FrobeniusError> {
        let (z, jac) = self.invert(j, p, params, guess)?;
        let x = DVector::from_vec(self.field(j, p, params)?);
        let d = jac.lu().solve(&x).ok_or_else(|| err(p, "singular chart Jacobian"))?;
        if d[0].abs() < 1e-300 {
            return Err(err(p, "the factor blows up"));
        }
        Ok((1.0 / d[0], z))
    }

    fn split(&self, p: &Point) -> Result<(Vec<f64>, Vec<f64>), FrobeniusError> {
        let y = p.values_of(&self.vars).ok_or_else(|| err(&[], "point misses a frame variable"))?;
        let params = p.values_of(&self.params).ok_or_else(|| err(&y, "point misses a parameter"))?;
        Ok((y, params))
    }

    pub fn factors_at_point(&self, p: &Point) -> Result<Vec<f64>, FrobeniusError> {
        let (y, params) = self.split(p)?;
        (0..self.r).map(|j| Ok(self.factor(j, &y, &params, None)?.0)).collect()
    }

    /// Factors at p and, for each pair i < j, the relative commutator
    /// |[Zᵢ, Zⱼ]| / (1 + |Zᵢ||Zⱼ|) of Zₖ = fₖXₖ by central differences.
    pub(super) fn check_point(&self, p: &Point) -> Result<(Vec<f64>, Vec<f64>), FrobeniusError> {
        let (y, params) = self.split(p)?;
        let mut factors = Vec::new();
        let mut charts = Vec::new();
        for j in 0..self.r {
            let (f, z) = self.factor(j, &y, &params, None)?;
            factors.push(f);
            charts.push(z);
        }
        let z_at = |k: usize, q: &[f64]| -> Result<DVector<f64>, FrobeniusError> {
            let (f, _) = self.factor(k, q, &params, Some(&charts[k]))?;
            Ok(DVector::from_vec(self.field(k, q, &params)?) * f)
        };
        let zs: Vec<DVector<f64>> = (0..self.r)
            .map(|k| Ok(DVector::from_vec(self.field(k, &y, &params)?) * factors[k]))
            .collect::<Result<_, FrobeniusError>>()?;
        // D_v W ≈ (W(y + εv) − W(y − εv)) / 2ε with |εv| = fd_step.
        let directional = |k: usize, v: &DVector<f64>| -> Result<DVector<f64>, FrobeniusError> {
            let eps = self.opts.fd_step / v.amax().max(1e-300);
            let shift = |s: f64| -> Vec<f64> { y.iter().zip(v.iter()).map(|(a, b)| a + s * eps * b).collect() };
            Ok((z_at(k, &shift(1.0))? - z_at(k, &shift(-1.0))?) / (2.0 * eps))
        };
        let mut res = Vec::new();
        for i in 0..self.r {
            for j in i + 1..self.r {
                let br = directional(j, &zs[i])? - directional(i, &zs[j])?;
                res.push(br.amax() / (1.0 + zs[i].amax() * zs[j].amax()));
            }
        }
        Ok((factors, res))
    }
}
