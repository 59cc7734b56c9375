//! Probabilistic identity testing by random evaluation.
//!
//! Sample points are drawn from a seeded ChaCha stream before any
//! evaluation happens, then evaluated batch by batch; the verdict only
//! depends on the seed, never on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Compiled, EvalError, Expr, Point};
use crate::par::Exec;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("malformed domain entry `{0}` (expected name=lo:hi)")]
    Syntax(String),
    #[error("empty range for `{name}`: [{lo}, {hi}]")]
    Empty { name: String, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

/// An axis-aligned box of variable ranges. A degenerate range `lo == hi`
/// pins a variable to a value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DomainBox {
    pub ranges: Vec<Range>,
}

impl DomainBox {
    pub fn new() -> DomainBox {
        DomainBox::default()
    }

    pub fn with(mut self, name: &str, lo: f64, hi: f64) -> DomainBox {
        self.set(name, lo, hi);
        self
    }

    pub fn set(&mut self, name: &str, lo: f64, hi: f64) {
        match self.ranges.iter_mut().find(|r| r.name == name) {
            Some(r) => {
                r.lo = lo;
                r.hi = hi;
            }
            None => self.ranges.push(Range { name: name.to_string(), lo, hi }),
        }
    }

    /// Parses `t=1:3, x=0.5:2`. A single value `c=2` pins the variable.
    pub fn parse_spec(spec: &str) -> Result<DomainBox, DomainError> {
        let mut d = DomainBox::new();
        for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, rng) = part.split_once('=').ok_or_else(|| DomainError::Syntax(part.into()))?;
            let nums: Result<Vec<f64>, _> = rng.split(':').map(|s| s.trim().parse::<f64>()).collect();
            let nums = nums.map_err(|_| DomainError::Syntax(part.into()))?;
            let (lo, hi) = match nums[..] {
                [v] => (v, v),
                [lo, hi] => (lo, hi),
                _ => return Err(DomainError::Syntax(part.into())),
            };
            let name = name.trim();
            if !(lo <= hi) {
                return Err(DomainError::Empty { name: name.into(), lo, hi });
            }
            d.set(name, lo, hi);
        }
        Ok(d)
    }

    pub fn get(&self, name: &str) -> Option<(f64, f64)> {
        self.ranges.iter().find(|r| r.name == name).map(|r| (r.lo, r.hi))
    }

    pub fn contains_var(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    pub fn names(&self) -> Vec<&str> {
        self.ranges.iter().map(|r| r.name.as_str()).collect()
    }

    pub fn center(&self) -> Point {
        Point::from_pairs(self.ranges.iter().map(|r| (r.name.as_str(), 0.5 * (r.lo + r.hi))))
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    /// Copy of `self` with every range of `other` laid over it.
    pub fn overlay(&self, other: &DomainBox) -> DomainBox {
        let mut d = self.clone();
        for r in &other.ranges {
            d.set(&r.name, r.lo, r.hi);
        }
        d
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.iter().all(|(n, v)| self.get(n).is_none_or(|(lo, hi)| v >= lo && v <= hi))
    }

    /// Uniform sample, one value per range in declaration order.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        self.ranges.iter().map(|r| r.lo + (r.hi - r.lo) * rng.random::<f64>()).collect()
    }

    /// `n` uniform samples from a fresh stream seeded by `seed`.
    pub fn samples(&self, seed: u64, n: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.sample(&mut rng)).collect()
    }
}

/// A sample point where a tested quantity is visibly nonzero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: Point,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ZeroVerdict {
    ProbablyZero { samples: usize, max_abs: f64 },
    ProvablyNonzero(Witness),
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        matches!(self, ZeroVerdict::ProbablyZero { .. })
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            ZeroVerdict::ProvablyNonzero(w) => Some(w),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ZeroTestError {
    #[error("domain exhausted: only {successes} of {attempts} samples evaluated")]
    DomainExhausted { attempts: usize, successes: usize },
    #[error("expression references `{0}`, which the domain box does not cover")]
    Unassigned(String),
}

/// Configuration of the random-evaluation identity test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroTest {
    pub threshold: f64,
    pub trials: usize,
    pub seed: u64,
    /// Samples drawn per required success before giving up.
    pub attempts_per_trial: usize,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for ZeroTest {
    fn default() -> Self {
        ZeroTest { threshold: 1e-9, trials: 32, seed: 0x6b77_6176_6573, attempts_per_trial: 8, exec: Exec::default() }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable 64-bit hash of a label (FNV-1a), independent of the toolchain.
pub(crate) fn label_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

impl ZeroTest {
    pub fn with_trials(mut self, n: usize) -> ZeroTest {
        self.trials = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> ZeroTest {
        self.seed = seed;
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> ZeroTest {
        self.exec = exec;
        self
    }

    /// Independent seed stream for a named check, so that adding a check
    /// does not shift the samples of the others.
    pub fn stream(&self, label: &str) -> ZeroTest {
        let mut z = self.clone();
        z.seed = splitmix(self.seed ^ label_hash(label));
        z
    }

    pub fn check(&self, e: &Expr, dom: &DomainBox) -> Result<ZeroVerdict, ZeroTestError> {
        Ok(self.check_all(std::slice::from_ref(e), dom)?.remove(0))
    }

    /// Tests every expression on one shared set of sample points. A point
    /// counts only if all expressions evaluate there.
    pub fn check_all(&self, es: &[Expr], dom: &DomainBox) -> Result<Vec<ZeroVerdict>, ZeroTestError> {
        let names = dom.names();
        let progs: Vec<Compiled> = es
            .iter()
            .map(|e| {
                e.compile(&names).map_err(|err| match err {
                    EvalError::Unassigned(v) => ZeroTestError::Unassigned(v),
                    other => unreachable!("compile only fails on unassigned names: {other}"),
                })
            })
            .collect::<Result<_, _>>()?;
        let values = self.sample_values(&progs, dom)?;
        Ok((0..es.len())
            .map(|k| {
                let mut best: Option<(usize, f64)> = None;
                let mut max_abs = 0.0f64;
                for (i, (_, vals)) in values.iter().enumerate() {
                    let a = vals[k].abs();
                    max_abs = max_abs.max(a);
                    if a > self.threshold && best.is_none_or(|(_, b)| a > b) {
                        best = Some((i, a));
                    }
                }
                match best {
                    Some((i, _)) => ZeroVerdict::ProvablyNonzero(Witness {
                        point: Point::zip(&names, &values[i].0),
                        value: values[i].1[k],
                    }),
                    None => ZeroVerdict::ProbablyZero { samples: values.len(), max_abs },
                }
            })
            .collect())
    }

    /// Evaluates programs at up to `trials` successful sample points.
    /// Returns the points with their values in sample order.
    pub(crate) fn sample_values(
        &self,
        progs: &[Compiled],
        dom: &DomainBox,
    ) -> Result<Vec<(Vec<f64>, Vec<f64>)>, ZeroTestError> {
        let trials = self.trials.max(1);
        let cap = trials * self.attempts_per_trial.max(1);
        let pts = dom.samples(self.seed, cap);
        let mut good = Vec::with_capacity(trials);
        for chunk in pts.chunks(trials) {
            let evals = self.exec.map(chunk, |x| {
                let mut st = Vec::new();
                progs.iter().map(|p| p.eval_in(x, &mut st)).collect::<Result<Vec<f64>, _>>().ok()
            });
            for (x, v) in chunk.iter().zip(evals) {
                if let Some(v) = v {
                    good.push((x.clone(), v));
                    if good.len() == trials {
                        return Ok(good);
                    }
                }
            }
        }
        Err(ZeroTestError::DomainExhausted { attempts: cap, successes: good.len() })
    }
}

/// Default-configured identity test with `trials` samples.
pub fn is_zero(e: &Expr, dom: &DomainBox, trials: usize) -> Result<ZeroVerdict, ZeroTestError> {
    ZeroTest::default().with_trials(trials).check(e, dom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_unchecked as p;

    #[test]
    fn algebraic_identity_is_probably_zero() {
        let d = DomainBox::new().with("u1", 1.0, 4.0);
        let v = is_zero(&p("sqrt(u1)*(1/sqrt(u1)) - 1").unwrap(), &d, 32).unwrap();
        assert!(v.is_zero());
    }

    #[test]
    fn positive_product_is_nonzero_with_witness() {
        let d = DomainBox::new().with("x", 1.0, 2.0).with("u1", 1.0, 2.0);
        let v = is_zero(&p("x*u1").unwrap(), &d, 32).unwrap();
        let w = v.witness().expect("witness");
        assert!(w.value >= 1.0);
        let x = w.point.get("x").unwrap();
        let u = w.point.get("u1").unwrap();
        assert!((x * u - w.value).abs() < 1e-15);
    }

    #[test]
    fn singular_domain_is_exhausted() {
        let d = DomainBox::new().with("x", -2.0, -1.0);
        assert!(matches!(
            is_zero(&p("sqrt(x)").unwrap(), &d, 32),
            Err(ZeroTestError::DomainExhausted { .. })
        ));
    }

    #[test]
    fn partially_singular_domain_resamples() {
        // Half of the box is outside the domain of sqrt.
        let d = DomainBox::new().with("x", -1.0, 1.0);
        assert!(is_zero(&p("sqrt(x)^2 - x").unwrap(), &d, 32).unwrap().is_zero());
    }

    #[test]
    fn unassigned_variables_are_reported() {
        let d = DomainBox::new().with("x", 0.0, 1.0);
        assert_eq!(is_zero(&p("x + y").unwrap(), &d, 4), Err(ZeroTestError::Unassigned("y".into())));
    }

    #[test]
    fn verdicts_do_not_depend_on_execution_policy() {
        let d = DomainBox::new().with("x", 0.0, 1.0).with("y", 0.0, 1.0);
        let es = [p("x - y").unwrap(), p("x*y - y*x").unwrap()];
        let a = ZeroTest::default().with_exec(Exec::Sequential).check_all(&es, &d).unwrap();
        let b = ZeroTest::default().with_exec(Exec::Parallel).check_all(&es, &d).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn domain_spec_parsing() {
        let d = DomainBox::parse_spec("t=1:3, y = 0.2:0.9, c=2").unwrap();
        assert_eq!(d.get("y"), Some((0.2, 0.9)));
        assert_eq!(d.get("c"), Some((2.0, 2.0)));
        assert!(DomainBox::parse_spec("t=3:1").is_err());
        assert!(DomainBox::parse_spec("t").is_err());
    }
}
