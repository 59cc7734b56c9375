//! Symbolic scalar expressions.
//!
//! Trees are immutable and reference counted, so cloning is cheap and an
//! expression can be shared across threads. The smart constructors
//! perform only light simplification (constant folding, 0/1 identities,
//! `x - x`, flattening); identities beyond that are decided numerically by
//! [`ZeroTest`].

mod diff;
mod display;
mod eval;
mod number;
mod parse;
mod space;
mod zero;

use std::collections::{BTreeSet, HashMap};
use std::ops;
use std::sync::Arc;

pub use eval::{compile_all, Compiled, EvalError};
pub use number::Number;
pub use parse::{parse, parse_unchecked, ParseError};
pub use space::{valid_ident, Point, SpaceError, VarSpace};
pub use zero::{is_zero, DomainBox, DomainError, Witness, ZeroTest, ZeroTestError, ZeroVerdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sqrt,
    Ln,
    Exp,
    Abs,
    Sin,
    Cos,
}

impl Func {
    pub const ALL: [Func; 6] = [Func::Sqrt, Func::Ln, Func::Exp, Func::Abs, Func::Sin, Func::Cos];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Ln => "ln",
            Func::Exp => "exp",
            Func::Abs => "abs",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    /// `log` is accepted as an alias of `ln`.
    pub fn from_name(s: &str) -> Option<Func> {
        match s {
            "log" => Some(Func::Ln),
            _ => Func::ALL.into_iter().find(|f| f.name() == s),
        }
    }

    pub fn apply(self, x: f64) -> Result<f64, EvalError> {
        let r = match self {
            Func::Sqrt if x < 0.0 => return Err(EvalError::Domain { func: "sqrt", arg: x }),
            Func::Sqrt => x.sqrt(),
            Func::Ln if x <= 0.0 => return Err(EvalError::Domain { func: "ln", arg: x }),
            Func::Ln => x.ln(),
            Func::Exp => x.exp(),
            Func::Abs => x.abs(),
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
        };
        if r.is_finite() {
            Ok(r)
        } else {
            Err(EvalError::NonFinite)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(Number),
    Var(Arc<str>),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Neg(Expr),
    Div(Expr, Expr),
    Pow(Expr, Expr),
    Call(Func, Expr),
}

#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

impl std::fmt::Debug for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl Expr {
    fn new(n: Node) -> Expr {
        Expr(Arc::new(n))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn num(n: Number) -> Expr {
        Expr::new(Node::Num(n))
    }

    pub fn int(n: i64) -> Expr {
        Expr::num(Number::int(n))
    }

    /// Exact ratio `n/d`; panics on a zero denominator.
    pub fn rat(n: i64, d: i64) -> Expr {
        Expr::num(Number::ratio(n, d).expect("zero denominator"))
    }

    pub fn float(x: f64) -> Expr {
        Expr::num(Number::Float(x))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn var(name: &str) -> Expr {
        Expr::new(Node::Var(Arc::from(name)))
    }

    pub fn as_number(&self) -> Option<Number> {
        match self.node() {
            Node::Num(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<&str> {
        match self.node() {
            Node::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_zero_const(&self) -> bool {
        self.as_number().is_some_and(Number::is_zero)
    }

    pub fn is_one_const(&self) -> bool {
        self.as_number().is_some_and(Number::is_one)
    }

    pub fn add_all<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        let mut flat: Vec<Expr> = Vec::new();
        let mut c = Number::ZERO;
        for t in terms {
            match t.node() {
                Node::Num(n) => c = c.add(*n),
                Node::Add(ts) => {
                    for s in ts {
                        match s.node() {
                            Node::Num(n) => c = c.add(*n),
                            _ => flat.push(s.clone()),
                        }
                    }
                }
                _ => flat.push(t),
            }
        }
        // x + (-x) cancels.
        let mut alive = vec![true; flat.len()];
        for i in 0..flat.len() {
            if !alive[i] {
                continue;
            }
            if let Node::Neg(inner) = flat[i].node() {
                if let Some(j) = (0..flat.len()).find(|&j| alive[j] && j != i && flat[j] == *inner) {
                    alive[i] = false;
                    alive[j] = false;
                }
            }
        }
        let mut out: Vec<Expr> = flat.into_iter().zip(alive).filter(|(_, a)| *a).map(|(e, _)| e).collect();
        if !c.is_zero() {
            out.push(Expr::num(c));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::new(Node::Add(out)),
        }
    }

    pub fn mul_all<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        let mut flat: Vec<Expr> = Vec::new();
        let mut c = Number::ONE;
        let mut negate = false;
        fn push(e: &Expr, flat: &mut Vec<Expr>, c: &mut Number, negate: &mut bool) {
            match e.node() {
                Node::Neg(inner) => {
                    *negate = !*negate;
                    push(inner, flat, c, negate);
                }
                Node::Mul(fs) => fs.iter().for_each(|g| push(g, flat, c, negate)),
                Node::Num(n) => *c = c.mul(*n),
                _ => flat.push(e.clone()),
            }
        }
        for f in factors {
            push(&f, &mut flat, &mut c, &mut negate);
        }
        if c.is_zero() {
            return Expr::zero();
        }
        if c.is_negative() {
            c = c.neg();
            negate = !negate;
        }
        if !c.is_one() || flat.is_empty() {
            flat.insert(0, Expr::num(c));
        }
        let prod = if flat.len() == 1 { flat.pop().unwrap() } else { Expr::new(Node::Mul(flat)) };
        if negate {
            prod.neg()
        } else {
            prod
        }
    }

    pub fn neg(&self) -> Expr {
        match self.node() {
            Node::Num(n) => Expr::num(n.neg()),
            Node::Neg(inner) => inner.clone(),
            _ => Expr::new(Node::Neg(self.clone())),
        }
    }

    pub fn div(&self, den: &Expr) -> Expr {
        if let Some(d) = den.as_number() {
            if d.is_one() {
                return self.clone();
            }
            if d.value() == -1.0 {
                return self.neg();
            }
            if let Some(n) = self.as_number() {
                if let Some(q) = n.div(d) {
                    return Expr::num(q);
                }
            }
        }
        if self.is_zero_const() && !den.is_zero_const() {
            return Expr::zero();
        }
        if let Node::Neg(a) = self.node() {
            return a.div(den).neg();
        }
        if let Node::Neg(b) = den.node() {
            return self.div(b).neg();
        }
        // Cancel factors shared structurally by numerator and denominator.
        let factors = |e: &Expr| match e.node() {
            Node::Mul(fs) => fs.clone(),
            _ => vec![e.clone()],
        };
        let mut num = factors(self);
        let mut rest = Vec::new();
        let mut cancelled = false;
        for d in factors(den) {
            match num.iter().position(|n| *n == d && n.as_number().is_none()) {
                Some(k) => {
                    num.remove(k);
                    cancelled = true;
                }
                None => rest.push(d),
            }
        }
        if cancelled {
            return Expr::mul_all(num).div(&Expr::mul_all(rest));
        }
        Expr::new(Node::Div(self.clone(), den.clone()))
    }

    pub fn pow(&self, exp: &Expr) -> Expr {
        if exp.is_zero_const() {
            return Expr::one();
        }
        if exp.is_one_const() || self.is_one_const() {
            return self.clone();
        }
        if let (Some(b), Some(e)) = (self.as_number(), exp.as_number()) {
            if let Some(r) = b.pow(e) {
                if r.is_exact() || !(b.is_exact() && e.is_exact()) {
                    return Expr::num(r);
                }
            }
        }
        if self.is_zero_const() && exp.as_number().is_some_and(|e| e.value() > 0.0) {
            return Expr::zero();
        }
        Expr::new(Node::Pow(self.clone(), exp.clone()))
    }

    pub fn powi(&self, n: i64) -> Expr {
        self.pow(&Expr::int(n))
    }

    pub fn call(f: Func, arg: &Expr) -> Expr {
        if let Some(n) = arg.as_number() {
            let exact = match (f, n) {
                (_, Number::Float(x)) => f.apply(x).ok().map(Number::Float),
                (Func::Abs, n) => Some(if n.is_negative() { n.neg() } else { n }),
                (Func::Sqrt, n) => n.exact_sqrt(),
                (Func::Exp | Func::Cos, n) if n.is_zero() => Some(Number::ONE),
                (Func::Sin, n) if n.is_zero() => Some(Number::ZERO),
                (Func::Ln, n) if n.is_one() => Some(Number::ZERO),
                _ => None,
            };
            if let Some(v) = exact {
                return Expr::num(v);
            }
        }
        if f == Func::Abs {
            match arg.node() {
                Node::Neg(inner) => return Expr::call(Func::Abs, inner),
                Node::Call(Func::Abs, _) => return arg.clone(),
                _ => {}
            }
        }
        Expr::new(Node::Call(f, arg.clone()))
    }

    pub fn sqrt(&self) -> Expr {
        Expr::call(Func::Sqrt, self)
    }
    pub fn ln(&self) -> Expr {
        Expr::call(Func::Ln, self)
    }
    pub fn exp(&self) -> Expr {
        Expr::call(Func::Exp, self)
    }
    pub fn abs(&self) -> Expr {
        Expr::call(Func::Abs, self)
    }
    pub fn sin(&self) -> Expr {
        Expr::call(Func::Sin, self)
    }
    pub fn cos(&self) -> Expr {
        Expr::call(Func::Cos, self)
    }

    /// Names of all variables referenced, sorted.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            Node::Num(_) => {}
            Node::Var(v) => {
                out.insert(v.to_string());
            }
            Node::Add(ts) | Node::Mul(ts) => ts.iter().for_each(|t| t.collect_vars(out)),
            Node::Neg(a) | Node::Call(_, a) => a.collect_vars(out),
            Node::Div(a, b) | Node::Pow(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn depends_on(&self, v: &str) -> bool {
        match self.node() {
            Node::Num(_) => false,
            Node::Var(w) => &**w == v,
            Node::Add(ts) | Node::Mul(ts) => ts.iter().any(|t| t.depends_on(v)),
            Node::Neg(a) | Node::Call(_, a) => a.depends_on(v),
            Node::Div(a, b) | Node::Pow(a, b) => a.depends_on(v) || b.depends_on(v),
        }
    }

    pub fn depends_on_any<S: AsRef<str>>(&self, vs: &[S]) -> bool {
        vs.iter().any(|v| self.depends_on(v.as_ref()))
    }

    /// Replaces every occurrence of `var` by `by`, re-simplifying on the way up.
    pub fn subst(&self, var: &str, by: &Expr) -> Expr {
        let mut m = HashMap::new();
        m.insert(var.to_string(), by.clone());
        self.subst_many(&m)
    }

    pub fn subst_many(&self, map: &HashMap<String, Expr>) -> Expr {
        self.rebuild(&|name| map.get(name).cloned())
    }

    /// Bottom-up reconstruction through the smart constructors, replacing
    /// variables for which `leaf` returns a value.
    fn rebuild(&self, leaf: &dyn Fn(&str) -> Option<Expr>) -> Expr {
        match self.node() {
            Node::Num(_) => self.clone(),
            Node::Var(v) => leaf(v).unwrap_or_else(|| self.clone()),
            Node::Add(ts) => Expr::add_all(ts.iter().map(|t| t.rebuild(leaf))),
            Node::Mul(ts) => Expr::mul_all(ts.iter().map(|t| t.rebuild(leaf))),
            Node::Neg(a) => a.rebuild(leaf).neg(),
            Node::Div(a, b) => a.rebuild(leaf).div(&b.rebuild(leaf)),
            Node::Pow(a, b) => a.rebuild(leaf).pow(&b.rebuild(leaf)),
            Node::Call(f, a) => Expr::call(*f, &a.rebuild(leaf)),
        }
    }

    /// Tree size, used to prefer simpler candidates.
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Num(_) | Node::Var(_) => 1,
            Node::Add(ts) | Node::Mul(ts) => 1 + ts.iter().map(Expr::size).sum::<usize>(),
            Node::Neg(a) | Node::Call(_, a) => 1 + a.size(),
            Node::Div(a, b) | Node::Pow(a, b) => 1 + a.size() + b.size(),
        }
    }
}

impl From<f64> for Expr {
    fn from(x: f64) -> Expr {
        Expr::float(x)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Expr {
        Expr::int(n)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(&self, &rhs)
            }
        }
        impl ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(&self, rhs)
            }
        }
        impl ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(&Expr, &Expr) -> Expr = $body;
                f(self, &rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::add_all([a.clone(), b.clone()]));
binop!(Sub, sub, |a, b| Expr::add_all([a.clone(), b.neg()]));
binop!(Mul, mul, |a, b| Expr::mul_all([a.clone(), b.clone()]));
binop!(Div, div, |a, b| Expr::div(a, b));

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

/// Sum of a sequence of expressions; zero for an empty sequence.
pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
    Expr::add_all(terms)
}
