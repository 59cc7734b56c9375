use thiserror::Error;

use super::{Expr, Func, Node, Point};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{func} of {arg} is outside its domain")]
    Domain { func: &'static str, arg: f64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-integer power {exponent} of non-positive base {base}")]
    Power { base: f64, exponent: f64 },
    #[error("non-finite intermediate result")]
    NonFinite,
    #[error("variable `{0}` is not assigned")]
    Unassigned(String),
}

fn finite(x: f64) -> Result<f64, EvalError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(EvalError::NonFinite)
    }
}

fn div(a: f64, b: f64) -> Result<f64, EvalError> {
    if b == 0.0 {
        return Err(EvalError::DivisionByZero);
    }
    finite(a / b)
}

fn powi(b: f64, n: i32) -> Result<f64, EvalError> {
    if b == 0.0 && n < 0 {
        return Err(EvalError::DivisionByZero);
    }
    finite(b.powi(n))
}

fn pow(b: f64, e: f64) -> Result<f64, EvalError> {
    if e.fract() == 0.0 && e.abs() <= i32::MAX as f64 {
        return powi(b, e as i32);
    }
    if b > 0.0 {
        finite(b.powf(e))
    } else if b == 0.0 && e > 0.0 {
        Ok(0.0)
    } else {
        Err(EvalError::Power { base: b, exponent: e })
    }
}

impl Expr {
    /// Tree-walking evaluation with variables resolved through `env`.
    pub fn eval_with(&self, env: &dyn Fn(&str) -> Option<f64>) -> Result<f64, EvalError> {
        match self.node() {
            Node::Num(n) => Ok(n.value()),
            Node::Var(v) => env(v).ok_or_else(|| EvalError::Unassigned(v.to_string())),
            Node::Add(ts) => {
                let mut s = 0.0;
                for t in ts {
                    s += t.eval_with(env)?;
                }
                finite(s)
            }
            Node::Mul(fs) => {
                let mut s = 1.0;
                for g in fs {
                    s *= g.eval_with(env)?;
                }
                finite(s)
            }
            Node::Neg(a) => Ok(-a.eval_with(env)?),
            Node::Div(a, b) => div(a.eval_with(env)?, b.eval_with(env)?),
            Node::Pow(a, b) => pow(a.eval_with(env)?, b.eval_with(env)?),
            Node::Call(f, a) => f.apply(a.eval_with(env)?),
        }
    }

    pub fn eval_point(&self, p: &Point) -> Result<f64, EvalError> {
        self.eval_with(&|n| p.get(n))
    }

    /// Compiles to a postfix program reading variables from `slots`.
    /// Fails with `Unassigned` if the expression references a name that
    /// is not a slot.
    pub fn compile<S: AsRef<str>>(&self, slots: &[S]) -> Result<Compiled, EvalError> {
        let mut ops = Vec::new();
        let mut depth = 0usize;
        let mut max_depth = 0usize;
        emit(self, slots, &mut ops, &mut depth, &mut max_depth)?;
        Ok(Compiled { ops, max_depth })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Op {
    Const(f64),
    Load(usize),
    Add(usize),
    Mul(usize),
    Neg,
    Div,
    PowI(i32),
    Pow,
    Call(Func),
}

/// A flattened, allocation-light evaluator for repeated evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Compiled {
    ops: Vec<Op>,
    max_depth: usize,
}

fn emit<S: AsRef<str>>(
    e: &Expr,
    slots: &[S],
    ops: &mut Vec<Op>,
    depth: &mut usize,
    max: &mut usize,
) -> Result<(), EvalError> {
    let push = |ops: &mut Vec<Op>, op: Op, depth: &mut usize, max: &mut usize| {
        ops.push(op);
        *depth += 1;
        *max = (*max).max(*depth);
    };
    match e.node() {
        Node::Num(n) => push(ops, Op::Const(n.value()), depth, max),
        Node::Var(v) => {
            let i = slots
                .iter()
                .position(|s| s.as_ref() == &**v)
                .ok_or_else(|| EvalError::Unassigned(v.to_string()))?;
            push(ops, Op::Load(i), depth, max);
        }
        Node::Add(ts) | Node::Mul(ts) => {
            for t in ts {
                emit(t, slots, ops, depth, max)?;
            }
            ops.push(if matches!(e.node(), Node::Add(_)) { Op::Add(ts.len()) } else { Op::Mul(ts.len()) });
            *depth -= ts.len() - 1;
        }
        Node::Neg(a) => {
            emit(a, slots, ops, depth, max)?;
            ops.push(Op::Neg);
        }
        Node::Call(f, a) => {
            emit(a, slots, ops, depth, max)?;
            ops.push(Op::Call(*f));
        }
        Node::Div(a, b) => {
            emit(a, slots, ops, depth, max)?;
            emit(b, slots, ops, depth, max)?;
            ops.push(Op::Div);
            *depth -= 1;
        }
        Node::Pow(a, b) => {
            emit(a, slots, ops, depth, max)?;
            match b.as_number().map(|n| n.value()) {
                Some(x) if x.fract() == 0.0 && x.abs() <= i32::MAX as f64 => ops.push(Op::PowI(x as i32)),
                _ => {
                    emit(b, slots, ops, depth, max)?;
                    ops.push(Op::Pow);
                    *depth -= 1;
                }
            }
        }
    }
    Ok(())
}

impl Compiled {
    pub fn eval(&self, vals: &[f64]) -> Result<f64, EvalError> {
        let mut stack = Vec::with_capacity(self.max_depth);
        self.eval_in(vals, &mut stack)
    }

    /// Evaluates using a caller-provided scratch stack.
    pub fn eval_in(&self, vals: &[f64], st: &mut Vec<f64>) -> Result<f64, EvalError> {
        st.clear();
        for op in &self.ops {
            match *op {
                Op::Const(c) => st.push(c),
                Op::Load(i) => st.push(vals[i]),
                Op::Add(n) => {
                    let k = st.len() - n;
                    let s: f64 = st.drain(k..).sum();
                    st.push(finite(s)?);
                }
                Op::Mul(n) => {
                    let k = st.len() - n;
                    let s: f64 = st.drain(k..).product();
                    st.push(finite(s)?);
                }
                Op::Neg => {
                    let a = st.pop().unwrap();
                    st.push(-a);
                }
                Op::Div => {
                    let b = st.pop().unwrap();
                    let a = st.pop().unwrap();
                    st.push(div(a, b)?);
                }
                Op::PowI(n) => {
                    let a = st.pop().unwrap();
                    st.push(powi(a, n)?);
                }
                Op::Pow => {
                    let b = st.pop().unwrap();
                    let a = st.pop().unwrap();
                    st.push(pow(a, b)?);
                }
                Op::Call(f) => {
                    let a = st.pop().unwrap();
                    st.push(f.apply(a)?);
                }
            }
        }
        Ok(st[0])
    }
}

/// Compiles a list of expressions against the same slots.
pub fn compile_all<S: AsRef<str>>(es: &[Expr], slots: &[S]) -> Result<Vec<Compiled>, EvalError> {
    es.iter().map(|e| e.compile(slots)).collect()
}
