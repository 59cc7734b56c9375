use super::{Expr, Func, Node};

impl Expr {
    /// Exact symbolic derivative with respect to `v`. Subtrees that do not
    /// mention `v` differentiate to the zero constant, and the smart
    /// constructors propagate that zero upward.
    pub fn diff(&self, v: &str) -> Expr {
        match self.node() {
            Node::Num(_) => Expr::zero(),
            Node::Var(w) => {
                if &**w == v {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Add(ts) => Expr::add_all(ts.iter().map(|t| t.diff(v))),
            Node::Mul(fs) => {
                let ds: Vec<Expr> = fs.iter().map(|f| f.diff(v)).collect();
                Expr::add_all(ds.iter().enumerate().filter(|(_, d)| !d.is_zero_const()).map(|(i, d)| {
                    Expr::mul_all(fs.iter().enumerate().map(|(j, f)| if i == j { d.clone() } else { f.clone() }))
                }))
            }
            Node::Neg(a) => a.diff(v).neg(),
            Node::Div(a, b) => {
                let (da, db) = (a.diff(v), b.diff(v));
                if db.is_zero_const() {
                    return da.div(b);
                }
                let num = &(&da * b) - &(a * &db);
                num.div(&b.powi(2))
            }
            Node::Pow(a, b) => {
                let (da, db) = (a.diff(v), b.diff(v));
                if db.is_zero_const() {
                    if da.is_zero_const() {
                        return Expr::zero();
                    }
                    let bm1 = b - &Expr::one();
                    return Expr::mul_all([b.clone(), a.pow(&bm1), da]);
                }
                if da.is_zero_const() {
                    return Expr::mul_all([self.clone(), a.ln(), db]);
                }
                let inner = &(&db * &a.ln()) + &(b * &da).div(a);
                self * &inner
            }
            Node::Call(f, a) => {
                let da = a.diff(v);
                if da.is_zero_const() {
                    return Expr::zero();
                }
                let outer = match f {
                    Func::Sqrt => Expr::one().div(&(Expr::int(2) * a.sqrt())),
                    Func::Ln => Expr::one().div(a),
                    Func::Exp => self.clone(),
                    Func::Abs => a.div(&a.abs()),
                    Func::Sin => a.cos(),
                    Func::Cos => a.sin().neg(),
                };
                if da.is_one_const() {
                    outer
                } else {
                    &outer * &da
                }
            }
        }
    }

    /// Gradient with respect to each of `vars`.
    pub fn gradient<S: AsRef<str>>(&self, vars: &[S]) -> Vec<Expr> {
        vars.iter().map(|v| self.diff(v.as_ref())).collect()
    }
}
