//! Printing with minimal parentheses. The output re-parses to the same
//! tree, so `print(parse(print(e))) == print(e)`.

use std::fmt::{self, Write};

use super::{Expr, Node, Number};

fn prec(e: &Expr) -> u8 {
    match e.node() {
        Node::Add(_) => 1,
        Node::Mul(_) | Node::Div(..) | Node::Neg(_) => 2,
        Node::Pow(..) => 3,
        Node::Var(_) | Node::Call(..) => 4,
        Node::Num(n) => match *n {
            Number::Rat(n, d) if n >= 0 && d == 1 => 4,
            Number::Float(x) if !x.is_sign_negative() => 4,
            _ => 2,
        },
    }
}

fn wrap(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if prec(e) < min {
        f.write_char('(')?;
        write_expr(e, f)?;
        f.write_char(')')
    } else {
        write_expr(e, f)
    }
}

/// True when the printed form starts with a minus sign.
fn leads_with_minus(e: &Expr) -> bool {
    match e.node() {
        Node::Num(n) => n.is_negative(),
        Node::Neg(_) => true,
        Node::Mul(fs) => fs.first().is_some_and(leads_with_minus),
        Node::Div(a, _) => leads_with_minus(a),
        _ => false,
    }
}

/// Like [`wrap`], but also parenthesizes a leading minus, so that a sign
/// written just before `e` never doubles up.
fn wrap_signed(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if leads_with_minus(e) {
        f.write_char('(')?;
        write_expr(e, f)?;
        f.write_char(')')
    } else {
        wrap(e, min, f)
    }
}

fn write_expr(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e.node() {
        Node::Num(n) => write!(f, "{n}"),
        Node::Var(v) => f.write_str(v),
        Node::Add(ts) => {
            for (i, t) in ts.iter().enumerate() {
                if i == 0 {
                    write_expr(t, f)?;
                    continue;
                }
                match t.node() {
                    Node::Neg(inner) => {
                        f.write_str(" - ")?;
                        wrap_signed(inner, 2, f)?;
                    }
                    Node::Num(n) if n.is_negative() => {
                        f.write_str(" - ")?;
                        wrap(&Expr::num(n.neg()), 2, f)?;
                    }
                    _ => {
                        f.write_str(" + ")?;
                        wrap_signed(t, 2, f)?;
                    }
                }
            }
            Ok(())
        }
        Node::Mul(fs) => {
            for (i, g) in fs.iter().enumerate() {
                if i > 0 {
                    f.write_char('*')?;
                }
                wrap(g, if i == 0 { 2 } else { 3 }, f)?;
            }
            Ok(())
        }
        Node::Neg(a) => {
            f.write_char('-')?;
            wrap_signed(a, 2, f)
        }
        Node::Div(a, b) => {
            wrap(a, 2, f)?;
            f.write_char('/')?;
            wrap(b, 3, f)
        }
        Node::Pow(a, b) => {
            wrap(a, 4, f)?;
            f.write_char('^')?;
            wrap(b, 3, f)
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(a, f)?;
            f.write_char(')')
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self, f)
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::parse_unchecked;

    fn rt(s: &str) -> String {
        let e = parse_unchecked(s).unwrap();
        let printed = e.to_string();
        let again = parse_unchecked(&printed).unwrap();
        assert_eq!(again, e, "tree changed for {s} -> {printed}");
        assert_eq!(again.to_string(), printed);
        printed
    }

    #[test]
    fn minimal_parentheses() {
        assert_eq!(rt("(1+b^2*x^2)/(a+y)"), "(b^2*x^2 + 1)/(a + y)");
        assert_eq!(rt("x - (y - z)"), "x - (y - z)");
        assert_eq!(rt("-x*y"), "-x*y");
        assert_eq!(rt("(-x)^2"), "(-x)^2");
        assert_eq!(rt("x^(1/2)"), "x^(1/2)");
        assert_eq!(rt("x*(y/z)"), "x*(y/z)");
        assert_eq!(rt("x/(y*z)"), "x/(y*z)");
        assert_eq!(rt("2^3^x"), "2^3^x");
        assert_eq!(rt("(2^3)^x"), "8^x");
        assert_eq!(rt("|y|"), "abs(y)");
        assert_eq!(rt("x - 3"), "x - 3");
        assert_eq!(rt("-3/x"), "-3/x");
        assert_eq!(rt("x*0.5 - 1.5"), "0.5*x - 1.5");
        assert_eq!(rt("x/2*y"), "x/2*y");
        assert_eq!(rt("x^-y"), "x^(-y)");
    }

    #[test]
    fn signs_never_double_up() {
        use crate::expr::Expr;
        let x = Expr::var("x");
        let cases = [(Expr::int(-2) / &x).neg(), &x + &(Expr::int(-2) / &x), &x - &(Expr::int(-2) / &x)];
        for e in cases {
            let printed = e.to_string();
            assert!(!printed.contains("--") && !printed.contains("+ -"), "{printed}");
            let again = parse_unchecked(&printed).unwrap();
            assert_eq!(again.to_string(), printed);
            let at = |e: &Expr| e.eval_with(&|_| Some(0.7)).unwrap();
            assert!((at(&again) - at(&e)).abs() < 1e-15);
        }
    }
}
