//! Precedence-climbing parser for the infix expression grammar.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?          right associative
//! primary := number | ident | func '(' expr ')' | '(' expr ')' | '|' expr '|'
//! ```
//!
//! Integer literals are exact, literals with a decimal point or exponent
//! are floats. `|e|` is sugar for `abs(e)` and `log` is an alias of `ln`.

use thiserror::Error;

use super::{Expr, Func, Number, VarSpace};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Number),
    Ident(String),
    Op(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (t, at) = lx.next()?;
            let end = t == Tok::End;
            out.push((t, at));
            if end {
                return Ok(out);
            }
        }
    }

    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = bytes.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || (c == b'.' && bytes.get(self.pos + 1).is_some_and(u8::is_ascii_digit)) {
            return self.number(start).map(|n| (Tok::Num(n), start));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self.pos < bytes.len() && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_') {
                self.pos += 1;
            }
            return Ok((Tok::Ident(self.src[start..self.pos].to_string()), start));
        }
        if b"+-*/^()|".contains(&c) {
            self.pos += 1;
            return Ok((Tok::Op(c as char), start));
        }
        let ch = self.src[start..].chars().next().unwrap();
        Err(ParseError::Syntax { offset: start, message: format!("unexpected character `{ch}`") })
    }

    fn number(&mut self, start: usize) -> Result<Number, ParseError> {
        let bytes = self.src.as_bytes();
        let digits = |p: &mut usize| {
            let s = *p;
            while *p < bytes.len() && bytes[*p].is_ascii_digit() {
                *p += 1;
            }
            *p > s
        };
        let mut float = false;
        digits(&mut self.pos);
        if bytes.get(self.pos) == Some(&b'.') {
            float = true;
            self.pos += 1;
            digits(&mut self.pos);
        }
        if matches!(bytes.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(bytes.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(&mut self.pos) {
                float = true;
            } else {
                // `2e` followed by something else: the `e` is not ours.
                self.pos = save;
            }
        }
        let text = &self.src[start..self.pos];
        if !float {
            if let Ok(n) = text.parse::<i64>() {
                return Ok(Number::int(n));
            }
        }
        text.parse::<f64>()
            .map(Number::Float)
            .map_err(|_| ParseError::Syntax { offset: start, message: format!("malformed number `{text}`") })
    }
}

struct Parser<'s> {
    toks: Vec<(Tok, usize)>,
    i: usize,
    space: Option<&'s VarSpace>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn at(&self) -> usize {
        self.toks[self.i].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { offset: self.at(), message: message.into() })
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if *self.peek() == Tok::Op(c) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{c}`, found {}", describe(self.peek())))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    terms.push(self.term()?);
                }
                Tok::Op('-') => {
                    self.bump();
                    terms.push(self.term()?.neg());
                }
                _ => return Ok(Expr::add_all(terms)),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    let r = self.unary()?;
                    acc = Expr::mul_all([acc, r]);
                }
                Tok::Op('/') => {
                    self.bump();
                    let r = self.unary()?;
                    acc = acc.div(&r);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Op('-') => {
                self.bump();
                Ok(self.unary()?.neg())
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let e = self.unary()?;
            return Ok(base.pow(&e));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let at = self.at();
        match self.bump() {
            Tok::Num(n) => Ok(Expr::num(n)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Op('|') => {
                let e = self.expr()?;
                self.expect('|')?;
                Ok(e.abs())
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::Op('(') {
                    let Some(f) = Func::from_name(&name) else {
                        return Err(ParseError::UnknownIdentifier { name, offset: at });
                    };
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(Expr::call(f, &arg));
                }
                if Func::from_name(&name).is_some() {
                    return Err(ParseError::Syntax { offset: at, message: format!("function `{name}` needs an argument") });
                }
                if let Some(sp) = self.space {
                    if !sp.contains(&name) {
                        return Err(ParseError::UnknownIdentifier { name, offset: at });
                    }
                }
                Ok(Expr::var(&name))
            }
            Tok::End => Err(ParseError::Syntax { offset: at, message: "unexpected end of input".into() }),
            t => Err(ParseError::Syntax { offset: at, message: format!("unexpected {}", describe(&t)) }),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(n) => format!("number `{n}`"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Op(c) => format!("`{c}`"),
        Tok::End => "end of input".into(),
    }
}

fn run(text: &str, space: Option<&VarSpace>) -> Result<Expr, ParseError> {
    let toks = Lexer::tokens(text)?;
    let mut p = Parser { toks, i: 0, space };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.err(format!("unexpected {}", describe(p.peek())));
    }
    Ok(e)
}

/// Parses `text`, rejecting identifiers not declared in `space`.
pub fn parse(text: &str, space: &VarSpace) -> Result<Expr, ParseError> {
    run(text, Some(space))
}

/// Parses `text`, accepting any identifier as a variable.
pub fn parse_unchecked(text: &str) -> Result<Expr, ParseError> {
    run(text, None)
}
