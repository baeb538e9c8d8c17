//! Concrete syntax: S-expression source text to [`SurfaceExpr`], and values back to text.

use crate::error::{Error, Pos, Result};
use crate::runtime::Value;

#[derive(Clone, Debug, PartialEq)]
pub enum SurfaceExpr {
    Symbol(String),
    Real(f64),
    /// `()`
    Empty,
    List(Vec<SurfaceExpr>),
    /// `(a b . c)`; only meaningful as printed data.
    Dotted(Vec<SurfaceExpr>, Box<SurfaceExpr>),
}

/// A top-level form with the position of its first character.
#[derive(Clone, Debug, PartialEq)]
pub struct Form {
    pub expr: SurfaceExpr,
    pub pos: Pos,
}

/// Whether implementation-reserved names (`%t1`, `#3`, `x^r`) are accepted.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    User,
    Internal,
}

pub fn parse(text: &str) -> Result<Vec<SurfaceExpr>> {
    Ok(parse_forms(text, Mode::User)?
        .into_iter()
        .map(|f| f.expr)
        .collect())
}

pub fn parse_forms(text: &str, mode: Mode) -> Result<Vec<Form>> {
    let mut p = Parser {
        chars: text.chars().collect(),
        i: 0,
        line: 1,
        col: 1,
        mode,
    };
    let mut out = Vec::new();
    loop {
        p.skip_ws();
        if p.peek().is_none() {
            return Ok(out);
        }
        let pos = p.pos();
        let expr = p.expr()?;
        out.push(Form { expr, pos });
    }
}

struct Parser {
    chars: Vec<char>,
    i: usize,
    line: usize,
    col: usize,
    mode: Mode,
}

fn is_delimiter(c: char) -> bool {
    c.is_whitespace() || c == '(' || c == ')' || c == ';'
}

impl Parser {
    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.i).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c == ';' {
                while !matches!(self.peek(), None | Some('\n')) {
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn error<T>(&self, pos: Pos, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos,
            msg: msg.into(),
        })
    }

    fn expr(&mut self) -> Result<SurfaceExpr> {
        self.skip_ws();
        let pos = self.pos();
        match self.peek() {
            None => self.error(pos, "unexpected end of input"),
            Some(')') => self.error(pos, "unexpected `)`"),
            Some('(') => {
                self.bump();
                self.list(pos)
            }
            Some(_) => {
                let tok = self.token();
                self.atom(&tok, pos)
            }
        }
    }

    fn list(&mut self, open: Pos) -> Result<SurfaceExpr> {
        let mut items = Vec::new();
        loop {
            self.skip_ws();
            let pos = self.pos();
            match self.peek() {
                None => {
                    return self.error(
                        pos,
                        format!("unbalanced `(` opened at {open}: unexpected end of input"),
                    )
                }
                Some(')') => {
                    self.bump();
                    return Ok(if items.is_empty() {
                        SurfaceExpr::Empty
                    } else {
                        SurfaceExpr::List(items)
                    });
                }
                Some('.') if self.is_lone_dot() => {
                    self.bump();
                    if items.is_empty() {
                        return self.error(pos, "`.` must follow at least one element");
                    }
                    let tail = self.expr()?;
                    self.skip_ws();
                    let close = self.pos();
                    if self.bump() != Some(')') {
                        return self.error(close, "expected `)` after dotted tail");
                    }
                    return Ok(SurfaceExpr::Dotted(items, Box::new(tail)));
                }
                Some(_) => items.push(self.expr()?),
            }
        }
    }

    fn is_lone_dot(&self) -> bool {
        self.chars
            .get(self.i + 1)
            .is_none_or(|&c| is_delimiter(c))
    }

    fn token(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if is_delimiter(c) {
                break;
            }
            s.push(c);
            self.bump();
        }
        s
    }

    fn atom(&self, tok: &str, pos: Pos) -> Result<SurfaceExpr> {
        if let Some(r) = parse_number(tok) {
            return Ok(SurfaceExpr::Real(r));
        }
        if self.mode == Mode::User
            && (tok.starts_with('%') || tok.starts_with('#') || tok.contains('^'))
        {
            return self.error(pos, format!("`{tok}` uses a reserved name"));
        }
        Ok(SurfaceExpr::Symbol(tok.to_string()))
    }
}

fn parse_number(tok: &str) -> Option<f64> {
    let first = tok.chars().next()?;
    let numeric_start = first.is_ascii_digit()
        || ((first == '-' || first == '+' || first == '.') && tok.len() > 1)
        || matches!(tok.to_ascii_lowercase().as_str(), "inf" | "nan" | "infinity");
    if !numeric_start {
        return None;
    }
    tok.parse().ok()
}

/// Shortest decimal text that reads back as the same binary64.
pub fn format_real(r: f64) -> String {
    if r.is_nan() {
        "NaN".to_string()
    } else if r.is_infinite() {
        if r > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{r}")
    }
}

pub fn print_surface(e: &SurfaceExpr) -> String {
    match e {
        SurfaceExpr::Symbol(s) => s.clone(),
        SurfaceExpr::Real(r) => format_real(*r),
        SurfaceExpr::Empty => "()".to_string(),
        SurfaceExpr::List(items) => {
            let inner: Vec<_> = items.iter().map(print_surface).collect();
            format!("({})", inner.join(" "))
        }
        SurfaceExpr::Dotted(items, tail) => {
            let inner: Vec<_> = items.iter().map(print_surface).collect();
            format!("({} . {})", inner.join(" "), print_surface(tail))
        }
    }
}

/// The value denoted by printed data: reals, `()` and (possibly dotted) lists of data.
pub fn read_data(e: &SurfaceExpr) -> Option<Value> {
    Some(match e {
        SurfaceExpr::Real(r) => Value::Real(*r),
        SurfaceExpr::Empty => Value::Empty,
        SurfaceExpr::List(items) => items
            .iter()
            .rev()
            .try_fold(Value::Empty, |acc, x| Some(Value::cons(read_data(x)?, acc)))?,
        SurfaceExpr::Dotted(items, tail) => items
            .iter()
            .rev()
            .try_fold(read_data(tail)?, |acc, x| Some(Value::cons(read_data(x)?, acc)))?,
        SurfaceExpr::Symbol(_) => return None,
    })
}

pub fn print_value(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, &mut out);
    out
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Empty => out.push_str("()"),
        Value::Real(r) => out.push_str(&format_real(*r)),
        Value::Tagged(inner) => {
            out.push_str("(reverse ");
            write_value(inner, out);
            out.push(')');
        }
        Value::Primitive(p) => {
            out.push_str("#<primitive ");
            out.push_str(p.name());
            out.push('>');
        }
        Value::Custom(c) => {
            out.push_str("#<custom ");
            write_value(&c.0, out);
            out.push('>');
        }
        Value::Closure(c) => {
            if let Some((head, tail)) = v.as_pair() {
                out.push('(');
                write_value(head, out);
                let mut rest = tail.clone();
                loop {
                    match &rest {
                        Value::Empty => break,
                        r if r.as_pair().is_some() => {
                            let (h, t) = r.as_pair().expect("checked");
                            out.push(' ');
                            write_value(h, out);
                            let t = t.clone();
                            rest = t;
                        }
                        other => {
                            out.push_str(" . ");
                            write_value(other, out);
                            break;
                        }
                    }
                }
                out.push(')');
            } else {
                out.push_str("#<closure:λ");
                out.push_str(&c.lambda.param.display_name());
                out.push('>');
            }
        }
    }
}
