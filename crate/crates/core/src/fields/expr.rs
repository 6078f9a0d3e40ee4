//! Arithmetic field expressions over the plane coordinates `x` and `y`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | '+' unary | power
//! power   := primary ('^' unary)?          // right-associative
//! primary := number | 'x' | 'y' | 'pi' | func '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! so `-x^2` is `-(x^2)` and `2^3^2` is `2^(3^2)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{At, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Abs,
    Sqrt,
    Sin,
    Cos,
    Min,
    Max,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

/// Abstract syntax tree of a field expression.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldExpr {
    Num(f64),
    X,
    Y,
    Neg(Box<FieldExpr>),
    Bin(BinOp, Box<FieldExpr>, Box<FieldExpr>),
    Call(Func, Vec<FieldExpr>),
}

impl FieldExpr {
    pub fn constant(c: f64) -> FieldExpr {
        FieldExpr::Num(c)
    }

    /// True when the expression does not reference `x` or `y`.
    pub fn is_constant(&self) -> bool {
        match self {
            FieldExpr::Num(_) => true,
            FieldExpr::X | FieldExpr::Y => false,
            FieldExpr::Neg(e) => e.is_constant(),
            FieldExpr::Bin(_, a, b) => a.is_constant() && b.is_constant(),
            FieldExpr::Call(_, args) => args.iter().all(FieldExpr::is_constant),
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        let v = self.eval_inner(x, y)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(domain(x, y, "non-finite result"))
        }
    }

    fn eval_inner(&self, x: f64, y: f64) -> Result<f64> {
        Ok(match self {
            FieldExpr::Num(c) => *c,
            FieldExpr::X => x,
            FieldExpr::Y => y,
            FieldExpr::Neg(e) => -e.eval_inner(x, y)?,
            FieldExpr::Bin(op, a, b) => {
                let (a, b) = (a.eval_inner(x, y)?, b.eval_inner(x, y)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(domain(x, y, "division by zero"));
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        let r = a.powf(b);
                        if r.is_nan() {
                            return Err(domain(x, y, format!("{a}^{b} is undefined")));
                        }
                        r
                    }
                }
            }
            FieldExpr::Call(f, args) => {
                let a = args[0].eval_inner(x, y)?;
                match f {
                    Func::Exp => a.exp(),
                    Func::Log => {
                        if a <= 0.0 {
                            return Err(domain(x, y, format!("log of nonpositive argument {a}")));
                        }
                        a.ln()
                    }
                    Func::Abs => a.abs(),
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(domain(x, y, format!("sqrt of negative argument {a}")));
                        }
                        a.sqrt()
                    }
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Min => a.min(args[1].eval_inner(x, y)?),
                    Func::Max => a.max(args[1].eval_inner(x, y)?),
                }
            }
        })
    }
}

fn domain(x: f64, y: f64, message: impl Into<String>) -> Error {
    Error::Domain { at: At(x, y), message: message.into() }
}

/// Parses `text` into a [`FieldExpr`].
pub fn parse_field(text: &str) -> Result<FieldExpr> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0, end_col: text.chars().count() + 1 };
    let e = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(syntax(t.col, format!("unexpected {}", t.kind)));
    }
    Ok(e)
}

/// Evaluates `f` at `point`.
pub fn eval_field(f: &FieldExpr, point: [f64; 2]) -> Result<f64> {
    f.eval(point[0], point[1])
}

impl FromStr for FieldExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_field(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "number {v}"),
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Op(c) => write!(f, "`{c}`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Comma => write!(f, "`,`"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Tok,
    col: usize,
}

fn syntax(column: usize, message: impl Into<String>) -> Error {
    Error::Syntax { column, message: message.into() }
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s.parse::<f64>().map_err(|_| syntax(col, format!("malformed number `{s}`")))?;
            out.push(Token { kind: Tok::Num(v), col });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token { kind: Tok::Ident(chars[start..i].iter().collect()), col });
            continue;
        }
        let kind = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            _ => return Err(syntax(col, format!("unexpected character `{c}`"))),
        };
        out.push(Token { kind, col });
        i += 1;
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end_col: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some(Token { kind: Tok::Op(c), .. }) if ops.contains(c) => {
                let c = *c;
                self.pos += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        match self.next() {
            Some(t) if t.kind == want => Ok(()),
            Some(t) => Err(syntax(t.col, format!("expected {want}, found {}", t.kind))),
            None => Err(syntax(self.end_col, format!("expected {want}, found end of input"))),
        }
    }

    fn expr(&mut self) -> Result<FieldExpr> {
        let mut lhs = self.term()?;
        while let Some(op) = self.eat_op(&['+', '-']) {
            let rhs = self.term()?;
            let op = if op == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = FieldExpr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<FieldExpr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            let op = if op == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = FieldExpr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<FieldExpr> {
        match self.eat_op(&['-', '+']) {
            Some('-') => Ok(FieldExpr::Neg(Box::new(self.unary()?))),
            Some(_) => self.unary(),
            None => self.power(),
        }
    }

    fn power(&mut self) -> Result<FieldExpr> {
        let base = self.primary()?;
        if self.eat_op(&['^']).is_some() {
            let exp = self.unary()?;
            return Ok(FieldExpr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<FieldExpr> {
        let Some(tok) = self.next() else {
            return Err(syntax(self.end_col, "unexpected end of input"));
        };
        match tok.kind {
            Tok::Num(v) => Ok(FieldExpr::Num(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(FieldExpr::X),
                "y" => Ok(FieldExpr::Y),
                "pi" => Ok(FieldExpr::Num(std::f64::consts::PI)),
                _ => {
                    let Some(func) = Func::from_name(&name) else {
                        return Err(Error::UnknownIdentifier(name));
                    };
                    self.expect(Tok::LParen)?;
                    let mut args = vec![self.expr()?];
                    while matches!(self.peek(), Some(Token { kind: Tok::Comma, .. })) {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    let close_col = self.peek().map_or(self.end_col, |t| t.col);
                    self.expect(Tok::RParen)?;
                    if args.len() != func.arity() {
                        return Err(syntax(
                            close_col,
                            format!("{} takes {} argument(s), got {}", func.name(), func.arity(), args.len()),
                        ));
                    }
                    Ok(FieldExpr::Call(func, args))
                }
            },
            other => Err(syntax(tok.col, format!("unexpected {other}"))),
        }
    }
}

/// Fully parenthesised rendering that re-parses to an equivalent tree.
impl fmt::Display for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldExpr::Num(v) => {
                if *v < 0.0 {
                    write!(f, "(-{:?})", -v)
                } else {
                    write!(f, "{v:?}")
                }
            }
            FieldExpr::X => f.write_str("x"),
            FieldExpr::Y => f.write_str("y"),
            FieldExpr::Neg(e) => write!(f, "(-{e})"),
            FieldExpr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {s} {b})")
            }
            FieldExpr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, x: f64, y: f64) -> f64 {
        parse_field(s).unwrap().eval(x, y).unwrap()
    }

    #[test]
    fn basic_values() {
        assert_eq!(ev("2 + x", 0.5, 0.0), 2.5);
        assert_eq!(ev("2*x + y^2", 1.0, 2.0), 6.0);
        assert_eq!(ev("exp(0)", 0.3, -4.0), 1.0);
        assert_eq!(ev("min(x, y)", 0.3, 0.7), 0.3);
        assert_eq!(ev("max(x,y)", 0.3, 0.7), 0.7);
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("-x^2", 3.0, 0.0), -9.0);
        assert_eq!(ev("2^3^2", 0.0, 0.0), 512.0);
        assert_eq!(ev("1 - 2 - 3", 0.0, 0.0), -4.0);
        assert_eq!(ev("8 / 4 / 2", 0.0, 0.0), 1.0);
        assert_eq!(ev("2^-1", 0.0, 0.0), 0.5);
        assert_eq!(ev("  3 *(1+ 1)  ", 0.0, 0.0), 6.0);
        assert_eq!(ev("1.5e1 + 2E-1", 0.0, 0.0), 15.2);
    }

    #[test]
    fn unknown_identifier() {
        match parse_field("3 + zz") {
            Err(Error::UnknownIdentifier(name)) => assert_eq!(name, "zz"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_columns() {
        match parse_field("2 + * x") {
            Err(Error::Syntax { column, .. }) => assert_eq!(column, 5),
            other => panic!("unexpected {other:?}"),
        }
        match parse_field("(1 + x") {
            Err(Error::Syntax { column, .. }) => assert_eq!(column, 7),
            other => panic!("unexpected {other:?}"),
        }
        match parse_field("x $ y") {
            Err(Error::Syntax { column, .. }) => assert_eq!(column, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_field("min(x)"), Err(Error::Syntax { .. })));
        assert!(matches!(parse_field("x y"), Err(Error::Syntax { column: 3, .. })));
    }

    #[test]
    fn domain_errors_carry_the_point() {
        let f = parse_field("log(x - 1)").unwrap();
        match f.eval(0.5, 0.0) {
            Err(Error::Domain { at, .. }) => assert_eq!(at, At(0.5, 0.0)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_field("sqrt(x)").unwrap().eval(-1.0, 0.0).is_err());
        assert!(parse_field("1 / (x - y)").unwrap().eval(0.25, 0.25).is_err());
        assert!(parse_field("x ^ 0.5").unwrap().eval(-2.0, 0.0).is_err());
        assert!(parse_field("exp(x)").unwrap().eval(1e6, 0.0).is_err());
    }

    #[test]
    fn constants() {
        assert!(parse_field("2 * pi + exp(1)").unwrap().is_constant());
        assert!(!parse_field("2 + sin(y)").unwrap().is_constant());
    }

    #[test]
    fn display_reparses() {
        for s in ["-x^2", "2 + sin(x)*sin(y)", "min(x, -3) / (1 + y)", "-(-2)", "2^-x"] {
            let e = parse_field(s).unwrap();
            let again = parse_field(&e.to_string()).unwrap();
            assert_eq!(e, again, "{s} -> {e}");
        }
    }
}
