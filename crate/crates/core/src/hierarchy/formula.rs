//! Prenex formulas over the naturals and their text format.
//!
//! ```text
//! EXISTS a . FORALL b < 10 . (b <= a + 3) AND (a*a < inp)
//! ```
//!
//! Body operators: `+`, `*`, `-` (monus), `=`, `<`, `<=`, `AND`, `OR`, `NOT`.
//! `>`, `>=` and `!=` are accepted and rewritten into the core set.
//! Keywords are case-insensitive; `inp` names the input.

use std::fmt;

use thiserror::Error;

use crate::value::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quant {
    Exists,
    Forall,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuantSpec {
    pub quant: Quant,
    pub var: String,
    /// Exclusive upper bound, `Q v < bound`.
    pub bound: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Lit(Value),
    /// Index into the quantifier prefix.
    Var(usize),
    Inp,
    Add(Box<Term>, Box<Term>),
    Mul(Box<Term>, Box<Term>),
    Monus(Box<Term>, Box<Term>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Lt,
    Le,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Body {
    Const(bool),
    Cmp(CmpOp, Term, Term),
    And(Box<Body>, Box<Body>),
    Or(Box<Body>, Box<Body>),
    Not(Box<Body>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Formula {
    pub prefix: Vec<QuantSpec>,
    pub body: Body,
}

impl Formula {
    pub fn quantifier_count(&self) -> usize {
        self.prefix.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("column {column}: {message}")]
pub struct FormulaParseError {
    /// 1-based character column.
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(Value),
    Sym(&'static str),
    End,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, FormulaParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push((Tok::Num(Value::parse_literal(&s).expect("digits")), col));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else {
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let sym = match two.as_str() {
                "<=" => Some("<="),
                ">=" => Some(">="),
                "!=" => Some("!="),
                _ => None,
            };
            if let Some(s) = sym {
                out.push((Tok::Sym(s), col));
                i += 2;
                continue;
            }
            let s = match c {
                '(' => "(",
                ')' => ")",
                '+' => "+",
                '-' => "-",
                '*' => "*",
                '=' => "=",
                '<' => "<",
                '>' => ">",
                '.' => ".",
                _ => {
                    return Err(FormulaParseError {
                        column: col,
                        message: format!("unexpected character `{c}`"),
                    })
                }
            };
            out.push((Tok::Sym(s), col));
            i += 1;
        }
    }
    out.push((Tok::End, chars.len() + 1));
    Ok(out)
}

// Untyped parse tree; sorted into terms and bodies afterwards.
#[derive(Debug, Clone)]
enum Expr {
    Num(Value),
    Name(String, usize),
    Bool(bool),
    Arith(&'static str, Box<Expr>, Box<Expr>, usize),
    Cmp(&'static str, Box<Expr>, Box<Expr>, usize),
    And(Box<Expr>, Box<Expr>, usize),
    Or(Box<Expr>, Box<Expr>, usize),
    Not(Box<Expr>, usize),
}

impl Expr {
    fn column(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Bool(_) => 0,
            Expr::Name(_, c)
            | Expr::Arith(_, _, _, c)
            | Expr::Cmp(_, _, _, c)
            | Expr::And(_, _, c)
            | Expr::Or(_, _, c)
            | Expr::Not(_, c) => *c,
        }
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

fn is_kw(tok: &Tok, kw: &str) -> bool {
    matches!(tok, Tok::Ident(s) if s.eq_ignore_ascii_case(kw))
}

const KEYWORDS: [&str; 7] = ["EXISTS", "FORALL", "AND", "OR", "NOT", "TRUE", "FALSE"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn col(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, FormulaParseError> {
        Err(FormulaParseError {
            column: self.col(),
            message: message.into(),
        })
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), FormulaParseError> {
        if *self.peek() == Tok::Sym(static_sym(s)) {
            self.bump();
            Ok(())
        } else {
            self.fail(format!("expected `{s}`"))
        }
    }

    fn prefix(&mut self) -> Result<Vec<QuantSpec>, FormulaParseError> {
        let mut prefix: Vec<QuantSpec> = Vec::new();
        loop {
            let quant = if is_kw(self.peek(), "EXISTS") {
                Quant::Exists
            } else if is_kw(self.peek(), "FORALL") {
                Quant::Forall
            } else {
                return Ok(prefix);
            };
            self.bump();
            let col = self.col();
            let var = match self.bump().0 {
                Tok::Ident(name)
                    if !KEYWORDS.iter().any(|k| name.eq_ignore_ascii_case(k)) && !name.eq_ignore_ascii_case("inp") =>
                {
                    name
                }
                _ => {
                    return Err(FormulaParseError {
                        column: col,
                        message: "expected a variable name".into(),
                    })
                }
            };
            if prefix.iter().any(|q| q.var == var) {
                return Err(FormulaParseError {
                    column: col,
                    message: format!("variable `{var}` is quantified twice"),
                });
            }
            let mut bound = None;
            if *self.peek() == Tok::Sym("<") {
                self.bump();
                match self.bump() {
                    (Tok::Num(n), c) => {
                        bound = Some(n.to_u64().filter(|b| *b >= 1).ok_or(FormulaParseError {
                            column: c,
                            message: "bound must be a positive 64-bit integer".into(),
                        })?)
                    }
                    (_, c) => {
                        return Err(FormulaParseError {
                            column: c,
                            message: "expected a numeric bound".into(),
                        })
                    }
                }
            }
            self.expect_sym(".")?;
            prefix.push(QuantSpec { quant, var, bound });
        }
    }

    fn or(&mut self) -> Result<Expr, FormulaParseError> {
        let mut lhs = self.and()?;
        while is_kw(self.peek(), "OR") {
            let c = self.bump().1;
            let rhs = self.and()?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs), c);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr, FormulaParseError> {
        let mut lhs = self.not()?;
        while is_kw(self.peek(), "AND") {
            let c = self.bump().1;
            let rhs = self.not()?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs), c);
        }
        Ok(lhs)
    }

    fn not(&mut self) -> Result<Expr, FormulaParseError> {
        if is_kw(self.peek(), "NOT") {
            let c = self.bump().1;
            return Ok(Expr::Not(Box::new(self.not()?), c));
        }
        self.cmp()
    }

    fn cmp(&mut self) -> Result<Expr, FormulaParseError> {
        let lhs = self.sum()?;
        let op = match self.peek() {
            Tok::Sym(s @ ("=" | "<" | "<=" | ">" | ">=" | "!=")) => *s,
            _ => return Ok(lhs),
        };
        let c = self.bump().1;
        let rhs = self.sum()?;
        Ok(Expr::Cmp(op, Box::new(lhs), Box::new(rhs), c))
    }

    fn sum(&mut self) -> Result<Expr, FormulaParseError> {
        let mut lhs = self.product()?;
        while let Tok::Sym(s @ ("+" | "-")) = self.peek() {
            let s = *s;
            let c = self.bump().1;
            let rhs = self.product()?;
            lhs = Expr::Arith(s, Box::new(lhs), Box::new(rhs), c);
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr, FormulaParseError> {
        let mut lhs = self.atom()?;
        while *self.peek() == Tok::Sym("*") {
            let c = self.bump().1;
            let rhs = self.atom()?;
            lhs = Expr::Arith("*", Box::new(lhs), Box::new(rhs), c);
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<Expr, FormulaParseError> {
        let (tok, col) = self.bump();
        match tok {
            Tok::Num(n) => Ok(Expr::Num(n)),
            Tok::Ident(s) if s.eq_ignore_ascii_case("TRUE") => Ok(Expr::Bool(true)),
            Tok::Ident(s) if s.eq_ignore_ascii_case("FALSE") => Ok(Expr::Bool(false)),
            Tok::Ident(s) if KEYWORDS.iter().any(|k| s.eq_ignore_ascii_case(k)) => Err(FormulaParseError {
                column: col,
                message: format!("unexpected keyword `{s}`"),
            }),
            Tok::Ident(s) => Ok(Expr::Name(s, col)),
            Tok::Sym("(") => {
                let e = self.or()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::End => Err(FormulaParseError {
                column: col,
                message: "unexpected end of formula".into(),
            }),
            Tok::Sym(s) => Err(FormulaParseError {
                column: col,
                message: format!("unexpected `{s}`"),
            }),
        }
    }
}

fn static_sym(s: &str) -> &'static str {
    ["(", ")", "+", "-", "*", "=", "<", ">", ".", "<=", ">=", "!="]
        .into_iter()
        .find(|x| *x == s)
        .unwrap_or("?")
}

fn type_error<T>(e: &Expr, what: &str) -> Result<T, FormulaParseError> {
    Err(FormulaParseError {
        column: e.column().max(1),
        message: format!("expected {what}"),
    })
}

fn to_term(e: Expr, prefix: &[QuantSpec]) -> Result<Term, FormulaParseError> {
    match e {
        Expr::Num(n) => Ok(Term::Lit(n)),
        Expr::Name(s, _) if s.eq_ignore_ascii_case("inp") => Ok(Term::Inp),
        Expr::Name(s, c) => match prefix.iter().position(|q| q.var == s) {
            Some(i) => Ok(Term::Var(i)),
            None => Err(FormulaParseError {
                column: c,
                message: format!("undeclared variable `{s}`"),
            }),
        },
        Expr::Arith(op, l, r, _) => {
            let (l, r) = (Box::new(to_term(*l, prefix)?), Box::new(to_term(*r, prefix)?));
            Ok(match op {
                "+" => Term::Add(l, r),
                "*" => Term::Mul(l, r),
                _ => Term::Monus(l, r),
            })
        }
        other => type_error(&other, "an arithmetic term"),
    }
}

fn to_body(e: Expr, prefix: &[QuantSpec]) -> Result<Body, FormulaParseError> {
    match e {
        Expr::Bool(b) => Ok(Body::Const(b)),
        Expr::And(l, r, _) => Ok(Body::And(Box::new(to_body(*l, prefix)?), Box::new(to_body(*r, prefix)?))),
        Expr::Or(l, r, _) => Ok(Body::Or(Box::new(to_body(*l, prefix)?), Box::new(to_body(*r, prefix)?))),
        Expr::Not(b, _) => Ok(Body::Not(Box::new(to_body(*b, prefix)?))),
        Expr::Cmp(op, l, r, _) => {
            let (l, r) = (to_term(*l, prefix)?, to_term(*r, prefix)?);
            Ok(match op {
                "=" => Body::Cmp(CmpOp::Eq, l, r),
                "<" => Body::Cmp(CmpOp::Lt, l, r),
                "<=" => Body::Cmp(CmpOp::Le, l, r),
                ">" => Body::Cmp(CmpOp::Lt, r, l),
                ">=" => Body::Cmp(CmpOp::Le, r, l),
                _ => Body::Not(Box::new(Body::Cmp(CmpOp::Eq, l, r))),
            })
        }
        other => type_error(&other, "a comparison or boolean expression"),
    }
}

impl std::str::FromStr for Formula {
    type Err = FormulaParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}

pub fn parse_formula(text: &str) -> Result<Formula, FormulaParseError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let prefix = p.prefix()?;
    let expr = p.or()?;
    if *p.peek() != Tok::End {
        return p.fail("unexpected trailing input");
    }
    let body = to_body(expr, &prefix)?;
    Ok(Formula { prefix, body })
}

// Display ------------------------------------------------------------------

fn term_prec(t: &Term) -> u8 {
    match t {
        Term::Add(..) | Term::Monus(..) => 1,
        Term::Mul(..) => 2,
        _ => 3,
    }
}

struct TermFmt<'a>(&'a Term, &'a [QuantSpec]);

impl fmt::Display for TermFmt<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let TermFmt(t, names) = *self;
        let (op, l, r) = match t {
            Term::Lit(v) => return write!(f, "{v}"),
            Term::Var(i) => return f.write_str(&names[*i].var),
            Term::Inp => return f.write_str("inp"),
            Term::Add(l, r) => ("+", l, r),
            Term::Mul(l, r) => ("*", l, r),
            Term::Monus(l, r) => ("-", l, r),
        };
        let prec = term_prec(t);
        // Left-associative: the right operand needs parentheses at equal precedence.
        let wrap = |f: &mut fmt::Formatter<'_>, sub: &Term, strict: bool| {
            let p = term_prec(sub);
            if p < prec || (strict && p == prec) {
                write!(f, "({})", TermFmt(sub, names))
            } else {
                write!(f, "{}", TermFmt(sub, names))
            }
        };
        wrap(f, l, false)?;
        write!(f, " {op} ")?;
        wrap(f, r, true)
    }
}

struct BodyFmt<'a>(&'a Body, &'a [QuantSpec]);

impl fmt::Display for BodyFmt<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let BodyFmt(b, names) = *self;
        let nested = |f: &mut fmt::Formatter<'_>, sub: &Body| match sub {
            Body::And(..) | Body::Or(..) => write!(f, "({})", BodyFmt(sub, names)),
            _ => write!(f, "{}", BodyFmt(sub, names)),
        };
        match b {
            Body::Const(true) => f.write_str("TRUE"),
            Body::Const(false) => f.write_str("FALSE"),
            Body::Cmp(op, l, r) => {
                let op = match op {
                    CmpOp::Eq => "=",
                    CmpOp::Lt => "<",
                    CmpOp::Le => "<=",
                };
                write!(f, "{} {op} {}", TermFmt(l, names), TermFmt(r, names))
            }
            Body::And(l, r) => {
                nested(f, l)?;
                f.write_str(" AND ")?;
                nested(f, r)
            }
            Body::Or(l, r) => {
                nested(f, l)?;
                f.write_str(" OR ")?;
                nested(f, r)
            }
            Body::Not(inner) => match **inner {
                Body::Cmp(..) | Body::And(..) | Body::Or(..) => write!(f, "NOT ({})", BodyFmt(inner, names)),
                _ => write!(f, "NOT {}", BodyFmt(inner, names)),
            },
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in &self.prefix {
            let kw = match q.quant {
                Quant::Exists => "EXISTS",
                Quant::Forall => "FORALL",
            };
            match q.bound {
                Some(b) => write!(f, "{kw} {} < {b} . ", q.var)?,
                None => write!(f, "{kw} {} . ", q.var)?,
            }
        }
        write!(f, "{}", BodyFmt(&self.body, &self.prefix))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_reference_example() {
        let f = parse_formula("EXISTS a . FORALL b . (b <= a + 3) AND (a*a < inp)").unwrap();
        assert_eq!(f.prefix.len(), 2);
        assert_eq!(f.prefix[0].quant, Quant::Exists);
        assert_eq!(f.prefix[1].bound, None);
        let Body::And(l, r) = &f.body else { panic!() };
        assert_eq!(
            **l,
            Body::Cmp(
                CmpOp::Le,
                Term::Var(1),
                Term::Add(Box::new(Term::Var(0)), Box::new(Term::Lit(Value::from(3u64))))
            )
        );
        assert_eq!(
            **r,
            Body::Cmp(CmpOp::Lt, Term::Mul(Box::new(Term::Var(0)), Box::new(Term::Var(0))), Term::Inp)
        );
    }

    #[test]
    fn bounded_quantifier() {
        let f = parse_formula("exists v < 10 . v = 3").unwrap();
        assert_eq!(f.prefix[0].bound, Some(10));
        assert_eq!(f.to_string(), "EXISTS v < 10 . v = 3");
    }

    #[test]
    fn parenthesized_arithmetic_and_logic() {
        let f = parse_formula("FORALL a . EXISTS b . b*b <= a AND NOT ((b+1)*(b+1) <= a)").unwrap();
        assert_eq!(
            f.to_string(),
            "FORALL a . EXISTS b . b * b <= a AND NOT ((b + 1) * (b + 1) <= a)"
        );
        assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn sugar_is_rewritten() {
        let f = parse_formula("EXISTS a . a > 2 AND a != 5 AND a >= 1").unwrap();
        let g = parse_formula("EXISTS a . 2 < a AND NOT (a = 5) AND 1 <= a").unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn monus_associativity_survives_printing() {
        let f = parse_formula("EXISTS a . a - (a - 1) = 1").unwrap();
        assert_eq!(f.to_string(), "EXISTS a . a - (a - 1) = 1");
        assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
        let g = parse_formula("EXISTS a . a - a - 1 = 0").unwrap();
        assert_ne!(f, g);
    }

    #[test]
    fn errors_have_columns() {
        for (src, col) in [
            ("EXISTS a . b = 1", 12),
            ("EXISTS a . a = ", 16),
            ("EXISTS a a = 1", 10),
            ("EXISTS a . EXISTS a . a = 1", 19),
            ("EXISTS a . a + 1", 14),
            ("EXISTS a . a = 1 $", 18),
        ] {
            let err = parse_formula(src).unwrap_err();
            assert_eq!(err.column, col, "{src}: {err}");
        }
    }

    #[test]
    fn closed_body() {
        let f = parse_formula("2 + 2 = 4").unwrap();
        assert!(f.prefix.is_empty());
    }
}
