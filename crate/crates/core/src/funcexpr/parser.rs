//! Pratt parser for the test-function language.
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := atom ("^" unary)?            (right associative)
//! atom    := number | "x" | "pi" | "e" | ident "(" expr ("," expr)* ")"
//!          | "(" expr ")"
//! number  := digits ["." digits] [("e" | "E") ["+" | "-"] digits]
//!          | "." digits [exponent]
//! ```
//!
//! Binding powers: `^` > unary `-` > `*`, `/` > `+`, `-`. Juxtaposition is
//! not multiplication, so `2x` is a syntax error.

use super::ast::{BinOp, Constant, Expr, Func};
use thiserror::Error;

pub const MAX_SOURCE_LEN: usize = 64 * 1024;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("expression is {0} bytes long, the limit is {MAX_SOURCE_LEN}")]
    TooLong(usize),
    #[error("syntax error at byte {offset}: found {found}, expected one of {}", .expected.join(", "))]
    Syntax {
        offset: usize,
        found: String,
        expected: Vec<&'static str>,
    },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("`{name}` at byte {offset} takes {expected} argument(s), got {found}")]
    Arity {
        name: &'static str,
        offset: usize,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            // Exponent only if digits follow, so `2e` stays a syntax error
            // rather than silently reading `e` as the constant.
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                found: format!("`{text}`"),
                expected: vec!["number"],
            })?;
            out.push((Tok::Num(v), start));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
            continue;
        }
        let tok = match c {
            b'+' | b'-' | b'*' | b'/' | b'^' => Tok::Op(c as char),
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    found: format!("`{ch}`"),
                    expected: vec!["number", "identifier", "operator", "`(`", "`)`", "`,`"],
                });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::Eof, src.len()));
    Ok(out)
}

const UNARY_BP: u8 = 5;

fn infix_bp(op: char) -> Option<(u8, u8, BinOp)> {
    Some(match op {
        '+' => (1, 2, BinOp::Add),
        '-' => (1, 2, BinOp::Sub),
        '*' => (3, 4, BinOp::Mul),
        '/' => (3, 4, BinOp::Div),
        '^' => (8, 7, BinOp::Pow),
        _ => return None,
    })
}

const OPERATORS: [&str; 5] = ["`+`", "`-`", "`*`", "`/`", "`^`"];
const OPERAND_START: [&str; 5] = ["number", "`x`", "constant", "function call", "`(`"];

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: Vec<&'static str>) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            found: self.peek().describe(),
            expected,
        }
    }

    fn expect(&mut self, tok: Tok, closing: &[&'static str]) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            let mut expected: Vec<&'static str> = OPERATORS.to_vec();
            expected.extend_from_slice(closing);
            Err(self.error(expected))
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.prefix()?;
        while let Tok::Op(c) = self.peek() {
            let op = *c;
            let Some((lbp, rbp, bin)) = infix_bp(op) else { break };
            if lbp < min_bp {
                break;
            }
            self.bump();
            let rhs = self.expr(rbp)?;
            lhs = Expr::binary(bin, lhs, rhs);
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, ParseError> {
        let (tok, offset) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Op('-') => Ok(Expr::Neg(Box::new(self.expr(UNARY_BP)?))),
            Tok::LParen => {
                let e = self.expr(0)?;
                self.expect(Tok::RParen, &["`)`"])?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let is_atom = matches!(name.as_str(), "x" | "pi" | "e");
                if *self.peek() == Tok::LParen && !is_atom {
                    let func = Func::from_name(&name)
                        .ok_or(ParseError::UnknownIdentifier { name: name.clone(), offset })?;
                    self.bump();
                    let mut args = vec![self.expr(0)?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.expr(0)?);
                    }
                    self.expect(Tok::RParen, &["`,`", "`)`"])?;
                    if args.len() != func.arity() {
                        return Err(ParseError::Arity {
                            name: func.name(),
                            offset,
                            expected: func.arity(),
                            found: args.len(),
                        });
                    }
                    return Ok(Expr::Call(func, args));
                }
                match name.as_str() {
                    "x" => Ok(Expr::Var),
                    "pi" => Ok(Expr::Const(Constant::Pi)),
                    "e" => Ok(Expr::Const(Constant::E)),
                    _ => Err(ParseError::UnknownIdentifier { name, offset }),
                }
            }
            other => {
                Err(ParseError::Syntax {
                    offset,
                    found: other.describe(),
                    expected: OPERAND_START.to_vec(),
                })
            }
        }
    }
}

/// Parses `src` into an expression tree.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    if src.len() > MAX_SOURCE_LEN {
        return Err(ParseError::TooLong(src.len()));
    }
    if src.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr(0)?;
    if *p.peek() != Tok::Eof {
        let mut expected: Vec<&'static str> = OPERATORS.to_vec();
        expected.push("end of input");
        return Err(p.error(expected));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Expr::*;

    fn p(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    #[test]
    fn variable() {
        assert_eq!(p("x"), Var);
        assert_eq!(p("  ( x ) "), Var);
    }

    #[test]
    fn precedence() {
        // x^2 + sin(3*x)
        assert_eq!(
            p("x^2 + sin(3*x)"),
            Expr::binary(
                BinOp::Add,
                Expr::binary(BinOp::Pow, Var, Num(2.0)),
                Expr::call(Func::Sin, Expr::binary(BinOp::Mul, Num(3.0), Var)),
            )
        );
        // unary minus binds looser than ^ but tighter than *
        assert_eq!(p("-x^2"), Neg(Box::new(Expr::binary(BinOp::Pow, Var, Num(2.0)))));
        assert_eq!(
            p("-x*2"),
            Expr::binary(BinOp::Mul, Neg(Box::new(Var)), Num(2.0))
        );
        assert_eq!(p("1 - 2 - 3"), p("(1 - 2) - 3"));
        assert_eq!(p("8 / 4 / 2"), p("(8 / 4) / 2"));
    }

    #[test]
    fn power_is_right_associative() {
        assert_eq!(p("2^3^2"), p("2^(3^2)"));
        assert_eq!(p("2^-x"), Expr::binary(BinOp::Pow, Num(2.0), Neg(Box::new(Var))));
    }

    #[test]
    fn numbers() {
        assert_eq!(p("1e-3"), Num(1e-3));
        assert_eq!(p(".5"), Num(0.5));
        assert_eq!(p("2.5E+2"), Num(250.0));
        assert!(parse_expr("2e").is_err());
    }

    #[test]
    fn implicit_multiplication_rejected() {
        for s in ["2x", "2 x", "x(1)", "2(x)", "x sin(x)"] {
            match parse_expr(s) {
                Err(ParseError::Syntax { expected, .. }) => {
                    assert!(expected.contains(&"`*`"), "{s}: {expected:?}")
                }
                other => panic!("{s}: {other:?}"),
            }
        }
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(
            parse_expr("x + foo"),
            Err(ParseError::UnknownIdentifier { name: "foo".into(), offset: 4 })
        );
        assert_eq!(
            parse_expr("bar(x)"),
            Err(ParseError::UnknownIdentifier { name: "bar".into(), offset: 0 })
        );
        match parse_expr("(x + 1") {
            Err(ParseError::Syntax { offset, expected, .. }) => {
                assert_eq!(offset, 6);
                assert!(expected.contains(&"`)`"));
            }
            other => panic!("{other:?}"),
        }
        match parse_expr("x + * 2") {
            Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        match parse_expr("x $ 2") {
            Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_expr("min(x)"), Err(ParseError::Arity { found: 1, .. })));
        assert_eq!(parse_expr("   "), Err(ParseError::Empty));
        assert!(matches!(parse_expr(&"x+".repeat(40_000)), Err(ParseError::TooLong(_))));
        assert!(matches!(parse_expr("x +"), Err(ParseError::Syntax { offset: 3, .. })));
    }

    #[test]
    fn domain_problems_are_not_parse_errors() {
        assert!(parse_expr("ln(0 - 1)").is_ok());
    }

    #[test]
    fn canonical_print_round_trips() {
        for s in [
            "x^2 + sin(3*x)",
            "-x^2",
            "max(0, 1 - abs(4*x - 2))",
            "x*lnmu(x)",
            "2^3^-x",
            "1e300 * x - 1.5e-7",
            "exp(-x) / (1 + cos(pi*x)^2)",
        ] {
            let e = p(s);
            assert_eq!(p(&e.to_string()), e, "{s} -> {e}");
        }
    }
}
