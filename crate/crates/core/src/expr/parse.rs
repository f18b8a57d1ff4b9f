use std::fmt;

use thiserror::Error;

use super::{Expr, Func};

/// Nesting limit for parentheses, unary minus and calls.
pub const MAX_DEPTH: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedEnd,
    UnknownFunction(String),
    NonIntegerExponent,
    InvalidNumber,
    TooDeep,
    Empty,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected '{c}'"),
            ParseErrorKind::UnexpectedEnd => f.write_str("unexpected end of input"),
            ParseErrorKind::UnknownFunction(name) => {
                write!(f, "unknown function '{name}' (known: exp, sqrt, sin, cos)")
            }
            ParseErrorKind::NonIntegerExponent => {
                f.write_str("exponent must be an integer literal (use sqrt for square roots)")
            }
            ParseErrorKind::InvalidNumber => f.write_str("invalid number literal"),
            ParseErrorKind::TooDeep => write!(f, "expression nested deeper than {MAX_DEPTH}"),
            ParseErrorKind::Empty => f.write_str("empty expression"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at byte {offset}: {kind}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        text,
        pos: 0,
        depth: 0,
    };
    p.skip_ws();
    if p.pos == p.src.len() {
        return Err(p.error(ParseErrorKind::Empty));
    }
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        let c = p.current_char();
        return Err(p.error(ParseErrorKind::UnexpectedChar(c)));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
    depth: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, kind: ParseErrorKind) -> ParseError {
        ParseError { offset: self.pos, kind }
    }

    fn error_at(&self, offset: usize, kind: ParseErrorKind) -> ParseError {
        ParseError { offset, kind }
    }

    fn current_char(&self) -> char {
        self.text[self.pos..].chars().next().unwrap_or('\0')
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(self.error(ParseErrorKind::TooDeep));
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn expect(&mut self, byte: u8) -> Result<(), ParseError> {
        match self.peek() {
            Some(b) if b == byte => {
                self.pos += 1;
                Ok(())
            }
            Some(_) => Err(self.error(ParseErrorKind::UnexpectedChar(self.current_char()))),
            None => Err(self.error(ParseErrorKind::UnexpectedEnd)),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            self.enter()?;
            let inner = self.unary()?;
            self.leave();
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let mut base = self.atom()?;
        while self.peek() == Some(b'^') {
            self.pos += 1;
            let n = self.integer_exponent()?;
            base = Expr::Pow(Box::new(base), n);
        }
        Ok(base)
    }

    fn integer_exponent(&mut self) -> Result<i32, ParseError> {
        let start = match self.peek() {
            Some(_) => self.pos,
            None => return Err(self.error(ParseErrorKind::UnexpectedEnd)),
        };
        let parenthesized = self.src[self.pos] == b'(';
        if parenthesized {
            self.pos += 1;
            self.skip_ws();
        }
        let mut negative = false;
        if let Some(sign @ (b'-' | b'+')) = self.src.get(self.pos).copied() {
            negative = sign == b'-';
            self.pos += 1;
        }
        let digits_start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let digits = &self.text[digits_start..self.pos];
        let next = self.src.get(self.pos).copied();
        if digits.is_empty()
            || matches!(next, Some(b'.' | b'e' | b'E'))
            || next.is_some_and(|b| b.is_ascii_alphabetic() || b == b'_')
        {
            return Err(self.error_at(start, ParseErrorKind::NonIntegerExponent));
        }
        let magnitude: i64 = digits
            .parse()
            .map_err(|_| self.error_at(start, ParseErrorKind::NonIntegerExponent))?;
        let value = if negative { -magnitude } else { magnitude };
        let value = i32::try_from(value).map_err(|_| self.error_at(start, ParseErrorKind::NonIntegerExponent))?;
        if parenthesized {
            self.expect(b')')?;
        }
        Ok(value)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let Some(b) = self.peek() else {
            return Err(self.error(ParseErrorKind::UnexpectedEnd));
        };
        match b {
            b'(' => {
                self.pos += 1;
                self.enter()?;
                let inner = self.expr()?;
                self.expect(b')')?;
                self.leave();
                Ok(inner)
            }
            b'0'..=b'9' | b'.' => self.number(),
            b if b.is_ascii_alphabetic() || b == b'_' => self.identifier(),
            _ => Err(self.error(ParseErrorKind::UnexpectedChar(self.current_char()))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let bytes = self.src;
        let mut i = self.pos;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'.' {
            i += 1;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
        }
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
        let literal = &self.text[start..i];
        let value: f64 = literal
            .parse()
            .map_err(|_| self.error_at(start, ParseErrorKind::InvalidNumber))?;
        if !value.is_finite() {
            return Err(self.error_at(start, ParseErrorKind::InvalidNumber));
        }
        self.pos = i;
        Ok(Expr::Num(value))
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = &self.text[start..self.pos];
        if self.peek() == Some(b'(') {
            let func = Func::from_name(name)
                .ok_or_else(|| self.error_at(start, ParseErrorKind::UnknownFunction(name.to_string())))?;
            self.pos += 1;
            self.enter()?;
            let arg = self.expr()?;
            self.expect(b')')?;
            self.leave();
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        if Func::from_name(name).is_some() {
            // A bare function name is never a parameter.
            return Err(match self.peek() {
                Some(_) => self.error(ParseErrorKind::UnexpectedChar(self.current_char())),
                None => self.error(ParseErrorKind::UnexpectedEnd),
            });
        }
        if name == "x" {
            Ok(Expr::X)
        } else {
            Ok(Expr::Param(name.to_string()))
        }
    }
}
