//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expression := sum
//! sum        := signed { ("+" | "-") signed }
//! signed     := "-" signed | product
//! product    := power { ("*" | "/") power }
//! power      := atom [ "^" exponent ]
//! exponent   := "-" exponent | power            (right-associative "^")
//! atom       := number | "x" | "pi" | "e"
//!             | function "(" sum ")" | "(" sum ")"
//! ```
//!
//! Unary minus therefore binds tighter than binary "-" but looser than "*"
//! and "^": `-x^3*sin(1/x)` is `-(x^3*sin(1/x))` and `-2^2` is `-(2^2)`.

use super::{BinOp, Constant, Expr, Func};
use crate::error::{Error, Result};

const MAX_DEPTH: usize = 400;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    /// 1-based char position of the next unconsumed char.
    pos: usize,
}

fn syntax(pos: usize, msg: impl Into<String>) -> Error {
    Error::Syntax {
        position: pos,
        message: msg.into(),
    }
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            chars: src.char_indices().peekable(),
            src,
            pos: 1,
        }
    }

    fn bump(&mut self) -> Option<(usize, char)> {
        let c = self.chars.next();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn peek_char(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize)>> {
        let mut out = Vec::new();
        loop {
            while matches!(self.peek_char(), Some(c) if c.is_whitespace()) {
                self.bump();
            }
            let start = self.pos;
            let Some(c) = self.peek_char() else {
                out.push((Tok::Eof, start));
                return Ok(out);
            };
            let tok = match c {
                '+' => {
                    self.bump();
                    Tok::Plus
                }
                '-' => {
                    self.bump();
                    Tok::Minus
                }
                '*' => {
                    self.bump();
                    Tok::Star
                }
                '/' => {
                    self.bump();
                    Tok::Slash
                }
                '^' => {
                    self.bump();
                    Tok::Caret
                }
                '(' => {
                    self.bump();
                    Tok::LParen
                }
                ')' => {
                    self.bump();
                    Tok::RParen
                }
                c if c.is_ascii_digit() || c == '.' => self.number(start)?,
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let mut name = String::new();
                    while matches!(self.peek_char(), Some(c) if c.is_ascii_alphanumeric() || c == '_')
                    {
                        name.push(self.bump().unwrap().1);
                    }
                    Tok::Ident(name)
                }
                other => return Err(syntax(start, format!("unexpected character `{other}`"))),
            };
            out.push((tok, start));
        }
    }

    fn number(&mut self, start: usize) -> Result<Tok> {
        let from = self.chars.peek().map(|&(i, _)| i).unwrap_or(self.src.len());
        let mut saw_digit = false;
        while matches!(self.peek_char(), Some(c) if c.is_ascii_digit()) {
            saw_digit = true;
            self.bump();
        }
        if self.peek_char() == Some('.') {
            self.bump();
            while matches!(self.peek_char(), Some(c) if c.is_ascii_digit()) {
                saw_digit = true;
                self.bump();
            }
        }
        if !saw_digit {
            return Err(syntax(start, "malformed number"));
        }
        // exponent part: only when `e`/`E` is actually followed by digits,
        // so that `2*e` still lexes the Euler constant
        if matches!(self.peek_char(), Some('e') | Some('E')) {
            let mut probe = self.chars.clone();
            probe.next();
            let mut ahead = probe.clone();
            let next = ahead.next().map(|(_, c)| c);
            let consumes = match next {
                Some(c) if c.is_ascii_digit() => true,
                Some('+') | Some('-') => {
                    matches!(ahead.next().map(|(_, c)| c), Some(c) if c.is_ascii_digit())
                }
                _ => false,
            };
            if consumes {
                self.bump(); // e
                if matches!(self.peek_char(), Some('+') | Some('-')) {
                    self.bump();
                }
                while matches!(self.peek_char(), Some(c) if c.is_ascii_digit()) {
                    self.bump();
                }
            }
        }
        let to = self.chars.peek().map(|&(i, _)| i).unwrap_or(self.src.len());
        let text = &self.src[from..to];
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Tok::Num(v)),
            Ok(_) => Err(syntax(start, format!("number literal `{text}` overflows"))),
            Err(_) => Err(syntax(start, format!("malformed number `{text}`"))),
        }
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(syntax(self.pos(), format!("expected {what}")))
        }
    }

    fn guard(&self, depth: usize) -> Result<()> {
        if depth > MAX_DEPTH {
            Err(syntax(self.pos(), "expression too deeply nested"))
        } else {
            Ok(())
        }
    }

    fn sum(&mut self, depth: usize) -> Result<Expr> {
        self.guard(depth)?;
        let mut lhs = self.signed(depth + 1)?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.signed(depth + 1)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn signed(&mut self, depth: usize) -> Result<Expr> {
        self.guard(depth)?;
        if *self.peek() == Tok::Minus {
            self.bump();
            Ok(Expr::Neg(Box::new(self.signed(depth + 1)?)))
        } else {
            self.product(depth + 1)
        }
    }

    fn product(&mut self, depth: usize) -> Result<Expr> {
        self.guard(depth)?;
        let mut lhs = self.power(depth + 1)?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.power(depth + 1)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn power(&mut self, depth: usize) -> Result<Expr> {
        self.guard(depth)?;
        let base = self.atom(depth + 1)?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exp = self.exponent(depth + 1)?;
            Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)))
        } else {
            Ok(base)
        }
    }

    fn exponent(&mut self, depth: usize) -> Result<Expr> {
        self.guard(depth)?;
        if *self.peek() == Tok::Minus {
            self.bump();
            Ok(Expr::Neg(Box::new(self.exponent(depth + 1)?)))
        } else {
            self.power(depth + 1)
        }
    }

    fn atom(&mut self, depth: usize) -> Result<Expr> {
        self.guard(depth)?;
        let pos = self.pos();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let inner = self.sum(depth + 1)?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Expr::Var),
                "pi" => Ok(Expr::Const(Constant::Pi)),
                "e" => Ok(Expr::Const(Constant::E)),
                "sin" => self.call(Func::Sin, depth),
                "cos" => self.call(Func::Cos, depth),
                "tan" => self.call(Func::Tan, depth),
                "exp" => self.call(Func::Exp, depth),
                "log" => self.call(Func::Log, depth),
                "sqrt" => self.call(Func::Sqrt, depth),
                "abs" => self.call(Func::Abs, depth),
                "sinh" => self.call(Func::Sinh, depth),
                "cosh" => self.call(Func::Cosh, depth),
                "tanh" => self.call(Func::Tanh, depth),
                other => Err(syntax(pos, format!("unknown identifier `{other}`"))),
            },
            _ => Err(syntax(pos, "expected expression")),
        }
    }

    fn call(&mut self, f: Func, depth: usize) -> Result<Expr> {
        self.expect(Tok::LParen, "`(` after function name")?;
        let arg = self.sum(depth + 1)?;
        self.expect(Tok::RParen, "`)`")?;
        Ok(Expr::Call(f, Box::new(arg)))
    }
}

pub(super) fn parse(src: &str) -> Result<Expr> {
    let toks = Lexer::new(src).tokens()?;
    let mut p = Parser { toks, at: 0 };
    let e = p.sum(0)?;
    if *p.peek() != Tok::Eof {
        return Err(syntax(p.pos(), "unexpected trailing input"));
    }
    Ok(e)
}
