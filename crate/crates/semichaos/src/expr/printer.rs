//! Canonical rendering with minimal parentheses. Re-parsing printed output
//! yields a structurally identical tree; numeric literals use the shortest
//! round-trip form.

use super::{BinOp, Expr};
use std::fmt;

/// 1 = sum level, 2 = unary minus, 3 = product, 4 = power, 5 = atom.
fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Bin(BinOp::Add | BinOp::Sub, _, _) => 1,
        Expr::Neg(_) => 2,
        Expr::Num(v) if *v < 0.0 => 2,
        Expr::Bin(BinOp::Mul | BinOp::Div, _, _) => 3,
        Expr::Bin(BinOp::Pow, _, _) => 4,
        _ => 5,
    }
}

fn write_prec(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if prec(e) < min {
        write!(f, "(")?;
        write_prec(e, 0, f)?;
        return write!(f, ")");
    }
    match e {
        Expr::Num(v) => {
            if *v < 0.0 {
                write!(f, "-{:?}", -v)
            } else if *v == 0.0 {
                // normalizes -0.0, whose debug form would not re-lex
                write!(f, "0.0")
            } else {
                write!(f, "{v:?}")
            }
        }
        Expr::Var => write!(f, "x"),
        Expr::Const(super::Constant::Pi) => write!(f, "pi"),
        Expr::Const(super::Constant::E) => write!(f, "e"),
        Expr::Neg(a) => {
            write!(f, "-")?;
            write_prec(a, 2, f)
        }
        Expr::Bin(op, a, b) => {
            let (sym, la, rb) = match op {
                BinOp::Add => ("+", 1, 2),
                BinOp::Sub => ("-", 1, 2),
                BinOp::Mul => ("*", 3, 4),
                BinOp::Div => ("/", 3, 4),
                BinOp::Pow => ("^", 5, 4),
            };
            write_prec(a, la, f)?;
            write!(f, "{sym}")?;
            write_prec(b, rb, f)
        }
        Expr::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_prec(a, 1, f)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_prec(self, 0, f)
    }
}
