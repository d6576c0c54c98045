//! Closed-form expressions of one real variable `x`.
//!
//! This is the input language for vector fields, weights and densities.
//! The grammar (see `docs/grammar.ebnf` and the README) is the contract for
//! every function-valued field in a problem document. Trees are immutable,
//! evaluation is reentrant and deterministic: the same tree evaluated at the
//! same point yields bit-identical results.

mod parser;
mod printer;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constant {
    Pi,
    E,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Sinh,
    Cosh,
    Tanh,
}

impl Func {
    pub(crate) fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Expression tree. Numeric literals produced by the parser are always
/// non-negative (leading minus becomes `Neg`); constant folding may introduce
/// negative literals, the printer renders them as negations.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Const(Constant),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Parses expression text into a tree. Errors carry a 1-based character
/// position; end of input reports `chars + 1`.
pub fn parse(src: &str) -> Result<Expr> {
    parser::parse(src)
}

impl std::str::FromStr for Expr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Expr> {
        parse(s)
    }
}

fn domain_err(sub: &Expr, x: f64, reason: &str) -> Error {
    Error::Domain {
        subexpr: sub.to_string(),
        x,
        reason: reason.to_string(),
    }
}

/// `true` when the exponent value denotes a mathematical integer.
fn is_integral(v: f64) -> bool {
    v.is_finite() && v == v.trunc()
}

impl Expr {
    /// Evaluates the tree at `x`. Out-of-domain operations (log of a
    /// non-positive value, division by zero, fractional power of a negative
    /// base, `0^negative`) and NaN results are reported as [`Error::Domain`];
    /// overflow to an infinity is passed through as an IEEE value.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let v = self.eval_raw(x)?;
        if v.is_nan() {
            Err(domain_err(self, x, "result is NaN"))
        } else {
            Ok(v)
        }
    }

    fn eval_raw(&self, x: f64) -> Result<f64> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var => Ok(x),
            Expr::Const(Constant::Pi) => Ok(std::f64::consts::PI),
            Expr::Const(Constant::E) => Ok(std::f64::consts::E),
            Expr::Neg(a) => Ok(-a.eval_raw(x)?),
            Expr::Bin(op, a, b) => {
                let va = a.eval_raw(x)?;
                let vb = b.eval_raw(x)?;
                match op {
                    BinOp::Add => Ok(va + vb),
                    BinOp::Sub => Ok(va - vb),
                    BinOp::Mul => Ok(va * vb),
                    BinOp::Div => {
                        if vb == 0.0 {
                            Err(domain_err(self, x, "division by zero"))
                        } else {
                            Ok(va / vb)
                        }
                    }
                    BinOp::Pow => {
                        if va < 0.0 && !is_integral(vb) {
                            Err(domain_err(self, x, "negative base with non-integer exponent"))
                        } else if va == 0.0 && vb < 0.0 {
                            Err(domain_err(self, x, "zero base with negative exponent"))
                        } else {
                            Ok(va.powf(vb))
                        }
                    }
                }
            }
            Expr::Call(f, a) => {
                let v = a.eval_raw(x)?;
                match f {
                    Func::Sin => Ok(v.sin()),
                    Func::Cos => Ok(v.cos()),
                    Func::Tan => Ok(v.tan()),
                    Func::Exp => Ok(v.exp()),
                    Func::Log => {
                        if v <= 0.0 {
                            Err(domain_err(self, x, "log of a non-positive value"))
                        } else {
                            Ok(v.ln())
                        }
                    }
                    Func::Sqrt => {
                        if v < 0.0 {
                            Err(domain_err(self, x, "square root of a negative value"))
                        } else {
                            Ok(v.sqrt())
                        }
                    }
                    Func::Abs => Ok(v.abs()),
                    Func::Sinh => Ok(v.sinh()),
                    Func::Cosh => Ok(v.cosh()),
                    Func::Tanh => Ok(v.tanh()),
                }
            }
        }
    }

    /// Symbolic derivative with respect to `x`.
    ///
    /// No algebraic simplification is performed beyond folding literal-only
    /// subtrees and the unit/zero identities applied while the result is
    /// built (`f*1 -> f`, `f+0 -> f`, `f^1 -> f`, ...). Domain violations in
    /// the derivative (e.g. `abs` at the origin, which derives to
    /// `u/abs(u) * u'`) surface at evaluation, not here.
    pub fn differentiate(&self) -> Expr {
        match self {
            Expr::Num(_) | Expr::Const(_) => Expr::Num(0.0),
            Expr::Var => Expr::Num(1.0),
            Expr::Neg(a) => neg(a.differentiate()),
            Expr::Bin(BinOp::Add, a, b) => add(a.differentiate(), b.differentiate()),
            Expr::Bin(BinOp::Sub, a, b) => sub(a.differentiate(), b.differentiate()),
            Expr::Bin(BinOp::Mul, a, b) => add(
                mul(a.differentiate(), (**b).clone()),
                mul((**a).clone(), b.differentiate()),
            ),
            Expr::Bin(BinOp::Div, a, b) => div(
                sub(
                    mul(a.differentiate(), (**b).clone()),
                    mul((**a).clone(), b.differentiate()),
                ),
                pow((**b).clone(), Expr::Num(2.0)),
            ),
            Expr::Bin(BinOp::Pow, a, b) => match &**b {
                // f^c with a literal exponent: power rule, valid for negative
                // bases with integral c where the general form is not.
                Expr::Num(c) => mul(
                    mul(Expr::Num(*c), pow((**a).clone(), Expr::Num(c - 1.0))),
                    a.differentiate(),
                ),
                _ => mul(
                    self.clone(),
                    add(
                        mul(b.differentiate(), Expr::Call(Func::Log, a.clone())),
                        div(mul((**b).clone(), a.differentiate()), (**a).clone()),
                    ),
                ),
            },
            Expr::Call(f, a) => {
                let u = (**a).clone();
                let du = a.differentiate();
                match f {
                    Func::Sin => mul(Expr::Call(Func::Cos, a.clone()), du),
                    Func::Cos => neg(mul(Expr::Call(Func::Sin, a.clone()), du)),
                    Func::Tan => div(du, pow(Expr::Call(Func::Cos, a.clone()), Expr::Num(2.0))),
                    Func::Exp => mul(self.clone(), du),
                    Func::Log => div(du, u),
                    Func::Sqrt => div(du, mul(Expr::Num(2.0), self.clone())),
                    Func::Abs => mul(div(u, self.clone()), du),
                    Func::Sinh => mul(Expr::Call(Func::Cosh, a.clone()), du),
                    Func::Cosh => mul(Expr::Call(Func::Sinh, a.clone()), du),
                    Func::Tanh => div(du, pow(Expr::Call(Func::Cosh, a.clone()), Expr::Num(2.0))),
                }
            }
        }
    }

    /// `true` when the tree contains no occurrence of the variable.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Var => false,
            Expr::Num(_) | Expr::Const(_) => true,
            Expr::Neg(a) | Expr::Call(_, a) => a.is_constant(),
            Expr::Bin(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    /// `true` when the tree is the literal 0 or a constant tree that folds
    /// to exactly 0 (used to detect identically-zero weights).
    pub fn is_literal_zero(&self) -> bool {
        match self {
            Expr::Num(v) => *v == 0.0,
            _ => self.is_constant() && self.eval(0.0) == Ok(0.0),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var | Expr::Const(_) => 1,
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.node_count(),
            Expr::Bin(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }
}

fn fold(e: Expr) -> Expr {
    if e.is_constant() {
        if let Ok(v) = e.eval(0.0) {
            if v.is_finite() {
                return Expr::Num(v);
            }
        }
    }
    e
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 1.0)
}

// Constructors used by `differentiate`: fold literal subtrees and drop
// multiplicative/additive units so derivatives stay readable and compact.

fn add(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        return fold(b);
    }
    if is_zero(&b) {
        return fold(a);
    }
    fold(Expr::Bin(BinOp::Add, Box::new(a), Box::new(b)))
}

fn sub(a: Expr, b: Expr) -> Expr {
    if is_zero(&b) {
        return fold(a);
    }
    if is_zero(&a) {
        return neg(b);
    }
    fold(Expr::Bin(BinOp::Sub, Box::new(a), Box::new(b)))
}

fn neg(a: Expr) -> Expr {
    if let Expr::Num(v) = a {
        return Expr::Num(-v);
    }
    Expr::Neg(Box::new(a))
}

fn mul(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) || is_zero(&b) {
        return Expr::Num(0.0);
    }
    if is_one(&a) {
        return fold(b);
    }
    if is_one(&b) {
        return fold(a);
    }
    fold(Expr::Bin(BinOp::Mul, Box::new(a), Box::new(b)))
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) && !is_zero(&b) {
        return Expr::Num(0.0);
    }
    if is_one(&b) {
        return fold(a);
    }
    fold(Expr::Bin(BinOp::Div, Box::new(a), Box::new(b)))
}

fn pow(a: Expr, b: Expr) -> Expr {
    if is_one(&b) {
        return fold(a);
    }
    if is_zero(&b) {
        return Expr::Num(1.0);
    }
    fold(Expr::Bin(BinOp::Pow, Box::new(a), Box::new(b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn evaluates_logistic_field() {
        assert_eq!(p("-x*(1-x)").eval(0.5).unwrap(), -0.25);
    }

    #[test]
    fn parses_oscillating_field_with_loose_unary_minus() {
        // unary minus binds looser than `*` and `^`
        let e = p("-x^3*sin(1/x)");
        match &e {
            Expr::Neg(inner) => match &**inner {
                Expr::Bin(BinOp::Mul, a, b) => {
                    assert!(matches!(&**a, Expr::Bin(BinOp::Pow, _, _)));
                    assert!(matches!(&**b, Expr::Call(Func::Sin, _)));
                }
                other => panic!("expected product under the negation, got {other:?}"),
            },
            other => panic!("expected negation at the root, got {other:?}"),
        }
        let v = e.eval(2.0 / std::f64::consts::PI).unwrap();
        assert!((v - -(2.0f64 / std::f64::consts::PI).powi(3)).abs() < 1e-15);
    }

    #[test]
    fn power_binds_tighter_than_product() {
        // x^2*3 must be (x^2)*3
        assert_eq!(p("x^2*3").eval(2.0).unwrap(), 12.0);
        // right-associative exponentiation
        assert_eq!(p("2^3^2").eval(0.0).unwrap(), 512.0);
        assert_eq!(p("2^-2").eval(0.0).unwrap(), 0.25);
        // unary minus applies after the power
        assert_eq!(p("-2^2").eval(0.0).unwrap(), -4.0);
    }

    #[test]
    fn division_by_zero_is_a_domain_error() {
        match p("1/x").eval(0.0) {
            Err(Error::Domain { subexpr, x, .. }) => {
                assert_eq!(subexpr, "1.0/x");
                assert_eq!(x, 0.0);
            }
            other => panic!("expected a domain error, got {other:?}"),
        }
    }

    #[test]
    fn log_and_sqrt_domain_errors() {
        assert!(matches!(p("log(x)").eval(0.0), Err(Error::Domain { .. })));
        assert!(matches!(p("log(x)").eval(-1.0), Err(Error::Domain { .. })));
        assert!(matches!(p("sqrt(x)").eval(-1.0), Err(Error::Domain { .. })));
        assert!(p("sqrt(x)").eval(0.0).unwrap() == 0.0);
    }

    #[test]
    fn fractional_power_of_negative_base_is_a_domain_error() {
        assert!(matches!(p("x^2.5").eval(-1.0), Err(Error::Domain { .. })));
        assert_eq!(p("x^3").eval(-2.0).unwrap(), -8.0);
        assert_eq!(p("x^-2").eval(-2.0).unwrap(), 0.25);
        assert!(matches!(p("x^-1").eval(0.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn unfinished_input_reports_position_after_end() {
        match parse("exp(2*") {
            Err(Error::Syntax { position, .. }) => assert_eq!(position, 7),
            other => panic!("expected a syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier_is_rejected_with_position() {
        match parse("2*foo(x)") {
            Err(Error::Syntax { position, .. }) => assert_eq!(position, 3),
            other => panic!("expected a syntax error, got {other:?}"),
        }
    }

    #[test]
    fn derivative_of_square_is_doubled_variable() {
        assert_eq!(p("x^2").differentiate().to_string(), "2.0*x");
        assert_eq!(p("-x").differentiate(), Expr::Num(-1.0));
        assert_eq!(p("-x").differentiate().to_string(), "-1.0");
    }

    #[test]
    fn derivative_constant_folds_literal_subtrees() {
        // d/dx (2*pi*x) = 2*pi -> folded literal
        let d = p("2*pi*x").differentiate();
        assert_eq!(d, Expr::Num(2.0 * std::f64::consts::PI));
    }

    #[test]
    fn derivative_of_abs_surfaces_domain_error_at_origin_only() {
        let d = p("abs(x)").differentiate();
        assert_eq!(d.eval(2.0).unwrap(), 1.0);
        assert_eq!(d.eval(-2.0).unwrap(), -1.0);
        assert!(matches!(d.eval(0.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn literal_zero_detection() {
        assert!(p("0").is_literal_zero());
        assert!(p("0.0").is_literal_zero());
        assert!(!p("x").is_literal_zero());
        assert!(!p("1e-30").is_literal_zero());
    }

    #[test]
    fn deeply_nested_input_is_rejected_not_overflowed() {
        let mut s = String::new();
        for _ in 0..100_000 {
            s.push('(');
        }
        s.push('x');
        assert!(matches!(parse(&s), Err(Error::Syntax { .. })));
    }
}
