//! Fuzzes the expression grammar: any accepted input must print back to a
//! string that reparses to the same rendering, and evaluation must never
//! panic (non-finite results are fine).

#![no_main]

use libfuzzer_sys::fuzz_target;
use semichaos::Expr;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    let Ok(expr) = src.parse::<Expr>() else { return };
    let printed = expr.to_string();
    let reparsed: Expr = printed
        .parse()
        .unwrap_or_else(|e| panic!("printer broke the grammar on `{printed}`: {e}"));
    assert_eq!(printed, reparsed.to_string(), "printing is not a fixed point");
    let _ = expr.eval(0.7310585786300049);
    let _ = expr.differentiate();
});
