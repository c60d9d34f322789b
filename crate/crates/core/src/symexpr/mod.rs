//! Computer-algebra core: parse, print, simplify, differentiate,
//! evaluate and zero-test expressions.

mod diff;
mod eval;
mod expr;
mod parse;
mod poly;
mod print;
mod simplify;
mod zero;

pub use diff::{diff_raw, differentiate};
pub use eval::{eval_point, eval_scaled, EvalError, Point};
pub use expr::{q, qr, Expr, Func, Node, Q};
pub use parse::{parse_expr, ParseError};
pub use simplify::{is_zero_symbolic, numer_denom, simplify, sqrt_exact, Frac, Singular};
pub use zero::{
    zero_test, Domain, ZeroTestError, ZeroTester, ZeroVerdict, DEFAULT_INTERVAL, DEFAULT_SEED,
    DEFAULT_TOL, DEFAULT_TRIALS,
};
