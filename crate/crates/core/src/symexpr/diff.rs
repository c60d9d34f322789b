//! Symbolic partial derivatives.

use num_traits::One;

use super::expr::{Expr, Func, Node, Q};
use super::simplify::simplify;

/// Exact `∂e/∂s`, simplified.
pub fn differentiate(e: &Expr, s: &str) -> Expr {
    simplify(&diff_raw(e, s))
}

/// Unsimplified derivative; callers that chain several operations
/// simplify once at the end.
pub fn diff_raw(e: &Expr, s: &str) -> Expr {
    if !e.has_symbol(s) {
        return Expr::zero();
    }
    match e.node() {
        Node::Num(_) => Expr::zero(),
        Node::Sym(n) => {
            if &**n == s {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Add(ts) => Expr::add(ts.iter().map(|t| diff_raw(t, s)).collect()),
        Node::Mul(fs) => {
            let mut terms = Vec::new();
            for (i, f) in fs.iter().enumerate() {
                let df = diff_raw(f, s);
                if df.is_zero() {
                    continue;
                }
                let mut prod: Vec<Expr> = Vec::with_capacity(fs.len());
                for (j, g) in fs.iter().enumerate() {
                    prod.push(if i == j { df.clone() } else { g.clone() });
                }
                terms.push(Expr::mul(prod));
            }
            Expr::add(terms)
        }
        Node::Pow(b, p) => {
            let db = diff_raw(b, s);
            Expr::mul(vec![Expr::num(p.clone()), Expr::pow(b.clone(), p - Q::one()), db])
        }
        Node::Func(f, a) => {
            let da = diff_raw(a, s);
            let outer = match f {
                Func::Sin => Expr::func(Func::Cos, a.clone()),
                Func::Cos => Expr::func(Func::Sin, a.clone()).neg(),
                Func::Exp => e.clone(),
                Func::Log => Expr::recip(a.clone()),
            };
            Expr::mul(vec![outer, da])
        }
    }
}
