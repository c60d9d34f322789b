//! Infix printer whose output re-parses to a structurally equal tree.

use std::fmt;

use num_traits::{One, Signed, Zero};

use super::expr::{Expr, Node, Q};

const P_ADD: u8 = 1;
const P_MUL: u8 = 2;
const P_POW: u8 = 3;
const P_ATOM: u8 = 4;

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

pub fn render(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(e, &mut s);
    s
}

fn prec(e: &Expr) -> u8 {
    match e.node() {
        Node::Num(v) => {
            if v.is_negative() {
                P_ADD
            } else if v.is_integer() {
                P_ATOM
            } else {
                P_MUL
            }
        }
        Node::Sym(_) | Node::Func(..) => P_ATOM,
        Node::Add(_) => P_ADD,
        Node::Mul(fs) => match fs[0].node() {
            Node::Num(c) if c.is_negative() => P_ADD,
            _ => P_MUL,
        },
        Node::Pow(_, p) => {
            if p.is_negative() {
                P_MUL
            } else if p.is_integer() || !is_dyadic(p) || !p.numer().is_one() {
                P_POW
            } else {
                P_ATOM
            }
        }
    }
}

fn is_dyadic(p: &Q) -> bool {
    let d = p.denom();
    (d & (d - num_bigint::BigInt::one())).is_zero()
}

fn write_prec(e: &Expr, min: u8, out: &mut String) {
    if prec(e) < min {
        out.push('(');
        write_expr(e, out);
        out.push(')');
    } else {
        write_expr(e, out);
    }
}

fn is_negative_term(e: &Expr) -> bool {
    match e.node() {
        Node::Num(v) => v.is_negative(),
        Node::Mul(fs) => matches!(fs[0].node(), Node::Num(c) if c.is_negative()),
        _ => false,
    }
}

fn write_expr(e: &Expr, out: &mut String) {
    match e.node() {
        Node::Num(v) => out.push_str(&v.to_string()),
        Node::Sym(s) => out.push_str(s),
        Node::Func(f, a) => {
            out.push_str(f.name());
            out.push('(');
            write_expr(a, out);
            out.push(')');
        }
        Node::Add(ts) => {
            for (i, t) in ts.iter().enumerate() {
                if i == 0 {
                    write_expr(t, out);
                } else if is_negative_term(t) {
                    out.push_str(" - ");
                    write_prec(&t.neg(), P_MUL, out);
                } else {
                    out.push_str(" + ");
                    write_prec(t, P_MUL, out);
                }
            }
        }
        Node::Mul(fs) => write_mul(fs, out),
        Node::Pow(b, p) => write_pow(b, p, out),
    }
}

fn write_mul(fs: &[Expr], out: &mut String) {
    let (coef, rest) = match fs[0].node() {
        Node::Num(c) => (c.clone(), &fs[1..]),
        _ => (Q::one(), fs),
    };
    let mut num: Vec<String> = Vec::new();
    let mut den: Vec<String> = Vec::new();
    let cn = coef.numer().abs();
    let cd = coef.denom().clone();
    let mut numer_factors = Vec::new();
    for f in rest {
        match f.node() {
            Node::Pow(b, p) if p.is_negative() => {
                let inv = Expr::pow(b.clone(), -p);
                let mut s = String::new();
                write_prec(&inv, P_POW, &mut s);
                den.push(s);
            }
            _ => numer_factors.push(f),
        }
    }
    if !cn.is_one() || numer_factors.is_empty() {
        num.push(cn.to_string());
    }
    for f in numer_factors {
        let mut s = String::new();
        write_prec(f, P_POW, &mut s);
        num.push(s);
    }
    if !cd.is_one() {
        den.insert(0, cd.to_string());
    }
    if coef.is_negative() {
        out.push('-');
    }
    out.push_str(&num.join("*"));
    match den.len() {
        0 => {}
        1 => {
            out.push('/');
            out.push_str(&den[0]);
        }
        _ => {
            out.push_str("/(");
            out.push_str(&den.join("*"));
            out.push(')');
        }
    }
}

fn write_pow(b: &Expr, p: &Q, out: &mut String) {
    if p.is_negative() {
        out.push_str("1/");
        write_prec(&Expr::pow(b.clone(), -p), P_POW, out);
        return;
    }
    if p.is_integer() {
        write_prec(b, P_ATOM, out);
        out.push('^');
        out.push_str(&p.to_string());
        return;
    }
    if is_dyadic(p) {
        let depth = p.denom().bits() - 1;
        let mut s = String::new();
        write_expr(b, &mut s);
        for _ in 0..depth {
            s = format!("sqrt({})", s);
        }
        out.push_str(&s);
        if !p.numer().is_one() {
            out.push('^');
            out.push_str(&p.numer().to_string());
        }
        return;
    }
    write_prec(b, P_ATOM, out);
    out.push_str(&format!("^({}/{})", p.numer(), p.denom()));
}

#[cfg(test)]
mod tests {
    use super::super::expr::qr;
    use super::*;

    fn s(n: &str) -> Expr {
        Expr::sym(n)
    }

    #[test]
    fn prints_quotients_and_roots() {
        let e = Expr::mul(vec![
            Expr::rat(-3, 4),
            s("dy"),
            Expr::pow(s("dz"), qr(-7, 2)),
        ]);
        assert_eq!(e.to_string(), "-3*dy/(4*sqrt(dz)^7)");
        assert_eq!(Expr::recip(s("y")).to_string(), "1/y");
        assert_eq!(Expr::pow(s("t"), qr(1, 4)).to_string(), "sqrt(sqrt(t))");
    }

    #[test]
    fn prints_sums_with_signs() {
        let e = s("a") - s("b") * Expr::int(2) + Expr::int(1);
        assert_eq!(e.to_string(), "a - 2*b + 1");
        let e = Expr::powi(s("x") + s("y"), 2);
        assert_eq!(e.to_string(), "(x + y)^2");
    }
}
