//! Immutable expression trees with exact rational constants.
//!
//! Constructors perform only light, structure-preserving canonicalisation
//! (flattening, constant folding, identity removal); the heavier rewriting
//! lives in [`crate::symexpr::simplify`].

use std::collections::BTreeSet;
use std::fmt;
use std::ops;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            _ => return None,
        })
    }
}

/// Node kinds. Negation, quotient and square root are encoded through
/// `Mul` with a `-1` coefficient and `Pow` with exponents `-1` and `1/2`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Num(Q),
    Sym(Arc<str>),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, Q),
    Func(Func, Expr),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Expr(Arc<Node>);

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    fn wrap(n: Node) -> Expr {
        Expr(Arc::new(n))
    }

    pub fn num(v: Q) -> Expr {
        Expr::wrap(Node::Num(v))
    }

    pub fn int(v: i64) -> Expr {
        Expr::num(q(v))
    }

    pub fn rat(n: i64, d: i64) -> Expr {
        Expr::num(qr(n, d))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn sym(name: &str) -> Expr {
        Expr::wrap(Node::Sym(Arc::from(name)))
    }

    pub fn as_num(&self) -> Option<&Q> {
        match self.node() {
            Node::Num(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.node(), Node::Num(v) if v.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self.node(), Node::Num(v) if v.is_one())
    }

    pub fn add(terms: Vec<Expr>) -> Expr {
        let mut flat = Vec::with_capacity(terms.len());
        let mut c = Q::zero();
        for t in terms {
            match t.node() {
                Node::Num(v) => c += v,
                Node::Add(inner) => {
                    for s in inner {
                        match s.node() {
                            Node::Num(v) => c += v,
                            _ => flat.push(s.clone()),
                        }
                    }
                }
                _ => flat.push(t),
            }
        }
        if !c.is_zero() {
            flat.push(Expr::num(c));
        }
        match flat.len() {
            0 => Expr::zero(),
            1 => flat.pop().unwrap(),
            _ => Expr::wrap(Node::Add(flat)),
        }
    }

    pub fn mul(factors: Vec<Expr>) -> Expr {
        let mut flat = Vec::with_capacity(factors.len() + 1);
        let mut c = Q::one();
        for f in factors {
            match f.node() {
                Node::Num(v) => c *= v,
                Node::Mul(inner) => {
                    for s in inner {
                        match s.node() {
                            Node::Num(v) => c *= v,
                            _ => flat.push(s.clone()),
                        }
                    }
                }
                _ => flat.push(f),
            }
        }
        if c.is_zero() {
            return Expr::zero();
        }
        if flat.is_empty() {
            return Expr::num(c);
        }
        if !c.is_one() {
            flat.insert(0, Expr::num(c));
        }
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Expr::wrap(Node::Mul(flat))
        }
    }

    /// `base^e`. Powers distribute over products and nest multiplicatively;
    /// both rewrites assume a positive base whenever `e` is not an integer.
    pub fn pow(base: Expr, e: Q) -> Expr {
        if e.is_zero() {
            return Expr::one();
        }
        if e.is_one() {
            return base;
        }
        match base.node() {
            Node::Num(v) => {
                if let Some(r) = num_pow(v, &e) {
                    return Expr::num(r);
                }
                Expr::wrap(Node::Pow(base.clone(), e))
            }
            Node::Pow(b, p) => Expr::pow(b.clone(), p * &e),
            Node::Mul(fs) => Expr::mul(fs.iter().map(|f| Expr::pow(f.clone(), e.clone())).collect()),
            _ => Expr::wrap(Node::Pow(base, e)),
        }
    }

    pub fn powi(base: Expr, k: i64) -> Expr {
        Expr::pow(base, q(k))
    }

    pub fn sqrt(base: Expr) -> Expr {
        Expr::pow(base, qr(1, 2))
    }

    pub fn recip(base: Expr) -> Expr {
        Expr::pow(base, q(-1))
    }

    pub fn func(f: Func, arg: Expr) -> Expr {
        Expr::wrap(Node::Func(f, arg))
    }

    pub fn neg(&self) -> Expr {
        Expr::mul(vec![Expr::int(-1), self.clone()])
    }

    /// Free symbols in sorted order.
    pub fn symbols(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<Arc<str>>) {
        match self.node() {
            Node::Num(_) => {}
            Node::Sym(s) => {
                out.insert(s.clone());
            }
            Node::Add(v) | Node::Mul(v) => v.iter().for_each(|e| e.collect_symbols(out)),
            Node::Pow(b, _) => b.collect_symbols(out),
            Node::Func(_, a) => a.collect_symbols(out),
        }
    }

    pub fn has_symbol(&self, s: &str) -> bool {
        match self.node() {
            Node::Num(_) => false,
            Node::Sym(n) => &**n == s,
            Node::Add(v) | Node::Mul(v) => v.iter().any(|e| e.has_symbol(s)),
            Node::Pow(b, _) => b.has_symbol(s),
            Node::Func(_, a) => a.has_symbol(s),
        }
    }

    /// Replace symbols by expressions (no simplification).
    pub fn subs(&self, map: &dyn Fn(&str) -> Option<Expr>) -> Expr {
        match self.node() {
            Node::Num(_) => self.clone(),
            Node::Sym(s) => map(s).unwrap_or_else(|| self.clone()),
            Node::Add(v) => Expr::add(v.iter().map(|e| e.subs(map)).collect()),
            Node::Mul(v) => Expr::mul(v.iter().map(|e| e.subs(map)).collect()),
            Node::Pow(b, p) => Expr::pow(b.subs(map), p.clone()),
            Node::Func(f, a) => Expr::func(*f, a.subs(map)),
        }
    }

    pub fn size(&self) -> usize {
        match self.node() {
            Node::Num(_) | Node::Sym(_) => 1,
            Node::Add(v) | Node::Mul(v) => 1 + v.iter().map(Expr::size).sum::<usize>(),
            Node::Pow(b, _) => 1 + b.size(),
            Node::Func(_, a) => 1 + a.size(),
        }
    }
}

/// Exact `v^e` when the result is rational.
pub(crate) fn num_pow(v: &Q, e: &Q) -> Option<Q> {
    if e.is_integer() {
        let k = e.to_integer().to_i64()?;
        if v.is_zero() {
            return if k > 0 { Some(Q::zero()) } else { None };
        }
        if k.unsigned_abs() > 4096 {
            return None;
        }
        let r = pow_q(v, k.unsigned_abs());
        return Some(if k < 0 { r.recip() } else { r });
    }
    if v.is_zero() {
        return if e.is_positive() { Some(Q::zero()) } else { None };
    }
    if v.is_negative() {
        return None;
    }
    let d = e.denom().to_u32()?;
    let n = exact_root(v.numer(), d)?;
    let m = exact_root(v.denom(), d)?;
    let base = Q::new(n, m);
    num_pow(&base, &Q::from_integer(e.numer().clone()))
}

fn pow_q(v: &Q, k: u64) -> Q {
    let mut acc = Q::one();
    let mut b = v.clone();
    let mut k = k;
    while k > 0 {
        if k & 1 == 1 {
            acc *= &b;
        }
        b = &b * &b;
        k >>= 1;
    }
    acc
}

pub(crate) fn exact_root(n: &BigInt, d: u32) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.nth_root(d);
    if num_traits::pow(r.clone(), d as usize) == *n {
        Some(r)
    } else {
        None
    }
}

pub(crate) fn q_to_f64(v: &Q) -> f64 {
    match (v.numer().to_f64(), v.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // Scale down huge numerators/denominators before dividing.
            let shift = v.numer().bits().max(v.denom().bits()).saturating_sub(900);
            let n = (v.numer() >> shift).to_f64().unwrap_or(f64::NAN);
            let d = (v.denom() >> shift).to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

pub(crate) fn gcd_q_content(a: &Q, b: &Q) -> Q {
    // gcd of rationals: gcd(numerators) / lcm(denominators)
    let n = a.numer().gcd(b.numer());
    let d = a.denom().lcm(b.denom());
    Q::new(n, d)
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl From<i64> for Expr {
    fn from(v: i64) -> Expr {
        Expr::int(v)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs)
            }
        }
        impl ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs.clone())
            }
        }
        impl ops::$tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self, rhs.clone())
            }
        }
        impl ops::$tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                let f: fn(Expr, Expr) -> Expr = $body;
                f(self.clone(), rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| Expr::add(vec![a, b]));
binop!(Sub, sub, |a, b| Expr::add(vec![a, b.neg()]));
binop!(Mul, mul, |a, b| Expr::mul(vec![a, b]));
binop!(Div, div, |a, b| Expr::mul(vec![a, Expr::recip(b)]));

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}
