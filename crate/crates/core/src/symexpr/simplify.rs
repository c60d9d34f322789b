//! Rational-function normal form.
//!
//! An expression is mapped to `num / Π den_i^k_i` where `num` is a sparse
//! polynomial over kernels and each `den_i` is a primitive multi-term
//! polynomial with positive leading coefficient. Square roots in
//! denominators are rationalised and exact polynomial factors are
//! cancelled. The map back to a tree is idempotent, so `simplify` can be
//! applied repeatedly.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Signed, ToPrimitive, Zero};

use super::expr::{num_pow, qr, Expr, Func, Node, Q};
use super::poly::{floor_i64, int_q, Kernel, Mono, Poly};

/// Division by an identically-zero polynomial was encountered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Singular;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frac {
    pub num: Poly,
    pub den: BTreeMap<Poly, u32>,
}

/// Canonical simplified form of `e`. Falls back to `e` itself if the
/// expression divides by an identically-zero quantity.
pub fn simplify(e: &Expr) -> Expr {
    match Frac::from_expr(e) {
        Ok(f) => f.to_expr(),
        Err(Singular) => e.clone(),
    }
}

/// `true` when the normal form of `e` is the zero polynomial.
pub fn is_zero_symbolic(e: &Expr) -> bool {
    matches!(Frac::from_expr(e), Ok(f) if f.num.is_zero())
}

impl Frac {
    pub fn constant(c: Q) -> Frac {
        Frac {
            num: Poly::constant(c),
            den: BTreeMap::new(),
        }
    }

    pub fn kernel(k: Kernel, e: Q) -> Frac {
        Frac {
            num: Poly::term(Q::one(), Mono::single(k, e)),
            den: BTreeMap::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn as_const(&self) -> Option<Q> {
        if self.den.is_empty() {
            self.num.as_const()
        } else {
            None
        }
    }

    pub fn from_expr(e: &Expr) -> Result<Frac, Singular> {
        match e.node() {
            Node::Num(v) => Ok(Frac::constant(v.clone())),
            Node::Sym(s) => Ok(Frac::kernel(Kernel::Sym(s.clone()), Q::one())),
            Node::Add(ts) => {
                let mut acc = Frac::constant(Q::zero());
                for t in ts {
                    acc = acc.add(&Frac::from_expr(t)?)?;
                }
                Ok(acc)
            }
            Node::Mul(fs) => {
                let mut acc = Frac::constant(Q::one());
                for f in fs {
                    acc = acc.mul(&Frac::from_expr(f)?)?;
                    if acc.is_zero() {
                        break;
                    }
                }
                Ok(acc)
            }
            Node::Pow(b, p) => Frac::from_expr(b)?.powq(p),
            Node::Func(f, a) => {
                let a = simplify(a);
                if let Some(v) = a.as_num() {
                    if v.is_zero() {
                        match f {
                            Func::Sin => return Ok(Frac::constant(Q::zero())),
                            Func::Cos | Func::Exp => return Ok(Frac::constant(Q::one())),
                            Func::Log => {}
                        }
                    }
                    if v.is_one() && *f == Func::Log {
                        return Ok(Frac::constant(Q::zero()));
                    }
                }
                Ok(Frac::kernel(Kernel::Func(*f, a), Q::one()))
            }
        }
    }

    pub fn to_expr(&self) -> Expr {
        let mut fs = vec![poly_to_expr(&self.num)];
        for (d, k) in &self.den {
            fs.push(Expr::pow(poly_to_expr(d), -int_q(*k as i64)));
        }
        Expr::mul(fs)
    }

    pub fn add(&self, o: &Frac) -> Result<Frac, Singular> {
        if self.is_zero() {
            return Ok(o.clone());
        }
        if o.is_zero() {
            return Ok(self.clone());
        }
        let mut den = self.den.clone();
        for (d, k) in &o.den {
            let e = den.entry(d.clone()).or_insert(0);
            *e = (*e).max(*k);
        }
        let lift = |f: &Frac| {
            let mut n = f.num.clone();
            for (d, k) in &den {
                let have = f.den.get(d).copied().unwrap_or(0);
                if *k > have {
                    n = n.mul(&d.pow(k - have));
                }
            }
            n
        };
        let num = lift(self).add(&lift(o));
        normalize(num, den.into_iter().collect())
    }

    pub fn neg(&self) -> Frac {
        Frac {
            num: self.num.scale(&-Q::one()),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, o: &Frac) -> Result<Frac, Singular> {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Frac) -> Result<Frac, Singular> {
        if self.is_zero() || o.is_zero() {
            return Ok(Frac::constant(Q::zero()));
        }
        if self.den.is_empty() && o.den.is_empty() {
            if let Some(c) = self.num.as_const() {
                return Ok(Frac {
                    num: o.num.scale(&c),
                    den: BTreeMap::new(),
                });
            }
            if let Some(c) = o.num.as_const() {
                return Ok(Frac {
                    num: self.num.scale(&c),
                    den: BTreeMap::new(),
                });
            }
        }
        let mut den: Vec<(Poly, u32)> = self.den.iter().map(|(d, k)| (d.clone(), *k)).collect();
        den.extend(o.den.iter().map(|(d, k)| (d.clone(), *k)));
        normalize(self.num.mul(&o.num), den)
    }

    pub fn inv(&self) -> Result<Frac, Singular> {
        if self.is_zero() {
            return Err(Singular);
        }
        let mut num = Poly::one();
        for (d, k) in &self.den {
            num = num.mul(&d.pow(*k));
        }
        normalize(num, vec![(self.num.clone(), 1)])
    }

    pub fn powq(&self, r: &Q) -> Result<Frac, Singular> {
        if r.is_zero() {
            return Ok(Frac::constant(Q::one()));
        }
        if r.is_integer() {
            let k = r.to_integer().to_i64().ok_or(Singular)?;
            let base = if k < 0 { self.inv()? } else { self.clone() };
            let k = k.unsigned_abs() as u32;
            if k == 1 {
                return Ok(base);
            }
            let den = base.den.iter().map(|(d, m)| (d.clone(), m * k)).collect();
            return normalize(base.num.pow(k), den);
        }
        if self.is_zero() {
            return if r.is_positive() {
                Ok(Frac::constant(Q::zero()))
            } else {
                Err(Singular)
            };
        }
        // c * m * P  (P == 1 for a single term)
        let (c, m, p) = match self.num.single_term() {
            Some((m, c)) => (c.clone(), m.clone(), Poly::one()),
            None => self.num.split_content(false),
        };
        let mut mono = m.pow(r);
        let mut coef = Q::one();
        match num_pow(&c, r) {
            Some(v) => coef = v,
            None => {
                let n = Q::from_integer(c.numer().clone());
                let d = Q::from_integer(c.denom().clone());
                for (v, s) in [(n, r.clone()), (d, -r)] {
                    match num_pow(&v, &s) {
                        Some(x) => coef *= x,
                        None => {
                            mono = mono.mul(&Mono::single(Kernel::Base(Arc::new(Poly::constant(v))), s))
                        }
                    }
                }
            }
        }
        if p.as_const().is_none() {
            mono = mono.mul(&Mono::single(Kernel::Base(Arc::new(p)), r.clone()));
        }
        for (d, k) in &self.den {
            mono = mono.mul(&Mono::single(Kernel::Base(Arc::new(d.clone())), -(r * int_q(*k as i64))));
        }
        normalize(Poly::term(coef, mono), Vec::new())
    }
}

fn kernel_to_expr(k: &Kernel) -> Expr {
    match k {
        Kernel::Sym(s) => Expr::sym(s),
        Kernel::Func(f, a) => Expr::func(*f, a.clone()),
        Kernel::Base(p) => poly_to_expr(p),
    }
}

pub(crate) fn poly_to_expr(p: &Poly) -> Expr {
    let terms = p
        .0
        .iter()
        .map(|(m, c)| {
            let mut fs = vec![Expr::num(c.clone())];
            for (k, e) in &m.0 {
                fs.push(Expr::pow(kernel_to_expr(k), e.clone()));
            }
            Expr::mul(fs)
        })
        .collect();
    Expr::add(terms)
}

fn is_base(k: &Kernel) -> bool {
    matches!(k, Kernel::Base(_))
}

fn has_integer_base_part(p: &Poly) -> bool {
    p.0.keys()
        .any(|m| m.0.iter().any(|(k, e)| is_base(k) && (e.is_negative() || *e >= Q::one())))
}

/// Move integer parts of compound-base exponents out of the kernels:
/// positive parts are expanded, negative parts become denominator factors.
fn expand_bases(p: &Poly) -> (Poly, Vec<(Poly, u32)>) {
    let mut cur = p.clone();
    let mut den = Vec::new();
    for _ in 0..16 {
        if !has_integer_base_part(&cur) {
            break;
        }
        let mut terms = Vec::new();
        let mut need: BTreeMap<Arc<Poly>, i64> = BTreeMap::new();
        for (m, c) in &cur.0 {
            let mut frac = BTreeMap::new();
            let mut ints: BTreeMap<Arc<Poly>, i64> = BTreeMap::new();
            for (k, e) in &m.0 {
                if let Kernel::Base(b) = k {
                    let f = floor_i64(e);
                    let rest = e - int_q(f);
                    if !rest.is_zero() {
                        frac.insert(k.clone(), rest);
                    }
                    if f != 0 {
                        ints.insert(b.clone(), f);
                        let n = need.entry(b.clone()).or_insert(0);
                        *n = (*n).max(-f);
                    }
                } else {
                    frac.insert(k.clone(), e.clone());
                }
            }
            terms.push((Mono(frac), c.clone(), ints));
        }
        let mut out = Poly::zero();
        for (m, c, ints) in terms {
            let mut t = Poly::term(c, m);
            for (b, nd) in &need {
                let e = ints.get(b).copied().unwrap_or(0) + nd.max(&0);
                if e > 0 {
                    t = t.mul(&b.pow(e as u32));
                }
            }
            out = out.add(&t);
        }
        for (b, nd) in need {
            if nd > 0 {
                den.push(((*b).clone(), nd as u32));
            }
        }
        cur = out;
    }
    (cur, den)
}

/// Write `p = a + b * sqrt(B)` for some compound base `B` appearing only
/// with exponent 1/2; returns `a - b * sqrt(B)`.
fn sqrt_conjugate(p: &Poly) -> Option<Poly> {
    let half = qr(1, 2);
    let mut cands: Vec<Kernel> = p.kernels().into_iter().filter(is_base).collect();
    cands.retain(|k| p.0.keys().all(|m| m.0.get(k).is_none_or(|e| *e == half)));
    let k = cands.into_iter().next()?;
    let mut conj = Poly::zero();
    for (m, c) in &p.0 {
        let c = if m.0.contains_key(&k) { -c } else { c.clone() };
        conj = conj.add(&Poly::term(c, m.clone()));
    }
    Some(conj)
}

fn normalize(num: Poly, den: Vec<(Poly, u32)>) -> Result<Frac, Singular> {
    let mut num = num;
    let mut pending = den;
    let mut out: BTreeMap<Poly, u32> = BTreeMap::new();
    let mut budget = 64usize;
    loop {
        let (n, extra) = expand_bases(&num);
        num = n;
        pending.extend(extra);
        if pending.is_empty() {
            break;
        }
        while let Some((d, k)) = pending.pop() {
            if k == 0 {
                continue;
            }
            let (d, dextra) = expand_bases(&d);
            for (e, j) in dextra {
                num = num.mul(&e.pow(j * k));
            }
            if d.is_zero() {
                return Err(Singular);
            }
            let (c, m, p) = d.split_content(true);
            let kq = int_q(k as i64);
            let cinv = num_pow(&c, &-kq.clone()).ok_or(Singular)?;
            num = num.mul_mono(&m.pow(&-kq), &cinv);
            if p.as_const().is_some() {
                continue;
            }
            if budget > 0 {
                if let Some(conj) = sqrt_conjugate(&p) {
                    budget -= 1;
                    num = num.mul(&conj.pow(k));
                    pending.push((p.mul(&conj), k));
                    continue;
                }
            }
            *out.entry(p).or_insert(0) += k;
        }
    }
    if num.is_zero() {
        return Ok(Frac::constant(Q::zero()));
    }
    let mut den = BTreeMap::new();
    for (d, mut k) in out {
        while k > 0 {
            match num.div_exact(&d) {
                Some(q) => {
                    num = q;
                    k -= 1;
                }
                None => break,
            }
        }
        if k > 0 {
            den.insert(d, k);
        }
    }
    Ok(Frac { num, den })
}

/// Exact square root of `e` when its normal form is a perfect square
/// (sign chosen by the leading coefficients).
pub fn sqrt_exact(e: &Expr) -> Option<Expr> {
    let f = Frac::from_expr(e).ok()?;
    let num = f.num.sqrt_exact()?;
    let mut out = Frac {
        num,
        den: BTreeMap::new(),
    };
    for (d, k) in &f.den {
        if k % 2 != 0 {
            return None;
        }
        out.den.insert(d.clone(), k / 2);
    }
    Some(out.to_expr())
}

/// Numerator and denominator as separate expressions.
pub fn numer_denom(e: &Expr) -> (Expr, Expr) {
    match Frac::from_expr(e) {
        Ok(f) => {
            let mut d = Poly::one();
            for (p, k) in &f.den {
                d = d.mul(&p.pow(*k));
            }
            (poly_to_expr(&f.num), poly_to_expr(&d))
        }
        Err(_) => (e.clone(), Expr::one()),
    }
}
