//! Sparse Laurent–Puiseux polynomials over opaque kernels.
//!
//! A kernel is a symbol, a transcendental function application, or a
//! compound base raised to a fractional power. Symbol and function kernels
//! carry arbitrary rational exponents; compound-base kernels keep only the
//! fractional part of their exponent (integer parts are expanded by the
//! caller).

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::expr::{gcd_q_content, Expr, Func, Q};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kernel {
    Sym(Arc<str>),
    Func(Func, Expr),
    Base(Arc<Poly>),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mono(pub BTreeMap<Kernel, Q>);

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Poly(pub BTreeMap<Mono, Q>);

impl Mono {
    pub fn one() -> Mono {
        Mono::default()
    }

    pub fn single(k: Kernel, e: Q) -> Mono {
        let mut m = BTreeMap::new();
        if !e.is_zero() {
            m.insert(k, e);
        }
        Mono(m)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exp(&self, k: &Kernel) -> Q {
        self.0.get(k).cloned().unwrap_or_else(Q::zero)
    }

    pub fn mul(&self, o: &Mono) -> Mono {
        let mut m = self.0.clone();
        for (k, e) in &o.0 {
            let ne = m.get(k).cloned().unwrap_or_else(Q::zero) + e;
            if ne.is_zero() {
                m.remove(k);
            } else {
                m.insert(k.clone(), ne);
            }
        }
        Mono(m)
    }

    pub fn pow(&self, r: &Q) -> Mono {
        if r.is_zero() {
            return Mono::one();
        }
        Mono(self.0.iter().map(|(k, e)| (k.clone(), e * r)).collect())
    }

    pub fn inv(&self) -> Mono {
        Mono(self.0.iter().map(|(k, e)| (k.clone(), -e)).collect())
    }

    /// Lexicographic comparison of exponent vectors (absent = 0); this is a
    /// monomial order and drives exact division.
    pub fn lex_cmp(&self, o: &Mono) -> Ordering {
        let mut a = self.0.iter().peekable();
        let mut b = o.0.iter().peekable();
        let zero = Q::zero();
        loop {
            let (ea, eb) = match (a.peek(), b.peek()) {
                (None, None) => return Ordering::Equal,
                (Some((ka, _)), Some((kb, _))) => match ka.cmp(kb) {
                    Ordering::Less => (a.next().unwrap().1, &zero),
                    Ordering::Greater => (&zero, b.next().unwrap().1),
                    Ordering::Equal => (a.next().unwrap().1, b.next().unwrap().1),
                },
                (Some(_), None) => (a.next().unwrap().1, &zero),
                (None, Some(_)) => (&zero, b.next().unwrap().1),
            };
            match ea.cmp(eb) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
    }
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn constant(c: Q) -> Poly {
        let mut m = BTreeMap::new();
        if !c.is_zero() {
            m.insert(Mono::one(), c);
        }
        Poly(m)
    }

    pub fn one() -> Poly {
        Poly::constant(Q::one())
    }

    pub fn term(c: Q, m: Mono) -> Poly {
        let mut t = BTreeMap::new();
        if !c.is_zero() {
            t.insert(m, c);
        }
        Poly(t)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn as_const(&self) -> Option<Q> {
        match self.0.len() {
            0 => Some(Q::zero()),
            1 => {
                let (m, c) = self.0.iter().next().unwrap();
                if m.is_one() {
                    Some(c.clone())
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    pub fn single_term(&self) -> Option<(&Mono, &Q)> {
        if self.0.len() == 1 {
            self.0.iter().next()
        } else {
            None
        }
    }

    fn add_term(&mut self, m: Mono, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.0.get_mut(&m) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.0.remove(&m);
                }
            }
            None => {
                self.0.insert(m, c);
            }
        }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut r = self.clone();
        for (m, c) in &o.0 {
            r.add_term(m.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        let mut r = self.clone();
        for (m, c) in &o.0 {
            r.add_term(m.clone(), -c);
        }
        r
    }

    pub fn scale(&self, c: &Q) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly(self.0.iter().map(|(m, v)| (m.clone(), v * c)).collect())
    }

    pub fn mul_mono(&self, mm: &Mono, c: &Q) -> Poly {
        let mut r = Poly::zero();
        for (m, v) in &self.0 {
            r.add_term(m.mul(mm), v * c);
        }
        r
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut r = Poly::zero();
        for (m1, c1) in &self.0 {
            for (m2, c2) in &o.0 {
                r.add_term(m1.mul(m2), c1 * c2);
            }
        }
        r
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut acc = Poly::one();
        let mut b = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&b);
            }
            k >>= 1;
            if k > 0 {
                b = b.mul(&b);
            }
        }
        acc
    }

    pub fn kernels(&self) -> BTreeSet<Kernel> {
        let mut s = BTreeSet::new();
        for m in self.0.keys() {
            for k in m.0.keys() {
                s.insert(k.clone());
            }
        }
        s
    }

    /// Leading term under [`Mono::lex_cmp`].
    pub fn leading(&self) -> Option<(&Mono, &Q)> {
        self.0.iter().max_by(|a, b| a.0.lex_cmp(b.0))
    }

    /// Positive rational content (gcd of numerators over lcm of denominators).
    pub fn content(&self) -> Q {
        let mut it = self.0.values();
        let first = match it.next() {
            Some(c) => c.abs(),
            None => return Q::one(),
        };
        it.fold(first, |acc, c| gcd_q_content(&acc, c))
    }

    /// Monomial with, per kernel, the minimal exponent over all terms
    /// (absent counting as zero).
    pub fn min_mono(&self) -> Mono {
        let ks = self.kernels();
        let mut out = BTreeMap::new();
        for k in ks {
            let mut mn: Option<Q> = None;
            for m in self.0.keys() {
                let e = m.exp(&k);
                mn = Some(match mn {
                    None => e,
                    Some(x) => {
                        if e < x {
                            e
                        } else {
                            x
                        }
                    }
                });
            }
            if let Some(e) = mn {
                if !e.is_zero() {
                    out.insert(k, e);
                }
            }
        }
        Mono(out)
    }

    /// Split `self = c * m * p` with `p` primitive (integer coprime
    /// coefficients, no monomial content). When `fix_sign` is set the
    /// leading coefficient of `p` is made positive.
    pub fn split_content(&self, fix_sign: bool) -> (Q, Mono, Poly) {
        let mut c = self.content();
        if fix_sign {
            if let Some((_, lc)) = self.leading() {
                if lc.is_negative() {
                    c = -c;
                }
            }
        }
        let m = self.min_mono();
        let p = self.mul_mono(&m.inv(), &c.recip());
        (c, m, p)
    }

    /// Exact division, `None` if `d` does not divide `self`.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        if let Some((m, c)) = d.single_term() {
            return Some(self.mul_mono(&m.inv(), &c.recip()));
        }
        let mut ks = self.kernels();
        ks.extend(d.kernels());
        let mut bounds = BTreeMap::new();
        for k in &ks {
            let (nmin, nmax) = exp_range(self, k);
            let (dmin, dmax) = exp_range(d, k);
            let lo = nmin - dmin;
            let hi = nmax - dmax;
            if lo > hi {
                return None;
            }
            bounds.insert(k.clone(), (lo, hi));
        }
        let (ldm, ldc) = d.leading().unwrap();
        let (ldm, ldc) = (ldm.clone(), ldc.clone());
        let mut r = self.clone();
        let mut quot = Poly::zero();
        for _ in 0..20_000 {
            let (lm, lc) = match r.leading() {
                None => return Some(quot),
                Some((m, c)) => (m.clone(), c.clone()),
            };
            let tm = lm.mul(&ldm.inv());
            for (k, (lo, hi)) in &bounds {
                let e = tm.exp(k);
                if &e < lo || &e > hi {
                    return None;
                }
            }
            if tm.0.keys().any(|k| !bounds.contains_key(k)) {
                return None;
            }
            let tc = lc / &ldc;
            r = r.sub(&d.mul_mono(&tm, &tc));
            quot.add_term(tm, tc);
        }
        None
    }
}

impl Poly {
    /// Exact square root with positive leading coefficient, if `self` is a
    /// perfect square.
    pub fn sqrt_exact(&self) -> Option<Poly> {
        let (lm, lc) = self.leading()?;
        let half = Q::new(BigInt::from(1), BigInt::from(2));
        let sc = super::expr::num_pow(lc, &half)?;
        let sm = lm.pow(&half);
        let mut s = Poly::term(sc.clone(), sm.clone());
        let two_sc = &sc * Q::from_integer(BigInt::from(2));
        for _ in 0..(4 * self.len() + 8) {
            let r = self.sub(&s.mul(&s));
            let Some((rm, rc)) = r.leading() else {
                return Some(s);
            };
            let tm = rm.mul(&sm.inv());
            if tm.lex_cmp(&sm) != Ordering::Less {
                return None;
            }
            s = s.add(&Poly::term(rc / &two_sc, tm));
        }
        None
    }
}

fn exp_range(p: &Poly, k: &Kernel) -> (Q, Q) {
    let mut lo: Option<Q> = None;
    let mut hi: Option<Q> = None;
    for m in p.0.keys() {
        let e = m.exp(k);
        lo = Some(match lo {
            Some(x) if x <= e => x,
            _ => e.clone(),
        });
        hi = Some(match hi {
            Some(x) if x >= e => x,
            _ => e,
        });
    }
    (lo.unwrap_or_else(Q::zero), hi.unwrap_or_else(Q::zero))
}

/// `floor` of a rational as `i64` (exponents are always small).
pub(crate) fn floor_i64(e: &Q) -> i64 {
    let f = e.numer().div_floor(e.denom());
    i64::try_from(f).unwrap_or(0)
}

pub(crate) fn int_q(k: i64) -> Q {
    Q::from_integer(BigInt::from(k))
}
