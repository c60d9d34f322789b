//! Exterior algebra over the adapted coframe `{dt, φ^{aV}, φ^{aH}}`.
//!
//! Basis 1-forms are indexed `0` (dt), `1+a` (φ^{aV}) and `1+n+a`
//! (φ^{aH}); a k-form stores coefficients on strictly increasing index
//! tuples.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::eigen::EigenSystem;
use crate::geometry::Geometry;
use crate::linalg::{rref, Mat};
use crate::symexpr::{simplify, Expr, ZeroTestError, ZeroTester};
use crate::taucalc::TauTable;

pub const MAX_DEGREE: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormError {
    #[error("form degree {0} exceeds the supported maximum of 3")]
    DegreeOverflow(usize),
    #[error("forms live over different frames (n = {0} vs {1})")]
    DimensionMismatch(usize, usize),
}

#[derive(Clone, PartialEq)]
pub struct AdaptedForm {
    n: usize,
    degree: usize,
    terms: BTreeMap<Vec<usize>, Expr>,
}

/// Sort `idx` in place; returns the permutation sign, or `None` on a
/// repeated index.
fn sort_sign(idx: &mut [usize]) -> Option<bool> {
    let mut neg = false;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            neg = !neg;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(neg)
    }
}

impl AdaptedForm {
    pub fn zero(n: usize, degree: usize) -> AdaptedForm {
        AdaptedForm {
            n,
            degree,
            terms: BTreeMap::new(),
        }
    }

    pub fn function(n: usize, f: Expr) -> AdaptedForm {
        AdaptedForm::zero(n, 0).with_term(vec![], f)
    }

    pub fn basis(n: usize, i: usize) -> AdaptedForm {
        AdaptedForm::zero(n, 1).with_term(vec![i], Expr::one())
    }

    pub fn dt(n: usize) -> AdaptedForm {
        Self::basis(n, 0)
    }

    pub fn phi_v(n: usize, a: usize) -> AdaptedForm {
        Self::basis(n, 1 + a)
    }

    pub fn phi_h(n: usize, a: usize) -> AdaptedForm {
        Self::basis(n, 1 + n + a)
    }

    /// One-form `Σ cᵢ θⁱ` from a full coefficient vector of length 2n+1.
    pub fn one_form(n: usize, coeffs: &[Expr]) -> AdaptedForm {
        let mut f = AdaptedForm::zero(n, 1);
        for (i, c) in coeffs.iter().enumerate() {
            f.add_term(vec![i], c.clone());
        }
        f
    }

    /// `φ^{aV} ∧ φ^{aH}`.
    pub fn omega(n: usize, a: usize) -> AdaptedForm {
        AdaptedForm::zero(n, 2).with_term(vec![1 + a, 1 + n + a], Expr::one())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of basis 1-forms, `2n+1`.
    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    pub fn terms(&self) -> &BTreeMap<Vec<usize>, Expr> {
        &self.terms
    }

    pub fn coeff(&self, idx: &[usize]) -> Expr {
        let mut k = idx.to_vec();
        match sort_sign(&mut k) {
            None => Expr::zero(),
            Some(neg) => {
                let c = self.terms.get(&k).cloned().unwrap_or_else(Expr::zero);
                if neg {
                    c.neg()
                } else {
                    c
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn with_term(mut self, idx: Vec<usize>, c: Expr) -> AdaptedForm {
        self.add_term(idx, c);
        self
    }

    /// Add `c` times the basis element `idx` (any order; sign applied).
    pub fn add_term(&mut self, mut idx: Vec<usize>, c: Expr) {
        debug_assert_eq!(idx.len(), self.degree);
        if c.is_zero() {
            return;
        }
        let Some(neg) = sort_sign(&mut idx) else {
            return;
        };
        let c = if neg { c.neg() } else { c };
        let merged = match self.terms.remove(&idx) {
            Some(old) => simplify(&(old + c)),
            None => simplify(&c),
        };
        if !merged.is_zero() {
            self.terms.insert(idx, merged);
        }
    }

    pub fn add(&self, o: &AdaptedForm) -> AdaptedForm {
        assert_eq!(self.degree, o.degree, "adding forms of different degree");
        let mut out = self.clone();
        for (k, c) in &o.terms {
            out.add_term(k.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> AdaptedForm {
        self.scale(&Expr::int(-1))
    }

    pub fn sub(&self, o: &AdaptedForm) -> AdaptedForm {
        self.add(&o.neg())
    }

    pub fn scale(&self, f: &Expr) -> AdaptedForm {
        let mut out = AdaptedForm::zero(self.n, self.degree);
        for (k, c) in &self.terms {
            out.add_term(k.clone(), c * f);
        }
        out
    }

    pub fn wedge(&self, o: &AdaptedForm) -> Result<AdaptedForm, FormError> {
        if self.n != o.n {
            return Err(FormError::DimensionMismatch(self.n, o.n));
        }
        let deg = self.degree + o.degree;
        if deg > MAX_DEGREE {
            return Err(FormError::DegreeOverflow(deg));
        }
        let mut out = AdaptedForm::zero(self.n, deg);
        for (i, a) in &self.terms {
            for (j, b) in &o.terms {
                let mut k = i.clone();
                k.extend_from_slice(j);
                out.add_term(k, a * b);
            }
        }
        Ok(out)
    }

    /// Contraction with the frame vector dual to basis element `k`.
    pub fn interior(&self, k: usize) -> AdaptedForm {
        if self.degree == 0 {
            return AdaptedForm::zero(self.n, 0);
        }
        let mut out = AdaptedForm::zero(self.n, self.degree - 1);
        for (idx, c) in &self.terms {
            if let Some(p) = idx.iter().position(|&i| i == k) {
                let mut rest = idx.clone();
                rest.remove(p);
                out.add_term(rest, if p % 2 == 1 { c.neg() } else { c.clone() });
            }
        }
        out
    }

    pub fn map_coeffs(&self, f: impl Fn(&Expr) -> Expr) -> AdaptedForm {
        let mut out = AdaptedForm::zero(self.n, self.degree);
        for (k, c) in &self.terms {
            out.add_term(k.clone(), f(c));
        }
        out
    }

    /// Every strictly increasing index tuple of this form's degree.
    pub fn all_indices(n: usize, degree: usize) -> Vec<Vec<usize>> {
        fn rec(start: usize, m: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if left == 0 {
                out.push(cur.clone());
                return;
            }
            for i in start..m {
                cur.push(i);
                rec(i + 1, m, left - 1, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(0, 2 * n + 1, degree, &mut Vec::new(), &mut out);
        out
    }

    /// True when every coefficient passes the zero test.
    pub fn vanishes(&self, zt: &ZeroTester) -> Result<bool, ZeroTestError> {
        for c in self.terms.values() {
            if !zt.is_zero(c)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Drop coefficients that pass the zero test.
    pub fn prune(&self, zt: &ZeroTester) -> Result<AdaptedForm, ZeroTestError> {
        let mut out = AdaptedForm::zero(self.n, self.degree);
        for (k, c) in &self.terms {
            if !zt.is_zero(c)? {
                out.terms.insert(k.clone(), c.clone());
            }
        }
        Ok(out)
    }
}

pub fn basis_label(n: usize, i: usize) -> String {
    if i == 0 {
        "dt".into()
    } else if i <= n {
        format!("phi^{{{}V}}", i)
    } else {
        format!("phi^{{{}H}}", i - n)
    }
}

impl fmt::Display for AdaptedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (k, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            let b: Vec<String> = k.iter().map(|&j| basis_label(self.n, j)).collect();
            if b.is_empty() {
                write!(f, "{c}")?;
            } else if c.is_one() {
                write!(f, "{}", b.join("^"))?;
            } else {
                write!(f, "({c})*{}", b.join("^"))?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for AdaptedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AdaptedForm[{}]({self})", self.degree)
    }
}

/// Result of testing `w ≡ 0 (mod α)`.
#[derive(Clone, Debug)]
pub struct Divisibility {
    pub divides: bool,
    /// A `β` with `w = β ∧ α`, when `divides`.
    pub beta: Option<AdaptedForm>,
    /// `w ∧ α`, whose vanishing is the test.
    pub obstruction: AdaptedForm,
}

/// Frame derivations and structure equations for one system and
/// eigenframe.
#[derive(Clone, Debug)]
pub struct FrameCalculus {
    pub geometry: Geometry,
    pub eigen: EigenSystem,
    pub taus: TauTable,
    dbasis: Vec<AdaptedForm>,
}

impl FrameCalculus {
    pub fn new(geometry: Geometry, eigen: EigenSystem, taus: TauTable) -> FrameCalculus {
        let dbasis = structure_equations(&taus, &eigen.lambdas);
        FrameCalculus {
            geometry,
            eigen,
            taus,
            dbasis,
        }
    }

    pub fn n(&self) -> usize {
        self.geometry.n()
    }

    /// The frame vector dual to basis element `i` applied to `f`.
    pub fn derive(&self, i: usize, f: &Expr) -> Expr {
        let n = self.n();
        if i == 0 {
            self.geometry.gamma(f)
        } else if i <= n {
            self.geometry.lift_v(&self.eigen.vectors[i - 1], f)
        } else {
            self.geometry.lift_h(&self.eigen.vectors[i - 1 - n], f)
        }
    }

    pub fn df(&self, f: &Expr) -> AdaptedForm {
        let n = self.n();
        let coeffs: Vec<Expr> = (0..2 * n + 1).map(|i| self.derive(i, f)).collect();
        AdaptedForm::one_form(n, &coeffs)
    }

    /// `dθⁱ` for basis element `i`.
    pub fn d_basis(&self, i: usize) -> &AdaptedForm {
        &self.dbasis[i]
    }

    fn d_monomial(&self, idx: &[usize]) -> Result<AdaptedForm, FormError> {
        let n = self.n();
        match idx {
            [] => Ok(AdaptedForm::zero(n, 1)),
            [i] => Ok(self.dbasis[*i].clone()),
            [i, rest @ ..] => {
                let head = AdaptedForm::basis(n, *i);
                let mut tail = AdaptedForm::zero(n, rest.len());
                tail.add_term(rest.to_vec(), Expr::one());
                let a = self.dbasis[*i].wedge(&tail)?;
                let b = head.wedge(&self.d_monomial(rest)?)?;
                Ok(a.sub(&b))
            }
        }
    }

    pub fn d(&self, w: &AdaptedForm) -> Result<AdaptedForm, FormError> {
        let n = self.n();
        if w.degree + 1 > MAX_DEGREE {
            return Err(FormError::DegreeOverflow(w.degree + 1));
        }
        let mut out = AdaptedForm::zero(n, w.degree + 1);
        for (idx, c) in &w.terms {
            let mut mono = AdaptedForm::zero(n, idx.len());
            mono.add_term(idx.clone(), Expr::one());
            out = out.add(&self.df(c).wedge(&mono)?);
            if !idx.is_empty() {
                out = out.add(&self.d_monomial(idx)?.scale(c));
            }
        }
        Ok(out)
    }

    /// Decide whether the 2-form `w` is a multiple `β ∧ α` of the 1-form `α`.
    pub fn divisibility_test(
        &self,
        w: &AdaptedForm,
        alpha: &AdaptedForm,
        zt: &ZeroTester,
    ) -> Result<Divisibility, DivisibilityError> {
        if alpha.degree != 1 || alpha.is_zero() {
            return Err(DivisibilityError::BadDivisor);
        }
        let obstruction = w.wedge(alpha)?;
        let divides = obstruction.vanishes(zt)?;
        let mut beta = None;
        if divides {
            // β = −ι_k w / α_k for a component k with α_k ≠ 0
            let mut best: Option<(usize, usize)> = None;
            for (idx, c) in &alpha.terms {
                if !zt.is_zero(c)? && best.is_none_or(|(_, s)| c.size() < s) {
                    best = Some((idx[0], c.size()));
                }
            }
            if let Some((k, _)) = best {
                let ak = alpha.coeff(&[k]);
                let b = w.interior(k).scale(&Expr::recip(ak).neg());
                beta = Some(b);
            }
        }
        Ok(Divisibility {
            divides,
            beta,
            obstruction,
        })
    }

    /// Solve `dw = μ ∧ w` for the 1-form `μ`, with `μ` normalised to have
    /// no free components. `None` when `dw ∉ ⟨w⟩`.
    pub fn recover_mu(&self, w: &AdaptedForm, zt: &ZeroTester) -> Result<Option<AdaptedForm>, DivisibilityError> {
        let n = self.n();
        let dw = self.d(w)?;
        let m = 2 * n + 1;
        let rows = AdaptedForm::all_indices(n, 3);
        let cols: Vec<AdaptedForm> = (0..m).map(|i| AdaptedForm::basis(n, i).wedge(w)).collect::<Result<_, _>>()?;
        let mat: Mat = rows
            .iter()
            .map(|r| {
                let mut row: Vec<Expr> = cols.iter().map(|c| c.coeff(r)).collect();
                row.push(dw.coeff(r));
                row
            })
            .collect();
        let red = rref(&mat, zt)?;
        if red.pivots.contains(&m) {
            return Ok(None);
        }
        let mut mu = vec![Expr::zero(); m];
        for (r, &pc) in red.pivots.iter().enumerate() {
            mu[pc] = red.rows[r][m].clone();
        }
        Ok(Some(AdaptedForm::one_form(n, &mu)))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DivisibilityError {
    #[error("divisor must be a nonzero 1-form")]
    BadDivisor,
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Zero(#[from] ZeroTestError),
}

/// `dφ^{aV}` and `dφ^{aH}` from the τ table, with `d(dt) = 0`.
pub fn structure_equations(tt: &TauTable, lambdas: &[Expr]) -> Vec<AdaptedForm> {
    let n = tt.n;
    let v = |a: usize| 1 + a;
    let h = |a: usize| 1 + n + a;
    let mut out = vec![AdaptedForm::zero(n, 2)];
    let half = Expr::rat(1, 2);
    let mut dv = Vec::with_capacity(n);
    let mut dh = Vec::with_capacity(n);
    for a in 0..n {
        let mut fv = AdaptedForm::zero(n, 2);
        let mut fh = AdaptedForm::zero(n, 2);
        fv.add_term(vec![0, h(a)], lambdas[a].neg());
        fh.add_term(vec![0, v(a)], Expr::one());
        for b in 0..n {
            fv.add_term(vec![0, v(b)], tt.tau_g[a][b].neg());
            fh.add_term(vec![0, h(b)], tt.tau_g[a][b].neg());
            for c in 0..n {
                fv.add_term(vec![v(b), h(c)], tt.tau_h[a][c][b].clone());
                fv.add_term(vec![v(b), v(c)], tt.tau_v[a][c][b].clone());
                fv.add_term(vec![h(b), h(c)], (&half * &tt.rho[a][b][c]).neg());
                fh.add_term(vec![h(b), h(c)], tt.tau_h[a][c][b].clone());
                fh.add_term(vec![v(b), h(c)], tt.tau_v[a][b][c].neg());
            }
        }
        dv.push(fv);
        dh.push(fh);
    }
    out.extend(dv);
    out.extend(dh);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::from_supplied;
    use crate::geometry::Sode;
    use crate::symexpr::parse_expr;
    use crate::taucalc::compute_tau_table;

    fn example_six() -> (FrameCalculus, ZeroTester) {
        let s = Sode::parse(&["x", "y", "z"], &["z*t", "0", "x"]).unwrap();
        let names = s.symbol_names();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let p = |e: &str| parse_expr(e, &refs).unwrap();
        let g = Geometry::new(s.clone());
        let zt = ZeroTester::new(s.domain.clone(), 16, 1e-9, 3);
        let es = from_supplied(
            &g,
            vec![p("sqrt(t)"), p("-sqrt(t)"), p("0")],
            vec![
                vec![p("-sqrt(t)"), p("0"), p("1")],
                vec![p("sqrt(t)"), p("0"), p("1")],
                vec![p("0"), p("1"), p("0")],
            ],
            &zt,
        )
        .unwrap();
        let tt = compute_tau_table(&g, &es);
        (FrameCalculus::new(g, es, tt), zt)
    }

    #[test]
    fn wedge_basics() {
        let n = 2;
        let v1 = AdaptedForm::phi_v(n, 0);
        assert!(v1.wedge(&v1).unwrap().is_zero());
        let w = v1.wedge(&AdaptedForm::phi_h(n, 0)).unwrap();
        assert_eq!(w, AdaptedForm::omega(n, 0));
        let h1 = AdaptedForm::phi_h(n, 0);
        assert_eq!(h1.wedge(&v1).unwrap(), w.neg());
        let big = w.wedge(&w);
        assert_eq!(big, Err(FormError::DegreeOverflow(4)));
    }

    #[test]
    fn interior_recovers_factor() {
        let n = 2;
        let a = AdaptedForm::phi_v(n, 1).add(&AdaptedForm::dt(n).scale(&Expr::sym("t")));
        let b = AdaptedForm::phi_h(n, 0);
        let w = b.wedge(&a).unwrap();
        // ι_k(β∧α) = −α_k β when β_k = 0
        assert_eq!(w.interior(2), b.scale(&Expr::int(-1)));
    }

    #[test]
    fn example_six_closure() {
        let (fc, zt) = example_six();
        let n = 3;
        let w = AdaptedForm::omega(n, 0).sub(&AdaptedForm::omega(n, 1));
        let dw = fc.d(&w).unwrap();
        // −2τ^{1Γ}_1 = −1/(2t); the Helmholtz conditions confirm t^{1/2}(ω¹−ω²)
        let expect = AdaptedForm::dt(n)
            .scale(&parse_expr("-1/(2*t)", &["t"]).unwrap())
            .wedge(&w)
            .unwrap();
        assert!(dw.sub(&expect).vanishes(&zt).unwrap(), "{dw}");
        let mu = fc.recover_mu(&w, &zt).unwrap().unwrap();
        assert!(mu.sub(&AdaptedForm::dt(n).scale(&parse_expr("-1/(2*t)", &["t"]).unwrap())).vanishes(&zt).unwrap());
        assert!(fc.d(&mu).unwrap().vanishes(&zt).unwrap());
    }

    #[test]
    fn d_squared_vanishes_on_basis() {
        let (fc, zt) = example_six();
        for i in 0..7 {
            let f = AdaptedForm::basis(3, i).scale(&parse_expr("x*dz + t", &["t", "x", "dz"]).unwrap());
            let dd = fc.d(&fc.d(&f).unwrap()).unwrap();
            assert!(dd.vanishes(&zt).unwrap(), "basis {i}: {dd}");
        }
    }

    #[test]
    fn divisibility() {
        let (fc, zt) = example_six();
        let n = 3;
        let alpha = AdaptedForm::phi_v(n, 2).add(&AdaptedForm::phi_h(n, 2).scale(&Expr::sym("t")));
        let beta = AdaptedForm::dt(n).add(&AdaptedForm::phi_h(n, 0).scale(&Expr::sym("x")));
        let w = beta.wedge(&alpha).unwrap();
        let r = fc.divisibility_test(&w, &alpha, &zt).unwrap();
        assert!(r.divides);
        let b = r.beta.unwrap();
        assert!(b.wedge(&alpha).unwrap().sub(&w).vanishes(&zt).unwrap());
        let w2 = AdaptedForm::phi_v(n, 0).wedge(&AdaptedForm::phi_h(n, 1)).unwrap();
        assert!(!fc.divisibility_test(&w2, &AdaptedForm::phi_v(n, 2), &zt).unwrap().divides);
    }
}
