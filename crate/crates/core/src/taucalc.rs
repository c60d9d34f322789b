//! Structure functions τ and curvature contractions ρ of the lifted
//! eigenframe, and the Jacobi-identity consistency suite.

use std::collections::BTreeMap;

use crate::eigen::EigenSystem;
use crate::geometry::Geometry;
use crate::linalg::{zeros, Mat};
use crate::symexpr::{diff_raw, eval_point, simplify, EvalError, Expr, Point, ZeroTestError, ZeroTester};

/// `tau_g[a][b]` = τ^{aΓ}_b, `tau_v[a][b][c]` = τ^{aV}_{bc}, and so on.
#[derive(Clone, Debug, PartialEq)]
pub struct TauTable {
    pub n: usize,
    pub tau_g: Mat,
    pub tau_v: Vec<Mat>,
    pub tau_h: Vec<Mat>,
    pub rho: Vec<Mat>,
    pub a_v: Vec<Mat>,
    pub a_h: Vec<Mat>,
}

/// Address of a single table entry (0-based indices).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Entry {
    G(usize, usize),
    V(usize, usize, usize),
    H(usize, usize, usize),
    Rho(usize, usize, usize),
}

impl Entry {
    /// Printed label with 1-based indices, e.g. `tau^{1V}_{22}`.
    pub fn label(&self) -> String {
        match *self {
            Entry::G(a, b) => format!("tau^{{{}G}}_{{{}}}", a + 1, b + 1),
            Entry::V(a, b, c) => format!("tau^{{{}V}}_{{{}{}}}", a + 1, b + 1, c + 1),
            Entry::H(a, b, c) => format!("tau^{{{}H}}_{{{}{}}}", a + 1, b + 1, c + 1),
            Entry::Rho(a, b, c) => format!("rho^{{{}}}_{{{}{}}}", a + 1, b + 1, c + 1),
        }
    }
}

/// `τ^{aΓ}_b = φᵃ_c (Γ(X_bᶜ) + X_bᵉ Γᶜ_e)`.
pub fn tau_gamma(g: &Geometry, x: &Mat, phi: &Mat) -> Mat {
    let n = g.n();
    let conn = &g.data.conn;
    // ∇̂_Γ X_b^V components
    let nab: Mat = (0..n)
        .map(|b| {
            (0..n)
                .map(|c| {
                    let mut t = vec![g.gamma(&x[b][c])];
                    for e in 0..n {
                        t.push(&x[b][e] * &conn[c][e]);
                    }
                    simplify(&Expr::add(t))
                })
                .collect()
        })
        .collect();
    (0..n)
        .map(|a| {
            (0..n)
                .map(|b| simplify(&Expr::add((0..n).map(|c| &phi[a][c] * &nab[b][c]).collect())))
                .collect()
        })
        .collect()
}

fn cube(n: usize) -> Vec<Mat> {
    vec![zeros(n, n); n]
}

pub fn compute_tau_table(g: &Geometry, es: &EigenSystem) -> TauTable {
    let n = g.n();
    let x = &es.vectors;
    let phi = &es.coframe;
    let s = &g.sode;
    let tau_g = tau_gamma(g, x, phi);
    // ∂Γ^f_e/∂u^d
    let dconn: Vec<Vec<Vec<Expr>>> = (0..n)
        .map(|f| {
            (0..n)
                .map(|e| (0..n).map(|d| simplify(&diff_raw(&g.data.conn[f][e], &s.u_name(d)))).collect())
                .collect()
        })
        .collect();
    let mut tau_v = cube(n);
    let mut tau_h = cube(n);
    let mut rho = cube(n);
    for b in 0..n {
        for c in 0..n {
            let xv: Vec<Expr> = (0..n).map(|d| g.lift_v(&x[b], &x[c][d])).collect();
            let xh: Vec<Expr> = (0..n)
                .map(|f| {
                    let mut t = vec![g.lift_h(&x[b], &x[c][f])];
                    for e in 0..n {
                        for d in 0..n {
                            if !dconn[f][e][d].is_zero() {
                                t.push(&x[b][e] * &x[c][d] * &dconn[f][e][d]);
                            }
                        }
                    }
                    simplify(&Expr::add(t))
                })
                .collect();
            let rv: Vec<Expr> = (0..n)
                .map(|d| {
                    let mut t = Vec::new();
                    for e in 0..n {
                        for f in 0..n {
                            if !g.data.curv[d][e][f].is_zero() {
                                t.push(&g.data.curv[d][e][f] * &x[b][e] * &x[c][f]);
                            }
                        }
                    }
                    simplify(&Expr::add(t))
                })
                .collect();
            for a in 0..n {
                let contract = |v: &[Expr]| simplify(&Expr::add((0..n).map(|d| &phi[a][d] * &v[d]).collect()));
                tau_v[a][b][c] = contract(&xv);
                tau_h[a][b][c] = contract(&xh);
                rho[a][b][c] = contract(&rv);
            }
        }
    }
    let a_of = |t: &Vec<Mat>| -> Vec<Mat> {
        (0..n)
            .map(|a| {
                (0..n)
                    .map(|c| (0..n).map(|d| simplify(&(&t[a][c][d] - Expr::int(2) * &t[a][d][c]))).collect())
                    .collect()
            })
            .collect()
    };
    let a_v = a_of(&tau_v);
    let a_h = a_of(&tau_h);
    TauTable {
        n,
        tau_g,
        tau_v,
        tau_h,
        rho,
        a_v,
        a_h,
    }
}

impl TauTable {
    pub fn get(&self, e: Entry) -> &Expr {
        match e {
            Entry::G(a, b) => &self.tau_g[a][b],
            Entry::V(a, b, c) => &self.tau_v[a][b][c],
            Entry::H(a, b, c) => &self.tau_h[a][b][c],
            Entry::Rho(a, b, c) => &self.rho[a][b][c],
        }
    }

    pub fn entries(&self) -> Vec<Entry> {
        let n = self.n;
        let mut out = Vec::new();
        for a in 0..n {
            for b in 0..n {
                out.push(Entry::G(a, b));
            }
        }
        for mk in [Entry::V as fn(usize, usize, usize) -> Entry, Entry::H, Entry::Rho] {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        out.push(mk(a, b, c));
                    }
                }
            }
        }
        out
    }

    /// Entries that are not identically zero under the tester.
    pub fn nonzero(&self, zt: &ZeroTester) -> Result<Vec<(Entry, Expr)>, ZeroTestError> {
        let mut out = Vec::new();
        for e in self.entries() {
            let v = self.get(e);
            if !v.is_zero() && !zt.is_zero(v)? {
                out.push((e, v.clone()));
            }
        }
        Ok(out)
    }
}

/// Frame of the evolution space as coordinate components over
/// `(t, x¹..xⁿ, u¹..uⁿ)`: index 0 is Γ, `1+b` is `X_b^V`, `1+n+b` is `X_b^H`.
fn frame_components(g: &Geometry, es: &EigenSystem) -> Vec<Vec<Expr>> {
    let n = g.n();
    let s = &g.sode;
    let mut out = Vec::with_capacity(2 * n + 1);
    let mut gam = vec![Expr::one()];
    gam.extend((0..n).map(|a| s.u(a)));
    gam.extend(s.forces.iter().cloned());
    out.push(gam);
    for b in 0..n {
        let mut v = vec![Expr::zero(); n + 1];
        v.extend(es.vectors[b].iter().cloned());
        out.push(v);
    }
    for b in 0..n {
        let mut h = vec![Expr::zero()];
        h.extend(es.vectors[b].iter().cloned());
        for c in 0..n {
            let t = (0..n).map(|e| (&g.data.conn[c][e] * &es.vectors[b][e]).neg()).collect();
            h.push(simplify(&Expr::add(t)));
        }
        out.push(h);
    }
    out
}

fn apply_components(g: &Geometry, comps: &[Expr], f: &Expr) -> Expr {
    let names = g.sode.symbol_names();
    let t = names
        .iter()
        .zip(comps)
        .filter(|(_, c)| !c.is_zero())
        .map(|(s, c)| c * diff_raw(f, s))
        .collect();
    simplify(&Expr::add(t))
}

/// Scalar field with its frame derivatives Γ(f), X_b^V(f), X_b^H(f).
#[derive(Clone, Debug)]
struct Field {
    val: Expr,
    d: Vec<Expr>,
}

/// Numeric values of a field and its 2n+1 frame derivatives.
#[derive(Clone, Debug)]
struct NF {
    v: f64,
    d: Vec<f64>,
}

/// Precomputed symbolic data for the Jacobi-identity suite.
pub struct JacobiSuite {
    n: usize,
    fields: BTreeMap<Key, Field>,
    comps: Vec<Vec<Expr>>,
    brackets: Vec<(usize, usize, Vec<Expr>)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Key {
    E(Entry),
    Lam(usize),
}

struct Nums {
    n: usize,
    f: BTreeMap<Key, NF>,
    zero: NF,
}

impl Nums {
    fn get(&self, k: Key) -> &NF {
        self.f.get(&k).unwrap_or(&self.zero)
    }
    fn tg(&self, a: usize, b: usize) -> &NF {
        self.get(Key::E(Entry::G(a, b)))
    }
    fn tv(&self, a: usize, b: usize, c: usize) -> &NF {
        self.get(Key::E(Entry::V(a, b, c)))
    }
    fn th(&self, a: usize, b: usize, c: usize) -> &NF {
        self.get(Key::E(Entry::H(a, b, c)))
    }
    fn rho(&self, a: usize, b: usize, c: usize) -> &NF {
        self.get(Key::E(Entry::Rho(a, b, c)))
    }
    fn lam(&self, a: usize) -> &NF {
        self.get(Key::Lam(a))
    }
    // derivative slots
    fn gd(&self, x: &NF) -> f64 {
        x.d[0]
    }
    fn xv(&self, b: usize, x: &NF) -> f64 {
        x.d[1 + b]
    }
    fn xh(&self, b: usize, x: &NF) -> f64 {
        x.d[1 + self.n + b]
    }
}

/// Sum of terms that remembers the largest magnitude it has seen.
#[derive(Default)]
struct Acc {
    sum: f64,
    max: f64,
}

impl Acc {
    fn add(&mut self, x: f64) {
        self.sum += x;
        self.max = self.max.max(x.abs());
    }
    fn sub(&mut self, x: f64) {
        self.add(-x);
    }
    fn residual(&self) -> f64 {
        self.sum.abs() / (1.0 + self.max)
    }
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

pub const FAMILIES: &[&str] = &[
    "jacobi-1a",
    "jacobi-1b",
    "jacobi-2a",
    "jacobi-2b",
    "jacobi-3s",
    "jacobi-3a",
    "jacobi-3b",
    "jacobi-4a",
    "jacobi-4b",
    "jacobi-5",
    "jacobi-6a",
    "jacobi-6b",
    "frame-brackets",
];

impl JacobiSuite {
    pub fn new(g: &Geometry, es: &EigenSystem, tt: &TauTable) -> JacobiSuite {
        let n = g.n();
        let comps = frame_components(g, es);
        let mut fields = BTreeMap::new();
        let mut add = |k: Key, val: &Expr| {
            if val.is_zero() {
                return;
            }
            let d = comps.iter().map(|c| apply_components(g, c, val)).collect();
            fields.insert(k, Field { val: val.clone(), d });
        };
        for e in tt.entries() {
            add(Key::E(e), tt.get(e));
        }
        for a in 0..n {
            add(Key::Lam(a), &es.lambdas[a]);
        }
        let m = 2 * n + 1;
        let mut brackets = Vec::new();
        for j in 0..m {
            for k in j + 1..m {
                let v = (0..m)
                    .map(|f| {
                        simplify(
                            &(apply_components(g, &comps[j], &comps[k][f])
                                - apply_components(g, &comps[k], &comps[j][f])),
                        )
                    })
                    .collect();
                brackets.push((j, k, v));
            }
        }
        JacobiSuite {
            n,
            fields,
            comps,
            brackets,
        }
    }

    /// Entries of the table that are not structurally zero.
    pub fn nonzero_entries(&self) -> Vec<Entry> {
        self.fields
            .keys()
            .filter_map(|k| match k {
                Key::E(e) => Some(*e),
                Key::Lam(_) => None,
            })
            .collect()
    }

    fn numbers(&self, p: &Point, shift: Option<(Entry, f64)>) -> Result<Nums, EvalError> {
        let m = 2 * self.n + 1;
        let mut f = BTreeMap::new();
        for (k, fld) in &self.fields {
            let mut v = eval_point(&fld.val, p)?;
            if let (Key::E(e), Some((se, dv))) = (k, shift) {
                if *e == se {
                    v += dv;
                }
            }
            let d = fld.d.iter().map(|e| eval_point(e, p)).collect::<Result<Vec<_>, _>>()?;
            f.insert(*k, NF { v, d });
        }
        if let Some((se, dv)) = shift {
            f.entry(Key::E(se)).or_insert(NF { v: dv, d: vec![0.0; m] });
        }
        Ok(Nums {
            n: self.n,
            f,
            zero: NF { v: 0.0, d: vec![0.0; m] },
        })
    }

    /// Maximum normalised residual per family over `points`, optionally
    /// with one table value shifted by a constant (derivatives untouched).
    pub fn residuals(&self, points: &[Point], shift: Option<(Entry, f64)>) -> Result<BTreeMap<String, f64>, EvalError> {
        let mut out: BTreeMap<String, f64> = FAMILIES.iter().map(|f| (f.to_string(), 0.0)).collect();
        for p in points {
            let nums = self.numbers(p, shift)?;
            let mut upd = |name: &str, r: f64| {
                let e = out.get_mut(name).unwrap();
                if r > *e || r.is_nan() {
                    *e = r;
                }
            };
            for (name, r) in families(&nums) {
                upd(name, r);
            }
            upd("frame-brackets", self.bracket_residual(&nums, p)?);
        }
        Ok(out)
    }

    fn bracket_residual(&self, nums: &Nums, p: &Point) -> Result<f64, EvalError> {
        let n = self.n;
        let m = 2 * n + 1;
        let c = structure_constants(nums);
        let comp: Vec<Vec<f64>> = self
            .comps
            .iter()
            .map(|row| row.iter().map(|e| eval_point(e, p)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<_, _>>()?;
        let mut worst: f64 = 0.0;
        for (j, k, br) in &self.brackets {
            for f in 0..m {
                let mut acc = Acc::default();
                acc.add(eval_point(&br[f], p)?);
                for i in 0..m {
                    acc.add(c[i][*j][*k] * comp[i][f]);
                }
                worst = worst.max(acc.residual());
            }
        }
        Ok(worst)
    }
}

/// `c[i][j][k]` with `dθ^i = Σ_{j<k} c[i][j][k] θ^j∧θ^k` over the basis
/// `dt, φ^{aV}, φ^{aH}`.
fn structure_constants(x: &Nums) -> Vec<Vec<Vec<f64>>> {
    let n = x.n;
    let m = 2 * n + 1;
    let v = |a: usize| 1 + a;
    let h = |a: usize| 1 + n + a;
    let mut c = vec![vec![vec![0.0; m]; m]; m];
    let mut put = |i: usize, p: usize, q: usize, coef: f64| {
        if p < q {
            c[i][p][q] += coef;
        } else if p > q {
            c[i][q][p] -= coef;
        }
    };
    for a in 0..n {
        put(v(a), 0, h(a), -x.lam(a).v);
        put(h(a), 0, v(a), 1.0);
        for b in 0..n {
            put(v(a), 0, v(b), -x.tg(a, b).v);
            put(h(a), 0, h(b), -x.tg(a, b).v);
            for cc in 0..n {
                put(v(a), v(b), h(cc), x.th(a, cc, b).v);
                put(v(a), v(b), v(cc), x.tv(a, cc, b).v);
                put(v(a), h(b), h(cc), -0.5 * x.rho(a, b, cc).v);
                put(h(a), h(b), h(cc), x.th(a, cc, b).v);
                put(h(a), v(b), h(cc), -x.tv(a, b, cc).v);
            }
        }
    }
    c
}

fn families(x: &Nums) -> Vec<(&'static str, f64)> {
    let n = x.n;
    let r = 0..n;
    let mut worst: BTreeMap<&'static str, f64> = BTreeMap::new();
    let mut rec = |name: &'static str, acc: Acc| {
        let e = worst.entry(name).or_insert(0.0);
        *e = e.max(acc.residual());
    };
    for a in r.clone() {
        for b in r.clone() {
            for c in r.clone() {
                // 1a
                let mut s = Acc::default();
                s.add(x.gd(x.tv(a, b, c)));
                for e in r.clone() {
                    s.add(x.tv(e, b, c).v * x.tg(a, e).v);
                    s.add(x.tg(e, c).v * x.tv(a, b, e).v);
                    s.sub(x.tv(a, e, c).v * x.tg(e, b).v);
                }
                s.add(x.th(a, b, c).v);
                s.sub(x.xv(b, x.tg(a, c)));
                rec("jacobi-1a", s);
                // 1b
                let mut s = Acc::default();
                s.add(x.gd(x.th(a, c, b)));
                for e in r.clone() {
                    s.add(x.th(e, c, b).v * x.tg(a, e).v);
                    s.sub(x.tg(e, c).v * x.th(a, e, b).v);
                    s.sub(x.tg(e, b).v * x.th(a, c, e).v);
                }
                s.add(x.xh(c, x.tg(a, b)));
                s.add(x.xv(b, x.lam(c)) * delta(a, c));
                s.sub(x.lam(c).v * (x.tv(a, c, b).v - x.tv(a, b, c).v));
                s.sub(x.lam(a).v * x.tv(a, b, c).v);
                s.sub(x.rho(a, b, c).v);
                rec("jacobi-1b", s);
                // 2a
                let mut s = Acc::default();
                s.add(x.gd(x.rho(a, b, c)));
                for e in r.clone() {
                    s.sub(x.tg(e, c).v * x.rho(a, b, e).v);
                    s.sub(x.tg(e, b).v * x.rho(a, e, c).v);
                    s.add(x.tg(a, e).v * x.rho(e, b, c).v);
                }
                s.sub((x.lam(c).v - x.lam(a).v) * x.th(a, b, c).v);
                s.add((x.lam(b).v - x.lam(a).v) * x.th(a, c, b).v);
                s.sub(x.xh(b, x.lam(c)) * delta(a, c));
                s.add(x.xh(c, x.lam(b)) * delta(a, b));
                rec("jacobi-2a", s);
                // 2b
                let mut s = Acc::default();
                s.add(x.gd(x.th(a, b, c)));
                s.sub(x.gd(x.th(a, c, b)));
                for e in r.clone() {
                    s.add((x.th(e, b, c).v - x.th(e, c, b).v) * x.tg(a, e).v);
                    s.sub(x.tg(e, c).v * (x.th(a, b, e).v - x.th(a, e, b).v));
                    s.add(x.tg(e, b).v * (x.th(a, c, e).v - x.th(a, e, c).v));
                }
                s.add(x.lam(c).v * x.tv(a, c, b).v);
                s.sub(x.lam(b).v * x.tv(a, b, c).v);
                s.sub(x.xh(c, x.tg(a, b)));
                s.add(x.xh(b, x.tg(a, c)));
                s.sub(x.rho(a, b, c).v);
                rec("jacobi-2b", s);
                // 3s
                let mut s = Acc::default();
                s.add(3.0 * x.rho(a, b, c).v);
                s.sub(x.xv(b, x.lam(c)) * delta(a, c));
                s.add(x.xv(c, x.lam(b)) * delta(a, b));
                s.sub(x.tv(a, b, c).v * (x.lam(c).v - x.lam(a).v));
                s.add(x.tv(a, c, b).v * (x.lam(b).v - x.lam(a).v));
                rec("jacobi-3s", s);
                for d in r.clone() {
                    four_index(x, a, b, c, d, &mut rec);
                }
            }
        }
    }
    worst.into_iter().collect()
}

fn four_index(x: &Nums, a: usize, b: usize, c: usize, d: usize, rec: &mut impl FnMut(&'static str, Acc)) {
    let r = 0..x.n;
    let tv = |i, j, k| x.tv(i, j, k).v;
    let th = |i, j, k| x.th(i, j, k).v;
    let rho = |i, j, k| x.rho(i, j, k).v;
    // 3a
    let mut s = Acc::default();
    s.add(x.xv(a, x.tv(d, b, c)));
    s.sub(x.xv(b, x.tv(d, a, c)));
    for e in r.clone() {
        s.sub(tv(e, a, c) * tv(d, b, e));
        s.add(tv(e, b, c) * tv(d, a, e));
        s.sub(tv(d, e, c) * (tv(e, a, b) - tv(e, b, a)));
    }
    rec("jacobi-3a", s);
    // 3b
    let mut s = Acc::default();
    s.add(x.xv(a, x.th(d, c, b)));
    s.sub(x.xv(b, x.th(d, c, a)));
    s.sub(x.xh(c, x.tv(d, a, b)));
    s.add(x.xh(c, x.tv(d, b, a)));
    for e in r.clone() {
        s.add(tv(e, b, c) * th(d, e, a));
        s.sub(tv(e, a, c) * th(d, e, b));
        s.sub(th(d, c, e) * (tv(e, a, b) - tv(e, b, a)));
        s.sub(th(e, c, a) * (tv(d, b, e) - tv(d, e, b)));
        s.add(th(e, c, b) * (tv(d, a, e) - tv(d, e, a)));
    }
    rec("jacobi-3b", s);
    // 4a
    let mut s = Acc::default();
    s.add(x.xh(a, x.tv(d, b, c)));
    s.sub(x.xh(c, x.tv(d, b, a)));
    s.sub(x.xv(b, x.th(d, a, c)));
    s.add(x.xv(b, x.th(d, c, a)));
    for e in r.clone() {
        s.add(tv(e, b, c) * (th(d, a, e) - th(d, e, a)));
        s.add(th(e, c, b) * tv(d, e, a));
        s.add((th(e, c, a) - th(e, a, c)) * tv(d, b, e));
        s.sub(tv(e, b, a) * (th(d, c, e) - th(d, e, c)));
        s.sub(th(e, a, b) * tv(d, e, c));
    }
    rec("jacobi-4a", s);
    // 4b
    let mut s = Acc::default();
    s.add(x.xh(a, x.th(d, c, b)));
    s.sub(x.xh(c, x.th(d, a, b)));
    s.sub(x.xv(b, x.rho(d, c, a)));
    for e in r.clone() {
        s.sub(tv(e, b, c) * rho(d, a, e));
        s.add(th(e, c, b) * th(d, a, e));
        s.sub(rho(e, c, a) * (tv(d, b, e) - tv(d, e, b)));
        s.sub(th(e, a, b) * th(d, c, e));
        s.add(th(d, e, b) * (th(e, c, a) - th(e, a, c)));
        s.add(tv(e, b, a) * rho(d, c, e));
    }
    rec("jacobi-4b", s);
    // 5: cyclic identity for A(T)_{ij} = T^d_{ij} − T^d_{ji}
    let av = |i, j| tv(d, i, j) - tv(d, j, i);
    let ave = |e, i, j| tv(e, i, j) - tv(e, j, i);
    let xva = |k: usize, i, j| x.xv(k, x.tv(d, i, j)) - x.xv(k, x.tv(d, j, i));
    let mut s = Acc::default();
    s.add(xva(a, b, c));
    s.add(xva(b, c, a));
    s.add(xva(c, a, b));
    for e in r.clone() {
        s.add(av(a, e) * ave(e, b, c));
        s.add(av(b, e) * ave(e, c, a));
        s.add(av(c, e) * ave(e, a, b));
    }
    rec("jacobi-5", s);
    // 6a
    let ah = |i, j| th(d, i, j) - th(d, j, i);
    let ahe = |e, i, j| th(e, i, j) - th(e, j, i);
    let xha = |k: usize, i, j| x.xh(k, x.th(d, i, j)) - x.xh(k, x.th(d, j, i));
    let mut s = Acc::default();
    s.add(xha(a, b, c));
    s.add(xha(b, c, a));
    s.add(xha(c, a, b));
    for e in r.clone() {
        s.sub(tv(d, e, a) * rho(e, b, c));
        s.sub(tv(d, e, b) * rho(e, c, a));
        s.sub(tv(d, e, c) * rho(e, a, b));
        s.add(ah(a, e) * ahe(e, b, c));
        s.add(ah(b, e) * ahe(e, c, a));
        s.add(ah(c, e) * ahe(e, a, b));
    }
    rec("jacobi-6a", s);
    // 6b
    let mut s = Acc::default();
    s.add(x.xh(a, x.rho(d, b, c)));
    s.add(x.xh(b, x.rho(d, c, a)));
    s.add(x.xh(c, x.rho(d, a, b)));
    for e in r.clone() {
        s.sub((th(e, c, b) - th(e, b, c)) * rho(d, a, e));
        s.sub((th(e, a, c) - th(e, c, a)) * rho(d, b, e));
        s.sub((th(e, b, a) - th(e, a, b)) * rho(d, c, e));
        s.add(th(d, a, e) * rho(e, b, c));
        s.add(th(d, b, e) * rho(e, c, a));
        s.add(th(d, c, e) * rho(e, a, b));
    }
    rec("jacobi-6b", s);
}

/// Per-family maximum residual at `points` sample points of the system's
/// domain.
pub fn jacobi_identity_residuals(
    g: &Geometry,
    tt: &TauTable,
    es: &EigenSystem,
    points: usize,
    seed: u64,
) -> Result<BTreeMap<String, f64>, EvalError> {
    let pts = g.sode.domain.sample_points(seed, points);
    JacobiSuite::new(g, es, tt).residuals(&pts, None)
}
