//! The decision procedure: case detection, the differential-ideal
//! sequence, integrable directions, the semi-separable pipeline and the
//! limiting one-generator test.

use std::fmt;

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::eigen::{eigensystem, from_supplied, rescale_eigenvectors, EigenError, EigenFlags, EigenSystem};
use crate::forms::{AdaptedForm, DivisibilityError, FormError, FrameCalculus};
use crate::geometry::{Geometry, Sode};
use crate::linalg::{nullspace, rref, Mat};
use crate::symexpr::{eval_point, simplify, Expr, Point, ZeroTestError, ZeroTester, ZeroVerdict};
use crate::taucalc::compute_tau_table;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error(transparent)]
    Zero(#[from] ZeroTestError),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

impl From<DivisibilityError> for ClassifyError {
    fn from(e: DivisibilityError) -> Self {
        match e {
            DivisibilityError::Zero(z) => ClassifyError::Zero(z),
            DivisibilityError::Form(f) => ClassifyError::Form(f),
            DivisibilityError::BadDivisor => ClassifyError::Form(FormError::DegreeOverflow(0)),
        }
    }
}

type Res<T> = Result<T, ClassifyError>;

#[derive(Clone, Debug)]
pub struct ClassifyOptions {
    pub trials: usize,
    pub tol: f64,
    pub seed: u64,
    /// Cap on the differential-ideal sequence (defaults to `n`).
    pub max_steps: Option<usize>,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            trials: crate::symexpr::DEFAULT_TRIALS,
            tol: crate::symexpr::DEFAULT_TOL,
            seed: crate::symexpr::DEFAULT_SEED,
            max_steps: None,
        }
    }
}

impl ClassifyOptions {
    pub fn tester(&self, s: &Sode) -> ZeroTester {
        ZeroTester::new(s.domain.clone(), self.trials, self.tol, self.seed)
    }
}

/// A submodule of Σ¹, each generator given by its coefficients `r_a` on
/// `ω^a = φ^{aV}∧φ^{aH}`.
#[derive(Clone, Debug)]
pub struct Submodule {
    pub step: usize,
    pub generators: Vec<Vec<Expr>>,
    /// Linear relations on the previous step's coefficients that cut this
    /// module out (empty for Σ¹).
    pub constraints: Vec<String>,
    pub differential_ideal: bool,
}

impl Submodule {
    pub fn forms(&self, n: usize) -> Vec<AdaptedForm> {
        self.generators.iter().map(|r| combine(n, r)).collect()
    }
}

fn combine(n: usize, r: &[Expr]) -> AdaptedForm {
    let mut w = AdaptedForm::zero(n, 2);
    for (a, c) in r.iter().enumerate() {
        w = w.add(&AdaptedForm::omega(n, a).scale(c));
    }
    w
}

/// Printed `Σ r_a ω^a`.
pub fn generator_string(r: &[Expr]) -> String {
    let mut parts = Vec::new();
    for (a, c) in r.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let s = c.to_string();
        let term = if c.is_one() {
            format!("omega^{}", a + 1)
        } else if s == "-1" {
            format!("-omega^{}", a + 1)
        } else {
            format!("({s})*omega^{}", a + 1)
        };
        parts.push(term);
    }
    if parts.is_empty() {
        return "0".into();
    }
    parts.join(" + ").replace("+ -", "- ")
}

#[derive(Clone, Debug)]
pub struct IntegrableDirection {
    pub b: usize,
    pub b_coeff: Expr,
    pub kappa: Option<AdaptedForm>,
    pub exists: bool,
    /// Whether `X_a^V(B_b) = B_b τ^{bV}_{ba} − τ^{bH}_{ba}` holds for each
    /// contributing `a`.
    pub vertical_condition: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Subcase {
    #[serde(rename = "i")]
    I,
    #[serde(rename = "ii")]
    II,
}

impl fmt::Display for Subcase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subcase::I => "i",
            Subcase::II => "ii",
        })
    }
}

#[derive(Clone, Debug)]
pub struct CaseData {
    pub b: usize,
    pub subcase: Subcase,
    pub contributing: Vec<usize>,
    pub b_coeff: Expr,
    pub c: Expr,
    /// `C_{a_i}` for each contributing index.
    pub c_values: Vec<(usize, Expr)>,
    pub ratio_ok: bool,
    pub c_consistent: bool,
    pub direction: IntegrableDirection,
    pub final_condition_ok: Option<bool>,
    pub xi_bb: AdaptedForm,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    NoNonDegenerate { reason: String },
    Exists { freedom: String, characters: Vec<usize> },
    Inconclusive { reason: String },
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::NoNonDegenerate { reason } => write!(f, "NoNonDegenerate ({reason})"),
            Verdict::Exists { freedom, .. } => write!(f, "Exists: {freedom}"),
            Verdict::Inconclusive { reason } => write!(f, "Inconclusive ({reason})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CaseLabel {
    A,
    B,
    C,
    D,
    #[serde(rename = "complex")]
    Complex,
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CaseLabel::A => "A",
            CaseLabel::B => "B",
            CaseLabel::C => "C",
            CaseLabel::D => "D",
            CaseLabel::Complex => "complex",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct PkResult {
    pub mu: Option<AdaptedForm>,
    pub closed: bool,
}

#[derive(Clone, Debug)]
pub struct ClassificationReport {
    pub n: usize,
    pub case: CaseLabel,
    pub eigen: Option<EigenSystem>,
    pub eigen_flags: EigenFlags,
    pub integrable: Vec<bool>,
    pub q: Option<usize>,
    pub di_step: Option<usize>,
    pub sequence: Vec<Submodule>,
    pub semi_separable: Option<CaseData>,
    pub pk: Vec<(Vec<Expr>, PkResult)>,
    pub verdict: Verdict,
    pub diagnostics: Vec<String>,
}

impl ClassificationReport {
    fn new(n: usize, case: CaseLabel, verdict: Verdict) -> Self {
        ClassificationReport {
            n,
            case,
            eigen: None,
            eigen_flags: EigenFlags::default(),
            integrable: Vec::new(),
            q: None,
            di_step: None,
            sequence: Vec::new(),
            semi_separable: None,
            pk: Vec::new(),
            verdict,
            diagnostics: Vec::new(),
        }
    }

    /// One-line description, e.g. `case B, q=1, Σ¹ DI, subcase ii, Exists: …`.
    pub fn summary(&self) -> String {
        let mut parts = vec![format!("case {}", self.case)];
        if let Some(q) = self.q {
            parts.push(format!("q={q}"));
        }
        if let Some(first) = self.sequence.first() {
            parts.push(format!("Σ¹ {}", if first.differential_ideal { "DI" } else { "not DI" }));
        }
        if let Some(s) = self.di_step {
            if s > 1 {
                parts.push(format!("Σ{} DI", superscript(s)));
            }
        }
        if let Some(cd) = &self.semi_separable {
            parts.push(format!("subcase {}", cd.subcase));
        }
        parts.push(self.verdict.to_string());
        parts.join(", ")
    }
}

impl ClassificationReport {
    /// Versioned machine-readable report; key order is fixed so output is
    /// byte-stable for a given input and seed.
    pub fn to_json(&self) -> serde_json::Value {
        let strs = |v: &[Expr]| v.iter().map(|e| e.to_string()).collect::<Vec<_>>();
        let sequence: Vec<_> = self
            .sequence
            .iter()
            .map(|m| {
                json!({
                    "step": m.step,
                    "generators": m.generators.iter().map(|g| generator_string(g)).collect::<Vec<_>>(),
                    "constraints": m.constraints,
                    "differential_ideal": m.differential_ideal,
                })
            })
            .collect();
        let semi = self.semi_separable.as_ref().map(|cd| {
            json!({
                "b": cd.b + 1,
                "subcase": cd.subcase,
                "contributing": cd.contributing.iter().map(|a| a + 1).collect::<Vec<_>>(),
                "B": cd.b_coeff.to_string(),
                "C": cd.c.to_string(),
                "C_values": cd.c_values.iter().map(|(a, c)| json!({"a": a + 1, "C": c.to_string()})).collect::<Vec<_>>(),
                "ratio_condition": cd.ratio_ok,
                "C_condition": cd.c_consistent,
                "direction": {
                    "form": direction_form(self.n, cd.b, &cd.b_coeff).to_string(),
                    "integrable": cd.direction.exists,
                    "vertical_condition": cd.direction.vertical_condition,
                    "kappa": cd.direction.kappa.as_ref().map(|k| k.to_string()),
                },
                "final_condition": cd.final_condition_ok,
            })
        });
        let pk: Vec<_> = self
            .pk
            .iter()
            .map(|(r, p)| {
                json!({
                    "generator": generator_string(r),
                    "mu": p.mu.as_ref().map(|m| m.to_string()),
                    "closed": p.closed,
                })
            })
            .collect();
        json!({
            "schema": 1,
            "n": self.n,
            "case": self.case,
            "flags": self.eigen_flags,
            "eigenvalues": self.eigen.as_ref().map(|e| strs(&e.lambdas)),
            "integrable": self.integrable,
            "q": self.q,
            "di_step": self.di_step,
            "sequence": sequence,
            "semi_separable": semi,
            "pk": pk,
            "verdict": self.verdict,
            "summary": self.summary(),
            "diagnostics": self.diagnostics,
        })
    }
}

/// The eigensystem the analysis runs on: caller data when given (checked
/// by residual), otherwise the symbolic search followed by rescaling.
pub fn prepare_eigen(g: &Geometry, supplied: Option<(Vec<Expr>, Mat)>, zt: &ZeroTester) -> Result<EigenSystem, EigenError> {
    match supplied {
        Some((l, v)) => from_supplied(g, l, v, zt),
        None => rescale_eigenvectors(&eigensystem(g, zt)?, g, zt),
    }
}

pub fn superscript(k: usize) -> String {
    const D: [char; 10] = ['⁰', '¹', '²', '³', '⁴', '⁵', '⁶', '⁷', '⁸', '⁹'];
    k.to_string().chars().map(|c| D[c.to_digit(10).unwrap() as usize]).collect()
}

/// Φ − (tr Φ / n)·I vanishes entrywise.
pub fn check_phi_identity_case(g: &Geometry, zt: &ZeroTester) -> Res<bool> {
    let n = g.n();
    let phi = &g.data.phi;
    let tr = Expr::add((0..n).map(|i| phi[i][i].clone()).collect()) * Expr::rat(1, n as i64);
    for i in 0..n {
        for j in 0..n {
            let e = if i == j { &phi[i][j] - &tr } else { phi[i][j].clone() };
            if !zt.is_zero(&e)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Per eigen-distribution Frobenius integrability.
pub fn frobenius_flags(fc: &FrameCalculus, zt: &ZeroTester) -> Res<Vec<bool>> {
    let tt = &fc.taus;
    let n = tt.n;
    let mut out = Vec::with_capacity(n);
    for a in 0..n {
        let mut ok = true;
        'outer: for b in (0..n).filter(|&b| b != a) {
            if !zt.is_zero(&tt.tau_g[a][b])? {
                ok = false;
                break;
            }
            for c in (0..n).filter(|&c| c != a) {
                for e in [&tt.tau_v[a][b][c], &tt.tau_h[a][b][c], &tt.rho[a][b][c]] {
                    if !zt.is_zero(e)? {
                        ok = false;
                        break 'outer;
                    }
                }
            }
        }
        out.push(ok);
    }
    Ok(out)
}

/// τ^{aΓ}_b = 0 (a ≠ b) and τ^{aV}_{bc} = 0 (a, b, c distinct).
pub fn di_step_sigma1(fc: &FrameCalculus, zt: &ZeroTester) -> Res<bool> {
    let tt = &fc.taus;
    let n = tt.n;
    for a in 0..n {
        for b in (0..n).filter(|&b| b != a) {
            if !zt.is_zero(&tt.tau_g[a][b])? {
                return Ok(false);
            }
            for c in (0..n).filter(|&c| c != a && c != b) {
                if !zt.is_zero(&tt.tau_v[a][b][c])? {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

fn normalise(mut r: Vec<Expr>, zt: &ZeroTester) -> Res<Vec<Expr>> {
    for i in 0..r.len() {
        if !r[i].is_zero() && !zt.is_zero(&r[i])? {
            let inv = Expr::recip(r[i].clone());
            r = r.iter().map(|c| simplify(&(c * &inv))).collect();
            return Ok(r);
        }
    }
    Ok(r)
}

/// One step of the sequence: the submodule of `span(gens)` whose exterior
/// derivatives lie in the ideal generated by `gens`.
fn next_step(fc: &FrameCalculus, gens: &[Vec<Expr>], step: usize, zt: &ZeroTester) -> Res<Submodule> {
    let n = fc.n();
    let m = 2 * n + 1;
    let forms: Vec<AdaptedForm> = gens.iter().map(|r| combine(n, r)).collect();
    let mut span = Vec::new();
    for g in &forms {
        for i in 0..m {
            span.push(AdaptedForm::basis(n, i).wedge(g)?);
        }
    }
    let ds: Vec<AdaptedForm> = forms.iter().map(|g| fc.d(g)).collect::<Result<_, _>>()?;
    let rows = AdaptedForm::all_indices(n, 3);
    let mat: Mat = rows
        .iter()
        .map(|idx| span.iter().chain(ds.iter()).map(|f| f.coeff(idx)).collect())
        .collect();
    let red = rref(&mat, zt)?;
    let ns = span.len();
    let mut kmat: Mat = Vec::new();
    for (r, &pc) in red.pivots.iter().enumerate() {
        if pc >= ns {
            let row: Vec<Expr> = red.rows[r][ns..].to_vec();
            let mut trivial = true;
            for e in &row {
                if !zt.is_zero(e)? {
                    trivial = false;
                    break;
                }
            }
            if !trivial {
                kmat.push(row);
            }
        }
    }
    if kmat.is_empty() {
        return Ok(Submodule {
            step,
            generators: gens.to_vec(),
            constraints: Vec::new(),
            differential_ideal: true,
        });
    }
    let constraints = kmat
        .iter()
        .map(|row| {
            let terms: Vec<String> = row
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(j, c)| format!("({c})*s{}", j + 1))
                .collect();
            format!("{} = 0", terms.join(" + "))
        })
        .collect();
    let kernel = nullspace(&kmat, zt)?;
    let mut generators = Vec::new();
    for s in kernel {
        let r: Vec<Expr> = (0..n)
            .map(|a| simplify(&Expr::add(s.iter().zip(gens).map(|(sj, g)| sj * &g[a]).collect())))
            .collect();
        generators.push(normalise(r, zt)?);
    }
    Ok(Submodule {
        step,
        generators,
        constraints,
        differential_ideal: false,
    })
}

/// Σ¹, Σ², … until a differential ideal, the trivial module or `max_steps`.
pub fn sigma_sequence(fc: &FrameCalculus, max_steps: usize, zt: &ZeroTester) -> Res<Vec<Submodule>> {
    let n = fc.n();
    let mut gens: Vec<Vec<Expr>> = (0..n)
        .map(|a| (0..n).map(|b| if a == b { Expr::one() } else { Expr::zero() }).collect())
        .collect();
    let mut out: Vec<Submodule> = Vec::new();
    let mut constraints = Vec::new();
    for step in 1..=max_steps.max(1) {
        let probe = next_step(fc, &gens, step, zt)?;
        let di = probe.differential_ideal;
        out.push(Submodule {
            step,
            generators: gens.clone(),
            constraints: std::mem::take(&mut constraints),
            differential_ideal: di,
        });
        if di {
            break;
        }
        gens = probe.generators;
        constraints = probe.constraints;
        if gens.is_empty() {
            out.push(Submodule {
                step: step + 1,
                generators: Vec::new(),
                constraints,
                differential_ideal: true,
            });
            break;
        }
    }
    Ok(out)
}

/// Indices `a` with no generator carrying `ω^a`; nonempty means the
/// module has only degenerate members.
pub fn degenerate_check(sub: &Submodule, n: usize, zt: &ZeroTester) -> Res<Vec<usize>> {
    let mut missing = Vec::new();
    for a in 0..n {
        let mut present = false;
        for g in &sub.generators {
            if !g[a].is_zero() && !zt.is_zero(&g[a])? {
                present = true;
                break;
            }
        }
        if !present {
            missing.push(a);
        }
    }
    Ok(missing)
}

/// Indices `a ≠ b` with `τ^{bV}_{aa} ≠ 0`.
fn contributing(fc: &FrameCalculus, b: usize, zt: &ZeroTester) -> Res<Vec<usize>> {
    let mut out = Vec::new();
    for a in (0..fc.n()).filter(|&a| a != b) {
        if !zt.is_zero(&fc.taus.tau_v[b][a][a])? {
            out.push(a);
        }
    }
    Ok(out)
}

pub fn direction_form(n: usize, b: usize, coeff: &Expr) -> AdaptedForm {
    AdaptedForm::phi_v(n, b).add(&AdaptedForm::phi_h(n, b).scale(coeff))
}

/// Look for `α_b = φ^{bV} + B_b φ^{bH}` with `dα_b = κ ∧ α_b`.
pub fn find_integrable_direction(fc: &FrameCalculus, b: usize, zt: &ZeroTester) -> Res<IntegrableDirection> {
    let n = fc.n();
    let tt = &fc.taus;
    let contrib = contributing(fc, b, zt)?;
    let b_coeff = match contrib.first() {
        Some(&a) => simplify(&(&tt.tau_h[b][a][a] / &tt.tau_v[b][a][a])),
        None => Expr::zero(),
    };
    let mut vertical_condition = true;
    for &a in &contrib {
        let lhs = fc.derive(1 + a, &b_coeff);
        let rhs = &b_coeff * &tt.tau_v[b][b][a] - &tt.tau_h[b][b][a];
        if !zt.is_zero(&(lhs - rhs))? {
            vertical_condition = false;
        }
    }
    let alpha = direction_form(n, b, &b_coeff);
    let div = fc.divisibility_test(&fc.d(&alpha)?, &alpha, zt)?;
    Ok(IntegrableDirection {
        b,
        b_coeff,
        kappa: div.beta,
        exists: div.divides,
        vertical_condition,
    })
}

/// `ξ^b_b = A^{bV}_{bc} φ^{cV} + A^{bH}_{bc} φ^{cH}`.
pub fn xi_diag(fc: &FrameCalculus, b: usize) -> AdaptedForm {
    let n = fc.n();
    let mut c = vec![Expr::zero(); 2 * n + 1];
    for k in 0..n {
        c[1 + k] = fc.taus.a_v[b][b][k].clone();
        c[1 + n + k] = fc.taus.a_h[b][b][k].clone();
    }
    AdaptedForm::one_form(n, &c)
}

/// The torsion coefficient `C_a` for non-integrable index `b`.
pub fn torsion_c(fc: &FrameCalculus, b: usize, a: usize) -> Expr {
    let n = fc.n();
    let tt = &fc.taus;
    let tv = &tt.tau_v[b][a][a];
    let th = &tt.tau_h[b][a][a];
    let num = Expr::add(vec![
        fc.derive(1 + n + b, tv),
        fc.derive(1 + b, th).neg(),
        (th * &tt.a_v[a][a][b]).neg(),
        tv * &tt.a_h[a][a][b],
        (tv * &tt.tau_h[b][b][b]).neg(),
        th * &tt.tau_v[b][b][b],
    ]);
    simplify(&(num / tv))
}

/// The pipeline for exactly one non-integrable eigen-distribution `b` with
/// Σ¹ a differential ideal.
pub fn analyze_semi_separable(fc: &FrameCalculus, b: usize, zt: &ZeroTester) -> Res<(CaseData, Verdict)> {
    let n = fc.n();
    let tt = &fc.taus;
    let contrib = contributing(fc, b, zt)?;
    let direction = find_integrable_direction(fc, b, zt)?;
    let xi_bb = xi_diag(fc, b);
    let subcase = if contrib.len() >= 2 { Subcase::II } else { Subcase::I };
    let b_coeff = direction.b_coeff.clone();
    let mut ratio_ok = true;
    for &a in contrib.iter().skip(1) {
        let r = &tt.tau_h[b][a][a] / &tt.tau_v[b][a][a];
        if !zt.is_zero(&(r - &b_coeff))? {
            ratio_ok = false;
        }
    }
    let c_values: Vec<(usize, Expr)> = contrib.iter().map(|&a| (a, torsion_c(fc, b, a))).collect();
    let c = c_values.first().map(|x| x.1.clone()).unwrap_or_else(Expr::zero);
    let mut c_consistent = true;
    for (_, ca) in c_values.iter().skip(1) {
        if !zt.is_zero(&(ca - &c))? {
            c_consistent = false;
        }
    }
    let mut data = CaseData {
        b,
        subcase,
        contributing: contrib.clone(),
        b_coeff: b_coeff.clone(),
        c: c.clone(),
        c_values,
        ratio_ok,
        c_consistent,
        direction: direction.clone(),
        final_condition_ok: None,
        xi_bb: xi_bb.clone(),
    };
    if contrib.is_empty() {
        let reason = format!("no nonzero tau^{{{}V}}_{{aa}} although distribution {} is non-integrable", b + 1, b + 1);
        return Ok((data, Verdict::Inconclusive { reason }));
    }
    if !ratio_ok || !c_consistent {
        let what = if !ratio_ok { "ratio" } else { "C" };
        let reason = format!("torsion cannot be absorbed: the {what} condition fails across contributing indices");
        return Ok((data, Verdict::NoNonDegenerate { reason }));
    }
    let alpha = direction_form(n, b, &b_coeff);
    let eta = xi_bb.add(&AdaptedForm::phi_h(n, b).scale(&c));
    let d_eta = fc.d(&eta)?;
    if direction.exists {
        let ok = fc.divisibility_test(&d_eta, &alpha, zt)?.divides;
        data.final_condition_ok = Some(ok);
        let verdict = if ok {
            Verdict::Exists {
                freedom: semi_freedom(n - 1, subcase),
                characters: vec![n, n - 1],
            }
        } else {
            Verdict::NoNonDegenerate {
                reason: "d(xi + C phi^H) is not a multiple of the integrable direction; torsion remains".into(),
            }
        };
        return Ok((data, verdict));
    }
    // no integrable direction: solve dp∧α + dη + p dα = 0 for P_b = p r_b
    let d_alpha = fc.d(&alpha)?;
    let solved = solve_p(fc, &alpha, &d_alpha, &d_eta, zt)?;
    data.final_condition_ok = Some(solved.is_some());
    let verdict = match solved {
        Some(_) => Verdict::Exists {
            freedom: semi_freedom(n - 1, subcase),
            characters: vec![n - 1, n - 1],
        },
        None => Verdict::NoNonDegenerate {
            reason: "no integrable direction and no P_b = p r_b solves the remaining torsion equation".into(),
        },
    };
    Ok((data, verdict))
}

fn freedom(k: usize, vars: usize) -> String {
    let f = if k == 1 { "function" } else { "functions" };
    let v = if vars == 1 { "variable" } else { "variables" };
    format!("{k} {f} of {vars} {v}")
}

// subcase ii stresses that the functions are unconstrained by the extra ratio conditions
fn semi_freedom(k: usize, subcase: Subcase) -> String {
    match subcase {
        Subcase::I => freedom(k, 2),
        Subcase::II => freedom(k, 2).replacen(' ', " arbitrary ", 1),
    }
}

/// Pointwise-algebraic solve for `p` in `dp∧α + dη + p dα = 0`,
/// followed by an exact check.
fn solve_p(
    fc: &FrameCalculus,
    alpha: &AdaptedForm,
    d_alpha: &AdaptedForm,
    d_eta: &AdaptedForm,
    zt: &ZeroTester,
) -> Res<Option<Expr>> {
    let n = fc.n();
    let m = 2 * n + 1;
    // unknowns: E_i(p) for each i, then p
    let cols: Vec<AdaptedForm> = (0..m)
        .map(|i| AdaptedForm::basis(n, i).wedge(alpha))
        .chain(std::iter::once(Ok(d_alpha.clone())))
        .collect::<Result<_, _>>()?;
    let rows = AdaptedForm::all_indices(n, 2);
    let mat: Mat = rows
        .iter()
        .map(|idx| {
            let mut row: Vec<Expr> = cols.iter().map(|c| c.coeff(idx)).collect();
            row.push(d_eta.coeff(idx).neg());
            row
        })
        .collect();
    let red = rref(&mat, zt)?;
    if red.pivots.contains(&(m + 1)) {
        return Ok(None);
    }
    let Some(r) = red.pivots.iter().position(|&c| c == m) else {
        return Ok(None);
    };
    // p is pinned only if its row has no free derivative columns
    for j in 0..m {
        if !red.pivots.contains(&j) && !zt.is_zero(&red.rows[r][j])? {
            return Ok(None);
        }
    }
    let p = simplify(&red.rows[r][m + 1]);
    let residual = fc
        .df(&p)
        .wedge(alpha)?
        .add(d_eta)
        .add(&d_alpha.scale(&p));
    Ok(if residual.vanishes(zt)? { Some(p) } else { None })
}

/// Recover `μ` from `dω̃ = μ ∧ ω̃` and test `dμ = 0`.
pub fn pk_limit_check(fc: &FrameCalculus, w: &AdaptedForm, zt: &ZeroTester) -> Res<PkResult> {
    let mu = fc.recover_mu(w, zt)?;
    let closed = match &mu {
        Some(m) => fc.d(m)?.vanishes(zt)?,
        None => false,
    };
    Ok(PkResult { mu, closed })
}

/// Multiplier `g_{ab} = Σ_c r_c φᶜ_a φᶜ_b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Multiplier {
    pub g: Mat,
}

impl Multiplier {
    pub fn eval(&self, p: &Point) -> Result<Mat, crate::symexpr::EvalError> {
        self.g
            .iter()
            .map(|row| row.iter().map(|e| eval_point(e, p).map(|v| Expr::num(f64_to_q(v)))).collect())
            .collect()
    }
}

fn f64_to_q(v: f64) -> crate::symexpr::Q {
    crate::symexpr::Q::from_float(v).unwrap_or_else(|| crate::symexpr::q(0))
}

pub fn r_to_g(es: &EigenSystem, r: &[Expr]) -> Multiplier {
    let n = r.len();
    let phi = &es.coframe;
    let g = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| simplify(&Expr::add((0..n).map(|c| &r[c] * &phi[c][a] * &phi[c][b]).collect())))
                .collect()
        })
        .collect();
    Multiplier { g }
}

fn first_witness(e: &Expr, zt: &ZeroTester) -> Option<String> {
    match zt.test(e) {
        Ok(ZeroVerdict::NonZero { witness, value }) => Some(format!("{value:.6} at {witness}")),
        _ => None,
    }
}

/// Full analysis of one system. `supplied` replaces the symbolic eigen
/// search with caller data (validated).
pub fn classify(s: &Sode, supplied: Option<(Vec<Expr>, Mat)>, opts: &ClassifyOptions) -> ClassificationReport {
    let zt = opts.tester(s);
    match classify_inner(s, supplied, opts, &zt) {
        Ok(r) => r,
        Err(e) => {
            let mut r = ClassificationReport::new(
                s.n,
                CaseLabel::B,
                Verdict::Inconclusive {
                    reason: e.to_string(),
                },
            );
            r.diagnostics.push(format!("analysis stopped: {e}"));
            r
        }
    }
}

fn classify_inner(
    s: &Sode,
    supplied: Option<(Vec<Expr>, Mat)>,
    opts: &ClassifyOptions,
    zt: &ZeroTester,
) -> Res<ClassificationReport> {
    let g = Geometry::new(s.clone());
    let n = g.n();
    if check_phi_identity_case(&g, zt)? {
        return Ok(ClassificationReport::new(
            n,
            CaseLabel::A,
            Verdict::Exists {
                freedom: freedom(n, n + 1),
                characters: Vec::new(),
            },
        ));
    }
    let es = match supplied {
        Some((l, v)) => from_supplied(&g, l, v, zt)?,
        None => match eigensystem(&g, zt) {
            Ok(es) => rescale_eigenvectors(&es, &g, zt)?,
            Err(EigenError::ComplexEigenvalues) => {
                let mut r = ClassificationReport::new(
                    n,
                    CaseLabel::Complex,
                    Verdict::Inconclusive {
                        reason: "complex eigenvalues are detected but not analysed".into(),
                    },
                );
                r.eigen_flags.complex = true;
                return Ok(r);
            }
            Err(EigenError::NonDiagonalisable) => {
                let mut r = ClassificationReport::new(
                    n,
                    CaseLabel::D,
                    Verdict::Inconclusive {
                        reason: "non-diagonalisable Jacobi endomorphism is detected but not analysed".into(),
                    },
                );
                r.eigen_flags.non_diagonalisable = true;
                return Ok(r);
            }
            Err(e) => return Err(e.into()),
        },
    };
    if es.flags.repeated {
        let mut r = ClassificationReport::new(
            n,
            CaseLabel::C,
            Verdict::Inconclusive {
                reason: "repeated eigenvalues are detected but not analysed".into(),
            },
        );
        r.eigen_flags = es.flags.clone();
        r.eigen = Some(es);
        return Ok(r);
    }
    let tt = compute_tau_table(&g, &es);
    let fc = FrameCalculus::new(g, es.clone(), tt);
    let integrable = frobenius_flags(&fc, zt)?;
    let nonint: Vec<usize> = (0..n).filter(|&a| !integrable[a]).collect();
    let q = nonint.len();
    let mut report = ClassificationReport::new(
        n,
        CaseLabel::B,
        Verdict::Inconclusive {
            reason: "undetermined".into(),
        },
    );
    report.eigen_flags = es.flags.clone();
    report.eigen = Some(es);
    report.integrable = integrable.clone();
    report.q = Some(q);
    let cap = opts.max_steps.unwrap_or(n);
    let limit = cap.min(q.max(1));
    report.sequence = sigma_sequence(&fc, limit, zt)?;
    let di_step = report.sequence.iter().find(|m| m.differential_ideal).map(|m| m.step);
    report.di_step = di_step;
    if !report.sequence[0].differential_ideal {
        for a in 0..n {
            for b in (0..n).filter(|&b| b != a) {
                if let Some(w) = first_witness(&fc.taus.tau_g[a][b], zt) {
                    report
                        .diagnostics
                        .push(format!("tau^{{{}G}}_{{{}}} != 0: {w}", a + 1, b + 1));
                }
            }
        }
    }
    let Some(step) = di_step else {
        report.verdict = if limit < q.max(1) {
            Verdict::Inconclusive {
                reason: format!("no differential ideal within max_steps = {cap}"),
            }
        } else {
            Verdict::NoNonDegenerate {
                reason: if q <= 1 {
                    "q-theorem (q=1): Σ¹ does not contain a differential ideal".to_string()
                } else {
                    format!("q-theorem (q={q}): Σ¹..Σ{} does not contain a differential ideal", superscript(q))
                },
            }
        };
        return Ok(report);
    };
    let last = report.sequence.last().cloned().expect("nonempty sequence");
    let missing = degenerate_check(&last, n, zt)?;
    if !missing.is_empty() {
        let names: Vec<String> = missing.iter().map(|a| format!("omega^{}", a + 1)).collect();
        report.verdict = Verdict::NoNonDegenerate {
            reason: format!(
                "degenerate-module proposition: {} missing from the final differential ideal",
                names.join(", ")
            ),
        };
        return Ok(report);
    }
    if q == 0 {
        report.verdict = Verdict::Exists {
            freedom: freedom(n, 2),
            characters: Vec::new(),
        };
        return Ok(report);
    }
    if q == 1 && step == 1 {
        let b = nonint[0];
        for a in 0..n {
            if !zt.is_zero(&fc.taus.tau_g[a][a])? {
                report.verdict = Verdict::Inconclusive {
                    reason: format!(
                        "tau^{{{}G}}_{{{}}} is nonzero; rescale the eigenvectors first",
                        a + 1,
                        a + 1
                    ),
                };
                return Ok(report);
            }
        }
        let (cd, verdict) = analyze_semi_separable(&fc, b, zt)?;
        report.semi_separable = Some(cd);
        report.verdict = verdict;
        return Ok(report);
    }
    // decoupled factors of the final ideal
    let forms = last.forms(n);
    let mut pk = Vec::new();
    let mut singles = 0;
    let mut decoupled = true;
    for (r, w) in last.generators.iter().zip(&forms) {
        let support = r.iter().filter(|c| !c.is_zero()).count();
        let res = pk_limit_check(&fc, w, zt)?;
        if res.mu.is_none() {
            decoupled = false;
            break;
        }
        if support == 1 {
            singles += 1;
        } else {
            pk.push((r.clone(), res));
        }
    }
    if decoupled && !pk.is_empty() {
        let all_closed = pk.iter().all(|(_, p)| p.closed);
        report.pk = pk;
        report.verdict = if all_closed {
            Verdict::Exists {
                freedom: format!("{} (each non-integrable factor fixed up to a constant)", freedom(singles, 2)),
                characters: Vec::new(),
            }
        } else {
            Verdict::NoNonDegenerate {
                reason: "PK theorem: dmu != 0 on a one-generator factor".into(),
            }
        };
        return Ok(report);
    }
    report.verdict = Verdict::Inconclusive {
        reason: format!(
            "q={q} with a differential ideal at step {step}: analysis beyond the differential-ideal stage is not implemented"
        ),
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::parse_expr;

    fn sode(coords: &[&str], forces: &[&str]) -> Sode {
        Sode::parse(coords, forces).unwrap()
    }

    #[test]
    fn identity_case() {
        let r = classify(&sode(&["x", "y"], &["-x", "-y"]), None, &ClassifyOptions::default());
        assert_eq!(r.case, CaseLabel::A);
        assert!(matches!(&r.verdict, Verdict::Exists { freedom, .. } if freedom == "2 functions of 3 variables"));
        let r = classify(&sode(&["x", "y"], &["t*x", "t*y"]), None, &ClassifyOptions::default());
        assert_eq!(r.case, CaseLabel::A);
    }

    #[test]
    fn uncoupled_oscillators_separate() {
        let r = classify(&sode(&["x", "y"], &["-x", "-4*y"]), None, &ClassifyOptions::default());
        assert_eq!(r.case, CaseLabel::B);
        assert_eq!(r.q, Some(0));
        assert_eq!(r.integrable, vec![true, true]);
        assert!(r.sequence[0].differential_ideal);
        assert!(matches!(r.verdict, Verdict::Exists { .. }));
    }

    #[test]
    fn jordan_block_is_case_d() {
        // Φ = [[0, 1], [0, 0]]
        let r = classify(&sode(&["x", "y"], &["-y", "0"]), None, &ClassifyOptions::default());
        assert_eq!(r.case, CaseLabel::D);
        assert!(matches!(r.verdict, Verdict::Inconclusive { .. }));
    }

    #[test]
    fn rotation_is_complex() {
        let r = classify(&sode(&["x", "y"], &["-y", "x"]), None, &ClassifyOptions::default());
        assert_eq!(r.case, CaseLabel::Complex);
    }

    fn free_line() -> FrameCalculus {
        let s = sode(&["x"], &["0"]);
        let g = Geometry::new(s);
        let zt = ClassifyOptions::default().tester(&g.sode);
        let es = from_supplied(&g, vec![Expr::zero()], vec![vec![Expr::one()]], &zt).unwrap();
        let tt = compute_tau_table(&g, &es);
        FrameCalculus::new(g, es, tt)
    }

    #[test]
    fn pk_exact_multiplier() {
        let fc = free_line();
        let zt = ClassifyOptions::default().tester(&fc.geometry.sode);
        let w = AdaptedForm::omega(1, 0).scale(&Expr::sym("t"));
        let res = pk_limit_check(&fc, &w, &zt).unwrap();
        let mu = res.mu.unwrap();
        assert!(zt.is_zero(&(mu.coeff(&[0]) - parse_expr("1/t", &["t"]).unwrap())).unwrap());
        assert!(res.closed);
    }

    #[test]
    fn pk_non_closed_mu() {
        let fc = free_line();
        let zt = ClassifyOptions::default().tester(&fc.geometry.sode);
        let w = AdaptedForm::omega(1, 0).scale(&parse_expr("exp(t*dx)", &["t", "dx"]).unwrap());
        let res = pk_limit_check(&fc, &w, &zt).unwrap();
        assert!(res.mu.is_some());
        assert!(!res.closed);
    }

    #[test]
    fn identity_coframe_multiplier() {
        let s = sode(&["x", "y"], &["-x", "-4*y"]);
        let g = Geometry::new(s);
        let zt = ClassifyOptions::default().tester(&g.sode);
        let id = vec![vec![Expr::one(), Expr::zero()], vec![Expr::zero(), Expr::one()]];
        let es = from_supplied(&g, vec![Expr::int(1), Expr::int(4)], id.clone(), &zt).unwrap();
        assert_eq!(r_to_g(&es, &[Expr::one(), Expr::one()]).g, id);
    }

    #[test]
    fn generator_printing() {
        let r = vec![Expr::one(), Expr::int(-1), Expr::zero()];
        assert_eq!(generator_string(&r), "omega^1 - omega^2");
        assert_eq!(superscript(12), "¹²");
    }
}
