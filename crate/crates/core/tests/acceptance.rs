//! One pass/fail line per acceptance criterion.
//!
//! Sub-checks that reproduce a published reference value which the
//! engine and an independent check both contradict are marked `erratum`: they
//! are expected to fail and are shown red, with the reason. Any other failed
//! sub-check, or an erratum check that unexpectedly passes, makes this
//! binary exit non-zero.

mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varinv::classify::{classify, pk_limit_check, r_to_g, CaseLabel, ClassifyOptions, Multiplier, Subcase, Verdict};
use varinv::forms::AdaptedForm;
use varinv::geometry::{Geometry, Sode};
use varinv::symexpr::{eval_point, Expr, Point, ZeroVerdict, DEFAULT_SEED};
use varinv::taucalc::{jacobi_identity_residuals, Entry, JacobiSuite};
use varinv::verify::helmholtz_residuals;

struct Check {
    what: String,
    ok: bool,
    /// Documented discrepancy with the published value; expected to fail.
    erratum: Option<&'static str>,
}

struct Criterion {
    id: u8,
    title: &'static str,
    checks: Vec<Check>,
}

impl Criterion {
    fn new(id: u8, title: &'static str) -> Self {
        Criterion { id, title, checks: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        self.checks.push(Check { what: what.into(), ok, erratum: None });
    }

    fn erratum(&mut self, ok: bool, what: impl Into<String>, why: &'static str) {
        self.checks.push(Check {
            what: what.into(),
            ok,
            erratum: Some(why),
        });
    }

    fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    /// Everything behaves as analysed: plain checks pass, errata fail.
    fn as_expected(&self) -> bool {
        self.checks.iter().all(|c| c.ok != c.erratum.is_some())
    }

    fn print(&self) {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        println!("criterion {}: {status} - {}", self.id, self.title);
        for c in &self.checks {
            let mark = if c.ok { "ok  " } else { "FAIL" };
            match c.erratum {
                Some(why) if !c.ok => println!("    [{mark}] {} (known discrepancy: {why})", c.what),
                Some(_) => println!("    [{mark}] {} (expected to fail, but passed)", c.what),
                None => println!("    [{mark}] {}", c.what),
            }
        }
    }
}

fn opts() -> ClassifyOptions {
    ClassifyOptions::default()
}

fn points(s: &Sode, count: usize) -> Vec<Point> {
    s.domain.sample_points(DEFAULT_SEED ^ 0xacce, count)
}

fn is_exists(v: &Verdict, freedom: &str) -> bool {
    matches!(v, Verdict::Exists { freedom: f, .. } if f == freedom)
}

fn criterion_1() -> Criterion {
    let mut c = Criterion::new(1, "Example 1: case B, Σ¹ not DI, NoNonDegenerate via the q-theorem");
    let sf = load("ex1");
    let r = classify(&sf.sode, sf.eigen, &opts());
    c.check(r.case == CaseLabel::B, format!("case {}", r.case));
    c.check(
        r.sequence.first().is_some_and(|m| !m.differential_ideal),
        "Σ¹ is not a differential ideal",
    );
    let cites = matches!(&r.verdict, Verdict::NoNonDegenerate { reason }
        if reason.contains("q-theorem") && reason.contains("does not contain a differential ideal"));
    c.check(cites, format!("verdict: {}", r.verdict));
    c
}

fn tau_matches(c: &mut Criterion, fc: &varinv::forms::FrameCalculus, listed: &[(Entry, &str)], pts: &[Point], errata: &[(Entry, &'static str)]) {
    let s = &fc.geometry.sode;
    for (e, text) in listed {
        let d = max_rel_diff(fc.taus.get(*e), &expr(s, text), pts);
        let what = format!("{} = {text} (max rel diff {d:.1e})", e.label());
        match errata.iter().find(|x| x.0 == *e) {
            Some((_, why)) => c.erratum(d < 1e-8, what, why),
            None => c.check(d < 1e-8, what),
        }
    }
    // nothing else nonzero among τ^Γ, τ^V, τ^H
    let zt = tester(s);
    let extra: Vec<String> = fc
        .taus
        .nonzero(&zt)
        .unwrap()
        .into_iter()
        .filter(|(e, _)| !matches!(e, Entry::Rho(..)) && !listed.iter().any(|l| l.0 == *e))
        .map(|(e, _)| e.label())
        .collect();
    c.check(extra.is_empty(), format!("no further nonzero tau entries {extra:?}"));
}

fn criterion_2() -> Criterion {
    let mut c = Criterion::new(2, "Example 2: tau table, B_3, C, failed final test, NoNonDegenerate");
    let fc = calculus("ex2");
    let s = fc.geometry.sode.clone();
    let pts = points(&s, 20);
    let listed = [
        (Entry::V(1, 1, 1), "3"),
        (Entry::V(2, 1, 1), "-2*dz*sqrt(dz)"),
        (Entry::H(2, 1, 1), "3*dy/sqrt(dz)"),
        (Entry::V(2, 1, 2), "-1/2"),
        (Entry::V(2, 2, 1), "1"),
        (Entry::V(2, 2, 2), "-1/(2*dz*sqrt(dz))"),
        (Entry::H(2, 2, 2), "-3*dy/(4*dz*sqrt(dz))"),
        (Entry::V(3, 3, 3), "1/(2*sqrt(dw))"),
        (Entry::H(3, 3, 3), "1/(4*sqrt(dw))"),
    ];
    let why = "computed value is -3*dy/(4*dz^(7/2)); confirmed by the structure identities";
    tau_matches(&mut c, &fc, &listed, &pts, &[(Entry::H(2, 2, 2), why)]);

    let sf = load("ex2");
    let r = classify(&sf.sode, sf.eigen, &opts());
    let Some(cd) = &r.semi_separable else {
        c.check(false, format!("semi-separable analysis ran ({})", r.summary()));
        return c;
    };
    c.check(cd.b == 2 && cd.subcase == Subcase::I, format!("b = {}, subcase {}", cd.b + 1, cd.subcase));
    let d = max_rel_diff(&cd.b_coeff, &expr(&s, "-3*dy/(2*dz^2)"), &pts);
    c.check(d < 1e-8, format!("B_3 = {} matches -3*dy/(2*dz^2) ({d:.1e})", cd.b_coeff));
    let d = max_rel_diff(&cd.c, &expr(&s, "3*dy*(dz^2 - 1)/(4*dz^3*sqrt(dz))"), &pts);
    c.erratum(
        d < 1e-8,
        format!("C = {} matches 3*dy*(dz^2-1)/(4*dz^3*sqrt(dz)) ({d:.1e})", cd.c),
        "the published C inherits the tau^{3H}_{33} misprint; with the computed table C = 0",
    );
    c.check(cd.final_condition_ok == Some(false), "final divisibility test fails");
    c.check(
        matches!(r.verdict, Verdict::NoNonDegenerate { .. }),
        format!("verdict: {}", r.verdict),
    );
    c
}

fn criterion_3() -> Criterion {
    let mut c = Criterion::new(3, "Example 3: tau table, subcase i, C = 0, Exists (3, 2)");
    let fc = calculus("ex3");
    let s = fc.geometry.sode.clone();
    let pts = points(&s, 20);
    let listed = [
        (Entry::V(2, 0, 0), "dy/y"),
        (Entry::V(0, 0, 0), "2*dz"),
        (Entry::V(2, 2, 0), "dz"),
        (Entry::H(2, 0, 0), "-(1 + dz^2)/y^2"),
    ];
    tau_matches(&mut c, &fc, &listed, &pts, &[]);
    let sf = load("ex3");
    let r = classify(&sf.sode, sf.eigen, &opts());
    let Some(cd) = &r.semi_separable else {
        c.check(false, format!("semi-separable analysis ran ({})", r.summary()));
        return c;
    };
    c.check(cd.subcase == Subcase::I && cd.b == 2, format!("b = {}, subcase {}", cd.b + 1, cd.subcase));
    c.check(tester(&s).is_zero(&cd.c).unwrap(), format!("C = {}", cd.c));
    c.check(
        matches!(&r.verdict, Verdict::Exists { characters, .. } if characters == &[3, 2])
            && is_exists(&r.verdict, "2 functions of 2 variables"),
        format!("verdict: {} {:?}", r.verdict, r.verdict),
    );
    c
}

fn ex4_r() -> [&'static str; 3] {
    ["1", "2*(2*dy - dx*dz - x^2/2 - z^2/2) + 1", "-2*(2*dy - dx*dz - x^2/2 - z^2/2) + 1"]
}

fn criterion_4() -> Criterion {
    let mut c = Criterion::new(4, "Example 4: exact taus, subcase ii, C_2 = C_3 = 0, direction phi^{1V}, Exists, g-table");
    let fc = calculus("ex4");
    let s = fc.geometry.sode.clone();
    let zt = tester(&s);
    for e in fc.taus.entries() {
        let v = fc.taus.get(e);
        match e {
            Entry::V(0, 1, 1) => c.check(*v == Expr::int(-4), format!("{} = {v} exactly", e.label())),
            Entry::V(0, 2, 2) => c.check(*v == Expr::int(4), format!("{} = {v} exactly", e.label())),
            _ => {
                let verdict = zt.test(v).unwrap();
                if verdict != ZeroVerdict::ProvablyZero {
                    c.check(false, format!("{} = {v} is not provably zero", e.label()));
                }
            }
        }
    }
    c.check(true, "all other entries provably zero");
    let sf = load("ex4");
    let r = classify(&sf.sode, sf.eigen.clone(), &opts());
    if let Some(cd) = &r.semi_separable {
        c.check(cd.subcase == Subcase::II && cd.b == 0, format!("b = {}, subcase {}", cd.b + 1, cd.subcase));
        let cs: Vec<String> = cd.c_values.iter().map(|(a, v)| format!("C_{} = {v}", a + 1)).collect();
        c.check(
            cd.c_values.len() == 2 && cd.c_values.iter().all(|(_, v)| zt.is_zero(v).unwrap()),
            cs.join(", "),
        );
        c.check(
            cd.b_coeff.is_zero() && cd.direction.exists,
            format!("integrable direction phi^{{1V}} + ({})phi^{{1H}}", cd.b_coeff),
        );
    } else {
        c.check(false, "semi-separable analysis ran");
    }
    c.check(
        is_exists(&r.verdict, "2 arbitrary functions of 2 variables"),
        format!("verdict: {}", r.verdict),
    );

    let rs: Vec<Expr> = (1..=3).map(|k| Expr::sym(&format!("r{k}"))).collect();
    let m = r_to_g(r.eigen.as_ref().unwrap(), &rs);
    let mut pts = points(&s, 20);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for p in &mut pts {
        for k in 1..=3 {
            p.set(&format!("r{k}"), rng.gen_range(-2.0..2.0));
        }
    }
    let names: Vec<String> = s.symbol_names().into_iter().chain((1..=3).map(|k| format!("r{k}"))).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let p = |t: &str| varinv::symexpr::parse_expr(t, &refs).unwrap();
    let table = [
        (0, 0, "dz^2/4*r1 + (r2 + r3)/16"),
        (1, 1, "r1"),
        (2, 2, "dx^2/4*r1 + (r2 + r3)/16"),
        (0, 1, "-dz/2*r1"),
        (0, 2, "dx*dz/4*r1 - (r2 + r3)/16"),
        (1, 2, "-dx/2*r1"),
    ];
    for (i, j, text) in table {
        let d = max_rel_diff(&m.g[i][j], &p(text), &pts);
        let what = format!("g_{}{} = {text} ({d:.1e})", i + 1, j + 1);
        if (i, j) == (0, 2) {
            c.erratum(
                d < 1e-9,
                what,
                "the stated eigenvectors give dx*dz/4*r1 + (r3 - r2)/16, which passes the Helmholtz oracle",
            );
        } else {
            c.check(d < 1e-9, what);
        }
    }
    c
}

fn criterion_5() -> Criterion {
    let mut c = Criterion::new(5, "Example 4 oracle: G_1 = r2~ = r3~ = 1 passes all four Helmholtz families");
    let fc = calculus("ex4");
    let s = fc.geometry.sode.clone();
    let r: Vec<Expr> = ex4_r().iter().map(|t| expr(&s, t)).collect();
    let m = r_to_g(&fc.eigen, &r);
    let res = helmholtz_residuals(&fc.geometry, &m, 50, DEFAULT_SEED).unwrap();
    for (name, v) in res.families() {
        c.check(v < 1e-8, format!("{name} residual {v:.1e}"));
    }
    c.check(res.min_abs_det > 1e-6, format!("min |det g| = {:.3e}", res.min_abs_det));
    c
}

fn criterion_6() -> Criterion {
    let mut c = Criterion::new(6, "Example 5: q = 2 and a differential ideal at step 1");
    let sf = load("ex5");
    let r = classify(&sf.sode, sf.eigen, &opts());
    c.check(r.q == Some(2), format!("q = {:?}", r.q));
    c.check(r.di_step == Some(1), format!("DI step {:?}", r.di_step));
    c.check(r.integrable == vec![false, false, true], format!("integrable {:?}", r.integrable));
    c.check(r.summary().contains("q=2") && r.summary().contains("Σ¹ DI"), r.summary());
    c
}

fn criterion_7() -> Criterion {
    let mut c = Criterion::new(7, "Example 6: Σ² = span{ω¹−ω², ω³} DI, closed μ, Helmholtz on the Cartan form");
    let sf = load("ex6");
    let r = classify(&sf.sode, sf.eigen, &opts());
    c.check(r.sequence.first().is_some_and(|m| !m.differential_ideal), "Σ¹ is not DI");
    let gens: Vec<String> = r
        .sequence
        .get(1)
        .map(|m| m.generators.iter().map(|g| varinv::classify::generator_string(g)).collect())
        .unwrap_or_default();
    c.check(
        r.di_step == Some(2) && gens == ["omega^1 - omega^2", "omega^3"],
        format!("Σ² = span{gens:?}, DI step {:?}", r.di_step),
    );
    let fc = calculus("ex6");
    let s = fc.geometry.sode.clone();
    let zt = tester(&s);
    let w = AdaptedForm::omega(3, 0).sub(&AdaptedForm::omega(3, 1));
    let pk = pk_limit_check(&fc, &w, &zt).unwrap();
    match &pk.mu {
        Some(mu) => {
            let coeff = mu.coeff(&[0]);
            let only_dt = mu.terms().keys().all(|k| k == &vec![0]);
            let pts = points(&s, 20);
            let d = max_rel_diff(&coeff, &expr(&s, "1/(4*t)"), &pts);
            c.erratum(
                only_dt && d < 1e-8,
                format!("mu = ({coeff}) dt equals dt/(4t)"),
                "d(ω¹−ω²) = −dt/(2t)∧(ω¹−ω²) for the stated eigenvectors; an independent Helmholtz check agrees",
            );
            c.check(pk.closed, "dmu = 0");
        }
        None => c.check(false, "mu recovered"),
    }
    for (label, r3, erratum) in [
        ("published Cartan form t^(-1/4)(ω¹−ω²) + ω³", "t^(-1/4)", true),
        ("corrected Cartan form t^(1/2)(ω¹−ω²) + ω³", "sqrt(t)", false),
    ] {
        let g = expr(&s, r3);
        let m = r_to_g(&fc.eigen, &[g.clone(), g.neg(), Expr::one()]);
        let res = helmholtz_residuals(&fc.geometry, &m, 25, DEFAULT_SEED).unwrap();
        let ok = res.max() < 1e-8 && res.min_abs_det > 1e-8;
        let what = format!("{label}: max residual {:.1e}, min |det g| {:.1e}", res.max(), res.min_abs_det);
        if erratum {
            c.erratum(ok, what, "violates Γ-compatibility; the consistent scaling is t^(1/2)");
        } else {
            c.check(ok, what);
        }
    }
    c
}

fn random_one_form(s: &Sode, rng: &mut ChaCha8Rng) -> AdaptedForm {
    let names = s.symbol_names();
    let n = s.n;
    let coeffs: Vec<Expr> = (0..2 * n + 1)
        .map(|_| {
            let terms = (0..3)
                .map(|_| {
                    let k = rng.gen_range(-3i64..=3);
                    let a = Expr::sym(&names[rng.gen_range(0..names.len())]);
                    let b = Expr::sym(&names[rng.gen_range(0..names.len())]);
                    Expr::int(k) * a * b
                })
                .collect();
            Expr::add(terms)
        })
        .collect();
    AdaptedForm::one_form(n, &coeffs)
}

fn eval_max(f: &AdaptedForm, pts: &[Point]) -> f64 {
    let mut m = 0.0f64;
    for v in f.terms().values() {
        for p in pts {
            m = m.max(eval_point(v, p).unwrap().abs());
        }
    }
    m
}

fn criterion_8() -> Criterion {
    let mut c = Criterion::new(8, "Property suites: identities, d∘d = 0, mutation sensitivity, eigen/duality residuals");
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for name in EXAMPLES {
        let fc = calculus(name);
        let g = &fc.geometry;
        let s = &g.sode;
        let res = jacobi_identity_residuals(g, &fc.taus, &fc.eigen, 25, DEFAULT_SEED).unwrap();
        let worst = res.values().fold(0.0f64, |a, &b| a.max(b));
        c.check(worst < 1e-8, format!("(a) {name}: identity residual {worst:.1e} over {} families", res.len()));

        let pts = points(s, 10);
        let mut dd = 0.0f64;
        for _ in 0..3 {
            let w = random_one_form(s, &mut rng);
            let d2 = fc.d(&fc.d(&w).unwrap()).unwrap();
            dd = dd.max(eval_max(&d2, &pts));
        }
        c.check(dd < 1e-7, format!("(b) {name}: |d(dθ)| = {dd:.1e} on random 1-forms"));

        let suite = JacobiSuite::new(g, &fc.eigen, &fc.taus);
        let pts25 = points(s, 25);
        let mut weakest = f64::INFINITY;
        let mut missed = Vec::new();
        let entries = suite.nonzero_entries();
        for e in &entries {
            let r = suite.residuals(&pts25, Some((*e, 0.1))).unwrap();
            let top = r.values().fold(0.0f64, |a, &b| a.max(b));
            weakest = weakest.min(top);
            if top <= 1e-3 {
                missed.push(e.label());
            }
        }
        c.check(
            missed.is_empty(),
            format!("(c) {name}: {} mutations, weakest trip {weakest:.1e}, missed {missed:?}", entries.len()),
        );

        let n = g.n();
        let es = &fc.eigen;
        let mut eig = 0.0f64;
        let mut dual = 0.0f64;
        for p in &pts25 {
            let ev = |e: &Expr| eval_point(e, p).unwrap();
            for a in 0..n {
                for i in 0..n {
                    let lhs: f64 = (0..n).map(|j| ev(&g.data.phi[i][j]) * ev(&es.vectors[a][j])).sum();
                    eig = eig.max((lhs - ev(&es.lambdas[a]) * ev(&es.vectors[a][i])).abs());
                }
                for b in 0..n {
                    let pair: f64 = (0..n).map(|i| ev(&es.coframe[a][i]) * ev(&es.vectors[b][i])).sum();
                    dual = dual.max((pair - if a == b { 1.0 } else { 0.0 }).abs());
                }
            }
        }
        c.check(eig < 1e-8 && dual < 1e-8, format!("(d) {name}: eigen residual {eig:.1e}, duality {dual:.1e}"));
    }
    c
}

fn criterion_9() -> Criterion {
    let mut c = Criterion::new(9, "Trivial cases: oscillators and free particle are case A; g = δ passes exactly");
    let coords = ["x", "y", "z", "w"];
    for n in 1..=4 {
        for (label, f) in [("oscillator", "-"), ("free particle", "0*")] {
            let forces: Vec<String> = coords[..n].iter().map(|x| format!("{f}{x}")).collect();
            let fr: Vec<&str> = forces.iter().map(String::as_str).collect();
            let s = Sode::parse(&coords[..n], &fr).unwrap();
            let r = classify(&s, None, &opts());
            let g = Geometry::new(s);
            let delta = Multiplier {
                g: (0..n)
                    .map(|i| (0..n).map(|j| if i == j { Expr::one() } else { Expr::zero() }).collect())
                    .collect(),
            };
            let res = helmholtz_residuals(&g, &delta, 10, DEFAULT_SEED).unwrap();
            c.check(
                r.case == CaseLabel::A && res.max() == 0.0 && res.min_abs_det == 1.0,
                format!("{label} n={n}: case {}, {}, residual {:.1e}", r.case, r.verdict, res.max()),
            );
        }
    }
    c
}

fn main() {
    let criteria = [
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
    ];
    for c in &criteria {
        c.print();
    }
    let unexpected: Vec<u8> = criteria.iter().filter(|c| !c.as_expected()).map(|c| c.id).collect();
    let passed = criteria.iter().filter(|c| c.passed()).count();
    println!("{passed}/{} criteria pass; unexpected outcomes in {unexpected:?}", criteria.len());
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}
