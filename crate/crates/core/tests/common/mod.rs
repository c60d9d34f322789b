#![allow(dead_code)]

use std::path::PathBuf;

use varinv::classify::prepare_eigen;
use varinv::eigen::EigenSystem;
use varinv::forms::FrameCalculus;
use varinv::geometry::{Geometry, Sode};
use varinv::io::{read_sode, SodeFile};
use varinv::symexpr::{eval_point, parse_expr, Expr, Point, ZeroTester, DEFAULT_SEED};
use varinv::taucalc::compute_tau_table;

pub const EXAMPLES: [&str; 6] = ["ex1", "ex2", "ex3", "ex4", "ex5", "ex6"];

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.sode"))
}

pub fn load(name: &str) -> SodeFile {
    read_sode(&fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn tester(s: &Sode) -> ZeroTester {
    ZeroTester::new(s.domain.clone(), 32, 1e-9, DEFAULT_SEED)
}

pub fn calculus(name: &str) -> FrameCalculus {
    let sf = load(name);
    let zt = tester(&sf.sode);
    let g = Geometry::new(sf.sode);
    let es: EigenSystem = prepare_eigen(&g, sf.eigen, &zt).unwrap_or_else(|e| panic!("{name}: {e}"));
    let tt = compute_tau_table(&g, &es);
    FrameCalculus::new(g, es, tt)
}

pub fn expr(s: &Sode, text: &str) -> Expr {
    let names = s.symbol_names();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    parse_expr(text, &refs).unwrap_or_else(|e| panic!("{text}: {e}"))
}

/// Max of `|a − b| / (1 + |b|)` over the points.
pub fn max_rel_diff(a: &Expr, b: &Expr, pts: &[Point]) -> f64 {
    pts.iter()
        .map(|p| {
            let x = eval_point(a, p).expect("engine value evaluates");
            let y = eval_point(b, p).expect("reference value evaluates");
            (x - y).abs() / (1.0 + y.abs())
        })
        .fold(0.0, f64::max)
}
