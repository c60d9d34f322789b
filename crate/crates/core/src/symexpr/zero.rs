//! Randomised zero testing over a sampling domain.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::eval::{eval_scaled, EvalError, Point};
use super::expr::Expr;
use super::simplify::simplify;

pub const DEFAULT_INTERVAL: (f64, f64) = (0.5, 2.0);
pub const DEFAULT_TRIALS: usize = 32;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_SEED: u64 = 0x5eed;

/// Sampling box for the symbols in scope, with loci to keep away from.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    pub symbols: Vec<String>,
    pub intervals: BTreeMap<String, (f64, f64)>,
    /// Each expression `e` declares the locus `e = 0` as excluded.
    pub excludes: Vec<Expr>,
}

impl Domain {
    pub fn new(symbols: Vec<String>) -> Domain {
        Domain {
            symbols,
            intervals: BTreeMap::new(),
            excludes: Vec::new(),
        }
    }

    pub fn interval(&self, s: &str) -> (f64, f64) {
        self.intervals.get(s).copied().unwrap_or(DEFAULT_INTERVAL)
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Option<Point> {
        'attempt: for _ in 0..64 {
            let mut p = Point::new();
            for s in &self.symbols {
                let (lo, hi) = self.interval(s);
                let v = if hi > lo { rng.gen_range(lo..hi) } else { lo };
                p.set(s, v);
            }
            for ex in &self.excludes {
                match eval_scaled(ex, &p) {
                    Ok((v, sc)) if v.abs() > 1e-3 * (1.0 + sc) => {}
                    _ => continue 'attempt,
                }
            }
            return Some(p);
        }
        None
    }

    /// `count` deterministic sample points (fewer if the excluded loci
    /// swallow the box).
    pub fn sample_points(&self, seed: u64, count: usize) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).filter_map(|_| self.draw(&mut rng)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ZeroVerdict {
    ProvablyZero,
    NumericallyZero { checked: usize },
    NonZero { witness: Point, value: f64 },
}

impl ZeroVerdict {
    pub fn is_zero(&self) -> bool {
        !matches!(self, ZeroVerdict::NonZero { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ZeroTestError {
    #[error("zero test of `{expr}` is indeterminate: no sample point evaluates ({last})")]
    Indeterminate { expr: String, last: EvalError },
}

/// Zero tester with a fixed, reproducible pool of sample points.
#[derive(Clone, Debug)]
pub struct ZeroTester {
    pub domain: Domain,
    pub trials: usize,
    pub tol: f64,
    pool: Vec<Point>,
}

impl ZeroTester {
    pub fn new(domain: Domain, trials: usize, tol: f64, seed: u64) -> ZeroTester {
        let trials = trials.max(1);
        let pool = domain.sample_points(seed, trials * 4);
        ZeroTester {
            domain,
            trials,
            tol,
            pool,
        }
    }

    pub fn points(&self) -> &[Point] {
        &self.pool
    }

    pub fn test(&self, e: &Expr) -> Result<ZeroVerdict, ZeroTestError> {
        let s = simplify(e);
        if s.is_zero() {
            return Ok(ZeroVerdict::ProvablyZero);
        }
        let mut checked = 0;
        let mut last = None;
        for p in &self.pool {
            if checked >= self.trials {
                break;
            }
            match eval_scaled(&s, p) {
                Ok((v, sc)) => {
                    checked += 1;
                    if v.abs() > self.tol * (1.0 + sc) {
                        return Ok(ZeroVerdict::NonZero {
                            witness: p.clone(),
                            value: v,
                        });
                    }
                }
                Err(err) => last = Some(err),
            }
        }
        if checked == 0 {
            return Err(ZeroTestError::Indeterminate {
                expr: s.to_string(),
                last: last.unwrap_or(EvalError::Unbound("<empty domain>".into())),
            });
        }
        Ok(ZeroVerdict::NumericallyZero { checked })
    }

    pub fn is_zero(&self, e: &Expr) -> Result<bool, ZeroTestError> {
        Ok(self.test(e)?.is_zero())
    }
}

/// One-shot zero test with the default seed.
pub fn zero_test(
    e: &Expr,
    domain: &Domain,
    trials: usize,
    tol: f64,
) -> Result<ZeroVerdict, ZeroTestError> {
    ZeroTester::new(domain.clone(), trials, tol, DEFAULT_SEED).test(e)
}

#[cfg(test)]
mod tests {
    use super::super::parse::parse_expr;
    use super::*;

    fn dom() -> Domain {
        Domain::new(vec!["x".into(), "y".into()])
    }

    fn p(s: &str) -> Expr {
        parse_expr(s, &["x", "y"]).unwrap()
    }

    #[test]
    fn verdict_kinds() {
        assert_eq!(zero_test(&p("x - x"), &dom(), 32, 1e-9).unwrap(), ZeroVerdict::ProvablyZero);
        assert!(matches!(
            zero_test(&p("sin(x)^2 + cos(x)^2 - 1"), &dom(), 32, 1e-9).unwrap(),
            ZeroVerdict::NumericallyZero { .. }
        ));
        match zero_test(&p("-1/2"), &dom(), 32, 1e-9).unwrap() {
            ZeroVerdict::NonZero { value, .. } => assert_eq!(value, -0.5),
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn excluded_loci_are_avoided() {
        let mut d = dom();
        d.intervals.insert("x".into(), (-1.0, 1.0));
        d.excludes.push(p("x"));
        for pt in d.sample_points(7, 50) {
            assert!(pt.get("x").unwrap().abs() > 1e-3);
        }
    }

    #[test]
    fn indeterminate_when_nothing_evaluates() {
        let mut d = dom();
        d.intervals.insert("x".into(), (-2.0, -1.0));
        let err = zero_test(&p("sqrt(x) - y"), &d, 8, 1e-9).unwrap_err();
        assert!(matches!(err, ZeroTestError::Indeterminate { .. }));
    }
}
