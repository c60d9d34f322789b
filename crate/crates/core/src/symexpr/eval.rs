//! Floating-point evaluation.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::ToPrimitive;
use thiserror::Error;

use super::expr::{q_to_f64, Expr, Func, Node};

/// Real values for the symbols in scope.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Point(pub BTreeMap<Arc<str>, f64>);

impl Point {
    pub fn new() -> Point {
        Point::default()
    }

    pub fn with(mut self, name: &str, v: f64) -> Point {
        self.set(name, v);
        self
    }

    pub fn set(&mut self, name: &str, v: f64) {
        self.0.insert(Arc::from(name), v);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}: {v:.6}")?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("symbol `{0}` has no value")]
    Unbound(String),
    #[error("domain error in `{sub}` at {point}: {what}")]
    Domain {
        sub: String,
        point: String,
        what: &'static str,
    },
}

pub fn eval_point(e: &Expr, p: &Point) -> Result<f64, EvalError> {
    Ok(eval_scaled(e, p)?.0)
}

/// Value together with a magnitude scale (sums contribute the sum of the
/// absolute values of their terms), used for relative tolerances.
pub fn eval_scaled(e: &Expr, p: &Point) -> Result<(f64, f64), EvalError> {
    let dom = |what: &'static str| EvalError::Domain {
        sub: e.to_string(),
        point: p.to_string(),
        what,
    };
    let r = match e.node() {
        Node::Num(v) => {
            let x = q_to_f64(v);
            (x, x.abs())
        }
        Node::Sym(s) => {
            let x = p.get(s).ok_or_else(|| EvalError::Unbound(s.to_string()))?;
            (x, x.abs())
        }
        Node::Add(ts) => {
            let (mut v, mut sc) = (0.0, 0.0);
            for t in ts {
                let (a, b) = eval_scaled(t, p)?;
                v += a;
                sc += b;
            }
            (v, sc)
        }
        Node::Mul(fs) => {
            let (mut v, mut sc) = (1.0, 1.0);
            for f in fs {
                let (a, b) = eval_scaled(f, p)?;
                v *= a;
                sc *= b;
            }
            (v, sc)
        }
        Node::Pow(b, k) => {
            let (bv, bs) = eval_scaled(b, p)?;
            if k.is_integer() {
                let ki = k.to_integer().to_i32().ok_or_else(|| dom("exponent too large"))?;
                if bv == 0.0 && ki < 0 {
                    return Err(dom("division by zero"));
                }
                let sc = if ki > 0 { bs.powi(ki) } else { bv.abs().powi(ki) };
                (bv.powi(ki), sc)
            } else {
                if bv < 0.0 {
                    return Err(dom("fractional power of a negative number"));
                }
                if bv == 0.0 && *k < num_traits::Zero::zero() {
                    return Err(dom("division by zero"));
                }
                let kf = q_to_f64(k);
                let sc = if kf > 0.0 { bs.powf(kf) } else { bv.powf(kf) };
                (bv.powf(kf), sc)
            }
        }
        Node::Func(f, a) => {
            let (av, _) = eval_scaled(a, p)?;
            let v = match f {
                Func::Sin => av.sin(),
                Func::Cos => av.cos(),
                Func::Exp => av.exp(),
                Func::Log => {
                    if av <= 0.0 {
                        return Err(dom("logarithm of a non-positive number"));
                    }
                    av.ln()
                }
            };
            (v, v.abs())
        }
    };
    if !r.0.is_finite() {
        return Err(dom("non-finite value"));
    }
    Ok(r)
}
