//! Direct numeric check of the Helmholtz conditions for a candidate
//! multiplier, independent of the exterior-differential-system machinery.

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::classify::Multiplier;
use crate::geometry::Geometry;
use crate::symexpr::{differentiate, eval_point, EvalError, Expr, Point};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("multiplier is {rows}x{cols}, system has dimension {n}")]
    Shape { rows: usize, cols: usize, n: usize },
    #[error("evaluation failed at {point}: {err}")]
    Eval { point: Point, err: EvalError },
    #[error("no admissible sample points in the declared domain")]
    NoPoints,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HelmholtzResiduals {
    pub symmetry: f64,
    pub gamma_compatibility: f64,
    pub phi_symmetry: f64,
    pub velocity_symmetry: f64,
    pub min_abs_det: f64,
    pub points: usize,
}

impl HelmholtzResiduals {
    pub fn max(&self) -> f64 {
        self.families().iter().map(|x| x.1).fold(0.0, f64::max)
    }

    pub fn families(&self) -> [(&'static str, f64); 4] {
        [
            ("symmetry", self.symmetry),
            ("gamma-compatibility", self.gamma_compatibility),
            ("phi-symmetry", self.phi_symmetry),
            ("velocity-symmetry", self.velocity_symmetry),
        ]
    }

    /// All four families below `tol` and `|det g|` above `det_min`.
    pub fn passes(&self, tol: f64, det_min: f64) -> bool {
        self.max() < tol && self.min_abs_det > det_min
    }
}

/// Every family is a list of expressions that must vanish.
struct Conditions {
    symmetry: Vec<Expr>,
    gamma: Vec<Expr>,
    phi: Vec<Expr>,
    velocity: Vec<Expr>,
}

fn conditions(g: &Geometry, m: &Multiplier) -> Conditions {
    let n = g.n();
    let gm = &m.g;
    let conn = &g.data.conn;
    let phi = &g.data.phi;
    let mut c = Conditions {
        symmetry: Vec::new(),
        gamma: Vec::new(),
        phi: Vec::new(),
        velocity: Vec::new(),
    };
    for a in 0..n {
        for b in 0..n {
            c.symmetry.push(&gm[a][b] - &gm[b][a]);
            let mut t = vec![g.gamma(&gm[a][b])];
            let mut p = Vec::new();
            for k in 0..n {
                t.push((&gm[a][k] * &conn[k][b]).neg());
                t.push((&gm[b][k] * &conn[k][a]).neg());
                p.push(&gm[a][k] * &phi[k][b]);
                p.push((&gm[b][k] * &phi[k][a]).neg());
            }
            c.gamma.push(Expr::add(t));
            c.phi.push(Expr::add(p));
            for k in 0..n {
                let uk = g.sode.u_name(k);
                let ub = g.sode.u_name(b);
                c.velocity.push(differentiate(&gm[a][b], &uk) - differentiate(&gm[a][k], &ub));
            }
        }
    }
    c
}

fn eval(e: &Expr, p: &Point) -> Result<f64, VerifyError> {
    eval_point(e, p).map_err(|err| VerifyError::Eval { point: p.clone(), err })
}

/// Max over sampled points of each family, each residual divided by
/// `1 + ‖g‖∞` at the point, and the least `|det g|` seen.
pub fn helmholtz_residuals(g: &Geometry, m: &Multiplier, count: usize, seed: u64) -> Result<HelmholtzResiduals, VerifyError> {
    let points = g.sode.domain.sample_points(seed, count);
    helmholtz_at(g, m, &points)
}

pub fn helmholtz_at(g: &Geometry, m: &Multiplier, points: &[Point]) -> Result<HelmholtzResiduals, VerifyError> {
    let n = g.n();
    if m.g.len() != n || m.g.iter().any(|r| r.len() != n) {
        return Err(VerifyError::Shape {
            rows: m.g.len(),
            cols: m.g.first().map_or(0, Vec::len),
            n,
        });
    }
    if points.is_empty() {
        return Err(VerifyError::NoPoints);
    }
    let c = conditions(g, m);
    let mut out = HelmholtzResiduals {
        symmetry: 0.0,
        gamma_compatibility: 0.0,
        phi_symmetry: 0.0,
        velocity_symmetry: 0.0,
        min_abs_det: f64::INFINITY,
        points: points.len(),
    };
    for p in points {
        let mut vals = Vec::with_capacity(n * n);
        for row in &m.g {
            for e in row {
                vals.push(eval(e, p)?);
            }
        }
        let norm = 1.0 + vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let det = DMatrix::from_row_slice(n, n, &vals).determinant();
        out.min_abs_det = out.min_abs_det.min(det.abs());
        let worst = |fam: &[Expr]| -> Result<f64, VerifyError> {
            let mut w = 0.0f64;
            for e in fam {
                w = w.max(eval(e, p)?.abs() / norm);
            }
            Ok(w)
        };
        out.symmetry = out.symmetry.max(worst(&c.symmetry)?);
        out.gamma_compatibility = out.gamma_compatibility.max(worst(&c.gamma)?);
        out.phi_symmetry = out.phi_symmetry.max(worst(&c.phi)?);
        out.velocity_symmetry = out.velocity_symmetry.max(worst(&c.velocity)?);
    }
    Ok(out)
}
