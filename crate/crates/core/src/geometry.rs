//! The SODE field, its nonlinear connection, Jacobi endomorphism and
//! curvature, and the frame derivations Γ, H_a, V_a.

use thiserror::Error;

use crate::linalg::Mat;
use crate::symexpr::{diff_raw, parse_expr, simplify, Domain, Expr, ParseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SodeError {
    #[error("a system needs at least one coordinate")]
    Empty,
    #[error("{coords} coordinates but {forces} forces")]
    ForceCount { coords: usize, forces: usize },
    #[error("duplicate or reserved coordinate name `{0}`")]
    BadCoordinate(String),
    #[error("force for `{coord}` uses undeclared symbol `{name}`")]
    UnknownSymbol { coord: String, name: String },
    #[error("empty sampling interval for `{0}`")]
    BadInterval(String),
    #[error("force for `{coord}`: {err}")]
    Parse { coord: String, err: ParseError },
}

/// `ẍᵃ = Fᵃ(t, x, ẋ)` with velocity of coordinate `q` named `dq`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sode {
    pub n: usize,
    pub coords: Vec<String>,
    pub forces: Vec<Expr>,
    pub domain: Domain,
}

pub fn velocity_name(coord: &str) -> String {
    format!("d{coord}")
}

impl Sode {
    pub fn new(coords: Vec<String>, forces: Vec<Expr>) -> Result<Sode, SodeError> {
        if coords.is_empty() {
            return Err(SodeError::Empty);
        }
        if coords.len() != forces.len() {
            return Err(SodeError::ForceCount {
                coords: coords.len(),
                forces: forces.len(),
            });
        }
        let mut names = vec!["t".to_string()];
        for c in &coords {
            let ok = !c.is_empty()
                && c.chars().next().is_some_and(|ch| ch.is_ascii_alphabetic() || ch == '_')
                && c.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_');
            if !ok || names.contains(c) || names.contains(&velocity_name(c)) {
                return Err(SodeError::BadCoordinate(c.clone()));
            }
            names.push(c.clone());
            names.push(velocity_name(c));
        }
        for (c, f) in coords.iter().zip(&forces) {
            if let Some(bad) = f.symbols().iter().find(|s| !names.iter().any(|n| n == &***s)) {
                return Err(SodeError::UnknownSymbol {
                    coord: c.clone(),
                    name: bad.to_string(),
                });
            }
        }
        let n = coords.len();
        let mut s = Sode {
            n,
            coords,
            forces: forces.iter().map(simplify).collect(),
            domain: Domain::new(Vec::new()),
        };
        s.domain = Domain::new(s.symbol_names());
        Ok(s)
    }

    /// Parse force strings against the coordinate names.
    pub fn parse(coords: &[&str], forces: &[&str]) -> Result<Sode, SodeError> {
        let names: Vec<String> = std::iter::once("t".to_string())
            .chain(coords.iter().map(|c| c.to_string()))
            .chain(coords.iter().map(|c| velocity_name(c)))
            .collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let mut fs = Vec::new();
        for (c, f) in coords.iter().zip(forces) {
            fs.push(parse_expr(f, &refs).map_err(|err| SodeError::Parse {
                coord: c.to_string(),
                err,
            })?);
        }
        Sode::new(coords.iter().map(|c| c.to_string()).collect(), fs)
    }

    pub fn with_interval(mut self, name: &str, lo: f64, hi: f64) -> Result<Sode, SodeError> {
        if lo.partial_cmp(&hi).is_none_or(|o| o.is_gt()) || !self.symbol_names().iter().any(|s| s == name) {
            return Err(SodeError::BadInterval(name.to_string()));
        }
        self.domain.intervals.insert(name.to_string(), (lo, hi));
        Ok(self)
    }

    pub fn with_exclude(mut self, locus: Expr) -> Sode {
        self.domain.excludes.push(locus);
        self
    }

    /// `t`, the coordinates, then the velocities.
    pub fn symbol_names(&self) -> Vec<String> {
        std::iter::once("t".to_string())
            .chain(self.coords.iter().cloned())
            .chain(self.coords.iter().map(|c| velocity_name(c)))
            .collect()
    }

    pub fn x_name(&self, a: usize) -> &str {
        &self.coords[a]
    }

    pub fn u_name(&self, a: usize) -> String {
        velocity_name(&self.coords[a])
    }

    pub fn x(&self, a: usize) -> Expr {
        Expr::sym(&self.coords[a])
    }

    pub fn u(&self, a: usize) -> Expr {
        Expr::sym(&self.u_name(a))
    }
}

/// Unsimplified `Γ(f)`.
fn gamma_raw(s: &Sode, f: &Expr) -> Expr {
    let mut terms = vec![diff_raw(f, "t")];
    for a in 0..s.n {
        terms.push(s.u(a) * diff_raw(f, s.x_name(a)));
        terms.push(&s.forces[a] * diff_raw(f, &s.u_name(a)));
    }
    Expr::add(terms)
}

pub fn gamma_apply(s: &Sode, f: &Expr) -> Expr {
    simplify(&gamma_raw(s, f))
}

pub fn connection_coefficients(s: &Sode) -> Mat {
    (0..s.n)
        .map(|a| {
            (0..s.n)
                .map(|b| simplify(&(diff_raw(&s.forces[a], &s.u_name(b)) * Expr::rat(-1, 2))))
                .collect()
        })
        .collect()
}

pub fn jacobi_endomorphism(s: &Sode) -> Mat {
    let conn = connection_coefficients(s);
    phi_from_conn(s, &conn)
}

fn phi_from_conn(s: &Sode, conn: &Mat) -> Mat {
    let n = s.n;
    (0..n)
        .map(|a| {
            (0..n)
                .map(|b| {
                    let mut t = vec![diff_raw(&s.forces[a], s.x_name(b)).neg()];
                    for c in 0..n {
                        t.push((&conn[c][b] * &conn[a][c]).neg());
                    }
                    t.push(gamma_raw(s, &conn[a][b]).neg());
                    simplify(&Expr::add(t))
                })
                .collect()
        })
        .collect()
}

/// `R[d][a][b]` = R^d_{ab}.
pub fn curvature_tensor(s: &Sode) -> Vec<Mat> {
    let n = s.n;
    let fu: Vec<Vec<Expr>> = (0..n)
        .map(|c| (0..n).map(|a| diff_raw(&s.forces[c], &s.u_name(a))).collect())
        .collect();
    (0..n)
        .map(|d| {
            (0..n)
                .map(|a| {
                    (0..n)
                        .map(|b| {
                            if a == b {
                                return Expr::zero();
                            }
                            let fd = &s.forces[d];
                            let mixed = diff_raw(&diff_raw(fd, s.x_name(a)), &s.u_name(b))
                                - diff_raw(&diff_raw(fd, s.x_name(b)), &s.u_name(a));
                            let quad = Expr::add(
                                (0..n)
                                    .map(|c| {
                                        &fu[c][a] * diff_raw(&fu[d][c], &s.u_name(b))
                                            - &fu[c][b] * diff_raw(&fu[d][c], &s.u_name(a))
                                    })
                                    .collect(),
                            );
                            simplify(&((mixed + quad * Expr::rat(1, 2)) * Expr::rat(1, 2)))
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Frame {
    H,
    V,
}

/// `H_a(f)` or `V_a(f)` computed from scratch.
pub fn frame_apply(s: &Sode, which: Frame, a: usize, f: &Expr) -> Expr {
    match which {
        Frame::V => simplify(&diff_raw(f, &s.u_name(a))),
        Frame::H => {
            let conn = connection_coefficients(s);
            simplify(&h_raw(s, &conn, a, f))
        }
    }
}

fn h_raw(s: &Sode, conn: &Mat, a: usize, f: &Expr) -> Expr {
    let mut t = vec![diff_raw(f, s.x_name(a))];
    for b in 0..s.n {
        if !conn[b][a].is_zero() {
            t.push((&conn[b][a] * diff_raw(f, &s.u_name(b))).neg());
        }
    }
    Expr::add(t)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometryData {
    pub conn: Mat,
    pub phi: Mat,
    pub curv: Vec<Mat>,
}

/// A system together with its geometry, computed once.
#[derive(Clone, Debug)]
pub struct Geometry {
    pub sode: Sode,
    pub data: GeometryData,
}

impl Geometry {
    pub fn new(sode: Sode) -> Geometry {
        let conn = connection_coefficients(&sode);
        let phi = phi_from_conn(&sode, &conn);
        let curv = curvature_tensor(&sode);
        Geometry {
            sode,
            data: GeometryData { conn, phi, curv },
        }
    }

    pub fn n(&self) -> usize {
        self.sode.n
    }

    pub fn gamma(&self, f: &Expr) -> Expr {
        gamma_apply(&self.sode, f)
    }

    pub fn h(&self, a: usize, f: &Expr) -> Expr {
        simplify(&h_raw(&self.sode, &self.data.conn, a, f))
    }

    pub fn v(&self, a: usize, f: &Expr) -> Expr {
        simplify(&diff_raw(f, &self.sode.u_name(a)))
    }

    /// `Σ_e X^e V_e(f)` for a vertical lift with components `x`.
    pub fn lift_v(&self, x: &[Expr], f: &Expr) -> Expr {
        let t = (0..self.n())
            .filter(|e| !x[*e].is_zero())
            .map(|e| &x[e] * diff_raw(f, &self.sode.u_name(e)))
            .collect();
        simplify(&Expr::add(t))
    }

    /// `Σ_e X^e H_e(f)` for a horizontal lift with components `x`.
    pub fn lift_h(&self, x: &[Expr], f: &Expr) -> Expr {
        let t = (0..self.n())
            .filter(|e| !x[*e].is_zero())
            .map(|e| &x[e] * h_raw(&self.sode, &self.data.conn, e, f))
            .collect();
        simplify(&Expr::add(t))
    }
}
