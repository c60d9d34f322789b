//! The line-oriented `.sode` system format.
//!
//! ```text
//! dim = 3
//! coords = x, y, z
//! force x = z
//! force y = x*dx + z*dz
//! force z = x
//! domain x = [-0.3, 0.3]
//! exclude dz = 0
//! eigenvalue 1 = 0
//! eigenvector 1 = 0, 1, 0
//! ```
//!
//! `#` starts a comment. Velocities are named `d` + coordinate.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use crate::geometry::{velocity_name, Sode, SodeError};
use crate::linalg::Mat;
use crate::symexpr::{parse_expr, Expr, ParseError};

#[derive(Debug, Error)]
pub enum SodeFileError {
    #[error("cannot read {path}: {err}")]
    Io { path: String, err: std::io::Error },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}, column {col}: {err}")]
    Expr { line: usize, col: usize, err: ParseError },
    #[error(transparent)]
    Sode(#[from] SodeError),
}

#[derive(Clone, Debug)]
pub struct SodeFile {
    pub sode: Sode,
    /// Eigenvalues and eigenvectors (as rows) when the file supplies them.
    pub eigen: Option<(Vec<Expr>, Mat)>,
}

pub fn read_sode(path: &Path) -> Result<SodeFile, SodeFileError> {
    let text = std::fs::read_to_string(path).map_err(|err| SodeFileError::Io {
        path: path.display().to_string(),
        err,
    })?;
    parse_sode(&text)
}

fn syntax(line: usize, msg: impl Into<String>) -> SodeFileError {
    SodeFileError::Syntax { line, msg: msg.into() }
}

struct Expressions<'a> {
    names: Vec<&'a str>,
}

impl Expressions<'_> {
    fn parse(&self, text: &str, line: usize, col: usize) -> Result<Expr, SodeFileError> {
        parse_expr(text, &self.names).map_err(|err| SodeFileError::Expr {
            line,
            col: col + err.offset(),
            err,
        })
    }

    /// Comma-separated list; column offsets are tracked per item.
    fn parse_list(&self, text: &str, line: usize, col: usize) -> Result<Vec<Expr>, SodeFileError> {
        let mut out = Vec::new();
        let mut off = 0;
        for part in split_top_level(text) {
            let lead = part.len() - part.trim_start().len();
            out.push(self.parse(part.trim(), line, col + off + lead)?);
            off += part.len() + 1;
        }
        Ok(out)
    }
}

/// Split on commas outside parentheses.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

pub fn parse_sode(text: &str) -> Result<SodeFile, SodeFileError> {
    let mut dim: Option<usize> = None;
    let mut coords: Option<Vec<String>> = None;
    let mut forces: BTreeMap<String, (usize, usize, String)> = BTreeMap::new();
    let mut domains: Vec<(usize, String, String)> = Vec::new();
    let mut excludes: Vec<(usize, usize, String)> = Vec::new();
    let mut evals: BTreeMap<usize, (usize, usize, String)> = BTreeMap::new();
    let mut evecs: BTreeMap<usize, (usize, usize, String)> = BTreeMap::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let Some(eq) = body.find('=') else {
            return Err(syntax(line, "expected `key = value`"));
        };
        let lhs = body[..eq].trim();
        let rhs_col = eq + 1 + (body[eq + 1..].len() - body[eq + 1..].trim_start().len()) + 1;
        let rhs = body[eq + 1..].trim().to_string();
        let mut words = lhs.split_whitespace();
        let key = words.next().unwrap_or("");
        let arg = words.next();
        if words.next().is_some() {
            return Err(syntax(line, format!("unexpected text in `{lhs}`")));
        }
        match (key, arg) {
            ("dim", None) => {
                dim = Some(rhs.parse().map_err(|_| syntax(line, format!("bad dimension `{rhs}`")))?);
            }
            ("coords", None) => {
                coords = Some(rhs.split(',').map(|c| c.trim().to_string()).collect());
            }
            ("force", Some(c)) => {
                if forces.insert(c.to_string(), (line, rhs_col, rhs)).is_some() {
                    return Err(syntax(line, format!("second force for `{c}`")));
                }
            }
            ("domain", Some(s)) => domains.push((line, s.to_string(), rhs)),
            ("exclude", Some(s)) => {
                // `exclude e = 0` declares the locus e = 0; `exclude a = b` means a − b = 0
                let col = raw.find(s).unwrap_or(0) + 1;
                let locus = if rhs == "0" { s.to_string() } else { format!("({s}) - ({rhs})") };
                excludes.push((line, col, locus));
            }
            ("eigenvalue", Some(k)) | ("eigenvector", Some(k)) => {
                let idx: usize = k.parse().map_err(|_| syntax(line, format!("bad index `{k}`")))?;
                if idx == 0 {
                    return Err(syntax(line, "eigen indices start at 1"));
                }
                let map = if key == "eigenvalue" { &mut evals } else { &mut evecs };
                if map.insert(idx, (line, rhs_col, rhs)).is_some() {
                    return Err(syntax(line, format!("second {key} {idx}")));
                }
            }
            _ => return Err(syntax(line, format!("unknown directive `{lhs}`"))),
        }
    }

    let coords = coords.ok_or_else(|| syntax(0, "missing `coords` line"))?;
    if let Some(d) = dim {
        if d != coords.len() {
            return Err(syntax(0, format!("dim = {d} but {} coordinates", coords.len())));
        }
    }
    let names: Vec<String> = std::iter::once("t".to_string())
        .chain(coords.iter().cloned())
        .chain(coords.iter().map(|c| velocity_name(c)))
        .collect();
    let ex = Expressions {
        names: names.iter().map(String::as_str).collect(),
    };
    let mut fs = Vec::new();
    for c in &coords {
        let (line, col, txt) = forces
            .remove(c)
            .ok_or_else(|| syntax(0, format!("missing force for `{c}`")))?;
        fs.push(ex.parse(&txt, line, col)?);
    }
    if let Some((c, (line, _, _))) = forces.into_iter().next() {
        return Err(syntax(line, format!("force for undeclared coordinate `{c}`")));
    }
    let mut sode = Sode::new(coords.clone(), fs)?;
    for (line, s, rhs) in domains {
        let inner = rhs
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| syntax(line, "interval must look like [a, b]"))?;
        let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
        let [lo, hi] = parts[..] else {
            return Err(syntax(line, "interval must have two ends"));
        };
        let lo: f64 = lo.parse().map_err(|_| syntax(line, format!("bad number `{lo}`")))?;
        let hi: f64 = hi.parse().map_err(|_| syntax(line, format!("bad number `{hi}`")))?;
        sode = sode.with_interval(&s, lo, hi).map_err(|e| syntax(line, e.to_string()))?;
    }
    for (line, col, locus) in excludes {
        sode = sode.with_exclude(ex.parse(&locus, line, col)?);
    }

    let n = coords.len();
    let eigen = if evals.is_empty() && evecs.is_empty() {
        None
    } else {
        let mut lambdas = Vec::new();
        let mut vectors = Vec::new();
        for k in 1..=n {
            let (line, col, txt) = evals
                .get(&k)
                .ok_or_else(|| syntax(0, format!("missing eigenvalue {k}")))?;
            lambdas.push(ex.parse(txt, *line, *col)?);
            let (line, col, txt) = evecs
                .get(&k)
                .ok_or_else(|| syntax(0, format!("missing eigenvector {k}")))?;
            let v = ex.parse_list(txt, *line, *col)?;
            if v.len() != n {
                return Err(syntax(*line, format!("eigenvector {k} has {} components, expected {n}", v.len())));
            }
            vectors.push(v);
        }
        if let Some(k) = evals.keys().chain(evecs.keys()).find(|&&k| k > n) {
            return Err(syntax(0, format!("eigen index {k} exceeds dim {n}")));
        }
        Some((lambdas, vectors))
    };
    Ok(SodeFile { sode, eigen })
}
