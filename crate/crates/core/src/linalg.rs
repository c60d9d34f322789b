//! Small symbolic and numeric matrix routines.

use nalgebra::DMatrix;

use crate::symexpr::{
    eval_point, eval_scaled, is_zero_symbolic, simplify, EvalError, Expr, Point, ZeroTestError,
    ZeroTester, ZeroVerdict,
};

/// Row-major matrix of expressions.
pub type Mat = Vec<Vec<Expr>>;

pub fn zeros(r: usize, c: usize) -> Mat {
    vec![vec![Expr::zero(); c]; r]
}

pub fn identity(n: usize) -> Mat {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { Expr::one() } else { Expr::zero() }).collect())
        .collect()
}

pub fn transpose(m: &Mat) -> Mat {
    if m.is_empty() {
        return Vec::new();
    }
    (0..m[0].len()).map(|j| m.iter().map(|row| row[j].clone()).collect()).collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let inner = b.len();
    let cols = if inner == 0 { 0 } else { b[0].len() };
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| simplify(&Expr::add((0..inner).map(|k| &row[k] * &b[k][j]).collect())))
                .collect()
        })
        .collect()
}

pub fn simplify_mat(m: &Mat) -> Mat {
    m.iter().map(|r| r.iter().map(simplify).collect()).collect()
}

/// Determinant by cofactor expansion (n ≤ 4 in practice).
pub fn det(m: &Mat) -> Expr {
    let n = m.len();
    match n {
        0 => Expr::one(),
        1 => simplify(&m[0][0]),
        _ => {
            let mut terms = Vec::new();
            for j in 0..n {
                if m[0][j].is_zero() {
                    continue;
                }
                let minor: Mat = m[1..]
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, e)| e.clone()).collect())
                    .collect();
                let t = &m[0][j] * det(&minor);
                terms.push(if j % 2 == 1 { t.neg() } else { t });
            }
            simplify(&Expr::add(terms))
        }
    }
}

/// Exact inverse via the adjugate; `None` when the determinant simplifies
/// to zero.
pub fn inverse(m: &Mat) -> Option<Mat> {
    let n = m.len();
    let d = det(m);
    if is_zero_symbolic(&d) {
        return None;
    }
    let inv_d = Expr::recip(d);
    let mut out = zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let minor: Mat = m
                .iter()
                .enumerate()
                .filter(|(r, _)| *r != j)
                .map(|(_, row)| {
                    row.iter().enumerate().filter(|(c, _)| *c != i).map(|(_, e)| e.clone()).collect()
                })
                .collect();
            let c = det(&minor);
            let c = if (i + j) % 2 == 1 { c.neg() } else { c };
            out[i][j] = simplify(&(c * &inv_d));
        }
    }
    Some(out)
}

fn trace(m: &Mat) -> Expr {
    Expr::add((0..m.len()).map(|i| m[i][i].clone()).collect())
}

/// Coefficients `c[0..=n]` of the monic characteristic polynomial
/// `det(λI − A) = Σ c_k λ^k`, by Faddeev–LeVerrier.
pub fn charpoly(a: &Mat) -> Vec<Expr> {
    let n = a.len();
    let mut c = vec![Expr::zero(); n + 1];
    c[n] = Expr::one();
    let mut m = zeros(n, n);
    for k in 1..=n {
        let mut next = matmul(a, &m);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] = simplify(&(&row[i] + &c[n - k + 1]));
        }
        m = next;
        let am = matmul(a, &m);
        c[n - k] = simplify(&(trace(&am) * Expr::rat(-1, k as i64)));
    }
    c
}

/// Reduced row-echelon form with pivots chosen by sampling.
#[derive(Clone, Debug)]
pub struct Rref {
    pub rows: Mat,
    pub pivots: Vec<usize>,
}

/// Pick a certainly-nonzero entry among `cands`, preferring small
/// expressions. Entries that vanish at the first sample are zero-tested.
fn choose_pivot(cands: &[(usize, Expr)], zt: &ZeroTester) -> Result<Option<usize>, ZeroTestError> {
    let p0 = zt.points().first();
    let mut best: Option<(usize, usize, f64)> = None;
    for (i, e) in cands {
        if e.is_zero() {
            continue;
        }
        let sure = match p0.map(|p| eval_scaled(e, p)) {
            Some(Ok((v, sc))) if v.abs() > 1e-8 * (1.0 + sc) => Some(v.abs()),
            _ => match zt.test(e)? {
                ZeroVerdict::NonZero { value, .. } => Some(value.abs()),
                _ => None,
            },
        };
        if let Some(v) = sure {
            let key = (e.size(), *i, v);
            let better = match &best {
                None => true,
                Some((s, _, bv)) => key.0 < *s || (key.0 == *s && v > *bv),
            };
            if better {
                best = Some(key);
            }
        }
    }
    Ok(best.map(|b| b.1))
}

pub fn rref(m: &Mat, zt: &ZeroTester) -> Result<Rref, ZeroTestError> {
    let mut rows = simplify_mat(m);
    let nrows = rows.len();
    let ncols = if nrows == 0 { 0 } else { rows[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for j in 0..ncols {
        if r == nrows {
            break;
        }
        let cands: Vec<(usize, Expr)> = (r..nrows).map(|i| (i, rows[i][j].clone())).collect();
        let Some(p) = choose_pivot(&cands, zt)? else {
            continue;
        };
        rows.swap(r, p);
        let inv = Expr::recip(rows[r][j].clone());
        rows[r] = rows[r].iter().map(|e| simplify(&(e * &inv))).collect();
        for i in 0..nrows {
            if i == r || rows[i][j].is_zero() {
                continue;
            }
            let f = rows[i][j].clone();
            let pr = rows[r].clone();
            rows[i] = rows[i]
                .iter()
                .zip(pr.iter())
                .map(|(a, b)| if b.is_zero() { a.clone() } else { simplify(&(a - &(&f * b))) })
                .collect();
        }
        pivots.push(j);
        r += 1;
    }
    Ok(Rref { rows, pivots })
}

/// Basis of the right nullspace, one vector per free column (free
/// coordinate set to 1).
pub fn nullspace(m: &Mat, zt: &ZeroTester) -> Result<Vec<Vec<Expr>>, ZeroTestError> {
    let ncols = m.first().map_or(0, |r| r.len());
    let red = rref(m, zt)?;
    let mut out = Vec::new();
    for f in 0..ncols {
        if red.pivots.contains(&f) {
            continue;
        }
        let mut v = vec![Expr::zero(); ncols];
        v[f] = Expr::one();
        for (r, &pc) in red.pivots.iter().enumerate() {
            v[pc] = simplify(&red.rows[r][f].neg());
        }
        out.push(v);
    }
    Ok(out)
}

pub fn eval_mat(m: &Mat, p: &Point) -> Result<DMatrix<f64>, EvalError> {
    let r = m.len();
    let c = m.first().map_or(0, |x| x.len());
    let mut out = DMatrix::zeros(r, c);
    for i in 0..r {
        for j in 0..c {
            out[(i, j)] = eval_point(&m[i][j], p)?;
        }
    }
    Ok(out)
}

/// Rank by singular values relative to the largest one.
pub fn numeric_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rel_tol * max).count()
}

/// Least-squares solution of `a x = b`.
pub fn lstsq(a: &DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let bv = nalgebra::DVector::from_column_slice(b);
    let svd = a.clone().svd(true, true);
    svd.solve(&bv, 1e-12).ok().map(|x| x.iter().cloned().collect())
}
