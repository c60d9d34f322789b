//! Eigen-structure of the Jacobi endomorphism and the dual coframe.

use serde::Serialize;
use thiserror::Error;

use crate::geometry::Geometry;
use crate::linalg::{self, charpoly, nullspace, Mat};
use crate::symexpr::{
    eval_scaled, numer_denom, simplify, sqrt_exact, Expr, ZeroTestError, ZeroTester,
};
use crate::taucalc::tau_gamma;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EigenFlags {
    pub real_distinct: bool,
    pub repeated: bool,
    pub complex: bool,
    pub non_diagonalisable: bool,
    pub rescaled_offdiag: bool,
    pub rescaled_diag: bool,
}

/// `vectors[a]` is eigenvector `X_a`; `coframe[a]` is the dual form `φᵃ`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenSystem {
    pub lambdas: Vec<Expr>,
    pub vectors: Mat,
    pub coframe: Mat,
    pub flags: EigenFlags,
    /// Per-index scaling found by [`rescale_eigenvectors`] (`None` when
    /// no monomial scaling was found).
    pub scalings: Vec<Option<Expr>>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigenError {
    #[error("could not find the roots of the characteristic polynomial symbolically ({0})")]
    SymbolicRootFailure(String),
    #[error("the Jacobi endomorphism has complex eigenvalues")]
    ComplexEigenvalues,
    #[error("the Jacobi endomorphism is not diagonalisable")]
    NonDiagonalisable,
    #[error("eigenvector matrix is singular")]
    DegenerateBasis,
    #[error("supplied eigendata fails validation: {0}")]
    Invalid(String),
    #[error(transparent)]
    Zero(#[from] ZeroTestError),
}

/// Inverse-transpose of the eigenvector matrix.
pub fn dual_coframe(vectors: &Mat) -> Result<Mat, EigenError> {
    let inv = linalg::inverse(vectors).ok_or(EigenError::DegenerateBasis)?;
    Ok(linalg::transpose(&inv))
}

fn poly_at(c: &[Expr], x: &Expr) -> Expr {
    let mut acc = Expr::zero();
    for k in (0..c.len()).rev() {
        acc = &acc * x + &c[k];
    }
    simplify(&acc)
}

/// Divide `Σ c_k λ^k` by `(λ − r)`.
fn deflate(c: &[Expr], r: &Expr) -> Vec<Expr> {
    let n = c.len() - 1;
    let mut q = vec![Expr::zero(); n];
    q[n - 1] = c[n].clone();
    for k in (1..n).rev() {
        q[k - 1] = simplify(&(&c[k] + &(r * &q[k])));
    }
    q
}

fn root_candidates(phi: &Mat) -> Vec<Expr> {
    let mut v = vec![Expr::zero()];
    for (i, row) in phi.iter().enumerate() {
        v.push(row[i].clone());
    }
    for (n, d) in [(1, 1), (-1, 1), (2, 1), (-2, 1), (1, 2), (-1, 2), (3, 1), (-3, 1), (4, 1), (-4, 1), (1, 4), (-1, 4)] {
        v.push(Expr::rat(n, d));
    }
    let mut out: Vec<Expr> = Vec::new();
    for e in v {
        if !out.contains(&e) {
            out.push(e);
        }
    }
    out
}

/// Roots with multiplicity.
fn find_roots(phi: &Mat, zt: &ZeroTester) -> Result<Vec<Expr>, EigenError> {
    let mut c = charpoly(phi);
    let mut roots = Vec::new();
    let cands = root_candidates(phi);
    'outer: while c.len() > 3 {
        for r in &cands {
            if zt.is_zero(&poly_at(&c, r))? {
                c = deflate(&c, r);
                roots.push(r.clone());
                continue 'outer;
            }
        }
        return Err(EigenError::SymbolicRootFailure(format!(
            "no rational or diagonal root of a degree-{} factor",
            c.len() - 1
        )));
    }
    if c.len() == 3 {
        // λ² + bλ + c0
        let b = &c[1];
        let c0 = &c[0];
        let disc = simplify(&(b * b - Expr::int(4) * c0));
        if zt.is_zero(&disc)? {
            let r = simplify(&(b * Expr::rat(-1, 2)));
            roots.push(r.clone());
            roots.push(r);
        } else {
            for p in zt.points() {
                if let Ok((v, sc)) = eval_scaled(&disc, p) {
                    if v < -zt.tol * (1.0 + sc) {
                        return Err(EigenError::ComplexEigenvalues);
                    }
                }
            }
            let s = sqrt_exact(&disc).unwrap_or_else(|| Expr::sqrt(disc.clone()));
            for sign in [1, -1] {
                roots.push(simplify(&((b.neg() + Expr::int(sign) * &s) * Expr::rat(1, 2))));
            }
        }
    } else if c.len() == 2 {
        roots.push(simplify(&c[0].neg()));
    }
    Ok(roots)
}

/// Constants ascending, then by printed form.
fn order(a: &Expr, b: &Expr) -> std::cmp::Ordering {
    match (a.as_num(), b.as_num()) {
        (Some(x), Some(y)) => x.cmp(y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.to_string().cmp(&b.to_string()),
    }
}

fn clear_denominators(v: Vec<Expr>) -> Vec<Expr> {
    let mut dens: Vec<Expr> = Vec::new();
    for e in &v {
        let (_, d) = numer_denom(e);
        if !d.is_one() && !dens.contains(&d) {
            dens.push(d);
        }
    }
    if dens.is_empty() {
        return v;
    }
    let m = Expr::mul(dens);
    v.iter().map(|e| simplify(&(e * &m))).collect()
}

fn distinctness(lambdas: &[Expr], zt: &ZeroTester) -> Result<bool, ZeroTestError> {
    for i in 0..lambdas.len() {
        for j in i + 1..lambdas.len() {
            if zt.is_zero(&(&lambdas[i] - &lambdas[j]))? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Symbolic eigen-decomposition of Φ.
pub fn eigensystem(g: &Geometry, zt: &ZeroTester) -> Result<EigenSystem, EigenError> {
    let phi = &g.data.phi;
    let n = g.n();
    let mut roots = find_roots(phi, zt)?;
    roots.sort_by(order);
    // group equal roots
    let mut groups: Vec<(Expr, usize)> = Vec::new();
    for r in roots {
        let mut placed = false;
        for (g0, m) in groups.iter_mut() {
            if zt.is_zero(&(&*g0 - &r))? {
                *m += 1;
                placed = true;
                break;
            }
        }
        if !placed {
            groups.push((r, 1));
        }
    }
    let mut lambdas = Vec::new();
    let mut vectors = Vec::new();
    for (lam, mult) in &groups {
        let shifted: Mat = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            simplify(&(&phi[i][j] - lam))
                        } else {
                            phi[i][j].clone()
                        }
                    })
                    .collect()
            })
            .collect();
        let ns = nullspace(&shifted, zt)?;
        if ns.len() < *mult {
            return Err(EigenError::NonDiagonalisable);
        }
        for v in ns.into_iter().take(*mult) {
            lambdas.push(lam.clone());
            vectors.push(clear_denominators(v));
        }
    }
    let coframe = dual_coframe(&vectors)?;
    let distinct = groups.len() == n;
    Ok(EigenSystem {
        scalings: vec![None; n],
        lambdas,
        vectors,
        coframe,
        flags: EigenFlags {
            real_distinct: distinct,
            repeated: !distinct,
            ..Default::default()
        },
    })
}

/// Accept caller-supplied eigendata after checking `ΦX_a = λ_a X_a`.
pub fn from_supplied(
    g: &Geometry,
    lambdas: Vec<Expr>,
    vectors: Mat,
    zt: &ZeroTester,
) -> Result<EigenSystem, EigenError> {
    let n = g.n();
    if lambdas.len() != n || vectors.len() != n || vectors.iter().any(|v| v.len() != n) {
        return Err(EigenError::Invalid(format!("expected {n} eigenvalues and {n} vectors of length {n}")));
    }
    let lambdas: Vec<Expr> = lambdas.iter().map(simplify).collect();
    let vectors = linalg::simplify_mat(&vectors);
    let phi = &g.data.phi;
    for a in 0..n {
        for b in 0..n {
            let mut t: Vec<Expr> = (0..n).map(|c| &phi[b][c] * &vectors[a][c]).collect();
            t.push((&lambdas[a] * &vectors[a][b]).neg());
            if !zt.is_zero(&Expr::add(t))? {
                return Err(EigenError::Invalid(format!("vector {} is not an eigenvector for {}", a + 1, lambdas[a])));
            }
        }
    }
    let coframe = dual_coframe(&vectors)?;
    let distinct = distinctness(&lambdas, zt)?;
    Ok(EigenSystem {
        scalings: vec![None; n],
        lambdas,
        vectors,
        coframe,
        flags: EigenFlags {
            real_distinct: distinct,
            repeated: !distinct,
            ..Default::default()
        },
    })
}

/// Try to scale each eigenvector so that `τ^{aΓ}_a = 0`, using a monomial
/// ansatz `σ = Π v^{e_v}` over `t`, the coordinates, the velocities and
/// `λ_a`. Off-diagonal `τ^{aΓ}_b` must already vanish.
pub fn rescale_eigenvectors(es: &EigenSystem, g: &Geometry, zt: &ZeroTester) -> Result<EigenSystem, EigenError> {
    let n = g.n();
    let tg = tau_gamma(g, &es.vectors, &es.coframe);
    let mut out = es.clone();
    for a in 0..n {
        for b in 0..n {
            if a != b && !zt.is_zero(&tg[a][b])? {
                out.flags.rescaled_offdiag = false;
                out.flags.rescaled_diag = false;
                return Ok(out);
            }
        }
    }
    out.flags.rescaled_offdiag = true;
    let mut all = true;
    for a in 0..n {
        let tau = &tg[a][a];
        if zt.is_zero(tau)? {
            out.scalings[a] = Some(Expr::one());
            continue;
        }
        match monomial_scaling(g, &es.lambdas[a], tau, zt)? {
            Some(sigma) => {
                out.vectors[a] = es.vectors[a].iter().map(|x| simplify(&(x * &sigma))).collect();
                out.scalings[a] = Some(sigma);
            }
            None => all = false,
        }
    }
    out.flags.rescaled_diag = all;
    out.coframe = dual_coframe(&out.vectors)?;
    Ok(out)
}

/// Solve `Γ(log σ) = −τ` over monomials by least squares on samples, then
/// confirm with an exact check.
fn monomial_scaling(g: &Geometry, lambda: &Expr, tau: &Expr, zt: &ZeroTester) -> Result<Option<Expr>, EigenError> {
    let s = &g.sode;
    let mut vars: Vec<Expr> = vec![Expr::sym("t")];
    for a in 0..s.n {
        vars.push(s.x(a));
        vars.push(s.u(a));
    }
    if lambda.as_num().is_none() {
        vars.push(lambda.clone());
    }
    let feats: Vec<Expr> = vars.iter().map(|v| simplify(&(g.gamma(v) / v))).collect();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for p in zt.points() {
        let vals: Result<Vec<f64>, _> = feats.iter().map(|f| eval_scaled(f, p).map(|x| x.0)).collect();
        let (Ok(vals), Ok((t, _))) = (vals, eval_scaled(tau, p)) else {
            continue;
        };
        rows.push(vals);
        rhs.push(-t);
    }
    if rows.len() < vars.len() {
        return Ok(None);
    }
    let m = nalgebra::DMatrix::from_fn(rows.len(), vars.len(), |i, j| rows[i][j]);
    let Some(sol) = linalg::lstsq(&m, &rhs) else {
        return Ok(None);
    };
    let mut factors = Vec::new();
    let mut check = vec![tau.clone()];
    for (i, e) in sol.iter().enumerate() {
        let k = (e * 4.0).round() as i64;
        if k == 0 {
            continue;
        }
        if k.abs() > 8 {
            return Ok(None);
        }
        let q = crate::symexpr::qr(k, 4);
        factors.push(Expr::pow(vars[i].clone(), q.clone()));
        check.push(Expr::num(q) * &feats[i]);
    }
    if !zt.is_zero(&Expr::add(check))? {
        return Ok(None);
    }
    Ok(Some(simplify(&Expr::mul(factors))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Sode;
    use crate::symexpr::{parse_expr, ZeroTester};

    fn tester(s: &Sode) -> ZeroTester {
        ZeroTester::new(s.domain.clone(), 32, 1e-9, 3)
    }

    #[test]
    fn example_four_eigenvalues() {
        let s = Sode::parse(&["x", "y", "z"], &["z", "x*dx + z*dz", "x"]).unwrap();
        let g = Geometry::new(s.clone());
        let es = eigensystem(&g, &tester(&s)).unwrap();
        let l: Vec<String> = es.lambdas.iter().map(|e| e.to_string()).collect();
        assert_eq!(l, vec!["-1", "0", "1"]);
        assert!(es.flags.real_distinct);
        // X for λ = 0 is proportional to (0, 1, 0)
        assert!(es.vectors[1][0].is_zero() && es.vectors[1][2].is_zero());
    }

    #[test]
    fn example_six_eigenvalues() {
        let s = Sode::parse(&["x", "y", "z"], &["z*t", "0", "x"]).unwrap();
        let g = Geometry::new(s.clone());
        let es = eigensystem(&g, &tester(&s)).unwrap();
        let syms = ["t"];
        let mut want = vec![
            Expr::zero(),
            parse_expr("sqrt(t)", &syms).unwrap(),
            parse_expr("-sqrt(t)", &syms).unwrap(),
        ];
        want.sort();
        let mut got = es.lambdas.clone();
        got.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn oscillator_is_repeated() {
        let s = Sode::parse(&["x", "y"], &["-x", "-y"]).unwrap();
        let g = Geometry::new(s.clone());
        let es = eigensystem(&g, &tester(&s)).unwrap();
        assert!(es.flags.repeated);
        assert_eq!(es.coframe, linalg::identity(2));
    }

    #[test]
    fn rotation_is_complex() {
        let s = Sode::parse(&["x", "y"], &["y", "-x"]).unwrap();
        let g = Geometry::new(s.clone());
        assert_eq!(eigensystem(&g, &tester(&s)), Err(EigenError::ComplexEigenvalues));
    }

    #[test]
    fn shear_is_not_diagonalisable() {
        let s = Sode::parse(&["x", "y"], &["-y", "0"]).unwrap();
        let g = Geometry::new(s.clone());
        assert_eq!(eigensystem(&g, &tester(&s)), Err(EigenError::NonDiagonalisable));
    }

    #[test]
    fn diagonal_coframe() {
        let syms = ["a", "b"];
        let v = vec![
            vec![parse_expr("a", &syms).unwrap(), Expr::zero()],
            vec![Expr::zero(), parse_expr("b", &syms).unwrap()],
        ];
        let c = dual_coframe(&v).unwrap();
        assert_eq!(c[0][0], parse_expr("1/a", &syms).unwrap());
        assert_eq!(c[1][1], parse_expr("1/b", &syms).unwrap());
    }
}
