//! Real polynomial helpers and root finding.
//!
//! Coefficient vectors are stored in ascending powers of the backward shift
//! `q^-1`, which is the same as descending powers of `z` for the z-form
//! polynomial. Roots returned by [`roots`] are therefore the values `p` where
//! the factor `(1 - p q^-1)` vanishes.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative tolerance used when pairing numerically computed conjugate roots.
pub const CONJ_TOL: f64 = 1e-8;

pub fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Evaluate `c[0] + c[1] w + c[2] w^2 + ...` at a complex point.
pub fn poly_eval(coeffs: &[f64], w: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * w + c)
}

/// Drop trailing zero coefficients (highest powers of `q^-1`).
pub fn trim_trailing(mut coeffs: Vec<f64>) -> Vec<f64> {
    while coeffs.last() == Some(&0.0) {
        coeffs.pop();
    }
    coeffs
}

/// A real root or a conjugate pair, the smallest unit that keeps polynomial
/// coefficients real.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RootGroup {
    Real(f64),
    /// Stored with nonnegative imaginary part; the conjugate is implied.
    Pair(Complex64),
}

impl RootGroup {
    pub fn roots(&self) -> Vec<Complex64> {
        match *self {
            RootGroup::Real(r) => vec![Complex64::new(r, 0.0)],
            RootGroup::Pair(p) => vec![p, p.conj()],
        }
    }

    pub fn len(&self) -> usize {
        match self {
            RootGroup::Real(_) => 1,
            RootGroup::Pair(_) => 2,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Factor coefficients in `q^-1`: `1 - r q^-1` or
    /// `1 - 2 Re(p) q^-1 + |p|^2 q^-2`.
    pub fn factor(&self) -> Vec<f64> {
        match *self {
            RootGroup::Real(r) => vec![1.0, -r],
            RootGroup::Pair(p) => vec![1.0, -2.0 * p.re, p.norm_sqr()],
        }
    }

    /// Value of the factor at a point `w = q^-1`.
    pub fn factor_at(&self, w: Complex64) -> Complex64 {
        match *self {
            RootGroup::Real(r) => Complex64::new(1.0, 0.0) - w * r,
            RootGroup::Pair(p) => {
                (Complex64::new(1.0, 0.0) - w * p) * (Complex64::new(1.0, 0.0) - w * p.conj())
            }
        }
    }

    pub fn magnitude(&self) -> f64 {
        match *self {
            RootGroup::Real(r) => r.abs(),
            RootGroup::Pair(p) => p.norm(),
        }
    }

    /// Angle in `[0, pi]`; the representative of a pair has `im >= 0`.
    pub fn angle(&self) -> f64 {
        match *self {
            RootGroup::Real(r) => {
                if r < 0.0 {
                    std::f64::consts::PI
                } else {
                    0.0
                }
            }
            RootGroup::Pair(p) => p.arg(),
        }
    }
}

/// Expand a product of root-group factors into real `q^-1` coefficients.
pub fn expand_groups(groups: &[RootGroup]) -> Vec<f64> {
    groups
        .iter()
        .fold(vec![1.0], |acc, g| poly_mul(&acc, &g.factor()))
}

/// Split roots into real singletons and conjugate pairs.
///
/// A root is real when `|im| <= tol * max(1, |root|)`. Complex roots are
/// matched greedily to the nearest conjugate; each matched pair is replaced
/// by its exact symmetrization.
pub fn pair_conjugates(roots: &[Complex64], tol: f64) -> Result<Vec<RootGroup>> {
    let mut groups = Vec::with_capacity(roots.len());
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for &r in roots {
        if !(r.re.is_finite() && r.im.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite root {r}")));
        }
        let scale = r.norm().max(1.0);
        if r.im.abs() <= tol * scale {
            groups.push(RootGroup::Real(r.re));
        } else if r.im > 0.0 {
            upper.push(r);
        } else {
            lower.push(r);
        }
    }
    if upper.len() != lower.len() {
        return Err(Error::Conjugacy(format!(
            "{} roots in the upper half plane but {} in the lower",
            upper.len(),
            lower.len()
        )));
    }
    upper.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut used = vec![false; lower.len()];
    for u in upper {
        let (best, dist) = lower
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, l)| (i, (u - l.conj()).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("counts match");
        if dist > tol * u.norm().max(1.0) {
            return Err(Error::Conjugacy(format!(
                "root {u} has no conjugate partner (nearest mismatch {dist:e})"
            )));
        }
        used[best] = true;
        let sym = (u + lower[best].conj()) * 0.5;
        groups.push(RootGroup::Pair(sym));
    }
    Ok(groups)
}

/// Roots of `c[0] z^n + c[1] z^(n-1) + ... + c[n]`, via eigenvalues of the
/// balanced companion matrix.
pub fn roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let c = trim_trailing(coeffs.to_vec());
    let lead_zeros = c.iter().take_while(|&&x| x == 0.0).count();
    if lead_zeros == c.len() {
        return Err(Error::Degenerate("all-zero polynomial has no roots".into()));
    }
    let c = &c[lead_zeros..];
    let n = c.len() - 1;
    let mut roots = Vec::with_capacity(n);
    // Trailing zeros were trimmed in q^-1; leading zeros here would be roots
    // at infinity and have been stripped above.
    if n == 0 {
        return Ok(roots);
    }
    if n == 1 {
        roots.push(Complex64::new(-c[1] / c[0], 0.0));
        return Ok(roots);
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -c[j + 1] / c[0];
    }
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    balance(&mut m);
    let schur = Schur::try_new(m, f64::EPSILON, 10_000 * n)
        .ok_or_else(|| Error::Degenerate("companion eigenvalue iteration did not converge".into()))?;
    roots.extend(schur.complex_eigenvalues().iter().copied());
    Ok(roots)
}

/// Parlett-Reinsch diagonal similarity balancing (radix 2).
fn balance(a: &mut DMatrix<f64>) {
    const RADIX: f64 = 2.0;
    let n = a.nrows();
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= inv;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}
