//! Dense linear algebra over `Z_p`.
//!
//! Determinants, inverses and Sherman-Morrison-Woodbury updates are cubic
//! Gaussian elimination. Degrees of polynomial determinants and adjugate
//! entries are recovered by evaluating at `D + 1` points and interpolating.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<u64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        DenseMatrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn add_at(&mut self, fld: &PrimeField, r: usize, c: usize, v: u64) {
        let i = r * self.cols + c;
        self.data[i] = fld.add(self.data[i], v);
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<u64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn mul(&self, fld: &PrimeField, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::input(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = fld.mul(a, other.get(k, j));
                    out.add_at(fld, i, j, v);
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, fld: &PrimeField, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| fld.add(a, b)).collect(),
        }
    }

    pub fn sub(&self, fld: &PrimeField, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| fld.sub(a, b)).collect(),
        }
    }

    /// Submatrix keeping the listed rows and columns in order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> DenseMatrix {
        let mut m = Self::zeros(rows.len(), cols.len());
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                m.set(i, j, self.get(r, c));
            }
        }
        m
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn random(fld: &PrimeField, rows: usize, cols: usize, rng: &mut Rng) -> DenseMatrix {
        DenseMatrix { rows, cols, data: (0..rows * cols).map(|_| fld.random(rng)).collect() }
    }
}

fn require_square(m: &DenseMatrix) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::input(format!("matrix is {}x{}, not square", m.rows, m.cols)))
    }
}

/// LU factorisation with row pivoting, in place. Returns the determinant and
/// the row permutation, or `None` when singular.
fn lu_in_place(fld: &PrimeField, a: &mut DenseMatrix) -> Option<(u64, Vec<usize>)> {
    let n = a.rows;
    let mut perm: Vec<usize> = (0..n).collect();
    let mut det = 1 % fld.p();
    for k in 0..n {
        let piv = (k..n).find(|&r| a.get(r, k) != 0)?;
        if piv != k {
            for c in 0..n {
                a.data.swap(k * n + c, piv * n + c);
            }
            perm.swap(k, piv);
            det = fld.neg(det);
        }
        let pv = a.get(k, k);
        det = fld.mul(det, pv);
        let inv = fld.inv(pv);
        for r in k + 1..n {
            let factor = fld.mul(a.get(r, k), inv);
            if factor == 0 {
                continue;
            }
            a.set(r, k, factor);
            for c in k + 1..n {
                let v = fld.mul(factor, a.get(k, c));
                let i = r * n + c;
                a.data[i] = fld.sub(a.data[i], v);
            }
        }
    }
    Some((det, perm))
}

fn lu_solve(fld: &PrimeField, lu: &DenseMatrix, perm: &[usize], b: &[u64]) -> Vec<u64> {
    let n = lu.rows;
    let mut x: Vec<u64> = perm.iter().map(|&p| b[p]).collect();
    for r in 0..n {
        let mut s = x[r];
        for c in 0..r {
            s = fld.sub(s, fld.mul(lu.get(r, c), x[c]));
        }
        x[r] = s;
    }
    for r in (0..n).rev() {
        let mut s = x[r];
        for c in r + 1..n {
            s = fld.sub(s, fld.mul(lu.get(r, c), x[c]));
        }
        x[r] = fld.mul(s, fld.inv(lu.get(r, r)));
    }
    x
}

/// Determinant modulo `p`.
pub fn det(fld: &PrimeField, m: &DenseMatrix) -> Result<u64> {
    require_square(m)?;
    let mut a = m.clone();
    Ok(lu_in_place(fld, &mut a).map_or(0, |(d, _)| d))
}

/// Inverse, or `None` for a singular matrix.
pub fn invert(fld: &PrimeField, m: &DenseMatrix) -> Result<Option<DenseMatrix>> {
    require_square(m)?;
    let n = m.rows;
    let mut a = m.clone();
    let mut inv = DenseMatrix::identity(n);
    for k in 0..n {
        let Some(piv) = (k..n).find(|&r| a.get(r, k) != 0) else {
            return Ok(None);
        };
        if piv != k {
            for c in 0..n {
                a.data.swap(k * n + c, piv * n + c);
                inv.data.swap(k * n + c, piv * n + c);
            }
        }
        let pinv = fld.inv(a.get(k, k));
        for c in 0..n {
            a.set(k, c, fld.mul(a.get(k, c), pinv));
            inv.set(k, c, fld.mul(inv.get(k, c), pinv));
        }
        for r in 0..n {
            if r == k {
                continue;
            }
            let factor = a.get(r, k);
            if factor == 0 {
                continue;
            }
            for c in 0..n {
                let va = fld.mul(factor, a.get(k, c));
                a.set(r, c, fld.sub(a.get(r, c), va));
                let vi = fld.mul(factor, inv.get(k, c));
                inv.set(r, c, fld.sub(inv.get(r, c), vi));
            }
        }
    }
    Ok(Some(inv))
}

/// Determinant together with the solution of `m x = e_col` (if nonsingular).
pub fn det_and_solve(fld: &PrimeField, m: &DenseMatrix, col: usize) -> Result<(u64, Option<Vec<u64>>)> {
    require_square(m)?;
    let mut a = m.clone();
    match lu_in_place(fld, &mut a) {
        None => Ok((0, None)),
        Some((d, perm)) => {
            let mut e = vec![0; m.rows];
            e[col] = 1;
            Ok((d, Some(lu_solve(fld, &a, &perm, &e))))
        }
    }
}

/// Given `inv = A^{-1}` return `(A + U V^T)^{-1}`, or `None` when the
/// updated matrix is singular, i.e. `det(I + V^T A^{-1} U) = 0`.
pub fn smw_update(
    fld: &PrimeField,
    inv: &DenseMatrix,
    u: &DenseMatrix,
    v: &DenseMatrix,
) -> Result<Option<DenseMatrix>> {
    require_square(inv)?;
    let n = inv.rows;
    if u.rows != n || v.rows != n || u.cols != v.cols {
        return Err(Error::input(format!(
            "update shapes {}x{} and {}x{} do not match order {n}",
            u.rows, u.cols, v.rows, v.cols
        )));
    }
    let k = u.cols;
    if k == 0 {
        return Ok(Some(inv.clone()));
    }
    let ainv_u = inv.mul(fld, u)?;
    let vt = v.transpose();
    let vt_ainv = vt.mul(fld, inv)?;
    let cap = DenseMatrix::identity(k).add(fld, &vt.mul(fld, &ainv_u)?);
    let Some(cap_inv) = invert(fld, &cap)? else {
        return Ok(None);
    };
    let corr = ainv_u.mul(fld, &cap_inv)?.mul(fld, &vt_ainv)?;
    Ok(Some(inv.sub(fld, &corr)))
}

/// `det(I + V^T A^{-1} U)`, the nonsingularity test of [`smw_update`].
pub fn smw_capacitance_det(
    fld: &PrimeField,
    inv: &DenseMatrix,
    u: &DenseMatrix,
    v: &DenseMatrix,
) -> Result<u64> {
    let k = u.cols;
    let cap = DenseMatrix::identity(k).add(fld, &v.transpose().mul(fld, &inv.mul(fld, u)?)?);
    det(fld, &cap)
}

/// Coefficients (constant term first) of the polynomial of degree `<= n-1`
/// through the points `(xs[i], ys[i])`.
pub fn interpolate(fld: &PrimeField, xs: &[u64], ys: &[u64]) -> Vec<u64> {
    let n = xs.len();
    assert_eq!(n, ys.len());
    // Newton divided differences.
    let mut dd = ys.to_vec();
    for j in 1..n {
        for i in (j..n).rev() {
            let num = fld.sub(dd[i], dd[i - 1]);
            let den = fld.sub(xs[i], xs[i - j]);
            dd[i] = fld.mul(num, fld.inv(den));
        }
    }
    // Horner expansion of the Newton form into monomials.
    let mut coef = vec![0u64; n];
    for i in (0..n).rev() {
        // coef := coef * (x - xs[i]) + dd[i]
        let mut next = vec![0u64; n];
        for k in 0..n {
            if coef[k] == 0 {
                continue;
            }
            if k + 1 < n {
                next[k + 1] = fld.add(next[k + 1], coef[k]);
            }
            next[k] = fld.sub(next[k], fld.mul(coef[k], xs[i]));
        }
        next[0] = fld.add(next[0], dd[i]);
        coef = next;
    }
    coef
}

/// Degree of a coefficient vector, `-1` for the zero polynomial.
pub fn poly_degree(coef: &[u64]) -> i64 {
    coef.iter().rposition(|&c| c != 0).map_or(-1, |d| d as i64)
}

/// Interpolation through a fixed set of points.
///
/// Keeps `prod_j (x - x_j)` and the barycentric weights `w_i`. The basis
/// polynomial of point `i` is `w_i * prod_{j != i} (x - x_j)`, whose
/// coefficients come out of synthetic division from the top down, so the
/// leading coefficients of an interpolant cost `O(n)` each in `O(n)` memory.
pub struct Interpolator {
    fld: PrimeField,
    xs: Vec<u64>,
    master: Vec<u64>,
    weights: Vec<u64>,
}

impl Interpolator {
    pub fn new(fld: PrimeField, xs: &[u64]) -> Self {
        let n = xs.len();
        let mut master = vec![0u64; n + 1];
        master[0] = 1;
        for (deg, &x) in xs.iter().enumerate() {
            for k in (0..=deg + 1).rev() {
                let lower = if k > 0 { master[k - 1] } else { 0 };
                master[k] = fld.sub(lower, fld.mul(master[k], x));
            }
        }
        // w_i = 1 / prod_{j != i} (x_i - x_j), with one inversion overall
        let denoms: Vec<u64> = xs
            .iter()
            .enumerate()
            .map(|(i, &xi)| {
                xs.iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .fold(1u64, |acc, (_, &xj)| fld.mul(acc, fld.sub(xi, xj)))
            })
            .collect();
        let weights = batch_inverse(&fld, &denoms);
        Interpolator { fld, xs: xs.to_vec(), master, weights }
    }

    /// Visit the coefficients of the interpolant of `ys` from the top down
    /// until `visit` returns false.
    fn scan(&self, ys: &[u64], mut visit: impl FnMut(usize, u64) -> bool) {
        let n = self.xs.len();
        let fld = &self.fld;
        let scaled: Vec<u64> = ys.iter().zip(&self.weights).map(|(&y, &w)| fld.mul(y, w)).collect();
        let active: Vec<usize> = (0..n).filter(|&i| scaled[i] != 0).collect();
        // q_i[k] for the current k, starting at k = n - 1
        let mut q: Vec<u64> = vec![self.master[n]; n];
        for k in (0..n).rev() {
            let c = active.iter().fold(0u64, |acc, &i| fld.add(acc, fld.mul(scaled[i], q[i])));
            if !visit(k, c) || k == 0 {
                return;
            }
            for &i in &active {
                q[i] = fld.add(self.master[k], fld.mul(self.xs[i], q[i]));
            }
        }
    }

    /// Monomial coefficients of the interpolant of `ys`.
    pub fn coefficients(&self, ys: &[u64]) -> Vec<u64> {
        let mut coef = vec![0u64; self.xs.len()];
        self.scan(ys, |k, c| {
            coef[k] = c;
            true
        });
        coef
    }

    /// Degree of the interpolant of `ys`, `-1` for the zero polynomial.
    pub fn degree(&self, ys: &[u64]) -> i64 {
        let mut deg = -1;
        self.scan(ys, |k, c| {
            if c != 0 {
                deg = k as i64;
                false
            } else {
                true
            }
        });
        deg
    }
}

/// Inverses of nonzero elements with a single field inversion.
pub fn batch_inverse(fld: &PrimeField, xs: &[u64]) -> Vec<u64> {
    let mut prefix = Vec::with_capacity(xs.len());
    let mut acc = 1u64;
    for &x in xs {
        prefix.push(acc);
        acc = fld.mul(acc, x);
    }
    let mut inv = fld.inv(acc);
    let mut out = vec![0u64; xs.len()];
    for i in (0..xs.len()).rev() {
        out[i] = fld.mul(inv, prefix[i]);
        inv = fld.mul(inv, xs[i]);
    }
    out
}

/// A matrix whose entries are polynomials in one variable `z`, given by an
/// evaluation callback and an upper bound on the degree of every quantity
/// that will be interpolated.
pub struct PolyEval<'a> {
    pub order: usize,
    pub degree_bound: usize,
    pub eval: Box<dyn Fn(u64) -> DenseMatrix + 'a>,
}

fn check_bound(fld: &PrimeField, d: usize) -> Result<()> {
    if d as u128 + 1 >= fld.p() as u128 {
        return Err(Error::input(format!(
            "degree bound {d} needs more than p - 1 = {} points",
            fld.p() - 1
        )));
    }
    Ok(())
}

fn fresh_point(fld: &PrimeField, used: &mut HashSet<u64>, rng: &mut Rng) -> u64 {
    loop {
        let x = fld.random(rng);
        if used.insert(x) {
            return x;
        }
    }
}

/// Degree in `z` of `det(M(z))`, `-1` when identically zero.
pub fn poly_det_degree(fld: &PrimeField, pe: &PolyEval<'_>, rng: &mut Rng) -> Result<i64> {
    check_bound(fld, pe.degree_bound)?;
    let mut used = HashSet::new();
    let mut xs = Vec::with_capacity(pe.degree_bound + 1);
    let mut ys = Vec::with_capacity(pe.degree_bound + 1);
    for _ in 0..=pe.degree_bound {
        let x = fresh_point(fld, &mut used, rng);
        xs.push(x);
        ys.push(det(fld, &(pe.eval)(x))?);
    }
    Ok(Interpolator::new(*fld, &xs).degree(&ys))
}

/// True when `det(M(z))` vanishes at two random points, i.e. (with error
/// probability at most `(D/p)^2`) the determinant is the zero polynomial.
pub fn poly_identically_singular(fld: &PrimeField, pe: &PolyEval<'_>, rng: &mut Rng) -> Result<bool> {
    for _ in 0..2 {
        let x = fld.random(rng);
        if det(fld, &(pe.eval)(x))? != 0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Degrees and determinant degree returned by [`poly_adjoint_column_degrees`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdjointDegrees {
    pub det_degree: i64,
    pub column: Vec<i64>,
}

/// Degree in `z` of every entry of column `col` of `adj(M(z))`, together
/// with the degree of `det(M(z))`. Points where `M` is singular are replaced
/// by fresh ones, up to `3D` times.
pub fn poly_adjoint_column_degrees(
    fld: &PrimeField,
    pe: &PolyEval<'_>,
    col: usize,
    rng: &mut Rng,
) -> Result<AdjointDegrees> {
    check_bound(fld, pe.degree_bound)?;
    if col >= pe.order {
        return Err(Error::input(format!("column {col} out of range")));
    }
    let need = pe.degree_bound + 1;
    let mut spare = 3 * pe.degree_bound.max(1);
    let mut used = HashSet::new();
    let mut xs = Vec::with_capacity(need);
    let mut dets = Vec::with_capacity(need);
    let mut cols: Vec<Vec<u64>> = Vec::with_capacity(need);
    while xs.len() < need {
        let x = fresh_point(fld, &mut used, rng);
        let (d, sol) = det_and_solve(fld, &(pe.eval)(x), col)?;
        match sol {
            Some(s) => {
                xs.push(x);
                dets.push(d);
                cols.push(s.into_iter().map(|v| fld.mul(v, d)).collect());
            }
            None => {
                if spare == 0 {
                    return Err(Error::unlucky(
                        "matrix identically singular or unlucky points; retry with fresh points",
                    ));
                }
                spare -= 1;
            }
        }
    }
    let interp = Interpolator::new(*fld, &xs);
    let det_degree = interp.degree(&dets);
    let column = (0..pe.order)
        .map(|r| {
            let ys: Vec<u64> = cols.iter().map(|c| c[r]).collect();
            interp.degree(&ys)
        })
        .collect();
    Ok(AdjointDegrees { det_degree, column })
}
