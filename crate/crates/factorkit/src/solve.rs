//! Unweighted f-factors: existence by a random determinant and extraction by
//! pivoting (bipartite) or by removing edges (general).

use serde::{Deserialize, Serialize};

use crate::config::{with_retries, SolveConfig};
use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::graph::{normalize, CopyId, DegreeConstraint, EdgeSubset, Multigraph};
use crate::linalg::{det, invert, smw_capacitance_det, smw_update, DenseMatrix};
use crate::matrix::FactorMatrix;
use crate::rng::{rng_for, stream, Rng};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorResult {
    pub found: bool,
    pub factor: Option<EdgeSubset>,
    pub retries: usize,
}

fn check(g: &Multigraph, f: &DegreeConstraint) -> Result<()> {
    if f.len() != g.n() {
        return Err(Error::input(format!(
            "degree constraint has {} entries for {} vertices",
            f.len(),
            g.n()
        )));
    }
    Ok(())
}

/// A prime for an unweighted computation on an instance of size `phi`.
pub fn field_for(cfg_bits: u32, phi: usize, degree_bound: usize, seed: u64) -> Result<PrimeField> {
    PrimeField::choose(cfg_bits, phi, degree_bound, &mut rng_for(seed, stream::PRIME))
}

/// Does `g` have an f-factor? A `false` answer is wrong with probability at
/// most `(φ/p)^trials`.
pub fn has_factor(g: &Multigraph, f: &DegreeConstraint, trials: usize, cfg: &SolveConfig) -> Result<bool> {
    check(g, f)?;
    if f.phi() % 2 == 1 {
        return Ok(false);
    }
    let norm = normalize(g, f);
    for t in 0..trials.max(1) {
        let seed = crate::rng::attempt_seed(cfg.seed, t);
        let fld = field_for(cfg.prime_bits, f.phi(), 0, seed)?;
        let m = FactorMatrix::build_general(&norm.graph, f, fld, false, &mut rng_for(seed, stream::MATRIX))?;
        if det(&fld, &m.constant())? != 0 {
            return Ok(true);
        }
    }
    Ok(false)
}

/// One pass of the bipartite pivoting algorithm. `Ok(None)` when the matrix
/// is singular, i.e. (with high probability) no f-factor exists.
///
/// For every row slot `a = (i, ι)` in turn, a residual copy `k` of an edge
/// `ij` and a column slot `b = (j, c)` are chosen such that the residual
/// matrix with copy `k` removed and row `a`, column `b` deleted stays
/// nonsingular. That determinant is `det(M)` times
/// `A[b,a] (1 − yᵀ A x̃) + (A x̃)[b] (yᵀ A)[a]`, where `A = M⁻¹` and `x̃`
/// is `x^k` with entry `a` cleared.
pub fn find_bipartite_factor(
    g: &Multigraph,
    f: &DegreeConstraint,
    side: &[u8],
    fld: PrimeField,
    rng: &mut Rng,
) -> Result<Option<EdgeSubset>> {
    check(g, f)?;
    let fm = match FactorMatrix::build_bipartite(g, f, side, fld, false, rng) {
        Ok(m) => m,
        Err(Error::Infeasible(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    let n = fm.order();
    let mut m = fm.constant();
    let Some(mut a) = invert(&fld, &m)? else {
        return Ok(None);
    };
    // compact position of every original row / column
    let mut rpos: Vec<Option<usize>> = (0..n).map(Some).collect();
    let mut cpos: Vec<Option<usize>> = (0..n).map(Some).collect();
    let mut alive = vec![true; fm.copies.len()];
    let inc = g.incidence();
    let mut chosen = EdgeSubset::new();

    for row in 0..n {
        let (i, _) = fm.row_labels[row];
        let ra = rpos[row].expect("rows are eliminated in order");
        let size = m.rows();
        let mut pick = None;
        'search: for &eid in &inc[i] {
            for &ci in &fm.copy_pos[eid] {
                if !alive[ci] {
                    continue;
                }
                let cv = &fm.copies[ci];
                // x̃ and y in compact coordinates
                let xt: Vec<(usize, u64)> = cv
                    .x
                    .iter()
                    .filter_map(|&(r, v)| rpos[r].filter(|&p| p != ra).map(|p| (p, v)))
                    .collect();
                let y: Vec<(usize, u64)> =
                    cv.y.iter().filter_map(|&(c, v)| cpos[c].map(|p| (p, v))).collect();
                if y.is_empty() || !cv.x.iter().any(|&(r, _)| r == row) {
                    continue;
                }
                let u: Vec<u64> = (0..size)
                    .map(|c| xt.iter().fold(0, |acc, &(p, v)| fld.add(acc, fld.mul(a.get(c, p), v))))
                    .collect();
                let yu = y.iter().fold(0, |acc, &(p, v)| fld.add(acc, fld.mul(v, u[p])));
                let sa = y.iter().fold(0, |acc, &(p, v)| fld.add(acc, fld.mul(v, a.get(p, ra))));
                let one_minus = fld.sub(1, yu);
                for &(b, _) in &y {
                    let crit = fld.add(fld.mul(a.get(b, ra), one_minus), fld.mul(u[b], sa));
                    if crit != 0 {
                        pick = Some((ci, b));
                        break 'search;
                    }
                }
            }
        }
        let Some((ci, b)) = pick else {
            return Err(Error::unlucky(format!("no allowed edge for row slot {row}")));
        };
        alive[ci] = false;
        chosen.insert(fm.copies[ci].id);

        // residual matrix: subtract the copy, then delete row ra and column b
        let cv = &fm.copies[ci];
        let mut nm = m.clone();
        for &(r, xv) in &cv.x {
            if let Some(pr) = rpos[r] {
                for &(c, yv) in &cv.y {
                    if let Some(pc) = cpos[c] {
                        nm.set(pr, pc, fld.sub(nm.get(pr, pc), fld.mul(xv, yv)));
                    }
                }
            }
        }
        let keep_r: Vec<usize> = (0..size).filter(|&p| p != ra).collect();
        let keep_c: Vec<usize> = (0..size).filter(|&p| p != b).collect();
        let next = nm.select(&keep_r, &keep_c);
        a = residual_inverse(&fld, &a, &next, ra, b, cv, &rpos, &cpos)?;
        m = next;
        let gone_col = cpos.iter().position(|&p| p == Some(b)).expect("column is alive");
        rpos[row] = None;
        cpos[gone_col] = None;
        for p in rpos.iter_mut().flatten() {
            if *p > ra {
                *p -= 1;
            }
        }
        for p in cpos.iter_mut().flatten() {
            if *p > b {
                *p -= 1;
            }
        }
    }
    Ok(Some(chosen))
}

/// Inverse of the residual matrix after removing copy `cv` and pivot
/// `(ra, b)`, by a Schur complement and a rank-1 update when the pivot
/// entry of the old inverse is nonzero, and by direct inversion otherwise.
#[allow(clippy::too_many_arguments)]
fn residual_inverse(
    fld: &PrimeField,
    a: &DenseMatrix,
    next: &DenseMatrix,
    ra: usize,
    b: usize,
    cv: &crate::matrix::CopyVectors,
    rpos: &[Option<usize>],
    cpos: &[Option<usize>],
) -> Result<DenseMatrix> {
    let size = a.rows();
    let piv = a.get(b, ra);
    if piv != 0 && size > 1 {
        let pinv = fld.inv(piv);
        let rows: Vec<usize> = (0..size).filter(|&p| p != b).collect();
        let cols: Vec<usize> = (0..size).filter(|&p| p != ra).collect();
        let mut minor = a.select(&rows, &cols);
        for (ri, &r) in rows.iter().enumerate() {
            let f = fld.mul(a.get(r, ra), pinv);
            if f == 0 {
                continue;
            }
            for (cj, &c) in cols.iter().enumerate() {
                let v = fld.sub(minor.get(ri, cj), fld.mul(f, a.get(b, c)));
                minor.set(ri, cj, v);
            }
        }
        // minor now inverts the pivot-deleted matrix; apply −x'y'ᵀ
        let shrink = |p: usize, gone: usize| if p > gone { p - 1 } else { p };
        let mut u = DenseMatrix::zeros(size - 1, 1);
        let mut v = DenseMatrix::zeros(size - 1, 1);
        for &(r, xv) in &cv.x {
            if let Some(p) = rpos[r].filter(|&p| p != ra) {
                u.set(shrink(p, ra), 0, fld.neg(xv));
            }
        }
        for &(c, yv) in &cv.y {
            if let Some(p) = cpos[c].filter(|&p| p != b) {
                v.set(shrink(p, b), 0, yv);
            }
        }
        if let Some(inv) = smw_update(fld, &minor, &u, &v)? {
            return Ok(inv);
        }
    }
    invert(fld, next)?.ok_or_else(|| Error::inconsistent("residual matrix became singular"))
}

/// One pass of the general removal algorithm. `Ok(None)` when the matrix is
/// singular.
///
/// Edges are visited in order; for each, copies are removed in power-of-two
/// batches of decreasing size while `det(I + VᵀB⁻¹U) ≠ 0`, so the number of
/// removed copies is the largest removable count. The surviving copies form
/// the factor.
pub fn find_general_factor(
    g: &Multigraph,
    f: &DegreeConstraint,
    fld: PrimeField,
    rng: &mut Rng,
) -> Result<Option<EdgeSubset>> {
    check(g, f)?;
    if f.phi() % 2 == 1 {
        return Ok(None);
    }
    let fm = FactorMatrix::build_general(g, f, fld, false, rng)?;
    let Some(mut inv) = invert(&fld, &fm.constant())? else {
        return Ok(None);
    };
    let mut remaining: Vec<usize> = g.edges().iter().map(|e| e.mult()).collect();
    for (eid, rem) in remaining.iter_mut().enumerate() {
        let mut step = if *rem == 0 { 0 } else { 1usize << (usize::BITS - 1 - rem.leading_zeros()) };
        while step > 0 {
            if step <= *rem {
                let ids: Vec<CopyId> = (*rem - step..*rem).map(|copy| CopyId { edge: eid, copy }).collect();
                let (u, v) = fm.removal_update(&ids, 1);
                if smw_capacitance_det(&fld, &inv, &u, &v)? != 0 {
                    inv = smw_update(&fld, &inv, &u, &v)?
                        .ok_or_else(|| Error::inconsistent("accepted removal made the matrix singular"))?;
                    *rem -= step;
                }
            }
            step /= 2;
        }
    }
    let factor: EdgeSubset = remaining
        .iter()
        .enumerate()
        .flat_map(|(edge, &r)| (0..r).map(move |copy| CopyId { edge, copy }))
        .collect();
    Ok(Some(factor))
}

/// Find an f-factor with retries: normalizes parallel copies, picks the
/// bipartite algorithm when `g` is bipartite, and verifies the degrees of
/// the result.
pub fn find_factor(g: &Multigraph, f: &DegreeConstraint, cfg: &SolveConfig) -> Result<FactorResult> {
    check(g, f)?;
    if f.phi() % 2 == 1 {
        return Ok(FactorResult { found: false, factor: None, retries: 0 });
    }
    let norm = normalize(g, f);
    let side = norm.graph.bipartition();
    let (found, retries) = with_retries(cfg, |seed| {
        let fld = field_for(cfg.prime_bits, f.phi(), 0, seed)?;
        let mut rng = rng_for(seed, stream::MATRIX);
        let res = match &side {
            Some(s) => find_bipartite_factor(&norm.graph, f, s, fld, &mut rng)?,
            None => find_general_factor(&norm.graph, f, fld, &mut rng)?,
        };
        match res {
            Some(sub) if !sub.is_factor(&norm.graph, f) => {
                Err(Error::unlucky("extracted subgraph violates the degree constraint"))
            }
            other => Ok(other),
        }
    })?;
    Ok(match found {
        Some(sub) => FactorResult { found: true, factor: Some(norm.lift(&sub)), retries },
        None => FactorResult { found: false, factor: None, retries },
    })
}
