//! Weights of maximum perturbation factors `F_v` (degree of `v` lowered by
//! one) and `F^v` (raised by one) of an f-critical graph, read off degrees
//! of adjugate entries of weighted matrices of two augmented graphs.

use serde::{Deserialize, Serialize};

use crate::config::{with_retries, SolveConfig};
use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::graph::{DegreeConstraint, Multigraph, Vertex};
use crate::linalg::{poly_adjoint_column_degrees, poly_identically_singular, PolyEval};
use crate::matrix::FactorMatrix;
use crate::rng::{rng_for, stream};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerturbationWeights {
    /// `w(F_v)`.
    pub lower: Vec<i64>,
    /// `w(F^v)`.
    pub upper: Vec<i64>,
    /// `w(F_*)`, the best lower perturbation over all vertices.
    pub base_lower: i64,
    /// `w(F^*)`, the best upper perturbation over all vertices.
    pub base_upper: i64,
}

fn check(g: &Multigraph, f: &DegreeConstraint) -> Result<()> {
    if f.len() != g.n() {
        return Err(Error::input("degree constraint length differs from vertex count"));
    }
    if let Some(v) = (0..g.n()).find(|&v| f.get(v) == 0) {
        return Err(Error::input(format!("vertex {v} has f = 0; remove it first")));
    }
    if f.phi() % 2 == 0 {
        return Err(Error::infeasible("f(V) is even, so the graph is not f-critical"));
    }
    Ok(())
}

/// For the augmented graph `h` with constraint `fh`, the weight of the best
/// factor of `h` (`w(F_*)`-style) and the corrected weights of the factors
/// obtained by deleting slot `rows[i]` together with slot `(hub, 0)`.
fn adjugate_weights(
    h: &Multigraph,
    fh: &DegreeConstraint,
    hub: Vertex,
    rows: &[(Vertex, usize)],
    bits: u32,
    seed: u64,
    salt: u64,
) -> Result<(i64, Vec<i64>)> {
    let phi = fh.phi();
    let shift = h.max_abs_weight();
    let worst = (2 * shift as usize) * phi;
    let fld = PrimeField::choose(bits, phi, worst, &mut rng_for(seed, stream::PRIME))?;
    let fm = FactorMatrix::build_general(h, fh, fld, true, &mut rng_for(seed, salt))?;
    let bound = fm.degree_bound();
    let pe = PolyEval { order: fm.order(), degree_bound: bound, eval: Box::new(|z| fm.evaluate(z)) };
    let col = fm.col_index[hub][0];
    let mut prng = rng_for(seed, stream::POINTS);
    if poly_identically_singular(&fld, &pe, &mut prng)? {
        return Err(Error::infeasible("determinant vanishes: the graph is not f-critical"));
    }
    let ad = poly_adjoint_column_degrees(&fld, &pe, col, &mut prng)?;
    if ad.det_degree < 0 {
        return Err(Error::infeasible("determinant vanishes: the graph is not f-critical"));
    }
    let half_phi = phi as i64 / 2;
    let base = (ad.det_degree - shift * phi as i64) / 2;
    let mut out = Vec::with_capacity(rows.len());
    for &(v, slot) in rows {
        let deg = ad.column[fm.row_index[v][slot]];
        if deg < 0 {
            return Err(Error::infeasible(format!("no perturbation factor at vertex {v}: not f-critical")));
        }
        out.push(deg - ad.det_degree / 2 - shift * (half_phi - 1));
    }
    Ok((base, out))
}

/// `w(F_v)` for every vertex and `w(F_*)`, for one random seed.
pub fn lower_weights_once(g: &Multigraph, f: &DegreeConstraint, bits: u32, seed: u64) -> Result<(Vec<i64>, i64)> {
    check(g, f)?;
    let mut h = g.clone();
    let t = h.add_vertex();
    for v in 0..g.n() {
        h.add_plain(t, v, 1)?;
    }
    let mut fh = f.clone();
    fh.push(1);
    let rows: Vec<(Vertex, usize)> = (0..g.n()).map(|v| (v, f.get(v) / 2)).collect();
    let (base, w) = adjugate_weights(&h, &fh, t, &rows, bits, seed, stream::LOWER)?;
    Ok((w, base))
}

/// `w(F^v)` for every vertex and `w(F^*)`, for one random seed.
pub fn upper_weights_once(g: &Multigraph, f: &DegreeConstraint, bits: u32, seed: u64) -> Result<(Vec<i64>, i64)> {
    check(g, f)?;
    let n = g.n();
    let mut h = g.clone();
    let mut fh = DegreeConstraint::new(f.values().iter().map(|&x| x + 1).collect());
    let tu: Vec<Vertex> = (0..n).map(|_| h.add_vertex()).collect();
    let t = h.add_vertex();
    for u in 0..n {
        h.add_plain(u, tu[u], 1)?;
    }
    for &x in &tu {
        h.add_plain(x, t, 1)?;
    }
    for _ in 0..=n {
        fh.push(1);
    }
    let rows: Vec<(Vertex, usize)> = tu.iter().map(|&x| (x, 0)).collect();
    let (base, w) = adjugate_weights(&h, &fh, t, &rows, bits, seed, stream::UPPER)?;
    Ok((w, base))
}

/// `w(F_v)` for every vertex of an f-critical graph.
pub fn lower_weights(g: &Multigraph, f: &DegreeConstraint, cfg: &SolveConfig) -> Result<Vec<i64>> {
    Ok(with_retries(cfg, |seed| lower_weights_once(g, f, cfg.prime_bits, seed))?.0 .0)
}

/// `w(F^v)` for every vertex of an f-critical graph.
pub fn upper_weights(g: &Multigraph, f: &DegreeConstraint, cfg: &SolveConfig) -> Result<Vec<i64>> {
    Ok(with_retries(cfg, |seed| upper_weights_once(g, f, cfg.prime_bits, seed))?.0 .0)
}

/// Both tables, with the maxima checked against each other.
pub fn perturbation_weights(g: &Multigraph, f: &DegreeConstraint, cfg: &SolveConfig) -> Result<PerturbationWeights> {
    let ((pw, _), _) = with_retries(cfg, |seed| {
        let (lower, base_lower) = lower_weights_once(g, f, cfg.prime_bits, seed)?;
        let (upper, base_upper) = upper_weights_once(g, f, cfg.prime_bits, seed)?;
        let pw = PerturbationWeights { lower, upper, base_lower, base_upper };
        if pw.lower.iter().max() != Some(&pw.base_lower) || pw.upper.iter().max() != Some(&pw.base_upper) {
            return Err(Error::unlucky("perturbation maxima disagree with the determinant degree"));
        }
        Ok((pw, ()))
    })?;
    Ok(pw)
}
