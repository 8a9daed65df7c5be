//! Maximum weight f-factors of bipartite multigraphs through optimal duals.
//!
//! With `V1` the second side, `y(v) = −w(F_v)` for `v ∈ V1`, where `F_v` is
//! a maximum `f_v`-factor of the graph `G⁺` that adds a vertex `s` to `V1`
//! joined to all of `V0`. A vertex `u ∈ V0` takes the `f(u)`-th largest
//! value of `w(uv) − y(v)` over its copies. The factor is every strictly
//! underrated copy plus an unweighted factor of the tight copies.

use serde::{Deserialize, Serialize};

use crate::config::{with_retries, SolveConfig};
use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::graph::{induced, CopyId, DegreeConstraint, EdgeSubset, Multigraph, Vertex};
use crate::linalg::{poly_adjoint_column_degrees, poly_identically_singular, PolyEval};
use crate::matrix::FactorMatrix;
use crate::rng::{rng_for, stream};
use crate::solve::{field_for, find_bipartite_factor};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BipartiteDuals {
    pub y: Vec<i64>,
}

impl BipartiteDuals {
    /// `y(u) + y(v)` for the endpoints of a copy.
    pub fn cover(&self, g: &Multigraph, c: CopyId) -> i64 {
        let e = g.edge(c.edge);
        self.y[e.u] + self.y[e.v]
    }

    /// `Σ f(v) y(v)`, the objective of the duals; equals the maximum factor
    /// weight minus the slack of strictly underrated factor copies.
    pub fn objective(&self, f: &DegreeConstraint) -> i64 {
        self.y.iter().zip(f.values()).map(|(&y, &fv)| y * fv as i64).sum()
    }
}

fn check(g: &Multigraph, f: &DegreeConstraint, side: &[u8]) -> Result<()> {
    if f.len() != g.n() || side.len() != g.n() {
        return Err(Error::input("constraint or bipartition length differs from vertex count"));
    }
    for e in g.edges() {
        if side[e.u] == side[e.v] {
            return Err(Error::input(format!("edge {}-{} does not cross the bipartition", e.u, e.v)));
        }
    }
    if let Some(v) = (0..g.n()).find(|&v| f.get(v) == 0) {
        return Err(Error::input(format!("vertex {v} has f = 0; remove it first")));
    }
    Ok(())
}

/// `w(F_v)` in `G⁺` for every `v ∈ V1`, `None` on `V0`.
pub fn bipartite_lower_weights(
    g: &Multigraph,
    f: &DegreeConstraint,
    side: &[u8],
    bits: u32,
    seed: u64,
) -> Result<Vec<Option<i64>>> {
    check(g, f, side)?;
    let n = g.n();
    let mut h = g.clone();
    let mut hs = side.to_vec();
    let mut hf = f.clone();
    let s = h.add_vertex();
    hs.push(1);
    hf.push(1);
    let t = h.add_vertex();
    hs.push(0);
    hf.push(1);
    for v in 0..n {
        if side[v] == 0 {
            h.add_plain(s, v, 1)?;
        } else {
            h.add_plain(t, v, 1)?;
        }
    }
    let rows: usize = (0..h.n()).filter(|&v| hs[v] == 0).map(|v| hf.get(v)).sum();
    let shift = h.max_abs_weight();
    let worst = 2 * shift as usize * rows;
    let fld = PrimeField::choose(bits, hf.phi(), worst, &mut rng_for(seed, stream::PRIME))?;
    let fm = FactorMatrix::build_bipartite(&h, &hf, &hs, fld, true, &mut rng_for(seed, stream::LOWER))?;
    let bound = fm.degree_bound();
    let pe = PolyEval { order: fm.order(), degree_bound: bound, eval: Box::new(|z| fm.evaluate(z)) };
    let mut prng = rng_for(seed, stream::POINTS);
    if poly_identically_singular(&fld, &pe, &mut prng)? {
        return Err(Error::infeasible("no f-factor"));
    }
    let ad = poly_adjoint_column_degrees(&fld, &pe, fm.row_index[t][0], &mut prng)?;
    if ad.det_degree < 0 {
        return Err(Error::infeasible("no f-factor"));
    }
    let factor_edges = rows as i64 - 1;
    (0..n)
        .map(|v| {
            if side[v] == 0 {
                return Ok(None);
            }
            let deg = ad.column[fm.col_index[v][0]];
            if deg < 0 {
                return Err(Error::infeasible(format!("no lower perturbation at vertex {v}")));
            }
            Ok(Some(deg - shift * factor_edges))
        })
        .collect()
}

/// Duals from lower perturbation weights of the second side.
pub fn duals_from_weights(
    g: &Multigraph,
    f: &DegreeConstraint,
    side: &[u8],
    lower: &[Option<i64>],
) -> Result<BipartiteDuals> {
    let mut y = vec![0i64; g.n()];
    for v in 0..g.n() {
        if side[v] == 1 {
            y[v] = -lower[v].ok_or_else(|| Error::input(format!("missing weight for vertex {v}")))?;
        }
    }
    let inc = g.incidence();
    for u in 0..g.n() {
        if side[u] != 0 {
            continue;
        }
        let mut vals: Vec<i64> = inc[u]
            .iter()
            .flat_map(|&eid| {
                let e = g.edge(eid);
                let yv = y[e.other(u)];
                e.weights.iter().map(move |&w| w - yv)
            })
            .collect();
        vals.sort_unstable_by(|a, b| b.cmp(a));
        let k = f.get(u);
        if vals.len() < k {
            return Err(Error::infeasible(format!("vertex {u} has fewer than f(u) copies")));
        }
        y[u] = vals[k - 1];
    }
    Ok(BipartiteDuals { y })
}

/// Optimal duals for a bipartite graph with an f-factor.
pub fn bipartite_duals(g: &Multigraph, f: &DegreeConstraint, side: &[u8], cfg: &SolveConfig) -> Result<BipartiteDuals> {
    let (d, _) = with_retries(cfg, |seed| {
        let lower = bipartite_lower_weights(g, f, side, cfg.prime_bits, seed)?;
        duals_from_weights(g, f, side, &lower)
    })?;
    Ok(d)
}

/// Strictly underrated copies plus an unweighted factor of the tight copies.
pub fn extract_from_duals(
    g: &Multigraph,
    f: &DegreeConstraint,
    side: &[u8],
    duals: &BipartiteDuals,
    seed: u64,
    bits: u32,
) -> Result<EdgeSubset> {
    let mut chosen = EdgeSubset::new();
    let mut residual: Vec<i64> = f.values().iter().map(|&x| x as i64).collect();
    let mut tight = Multigraph::new(g.n());
    let mut tight_ids: Vec<Vec<CopyId>> = Vec::new();
    for (eid, e) in g.edges().iter().enumerate() {
        let cover = duals.y[e.u] + duals.y[e.v];
        let mut ws = Vec::new();
        let mut ids = Vec::new();
        for (k, &w) in e.weights.iter().enumerate() {
            let id = CopyId { edge: eid, copy: k };
            if w > cover {
                chosen.insert(id);
                residual[e.u] -= 1;
                residual[e.v] -= 1;
            } else if w == cover {
                ws.push(w);
                ids.push(id);
            }
        }
        if !ws.is_empty() {
            tight.add_edge(e.u, e.v, ws)?;
            tight_ids.push(ids);
        }
    }
    if residual.iter().any(|&r| r < 0) {
        return Err(Error::unlucky("strictly underrated copies exceed the degree constraint"));
    }
    let fr = DegreeConstraint::new(residual.iter().map(|&r| r as usize).collect());
    let fld = field_for(bits, fr.phi(), 0, seed)?;
    let t = find_bipartite_factor(&tight, &fr, side, fld, &mut rng_for(seed, stream::EXTRACT))?
        .ok_or_else(|| Error::unlucky("tight copies have no factor for the residual constraint"))?;
    for c in t.iter() {
        chosen.insert(tight_ids[c.edge][c.copy]);
    }
    if !chosen.is_factor(g, f) {
        return Err(Error::unlucky("extracted subgraph violates the degree constraint"));
    }
    Ok(chosen)
}

/// Complementary slackness: every factor copy is underrated or tight and
/// every other copy is dominated. Together with the degrees this certifies
/// maximality.
pub fn certify_bipartite(g: &Multigraph, f: &DegreeConstraint, duals: &BipartiteDuals, factor: &EdgeSubset) -> bool {
    factor.is_factor(g, f)
        && g.copies().all(|c| {
            let cover = duals.cover(g, c);
            if factor.contains(&c) {
                g.weight(c) >= cover
            } else {
                g.weight(c) <= cover
            }
        })
}

/// Result of [`max_weight_bipartite`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedFactor {
    pub factor: EdgeSubset,
    pub weight: i64,
    /// Vertex duals of the vertices with `f > 0`, `None` elsewhere.
    pub y: Vec<Option<i64>>,
}

/// Maximum weight f-factor of a bipartite multigraph, certified by duals.
/// Vertices with `f = 0` are removed first.
pub fn max_weight_bipartite(
    g: &Multigraph,
    f: &DegreeConstraint,
    side: &[u8],
    cfg: &SolveConfig,
) -> Result<WeightedFactor> {
    if f.len() != g.n() || side.len() != g.n() {
        return Err(Error::input("constraint or bipartition length differs from vertex count"));
    }
    let keep: Vec<bool> = (0..g.n()).map(|v| f.get(v) > 0).collect();
    let (h, index, origin) = induced(g, &keep);
    let mut hf = DegreeConstraint::new(vec![0; h.n()]);
    let mut hs = vec![0u8; h.n()];
    for v in 0..g.n() {
        if let Some(i) = index[v] {
            hf.set(i, f.get(v));
            hs[i] = side[v];
        }
    }
    let f0: usize = (0..h.n()).filter(|&v| hs[v] == 0).map(|v| hf.get(v)).sum();
    if 2 * f0 != hf.phi() {
        return Err(Error::infeasible("f differs between the two sides"));
    }
    if h.n() == 0 {
        return Ok(WeightedFactor { factor: EdgeSubset::new(), weight: 0, y: vec![None; g.n()] });
    }
    let ((factor, duals), _) = with_retries(cfg, |seed| {
        let lower = bipartite_lower_weights(&h, &hf, &hs, cfg.prime_bits, seed)?;
        let duals = duals_from_weights(&h, &hf, &hs, &lower)?;
        let factor = extract_from_duals(&h, &hf, &hs, &duals, seed, cfg.prime_bits)?;
        if !certify_bipartite(&h, &hf, &duals, &factor) {
            return Err(Error::unlucky("dual certificate failed"));
        }
        Ok((factor, duals))
    })?;
    let lifted: EdgeSubset = factor.iter().map(|c| CopyId { edge: origin[c.edge], copy: c.copy }).collect();
    let mut y = vec![None; g.n()];
    for v in 0..g.n() {
        if let Some(i) = index[v] {
            y[v] = Some(duals.y[i]);
        }
    }
    Ok(WeightedFactor { weight: lifted.weight(g), factor: lifted, y })
}

/// Vertices on side `s`.
pub fn side_vertices(side: &[u8], s: u8) -> Vec<Vertex> {
    (0..side.len()).filter(|&v| side[v] == s).collect()
}
