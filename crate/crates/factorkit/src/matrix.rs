//! Symbolic adjacency matrices of `(G, f)` evaluated at random points.
//!
//! Rows and columns are indexed by slots `(v, r)` with `r < f(v)`. Every
//! copy `k` of an edge `ij` owns random vectors `x^{ij,k}` (on the slots of
//! `i`) and `y^{ij,k}` (on the slots of `j`), so its contribution is the
//! outer product `z^w x yᵀ`. In the general case the matrix is
//! skew-symmetric and a copy contributes `z^w (x yᵀ − y xᵀ)`, which is what
//! makes deleting `μ` copies a rank `≤ 2μ` update.

use crate::error::{Error, Result};
use crate::field::PrimeField;
use crate::graph::{CopyId, DegreeConstraint, Multigraph, Vertex};
use crate::linalg::DenseMatrix;
use crate::rng::Rng;

/// Is `(i, r, j, c)` a permissible position of the general matrix?
pub fn permissible(i: Vertex, r: usize, j: Vertex, c: usize, f: &DegreeConstraint) -> Result<bool> {
    if i >= f.len() || j >= f.len() || r >= f.get(i) || c >= f.get(j) {
        return Err(Error::input(format!("slot ({i},{r}) or ({j},{c}) out of range")));
    }
    if i < j {
        return Ok(true);
    }
    if i > j {
        return Ok(false);
    }
    let fi = f.get(i);
    Ok(r < fi / 2 && fi.div_ceil(2) <= c)
}

/// Random vectors of one edge copy.
#[derive(Clone, Debug)]
pub struct CopyVectors {
    pub id: CopyId,
    pub exponent: u64,
    /// `(row, value)` pairs.
    pub x: Vec<(usize, u64)>,
    /// `(column, value)` pairs.
    pub y: Vec<(usize, u64)>,
}

#[derive(Clone, Debug)]
pub struct FactorMatrix {
    pub field: PrimeField,
    pub bipartite: bool,
    pub rows: usize,
    pub cols: usize,
    /// `row_index[v][r]`; empty for vertices without row slots.
    pub row_index: Vec<Vec<usize>>,
    pub col_index: Vec<Vec<usize>>,
    pub row_labels: Vec<(Vertex, usize)>,
    pub col_labels: Vec<(Vertex, usize)>,
    pub copies: Vec<CopyVectors>,
    /// Position in `copies` of every `(edge, copy)`.
    pub copy_pos: Vec<Vec<usize>>,
    /// The constant added to every weight before it becomes an exponent.
    pub shift: i64,
    /// Largest exponent on any copy.
    pub max_exponent: u64,
}

fn slot_maps(
    f: &DegreeConstraint,
    include: impl Fn(Vertex) -> bool,
) -> (Vec<Vec<usize>>, Vec<(Vertex, usize)>) {
    let mut index = vec![Vec::new(); f.len()];
    let mut labels = Vec::new();
    for (v, slots) in index.iter_mut().enumerate() {
        if include(v) {
            for r in 0..f.get(v) {
                slots.push(labels.len());
                labels.push((v, r));
            }
        }
    }
    (index, labels)
}

impl FactorMatrix {
    /// Matrix of a bipartite multigraph: rows are slots of side-0 vertices,
    /// columns are slots of side-1 vertices.
    pub fn build_bipartite(
        g: &Multigraph,
        f: &DegreeConstraint,
        side: &[u8],
        field: PrimeField,
        weighted: bool,
        rng: &mut Rng,
    ) -> Result<Self> {
        check_shape(g, f)?;
        if side.len() != g.n() {
            return Err(Error::input("bipartition length differs from vertex count"));
        }
        let (row_index, row_labels) = slot_maps(f, |v| side[v] == 0);
        let (col_index, col_labels) = slot_maps(f, |v| side[v] == 1);
        if row_labels.len() != col_labels.len() {
            return Err(Error::infeasible(format!(
                "f sums to {} on one side and {} on the other",
                row_labels.len(),
                col_labels.len()
            )));
        }
        let shift = if weighted { g.max_abs_weight() } else { 0 };
        let mut copies = Vec::new();
        let mut copy_pos = vec![Vec::new(); g.m()];
        for id in g.copies() {
            let e = g.edge(id.edge);
            if side[e.u] == side[e.v] {
                return Err(Error::input(format!(
                    "edge {} joins two vertices on the same side",
                    id.edge
                )));
            }
            let (a, b) = if side[e.u] == 0 { (e.u, e.v) } else { (e.v, e.u) };
            let exponent = if weighted { (g.weight(id) + shift) as u64 } else { 0 };
            let x = row_index[a].iter().map(|&r| (r, field.random_nonzero(rng))).collect();
            let y = col_index[b].iter().map(|&c| (c, field.random_nonzero(rng))).collect();
            copy_pos[id.edge].push(copies.len());
            copies.push(CopyVectors { id, exponent, x, y });
        }
        let max_exponent = copies.iter().map(|c| c.exponent).max().unwrap_or(0);
        Ok(FactorMatrix {
            field,
            bipartite: true,
            rows: row_labels.len(),
            cols: col_labels.len(),
            row_index,
            col_index,
            row_labels,
            col_labels,
            copies,
            copy_pos,
            shift,
            max_exponent,
        })
    }

    /// Skew-symmetric matrix of order `φ` of a general multigraph.
    pub fn build_general(
        g: &Multigraph,
        f: &DegreeConstraint,
        field: PrimeField,
        weighted: bool,
        rng: &mut Rng,
    ) -> Result<Self> {
        check_shape(g, f)?;
        let (index, labels) = slot_maps(f, |_| true);
        let shift = if weighted { g.max_abs_weight() } else { 0 };
        let mut copies = Vec::new();
        let mut copy_pos = vec![Vec::new(); g.m()];
        for id in g.copies() {
            let e = g.edge(id.edge);
            let (i, j) = (e.u.min(e.v), e.u.max(e.v));
            let exponent = if weighted { (g.weight(id) + shift) as u64 } else { 0 };
            let (xs, ys): (Vec<usize>, Vec<usize>) = if i == j {
                let fi = f.get(i);
                (index[i][..fi / 2].to_vec(), index[i][fi.div_ceil(2)..].to_vec())
            } else {
                (index[i].clone(), index[j].clone())
            };
            let x = xs.into_iter().map(|r| (r, field.random_nonzero(rng))).collect();
            let y = ys.into_iter().map(|c| (c, field.random_nonzero(rng))).collect();
            copy_pos[id.edge].push(copies.len());
            copies.push(CopyVectors { id, exponent, x, y });
        }
        let max_exponent = copies.iter().map(|c| c.exponent).max().unwrap_or(0);
        Ok(FactorMatrix {
            field,
            bipartite: false,
            rows: labels.len(),
            cols: labels.len(),
            row_index: index.clone(),
            col_index: index,
            row_labels: labels.clone(),
            col_labels: labels,
            copies,
            copy_pos,
            shift,
            max_exponent,
        })
    }

    /// Order of the (square) matrix.
    pub fn order(&self) -> usize {
        self.rows
    }

    /// Upper bound on the `z`-degree of the determinant and of every
    /// adjugate entry: the sum over rows of the largest exponent in the row.
    pub fn degree_bound(&self) -> usize {
        let mut rowmax = vec![None::<u64>; self.rows];
        for c in &self.copies {
            let rows = c.x.iter().map(|&(r, _)| r);
            let also: Vec<usize> = if self.bipartite { Vec::new() } else { c.y.iter().map(|&(r, _)| r).collect() };
            for r in rows.chain(also) {
                rowmax[r] = Some(rowmax[r].map_or(c.exponent, |m: u64| m.max(c.exponent)));
            }
        }
        rowmax.iter().map(|m| m.unwrap_or(0) as usize).sum()
    }

    fn coefficient(&self, c: &CopyVectors, z: u64) -> u64 {
        if c.exponent == 0 {
            1
        } else {
            self.field.pow(z, c.exponent)
        }
    }

    /// Evaluate at `z` (irrelevant for unweighted matrices).
    pub fn evaluate(&self, z: u64) -> DenseMatrix {
        self.evaluate_without(z, &|_| false)
    }

    /// Evaluate with the copies for which `skip` holds left out.
    pub fn evaluate_without(&self, z: u64, skip: &dyn Fn(CopyId) -> bool) -> DenseMatrix {
        let fld = &self.field;
        let mut m = DenseMatrix::zeros(self.rows, self.cols);
        for c in &self.copies {
            if skip(c.id) {
                continue;
            }
            let a = self.coefficient(c, z);
            for &(r, xv) in &c.x {
                let ax = fld.mul(a, xv);
                for &(col, yv) in &c.y {
                    let v = fld.mul(ax, yv);
                    m.add_at(fld, r, col, v);
                    if !self.bipartite {
                        m.add_at(fld, col, r, fld.neg(v));
                    }
                }
            }
        }
        m
    }

    /// Unweighted evaluation.
    pub fn constant(&self) -> DenseMatrix {
        self.evaluate(1)
    }

    /// `(U, V)` with `M(z) + U Vᵀ` equal to the matrix without the given
    /// copies. Bipartite: one column per copy; general: two.
    pub fn removal_update(&self, ids: &[CopyId], z: u64) -> (DenseMatrix, DenseMatrix) {
        let fld = &self.field;
        let width = if self.bipartite { ids.len() } else { 2 * ids.len() };
        let mut u = DenseMatrix::zeros(self.rows, width);
        let mut v = DenseMatrix::zeros(self.cols, width);
        for (k, id) in ids.iter().enumerate() {
            let c = &self.copies[self.copy_pos[id.edge][id.copy]];
            let a = self.coefficient(c, z);
            if self.bipartite {
                for &(r, xv) in &c.x {
                    u.set(r, k, fld.neg(fld.mul(a, xv)));
                }
                for &(col, yv) in &c.y {
                    v.set(col, k, yv);
                }
            } else {
                // −a (x yᵀ − y xᵀ) = [−a x, a y] [y, x]ᵀ
                for &(r, xv) in &c.x {
                    u.set(r, 2 * k, fld.neg(fld.mul(a, xv)));
                    v.set(r, 2 * k + 1, xv);
                }
                for &(col, yv) in &c.y {
                    u.set(col, 2 * k + 1, fld.mul(a, yv));
                    v.set(col, 2 * k, yv);
                }
            }
        }
        (u, v)
    }
}

fn check_shape(g: &Multigraph, f: &DegreeConstraint) -> Result<()> {
    if f.len() != g.n() {
        return Err(Error::input(format!(
            "degree constraint has {} entries for {} vertices",
            f.len(),
            g.n()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{det, invert, smw_update};
    use crate::rng::rng_for;

    fn field() -> PrimeField {
        PrimeField::new(2_147_483_647).unwrap()
    }

    #[test]
    fn permissible_rule() {
        let f = DegreeConstraint::new(vec![1, 2, 3, 4]);
        assert!(permissible(1, 0, 2, 2, &f).unwrap());
        assert!(!permissible(2, 0, 1, 0, &f).unwrap());
        assert!(!permissible(0, 0, 0, 0, &f).unwrap());
        assert!(permissible(3, 1, 3, 2, &f).unwrap());
        assert!(!permissible(3, 2, 3, 1, &f).unwrap());
        assert!(permissible(2, 0, 2, 2, &f).unwrap());
        assert!(!permissible(2, 0, 2, 1, &f).unwrap());
        assert!(permissible(0, 1, 1, 0, &f).is_err());
    }

    #[test]
    fn k2_matrices() {
        let fld = field();
        let mut rng = rng_for(1, 0);
        let mut g = Multigraph::new(2);
        g.add_plain(0, 1, 1).unwrap();
        let f = DegreeConstraint::uniform(2, 1);
        let b = FactorMatrix::build_bipartite(&g, &f, &[0, 1], fld, false, &mut rng).unwrap();
        assert_eq!(b.order(), 1);
        assert_ne!(det(&fld, &b.constant()).unwrap(), 0);

        let m = FactorMatrix::build_general(&g, &f, fld, false, &mut rng).unwrap();
        let e = m.constant();
        assert_eq!(e.get(0, 0), 0);
        assert_eq!(e.get(0, 1), fld.neg(e.get(1, 0)));
        assert_eq!(det(&fld, &e).unwrap(), fld.mul(e.get(0, 1), e.get(0, 1)));
    }

    #[test]
    fn parallel_copies_sum() {
        let fld = field();
        let mut rng = rng_for(2, 0);
        let mut g = Multigraph::new(2);
        g.add_plain(0, 1, 2).unwrap();
        let f = DegreeConstraint::uniform(2, 1);
        let b = FactorMatrix::build_bipartite(&g, &f, &[0, 1], fld, false, &mut rng).unwrap();
        let want = b.copies.iter().fold(0, |acc, c| fld.add(acc, fld.mul(c.x[0].1, c.y[0].1)));
        assert_eq!(b.constant().get(0, 0), want);
    }

    #[test]
    fn empty_bipartite_is_singular() {
        let g = Multigraph::new(2);
        let f = DegreeConstraint::uniform(2, 1);
        let b = FactorMatrix::build_bipartite(&g, &f, &[0, 1], field(), false, &mut rng_for(0, 0)).unwrap();
        assert!(b.constant().is_zero());
        assert!(FactorMatrix::build_bipartite(&g, &DegreeConstraint::new(vec![1, 2]), &[0, 1], field(), false, &mut rng_for(0, 0)).is_err());
    }

    #[test]
    fn loops() {
        let fld = field();
        let mut rng = rng_for(3, 0);
        let mut g = Multigraph::new(1);
        g.add_plain(0, 0, 1).unwrap();
        let one = FactorMatrix::build_general(&g, &DegreeConstraint::uniform(1, 1), fld, false, &mut rng).unwrap();
        assert!(one.constant().is_zero());
        let two = FactorMatrix::build_general(&g, &DegreeConstraint::uniform(1, 2), fld, false, &mut rng).unwrap();
        let m = two.constant();
        assert_ne!(m.get(0, 1), 0);
        assert_eq!(m.get(1, 0), fld.neg(m.get(0, 1)));
        assert_ne!(det(&fld, &m).unwrap(), 0);
    }

    #[test]
    fn removal_update_matches_rebuild() {
        let fld = field();
        let mut rng = rng_for(4, 0);
        let mut g = Multigraph::new(4);
        g.add_edge(0, 1, vec![1, 2]).unwrap();
        g.add_edge(1, 2, vec![3]).unwrap();
        g.add_edge(2, 3, vec![0, 4, 1]).unwrap();
        g.add_edge(0, 3, vec![2]).unwrap();
        g.add_edge(1, 1, vec![5]).unwrap();
        let f = DegreeConstraint::new(vec![2, 3, 2, 3]);
        let m = FactorMatrix::build_general(&g, &f, fld, true, &mut rng).unwrap();
        let z = 12345;
        let full = m.evaluate(z);
        for b in 0..full.rows() {
            for a in 0..full.cols() {
                assert_eq!(full.get(a, b), fld.neg(full.get(b, a)));
            }
        }
        let ids = [CopyId { edge: 2, copy: 0 }, CopyId { edge: 2, copy: 2 }];
        let (u, v) = m.removal_update(&ids, z);
        let reduced = m.evaluate_without(z, &|c| ids.contains(&c));
        assert_eq!(full.add(&fld, &u.mul(&fld, &v.transpose()).unwrap()), reduced);
        if let Some(inv) = invert(&fld, &full).unwrap() {
            let upd = smw_update(&fld, &inv, &u, &v).unwrap();
            assert_eq!(upd, invert(&fld, &reduced).unwrap());
        }
    }
}
