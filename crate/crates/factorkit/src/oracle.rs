//! Exhaustive reference solvers. They share no code with the algebraic
//! pipeline beyond the graph model and refuse to run past their budget.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{Cost, FlowNetwork};
use crate::graph::{CopyId, DegreeConstraint, EdgeSubset, Multigraph, Vertex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleBudget {
    /// Largest number of factors or paths reported.
    pub max_results: usize,
    /// Largest `φ` accepted by the factor enumerators.
    pub max_phi: usize,
    /// Largest number of search nodes visited.
    pub max_nodes: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget { max_results: 1_000_000, max_phi: 24, max_nodes: 50_000_000 }
    }
}

/// Copies of every edge grouped by weight; classes in ascending copy order.
fn weight_classes(g: &Multigraph) -> Vec<Vec<Vec<usize>>> {
    g.edges()
        .iter()
        .map(|e| {
            let mut classes: Vec<(i64, Vec<usize>)> = Vec::new();
            for (k, &w) in e.weights.iter().enumerate() {
                match classes.iter_mut().find(|(cw, _)| *cw == w) {
                    Some((_, list)) => list.push(k),
                    None => classes.push((w, vec![k])),
                }
            }
            classes.into_iter().map(|(_, l)| l).collect()
        })
        .collect()
}

struct Enumerator<'a> {
    g: &'a Multigraph,
    order: Vec<usize>,
    classes: Vec<Vec<Vec<usize>>>,
    residual: Vec<usize>,
    /// Number of still unvisited edge slots (in `order`) touching each vertex.
    remaining_at: Vec<Vec<usize>>,
    current: Vec<CopyId>,
    nodes: u64,
    budget: OracleBudget,
}

impl<'a> Enumerator<'a> {
    fn new(g: &'a Multigraph, f: &DegreeConstraint, budget: OracleBudget, reverse: bool) -> Result<Self> {
        if f.len() != g.n() {
            return Err(Error::input("degree constraint length differs from vertex count"));
        }
        if f.phi() > budget.max_phi {
            return Err(Error::Budget(format!("phi {} exceeds {}", f.phi(), budget.max_phi)));
        }
        let mut order: Vec<usize> = (0..g.m()).collect();
        if reverse {
            order.reverse();
        }
        // capacity of edges at positions >= p touching v, for pruning
        let mut remaining_at = vec![vec![0; g.n()]; order.len() + 1];
        for p in (0..order.len()).rev() {
            remaining_at[p] = remaining_at[p + 1].clone();
            let e = g.edge(order[p]);
            remaining_at[p][e.u] += e.mult() * if e.is_loop() { 2 } else { 1 };
            if !e.is_loop() {
                remaining_at[p][e.v] += e.mult();
            }
        }
        Ok(Enumerator {
            g,
            order,
            classes: weight_classes(g),
            residual: f.values().to_vec(),
            remaining_at,
            current: Vec::new(),
            nodes: 0,
            budget,
        })
    }

    /// Visit every factor; `visit` returns false to stop early.
    fn run(&mut self, visit: &mut dyn FnMut(&[CopyId]) -> bool) -> Result<()> {
        self.edge_step(0, visit).map(|_| ())
    }

    fn edge_step(&mut self, pos: usize, visit: &mut dyn FnMut(&[CopyId]) -> bool) -> Result<bool> {
        self.nodes += 1;
        if self.nodes > self.budget.max_nodes {
            return Err(Error::Budget(format!("more than {} search nodes", self.budget.max_nodes)));
        }
        if (0..self.g.n()).any(|v| self.residual[v] > self.remaining_at[pos][v]) {
            return Ok(true);
        }
        if pos == self.order.len() {
            return Ok(visit(&self.current));
        }
        self.class_step(pos, 0, visit)
    }

    fn class_step(&mut self, pos: usize, class: usize, visit: &mut dyn FnMut(&[CopyId]) -> bool) -> Result<bool> {
        let eid = self.order[pos];
        if class == self.classes[eid].len() {
            return self.edge_step(pos + 1, visit);
        }
        let e = self.g.edge(eid);
        let (u, v) = (e.u, e.v);
        let per = if e.is_loop() { 2 } else { 1 };
        let copies = self.classes[eid][class].clone();
        let mut taken = 0;
        loop {
            if !self.class_step(pos, class + 1, visit)? {
                return Ok(false);
            }
            if taken == copies.len() {
                break;
            }
            let ok = if u == v { self.residual[u] >= 2 } else { self.residual[u] >= 1 && self.residual[v] >= 1 };
            if !ok {
                break;
            }
            self.residual[u] -= per;
            if u != v {
                self.residual[v] -= 1;
            }
            self.current.push(CopyId { edge: eid, copy: copies[taken] });
            taken += 1;
        }
        for _ in 0..taken {
            self.current.pop();
            self.residual[u] += per;
            if u != v {
                self.residual[v] += 1;
            }
        }
        Ok(true)
    }
}

fn collect(g: &Multigraph, f: &DegreeConstraint, budget: OracleBudget, reverse: bool) -> Result<Vec<EdgeSubset>> {
    let mut en = Enumerator::new(g, f, budget, reverse)?;
    let mut out = Vec::new();
    let mut overflow = false;
    en.run(&mut |c| {
        if out.len() == budget.max_results {
            overflow = true;
            return false;
        }
        out.push(c.iter().copied().collect());
        true
    })?;
    if overflow {
        return Err(Error::Budget(format!("more than {} factors", budget.max_results)));
    }
    Ok(out)
}

/// All f-factors of `g`, one per choice of copy counts within each class of
/// equal-weight parallel copies (the lowest copy indices are used).
pub fn enumerate_factors(g: &Multigraph, f: &DegreeConstraint, budget: OracleBudget) -> Result<Vec<EdgeSubset>> {
    collect(g, f, budget, false)
}

/// [`enumerate_factors`] with edges visited in reverse order.
pub fn enumerate_factors_reverse(
    g: &Multigraph,
    f: &DegreeConstraint,
    budget: OracleBudget,
) -> Result<Vec<EdgeSubset>> {
    collect(g, f, budget, true)
}

/// Maximum weight of an f-factor and a witness, ties broken towards the
/// lexicographically smallest copy set. `None` when there is no f-factor.
pub fn brute_max_weight(
    g: &Multigraph,
    f: &DegreeConstraint,
    budget: OracleBudget,
) -> Result<Option<(i64, EdgeSubset)>> {
    let mut en = Enumerator::new(g, f, budget, false)?;
    let mut best: Option<(i64, Vec<CopyId>)> = None;
    en.run(&mut |c| {
        let w: i64 = c.iter().map(|&id| g.weight(id)).sum();
        let mut key = c.to_vec();
        key.sort_unstable();
        let better = match &best {
            None => true,
            Some((bw, bk)) => w > *bw || (w == *bw && key < *bk),
        };
        if better {
            best = Some((w, key));
        }
        true
    })?;
    Ok(best.map(|(w, k)| (w, k.into_iter().collect())))
}

/// Outcome of [`brute_shortest`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShortestOutcome {
    /// `d[v]` is the least weight of a simple `vt`-path, `None` if unreachable.
    Distances(Vec<Option<i64>>),
    /// Copies of a negative-weight cycle.
    NegativeCycle(Vec<CopyId>),
}

/// Cheapest and second cheapest copy for every unordered vertex pair.
fn cheapest_pairs(g: &Multigraph) -> HashMap<(Vertex, Vertex), Vec<(i64, CopyId)>> {
    let mut best: HashMap<(Vertex, Vertex), Vec<(i64, CopyId)>> = HashMap::new();
    for id in g.copies() {
        let e = g.edge(id.edge);
        if e.is_loop() {
            continue;
        }
        let key = (e.u.min(e.v), e.u.max(e.v));
        let list = best.entry(key).or_default();
        list.push((g.weight(id), id));
        list.sort();
        list.truncate(2);
    }
    best
}

/// Find a negative cycle by enumerating simple cycles (loops and pairs of
/// parallel copies included).
pub fn brute_negative_cycle(g: &Multigraph, budget: OracleBudget) -> Result<Option<Vec<CopyId>>> {
    for id in g.copies() {
        if g.edge(id.edge).is_loop() && g.weight(id) < 0 {
            return Ok(Some(vec![id]));
        }
    }
    let pairs = cheapest_pairs(g);
    for list in pairs.values() {
        if list.len() == 2 && list[0].0 + list[1].0 < 0 {
            return Ok(Some(vec![list[0].1, list[1].1]));
        }
    }
    let n = g.n();
    let mut adj: Vec<Vec<(Vertex, i64, CopyId)>> = vec![Vec::new(); n];
    for (&(a, b), list) in &pairs {
        adj[a].push((b, list[0].0, list[0].1));
        adj[b].push((a, list[0].0, list[0].1));
    }
    for a in adj.iter_mut() {
        a.sort_by_key(|x| x.0);
    }
    let mut nodes = 0u64;
    // cycles whose smallest vertex is `s`
    fn dfs(
        s: Vertex,
        x: Vertex,
        weight: i64,
        adj: &[Vec<(Vertex, i64, CopyId)>],
        on: &mut [bool],
        path: &mut Vec<CopyId>,
        nodes: &mut u64,
        budget: &OracleBudget,
    ) -> Result<Option<Vec<CopyId>>> {
        *nodes += 1;
        if *nodes > budget.max_nodes {
            return Err(Error::Budget("cycle enumeration".into()));
        }
        for &(y, w, id) in &adj[x] {
            if y == s && path.len() >= 2 {
                if weight + w < 0 {
                    let mut c = path.clone();
                    c.push(id);
                    return Ok(Some(c));
                }
                continue;
            }
            if y <= s || on[y] {
                continue;
            }
            on[y] = true;
            path.push(id);
            let r = dfs(s, y, weight + w, adj, on, path, nodes, budget)?;
            path.pop();
            on[y] = false;
            if r.is_some() {
                return Ok(r);
            }
        }
        Ok(None)
    }
    for s in 0..n {
        let mut on = vec![false; n];
        on[s] = true;
        if let Some(c) = dfs(s, s, 0, &adj, &mut on, &mut Vec::new(), &mut nodes, &budget)? {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

/// Least weight of a simple `vt`-path for every `v`, or a negative cycle.
pub fn brute_shortest(g: &Multigraph, t: Vertex, budget: OracleBudget) -> Result<ShortestOutcome> {
    if t >= g.n() {
        return Err(Error::input(format!("sink {t} out of range")));
    }
    if let Some(c) = brute_negative_cycle(g, budget)? {
        return Ok(ShortestOutcome::NegativeCycle(c));
    }
    Ok(ShortestOutcome::Distances(brute_paths(g, t, budget)?.into_iter().map(|p| p.map(|(w, _)| w)).collect()))
}

/// Least weight simple `vt`-path for every `v` (ignoring negative cycles),
/// with the copies of a witness path listed from `v` to `t`.
pub fn brute_paths(g: &Multigraph, t: Vertex, budget: OracleBudget) -> Result<Vec<Option<(i64, Vec<CopyId>)>>> {
    let n = g.n();
    let pairs = cheapest_pairs(g);
    let mut adj: Vec<Vec<(Vertex, i64, CopyId)>> = vec![Vec::new(); n];
    for (&(a, b), list) in &pairs {
        adj[a].push((b, list[0].0, list[0].1));
        adj[b].push((a, list[0].0, list[0].1));
    }
    for a in adj.iter_mut() {
        a.sort_by_key(|x| x.0);
    }
    let mut best: Vec<Option<(i64, Vec<CopyId>)>> = vec![None; n];
    best[t] = Some((0, Vec::new()));
    let mut nodes = 0u64;
    // paths grown from t; the path to x reversed is an xt-path
    fn grow(
        x: Vertex,
        weight: i64,
        adj: &[Vec<(Vertex, i64, CopyId)>],
        on: &mut [bool],
        path: &mut Vec<CopyId>,
        best: &mut [Option<(i64, Vec<CopyId>)>],
        nodes: &mut u64,
        budget: &OracleBudget,
    ) -> Result<()> {
        *nodes += 1;
        if *nodes > budget.max_nodes {
            return Err(Error::Budget("path enumeration".into()));
        }
        for &(y, w, id) in &adj[x] {
            if on[y] {
                continue;
            }
            on[y] = true;
            path.push(id);
            let nw = weight + w;
            let mut rev = path.clone();
            rev.reverse();
            let better = match &best[y] {
                None => true,
                Some((bw, bp)) => nw < *bw || (nw == *bw && rev < *bp),
            };
            if better {
                best[y] = Some((nw, rev));
            }
            grow(y, nw, adj, on, path, best, nodes, budget)?;
            path.pop();
            on[y] = false;
        }
        Ok(())
    }
    let mut on = vec![false; n];
    on[t] = true;
    grow(t, 0, &adj, &mut on, &mut Vec::new(), &mut best, &mut nodes, &budget)?;
    Ok(best)
}

fn matching_dp(
    g: &Multigraph,
    mask: u64,
    perfect: bool,
    adj: &[Vec<(Vertex, i64)>],
    memo: &mut HashMap<u64, Option<i64>>,
) -> Option<i64> {
    if mask == 0 {
        return Some(0);
    }
    if let Some(&v) = memo.get(&mask) {
        return v;
    }
    let x = mask.trailing_zeros() as usize;
    let rest = mask & !(1 << x);
    let mut best = if perfect { None } else { matching_dp(g, rest, perfect, adj, memo) };
    for &(y, w) in &adj[x] {
        if rest & (1 << y) != 0 {
            if let Some(sub) = matching_dp(g, rest & !(1 << y), perfect, adj, memo) {
                best = Some(best.map_or(w + sub, |b: i64| b.max(w + sub)));
            }
        }
    }
    memo.insert(mask, best);
    best
}

fn matching_adj(g: &Multigraph) -> Result<Vec<Vec<(Vertex, i64)>>> {
    if g.n() > 63 {
        return Err(Error::Budget(format!("{} vertices exceed the matching oracle", g.n())));
    }
    let mut adj = vec![Vec::new(); g.n()];
    for id in g.copies() {
        let e = g.edge(id.edge);
        if !e.is_loop() {
            adj[e.u].push((e.v, g.weight(id)));
            adj[e.v].push((e.u, g.weight(id)));
        }
    }
    Ok(adj)
}

fn vertex_mask(n: usize, avoid: Option<Vertex>) -> u64 {
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    match avoid {
        Some(v) => full & !(1 << v),
        None => full,
    }
}

/// Maximum weight of a (not necessarily perfect) matching of `g − avoid`.
pub fn brute_matching_max(g: &Multigraph, avoid: Option<Vertex>) -> Result<i64> {
    let adj = matching_adj(g)?;
    let mut memo = HashMap::new();
    Ok(matching_dp(g, vertex_mask(g.n(), avoid), false, &adj, &mut memo).unwrap_or(0))
}

/// Maximum weight of a perfect matching of `g − avoid`, if one exists.
pub fn brute_perfect_matching_max(g: &Multigraph, avoid: Option<Vertex>) -> Result<Option<i64>> {
    let adj = matching_adj(g)?;
    let mut memo = HashMap::new();
    Ok(matching_dp(g, vertex_mask(g.n(), avoid), true, &adj, &mut memo))
}

/// Maximum flow value by shortest augmenting paths on the vertex-split
/// network. Lower bounds and costs are ignored.
pub fn reference_max_flow(net: &FlowNetwork) -> i64 {
    let n = 2 * net.n;
    let big = net.arcs.iter().map(|a| a.cap as i64).sum::<i64>() + 1;
    let mut cap = vec![vec![0i64; n]; n];
    for v in 0..net.n {
        cap[2 * v][2 * v + 1] = if v == net.s || v == net.t { big } else { net.vertex_cap[v] as i64 };
    }
    for a in &net.arcs {
        if a.from != a.to {
            cap[2 * a.from + 1][2 * a.to] += a.cap as i64;
        }
    }
    let (src, dst) = (2 * net.s + 1, 2 * net.t);
    let mut value = 0;
    loop {
        let mut prev = vec![usize::MAX; n];
        prev[src] = src;
        let mut queue = std::collections::VecDeque::from([src]);
        while let Some(x) = queue.pop_front() {
            for y in 0..n {
                if prev[y] == usize::MAX && cap[x][y] > 0 {
                    prev[y] = x;
                    queue.push_back(y);
                }
            }
        }
        if prev[dst] == usize::MAX {
            return value;
        }
        let mut push = big;
        let mut y = dst;
        while y != src {
            push = push.min(cap[prev[y]][y]);
            y = prev[y];
        }
        let mut y = dst;
        while y != src {
            cap[prev[y]][y] -= push;
            cap[y][prev[y]] += push;
            y = prev[y];
        }
        value += push;
    }
}

fn arc_cost(cost: &Cost, k: usize) -> i64 {
    match cost {
        Cost::Linear(a) => a * k as i64,
        Cost::Convex(points) => {
            let mut pts = vec![(0usize, 0i64)];
            pts.extend(points.iter().copied().filter(|p| p.0 > 0));
            pts.sort_unstable();
            if let Some(&(_, c)) = pts.iter().find(|p| p.0 == k) {
                return c;
            }
            let (a, b) = match pts.iter().position(|p| p.0 > k) {
                Some(j) => (pts[j - 1], pts[j]),
                None if pts.len() >= 2 => (pts[pts.len() - 2], pts[pts.len() - 1]),
                None => return 0,
            };
            a.1 + (b.1 - a.1) / (b.0 - a.0) as i64 * (k as i64 - a.0 as i64)
        }
    }
}

/// Exhaustive search over integral flows: the maximum value and the least
/// cost among flows of that value, or `None` when no flow meets the bounds.
pub fn brute_flow(net: &FlowNetwork, budget: OracleBudget) -> Result<Option<(i64, i64)>> {
    struct Search<'a> {
        net: &'a FlowNetwork,
        flow: Vec<usize>,
        best: Option<(i64, i64)>,
        nodes: u64,
        budget: OracleBudget,
    }
    impl Search<'_> {
        fn run(&mut self, i: usize) -> Result<()> {
            self.nodes += 1;
            if self.nodes > self.budget.max_nodes {
                return Err(Error::Budget(format!("more than {} search nodes", self.budget.max_nodes)));
            }
            let net = self.net;
            if i == net.arcs.len() {
                let mut bal = vec![0i64; net.n];
                let mut through = vec![0usize; net.n];
                let mut cost = 0;
                for (a, &g) in net.arcs.iter().zip(&self.flow) {
                    bal[a.to] += g as i64;
                    bal[a.from] -= g as i64;
                    through[a.to] += g;
                    cost += arc_cost(&a.cost, g);
                }
                for v in (0..net.n).filter(|&v| v != net.s && v != net.t) {
                    if bal[v] != 0 || through[v] > net.vertex_cap[v] || through[v] < net.vertex_lower[v] {
                        return Ok(());
                    }
                }
                let cand = (-bal[net.s], cost);
                self.best = match self.best {
                    Some(b) if b.0 > cand.0 || (b.0 == cand.0 && b.1 <= cand.1) => Some(b),
                    _ => Some(cand),
                };
                return Ok(());
            }
            let a = &net.arcs[i];
            for g in a.lower..=a.cap {
                self.flow[i] = g;
                self.run(i + 1)?;
            }
            Ok(())
        }
    }
    let mut search = Search { net, flow: vec![0; net.arcs.len()], best: None, nodes: 0, budget };
    search.run(0)?;
    Ok(search.best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize, i64)]) -> Multigraph {
        let mut g = Multigraph::new(n);
        for &(u, v, w) in edges {
            g.add_edge(u, v, vec![w]).unwrap();
        }
        g
    }

    #[test]
    fn factor_counts() {
        let b = OracleBudget::default();
        let tri = graph(3, &[(0, 1, 0), (1, 2, 0), (0, 2, 0)]);
        assert_eq!(enumerate_factors(&tri, &DegreeConstraint::uniform(3, 2), b).unwrap().len(), 1);
        let c4 = graph(4, &[(0, 1, 0), (1, 2, 0), (2, 3, 0), (3, 0, 0)]);
        assert_eq!(enumerate_factors(&c4, &DegreeConstraint::uniform(4, 1), b).unwrap().len(), 2);
        let path = graph(3, &[(0, 1, 0), (1, 2, 0)]);
        assert!(enumerate_factors(&path, &DegreeConstraint::uniform(3, 1), b).unwrap().is_empty());
    }

    #[test]
    fn loops_and_classes() {
        let b = OracleBudget::default();
        let mut g = Multigraph::new(1);
        g.add_edge(0, 0, vec![1, 1, 2]).unwrap();
        let fs = enumerate_factors(&g, &DegreeConstraint::uniform(1, 2), b).unwrap();
        assert_eq!(fs.len(), 2);
        let (w, _) = brute_max_weight(&g, &DegreeConstraint::uniform(1, 4), b).unwrap().unwrap();
        assert_eq!(w, 3);
    }

    #[test]
    fn max_weight_examples() {
        let b = OracleBudget::default();
        let k2 = graph(2, &[(0, 1, 7)]);
        assert_eq!(brute_max_weight(&k2, &DegreeConstraint::uniform(2, 1), b).unwrap().unwrap().0, 7);
        let mut par = Multigraph::new(2);
        par.add_edge(0, 1, vec![3, 9]).unwrap();
        let (w, s) = brute_max_weight(&par, &DegreeConstraint::uniform(2, 1), b).unwrap().unwrap();
        assert_eq!(w, 9);
        assert!(s.contains(&CopyId { edge: 0, copy: 1 }));
    }

    #[test]
    fn shortest_examples() {
        let b = OracleBudget::default();
        let e = graph(2, &[(0, 1, 3)]);
        assert_eq!(brute_shortest(&e, 1, b).unwrap(), ShortestOutcome::Distances(vec![Some(3), Some(0)]));
        let neg = graph(3, &[(0, 1, -3), (1, 2, 1), (0, 2, 1)]);
        assert!(matches!(brute_shortest(&neg, 2, b).unwrap(), ShortestOutcome::NegativeCycle(_)));
        let tri = graph(3, &[(0, 1, -2), (0, 2, 1), (1, 2, 1)]);
        assert_eq!(
            brute_shortest(&tri, 2, b).unwrap(),
            ShortestOutcome::Distances(vec![Some(-1), Some(-1), Some(0)])
        );
    }

    #[test]
    fn matching_examples() {
        let k2 = graph(2, &[(0, 1, 5)]);
        assert_eq!(brute_matching_max(&k2, None).unwrap(), 5);
        assert_eq!(brute_matching_max(&k2, Some(0)).unwrap(), 0);
        assert_eq!(brute_perfect_matching_max(&k2, Some(0)).unwrap(), None);
        let p4 = graph(4, &[(0, 1, 1), (1, 2, 10), (2, 3, 1)]);
        assert_eq!(brute_matching_max(&p4, None).unwrap(), 10);
        assert_eq!(brute_perfect_matching_max(&p4, None).unwrap(), Some(2));
    }
}
