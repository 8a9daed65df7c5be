//! Random instance generators and small independent reference checks
//! shared by the integration tests.
#![allow(dead_code)]

use factorkit::flow::{Cost, FlowNetwork};
use factorkit::graph::{CopyId, DegreeConstraint, Multigraph, Vertex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random multigraph: every pair (and, with `loop_p > 0`, every vertex)
/// gets an edge with probability `p` or `loop_p`, with `1..=mu` copies of
/// weight in `-w..=w`.
pub fn multigraph(rng: &mut impl Rng, n: usize, p: f64, loop_p: f64, mu: usize, w: i64) -> Multigraph {
    let mut g = Multigraph::new(n);
    for u in 0..n {
        for v in u..n {
            if rng.gen_bool(if u == v { loop_p } else { p }) {
                let k = rng.gen_range(1..=mu);
                g.add_edge(u, v, (0..k).map(|_| rng.gen_range(-w..=w)).collect()).unwrap();
            }
        }
    }
    g
}

/// Random bipartite multigraph with sides `0..n0` and `n0..n0+n1`.
pub fn bipartite(rng: &mut impl Rng, n0: usize, n1: usize, p: f64, mu: usize, w: i64) -> (Multigraph, Vec<u8>) {
    let n = n0 + n1;
    let mut g = Multigraph::new(n);
    for u in 0..n0 {
        for v in n0..n {
            if rng.gen_bool(p) {
                let k = rng.gen_range(1..=mu);
                g.add_edge(u, v, (0..k).map(|_| rng.gen_range(-w..=w)).collect()).unwrap();
            }
        }
    }
    (g, (0..n).map(|v| u8::from(v >= n0)).collect())
}

/// Degrees of a random sub-multiset of the copies, so an f-factor exists.
pub fn planted_degrees(rng: &mut impl Rng, g: &Multigraph) -> DegreeConstraint {
    let mut deg = vec![0usize; g.n()];
    for e in g.edges() {
        let k = rng.gen_range(0..=e.mult());
        deg[e.u] += k;
        deg[e.v] += k;
    }
    DegreeConstraint::new(deg)
}

/// Existence of an f-factor by plain backtracking over copy counts.
pub fn factor_exists(g: &Multigraph, f: &DegreeConstraint) -> bool {
    fn go(g: &Multigraph, e: usize, need: &mut [usize], last: &[Option<usize>]) -> bool {
        if e == g.m() {
            return need.iter().all(|&x| x == 0);
        }
        let ed = g.edge(e);
        let per = if ed.is_loop() { 2 } else { 1 };
        let mut taken = 0;
        let mut found = false;
        loop {
            let settled = [ed.u, ed.v].iter().all(|&x| last[x] != Some(e) || need[x] == 0);
            if settled && go(g, e + 1, need, last) {
                found = true;
                break;
            }
            if taken == ed.mult() || need[ed.u] < per || need[ed.v] < 1 {
                break;
            }
            need[ed.u] -= per;
            if !ed.is_loop() {
                need[ed.v] -= 1;
            }
            taken += 1;
        }
        need[ed.u] += taken * per;
        if !ed.is_loop() {
            need[ed.v] += taken;
        }
        found
    }
    let mut last = vec![None; g.n()];
    for (i, e) in g.edges().iter().enumerate() {
        last[e.u] = Some(i);
        last[e.v] = Some(i);
    }
    let mut need = f.values().to_vec();
    go(g, 0, &mut need, &last)
}

/// A closed walk that uses every vertex of `cycle` exactly twice (as edge
/// ends), is connected, and has negative weight.
pub fn is_simple_negative_cycle(g: &Multigraph, cycle: &[CopyId]) -> bool {
    if cycle.is_empty() {
        return false;
    }
    let mut deg = vec![0usize; g.n()];
    let mut adj: Vec<Vec<Vertex>> = vec![Vec::new(); g.n()];
    for c in cycle {
        let e = g.edge(c.edge);
        deg[e.u] += 1;
        deg[e.v] += 1;
        adj[e.u].push(e.v);
        adj[e.v].push(e.u);
    }
    if deg.iter().any(|&d| d != 0 && d != 2) {
        return false;
    }
    let start = g.edge(cycle[0].edge).u;
    let mut seen = vec![false; g.n()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(x) = stack.pop() {
        for &y in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    let distinct: std::collections::BTreeSet<_> = cycle.iter().collect();
    (0..g.n()).all(|v| deg[v] == 0 || seen[v])
        && distinct.len() == cycle.len()
        && cycle.iter().map(|&c| g.weight(c)).sum::<i64>() < 0
}

/// Connected graph: a random spanning tree plus extra edges, weights in
/// `-w..=w`.
pub fn connected(rng: &mut impl Rng, n: usize, extra: f64, w: i64) -> Multigraph {
    let mut g = Multigraph::new(n);
    for v in 1..n {
        let u = rng.gen_range(0..v);
        g.add_edge(u, v, vec![rng.gen_range(-w..=w)]).unwrap();
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(extra) {
                g.add_edge(u, v, vec![rng.gen_range(-w..=w)]).unwrap();
            }
        }
    }
    g
}

/// Random network on `n` vertices with source 0 and sink `n − 1`.
pub fn network(rng: &mut impl Rng, n: usize, d: usize, arcs: usize, costs: bool, convex: bool, lower: bool) -> FlowNetwork {
    let mut net = FlowNetwork::new(n, 0, n - 1);
    for v in 1..n - 1 {
        net.vertex_cap[v] = rng.gen_range(1..=d);
        if lower && rng.gen_bool(0.2) {
            net.vertex_lower[v] = 1;
        }
    }
    for _ in 0..arcs {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u == v || (lower && (v == 0 || u == n - 1)) {
            continue;
        }
        let i = net.add_arc(u, v, rng.gen_range(1..=d), if costs { rng.gen_range(-3..=3) } else { 0 });
        if convex && rng.gen_bool(0.4) {
            let a = rng.gen_range(-2..=1);
            let b = a + rng.gen_range(0..=2);
            let c = b + rng.gen_range(0..=3);
            net.arcs[i].cost = Cost::Convex(vec![(1, a), (2, a + b), (3, a + b + c)]);
        }
        if lower && rng.gen_bool(0.3) {
            net.arcs[i].lower = 1;
        }
    }
    net
}
