mod common;

use factorkit::flow::{check_flow, max_flow, min_cost_max_flow};
use factorkit::oracle::{brute_flow, reference_max_flow, OracleBudget};
use factorkit::{Error, SolveConfig};
use rand::Rng;

#[test]
fn max_flow_matches_augmenting_paths() {
    let mut rng = common::rng(1);
    for it in 0..100 {
        let n = rng.gen_range(2..=8);
        let arcs = rng.gen_range(0..=12);
        let net = common::network(&mut rng, n, 4, arcs, false, false, false);
        let r = max_flow(&net, &SolveConfig::with_seed(it)).unwrap();
        assert_eq!(r.value, reference_max_flow(&net), "network {it}");
        assert_eq!(check_flow(&net, &r.flow).unwrap().0, r.value);
    }
}

#[test]
fn min_cost_matches_exhaustive_search() {
    let mut rng = common::rng(2);
    let (mut ok, mut infeasible) = (0, 0);
    for it in 0..300 {
        let n = rng.gen_range(2..=5);
        let arcs = rng.gen_range(0..=6);
        let net = common::network(&mut rng, n, 3, arcs, true, true, true);
        let want = brute_flow(&net, OracleBudget::default()).unwrap();
        match (want, min_cost_max_flow(&net, &SolveConfig::with_seed(it))) {
            (Some(w), Ok(r)) => {
                assert_eq!((r.value, r.cost), w, "network {it}");
                assert_eq!(check_flow(&net, &r.flow).unwrap(), w);
                ok += 1;
            }
            (None, Err(Error::Infeasible(_))) => infeasible += 1,
            (w, g) => panic!("network {it}: exhaustive {w:?}, solver {:?}", g.map(|r| (r.value, r.cost))),
        }
    }
    assert!(ok > 50 && infeasible > 20, "{ok} feasible, {infeasible} infeasible");
}
