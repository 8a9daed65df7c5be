mod common;

use factorkit::graph::DegreeConstraint;
use factorkit::io::{parse_instance, run_instance, serialize_instance, Command, Flags, GraphInstance, Instance, InstanceKind, FlowInstance};
use factorkit::field::PrimeField;
use factorkit::linalg::{invert, smw_update, DenseMatrix};
use factorkit::rng::rng_for;
use factorkit::solve::has_factor;
use factorkit::sssp::{sssp, Backend};
use factorkit::SolveConfig;
use proptest::prelude::*;

const P: u64 = 2_147_483_647;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_instances_survive_a_round_trip(seed in any::<u64>(), n in 1usize..7, sink in any::<bool>()) {
        let mut rng = common::rng(seed);
        let graph = common::multigraph(&mut rng, n, 0.5, 0.2, 3, 9);
        let f = common::planted_degrees(&mut rng, &graph);
        let (kind, t) = if sink { (InstanceKind::Sssp, Some(n - 1)) } else { (InstanceKind::Ffactor, None) };
        let inst = Instance::Graph(GraphInstance { kind, graph, f, t });
        prop_assert_eq!(parse_instance(&serialize_instance(&inst)).unwrap(), inst);
    }

    #[test]
    fn flow_instances_survive_a_round_trip(seed in any::<u64>(), n in 2usize..7, arcs in 0usize..10) {
        let mut rng = common::rng(seed);
        let network = common::network(&mut rng, n, 4, arcs, true, true, true);
        let inst = Instance::Flow(FlowInstance { kind: InstanceKind::Mincost, network });
        prop_assert_eq!(parse_instance(&serialize_instance(&inst)).unwrap(), inst);
    }

    #[test]
    fn existence_agrees_with_backtracking(seed in any::<u64>(), n in 1usize..7, bump in any::<bool>()) {
        let mut rng = common::rng(seed);
        let g = common::multigraph(&mut rng, n, 0.5, 0.2, 2, 1);
        let mut f = common::planted_degrees(&mut rng, &g).values().to_vec();
        if bump {
            f[seed as usize % n] += 1;
        }
        let f = DegreeConstraint::new(f);
        let got = has_factor(&g, &f, 2, &SolveConfig::with_seed(seed)).unwrap();
        prop_assert_eq!(got, common::factor_exists(&g, &f));
    }

    #[test]
    fn low_rank_update_matches_direct_inverse(seed in any::<u64>(), n in 1usize..7, k in 1usize..4) {
        let fld = PrimeField::new(P).unwrap();
        let mut rng = rng_for(seed, 0);
        let a = DenseMatrix::random(&fld, n, n, &mut rng);
        let u = DenseMatrix::random(&fld, n, k, &mut rng);
        let v = DenseMatrix::random(&fld, n, k, &mut rng);
        let Some(inv) = invert(&fld, &a).unwrap() else { return Ok(()) };
        let updated = a.add(&fld, &u.mul(&fld, &v.transpose()).unwrap());
        prop_assert_eq!(smw_update(&fld, &inv, &u, &v).unwrap(), invert(&fld, &updated).unwrap());
    }

    #[test]
    fn same_seed_gives_the_same_envelope(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = common::rng(seed);
        let graph = common::multigraph(&mut rng, n, 0.6, 0.2, 2, 5);
        let f = common::planted_degrees(&mut rng, &graph);
        let inst = Instance::Graph(GraphInstance { kind: InstanceKind::Ffactor, graph, f, t: None });
        let flags = Flags { seed, ..Flags::default() };
        let a = serde_json::to_string(&run_instance(Command::FfactorMax, &inst, None, &flags)).unwrap();
        let b = serde_json::to_string(&run_instance(Command::FfactorMax, &inst, None, &flags)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn distances_are_tight_and_feasible(seed in any::<u64>(), n in 2usize..8) {
        let mut rng = common::rng(seed);
        let g = common::connected(&mut rng, n, 0.3, 4);
        let t = seed as usize % n;
        let Ok(s) = sssp(&g, t, Backend::Algebraic, &SolveConfig::with_seed(seed)) else { return Ok(()) };
        prop_assert_eq!(s.d[t], 0);
        for e in g.edges() {
            if e.u == e.v {
                continue;
            }
            for &w in &e.weights {
                // Negative edges are bounded only along simple paths.
                if w >= 0 {
                    prop_assert!(s.d[e.u] <= w + s.d[e.v] && s.d[e.v] <= w + s.d[e.u]);
                }
            }
        }
    }
}
