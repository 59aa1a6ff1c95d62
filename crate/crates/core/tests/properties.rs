//! Property tests for the structural invariants.

use proptest::prelude::*;

use pullvote::graph::{new_complete_with_loops, new_odd_cycle, new_random_regular, read_edge_list, write_edge_list};
use pullvote::spectral::{
    drift_r, drift_s, expected_change_all, flow_q, flow_q2, stationary, Partition, VertexSet,
};
use pullvote::voting::{place_opinions, run, step};
use pullvote::{Execution, Graph, OpinionConfig, Placement, ProtocolSpec, Rule};

fn arb_graph() -> impl Strategy<Value = Graph> {
    prop_oneof![
        (2usize..12).prop_map(|h| new_odd_cycle(2 * h + 1).unwrap()),
        (1usize..15).prop_map(|n| new_complete_with_loops(n).unwrap()),
        (10usize..40, 0u64..1000).prop_map(|(n, seed)| new_random_regular(2 * n, 3, seed).unwrap()),
        (12usize..40, 0u64..1000).prop_map(|(n, seed)| new_random_regular(n, 4, seed).unwrap()),
    ]
}

fn subset(n: usize, mask: &[bool]) -> VertexSet {
    VertexSet::from_indices(n, (0..n).filter(|&i| mask[i % mask.len()]))
}

fn labels(n: usize, raw: &[u32], k: u32) -> Vec<u32> {
    (0..n).map(|i| raw[i % raw.len()] % k).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flow_is_reversible_and_bounded(g in arb_graph(), ma in prop::collection::vec(any::<bool>(), 1..64), mb in prop::collection::vec(any::<bool>(), 1..64)) {
        let n = g.n();
        let pi = stationary(&g).unwrap();
        let (a, b) = (subset(n, &ma), subset(n, &mb));
        let full = VertexSet::full(n);
        let qab = flow_q(&g, &pi, &a, &b);
        prop_assert!((qab - flow_q(&g, &pi, &b, &a)).abs() < 1e-12);
        prop_assert!((flow_q(&g, &pi, &a, &full) - a.measure(&pi)).abs() < 1e-12);
        let r = drift_r(&g, &pi, &a, &b);
        for v in [qab, r] {
            prop_assert!((-1e-15..=1.0 + 1e-12).contains(&v));
        }
    }

    #[test]
    fn drift_equals_two_step_flow(g in arb_graph(), ma in prop::collection::vec(any::<bool>(), 1..64)) {
        let n = g.n();
        let pi = stationary(&g).unwrap();
        let a = subset(n, &ma);
        let full = VertexSet::full(n);
        prop_assert!((drift_r(&g, &pi, &full, &a) - flow_q2(&g, &pi, &a, &a)).abs() < 1e-12);
        let sum = flow_q2(&g, &pi, &a, &a) + flow_q2(&g, &pi, &a, &a.complement());
        prop_assert!((sum - a.measure(&pi)).abs() < 1e-12);
    }

    #[test]
    fn agreement_is_additive_and_change_conserves_measure(g in arb_graph(), raw in prop::collection::vec(any::<u32>(), 1..64), k in 1u32..6, ma in prop::collection::vec(any::<bool>(), 1..64)) {
        let n = g.n();
        let pi = stationary(&g).unwrap();
        let part = Partition::from_labels(&labels(n, &raw, k));
        let a = subset(n, &ma);
        let whole = drift_s(&g, &pi, &part, &VertexSet::full(n));
        let split = drift_s(&g, &pi, &part, &a) + drift_s(&g, &pi, &part, &a.complement());
        prop_assert!((whole - split).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&whole));
        let total: f64 = expected_change_all(&g, &pi, &part).iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn edge_lists_round_trip(g in arb_graph()) {
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        let back = read_edge_list(buf.as_slice(), std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(back.n(), g.n());
        prop_assert_eq!(back.m(), g.m());
        prop_assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
    }

    #[test]
    fn generators_are_symmetric_and_regular(n in 8usize..60, d in 3usize..7, seed in 0u64..10_000) {
        prop_assume!(n * d % 2 == 0 && d < n);
        let g = new_random_regular(n, d, seed).unwrap();
        let again = new_random_regular(n, d, seed).unwrap();
        prop_assert_eq!(g.edges().collect::<Vec<_>>(), again.edges().collect::<Vec<_>>());
        for v in 0..n {
            prop_assert_eq!(g.degree(v), d);
            for u in g.neighbors(v) {
                prop_assert!(u != v);
                prop_assert!(g.has_edge(u, v));
            }
        }
        let report = g.validate();
        prop_assert!(report.connected && !report.bipartite);
    }

    #[test]
    fn rounds_conserve_vertices(g in arb_graph(), raw in prop::collection::vec(any::<u32>(), 1..64), k in 1u32..5, rule in 0usize..3, ell in 1usize..4, seed in any::<u64>()) {
        let n = g.n();
        let rule = [Rule::OneSample, Rule::TwoSample, Rule::ThreeSample][rule];
        let p = ProtocolSpec::new(rule).with_walk_length(ell);
        let mut c = OpinionConfig::new(labels(n, &raw, k), k as usize).unwrap();
        for _ in 0..5 {
            c = step(&g, &c, &p, seed, Execution::Sequential);
            prop_assert_eq!(c.sizes().iter().sum::<usize>(), n);
            let mut recount = vec![0usize; k as usize];
            for &l in c.opinions() {
                recount[l as usize] += 1;
            }
            prop_assert_eq!(recount.as_slice(), c.sizes());
        }
    }

    #[test]
    fn runs_are_deterministic_and_end_in_one_class(g in arb_graph(), split in 0.0f64..1.0, seed in any::<u64>()) {
        let n = g.n();
        let a = ((n as f64) * split).round() as usize;
        let start = place_opinions(&g, &[a, n - a], Placement::Random, seed).unwrap();
        let p = ProtocolSpec::two_sample();
        let t1 = run(&g, &start, &p, 200, seed, Execution::Sequential);
        let t2 = run(&g, &start, &p, 200, seed, Execution::Parallel);
        prop_assert_eq!(&t1, &t2);
        if let Some(w) = t1.winner() {
            let last = t1.final_sizes();
            prop_assert_eq!(last[w as usize], n);
        }
        prop_assert_eq!(t1.sizes.len() as u64, t1.rounds_used + 1);
    }
}
