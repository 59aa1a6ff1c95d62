use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use pullvote::graph::{new_complete_with_loops, new_random_regular};
use pullvote::voting::{place_opinions, run, step};
use pullvote::{Execution, Placement, ProtocolSpec};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bench_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    for n in [1_000usize, 10_000, 100_000] {
        let g = new_random_regular(n, 10, 1).unwrap();
        let start = place_opinions(&g, &[n / 2, n * 3 / 10, n - n / 2 - n * 3 / 10], Placement::Random, 2).unwrap();
        for rule in [ProtocolSpec::two_sample(), ProtocolSpec::three_sample()] {
            for (name, exec) in MODES {
                let id = BenchmarkId::new(format!("{:?}/{name}", rule.rule), n);
                group.bench_with_input(id, &n, |b, _| b.iter(|| step(&g, &start, &rule, 3, exec)));
            }
        }
    }
    group.finish();
}

fn bench_walks(c: &mut Criterion) {
    let mut group = c.benchmark_group("step-walk-length");
    let g = new_random_regular(10_000, 10, 1).unwrap();
    let start = place_opinions(&g, &[5_000, 3_000, 2_000], Placement::Random, 2).unwrap();
    for ell in [1usize, 4, 8] {
        let p = ProtocolSpec::two_sample().with_walk_length(ell);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, ell), &ell, |b, _| b.iter(|| step(&g, &start, &p, 3, exec)));
        }
    }
    group.finish();
}

fn bench_run(c: &mut Criterion) {
    let mut group = c.benchmark_group("run-to-consensus");
    group.sample_size(10);
    let g = new_random_regular(10_000, 10, 1).unwrap();
    let k = new_complete_with_loops(10_000).unwrap();
    let p = ProtocolSpec::two_sample();
    for (label, graph) in [("random-regular", &g), ("complete", &k)] {
        let start = place_opinions(graph, &[5_000, 3_000, 2_000], Placement::Random, 2).unwrap();
        for (name, exec) in MODES {
            group.bench_function(format!("{label}/{name}"), |b| b.iter(|| run(graph, &start, &p, 1_000, 4, exec)));
        }
    }
    group.finish();
}

criterion_group!(benches, bench_step, bench_walks, bench_run);
criterion_main!(benches);
