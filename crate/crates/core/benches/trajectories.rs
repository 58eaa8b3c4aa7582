use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use treeprep::amplitude::TargetState;
use treeprep::architecture::Variant;
use treeprep::exec::Execution;
use treeprep::noise::NoiseParams;
use treeprep::robustness::{run_trajectories, Experiment};

fn trajectories(c: &mut Criterion) {
    let noise = NoiseParams::new(0.002).unwrap();
    let mut group = c.benchmark_group("trajectories");
    group.sample_size(10);
    for variant in [Variant::TwoPerNode, Variant::ThreePerNode] {
        let exp =
            Experiment::synthesize(variant, TargetState::random(4, 1).unwrap(), None).unwrap();
        for exec in [Execution::Sequential, Execution::Parallel] {
            let id = BenchmarkId::new(format!("{variant}/n=4/x200"), format!("{exec:?}"));
            group.bench_with_input(id, &exec, |b, &exec| {
                b.iter(|| black_box(run_trajectories(&exp, noise, 7, 200, exec)))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, trajectories);
criterion_main!(benches);
