use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use perturbqp::gen::{GenParams, ProblemKind};
use perturbqp::harness::{
    run_crossover_experiment, run_ratio_experiment, Execution, ExperimentConfig, Suite,
};

fn config(kind: ProblemKind, execution: Execution) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(Suite::Generated(kind), 0, 16);
    cfg.generator = GenParams {
        m_range: (20, 40),
        n_range: (40, 80),
        ..GenParams::default()
    };
    cfg.execution = execution;
    cfg
}

fn batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("batch");
    group.sample_size(10);
    for execution in [Execution::Sequential, Execution::Parallel] {
        let name = format!("{execution:?}").to_lowercase();
        let cfg = config(ProblemKind::Qts2, execution);
        group.bench_with_input(BenchmarkId::new("ratios", &name), &cfg, |b, cfg| {
            b.iter(|| run_ratio_experiment(cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("crossover", &name), &cfg, |b, cfg| {
            b.iter(|| run_crossover_experiment(cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, batch);
criterion_main!(benches);
