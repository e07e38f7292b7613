use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use unelisa::baselines::{dawid_skene, sml};
use unelisa::fixtures::five_expert_graph;
use unelisa::gibbs::{sample, GibbsConfig};
use unelisa::nodewise::{default_lambda, neighborhoods, solve, SolverOptions};
use unelisa::predict::{em_fit, EmConfig};
use unelisa::prune::reconstruct_n0;
use unelisa::{approximate, LassoLogisticProblem, Symmetrize};
use unelisa_bench::{graph, labels};

fn structure(c: &mut Criterion) {
    let spec = five_expert_graph();
    c.bench_function("approximate_and_reconstruct", |b| {
        b.iter(|| reconstruct_n0(&approximate(black_box(&spec)).unwrap().neighborhoods()))
    });
}

fn sampling(c: &mut Criterion) {
    let spec = graph(25, 5);
    c.bench_function("gibbs_p25_n1000", |b| {
        b.iter(|| {
            let mut cfg = GibbsConfig::new(1000, 1);
            cfg.burn_in_sweeps = 100;
            sample(black_box(&spec), &cfg).unwrap()
        })
    });
}

fn nodewise(c: &mut Criterion) {
    let mut group = c.benchmark_group("nodewise");
    for p in [25, 49] {
        let spec = graph(p, (p as f64).sqrt().round() as usize);
        let data = labels(&spec, 1000);
        let lambda = default_lambda(data.n(), data.p());
        let problem = LassoLogisticProblem::new(&data, 1, lambda).unwrap();
        group.bench_with_input(BenchmarkId::new("solve_one_node", p), &problem, |b, prob| {
            b.iter(|| solve(prob, SolverOptions::default()).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("all_neighborhoods", p), &data, |b, data| {
            b.iter(|| neighborhoods(data, lambda, Symmetrize::Or).unwrap())
        });
    }
    group.finish();
}

fn prediction(c: &mut Criterion) {
    let spec = graph(25, 5);
    let data = labels(&spec, 1000);
    let experts: Vec<usize> = spec.expert_set().iter().copied().collect();
    c.bench_function("em_fit_5_experts", |b| {
        b.iter(|| em_fit(black_box(&data), &experts, &EmConfig::default()).unwrap())
    });
    c.bench_function("dawid_skene_p25", |b| {
        b.iter(|| dawid_skene(black_box(&data), 1e-8, 500).unwrap())
    });
    c.bench_function("sml_p25", |b| b.iter(|| sml(black_box(&data)).unwrap()));
}

criterion_group!(benches, structure, sampling, nodewise, prediction);
criterion_main!(benches);
