use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use fdiab::channel::{beam_align, gen_channel, ClusterConfig};
use fdiab::optimizer::{
    closed_form_t_star, min_feasible_delay, rate_margin_lp, solve_utility_max, LpOptions, ProblemInstance, Utility,
};
use fdiab::queueing::{simulate, SimOptions};
use fdiab::topology::{line_network, two_child_tree};
use fdiab::{DuplexMode, NetworkMatrices};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn networks() -> Vec<(String, NetworkMatrices)> {
    let mut out = Vec::new();
    for k in [1, 3, 6] {
        let m = NetworkMatrices::two_rate(&line_network(k, 5), DuplexMode::HalfDuplex, 15000.0, 6000.0).unwrap();
        out.push((format!("line_k{k}"), m));
    }
    let m = NetworkMatrices::two_rate(&two_child_tree(3), DuplexMode::FullDuplex, 15000.0, 6000.0).unwrap();
    out.push(("two_child".into(), m));
    out
}

fn bench_min_delay(c: &mut Criterion) {
    let mut g = c.benchmark_group("min_delay");
    for (name, m) in networks() {
        g.bench_with_input(BenchmarkId::new("lp", &name), &m, |b, m| {
            b.iter(|| rate_margin_lp(m, 50.0, &LpOptions::default()).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("closed_form", &name), &m, |b, m| {
            b.iter(|| closed_form_t_star(m, 50.0))
        });
    }
    g.finish();
}

fn bench_utility(c: &mut Criterion) {
    let mut g = c.benchmark_group("utility_max");
    g.sample_size(20);
    for (name, m) in networks() {
        let delta = 2.0 * min_feasible_delay(closed_form_t_star(&m, 0.0).t_star, 0.9).unwrap();
        let inst = ProblemInstance::utility(m, 0.9, delta, Utility::Log).unwrap();
        g.bench_with_input(BenchmarkId::new("log", &name), &inst, |b, inst| {
            b.iter(|| solve_utility_max(inst).unwrap())
        });
    }
    g.finish();
}

fn bench_simulator(c: &mut Criterion) {
    let m = NetworkMatrices::two_rate(&line_network(2, 3), DuplexMode::FullDuplex, 15000.0, 6000.0).unwrap();
    let lambda = vec![300.0; m.num_ues()];
    let mu: Vec<f64> = (0..m.num_edges())
        .map(|v| if m.is_backhaul(v) { 0.5 } else { 0.3 })
        .collect();
    let opts = SimOptions {
        n_packets: 100_000,
        ..SimOptions::default()
    };
    let mut g = c.benchmark_group("simulate");
    g.sample_size(10);
    g.bench_function("line_k2_100k_packets", |b| {
        b.iter_batched(
            || ChaCha8Rng::seed_from_u64(1),
            |mut rng| simulate(&m, &lambda, &mu, &opts, &mut rng).unwrap(),
            BatchSize::SmallInput,
        )
    });
    g.finish();
}

fn bench_channel(c: &mut Criterion) {
    let cfg = ClusterConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut g = c.benchmark_group("channel");
    for (nt, nr) in [(64, 16), (64, 64)] {
        g.bench_function(BenchmarkId::new("draw_and_align", format!("{nt}x{nr}")), |b| {
            b.iter(|| {
                let ch = gen_channel(nt, nr, &cfg, &mut rng);
                beam_align(&ch.h, nt, nr)
            })
        });
    }
    g.finish();
}

criterion_group!(benches, bench_min_delay, bench_utility, bench_simulator, bench_channel);
criterion_main!(benches);
