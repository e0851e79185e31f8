use fdiab::queueing::{
    hop_delay_cdf, ks_distance_exponential, mean, queue_specs, route_max_delay_cdf, simulate, SimOptions, Splitting,
};
use fdiab::topology::line_network;
use fdiab::{DuplexMode, Error, NetworkMatrices};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn net() -> (NetworkMatrices, Vec<f64>, Vec<f64>) {
    // donor -> IAB, 2 UEs per BS
    let m = NetworkMatrices::uniform(&line_network(1, 2), DuplexMode::FullDuplex, 1000.0).unwrap();
    let lambda = vec![100.0, 150.0, 120.0, 80.0];
    let mu = vec![0.6, 0.3, 0.3, 0.3, 0.3];
    (m, lambda, mu)
}

fn run(splitting: Splitting, seed: u64, joint_pairs: Vec<(usize, usize)>) -> fdiab::queueing::SimReport {
    let (m, lambda, mu) = net();
    let opts = SimOptions {
        n_packets: 200_000,
        splitting,
        joint_pairs,
        ..SimOptions::default()
    };
    simulate(&m, &lambda, &mu, &opts, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

#[test]
fn sojourns_match_mm1_in_both_splitting_modes() {
    let (m, lambda, mu) = net();
    let specs = queue_specs(&m, &lambda, &mu);
    for splitting in [Splitting::DestinationTag, Splitting::Probabilistic] {
        let rep = run(splitting, 3, Vec::new());
        for (v, s) in specs.iter().enumerate() {
            let x = &rep.queue_sojourns[v];
            let expect = 1.0 / s.gap();
            assert!((mean(x) - expect).abs() < 0.03 * expect, "{splitting:?} edge {v}");
            assert!(ks_distance_exponential(x, s.gap()) < 0.02, "{splitting:?} edge {v}");
        }
    }
}

#[test]
fn throughput_is_conserved() {
    let (_, lambda, _) = net();
    let rep = run(Splitting::DestinationTag, 4, Vec::new());
    for (ue, l) in lambda.iter().enumerate() {
        assert!(
            (rep.throughput(ue) - l).abs() < 0.03 * l,
            "ue {ue}: {}",
            rep.throughput(ue)
        );
    }
}

#[test]
fn busy_fractions_are_product_form() {
    let (m, lambda, mu) = net();
    let specs = queue_specs(&m, &lambda, &mu);
    let rep = run(Splitting::DestinationTag, 5, vec![(0, 3), (1, 2)]);
    for (v, s) in specs.iter().enumerate() {
        assert!((rep.busy_fraction[v] - s.utilization()).abs() < 0.01, "edge {v}");
    }
    for (i, &(a, b)) in [(0, 3), (1, 2)].iter().enumerate() {
        let expect = specs[a].utilization() * specs[b].utilization();
        assert!((rep.joint_busy[i] - expect).abs() < 0.01, "pair ({a}, {b})");
    }
}

#[test]
fn max_hop_surrogate_bounds_delivery() {
    let (m, lambda, mu) = net();
    let specs = queue_specs(&m, &lambda, &mu);
    let rep = run(Splitting::DestinationTag, 6, Vec::new());
    let delta = 0.01;
    for (ue, route) in m.routes().iter().enumerate() {
        let route_specs: Vec<_> = route.iter().map(|&v| specs[v]).collect();
        let model = route_max_delay_cdf(&route_specs, m.hops()[ue], delta).unwrap();
        let emp_max = rep.max_hop_probability(ue, m.hops()[ue], delta);
        assert!((emp_max - model).abs() < 0.02, "ue {ue}: {emp_max} vs {model}");
        assert!(rep.delivery_probability(ue, delta) >= emp_max - 1e-12);
    }
}

#[test]
fn unstable_queues_are_rejected() {
    let (m, _, mu) = net();
    let lambda = vec![400.0, 400.0, 10.0, 10.0];
    let r = simulate(
        &m,
        &lambda,
        &mu,
        &SimOptions::default(),
        &mut ChaCha8Rng::seed_from_u64(0),
    );
    assert!(matches!(r, Err(Error::UnstableQueue { .. })));
    assert!(hop_delay_cdf(&queue_specs(&m, &lambda, &mu)[1], 0.01).is_err());
}
