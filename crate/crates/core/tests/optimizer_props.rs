mod common;

use fdiab::optimizer::{
    check_constraints, closed_form_t_star, min_feasible_delay, rate_margin_lp, solve_min_delay_lp, solve_utility_max,
    LpOptions, ProblemInstance, Utility,
};
use fdiab::topology::line_network;
use fdiab::{DuplexMode, Error, NetworkMatrices};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{both_modes, lambda_limit, log_uniform_capacities, random_tree, rel};

fn instance(seed: u64) -> (NetworkMatrices, NetworkMatrices) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tree = random_tree(&mut rng, 5, 5, 4);
    let cap = log_uniform_capacities(&mut rng, tree.num_edges(), 1e2, 1e4);
    both_modes(&tree, &cap)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lp_matches_closed_form(seed in any::<u64>(), frac in 0.0f64..0.95) {
        for m in <[_; 2]>::from(instance(seed)) {
            let lam = frac * lambda_limit(&m);
            let lp = rate_margin_lp(&m, lam, &LpOptions::default()).unwrap();
            let cf = closed_form_t_star(&m, lam);
            prop_assert!(rel(lp.t, cf.t_star) < 1e-7, "lp {} cf {}", lp.t, cf.t_star);
            prop_assert!(lp.residual < 1e-8);
        }
    }

    #[test]
    fn t_star_decreases_in_lambda(seed in any::<u64>()) {
        let (hd, _) = instance(seed);
        let top = lambda_limit(&hd);
        let ts: Vec<f64> = (0..10).map(|i| closed_form_t_star(&hd, top * i as f64 / 10.0).t_star).collect();
        prop_assert!(ts.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn t_star_scales_with_capacity(seed in any::<u64>(), a in 0.1f64..10.0) {
        let (hd, fd) = instance(seed);
        for m in [hd, fd] {
            let lam = 0.3 * lambda_limit(&m);
            let scaled = m.with_capacity(m.capacity().iter().map(|c| a * c).collect()).unwrap();
            let base = closed_form_t_star(&m, lam).t_star;
            prop_assert!(rel(closed_form_t_star(&scaled, a * lam).t_star, a * base) < 1e-10);
        }
    }

    #[test]
    fn fd_never_worse(seed in any::<u64>(), frac in 0.0f64..0.95) {
        let (hd, fd) = instance(seed);
        let lam = frac * lambda_limit(&hd);
        prop_assert!(closed_form_t_star(&fd, lam).t_star >= closed_form_t_star(&hd, lam).t_star * (1.0 - 1e-12));
    }
}

#[test]
fn min_delay_solution_is_tight() {
    let m = NetworkMatrices::uniform(&line_network(2, 2), DuplexMode::HalfDuplex, 5000.0).unwrap();
    let inst = ProblemInstance::min_delay(m.clone(), 0.9, 100.0).unwrap();
    let sol = solve_min_delay_lp(&inst).unwrap();
    let t = sol.t_star.unwrap();
    assert!(rel(t, closed_form_t_star(&m, 100.0).t_star) < 1e-9);
    let delta = sol.delta_star_s.unwrap();
    assert!(rel(delta, min_feasible_delay(t, 0.9).unwrap()) < 1e-12);
    // each hop of every route clears t* h_m
    let arrivals = m.arrivals(&sol.lambda);
    for (ue, route) in m.routes().iter().enumerate() {
        for &v in route {
            let gap = m.capacity()[v] * sol.mu[v] - arrivals[v];
            assert!(gap >= t * m.hops()[ue] as f64 * (1.0 - 1e-9));
        }
    }
}

#[test]
fn min_delay_reports_infeasible_rate() {
    let m = NetworkMatrices::uniform(&line_network(1, 1), DuplexMode::HalfDuplex, 1000.0).unwrap();
    let top = lambda_limit(&m);
    let inst = ProblemInstance::min_delay(m, 0.9, top * 1.01).unwrap();
    assert!(matches!(solve_min_delay_lp(&inst), Err(Error::InfeasibleRate { .. })));
}

#[test]
fn utility_solutions_satisfy_constraints() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..20 {
        let (hd, fd) = instance(100 + i);
        let m = if rng.random::<bool>() { hd } else { fd };
        let t0 = closed_form_t_star(&m, 0.0).t_star;
        let delta = rng.random_range(1.5..5.0) * min_feasible_delay(t0, 0.9).unwrap();
        for u in [Utility::Log, Utility::Linear, Utility::AlphaFair(2.0)] {
            let sol = solve_utility_max(&ProblemInstance::utility(m.clone(), 0.9, delta, u).unwrap())
                .unwrap_or_else(|e| panic!("instance {i} {u:?}: {e}"));
            assert!(sol.is_optimal());
            let rep = check_constraints(&m, 0.9, delta, &sol.lambda, &sol.mu);
            assert!(rep.is_feasible(1e-8), "{u:?}: {rep:?}");
            assert!(
                sol.kkt_residual <= 1e-6 * sol.objective.abs().max(1.0),
                "{u:?}: {}",
                sol.kkt_residual
            );
        }
    }
}

#[test]
fn looser_deadline_never_lowers_utility() {
    let (hd, _) = instance(7);
    let t0 = closed_form_t_star(&hd, 0.0).t_star;
    let d0 = min_feasible_delay(t0, 0.9).unwrap();
    let objs: Vec<f64> = [1.2, 2.0, 4.0, 8.0]
        .iter()
        .map(|s| {
            let inst = ProblemInstance::utility(hd.clone(), 0.9, s * d0, Utility::Log).unwrap();
            solve_utility_max(&inst).unwrap().objective
        })
        .collect();
    assert!(objs.windows(2).all(|w| w[1] >= w[0] - 1e-9 * w[0].abs()), "{objs:?}");
}
