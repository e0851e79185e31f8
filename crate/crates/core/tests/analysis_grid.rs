use fdiab::analysis::{k_max_exact, latency_gain, latency_gain_line, t_star_line_exact, zeta, LineNetworkParams};
use fdiab::optimizer::closed_form_t_star;
use fdiab::DuplexMode;

fn grid() -> impl Iterator<Item = LineNetworkParams> {
    (1..=5).flat_map(|k| {
        (1..=4).flat_map(move |w| {
            [(1000.0, 4000.0), (3000.0, 3000.0)]
                .into_iter()
                .map(move |(r_a, r_b)| LineNetworkParams {
                    k,
                    w,
                    r_b,
                    r_a,
                    lambda_min: 5.0,
                })
        })
    })
}

#[test]
fn exact_line_t_star_matches_matrices() {
    for p in grid() {
        for mode in [DuplexMode::HalfDuplex, DuplexMode::FullDuplex] {
            let m = p.matrices(mode).unwrap();
            let a = t_star_line_exact(&p, mode).unwrap();
            let b = closed_form_t_star(&m, p.lambda_min).t_star;
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{p:?} {mode:?}: {a} vs {b}");
        }
    }
}

#[test]
fn line_gain_is_at_least_one_and_matches_matrix_gain() {
    for p in grid() {
        let hd = p.matrices(DuplexMode::HalfDuplex).unwrap();
        let fd = p.matrices(DuplexMode::FullDuplex).unwrap();
        let g = latency_gain(&hd, &fd, p.lambda_min).unwrap();
        assert!(g.gain >= 1.0 - 1e-12, "{p:?}");
        assert!(latency_gain_line(&p) > 0.0);
    }
}

#[test]
fn deeper_lines_have_smaller_t_star() {
    let base = LineNetworkParams {
        k: 1,
        w: 3,
        r_b: 5000.0,
        r_a: 2000.0,
        lambda_min: 10.0,
    };
    for mode in [DuplexMode::HalfDuplex, DuplexMode::FullDuplex] {
        let ts: Vec<f64> = (1..8)
            .map(|k| t_star_line_exact(&base.with_k(k), mode).unwrap())
            .collect();
        assert!(ts.windows(2).all(|w| w[1] < w[0]), "{mode:?}: {ts:?}");
    }
}

#[test]
fn scanned_depth_grows_with_deadline() {
    let p = LineNetworkParams {
        k: 1,
        w: 2,
        r_b: 8000.0,
        r_a: 3000.0,
        lambda_min: 5.0,
    };
    for mode in [DuplexMode::HalfDuplex, DuplexMode::FullDuplex] {
        let ks: Vec<usize> = [2e-3, 5e-3, 1e-2, 5e-2]
            .iter()
            .map(|&d| k_max_exact(&p, d, 0.9, mode, 256).unwrap_or(0))
            .collect();
        assert!(ks.windows(2).all(|w| w[1] >= w[0]), "{mode:?}: {ks:?}");
        let k = *ks.last().unwrap();
        if k > 0 {
            assert!(t_star_line_exact(&p.with_k(k), mode).unwrap() >= zeta(0.9, 5e-2));
        }
    }
}
