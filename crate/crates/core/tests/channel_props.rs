use fdiab::channel::{
    beam_align, capacities, capacity_pps, db_to_linear, draw_links, gen_channel, sinr_fd, ClusterConfig, LinkConfig,
    RinrConfig,
};
use fdiab::channel::{uma_los_db, uma_los_probability, LinkGeometry, PathlossModel, UmaPathloss};
use fdiab::topology::{line_layout, line_network};
use fdiab::DuplexMode;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn channel_power_is_normalized() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (nt, nr, n) = (16, 8, 4000);
    let cfg = ClusterConfig::default();
    let mean: f64 = (0..n)
        .map(|_| gen_channel(nt, nr, &cfg, &mut rng).h.norm_squared())
        .sum::<f64>()
        / n as f64;
    let ratio = mean / (nt * nr) as f64;
    assert!((ratio - 1.0).abs() < 0.03, "E|H|^2/(NtNr) = {ratio}");
}

#[test]
fn beamforming_gain_is_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let ch = gen_channel(16, 4, &ClusterConfig::default(), &mut rng);
        let bp = beam_align(&ch.h, 16, 4);
        // unit-norm beams: |w^H H f|^2 <= sigma_max(H)^2 <= |H|_F^2
        assert!(bp.gain <= ch.h.norm_squared() * (1.0 + 1e-12));
        assert!(bp.gain > 0.0);
    }
}

#[test]
fn uma_los_value_at_100m() {
    let g = LinkGeometry {
        d2d_m: 100.0,
        h_bs_m: 25.0,
        h_ut_m: 1.5,
        carrier_hz: 30e9,
    };
    assert!((uma_los_db(&g, 1.0) - 101.799_220_884).abs() < 1e-6);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let s = UmaPathloss::forced_los().sample(&g, &mut rng).unwrap();
    assert!(s.los);
    assert!((s.db - 101.799_220_884).abs() < 1e-6);
}

#[test]
fn los_probability_decreases_with_distance() {
    assert_eq!(uma_los_probability(10.0, 1.5), 1.0);
    let p: Vec<f64> = [20.0, 50.0, 100.0, 200.0, 500.0]
        .iter()
        .map(|&d| uma_los_probability(d, 1.5))
        .collect();
    assert!(p.windows(2).all(|w| w[1] < w[0]), "{p:?}");
}

#[test]
fn out_of_range_geometry_is_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let g = LinkGeometry {
        d2d_m: 5.0,
        h_bs_m: 25.0,
        h_ut_m: 1.5,
        carrier_hz: 30e9,
    };
    assert!(UmaPathloss::default().sample(&g, &mut rng).is_err());
}

#[test]
fn fd_capacities_only_change_backhaul() {
    let tree = line_network(2, 2).with_positions(line_layout_with_ues()).unwrap();
    let cfg = LinkConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let links = draw_links(&tree, &cfg, &UmaPathloss::default(), &mut rng).unwrap();
    let bw = cfg.budget.bandwidth_hz;
    let hd = capacities(
        &links,
        DuplexMode::HalfDuplex,
        &RinrConfig::perfect(),
        bw,
        cfg.packet_bits,
    );
    let fd_perfect = capacities(
        &links,
        DuplexMode::FullDuplex,
        &RinrConfig::perfect(),
        bw,
        cfg.packet_bits,
    );
    let fd = capacities(
        &links,
        DuplexMode::FullDuplex,
        &RinrConfig { rinr_db: 0.0 },
        bw,
        cfg.packet_bits,
    );
    assert_eq!(hd, fd_perfect);
    for (l, (h, f)) in links.iter().zip(hd.iter().zip(&fd)) {
        if l.backhaul {
            let expect = capacity_pps(bw, sinr_fd(l.snr, db_to_linear(0.0)), cfg.packet_bits);
            assert!((f - expect).abs() < 1e-9 * expect && f < h);
        } else {
            assert_eq!(h, f);
        }
    }
}

fn line_layout_with_ues() -> Vec<[f64; 2]> {
    // 3 BSs 200 m apart, two UEs 50 m from each
    let mut pos = line_layout(2, 200.0);
    let bs = pos.clone();
    for b in &bs {
        pos.push([b[0], 50.0]);
        pos.push([b[0], -50.0]);
    }
    pos
}
