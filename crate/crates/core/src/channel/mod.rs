//! mmWave link realizations and edge capacities.
//!
//! Each link gets a clustered Saleh-Valenzuela channel between two ULAs,
//! codebook beam alignment over DFT beams, and a large-scale pathloss. The
//! resulting SNR (or SINR under residual self-interference at full-duplex
//! relays) is mapped to a Shannon capacity in packets/second.

mod pathloss;

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{DuplexMode, RoutingTree, VertexKind};

pub use pathloss::{
    pathloss_uma, uma_breakpoint_m, uma_los_db, uma_los_probability, uma_nlos_db, FixedExponentPathloss, LinkGeometry,
    LosPolicy, PathlossModel, PathlossSample, UmaPathloss,
};

pub type C64 = Complex<f64>;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Half-wavelength ULA response; element `n` is `exp(j n pi sin(angle))`.
pub fn ula_response(n_antennas: usize, angle: f64) -> DVector<C64> {
    let phase = PI * angle.sin();
    DVector::from_fn(n_antennas, |n, _| C64::from_polar(1.0, n as f64 * phase))
}

/// Unit-norm DFT beams as columns; beam `k` points at `sin(theta) = -1 + 2k/n`.
pub fn dft_codebook(n: usize) -> DMatrix<C64> {
    let scale = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |i, k| {
        let u = -1.0 + 2.0 * k as f64 / n as f64;
        C64::from_polar(scale, PI * i as f64 * u)
    })
}

/// Angle of DFT beam `k` in an `n`-beam codebook.
pub fn dft_beam_angle(n: usize, k: usize) -> f64 {
    (-1.0 + 2.0 * k as f64 / n as f64).asin()
}

/// Cluster/ray statistics of the channel generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub max_clusters: usize,
    pub max_rays: usize,
    /// Cluster centers are uniform in `[-max_cluster_angle, max_cluster_angle]`.
    pub max_cluster_angle_rad: f64,
    /// Rays are uniform within `+/- ray_spread_rad` of their cluster center.
    pub ray_spread_rad: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            max_clusters: 6,
            max_rays: 10,
            max_cluster_angle_rad: PI / 2.0,
            ray_spread_rad: 5f64.to_radians(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `n_rx x n_tx`.
    pub h: DMatrix<C64>,
    pub n_cluster: usize,
    pub n_ray: usize,
    pub gains: Vec<C64>,
    pub aoa: Vec<f64>,
    pub aod: Vec<f64>,
}

impl ChannelRealization {
    /// Assemble `H = sqrt(1/(N_ray N_cluster)) sum h a_rx(aoa) a_tx(aod)^H`.
    pub fn from_rays(
        n_tx: usize,
        n_rx: usize,
        n_cluster: usize,
        n_ray: usize,
        gains: Vec<C64>,
        aoa: Vec<f64>,
        aod: Vec<f64>,
    ) -> Self {
        let paths = n_cluster * n_ray;
        assert!(gains.len() == paths && aoa.len() == paths && aod.len() == paths);
        let norm = (1.0 / paths as f64).sqrt();
        let mut h = DMatrix::zeros(n_rx, n_tx);
        for p in 0..paths {
            let a_rx = ula_response(n_rx, aoa[p]);
            let a_tx = ula_response(n_tx, aod[p]);
            h += (a_rx * a_tx.adjoint()) * (gains[p] * norm);
        }
        ChannelRealization {
            h,
            n_cluster,
            n_ray,
            gains,
            aoa,
            aod,
        }
    }
}

/// Draw one clustered channel.
pub fn gen_channel<R: Rng + ?Sized>(n_tx: usize, n_rx: usize, cfg: &ClusterConfig, rng: &mut R) -> ChannelRealization {
    let n_ray = rng.random_range(1..=cfg.max_rays);
    let n_cluster = rng.random_range(1..=cfg.max_clusters);
    let paths = n_ray * n_cluster;
    let mut gains = Vec::with_capacity(paths);
    let mut aoa = Vec::with_capacity(paths);
    let mut aod = Vec::with_capacity(paths);
    for _ in 0..n_cluster {
        let ca = cfg.max_cluster_angle_rad;
        let center_rx = rng.random_range(-ca..=ca);
        let center_tx = rng.random_range(-ca..=ca);
        for _ in 0..n_ray {
            let s = cfg.ray_spread_rad;
            aoa.push(center_rx + rng.random_range(-s..=s));
            aod.push(center_tx + rng.random_range(-s..=s));
            // CN(0, 1): independent N(0, 1/2) parts
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            gains.push(C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2);
        }
    }
    ChannelRealization::from_rays(n_tx, n_rx, n_cluster, n_ray, gains, aoa, aod)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamPair {
    pub f_tx: DVector<C64>,
    pub w_rx: DVector<C64>,
    pub tx_index: usize,
    pub rx_index: usize,
    /// `|w^H H f|^2`.
    pub gain: f64,
}

/// Exhaustive search over DFT codebook pairs for the largest `|w^H H f|^2`.
pub fn beam_align(h: &DMatrix<C64>, n_tx: usize, n_rx: usize) -> BeamPair {
    assert_eq!(h.shape(), (n_rx, n_tx), "channel must be n_rx x n_tx");
    let f = dft_codebook(n_tx);
    let w = dft_codebook(n_rx);
    let y = w.adjoint() * h * &f;
    let (mut best, mut bi, mut bj) = (-1.0, 0, 0);
    // column-major walk so ties resolve to the lowest (tx, rx) index pair
    for j in 0..n_tx {
        for i in 0..n_rx {
            let g = y[(i, j)].norm_sqr();
            if g > best {
                best = g;
                bi = i;
                bj = j;
            }
        }
    }
    BeamPair {
        f_tx: f.column(bj).into_owned(),
        w_rx: w.column(bi).into_owned(),
        tx_index: bj,
        rx_index: bi,
        gain: best.max(0.0),
    }
}

/// Transmit power, bandwidth and noise for all links.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub ptx_dbm: f64,
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub carrier_hz: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        LinkBudget {
            ptx_dbm: 30.0,
            bandwidth_hz: 100e6,
            noise_psd_dbm_hz: -174.0,
            noise_figure_db: 10.0,
            carrier_hz: 30e9,
        }
    }
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.ptx_dbm,
            self.bandwidth_hz,
            self.noise_psd_dbm_hz,
            self.noise_figure_db,
            self.carrier_hz,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("link budget must be finite".into()));
        }
        if self.bandwidth_hz <= 0.0 {
            return Err(Error::InvalidParameter("bandwidth must be positive".into()));
        }
        Ok(())
    }

    /// Noise power over the band, including the noise figure.
    pub fn noise_dbm(&self) -> f64 {
        self.noise_psd_dbm_hz + linear_to_db(self.bandwidth_hz) + self.noise_figure_db
    }
}

/// Linear SNR: `P_tx L |w^H H f|^2 / (sigma^2 W)`.
pub fn snr(budget: &LinkBudget, bf_gain: f64, pathloss_db: f64) -> f64 {
    if bf_gain <= 0.0 {
        return 0.0;
    }
    db_to_linear(budget.ptx_dbm - pathloss_db - budget.noise_dbm()) * bf_gain
}

pub fn sinr_fd(snr_linear: f64, rinr_linear: f64) -> f64 {
    snr_linear / (rinr_linear + 1.0)
}

pub fn capacity_pps(bandwidth_hz: f64, sinr_linear: f64, packet_bits: f64) -> f64 {
    assert!(packet_bits > 0.0, "packet size must be positive");
    bandwidth_hz * (1.0 + sinr_linear).log2() / packet_bits
}

/// Residual self-interference at FD relays; `-inf` dB is perfect cancellation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RinrConfig {
    pub rinr_db: f64,
}

impl RinrConfig {
    pub fn perfect() -> Self {
        RinrConfig {
            rinr_db: f64::NEG_INFINITY,
        }
    }

    pub fn linear(&self) -> f64 {
        if self.rinr_db == f64::NEG_INFINITY {
            0.0
        } else {
            db_to_linear(self.rinr_db)
        }
    }
}

/// Everything needed to turn node positions into link SNRs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub budget: LinkBudget,
    pub n_bs_ant: usize,
    pub n_ue_ant: usize,
    pub h_bs_m: f64,
    pub h_ue_m: f64,
    /// Receiver height used for BS-to-IAB links inside the UMa model.
    pub h_relay_rx_m: f64,
    pub clusters: ClusterConfig,
    pub packet_bits: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            budget: LinkBudget::default(),
            n_bs_ant: 64,
            n_ue_ant: 16,
            h_bs_m: 25.0,
            h_ue_m: 1.5,
            h_relay_rx_m: 22.5,
            clusters: ClusterConfig::default(),
            packet_bits: 80_000.0,
        }
    }
}

/// One drawn link. Mode-independent, so HD and FD evaluations of a drop share it.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState {
    pub edge: usize,
    pub backhaul: bool,
    pub d2d_m: f64,
    pub los: bool,
    pub pathloss_db: f64,
    pub bf_gain: f64,
    pub snr: f64,
}

/// Draw channel, beams and pathloss for every edge of a positioned tree.
pub fn draw_links<R: RngCore>(
    tree: &RoutingTree,
    cfg: &LinkConfig,
    pathloss: &dyn PathlossModel,
    rng: &mut R,
) -> Result<Vec<LinkState>> {
    cfg.budget.validate()?;
    let pos = tree
        .positions()
        .ok_or_else(|| Error::InvalidParameter("capacity computation needs vertex positions".into()))?;
    let mut links = Vec::with_capacity(tree.num_edges());
    for e in 0..tree.num_edges() {
        let child = tree.edge_child(e);
        let parent = tree.edge_parent(e);
        let backhaul = tree.kind(child) == VertexKind::Iab;
        let (n_rx, h_rx) = if backhaul {
            (cfg.n_bs_ant, cfg.h_relay_rx_m)
        } else {
            (cfg.n_ue_ant, cfg.h_ue_m)
        };
        let dx = pos[child][0] - pos[parent][0];
        let dy = pos[child][1] - pos[parent][1];
        let d2d = (dx * dx + dy * dy).sqrt();
        let pl = pathloss.sample(
            &LinkGeometry {
                d2d_m: d2d,
                h_bs_m: cfg.h_bs_m,
                h_ut_m: h_rx,
                carrier_hz: cfg.budget.carrier_hz,
            },
            rng,
        )?;
        let ch = gen_channel(cfg.n_bs_ant, n_rx, &cfg.clusters, rng);
        let beams = beam_align(&ch.h, cfg.n_bs_ant, n_rx);
        links.push(LinkState {
            edge: e,
            backhaul,
            d2d_m: d2d,
            los: pl.los,
            pathloss_db: pl.db,
            bf_gain: beams.gain,
            snr: snr(&cfg.budget, beams.gain, pl.db),
        });
    }
    Ok(links)
}

/// Per-edge SINR: full-duplex backhaul edges see the residual self-interference.
pub fn link_sinr(link: &LinkState, mode: DuplexMode, rinr: &RinrConfig) -> f64 {
    if mode == DuplexMode::FullDuplex && link.backhaul {
        sinr_fd(link.snr, rinr.linear())
    } else {
        link.snr
    }
}

/// Diagonal of C in packets/second.
pub fn capacities(
    links: &[LinkState],
    mode: DuplexMode,
    rinr: &RinrConfig,
    bandwidth_hz: f64,
    packet_bits: f64,
) -> Vec<f64> {
    links
        .iter()
        .map(|l| capacity_pps(bandwidth_hz, link_sinr(l, mode, rinr), packet_bits))
        .collect()
}

/// Draw links and return the capacity diagonal for one mode.
pub fn capacity_matrix<R: RngCore>(
    tree: &RoutingTree,
    mode: DuplexMode,
    rinr: &RinrConfig,
    cfg: &LinkConfig,
    pathloss: &dyn PathlossModel,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let links = draw_links(tree, cfg, pathloss, rng)?;
    Ok(capacities(&links, mode, rinr, cfg.budget.bandwidth_hz, cfg.packet_bits))
}

/// JSON record for link dumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    pub edge: usize,
    pub snr_db: f64,
    pub rinr_db: Option<f64>,
    pub sinr_db: f64,
    pub capacity_pps: f64,
    pub los: bool,
}

pub fn link_reports(links: &[LinkState], mode: DuplexMode, rinr: &RinrConfig, cfg: &LinkConfig) -> Vec<LinkReport> {
    links
        .iter()
        .map(|l| {
            let sinr = link_sinr(l, mode, rinr);
            let fd_backhaul = mode == DuplexMode::FullDuplex && l.backhaul;
            LinkReport {
                edge: l.edge,
                snr_db: linear_to_db(l.snr),
                // JSON has no -inf; perfect cancellation is reported as null
                rinr_db: if fd_backhaul && rinr.rinr_db.is_finite() {
                    Some(rinr.rinr_db)
                } else {
                    None
                },
                sinr_db: linear_to_db(sinr),
                capacity_pps: capacity_pps(cfg.budget.bandwidth_hz, sinr, cfg.packet_bits),
                los: l.los,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ula_broadside_and_endfire() {
        let a = ula_response(4, 0.0);
        assert!(a.iter().all(|x| (*x - C64::new(1.0, 0.0)).norm() < 1e-12));
        let a = ula_response(2, PI / 2.0);
        assert!((a[1] - C64::new(-1.0, 0.0)).norm() < 1e-12);
        for theta in [-1.2, 0.3, 0.9] {
            assert!((ula_response(7, theta).norm_squared() - 7.0).abs() < 1e-9);
        }
    }

    #[test]
    fn codebook_columns_are_unit_norm() {
        let f = dft_codebook(8);
        for k in 0..8 {
            assert!((f.column(k).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_ray_is_rank_one() {
        let ch = ChannelRealization::from_rays(4, 3, 1, 1, vec![C64::new(1.0, 0.0)], vec![0.2], vec![-0.4]);
        let expected = ula_response(3, 0.2) * ula_response(4, -0.4).adjoint();
        assert!((&ch.h - &expected).norm() < 1e-12);
        let sv = ch.h.clone().svd(false, false).singular_values;
        assert!(sv.iter().skip(1).all(|s| *s < 1e-9));
    }

    #[test]
    fn on_grid_beams_reach_full_array_gain() {
        let (nt, nr) = (8, 4);
        let ch = ChannelRealization::from_rays(
            nt,
            nr,
            1,
            1,
            vec![C64::new(1.0, 0.0)],
            vec![dft_beam_angle(nr, 1)],
            vec![dft_beam_angle(nt, 6)],
        );
        let b = beam_align(&ch.h, nt, nr);
        assert!((b.gain - (nt * nr) as f64).abs() < 1e-9);
        assert_eq!((b.tx_index, b.rx_index), (6, 1));
        assert!((b.f_tx.norm() - 1.0).abs() < 1e-12);
        assert!((b.w_rx.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_channel_has_zero_gain() {
        let b = beam_align(&DMatrix::zeros(4, 4), 4, 4);
        assert_eq!(b.gain, 0.0);
    }

    #[test]
    fn seeded_channel_is_deterministic() {
        let cfg = ClusterConfig::default();
        let a = gen_channel(8, 4, &cfg, &mut ChaCha8Rng::seed_from_u64(11));
        let b = gen_channel(8, 4, &cfg, &mut ChaCha8Rng::seed_from_u64(11));
        assert_eq!(a, b);
        assert!((1..=6).contains(&a.n_cluster) && (1..=10).contains(&a.n_ray));
    }

    #[test]
    fn snr_db_arithmetic() {
        let budget = LinkBudget::default();
        assert_eq!(snr(&budget, 0.0, 100.0), 0.0);
        // 30 dBm, net -114 dB, noise -174 + 80 + 10 = -84 dBm => 0 dB
        let s = snr(&budget, 1.0, 114.0);
        assert!((s - 1.0).abs() < 1e-12);
        assert!((snr(&budget, 2.0, 114.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sinr_and_capacity() {
        assert_eq!(sinr_fd(5.0, 0.0), 5.0);
        assert_eq!(sinr_fd(5.0, 1.0), 2.5);
        let s = sinr_fd(100.0, 10.0);
        assert!((linear_to_db(s) - linear_to_db(100.0 / 11.0)).abs() < 1e-12);
        assert!((linear_to_db(s) - 9.586).abs() < 1e-3);
        assert_eq!(capacity_pps(100e6, 0.0, 80_000.0), 0.0);
        assert!((capacity_pps(100e6, 1.0, 80_000.0) - 1250.0).abs() < 1e-9);
        assert!((capacity_pps(100e6, 3.0, 80_000.0) - 2500.0).abs() < 1e-9);
    }

    #[test]
    fn perfect_cancellation_is_zero_linear() {
        assert_eq!(RinrConfig::perfect().linear(), 0.0);
        assert!((RinrConfig { rinr_db: 0.0 }.linear() - 1.0).abs() < 1e-15);
    }
}
