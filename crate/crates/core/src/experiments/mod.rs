//! Seeded Monte Carlo sweeps over channel drops.
//!
//! Drop `i` draws UE positions, pathloss and channels from a ChaCha stream
//! keyed by `(seed, i)`, so results do not depend on thread scheduling.
//! HD and FD evaluations of a drop share the same links and differ only in
//! the FD backhaul SINR.

mod config;
mod output;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{k_max_exact, k_max_raw, latency_gain_line, t_star_line, LineNetworkParams};
use crate::channel::{capacities, capacity_pps, db_to_linear, draw_links, LinkState, RinrConfig, UmaPathloss};
use crate::error::{Error, Result};
use crate::optimizer::{
    closed_form_t_star, infeasibility_margin, min_feasible_delay, rate_margin_lp, solve_utility_max, LpOptions,
    ProblemInstance,
};
use crate::queueing::{ks_distance_exponential, queue_specs, simulate, SimOptions};
use crate::topology::{drop_ues, DuplexMode, NetworkMatrices, RoutingTree};

pub use config::{
    AnalysisConfig, ChannelConfig, DuplexConfig, ExperimentConfig, McConfig, OutputConfig, QosConfig, TopologyConfig,
    TopologyKind, ValidationConfig,
};
pub use output::{
    write_analysis_csv, write_file, write_json, write_manifest, write_min_delay_csv, write_sweep_csv,
    write_validation_queue_csv, write_validation_ue_csv, RunManifest,
};

/// RNG for one drop.
pub fn drop_rng(seed: u64, drop: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(drop as u64);
    rng
}

/// RNG for the queue simulation of one drop; disjoint from the drop streams.
pub fn sim_rng(seed: u64, drop: usize, mode: DuplexMode) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((1 << 32) | (2 * drop as u64 + (mode == DuplexMode::FullDuplex) as u64));
    rng
}

/// One positioned network with its mode-independent links.
#[derive(Debug, Clone)]
pub struct NetworkDrop {
    pub index: usize,
    pub tree: RoutingTree,
    pub links: Vec<LinkState>,
}

impl NetworkDrop {
    pub fn capacity(&self, cfg: &ExperimentConfig, mode: DuplexMode, rinr_db: f64) -> Vec<f64> {
        capacities(
            &self.links,
            mode,
            &RinrConfig { rinr_db },
            cfg.channel.bandwidth_hz,
            cfg.packet_bits(),
        )
    }

    pub fn matrices(&self, cfg: &ExperimentConfig, mode: DuplexMode, rinr_db: f64) -> Result<NetworkMatrices> {
        NetworkMatrices::new(&self.tree, mode, self.capacity(cfg, mode, rinr_db))
    }
}

pub fn generate_drop(cfg: &ExperimentConfig, index: usize) -> Result<NetworkDrop> {
    let (tree, bs) = cfg.build_topology()?;
    let mut rng = drop_rng(cfg.mc.seed, index);
    let pos = drop_ues(
        &tree,
        &bs,
        cfg.topology.ue_radius_m,
        cfg.topology.ue_min_radius_m,
        &mut rng,
    )?;
    let tree = tree.with_positions(pos)?;
    let links = draw_links(&tree, &cfg.link_config(), &UmaPathloss::default(), &mut rng)?;
    Ok(NetworkDrop { index, tree, links })
}

/// FD-over-HD ratio of two non-negative quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gain {
    Finite(f64),
    /// HD is zero (infeasible) while FD is positive.
    Infinite,
    /// Both are zero.
    Undefined,
}

impl Gain {
    pub fn ratio(fd: f64, hd: f64) -> Gain {
        if hd > 0.0 {
            Gain::Finite(fd / hd)
        } else if fd > 0.0 {
            Gain::Infinite
        } else {
            Gain::Undefined
        }
    }

    /// `inf` for [`Gain::Infinite`], NaN for [`Gain::Undefined`].
    pub fn value(self) -> f64 {
        match self {
            Gain::Finite(g) => g,
            Gain::Infinite => f64::INFINITY,
            Gain::Undefined => f64::NAN,
        }
    }

    pub fn to_field(self) -> String {
        match self {
            Gain::Finite(g) => format!("{g}"),
            Gain::Infinite => "inf".into(),
            Gain::Undefined => "nan".into(),
        }
    }
}

/// Utility-maximization result for one mode at one (RINR, delta).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeOutcome {
    pub mode: DuplexMode,
    /// `None` for HD.
    #[serde(with = "config::opt_db")]
    pub rinr_db: Option<f64>,
    pub delta_s: f64,
    pub feasible: bool,
    pub objective: Option<f64>,
    pub kkt_residual: Option<f64>,
    /// Zero when infeasible.
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    /// `sum_{m in M_i} lambda_m` for `i = 1..=max hops`.
    pub hop_sum_rates: Vec<f64>,
    pub error: Option<String>,
}

pub fn hop_sum_rates(m: &NetworkMatrices, lambda: &[f64]) -> Vec<f64> {
    let depth = m.hops().iter().copied().max().unwrap_or(0);
    let mut out = vec![0.0; depth];
    for (ue, &h) in m.hops().iter().enumerate() {
        out[h - 1] += lambda[ue];
    }
    out
}

fn solve_mode(m: &NetworkMatrices, cfg: &ExperimentConfig, rinr_db: Option<f64>, delta_s: f64) -> ModeOutcome {
    let mut out = ModeOutcome {
        mode: m.mode(),
        rinr_db,
        delta_s,
        feasible: false,
        objective: None,
        kkt_residual: None,
        lambda: vec![0.0; m.num_ues()],
        mu: vec![0.0; m.num_edges()],
        hop_sum_rates: hop_sum_rates(m, &vec![0.0; m.num_ues()]),
        error: None,
    };
    let res = ProblemInstance::utility(m.clone(), cfg.qos.eta, delta_s, cfg.qos.utility)
        .and_then(|inst| solve_utility_max(&inst));
    match res {
        Ok(sol) if sol.is_optimal() => {
            out.feasible = true;
            out.objective = Some(sol.objective);
            out.kkt_residual = Some(sol.kkt_residual);
            out.hop_sum_rates = hop_sum_rates(m, &sol.lambda);
            out.lambda = sol.lambda;
            out.mu = sol.mu;
        }
        Ok(_) | Err(Error::InfeasibleDelay { .. }) => {}
        Err(e) => out.error = Some(e.to_string()),
    }
    out
}

/// Every utility solve of one drop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropResult {
    pub drop: usize,
    pub seed: u64,
    pub hd_capacity: Vec<f64>,
    /// Indexed by delta.
    pub hd: Vec<ModeOutcome>,
    /// Indexed by RINR, then delta.
    pub fd: Vec<Vec<ModeOutcome>>,
    pub error: Option<String>,
}

impl DropResult {
    /// Rate gain at hop `hop` (1-based).
    pub fn gain(&self, rinr_idx: usize, delta_idx: usize, hop: usize) -> Option<Gain> {
        let hd = self.hd.get(delta_idx)?;
        let fd = self.fd.get(rinr_idx)?.get(delta_idx)?;
        Some(Gain::ratio(*fd.hop_sum_rates.get(hop - 1)?, hd.hop_sum_rates[hop - 1]))
    }
}

/// Output of a rate or delay sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub deltas_s: Vec<f64>,
    #[serde(with = "config::db_list")]
    pub rinr_db: Vec<f64>,
    pub hops: usize,
    pub drops: Vec<DropResult>,
}

/// Drop mean of a gain; any infinite drop makes the mean infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainSummary {
    pub mean: f64,
    pub n_finite: usize,
    pub n_infinite: usize,
    pub n_undefined: usize,
}

impl SweepResult {
    pub fn gains(&self, rinr_idx: usize, delta_idx: usize, hop: usize) -> Vec<Gain> {
        self.drops
            .iter()
            .filter_map(|d| d.gain(rinr_idx, delta_idx, hop))
            .collect()
    }

    pub fn gain_summary(&self, rinr_idx: usize, delta_idx: usize, hop: usize) -> GainSummary {
        let g = self.gains(rinr_idx, delta_idx, hop);
        let finite: Vec<f64> = g
            .iter()
            .filter_map(|x| match x {
                Gain::Finite(v) => Some(*v),
                _ => None,
            })
            .collect();
        let n_infinite = g.iter().filter(|x| matches!(x, Gain::Infinite)).count();
        let n_undefined = g.iter().filter(|x| matches!(x, Gain::Undefined)).count();
        let mean = if n_infinite > 0 {
            f64::INFINITY
        } else if finite.is_empty() {
            f64::NAN
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        };
        GainSummary {
            mean,
            n_finite: finite.len(),
            n_infinite,
            n_undefined,
        }
    }
}

fn run_drop_sweep(cfg: &ExperimentConfig, index: usize, deltas: &[f64]) -> DropResult {
    let mut res = DropResult {
        drop: index,
        seed: cfg.mc.seed,
        hd_capacity: Vec::new(),
        hd: Vec::new(),
        fd: Vec::new(),
        error: None,
    };
    let drop = match generate_drop(cfg, index) {
        Ok(d) => d,
        Err(e) => {
            res.error = Some(e.to_string());
            return res;
        }
    };
    res.hd_capacity = drop.capacity(cfg, DuplexMode::HalfDuplex, f64::NEG_INFINITY);
    let wants = |m| cfg.duplex.modes.contains(&m);
    let run = |mode, rinr: Option<f64>| -> Result<Vec<ModeOutcome>> {
        let m = drop.matrices(cfg, mode, rinr.unwrap_or(f64::NEG_INFINITY))?;
        Ok(deltas.iter().map(|&d| solve_mode(&m, cfg, rinr, d)).collect())
    };
    let outcome = (|| -> Result<()> {
        if wants(DuplexMode::HalfDuplex) {
            res.hd = run(DuplexMode::HalfDuplex, None)?;
        }
        if wants(DuplexMode::FullDuplex) {
            for &r in &cfg.duplex.rinr_db_sweep {
                res.fd.push(run(DuplexMode::FullDuplex, Some(r))?);
            }
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        res.error = Some(e.to_string());
    }
    res
}

fn sweep(cfg: &ExperimentConfig, deltas: Vec<f64>) -> Result<SweepResult> {
    cfg.validate()?;
    let (tree, _) = cfg.build_topology()?;
    let hops = (0..tree.num_vertices())
        .filter(|&v| !tree.kind(v).is_base_station())
        .map(|v| tree.depth(v))
        .max()
        .unwrap_or(0);
    let drops: Vec<DropResult> = (0..cfg.mc.n_drops)
        .into_par_iter()
        .map(|i| run_drop_sweep(cfg, i, &deltas))
        .collect();
    Ok(SweepResult {
        deltas_s: deltas,
        rinr_db: cfg.duplex.rinr_db_sweep.clone(),
        hops,
        drops,
    })
}

/// Utility maximization at `qos.delta_s` for HD and for FD at every RINR.
pub fn run_rate_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    sweep(cfg, vec![cfg.qos.delta_s])
}

/// Utility maximization over `qos.delta_sweep_s`.
pub fn run_delay_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    sweep(cfg, cfg.qos.delta_sweep_s.clone())
}

/// One row of the minimum-delay sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinDelayRow {
    pub drop: usize,
    pub lambda_min_pps: f64,
    pub mode: DuplexMode,
    #[serde(with = "config::opt_db")]
    pub rinr_db: Option<f64>,
    /// LP optimum (may be negative).
    pub t_star: f64,
    pub t_star_closed: f64,
    /// `None` when infeasible.
    pub delta_star_s: Option<f64>,
    pub feasible: bool,
    /// `delta*_HD / delta*_FD` on FD rows.
    pub gain: Option<Gain>,
    pub bottleneck_k: usize,
}

impl MinDelayRow {
    pub fn oracle_error(&self) -> f64 {
        (self.t_star - self.t_star_closed).abs() / self.t_star_closed.abs().max(1e-12)
    }
}

fn min_delay_rows(cfg: &ExperimentConfig, index: usize) -> Result<Vec<MinDelayRow>> {
    let drop = generate_drop(cfg, index)?;
    let mut variants = Vec::new();
    if cfg.duplex.modes.contains(&DuplexMode::HalfDuplex) {
        variants.push((DuplexMode::HalfDuplex, None));
    }
    if cfg.duplex.modes.contains(&DuplexMode::FullDuplex) {
        variants.extend(
            cfg.duplex
                .rinr_db_sweep
                .iter()
                .map(|&r| (DuplexMode::FullDuplex, Some(r))),
        );
    }
    let mut rows = Vec::new();
    for &lam in &cfg.qos.lambda_min_pps {
        let mut hd_t = None;
        for &(mode, rinr) in &variants {
            let m = drop.matrices(cfg, mode, rinr.unwrap_or(f64::NEG_INFINITY))?;
            let lp = rate_margin_lp(&m, lam, &LpOptions::default())?;
            let cf = closed_form_t_star(&m, lam);
            let feasible = cf.feasible && lp.t > infeasibility_margin(&m);
            let t_or_zero = if feasible { lp.t } else { 0.0 };
            let gain = match mode {
                DuplexMode::HalfDuplex => {
                    hd_t = Some(t_or_zero);
                    None
                }
                DuplexMode::FullDuplex => hd_t.map(|h| Gain::ratio(t_or_zero, h)),
            };
            rows.push(MinDelayRow {
                drop: index,
                lambda_min_pps: lam,
                mode,
                rinr_db: rinr,
                t_star: lp.t,
                t_star_closed: cf.t_star,
                delta_star_s: if feasible {
                    Some(min_feasible_delay(lp.t, cfg.qos.eta)?)
                } else {
                    None
                },
                feasible,
                gain,
                bottleneck_k: lp.bottleneck_bs,
            });
        }
    }
    Ok(rows)
}

/// LP minimum feasible delay per drop, mode and `lambda_min`, with the
/// closed-form optimum alongside.
pub fn run_min_delay_sweep(cfg: &ExperimentConfig) -> Result<Vec<MinDelayRow>> {
    cfg.validate()?;
    let per_drop: Vec<Result<Vec<MinDelayRow>>> = (0..cfg.mc.n_drops)
        .into_par_iter()
        .map(|i| min_delay_rows(cfg, i))
        .collect();
    let mut rows = Vec::new();
    for r in per_drop {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Line-network closed forms over backhaul SNR and `lambda_min`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRow {
    pub backhaul_snr_db: f64,
    pub lambda_min_pps: f64,
    pub mode: DuplexMode,
    pub t_star: f64,
    pub delta_star_s: Option<f64>,
    /// Latency gain on FD rows.
    pub gain: Option<f64>,
    /// Depth bound as published (may be below 1).
    pub k_max: i64,
    /// Largest feasible K from a direct scan; `None` if even K = 1 fails.
    pub k_max_scan: Option<usize>,
    pub bottleneck_k: usize,
}

pub fn line_params(cfg: &ExperimentConfig, backhaul_snr_db: f64, lambda_min: f64) -> LineNetworkParams {
    let a = &cfg.analysis;
    let rate = |snr_db: f64| capacity_pps(cfg.channel.bandwidth_hz, db_to_linear(snr_db), cfg.packet_bits());
    LineNetworkParams {
        k: a.num_iab,
        w: a.w,
        r_b: rate(backhaul_snr_db),
        r_a: rate(a.access_snr_db),
        lambda_min,
    }
}

pub fn run_analysis_sweep(cfg: &ExperimentConfig) -> Result<Vec<AnalysisRow>> {
    cfg.validate()?;
    let a = &cfg.analysis;
    let mut rows = Vec::new();
    for &snr in &a.backhaul_snr_db {
        for &lam in &a.lambda_min_pps {
            let p = line_params(cfg, snr, lam);
            p.validate()?;
            for mode in [DuplexMode::HalfDuplex, DuplexMode::FullDuplex] {
                let t = t_star_line(&p, mode);
                let bottleneck = closed_form_t_star(&p.matrices(mode)?, lam).bottleneck_bs;
                rows.push(AnalysisRow {
                    backhaul_snr_db: snr,
                    lambda_min_pps: lam,
                    mode,
                    t_star: t.t_star,
                    delta_star_s: if t.feasible {
                        Some(min_feasible_delay(t.t_star, cfg.qos.eta)?)
                    } else {
                        None
                    },
                    gain: (mode == DuplexMode::FullDuplex).then(|| latency_gain_line(&p)),
                    k_max: k_max_raw(&p, a.delta_target_s, cfg.qos.eta, mode),
                    k_max_scan: k_max_exact(&p, a.delta_target_s, cfg.qos.eta, mode, a.k_limit).ok(),
                    bottleneck_k: bottleneck,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeCheck {
    pub ue: usize,
    pub hops: usize,
    pub lambda_pps: f64,
    pub samples: usize,
    /// Empirical `P[D_m <= delta]`.
    pub p_delivered: f64,
    /// Empirical `P[h_m max-hop <= delta]`.
    pub p_max_hop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueCheck {
    pub edge: usize,
    pub arrival_pps: f64,
    pub service_pps: f64,
    pub samples: usize,
    /// KS distance to the exponential sojourn law; `None` below the sample floor.
    pub ks: Option<f64>,
}

/// Simulation of one solved operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueValidation {
    pub drop: usize,
    pub mode: DuplexMode,
    #[serde(with = "config::opt_db")]
    pub rinr_db: Option<f64>,
    pub delta_s: f64,
    pub eta: f64,
    pub feasible: bool,
    pub ues: Vec<UeCheck>,
    pub queues: Vec<QueueCheck>,
}

impl QueueValidation {
    pub fn worst_delivery(&self) -> f64 {
        self.ues.iter().map(|u| u.p_delivered).fold(f64::INFINITY, f64::min)
    }

    pub fn max_ks(&self) -> f64 {
        self.queues.iter().filter_map(|q| q.ks).fold(0.0, f64::max)
    }
}

/// Simulate the network at an operating point and compare with the model.
pub fn validate_operating_point<R: rand::Rng + ?Sized>(
    m: &NetworkMatrices,
    lambda: &[f64],
    mu: &[f64],
    delta_s: f64,
    opts: &SimOptions,
    min_queue_samples: usize,
    rng: &mut R,
) -> Result<(Vec<UeCheck>, Vec<QueueCheck>)> {
    let report = simulate(m, lambda, mu, opts, rng)?;
    let ues = (0..m.num_ues())
        .map(|ue| {
            let h = m.hops()[ue];
            UeCheck {
                ue,
                hops: h,
                lambda_pps: lambda[ue],
                samples: report.samples.iter().filter(|s| s.ue == ue).count(),
                p_delivered: report.delivery_probability(ue, delta_s),
                p_max_hop: report.max_hop_probability(ue, h, delta_s),
            }
        })
        .filter(|u| u.samples > 0)
        .collect();
    let queues = queue_specs(m, lambda, mu)
        .into_iter()
        .map(|q| {
            let s = &report.queue_sojourns[q.edge];
            QueueCheck {
                edge: q.edge,
                arrival_pps: q.arrival_rate,
                service_pps: q.service_rate,
                samples: s.len(),
                ks: (s.len() >= min_queue_samples).then(|| ks_distance_exponential(s, q.gap())),
            }
        })
        .collect();
    Ok((ues, queues))
}

/// Packets needed for the least-loaded queue to expect
/// `target_queue_samples` measured sojourns, clamped to
/// `[n_packets, max_packets]`.
pub fn packets_for_target(m: &NetworkMatrices, lambda: &[f64], v: &ValidationConfig) -> usize {
    let total: f64 = lambda.iter().sum();
    let least = m
        .arrivals(lambda)
        .into_iter()
        .filter(|a| *a > 0.0)
        .fold(f64::INFINITY, f64::min);
    let warm = SimOptions::default().warmup_fraction;
    let want = v.target_queue_samples as f64 * total / least / (1.0 - warm);
    if want.is_finite() {
        (want.ceil() as usize).clamp(v.n_packets, v.max_packets)
    } else {
        v.n_packets
    }
}

/// Solve the first `validation.drops` drops at `qos.delta_s` (HD, and FD at
/// `validation.rinr_db`) and simulate each optimal operating point.
pub fn run_queue_validation(cfg: &ExperimentConfig) -> Result<Vec<QueueValidation>> {
    cfg.validate()?;
    let v = &cfg.validation;
    let n = v.drops.min(cfg.mc.n_drops);
    let jobs: Vec<(usize, DuplexMode)> = (0..n)
        .flat_map(|i| cfg.duplex.modes.iter().map(move |&m| (i, m)))
        .collect();
    let out: Vec<Result<QueueValidation>> = jobs
        .par_iter()
        .map(|&(i, mode)| {
            let drop = generate_drop(cfg, i)?;
            let rinr = (mode == DuplexMode::FullDuplex).then_some(v.rinr_db);
            let m = drop.matrices(cfg, mode, rinr.unwrap_or(f64::NEG_INFINITY))?;
            let sol = solve_mode(&m, cfg, rinr, cfg.qos.delta_s);
            let mut res = QueueValidation {
                drop: i,
                mode,
                rinr_db: rinr,
                delta_s: cfg.qos.delta_s,
                eta: cfg.qos.eta,
                feasible: sol.feasible,
                ues: Vec::new(),
                queues: Vec::new(),
            };
            if sol.feasible {
                let opts = SimOptions {
                    n_packets: packets_for_target(&m, &sol.lambda, v),
                    splitting: v.splitting,
                    ..SimOptions::default()
                };
                let mut rng = sim_rng(cfg.mc.seed, i, mode);
                let (ues, queues) = validate_operating_point(
                    &m,
                    &sol.lambda,
                    &sol.mu,
                    cfg.qos.delta_s,
                    &opts,
                    v.min_queue_samples,
                    &mut rng,
                )?;
                res.ues = ues;
                res.queues = queues;
            }
            Ok(res)
        })
        .collect();
    out.into_iter().collect()
}
