use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::{AnalysisRow, ExperimentConfig, Gain, MinDelayRow, QueueValidation, SweepResult};
use crate::error::Result;

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn gain_field(g: Option<Gain>) -> String {
    g.map(Gain::to_field).unwrap_or_default()
}

/// One row per (drop, delta, RINR, hop).
pub fn write_sweep_csv<W: Write>(r: &SweepResult, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "drop",
        "delta_s",
        "rinr_db",
        "hop",
        "hd_sum_rate_pps",
        "fd_sum_rate_pps",
        "hd_feasible",
        "fd_feasible",
        "gain",
    ])?;
    for d in &r.drops {
        for (ri, fd_row) in d.fd.iter().enumerate() {
            for (di, fd) in fd_row.iter().enumerate() {
                let hd = d.hd.get(di);
                for hop in 1..=r.hops {
                    out.write_record([
                        d.drop.to_string(),
                        num(r.deltas_s[di]),
                        num(r.rinr_db[ri]),
                        hop.to_string(),
                        hd.map(|h| num(h.hop_sum_rates[hop - 1])).unwrap_or_default(),
                        num(fd.hop_sum_rates[hop - 1]),
                        hd.map(|h| h.feasible.to_string()).unwrap_or_default(),
                        fd.feasible.to_string(),
                        gain_field(d.gain(ri, di, hop)),
                    ])?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_min_delay_csv<W: Write>(rows: &[MinDelayRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "drop",
        "lambda_min_pps",
        "mode",
        "rinr_db",
        "t_star",
        "t_star_closed",
        "delta_star_s",
        "feasible",
        "gain",
        "bottleneck_k",
    ])?;
    for r in rows {
        out.write_record([
            r.drop.to_string(),
            num(r.lambda_min_pps),
            r.mode.to_string(),
            opt(r.rinr_db),
            num(r.t_star),
            num(r.t_star_closed),
            opt(r.delta_star_s),
            r.feasible.to_string(),
            gain_field(r.gain),
            r.bottleneck_k.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_analysis_csv<W: Write>(rows: &[AnalysisRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "backhaul_snr_db",
        "lambda_min_pps",
        "mode",
        "t_star",
        "delta_star_s",
        "gain",
        "k_max",
        "k_max_scan",
        "bottleneck_k",
    ])?;
    for r in rows {
        out.write_record([
            num(r.backhaul_snr_db),
            num(r.lambda_min_pps),
            r.mode.to_string(),
            num(r.t_star),
            opt(r.delta_star_s),
            opt(r.gain),
            r.k_max.to_string(),
            r.k_max_scan.map(|k| k.to_string()).unwrap_or_default(),
            r.bottleneck_k.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Per-UE delivery statistics.
pub fn write_validation_ue_csv<W: Write>(vals: &[QueueValidation], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "drop",
        "mode",
        "rinr_db",
        "ue",
        "hops",
        "lambda_pps",
        "samples",
        "p_delivered",
        "p_max_hop",
        "eta",
    ])?;
    for v in vals {
        for u in &v.ues {
            out.write_record([
                v.drop.to_string(),
                v.mode.to_string(),
                opt(v.rinr_db),
                u.ue.to_string(),
                u.hops.to_string(),
                num(u.lambda_pps),
                u.samples.to_string(),
                num(u.p_delivered),
                num(u.p_max_hop),
                num(v.eta),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Per-queue KS statistics.
pub fn write_validation_queue_csv<W: Write>(vals: &[QueueValidation], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "drop",
        "mode",
        "rinr_db",
        "edge",
        "arrival_pps",
        "service_pps",
        "samples",
        "ks",
    ])?;
    for v in vals {
        for q in &v.queues {
            out.write_record([
                v.drop.to_string(),
                v.mode.to_string(),
                opt(v.rinr_db),
                q.edge.to_string(),
                num(q.arrival_pps),
                num(q.service_pps),
                q.samples.to_string(),
                opt(q.ks),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// `run.json`: what was run, with the resolved config.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub n_drops: usize,
    /// ChaCha stream of each drop under `seed`.
    pub drop_streams: Vec<u64>,
    pub files: Vec<String>,
    pub config: ExperimentConfig,
}

impl RunManifest {
    pub fn new(command: &str, cfg: &ExperimentConfig, files: Vec<String>) -> Self {
        RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed: cfg.mc.seed,
            n_drops: cfg.mc.n_drops,
            drop_streams: (0..cfg.mc.n_drops as u64).collect(),
            files,
            config: cfg.clone(),
        }
    }
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    fs::create_dir_all(dir)?;
    let s = serde_json::to_string_pretty(manifest)?;
    fs::write(dir.join("run.json"), s + "\n")?;
    Ok(())
}

/// Write `value` as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(p) = path.parent() {
        fs::create_dir_all(p)?;
    }
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// Create `path` (and its directory) and hand a buffered writer to `f`.
pub fn write_file<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut std::io::BufWriter<fs::File>) -> Result<()>,
{
    if let Some(p) = path.parent() {
        fs::create_dir_all(p)?;
    }
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}
