use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use fdiab::experiments::{
    run_analysis_sweep, run_delay_sweep, run_min_delay_sweep, run_queue_validation, run_rate_sweep, write_analysis_csv,
    write_file, write_json, write_manifest, write_min_delay_csv, write_sweep_csv, write_validation_queue_csv,
    write_validation_ue_csv, ExperimentConfig, MinDelayRow, RunManifest, SweepResult,
};
use fdiab::{DuplexMode, NetworkMatrices};

#[derive(Parser)]
#[command(
    name = "fdiab",
    version,
    about = "Latency-constrained throughput of half- and full-duplex IAB networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimum feasible delay per drop, mode and rate floor.
    MinDelay(Common),
    /// Per-UE rates of the utility maximization at `qos.delta_s`.
    Utility(Common),
    /// Largest line depth meeting the delay target, over backhaul SNR.
    Kmax(Common),
    /// HD/FD minimum-delay ratio per drop and rate floor.
    LatencyGain(Common),
    /// Per-hop sum rates over RINR at `qos.delta_s`.
    RateSweep(Common),
    /// Per-hop sum rates over the `qos.delta_sweep_s` deadlines.
    DelaySweep(Common),
    /// Simulate the optimal operating points and compare to the delay model.
    ValidateQueues(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config; defaults are used for missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    drops: Option<usize>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.mc.seed = s;
        }
        if let Some(n) = self.drops {
            cfg.mc.n_drops = n;
        }
        if let Some(o) = &self.out {
            cfg.output.dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Collects written file names for the manifest.
struct Outputs<'a> {
    cfg: &'a ExperimentConfig,
    files: Vec<String>,
}

impl<'a> Outputs<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Self {
        Outputs { cfg, files: Vec::new() }
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.cfg.output.dir.join(name)
    }

    fn csv<F>(&mut self, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut std::io::BufWriter<std::fs::File>) -> fdiab::Result<()>,
    {
        if self.cfg.output.wants("csv") {
            let p = self.path(name);
            write_file(&p, f)?;
        }
        Ok(())
    }

    fn json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        if self.cfg.output.wants("json") {
            let p = self.path(name);
            write_json(&p, value)?;
        }
        Ok(())
    }

    fn finish(self, command: &str) -> Result<()> {
        let dir: &Path = &self.cfg.output.dir;
        write_manifest(dir, &RunManifest::new(command, self.cfg, self.files.clone()))?;
        eprintln!("wrote {} file(s) and run.json to {}", self.files.len(), dir.display());
        Ok(())
    }
}

fn write_sweep(out: &mut Outputs, stem: &str, r: &SweepResult) -> Result<()> {
    out.csv(&format!("{stem}.csv"), |w| write_sweep_csv(r, w))?;
    out.json(&format!("{stem}.json"), r)?;
    for (ri, rinr) in r.rinr_db.iter().enumerate() {
        let s = r.gain_summary(ri, 0, r.hops);
        eprintln!(
            "RINR {rinr:>6} dB: last-hop mean gain {:.3} ({} finite, {} inf, {} undefined)",
            s.mean, s.n_finite, s.n_infinite, s.n_undefined
        );
    }
    Ok(())
}

fn write_utility_csv<W: std::io::Write>(cfg: &ExperimentConfig, r: &SweepResult, w: W) -> Result<()> {
    let (tree, _) = cfg.build_topology()?;
    let hops = NetworkMatrices::uniform(&tree, DuplexMode::HalfDuplex, 1.0)?
        .hops()
        .to_vec();
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "drop",
        "delta_s",
        "mode",
        "rinr_db",
        "ue",
        "hops",
        "lambda_pps",
        "feasible",
    ])?;
    for d in &r.drops {
        let fd = d.fd.iter().flatten();
        for o in d.hd.iter().chain(fd) {
            for (ue, h) in hops.iter().enumerate() {
                out.write_record([
                    d.drop.to_string(),
                    o.delta_s.to_string(),
                    o.mode.to_string(),
                    o.rinr_db.map(|x| x.to_string()).unwrap_or_default(),
                    ue.to_string(),
                    h.to_string(),
                    o.lambda.get(ue).map(|l| l.to_string()).unwrap_or_default(),
                    o.feasible.to_string(),
                ])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn write_latency_gain_csv<W: std::io::Write>(rows: &[MinDelayRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "drop",
        "lambda_min_pps",
        "rinr_db",
        "hd_delta_star_s",
        "fd_delta_star_s",
        "hd_feasible",
        "fd_feasible",
        "gain",
    ])?;
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for fd in rows.iter().filter(|r| r.mode == DuplexMode::FullDuplex) {
        let hd = rows
            .iter()
            .find(|h| h.mode == DuplexMode::HalfDuplex && h.drop == fd.drop && h.lambda_min_pps == fd.lambda_min_pps);
        out.write_record([
            fd.drop.to_string(),
            fd.lambda_min_pps.to_string(),
            opt(fd.rinr_db),
            opt(hd.and_then(|h| h.delta_star_s)),
            opt(fd.delta_star_s),
            hd.map(|h| h.feasible.to_string()).unwrap_or_default(),
            fd.feasible.to_string(),
            fd.gain.map(|g| g.to_field()).unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

fn run(cmd: &Command) -> Result<()> {
    let (name, common) = match cmd {
        Command::MinDelay(c) => ("min-delay", c),
        Command::Utility(c) => ("utility", c),
        Command::Kmax(c) => ("kmax", c),
        Command::LatencyGain(c) => ("latency-gain", c),
        Command::RateSweep(c) => ("rate-sweep", c),
        Command::DelaySweep(c) => ("delay-sweep", c),
        Command::ValidateQueues(c) => ("validate-queues", c),
    };
    let cfg = common.resolve()?;
    let mut out = Outputs::new(&cfg);
    match cmd {
        Command::MinDelay(_) => {
            let rows = run_min_delay_sweep(&cfg)?;
            out.csv("min_delay.csv", |w| write_min_delay_csv(&rows, w))?;
            out.json("min_delay.json", &rows)?;
        }
        Command::LatencyGain(_) => {
            let rows = run_min_delay_sweep(&cfg)?;
            if cfg.output.wants("csv") {
                let p = out.path("latency_gain.csv");
                let mut w = csv_file(&p)?;
                write_latency_gain_csv(&rows, &mut w)?;
            }
            out.json("latency_gain.json", &rows)?;
        }
        Command::Utility(_) => {
            let r = run_rate_sweep(&cfg)?;
            if cfg.output.wants("csv") {
                let p = out.path("utility.csv");
                let mut w = csv_file(&p)?;
                write_utility_csv(&cfg, &r, &mut w)?;
            }
            out.json("utility.json", &r)?;
        }
        Command::Kmax(_) => {
            let rows = run_analysis_sweep(&cfg)?;
            out.csv("kmax.csv", |w| write_analysis_csv(&rows, w))?;
            out.json("kmax.json", &rows)?;
        }
        Command::RateSweep(_) => write_sweep(&mut out, "rate_sweep", &run_rate_sweep(&cfg)?)?,
        Command::DelaySweep(_) => write_sweep(&mut out, "delay_sweep", &run_delay_sweep(&cfg)?)?,
        Command::ValidateQueues(_) => {
            let vals = run_queue_validation(&cfg)?;
            out.csv("validation_ues.csv", |w| write_validation_ue_csv(&vals, w))?;
            out.csv("validation_queues.csv", |w| write_validation_queue_csv(&vals, w))?;
            out.json("validation.json", &vals)?;
            for v in vals.iter().filter(|v| v.feasible) {
                eprintln!(
                    "drop {} {}: max KS {:.4}, worst P[D <= delta] {:.4}",
                    v.drop,
                    v.mode,
                    v.max_ks(),
                    v.worst_delivery()
                );
            }
        }
    }
    out.finish(name)
}

fn csv_file(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    run(&cli.command)
}
