use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::io::Write;

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::queue_specs;
use crate::error::{Error, Result};
use crate::topology::NetworkMatrices;

/// How the donor and IAB nodes pick the next hop of a packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Splitting {
    /// Each UE has its own Poisson stream and packets follow their route.
    #[default]
    DestinationTag,
    /// One aggregate Poisson stream; at each BS the packet picks child edge
    /// `u` with probability `(F lambda)_u / (F lambda)_in`.
    Probabilistic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    /// External arrivals to generate, warm-up included.
    pub n_packets: usize,
    /// Leading fraction of packets excluded from statistics.
    pub warmup_fraction: f64,
    pub splitting: Splitting,
    pub allow_unstable: bool,
    /// Edge pairs whose joint busy time is tracked.
    pub joint_pairs: Vec<(usize, usize)>,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            n_packets: 100_000,
            warmup_fraction: 0.1,
            splitting: Splitting::DestinationTag,
            allow_unstable: false,
            joint_pairs: Vec::new(),
        }
    }
}

/// Delays of one delivered packet.
#[derive(Debug, Clone, PartialEq)]
pub struct DelaySample {
    pub ue: usize,
    /// Sojourn at each hop, donor first.
    pub hops: Vec<f64>,
    /// End-to-end delay `D_m`.
    pub total: f64,
    /// Largest per-hop sojourn.
    pub max_hop: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    /// Post-warm-up packets in delivery order.
    pub samples: Vec<DelaySample>,
    /// Per-edge sojourns of post-warm-up packets.
    pub queue_sojourns: Vec<Vec<f64>>,
    /// Time between the first measured arrival and the last arrival.
    pub window_s: f64,
    /// Deliveries per UE inside the window.
    pub delivered: Vec<usize>,
    /// Time-average of `1{N_v > 0}` inside the window.
    pub busy_fraction: Vec<f64>,
    /// Time-average of `1{N_a > 0, N_b > 0}` for each requested pair.
    pub joint_busy: Vec<f64>,
}

impl SimReport {
    pub fn ue_totals(&self, ue: usize) -> Vec<f64> {
        self.samples.iter().filter(|s| s.ue == ue).map(|s| s.total).collect()
    }

    /// Empirical `P[D_m <= delta]`.
    pub fn delivery_probability(&self, ue: usize, delta: f64) -> f64 {
        super::empirical_cdf_at(&self.ue_totals(ue), delta)
    }

    /// Empirical `P[h_m max-hop <= delta]`.
    pub fn max_hop_probability(&self, ue: usize, h_m: usize, delta: f64) -> f64 {
        let x: Vec<f64> = self
            .samples
            .iter()
            .filter(|s| s.ue == ue)
            .map(|s| h_m as f64 * s.max_hop)
            .collect();
        super::empirical_cdf_at(&x, delta)
    }

    pub fn throughput(&self, ue: usize) -> f64 {
        self.delivered[ue] as f64 / self.window_s
    }
}

#[derive(Debug, Clone, Copy)]
enum EventKind {
    /// External arrival for a UE stream, or the aggregate stream.
    Arrival(Option<usize>),
    Departure(usize),
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // reversed: BinaryHeap pops the earliest event, ties by insertion order
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Packet {
    id: usize,
    ue: Option<usize>,
    created: f64,
    entered: f64,
    hop: usize,
    hops: Vec<f64>,
}

struct Network {
    routes: Vec<Vec<usize>>,
    rates: Vec<f64>,
    /// UE reached through each access edge.
    access_ue: Vec<Option<usize>>,
    /// Next-hop edges and sampler after each edge (IAB children) and at the donor.
    next: Vec<Option<(Vec<usize>, WeightedIndex<f64>)>>,
    first: Option<(Vec<usize>, WeightedIndex<f64>)>,
}

impl Network {
    fn build(matrices: &NetworkMatrices, lambda: &[f64], mu: &[f64]) -> Self {
        let n_e = matrices.num_edges();
        let routes = matrices.routes().to_vec();
        let load = matrices.arrivals(lambda);
        let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n_e];
        let mut first = Vec::new();
        let mut access_ue = vec![None; n_e];
        for (m, r) in routes.iter().enumerate() {
            if !first.contains(&r[0]) {
                first.push(r[0]);
            }
            for w in r.windows(2) {
                if !succ[w[0]].contains(&w[1]) {
                    succ[w[0]].push(w[1]);
                }
            }
            access_ue[*r.last().expect("routes are non-empty")] = Some(m);
        }
        let sampler = |edges: Vec<usize>| {
            let w: Vec<f64> = edges.iter().map(|&v| load[v]).collect();
            WeightedIndex::new(&w).ok().map(|idx| (edges, idx))
        };
        Network {
            rates: (0..n_e).map(|v| matrices.capacity()[v] * mu[v]).collect(),
            next: succ.into_iter().map(sampler).collect(),
            first: sampler(first),
            routes,
            access_ue,
        }
    }
}

/// Event-driven simulation of the Jackson network at `(lambda, mu)`.
///
/// FIFO single-server queues, one per edge, with service times drawn
/// independently at every hop.
pub fn simulate<R: Rng + ?Sized>(
    matrices: &NetworkMatrices,
    lambda: &[f64],
    mu: &[f64],
    opts: &SimOptions,
    rng: &mut R,
) -> Result<SimReport> {
    if lambda.len() != matrices.num_ues() || mu.len() != matrices.num_edges() {
        return Err(Error::InvalidParameter("lambda/mu dimension mismatch".into()));
    }
    if lambda.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
        return Err(Error::InvalidParameter("arrival rates must be finite and >= 0".into()));
    }
    if !(0.0..1.0).contains(&opts.warmup_fraction) || opts.n_packets == 0 {
        return Err(Error::InvalidParameter(
            "need packets and a warm-up fraction in [0, 1)".into(),
        ));
    }
    if !opts.allow_unstable {
        for s in queue_specs(matrices, lambda, mu) {
            if s.arrival_rate > 0.0 {
                s.check_stable()?;
            }
        }
    }
    let total_rate: f64 = lambda.iter().sum();
    if total_rate <= 0.0 {
        return Err(Error::InvalidParameter("no traffic to simulate".into()));
    }
    let net = Network::build(matrices, lambda, mu);
    let n_e = matrices.num_edges();
    let n_ue = matrices.num_ues();
    let n_warm = (opts.warmup_fraction * opts.n_packets as f64).floor() as usize;

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut push = |heap: &mut BinaryHeap<Event>, time: f64, kind: EventKind| {
        heap.push(Event { time, seq, kind });
        seq += 1;
    };
    let inter = |rate: f64| Exp::new(rate).map_err(|e| Error::InvalidParameter(e.to_string()));
    let ue_gaps: Vec<Option<Exp<f64>>> = lambda
        .iter()
        .map(|&l| if l > 0.0 { inter(l).ok() } else { None })
        .collect();
    let agg_gap = inter(total_rate)?;
    match opts.splitting {
        Splitting::DestinationTag => {
            for (m, d) in ue_gaps.iter().enumerate() {
                if let Some(d) = d {
                    push(&mut heap, d.sample(rng), EventKind::Arrival(Some(m)));
                }
            }
        }
        Splitting::Probabilistic => push(&mut heap, agg_gap.sample(rng), EventKind::Arrival(None)),
    }
    let service: Vec<Option<Exp<f64>>> = net
        .rates
        .iter()
        .map(|&r| if r > 0.0 { inter(r).ok() } else { None })
        .collect();

    let mut packets: Vec<Packet> = Vec::new();
    let mut queues: Vec<VecDeque<usize>> = vec![VecDeque::new(); n_e];
    let mut created = 0usize;
    let mut report = SimReport {
        samples: Vec::with_capacity(opts.n_packets - n_warm),
        queue_sojourns: vec![Vec::new(); n_e],
        window_s: 0.0,
        delivered: vec![0; n_ue],
        busy_fraction: vec![0.0; n_e],
        joint_busy: vec![0.0; opts.joint_pairs.len()],
    };
    let mut window_open = false;
    let mut window_closed = false;
    let mut last_time = 0.0;

    while let Some(ev) = heap.pop() {
        let now = ev.time;
        if window_open && !window_closed {
            let dt = now - last_time;
            report.window_s += dt;
            for v in 0..n_e {
                if !queues[v].is_empty() {
                    report.busy_fraction[v] += dt;
                }
            }
            for (i, &(a, b)) in opts.joint_pairs.iter().enumerate() {
                if !queues[a].is_empty() && !queues[b].is_empty() {
                    report.joint_busy[i] += dt;
                }
            }
        }
        last_time = now;

        let (edge, pid) = match ev.kind {
            EventKind::Arrival(stream) => {
                if created >= opts.n_packets {
                    continue;
                }
                if created == n_warm {
                    window_open = true;
                }
                let (ue, first_edge) = match stream {
                    Some(m) => (Some(m), net.routes[m][0]),
                    None => {
                        let (edges, idx) = net.first.as_ref().expect("traffic exists");
                        (None, edges[idx.sample(rng)])
                    }
                };
                let pid = packets.len();
                packets.push(Packet {
                    id: created,
                    ue,
                    created: now,
                    entered: now,
                    hop: 0,
                    hops: Vec::new(),
                });
                created += 1;
                if created == opts.n_packets {
                    window_closed = true;
                } else {
                    match stream {
                        Some(m) => {
                            let d = ue_gaps[m].as_ref().expect("positive rate");
                            push(&mut heap, now + d.sample(rng), EventKind::Arrival(Some(m)));
                        }
                        None => push(&mut heap, now + agg_gap.sample(rng), EventKind::Arrival(None)),
                    }
                }
                (first_edge, pid)
            }
            EventKind::Departure(v) => {
                let pid = queues[v].pop_front().expect("departure from a busy queue");
                if !queues[v].is_empty() {
                    let s = service[v].as_ref().expect("busy queue has service");
                    push(&mut heap, now + s.sample(rng), EventKind::Departure(v));
                }
                let p = &mut packets[pid];
                let sojourn = now - p.entered;
                p.hops.push(sojourn);
                let measured = p.id >= n_warm;
                if measured {
                    report.queue_sojourns[v].push(sojourn);
                }
                if let Some(m) = net.access_ue[v] {
                    if window_open && !window_closed {
                        report.delivered[m] += 1;
                    }
                    if measured {
                        let total = now - p.created;
                        let max_hop = p.hops.iter().fold(0.0f64, |a, b| a.max(*b));
                        report.samples.push(DelaySample {
                            ue: p.ue.unwrap_or(m),
                            hops: std::mem::take(&mut p.hops),
                            total,
                            max_hop,
                        });
                    }
                    continue;
                }
                p.hop += 1;
                p.entered = now;
                let next_edge = match p.ue {
                    Some(m) => net.routes[m][p.hop],
                    None => {
                        let (edges, idx) = net.next[v].as_ref().expect("relay edge has children");
                        edges[idx.sample(rng)]
                    }
                };
                (next_edge, pid)
            }
        };

        queues[edge].push_back(pid);
        if queues[edge].len() == 1 {
            let s = service[edge]
                .as_ref()
                .ok_or_else(|| Error::InvalidParameter(format!("edge {edge} carries traffic but has no service")))?;
            push(&mut heap, now + s.sample(rng), EventKind::Departure(edge));
        }
    }

    if report.window_s > 0.0 {
        for b in report.busy_fraction.iter_mut().chain(report.joint_busy.iter_mut()) {
            *b /= report.window_s;
        }
    }
    Ok(report)
}

/// Per-hop rows `ue_id, hop, sojourn_s, total_s`.
pub fn write_delay_csv<W: Write>(samples: &[DelaySample], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["ue_id", "hop", "sojourn_s", "total_s"])?;
    for s in samples {
        for (h, soj) in s.hops.iter().enumerate() {
            wtr.write_record([s.ue.to_string(), h.to_string(), soj.to_string(), s.total.to_string()])?;
        }
    }
    wtr.flush()?;
    Ok(())
}
