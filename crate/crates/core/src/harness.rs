//! Experiment runner: random topologies, every requested scheduler on each,
//! verification of every schedule, and CSV output.
//!
//! Per-trial seeds are a pure function of `(master_seed, n, trial)` so any
//! subset of an experiment regenerates the same topologies, and all
//! algorithms in a trial are compared on the same graph:
//!
//! ```text
//! mix(z)          = SplitMix64 finalizer
//! trial_seed      = mix(mix(mix(master_seed) ^ n) ^ trial)
//! topology seed   = trial_seed
//! LGLS start seed = mix(trial_seed ^ 0x4c474c53)
//! GP random order = mix(trial_seed ^ ordering_seed)   (only for `random:<seed>`)
//! ```

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::line_graph::{build_line_graph, expand_loads, LoadMap};
use crate::radio_model::RadioParams;
use crate::scheduler_baseline::{gp_schedule, optimal_schedule, GpOrdering};
use crate::scheduler_lgls::{
    lgls_schedule_with, verify_schedule, Algorithm, LglsOptions, Schedule, ScheduleReport,
};
use crate::topology::{build_comm_graph, generate_topology, save_topology, CommGraph, Node};

pub const DEFAULT_SIDE_M: f64 = 3000.0;

const LGLS_STREAM: u64 = 0x4c47_4c53;

pub fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn trial_seed(master_seed: u64, n: usize, trial: usize) -> u64 {
    mix(mix(mix(master_seed) ^ n as u64) ^ trial as u64)
}

pub fn lgls_seed(trial_seed: u64) -> u64 {
    mix(trial_seed ^ LGLS_STREAM)
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub node_counts: Vec<usize>,
    pub trials: usize,
    pub side: f64,
    pub params: RadioParams,
    pub algorithms: Vec<Algorithm>,
    pub master_seed: u64,
    pub gp_ordering: GpOrdering,
    /// Open LGLS colors at the lowest-id vertex instead of a random one.
    pub deterministic: bool,
    /// Worker threads; 0 lets the pool pick.
    pub workers: usize,
    /// Record wall-clock runtimes. Off by default so output bytes only depend
    /// on the configuration.
    pub timing: bool,
    /// Where the topology of a failed verification is written.
    pub failure_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            node_counts: (1..=10).map(|k| 25 * k).collect(),
            trials: 200,
            side: DEFAULT_SIDE_M,
            params: RadioParams::paper_defaults(),
            algorithms: vec![Algorithm::Lgls, Algorithm::Gp],
            master_seed: 1,
            gp_ordering: GpOrdering::default(),
            deterministic: false,
            workers: 0,
            timing: false,
            failure_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.node_counts.is_empty() {
            return Err(Error::Config("at least one node count is required".into()));
        }
        if self.node_counts.contains(&0) {
            return Err(Error::Config("node counts must be at least 1".into()));
        }
        if !(self.side.is_finite() && self.side > 0.0) {
            return Err(Error::Config(format!("side must be positive, got {}", self.side)));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms selected".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub n: usize,
    pub trial: usize,
    pub algo: Algorithm,
    pub links: usize,
    pub schedule_length: usize,
    pub runtime_ms: Option<f64>,
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub n: usize,
    pub algo: Algorithm,
    pub trials: usize,
    pub mean_len: f64,
    /// Sample standard deviation; 0 for a single trial.
    pub std_len: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentResult {
    pub fn mean_length(&self, n: usize, algo: Algorithm) -> Option<f64> {
        self.summary
            .iter()
            .find(|s| s.n == n && s.algo == algo)
            .map(|s| s.mean_len)
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let mut algorithms = cfg.algorithms.clone();
    algorithms.sort();
    algorithms.dedup();

    let jobs: Vec<(usize, usize)> = cfg
        .node_counts
        .iter()
        .flat_map(|&n| (0..cfg.trials).map(move |t| (n, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let per_trial: Vec<Vec<ResultRow>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(n, trial)| run_trial(cfg, &algorithms, n, trial))
            .collect::<Result<_>>()
    })?;

    let mut rows: Vec<ResultRow> = per_trial.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.n, r.trial, r.algo));
    let summary = summarize(&rows);
    Ok(ExperimentResult { rows, summary })
}

fn run_trial(
    cfg: &ExperimentConfig,
    algorithms: &[Algorithm],
    n: usize,
    trial: usize,
) -> Result<Vec<ResultRow>> {
    let seed = trial_seed(cfg.master_seed, n, trial);
    let nodes = generate_topology(n, cfg.side, seed);
    let g = build_comm_graph(nodes, cfg.params)?;
    let ordering = match cfg.gp_ordering {
        GpOrdering::Random(s) => GpOrdering::Random(mix(seed ^ s)),
        other => other,
    };

    let mut rows = Vec::with_capacity(algorithms.len());
    for &algo in algorithms {
        let start = Instant::now();
        let schedule = run_algorithm(&g, algo, lgls_seed(seed), cfg.deterministic, ordering)?;
        let elapsed = start.elapsed();
        let report = verify_schedule(&g, &schedule)?;
        if !report.feasible() {
            let dir = cfg.failure_dir.clone().unwrap_or_else(std::env::temp_dir);
            let path = dir.join(format!("failed_{algo}_n{n}_trial{trial}.csv"));
            save_topology(g.nodes(), &path)?;
            return Err(Error::VerificationFailed {
                n,
                trial,
                algo: algo.to_string(),
                topology: path,
            });
        }
        rows.push(ResultRow {
            n,
            trial,
            algo,
            links: g.link_count(),
            schedule_length: schedule.num_slots(),
            runtime_ms: cfg.timing.then_some(elapsed.as_secs_f64() * 1e3),
            verified: true,
        });
    }
    Ok(rows)
}

/// Runs one scheduler; for LGLS the timed span includes line-graph construction.
pub fn run_algorithm(
    g: &CommGraph,
    algo: Algorithm,
    seed: u64,
    deterministic: bool,
    ordering: GpOrdering,
) -> Result<Schedule> {
    Ok(match algo {
        Algorithm::Lgls => {
            let lg = build_line_graph(g)?;
            lgls_schedule_with(&lg, LglsOptions { seed, deterministic })
        }
        Algorithm::Gp => gp_schedule(g, ordering),
        Algorithm::Optimal => optimal_schedule(g)?,
    })
}

pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(usize, Algorithm)> = rows.iter().map(|r| (r.n, r.algo)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(n, algo)| {
            let lens: Vec<f64> = rows
                .iter()
                .filter(|r| r.n == n && r.algo == algo)
                .map(|r| r.schedule_length as f64)
                .collect();
            let count = lens.len() as f64;
            let mean = lens.iter().sum::<f64>() / count;
            let std = if lens.len() > 1 {
                (lens.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1.0)).sqrt()
            } else {
                0.0
            };
            SummaryRow {
                n,
                algo,
                trials: lens.len(),
                mean_len: mean,
                std_len: std,
            }
        })
        .collect()
}

pub fn write_results_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["n", "trial", "algo", "links", "schedule_length", "runtime_ms", "verified"])?;
    for r in rows {
        wtr.write_record([
            r.n.to_string(),
            r.trial.to_string(),
            r.algo.to_string(),
            r.links.to_string(),
            r.schedule_length.to_string(),
            r.runtime_ms.map_or_else(String::new, |ms| format!("{ms:.3}")),
            r.verified.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Aggregate file for plotting: `n,algo,mean_len,std_len`.
pub fn write_summary_csv<W: Write>(summary: &[SummaryRow], out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["n", "algo", "mean_len", "std_len"])?;
    for s in summary {
        wtr.write_record([
            s.n.to_string(),
            s.algo.to_string(),
            format!("{:.6}", s.mean_len),
            format!("{:.6}", s.std_len),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct LoadRecord {
    link_id: usize,
    demand: u32,
}

/// Reads `link_id,demand`. Links not listed keep a demand of 1.
pub fn read_loads<R: Read>(r: R, links: usize, max_ratio: u32) -> Result<LoadMap> {
    let mut demands = vec![1u32; links];
    let mut seen = vec![false; links];
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let rec: LoadRecord = rec
            .deserialize(None)
            .map_err(|e| Error::parse(line, e.to_string()))?;
        if rec.link_id >= links {
            return Err(Error::parse(line, format!("unknown link id {}", rec.link_id)));
        }
        if std::mem::replace(&mut seen[rec.link_id], true) {
            return Err(Error::parse(line, format!("duplicate link id {}", rec.link_id)));
        }
        demands[rec.link_id] = rec.demand;
    }
    LoadMap::new(demands, max_ratio)
}

/// Where a single scheduling run takes its nodes from.
#[derive(Debug, Clone)]
pub enum TopologySource {
    File(PathBuf),
    Random { n: usize, side: f64, seed: u64 },
    Nodes(Vec<Node>),
}

#[derive(Debug, Clone)]
pub struct ScheduleRequest {
    pub source: TopologySource,
    pub params: RadioParams,
    pub algo: Algorithm,
    pub gp_ordering: GpOrdering,
    pub seed: u64,
    pub deterministic: bool,
    /// Per-link demands; the graph is load-expanded before scheduling.
    pub loads: Option<LoadMap>,
    pub loads_file: Option<PathBuf>,
    pub max_load_ratio: u32,
}

impl ScheduleRequest {
    pub fn new(source: TopologySource, algo: Algorithm) -> Self {
        ScheduleRequest {
            source,
            params: RadioParams::paper_defaults(),
            algo,
            gp_ordering: GpOrdering::default(),
            seed: 0,
            deterministic: false,
            loads: None,
            loads_file: None,
            max_load_ratio: 5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScheduleOutcome {
    /// The graph that was actually scheduled (load-expanded if demands were given).
    pub graph: CommGraph,
    /// Physical link id of each scheduled link.
    pub link_ids: Vec<usize>,
    pub schedule: Schedule,
    pub report: ScheduleReport,
}

impl ScheduleOutcome {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let with_algo = self.schedule.algorithm() != Algorithm::Lgls;
        self.schedule
            .write_csv(&self.graph, Some(&self.link_ids), with_algo, out)
    }
}

/// Builds the graph for a single topology, schedules it and verifies the
/// result. Callers should refuse to emit a schedule whose report is infeasible.
pub fn schedule_one(req: &ScheduleRequest) -> Result<ScheduleOutcome> {
    let nodes = match &req.source {
        TopologySource::File(path) => crate::topology::load_topology(path)?,
        TopologySource::Random { n, side, seed } => generate_topology(*n, *side, *seed),
        TopologySource::Nodes(nodes) => nodes.clone(),
    };
    let physical = build_comm_graph(nodes, req.params)?;
    let loads = match (&req.loads, &req.loads_file) {
        (Some(l), _) => Some(l.clone()),
        (None, Some(path)) => Some(read_loads(
            std::fs::File::open(path)?,
            physical.link_count(),
            req.max_load_ratio,
        )?),
        (None, None) => None,
    };
    let (graph, link_ids) = match loads {
        Some(loads) => {
            let ex = expand_loads(&physical, &loads)?;
            (ex.graph, ex.origin)
        }
        None => {
            let ids = (0..physical.link_count()).collect();
            (physical, ids)
        }
    };
    let schedule = run_algorithm(&graph, req.algo, req.seed, req.deterministic, req.gp_ordering)?;
    let report = verify_schedule(&graph, &schedule)?;
    Ok(ScheduleOutcome {
        graph,
        link_ids,
        schedule,
        report,
    })
}

pub fn write_file(path: &Path, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write(&mut f)?;
    f.flush()?;
    Ok(())
}
