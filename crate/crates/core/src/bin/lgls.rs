//! Command-line front end.
//!
//!   lgls schedule --topology nodes.csv --algo lgls --out schedule.csv
//!   lgls schedule --nodes 100 --seed 7 --algo gp --ordering longest-link-first
//!   lgls experiment --nodes 25,50,75,100 --trials 50 --algo lgls,gp --out results.csv
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lgls::harness::{
    run_experiment, schedule_one, write_file, write_results_csv, write_summary_csv,
    ExperimentConfig, ScheduleRequest, TopologySource, DEFAULT_SIDE_M,
};
use lgls::{build_line_graph, Algorithm, Error, GpOrdering, RadioParams};

#[derive(Parser)]
#[command(name = "lgls", version, about = "STDMA link scheduling under the SINR model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Schedule one topology and print the verified schedule as CSV.
    Schedule(ScheduleArgs),
    /// Run the randomized schedule-length comparison.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct RadioArgs {
    #[arg(long, default_value_t = 4.5)]
    alpha: f64,
    #[arg(long = "gamma-db", default_value_t = 7.0)]
    gamma_db: f64,
    #[arg(long = "power-mw", default_value_t = 1000.0)]
    power_mw: f64,
    #[arg(long = "noise-dbm", default_value_t = -96.0, allow_hyphen_values = true)]
    noise_dbm: f64,
}

impl RadioArgs {
    fn params(&self) -> lgls::Result<RadioParams> {
        RadioParams::from_db(self.power_mw, self.noise_dbm, self.gamma_db, self.alpha)
    }
}

#[derive(Args)]
struct ScheduleArgs {
    /// Topology CSV (`id,x,y`). Without it a random topology is generated.
    #[arg(long, conflicts_with = "nodes")]
    topology: Option<PathBuf>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SIDE_M)]
    side: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    radio: RadioArgs,
    #[arg(long, value_enum, default_value_t = Algorithm::Lgls)]
    algo: Algorithm,
    /// GP link order: input, random[:seed], longest-link-first, interference-degree.
    #[arg(long, default_value = "interference-degree")]
    ordering: String,
    /// Per-link demands (`link_id,demand`); links are replicated before scheduling.
    #[arg(long)]
    loads: Option<PathBuf>,
    /// Largest allowed max/min demand ratio.
    #[arg(long = "max-load-ratio", default_value_t = 5)]
    max_load_ratio: u32,
    /// Open every LGLS color with the lowest-id uncolored link.
    #[arg(long)]
    deterministic: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the scheduled links (`link_id,tx,rx,length_m`).
    #[arg(long = "links-out")]
    links_out: Option<PathBuf>,
    /// Also write the line-graph weights (`i,j,w,w_prime`).
    #[arg(long = "dump-line-graph")]
    dump_line_graph: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, value_delimiter = ',', default_value = "25,50,75,100,125,150,175,200,225,250")]
    nodes: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = DEFAULT_SIDE_M)]
    side: f64,
    /// Master seed; per-trial seeds are derived from it.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    radio: RadioArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "lgls,gp")]
    algo: Vec<Algorithm>,
    #[arg(long, default_value = "interference-degree")]
    ordering: String,
    #[arg(long)]
    deterministic: bool,
    /// Per-trial results CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Aggregate `n,algo,mean_len,std_len` CSV.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Fill the runtime_ms column. Output is then no longer byte-reproducible.
    #[arg(long)]
    timing: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Schedule(args) => schedule(args),
        Command::Experiment(args) => experiment(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::VerificationFailed { .. } => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn schedule(args: ScheduleArgs) -> lgls::Result<ExitCode> {
    let source = match (&args.topology, args.nodes) {
        (Some(path), _) => TopologySource::File(path.clone()),
        (None, Some(n)) => TopologySource::Random {
            n,
            side: args.side,
            seed: args.seed,
        },
        (None, None) => {
            return Err(Error::Config("either --topology or --nodes is required".into()))
        }
    };
    let mut req = ScheduleRequest::new(source, args.algo);
    req.params = args.radio.params()?;
    req.gp_ordering = args.ordering.parse::<GpOrdering>()?;
    req.seed = args.seed;
    req.deterministic = args.deterministic;
    req.loads_file = args.loads;
    req.max_load_ratio = args.max_load_ratio;

    let outcome = schedule_one(&req)?;
    if let Some(path) = &args.links_out {
        write_file(path, |w| outcome.graph.write_links_csv(w))?;
    }
    if let Some(path) = &args.dump_line_graph {
        let lg = build_line_graph(&outcome.graph)?;
        write_file(path, |w| lg.write_weights_csv(w))?;
    }
    if !outcome.report.feasible() {
        eprintln!("schedule failed SINR verification:\n{}", outcome.report);
        return Ok(ExitCode::from(1));
    }
    match &args.out {
        Some(path) => write_file(path, |w| outcome.write_csv(w))?,
        None => outcome.write_csv(std::io::stdout().lock())?,
    }
    eprintln!(
        "{}: {} links in {} slots",
        outcome.schedule.algorithm(),
        outcome.graph.link_count(),
        outcome.schedule.num_slots()
    );
    Ok(ExitCode::SUCCESS)
}

fn experiment(args: ExperimentArgs) -> lgls::Result<ExitCode> {
    let cfg = ExperimentConfig {
        node_counts: args.nodes,
        trials: args.trials,
        side: args.side,
        params: args.radio.params()?,
        algorithms: args.algo,
        master_seed: args.seed,
        gp_ordering: args.ordering.parse()?,
        deterministic: args.deterministic,
        workers: args.workers,
        timing: args.timing,
        failure_dir: args
            .out
            .as_ref()
            .and_then(|p| p.parent())
            .map(|p| p.to_path_buf()),
    };
    let result = run_experiment(&cfg)?;
    match &args.out {
        Some(path) => write_file(path, |w| write_results_csv(&result.rows, w))?,
        None => write_results_csv(&result.rows, std::io::stdout().lock())?,
    }
    if let Some(path) = &args.summary {
        write_file(path, |w| write_summary_csv(&result.summary, w))?;
    }
    let mut err = std::io::stderr().lock();
    for s in &result.summary {
        writeln!(
            err,
            "n={:<4} {:<8} mean={:>8.3} std={:>7.3} ({} trials)",
            s.n, s.algo, s.mean_len, s.std_len, s.trials
        )?;
    }
    Ok(ExitCode::SUCCESS)
}
