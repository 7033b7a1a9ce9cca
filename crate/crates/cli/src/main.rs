//! Experiment runner: loads or generates a ridge regression problem, runs
//! one of the engines and writes the convergence trace as CSV.

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use coord_forge::data::{generate_synthetic, parse_libsvm, SyntheticSpec};
use coord_forge::distributed::tcp::{TcpMaster, TcpWorker};
use coord_forge::distributed::{
    run_distributed, run_master, run_worker, AggregationMode, DistributedConfig, ProtocolError, TransportKind,
};
use coord_forge::parallel::{solve_async, AsyncConfig, AsyncVariant, Engine};
use coord_forge::solver::{solve, SolverConfig};
use coord_forge::{EpochMetrics, Error, Form, Real, RidgeProblem};

const COLUMNS: [&str; 9] =
    ["epoch", "elapsed_s", "primal_obj", "dual_obj", "duality_gap", "gamma", "t_compute_s", "t_transfer_s", "t_comm_s"];

#[derive(Debug, Parser)]
#[command(name = "coord-forge", version, about = "Ridge regression by stochastic coordinate descent")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one engine and write its convergence trace.
    Run {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        solve: SolveArgs,
        /// CSV output path; stdout when absent.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Run several configurations on one dataset and write a long-format CSV
    /// keyed by run label.
    Compare {
        #[command(flatten)]
        data: DataArgs,
        /// `LABEL=FLAGS`, where FLAGS are solver flags as accepted by `run`.
        #[arg(long = "run", value_name = "LABEL=FLAGS", required = true)]
        runs: Vec<String>,
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Serve as one worker of a TCP distributed run.
    Worker {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        solve: SolveArgs,
        /// Master address.
        #[arg(long)]
        connect: String,
        /// Worker index in `0..k`.
        #[arg(long)]
        id: u32,
        /// Seconds to keep retrying while the master is not yet listening.
        #[arg(long, default_value_t = 30)]
        connect_timeout: u64,
    },
}

#[derive(Debug, Clone, Args)]
struct DataArgs {
    /// LIBSVM file.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    data: Option<PathBuf>,
    /// Synthetic problem of the given shape, `NxM` (examples x features).
    #[arg(long, value_name = "NxM", value_parser = parse_shape)]
    synthetic: Option<(usize, usize)>,
    #[arg(long, default_value_t = 0.1)]
    density: f64,
    #[arg(long, default_value_t = 0.1)]
    noise_std: f64,
    /// Seed of the synthetic generator; defaults to the run seed.
    #[arg(long)]
    data_seed: Option<u64>,
    /// Regularization strength.
    #[arg(long, default_value_t = 1e-3)]
    lambda: f64,
}

#[derive(Debug, Clone, Args)]
struct SolveArgs {
    #[arg(long, default_value = "primal")]
    form: Form,
    #[arg(long, value_enum, default_value_t = EngineKind::Seq)]
    engine: EngineKind,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, env = "COORD_FORGE_SEED", default_value_t = 0)]
    seed: u64,
    /// Distributed workers.
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value = "average")]
    aggregation: AggregationMode,
    #[arg(long, value_enum, default_value_t = Transport::Inproc)]
    transport: Transport,
    /// Address the distributed master listens on.
    #[arg(long)]
    listen: Option<String>,
    /// Solver each distributed worker runs locally.
    #[arg(long, value_enum, default_value_t = LocalEngine::Seq)]
    local_engine: LocalEngine,
    /// Threads of the asynchronous engines.
    #[arg(long, default_value_t = 4)]
    workers: usize,
    /// Lanes per task of the tpa engine; a power of two.
    #[arg(long, default_value_t = 1)]
    lanes: usize,
    /// Epochs between exact shared-vector recomputations; 0 is off.
    #[arg(long)]
    recompute_every: Option<usize>,
    /// Epochs between duality-gap evaluations.
    #[arg(long, default_value_t = 1)]
    gap_check_every: usize,
    #[arg(long, value_enum, default_value_t = Precision::P64)]
    precision: Precision,
}

#[derive(Debug, Parser)]
#[command(name = "run", no_binary_name = true)]
struct RunFlags {
    #[command(flatten)]
    solve: SolveArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineKind {
    Seq,
    Atomic,
    Wild,
    Tpa,
    Distributed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LocalEngine {
    Seq,
    Atomic,
    Wild,
    Tpa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Transport {
    Inproc,
    Tcp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Precision {
    #[value(name = "32")]
    P32,
    #[value(name = "64")]
    P64,
}

fn parse_shape(s: &str) -> Result<(usize, usize), String> {
    let (n, m) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NxM, got {s:?}"))?;
    let n = n.trim().parse().map_err(|e| format!("bad row count: {e}"))?;
    let m = m.trim().parse().map_err(|e| format!("bad column count: {e}"))?;
    Ok((n, m))
}

/// A failure and the exit status it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure { code: 1, msg: msg.into() }
    }

    fn data(msg: impl Into<String>) -> Self {
        Failure { code: 2, msg: msg.into() }
    }

    fn transport(msg: impl Into<String>) -> Self {
        Failure { code: 3, msg: msg.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Protocol(_) | Error::Io(_) => Failure::transport(e.to_string()),
            _ => Failure::usage(e.to_string()),
        }
    }
}

impl From<ProtocolError> for Failure {
    fn from(e: ProtocolError) -> Self {
        Failure::transport(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => return clap_exit(e),
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            if f.code == 1 {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            ExitCode::from(f.code)
        }
    }
}

fn clap_exit(e: clap::Error) -> ExitCode {
    let _ = e.print();
    match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
        _ => ExitCode::from(1),
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { data, solve, metrics } => {
            validate(&solve)?;
            let trace = match solve.precision {
                Precision::P32 => execute::<f32>(&data, &solve)?,
                Precision::P64 => execute::<f64>(&data, &solve)?,
            };
            let mut out = open_output(metrics.as_ref())?;
            write_csv(&mut out, [(None, trace.as_slice())])
                .map_err(|e| Failure::data(format!("writing metrics: {e}")))?;
            summarize(None, &trace);
            Ok(())
        }
        Command::Compare { data, runs, metrics } => {
            let mut labelled = Vec::with_capacity(runs.len());
            for run in &runs {
                let (label, flags) = run
                    .split_once('=')
                    .ok_or_else(|| Failure::usage(format!("--run expects LABEL=FLAGS, got {run:?}")))?;
                let parsed = RunFlags::try_parse_from(flags.split_whitespace())
                    .map_err(|e| Failure::usage(format!("run {label:?}: {}", e.render())))?;
                validate(&parsed.solve)?;
                labelled.push((label.to_string(), parsed.solve));
            }
            let mut traces = Vec::with_capacity(labelled.len());
            for (label, solve) in &labelled {
                let trace = match solve.precision {
                    Precision::P32 => execute::<f32>(&data, solve)?,
                    Precision::P64 => execute::<f64>(&data, solve)?,
                };
                summarize(Some(label), &trace);
                traces.push(trace);
            }
            let mut out = open_output(metrics.as_ref())?;
            let rows = labelled.iter().zip(&traces).map(|((l, _), t)| (Some(l.as_str()), t.as_slice()));
            write_csv(&mut out, rows).map_err(|e| Failure::data(format!("writing metrics: {e}")))
        }
        Command::Worker { data, solve, connect, id, connect_timeout } => {
            validate(&solve)?;
            let timeout = Duration::from_secs(connect_timeout);
            match solve.precision {
                Precision::P32 => serve::<f32>(&data, &solve, &connect, id, timeout),
                Precision::P64 => serve::<f64>(&data, &solve, &connect, id, timeout),
            }
        }
    }
}

fn validate(s: &SolveArgs) -> Result<(), Failure> {
    if s.engine == EngineKind::Distributed && s.transport == Transport::Tcp && s.listen.is_none() {
        return Err(Failure::usage("--transport tcp requires --listen ADDR"));
    }
    if s.k == 0 {
        return Err(Failure::usage("--k must be at least 1"));
    }
    Ok(())
}

fn load<T: Real>(data: &DataArgs, seed: u64) -> Result<RidgeProblem<T>, Failure> {
    let dataset = match (&data.data, data.synthetic) {
        (Some(path), _) => {
            let file = File::open(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
            parse_libsvm::<T, _>(BufReader::new(file), None)
                .map_err(|e| Failure::data(format!("{}: {e}", path.display())))?
        }
        (None, Some((n_rows, n_cols))) => {
            let spec = SyntheticSpec {
                n_rows,
                n_cols,
                density: data.density,
                noise_std: data.noise_std,
                seed: data.data_seed.unwrap_or(seed),
            };
            generate_synthetic::<T>(&spec)?.0
        }
        (None, None) => return Err(Failure::usage("one of --data or --synthetic is required")),
    };
    Ok(RidgeProblem::new(dataset, data.lambda)?)
}

fn local_engine(s: &SolveArgs) -> Engine {
    let variant = match s.local_engine {
        LocalEngine::Seq => return Engine::Sequential,
        LocalEngine::Atomic => AsyncVariant::Atomic,
        LocalEngine::Wild => AsyncVariant::Wild,
        LocalEngine::Tpa => AsyncVariant::Tpa,
    };
    Engine::Async { variant, n_workers: s.workers, n_lanes: s.lanes }
}

fn distributed_config(s: &SolveArgs) -> DistributedConfig {
    let mut config = DistributedConfig::new(s.form, s.k, s.aggregation, s.epochs, s.seed);
    config.engine = local_engine(s);
    config.gap_check_every = s.gap_check_every;
    config
}

fn execute<T: Real>(data: &DataArgs, s: &SolveArgs) -> Result<Vec<EpochMetrics>, Failure> {
    let p = load::<T>(data, s.seed)?;
    let variant = match s.engine {
        EngineKind::Seq => {
            let mut config = SolverConfig::new(s.form, s.epochs, s.seed);
            config.gap_check_every = s.gap_check_every;
            config.shared_recompute_every = s.recompute_every.unwrap_or(0);
            return Ok(solve(&p, &config)?.1);
        }
        EngineKind::Distributed => return distributed(&p, s),
        EngineKind::Atomic => AsyncVariant::Atomic,
        EngineKind::Wild => AsyncVariant::Wild,
        EngineKind::Tpa => AsyncVariant::Tpa,
    };
    let mut config = AsyncConfig::new(variant, s.form, s.workers, s.epochs, s.seed);
    config.n_lanes = s.lanes;
    config.gap_check_every = s.gap_check_every;
    if let Some(every) = s.recompute_every {
        config.shared_recompute_every = every;
    }
    Ok(solve_async(&p, &config)?.1)
}

fn distributed<T: Real>(p: &RidgeProblem<T>, s: &SolveArgs) -> Result<Vec<EpochMetrics>, Failure> {
    let config = distributed_config(s);
    config.validate()?;
    match (s.transport, &s.listen) {
        (Transport::Inproc, _) => Ok(run_distributed(p, &config, TransportKind::InProcess)?.1),
        (Transport::Tcp, Some(addr)) => {
            let listener = TcpListener::bind(addr).map_err(|e| Failure::transport(format!("bind {addr}: {e}")))?;
            let local = listener.local_addr().map_err(|e| Failure::transport(e.to_string()))?;
            eprintln!("waiting for {} workers on {local}", config.k);
            let mut master = TcpMaster::accept(&listener, config.k)?;
            Ok(run_master(p, &mut master, &config)?.records)
        }
        (Transport::Tcp, None) => Err(Failure::usage("--transport tcp requires --listen ADDR")),
    }
}

fn serve<T: Real>(data: &DataArgs, s: &SolveArgs, addr: &str, id: u32, timeout: Duration) -> Result<(), Failure> {
    let p = load::<T>(data, s.seed)?;
    let config = distributed_config(s);
    config.validate()?;
    let deadline = Instant::now() + timeout;
    let mut link = loop {
        match TcpWorker::connect(addr, id) {
            Ok(link) => break link,
            Err(ProtocolError::Io(e)) if Instant::now() < deadline => {
                log::debug!("connect to {addr} failed ({e}); retrying");
                std::thread::sleep(Duration::from_millis(100));
            }
            Err(e) => return Err(e.into()),
        }
    };
    run_worker(&p, &mut link, id, &config)?;
    Ok(())
}

fn open_output(path: Option<&PathBuf>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(path) => {
            let file = File::create(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
            Ok(Box::new(io::BufWriter::new(file)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn write_csv<'a>(
    out: &mut dyn Write,
    traces: impl IntoIterator<Item = (Option<&'a str>, &'a [EpochMetrics])>,
) -> csv::Result<()> {
    let mut traces = traces.into_iter().peekable();
    let labelled = matches!(traces.peek(), Some((Some(_), _)));
    let mut w = csv::Writer::from_writer(out);
    if labelled {
        w.write_field("label")?;
    }
    w.write_record(COLUMNS)?;
    for (label, trace) in traces {
        for r in trace {
            if let Some(label) = label {
                w.write_field(label)?;
            }
            w.write_record([
                r.epoch.to_string(),
                num(r.elapsed_s),
                num(r.primal_obj),
                num(r.dual_obj),
                num(r.duality_gap),
                r.gamma.map(num).unwrap_or_default(),
                num(r.t_compute_s),
                num(r.t_transfer_s),
                num(r.t_comm_s),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Shortest representation that round-trips.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn summarize(label: Option<&str>, trace: &[EpochMetrics]) {
    let Some(last) = trace.last() else { return };
    let sum = |f: fn(&EpochMetrics) -> f64| trace.iter().map(f).sum::<f64>();
    let prefix = label.map(|l| format!("[{l}] ")).unwrap_or_default();
    eprintln!(
        "{prefix}final gap {:.6e} at epoch {}; primal {:.10e}, dual {:.10e}; elapsed {:.3}s \
         (compute {:.3}s, transfer {:.3}s, comm {:.3}s)",
        last.duality_gap,
        last.epoch,
        last.primal_obj,
        last.dual_obj,
        last.elapsed_s,
        sum(|r| r.t_compute_s),
        sum(|r| r.t_transfer_s),
        sum(|r| r.t_comm_s),
    );
}
