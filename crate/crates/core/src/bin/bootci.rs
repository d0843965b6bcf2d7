use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bootci::evaluation::{Threshold, ThresholdSet};
use bootci::harness::{self, GridConfig, Metric, Side};
use bootci::{Error, Functional, MethodId, ReplicationContext, ResampleSettings, RngStream, Sample, TieRule};

#[derive(Parser)]
#[command(name = "bootci", version, about = "Bootstrap confidence intervals and coverage simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Endpoints of one-sided intervals for a data file.
    Ci {
        /// One value per line, or two comma-separated columns.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        functional: String,
        #[arg(long)]
        method: String,
        /// Comma-separated levels.
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<f64>,
        #[arg(long, default_value_t = 1000)]
        b: usize,
        /// Inner resamples of the double bootstrap (defaults to --b).
        #[arg(long)]
        b_inner: Option<usize>,
        /// Inner resamples of the studentized bootstrap.
        #[arg(long, default_value_t = 50)]
        b_inner_bt: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a simulation grid and write the results CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Score distances to the exact interval.
        #[arg(long)]
        exact: bool,
    },
    /// Summary table from a results CSV.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        table: TableKind,
        #[arg(long, value_enum, default_value = "one")]
        side: SideArg,
        #[arg(long, default_value = "liberal")]
        criterion: String,
    },
    /// Cells where one method outperforms others.
    Compare {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        a: String,
        #[arg(long, value_delimiter = ',', required = true)]
        b: Vec<String>,
        #[arg(long, value_enum, default_value = "one")]
        side: SideArg,
        #[arg(long, default_value = "liberal")]
        criterion: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TableKind {
    Kl,
    Threshold,
    Distance,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    One,
    Two,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::One => Side::One,
            SideArg::Two => Side::Two,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::Config(_) => 2,
        Error::Io { .. } | Error::Csv { .. } => 3,
        Error::Failure(_) => 4,
    }
}

fn read_sample(path: &Path) -> Result<Sample, Error> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
    let mut uni = Vec::new();
    let mut bi = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("{}:{}: `{s}` is not a number", path.display(), i + 1)))
        };
        match line.split_once(',') {
            Some((x, y)) => bi.push([parse(x)?, parse(y)?]),
            None => uni.push(parse(line)?),
        }
    }
    match (uni.is_empty(), bi.is_empty()) {
        (false, true) => Sample::univariate(uni),
        (true, false) => Sample::bivariate(bi),
        (true, true) => Err(Error::InvalidArgument(format!("{} holds no data", path.display()))),
        (false, false) => Err(Error::InvalidArgument(format!("{} mixes one- and two-column rows", path.display()))),
    }
}

#[allow(clippy::too_many_arguments)]
fn ci(
    data: &Path,
    functional: &str,
    method: &str,
    alphas: &[f64],
    b: usize,
    b_inner: Option<usize>,
    b_inner_bt: usize,
    seed: u64,
) -> Result<(), Error> {
    let sample = read_sample(data)?;
    let f: Functional = functional.parse()?;
    let m: MethodId = method.parse()?;
    let settings = ResampleSettings { b, b_inner: b_inner.unwrap_or(b), b_inner_bt, tie_rule: TieRule::default() };
    settings.validate()?;
    f.evaluate(&sample)?;
    let ctx = ReplicationContext::new(&sample, f, settings, RngStream::new(seed));
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut failure = None;
    for &a in alphas {
        let written = match ctx.endpoint(m, a) {
            Ok(e) => writeln!(out, "{a}\t{e}"),
            Err(Error::Failure(fail)) => {
                failure = Some(fail);
                writeln!(out, "{a}\tfailed: {fail}")
            }
            Err(e) => return Err(e),
        };
        written.map_err(|source| Error::Io { path: "<stdout>".into(), source })?;
    }
    match failure {
        Some(f) => Err(f.into()),
        None => Ok(()),
    }
}

fn simulate(config: &Path, threads: Option<usize>, out: &Path, seed: Option<u64>, exact: bool) -> Result<(), Error> {
    let mut cfg = GridConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.exact |= exact;
    let plan = cfg.plan()?;
    let total = plan.cells.len();
    let run = || harness::run_plan(&plan, |i, cell| eprintln!("[{}/{}] {}", i + 1, total, cell.label()));
    let rows = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    harness::emit_results(&rows, out)?;
    eprintln!("wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}

fn print(text: &str) -> Result<(), Error> {
    io::stdout().write_all(text.as_bytes()).map_err(|source| Error::Io { path: "<stdout>".into(), source })
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Ci { data, functional, method, alpha, b, b_inner, b_inner_bt, seed } => {
            ci(&data, &functional, &method, &alpha, b, b_inner, b_inner_bt, seed)
        }
        Command::Simulate { config, threads, out, seed, exact } => simulate(&config, threads, &out, seed, exact),
        Command::Report { input, table, side, criterion } => {
            let rows = harness::load_results(&input)?;
            let metric = match table {
                TableKind::Kl => Metric::Kl,
                TableKind::Distance => Metric::Distance,
                TableKind::Threshold => Metric::Threshold(criterion.parse::<Threshold>()?),
            };
            print(&harness::summary_table(&rows, metric, side.into())?)
        }
        Command::Compare { input, a, b, side, criterion } => {
            let rows = harness::load_results(&input)?;
            let reference: MethodId = a.parse()?;
            let others = b.iter().map(|m| m.parse()).collect::<Result<Vec<MethodId>, _>>()?;
            let t: Threshold = criterion.parse()?;
            print(&harness::outperformance_table(&rows, reference, &others, side.into(), &ThresholdSet::default(), t)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
