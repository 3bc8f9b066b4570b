//! Command-line interface: count, census, sample, check, estimate, stats
//! and experiment subcommands over the kripkelab library.
//!
//! Exit status: 0 success, 1 domain error (bad class, failed precondition),
//! 2 usage or parse error, 3 budget exceeded.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kripkelab::classes::{self, ClassId, ClassScope};
use kripkelab::count::{self, CountError};
use kripkelab::frame::Frame;
use kripkelab::lab::{self, EstimateRecord, LabError, StatisticName, SweepRow};
use kripkelab::morphism::{self, MorphismError};
use kripkelab::parser::parse;
use kripkelab::rng::RngStream;
use kripkelab::sample::{AllSampler, ConnectedSampler, SampleError};
use kripkelab::semantics::{self, SemanticsError, Validity};

#[derive(Parser)]
#[command(name = "kripkelab", version, about = "Random finite Kripke frames: exact counts, uniform samples, Monte Carlo experiments")]
struct Cli {
    /// Worker threads for estimate/stats/census (default: KRIPKELAB_THREADS
    /// or all cores). Results are independent of the thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ClassArgs {
    /// Frame class: kd5, kd45, k5b, s5, gl3, grz3
    #[arg(long)]
    class: String,

    /// Restrict to connected frames
    #[arg(long)]
    connected: bool,
}

impl ClassArgs {
    fn resolve(&self) -> Result<(ClassId, ClassScope), CliError> {
        let class: ClassId = self.class.parse().map_err(domain)?;
        let scope = if self.connected { ClassScope::Connected } else { ClassScope::All };
        Ok((class, scope))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the exact number of class members on [n]
    Count {
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long)]
        n: usize,
    },
    /// Closed-form counts against brute-force enumeration (CSV)
    Census {
        #[arg(long)]
        n: usize,
        /// Restrict the table to one class
        #[arg(long)]
        class: Option<String>,
    },
    /// Emit uniformly sampled frames in the frame text format
    Sample {
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long)]
        n: usize,
        /// Number of frames to draw
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write frame_NNNN.frame files here instead of stdout
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Model-check a formula on a frame, or search for a p-morphism
    Check {
        /// Frame file in the text format
        #[arg(long, required_unless_present = "pmorphism", conflicts_with = "pmorphism")]
        frame: Option<PathBuf>,
        #[arg(long, required_unless_present = "pmorphism", conflicts_with = "pmorphism")]
        formula: Option<String>,
        /// Two frame files: search for a p-morphism from the first onto
        /// the second
        #[arg(long, num_args = 2, value_names = ["SOURCE", "TARGET"])]
        pmorphism: Option<Vec<PathBuf>>,
        /// Valuation-bit budget for the validity check
        #[arg(long, default_value_t = semantics::DEFAULT_VALUATION_BUDGET_BITS)]
        budget_bits: usize,
    },
    /// Monte Carlo validity-probability estimate (CSV)
    Estimate {
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long)]
        formula: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Frame-statistic sweep over a list of sizes (CSV)
    Stats {
        #[command(flatten)]
        class: ClassArgs,
        /// max_component_size, cluster_core_size, tree_height,
        /// irreflexive_singleton_count, outdeg_spread_holds(r)
        #[arg(long)]
        stat: String,
        #[arg(long, value_delimiter = ',', required = true)]
        ns: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also report the frequency of values strictly above this
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Run a JSON experiment config and write CSVs plus a manifest
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
}

// ---------------------------------------------------------------------------
// Error-to-exit-status mapping
// ---------------------------------------------------------------------------

enum CliError {
    Domain(String),
    Parse(String),
    Budget(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Budget(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Domain(m) | CliError::Parse(m) | CliError::Budget(m) => m,
        }
    }
}

fn domain<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Domain(e.to_string())
}

fn parse_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Parse(e.to_string())
}

fn from_count_error(e: CountError) -> CliError {
    CliError::Domain(e.to_string())
}

fn from_semantics_error(e: SemanticsError) -> CliError {
    match e {
        SemanticsError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
        SemanticsError::UncoveredVariable(_) => CliError::Domain(e.to_string()),
    }
}

fn from_lab_error(e: LabError) -> CliError {
    match e {
        LabError::Semantics(inner) => from_semantics_error(inner),
        LabError::Sample(SampleError::RetryBudget { .. }) => CliError::Budget(e.to_string()),
        LabError::Formula(inner) => CliError::Parse(inner.to_string()),
        LabError::Config { .. } | LabError::Io { .. } => CliError::Parse(e.to_string()),
        other => CliError::Domain(other.to_string()),
    }
}

fn read_frame(path: &PathBuf) -> Result<Frame, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    Frame::from_text(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli
        .threads
        .or_else(|| std::env::var("KRIPKELAB_THREADS").ok().and_then(|v| v.parse().ok()));
    let result = match threads {
        Some(t) if t > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .expect("thread pool")
            .install(|| run(cli.command)),
        _ => run(cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Count { class, n } => {
            let (class, scope) = class.resolve()?;
            if n == 0 {
                return Err(CliError::Domain("n must be at least 1".into()));
            }
            let value = match scope {
                ClassScope::Connected => count::count_connected(class, n),
                ClassScope::All => count::count_all(class, n),
            };
            println!("{value}");
            Ok(())
        }
        Command::Census { n, class } => census(n, class),
        Command::Sample { class, n, count, seed, out_dir } => {
            let (class, scope) = class.resolve()?;
            if n == 0 {
                return Err(CliError::Domain("n must be at least 1".into()));
            }
            sample(class, scope, n, count, seed, out_dir)
        }
        Command::Check { frame, formula, pmorphism, budget_bits } => {
            if let Some(paths) = pmorphism {
                let source = read_frame(&paths[0])?;
                let target = read_frame(&paths[1])?;
                match morphism::find_p_morphism(&source, &target) {
                    Ok(Some(map)) => {
                        let rendered: Vec<String> =
                            map.iter().enumerate().map(|(a, t)| format!("{a}->{t}")).collect();
                        println!("{}", rendered.join(" "));
                        Ok(())
                    }
                    Ok(None) => {
                        println!("none");
                        Ok(())
                    }
                    Err(e @ MorphismError::BudgetExceeded { .. }) => {
                        Err(CliError::Budget(e.to_string()))
                    }
                }
            } else {
                let frame = read_frame(&frame.expect("clap enforces --frame"))?;
                let formula =
                    parse(&formula.expect("clap enforces --formula")).map_err(parse_err)?;
                match semantics::is_valid_with_budget(&frame, &formula, budget_bits)
                    .map_err(from_semantics_error)?
                {
                    Validity::Valid => println!("valid"),
                    Validity::Refuted { valuation, state } => {
                        println!("invalid at state {state} under {valuation}");
                    }
                }
                Ok(())
            }
        }
        Command::Estimate { class, formula, n, trials, seed } => {
            let (class, scope) = class.resolve()?;
            let formula = parse(&formula).map_err(parse_err)?;
            let record = lab::estimate_validity(class, scope, &formula, n, trials, seed)
                .map_err(from_lab_error)?;
            println!("{}", EstimateRecord::CSV_HEADER);
            println!("{}", record.csv_row());
            Ok(())
        }
        Command::Stats { class, stat, ns, trials, seed, threshold } => {
            let (class, scope) = class.resolve()?;
            let stat: StatisticName = stat.parse().map_err(from_lab_error)?;
            let rows = lab::stat_sweep(class, scope, stat, &ns, trials, seed, threshold)
                .map_err(from_lab_error)?;
            println!("{}", SweepRow::CSV_HEADER);
            for row in rows {
                println!("{}", row.csv_row());
            }
            Ok(())
        }
        Command::Experiment { config } => {
            let summary = lab::run_experiment(&config).map_err(from_lab_error)?;
            let mut failed = false;
            for job in &summary.jobs {
                println!("{} -> {}: {}", job.kind, job.out, job.status);
                failed |= job.status != "ok";
            }
            println!("manifest: {}", summary.manifest_path.display());
            if failed {
                Err(CliError::Domain("one or more jobs failed".into()))
            } else {
                Ok(())
            }
        }
    }
}

/// One pass over all relations on [n], counting every class/scope cell,
/// split into deterministic chunks for the worker pool.
fn census(n: usize, class_filter: Option<String>) -> Result<(), CliError> {
    use rayon::prelude::*;

    let classes: Vec<ClassId> = match class_filter {
        Some(name) => vec![name.parse().map_err(domain)?],
        None => classes::ALL_CLASSES.to_vec(),
    };
    let bits = count::frame_space_bits(n).map_err(from_count_error)?;
    let space = 1u64 << bits;
    let chunks = (rayon::current_num_threads() as u64 * 8).min(space);
    let chunk_size = space.div_ceil(chunks);
    let totals: Vec<[u64; 2]> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * chunk_size;
            let end = (start + chunk_size).min(space);
            let mut local = vec![[0u64; 2]; classes.len()];
            count::for_each_frame_in(n, start..end, |f| {
                let mut connected = None;
                for (i, &c) in classes.iter().enumerate() {
                    if classes::in_class(c, ClassScope::All, f) {
                        local[i][0] += 1;
                        let conn = *connected.get_or_insert_with(|| f.is_connected());
                        if conn {
                            local[i][1] += 1;
                        }
                    }
                }
            })
            .expect("n already validated");
            local
        })
        .reduce(
            || vec![[0u64; 2]; classes.len()],
            |mut acc, local| {
                for (a, l) in acc.iter_mut().zip(local) {
                    a[0] += l[0];
                    a[1] += l[1];
                }
                acc
            },
        );

    println!("class,scope,n,count,brute");
    for (i, &class) in classes.iter().enumerate() {
        let closed_all = count::count_all(class, n);
        let closed_connected = count::count_connected(class, n);
        println!("{class},all,{n},{closed_all},{}", totals[i][0]);
        println!("{class},connected,{n},{closed_connected},{}", totals[i][1]);
    }
    Ok(())
}

fn sample(
    class: ClassId,
    scope: ClassScope,
    n: usize,
    count: u64,
    seed: u64,
    out_dir: Option<PathBuf>,
) -> Result<(), CliError> {
    enum Either {
        Connected(ConnectedSampler),
        All(AllSampler),
    }
    let sampler = match scope {
        ClassScope::Connected => Either::Connected(ConnectedSampler::new(class, n)),
        ClassScope::All => Either::All(AllSampler::new(class, n)),
    };
    if let Some(dir) = &out_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Parse(format!("{}: {e}", dir.display())))?;
    }
    let root = RngStream::new(seed);
    for i in 0..count {
        let mut rng = root.substream(i);
        let frame = match &sampler {
            Either::Connected(s) => s.sample(&mut rng),
            Either::All(s) => s.sample(&mut rng),
        };
        let text = frame.to_text();
        match &out_dir {
            Some(dir) => {
                let path = dir.join(format!("frame_{i:04}.frame"));
                std::fs::write(&path, text)
                    .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
            }
            None => print!("{text}"),
        }
    }
    Ok(())
}
