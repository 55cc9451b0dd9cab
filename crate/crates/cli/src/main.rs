//! `mnlmix`: simulate 2-MNL models, check identifiability, learn weights and
//! run the reproducible experiments.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success (unique model, clean estimate, reproduction holds) |
//! | 1 | invalid input, I/O failure or internal error |
//! | 2 | non-unique: more than one solution class, or sweep found counterexamples |
//! | 3 | collapse: `a = b` |
//! | 4 | estimate produced with a warning status |
//! | 5 | no estimate |
//! | 6 | a reproduction experiment did not match its reference values |

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mnlmix::choice::io::{ModelFile, SamplesFile};
use mnlmix::choice::{oracle_table, random_instance, EmpiricalTable, DEFAULT_WEIGHT_FLOOR};
use mnlmix::experiments::{self, counterexample_model, three_roots_file};
use mnlmix::identify::{check_identifiability, solve_pair_system, SolveOptions, DEFAULT_TOL};
use mnlmix::learn::{learn_from_oracle, learn_from_samples, LearnConfig, ModelOracle};
use mnlmix::reduction::PairSystemInput;
use mnlmix::Slate;

#[derive(Parser)]
#[command(name = "mnlmix", version, about = "Identifiability and learning for mixtures of two multinomial logits")]
struct Cli {
    /// Worker threads for trials and restarts (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a model file, optionally with simulated choices.
    Simulate(SimulateArgs),
    /// Check whether a model is the only solution of its choice equations.
    Identify(IdentifyArgs),
    /// Learn the weights of a model from its oracle or from samples.
    Learn(LearnArgs),
    /// Run a numerical experiment.
    Experiment {
        #[command(subcommand)]
        kind: Experiment,
    },
}

#[derive(Args, Clone, Copy)]
struct MixingArgs {
    /// Mixing parameter: component b is picked with odds lambda : 1.
    #[arg(long, conflicts_with = "mu")]
    lambda: Option<f64>,
    /// Probability of component a, 1/(1 + lambda).
    #[arg(long)]
    mu: Option<f64>,
}

impl MixingArgs {
    fn resolve(&self) -> Result<f64> {
        match (self.lambda, self.mu) {
            (Some(l), _) if l > 0.0 => Ok(l),
            (Some(l), _) => bail!("lambda must be positive, got {l}"),
            (None, Some(mu)) if mu > 0.0 && mu < 1.0 => Ok((1.0 - mu) / mu),
            (None, Some(mu)) => bail!("mu must lie in (0, 1), got {mu}"),
            (None, None) => Ok(2.0),
        }
    }
}

#[derive(Args, Clone, Copy)]
struct SeedArg {
    /// Master seed.
    #[arg(long, env = "MNLMIX_DEFAULT_SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum NamedModel {
    /// Two pair-level solutions: lambda = 2, a = (2/5, 2/5, 1/10, 1/10),
    /// b = (3/10, 3/10, 1/5, 1/5).
    Counterexample,
    /// lambda = 5, (a'1, a'2, b'1, b'2) = (0.0389099, 0.000870832, 0.0565171,
    /// 0.943483): Q_12 has three real roots. Formal: b'3 is slightly negative.
    ThreeRoots,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[command(flatten)]
    mixing: MixingArgs,
    #[command(flatten)]
    seed: SeedArg,
    /// Entrywise floor of the generated weights.
    #[arg(long, default_value_t = DEFAULT_WEIGHT_FLOOR)]
    floor: f64,
    /// Emit a built-in instance (exact rationals) instead of a random one.
    #[arg(long, value_enum)]
    model: Option<NamedModel>,
    /// Choices to simulate per slate.
    #[arg(long, requires = "slate")]
    samples: Option<u64>,
    /// Slate to sample, as 1-based items `1,2,3`; repeatable.
    #[arg(long, requires = "samples")]
    slate: Vec<String>,
    /// Where to write the samples file (default: stdout after the model).
    #[arg(long, requires = "samples")]
    samples_out: Option<PathBuf>,
    /// Model file path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IdentifyArgs {
    /// Model file.
    model: PathBuf,
    /// Residual threshold for accepting a solution.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Also solve the (1, 2) pair level in exact rational arithmetic.
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LearnMode {
    Oracle,
    Samples,
}

#[derive(Args)]
struct LearnArgs {
    /// Model file (the ground truth to query or sample from).
    model: PathBuf,
    #[arg(long, value_enum, default_value_t = LearnMode::Oracle)]
    mode: LearnMode,
    /// Size of the solved sub-universe.
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Target relative error.
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    /// Samples per queried slate (default: ceil(8 n^3 / eps^2)).
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Experiment {
    /// Maximize the Q_12 discriminant over the open triangles.
    DiscriminantMax {
        #[command(flatten)]
        mixing: MixingArgs,
        #[arg(long, default_value_t = 500)]
        restarts: usize,
        /// Also start from the three-real-roots point.
        #[arg(long)]
        include_point: bool,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sign of the maximized discriminant along a lambda grid.
    LambdaThreshold {
        /// Ascending lambda values.
        #[arg(long, value_delimiter = ',', default_value = "2,5")]
        grid: Vec<f64>,
        #[arg(long, default_value_t = 500)]
        restarts: usize,
        /// Bisection steps inside the first sign change.
        #[arg(long, default_value_t = 0)]
        refine: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Deflated cubic of the three-real-roots instance (double and exact).
    ThreeRoots {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Both pair-level solutions of the counterexample (double and exact).
    Counterexample {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Identifiability checks over seeded random instances.
    IdentifiabilitySweep {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[command(flatten)]
        mixing: MixingArgs,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_WEIGHT_FLOOR)]
        floor: f64,
        #[command(flatten)]
        seed: SeedArg,
        /// Directory for model files of non-unique instances.
        #[arg(long)]
        dump_dir: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smallest per-slate sample size reaching 90% success, per eps.
    SampleComplexity {
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[command(flatten)]
        mixing: MixingArgs,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.025")]
        eps: Vec<f64>,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        /// Bisection steps in log N after the doubling scan.
        #[arg(long, default_value_t = 4)]
        refine: usize,
        #[command(flatten)]
        seed: SeedArg,
        /// CSV curve path (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON report path, including the fitted slope.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display())),
        None => writeln!(std::io::stdout().lock(), "{text}").context("writing stdout"),
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    emit(out, &serde_json::to_string_pretty(value)?)
}

fn read_model(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn parse_slate(spec: &str, n: usize) -> Result<Slate> {
    let items = spec
        .split(',')
        .map(|t| {
            let i: usize = t.trim().parse().with_context(|| format!("bad item {t:?} in slate {spec:?}"))?;
            if i == 0 || i > n {
                bail!("item {i} outside 1..={n}");
            }
            Ok(i - 1)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Slate::new(items)?)
}

fn simulate(args: &SimulateArgs) -> Result<i32> {
    let file = match args.model {
        Some(NamedModel::Counterexample) => ModelFile::from_model(&counterexample_model()),
        Some(NamedModel::ThreeRoots) => three_roots_file(),
        None => ModelFile::from_model(&random_instance(args.n, args.mixing.resolve()?, args.seed.seed, args.floor)?),
    };
    emit_json(args.out.as_deref(), &file)?;
    if let Some(samples) = args.samples {
        let model = file.to_model().context("sampling needs a valid model")?;
        let mut table = EmpiricalTable::new(model.n(), *model.lambda(), args.seed.seed);
        for spec in &args.slate {
            table.sample_slate(&model, &parse_slate(spec, model.n())?, samples)?;
        }
        emit_json(args.samples_out.as_deref(), &SamplesFile::from_table(&table))?;
    }
    Ok(0)
}

fn identify(args: &IdentifyArgs) -> Result<i32> {
    let file = read_model(&args.model)?;
    let model = file.to_model()?;
    let opts = SolveOptions { tol: args.tol, ..SolveOptions::default() };
    let report = check_identifiability(&model, &opts)?;
    let mut value = serde_json::to_value(&report)?;
    if args.exact {
        let exact = file.to_exact_model()?;
        let n = exact.n();
        let slates = [Slate::full(n), Slate::without(n, 0), Slate::without(n, 1), Slate::pair(0, 1)?];
        let table = oracle_table(&exact, &slates)?;
        let sols: Vec<_> = solve_pair_system(&PairSystemInput::from_oracle(&table, 0, 1, true)?, (0, 1), &opts)?
            .into_iter()
            .filter(|c| c.admissible && c.residual == 0.0)
            .collect();
        value["exact_pair_solutions"] = serde_json::to_value(&sols)?;
    }
    emit_json(args.out.as_deref(), &value)?;
    eprintln!(
        "unique: {}, pair-level unique: {}, codes: {}",
        report.unique,
        report.pair_unique,
        report.codes.join(",")
    );
    Ok(report.exit_code())
}

fn learn(args: &LearnArgs) -> Result<i32> {
    let model = read_model(&args.model)?.to_model()?;
    let cfg = LearnConfig {
        k: args.k,
        eps: args.eps,
        samples: args.samples,
        seed: args.seed.seed,
        tol: args.tol,
        ..LearnConfig::default()
    };
    let report = match args.mode {
        LearnMode::Oracle => learn_from_oracle(&mut ModelOracle::new(model.clone()), &cfg, Some(&model))?,
        LearnMode::Samples => learn_from_samples(&model, &cfg)?,
    };
    emit_json(args.out.as_deref(), &report)?;
    let err = report.max_rel_error.map_or("n/a".to_string(), |e| format!("{e:.3e}"));
    eprintln!(
        "queries: {} (block {}, extension {}), samples: {}, max_rel_error: {err}, status: {}",
        report.queries,
        report.query_tally.block,
        report.query_tally.extension,
        report.samples,
        report.status.join(",")
    );
    Ok(report.exit_code())
}

fn three_roots_start() -> [f64; 4] {
    experiments::THREE_ROOTS_POINT.map(|s| s.parse().expect("literal"))
}

fn experiment(kind: &Experiment) -> Result<i32> {
    match kind {
        Experiment::DiscriminantMax { mixing, restarts, include_point, seed, out } => {
            let cfg = experiments::DiscriminantConfig {
                lambda: mixing.resolve()?,
                restarts: *restarts,
                seed: seed.seed,
                start_points: if *include_point { vec![three_roots_start()] } else { Vec::new() },
            };
            let r = experiments::discriminant_max(&cfg)?;
            emit_json(out.as_deref(), &r)?;
            eprintln!("best discriminant {:.6e} at {:?}", r.best_value, r.argmax);
            Ok(0)
        }
        Experiment::LambdaThreshold { grid, restarts, refine, seed, out } => {
            let cfg = experiments::ThresholdConfig { grid: grid.clone(), restarts: *restarts, seed: seed.seed, refine: *refine };
            let r = experiments::lambda_threshold(&cfg)?;
            emit_json(out.as_deref(), &r)?;
            let signs: String = r.grid.iter().map(|p| if p.positive { '+' } else { '-' }).collect();
            eprintln!("signs {signs}, interval {:?}", r.interval);
            Ok(0)
        }
        Experiment::ThreeRoots { out } => {
            let r = experiments::three_roots()?;
            emit_json(out.as_deref(), &r)?;
            eprintln!("roots {:?}, matches: {}", r.roots, r.matches);
            Ok(if r.matches && r.consistent { 0 } else { 6 })
        }
        Experiment::Counterexample { out } => {
            let r = experiments::counterexample()?;
            emit_json(out.as_deref(), &r)?;
            eprintln!("exact: {}, double: {}, pair gate {:.3e}", r.exact_ok, r.double_ok, r.pair_gate);
            Ok(if r.exact_ok && r.double_ok { 0 } else { 6 })
        }
        Experiment::IdentifiabilitySweep { n, mixing, trials, floor, seed, dump_dir, out } => {
            let cfg = experiments::SweepConfig {
                n: *n,
                lambda: mixing.resolve()?,
                trials: *trials,
                seed: seed.seed,
                floor: *floor,
            };
            let r = experiments::identifiability_sweep(&cfg)?;
            if let Some(dir) = dump_dir {
                std::fs::create_dir_all(dir)?;
                for hit in &r.counterexamples {
                    let path = dir.join(format!("counterexample-{}.json", hit.trial));
                    emit_json(Some(&path), &hit.model)?;
                }
            }
            emit_json(out.as_deref(), &r)?;
            eprintln!(
                "unique {}, non-unique {}, pair-level non-unique {}, collapsed {}, errors {}",
                r.unique, r.full_non_unique, r.pair_non_unique, r.collapsed, r.errors
            );
            Ok(if r.full_non_unique > 0 { 2 } else { 0 })
        }
        Experiment::SampleComplexity { n, mixing, eps, trials, refine, seed, out, report } => {
            let cfg = experiments::SampleComplexityConfig {
                n: *n,
                lambda: mixing.resolve()?,
                eps: eps.clone(),
                trials: *trials,
                seed: seed.seed,
                refine: *refine,
                ..experiments::SampleComplexityConfig::default()
            };
            let r = experiments::sample_complexity(&cfg)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in &r.rows {
                w.serialize(row)?;
            }
            let text = String::from_utf8(w.into_inner()?)?;
            emit(out.as_deref(), text.trim_end())?;
            if let Some(path) = report {
                emit_json(Some(path), &r)?;
            }
            eprintln!("fitted slope {:?}", r.slope);
            Ok(0)
        }
    }
}

fn run(cli: &Cli) -> Result<i32> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Identify(a) => identify(a),
        Command::Learn(a) => learn(a),
        Command::Experiment { kind } => experiment(kind),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
