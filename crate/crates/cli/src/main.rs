//! `fairrank`: generate synthetic datasets, re-rank top-k lists, evaluate
//! solutions and run experiment sweeps.
//!
//! Exit codes: 0 on success, 1 on runtime or data errors, 2 on usage errors.

mod config;

use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use fairrank_core::datagen::{self, Family, GenParams, Preset};
use fairrank_core::io::{load_dataset, load_fair_distribution, SolutionFile};
use fairrank_core::objectives::{aggregate_norm, ObjectiveVectors};
use fairrank_core::report::{self, FamilySpec, RunRecord, SweepConfig};
use fairrank_core::search::MoveRecord;
use fairrank_core::{
    evaluate, Dataset, FairDistribution, GroupPartition, Instance, Method, NormKind, ObjectiveConfig, SearchConfig,
    Solution,
};

const SEED_ENV: &str = "FAIREO_SEED";

#[derive(Debug, Parser)]
#[command(name = "fairrank", version, about = "Group-fair top-k course re-ranking", args_override_self = true)]
struct Cli {
    /// JSON file supplying default values for any flag (command line wins).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// More log output (repeatable).
    #[arg(long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset (scores.csv, groups.csv, manifest.json).
    Generate(GenerateArgs),
    /// Re-rank the HSC solution of a dataset.
    Optimize(OptimizeArgs),
    /// Score an existing solution against its dataset.
    Evaluate(EvaluateArgs),
    /// Run a (family, method, alpha, seed) grid and write records and aggregates.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Benchmark family: uni, gauss-1-01 or gauss-1-03.
    #[arg(long, conflicts_with_all = ["preset", "mu_m", "d_m"])]
    family: Option<Family>,
    #[arg(long, default_value_t = 2)]
    groups: usize,
    /// Overridden by the FAIREO_SEED environment variable when set.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 600)]
    n: usize,
    #[arg(long, default_value_t = 60)]
    m: usize,
    #[arg(long, default_value_t = 4)]
    buckets: usize,
    #[arg(long, value_parser = parse_preset)]
    preset: Option<Preset>,
    #[arg(long)]
    mu_m: Option<f64>,
    #[arg(long)]
    d_m: Option<f64>,
    #[arg(long, default_value_t = 0.3)]
    d_y: f64,
    /// Comma-separated group shares summing to 1.
    #[arg(long, value_delimiter = ',')]
    group_proportions: Option<Vec<f64>>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[arg(long, default_value = "tabu")]
    method: Method,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value = "linf")]
    norm: NormKind,
    /// First weight of the GHC-Inc schedule.
    #[arg(long, default_value_t = 0.1)]
    alpha0: f64,
    #[arg(long, default_value_t = 0.1)]
    alpha_step: f64,
    #[arg(long, default_value_t = 50)]
    tabu_size: usize,
    /// Escape budget of GHC-Tabu.
    #[arg(long, default_value_t = 150)]
    neg_moves: usize,
    /// Minimum decrease of V for a move to count as improving.
    #[arg(long, default_value_t = 1e-12)]
    epsilon: f64,
}

impl SearchArgs {
    fn config(&self) -> SearchConfig {
        SearchConfig {
            method: self.method,
            alpha: self.alpha,
            norm: self.norm,
            k: self.k,
            alpha0: self.alpha0,
            alpha_step: self.alpha_step,
            tabu_capacity: self.tabu_size,
            max_negative_moves: self.neg_moves,
            improvement_epsilon: self.epsilon,
            record_steps: false,
        }
    }
}

#[derive(Debug, Args)]
struct DataArgs {
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    groups: PathBuf,
    /// Target distribution CSV; defaults to the population shares.
    #[arg(long)]
    fair_dist: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Also write trace.csv with every applied move.
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    solution: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value = "linf")]
    norm: NormKind,
    /// Directory for objectives.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "uni,gauss-1-01,gauss-1-03")]
    families: Vec<Family>,
    #[arg(long = "groups", value_delimiter = ',', default_value = "2,4")]
    group_counts: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "none,gc,inc,tabu")]
    methods: Vec<Method>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
    alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    seeds: Vec<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Override the family's number of students.
    #[arg(long)]
    n: Option<usize>,
    /// Override the family's number of courses.
    #[arg(long)]
    m: Option<usize>,
    #[command(flatten)]
    search: SearchArgs,
    /// Leave wall_ms empty so repeated runs are byte-identical.
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    out: PathBuf,
}

/// Usage errors exit with 2, everything else with 1.
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

type CmdResult = Result<(), Failure>;

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    match s.to_ascii_lowercase().as_str() {
        "uni" => Ok(Preset::Uni),
        "gauss" => Ok(Preset::Gauss),
        _ => Err(format!("unknown preset {s:?} (expected uni or gauss)")),
    }
}

fn main() -> ExitCode {
    let argv = match config::expand_args(std::env::args_os().collect()) {
        Ok(argv) => argv,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();

    let result = match &cli.command {
        Command::Generate(args) => generate(args),
        Command::Optimize(args) => optimize(args),
        Command::Evaluate(args) => evaluate_cmd(args),
        Command::Sweep(args) => sweep(args, cli.quiet),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn env_seed() -> Result<Option<u64>, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| usage(anyhow!("{SEED_ENV} must be an unsigned integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn generate(args: &GenerateArgs) -> CmdResult {
    let seed = env_seed()?.unwrap_or(args.seed);
    let mut params = match args.family {
        Some(family) => datagen::preset_family(family, args.groups, seed),
        None => GenParams {
            preset: args.preset.unwrap_or(Preset::Gauss),
            mu_m: args.mu_m.unwrap_or(1.0),
            d_m: args.d_m.unwrap_or(0.1),
            ..datagen::preset_family(Family::Gauss1_01, args.groups, seed)
        },
    };
    params.n = args.n;
    params.m = args.m;
    params.buckets = args.buckets;
    params.d_y = args.d_y;
    params.group_proportions = args.group_proportions.clone();
    params.validate().map_err(usage)?;

    let generated = datagen::generate_dataset(&params).map_err(usage)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    datagen::write_generated(&args.out, &generated)?;
    log::info!("wrote {} students x {} courses to {}", params.n, params.m, args.out.display());
    Ok(())
}

fn load(data: &DataArgs) -> anyhow::Result<Instance> {
    let (dataset, partition) = load_dataset(&data.scores, &data.groups)?;
    let fair = match &data.fair_dist {
        Some(path) => load_fair_distribution(path, dataset.course_ids(), partition.labels())?,
        None => FairDistribution::population(&partition, dataset.num_courses())?,
    };
    Ok(Instance::new(dataset, partition, fair)?)
}

/// One row per group: per-group terms followed by the run-level values.
fn objectives_csv(
    partition: &GroupPartition,
    vectors: &ObjectiveVectors,
    norm: NormKind,
    value: f64,
    changed: f64,
) -> anyhow::Result<String> {
    let pct = |x: f64| format!("{}", x * 100.0);
    let big_o = aggregate_norm(&vectors.o, norm)?;
    let big_q = aggregate_norm(&vectors.q, norm)?;
    let mut out = String::from("group,label,students,o_pct,q_pct,O_pct,Q_pct,V_pct,pct_changed\n");
    for p in 0..partition.num_groups() {
        writeln!(
            out,
            "{p},{},{},{},{},{},{},{},{}",
            partition.labels()[p],
            partition.size(p),
            pct(vectors.o[p]),
            pct(vectors.q[p]),
            pct(big_o),
            pct(big_q),
            pct(value),
            pct(changed)
        )?;
    }
    Ok(out)
}

fn summary(vectors: &ObjectiveVectors, norm: NormKind, value: f64, changed: f64) -> anyhow::Result<String> {
    let mut s = format!(
        "O_pct={} Q_pct={} V_pct={} pct_changed={}\n",
        aggregate_norm(&vectors.o, norm)? * 100.0,
        aggregate_norm(&vectors.q, norm)? * 100.0,
        value * 100.0,
        changed * 100.0
    );
    for (p, (o, q)) in vectors.o.iter().zip(&vectors.q).enumerate() {
        writeln!(s, "group {p}: o_pct={} q_pct={}", o * 100.0, q * 100.0)?;
    }
    Ok(s)
}

fn trace_csv(dataset: &Dataset, trace: &[MoveRecord]) -> String {
    let mut out = String::from("step,student,course_out,course_in,V_before,V_after,positive,aspiration,alpha\n");
    for r in trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.step,
            dataset.student_ids()[r.student],
            dataset.course_ids()[r.course_out],
            dataset.course_ids()[r.course_in],
            r.v_before,
            r.v_after,
            r.positive,
            r.aspiration,
            r.alpha
        );
    }
    out
}

fn write_file(path: &Path, body: &str) -> anyhow::Result<()> {
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn optimize(args: &OptimizeArgs) -> CmdResult {
    let config = args.search.config();
    config.validate().map_err(usage)?;
    let instance = load(&args.data)?;
    let hsc = instance.hsc(config.k)?;
    let outcome = fairrank_core::optimize(&instance, hsc.clone(), &config)?;
    let changed = report::percent_changed(&outcome.solution, &hsc)?;

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    SolutionFile::from_solution(&outcome.solution, &instance.dataset).write(&args.out.join("solution.json"))?;
    write_file(
        &args.out.join("objectives.csv"),
        &objectives_csv(&instance.partition, &outcome.vectors, config.norm, outcome.value, changed)?,
    )?;
    if args.trace {
        write_file(&args.out.join("trace.csv"), &trace_csv(&instance.dataset, &outcome.trace))?;
    }
    log::info!(
        "{}: {} moves applied, {} evaluated",
        config.method.label(),
        outcome.stats.moves_applied,
        outcome.stats.moves_evaluated
    );
    print!("{}", summary(&outcome.vectors, config.norm, outcome.value, changed)?);
    Ok(())
}

fn evaluate_cmd(args: &EvaluateArgs) -> CmdResult {
    if !(0.0..=1.0).contains(&args.alpha) {
        return Err(usage(anyhow!("alpha must be in [0, 1], got {}", args.alpha)));
    }
    let instance = load(&args.data)?;
    let file = SolutionFile::read(&args.solution)?;
    let solution: Solution = file.to_solution(&instance.dataset, &instance.partition)?;
    let hsc = instance.hsc(file.k)?;
    let objective = ObjectiveConfig::for_instance(&instance, file.k, args.alpha, args.norm)?;
    let (vectors, value) = evaluate(&instance, &solution, &objective)?;
    let changed = report::percent_changed(&solution, &hsc)?;
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        write_file(
            &dir.join("objectives.csv"),
            &objectives_csv(&instance.partition, &vectors, args.norm, value, changed)?,
        )?;
    }
    print!("{}", summary(&vectors, args.norm, value, changed)?);
    Ok(())
}

fn sweep(args: &SweepArgs, quiet: bool) -> CmdResult {
    let search = args.search.config();
    for &alpha in &args.alphas {
        SearchConfig { alpha, ..search.clone() }.validate().map_err(usage)?;
    }
    let mut families = Vec::new();
    for &g in &args.group_counts {
        for &family in &args.families {
            let mut spec = FamilySpec::new(family, g);
            spec.n = args.n;
            spec.m = args.m;
            spec.params(0).validate().map_err(usage)?;
            families.push(spec);
        }
    }
    if families.is_empty() || args.methods.is_empty() || args.alphas.is_empty() || args.seeds.is_empty() {
        return Err(usage(anyhow!("families, groups, methods, alphas and seeds must be non-empty")));
    }
    let config = SweepConfig {
        search,
        jobs: args.jobs,
        timing: !args.no_timing,
    };

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let partial_path = args.out.join("records.partial.csv");
    let mut partial = BufWriter::new(
        OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .open(&partial_path)
            .with_context(|| format!("creating {}", partial_path.display()))?,
    );
    partial.write_all(report::records_preamble().as_bytes())?;
    partial.flush()?;
    let total = families.len() * args.methods.len() * args.alphas.len() * args.seeds.len();
    let progress: Mutex<(usize, BufWriter<File>)> = Mutex::new((0, partial));
    let on_record = |r: &RunRecord| {
        let mut guard = progress.lock().unwrap_or_else(|e| e.into_inner());
        guard.0 += 1;
        let done = guard.0;
        // Flushed per run so an interrupted sweep keeps what it finished.
        for row in report::record_rows(r) {
            let _ = writeln!(guard.1, "{row}");
        }
        let _ = guard.1.flush();
        if !quiet {
            eprintln!(
                "[{done}/{total}] {} {} alpha={} seed={} O_pct={:.3} Q_pct={:.3}",
                r.family,
                r.method,
                r.alpha,
                r.seed,
                r.big_o * 100.0,
                r.big_q * 100.0
            );
        }
    };

    let result = report::run_sweep(&families, &args.methods, &args.alphas, &args.seeds, &config, Some(&on_record))?;
    drop(progress);
    report::emit_report(
        &result,
        &args.out.join("records.csv"),
        &args.out.join("aggregates.csv"),
    )?;
    fs::remove_file(&partial_path).with_context(|| format!("removing {}", partial_path.display()))?;
    if !quiet {
        eprintln!("wrote {} records to {}", result.records.len(), args.out.display());
    }
    Ok(())
}
