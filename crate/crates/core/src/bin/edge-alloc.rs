//! `edge-alloc`: generate scenarios and training data, train the ensembles,
//! allocate single queries and run the benchmark sweep.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error (unreadable
//! or malformed inputs, single-class training data), 4 runtime failure.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use edge_alloc::allocator::{ova_allocate, select_top_k, FusionScheme};
use edge_alloc::config::CliConfig;
use edge_alloc::error::Error;
use edge_alloc::experiment::{run_cell, CellSpec, DatasetKind, PipelineConfig};
use edge_alloc::fcp::{FuzzyClassifier, TrainingQueryCorpus};
use edge_alloc::learners::{accuracy, stratified_split, EnsembleModel, LabeledDataset, MetaEnsemble, ModelFile};
use edge_alloc::metrics::{density_estimate, read_run_csv, write_run_csv, write_tables};
use edge_alloc::model::{ComplexityClasses, Interval, Query, QueryConstraints};
use edge_alloc::simulator::corpus::generate_corpus;
use edge_alloc::simulator::{generate_scenario, synthesize_training_set, Scenario, TraceSource};
use rand::SeedableRng;
use serde::Serialize;

const SCENARIO_FILE: &str = "scenario.json";
const CORPUS_FILE: &str = "corpus.tsv";
const TD_FILE: &str = "td.csv";
const MODEL_FILES: [&str; 3] = ["model_adaboost.json", "model_stacking.json", "model_bagging.json"];

#[derive(Parser)]
#[command(name = "edge-alloc", version, about = "Meta-ensemble query allocation for edge networks")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Scenario seed; overrides the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Fusion scheme: cs (conjunctive) or mvs (majority)
    #[arg(long, global = true)]
    scheme: Option<FusionScheme>,
    /// Number of nodes.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Output (and input) directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Utilization trace file for the trace dataset.
    #[arg(long, global = true, requires = "trace_column")]
    trace: Option<PathBuf>,
    /// Utilization column in the trace file
    #[arg(long, global = true, requires = "trace")]
    trace_column: Option<String>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Machine,
}

#[derive(Subcommand)]
enum Command {
    /// Write the scenario dump, query corpus and labeled training set.
    Gen,
    /// Train the three ensembles on the training set.
    Train,
    /// Allocate one query against the generated scenario.
    Allocate(AllocateArgs),
    /// Run the scheme x dataset x N x seed sweep.
    Bench,
}

#[derive(Args)]
struct AllocateArgs {
    /// Number of hosts to report.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Index of a query in the scenario stream.
    #[arg(long, conflicts_with = "statement")]
    query: Option<usize>,
    /// Query statement; requires --ranges.
    #[arg(long, requires = "ranges")]
    statement: Option<String>,
    /// Per-dimension constraints as `lo:hi,lo:hi,...`.
    #[arg(long)]
    ranges: Option<String>,
    /// Deadline feature `a` of the statement query
    #[arg(long, default_value_t = 5.0)]
    deadline: f64,
}

enum Failure {
    Config(String),
    Data(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Data(_) => 3,
            Failure::Runtime(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Data(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let m = e.to_string();
        match e {
            Error::Config(_) => Failure::Config(m),
            Error::InvalidInput(_) => Failure::Runtime(m),
            Error::Corpus(_) | Error::Parse { .. } | Error::SingleClass { .. } | Error::Format(_) | Error::Io { .. } => {
                Failure::Data(m)
            }
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_target(false)
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    let cfg = load_config(&cli.common)?;
    match cli.command {
        Command::Gen => cmd_gen(&cfg, &cli.common),
        Command::Train => cmd_train(&cfg),
        Command::Allocate(args) => cmd_allocate(&cfg, &cli.common, &args),
        Command::Bench => cmd_bench(&cfg),
    }
}

fn load_config(c: &Common) -> Result<CliConfig, Failure> {
    let mut cfg = match &c.config {
        Some(p) => CliConfig::load(p)?,
        None => CliConfig::default(),
    };
    if let Some(seed) = c.seed {
        cfg.scenario.seed = seed;
    }
    if let Some(s) = c.scheme {
        cfg.scheme = s;
    }
    if let Some(n) = c.n {
        cfg.scenario.nodes = n;
        cfg.bench.nodes = vec![n];
    }
    if let Some(out) = &c.out {
        cfg.out_dir = out.clone();
    }
    if let (Some(path), Some(column)) = (&c.trace, &c.trace_column) {
        cfg.trace = Some(TraceSource::File {
            path: path.display().to_string(),
            column: column.clone(),
        });
    }
    cfg.validate()?;
    Ok(cfg)
}

fn io_fail(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Runtime(format!("{}: {e}", path.display()))
}

fn classifier(cfg: &CliConfig) -> Result<FuzzyClassifier, Failure> {
    let classes = ComplexityClasses::default();
    let corpus = match &cfg.corpus {
        Some(p) => Some(TrainingQueryCorpus::load(p, &classes)?),
        None => None,
    };
    Ok(cfg.pipeline.classifier(corpus)?)
}

/// Writes every file into a staging directory first so a failure leaves
/// no partial output behind.
fn write_atomically(dir: &Path, files: &[(&str, Vec<u8>)]) -> CmdResult {
    std::fs::create_dir_all(dir).map_err(io_fail(dir))?;
    let stage = dir.join(format!(".staging-{}", std::process::id()));
    std::fs::create_dir_all(&stage).map_err(io_fail(&stage))?;
    let result = (|| {
        for (name, bytes) in files {
            let p = stage.join(name);
            std::fs::write(&p, bytes).map_err(io_fail(&p))?;
        }
        for (name, _) in files {
            let to = dir.join(name);
            std::fs::rename(stage.join(name), &to).map_err(io_fail(&to))?;
        }
        Ok(())
    })();
    let _ = std::fs::remove_dir_all(&stage);
    result
}

fn cmd_gen(cfg: &CliConfig, common: &Common) -> CmdResult {
    let mut scen_cfg = cfg.scenario.clone();
    if common.trace.is_some() {
        scen_cfg.trace = cfg.trace.clone();
    }
    let fcp = classifier(cfg)?;
    let scenario = generate_scenario(&scen_cfg)?;
    let corpus_text = match &cfg.corpus {
        Some(p) => std::fs::read_to_string(p).map_err(io_fail(p))?,
        None => generate_corpus(&ComplexityClasses::default(), cfg.pipeline.corpus_per_class, cfg.pipeline.corpus_seed)?
            .to_tsv(&ComplexityClasses::default()),
    };
    let (td, balance) = synthesize_training_set(&scenario, &fcp, &cfg.pipeline.policy, cfg.pipeline.training_size)?;
    let mut td_bytes = Vec::new();
    td.write_csv(&mut td_bytes)?;
    write_atomically(
        &cfg.out_dir,
        &[
            (SCENARIO_FILE, scenario.to_json()?.into_bytes()),
            (CORPUS_FILE, corpus_text.into_bytes()),
            (TD_FILE, td_bytes),
            ("config.toml", cfg.to_toml()?.into_bytes()),
        ],
    )?;
    match common.format {
        Format::Human => {
            println!(
                "wrote {SCENARIO_FILE}, {CORPUS_FILE}, {TD_FILE} to {}",
                cfg.out_dir.display()
            );
            println!("training set: {balance}");
        }
        Format::Machine => emit_json(&serde_json::json!({
            "out_dir": cfg.out_dir,
            "files": [SCENARIO_FILE, CORPUS_FILE, TD_FILE],
            "balance": balance,
        })),
    }
    Ok(())
}

fn emit_json<T: Serialize>(v: &T) {
    println!("{}", serde_json::to_string(v).expect("serializable"));
}

#[derive(Serialize)]
struct TrainReport {
    model: &'static str,
    file: &'static str,
    held_out_accuracy: f64,
    majority_baseline: f64,
}

fn cmd_train(cfg: &CliConfig) -> CmdResult {
    let td_path = cfg.out_dir.join(TD_FILE);
    let file = std::fs::File::open(&td_path)
        .map_err(|e| Failure::Data(format!("{}: {e} (run `edge-alloc gen` first)", td_path.display())))?;
    let td = LabeledDataset::read_csv(std::io::BufReader::new(file), &td_path.display().to_string())?;
    if td.positives() == 0 || td.positives() == td.len() {
        return Err(Error::SingleClass {
            positive_ratio: td.positive_ratio(),
        }
        .into());
    }
    let seed = cfg.scenario.seed;
    // Held-out estimate on a 20% stratified split, then the shipped models
    // are trained on all rows.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (fit_idx, hold_idx) = stratified_split(td.labels(), 0.8, &mut rng)?;
    let (fit, hold) = (td.subset(&fit_idx), td.subset(&hold_idx));
    let probe = cfg.pipeline.ensembles.train(&fit, seed)?;
    let baseline = hold.positive_ratio().max(1.0 - hold.positive_ratio());
    let full = cfg.pipeline.ensembles.train(&td, seed)?;
    let names = ["adaboost", "stacking", "bagging"];
    let mut reports = Vec::new();
    let mut files = Vec::new();
    for (i, (model, probe_model)) in full.members().into_iter().zip(probe.members()).enumerate() {
        files.push((MODEL_FILES[i], ModelFile::new(model.clone()).to_json().into_bytes()));
        reports.push(TrainReport {
            model: names[i],
            file: MODEL_FILES[i],
            held_out_accuracy: accuracy(probe_model, &hold),
            majority_baseline: baseline,
        });
    }
    let report_json = serde_json::to_string_pretty(&reports).expect("serializable");
    files.push(("train_report.json", report_json.into_bytes()));
    write_atomically(&cfg.out_dir, &files)?;
    for r in &reports {
        log::info!(
            "{:<9} held-out accuracy {:.3} (majority baseline {:.3}) -> {}",
            r.model,
            r.held_out_accuracy,
            r.majority_baseline,
            r.file
        );
    }
    Ok(())
}

fn load_models(dir: &Path) -> Result<MetaEnsemble, Failure> {
    let load = |name: &str| -> Result<EnsembleModel, Failure> {
        let p = dir.join(name);
        if !p.is_file() {
            return Err(Failure::Data(format!(
                "{} is missing (run `edge-alloc train` first)",
                p.display()
            )));
        }
        Ok(ModelFile::load(&p)?.model)
    };
    Ok(MetaEnsemble {
        adaboost: load(MODEL_FILES[0])?,
        stacking: load(MODEL_FILES[1])?,
        bagging: load(MODEL_FILES[2])?,
    })
}

fn parse_ranges(text: &str) -> Result<QueryConstraints, Failure> {
    let intervals = text
        .split(',')
        .map(|part| {
            let (lo, hi) = part
                .split_once(':')
                .ok_or_else(|| Failure::Config(format!("range {part:?} is not lo:hi")))?;
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Failure::Config(format!("range bound {s:?}: {e}")))
            };
            Ok(Interval::new(num(lo)?, num(hi)?)?)
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    Ok(QueryConstraints::new(intervals)?)
}

#[derive(Serialize)]
struct AllocateOutput<'a> {
    query_id: u64,
    scheme: FusionScheme,
    selected: usize,
    hosts: Vec<usize>,
    node_ids: &'a [usize],
    ensemble_labels: &'a [[u8; 3]],
    fused: &'a [u8],
    votes: &'a [u64],
    conclusion_ms: f64,
}

fn cmd_allocate(cfg: &CliConfig, common: &Common, args: &AllocateArgs) -> CmdResult {
    let scen_path = cfg.out_dir.join(SCENARIO_FILE);
    if !scen_path.is_file() {
        return Err(Failure::Data(format!(
            "{} is missing (run `edge-alloc gen` first)",
            scen_path.display()
        )));
    }
    let scenario = Scenario::load(&scen_path)?;
    let ensembles = load_models(&cfg.out_dir)?;
    let corpus_path = cfg.out_dir.join(CORPUS_FILE);
    let classes = ComplexityClasses::default();
    let corpus = if corpus_path.is_file() {
        Some(TrainingQueryCorpus::load(&corpus_path, &classes)?)
    } else {
        None
    };
    let fcp = cfg.pipeline.classifier(corpus)?;
    let query = match (&args.statement, &args.ranges, args.query) {
        (Some(stmt), Some(ranges), _) => Query::new(u64::MAX, stmt.clone(), parse_ranges(ranges)?, args.deadline)?,
        (None, _, idx) => {
            let i = idx.unwrap_or(0);
            scenario
                .queries
                .get(i)
                .cloned()
                .ok_or_else(|| Failure::Config(format!("query index {i} out of range ({} queries)", scenario.queries.len())))?
        }
        (Some(_), None, _) => return Err(Failure::Config("--statement requires --ranges".into())),
    };
    let d = ova_allocate(
        &query,
        &scenario.nodes,
        &ensembles,
        cfg.scheme,
        &fcp,
        &scenario.config.relevance,
    )?;
    let hosts = select_top_k(&d, args.k).map_err(|e| Failure::Config(e.to_string()))?;
    match common.format {
        Format::Machine => emit_json(&AllocateOutput {
            query_id: d.query_id,
            scheme: d.scheme,
            selected: d.selected,
            hosts,
            node_ids: &d.node_ids,
            ensemble_labels: &d.ensemble_labels,
            fused: &d.fused,
            votes: &d.votes,
            conclusion_ms: d.conclusion_ms,
        }),
        Format::Human => {
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "scheme {}  selected node {}", d.scheme, d.selected);
            let _ = writeln!(
                out,
                "hosts (best {}): {}",
                args.k,
                hosts.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
            );
            let _ = writeln!(out, "{:>6} {:>9} {:>6} {:>6} {:>7}", "node", "Y1 Y2 Y3", "fused", "votes", "load");
            for i in 0..d.node_ids.len() {
                let y = d.ensemble_labels[i];
                let _ = writeln!(
                    out,
                    "{:>6} {:>3}{:>3}{:>3} {:>6} {:>6} {:>7.3}",
                    d.node_ids[i], y[0], y[1], y[2], d.fused[i], d.votes[i], d.loads[i]
                );
            }
            let _ = writeln!(out, "conclusion time {:.4} ms", d.conclusion_ms);
        }
    }
    Ok(())
}

fn cmd_bench(cfg: &CliConfig) -> CmdResult {
    let runs_dir = cfg.out_dir.join("runs");
    std::fs::create_dir_all(&runs_dir).map_err(io_fail(&runs_dir))?;
    let fcp = classifier(cfg)?;
    let trace = cfg.trace_source();
    let pipeline: &PipelineConfig = &cfg.pipeline;
    let b = &cfg.bench;
    if b.datasets.contains(&DatasetKind::Trace) {
        // Fail fast on an unreadable trace instead of once per cell.
        trace.load()?;
    }
    let mut metrics = Vec::new();
    let mut failures = 0usize;
    let total = b.datasets.len() * b.nodes.len() * b.seeds.len();
    let mut done = 0usize;
    for &dataset in &b.datasets {
        for &nodes in &b.nodes {
            for &seed in &b.seeds {
                done += 1;
                let cell = CellSpec { dataset, nodes, seed };
                let mut scen = cfg.scenario.clone();
                scen.nodes = nodes;
                scen.seed = seed;
                let stems: Vec<(FusionScheme, PathBuf)> = b
                    .schemes
                    .iter()
                    .map(|&s| {
                        let d = edge_alloc::experiment::descriptor(s, &scen, dataset);
                        (s, runs_dir.join(format!("{}.csv", d.file_stem())))
                    })
                    .collect();
                let (cached, missing): (Vec<_>, Vec<_>) = stems.into_iter().partition(|(_, p)| p.is_file());
                for (_, p) in &cached {
                    match read_run_csv(p).and_then(|r| Ok((r.descriptor.clone(), r.metrics()?))) {
                        Ok(m) => metrics.push(m),
                        Err(e) => {
                            failures += 1;
                            log::error!("[{done}/{total}] {}: {e}", p.display());
                        }
                    }
                }
                if missing.is_empty() {
                    log::info!("[{done}/{total}] {dataset} N={nodes} seed={seed}: cached");
                    continue;
                }
                let schemes: Vec<FusionScheme> = missing.iter().map(|(s, _)| *s).collect();
                let started = std::time::Instant::now();
                match run_cell(pipeline, &scen, &trace, &cell, &schemes, &fcp) {
                    Ok(results) => {
                        let mut line = format!("[{done}/{total}] {dataset} N={nodes} seed={seed}:");
                        for (run, (_, path)) in results.iter().zip(&missing) {
                            let m = match run.metrics() {
                                Ok(m) => m,
                                Err(e) => {
                                    failures += 1;
                                    log::error!("{}: {e}", path.display());
                                    continue;
                                }
                            };
                            if let Err(e) = write_run_csv(run, path) {
                                failures += 1;
                                log::error!("{e}");
                                continue;
                            }
                            line.push_str(&format!(
                                " {} D_l={:.4} D_s={:.4} R={:.2}/ms",
                                run.descriptor.scheme, m.d_l, m.d_s, m.throughput
                            ));
                            metrics.push((run.descriptor.clone(), m));
                        }
                        log::info!("{line} ({:.1}s)", started.elapsed().as_secs_f64());
                    }
                    Err(e) => {
                        failures += 1;
                        log::error!("[{done}/{total}] {dataset} N={nodes} seed={seed}: {e}");
                    }
                }
            }
        }
    }
    write_tables(&metrics, &cfg.out_dir)?;
    write_densities(cfg, &runs_dir, b.bins)?;
    log::info!(
        "wrote {} and {}",
        cfg.out_dir.join("runs.csv").display(),
        cfg.out_dir.join("summary.csv").display()
    );
    if failures > 0 {
        return Err(Failure::Runtime(format!("{failures} run(s) failed; see log")));
    }
    Ok(())
}

/// `density.csv`: pooled `D_l` and `D_s` histograms per cell.
fn write_densities(cfg: &CliConfig, runs_dir: &Path, bins: usize) -> CmdResult {
    use std::collections::BTreeMap;
    type Cell = (String, usize, String);
    let mut pooled: BTreeMap<Cell, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(runs_dir)
        .map_err(io_fail(runs_dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    entries.sort();
    for p in entries {
        let run = read_run_csv(&p)?;
        let d = &run.descriptor;
        let slot = pooled
            .entry((d.scheme.to_string(), d.nodes, d.dataset.clone()))
            .or_default();
        slot.0.extend(run.d_l_samples());
        slot.1.extend(run.d_s_samples());
    }
    let mut s = String::from("scheme,n,dataset,metric,bin_center,density\n");
    for ((scheme, n, dataset), (dl, ds)) in &pooled {
        for (name, xs) in [("d_l", dl), ("d_s", ds)] {
            if xs.len() < 2 {
                continue;
            }
            let d = density_estimate(xs, bins)?;
            for (c, v) in d.centers.iter().zip(&d.densities) {
                s.push_str(&format!("{scheme},{n},{dataset},{name},{c:?},{v:?}\n"));
            }
        }
    }
    let path = cfg.out_dir.join("density.csv");
    std::fs::write(&path, s).map_err(io_fail(&path))?;
    Ok(())
}
