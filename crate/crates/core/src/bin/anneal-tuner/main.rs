mod store;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anneal_tuner::embedding::{embed, Embedding, LogicalObjective};
use anneal_tuner::estimator::{
    elite_score_batched, estimator_rank, greedy_rank, SpecId, SpecSummary,
};
use anneal_tuner::io::{self, ReadoutMeta, ScoreRow};
use anneal_tuner::ising::{apply_gauge, random_gauge, Gauge, IsingProblem};
use anneal_tuner::pipeline::{
    containment_experiment, correlate_positive_couplers, default_je_candidates, gauge_scan,
    ground_truth, iterative_tune, je_scan, ContainmentParams, GaugeScanParams, JeScanParams,
    ScanSettings, Target, TuneParams, TuneTarget,
};
use anneal_tuner::sampler::{
    sample, NoiseModel, RefreshPolicy, SamplerConfig, Schedule, DEFAULT_MAX_DUTY_US,
};
use anneal_tuner::{build_chimera, ChimeraSpec, Error, HardwareGraph, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use store::{Kind, ResultStore};

#[derive(Parser)]
#[command(
    name = "anneal-tuner",
    version,
    about = "Score, rank and tune annealing sampler specifications"
)]
struct Cli {
    /// Output directory
    #[arg(
        long,
        env = "ANNEAL_TUNER_OUT",
        default_value = "anneal-out",
        global = true
    )]
    out: PathBuf,
    /// Worker thread cap (results do not depend on it)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Chimera graph and a random spin-glass instance on it
    Generate(GenerateArgs),
    /// Sample an instance, optionally under a random gauge
    Sample(SampleArgs),
    /// Elite-mean scores of readout files
    Score(ScoreArgs),
    /// Rank readout files by elite mean or greedy histogram comparison
    Rank(RankArgs),
    /// Chain-strength scan of an embedded instance
    JeScan(JeScanArgs),
    /// Score a set of random gauges
    GaugeScan(GaugeScanArgs),
    /// Full tuning: J_E selection, gauge scan, extensive runs on the top gauges
    Tune(TuneArgs),
    /// Containment of the true top gauges in predicted top sets
    Experiment(ExperimentArgs),
    /// Spearman correlation between positive-coefficient counts and gauge performance
    Correlate(CorrelateArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Lattice shape as MxNxL
    #[arg(long, default_value = "8x8x4")]
    chimera: String,
    #[arg(long, value_delimiter = ',')]
    broken: Vec<usize>,
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        default_value = "-1,1"
    )]
    coupling_domain: Vec<f64>,
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        default_value = "0"
    )]
    field_domain: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScheduleArg {
    Linear,
    Geometric,
}

#[derive(Args, Clone)]
struct SamplerArgs {
    /// Reads per specification
    #[arg(long, default_value_t = 1000)]
    n_reads: usize,
    /// Annealing time per read in microseconds
    #[arg(long, default_value_t = 20.0)]
    t_a: f64,
    /// Maximum duty per programming in microseconds
    #[arg(long, default_value_t = DEFAULT_MAX_DUTY_US)]
    duty: f64,
    #[arg(long, default_value_t = 1000)]
    sweeps: usize,
    #[arg(long, default_value_t = 0.1)]
    beta_start: f64,
    #[arg(long, default_value_t = 5.0)]
    beta_end: f64,
    #[arg(long, value_enum, default_value = "geometric")]
    schedule: ScheduleArg,
    #[arg(long, default_value_t = 0.0)]
    sigma_h: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma_j: f64,
    #[arg(long, default_value_t = 0.0)]
    quant: f64,
    /// Use a persistent control error tied to this device seed instead of redrawing it per programming
    #[arg(long)]
    device_seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SamplerArgs {
    fn config(&self) -> SamplerConfig {
        SamplerConfig {
            n_reads: self.n_reads,
            anneal_time_us: self.t_a,
            max_duty_us: self.duty,
            sweeps: self.sweeps,
            beta_start: self.beta_start,
            beta_end: self.beta_end,
            schedule: match self.schedule {
                ScheduleArg::Linear => Schedule::Linear,
                ScheduleArg::Geometric => Schedule::Geometric,
            },
            seed: self.seed,
        }
    }

    fn noise(&self) -> Result<NoiseModel> {
        let noise = NoiseModel {
            sigma_h: self.sigma_h,
            sigma_j: self.sigma_j,
            quantization: self.quant,
            refresh: match self.device_seed {
                Some(device_seed) => RefreshPolicy::Persistent { device_seed },
                None => RefreshPolicy::PerProgramming,
            },
        };
        noise.validate()?;
        Ok(noise)
    }

    fn settings(&self, epsilon: f64) -> Result<ScanSettings> {
        let sampler = self.config();
        sampler.validate()?;
        Ok(ScanSettings {
            reads: self.n_reads,
            epsilon,
            sampler,
            noise: self.noise()?,
        })
    }
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Random gauge seed; identity gauge when absent
    #[arg(long)]
    gauge_seed: Option<u64>,
    #[command(flatten)]
    sampler: SamplerArgs,
}

#[derive(Args)]
struct ScoreArgs {
    /// One readout CSV per specification
    #[arg(long, num_args = 1.., required = true)]
    readouts: Vec<PathBuf>,
    #[arg(long, default_value_t = 2.0)]
    epsilon: f64,
    /// Average the elite mean over the batches recorded in the file
    #[arg(long)]
    batched: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Elite,
    Greedy,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long, num_args = 1.., required = true)]
    readouts: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "elite")]
    method: MethodArg,
    #[arg(long, default_value_t = 2.0)]
    epsilon: f64,
    #[arg(long)]
    batched: bool,
}

#[derive(Args)]
struct EmbedArgs {
    /// Logical instance
    #[arg(long)]
    instance: PathBuf,
    /// Embedding JSON; the instance is sampled directly when absent
    #[arg(long, requires = "graph")]
    embedding: Option<PathBuf>,
    /// Hardware graph edge list
    #[arg(long)]
    graph: Option<PathBuf>,
}

struct Loaded {
    problem: IsingProblem,
    embedded: Option<(Embedding, HardwareGraph)>,
}

impl EmbedArgs {
    fn load(&self) -> Result<Loaded> {
        let problem = io::parse_instance(&read(&self.instance)?)?;
        let embedded = match (&self.embedding, &self.graph) {
            (Some(e), Some(g)) => {
                let graph = io::parse_graph(&read(g)?)?;
                let embedding = io::parse_embedding(&read(e)?)?;
                embedding.validate_on(&graph)?;
                Some((embedding, graph))
            }
            (None, _) => None,
            (Some(_), None) => return Err(Error::Validation("--embedding needs --graph".into())),
        };
        Ok(Loaded { problem, embedded })
    }
}

impl Loaded {
    fn target(&self, je: f64) -> Result<Target> {
        match &self.embedded {
            Some((emb, graph)) => Ok(Target::Embedded(embed(
                &LogicalObjective::from_ising(&self.problem),
                emb,
                graph,
                je,
            )?)),
            None => Ok(Target::Plain(self.problem.clone())),
        }
    }
}

#[derive(Args)]
struct JeScanArgs {
    #[command(flatten)]
    input: EmbedArgs,
    /// Chain strengths; 12 geometric points over [0.5, 10] when absent
    #[arg(long, value_delimiter = ',')]
    candidates: Option<Vec<f64>>,
    #[arg(long, default_value_t = 2.0)]
    epsilon: f64,
    /// Hardware gauge seed; identity when absent
    #[arg(long)]
    gauge_seed: Option<u64>,
    #[command(flatten)]
    sampler: SamplerArgs,
}

#[derive(Args)]
struct GaugeScanArgs {
    #[command(flatten)]
    input: EmbedArgs,
    /// Chain strength for embedded instances
    #[arg(long, default_value_t = 2.0)]
    je: f64,
    #[arg(long, default_value_t = 50)]
    n_gauges: usize,
    #[arg(long, default_value_t = 2.0)]
    epsilon: f64,
    /// Seed for the random gauges; defaults to --seed
    #[arg(long)]
    gauge_seed: Option<u64>,
    #[command(flatten)]
    sampler: SamplerArgs,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    input: EmbedArgs,
    #[arg(long, value_delimiter = ',')]
    candidates: Option<Vec<f64>>,
    #[arg(long, default_value_t = 50)]
    n_gauges: usize,
    /// Reads per selected gauge in the extensive runs
    #[arg(long, default_value_t = 50_000)]
    total_reads: usize,
    #[arg(long, default_value_t = 2.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 5)]
    top_k: usize,
    #[arg(long)]
    second_je_scan: bool,
    #[arg(long, allow_hyphen_values = true)]
    target_energy: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    ground_energy: Option<f64>,
    #[command(flatten)]
    sampler: SamplerArgs,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    input: EmbedArgs,
    #[arg(long, default_value_t = 2.0)]
    je: f64,
    #[arg(long, default_value_t = 50)]
    n_gauges: usize,
    #[arg(long, value_delimiter = ',', default_value = "100,500,1000")]
    reads_grid: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,5,10")]
    epsilons: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    n_experiments: usize,
    #[arg(long, default_value_t = 50_000)]
    total_reads: usize,
    #[arg(long, default_value_t = 5)]
    top: usize,
    #[command(flatten)]
    sampler: SamplerArgs,
}

#[derive(Args)]
struct CorrelateArgs {
    #[command(flatten)]
    input: EmbedArgs,
    #[arg(long, default_value_t = 2.0)]
    je: f64,
    #[arg(long, default_value_t = 50)]
    n_gauges: usize,
    #[arg(long, default_value_t = 2.0)]
    epsilon: f64,
    /// Reads per gauge for the performance ranking; the scan's greedy ranking is used when absent
    #[arg(long)]
    total_reads: Option<usize>,
    #[command(flatten)]
    sampler: SamplerArgs,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))
}

fn pretty<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn parse_chimera(s: &str) -> Result<(usize, usize, usize)> {
    let parts: Vec<_> = s.split('x').map(str::parse::<usize>).collect();
    match parts.as_slice() {
        [Ok(m), Ok(n), Ok(l)] => Ok((*m, *n, *l)),
        _ => Err(Error::Validation(format!(
            "--chimera expects MxNxL, got {s}"
        ))),
    }
}

fn command_seed(c: &Command) -> u64 {
    match c {
        Command::Generate(a) => a.seed,
        Command::Sample(a) => a.sampler.seed,
        Command::Score(_) | Command::Rank(_) => 0,
        Command::JeScan(a) => a.sampler.seed,
        Command::GaugeScan(a) => a.sampler.seed,
        Command::Tune(a) => a.sampler.seed,
        Command::Experiment(a) => a.sampler.seed,
        Command::Correlate(a) => a.sampler.seed,
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Generate(_) => "generate",
        Command::Sample(_) => "sample",
        Command::Score(_) => "score",
        Command::Rank(_) => "rank",
        Command::JeScan(_) => "je-scan",
        Command::GaugeScan(_) => "gauge-scan",
        Command::Tune(_) => "tune",
        Command::Experiment(_) => "experiment",
        Command::Correlate(_) => "correlate",
    }
}

/// Arguments minus the output-directory and thread flags, which do not affect artifacts.
fn reproducible_args(args: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in args.iter().skip(1) {
        if skip {
            skip = false;
            continue;
        }
        if a == "--out" || a == "--threads" {
            skip = true;
            continue;
        }
        if a.starts_with("--out=") || a.starts_with("--threads=") {
            continue;
        }
        out.push(a.clone());
    }
    out
}

fn load_readouts(
    paths: &[PathBuf],
    batched: bool,
) -> Result<Vec<Vec<anneal_tuner::estimator::EnergyBatch>>> {
    paths
        .iter()
        .map(|p| io::readout_batches(&io::parse_readouts_csv(&read(p)?)?, batched))
        .collect()
}

fn run(cli: Cli, args: Vec<String>) -> Result<serde_json::Value> {
    let mut store = ResultStore::open(
        &cli.out,
        command_name(&cli.command),
        command_seed(&cli.command),
        args,
    )?;
    let mut extra = json!({});
    match &cli.command {
        Command::Generate(a) => {
            let (m, n, l) = parse_chimera(&a.chimera)?;
            let graph =
                build_chimera(&ChimeraSpec::new(m, n, l).with_broken(a.broken.iter().copied()))?;
            let problem = anneal_tuner::graph::random_spin_glass(
                &graph,
                &a.coupling_domain,
                &a.field_domain,
                a.seed,
            )?;
            store.write(Kind::Instances, "txt", &io::write_instance(&problem))?;
            store.write(Kind::Instances, "graph", &io::write_graph(&graph))?;
        }
        Command::Sample(a) => {
            let problem = io::parse_instance(&read(&a.instance)?)?;
            let gauge = match a.gauge_seed {
                Some(s) => random_gauge(problem.n(), s)?,
                None => Gauge::identity(problem.n()),
            };
            let config = a.sampler.config();
            let noise = a.sampler.noise()?;
            let readouts = sample(&apply_gauge(&problem, &gauge)?, &config, &noise)?;
            store.write(Kind::Readouts, "csv", &io::write_readouts_csv(&readouts))?;
            store.write(
                Kind::Readouts,
                "json",
                &pretty(&ReadoutMeta::new(&config, &noise, a.gauge_seed, &readouts))?,
            )?;
        }
        Command::Score(a) => {
            let sets = load_readouts(&a.readouts, a.batched)?;
            let scores = sets
                .iter()
                .enumerate()
                .map(|(k, b)| Ok((SpecId(k as u64), elite_score_batched(b, a.epsilon)?)))
                .collect::<Result<Vec<_>>>()?;
            let ranks = estimator_rank(&scores)?.by_id();
            let rows: Vec<ScoreRow> = scores
                .iter()
                .map(|(id, s)| ScoreRow {
                    spec_id: *id,
                    score: Some(s.value),
                    rank: ranks[id],
                    n_reads: s.n_reads,
                    n_reps: s.n_reps,
                    epsilon: Some(s.epsilon),
                })
                .collect();
            store.write(Kind::Scores, "csv", &io::write_scores_csv(&rows))?;
        }
        Command::Rank(a) => {
            let sets = load_readouts(&a.readouts, a.batched)?;
            let (table, epsilon) = match a.method {
                MethodArg::Elite => {
                    let scores = sets
                        .iter()
                        .enumerate()
                        .map(|(k, b)| Ok((SpecId(k as u64), elite_score_batched(b, a.epsilon)?)))
                        .collect::<Result<Vec<_>>>()?;
                    (estimator_rank(&scores)?, Some(a.epsilon))
                }
                MethodArg::Greedy => {
                    let summaries: Vec<_> = sets
                        .iter()
                        .enumerate()
                        .map(|(k, b)| SpecSummary::from_batches(SpecId(k as u64), b))
                        .collect();
                    (greedy_rank(&summaries)?, None)
                }
            };
            let reads: Vec<usize> = sets
                .iter()
                .map(|b| b.iter().map(|x| x.len()).sum())
                .collect();
            let reps: Vec<usize> = sets.iter().map(Vec::len).collect();
            let rows: Vec<ScoreRow> = table
                .entries()
                .iter()
                .map(|e| ScoreRow {
                    spec_id: e.spec_id,
                    score: e.score,
                    rank: e.rank,
                    n_reads: reads[e.spec_id.0 as usize],
                    n_reps: reps[e.spec_id.0 as usize],
                    epsilon,
                })
                .collect();
            store.write(Kind::Ranks, "csv", &io::write_scores_csv(&rows))?;
        }
        Command::JeScan(a) => {
            let loaded = a.input.load()?;
            let (emb, graph) = loaded
                .embedded
                .as_ref()
                .ok_or_else(|| Error::Validation("je-scan needs --embedding and --graph".into()))?;
            let gauge = match a.gauge_seed {
                Some(s) => random_gauge(graph.num_slots(), s)?,
                None => Gauge::identity(graph.num_slots()),
            };
            let params = JeScanParams {
                candidates: a.candidates.clone().unwrap_or_else(default_je_candidates),
                settings: a.sampler.settings(a.epsilon)?,
                seed: a.sampler.seed,
            };
            let scan = je_scan(
                &LogicalObjective::from_ising(&loaded.problem),
                emb,
                graph,
                &gauge,
                &params,
            )?;
            store.write(Kind::Scores, "csv", &io::write_je_csv(&scan))?;
            store.write(Kind::Reports, "json", &pretty(&scan)?)?;
        }
        Command::GaugeScan(a) => {
            let loaded = a.input.load()?;
            let target = loaded.target(a.je)?;
            let params = GaugeScanParams {
                n_gauges: a.n_gauges,
                settings: a.sampler.settings(a.epsilon)?,
                gauge_seed: a.gauge_seed.unwrap_or(a.sampler.seed),
                seed: a.sampler.seed,
            };
            let scan = gauge_scan(&target, &params)?;
            let lowest = scan
                .entries
                .iter()
                .filter_map(|e| e.logical.summary.lowest())
                .map(|(e, _)| e)
                .fold(f64::INFINITY, f64::min);
            store.write(Kind::Scores, "csv", &io::write_gauge_csv(&scan, lowest)?)?;
            store.write(
                Kind::Ranks,
                "csv",
                &io::write_scores_csv(&io::rank_rows(
                    &scan.elite_rank()?,
                    scan.reads_per_gauge,
                    scan.entries[0].logical.score.n_reps,
                    Some(scan.epsilon),
                )),
            )?;
            store.write(Kind::Reports, "json", &pretty(&scan)?)?;
        }
        Command::Tune(a) => {
            let loaded = a.input.load()?;
            let target = match loaded.embedded {
                Some((embedding, graph)) => TuneTarget::Embedded {
                    logical: LogicalObjective::from_ising(&loaded.problem),
                    embedding,
                    graph,
                    candidates: a.candidates.clone().unwrap_or_else(default_je_candidates),
                },
                None => TuneTarget::Plain(loaded.problem),
            };
            let settings = a.sampler.settings(a.epsilon)?;
            let params = TuneParams {
                n_gauges: a.n_gauges,
                scan_reads: a.sampler.n_reads,
                total_reads: a.total_reads,
                epsilon: a.epsilon,
                top_k: a.top_k,
                sampler: settings.sampler,
                noise: settings.noise,
                seed: a.sampler.seed,
                second_je_scan: a.second_je_scan,
                target_energy: a.target_energy,
                ground_energy: a.ground_energy,
            };
            let report = iterative_tune(&target, &params)?;
            store.write(Kind::Reports, "json", &pretty(&report)?)?;
            let mut csv = String::from("gauge,score,n_gs,rank\n");
            for (rank, s) in report.selected.iter().enumerate() {
                let n_gs = report
                    .runs
                    .iter()
                    .find(|r| r.id == s.id)
                    .map_or(0, |r| r.n_gs);
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    s.id,
                    io::fmt_real(s.score),
                    n_gs,
                    rank + 1
                ));
            }
            store.write(Kind::Scores, "csv", &csv)?;
            extra = json!({ "best": report.best, "chosen_je": report.chosen_je });
        }
        Command::Experiment(a) => {
            let loaded = a.input.load()?;
            let target = loaded.target(a.je)?;
            let settings = a.sampler.settings(2.0)?;
            let params = ContainmentParams {
                n_gauges: a.n_gauges,
                reads_grid: a.reads_grid.clone(),
                epsilons: a.epsilons.clone(),
                n_experiments: a.n_experiments,
                total_reads: a.total_reads,
                top: a.top,
                sampler: settings.sampler,
                noise: settings.noise,
                seed: a.sampler.seed,
            };
            let table = containment_experiment(&target, &params)?;
            store.write(Kind::Reports, "json", &pretty(&table)?)?;
            let mut csv = String::from("n_reads,method");
            for m in 1..=table.top {
                csv.push_str(&format!(",top{m}"));
            }
            csv.push('\n');
            for row in &table.rows {
                csv.push_str(&format!("{},{}", row.n_reads, row.method));
                for f in &row.fractions {
                    csv.push_str(&format!(",{}", io::fmt_real(*f)));
                }
                csv.push('\n');
            }
            store.write(Kind::Scores, "csv", &csv)?;
        }
        Command::Correlate(a) => {
            let loaded = a.input.load()?;
            let target = loaded.target(a.je)?;
            let settings = a.sampler.settings(a.epsilon)?;
            let scan = gauge_scan(
                &target,
                &GaugeScanParams {
                    n_gauges: a.n_gauges,
                    settings: settings.clone(),
                    gauge_seed: a.sampler.seed,
                    seed: a.sampler.seed,
                },
            )?;
            let performance = match a.total_reads {
                Some(total) => {
                    let gauges: Vec<_> = scan.entries.iter().map(|e| e.gauge.clone()).collect();
                    ground_truth(
                        &target,
                        &gauges,
                        total,
                        &settings.sampler,
                        &settings.noise,
                        a.sampler.seed,
                    )?
                    .ranks
                }
                None => scan.greedy_rank()?,
            };
            let rows = correlate_positive_couplers(&scan, &performance)?;
            let ranks = performance.by_id();
            let mut csv = String::from(
                "gauge,j_positive,j_positive_non_chain,j_positive_chain,h_positive,rank\n",
            );
            for e in &scan.entries {
                let c = &e.counts;
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    e.id,
                    c.all_couplers,
                    c.non_chain_couplers,
                    c.chain_couplers,
                    c.fields,
                    ranks[&e.id]
                ));
            }
            let mut rho = String::from("count,rho,degenerate\n");
            for r in &rows {
                rho.push_str(&format!(
                    "{},{},{}\n",
                    r.kind.name(),
                    io::fmt_real(r.rho),
                    r.degenerate
                ));
            }
            store.write(Kind::Scores, "csv", &csv)?;
            store.write(Kind::Reports, "csv", &rho)?;
            store.write(Kind::Reports, "json", &pretty(&rows)?)?;
        }
    }
    let written = store.commit()?;
    Ok(json!({
        "artifacts": written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "summary": extra,
    }))
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Validation(_) => "validation",
        Error::Embedding(_) => "embedding",
        Error::RegionNotFound { .. } => "region_not_found",
        Error::MissingPartition => "missing_partition",
        Error::UndefinedCorrelation => "undefined_correlation",
        Error::Parse { .. } => "parse",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!(
                "{}",
                json!({ "error": "usage", "message": e.render().to_string() })
            );
            return ExitCode::from(1);
        }
    };
    #[cfg(feature = "parallel")]
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
    match run(cli, reproducible_args(&argv)) {
        Ok(out) => {
            println!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!(
                "{}",
                json!({ "error": error_kind(&e), "message": e.to_string() })
            );
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
