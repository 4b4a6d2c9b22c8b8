//! Gauge scans, chain-strength scans, top-k selection and the experiments
//! built on them.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::embedding::{
    embed, je_region_bounds, majority_vote_decode, strict_embedding_fraction_of, EmbeddedProblem,
    Embedding, LogicalEvaluator, LogicalObjective, F_MAX_CHAIN_STRENGTH,
};
use crate::error::{Error, Result};
use crate::estimator::{
    elite_score_batched, estimator_rank, greedy_rank, r99, spearman_values, EliteScore,
    EnergyBatch, RankTable, SpecId, SpecSummary, R99,
};
use crate::graph::HardwareGraph;
use crate::ising::{apply_gauge, random_gauge, ungauge, Gauge, IsingProblem, PositiveCounts};
use crate::sampler::{sample, NoiseModel, SamplerConfig};
use crate::seed::derive_seed;

/// What gets sampled: a bare problem, or a logical problem on a chain embedding.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Plain(IsingProblem),
    Embedded(EmbeddedProblem),
}

impl Target {
    /// Number of hardware spins (the gauge length).
    pub fn num_spins(&self) -> usize {
        match self {
            Target::Plain(p) => p.n(),
            Target::Embedded(e) => e.hardware.n(),
        }
    }

    pub fn hardware(&self) -> &IsingProblem {
        match self {
            Target::Plain(p) => p,
            Target::Embedded(e) => &e.hardware,
        }
    }

    fn chain_edges(&self) -> BTreeSet<(usize, usize)> {
        match self {
            Target::Plain(_) => BTreeSet::new(),
            Target::Embedded(e) => e.chain_edges.clone(),
        }
    }

    fn has_partition(&self) -> bool {
        matches!(self, Target::Embedded(e) if e.logical.has_partition())
    }
}

/// Reads, sampler settings and noise used for every specification in a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSettings {
    pub reads: usize,
    pub epsilon: f64,
    pub sampler: SamplerConfig,
    pub noise: NoiseModel,
}

/// Clean-frame energies from sampling one specification.
#[derive(Debug, Clone)]
pub(crate) struct SpecRun {
    pub logical: Vec<EnergyBatch>,
    pub problem: Option<Vec<EnergyBatch>>,
    pub f_se: Option<f64>,
    pub programmings: usize,
}

/// Samples `target` under `gauge` and evaluates every read in the clean frame:
/// the original problem for plain targets, the decoded logical objective
/// (plus the problem-variable objective when partitioned) for embedded ones.
pub(crate) fn run_spec(
    target: &Target,
    gauge: &Gauge,
    reads: usize,
    sampler: &SamplerConfig,
    noise: &NoiseModel,
    seed: u64,
) -> Result<SpecRun> {
    let config = sampler.with_reads(reads, seed);
    let device = apply_gauge(target.hardware(), gauge)?;
    let readouts = sample(&device, &config, noise)?;
    let mut logical = Vec::with_capacity(readouts.plan.n_reps);
    let mut problem = target.has_partition().then(Vec::new);
    let mut f_se = None;
    match target {
        Target::Plain(p) => {
            for (b, range) in readouts.batch_ranges().enumerate() {
                let energies = readouts.configs[range]
                    .iter()
                    .map(|s| p.energy(&ungauge(s, gauge)?))
                    .collect::<Result<Vec<_>>>()?;
                logical.push(EnergyBatch::new(energies, b)?);
            }
        }
        Target::Embedded(e) => {
            let evaluator = LogicalEvaluator::new(&e.logical)?;
            let frame: Vec<_> = readouts
                .configs
                .iter()
                .map(|s| ungauge(s, gauge))
                .collect::<Result<_>>()?;
            f_se = Some(strict_embedding_fraction_of(&frame, &e.embedding)?.f_se);
            for (b, range) in readouts.batch_ranges().enumerate() {
                let mut energies = Vec::with_capacity(range.len());
                let mut problem_energies = Vec::new();
                for r in range {
                    let x = majority_vote_decode(
                        &frame[r],
                        &e.embedding,
                        derive_seed(seed, "decode", r as u64),
                    )?;
                    energies.push(evaluator.energy(&x)?);
                    if problem.is_some() {
                        problem_energies.push(evaluator.problem_energy(&x)?);
                    }
                }
                logical.push(EnergyBatch::new(energies, b)?);
                if let Some(p) = problem.as_mut() {
                    p.push(EnergyBatch::new(problem_energies, b)?);
                }
            }
        }
    }
    Ok(SpecRun {
        logical,
        problem,
        f_se,
        programmings: readouts.programmings,
    })
}

/// Gauge 0 is the identity; gauge `k > 0` is drawn from `(gauge_seed, k)`.
pub fn scan_gauges(n: usize, n_gauges: usize, gauge_seed: u64) -> Result<Vec<Gauge>> {
    (0..n_gauges)
        .map(|k| {
            if k == 0 {
                Ok(Gauge::identity(n))
            } else {
                random_gauge(n, derive_seed(gauge_seed, "gauge", k as u64))
            }
        })
        .collect()
}

fn map_indexed<T: Send, F>(n: usize, f: F) -> Result<Vec<T>>
where
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Score and histogram in one energy frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameResult {
    pub score: EliteScore,
    pub summary: SpecSummary,
}

impl FrameResult {
    fn from_batches(id: SpecId, batches: &[EnergyBatch], epsilon: f64) -> Result<Self> {
        Ok(Self {
            score: elite_score_batched(batches, epsilon)?,
            summary: SpecSummary::from_batches(id, batches),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeScanEntry {
    pub id: SpecId,
    pub gauge: Gauge,
    /// Logical frame (`E_ising` for plain targets, `E_QUBO` after decoding for embedded ones).
    pub logical: FrameResult,
    /// `E_problem` frame, present for partitioned QUBOs.
    pub problem: Option<FrameResult>,
    pub f_se: Option<f64>,
    /// Positive-coefficient counts of the gauged hardware problem.
    pub counts: PositiveCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeScanResult {
    pub entries: Vec<GaugeScanEntry>,
    pub epsilon: f64,
    pub reads_per_gauge: usize,
    /// Total sampler programmings issued by the scan.
    pub sampler_invocations: usize,
}

impl GaugeScanResult {
    pub fn scores(&self) -> Vec<(SpecId, EliteScore)> {
        self.entries
            .iter()
            .map(|e| (e.id, e.logical.score))
            .collect()
    }

    pub fn summaries(&self) -> Vec<SpecSummary> {
        self.entries
            .iter()
            .map(|e| e.logical.summary.clone())
            .collect()
    }

    pub fn elite_rank(&self) -> Result<RankTable> {
        estimator_rank(&self.scores())
    }

    pub fn greedy_rank(&self) -> Result<RankTable> {
        greedy_rank(&self.summaries())
    }

    fn problem_frames(&self) -> Result<Vec<&FrameResult>> {
        self.entries
            .iter()
            .map(|e| e.problem.as_ref().ok_or(Error::MissingPartition))
            .collect()
    }

    pub fn gauge(&self, id: SpecId) -> Option<&Gauge> {
        self.entries.iter().find(|e| e.id == id).map(|e| &e.gauge)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeScanParams {
    pub n_gauges: usize,
    pub settings: ScanSettings,
    pub gauge_seed: u64,
    pub seed: u64,
}

/// Samples every gauge once with `settings.reads` reads and scores it.
pub fn gauge_scan(target: &Target, params: &GaugeScanParams) -> Result<GaugeScanResult> {
    if params.n_gauges < 2 {
        return Err(Error::validation("a gauge scan needs at least two gauges"));
    }
    let gauges = scan_gauges(target.num_spins(), params.n_gauges, params.gauge_seed)?;
    let chain_edges = target.chain_edges();
    let s = &params.settings;
    let entries = map_indexed(gauges.len(), |k| {
        let id = SpecId(k as u64);
        let gauge = &gauges[k];
        let run = run_spec(
            target,
            gauge,
            s.reads,
            &s.sampler,
            &s.noise,
            derive_seed(params.seed, "scan", k as u64),
        )?;
        let problem = run
            .problem
            .as_deref()
            .map(|b| FrameResult::from_batches(id, b, s.epsilon))
            .transpose()?;
        Ok((
            GaugeScanEntry {
                id,
                gauge: gauge.clone(),
                logical: FrameResult::from_batches(id, &run.logical, s.epsilon)?,
                problem,
                f_se: run.f_se,
                counts: PositiveCounts::of(&apply_gauge(target.hardware(), gauge)?, &chain_edges),
            },
            run.programmings,
        ))
    })?;
    let sampler_invocations = entries.iter().map(|(_, p)| p).sum();
    Ok(GaugeScanResult {
        entries: entries.into_iter().map(|(e, _)| e).collect(),
        epsilon: s.epsilon,
        reads_per_gauge: s.reads,
        sampler_invocations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JePoint {
    pub chain_strength: f64,
    pub score: EliteScore,
    pub f_se: f64,
    pub scale: f64,
    pub summary: SpecSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JeScanResult {
    pub points: Vec<JePoint>,
}

impl JeScanResult {
    /// `(J_E, f_SE)` pairs.
    pub fn curve(&self) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .map(|p| (p.chain_strength, p.f_se))
            .collect()
    }

    /// Candidate with the highest score among those inside `[lo, hi]`; ties go to the smaller J_E.
    pub fn best_within(&self, lo: f64, hi: f64) -> Option<&JePoint> {
        self.points
            .iter()
            .filter(|p| p.chain_strength >= lo && p.chain_strength <= hi)
            .fold(None, |best: Option<&JePoint>, p| match best {
                Some(b) if b.score.value >= p.score.value => Some(b),
                _ => Some(p),
            })
    }

    pub fn best(&self) -> Option<&JePoint> {
        self.best_within(f64::NEG_INFINITY, f64::INFINITY)
    }
}

/// Geometric grid of `count` chain strengths over `[lo, hi]`.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let ratio = (hi / lo).powf(1.0 / (count - 1) as f64);
    (0..count)
        .map(|k| {
            if k + 1 == count {
                hi
            } else {
                lo * ratio.powi(k as i32)
            }
        })
        .collect()
}

/// Default chain-strength candidates: 12 geometric points over `[0.5, 10]`.
pub fn default_je_candidates() -> Vec<f64> {
    geometric_grid(0.5, 10.0, 12)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JeScanParams {
    pub candidates: Vec<f64>,
    pub settings: ScanSettings,
    pub seed: u64,
}

/// Embeds, samples and scores the logical problem at each candidate `J_E`.
///
/// Scores use decoded logical energies, so they are comparable across
/// candidates even though each candidate is normalized differently.
/// Candidates share sampling seeds.
pub fn je_scan(
    logical: &LogicalObjective,
    embedding: &Embedding,
    graph: &HardwareGraph,
    gauge: &Gauge,
    params: &JeScanParams,
) -> Result<JeScanResult> {
    if params.candidates.len() < 2 {
        return Err(Error::validation(
            "a J_E scan needs at least two candidates",
        ));
    }
    if params.candidates.iter().any(|&c| c.is_nan() || c <= 0.0) {
        return Err(Error::validation("J_E candidates must be positive"));
    }
    let mut candidates = params.candidates.clone();
    candidates.sort_by(f64::total_cmp);
    let s = &params.settings;
    let seed = derive_seed(params.seed, "je-scan", 0);
    let points = map_indexed(candidates.len(), |k| {
        let je = candidates[k];
        let embedded = embed(logical, embedding, graph, je)?;
        let scale = embedded.scale;
        let run = run_spec(
            &Target::Embedded(embedded),
            gauge,
            s.reads,
            &s.sampler,
            &s.noise,
            seed,
        )?;
        Ok(JePoint {
            chain_strength: je,
            score: elite_score_batched(&run.logical, s.epsilon)?,
            f_se: run.f_se.unwrap_or(1.0),
            scale,
            summary: SpecSummary::from_batches(SpecId(k as u64), &run.logical),
        })
    })?;
    Ok(JeScanResult { points })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectMethod {
    Elite,
    Greedy,
}

/// First `k` ids of the chosen ranking.
pub fn select_top_k(
    result: &GaugeScanResult,
    k: usize,
    method: SelectMethod,
) -> Result<Vec<SpecId>> {
    if k > result.entries.len() {
        return Err(Error::validation(format!(
            "cannot select {k} of {} gauges",
            result.entries.len()
        )));
    }
    let ranks = match method {
        SelectMethod::Elite => result.elite_rank()?,
        SelectMethod::Greedy => result.greedy_rank()?,
    };
    Ok(ranks.top(k))
}

/// Union of the top `k` by elite score and the top `k` by the greedy
/// estimator, both computed on `E_problem`. Elite picks come first.
pub fn union_top_selection(result: &GaugeScanResult, k: usize) -> Result<Vec<SpecId>> {
    let frames = result.problem_frames()?;
    if k > frames.len() {
        return Err(Error::validation(format!(
            "cannot select {k} of {} gauges",
            frames.len()
        )));
    }
    let scores: Vec<_> = result
        .entries
        .iter()
        .zip(&frames)
        .map(|(e, f)| (e.id, f.score))
        .collect();
    let summaries: Vec<_> = frames.iter().map(|f| f.summary.clone()).collect();
    let mut selected = estimator_rank(&scores)?.top(k);
    for id in greedy_rank(&summaries)?.top(k) {
        if !selected.contains(&id) {
            selected.push(id);
        }
    }
    Ok(selected)
}

/// Extensive-run statistics of one selected gauge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensiveRun {
    pub id: SpecId,
    pub reads: u64,
    pub n_gs: u64,
    pub p_s: f64,
    pub r99: R99,
    pub lowest_energy: f64,
    pub stopped_early: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedGauge {
    pub id: SpecId,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JeCurvePoint {
    pub chain_strength: f64,
    pub f_se: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub chosen_je: Option<f64>,
    pub region: Option<(f64, f64)>,
    pub f_max: Option<f64>,
    pub je_curve: Vec<JeCurvePoint>,
    pub second_je: Option<f64>,
    pub second_je_curve: Vec<JeCurvePoint>,
    pub selected: Vec<SelectedGauge>,
    /// False when the budget did not exceed the scan reads; runs then come from scan data.
    pub extensive: bool,
    pub ground_energy: f64,
    pub runs: Vec<ExtensiveRun>,
    /// Selected gauge with the most ground states.
    pub best: Option<SpecId>,
}

/// What [`iterative_tune`] tunes.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum TuneTarget {
    Plain(IsingProblem),
    Embedded {
        logical: LogicalObjective,
        embedding: Embedding,
        graph: HardwareGraph,
        candidates: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneParams {
    pub n_gauges: usize,
    /// `N_reads` per gauge / candidate during scans.
    pub scan_reads: usize,
    /// `N_total` per selected gauge.
    pub total_reads: usize,
    pub epsilon: f64,
    pub top_k: usize,
    pub sampler: SamplerConfig,
    pub noise: NoiseModel,
    pub seed: u64,
    pub second_je_scan: bool,
    /// Stop a gauge's extensive run once a read at or below this energy appears.
    pub target_energy: Option<f64>,
    /// Known ground energy; defaults to the lowest energy observed.
    pub ground_energy: Option<f64>,
}

impl TuneParams {
    fn settings(&self) -> ScanSettings {
        ScanSettings {
            reads: self.scan_reads,
            epsilon: self.epsilon,
            sampler: self.sampler.clone(),
            noise: self.noise,
        }
    }
}

fn curve_points(scan: &JeScanResult) -> Vec<JeCurvePoint> {
    scan.points
        .iter()
        .map(|p| JeCurvePoint {
            chain_strength: p.chain_strength,
            f_se: p.f_se,
            score: p.score.value,
        })
        .collect()
}

/// Chain-strength selection, gauge scan, optional second J_E scan, then
/// extensive runs on the selected gauges.
pub fn iterative_tune(target: &TuneTarget, params: &TuneParams) -> Result<TuneReport> {
    let settings = params.settings();
    let mut report = TuneReport {
        chosen_je: None,
        region: None,
        f_max: None,
        je_curve: Vec::new(),
        second_je: None,
        second_je_curve: Vec::new(),
        selected: Vec::new(),
        extensive: params.total_reads > params.scan_reads,
        ground_energy: f64::NAN,
        runs: Vec::new(),
        best: None,
    };

    let scan_target = match target {
        TuneTarget::Plain(p) => Target::Plain(p.clone()),
        TuneTarget::Embedded {
            logical,
            embedding,
            graph,
            candidates,
        } => {
            let identity = Gauge::identity(graph.num_slots());
            let probe = embed(logical, embedding, graph, F_MAX_CHAIN_STRENGTH)?;
            let f_max = run_spec(
                &Target::Embedded(probe),
                &identity,
                params.scan_reads,
                &params.sampler,
                &params.noise,
                derive_seed(params.seed, "f-max", 0),
            )?
            .f_se
            .unwrap_or(1.0);
            let first = je_scan(
                logical,
                embedding,
                graph,
                &identity,
                &JeScanParams {
                    candidates: candidates.clone(),
                    settings: settings.clone(),
                    seed: derive_seed(params.seed, "je", 0),
                },
            )?;
            let curve = first.curve();
            if f_max == 0.0 {
                return Err(Error::RegionNotFound {
                    threshold: 0.0,
                    curve,
                });
            }
            let (lo, hi) = je_region_bounds(&curve, f_max)?;
            let chosen = first
                .best_within(lo, hi)
                .expect("region contains a candidate")
                .chain_strength;
            report.f_max = Some(f_max);
            report.region = Some((lo, hi));
            report.chosen_je = Some(chosen);
            report.je_curve = curve_points(&first);
            Target::Embedded(embed(logical, embedding, graph, chosen)?)
        }
    };

    let scan = gauge_scan(
        &scan_target,
        &GaugeScanParams {
            n_gauges: params.n_gauges,
            settings: settings.clone(),
            gauge_seed: derive_seed(params.seed, "gauges", 0),
            seed: derive_seed(params.seed, "gauge-scan", 0),
        },
    )?;

    let use_problem = scan_target.has_partition();
    let selected = if use_problem {
        union_top_selection(&scan, params.top_k)?
    } else {
        select_top_k(&scan, params.top_k, SelectMethod::Elite)?
    };
    let frame = |e: &GaugeScanEntry| -> FrameResult {
        if use_problem {
            e.problem
                .clone()
                .expect("partitioned target has problem frames")
        } else {
            e.logical.clone()
        }
    };
    report.selected = selected
        .iter()
        .map(|&id| SelectedGauge {
            id,
            score: frame(&scan.entries[id.0 as usize]).score.value,
        })
        .collect();

    if params.second_je_scan {
        if let TuneTarget::Embedded {
            logical,
            embedding,
            graph,
            candidates,
        } = target
        {
            let (lo, hi) = report.region.expect("embedded tuning sets a region");
            let in_region: Vec<f64> = candidates
                .iter()
                .copied()
                .filter(|&c| c >= lo && c <= hi)
                .collect();
            let top = scan.elite_rank()?.top(1)[0];
            if in_region.len() >= 2 {
                let second = je_scan(
                    logical,
                    embedding,
                    graph,
                    scan.gauge(top).expect("scanned gauge"),
                    &JeScanParams {
                        candidates: in_region,
                        settings: settings.clone(),
                        seed: derive_seed(params.seed, "je", 1),
                    },
                )?;
                report.second_je = second.best().map(|p| p.chain_strength);
                report.second_je_curve = curve_points(&second);
            } else {
                report.second_je = report.chosen_je;
            }
        }
    }

    let summaries: Vec<SpecSummary> = if report.extensive {
        map_indexed(selected.len(), |k| {
            let id = selected[k];
            extensive_summary(&scan_target, &scan, id, params, use_problem)
        })?
        .into_iter()
        .collect()
    } else {
        selected
            .iter()
            .map(|&id| frame(&scan.entries[id.0 as usize]).summary)
            .collect()
    };

    let ground = match params.ground_energy {
        Some(e) => e,
        None => {
            let scan_low = scan
                .entries
                .iter()
                .filter_map(|e| frame(e).summary.lowest())
                .map(|(e, _)| e);
            let run_low = summaries.iter().filter_map(|s| s.lowest()).map(|(e, _)| e);
            scan_low.chain(run_low).fold(f64::INFINITY, f64::min)
        }
    };
    report.ground_energy = ground;
    for summary in &summaries {
        let n_gs = summary.count_at_or_below(ground);
        let p_s = n_gs as f64 / summary.total() as f64;
        report.runs.push(ExtensiveRun {
            id: summary.spec_id,
            reads: summary.total(),
            n_gs,
            p_s,
            r99: r99(p_s)?,
            lowest_energy: summary.lowest().map_or(f64::NAN, |(e, _)| e),
            stopped_early: report.extensive && (summary.total() as usize) < params.total_reads,
        });
    }
    let greedy_order = greedy_rank(&summaries)?;
    report.best = report
        .runs
        .iter()
        .max_by(|a, b| {
            a.n_gs
                .cmp(&b.n_gs)
                .then_with(|| greedy_order.rank_of(b.id).cmp(&greedy_order.rank_of(a.id)))
        })
        .map(|r| r.id);
    Ok(report)
}

fn extensive_summary(
    target: &Target,
    scan: &GaugeScanResult,
    id: SpecId,
    params: &TuneParams,
    use_problem: bool,
) -> Result<SpecSummary> {
    let gauge = scan.gauge(id).expect("selected id comes from the scan");
    let run_seed = derive_seed(params.seed, "extensive", id.0);
    let chunk =
        crate::sampler::batch_plan(&params.sampler.with_reads(params.total_reads, run_seed))?
            .reads_per_batch;
    let mut summary = SpecSummary::new(id);
    let mut remaining = params.total_reads;
    let mut index = 0u64;
    while remaining > 0 {
        let reads = chunk.min(remaining);
        let run = run_spec(
            target,
            gauge,
            reads,
            &params.sampler,
            &params.noise,
            derive_seed(run_seed, "chunk", index),
        )?;
        let batches = if use_problem {
            run.problem.expect("partitioned")
        } else {
            run.logical
        };
        let energies: Vec<f64> = batches.into_iter().flat_map(|b| b.energies).collect();
        summary.extend(energies.iter().copied());
        remaining -= reads;
        index += 1;
        if let Some(target_energy) = params.target_energy {
            if energies.iter().any(|&e| e <= target_energy) {
                break;
            }
        }
    }
    Ok(summary)
}

/// How a containment experiment predicts the top gauges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum PredictMethod {
    Greedy,
    Elite { epsilon: f64 },
}

impl std::fmt::Display for PredictMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PredictMethod::Greedy => f.write_str("greedy"),
            PredictMethod::Elite { epsilon } => write!(f, "elite{epsilon}%"),
        }
    }
}

/// Indicator `m - 1` is true when any of the true top `m` gauges is in `predicted`.
pub fn containment_indicators(truth: &RankTable, predicted: &[SpecId], depth: usize) -> Vec<bool> {
    let mut hit = false;
    truth
        .top(depth)
        .into_iter()
        .map(|id| {
            hit |= predicted.contains(&id);
            hit
        })
        .collect()
}

/// Running tally of containment indicators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainmentTally {
    pub hits: Vec<u64>,
    pub experiments: u64,
}

impl ContainmentTally {
    pub fn new(depth: usize) -> Self {
        Self {
            hits: vec![0; depth],
            experiments: 0,
        }
    }

    pub fn record(&mut self, indicators: &[bool]) {
        for (h, &i) in self.hits.iter_mut().zip(indicators) {
            *h += u64::from(i);
        }
        self.experiments += 1;
    }

    pub fn fractions(&self) -> Vec<f64> {
        self.hits
            .iter()
            .map(|&h| {
                if self.experiments == 0 {
                    0.0
                } else {
                    h as f64 / self.experiments as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainmentRow {
    pub n_reads: usize,
    pub method: PredictMethod,
    /// Entry `m - 1`: fraction of experiments whose predicted top set holds any of the true top `m`.
    pub fractions: Vec<f64>,
    pub experiments: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainmentTable {
    pub n_gauges: usize,
    pub top: usize,
    pub total_reads: usize,
    pub truth: RankTable,
    /// True ground-state counts per gauge, for cross-checking the greedy truth.
    pub truth_n_gs: Vec<u64>,
    pub rows: Vec<ContainmentRow>,
}

impl ContainmentTable {
    pub fn row(&self, n_reads: usize, method: PredictMethod) -> Option<&ContainmentRow> {
        self.rows
            .iter()
            .find(|r| r.n_reads == n_reads && r.method == method)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainmentParams {
    pub n_gauges: usize,
    pub reads_grid: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub n_experiments: usize,
    pub total_reads: usize,
    /// Size of the predicted set (5 in the reference setup).
    pub top: usize,
    pub sampler: SamplerConfig,
    pub noise: NoiseModel,
    pub seed: u64,
}

/// Long-run ground truth for a fixed gauge set: greedy ranks plus per-gauge summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub ranks: RankTable,
    pub summaries: Vec<SpecSummary>,
    pub ground_energy: f64,
}

impl GroundTruth {
    pub fn n_gs(&self) -> Vec<u64> {
        self.summaries
            .iter()
            .map(|s| s.count_at(self.ground_energy))
            .collect()
    }
}

/// Samples every gauge `total_reads` times and ranks with the greedy comparator.
pub fn ground_truth(
    target: &Target,
    gauges: &[Gauge],
    total_reads: usize,
    sampler: &SamplerConfig,
    noise: &NoiseModel,
    seed: u64,
) -> Result<GroundTruth> {
    let summaries = map_indexed(gauges.len(), |k| {
        let run = run_spec(
            target,
            &gauges[k],
            total_reads,
            sampler,
            noise,
            derive_seed(seed, "truth", k as u64),
        )?;
        Ok(SpecSummary::from_batches(SpecId(k as u64), &run.logical))
    })?;
    let ground_energy = summaries
        .iter()
        .filter_map(|s| s.lowest())
        .map(|(e, _)| e)
        .fold(f64::INFINITY, f64::min);
    Ok(GroundTruth {
        ranks: greedy_rank(&summaries)?,
        summaries,
        ground_energy,
    })
}

/// Fractions of experiments in which each method's predicted top set contains
/// the true top-1, any of the true top-2, and so on.
pub fn containment_experiment(
    target: &Target,
    params: &ContainmentParams,
) -> Result<ContainmentTable> {
    check_containment(params)?;
    let gauges = scan_gauges(
        target.num_spins(),
        params.n_gauges,
        derive_seed(params.seed, "gauges", 0),
    )?;
    let truth = ground_truth(
        target,
        &gauges,
        params.total_reads,
        &params.sampler,
        &params.noise,
        params.seed,
    )?;
    containment_with_truth(target, &gauges, &truth, params)
}

fn check_containment(params: &ContainmentParams) -> Result<()> {
    if params.top == 0 || params.top > params.n_gauges {
        return Err(Error::validation(
            "predicted set size must lie in 1..=n_gauges",
        ));
    }
    if let Some(&max) = params.reads_grid.iter().max() {
        if params.total_reads <= max {
            return Err(Error::validation(
                "total_reads must exceed every N_reads in the grid",
            ));
        }
    }
    Ok(())
}

/// [`containment_experiment`] against an existing ground truth for `gauges`.
pub fn containment_with_truth(
    target: &Target,
    gauges: &[Gauge],
    truth: &GroundTruth,
    params: &ContainmentParams,
) -> Result<ContainmentTable> {
    check_containment(params)?;
    if gauges.len() != params.n_gauges || truth.summaries.len() != gauges.len() {
        return Err(Error::validation(
            "gauge set, ground truth and n_gauges disagree",
        ));
    }
    let mut methods = vec![PredictMethod::Greedy];
    methods.extend(
        params
            .epsilons
            .iter()
            .map(|&epsilon| PredictMethod::Elite { epsilon }),
    );

    let mut rows = Vec::new();
    for (g, &n_reads) in params.reads_grid.iter().enumerate() {
        let mut tallies = vec![ContainmentTally::new(params.top); methods.len()];
        for e in 0..params.n_experiments {
            let exp_seed = derive_seed(
                derive_seed(params.seed, "experiment", e as u64),
                "grid",
                g as u64,
            );
            let runs = map_indexed(gauges.len(), |k| {
                run_spec(
                    target,
                    &gauges[k],
                    n_reads,
                    &params.sampler,
                    &params.noise,
                    derive_seed(exp_seed, "gauge", k as u64),
                )
            })?;
            for (m, method) in methods.iter().enumerate() {
                let ranks = predict(&runs, *method)?;
                tallies[m].record(&containment_indicators(
                    &truth.ranks,
                    &ranks.top(params.top),
                    params.top,
                ));
            }
        }
        for (method, tally) in methods.iter().zip(tallies) {
            rows.push(ContainmentRow {
                n_reads,
                method: *method,
                fractions: tally.fractions(),
                experiments: tally.experiments,
            });
        }
    }
    Ok(ContainmentTable {
        n_gauges: params.n_gauges,
        top: params.top,
        total_reads: params.total_reads,
        truth_n_gs: truth.n_gs(),
        truth: truth.ranks.clone(),
        rows,
    })
}

fn predict(runs: &[SpecRun], method: PredictMethod) -> Result<RankTable> {
    match method {
        PredictMethod::Greedy => {
            let summaries: Vec<_> = runs
                .iter()
                .enumerate()
                .map(|(k, r)| SpecSummary::from_batches(SpecId(k as u64), &r.logical))
                .collect();
            greedy_rank(&summaries)
        }
        PredictMethod::Elite { epsilon } => {
            let scores = runs
                .iter()
                .enumerate()
                .map(|(k, r)| Ok((SpecId(k as u64), elite_score_batched(&r.logical, epsilon)?)))
                .collect::<Result<Vec<_>>>()?;
            estimator_rank(&scores)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountKind {
    AllCouplers,
    NonChainCouplers,
    ChainCouplers,
    Fields,
}

impl CountKind {
    pub const ALL: [CountKind; 4] = [
        CountKind::AllCouplers,
        CountKind::NonChainCouplers,
        CountKind::ChainCouplers,
        CountKind::Fields,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CountKind::AllCouplers => "j_positive",
            CountKind::NonChainCouplers => "j_positive_non_chain",
            CountKind::ChainCouplers => "j_positive_chain",
            CountKind::Fields => "h_positive",
        }
    }

    fn pick(self, c: &PositiveCounts) -> usize {
        match self {
            CountKind::AllCouplers => c.all_couplers,
            CountKind::NonChainCouplers => c.non_chain_couplers,
            CountKind::ChainCouplers => c.chain_couplers,
            CountKind::Fields => c.fields,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplerCorrelation {
    pub kind: CountKind,
    pub rho: f64,
    /// True when every gauge had the same count, so `rho` is reported as 0.
    pub degenerate: bool,
}

/// Spearman correlation between each positive-coefficient count and the performance rank.
pub fn correlate_positive_couplers(
    scan: &GaugeScanResult,
    performance: &RankTable,
) -> Result<Vec<CouplerCorrelation>> {
    if scan.entries.len() < 10 {
        return Err(Error::validation(
            "correlation study needs at least 10 gauges",
        ));
    }
    let ranks = performance.by_id();
    let rank_values = scan
        .entries
        .iter()
        .map(|e| {
            ranks.get(&e.id).map(|&r| r as f64).ok_or_else(|| {
                Error::validation(format!("gauge {} missing from performance ranks", e.id))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    CountKind::ALL
        .iter()
        .map(|&kind| {
            let counts: Vec<f64> = scan
                .entries
                .iter()
                .map(|e| kind.pick(&e.counts) as f64)
                .collect();
            match spearman_values(&counts, &rank_values) {
                Ok(rho) => Ok(CouplerCorrelation {
                    kind,
                    rho,
                    degenerate: false,
                }),
                Err(Error::UndefinedCorrelation) => Ok(CouplerCorrelation {
                    kind,
                    rho: 0.0,
                    degenerate: true,
                }),
                Err(e) => Err(e),
            }
        })
        .collect()
}
