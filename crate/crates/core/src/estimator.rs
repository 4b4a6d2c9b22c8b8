//! Score functions and rankings over readout energies.
//!
//! The elite mean scores a specification by the negated mean of its lowest
//! `epsilon` percent of energies; the greedy comparator ranks specifications by
//! walking their energy histograms from the lowest energy up.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::ENERGY_DECIMALS;

/// Identifier of a Hamiltonian specification (a gauge, a J_E candidate, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpecId(pub u64);

impl fmt::Display for SpecId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Energy rounded to [`ENERGY_DECIMALS`] places, stored as an integer count of
/// `10^-12` units so equality and ordering are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EnergyKey(i128);

impl EnergyKey {
    pub fn from_energy(e: f64) -> Self {
        Self((e * 10f64.powi(ENERGY_DECIMALS)).round() as i128)
    }

    pub fn energy(self) -> f64 {
        self.0 as f64 / 10f64.powi(ENERGY_DECIMALS)
    }
}

/// Energies of one batch of readouts, in any order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBatch {
    pub energies: Vec<f64>,
    pub batch_index: usize,
}

impl EnergyBatch {
    pub fn new(energies: Vec<f64>, batch_index: usize) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::validation("energy batch is empty"));
        }
        Ok(Self {
            energies,
            batch_index,
        })
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }
}

/// Elite-mean score of one specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EliteScore {
    pub value: f64,
    pub epsilon: f64,
    /// Reads per batch.
    pub n_reads: usize,
    pub n_reps: usize,
}

impl EliteScore {
    pub fn n_elite(&self) -> usize {
        n_elite(self.epsilon, self.n_reads)
    }

    pub fn total_reads(&self) -> usize {
        self.n_reads * self.n_reps
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 100.0) {
        return Err(Error::validation(format!(
            "epsilon must lie in (0, 100], got {epsilon}"
        )));
    }
    Ok(())
}

/// `ceil(epsilon * n_reads / 100)`, at least 1.
pub fn n_elite(epsilon: f64, n_reads: usize) -> usize {
    let raw = (epsilon * n_reads as f64 / 100.0).ceil() as usize;
    raw.clamp(1, n_reads.max(1))
}

/// Negated mean of the lowest `epsilon` percent of the batch energies.
pub fn elite_mean(batch: &EnergyBatch, epsilon: f64) -> Result<EliteScore> {
    check_epsilon(epsilon)?;
    if batch.is_empty() {
        return Err(Error::validation("energy batch is empty"));
    }
    let n_reads = batch.len();
    let k = n_elite(epsilon, n_reads);
    let mut sorted = batch.energies.clone();
    sorted.sort_by(f64::total_cmp);
    let sum: f64 = sorted[..k].iter().sum();
    Ok(EliteScore {
        value: -sum / k as f64,
        epsilon,
        n_reads,
        n_reps: 1,
    })
}

/// Average of per-batch elite means over equally sized batches.
pub fn elite_score_batched(batches: &[EnergyBatch], epsilon: f64) -> Result<EliteScore> {
    let first = batches
        .first()
        .ok_or_else(|| Error::validation("at least one batch is required"))?;
    if let Some(bad) = batches.iter().find(|b| b.len() != first.len()) {
        return Err(Error::validation(format!(
            "unequal batch sizes: {} vs {}",
            first.len(),
            bad.len()
        )));
    }
    if batches.len() == 1 {
        return elite_mean(first, epsilon);
    }
    let mut total = 0.0;
    for batch in batches {
        total += elite_mean(batch, epsilon)?.value;
    }
    Ok(EliteScore {
        value: total / batches.len() as f64,
        epsilon,
        n_reads: first.len(),
        n_reps: batches.len(),
    })
}

/// Energy histogram of every read collected for one specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecSummary {
    pub spec_id: SpecId,
    histogram: BTreeMap<EnergyKey, u64>,
    total: u64,
}

impl SpecSummary {
    pub fn new(spec_id: SpecId) -> Self {
        Self {
            spec_id,
            histogram: BTreeMap::new(),
            total: 0,
        }
    }

    pub fn from_energies<'a>(spec_id: SpecId, energies: impl IntoIterator<Item = &'a f64>) -> Self {
        let mut summary = Self::new(spec_id);
        summary.extend(energies.into_iter().copied());
        summary
    }

    pub fn from_batches(spec_id: SpecId, batches: &[EnergyBatch]) -> Self {
        Self::from_energies(spec_id, batches.iter().flat_map(|b| &b.energies))
    }

    pub fn record(&mut self, energy: f64) {
        *self
            .histogram
            .entry(EnergyKey::from_energy(energy))
            .or_insert(0) += 1;
        self.total += 1;
    }

    pub fn extend(&mut self, energies: impl IntoIterator<Item = f64>) {
        for e in energies {
            self.record(e);
        }
    }

    pub fn merge(&mut self, other: &SpecSummary) {
        for (&k, &c) in &other.histogram {
            *self.histogram.entry(k).or_insert(0) += c;
        }
        self.total += other.total;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// `(energy, count)` pairs from the lowest energy up.
    pub fn levels(&self) -> impl Iterator<Item = (f64, u64)> + '_ {
        self.histogram.iter().map(|(k, &c)| (k.energy(), c))
    }

    pub fn histogram(&self) -> &BTreeMap<EnergyKey, u64> {
        &self.histogram
    }

    pub fn lowest(&self) -> Option<(f64, u64)> {
        self.levels().next()
    }

    pub fn count_at(&self, energy: f64) -> u64 {
        self.histogram
            .get(&EnergyKey::from_energy(energy))
            .copied()
            .unwrap_or(0)
    }

    /// Number of reads at or below `energy`.
    pub fn count_at_or_below(&self, energy: f64) -> u64 {
        self.histogram
            .range(..=EnergyKey::from_energy(energy))
            .map(|(_, &c)| c)
            .sum()
    }
}

/// `n_gs / N_total`, where `n_gs` counts reads at `ground_energy`.
pub fn success_probability(summary: &SpecSummary, ground_energy: f64) -> Result<f64> {
    if summary.total() == 0 {
        return Err(Error::validation("summary has no reads"));
    }
    Ok(summary.count_at(ground_energy) as f64 / summary.total() as f64)
}

/// Reads needed to observe the ground state at least once with 99% probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum R99 {
    Finite(u64),
    /// No ground state was ever observed.
    Unbounded,
}

impl fmt::Display for R99 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            R99::Finite(n) => write!(f, "{n}"),
            R99::Unbounded => f.write_str("inf"),
        }
    }
}

/// `ceil(ln(0.01) / ln(1 - p_s))`.
pub fn r99(p_s: f64) -> Result<R99> {
    if !(0.0..=1.0).contains(&p_s) {
        return Err(Error::validation(format!(
            "success probability {p_s} outside [0, 1]"
        )));
    }
    if p_s == 0.0 {
        return Ok(R99::Unbounded);
    }
    if p_s >= 0.99 {
        return Ok(R99::Finite(1));
    }
    let reps = (0.01f64.ln() / (-p_s).ln_1p()).ceil();
    Ok(R99::Finite(reps as u64))
}

/// Position of each specification in a ranking; rank 1 is best.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub spec_id: SpecId,
    pub rank: usize,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    entries: Vec<RankEntry>,
}

impl RankTable {
    /// Builds a table from ids listed best-first.
    pub fn from_order(order: impl IntoIterator<Item = (SpecId, Option<f64>)>) -> Self {
        Self {
            entries: order
                .into_iter()
                .enumerate()
                .map(|(i, (spec_id, score))| RankEntry {
                    spec_id,
                    rank: i + 1,
                    score,
                })
                .collect(),
        }
    }

    pub fn entries(&self) -> &[RankEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn top(&self, k: usize) -> Vec<SpecId> {
        self.entries.iter().take(k).map(|e| e.spec_id).collect()
    }

    pub fn rank_of(&self, id: SpecId) -> Option<usize> {
        self.entries
            .iter()
            .find(|e| e.spec_id == id)
            .map(|e| e.rank)
    }

    /// Ranks keyed by id.
    pub fn by_id(&self) -> BTreeMap<SpecId, usize> {
        self.entries.iter().map(|e| (e.spec_id, e.rank)).collect()
    }
}

/// Greedy comparison of two histograms; `Ordering::Less` means `a` is better.
///
/// Levels are compared pairwise from the lowest energy: a lower energy wins,
/// at equal energy a higher count wins. Comparison stops when either
/// histogram runs out of levels, leaving a tie.
pub fn greedy_cmp(a: &SpecSummary, b: &SpecSummary) -> Ordering {
    for ((ea, ca), (eb, cb)) in a.histogram.iter().zip(b.histogram.iter()) {
        match ea.cmp(eb).then_with(|| cb.cmp(ca)) {
            Ordering::Equal => continue,
            decided => return decided,
        }
    }
    Ordering::Equal
}

/// Ranks specifications with the greedy comparator; residual ties go to the smaller id.
pub fn greedy_rank(summaries: &[SpecSummary]) -> Result<RankTable> {
    if let Some(empty) = summaries.iter().find(|s| s.total() == 0) {
        return Err(Error::validation(format!(
            "spec {} has no reads",
            empty.spec_id
        )));
    }
    let mut order: Vec<&SpecSummary> = summaries.iter().collect();
    order.sort_by(|a, b| greedy_cmp(a, b).then_with(|| a.spec_id.cmp(&b.spec_id)));
    Ok(RankTable::from_order(
        order.into_iter().map(|s| (s.spec_id, None)),
    ))
}

/// The greedy comparator applied to small-sample summaries: the
/// `100 / N_reads` percentile estimator.
pub fn greedy_estimator_rank(summaries: &[SpecSummary]) -> Result<RankTable> {
    greedy_rank(summaries)
}

/// Ranks by descending elite score; ties go to the smaller id.
pub fn estimator_rank(scores: &[(SpecId, EliteScore)]) -> Result<RankTable> {
    if let Some((_, first)) = scores.first() {
        if let Some((id, bad)) = scores.iter().find(|(_, s)| {
            s.epsilon != first.epsilon || s.n_reads != first.n_reads || s.n_reps != first.n_reps
        }) {
            return Err(Error::validation(format!(
                "spec {id} scored with epsilon={} n_reads={} n_reps={}, expected epsilon={} n_reads={} n_reps={}",
                bad.epsilon, bad.n_reads, bad.n_reps, first.epsilon, first.n_reads, first.n_reps
            )));
        }
    }
    let mut order: Vec<&(SpecId, EliteScore)> = scores.iter().collect();
    order.sort_by(|a, b| b.1.value.total_cmp(&a.1.value).then_with(|| a.0.cmp(&b.0)));
    Ok(RankTable::from_order(
        order.into_iter().map(|(id, s)| (*id, Some(s.value))),
    ))
}

/// Average ("fractional") ranks, 1-based.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman correlation of two samples with average-rank tie handling.
pub fn spearman_values(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::validation(format!(
            "sample sizes differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::validation(
            "spearman needs at least two observations",
        ));
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Spearman correlation between two rankings of the same specifications.
pub fn spearman(r1: &RankTable, r2: &RankTable) -> Result<f64> {
    let a = r1.by_id();
    let b = r2.by_id();
    if a.len() != r1.len() || b.len() != r2.len() {
        return Err(Error::validation("rank table lists a spec twice"));
    }
    if !a.keys().eq(b.keys()) {
        return Err(Error::validation("rank tables cover different specs"));
    }
    let x: Vec<f64> = a.values().map(|&r| r as f64).collect();
    let y: Vec<f64> = b.values().map(|&r| r as f64).collect();
    spearman_values(&x, &y)
}
