//! Chain embeddings of logical problems into a hardware graph.
//!
//! Each logical variable is represented by a connected chain of hardware
//! qubits held together by ferromagnetic couplers of strength `J_E`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ChimeraSpec, HardwareGraph, Partition, QubitCoord};
use crate::ising::{normalize_dynamic_range, qubo_to_ising, IsingProblem, Qubo, SpinConfig};
use crate::sampler::ReadoutSet;
use crate::seed::{coin, derive_seed};

/// Lower strict-embedding threshold defining `J*_E`.
pub const SE_LOWER_THRESHOLD: f64 = 0.05;
/// Fraction of `f_max` at which the plateau is taken to begin (`J**_E`).
pub const PLATEAU_ONSET_FRACTION: f64 = 0.95;
/// Chain strength used for the one-shot `f_max` measurement.
pub const F_MAX_CHAIN_STRENGTH: f64 = 10.0;

/// Map from logical variable `k` to its chain of hardware qubits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(
    try_from = "BTreeMap<usize, Vec<usize>>",
    into = "BTreeMap<usize, Vec<usize>>"
)]
pub struct Embedding {
    chains: Vec<Vec<usize>>,
}

impl Embedding {
    /// Chains must be non-empty and pairwise disjoint.
    pub fn new(chains: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut sorted = Vec::with_capacity(chains.len());
        for (k, chain) in chains.into_iter().enumerate() {
            if chain.is_empty() {
                return Err(Error::Embedding(format!("chain of variable {k} is empty")));
            }
            for &q in &chain {
                if !seen.insert(q) {
                    return Err(Error::Embedding(format!(
                        "qubit {q} belongs to more than one chain"
                    )));
                }
            }
            let mut chain = chain;
            chain.sort_unstable();
            sorted.push(chain);
        }
        Ok(Self { chains: sorted })
    }

    /// Every logical variable `k` maps to hardware qubit `k`.
    pub fn identity(n: usize) -> Self {
        Self {
            chains: (0..n).map(|k| vec![k]).collect(),
        }
    }

    pub fn chains(&self) -> &[Vec<usize>] {
        &self.chains
    }

    pub fn chain(&self, var: usize) -> &[usize] {
        &self.chains[var]
    }

    pub fn num_logical(&self) -> usize {
        self.chains.len()
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.chains.iter().flatten().copied().max()
    }

    /// Hardware edges joining qubits of the same chain, in graph edge order.
    pub fn chain_edges(&self, graph: &HardwareGraph) -> Vec<(usize, usize)> {
        let owner = self.owner_map(graph.num_slots());
        graph
            .edges()
            .iter()
            .copied()
            .filter(|&(a, b)| owner[a].is_some() && owner[a] == owner[b])
            .collect()
    }

    fn owner_map(&self, num_slots: usize) -> Vec<Option<usize>> {
        let mut owner = vec![None; num_slots];
        for (k, chain) in self.chains.iter().enumerate() {
            for &q in chain {
                if q < num_slots {
                    owner[q] = Some(k);
                }
            }
        }
        owner
    }

    /// Checks qubit membership and chain connectivity against `graph`.
    pub fn validate_on(&self, graph: &HardwareGraph) -> Result<()> {
        for (k, chain) in self.chains.iter().enumerate() {
            if let Some(&q) = chain.iter().find(|&&q| !graph.contains_node(q)) {
                return Err(Error::Embedding(format!(
                    "chain {k} uses unavailable qubit {q}"
                )));
            }
            let members: BTreeSet<usize> = chain.iter().copied().collect();
            let mut reached = BTreeSet::from([chain[0]]);
            let mut queue = VecDeque::from([chain[0]]);
            while let Some(q) = queue.pop_front() {
                for &nb in graph.neighbors(q) {
                    if members.contains(&nb) && reached.insert(nb) {
                        queue.push_back(nb);
                    }
                }
            }
            if reached.len() != members.len() {
                return Err(Error::Embedding(format!("chain {k} is not connected")));
            }
        }
        Ok(())
    }
}

impl TryFrom<BTreeMap<usize, Vec<usize>>> for Embedding {
    type Error = Error;

    fn try_from(map: BTreeMap<usize, Vec<usize>>) -> Result<Self> {
        if let Some((pos, (&k, _))) = map.iter().enumerate().find(|(pos, (&k, _))| *pos != k) {
            return Err(Error::Embedding(format!(
                "logical variables must be numbered 0..n; found {k} at position {pos}"
            )));
        }
        Self::new(map.into_values().collect())
    }
}

impl From<Embedding> for BTreeMap<usize, Vec<usize>> {
    fn from(e: Embedding) -> Self {
        e.chains.into_iter().enumerate().collect()
    }
}

/// Test-fixture embedding: pairs left qubit `k` with right qubit `k` of every
/// unit cell. Returns the embedding and the logical edges it supports.
///
/// Only cells whose paired qubits are all present are used.
pub fn paired_chain_fixture(
    spec: &ChimeraSpec,
    graph: &HardwareGraph,
) -> (Embedding, Vec<(usize, usize)>) {
    let mut chains = Vec::new();
    for row in 0..spec.rows {
        for col in 0..spec.cols {
            for index in 0..spec.shore {
                let left = spec.qubit_id(QubitCoord {
                    row,
                    col,
                    partition: Partition::Left,
                    index,
                });
                let right = spec.qubit_id(QubitCoord {
                    row,
                    col,
                    partition: Partition::Right,
                    index,
                });
                if graph.contains_node(left) && graph.contains_node(right) {
                    chains.push(vec![left, right]);
                }
            }
        }
    }
    let embedding = Embedding::new(chains).expect("paired chains are disjoint");
    let owner = embedding.owner_map(graph.num_slots());
    let mut logical_edges = BTreeSet::new();
    for &(a, b) in graph.edges() {
        if let (Some(u), Some(v)) = (owner[a], owner[b]) {
            if u != v {
                logical_edges.insert((u.min(v), u.max(v)));
            }
        }
    }
    (embedding, logical_edges.into_iter().collect())
}

/// The logical objective a hardware problem was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogicalObjective {
    Ising(IsingProblemData),
    Qubo(Qubo),
}

/// Serializable snapshot of an [`IsingProblem`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingProblemData {
    pub h: Vec<f64>,
    pub couplings: Vec<(usize, usize, f64)>,
    pub offset: f64,
}

impl From<&IsingProblem> for IsingProblemData {
    fn from(p: &IsingProblem) -> Self {
        Self {
            h: p.h().to_vec(),
            couplings: p.couplings().iter().map(|c| (c.i, c.j, c.value)).collect(),
            offset: p.offset(),
        }
    }
}

impl TryFrom<&IsingProblemData> for IsingProblem {
    type Error = Error;

    fn try_from(d: &IsingProblemData) -> Result<Self> {
        IsingProblem::new(d.h.clone(), d.couplings.iter().copied(), d.offset)
    }
}

impl LogicalObjective {
    pub fn from_ising(p: &IsingProblem) -> Self {
        LogicalObjective::Ising(p.into())
    }

    pub fn num_vars(&self) -> usize {
        match self {
            LogicalObjective::Ising(d) => d.h.len(),
            LogicalObjective::Qubo(q) => q.n(),
        }
    }

    /// Ising form of the objective, offset included.
    pub fn to_ising(&self) -> Result<IsingProblem> {
        match self {
            LogicalObjective::Ising(d) => IsingProblem::try_from(d),
            LogicalObjective::Qubo(q) => Ok(qubo_to_ising(q).0),
        }
    }

    /// Full logical energy (`E_QUBO` for QUBO inputs).
    pub fn energy(&self, s: &SpinConfig) -> Result<f64> {
        match self {
            LogicalObjective::Ising(d) => IsingProblem::try_from(d)?.energy(s),
            LogicalObjective::Qubo(q) => q.energy(&s.to_binary()),
        }
    }

    /// Problem-variable energy; requires a partitioned QUBO.
    pub fn problem_energy(&self, s: &SpinConfig) -> Result<f64> {
        match self {
            LogicalObjective::Ising(_) => Err(Error::MissingPartition),
            LogicalObjective::Qubo(q) => q.problem_energy(&s.to_binary()),
        }
    }

    pub fn has_partition(&self) -> bool {
        matches!(self, LogicalObjective::Qubo(q) if q.partition().is_some())
    }
}

/// Evaluates logical energies quickly for many reads.
#[derive(Debug, Clone)]
pub(crate) struct LogicalEvaluator {
    ising: Option<IsingProblem>,
    qubo: Option<Qubo>,
}

impl LogicalEvaluator {
    pub(crate) fn new(obj: &LogicalObjective) -> Result<Self> {
        Ok(match obj {
            LogicalObjective::Ising(d) => Self {
                ising: Some(IsingProblem::try_from(d)?),
                qubo: None,
            },
            LogicalObjective::Qubo(q) => Self {
                ising: None,
                qubo: Some(q.clone()),
            },
        })
    }

    pub(crate) fn energy(&self, s: &SpinConfig) -> Result<f64> {
        match (&self.ising, &self.qubo) {
            (Some(p), _) => p.energy(s),
            (_, Some(q)) => q.energy(&s.to_binary()),
            _ => unreachable!(),
        }
    }

    pub(crate) fn problem_energy(&self, s: &SpinConfig) -> Result<f64> {
        match &self.qubo {
            Some(q) => q.problem_energy(&s.to_binary()),
            None => Err(Error::MissingPartition),
        }
    }
}

/// A logical problem placed on hardware with chain penalty `J_E`, normalized
/// to the device range.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedProblem {
    pub hardware: IsingProblem,
    pub embedding: Embedding,
    pub chain_strength: f64,
    pub scale: f64,
    pub logical: LogicalObjective,
    pub chain_edges: BTreeSet<(usize, usize)>,
}

impl EmbeddedProblem {
    pub fn num_chain_edges(&self) -> usize {
        self.chain_edges.len()
    }
}

/// Embeds `logical` with chain strength `chain_strength` (the magnitude `J_E > 0`).
///
/// Logical fields are split equally over the chain's qubits, logical couplings
/// equally over the hardware edges joining the two chains, and every
/// intra-chain edge gets `-J_E`. The result is then normalized.
pub fn embed(
    logical: &LogicalObjective,
    emb: &Embedding,
    graph: &HardwareGraph,
    chain_strength: f64,
) -> Result<EmbeddedProblem> {
    if chain_strength.is_nan() || chain_strength <= 0.0 {
        return Err(Error::validation(format!(
            "J_E must be positive, got {chain_strength}"
        )));
    }
    let ising = logical.to_ising()?;
    if emb.num_logical() != ising.n() {
        return Err(Error::Embedding(format!(
            "embedding has {} chains, logical problem has {} variables",
            emb.num_logical(),
            ising.n()
        )));
    }
    emb.validate_on(graph)?;
    let owner = emb.owner_map(graph.num_slots());

    let mut between: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    let mut chain_edges = BTreeSet::new();
    for &(a, b) in graph.edges() {
        match (owner[a], owner[b]) {
            (Some(u), Some(v)) if u == v => {
                chain_edges.insert((a, b));
            }
            (Some(u), Some(v)) => between
                .entry((u.min(v), u.max(v)))
                .or_default()
                .push((a, b)),
            _ => {}
        }
    }

    let mut h = vec![0.0; graph.num_slots()];
    for (k, chain) in emb.chains().iter().enumerate() {
        let share = ising.h()[k] / chain.len() as f64;
        for &q in chain {
            h[q] = share;
        }
    }
    let mut couplings: Vec<(usize, usize, f64)> = chain_edges
        .iter()
        .map(|&(a, b)| (a, b, -chain_strength))
        .collect();
    for c in ising.couplings() {
        let edges = between.get(&(c.i, c.j)).ok_or_else(|| {
            Error::Embedding(format!(
                "no hardware edge joins the chains of logical pair ({}, {})",
                c.i, c.j
            ))
        })?;
        let share = c.value / edges.len() as f64;
        couplings.extend(edges.iter().map(|&(a, b)| (a, b, share)));
    }
    let raw = IsingProblem::new(h, couplings, ising.offset())?;
    let (hardware, scale) = normalize_dynamic_range(&raw)?;
    Ok(EmbeddedProblem {
        hardware,
        embedding: emb.clone(),
        chain_strength,
        scale,
        logical: logical.clone(),
        chain_edges,
    })
}

/// Hardware state with every chain set to its logical spin; other qubits +1.
pub fn lift(x: &SpinConfig, emb: &Embedding, num_slots: usize) -> Result<SpinConfig> {
    if x.len() != emb.num_logical() {
        return Err(Error::validation(
            "logical config size does not match embedding",
        ));
    }
    let mut s = vec![1i8; num_slots];
    for (k, chain) in emb.chains().iter().enumerate() {
        for &q in chain {
            s[q] = x.as_slice()[k];
        }
    }
    Ok(SpinConfig::from_raw(s))
}

/// Decodes each chain to the sign of its spin sum. An exact tie is settled by a
/// fair coin keyed by `(tie_seed, chain index)`.
pub fn majority_vote_decode(
    s_hw: &SpinConfig,
    emb: &Embedding,
    tie_seed: u64,
) -> Result<SpinConfig> {
    if emb.max_qubit().is_some_and(|q| q >= s_hw.len()) {
        return Err(Error::validation(
            "hardware config does not cover every chain qubit",
        ));
    }
    let spins = s_hw.as_slice();
    let logical = emb
        .chains()
        .iter()
        .enumerate()
        .map(|(k, chain)| {
            let sum: i32 = chain.iter().map(|&q| i32::from(spins[q])).sum();
            match sum.signum() {
                1 => 1,
                -1 => -1,
                _ => {
                    if coin(derive_seed(tie_seed, "tie", k as u64)) {
                        1
                    } else {
                        -1
                    }
                }
            }
        })
        .collect();
    Ok(SpinConfig::from_raw(logical))
}

/// True when every chain is internally uniform.
pub fn chains_aligned(s_hw: &SpinConfig, emb: &Embedding) -> bool {
    let spins = s_hw.as_slice();
    emb.chains()
        .iter()
        .all(|chain| chain.iter().all(|&q| spins[q] == spins[chain[0]]))
}

/// Strict-embedding outcome for a readout set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SEReport {
    pub f_se: f64,
    pub passed: Vec<bool>,
    pub bounds: Option<(f64, f64)>,
}

/// Fraction of reads in which every chain is aligned.
pub fn strict_embedding_fraction(readouts: &ReadoutSet, emb: &Embedding) -> Result<SEReport> {
    strict_embedding_fraction_of(&readouts.configs, emb)
}

pub fn strict_embedding_fraction_of(configs: &[SpinConfig], emb: &Embedding) -> Result<SEReport> {
    if configs.is_empty() {
        return Err(Error::validation("no readouts"));
    }
    if let Some(max) = emb.max_qubit() {
        if configs.iter().any(|s| s.len() <= max) {
            return Err(Error::validation(
                "readout does not cover every chain qubit",
            ));
        }
    }
    let passed: Vec<bool> = configs.iter().map(|s| chains_aligned(s, emb)).collect();
    let f_se = passed.iter().filter(|&&p| p).count() as f64 / passed.len() as f64;
    Ok(SEReport {
        f_se,
        passed,
        bounds: None,
    })
}

/// `(J*_E, J**_E)` with the default thresholds.
pub fn je_region_bounds(curve: &[(f64, f64)], f_max: f64) -> Result<(f64, f64)> {
    je_region_bounds_with(curve, f_max, SE_LOWER_THRESHOLD, PLATEAU_ONSET_FRACTION)
}

/// `J*_E` is the smallest candidate with `f_SE >= lower`; `J**_E` the smallest
/// with `f_SE >= onset * f_max`, never below `J*_E`.
pub fn je_region_bounds_with(
    curve: &[(f64, f64)],
    f_max: f64,
    lower: f64,
    onset: f64,
) -> Result<(f64, f64)> {
    if !(f_max > 0.0 && f_max <= 1.0) {
        return Err(Error::validation(format!(
            "f_max must lie in (0, 1], got {f_max}"
        )));
    }
    if curve.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::validation(
            "J_E curve must be sorted by strictly increasing J_E",
        ));
    }
    let lo = curve
        .iter()
        .find(|&&(_, f)| f >= lower)
        .map(|&(je, _)| je)
        .ok_or_else(|| Error::RegionNotFound {
            threshold: lower,
            curve: curve.to_vec(),
        })?;
    let hi = curve
        .iter()
        .find(|&&(je, f)| je >= lo && f >= onset * f_max)
        .map(|&(je, _)| je)
        .unwrap_or_else(|| {
            curve
                .last()
                .expect("curve has a point above the lower threshold")
                .0
        });
    Ok((lo, hi))
}

/// `E_QUBO(x)`.
pub fn energy_qubo(q: &Qubo, x: &[u8]) -> Result<f64> {
    q.energy(x)
}

/// `E_problem(x)`: only the terms over problem variables.
pub fn energy_problem(q: &Qubo, x: &[u8]) -> Result<f64> {
    q.problem_energy(x)
}
