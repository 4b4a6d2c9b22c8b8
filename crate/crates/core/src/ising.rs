//! Ising and QUBO problem representations.
//!
//! An [`IsingProblem`] is the classical objective
//! `E(s) = sum_i h_i s_i + sum_{i<j} J_ij s_i s_j + offset` over spins `s_i = ±1`.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Decimal places kept when energies are compared for equality.
pub const ENERGY_DECIMALS: i32 = 12;

/// Largest |h| allowed on the device after normalization.
pub const MAX_FIELD: f64 = 2.0;
/// Largest |J| allowed on the device after normalization.
pub const MAX_COUPLING: f64 = 1.0;

/// One quadratic term `J_ij s_i s_j` with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// Ising objective over `n` spins.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingProblem {
    n: usize,
    h: Vec<f64>,
    couplings: Vec<Coupling>,
    offset: f64,
    normalized: bool,
}

impl IsingProblem {
    /// Builds a problem from dense fields and a list of couplings.
    ///
    /// Pairs are canonicalized to `i < j` and sorted; self-couplings,
    /// out-of-range ids and duplicate pairs are rejected.
    pub fn new(
        h: Vec<f64>,
        couplings: impl IntoIterator<Item = (usize, usize, f64)>,
        offset: f64,
    ) -> Result<Self> {
        let n = h.len();
        let mut seen = BTreeMap::new();
        for (a, b, value) in couplings {
            if a == b {
                return Err(Error::validation(format!("self-coupling on spin {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::validation(format!(
                    "coupling ({a}, {b}) out of range for {n} spins"
                )));
            }
            let key = (a.min(b), a.max(b));
            if seen.insert(key, value).is_some() {
                return Err(Error::validation(format!(
                    "duplicate coupling ({}, {})",
                    key.0, key.1
                )));
            }
        }
        let couplings = seen
            .into_iter()
            .map(|((i, j), value)| Coupling { i, j, value })
            .collect();
        Ok(Self {
            n,
            h,
            couplings,
            offset,
            normalized: false,
        })
    }

    /// Problem with `n` spins and no terms.
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            h: vec![0.0; n],
            couplings: Vec::new(),
            offset: 0.0,
            normalized: false,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// Couplings sorted by `(i, j)`.
    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Coupling value on `(a, b)` in either order, if present.
    pub fn coupling(&self, a: usize, b: usize) -> Option<f64> {
        let key = (a.min(b), a.max(b));
        self.couplings
            .binary_search_by(|c| (c.i, c.j).cmp(&key))
            .ok()
            .map(|idx| self.couplings[idx].value)
    }

    /// Spins that carry a nonzero field or take part in at least one coupling.
    pub fn active_spins(&self) -> Vec<usize> {
        let mut active = vec![false; self.n];
        for (i, &h) in self.h.iter().enumerate() {
            if h != 0.0 {
                active[i] = true;
            }
        }
        for c in &self.couplings {
            active[c.i] = true;
            active[c.j] = true;
        }
        active
            .iter()
            .enumerate()
            .filter_map(|(i, &a)| a.then_some(i))
            .collect()
    }

    /// Evaluates the objective; see [`energy_ising`].
    pub fn energy(&self, s: &SpinConfig) -> Result<f64> {
        if s.len() != self.n {
            return Err(Error::validation(format!(
                "spin config has {} entries, problem has {}",
                s.len(),
                self.n
            )));
        }
        Ok(self.energy_of(s.as_slice()))
    }

    /// Objective on a raw ±1 slice whose length is already known to match.
    pub(crate) fn energy_of(&self, s: &[i8]) -> f64 {
        let linear: f64 = self
            .h
            .iter()
            .zip(s)
            .map(|(&h, &si)| h * f64::from(si))
            .sum();
        let quadratic: f64 = self
            .couplings
            .iter()
            .map(|c| c.value * f64::from(s[c.i] * s[c.j]))
            .sum();
        linear + quadratic + self.offset
    }

    /// Largest absolute coupling and field.
    pub fn max_abs(&self) -> (f64, f64) {
        let j = self
            .couplings
            .iter()
            .fold(0.0_f64, |m, c| m.max(c.value.abs()));
        let h = self.h.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        (j, h)
    }

    pub(crate) fn map_coefficients(
        &self,
        mut field: impl FnMut(usize, f64) -> f64,
        mut coupling: impl FnMut(&Coupling) -> f64,
    ) -> Self {
        Self {
            n: self.n,
            h: self
                .h
                .iter()
                .enumerate()
                .map(|(i, &v)| field(i, v))
                .collect(),
            couplings: self
                .couplings
                .iter()
                .map(|c| Coupling {
                    value: coupling(c),
                    ..*c
                })
                .collect(),
            offset: self.offset,
            normalized: false,
        }
    }

    pub(crate) fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub(crate) fn with_normalized_flag(mut self, flag: bool) -> Self {
        self.normalized = flag;
        self
    }
}

/// A ±1 spin assignment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|&&v| v != 1 && v != -1) {
            return Err(Error::validation(format!("spin value {bad} is not ±1")));
        }
        Ok(Self(values))
    }

    pub fn all_up(n: usize) -> Self {
        Self(vec![1; n])
    }

    /// Configuration number `index` in the enumeration where bit `k` set means spin `k` is -1.
    pub fn from_index(n: usize, index: u64) -> Self {
        Self(
            (0..n)
                .map(|k| if index >> k & 1 == 1 { -1 } else { 1 })
                .collect(),
        )
    }

    pub(crate) fn from_raw(values: Vec<i8>) -> Self {
        debug_assert!(values.iter().all(|&v| v == 1 || v == -1));
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    /// Binary view `x = (1 + s) / 2`.
    pub fn to_binary(&self) -> Vec<u8> {
        self.0.iter().map(|&s| u8::from(s == 1)).collect()
    }

    pub fn from_binary(x: &[u8]) -> Result<Self> {
        x.iter()
            .map(|&b| match b {
                0 => Ok(-1),
                1 => Ok(1),
                other => Err(Error::validation(format!(
                    "binary value {other} is not 0/1"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    /// Compact `+`/`-` rendering used in readout files.
    pub fn to_sign_string(&self) -> String {
        self.0
            .iter()
            .map(|&s| if s == 1 { '+' } else { '-' })
            .collect()
    }

    pub fn from_sign_string(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                other => Err(Error::validation(format!(
                    "invalid spin character {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

impl TryFrom<Vec<i8>> for SpinConfig {
    type Error = Error;

    fn try_from(v: Vec<i8>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SpinConfig> for Vec<i8> {
    fn from(s: SpinConfig) -> Self {
        s.0
    }
}

/// Spin-reversal transform. The all-ones gauge is the identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct Gauge(Vec<i8>);

impl Gauge {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        SpinConfig::new(signs).map(|s| Self(s.0))
    }

    pub fn identity(n: usize) -> Self {
        Self(vec![1; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&a| a == 1)
    }
}

impl TryFrom<Vec<i8>> for Gauge {
    type Error = Error;

    fn try_from(v: Vec<i8>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Gauge> for Vec<i8> {
    fn from(g: Gauge) -> Self {
        g.0
    }
}

/// `sum_i h_i s_i + sum_{i<j} J_ij s_i s_j + offset`.
pub fn energy_ising(p: &IsingProblem, s: &SpinConfig) -> Result<f64> {
    p.energy(s)
}

/// Applies `h_i -> a_i h_i`, `J_ij -> a_i a_j J_ij`.
pub fn apply_gauge(p: &IsingProblem, a: &Gauge) -> Result<IsingProblem> {
    if a.len() != p.n() {
        return Err(Error::validation(format!(
            "gauge has {} entries, problem has {}",
            a.len(),
            p.n()
        )));
    }
    let signs = a.signs();
    Ok(p.map_coefficients(
        |i, h| f64::from(signs[i]) * h,
        |c| f64::from(signs[c.i] * signs[c.j]) * c.value,
    )
    .with_normalized_flag(p.is_normalized()))
}

/// Maps a configuration between gauge frames: `s_i -> a_i s_i`. Self-inverse.
pub fn ungauge(s: &SpinConfig, a: &Gauge) -> Result<SpinConfig> {
    if s.len() != a.len() {
        return Err(Error::validation(format!(
            "spin config has {} entries, gauge has {}",
            s.len(),
            a.len()
        )));
    }
    Ok(SpinConfig(
        s.0.iter().zip(&a.0).map(|(&si, &ai)| si * ai).collect(),
    ))
}

/// Uniform random gauge, deterministic per seed.
pub fn random_gauge(n: usize, seed: u64) -> Result<Gauge> {
    if n == 0 {
        return Err(Error::validation("gauge length must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(Gauge(
        (0..n)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect(),
    ))
}

/// Divides every coefficient by `max(max|J|, max|h| / 2, 1)` so the result
/// fits the device range `|h| <= 2`, `|J| <= 1`.
pub fn normalize_dynamic_range(p: &IsingProblem) -> Result<(IsingProblem, f64)> {
    if p.n() == 0 {
        return Err(Error::validation("cannot normalize an empty problem"));
    }
    let (max_j, max_h) = p.max_abs();
    let scale = max_j.max(max_h / MAX_FIELD).max(MAX_COUPLING);
    let scaled = if scale == 1.0 {
        p.clone()
    } else {
        p.map_coefficients(|_, h| h / scale, |c| c.value / scale)
            .with_offset(p.offset() / scale)
    };
    Ok((scaled.with_normalized_flag(true), scale))
}

/// Number of couplings with `J > 0`.
pub fn count_positive_couplers(p: &IsingProblem) -> usize {
    p.couplings().iter().filter(|c| c.value > 0.0).count()
}

/// Number of fields with `h > 0`.
pub fn count_positive_fields(p: &IsingProblem) -> usize {
    p.h().iter().filter(|&&h| h > 0.0).count()
}

/// Positive-coefficient counts, split by whether a coupling is a chain coupler.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositiveCounts {
    pub all_couplers: usize,
    pub non_chain_couplers: usize,
    pub chain_couplers: usize,
    pub fields: usize,
}

impl PositiveCounts {
    pub fn of(p: &IsingProblem, chain_edges: &BTreeSet<(usize, usize)>) -> Self {
        let mut counts = Self {
            all_couplers: 0,
            non_chain_couplers: 0,
            chain_couplers: 0,
            fields: count_positive_fields(p),
        };
        for c in p.couplings().iter().filter(|c| c.value > 0.0) {
            counts.all_couplers += 1;
            if chain_edges.contains(&(c.i, c.j)) {
                counts.chain_couplers += 1;
            } else {
                counts.non_chain_couplers += 1;
            }
        }
        counts
    }
}

/// Split of QUBO variables into problem and ancilla variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarPartition {
    problem: Vec<usize>,
    ancilla: Vec<usize>,
}

impl VarPartition {
    pub fn new(n: usize, problem: Vec<usize>, ancilla: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; n];
        for &v in problem.iter().chain(&ancilla) {
            if v >= n {
                return Err(Error::validation(format!(
                    "partition variable {v} out of range"
                )));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::validation(format!(
                    "variable {v} listed twice in partition"
                )));
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::validation("partition does not cover every variable"));
        }
        let mut problem = problem;
        let mut ancilla = ancilla;
        problem.sort_unstable();
        ancilla.sort_unstable();
        Ok(Self { problem, ancilla })
    }

    pub fn problem(&self) -> &[usize] {
        &self.problem
    }

    pub fn ancilla(&self) -> &[usize] {
        &self.ancilla
    }
}

/// Quadratic objective over binary variables `x_i ∈ {0, 1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Qubo {
    n: usize,
    linear: Vec<f64>,
    quadratic: BTreeMap<(usize, usize), f64>,
    offset: f64,
    partition: Option<VarPartition>,
}

impl Qubo {
    /// Diagonal quadratic entries are folded into the linear terms (`x^2 = x`),
    /// and `(i, j)` / `(j, i)` entries are merged.
    pub fn new(
        linear: Vec<f64>,
        quadratic: impl IntoIterator<Item = (usize, usize, f64)>,
        offset: f64,
    ) -> Result<Self> {
        let n = linear.len();
        let mut linear = linear;
        let mut merged = BTreeMap::new();
        for (a, b, v) in quadratic {
            if a >= n || b >= n {
                return Err(Error::validation(format!(
                    "QUBO term ({a}, {b}) out of range"
                )));
            }
            if a == b {
                linear[a] += v;
            } else {
                *merged.entry((a.min(b), a.max(b))).or_insert(0.0) += v;
            }
        }
        Ok(Self {
            n,
            linear,
            quadratic: merged,
            offset,
            partition: None,
        })
    }

    pub fn with_partition(mut self, partition: VarPartition) -> Self {
        self.partition = Some(partition);
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn quadratic(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.quadratic
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn partition(&self) -> Option<&VarPartition> {
        self.partition.as_ref()
    }

    fn check(&self, x: &[u8]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::validation(format!(
                "assignment has {} entries, QUBO has {}",
                x.len(),
                self.n
            )));
        }
        if let Some(bad) = x.iter().find(|&&b| b > 1) {
            return Err(Error::validation(format!("binary value {bad} is not 0/1")));
        }
        Ok(())
    }

    /// `sum_i c_i x_i + sum_{i<j} Q_ij x_i x_j + offset`.
    pub fn energy(&self, x: &[u8]) -> Result<f64> {
        self.check(x)?;
        let linear: f64 = self
            .linear
            .iter()
            .zip(x)
            .map(|(&c, &xi)| c * f64::from(xi))
            .sum();
        let quadratic: f64 = self
            .quadratic
            .iter()
            .map(|(&(i, j), &q)| q * f64::from(x[i] * x[j]))
            .sum();
        Ok(linear + quadratic + self.offset)
    }

    /// Objective restricted to terms whose variables are all problem variables.
    pub fn problem_energy(&self, x: &[u8]) -> Result<f64> {
        let partition = self.partition.as_ref().ok_or(Error::MissingPartition)?;
        self.check(x)?;
        let mut is_problem = vec![false; self.n];
        for &v in partition.problem() {
            is_problem[v] = true;
        }
        let linear: f64 = partition
            .problem()
            .iter()
            .map(|&i| self.linear[i] * f64::from(x[i]))
            .sum();
        let quadratic: f64 = self
            .quadratic
            .iter()
            .filter(|(&(i, j), _)| is_problem[i] && is_problem[j])
            .map(|(&(i, j), &q)| q * f64::from(x[i] * x[j]))
            .sum();
        Ok(linear + quadratic + self.offset)
    }
}

/// Converts a QUBO to an Ising problem through `x_i = (1 + s_i) / 2`.
///
/// Returns the problem and the variable map (spin `k` represents QUBO variable `map[k]`);
/// the map is the identity.
pub fn qubo_to_ising(q: &Qubo) -> (IsingProblem, Vec<usize>) {
    let n = q.n();
    let mut h: Vec<f64> = q.linear().iter().map(|c| c / 2.0).collect();
    let mut offset = q.offset() + q.linear().iter().sum::<f64>() / 2.0;
    let mut couplings = Vec::with_capacity(q.quadratic().len());
    for (&(i, j), &v) in q.quadratic() {
        let quarter = v / 4.0;
        h[i] += quarter;
        h[j] += quarter;
        offset += quarter;
        couplings.push((i, j, quarter));
    }
    let problem = IsingProblem::new(h, couplings, offset)
        .expect("QUBO terms are already validated and unique");
    (problem, (0..n).collect())
}

/// Exhaustive ground-state search for small problems (`n <= 24`).
///
/// Returns the minimum energy and every configuration attaining it after
/// rounding to [`ENERGY_DECIMALS`].
pub fn brute_force_ground(p: &IsingProblem) -> Result<(f64, Vec<SpinConfig>)> {
    let n = p.n();
    if n > 24 {
        return Err(Error::validation(format!(
            "brute force limited to 24 spins, got {n}"
        )));
    }
    let mut best = f64::INFINITY;
    let mut argmin = Vec::new();
    for index in 0..1u64 << n {
        let s = SpinConfig::from_index(n, index);
        let e = round_energy(p.energy_of(s.as_slice()));
        if e < best {
            best = e;
            argmin.clear();
            argmin.push(s);
        } else if e == best {
            argmin.push(s);
        }
    }
    Ok((best, argmin))
}

/// Rounds to [`ENERGY_DECIMALS`] decimal places.
pub fn round_energy(e: f64) -> f64 {
    let factor = 10f64.powi(ENERGY_DECIMALS);
    (e * factor).round() / factor
}
