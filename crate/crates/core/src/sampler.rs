//! Annealer stand-in: batching limits, analog control error, and a
//! simulated-annealing backend.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::EnergyBatch;
use crate::ising::{apply_gauge, ungauge, Gauge, IsingProblem, SpinConfig};
use crate::seed::{derive_seed, mix64};

/// Default cap on annealing time per submission, in microseconds.
pub const DEFAULT_MAX_DUTY_US: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    Linear,
    Geometric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Total reads requested (`N_reads`).
    pub n_reads: usize,
    /// Annealing time per read, in microseconds. Only used for the batching limit.
    pub anneal_time_us: f64,
    pub max_duty_us: f64,
    pub sweeps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub schedule: Schedule,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            n_reads: 1000,
            anneal_time_us: 20.0,
            max_duty_us: DEFAULT_MAX_DUTY_US,
            sweeps: 1000,
            beta_start: 0.1,
            beta_end: 5.0,
            schedule: Schedule::Geometric,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_reads == 0 {
            return Err(Error::validation("n_reads must be at least 1"));
        }
        let (t_a, duty) = (self.anneal_time_us, self.max_duty_us);
        if t_a.is_nan() || duty.is_nan() || t_a <= 0.0 || duty < t_a {
            return Err(Error::validation(format!(
                "need 0 < t_a <= max duty, got t_a={} duty={}",
                self.anneal_time_us, self.max_duty_us
            )));
        }
        if self.sweeps == 0 {
            return Err(Error::validation("sweeps must be at least 1"));
        }
        if !(self.beta_start > 0.0 && self.beta_end > self.beta_start) {
            return Err(Error::validation(format!(
                "need beta_end > beta_start > 0, got {} -> {}",
                self.beta_start, self.beta_end
            )));
        }
        Ok(())
    }

    pub fn with_reads(&self, n_reads: usize, seed: u64) -> Self {
        Self {
            n_reads,
            seed,
            ..self.clone()
        }
    }

    /// Inverse temperature for each sweep.
    pub fn betas(&self) -> Vec<f64> {
        let n = self.sweeps;
        if n == 1 {
            return vec![self.beta_end];
        }
        let t = |k: usize| k as f64 / (n - 1) as f64;
        match self.schedule {
            Schedule::Linear => (0..n)
                .map(|k| self.beta_start + (self.beta_end - self.beta_start) * t(k))
                .collect(),
            Schedule::Geometric => {
                let ratio = self.beta_end / self.beta_start;
                (0..n).map(|k| self.beta_start * ratio.powf(t(k))).collect()
            }
        }
    }
}

/// Number of programmings and reads per programming for a request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchPlan {
    pub n_reps: usize,
    pub reads_per_batch: usize,
}

/// Splits `n_reads` into equal batches that respect the duty-time cap.
pub fn batch_plan(config: &SamplerConfig) -> Result<BatchPlan> {
    config.validate()?;
    let cap = (config.max_duty_us / config.anneal_time_us).floor() as usize;
    let n_reps = config.n_reads.div_ceil(cap);
    if !config.n_reads.is_multiple_of(n_reps) {
        let compatible = (config.n_reads / n_reps) * n_reps;
        return Err(Error::validation(format!(
            "{} reads cannot be split evenly into {n_reps} batches of at most {cap}; try {compatible} or {}",
            config.n_reads,
            compatible + n_reps
        )));
    }
    Ok(BatchPlan {
        n_reps,
        reads_per_batch: config.n_reads / n_reps,
    })
}

/// When the control-error perturbation is redrawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum RefreshPolicy {
    /// Fresh perturbation for every programming, drawn from the programming seed.
    PerProgramming,
    /// A fixed per-qubit / per-coupler offset belonging to the device, keyed by
    /// `device_seed` and the hardware location. Every programming sees the same offsets.
    Persistent { device_seed: u64 },
}

/// Analog control error: additive Gaussian noise on `h` and `J`, then
/// optional rounding to a quantization grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma_h: f64,
    pub sigma_j: f64,
    /// Grid step; 0 disables quantization.
    pub quantization: f64,
    pub refresh: RefreshPolicy,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::noiseless()
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            sigma_h: 0.0,
            sigma_j: 0.0,
            quantization: 0.0,
            refresh: RefreshPolicy::PerProgramming,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_h >= 0.0 && self.sigma_j >= 0.0 && self.quantization >= 0.0) {
            return Err(Error::validation("noise parameters must be non-negative"));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.sigma_h == 0.0 && self.sigma_j == 0.0 && self.quantization == 0.0
    }
}

fn quantize(value: f64, step: f64) -> f64 {
    if step > 0.0 {
        (value / step).round() * step
    } else {
        value
    }
}

/// Gaussian draw keyed by a single seed, for location-keyed persistent noise.
fn keyed_normal(normal: &Normal<f64>, key: u64) -> f64 {
    normal.sample(&mut ChaCha8Rng::seed_from_u64(key))
}

/// Programs `p` onto the noisy device.
pub fn program(
    p: &IsingProblem,
    noise: &NoiseModel,
    programming_seed: u64,
) -> Result<IsingProblem> {
    noise.validate()?;
    if noise.is_noiseless() {
        return Ok(p.clone());
    }
    let normal_h = Normal::new(0.0, noise.sigma_h).expect("sigma validated");
    let normal_j = Normal::new(0.0, noise.sigma_j).expect("sigma validated");
    let q = noise.quantization;
    let programmed = match noise.refresh {
        RefreshPolicy::PerProgramming => {
            let mut rng = ChaCha8Rng::seed_from_u64(programming_seed);
            let deltas_h: Vec<f64> = (0..p.n()).map(|_| normal_h.sample(&mut rng)).collect();
            let deltas_j: Vec<f64> = (0..p.couplings().len())
                .map(|_| normal_j.sample(&mut rng))
                .collect();
            let mut k = 0;
            p.map_coefficients(
                |i, h| quantize(h + deltas_h[i], q),
                |c| {
                    let v = quantize(c.value + deltas_j[k], q);
                    k += 1;
                    v
                },
            )
        }
        RefreshPolicy::Persistent { device_seed } => {
            let n = p.n() as u64;
            p.map_coefficients(
                |i, h| {
                    quantize(
                        h + keyed_normal(&normal_h, derive_seed(device_seed, "ace-h", i as u64)),
                        q,
                    )
                },
                |c| {
                    let loc = c.i as u64 * n + c.j as u64;
                    quantize(
                        c.value + keyed_normal(&normal_j, derive_seed(device_seed, "ace-j", loc)),
                        q,
                    )
                },
            )
        }
    };
    Ok(programmed.with_normalized_flag(p.is_normalized()))
}

/// Seeds used to produce a [`ReadoutSet`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master: u64,
    pub batch_seeds: Vec<u64>,
    pub programming_seeds: Vec<u64>,
}

/// Batched sampler output in the device frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutSet {
    pub configs: Vec<SpinConfig>,
    /// Energy of each config under the programmed (perturbed) device problem.
    pub device_energies: Vec<f64>,
    pub batch_of: Vec<usize>,
    pub plan: BatchPlan,
    pub programmings: usize,
    pub seeds: SeedRecord,
}

impl ReadoutSet {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    /// Index range of each batch.
    pub fn batch_ranges(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        let size = self.plan.reads_per_batch;
        (0..self.plan.n_reps).map(move |b| b * size..(b + 1) * size)
    }
}

/// A source of low-energy readouts for a programmed problem.
///
/// Implementations must be deterministic in `(problem, n_reads, batch_seed)`.
pub trait Sampler: Sync {
    fn anneal_batch(
        &self,
        problem: &IsingProblem,
        n_reads: usize,
        batch_seed: u64,
    ) -> Vec<SpinConfig>;
}

/// Compressed adjacency over the active spins of a problem.
struct SpinSystem {
    active: Vec<usize>,
    field: Vec<f64>,
    start: Vec<usize>,
    neighbor: Vec<u32>,
    weight: Vec<f64>,
}

impl SpinSystem {
    fn new(p: &IsingProblem) -> Self {
        let active = p.active_spins();
        let mut local = vec![usize::MAX; p.n()];
        for (k, &i) in active.iter().enumerate() {
            local[i] = k;
        }
        let mut lists: Vec<Vec<(u32, f64)>> = vec![Vec::new(); active.len()];
        for c in p.couplings() {
            let (a, b) = (local[c.i], local[c.j]);
            lists[a].push((b as u32, c.value));
            lists[b].push((a as u32, c.value));
        }
        let mut start = Vec::with_capacity(active.len() + 1);
        let mut neighbor = Vec::new();
        let mut weight = Vec::new();
        start.push(0);
        for list in lists {
            for (nb, w) in list {
                neighbor.push(nb);
                weight.push(w);
            }
            start.push(neighbor.len());
        }
        Self {
            field: active.iter().map(|&i| p.h()[i]).collect(),
            active,
            start,
            neighbor,
            weight,
        }
    }

    fn local_fields(&self, s: &[i8]) -> Vec<f64> {
        (0..self.active.len())
            .map(|k| {
                let mut f = self.field[k];
                for e in self.start[k]..self.start[k + 1] {
                    f += self.weight[e] * f64::from(s[self.neighbor[e] as usize]);
                }
                f
            })
            .collect()
    }
}

/// Single-spin-flip Metropolis annealing over an inverse-temperature schedule.
///
/// Spins with no field and no couplings are not annealed and read out as +1.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedAnnealing {
    betas: Vec<f64>,
}

impl SimulatedAnnealing {
    pub fn new(config: &SamplerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            betas: config.betas(),
        })
    }

    fn anneal_one(&self, system: &SpinSystem, n: usize, seed: u64) -> SpinConfig {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = system.active.len();
        let mut s: Vec<i8> = (0..m)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        let mut local = system.local_fields(&s);
        for &beta in &self.betas {
            for k in 0..m {
                // energy change of flipping spin k
                let delta = -2.0 * f64::from(s[k]) * local[k];
                let accept = delta <= 0.0 || {
                    let x = beta * delta;
                    x < 40.0 && rng.random::<f64>() < (-x).exp()
                };
                if accept {
                    s[k] = -s[k];
                    let step = 2.0 * f64::from(s[k]);
                    for e in system.start[k]..system.start[k + 1] {
                        local[system.neighbor[e] as usize] += step * system.weight[e];
                    }
                }
            }
        }
        let mut full = vec![1i8; n];
        for (k, &i) in system.active.iter().enumerate() {
            full[i] = s[k];
        }
        SpinConfig::from_raw(full)
    }
}

impl Sampler for SimulatedAnnealing {
    fn anneal_batch(
        &self,
        problem: &IsingProblem,
        n_reads: usize,
        batch_seed: u64,
    ) -> Vec<SpinConfig> {
        let system = SpinSystem::new(problem);
        let n = problem.n();
        let read =
            |r: usize| self.anneal_one(&system, n, derive_seed(batch_seed, "read", r as u64));
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            (0..n_reads).into_par_iter().map(read).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..n_reads).map(read).collect()
        }
    }
}

/// Samples `p` with the given backend: one programming per batch, then
/// `reads_per_batch` anneals on the programmed problem.
pub fn sample_with(
    sampler: &dyn Sampler,
    p: &IsingProblem,
    config: &SamplerConfig,
    noise: &NoiseModel,
) -> Result<ReadoutSet> {
    let plan = batch_plan(config)?;
    let mut configs = Vec::with_capacity(config.n_reads);
    let mut device_energies = Vec::with_capacity(config.n_reads);
    let mut batch_of = Vec::with_capacity(config.n_reads);
    let mut seeds = SeedRecord {
        master: config.seed,
        batch_seeds: Vec::with_capacity(plan.n_reps),
        programming_seeds: Vec::with_capacity(plan.n_reps),
    };
    for b in 0..plan.n_reps {
        let batch_seed = derive_seed(config.seed, "batch", b as u64);
        let programming_seed = mix64(derive_seed(batch_seed, "program", 0));
        let programmed = program(p, noise, programming_seed)?;
        let reads = sampler.anneal_batch(&programmed, plan.reads_per_batch, batch_seed);
        for s in reads {
            device_energies.push(programmed.energy(&s)?);
            configs.push(s);
            batch_of.push(b);
        }
        seeds.batch_seeds.push(batch_seed);
        seeds.programming_seeds.push(programming_seed);
    }
    Ok(ReadoutSet {
        configs,
        device_energies,
        batch_of,
        plan,
        programmings: plan.n_reps,
        seeds,
    })
}

/// Samples with the simulated-annealing backend.
pub fn sample(p: &IsingProblem, config: &SamplerConfig, noise: &NoiseModel) -> Result<ReadoutSet> {
    let sa = SimulatedAnnealing::new(config)?;
    sample_with(&sa, p, config, noise)
}

/// Samples the gauged problem `apply_gauge(p, gauge)`; readouts stay in the device frame.
pub fn sample_gauged(
    p: &IsingProblem,
    gauge: &Gauge,
    config: &SamplerConfig,
    noise: &NoiseModel,
) -> Result<ReadoutSet> {
    let device = apply_gauge(p, gauge)?;
    sample(&device, config, noise)
}

/// Ungauges each device-frame read and evaluates it on the clean original problem.
pub fn resolve_energies(
    reads: &ReadoutSet,
    original: &IsingProblem,
    gauge: &Gauge,
) -> Result<Vec<EnergyBatch>> {
    if gauge.len() != original.n() {
        return Err(Error::validation("gauge and problem sizes differ"));
    }
    reads
        .batch_ranges()
        .enumerate()
        .map(|(b, range)| {
            let energies = reads.configs[range]
                .iter()
                .map(|s| original.energy(&ungauge(s, gauge)?))
                .collect::<Result<Vec<_>>>()?;
            EnergyBatch::new(energies, b)
        })
        .collect()
}
