//! Text, CSV and JSON formats for instances, graphs, embeddings, readouts and scores.
//!
//! Reals are written with 17 significant digits so files round-trip bit-exactly.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::estimator::{EnergyBatch, RankTable, SpecId};
use crate::graph::{build_chimera, ChimeraSpec, HardwareGraph};
use crate::ising::{IsingProblem, SpinConfig};
use crate::pipeline::{GaugeScanResult, JeScanResult};
use crate::sampler::{NoiseModel, ReadoutSet, SamplerConfig, SeedRecord};

/// Formats a real with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| parse_err(line, format!("bad {what}")))
}

/// Non-comment, non-blank lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// JSON mirror of the instance text format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceJson {
    pub n: usize,
    pub h: Vec<(usize, f64)>,
    pub couplings: Vec<(usize, usize, f64)>,
    #[serde(default)]
    pub offset: f64,
}

impl From<&IsingProblem> for InstanceJson {
    fn from(p: &IsingProblem) -> Self {
        Self {
            n: p.n(),
            h: p.h()
                .iter()
                .copied()
                .enumerate()
                .filter(|&(_, h)| h != 0.0)
                .collect(),
            couplings: p.couplings().iter().map(|c| (c.i, c.j, c.value)).collect(),
            offset: p.offset(),
        }
    }
}

impl TryFrom<InstanceJson> for IsingProblem {
    type Error = Error;

    fn try_from(j: InstanceJson) -> Result<Self> {
        let mut h = vec![0.0; j.n];
        for (i, v) in j.h {
            *h.get_mut(i)
                .ok_or_else(|| Error::validation(format!("field index {i} out of range")))? = v;
        }
        IsingProblem::new(h, j.couplings, j.offset)
    }
}

/// Canonical instance text: `p ising n n_h n_J offset`, then nonzero fields, then couplings.
pub fn write_instance(p: &IsingProblem) -> String {
    let fields: Vec<_> = p
        .h()
        .iter()
        .enumerate()
        .filter(|(_, &h)| h != 0.0)
        .collect();
    let mut out = format!(
        "p ising {} {} {} {}\n",
        p.n(),
        fields.len(),
        p.couplings().len(),
        fmt_real(p.offset())
    );
    for (i, h) in fields {
        let _ = writeln!(out, "{i} {}", fmt_real(*h));
    }
    for c in p.couplings() {
        let _ = writeln!(out, "{} {} {}", c.i, c.j, fmt_real(c.value));
    }
    out
}

/// Parses the instance text format, or its JSON mirror when the input starts with `{`.
pub fn parse_instance(text: &str) -> Result<IsingProblem> {
    if text.trim_start().starts_with('{') {
        let j: InstanceJson = serde_json::from_str(text)?;
        return j.try_into();
    }
    let mut lines = data_lines(text);
    let (ln, header) = lines.next().ok_or_else(|| parse_err(0, "empty instance"))?;
    let mut tok = header.split_whitespace();
    if tok.next() != Some("p") || tok.next() != Some("ising") {
        return Err(parse_err(ln, "expected `p ising` header"));
    }
    let n: usize = field(tok.next(), ln, "n")?;
    let n_h: usize = field(tok.next(), ln, "field count")?;
    let n_j: usize = field(tok.next(), ln, "coupling count")?;
    let offset: f64 = field(tok.next(), ln, "offset")?;
    let mut h = vec![0.0; n];
    let mut couplings = Vec::with_capacity(n_j);
    for k in 0..n_h + n_j {
        let (ln, line) = lines
            .next()
            .ok_or_else(|| parse_err(0, "instance ended early"))?;
        let mut tok = line.split_whitespace();
        if k < n_h {
            let i: usize = field(tok.next(), ln, "spin index")?;
            if i >= n {
                return Err(parse_err(ln, format!("spin {i} out of range")));
            }
            h[i] = field(tok.next(), ln, "field")?;
        } else {
            let i: usize = field(tok.next(), ln, "spin index")?;
            let j: usize = field(tok.next(), ln, "spin index")?;
            if i >= j {
                return Err(parse_err(ln, "couplings must have i < j"));
            }
            couplings.push((i, j, field(tok.next(), ln, "coupling")?));
        }
        if tok.next().is_some() {
            return Err(parse_err(ln, "trailing tokens"));
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "more terms than the header declares"));
    }
    IsingProblem::new(h, couplings, offset)
}

/// Edge list with a `chimera M N L n_broken` header (or `graph slots 0` for
/// non-Chimera graphs), one `u v` pair per line, then the broken ids.
pub fn write_graph(g: &HardwareGraph) -> String {
    let mut out = match g.chimera() {
        Some(c) => format!(
            "chimera {} {} {} {}\n",
            c.rows,
            c.cols,
            c.shore,
            c.broken.len()
        ),
        None => format!("graph {} 0\n", g.num_slots()),
    };
    for &(u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    if let Some(c) = g.chimera() {
        for b in &c.broken {
            let _ = writeln!(out, "{b}");
        }
    }
    out
}

pub fn parse_graph(text: &str) -> Result<HardwareGraph> {
    let lines: Vec<_> = data_lines(text).collect();
    let (ln, header) = *lines.first().ok_or_else(|| parse_err(0, "empty graph"))?;
    let tok: Vec<&str> = header.split_whitespace().collect();
    let mut edges = Vec::new();
    let mut broken = Vec::new();
    for &(ln, line) in &lines[1..] {
        let mut t = line.split_whitespace();
        let a: usize = field(t.next(), ln, "node id")?;
        match t.next() {
            Some(b) => edges.push((a, field(Some(b), ln, "node id")?)),
            None => broken.push(a),
        }
    }
    let graph = match tok.first().copied() {
        Some("chimera") if tok.len() == 5 => {
            let m = field(Some(tok[1]), ln, "rows")?;
            let n = field(Some(tok[2]), ln, "cols")?;
            let l = field(Some(tok[3]), ln, "shore")?;
            let n_broken: usize = field(Some(tok[4]), ln, "broken count")?;
            if n_broken != broken.len() {
                return Err(parse_err(
                    ln,
                    format!(
                        "header declares {n_broken} broken qubits, found {}",
                        broken.len()
                    ),
                ));
            }
            build_chimera(&ChimeraSpec::new(m, n, l).with_broken(broken))?
        }
        Some("graph") if tok.len() == 3 => {
            HardwareGraph::from_edges(field(Some(tok[1]), ln, "slot count")?, edges.clone())?
        }
        _ => {
            return Err(parse_err(
                ln,
                "expected `chimera M N L n_broken` or `graph n 0` header",
            ))
        }
    };
    let listed: std::collections::BTreeSet<_> =
        edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    if listed.len() != graph.num_edges() || graph.edges().iter().any(|e| !listed.contains(e)) {
        return Err(parse_err(
            ln,
            "edge list does not match the declared lattice",
        ));
    }
    Ok(graph)
}

pub fn write_embedding(e: &Embedding) -> Result<String> {
    Ok(serde_json::to_string_pretty(e)?)
}

pub fn parse_embedding(text: &str) -> Result<Embedding> {
    Ok(serde_json::from_str(text)?)
}

/// Readout CSV: `batch,read,energy_device,spins` with spins as a `+`/`-` string.
pub fn write_readouts_csv(r: &ReadoutSet) -> String {
    let mut out = String::from("batch,read,energy_device,spins\n");
    for (k, s) in r.configs.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.batch_of[k],
            k,
            fmt_real(r.device_energies[k]),
            s.to_sign_string()
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutRow {
    pub batch: usize,
    pub read: usize,
    pub energy: f64,
    pub spins: SpinConfig,
}

pub fn parse_readouts_csv(text: &str) -> Result<Vec<ReadoutRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "batch,read,energy_device,spins" => {}
        _ => {
            return Err(parse_err(
                1,
                "expected `batch,read,energy_device,spins` header",
            ))
        }
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let ln = i + 1;
            let mut t = l.trim().split(',');
            let row = ReadoutRow {
                batch: field(t.next(), ln, "batch")?,
                read: field(t.next(), ln, "read")?,
                energy: field(t.next(), ln, "energy")?,
                spins: SpinConfig::from_sign_string(t.next().unwrap_or(""))
                    .map_err(|e| parse_err(ln, e.to_string()))?,
            };
            if t.next().is_some() {
                return Err(parse_err(ln, "too many columns"));
            }
            Ok(row)
        })
        .collect()
}

/// Groups readout energies into batches by their batch column, or one batch when not `batched`.
pub fn readout_batches(rows: &[ReadoutRow], batched: bool) -> Result<Vec<EnergyBatch>> {
    if rows.is_empty() {
        return Err(Error::validation("readout file has no reads"));
    }
    if !batched {
        return Ok(vec![EnergyBatch::new(
            rows.iter().map(|r| r.energy).collect(),
            0,
        )?]);
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
    for r in rows {
        groups.entry(r.batch).or_default().push(r.energy);
    }
    groups
        .into_iter()
        .map(|(b, e)| EnergyBatch::new(e, b))
        .collect()
}

/// Metadata written next to a readout CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutMeta {
    pub config: SamplerConfig,
    pub noise: NoiseModel,
    pub gauge_seed: Option<u64>,
    pub n_reps: usize,
    pub reads_per_batch: usize,
    pub seeds: SeedRecord,
}

impl ReadoutMeta {
    pub fn new(
        config: &SamplerConfig,
        noise: &NoiseModel,
        gauge_seed: Option<u64>,
        r: &ReadoutSet,
    ) -> Self {
        Self {
            config: config.clone(),
            noise: *noise,
            gauge_seed,
            n_reps: r.plan.n_reps,
            reads_per_batch: r.plan.reads_per_batch,
            seeds: r.seeds.clone(),
        }
    }
}

/// One row of a score / rank CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub spec_id: SpecId,
    pub score: Option<f64>,
    pub rank: usize,
    pub n_reads: usize,
    pub n_reps: usize,
    pub epsilon: Option<f64>,
}

fn opt_real(x: Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}

/// Score CSV: `spec_id,score,rank,n_reads,n_reps,epsilon`, in rank order.
pub fn write_scores_csv(rows: &[ScoreRow]) -> String {
    let mut out = String::from("spec_id,score,rank,n_reads,n_reps,epsilon\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.spec_id,
            opt_real(r.score),
            r.rank,
            r.n_reads,
            r.n_reps,
            opt_real(r.epsilon)
        );
    }
    out
}

pub fn parse_scores_csv(text: &str) -> Result<Vec<ScoreRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "spec_id,score,rank,n_reads,n_reps,epsilon" => {}
        _ => return Err(parse_err(1, "expected score CSV header")),
    }
    let opt = |s: Option<&str>, ln: usize, what: &str| -> Result<Option<f64>> {
        match s {
            Some("") => Ok(None),
            other => field(other, ln, what).map(Some),
        }
    };
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let ln = i + 1;
            let mut t = l.trim().split(',');
            Ok(ScoreRow {
                spec_id: SpecId(field(t.next(), ln, "spec_id")?),
                score: opt(t.next(), ln, "score")?,
                rank: field(t.next(), ln, "rank")?,
                n_reads: field(t.next(), ln, "n_reads")?,
                n_reps: field(t.next(), ln, "n_reps")?,
                epsilon: opt(t.next(), ln, "epsilon")?,
            })
        })
        .collect()
}

/// Rank table rows with the shared read budget attached.
pub fn rank_rows(
    table: &RankTable,
    n_reads: usize,
    n_reps: usize,
    epsilon: Option<f64>,
) -> Vec<ScoreRow> {
    table
        .entries()
        .iter()
        .map(|e| ScoreRow {
            spec_id: e.spec_id,
            score: e.score,
            rank: e.rank,
            n_reads,
            n_reps,
            epsilon,
        })
        .collect()
}

/// Chain-strength curve CSV: `J_E,f_SE,elite_score`.
pub fn write_je_csv(scan: &JeScanResult) -> String {
    let mut out = String::from("J_E,f_SE,elite_score\n");
    for p in &scan.points {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_real(p.chain_strength),
            fmt_real(p.f_se),
            fmt_real(p.score.value)
        );
    }
    out
}

/// Per-gauge CSV: `gauge,score,n_gs,rank`, where `n_gs` counts reads at `ground_energy`.
pub fn write_gauge_csv(scan: &GaugeScanResult, ground_energy: f64) -> Result<String> {
    let ranks = scan.elite_rank()?.by_id();
    let mut out = String::from("gauge,score,n_gs,rank\n");
    for e in &scan.entries {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            e.id,
            fmt_real(e.logical.score.value),
            e.logical.summary.count_at(ground_energy),
            ranks[&e.id]
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::random_spin_glass;
    use crate::sampler::sample;

    #[test]
    fn instance_round_trip_is_bit_exact() {
        let g = build_chimera(&ChimeraSpec::new(2, 2, 4)).unwrap();
        let mut p = random_spin_glass(&g, &[-1.0, 1.0], &[0.0], 4).unwrap();
        p = IsingProblem::new(
            p.h()
                .iter()
                .enumerate()
                .map(|(i, _)| if i % 3 == 0 { 0.1 * i as f64 } else { 0.0 })
                .collect(),
            p.couplings().iter().map(|c| (c.i, c.j, c.value / 3.0)),
            -1.0 / 7.0,
        )
        .unwrap();
        let text = write_instance(&p);
        let back = parse_instance(&text).unwrap();
        assert_eq!(back, p);
        assert_eq!(write_instance(&back), text);
        let json = serde_json::to_string(&InstanceJson::from(&p)).unwrap();
        assert_eq!(parse_instance(&json).unwrap(), p);
    }

    #[test]
    fn instance_parse_errors() {
        assert!(parse_instance("").is_err());
        assert!(parse_instance("p ising 2 0 1 0\n1 0 1.0\n").is_err());
        assert!(parse_instance("p ising 2 1 0 0\n5 1.0\n").is_err());
        assert!(parse_instance("p ising 2 0 0 0\n0 1 1.0\n").is_err());
        let ok = parse_instance("# comment\np ising 3 1 1 0.5\n2 -0.5\n0 1 1\n").unwrap();
        assert_eq!(ok.h(), &[0.0, 0.0, -0.5]);
        assert_eq!(ok.offset(), 0.5);
    }

    #[test]
    fn graph_round_trip() {
        let g = build_chimera(&ChimeraSpec::new(2, 3, 4).with_broken([1, 30])).unwrap();
        let text = write_graph(&g);
        assert!(text.starts_with("chimera 2 3 4 2\n"));
        assert_eq!(parse_graph(&text).unwrap(), g);
        let generic = HardwareGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(parse_graph(&write_graph(&generic)).unwrap(), generic);
        let truncated: String = text.lines().take(5).collect::<Vec<_>>().join("\n");
        assert!(parse_graph(&truncated).is_err());
    }

    #[test]
    fn readouts_round_trip() {
        let p = IsingProblem::new(vec![0.2, -0.1, 0.0], [(0, 1, 1.0), (1, 2, -0.5)], 0.0).unwrap();
        let config = SamplerConfig {
            n_reads: 20,
            anneal_time_us: 1e5,
            sweeps: 5,
            seed: 3,
            ..SamplerConfig::default()
        };
        let r = sample(&p, &config, &NoiseModel::noiseless()).unwrap();
        let rows = parse_readouts_csv(&write_readouts_csv(&r)).unwrap();
        assert_eq!(rows.len(), 20);
        for (k, row) in rows.iter().enumerate() {
            assert_eq!(row.spins, r.configs[k]);
            assert_eq!(row.energy, r.device_energies[k]);
            assert_eq!(row.batch, r.batch_of[k]);
        }
        assert_eq!(readout_batches(&rows, true).unwrap().len(), 2);
        assert_eq!(readout_batches(&rows, false).unwrap().len(), 1);
    }

    #[test]
    fn scores_round_trip() {
        let rows = vec![
            ScoreRow {
                spec_id: SpecId(3),
                score: Some(4.5),
                rank: 1,
                n_reads: 5,
                n_reps: 1,
                epsilon: Some(40.0),
            },
            ScoreRow {
                spec_id: SpecId(0),
                score: None,
                rank: 2,
                n_reads: 5,
                n_reps: 1,
                epsilon: None,
            },
        ];
        assert_eq!(parse_scores_csv(&write_scores_csv(&rows)).unwrap(), rows);
    }

    #[test]
    fn embedding_json() {
        let e = Embedding::new(vec![vec![0, 4], vec![5]]).unwrap();
        let text = write_embedding(&e).unwrap();
        assert_eq!(parse_embedding(&text).unwrap(), e);
        assert!(parse_embedding(r#"{"0":[1],"2":[3]}"#).is_err());
    }
}
