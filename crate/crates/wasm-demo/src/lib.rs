//! Browser bindings: Chimera layout, gauge scan and chain-strength sweep.
//! Every function returns a JSON string so the page needs no glue types.

use anneal_tuner::embedding::{paired_chain_fixture, LogicalObjective};
use anneal_tuner::graph::{random_spin_glass, Partition};
use anneal_tuner::pipeline::{
    default_je_candidates, gauge_scan, je_scan, GaugeScanParams, JeScanParams, ScanSettings, Target,
};
use anneal_tuner::sampler::RefreshPolicy;
use anneal_tuner::{build_chimera, ChimeraSpec, Gauge, IsingProblem, NoiseModel, SamplerConfig};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Gauge scans anneal briefly and end hot; chain-strength sweeps quench.
fn settings(
    reads: usize,
    epsilon: f64,
    sigma_h: f64,
    sigma_j: f64,
    device_seed: u64,
    quench: bool,
) -> ScanSettings {
    let sampler = if quench {
        SamplerConfig {
            sweeps: 6,
            beta_end: 50.0,
            ..SamplerConfig::default()
        }
    } else {
        SamplerConfig {
            sweeps: 20,
            beta_end: 1.2,
            ..SamplerConfig::default()
        }
    };
    ScanSettings {
        reads,
        epsilon,
        sampler,
        noise: NoiseModel {
            sigma_h,
            sigma_j,
            quantization: 0.0,
            refresh: RefreshPolicy::Persistent { device_seed },
        },
    }
}

fn spec(rows: usize, cols: usize, shore: usize) -> Result<ChimeraSpec, JsValue> {
    if rows * cols * shore > 512 {
        return Err(js_err(
            "lattice too large for the demo (at most 512 qubits)",
        ));
    }
    Ok(ChimeraSpec::new(rows, cols, shore))
}

/// Node positions in unit-cell coordinates plus the edge list.
pub fn layout_value(rows: usize, cols: usize, shore: usize) -> anneal_tuner::Result<Value> {
    let g = build_chimera(&ChimeraSpec::new(rows, cols, shore))?;
    let nodes: Vec<Value> = g
        .nodes()
        .filter_map(|id| {
            let c = g.coord(id)?;
            let t = (c.index as f64 + 0.5) / shore as f64;
            // left shore drawn as a column, right shore as a row inside each cell
            let (x, y) = match c.partition {
                Partition::Left => (c.col as f64 + 0.2 + 0.6 * t, c.row as f64 + 0.12),
                Partition::Right => (c.col as f64 + 0.12, c.row as f64 + 0.2 + 0.6 * t),
            };
            let side = if c.partition == Partition::Left { "L" } else { "R" };
            Some(json!({ "id": id, "x": x, "y": y, "row": c.row, "col": c.col, "side": side, "k": c.index }))
        })
        .collect();
    Ok(json!({ "rows": rows, "cols": cols, "nodes": nodes, "edges": g.edges() }))
}

/// Scores and ranks of `n_gauges` gauges on a random +-1 spin glass.
#[allow(clippy::too_many_arguments)]
pub fn gauge_scan_value(
    rows: usize,
    cols: usize,
    shore: usize,
    n_gauges: usize,
    reads: usize,
    epsilon: f64,
    sigma_h: f64,
    sigma_j: f64,
    seed: u64,
) -> anneal_tuner::Result<Value> {
    let g = build_chimera(&ChimeraSpec::new(rows, cols, shore))?;
    let problem = random_spin_glass(&g, &[-1.0, 1.0], &[0.0], seed)?;
    let scan = gauge_scan(
        &Target::Plain(problem),
        &GaugeScanParams {
            n_gauges,
            settings: settings(reads, epsilon, sigma_h, sigma_j, seed, false),
            gauge_seed: seed,
            seed,
        },
    )?;
    let elite = scan.elite_rank()?;
    let greedy = scan.greedy_rank()?;
    let gauges: Vec<Value> = scan
        .entries
        .iter()
        .map(|e| {
            let (lowest, count) = e.logical.summary.lowest().unwrap_or((f64::NAN, 0));
            json!({
                "id": e.id.0,
                "score": e.logical.score.value,
                "lowest": lowest,
                "lowest_count": count,
                "elite_rank": elite.rank_of(e.id),
                "greedy_rank": greedy.rank_of(e.id),
            })
        })
        .collect();
    Ok(json!({ "epsilon": epsilon, "reads": reads, "gauges": gauges }))
}

/// Elite score and strict-embedding fraction across chain strengths on
/// the paired-chain embedding of a Chimera lattice.
pub fn je_sweep_value(
    rows: usize,
    cols: usize,
    shore: usize,
    reads: usize,
    epsilon: f64,
    sigma: f64,
    seed: u64,
) -> anneal_tuner::Result<Value> {
    let spec = ChimeraSpec::new(rows, cols, shore);
    let g = build_chimera(&spec)?;
    let (emb, edges) = paired_chain_fixture(&spec, &g);
    // deterministic +-1 couplings from the seed
    let mut state = seed;
    let js: Vec<_> = edges
        .iter()
        .map(|&(i, j)| {
            state = anneal_tuner::seed::derive_seed(state, "coupling", 0);
            (i, j, if state & 1 == 0 { 1.0 } else { -1.0 })
        })
        .collect();
    let logical =
        LogicalObjective::from_ising(&IsingProblem::new(vec![0.0; emb.num_logical()], js, 0.0)?);
    let scan = je_scan(
        &logical,
        &emb,
        &g,
        &Gauge::identity(g.num_slots()),
        &JeScanParams {
            candidates: default_je_candidates(),
            settings: settings(reads, epsilon, sigma, sigma, seed, true),
            seed,
        },
    )?;
    let points: Vec<Value> = scan
        .points
        .iter()
        .map(|p| json!({ "je": p.chain_strength, "score": p.score.value, "f_se": p.f_se }))
        .collect();
    Ok(json!({ "logical_vars": emb.num_logical(), "points": points }))
}

#[wasm_bindgen]
pub fn chimera_layout(rows: usize, cols: usize, shore: usize) -> Result<String, JsValue> {
    spec(rows, cols, shore)?;
    layout_value(rows, cols, shore)
        .map(|v| v.to_string())
        .map_err(js_err)
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn run_gauge_scan(
    rows: usize,
    cols: usize,
    shore: usize,
    n_gauges: usize,
    reads: usize,
    epsilon: f64,
    sigma_h: f64,
    sigma_j: f64,
    seed: u32,
) -> Result<String, JsValue> {
    spec(rows, cols, shore)?;
    gauge_scan_value(
        rows,
        cols,
        shore,
        n_gauges,
        reads,
        epsilon,
        sigma_h,
        sigma_j,
        u64::from(seed),
    )
    .map(|v| v.to_string())
    .map_err(js_err)
}

#[wasm_bindgen]
pub fn run_je_sweep(
    rows: usize,
    cols: usize,
    shore: usize,
    reads: usize,
    epsilon: f64,
    sigma: f64,
    seed: u32,
) -> Result<String, JsValue> {
    spec(rows, cols, shore)?;
    je_sweep_value(rows, cols, shore, reads, epsilon, sigma, u64::from(seed))
        .map(|v| v.to_string())
        .map_err(js_err)
}
