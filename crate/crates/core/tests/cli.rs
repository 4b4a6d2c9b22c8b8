use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use anneal_tuner::embedding::{paired_chain_fixture, LogicalObjective};
use anneal_tuner::io;
use anneal_tuner::pipeline::{
    default_je_candidates, iterative_tune, TuneParams, TuneReport, TuneTarget,
};
use anneal_tuner::sampler::RefreshPolicy;
use anneal_tuner::{build_chimera, ChimeraSpec, IsingProblem, NoiseModel, SamplerConfig};
use serde_json::Value;

fn cli(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anneal-tuner"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn files(dir: &Path, ext: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == ext))
        .collect();
    v.sort();
    v
}

#[test]
fn score_of_small_readout_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    fs::write(
        &csv,
        "batch,read,energy_device,spins\n0,0,-5,+-\n0,1,-4,++\n0,2,-3,--\n0,3,-2,-+\n0,4,-1,++\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = cli(
        &out,
        &[
            "score",
            "--readouts",
            csv.to_str().unwrap(),
            "--epsilon",
            "40",
        ],
    );
    assert!(o.status.success());
    let rows =
        io::parse_scores_csv(&fs::read_to_string(&files(&out.join("scores"), "csv")[0]).unwrap())
            .unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].score, Some(4.5));
    assert_eq!(rows[0].n_reads, 5);
}

#[test]
fn exit_codes_and_error_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = cli(&out, &["score", "--readouts", "missing.csv"]);
    assert_eq!(o.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "validation");

    let o = cli(&out, &["generate", "--chimera", "2x2", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));

    let o = cli(&out, &["no-such-command"]);
    assert_eq!(o.status.code(), Some(1));

    let o = cli(&out, &["generate", "--chimera", "1x1x4", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn manifest_records_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert!(
        cli(&out, &["generate", "--chimera", "2x2x4", "--seed", "5"])
            .status
            .success()
    );
    let instance = files(&out.join("instances"), "txt").remove(0);
    let o = cli(
        &out,
        &[
            "sample",
            "--instance",
            instance.to_str().unwrap(),
            "--n-reads",
            "50",
            "--sweeps",
            "20",
            "--seed",
            "9",
            "--threads",
            "1",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let manifest: Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let artifacts = manifest["artifacts"].as_array().unwrap();
    assert_eq!(artifacts.len(), 4);
    for a in artifacts {
        let bytes = fs::read(out.join(a["path"].as_str().unwrap())).unwrap();
        assert_eq!(a["artifact_hash"].as_str().unwrap().len(), 64);
        assert!(!bytes.is_empty());
    }
    let sample = &artifacts[2];
    assert_eq!(sample["command"], "sample");
    assert_eq!(sample["seed"], 9);
    // output and thread flags do not belong to the configuration
    let args: Vec<&str> = sample["args"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert!(!args.contains(&"--threads") && !args.contains(&"--out"));
    assert!(args.contains(&"--n-reads"));

    let rows = io::parse_readouts_csv(
        &fs::read_to_string(&files(&out.join("readouts"), "csv")[0]).unwrap(),
    )
    .unwrap();
    assert_eq!(rows.len(), 50);
}

#[test]
fn cli_tune_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ChimeraSpec::new(1, 2, 4);
    let graph = build_chimera(&spec).unwrap();
    let (emb, edges) = paired_chain_fixture(&spec, &graph);
    let logical = IsingProblem::new(
        vec![0.0; emb.num_logical()],
        edges
            .iter()
            .enumerate()
            .map(|(k, &(i, j))| (i, j, if k % 3 == 0 { 1.0 } else { -1.0 })),
        0.0,
    )
    .unwrap();
    let p = |name: &str| dir.path().join(name);
    fs::write(p("l.txt"), io::write_instance(&logical)).unwrap();
    fs::write(p("g.txt"), io::write_graph(&graph)).unwrap();
    fs::write(p("e.json"), io::write_embedding(&emb).unwrap()).unwrap();

    let out = p("out");
    let o = cli(
        &out,
        &[
            "tune",
            "--instance",
            p("l.txt").to_str().unwrap(),
            "--embedding",
            p("e.json").to_str().unwrap(),
            "--graph",
            p("g.txt").to_str().unwrap(),
            "--n-gauges",
            "6",
            "--n-reads",
            "100",
            "--total-reads",
            "400",
            "--top-k",
            "2",
            "--epsilon",
            "5",
            "--sweeps",
            "8",
            "--beta-end",
            "20",
            "--sigma-j",
            "0.05",
            "--sigma-h",
            "0.05",
            "--device-seed",
            "4",
            "--seed",
            "21",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let from_cli: TuneReport =
        serde_json::from_str(&fs::read_to_string(&files(&out.join("reports"), "json")[0]).unwrap())
            .unwrap();

    let params = TuneParams {
        n_gauges: 6,
        scan_reads: 100,
        total_reads: 400,
        epsilon: 5.0,
        top_k: 2,
        sampler: SamplerConfig {
            n_reads: 100,
            sweeps: 8,
            beta_end: 20.0,
            seed: 21,
            ..SamplerConfig::default()
        },
        noise: NoiseModel {
            sigma_h: 0.05,
            sigma_j: 0.05,
            quantization: 0.0,
            refresh: RefreshPolicy::Persistent { device_seed: 4 },
        },
        seed: 21,
        second_je_scan: false,
        target_energy: None,
        ground_energy: None,
    };
    let target = TuneTarget::Embedded {
        logical: LogicalObjective::from_ising(&logical),
        embedding: emb,
        graph,
        candidates: default_je_candidates(),
    };
    let from_lib = iterative_tune(&target, &params).unwrap();
    assert_eq!(from_cli, from_lib);
}
