use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"{"layers": [{"kind": "dense", "n_in": 2, "n_out": 1, "threshold": 0.5, "weights": [[0.75], [0.5]]}]}"#;

fn resparc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resparc")).args(args).output().expect("binary runs")
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn cost_run(topology: &Path, out: &Path) -> Output {
    resparc(&[
        "cost",
        "--topology",
        topology.to_str().unwrap(),
        "--timesteps",
        "4",
        "--rate",
        "0.5",
        "--trace",
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn tiny_network_writes_artifacts_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let topo = dir.path().join("tiny.json");
    fs::write(&topo, TINY).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = cost_run(&topo, out);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let first = files(&a);
    for f in ["plan.json", "counters.csv", "spikes_layer0.csv", "energy.csv", "latency.csv", "comparison.csv", "trace.csv"] {
        assert!(first.contains_key(f), "{f} missing");
    }
    assert_eq!(first, files(&b));

    let plan: serde_json::Value = serde_json::from_slice(&first["plan.json"]).unwrap();
    let cells = &plan["tiles"][0]["cells"];
    assert_eq!(cells.as_array().unwrap().len(), 2);
}

#[test]
fn dimension_mismatch_names_the_layer() {
    let dir = tempfile::tempdir().unwrap();
    let topo = dir.path().join("t.json");
    fs::write(&topo, r#"{"layers": [{"kind": "dense", "n_in": 3, "n_out": 2, "threshold": 1.0}]}"#).unwrap();
    let weights = dir.path().join("t.bin");
    let mut blob = Vec::new();
    blob.extend(2u32.to_le_bytes());
    blob.extend(2u32.to_le_bytes());
    blob.extend([0u8; 16]);
    fs::write(&weights, blob).unwrap();
    let o = resparc(&[
        "compile",
        "--topology",
        topo.to_str().unwrap(),
        "--weights",
        weights.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("layer 0"), "{err}");
}

#[test]
fn malformed_config_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let topo = dir.path().join("tiny.json");
    fs::write(&topo, TINY).unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[arch]\nmca_rows = \"wide\"\n").unwrap();
    let o = resparc(&["compile", "--topology", topo.to_str().unwrap(), "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.toml"));
}

#[test]
fn too_few_neurocells_exit_with_capacity_status() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<String> = (0..40).map(|_| format!("[{}]", vec!["0.5"; 40].join(","))).collect();
    let json = format!(
        r#"{{"layers": [{{"kind": "dense", "n_in": 40, "n_out": 40, "threshold": 1.0, "weights": [{}]}}]}}"#,
        rows.join(",")
    );
    let topo = dir.path().join("wide.json");
    fs::write(&topo, json).unwrap();
    let cfg = dir.path().join("small.toml");
    fs::write(&cfg, "[arch]\nmca_rows = 4\nmca_cols = 4\npacket_width = 4\nnc_grid_w = 1\nnc_grid_h = 1\nnum_neurocells = 2\n")
        .unwrap();
    let o = resparc(&[
        "compile",
        "--topology",
        topo.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn bad_arguments_exit_one() {
    assert_eq!(resparc(&["simulate"]).status.code(), Some(1));
    assert_eq!(resparc(&["--help"]).status.code(), Some(0));
}
