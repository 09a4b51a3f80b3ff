use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "\
[network]
n_exc = 80
n_inh = 20

[stimulus]
pattern_neurons = 10
pattern_window = 500
pattern_period = 1000

[run]
plastic_duration = 2000
fixed_duration = 3000
seed = 9

[analysis]
min_spikes = 4
";

fn gnatkit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gnatkit"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn config(dir: &Path) -> String {
    let path = dir.join("small.ini");
    fs::write(&path, SMALL).unwrap();
    path.display().to_string()
}

#[test]
fn simulate_then_analyze_a_small_network() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    let cfg = config(tmp.path());
    let out = gnatkit(&run, &["--config", &cfg, "simulate"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = gnatkit(&run, &["--config", &cfg, "--threads", "1", "--shuffle-seed", "3", "analyze"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for f in ["edges.csv", "gnats.csv", "subthreads.jsonl", "classes.json", "plots/raster-threads.svg"] {
        assert!(run.join(f).exists(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("run_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["runs"]["simulate"]["config"]["seeds"]["fixed_stimulus"], 12);
    assert_eq!(manifest["runs"]["simulate"]["config"]["network"]["n_exc"], 80);

    let out = gnatkit(&run, &["stats"]);
    assert_eq!(code(&out), 0);
    let stats: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(stats["graph"]["spikes"].as_u64().unwrap() > 0);
    assert_eq!(stats["graph"]["shuffle"]["seed"], 3);

    let svg = tmp.path().join("durations.svg");
    let out = gnatkit(&run, &["plot", "--kind", "durations", "--output", svg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(fs::read_to_string(svg).unwrap().starts_with("<svg"));
}

#[test]
fn same_seed_same_bytes_other_seed_other_train() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path());
    let dirs: Vec<_> = ["a", "b", "c"].iter().map(|d| tmp.path().join(d)).collect();
    for (dir, seed) in dirs.iter().zip(["9", "9", "10"]) {
        let out = gnatkit(dir, &["--config", &cfg, "--seed", seed, "simulate"]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    let read = |d: &Path| fs::read(d.join("spikes.csv")).unwrap();
    assert_eq!(read(&dirs[0]), read(&dirs[1]));
    assert_ne!(read(&dirs[0]), read(&dirs[2]));
}

#[test]
fn missing_upstream_stage_exits_3_and_names_it() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gnatkit(tmp.path(), &["build-graph"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("run `simulate` first"), "{}", stderr(&out));
}

#[test]
fn invalid_arguments_and_config_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = gnatkit(tmp.path(), &["plot", "--kind", "histogram"]);
    assert_eq!(code(&out), 2);

    let path = tmp.path().join("typo.ini");
    fs::write(&path, "[run]\nplastc_duration = 5\n").unwrap();
    let out = gnatkit(tmp.path(), &["--config", path.to_str().unwrap(), "simulate"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("run.plastc_duration"), "{}", stderr(&out));

    fs::write(&path, "[run]\nfixed_duration = 0\n").unwrap();
    let out = gnatkit(tmp.path(), &["--config", path.to_str().unwrap(), "simulate"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("run.fixed_duration"), "{}", stderr(&out));

    let out = gnatkit(tmp.path(), &["--tau=-1", "build-graph"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn malformed_input_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("spikes.csv"), "spike_id,neuron_id,time_ms\n0,0,5.0\n1,0,1.0\n").unwrap();
    fs::write(
        tmp.path().join("network.json"),
        r#"{"width_um": 1.0, "height_um": 1.0, "neurons": [{"id": 0, "x": 0.0, "y": 0.0, "excitatory": true}], "synapses": []}"#,
    )
    .unwrap();
    let out = gnatkit(tmp.path(), &["build-graph"]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
}
