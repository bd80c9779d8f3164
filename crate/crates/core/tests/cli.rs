//! End-to-end checks of the `edge-alloc` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use edge_alloc::learners::{train_base, BaseLearnerSpec, BaseModel, EnsembleModel, LabeledDataset, ModelFile};
use edge_alloc::model::{ContextVector, DatasetDigest};
use edge_alloc::relevance::confidence_intervals;
use edge_alloc::simulator::Scenario;
use serde_json::Value;
use tempfile::TempDir;

const MODELS: [&str; 3] = ["model_adaboost.json", "model_stacking.json", "model_bagging.json"];

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edge-alloc"))
        .args(args)
        .env("RUST_LOG", "info")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn out_arg(dir: &Path) -> String {
    dir.display().to_string()
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map(|rd| rd.filter_map(|e| e.ok()).map(|e| e.file_name().to_string_lossy().into_owned()).collect())
        .unwrap_or_default();
    names.sort();
    names
}

/// A small config so the pipeline runs in a few seconds.
fn small_config(dir: &Path) -> PathBuf {
    let p = dir.join("small.toml");
    std::fs::write(
        &p,
        "schema_version = 1\n\
         [scenario]\nnodes = 6\nqueries = 30\nsamples_per_node = 200\n\
         [pipeline]\ntraining_size = 800\n\
         [bench]\nnodes = [5, 8]\nseeds = [0]\ndatasets = [\"uniform\", \"trace\"]\n",
    )
    .unwrap();
    p
}

fn gen_and_train(work: &Path, out: &Path) {
    let cfg = small_config(work);
    let g = run(&["gen", "--config", cfg.to_str().unwrap(), "--out", &out_arg(out), "--seed", "4"]);
    assert_eq!(code(&g), 0, "{}", String::from_utf8_lossy(&g.stderr));
    let t = run(&["train", "--config", cfg.to_str().unwrap(), "--out", &out_arg(out), "--seed", "4"]);
    assert_eq!(code(&t), 0, "{}", String::from_utf8_lossy(&t.stderr));
}

#[test]
fn gen_writes_files_and_is_deterministic() {
    let work = TempDir::new().unwrap();
    let (a, b) = (work.path().join("a"), work.path().join("b"));
    for dir in [&a, &b] {
        let o = run(&["gen", "--out", &out_arg(dir), "--seed", "9", "--n", "12"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).contains("positive ratio"));
    }
    assert_eq!(files_in(&a), ["config.toml", "corpus.tsv", "scenario.json", "td.csv"]);
    for f in ["scenario.json", "td.csv", "corpus.tsv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let s = Scenario::load(&a.join("scenario.json")).unwrap();
    assert_eq!(s.nodes.len(), 12);
    assert_eq!(s.queries.len(), 1000);

    let other = work.path().join("c");
    assert_eq!(code(&run(&["gen", "--out", &out_arg(&other), "--seed", "10", "--n", "12"])), 0);
    assert_ne!(std::fs::read(a.join("scenario.json")).unwrap(), std::fs::read(other.join("scenario.json")).unwrap());
}

#[test]
fn config_errors_exit_2_without_output() {
    let work = TempDir::new().unwrap();
    let out = work.path().join("out");
    for (name, text) in [
        ("corrupt.toml", "schema_version = 1\n[scenario\nnodes = 3"),
        ("unknown.toml", "schema_version = 1\nbogus_key = true\n"),
        ("version.toml", "schema_version = 99\n"),
        ("range.toml", "[pipeline.policy]\nrho_l = 1.5\n"),
    ] {
        let p = work.path().join(name);
        std::fs::write(&p, text).unwrap();
        let o = run(&["gen", "--config", p.to_str().unwrap(), "--out", &out_arg(&out)]);
        assert_eq!(code(&o), 2, "{name}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stderr).contains("error:"));
        assert!(files_in(&out).is_empty(), "{name} left {:?}", files_in(&out));
    }
    let missing = run(&["gen", "--config", "/no/such/config.toml", "--out", &out_arg(&out)]);
    assert_eq!(code(&missing), 2);
    assert_eq!(code(&run(&["gen", "--scheme", "best"])), 2);
}

#[test]
fn train_is_deterministic_and_beats_baseline() {
    let work = TempDir::new().unwrap();
    let out = work.path().join("out");
    gen_and_train(work.path(), &out);
    let first: Vec<Vec<u8>> = MODELS.iter().map(|m| std::fs::read(out.join(m)).unwrap()).collect();
    for m in MODELS {
        ModelFile::load(&out.join(m)).unwrap();
    }
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out.join("train_report.json")).unwrap()).unwrap();
    let rows = report.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for r in rows {
        let acc = r["held_out_accuracy"].as_f64().unwrap();
        let base = r["majority_baseline"].as_f64().unwrap();
        assert!(acc >= base, "{r}");
    }

    let cfg = work.path().join("small.toml");
    let again = run(&["train", "--config", cfg.to_str().unwrap(), "--out", &out_arg(&out), "--seed", "4"]);
    assert_eq!(code(&again), 0);
    for (m, bytes) in MODELS.iter().zip(&first) {
        assert_eq!(&std::fs::read(out.join(m)).unwrap(), bytes, "{m}");
    }
}

#[test]
fn train_data_errors_exit_3() {
    let work = TempDir::new().unwrap();
    let out = work.path().join("out");
    let o = run(&["train", "--out", &out_arg(&out)]);
    assert_eq!(code(&o), 3);

    std::fs::create_dir_all(&out).unwrap();
    let mut td = String::from("o,a,r,l,s,label\n");
    for i in 0..20 {
        td.push_str(&format!("0.5,1.0,0.{i:02},0.3,0.7,0\n"));
    }
    std::fs::write(out.join("td.csv"), &td).unwrap();
    let single = run(&["train", "--out", &out_arg(&out)]);
    assert_eq!(code(&single), 3);
    assert!(String::from_utf8_lossy(&single.stderr).contains("labeling policy"));

    std::fs::write(out.join("td.csv"), "o,a,r,l,s,label\n0.5,1.0,0.2,0.3,oops,1\n").unwrap();
    let bad = run(&["train", "--out", &out_arg(&out)]);
    assert_eq!(code(&bad), 3);
    assert!(String::from_utf8_lossy(&bad.stderr).contains(":2"));
    assert!(MODELS.iter().all(|m| !out.join(m).exists()));
}

#[test]
fn allocate_requires_models() {
    let work = TempDir::new().unwrap();
    let out = work.path().join("out");
    assert_eq!(code(&run(&["gen", "--out", &out_arg(&out), "--n", "4"])), 0);
    let o = run(&["allocate", "--out", &out_arg(&out)]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("model_adaboost.json"));
}

fn allocate_json(out: &Path, extra: &[&str]) -> Value {
    let mut args = vec!["allocate", "--format", "machine", "--out"];
    let o = out_arg(out);
    args.push(&o);
    args.extend_from_slice(extra);
    let r = run(&args);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    serde_json::from_slice(&r.stdout).unwrap()
}

/// Node `i` holds data centered on `0.1 + 0.15 i` in every dimension, with
/// identical load and speed, so only relevance tells the nodes apart.
fn separated_scenario(out: &Path) -> Scenario {
    let path = out.join("scenario.json");
    let mut s = Scenario::load(&path).unwrap();
    let dims = s.config.dims;
    for (i, node) in s.nodes.iter_mut().enumerate() {
        node.digest = DatasetDigest::new(vec![0.1 + 0.15 * i as f64; dims], vec![0.2; dims], 1000).unwrap();
        node.load = 0.2;
        node.speed = 0.9;
    }
    s.save(&path).unwrap();
    s
}

#[test]
fn allocate_picks_the_only_matching_node() {
    let work = TempDir::new().unwrap();
    let out = work.path().join("out");
    gen_and_train(work.path(), &out);
    let s = separated_scenario(&out);
    let ci = confidence_intervals(&s.nodes[3].digest, s.config.relevance.z, s.config.relevance.ci_denominator).unwrap();
    let ranges = ci.iter().map(|iv| format!("{:?}:{:?}", iv.lo, iv.hi)).collect::<Vec<_>>().join(",");
    let stmt = "SELECT temperature FROM sensors WHERE battery > 10";
    for scheme in ["cs", "mvs"] {
        let v = allocate_json(&out, &["--scheme", scheme, "--statement", stmt, "--ranges", &ranges]);
        assert_eq!(v["selected"], 3, "{scheme}: {v}");
        assert_eq!(v["fused"][3], 1, "{scheme}: {v}");
    }
    let two = allocate_json(&out, &["--k", "2", "--statement", stmt, "--ranges", &ranges]);
    let hosts = two["hosts"].as_array().unwrap();
    assert_eq!(hosts.len(), 2);
    assert_eq!(hosts[0], 3);
    assert_ne!(hosts[1], 3);

    let human = run(&["allocate", "--out", &out_arg(&out), "--statement", stmt, "--ranges", &ranges]);
    assert!(String::from_utf8_lossy(&human.stdout).contains("selected node 3"));
    let too_many = run(&["allocate", "--out", &out_arg(&out), "--k", "99"]);
    assert_eq!(code(&too_many), 2);
}

#[test]
fn schemes_differ_on_a_split_vote() {
    let work = TempDir::new().unwrap();
    let out = work.path().join("out");
    assert_eq!(code(&run(&["gen", "--out", &out_arg(&out), "--n", "2"])), 0);
    let path = out.join("scenario.json");
    let mut s = Scenario::load(&path).unwrap();
    s.nodes[0].load = 0.1;
    s.nodes[1].load = 0.5;
    s.save(&path).unwrap();

    // Y1 = Y2 = 1 everywhere; Y3 = 1 only for loads of at least 0.3.
    let arity = ContextVector::ARITY;
    let always = BaseModel::Constant { label: 1, arity };
    let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![0.5, 1.0, 0.5, i as f64 / 20.0, 0.8]).collect();
    let labels = rows.iter().map(|x| u8::from(x[3] >= 0.3)).collect();
    let stump = train_base(&BaseLearnerSpec::stump(), &LabeledDataset::new(rows, labels).unwrap(), 0).unwrap();
    let models = [
        EnsembleModel::Bagging { members: vec![always.clone()] },
        EnsembleModel::Bagging { members: vec![always] },
        EnsembleModel::Bagging { members: vec![stump] },
    ];
    for (name, m) in MODELS.iter().zip(models) {
        ModelFile::new(m).save(&out.join(name)).unwrap();
    }

    let cs = allocate_json(&out, &["--scheme", "cs"]);
    let mvs = allocate_json(&out, &["--scheme", "mvs"]);
    assert_eq!(cs["ensemble_labels"], serde_json::json!([[1, 1, 0], [1, 1, 1]]));
    assert_eq!(cs["selected"], 1);
    assert_eq!(mvs["selected"], 0);
}

#[test]
fn bench_writes_tables_and_resumes() {
    let work = TempDir::new().unwrap();
    let out = work.path().join("out");
    let cfg = small_config(work.path());
    let args = ["bench", "--config", cfg.to_str().unwrap(), "--out", &out_arg(&out)];
    let first = run(&args);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    let log = String::from_utf8_lossy(&first.stderr).into_owned();
    assert_eq!(log.lines().filter(|l| l.contains("/4]")).count(), 4, "{log}");
    for f in ["runs.csv", "summary.csv", "density.csv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let runs_dir = out.join("runs");
    let run_files = files_in(&runs_dir);
    assert_eq!(run_files.len(), 8);
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 8);
    let records = std::fs::read_to_string(runs_dir.join(&run_files[0])).unwrap();
    assert_eq!(records.lines().count(), 1 + 30);

    // Second run reuses every cell.
    let before: Vec<Vec<u8>> = run_files.iter().map(|f| std::fs::read(runs_dir.join(f)).unwrap()).collect();
    let second = run(&args);
    assert_eq!(code(&second), 0);
    let log = String::from_utf8_lossy(&second.stderr).into_owned();
    assert_eq!(log.lines().filter(|l| l.contains("cached")).count(), 4, "{log}");
    let after: Vec<Vec<u8>> = run_files.iter().map(|f| std::fs::read(runs_dir.join(f)).unwrap()).collect();
    assert_eq!(before, after);

    // A lost cell is recomputed with the same decisions.
    let victim = runs_dir.join(&run_files[0]);
    std::fs::remove_file(&victim).unwrap();
    assert_eq!(code(&run(&args)), 0);
    let strip = |bytes: &[u8]| -> Vec<String> {
        // Drop the timing column, which is wall-clock dependent.
        String::from_utf8_lossy(bytes)
            .lines()
            .map(|l| l.split(',').enumerate().filter(|(i, _)| *i != 15).map(|(_, c)| c).collect::<Vec<_>>().join(","))
            .collect()
    };
    assert_eq!(strip(&std::fs::read(&victim).unwrap()), strip(&before[0]));
}

#[test]
fn bench_reads_an_external_trace() {
    let work = TempDir::new().unwrap();
    let trace = work.path().join("util.csv");
    let mut text = String::from("time;host;busy\n");
    for i in 0..200 {
        text.push_str(&format!("{i};h{};{}\n", i % 7, (i * 37) % 100));
    }
    std::fs::write(&trace, text).unwrap();
    let cfg = work.path().join("t.toml");
    std::fs::write(
        &cfg,
        "[scenario]\nqueries = 20\nsamples_per_node = 100\n[pipeline]\ntraining_size = 500\n\
         [bench]\nnodes = [6]\nseeds = [1]\ndatasets = [\"trace\"]\nschemes = [\"cs\"]\n",
    )
    .unwrap();
    let out = work.path().join("out");
    let o = run(&[
        "bench",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        &out_arg(&out),
        "--trace",
        trace.to_str().unwrap(),
        "--trace-column",
        "busy",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(files_in(&out.join("runs")).len(), 1);

    let fresh = out_arg(&work.path().join("fresh"));
    let wrong = run(&[
        "bench",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        &fresh,
        "--trace",
        trace.to_str().unwrap(),
        "--trace-column",
        "nope",
    ]);
    assert_eq!(code(&wrong), 3, "{}", String::from_utf8_lossy(&wrong.stderr));
    assert!(String::from_utf8_lossy(&wrong.stderr).contains("nope"));
}
