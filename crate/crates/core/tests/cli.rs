use std::path::Path;
use std::process::{Command, Output};

fn geoforest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geoforest"))
        .args(args)
        .env_remove("GEOFOREST_SEED")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn height_tail_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        let out = geoforest(&[
            "height-tail", "--samples", "100", "--nmax", "32", "--seed", "1",
            "--threads", threads, "--out", dir.path().to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        assert!(stderr(&out).contains("seed: 1"));
    }
    assert_eq!(read(a.path(), "height-tail.csv"), read(b.path(), "height-tail.csv"));
    assert_eq!(read(a.path(), "height-tail-samples.csv"), read(b.path(), "height-tail-samples.csv"));
    let csv = String::from_utf8(read(a.path(), "height-tail.csv")).unwrap();
    assert!(csv.starts_with("n,p,ci_lo,ci_hi\n1,1.0,"));
}

#[test]
fn printed_seed_reproduces_the_run() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = geoforest(&["walk-dist", "--replicas", "200", "--out", a.path().to_str().unwrap()]);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let seed = stderr(&first)
        .lines()
        .find_map(|l| l.strip_prefix("seed: ").map(str::to_owned))
        .unwrap();
    let second = geoforest(&["walk-dist", "--replicas", "200", "--seed", &seed, "--out", b.path().to_str().unwrap()]);
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(read(a.path(), "walk-dist.csv"), read(b.path(), "walk-dist.csv"));
}

#[test]
fn seed_sources_in_priority_order() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    std::fs::write(&config, r#"{"seed": 22, "samples": 10, "nmax": 8}"#).unwrap();
    let out_dir = dir.path().join("out");
    let run = |extra: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_geoforest"));
        cmd.args(["height-tail", "--samples", "10", "--nmax", "8", "--out", out_dir.to_str().unwrap()]).args(extra);
        match env {
            Some(v) => cmd.env("GEOFOREST_SEED", v),
            None => cmd.env_remove("GEOFOREST_SEED"),
        };
        stderr(&cmd.output().unwrap())
    };
    assert!(run(&[], Some("33")).contains("seed: 33"));
    assert!(run(&["--config", config.to_str().unwrap()], Some("33")).contains("seed: 22"));
    assert!(run(&["--config", config.to_str().unwrap(), "--seed", "11"], Some("33")).contains("seed: 11"));
}

#[test]
fn config_file_supplies_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    let out_dir = dir.path().join("out");
    std::fs::write(
        &config,
        format!(r#"{{"samples": 50, "nmax": 16, "seed": 5, "out": {:?}}}"#, out_dir.to_str().unwrap()),
    )
    .unwrap();
    let out = geoforest(&["height-tail", "--config", config.to_str().unwrap(), "--nmax", "12"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_slice(&read(&out_dir, "height-tail.json")).unwrap();
    assert_eq!(json["config"]["samples"], 50);
    assert_eq!(json["config"]["n_max"], 12);
    assert_eq!(json["seed"], 5);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(geoforest(&["dual", "--frobnicate"]).status.code(), Some(2));
    assert_eq!(geoforest(&["height-tail", "--samples", "10"]).status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "[1, 2]").unwrap();
    assert_eq!(geoforest(&["dual", "--config", bad.to_str().unwrap(), "--out", d]).status.code(), Some(2));
    assert_eq!(geoforest(&["walk-dist", "--a", "9", "--out", d]).status.code(), Some(2));
    // roots that wander between checkpoints exceed a zero exclusion budget
    let failed = geoforest(&[
        "root-dist", "--replicas", "200", "--n0", "4", "--checkpoints", "3", "--agree", "3",
        "--max-exclusion", "0", "--seed", "1", "--out", d,
    ]);
    assert_eq!(failed.status.code(), Some(3), "{}", stderr(&failed));
    assert!(stderr(&failed).contains("exclusion rate"));
    assert_eq!(geoforest(&["closed-forms", "--help"]).status.code(), Some(0));
}

#[test]
fn closed_forms_prints_the_root_probability() {
    let out = geoforest(&["closed-forms", "--substrate", "bernoulli", "--p-minus", "0.6667", "--p-plus", "0.3333", "--a", "1.0"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("quantity,value\n"));
    let p: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("root_prob,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!((p - 0.25).abs() < 1e-3, "{p}");

    let fr = String::from_utf8(geoforest(&["closed-forms", "--substrate", "finite-rooted", "--m", "1"]).stdout).unwrap();
    assert!(fr.contains("direction_prob,0.25\n"));
}

#[test]
fn transform_agrees_with_its_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let out = geoforest(&[
        "transform", "--s", "0.5", "--u", "0.0", "--mc-samples", "20000", "--oracle-samples", "20000",
        "--seed", "3", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_slice(&read(dir.path(), "transform.json")).unwrap();
    let row = &json["metrics"]["rows"][0];
    let value = row["value"]["value"].as_f64().unwrap();
    let bound = row["value"]["truncation_bound"].as_f64().unwrap();
    let oracle = &row["oracle"];
    let (est, se) = (oracle["value"].as_f64().unwrap(), oracle["stderr"].as_f64().unwrap());
    assert!((value - est).abs() <= bound + 4.0 * se, "{value} vs {est} +- {se}");
    let csv = String::from_utf8(read(dir.path(), "transform.csv")).unwrap();
    assert!(csv.starts_with("s,u,value,truncation_bound\n0.5,0.0,"));
}

#[test]
fn every_subcommand_documents_its_flags() {
    for sub in ["forest", "root-dist", "walk-dist", "height-tail", "dual", "transform", "closed-forms"] {
        let out = geoforest(&[sub, "--help"]);
        assert_eq!(out.status.code(), Some(0));
        let help = String::from_utf8(out.stdout).unwrap();
        for flag in ["--config", "--seed", "--threads", "--out"] {
            assert!(help.contains(flag), "{sub} lacks {flag}");
        }
        assert!(help.contains("[default:"), "{sub} shows no defaults");
    }
}

#[test]
fn forest_writes_a_root_map() {
    let dir = tempfile::tempdir().unwrap();
    let out = geoforest(&["forest", "--x1", "6", "--x2", "5", "--seed", "2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = String::from_utf8(read(dir.path(), "forest.csv")).unwrap();
    assert!(csv.starts_with("x1,x2,root_z\n"));
    assert!(csv.lines().any(|l| l.starts_with("6,5,")));
}
