use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use aecomm::cli::{config_to_toml, load_config, parse_config, sha256_hex};
use aecomm::harness::config::ExperimentConfig;
use aecomm::nncore::read_checkpoint;

const SMALL: &str = r#"
[training]
steps = 300

[sweep]
train_ebn0_db = [0.0, 7.0]
test_ebn0_min_db = -2.0
test_ebn0_max_db = 6.0
test_ebn0_step_db = 2.0
max_blocks = 20000
chunk_blocks = 2500

[seeds]
values = [1, 2]

[robustness]
rho = [0.5]
"#;

fn aecomm(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aecomm"))
        .current_dir(cwd)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_small(dir: &Path) -> String {
    let path = dir.join("small.toml");
    fs::write(&path, SMALL).unwrap();
    path.to_str().unwrap().to_string()
}

fn manifest_outputs(dir: &Path) -> BTreeMap<String, String> {
    let text = fs::read_to_string(dir.join("manifest.toml")).unwrap();
    let value: toml::Table = toml::from_str(&text).unwrap();
    value["outputs"]
        .as_table()
        .unwrap()
        .iter()
        .map(|(k, v)| (k.clone(), v.as_str().unwrap().to_string()))
        .collect()
}

fn assert_digests_match(dir: &Path) {
    for (name, digest) in manifest_outputs(dir) {
        assert_eq!(
            sha256_hex(&fs::read(dir.join(&name)).unwrap()),
            digest,
            "{name}"
        );
    }
}

#[test]
fn overlap_with_defaults_writes_expected_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = aecomm(
        dir.path(),
        &[
            "overlap",
            "--config",
            "default",
            "--out",
            out.to_str().unwrap(),
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("overlap.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("test_ebn0_db,overlap_pct,kl_nats"));
    let expected = [(-4.0, 45.70), (0.0, 62.97), (5.0, 88.91), (8.0, 94.43)];
    for (line, (db, pct)) in lines.zip(expected) {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(f[0], db);
        assert!((f[1] - pct).abs() <= 0.05, "{line}");
    }
    assert_digests_match(&out);
}

#[test]
fn usage_errors_exit_one_with_usage() {
    let dir = tempfile::tempdir().unwrap();
    let o = aecomm(dir.path(), &["transmogrify"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    let o = aecomm(dir.path(), &["overlap", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    let o = aecomm(dir.path(), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn config_errors_exit_one_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(
        &bad,
        "[channel]\nkind = \"awgn\"\n\n[sweep]\nnot_a_key = 1\n",
    )
    .unwrap();
    let o = aecomm(
        dir.path(),
        &["overlap", "--config", bad.to_str().unwrap(), "--out", "o"],
    );
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 5") && err.contains("not_a_key"), "{err}");

    fs::write(&bad, "[channel]\nrate = 0\n").unwrap();
    let o = aecomm(
        dir.path(),
        &["overlap", "--config", bad.to_str().unwrap(), "--out", "o"],
    );
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("rate") && err.contains("line 2"), "{err}");

    let o = aecomm(
        dir.path(),
        &["overlap", "--config", "missing.toml", "--out", "o"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn reference_config_equals_defaults_and_round_trips() {
    let text = include_str!("../../../configs/reference.toml");
    let reference = parse_config(text, "reference.toml").unwrap();
    assert_eq!(reference, ExperimentConfig::default());
    assert_eq!(parse_config("", "empty").unwrap(), reference);
    assert_eq!(
        parse_config(&config_to_toml(&reference), "again").unwrap(),
        reference
    );
    assert_eq!(load_config("default").unwrap(), reference);
}

#[test]
fn sweep_is_reproducible_from_its_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small(dir.path());
    for run in ["a", "b"] {
        let o = aecomm(
            dir.path(),
            &["sweep", "--quiet", "--config", &cfg, "--out", run],
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert_digests_match(&dir.path().join(run));
    }
    let a = manifest_outputs(&dir.path().join("a"));
    assert_eq!(a, manifest_outputs(&dir.path().join("b")));
    assert!(a.contains_key("sweep.csv") && a.contains_key("plot_sweep.py"));

    // Re-run from the snapshot written next to the outputs.
    let o = aecomm(
        dir.path(),
        &[
            "sweep",
            "--quiet",
            "--config",
            "a/config.toml",
            "--out",
            "c",
        ],
    );
    assert!(o.status.success());
    assert_eq!(
        fs::read(dir.path().join("a/sweep.csv")).unwrap(),
        fs::read(dir.path().join("c/sweep.csv")).unwrap()
    );
}

#[test]
fn seed_flag_overrides_config_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small(dir.path());
    let o = aecomm(
        dir.path(),
        &[
            "train", "--quiet", "--config", &cfg, "--seed", "9", "--out", "t",
        ],
    );
    assert!(o.status.success());
    let snap = load_config(dir.path().join("t/config.toml").to_str().unwrap()).unwrap();
    assert_eq!(snap.seeds.values, vec![9, 10]);
}

#[test]
fn train_then_probe_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small(dir.path());
    let o = aecomm(
        dir.path(),
        &[
            "train",
            "--quiet",
            "--config",
            &cfg,
            "--ebn0-db",
            "-1.5",
            "--out",
            "t",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let params = read_checkpoint(fs::File::open(dir.path().join("t/model.ckpt")).unwrap()).unwrap();
    assert_eq!((params.message_count, params.channel_uses), (16, 7));
    let history = fs::read_to_string(dir.path().join("t/history.csv")).unwrap();
    assert!(history.starts_with("step,loss\n"));

    let o = aecomm(
        dir.path(),
        &[
            "robustness",
            "--quiet",
            "--config",
            &cfg,
            "--checkpoint",
            "t/model.ckpt",
            "--out",
            "r",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("r/robustness.csv")).unwrap();
    for name in ["awgn", "correlated rho=0.5", "rayleigh block"] {
        assert!(csv.contains(name), "{name}");
    }
    assert_digests_match(&dir.path().join("r"));
}

#[test]
fn baseline_has_closed_form_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small(dir.path());
    let o = aecomm(
        dir.path(),
        &["baseline", "--quiet", "--config", &cfg, "--out", "b"],
    );
    assert!(o.status.success());
    let mut reader = csv::Reader::from_path(dir.path().join("b/baseline.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    assert_eq!(headers.iter().next_back(), Some("closed_form_bler"));
    let systems: Vec<String> = reader
        .records()
        .map(|r| r.unwrap()[0].to_string())
        .collect();
    for s in ["hamming_hard", "hamming_mld", "uncoded"] {
        assert_eq!(systems.iter().filter(|x| *x == s).count(), 5);
    }
}

#[test]
fn gradcheck_reports_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = aecomm(dir.path(), &["gradcheck", "--quiet"]);
    assert!(o.status.success());
    let out = String::from_utf8_lossy(&o.stdout);
    let err: f64 = out
        .trim()
        .strip_prefix("max_rel_error ")
        .unwrap()
        .parse()
        .unwrap();
    assert!(err < 1e-4);
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none());
}

#[test]
fn runs_write_only_inside_out() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_small(dir.path());
    let o = aecomm(
        dir.path(),
        &[
            "baseline",
            "--quiet",
            "--config",
            &cfg,
            "--out",
            "nested/out",
        ],
    );
    assert!(o.status.success());
    let mut top: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    top.sort();
    assert_eq!(top, vec!["nested", "small.toml"]);
    let mut inner: Vec<String> = fs::read_dir(dir.path().join("nested/out"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    inner.sort();
    assert_eq!(
        inner,
        vec![
            "baseline.csv",
            "config.toml",
            "manifest.toml",
            "plot_baseline.py"
        ]
    );
}
