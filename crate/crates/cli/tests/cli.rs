use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dimerlab::estimators::jackknife;
use dimerlab::kasteleyn::sector_densities;
use dimerlab::spectral::EdgeWeights;
use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dimerlab"))
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_cmd(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}\nstderr: {}", o.status.code(), String::from_utf8_lossy(&o.stderr));
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

/// Columns of a CSV file by header name.
fn read_columns(p: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(p).unwrap();
    let names: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    let mut cols = vec![Vec::new(); names.len()];
    for rec in r.records() {
        for (c, v) in cols.iter_mut().zip(rec.unwrap().iter()) {
            c.push(v.parse().unwrap_or(f64::NAN));
        }
    }
    (names, cols)
}

fn column<'a>(data: &'a (Vec<String>, Vec<Vec<f64>>), name: &str) -> &'a [f64] {
    let i = data.0.iter().position(|n| n == name).unwrap_or_else(|| panic!("no column {name}"));
    &data.1[i]
}

#[test]
fn fermi_points_at_uniform_weights() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &json!({"version": 1, "weights": [1, 1, 1], "tasks": ["fermi"]}));
    let out = tmp.path().join("out");
    ok(&run_cmd("exact", &cfg, &out, &[]));
    let f = read_json(&out.join("fermi.json"));
    let p: Vec<f64> = serde_json::from_value(f["p_plus"].clone()).unwrap();
    let q: Vec<f64> = serde_json::from_value(f["p_minus"].clone()).unwrap();
    assert!(p[0].abs() < 1e-10 && p[1].abs() < 1e-10, "{p:?}");
    assert!((q[0].abs() - PI).abs() < 1e-10 && (q[1].abs() - PI).abs() < 1e-10, "{q:?}");
    assert!(f["im_beta_over_alpha"].as_f64().unwrap() > 0.0);
}

#[test]
fn stepcheck_residual_is_roundoff() {
    let tmp = TempDir::new().unwrap();
    for (i, t) in [[1.3, 0.7, 0.9], [0.8, 1.1, 0.6], [2.0, 1.0, 1.0]].iter().enumerate() {
        let cfg = write_config(
            tmp.path(),
            &format!("c{i}.json"),
            &json!({"version": 1, "weights": t, "tasks": ["stepcheck"]}),
        );
        let out = tmp.path().join(format!("out{i}"));
        ok(&run_cmd("exact", &cfg, &out, &[]));
        let r = read_json(&out.join("stepcheck.json"))["max_residual"].as_f64().unwrap();
        assert!(r <= 1e-12, "t = {t:?}: residual {r}");
    }
}

#[test]
fn config_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cases = [
        ("zero.json", json!({"version": 1, "weights": [0, 1, 1], "tasks": ["fermi"]})),
        ("unknown.json", json!({"version": 1, "weights": [1, 1, 1], "tasks": ["fermi"], "colour": 3})),
        ("version.json", json!({"version": 2, "weights": [1, 1, 1], "tasks": ["fermi"]})),
        ("task.json", json!({"version": 1, "weights": [1, 1, 1], "tasks": ["nonsense"]})),
        ("needs_l.json", json!({"version": 1, "weights": [1, 1, 1], "tasks": ["partition"]})),
    ];
    for (name, v) in cases {
        let cfg = write_config(tmp.path(), name, &v);
        let o = run_cmd("exact", &cfg, &out, &[]);
        assert_eq!(o.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn unknown_key_reports_line_and_column() {
    let tmp = TempDir::new().unwrap();
    let p = tmp.path().join("c.json");
    fs::write(&p, "{\n  \"version\": 1,\n  \"weights\": [1, 1, 1],\n  \"tasks\": [],\n  \"extra\": true\n}\n").unwrap();
    let o = run_cmd("exact", &p, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("c.json:5:"), "{err}");
    assert!(err.contains("extra"), "{err}");
}

#[test]
fn frozen_weights_exit_3_with_weights() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &json!({"version": 1, "weights": [3, 1, 1], "tasks": ["fermi"]}));
    let o = run_cmd("exact", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("liquid") && err.contains("3.0"), "{err}");
}

#[test]
fn partition_and_sectors_on_small_torus() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        &json!({"version": 1, "weights": [1, 1, 1], "L": 4, "tasks": ["partition", "sectors"]}),
    );
    let out = tmp.path().join("out");
    ok(&run_cmd("exact", &cfg, &out, &[]));
    let z = read_json(&out.join("partition.json"))["log_z"].as_f64().unwrap().exp();
    assert!((z - 26752.0).abs() < 1e-6, "{z}");
    let sec = read_columns(&out.join("sectors.csv"));
    let total: f64 = column(&sec, "probability").iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert_eq!(read_json(&out.join("sector_signs.json"))["nonnegative"], json!(true));
}

#[test]
fn correlations_respect_wrap_guard() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        &json!({"version": 1, "weights": [1, 1, 1], "L": 16, "tasks": ["correlations"],
                "correlations": {"pair": [1, 1], "dmin": 2, "dmax": 8}}),
    );
    let o = run_cmd("exact", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn enumerate_oracles() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        &json!({"version": 1, "weights": [1, 1, 1], "sixv": [1, 1, 1, 2], "clusters": {"lambda": 0.1, "max_size": 3}}),
    );
    for l in ["2", "4"] {
        let out = tmp.path().join(format!("out{l}"));
        ok(&run_cmd("enumerate", &cfg, &out, &["--L", l]));
        let c = read_json(&out.join("counts.json"));
        assert!(c["rel_err"].as_f64().unwrap() <= 1e-10, "{c}");
        let expected = if l == "2" { 24 } else { 26752 };
        assert_eq!(c["matchings"].as_u64(), Some(expected));
        let s = read_json(&out.join("sixv.json"));
        assert!(s["rel_err"].as_f64().unwrap() <= 1e-12, "{s}");
        let cl = read_columns(&out.join("clusters.csv"));
        assert!(!cl.1[0].is_empty());
        for (a, b) in column(&cl, "coefficient").iter().zip(column(&cl, "closed_form")) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
        assert_eq!(read_json(&out.join("cluster_bound.json"))["ok"], json!(true));
    }
    let o = run_cmd("enumerate", &cfg, &tmp.path().join("big"), &["--L", "6"]);
    assert_eq!(o.status.code(), Some(2));
}

fn sample_config(dir: &Path, l: usize, t: [f64; 3], lambda: f64, sweeps: u64) -> PathBuf {
    write_config(
        dir,
        "sample.json",
        &json!({
            "version": 1, "L": l, "weights": t, "lambda": lambda, "interaction": "plaquette",
            "sweeps": sweeps, "thermalization": sweeps / 10, "measure_every": 2, "seed": 42,
            "checkpoint_every": 50,
            "observables": [
                {"kind": "energy"},
                {"kind": "density", "r": 1}, {"kind": "density", "r": 2},
                {"kind": "density", "r": 3}, {"kind": "density", "r": 4},
                {"kind": "edge", "x1": 1, "x2": 1, "r": 1},
                {"kind": "height_diff", "from": [1, 1], "to": [3, 1]},
                {"kind": "pair", "r": 1, "rp": 1, "d": [2, 0]},
                {"kind": "height_moment", "d": [2, 0], "power": 2}
            ]
        }),
    )
}

fn digests(out: &Path) -> Value {
    read_json(&out.join("manifest.json"))["outputs"].clone()
}

#[test]
fn sample_is_deterministic_across_runs_and_workers() {
    let tmp = TempDir::new().unwrap();
    let cfg = sample_config(tmp.path(), 8, [1.0, 1.0, 1.0], 0.2, 400);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    ok(&run_cmd("sample", &cfg, &a, &["--chains", "3"]));
    ok(&run_cmd("sample", &cfg, &b, &["--chains", "3"]));
    let mut one = bin();
    one.args([
        "--workers",
        "1",
        "sample",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        c.to_str().unwrap(),
        "--chains",
        "3",
    ]);
    ok(&one.output().unwrap());
    assert_eq!(digests(&a), digests(&b));
    assert_eq!(digests(&a), digests(&c));
    // chains differ from each other
    let d = digests(&a);
    assert_ne!(d["measurements_chain0.csv"], d["measurements_chain1.csv"]);
    // a different seed changes the stream
    let e = tmp.path().join("e");
    ok(&run_cmd("sample", &cfg, &e, &["--chains", "3", "--seed", "43"]));
    assert_ne!(digests(&e)["measurements_chain0.csv"], d["measurements_chain0.csv"]);
}

#[test]
fn manifest_digests_match_files() {
    let tmp = TempDir::new().unwrap();
    let cfg = sample_config(tmp.path(), 8, [1.0, 1.0, 1.0], 0.0, 100);
    let out = tmp.path().join("out");
    ok(&run_cmd("sample", &cfg, &out, &["--chains", "2"]));
    let m = read_json(&out.join("manifest.json"));
    assert_eq!(m["complete"], json!(true));
    assert_eq!(m["seeds"], json!([42]));
    assert_eq!(m["config"]["L"], json!(8));
    for (name, digest) in m["outputs"].as_object().unwrap() {
        use sha2::{Digest, Sha256};
        let bytes = fs::read(out.join(name)).unwrap();
        assert_eq!(hex::encode(Sha256::digest(&bytes)), digest.as_str().unwrap(), "{name}");
    }
}

#[test]
fn resume_matches_uninterrupted_run() {
    let tmp = TempDir::new().unwrap();
    let cfg = sample_config(tmp.path(), 8, [1.3, 0.7, 0.9], 0.3, 500);
    let full = tmp.path().join("full");
    let part = tmp.path().join("part");
    ok(&run_cmd("sample", &cfg, &full, &["--chains", "2"]));
    ok(&run_cmd("sample", &cfg, &part, &["--chains", "2", "--stop-after", "173"]));
    assert_eq!(read_json(&part.join("manifest.json"))["complete"], json!(false));
    ok(&run_cmd("sample", &cfg, &part, &["--chains", "2", "--resume"]));
    assert_eq!(read_json(&part.join("manifest.json"))["complete"], json!(true));
    for c in 0..2 {
        let name = format!("measurements_chain{c}.csv");
        assert_eq!(fs::read(full.join(&name)).unwrap(), fs::read(part.join(&name)).unwrap(), "{name}");
    }
    assert_eq!(digests(&full), digests(&part));
}

#[test]
fn resume_without_checkpoint_fails() {
    let tmp = TempDir::new().unwrap();
    let cfg = sample_config(tmp.path(), 8, [1.0, 1.0, 1.0], 0.0, 100);
    let o = run_cmd("sample", &cfg, &tmp.path().join("none"), &["--resume"]);
    assert!(!o.status.success());
}

#[test]
fn sample_rejects_bad_observable() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        &json!({"version": 1, "L": 8, "weights": [1, 1, 1], "sweeps": 10,
                "observables": [{"kind": "density", "r": 5}]}),
    );
    let o = run_cmd("sample", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn uninteracting_densities_match_exact() {
    let tmp = TempDir::new().unwrap();
    let t = [2.0, 1.0, 1.0];
    let cfg = sample_config(tmp.path(), 16, t, 0.0, 6000);
    let out = tmp.path().join("out");
    ok(&run_cmd("sample", &cfg, &out, &["--chains", "4"]));
    let data: Vec<_> = (0..4).map(|c| read_columns(&out.join(format!("measurements_chain{c}.csv")))).collect();
    let exact = sector_densities(16, &EdgeWeights::new(t[0], t[1], t[2]).unwrap(), (0, 0)).unwrap();
    for r in 1..=4 {
        let name = format!("density_t{r}");
        let chains: Vec<&[f64]> = data.iter().map(|d| column(d, &name)).collect();
        let e = jackknife(&[chains], |m| m[0]).unwrap();
        let pull = (e.value - exact[r - 1]) / e.stderr;
        assert!(pull.abs() <= 3.0, "{name}: {} +- {} vs {} (pull {pull:.2})", e.value, e.stderr, exact[r - 1]);
    }
}

#[test]
fn analyze_exact_tables_passes_haldane_check() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "exact.json",
        &json!({"version": 1, "weights": [1, 1, 1], "tasks": ["correlations", "variance_profile"],
                "correlations": {"pair": [1, 1], "dmin": 4, "dmax": 16},
                "profile": {"direction": "e1", "dmax": 32}}),
    );
    ok(&run_cmd("exact", &cfg, &tmp.path().join("ex"), &[]));
    let an = write_config(
        tmp.path(),
        "analyze.json",
        &json!({"version": 1, "tables": {"correlations": "ex/correlations.csv",
                "profile": "ex/variance_profile.csv", "weights": [1, 1, 1]}}),
    );
    let out = tmp.path().join("an");
    ok(&run_cmd("analyze", &an, &out, &[]));
    let fit = read_json(&out.join("fit.json"));
    let h = &fit["haldane"];
    assert_eq!(h["pass"], json!(true), "{h}");
    assert!((h["a"].as_f64().unwrap() - 1.0).abs() < 0.02, "{h}");
    assert!((h["nu"].as_f64().unwrap() - 1.0).abs() < 0.03, "{h}");
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("PASS"));
    assert!(out.join("corr_table.csv").exists() && out.join("profile_table.csv").exists());
}

#[test]
fn short_run_reports_insufficient_statistics() {
    let tmp = TempDir::new().unwrap();
    let cfg = sample_config(tmp.path(), 8, [1.0, 1.0, 1.0], 0.0, 60);
    let run_dir = tmp.path().join("run");
    ok(&run_cmd("sample", &cfg, &run_dir, &[]));
    let an = write_config(tmp.path(), "analyze.json", &json!({"version": 1, "run": "run"}));
    let o = run_cmd("analyze", &an, &tmp.path().join("an"), &[]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("effective samples") && err.contains("hint"), "{err}");
}

#[test]
fn analyze_needs_exactly_one_source() {
    let tmp = TempDir::new().unwrap();
    let an = write_config(tmp.path(), "analyze.json", &json!({"version": 1}));
    let o = run_cmd("analyze", &an, &tmp.path().join("an"), &[]);
    assert_eq!(o.status.code(), Some(2));
}
