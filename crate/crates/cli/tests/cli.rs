use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fado::instancegen::InstanceBuilder;
use fado::model::{DeviceModel, ResourceVector};
use fado_cli::exit;
use fado_cli::report::ResultFile;
use serde_json::Value;
use sha2::{Digest, Sha256};

fn fado(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fado"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn gen_toy(dir: &Path) -> PathBuf {
    let toy = dir.join("toy");
    assert!(fado(&["gen", "--preset", "toy", "--out", p(&toy)])
        .status
        .success());
    toy
}

fn optimize(inputs: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["optimize", "--dir", p(inputs), "--out", p(out)];
    args.extend_from_slice(extra);
    fado(&args)
}

fn summary_latency(o: &Output) -> u64 {
    let text = stdout(o);
    let line = text
        .lines()
        .find(|l| l.starts_with("design latency"))
        .expect("summary line");
    line.split_whitespace().nth(2).unwrap().parse().unwrap()
}

#[test]
fn optimize_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let toy = gen_toy(tmp.path());
    let out = tmp.path().join("out");
    let o = optimize(&toy, &out, &["--tcl-stub"]);
    assert_eq!(o.status.code(), Some(exit::OK));
    assert_eq!(summary_latency(&o), 13);
    for f in [
        "result.json",
        "trace.csv",
        "moves.csv",
        "directives.txt",
        "floorplan.json",
        "directives.tcl",
    ] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let text = stdout(&o);
    for key in ["max utilization", "max SLL use", "iterations", "wall time"] {
        assert!(text.contains(key), "summary lacks {key}");
    }
    let fp: Value =
        serde_json::from_str(&fs::read_to_string(out.join("floorplan.json")).unwrap()).unwrap();
    assert!(fp["boot"]["bisections"].is_array());
    assert_eq!(fp["assignment"].as_object().unwrap().len(), 5);
}

#[test]
fn iteration_cap_zero_keeps_the_baseline() {
    let tmp = tempfile::tempdir().unwrap();
    let toy = gen_toy(tmp.path());
    let out = tmp.path().join("out");
    let o = optimize(&toy, &out, &["--iter-cap", "0"]);
    assert_eq!(summary_latency(&o), 18);
    let r = ResultFile::load(&out.join("result.json")).unwrap();
    assert!(r.configuration.values().all(|p| p == "baseline"));
    assert_eq!(r.iterations, 0);
}

#[test]
fn both_starts_agree_on_latency_but_not_trace() {
    let tmp = tempfile::tempdir().unwrap();
    let toy = gen_toy(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(summary_latency(&optimize(&toy, &a, &[])), 13);
    assert_eq!(
        summary_latency(&optimize(&toy, &b, &["--initial", "balanced"])),
        13
    );
    let ta = fs::read_to_string(a.join("trace.csv")).unwrap();
    let tb = fs::read_to_string(b.join("trace.csv")).unwrap();
    assert_ne!(ta, tb);
}

#[test]
fn identical_inputs_give_identical_logs() {
    let tmp = tempfile::tempdir().unwrap();
    let toy = gen_toy(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    optimize(&toy, &a, &[]);
    optimize(&toy, &b, &[]);
    for f in ["trace.csv", "moves.csv", "directives.txt", "floorplan.json"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn check_passes_fresh_results_from_the_result_alone() {
    let tmp = tempfile::tempdir().unwrap();
    let toy = gen_toy(tmp.path());
    let out = tmp.path().join("out");
    optimize(&toy, &out, &["--util-limit", "0.7"]);
    fs::remove_dir_all(&toy).unwrap();
    let o = fado(&["check", p(&out.join("result.json"))]);
    assert_eq!(o.status.code(), Some(exit::OK), "{}", stdout(&o));
}

fn tamper(src: &Path, dst: &Path, edit: impl FnOnce(&mut Value)) {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(src).unwrap()).unwrap();
    edit(&mut v);
    fs::write(dst, serde_json::to_string(&v).unwrap()).unwrap();
}

#[test]
fn check_cites_split_ram_groups() {
    let tmp = tempfile::tempdir().unwrap();
    let toy = gen_toy(tmp.path());
    let out = tmp.path().join("out");
    optimize(&toy, &out, &[]);
    let bad = tmp.path().join("split.json");
    tamper(&out.join("result.json"), &bad, |v| {
        let c = v["assignment"]["C"].as_u64().unwrap();
        v["assignment"]["C"] = Value::from(1 - c);
    });
    let o = fado(&["check", p(&bad)]);
    assert_eq!(o.status.code(), Some(exit::INFEASIBLE));
    assert!(stdout(&o).contains("[ram-grouping]"), "{}", stdout(&o));
}

#[test]
fn check_cites_sll_conservation() {
    let tmp = tempfile::tempdir().unwrap();
    let toy = gen_toy(tmp.path());
    let out = tmp.path().join("out");
    optimize(&toy, &out, &[]);
    let bad = tmp.path().join("sll.json");
    tamper(&out.join("result.json"), &bad, |v| {
        let cell = &mut v["route"]["sll_used"][0][0];
        *cell = Value::from(cell.as_u64().unwrap() + 3);
    });
    let o = fado(&["check", p(&bad)]);
    assert_eq!(o.status.code(), Some(exit::INFEASIBLE));
    assert!(stdout(&o).contains("[sll-conservation]"), "{}", stdout(&o));
}

#[test]
fn verify_on_toy_result_is_optimal() {
    let tmp = tempfile::tempdir().unwrap();
    let toy = gen_toy(tmp.path());
    let out = tmp.path().join("out");
    optimize(&toy, &out, &[]);
    let o = fado(&["verify-optimal", p(&out.join("result.json"))]);
    assert_eq!(o.status.code(), Some(exit::OK));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "optimal");
}

#[test]
fn truncated_run_yields_a_checkable_counterexample() {
    let tmp = tempfile::tempdir().unwrap();
    let toy = gen_toy(tmp.path());
    let out = tmp.path().join("out");
    optimize(&toy, &out, &["--iter-cap", "1"]);
    let cx = tmp.path().join("cx");
    let o = fado(&[
        "verify-optimal",
        p(&out.join("result.json")),
        "--out",
        p(&cx),
    ]);
    assert_eq!(o.status.code(), Some(exit::COUNTEREXAMPLE));
    let c = fado(&["check", p(&cx.join("result.json"))]);
    assert_eq!(c.status.code(), Some(exit::OK), "{}", stdout(&c));
}

#[test]
fn oracle_on_one_function_picks_its_fastest_point() {
    let tmp = tempfile::tempdir().unwrap();
    let dev = DeviceModel::uniform("one", 1, 1, ResourceVector::new(0, 0, 0, 100, 0), 10);
    let b = InstanceBuilder::new(dev)
        .dataflow("K", &["f"])
        .lut_points("f", &[(9, 10), (4, 30), (2, 50)]);
    let (design, qor, device) = b.files();
    let dir = tmp.path().join("one");
    fs::create_dir_all(&dir).unwrap();
    fs::write(
        dir.join("design.json"),
        serde_json::to_string(design).unwrap(),
    )
    .unwrap();
    fs::write(dir.join("qor.json"), serde_json::to_string(qor).unwrap()).unwrap();
    fs::write(dir.join("device.json"), device.to_json()).unwrap();
    let o = fado(&["oracle", "--dir", p(&dir)]);
    assert_eq!(o.status.code(), Some(exit::OK));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(
        (v["status"].as_str(), v["latency"].as_u64()),
        (Some("optimal"), Some(2))
    );
    // 50 LUT is above the 65% default limit: the limit override makes it the answer.
    let o = fado(&["oracle", "--dir", p(&dir), "--util-limit", "0.4"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["latency"].as_u64(), Some(4));
}

fn tree_digest(dir: &Path) -> Vec<u8> {
    let mut h = Sha256::new();
    for f in ["design.json", "qor.json", "device.json"] {
        h.update(fs::read(dir.join(f)).unwrap());
    }
    h.finalize().to_vec()
}

#[test]
fn gen_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (
        tmp.path().join("a"),
        tmp.path().join("b"),
        tmp.path().join("c"),
    );
    for (d, seed) in [(&a, "5"), (&b, "5"), (&c, "6")] {
        let o = fado(&[
            "gen",
            "--preset",
            "small",
            "--seed",
            seed,
            "--mode",
            "non-monotone",
            "--out",
            p(d),
        ]);
        assert!(o.status.success());
    }
    assert_eq!(tree_digest(&a), tree_digest(&b));
    assert_ne!(tree_digest(&a), tree_digest(&c));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(fado(&["optimize"]).status.code(), Some(exit::USAGE));
    assert_eq!(
        fado(&["gen", "--preset", "nope", "--out", p(tmp.path())])
            .status
            .code(),
        Some(exit::USAGE)
    );
    let missing = tmp.path().join("missing");
    assert_eq!(
        optimize(&missing, &tmp.path().join("o"), &[]).status.code(),
        Some(exit::USAGE)
    );
    assert_eq!(fado(&["--version"]).status.code(), Some(exit::OK));

    // Infeasible booting: a function larger than any slot even at 100%.
    let dev = DeviceModel::uniform("tiny", 1, 2, ResourceVector::new(0, 0, 0, 10, 0), 10);
    let b = InstanceBuilder::new(dev)
        .dataflow("K", &["f"])
        .lut_points("f", &[(5, 50)]);
    let (design, qor, device) = b.files();
    let dir = tmp.path().join("big");
    fs::create_dir_all(&dir).unwrap();
    fs::write(
        dir.join("design.json"),
        serde_json::to_string(design).unwrap(),
    )
    .unwrap();
    fs::write(dir.join("qor.json"), serde_json::to_string(qor).unwrap()).unwrap();
    fs::write(dir.join("device.json"), device.to_json()).unwrap();
    let o = optimize(&dir, &tmp.path().join("o2"), &[]);
    assert_eq!(o.status.code(), Some(exit::INFEASIBLE));
    assert!(String::from_utf8_lossy(&o.stderr).contains("infeasible"));
    assert_eq!(
        fado(&["oracle", "--dir", p(&dir)]).status.code(),
        Some(exit::INFEASIBLE)
    );
}

#[test]
fn oracle_budget_exhaustion_has_its_own_code() {
    let tmp = tempfile::tempdir().unwrap();
    let toy = gen_toy(tmp.path());
    let o = fado(&["oracle", "--dir", p(&toy), "--budget", "1"]);
    assert_eq!(o.status.code(), Some(exit::BUDGET));
}
