use std::path::Path;
use std::process::{Command, Output};

fn hgcn(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hgcn"))
        .args(args)
        .current_dir(cwd)
        .env_remove("HGCN_THREADS")
        .output()
        .unwrap()
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let o = hgcn(args, cwd);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

const TRAIN: &[&str] = &["--superpixels", "20", "--clicks", "1/4", "--epochs", "6", "--hidden", "8", "--feature-cell", "4"];

fn gen(dir: &Path, name: &str) {
    ok(&["gen-synthetic", "--out", name, "--images", "4", "--size", "32", "--seed", "7"], dir);
}

#[test]
fn gen_synthetic_inventory_and_determinism() {
    let d = tempfile::tempdir().unwrap();
    let out = ok(&["gen-synthetic", "--out", "a", "--images", "20", "--size", "64", "--seed", "7"], d.path());
    assert!(out.trim().ends_with("manifest.json"));
    let names = files(&d.path().join("a"));
    assert_eq!(names.len(), 61);
    ok(&["gen-synthetic", "--out", "b", "--images", "20", "--size", "64", "--seed", "7"], d.path());
    for n in &names {
        assert_eq!(std::fs::read(d.path().join("a").join(n)).unwrap(), std::fs::read(d.path().join("b").join(n)).unwrap(), "{n}");
    }
}

#[test]
fn usage_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(hgcn(&["gen-synthetic", "--images", "3"], d.path()).status.code(), Some(2));
    assert_eq!(hgcn(&["train", "--out", "x", "--clicks", "2/1"], d.path()).status.code(), Some(2));
    assert_eq!(hgcn(&[], d.path()).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_hgcn"))
        .args(["gen-synthetic", "--out", "z"])
        .current_dir(d.path())
        .env("HGCN_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(hgcn(&["--help"], d.path()).status.code(), Some(0));
}

#[test]
fn build_graphs_summary_matches_plan() {
    let d = tempfile::tempdir().unwrap();
    gen(d.path(), "data");
    ok(&["build-graphs", "--manifest", "data/manifest.json", "--out", "g", "--superpixels", "10"], d.path());
    let s: serde_json::Value = serde_json::from_slice(&std::fs::read(d.path().join("g/summary.json")).unwrap()).unwrap();
    let plan = hgcn::graph::plan_partition(4, 10, 40_000);
    assert_eq!(s["tau"], plan.tau);
    assert_eq!(s["gamma"], plan.gamma);
    assert_eq!(s["tau"], 1);
    assert_eq!(files(&d.path().join("g")), vec!["partition_0000.hggb", "run.json", "summary.json"]);
    let b = hgcn::io::load_bundle(d.path().join("g/partition_0000.hggb")).unwrap();
    assert_eq!(b.partitions[0].origins.len() as u64, s["nodes"].as_u64().unwrap());
}

#[test]
fn corrupt_image_is_a_named_runtime_error() {
    let d = tempfile::tempdir().unwrap();
    gen(d.path(), "data");
    std::fs::write(d.path().join("data/img_0002.png"), b"not a png").unwrap();
    let o = hgcn(&["build-graphs", "--manifest", "data/manifest.json", "--out", "g"], d.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("img_0002.png"));
}

#[test]
fn train_resume_infer_eval() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    gen(p, "data");
    let mut args = vec!["train", "--manifest", "data/manifest.json", "--out", "full", "--seed", "3"];
    args.extend(TRAIN);
    ok(&args, p);
    let metrics: serde_json::Value = serde_json::from_slice(&std::fs::read(p.join("full/metrics.json")).unwrap()).unwrap();
    for k in ["L1", "L2", "L3"] {
        assert!(metrics[k]["train_miou"].is_f64(), "{k}");
    }

    let mut args = vec!["train", "--manifest", "data/manifest.json", "--out", "part", "--seed", "3", "--halt-after", "8"];
    args.extend(TRAIN);
    ok(&args, p);
    assert!(!p.join("part/metrics.json").exists());
    ok(&["train", "--config", "part/run.json", "--out", "part", "--resume", "part/checkpoint.hgck"], p);
    for f in ["metrics.json", "checkpoint.hgck", "pseudo_labels/img_0001.png"] {
        assert_eq!(std::fs::read(p.join("full").join(f)).unwrap(), std::fs::read(p.join("part").join(f)).unwrap(), "{f}");
    }

    ok(&["infer", "--checkpoint", "full/checkpoint.hgck", "--out", "inf"], p);
    assert_eq!(std::fs::read(p.join("inf/img_0003.png")).unwrap(), std::fs::read(p.join("full/pseudo_labels/img_0003.png")).unwrap());

    let out = ok(&["eval", "--pred", "full/pseudo_labels", "--manifest", "data/manifest.json", "--out", "eval.json"], p);
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(p.join("eval.json")).unwrap()).unwrap();
    let miou = report["miou"].as_f64().unwrap();
    assert!((miou - metrics["final"]["miou"].as_f64().unwrap()).abs() < 1e-15);
    assert!(out.contains(&format!("mIoU {miou:.4}")));
}

#[test]
fn infer_rejects_unfinished_checkpoint() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    gen(p, "data");
    let mut args = vec!["train", "--manifest", "data/manifest.json", "--out", "part", "--halt-after", "3"];
    args.extend(TRAIN);
    ok(&args, p);
    let o = hgcn(&["infer", "--checkpoint", "part/checkpoint.hgck", "--out", "inf"], p);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn eval_perfect_and_missing_ground_truth() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    gen(p, "data");
    std::fs::create_dir(p.join("pred")).unwrap();
    for i in 0..4 {
        std::fs::copy(p.join(format!("data/img_{i:04}_gt.png")), p.join(format!("pred/img_{i:04}.png"))).unwrap();
    }
    let out = ok(&["eval", "--pred", "pred", "--manifest", "data/manifest.json"], p);
    assert!(out.contains("mIoU 1.0000"), "{out}");
    std::fs::remove_file(p.join("data/img_0001_gt.png")).unwrap();
    let o = hgcn(&["eval", "--pred", "pred", "--manifest", "data/manifest.json"], p);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("img_0001_gt.png"));
}
