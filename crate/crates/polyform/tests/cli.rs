//! End-to-end tests of the `polyform` binary.

use std::path::Path;
use std::process::{Command, Output};

fn polyform(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyform"))
        .args(args)
        .current_dir(dir)
        .env_remove("POLYFORM_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const DONUT: &str = "POLYGON ((0 0, 4 0, 4 4, 0 4, 0 0), (1 1, 1 3, 3 3, 3 1, 1 1))";

#[test]
fn graph_and_featurize_emit_expected_formats() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("donut.wkt"), DONUT).unwrap();
    let g = polyform(&["graph", "--input", "donut.wkt"], dir.path());
    assert!(g.status.success(), "{}", stderr(&g));
    let v: serde_json::Value = serde_json::from_str(&stdout(&g)).unwrap();
    assert_eq!(v["nodes"].as_array().unwrap().len(), 8);
    assert_eq!(v["inner_edges"].as_array().unwrap().len(), 8);

    let f = polyform(
        &["featurize", "--input", "donut.wkt", "--sample-seed", "3"],
        dir.path(),
    );
    assert!(f.status.success(), "{}", stderr(&f));
    let text = stdout(&f);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "head_id,mid_id,tail_id,d_ij,d_jk,theta,type_ij,type_jk"
    );
    assert!(lines.clone().count() > 0);
    for line in lines {
        assert_eq!(line.split(',').count(), 8);
    }
}

#[test]
fn featurize_no_sample_yields_more_paths() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("donut.wkt"), DONUT).unwrap();
    let sampled = polyform(
        &["featurize", "--input", "donut.wkt", "--sample-seed", "3"],
        dir.path(),
    );
    let full = polyform(
        &["featurize", "--input", "donut.wkt", "--no-sample"],
        dir.path(),
    );
    assert!(stdout(&full).lines().count() > stdout(&sampled).lines().count());
}

#[test]
fn generate_is_deterministic_and_loadable() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a.jsonl", "b.jsonl"] {
        let r = polyform(
            &[
                "generate",
                "--task",
                "single-shape",
                "--n",
                "20",
                "--noise",
                "0.05",
                "--seed",
                "5",
                "--out",
                out,
            ],
            dir.path(),
        );
        assert!(r.status.success(), "{}", stderr(&r));
    }
    let a = std::fs::read_to_string(dir.path().join("a.jsonl")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("b.jsonl")).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 20);
}

#[test]
fn train_twice_gives_identical_reports_and_eval_works() {
    let dir = tempfile::tempdir().unwrap();
    for outdir in ["r1", "r2"] {
        let r = polyform(
            &[
                "train",
                "--task",
                "single-shape",
                "--n",
                "40",
                "--hidden",
                "8",
                "--layers",
                "2",
                "--epochs",
                "4",
                "--seed",
                "7",
                "--outdir",
                outdir,
            ],
            dir.path(),
        );
        assert!(r.status.success(), "{}", stderr(&r));
    }
    let r1 = std::fs::read_to_string(dir.path().join("r1/report.csv")).unwrap();
    let r2 = std::fs::read_to_string(dir.path().join("r2/report.csv")).unwrap();
    assert_eq!(r1, r2);
    assert!(r1.starts_with("epoch,train_loss,val_loss,val_acc,lr\n"));

    // rerunning from the snapshot reproduces the run
    let r3 = polyform(
        &["train", "--config", "r1/config.txt", "--outdir", "r3"],
        dir.path(),
    );
    assert!(r3.status.success(), "{}", stderr(&r3));
    let r3 = std::fs::read_to_string(dir.path().join("r3/report.csv")).unwrap();
    assert_eq!(r1, r3);

    let e = polyform(
        &[
            "eval",
            "--checkpoint",
            "r1/model.ckpt",
            "--data",
            "r1/dataset.jsonl",
            "--sample-seed",
            "0",
        ],
        dir.path(),
    );
    assert!(e.status.success(), "{}", stderr(&e));
    let text = stdout(&e);
    assert!(text.starts_with("trial,acc,weighted_precision,weighted_f1,weighted_auc\n"));
    let fields: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(fields.len(), 5);
    let acc: f64 = fields[1].parse().unwrap();
    assert!((0.0..=1.0).contains(&acc));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.txt"),
        "task=single-shape\nn=10\nseed=3\n",
    )
    .unwrap();
    let r = polyform(
        &[
            "generate", "--config", "cfg.txt", "--n", "15", "--out", "d.jsonl",
        ],
        dir.path(),
    );
    assert!(r.status.success(), "{}", stderr(&r));
    let text = std::fs::read_to_string(dir.path().join("d.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 15);
}

#[test]
fn env_seed_is_a_fallback_only() {
    let dir = tempfile::tempdir().unwrap();
    let with_env = |seed: &str, out: &str| {
        let r = Command::new(env!("CARGO_BIN_EXE_polyform"))
            .args([
                "generate",
                "--task",
                "single-shape",
                "--n",
                "5",
                "--out",
                out,
            ])
            .current_dir(dir.path())
            .env("POLYFORM_SEED", seed)
            .output()
            .unwrap();
        assert!(r.status.success(), "{}", stderr(&r));
    };
    with_env("11", "a.jsonl");
    with_env("12", "b.jsonl");
    let a = std::fs::read_to_string(dir.path().join("a.jsonl")).unwrap();
    let b = std::fs::read_to_string(dir.path().join("b.jsonl")).unwrap();
    assert_ne!(a, b, "different env seeds must change the dataset");

    // explicit flag wins over the env var
    let r = Command::new(env!("CARGO_BIN_EXE_polyform"))
        .args([
            "generate",
            "--task",
            "single-shape",
            "--n",
            "5",
            "--seed",
            "11",
            "--out",
            "c.jsonl",
        ])
        .current_dir(dir.path())
        .env("POLYFORM_SEED", "999")
        .output()
        .unwrap();
    assert!(r.status.success());
    let c = std::fs::read_to_string(dir.path().join("c.jsonl")).unwrap();
    assert_eq!(a, c);
}

#[test]
fn bench_emits_ratio_columns() {
    let dir = tempfile::tempdir().unwrap();
    let r = polyform(
        &["bench", "--task", "pair-shape", "--n", "9", "--seed", "4"],
        dir.path(),
    );
    assert!(r.status.success(), "{}", stderr(&r));
    let text = stdout(&r);
    assert_eq!(
        text.lines().next().unwrap(),
        "sample,one_hop,two_hop_full,two_hop_reduced,full_ratio,reduced_ratio"
    );
    let total = text.lines().last().unwrap();
    assert!(total.starts_with("total,"));
    let fields: Vec<&str> = total.split(',').collect();
    let full: usize = fields[2].parse().unwrap();
    let reduced: usize = fields[3].parse().unwrap();
    assert!(reduced <= full);
}

#[test]
fn roundtrip_commands_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("sq.wkt"),
        "POLYGON ((0 0, 1 0, 1 1, 0 1, 0 0))",
    )
    .unwrap();
    let ok = polyform(&["roundtrip", "--input", "sq.wkt"], dir.path());
    assert!(ok.status.success());
    assert!(stdout(&ok).contains("1/1"));

    let many = polyform(&["roundtrip", "--random", "50", "--seed", "2"], dir.path());
    assert!(many.status.success(), "{}", stderr(&many));
    assert!(stdout(&many).contains("50/50"));

    // corrupted graph JSON: drop an inner edge so a ring cannot close
    let g = polyform(&["graph", "--input", "sq.wkt"], dir.path());
    let mut v: serde_json::Value = serde_json::from_str(&stdout(&g)).unwrap();
    let edges = v["inner_edges"].as_array_mut().unwrap();
    edges.pop();
    std::fs::write(dir.path().join("broken.json"), v.to_string()).unwrap();
    let broken = polyform(&["roundtrip", "--input", "broken.json"], dir.path());
    assert!(!broken.status.success());
    assert_eq!(
        broken.status.code(),
        Some(1),
        "structural parse error is a validation failure"
    );

    // usage errors exit 1
    let usage = polyform(&["roundtrip"], dir.path());
    assert_eq!(usage.status.code(), Some(1));
    let missing = polyform(&["graph", "--input", "nope.wkt"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
    let badspec = polyform(
        &[
            "generate",
            "--task",
            "pair-shape",
            "--classes",
            "7",
            "--n",
            "10",
            "--out",
            "x",
        ],
        dir.path(),
    );
    assert_eq!(badspec.status.code(), Some(1));
    assert!(stderr(&badspec).contains("classes"));
}

#[test]
fn sample_reduces_cross_edges_to_parts_minus_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("donut.wkt"), DONUT).unwrap();
    let r = polyform(
        &["sample", "--input", "donut.wkt", "--sample-seed", "5"],
        dir.path(),
    );
    assert!(r.status.success(), "{}", stderr(&r));
    let v: serde_json::Value = serde_json::from_str(&stdout(&r)).unwrap();
    assert_eq!(v["cross_edges"].as_array().unwrap().len(), 1);
}

#[test]
fn trials_flag_emits_mean_and_std() {
    let dir = tempfile::tempdir().unwrap();
    let r = polyform(
        &[
            "train",
            "--task",
            "single-shape",
            "--n",
            "30",
            "--hidden",
            "4",
            "--layers",
            "1",
            "--epochs",
            "2",
            "--seed",
            "3",
            "--trials",
            "2",
            "--outdir",
            "t",
        ],
        dir.path(),
    );
    assert!(r.status.success(), "{}", stderr(&r));
    let eval = std::fs::read_to_string(dir.path().join("t/eval.csv")).unwrap();
    assert!(eval.contains("\nmean,"));
    assert!(eval.contains("\nstd,"));
    assert!(dir.path().join("t/model-0.ckpt").exists());
    assert!(dir.path().join("t/model-1.ckpt").exists());
}
