use std::path::Path;
use std::process::{Command, Output};

use viewlab::harness::records::read_rows_file;
use viewlab::harness::{PredictionRecord, ResultRow};
use viewlab::render::{read_manifest, MANIFEST_FILE};

fn viewlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_viewlab"))
        .args(args)
        .output()
        .expect("spawn viewlab")
}

fn ok(args: &[&str]) -> String {
    let out = viewlab(args);
    assert!(
        out.status.success(),
        "viewlab {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_render_oracle_evaluate() {
    let tmp = tempfile::tempdir().unwrap();
    let geo = tmp.path().join("geo");
    let data = tmp.path().join("data");
    ok(&["gen", "--seed", "4", "--classes", "5", "--out", s(&geo)]);
    assert!(geo.join("class_000004.json").exists());

    ok(&[
        "render",
        "--geometry",
        s(&geo),
        "--seed",
        "4",
        "--axes",
        "x,y",
        "--stride",
        "30",
        "--repr",
        "points",
        "--out",
        s(&data),
    ]);
    let manifest = read_manifest(&data.join(MANIFEST_FILE)).unwrap();
    assert_eq!(manifest.classes, 5);
    assert_eq!(manifest.records.len(), 5 * 2 * 12);

    let results = tmp.path().join("lc.csv");
    let preds = tmp.path().join("preds.csv");
    ok(&[
        "oracle",
        "--kind",
        "lc",
        "--manifest",
        s(&data.join(MANIFEST_FILE)),
        "--train-views",
        "y:0,90",
        "--predictions-out",
        s(&preds),
        "--out",
        s(&results),
    ]);
    let rows: Vec<ResultRow> = read_rows_file(&results).unwrap();
    assert!(!rows.is_empty());
    assert!(
        rows.iter().all(|r| r.accuracy == 1.0),
        "orthographic LC is exact"
    );
    let records: Vec<PredictionRecord> = read_rows_file(&preds).unwrap();
    assert!(records
        .iter()
        .all(|r| r.correct && r.predicted_class == r.class_id));

    let eval = tmp.path().join("eval");
    ok(&[
        "evaluate",
        "--external",
        s(&preds),
        "--train-views",
        "y:0,90",
        "--eval-grid",
        "single",
        "--stride",
        "30",
        "--out",
        s(&eval),
    ]);
    let external: Vec<ResultRow> = read_rows_file(&eval.join("results.csv")).unwrap();
    assert!(!external.is_empty());
    assert!(external
        .iter()
        .all(|r| r.accuracy == 1.0 && r.condition == "external"));
    assert!(eval.join("profiles.svg").exists());
}

#[test]
fn train_mlp_writes_a_loadable_model() {
    let tmp = tempfile::tempdir().unwrap();
    let geo = tmp.path().join("geo");
    let data = tmp.path().join("data");
    ok(&["gen", "--classes", "3", "--out", s(&geo)]);
    ok(&[
        "render",
        "--geometry",
        s(&geo),
        "--axes",
        "y",
        "--stride",
        "30",
        "--repr",
        "points",
        "--out",
        s(&data),
    ]);
    let model = tmp.path().join("m.vlmlp");
    ok(&[
        "train-mlp",
        "--manifest",
        s(&data.join(MANIFEST_FILE)),
        "--train-views",
        "y:0,30,60",
        "--epochs",
        "5",
        "--out",
        s(&model),
    ]);
    let net = viewlab::mlp::load_model(&model).unwrap();
    assert_eq!(net.class_ids, vec![0, 1, 2]);
}

#[test]
fn errors_exit_nonzero_with_message() {
    let tmp = tempfile::tempdir().unwrap();
    let out = viewlab(&[
        "oracle",
        "--kind",
        "lc",
        "--manifest",
        s(&tmp.path().join("missing.json")),
        "--train-views",
        "y:0,90",
        "--out",
        s(&tmp.path().join("r.csv")),
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));

    let out = viewlab(&[
        "run",
        "--preset",
        "nonsense",
        "--classifier",
        "lc",
        "--out",
        "x",
    ]);
    assert!(!out.status.success());
}
