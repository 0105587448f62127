use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use socialpose_core::data::{read_scene, write_scene, Pose, SceneBuilder};
use socialpose_core::eval::{HorizonReport, MetricKind};
use socialpose_core::model::{Checkpoint, Forecaster, ModelConfig, ModelParams, Trainer, Variant};
use socialpose_core::Scene64;

fn socialpose(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_socialpose")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = socialpose(args);
    assert!(
        out.status.success(),
        "socialpose {args:?} failed with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str]) -> (i32, String) {
    let out = socialpose(args);
    assert!(!out.status.success(), "socialpose {args:?} unexpectedly succeeded");
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

/// Writes a tiny experiment: 3 react scenes split one per split, and a toy config.
fn toy_experiment(root: &Path) -> PathBuf {
    let data = root.join("data");
    ok(&["generate", "react", "3", "--frames", "8", "--joint-set", "minimal3", "--out", &s(&data), "--train", "1/3", "--val", "1/3", "--test", "1/3"]);
    let cfg = root.join("toy.toml");
    std::fs::write(
        &cfg,
        "[model]\nobs_frames = 4\npred_frames = 3\njoints = 3\ndims = 2\nhidden = 6\nbatch_size = 1\nmax_epochs = 6\nlr = 0.01\n\n\
         [data]\ndir = \"data\"\n\n[output]\ndir = \"run\"\n\n[evaluation]\nhorizons_ms = [40.0, 80.0, 120.0]\n",
    )
    .unwrap();
    cfg
}

#[test]
fn generate_is_deterministic_and_valid() {
    let t = tempfile::tempdir().unwrap();
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    ok(&["generate", "react", "10", "--seed", "7", "--out", &s(&a)]);
    ok(&["generate", "react", "10", "--seed", "7", "--out", &s(&b)]);
    let files = read_dir_bytes(&a);
    assert_eq!(files.len(), 11);
    assert_eq!(files, read_dir_bytes(&b));
    let report = ok(&["validate", &s(&a)]);
    assert_eq!(report.lines().filter(|l| l.starts_with("ok ")).count(), 11);
}

#[test]
fn generate_zero_scenes() {
    let t = tempfile::tempdir().unwrap();
    ok(&["generate", "approach", "0", "--out", &s(t.path())]);
    let manifest = std::fs::read_to_string(t.path().join("split.txt")).unwrap();
    assert!(manifest.lines().all(|l| l.starts_with('#')));
}

#[test]
fn generate_errors() {
    let t = tempfile::tempdir().unwrap();
    let (code, err) = fails(&["generate", "dance", "2", "--out", &s(t.path())]);
    assert_eq!(code, 1);
    assert!(err.contains("dance"));
    let file = t.path().join("occupied");
    std::fs::write(&file, "x").unwrap();
    let (code, _) = fails(&["generate", "react", "2", "--out", &s(&file.join("sub"))]);
    assert_eq!(code, 2);
    assert_eq!(fails(&["generate", "react", "2", "--train", "0.5", "--val", "0.5", "--test", "0.5"]).0, 1);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(fails(&["frobnicate"]).0, 1);
    assert_eq!(fails(&["train", "--seed", "x"]).0, 1);
    assert_eq!(fails(&["validate"]).0, 1);
    assert!(socialpose(&["--help"]).status.success());
}

#[test]
fn validate_reports_bad_scene_with_exit_two() {
    let t = tempfile::tempdir().unwrap();
    let bad = t.path().join("bad.json");
    std::fs::write(&bad, r#"{"scene_id": "x", "frame_rate": 25, "dims": 2}"#).unwrap();
    let out = socialpose(&["validate", &s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("error"));
    ok(&["validate", &s(&repo_file("fixtures/posetrack")), &s(&repo_file("fixtures/ntu"))]);
}

#[test]
fn shipped_configs_parse() {
    for name in ["default", "posetrack", "ntu", "react"] {
        let cfg = socialpose_cli::ExperimentConfig::load(Some(&repo_file(&format!("configs/{name}.toml"))), &[]).unwrap();
        cfg.validate_values().unwrap();
    }
    let d = socialpose_cli::ExperimentConfig::load(Some(&repo_file("configs/default.toml")), &[]).unwrap();
    let defaults = socialpose_cli::ExperimentConfig::default();
    assert_eq!(d.model, defaults.model);
    assert_eq!(d.evaluation, defaults.evaluation);
    assert_eq!(d.context, defaults.context);
}

#[test]
fn train_writes_geometric_history_and_is_repeatable() {
    let t = tempfile::tempdir().unwrap();
    let cfg = toy_experiment(t.path());
    ok(&["train", "--config", &s(&cfg), "-q"]);
    let run = t.path().join("run");
    let history = std::fs::read_to_string(run.join("history.csv")).unwrap();
    let rows: Vec<Vec<f64>> = history
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(history.lines().next(), Some("epoch,train_loss,val_loss,lr"));
    assert_eq!(rows.len(), 6);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0], (i + 1) as f64);
        let want = 0.01 * 0.95f64.powi(i as i32);
        assert!((r[3] - want).abs() <= 1e-15 * want, "epoch {}: lr {}", i + 1, r[3]);
    }
    for w in rows.windows(2) {
        assert!((w[1][3] / w[0][3] - 0.95).abs() < 1e-12);
    }
    let first = read_dir_bytes(&run);
    ok(&["train", "--config", &s(&cfg), "-q"]);
    assert_eq!(read_dir_bytes(&run), first);
    let ck: Checkpoint<f64> = Checkpoint::load(run.join("model.ckpt")).unwrap();
    assert_eq!(ck.history.len(), 6);
}

#[test]
fn training_improves_on_the_untrained_model() {
    let t = tempfile::tempdir().unwrap();
    let cfg = toy_experiment(t.path());
    ok(&["train", "--config", &s(&cfg), "-q", "--max-epochs", "40"]);
    let ck: Checkpoint<f64> = Checkpoint::load(t.path().join("run/model.ckpt")).unwrap();
    let data = t.path().join("data");
    let val: Scene64 = read_scene(data.join(format!(
        "{}.json",
        std::fs::read_to_string(data.join("split.txt"))
            .unwrap()
            .lines()
            .find(|l| l.ends_with(" val"))
            .unwrap()
            .split(' ')
            .next()
            .unwrap()
    )))
    .unwrap();
    let start = Trainer::<f64>::new(ck.config.clone(), None).unwrap().mean_loss(std::slice::from_ref(&val)).unwrap();
    let best = ck.history[ck.best_epoch - 1].val_loss;
    assert!(best < start, "{best} vs {start}");
}

#[test]
fn invalid_config_writes_nothing() {
    let t = tempfile::tempdir().unwrap();
    let cfg = toy_experiment(t.path());
    let (code, err) = fails(&["train", "--config", &s(&cfg), "--set", "model.dropout=1.5"]);
    assert_eq!(code, 1);
    assert!(err.contains("dropout"), "{err}");
    assert!(!t.path().join("run").exists());
    let (code, err) = fails(&["train", "--config", &s(&cfg), "--set", "model.colour=3"]);
    assert_eq!(code, 1);
    assert!(err.contains("colour"), "{err}");
}

#[test]
fn diverging_training_exits_three() {
    let t = tempfile::tempdir().unwrap();
    let cfg = toy_experiment(t.path());
    let (code, err) = fails(&["train", "--config", &s(&cfg), "-q", "--set", "model.lr=1e300", "--set", "model.lr_decay=1.0"]);
    assert_eq!(code, 3, "{err}");
    assert!(!t.path().join("run/model.ckpt").exists());
}

#[test]
fn evaluate_baselines_only() {
    let t = tempfile::tempdir().unwrap();
    let cfg = toy_experiment(t.path());
    ok(&["evaluate", "--config", &s(&cfg), "--out", &s(&t.path().join("ev"))]);
    let report = HorizonReport::parse_csv(&std::fs::read_to_string(t.path().join("ev/horizons.csv")).unwrap(), MetricKind::StackedL2).unwrap();
    assert_eq!(report.rows.len(), 3 * 3);
    for m in ["zpzm", "zpcm", "cpcm"] {
        for h in [40.0, 80.0, 120.0] {
            assert_eq!(report.rows.iter().filter(|r| r.method == m && r.horizon_ms == h).count(), 1);
        }
        assert!(t.path().join(format!("ev/curves/{m}.csv")).is_file());
    }
    let meta = std::fs::read_to_string(t.path().join("ev/report.toml")).unwrap();
    assert!(meta.contains("metric = \"stacked_l2\""));
    let groups = std::fs::read_to_string(t.path().join("ev/groups.csv")).unwrap();
    assert!(groups.lines().skip(1).all(|l| l.starts_with("react,")));
}

#[test]
fn evaluate_static_scene_scores_zero() {
    let t = tempfile::tempdir().unwrap();
    let data = t.path().join("data");
    std::fs::create_dir(&data).unwrap();
    let pose = Pose::from_joints(&[vec![1.5, 2.0], vec![1.5, 4.25], vec![0.5, 3.0]]).unwrap();
    let scene: Scene64 = SceneBuilder {
        scene_id: "still_0".into(),
        frame_rate: 25.0,
        dims: 2,
        joint_names: vec!["neck".into(), "head".into(), "hand".into()],
        root_joint: 0,
        persons: vec![("p0".into(), vec![pose; 7])],
        context_raw: None,
    }
    .build()
    .unwrap();
    write_scene(data.join("still_0.json"), &scene).unwrap();
    std::fs::write(data.join("split.txt"), "still_0 test\n").unwrap();
    ok(&[
        "evaluate", "--set", &format!("data.dir={}", s(&data)), "--set", "model.obs_frames=4", "--set", "model.pred_frames=3",
        "--set", "model.joints=3", "--set", "evaluation.horizons_ms=[40.0, 120.0]", "--methods", "zpzm,cpcm", "--out",
        &s(&t.path().join("ev")),
    ]);
    let report = HorizonReport::parse_csv(&std::fs::read_to_string(t.path().join("ev/horizons.csv")).unwrap(), MetricKind::StackedL2).unwrap();
    assert_eq!(report.rows.len(), 4);
    assert!(report.rows.iter().all(|r| r.metric == 0.0));
}

#[test]
fn incompatible_checkpoint_names_fields() {
    let t = tempfile::tempdir().unwrap();
    let cfg = toy_experiment(t.path());
    ok(&["train", "--config", &s(&cfg), "-q", "--max-epochs", "1"]);
    let ck = s(&t.path().join("run/model.ckpt"));
    let (code, err) = fails(&["evaluate", "--config", &s(&repo_file("configs/posetrack.toml")), "--checkpoint", &ck, "--out", &s(&t.path().join("ev"))]);
    assert_eq!(code, 1);
    for field in ["obs_frames", "pred_frames", "joints"] {
        assert!(err.contains(field), "{err}");
    }
    assert!(!err.contains("dims"), "{err}");
    let out = ok(&["evaluate", "--config", &s(&cfg), "--checkpoint", &format!("mine={ck}"), "--out", &s(&t.path().join("ev"))]);
    assert!(out.contains("mine"));
}

#[test]
fn predict_writes_future_scene() {
    let t = tempfile::tempdir().unwrap();
    let cfg = toy_experiment(t.path());
    ok(&["train", "--config", &s(&cfg), "-q", "--max-epochs", "2"]);
    let scene = t.path().join("data/react_0.json");
    let out = t.path().join("pred/react_0.json");
    ok(&["predict", "--checkpoint", &s(&t.path().join("run/model.ckpt")), "--scene", &s(&scene), "--out", &s(&out)]);
    let pred: Scene64 = read_scene(&out).unwrap();
    assert_eq!(pred.num_frames(), 3);
    assert_eq!(pred.num_persons(), 2);
    let (code, _) = fails(&["predict", "--checkpoint", &s(&t.path().join("run/model.ckpt")), "--scene", &s(&scene), "--out", &s(&scene)]);
    assert_eq!(code, 1);
}

#[test]
fn zero_checkpoint_predicts_the_last_pose() {
    let t = tempfile::tempdir().unwrap();
    let cfg = ModelConfig {
        joints: 14,
        hidden: 4,
        variant: Variant::JointSocial,
        ..ModelConfig::posetrack()
    };
    let f: Forecaster<f64> = Forecaster::new(cfg.clone(), ModelParams::zeros(&cfg)).unwrap();
    let ck_path = t.path().join("zero.ckpt");
    Checkpoint::from_forecaster(&f).unwrap().save(&ck_path).unwrap();
    let scene = repo_file("fixtures/posetrack/approach_3.json");
    let out = t.path().join("zero.json");
    ok(&["predict", "--checkpoint", &s(&ck_path), "--scene", &s(&scene), "--out", &s(&out)]);
    let input: Scene64 = read_scene(&scene).unwrap();
    let pred: Scene64 = read_scene(&out).unwrap();
    assert_eq!(pred.num_frames(), 15);
    for (p, q) in input.persons().iter().zip(pred.persons()) {
        let last = &p.track().frames()[14];
        assert!(q.track().frames().iter().all(|f| f == last));
    }
}

#[test]
fn gradcheck_passes() {
    let out = ok(&["gradcheck", "--seed", "4242", "--count", "2"]);
    assert!(out.contains("12 cases"), "{out}");
    assert!(out.contains("max relative error"));
}
