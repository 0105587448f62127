use std::collections::BTreeMap;

use socialpose_core::data::{generate_synthetic, read_scene, write_scene, JointSet, Scenario, SyntheticConfig};
use socialpose_core::eval::{evaluate_dataset, Baseline, Method, MetricKind};
use socialpose_core::model::{train, Checkpoint, Forecaster, ModelConfig, Variant};
use socialpose_core::social::{write_context_features, ContextProvider};
use socialpose_core::{Checkpoint64, Forecaster32, Forecaster64, Scene32, Scene64};

fn config(variant: Variant) -> ModelConfig {
    ModelConfig {
        obs_frames: 10,
        pred_frames: 10,
        hidden: 8,
        context_dim: 3,
        context_raw_dim: 5,
        variant,
        max_epochs: 3,
        batch_size: 2,
        ..ModelConfig::posetrack()
    }
}

fn scenes(scenario: Scenario, n: u64) -> Vec<Scene64> {
    let cfg = SyntheticConfig {
        context_dim: Some(5),
        ..SyntheticConfig::new(scenario)
    };
    (0..n).map(|s| generate_synthetic(&cfg, s).unwrap()).collect()
}

#[test]
fn translating_a_scene_translates_every_forecast() {
    let provider = ContextProvider::SceneMean { dim: 5 };
    let shift = [123.25, -47.5];
    for v in Variant::ALL {
        for scene in scenes(Scenario::Mirror, 3) {
            let f = Forecaster64::init(config(v)).unwrap();
            let obs = scene.window(0, 10).unwrap();
            let moved = obs.translated(&shift).unwrap();
            let a = f.forecast(&obs, Some(&provider)).unwrap();
            let b = f.forecast(&moved, Some(&provider)).unwrap();
            for (pa, pb) in a.persons.iter().zip(&b.persons) {
                for (fa, fb) in pa.poses.frames().iter().zip(pb.poses.frames()) {
                    for (i, (&x, &y)) in fa.coords().iter().zip(fb.coords()).enumerate() {
                        let want = x + shift[i % 2];
                        assert!((y - want).abs() <= 1e-9 * want.abs().max(1.0), "{v}: {y} vs {want}");
                    }
                }
            }
        }
    }
}

#[test]
fn every_scenario_survives_a_disk_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for scenario in [Scenario::Approach, Scenario::React, Scenario::Mirror, Scenario::Independent] {
        for joints in [JointSet::PoseTrack14, JointSet::Ntu13] {
            let cfg = SyntheticConfig {
                joint_set: joints,
                persons: 3,
                context_dim: Some(4),
                ..SyntheticConfig::new(scenario)
            };
            let s: Scene64 = generate_synthetic(&cfg, 11).unwrap();
            let path = dir.path().join(format!("{}_{}.json", s.id(), joints.name()));
            write_scene(&path, &s).unwrap();
            let back: Scene64 = read_scene(&path).unwrap();
            assert_eq!(back, s);
        }
    }
}

#[test]
fn trained_checkpoint_reloads_to_identical_forecasts() {
    let data = scenes(Scenario::React, 6);
    let provider = ContextProvider::SceneMean { dim: 5 };
    let ck = train(&data[..4], &data[4..], &config(Variant::JointSocialContext), Some(&provider)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    ck.save(&path).unwrap();
    let back: Checkpoint64 = Checkpoint::load(&path).unwrap();
    let (a, b) = (ck.forecaster().unwrap(), back.forecaster().unwrap());
    let obs = data[5].window(0, 10).unwrap();
    assert_eq!(a.forecast(&obs, Some(&provider)).unwrap(), b.forecast(&obs, Some(&provider)).unwrap());
    assert!(!dir.path().join("m.ckpt.partial").exists());
}

#[test]
fn single_precision_tracks_double_precision() {
    let cfg = config(Variant::JointSocial);
    let f64_model = Forecaster64::init(cfg.clone()).unwrap();
    let f32_model = Forecaster32::init(cfg).unwrap();
    let scene = &scenes(Scenario::React, 1)[0];
    let obs64 = scene.window(0, 10).unwrap();
    let obs32: Scene32 = obs64.cast();
    let a = f64_model.forecast(&obs64, None).unwrap();
    let b = f32_model.forecast(&obs32, None).unwrap();
    for (pa, pb) in a.persons.iter().zip(&b.persons) {
        for (fa, fb) in pa.poses.frames().iter().zip(pb.poses.frames()) {
            for (&x, &y) in fa.coords().iter().zip(fb.coords()) {
                assert!((x - y as f64).abs() <= 1e-3 * x.abs().max(1.0), "{x} vs {y}");
            }
        }
    }
}

#[test]
fn context_features_from_file() {
    let data = scenes(Scenario::Approach, 3);
    let features: BTreeMap<String, Vec<f64>> = data
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id().to_string(), (0..5).map(|k| (i * 5 + k) as f64 * 0.1).collect()))
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ctx.json");
    write_context_features(&path, &features).unwrap();
    let provider: ContextProvider<f64> = ContextProvider::from_spec(path.to_str().unwrap(), 5).unwrap();
    let f = Forecaster64::init(config(Variant::JointContext)).unwrap();
    let obs = data[1].window(0, 10).unwrap();
    let with_file = f.forecast(&obs, Some(&provider)).unwrap();
    let with_zero = f.forecast(&obs, Some(&ContextProvider::Zero { dim: 5 })).unwrap();
    assert_ne!(with_file, with_zero);
    let stranger = obs.with_id("unknown_9").unwrap();
    assert!(f.forecast(&stranger, Some(&provider)).unwrap_err().to_string().contains("unknown_9"));
    assert!(ContextProvider::<f64>::from_spec(path.to_str().unwrap(), 6).is_err());
}

#[test]
fn models_and_baselines_share_one_evaluation() {
    let data = scenes(Scenario::React, 8);
    let ck = train(&data[..4], &data[4..6], &config(Variant::Joint), None).unwrap();
    let f: Forecaster<f64> = ck.forecaster().unwrap();
    let methods = vec![
        Method::baseline(Baseline::ZeroPoseZeroMotion, 1),
        Method::new("joint", |s: &Scene64, _| f.forecast(s, None)),
    ];
    let one = evaluate_dataset(&data[6..], 10, 10, &methods, MetricKind::StackedL2, 1).unwrap();
    let two = evaluate_dataset(&data[6..], 10, 10, &methods, MetricKind::StackedL2, 2).unwrap();
    assert_eq!(one, two);
    let report = one.horizon_report(&[80.0, 400.0]).unwrap();
    assert_eq!(report.methods(), vec!["zpzm", "joint"]);
    assert!(report.rows.iter().all(|r| r.metric.is_finite() && r.metric > 0.0));
}
