use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use socialpose_core::data::{
    generate_synthetic, read_scene, write_scene, JointSet, Scenario, Split, SplitManifest, SplitSpec,
    SyntheticConfig,
};
use socialpose_core::eval::{curve_csv, evaluate_dataset, grouped_csv, Baseline, Method};
use socialpose_core::model::{gradient_suite, history_csv, train_with, Checkpoint, Forecaster, ModelConfig, GRADCHECK_TOLERANCE};
use socialpose_core::social::ContextProvider;
use socialpose_core::{Checkpoint64, Scene64};

use crate::config::{ExperimentConfig, MODEL_METHOD, SPLIT_FILE};
use crate::error::{CliError, CliResult};
use crate::{EvaluateArgs, GenerateArgs, GradcheckArgs, PredictArgs, TrainArgs, ValidateArgs};

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const HISTORY_FILE: &str = "history.csv";
pub const RESOLVED_CONFIG_FILE: &str = "config.toml";
pub const HORIZONS_FILE: &str = "horizons.csv";
pub const GROUPS_FILE: &str = "groups.csv";
pub const CURVES_DIR: &str = "curves";
pub const REPORT_META_FILE: &str = "report.toml";

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn create_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::Data(format!("cannot create {}: {e}", path.display())))
}

fn joint_set(name: &str) -> CliResult<JointSet> {
    [JointSet::PoseTrack14, JointSet::Ntu13, JointSet::Minimal3]
        .into_iter()
        .find(|j| j.name() == name)
        .ok_or_else(|| CliError::Usage(format!("unknown joint set {name:?} (expected posetrack14, ntu13 or minimal3)")))
}

/// Accepts `0.25` or `1/4`.
pub fn parse_fraction(s: &str) -> Result<f64, String> {
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|e| format!("{s}: {e}"))?;
            let b: f64 = b.trim().parse().map_err(|e| format!("{s}: {e}"))?;
            a / b
        }
        None => s.trim().parse().map_err(|e| format!("{s}: {e}"))?,
    };
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("fraction {s} must be positive"))
    }
}

pub fn generate(args: &GenerateArgs) -> CliResult<()> {
    let scenario: Scenario = args.scenario.parse().map_err(|e: socialpose_core::Error| CliError::Usage(e.to_string()))?;
    let spec = SplitSpec {
        train: args.train,
        validation: args.val,
        test: args.test,
        seed: args.seed,
    };
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let cfg = SyntheticConfig {
        joint_set: joint_set(&args.joint_set)?,
        frames: args.frames,
        persons: args.persons,
        context_dim: args.context_dim,
        ..SyntheticConfig::new(scenario)
    };
    // build everything first so a bad parameter writes nothing
    let scenes: Vec<Scene64> = (0..args.count as u64)
        .map(|i| generate_synthetic(&cfg, args.seed.wrapping_add(i)))
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let ids: Vec<&str> = scenes.iter().map(|s| s.id()).collect();
    let manifest = spec.assign(&ids)?;
    create_dir(&args.out)?;
    for s in &scenes {
        write_scene(args.out.join(format!("{}.json", s.id())), s)?;
    }
    manifest.write(args.out.join(SPLIT_FILE))?;
    println!("wrote {} {} scenes and {} to {}", scenes.len(), scenario, SPLIT_FILE, args.out.display());
    Ok(())
}

pub fn validate(args: &ValidateArgs) -> CliResult<()> {
    if args.paths.is_empty() && args.config.is_none() {
        return Err(CliError::Usage("nothing to validate: give scene files, directories or --config".into()));
    }
    if let Some(c) = &args.config {
        let cfg = ExperimentConfig::load(Some(c), &args.set)?;
        cfg.validate()?;
        println!("ok {} (config)", c.display());
    }
    let mut failures = 0usize;
    for p in &args.paths {
        if p.is_dir() {
            failures += validate_dir(p);
        } else if let Err(e) = validate_scene_file(p) {
            println!("error {}: {e}", p.display());
            failures += 1;
        }
    }
    if failures > 0 {
        return Err(CliError::Data(format!("{failures} invalid input(s)")));
    }
    Ok(())
}

fn validate_scene_file(p: &Path) -> Result<String, socialpose_core::Error> {
    let s: Scene64 = read_scene(p)?;
    let line = format!(
        "{}: {} persons, {} frames, {} joints in {}D{}",
        s.id(),
        s.num_persons(),
        s.num_frames(),
        s.num_joints(),
        s.dims(),
        if s.context_raw().is_some() { ", with context" } else { "" }
    );
    println!("ok {} ({line})", p.display());
    Ok(s.id().to_string())
}

fn scene_files(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .into_iter()
        .flatten()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    files
}

fn validate_dir(dir: &Path) -> usize {
    let mut failures = 0;
    let mut ids = Vec::new();
    for f in scene_files(dir) {
        match validate_scene_file(&f) {
            Ok(id) => ids.push(id),
            Err(e) => {
                println!("error {}: {e}", f.display());
                failures += 1;
            }
        }
    }
    let manifest = dir.join(SPLIT_FILE);
    if manifest.is_file() {
        match SplitManifest::read(&manifest) {
            Ok(m) => {
                let missing: Vec<&str> = m.iter().map(|(id, _)| id).filter(|id| !ids.iter().any(|i| i == id)).collect();
                if missing.is_empty() {
                    println!("ok {} ({} scenes)", manifest.display(), m.len());
                } else {
                    println!("error {}: no scene file for {}", manifest.display(), missing.join(", "));
                    failures += 1;
                }
            }
            Err(e) => {
                println!("error {}: {e}", manifest.display());
                failures += 1;
            }
        }
    }
    failures
}

fn load_experiment(config: Option<&Path>, set: &[String]) -> CliResult<ExperimentConfig> {
    ExperimentConfig::load(config, set)
}

/// Scenes of the data directory keyed by id.
fn load_scenes(dir: &Path) -> CliResult<BTreeMap<String, Scene64>> {
    let mut out = BTreeMap::new();
    for f in scene_files(dir) {
        let s: Scene64 = read_scene(&f)?;
        if let Some(prev) = out.insert(s.id().to_string(), s) {
            return Err(CliError::Data(format!("scene id {} appears in more than one file", prev.id())));
        }
    }
    Ok(out)
}

fn select(scenes: &BTreeMap<String, Scene64>, manifest: &SplitManifest, split: Split) -> CliResult<Vec<Scene64>> {
    manifest
        .ids(split)
        .into_iter()
        .map(|id| {
            scenes
                .get(id)
                .cloned()
                .ok_or_else(|| CliError::Data(format!("split manifest lists {id}, which has no scene file")))
        })
        .collect()
}

fn provider(spec: &str, dim: usize) -> CliResult<ContextProvider<f64>> {
    ContextProvider::from_spec(spec, dim).map_err(|e| match e {
        socialpose_core::Error::Config(m) => CliError::Usage(m),
        other => CliError::Data(format!("context provider {spec}: {other}")),
    })
}

pub fn train(args: &TrainArgs) -> CliResult<()> {
    let mut cfg = load_experiment(args.config.as_deref(), &args.set)?;
    if let Some(o) = &args.out {
        cfg.output.dir = o.clone();
    }
    if let Some(s) = args.seed {
        cfg.model.seed = s;
    }
    if let Some(v) = args.variant {
        cfg.model.variant = v;
    }
    if let Some(e) = args.max_epochs {
        cfg.model.max_epochs = e;
    }
    cfg.validate()?;
    let manifest = SplitManifest::read(cfg.split_path())?;
    let scenes = load_scenes(&cfg.data.dir)?;
    let train_set = select(&scenes, &manifest, Split::Train)?;
    let val_set = select(&scenes, &manifest, Split::Validation)?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(CliError::Data(format!(
            "need training and validation scenes, manifest has {} and {}",
            train_set.len(),
            val_set.len()
        )));
    }
    let ctx = provider(&cfg.context.provider, cfg.model.context_raw_dim)?;
    create_dir(&cfg.output.dir)?;
    let quiet = args.quiet;
    let ck = train_with(&train_set, &val_set, &cfg.model, Some(&ctx), |r| {
        if !quiet {
            eprintln!("epoch {:>4}  train {:.6e}  val {:.6e}  lr {:.4e}", r.epoch, r.train_loss, r.val_loss, r.lr);
        }
    })?;
    let out = &cfg.output.dir;
    ck.save(out.join(CHECKPOINT_FILE))?;
    write_file(&out.join(HISTORY_FILE), history_csv(&ck.history))?;
    write_file(&out.join(RESOLVED_CONFIG_FILE), cfg.to_toml())?;
    let best = &ck.history[ck.best_epoch - 1];
    println!(
        "trained {} for {} epochs, best epoch {} (val loss {:.6e}); wrote {}",
        cfg.model.variant,
        ck.history.len(),
        ck.best_epoch,
        best.val_loss,
        out.display()
    );
    Ok(())
}

/// Names every window or size field on which `ck` and `cfg` disagree.
pub fn checkpoint_mismatches(ck: &ModelConfig, cfg: &ModelConfig) -> Vec<String> {
    [
        ("obs_frames", ck.obs_frames, cfg.obs_frames),
        ("pred_frames", ck.pred_frames, cfg.pred_frames),
        ("joints", ck.joints, cfg.joints),
        ("dims", ck.dims, cfg.dims),
    ]
    .into_iter()
    .filter(|(_, a, b)| a != b)
    .map(|(name, a, b)| format!("{name} (checkpoint {a}, config {b})"))
    .collect()
}

struct LoadedModel {
    label: String,
    forecaster: Forecaster<f64>,
    provider: ContextProvider<f64>,
}

fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || "+-_.".contains(c) { c } else { '_' }).collect()
}

pub fn evaluate(args: &EvaluateArgs) -> CliResult<()> {
    let mut cfg = load_experiment(args.config.as_deref(), &args.set)?;
    if let Some(o) = &args.out {
        cfg.output.dir = o.clone();
    }
    if let Some(w) = args.workers {
        cfg.evaluation.workers = w;
    }
    if let Some(m) = &args.methods {
        cfg.evaluation.methods = m.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    }
    cfg.validate()?;

    let mut models = Vec::new();
    for spec in &args.checkpoint {
        let (label, path) = match spec.split_once('=') {
            Some((l, p)) => (Some(l.to_string()), PathBuf::from(p)),
            None => (None, PathBuf::from(spec)),
        };
        let ck: Checkpoint64 = Checkpoint::load(&path)?;
        let bad = checkpoint_mismatches(&ck.config, &cfg.model);
        if !bad.is_empty() {
            return Err(CliError::Usage(format!(
                "checkpoint {} is incompatible with the evaluation config: {}",
                path.display(),
                bad.join(", ")
            )));
        }
        let label = label.unwrap_or_else(|| ck.config.variant.name().to_string());
        if models.iter().any(|m: &LoadedModel| m.label == label) || label.parse::<Baseline>().is_ok() {
            return Err(CliError::Usage(format!("method label {label:?} used twice; name checkpoints with label=path")));
        }
        let ctx = provider(&cfg.context.provider, ck.config.context_raw_dim)?;
        models.push(LoadedModel {
            label,
            forecaster: ck.forecaster()?,
            provider: ctx,
        });
    }

    let window = cfg.model.velocity_window;
    let mut methods: Vec<Method<f64>> = Vec::new();
    for name in &cfg.evaluation.methods {
        if name == MODEL_METHOD {
            if models.is_empty() {
                eprintln!("note: skipping method {MODEL_METHOD}: no --checkpoint given");
            }
            for m in &models {
                methods.push(Method::new(m.label.clone(), move |s, _| m.forecaster.forecast(s, Some(&m.provider))));
            }
        } else {
            let b: Baseline = name.parse()?;
            methods.push(Method::baseline(b, window));
        }
    }
    if !models.is_empty() && !cfg.evaluation.methods.iter().any(|m| m == MODEL_METHOD) {
        return Err(CliError::Usage(format!(
            "checkpoints given but {MODEL_METHOD} is not among the evaluated methods"
        )));
    }
    if methods.is_empty() {
        return Err(CliError::Usage("no methods left to evaluate".into()));
    }

    let split = cfg.eval_split()?;
    let manifest = SplitManifest::read(cfg.split_path())?;
    let all = load_scenes(&cfg.data.dir)?;
    let scenes = select(&all, &manifest, split)?;
    if scenes.is_empty() {
        return Err(CliError::Data(format!("split {split} has no scenes")));
    }
    let ev = evaluate_dataset(
        &scenes,
        cfg.model.obs_frames,
        cfg.model.pred_frames,
        &methods,
        cfg.evaluation.metric,
        cfg.evaluation.workers,
    )?;
    let horizons = &cfg.evaluation.horizons_ms;
    let report = ev.horizon_report(horizons)?;
    let groups = ev.grouped_rows(horizons)?;

    let out = &cfg.output.dir;
    create_dir(&out.join(CURVES_DIR))?;
    write_file(&out.join(HORIZONS_FILE), report.to_csv())?;
    write_file(&out.join(GROUPS_FILE), grouped_csv(&groups))?;
    for m in &ev.methods {
        write_file(&out.join(CURVES_DIR).join(format!("{}.csv", file_stem(&m.method))), curve_csv(&m.mean()))?;
    }
    let mut meta = String::new();
    let _ = writeln!(meta, "metric = {:?}", ev.metric.tag());
    let _ = writeln!(meta, "split = {:?}", split.as_str());
    let _ = writeln!(meta, "scenes = {}", scenes.len());
    let _ = writeln!(meta, "frame_rate = {:?}", ev.frame_rate);
    let _ = writeln!(meta, "obs_frames = {}", cfg.model.obs_frames);
    let _ = writeln!(meta, "pred_frames = {}", cfg.model.pred_frames);
    let _ = writeln!(meta, "horizons_ms = {horizons:?}");
    let names: Vec<&str> = ev.methods.iter().map(|m| m.method.as_str()).collect();
    let _ = writeln!(meta, "methods = {names:?}");
    write_file(&out.join(REPORT_META_FILE), meta)?;

    print!("{}", format_table(&report, horizons));
    println!("({} on {} {split} scenes; wrote {})", ev.metric.tag(), scenes.len(), out.display());
    Ok(())
}

fn format_table(report: &socialpose_core::eval::HorizonReport, horizons: &[f64]) -> String {
    let methods = report.methods();
    let width = methods.iter().map(|m| m.len()).max().unwrap_or(6).max(6);
    let mut s = format!("{:width$}", "method");
    for h in horizons {
        let _ = write!(s, " {:>10}", format!("{h}ms"));
    }
    s.push('\n');
    for m in methods {
        let _ = write!(s, "{m:width$}");
        for &h in horizons {
            let _ = write!(s, " {:>10.4}", report.get(m, h).unwrap_or(f64::NAN));
        }
        s.push('\n');
    }
    s
}

pub fn predict(args: &PredictArgs) -> CliResult<()> {
    let ck: Checkpoint64 = Checkpoint::load(&args.checkpoint)?;
    let scene: Scene64 = read_scene(&args.scene)?;
    if same_file(&args.scene, &args.out) {
        return Err(CliError::Usage("refusing to overwrite the input scene".into()));
    }
    let obs = ck.config.obs_frames;
    if scene.num_frames() < obs {
        return Err(CliError::Data(format!(
            "scene {} has {} frames, the model observes {obs}",
            scene.id(),
            scene.num_frames()
        )));
    }
    let observed = scene.window(0, obs)?;
    let ctx = provider(&args.context, ck.config.context_raw_dim)?;
    let pred = ck.forecaster()?.forecast(&observed, Some(&ctx))?;
    let out_scene = pred.to_scene(&observed)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_scene(&args.out, &out_scene)?;
    println!(
        "forecast {} frames for {} persons of {}; wrote {}",
        out_scene.num_frames(),
        out_scene.num_persons(),
        scene.id(),
        args.out.display()
    );
    Ok(())
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (a.canonicalize(), b.canonicalize()) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

pub fn gradcheck(args: &GradcheckArgs) -> CliResult<()> {
    if args.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let cases = gradient_suite(args.seed, args.count)?;
    for c in &cases {
        if args.verbose || !c.passed() {
            println!("{} {c}", if c.passed() { "ok  " } else { "FAIL" });
        }
    }
    let worst = cases
        .iter()
        .max_by(|a, b| a.worst.max_relative_error.total_cmp(&b.worst.max_relative_error))
        .expect("at least one case");
    println!(
        "{} cases, max relative error {:.3e} ({worst}), tolerance {GRADCHECK_TOLERANCE:e}",
        cases.len(),
        worst.worst.max_relative_error
    );
    if cases.iter().all(|c| c.passed()) {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "gradient check failed: max relative error {:.3e} exceeds {GRADCHECK_TOLERANCE:e}",
            worst.worst.max_relative_error
        )))
    }
}
