use std::fs;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use log::{info, warn};
use sleepstack::analysis::{
    compare_subsets, emit_report, group_by_recording, kde, metrics, min_max_scale, silverman_bandwidth,
    Bandwidth, Grid, KdeCurve, MetricsReport, ReportInputs,
};
use sleepstack::baseline::{
    balanced_bagging_train, extract_all, write_features_csv, FeatureVector, FilterBank, TreeParams, ENSEMBLE_SIZE,
};
use sleepstack::edf::{
    build_split, class_count_table, discover_recordings, ingest_recordings, locate_recordings, Epoch, LabelScheme,
    SplitManifest, Subset, Task, DEFAULT_CHANNEL,
};
use sleepstack::resnet::{build_model, load_checkpoint, save_checkpoint, CheckpointMeta, Model, ResnetError};
use sleepstack::seed::{child_seed, rng_for};
use sleepstack::store::{read_store, write_store, StoreIndex};
use sleepstack::train::{lr_at, predict_epochs, train_with};

use crate::config::{RunConfig, SplitSide, TaskArg};
use crate::error::{data_error, usage_error, Classify, Outcome};

pub const STORE_FILE: &str = "epochs.store";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";

pub fn run(command: &str, cfg: RunConfig) -> Outcome<()> {
    match command {
        "ingest" => ingest(cfg),
        "train" => train(cfg),
        "eval" => eval(cfg),
        "baseline" => baseline(cfg),
        "analyze" => analyze(cfg),
        other => Err(usage_error(format!("unknown command `{other}`"))),
    }
}

fn scheme_of(classes: usize) -> Outcome<LabelScheme> {
    LabelScheme::with_classes(classes).ok_or_else(|| usage_error(format!("--scheme must be 5 or 6, got {classes}")))
}

fn load_manifest(cfg: &RunConfig) -> Outcome<SplitManifest> {
    let path = RunConfig::require(&cfg.manifest, "manifest")?;
    let manifest = SplitManifest::load(path).usage(|| format!("loading manifest {}", path.display()))?;
    check_task(cfg, &manifest)?;
    Ok(manifest)
}

fn check_task(cfg: &RunConfig, manifest: &SplitManifest) -> Outcome<()> {
    let expected = match cfg.task {
        Some(TaskArg::Rs) => Task::RsTask,
        Some(TaskArg::Sc) => Task::ScTask,
        None => return Ok(()),
    };
    if manifest.task != expected {
        return Err(usage_error(format!("--task asks for {expected:?} but the manifest is {:?}", manifest.task)));
    }
    Ok(())
}

fn load_store(cfg: &mut RunConfig) -> Outcome<(Vec<Epoch>, StoreIndex)> {
    let path = RunConfig::require(&cfg.store, "store")?.clone();
    let (epochs, index) = read_store(&path).data(|| format!("reading store {}", path.display()))?;
    let classes = index.scheme.num_classes();
    match cfg.scheme {
        Some(k) if k != classes => {
            return Err(usage_error(format!("--scheme {k} but the store holds {classes}-class labels")));
        }
        _ => cfg.scheme = Some(classes),
    }
    Ok((epochs, index))
}

fn split_store(epochs: Vec<Epoch>, manifest: &SplitManifest) -> Outcome<(Vec<Epoch>, Vec<Epoch>)> {
    build_split(&epochs, manifest).data(|| "applying the manifest to the store".to_string())
}

fn output_dir(cfg: &RunConfig) -> Outcome<PathBuf> {
    let out = RunConfig::require(&cfg.out, "out")?.clone();
    fs::create_dir_all(&out).internal(|| format!("creating {}", out.display()))?;
    Ok(out)
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Outcome<()> {
    fs::write(path, bytes).internal(|| format!("writing {}", path.display()))
}

fn class_names(index: &StoreIndex) -> Vec<&str> {
    index.class_names.iter().map(String::as_str).collect()
}

fn ingest(mut cfg: RunConfig) -> Outcome<()> {
    let data_dir = RunConfig::require(&cfg.data_dir, "data-dir")?.clone();
    RunConfig::require(&cfg.out, "out")?;
    let scheme = scheme_of(*cfg.scheme.get_or_insert(6))?;
    let channel = cfg.channel.get_or_insert_with(|| DEFAULT_CHANNEL.to_string()).clone();
    let manifest = match cfg.manifest {
        Some(_) => Some(load_manifest(&cfg)?),
        None => None,
    };
    let ids = match &manifest {
        Some(m) => m.all_recordings().cloned().collect(),
        None => discover_recordings(&data_dir).data(|| format!("scanning {}", data_dir.display()))?,
    };
    let files = locate_recordings(&data_dir, &ids).data(|| format!("locating recordings in {}", data_dir.display()))?;
    let epochs = ingest_recordings(&files, scheme, &channel).data(|| "ingesting recordings".to_string())?;
    let split = match &manifest {
        Some(m) => Some(split_store(epochs.clone(), m)?),
        None => None,
    };

    let out = output_dir(&cfg)?;
    let store = out.join(STORE_FILE);
    write_store(&store, &epochs, scheme).internal(|| format!("writing {}", store.display()))?;
    let mut rows = class_count_table(&epochs, scheme.num_classes());
    if let Some((train, test)) = &split {
        rows.push(("train".into(), class_count_table(train, scheme.num_classes())[2].1.clone()));
        rows.push(("test".into(), class_count_table(test, scheme.num_classes())[2].1.clone()));
    }
    let mut csv = format!("subset,{},total\n", scheme.class_names().join(","));
    for (name, counts) in &rows {
        let cells: Vec<String> = counts.iter().map(u64::to_string).collect();
        csv += &format!("{name},{},{}\n", cells.join(","), counts.iter().sum::<u64>());
    }
    write_file(&out.join("class_counts.csv"), &csv)?;
    cfg.write(&out)?;
    info!("{} recordings, {} epochs -> {}", files.len(), epochs.len(), store.display());
    print!("{csv}");
    Ok(())
}

fn print_param_report(model: &Model) {
    let report = model.param_report();
    for (name, params) in &report {
        println!("{name:<24}{params:>12}");
    }
    println!("{:<24}{:>12}", "total", report.iter().map(|r| r.1).sum::<usize>());
}

fn train(mut cfg: RunConfig) -> Outcome<()> {
    if cfg.dry_run == Some(true) {
        let classes = match cfg.store {
            Some(_) => load_store(&mut cfg)?.1.scheme.num_classes(),
            None => *RunConfig::require(&cfg.scheme, "scheme")?,
        };
        scheme_of(classes)?;
        let model = build_model(classes, &mut rng_for(cfg.seed(), "model/init"))?;
        print_param_report(&model);
        return Ok(());
    }
    let manifest = load_manifest(&cfg)?;
    RunConfig::require(&cfg.out, "out")?;
    let mut tc = cfg.train.clone().unwrap_or_default();
    tc.seed = cfg.seed();
    tc.validate().usage(|| "training config".to_string())?;
    cfg.seed = Some(tc.seed);
    cfg.train = Some(tc.clone());
    let (epochs, index) = load_store(&mut cfg)?;
    let (train_set, _) = split_store(epochs, &manifest)?;
    if train_set.is_empty() {
        return Err(data_error("the training side of the split is empty"));
    }
    let classes = index.scheme.num_classes();
    let mut model = build_model(classes, &mut rng_for(tc.seed, "model/init"))?;
    info!("training on {} epochs for {} passes", train_set.len(), tc.num_epochs);
    let history = train_with(&mut model, &train_set, &tc, None, |r, _| {
        info!(
            "epoch {:>3}  lr {:.0e}  loss {:.4}  train acc {:.2}%  {:.1}s",
            r.epoch,
            r.lr,
            r.loss,
            100.0 * r.train_acc,
            r.seconds
        );
        ControlFlow::Continue(())
    })
    .internal(|| "training".to_string())?;

    let out = output_dir(&cfg)?;
    let last = tc.num_epochs.saturating_sub(1);
    let meta = CheckpointMeta {
        seed: tc.seed,
        epoch: tc.num_epochs as u64,
        lr: lr_at(last, &tc),
    };
    let ckpt = out.join(CHECKPOINT_FILE);
    save_checkpoint(&model, &meta, &ckpt).internal(|| format!("writing {}", ckpt.display()))?;
    let mut csv = Vec::new();
    history.write_csv(&mut csv)?;
    write_file(&out.join("history.csv"), csv)?;
    cfg.write(&out)?;
    info!("checkpoint written to {}", ckpt.display());
    Ok(())
}

fn load_network(cfg: &RunConfig, classes: usize) -> Outcome<Model> {
    let path = RunConfig::require(&cfg.checkpoint, "checkpoint")?;
    match load_checkpoint(path, classes) {
        Ok((model, _)) => Ok(model),
        Err(e @ ResnetError::Io(_)) => Err(e).usage(|| format!("reading checkpoint {}", path.display())),
        Err(e) => Err(e).data(|| format!("loading checkpoint {}", path.display())),
    }
}

fn evaluate_network(model: &Model, epochs: &[Epoch], names: &[&str]) -> Outcome<MetricsReport> {
    let preds = predict_epochs(model, epochs).internal(|| "running the network".to_string())?;
    Ok(metrics(&group_by_recording(epochs, &preds)?, names)?)
}

fn pick_side(cfg: &mut RunConfig, train: Vec<Epoch>, test: Vec<Epoch>) -> Outcome<Vec<Epoch>> {
    let side = *cfg.split.get_or_insert(SplitSide::Test);
    let chosen = if side == SplitSide::Train { train } else { test };
    if chosen.is_empty() {
        return Err(data_error(format!("the {side:?} side of the split is empty")));
    }
    Ok(chosen)
}

fn eval(mut cfg: RunConfig) -> Outcome<()> {
    let manifest = load_manifest(&cfg)?;
    RunConfig::require(&cfg.out, "out")?;
    let (epochs, index) = load_store(&mut cfg)?;
    let model = load_network(&cfg, index.scheme.num_classes())?;
    let (train_set, test_set) = split_store(epochs, &manifest)?;
    let side = pick_side(&mut cfg, train_set, test_set)?;
    let report = evaluate_network(&model, &side, &class_names(&index))?;
    let out = output_dir(&cfg)?;
    emit_report(
        &out,
        &ReportInputs {
            metrics: Some(&report),
            system_name: Some("network"),
            ..Default::default()
        },
    )?;
    cfg.write(&out)?;
    info!("epoch-wise accuracy {:.2}% on {} epochs", report.epoch_accuracy, side.len());
    Ok(())
}

fn feature_rows(feats: &[FeatureVector]) -> (Vec<Vec<f64>>, Vec<usize>) {
    (feats.iter().map(|f| f.values.clone()).collect(), feats.iter().map(|f| f.label).collect())
}

fn baseline(mut cfg: RunConfig) -> Outcome<()> {
    let manifest = load_manifest(&cfg)?;
    RunConfig::require(&cfg.out, "out")?;
    let seed = *cfg.seed.get_or_insert(0);
    let (epochs, index) = load_store(&mut cfg)?;
    let network = match cfg.checkpoint {
        Some(_) => Some(load_network(&cfg, index.scheme.num_classes())?),
        None => None,
    };
    let (train_set, test_set) = split_store(epochs, &manifest)?;
    let test_set = pick_side(&mut cfg, train_set.clone(), test_set)?;
    let names = class_names(&index);
    let bank = FilterBank::default_bands();
    let train_feats = extract_all(&train_set, &bank).internal(|| "extracting training features".to_string())?;
    let test_feats = extract_all(&test_set, &bank).internal(|| "extracting test features".to_string())?;
    let (rows, labels) = feature_rows(&train_feats);
    let ensemble = balanced_bagging_train(
        &rows,
        &labels,
        names.len(),
        ENSEMBLE_SIZE,
        &TreeParams::default(),
        child_seed(seed, "baseline"),
    )
    .data(|| "training the bagged trees".to_string())?;
    let preds = test_feats
        .iter()
        .map(|f| ensemble.predict(&f.values))
        .collect::<Result<Vec<_>, _>>()?;
    let report = metrics(&group_by_recording(&test_set, &preds)?, &names)?;
    let network_report = match &network {
        Some(model) => Some(evaluate_network(model, &test_set, &names)?),
        None => None,
    };

    let out = output_dir(&cfg)?;
    let mut buf = Vec::new();
    write_features_csv(&train_feats, &mut buf)?;
    write_file(&out.join("features_train.csv"), &buf)?;
    buf.clear();
    write_features_csv(&test_feats, &mut buf)?;
    write_file(&out.join("features_test.csv"), &buf)?;
    write_file(&out.join("ensemble.json"), ensemble.to_json())?;
    let mut inputs = ReportInputs {
        metrics: Some(&report),
        system_name: Some("baseline"),
        ..Default::default()
    };
    if let Some(net) = &network_report {
        inputs.compare.push(("network", net));
        emit_report(
            &out.join("network"),
            &ReportInputs {
                metrics: Some(net),
                system_name: Some("network"),
                ..Default::default()
            },
        )?;
    }
    emit_report(&out, &inputs)?;
    cfg.write(&out)?;
    info!("baseline epoch-wise accuracy {:.2}% on {} epochs", report.epoch_accuracy, test_set.len());
    Ok(())
}

/// Density curves of one feature for both subsets after pooled min-max
/// scaling, on a shared grid.
fn subset_curves(sc: &[f64], st: &[f64]) -> Option<(KdeCurve, KdeCurve)> {
    let pooled: Vec<f64> = sc.iter().chain(st).copied().collect();
    let scaled = min_max_scale(&pooled);
    let (a, b) = scaled.split_at(sc.len());
    let h = silverman_bandwidth(a).ok()?.max(silverman_bandwidth(b).ok()?);
    let grid = Grid::Range {
        lo: -4.0 * h,
        hi: 1.0 + 4.0 * h,
        points: 256,
    };
    Some((kde(a, Bandwidth::Silverman, grid).ok()?, kde(b, Bandwidth::Silverman, grid).ok()?))
}

fn analyze(mut cfg: RunConfig) -> Outcome<()> {
    RunConfig::require(&cfg.out, "out")?;
    let (epochs, _) = load_store(&mut cfg)?;
    let cmp = compare_subsets(&epochs, &FilterBank::default_bands()).data(|| "comparing SC and ST".to_string())?;
    if cmp.skipped > 0 {
        warn!("{} epochs skipped: a band carried no energy", cmp.skipped);
    }
    let mut curves = Vec::new();
    for (i, row) in cmp.rows.iter().enumerate() {
        let (f, b) = (i / cmp.bands.len(), i % cmp.bands.len());
        let name = format!("{}_{}", row.feature.as_str(), row.band.as_str());
        match subset_curves(cmp.values(Subset::SC, f, b), cmp.values(Subset::ST, f, b)) {
            Some(pair) => curves.push((name, pair)),
            None => warn!("no density for {name}: a subset has zero variance"),
        }
    }
    let kde_inputs = curves
        .iter()
        .map(|(name, (sc, st))| (name.clone(), vec![("SC", sc), ("ST", st)]))
        .collect();
    let out = output_dir(&cfg)?;
    emit_report(
        &out,
        &ReportInputs {
            anova: &cmp.rows,
            kde: kde_inputs,
            ..Default::default()
        },
    )?;
    cfg.write(&out)?;
    let significant = cmp.rows.iter().filter(|r| r.result.p_value < 1e-3).count();
    info!("{significant} of {} feature/band pairs differ at p < 0.001", cmp.rows.len());
    Ok(())
}
