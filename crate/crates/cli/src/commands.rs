//! One function per subcommand. Every input and output is a file; results
//! of `eval` and `curve` are also printed to stdout.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::Path;

use anyhow::{Context, Result};
use neuromouse_core::classify::{
    evaluate, group_rows, run_grouped, run_learning_curve, run_recurrent_protocol, CurvePoint, GroupBy, GroupResult, LabeledDataset, LearningCurve, ModelSpec,
    ProtocolConfig,
};
use neuromouse_core::features::FeatureSet;
use neuromouse_core::gan::{nearest_direction, train_gan, DetectorConfig, GanBundle, GanConfig, Preset, TrainStatus};
use neuromouse_core::io::{
    build_benchmark, featurize_all, load_features, load_trajectories, parse_raw_events, save_decompositions, save_features, save_trajectories, BenchmarkSpec,
    DecompositionRecord, LabeledTrajectory, Manifest,
};
use neuromouse_core::lognormal::{decompose_trajectory, FitConfig};
use neuromouse_core::model::{ModelFile, TrainedModel};
use neuromouse_core::synth::{DirectionStats, SynthConfig};
use neuromouse_core::tags::{AttackType, ShapeKind, VpKind};
use neuromouse_core::trajectory::Trajectory;
use neuromouse_service::ServeConfig;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::exit::{usage, Numeric};
use crate::{Command, Global};

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    f(&mut w)?;
    w.flush().with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn trajectories(path: &Path) -> Result<Vec<LabeledTrajectory>> {
    load_trajectories(open(path)?).with_context(|| format!("loading trajectories from {}", path.display()))
}

fn feature_table(path: &Path) -> Result<LabeledDataset> {
    load_features(open(path)?).with_context(|| format!("loading features from {}", path.display()))
}

fn parse<T: std::str::FromStr>(what: &str, s: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e| usage(format!("{what}: {e}")))
}

fn echo(g: &Global, command: &str, config: Value) {
    if g.print_config {
        let mut v = json!({ "command": command, "seed": g.seed() });
        if let (Value::Object(dst), Value::Object(src)) = (&mut v, config) {
            dst.extend(src);
        }
        println!("{}", serde_json::to_string_pretty(&v).expect("config serializes"));
    }
}

fn report<T: Serialize>(value: &T, output: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    if let Some(p) = output {
        write_with(p, |w| Ok(writeln!(w, "{text}")?))?;
    }
    println!("{text}");
    Ok(())
}

/// Overlays user-supplied JSON fields onto a default configuration.
fn overlay<T: Serialize + serde::de::DeserializeOwned>(base: &T, user: Option<Value>) -> Result<T> {
    let mut v = serde_json::to_value(base)?;
    if let Some(Value::Object(fields)) = user {
        v.as_object_mut().expect("configs are objects").extend(fields);
    } else if user.is_some() {
        return Err(usage("--config must hold a JSON object"));
    }
    serde_json::from_value(v).map_err(|e| usage(format!("bad config: {e}")))
}

pub fn run(g: &Global, command: Command) -> Result<()> {
    match command {
        Command::Ingest { csv, output, attack } => {
            let attack: AttackType = parse("--attack", &attack)?;
            echo(g, "ingest", json!({ "csv": csv, "output": output, "attack": attack }));
            let parsed = parse_raw_events(open(&csv)?).with_context(|| format!("parsing {}", csv.display()))?;
            let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("log").to_string();
            let layout = SynthConfig::default().layout;
            let recs: Vec<LabeledTrajectory> = parsed
                .trajectories
                .into_iter()
                .enumerate()
                .map(|(i, t)| {
                    let d = nearest_direction(&t, &layout);
                    LabeledTrajectory::new(format!("{stem}-{i:05}"), attack, t.with_direction(Some(d)))
                })
                .collect();
            eprintln!("{} trajectories, {} short segments dropped", recs.len(), parsed.dropped);
            write_with(&output, |w| Ok(save_trajectories(w, &recs)?))
        }
        Command::Synth { shape, vp, n, stats, output } => {
            let tag = AttackType::Function(parse::<ShapeKind>("--shape", &shape)?, VpKind::from_code(vp).map_err(|e| usage(format!("--vp: {e}")))?);
            let mut synth = SynthConfig::default();
            if let Some(p) = &stats {
                synth.stats = read_json::<DirectionStats>(p)?;
            }
            let spec = BenchmarkSpec { n_human: 0, attacks: [(tag, n)].into_iter().collect(), synth, seed: g.seed(), ..Default::default() };
            echo(g, "synth", json!({ "type": tag, "n": n, "output": output, "synth": spec.synth }));
            let recs = build_benchmark(&spec, None, None)?;
            write_with(&output, |w| Ok(save_trajectories(w, &recs)?))
        }
        Command::GanTrain { humans, preset, epochs, output } => {
            let mut cfg = GanConfig::preset(parse::<Preset>("--preset", &preset)?);
            cfg.seed = g.seed();
            if let Some(e) = epochs {
                cfg.epochs = e;
            }
            echo(g, "gan-train", json!({ "humans": humans, "output": output, "gan": cfg }));
            let trajs: Vec<Trajectory> = trajectories(&humans)?.into_iter().filter(|r| r.is_human()).map(|r| r.traj).collect();
            let bundle = train_gan(&trajs, &cfg)?;
            write_with(&output, |w| Ok(serde_json::to_writer(w, &bundle)?))?;
            if let Some(last) = bundle.history.last() {
                eprintln!("epoch {}: generator loss {:.4}, discriminator loss {:.4}", last.epoch, last.g_loss, last.d_loss);
            }
            match bundle.status {
                TrainStatus::Diverged { epoch, reason } => {
                    Err(Numeric(format!("training diverged at epoch {epoch}: {reason}; kept the last finite parameters")).into())
                }
                _ => Ok(()),
            }
        }
        Command::GanGen { bundle, n, output } => {
            let gan: GanBundle = read_json(&bundle)?;
            let spec = BenchmarkSpec { n_human: 0, attacks: [(AttackType::Gan, n)].into_iter().collect(), seed: g.seed(), ..Default::default() };
            echo(g, "gan-gen", json!({ "bundle": bundle, "n": n, "output": output }));
            let recs = build_benchmark(&spec, None, Some(&gan))?;
            write_with(&output, |w| Ok(save_trajectories(w, &recs)?))
        }
        Command::Decompose { dataset, output } => {
            let fit = FitConfig::default();
            echo(g, "decompose", json!({ "dataset": dataset, "output": output, "fit": fit }));
            let recs = trajectories(&dataset)?;
            let decs: Vec<Option<DecompositionRecord>> = recs
                .par_iter()
                .map(|r| match decompose_trajectory(&r.traj, &fit) {
                    Ok(d) => Some(DecompositionRecord::new(r, &d)),
                    Err(e) => {
                        log::warn!("skipping '{}': {e}", r.id);
                        None
                    }
                })
                .collect();
            let decs: Vec<DecompositionRecord> = decs.into_iter().flatten().collect();
            if decs.len() < recs.len() {
                eprintln!("{} of {} trajectories could not be decomposed", recs.len() - decs.len(), recs.len());
            }
            write_with(&output, |w| Ok(save_decompositions(w, &decs)?))
        }
        Command::Features { dataset, set, output } => {
            let set: FeatureSet = parse("--set", &set)?;
            let fit = FitConfig::default();
            echo(g, "features", json!({ "dataset": dataset, "output": output, "set": set, "fit": fit }));
            let (ds, failed) = featurize_all(&trajectories(&dataset)?, set, &fit)?;
            if failed > 0 {
                eprintln!("{failed} trajectories skipped");
            }
            write_with(&output, |w| Ok(save_features(w, &ds)?))
        }
        Command::Bench { spec, gan, humans, output } => {
            let mut bench: BenchmarkSpec = read_json(&spec)?;
            if let Some(s) = g.seed {
                bench.seed = s;
            }
            echo(g, "bench", json!({ "spec": bench, "gan": gan, "humans": humans, "output": output }));
            let gan: Option<GanBundle> = gan.as_deref().map(read_json).transpose()?;
            let real = humans.as_deref().map(trajectories).transpose()?;
            let recs = build_benchmark(&bench, real.as_deref(), gan.as_ref())?;
            std::fs::create_dir_all(&output).with_context(|| format!("creating {}", output.display()))?;
            write_with(&output.join("dataset.jsonl"), |w| Ok(save_trajectories(w, &recs)?))?;
            let manifest = Manifest::of(&recs, bench.seed);
            write_with(&output.join("manifest.json"), |w| Ok(writeln!(w, "{}", serde_json::to_string_pretty(&manifest)?)?))
        }
        Command::Train { data, model, config, output } => {
            let user: Option<Value> = config.as_deref().map(read_json).transpose()?;
            let trained = if model == "rnn" {
                let cfg = DetectorConfig { seed: g.seed(), ..overlay(&DetectorConfig::default(), user)? };
                echo(g, "train", json!({ "data": data, "output": output, "model": "rnn", "detector": cfg }));
                let recs = trajectories(&data)?;
                let trajs: Vec<Trajectory> = recs.iter().map(|r| r.traj.clone()).collect();
                let labels: Vec<bool> = recs.iter().map(|r| r.is_human()).collect();
                TrainedModel::train_recurrent(&trajs, &labels, &cfg)?
            } else {
                let spec: ModelSpec = overlay(&ModelSpec::by_name(&model).map_err(|e| usage(e.to_string()))?, user)?;
                let fit = FitConfig::default();
                echo(g, "train", json!({ "data": data, "output": output, "spec": spec, "fit": fit }));
                TrainedModel::train_features(&feature_table(&data)?, &spec, &fit, g.seed())?
            };
            write_with(&output, |w| Ok(ModelFile::new(trained).save(w)?))
        }
        Command::Eval { model, data, by, repeats, train_frac, output } => {
            let by: GroupBy = parse("--by", &by)?;
            let pcfg = ProtocolConfig { train_frac, repeats, seed: g.seed() };
            let file = ModelFile::load(open(&model)?).with_context(|| format!("loading {}", model.display()))?;
            echo(g, "eval", json!({ "model": model, "data": data, "by": by_name(by), "protocol": pcfg }));
            let (groups, saved) = match &file.model {
                TrainedModel::Features { feature_set, spec, .. } => {
                    let ds = feature_table(&data)?;
                    if ds.set != *feature_set {
                        return Err(neuromouse_core::Error::Schema(format!("model expects {feature_set} features, {} holds {}", data.display(), ds.set)).into());
                    }
                    let scores: Vec<(f64, bool)> =
                        ds.samples.iter().map(|s| Ok((file.model.score_features(&s.features)?, s.is_human()))).collect::<Result<_>>()?;
                    (run_grouped(&ds, spec, &pcfg, by)?, evaluate(&scores)?)
                }
                TrainedModel::Recurrent { detector } => {
                    let recs = trajectories(&data)?;
                    let scores: Vec<(f64, bool)> = recs.iter().map(|r| Ok((detector.predict_proba(&r.traj)?, r.is_human()))).collect::<Result<_>>()?;
                    (recurrent_groups(&recs, &detector.config, &pcfg, by)?, evaluate(&scores)?)
                }
            };
            let out = json!({ "model": file.model.name(), "protocol": pcfg, "by": by_name(by), "groups": groups, "saved_model": saved });
            report(&out, output.as_deref())
        }
        Command::Curve { features, models, l, repeats, train_frac, trajectories: traj_path, output } => {
            let pcfg = ProtocolConfig { train_frac, repeats, seed: g.seed() };
            let specs: Vec<ModelSpec> =
                models.iter().filter(|m| *m != "rnn").map(|m| ModelSpec::by_name(m).map_err(|e| usage(e.to_string()))).collect::<Result<_>>()?;
            let wants_rnn = models.iter().any(|m| m == "rnn");
            if wants_rnn && traj_path.is_none() {
                return Err(usage("the rnn model needs --trajectories"));
            }
            echo(g, "curve", json!({ "features": features, "models": models, "L": l, "protocol": pcfg, "trajectories": traj_path }));
            let mut curve =
                if specs.is_empty() { LearningCurve { points: vec![] } } else { run_learning_curve(&feature_table(&features)?, &specs, &l, &pcfg)? };
            if let Some(p) = traj_path.filter(|_| wants_rnn) {
                let recs = trajectories(&p)?;
                let (trajs, labels) = split(&recs);
                let cfg = DetectorConfig::default();
                for &size in &l {
                    let s = run_recurrent_protocol(&trajs, &labels, &cfg, &pcfg, Some(size))?;
                    curve.points.push(CurvePoint { model: "rnn".into(), l: size, acc: s.mean.acc, acc_std: s.std.acc });
                }
            }
            report(&curve, output.as_deref())
        }
        Command::Serve { model, gan, host, port, cors_origin } => {
            let addr: SocketAddr = parse("--host/--port", &format!("{host}:{port}"))?;
            echo(g, "serve", json!({ "model": model, "gan": gan, "addr": addr.to_string(), "cors_origin": cors_origin }));
            let cfg = ServeConfig { addr, model, gan, cors_origin, synth: SynthConfig::default() };
            let mut rt = tokio::runtime::Builder::new_multi_thread();
            if let Some(n) = g.threads {
                rt.worker_threads(n);
            }
            rt.enable_all().build()?.block_on(neuromouse_service::serve(cfg))?;
            Ok(())
        }
    }
}

fn by_name(by: GroupBy) -> &'static str {
    match by {
        GroupBy::None => "none",
        GroupBy::Direction => "direction",
        GroupBy::Attack => "attack",
    }
}

fn split(recs: &[LabeledTrajectory]) -> (Vec<Trajectory>, Vec<bool>) {
    (recs.iter().map(|r| r.traj.clone()).collect(), recs.iter().map(|r| r.is_human()).collect())
}

fn recurrent_groups(recs: &[LabeledTrajectory], cfg: &DetectorConfig, pcfg: &ProtocolConfig, by: GroupBy) -> Result<Vec<GroupResult>> {
    let attacks: Vec<AttackType> = recs.iter().map(|r| r.attack).collect();
    let dirs: Vec<_> = recs.iter().map(|r| r.traj.direction()).collect();
    group_rows(&attacks, &dirs, by)
        .into_iter()
        .map(|(group, idx)| {
            let sub: Vec<LabeledTrajectory> = idx.iter().map(|&i| recs[i].clone()).collect();
            let (trajs, labels) = split(&sub);
            Ok(GroupResult { n: idx.len(), summary: run_recurrent_protocol(&trajs, &labels, cfg, pcfg, None)?, group })
        })
        .collect()
}
