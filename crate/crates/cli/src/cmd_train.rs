use crate::args::TrainArgs;
use crate::config::Resolver;
use crate::errors::{CliError, CliResult};
use crate::{out, resolve};
use crowdgroups_core::anno::load_scene;
use crowdgroups_core::encoder::{train, EncoderConfig, TripletConfig};
use crowdgroups_core::pipeline::{calibrate_thresholds, save_weights, InteractionScorer, WeightsFile};
use crowdgroups_core::seed::mix;
use crowdgroups_core::sim::{OracleConfig, OracleScorer};

pub fn run(a: TrainArgs) -> CliResult<()> {
    let mut r = Resolver::load(a.common.config.as_deref())?;
    let out_dir = r.resolve_out_dir(a.common.out_dir)?;
    let scene_paths = r.require_paths("scenes", &a.scenes)?;
    let out_name = r.get("out", a.out.clone(), "weights.json".to_string())?;

    let enc_defaults = EncoderConfig::default();
    let dropout = r.get("dropout", a.dropout, enc_defaults.dropout)?;
    let enc = EncoderConfig {
        hidden: r.get("hidden", a.hidden, enc_defaults.hidden)?,
        layers: r.get("layers", a.layers, enc_defaults.layers)?,
        dropout,
        ..enc_defaults
    };
    let train_defaults = TripletConfig::default();
    let tcfg = TripletConfig {
        epochs: r.get("epochs", a.epochs, train_defaults.epochs)?,
        batch_size: r.get("batch_size", a.batch_size, train_defaults.batch_size)?,
        margin: r.get("margin", a.margin, train_defaults.margin)?,
        learning_rate: r.get("learning_rate", a.learning_rate, train_defaults.learning_rate)?,
        momentum: r.get("momentum", a.momentum, train_defaults.momentum)?,
        dropout,
        seed: r.get("train_seed", a.train_seed, train_defaults.seed)?,
        ..train_defaults
    };
    let calibrate = r.get_flag("calibrate", a.no_calibrate.then_some(false), true)?;
    let ocfg = resolve::oracle_config(&mut r, &a.oracle)?;
    let pipe = resolve::pipeline_config(&mut r, &a.pipeline, None)?;
    r.finish(&out_dir, "train-encoder")?;

    let mut scenes = Vec::with_capacity(scene_paths.len());
    for p in &scene_paths {
        scenes.push(load_scene(p).map_err(|e| CliError::in_file(p, e))?);
    }

    let (params, report) = train(&scenes, &enc, &tcfg)?;
    let mut weights = WeightsFile::new(params);
    weights.train_config = Some(tcfg);
    if calibrate {
        let oracles = scenes
            .iter()
            .enumerate()
            .map(|(i, s)| {
                OracleScorer::new(s, OracleConfig { seed: mix(ocfg.seed, i as u64), ..ocfg })
            })
            .collect::<crowdgroups_core::Result<Vec<_>>>()?;
        let refs: Vec<&dyn InteractionScorer> =
            oracles.iter().map(|o| o as &dyn InteractionScorer).collect();
        weights.calibration = Some(calibrate_thresholds(&scenes, &refs, &weights.params, &pipe)?);
    }

    let weights_path = out_dir.join(&out_name);
    save_weights(&weights_path, &weights).map_err(|e| CliError::in_file(&weights_path, e))?;
    let report_stem = out_name.strip_suffix(".json").unwrap_or(&out_name);
    out::write_json(&out_dir.join(format!("{report_stem}.report.json")), &report)?;
    Ok(())
}
