use crate::args::DetectArgs;
use crate::config::Resolver;
use crate::errors::{CliError, CliResult};
use crate::{out, resolve};
use crowdgroups_core::anno::load_scene;
use crowdgroups_core::pipeline::{detect_groups, load_weights};
use crowdgroups_core::sim::OracleScorer;

pub fn run(a: DetectArgs) -> CliResult<()> {
    let mut r = Resolver::load(a.common.config.as_deref())?;
    let out_dir = r.resolve_out_dir(a.common.out_dir)?;
    let scene_path = r.require_path("scene", a.scene)?;
    let weights_path = r.require_path("weights", a.weights)?;
    let out_name = r.get("out", a.out.clone(), "groups".to_string())?;

    let scene = load_scene(&scene_path).map_err(|e| CliError::in_file(&scene_path, e))?;
    let weights = load_weights(&weights_path).map_err(|e| CliError::in_file(&weights_path, e))?;
    let ocfg = resolve::oracle_config(&mut r, &a.oracle)?;
    let cfg = resolve::pipeline_config(&mut r, &a.pipeline, weights.calibration.as_ref())?;
    r.finish(&out_dir, "detect-groups")?;

    let scorer = OracleScorer::new(&scene, ocfg)?;
    let (groups, diagnostics) = detect_groups(&scene, &weights.params, &scorer, &cfg)?;

    // Wall-clock timings are the one nondeterministic diagnostic; the output
    // file must be byte-identical across reruns of the same seed.
    let mut diag = serde_json::to_value(&diagnostics)
        .map_err(|e| CliError::parse(format!("diagnostics: {e}")))?;
    if let Some(map) = diag.as_object_mut() {
        map.remove("timings_ms");
    }
    out::write_json(
        &out_dir.join(format!("{out_name}.json")),
        &serde_json::json!({ "groups": groups, "diagnostics": diag }),
    )?;
    Ok(())
}
