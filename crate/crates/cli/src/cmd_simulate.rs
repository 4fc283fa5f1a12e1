use crate::args::SimulateArgs;
use crate::config::Resolver;
use crate::errors::{CliError, CliResult};
use crate::{out, resolve};
use crowdgroups_core::anno::save_scene;
use crowdgroups_core::seed::mix;
use crowdgroups_core::sim::{corrupt_detections, generate_scene, SimConfig};

pub fn run(a: SimulateArgs) -> CliResult<()> {
    let mut r = Resolver::load(a.common.config.as_deref())?;
    let out_dir = r.resolve_out_dir(a.common.out_dir)?;
    let seed = r.get("seed", a.seed, 0u64)?;
    let count = r.get("count", a.count, 1u32)?;
    if count == 0 {
        return Err(CliError::invalid_argument("count must be at least 1"));
    }
    let base = resolve::sim_config(&mut r, &a.sim, seed)?;
    let emit = r.get_flag("emit_detections", a.emit_detections.then_some(true), false)?;
    let fn_rate = r.get("fn_rate", a.fn_rate, 0.0)?;
    let fp_rate = r.get("fp_rate", a.fp_rate, 0.0)?;
    let jitter_std = r.get("jitter_std", a.jitter_std, 0.0)?;
    let idswitch_rate = r.get("idswitch_rate", a.idswitch_rate, 0.0)?;
    let det_seed = r.get("det_seed", a.det_seed, 0u64)?;
    r.finish(&out_dir, "simulate")?;

    for k in 0..count {
        let cfg = SimConfig { seed: seed + u64::from(k), ..base.clone() };
        let (scene, sidecar) = generate_scene(&cfg)?;
        let stem = format!("scene_{}", cfg.seed);
        let scene_path = out_dir.join(format!("{stem}.json"));
        save_scene(&scene_path, &scene).map_err(|e| CliError::in_file(&scene_path, e))?;
        out::write_json(&out_dir.join(format!("{stem}.truth.json")), &sidecar)?;
        if emit {
            let (dets, hyps) = corrupt_detections(
                &scene,
                fn_rate,
                fp_rate,
                jitter_std,
                idswitch_rate,
                mix(det_seed, cfg.seed),
            )?;
            out::write_json(&out_dir.join(format!("{stem}.dets.json")), &dets)?;
            out::write_json(&out_dir.join(format!("{stem}.hyps.json")), &hyps)?;
        }
    }
    Ok(())
}
