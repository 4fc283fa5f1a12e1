use crate::args::TilePlanArgs;
use crate::config::Resolver;
use crate::errors::{CliError, CliResult};
use crate::out;
use crowdgroups_core::tiling::plan_tiles;

pub fn run(a: TilePlanArgs) -> CliResult<()> {
    let mut r = Resolver::load(a.common.config.as_deref())?;
    let out_dir = r.resolve_out_dir(a.common.out_dir)?;
    let frame_w = r
        .get_opt("frame_w", a.frame_w)?
        .ok_or_else(|| CliError::invalid_argument("frame_w is required (flag --frame-w or config)"))?;
    let frame_h = r
        .get_opt("frame_h", a.frame_h)?
        .ok_or_else(|| CliError::invalid_argument("frame_h is required (flag --frame-h or config)"))?;
    let tile_w = r.get("tile_w", a.tile_w, 2048u32)?;
    let tile_h = r.get("tile_h", a.tile_h, 2048u32)?;
    let overlap = r.get("overlap", a.overlap, 256u32)?;
    let scales = r.get_list("scales", a.scales.clone(), &[1.0])?;
    let out_name = r.get_opt("out", a.out.clone())?;
    r.finish(&out_dir, "tile-plan")?;

    let plan = plan_tiles(frame_w, frame_h, tile_w, tile_h, overlap, &scales)?;
    match out_name {
        Some(name) => out::write_json(&out_dir.join(name), &plan)?,
        None => {
            let text = serde_json::to_string_pretty(&plan)
                .map_err(|e| CliError::parse(format!("plan: {e}")))?;
            println!("{text}");
        }
    }
    Ok(())
}
