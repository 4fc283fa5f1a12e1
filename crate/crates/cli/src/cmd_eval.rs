//! The three report commands. Scene/prediction pairs evaluate on the rayon
//! pool; rows keep input order and end with an aggregate row.

use crate::args::{BoxKindChoice, EvalDetArgs, EvalGroupArgs, EvalMotArgs};
use crate::config::Resolver;
use crate::errors::{CliError, CliResult};
use crate::out;
use crowdgroups_core::anno::{load_scene, GroupMembers, Scene};
use crowdgroups_core::eval::{
    aggregate, clear_mot, evaluate_detections, group_half_prf, gt_boxes_from_scene,
    gt_tracks_from_scene, idf1, to_csv, to_json, MetricRow, TrackedBox,
};
use crowdgroups_core::tiling::Detection;
use rayon::prelude::*;
use serde::Deserialize;
use std::path::{Path, PathBuf};

fn paired(
    r: &mut Resolver,
    key_a: &str,
    flags_a: &[PathBuf],
    key_b: &str,
    flags_b: &[PathBuf],
) -> CliResult<Vec<(PathBuf, PathBuf)>> {
    let a = r.require_paths(key_a, flags_a)?;
    let b = r.require_paths(key_b, flags_b)?;
    if a.len() != b.len() {
        return Err(CliError::invalid_argument(format!(
            "{} {key_a} but {} {key_b}; they pair one-to-one",
            a.len(),
            b.len()
        )));
    }
    Ok(a.into_iter().zip(b).collect())
}

fn load_scene_ctx(path: &Path) -> CliResult<Scene> {
    load_scene(path).map_err(|e| CliError::in_file(path, e))
}

fn write_report(dir: &Path, name: &str, mut rows: Vec<MetricRow>) -> CliResult<()> {
    rows.push(aggregate(&rows));
    out::write_text(&dir.join(format!("{name}.csv")), &to_csv(&rows))?;
    out::write_text(&dir.join(format!("{name}.json")), &to_json(&rows))
}

pub fn run_det(a: EvalDetArgs) -> CliResult<()> {
    let mut r = Resolver::load(a.common.config.as_deref())?;
    let out_dir = r.resolve_out_dir(a.common.out_dir)?;
    let pairs = paired(&mut r, "scenes", &a.scenes, "detections", &a.detections)?;
    let kind = r.get("box_kind", a.box_kind, BoxKindChoice::VisibleBody)?;
    let name = r.get("out", a.out.clone(), "det_report".to_string())?;
    r.finish(&out_dir, "eval-det")?;

    let rows = pairs
        .par_iter()
        .map(|(sp, dp)| {
            let scene = load_scene_ctx(sp)?;
            let dets: Vec<Detection> = out::read_json(dp)?;
            let gt = gt_boxes_from_scene(&scene, kind.into())?;
            let res = evaluate_detections(&dets, &gt)?;
            Ok(MetricRow {
                scene: out::scene_label(sp),
                ap50: Some(res.ap50),
                ar: Some(res.ar),
                ..MetricRow::default()
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    write_report(&out_dir, &name, rows)
}

pub fn run_mot(a: EvalMotArgs) -> CliResult<()> {
    let mut r = Resolver::load(a.common.config.as_deref())?;
    let out_dir = r.resolve_out_dir(a.common.out_dir)?;
    let pairs = paired(&mut r, "scenes", &a.scenes, "hypotheses", &a.hypotheses)?;
    let iou = r.get("iou_threshold", a.iou_threshold, 0.5)?;
    let name = r.get("out", a.out.clone(), "mot_report".to_string())?;
    r.finish(&out_dir, "eval-mot")?;

    let rows = pairs
        .par_iter()
        .map(|(sp, hp)| {
            let scene = load_scene_ctx(sp)?;
            let hyps: Vec<TrackedBox> = out::read_json(hp)?;
            let gt = gt_tracks_from_scene(&scene)?;
            let mot = clear_mot(&hyps, &gt, iou)?;
            let idf1 = idf1(&hyps, &gt, iou)?;
            Ok(MetricRow {
                scene: out::scene_label(sp),
                mota: Some(mot.mota),
                motp: Some(mot.motp),
                idf1: Some(idf1),
                far: Some(mot.far),
                mt_count: Some(mot.mt_count as u64),
                mt_ratio: Some(mot.mt_ratio),
                ..MetricRow::default()
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    write_report(&out_dir, &name, rows)
}

/// The predicted-groups side of the detect-groups output file; its
/// diagnostics are ignored here.
#[derive(Deserialize)]
struct GroupsFile {
    groups: Vec<GroupMembers>,
}

pub fn run_group(a: EvalGroupArgs) -> CliResult<()> {
    let mut r = Resolver::load(a.common.config.as_deref())?;
    let out_dir = r.resolve_out_dir(a.common.out_dir)?;
    let pairs = paired(&mut r, "scenes", &a.scenes, "groups", &a.groups)?;
    let name = r.get("out", a.out.clone(), "group_report".to_string())?;
    r.finish(&out_dir, "eval-group")?;

    let rows = pairs
        .par_iter()
        .map(|(sp, gp)| {
            let scene = load_scene_ctx(sp)?;
            let predicted: GroupsFile = out::read_json(gp)?;
            let gt: Vec<GroupMembers> = scene.groups.iter().map(GroupMembers::from).collect();
            let res = group_half_prf(&predicted.groups, &gt);
            Ok(MetricRow {
                scene: out::scene_label(sp),
                precision: Some(res.precision),
                recall: Some(res.recall),
                f1: Some(res.f1),
                ..MetricRow::default()
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    write_report(&out_dir, &name, rows)
}
