//! Policy × η × τ grid evaluation over seeded scenes. Cells run on the
//! rayon pool; row order follows the grid, never completion time.

use crate::args::{PolicyChoice, SweepArgs};
use crate::config::Resolver;
use crate::errors::{CliError, CliResult};
use crate::{out, resolve};
use crowdgroups_core::anno::GroupMembers;
use crowdgroups_core::eval::group_half_prf;
use crowdgroups_core::pipeline::{detect_groups, load_weights};
use crowdgroups_core::seed::{mix, mix_all};
use crowdgroups_core::sim::{generate_scene, OracleConfig, OracleScorer, SimConfig};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub policy: String,
    pub eta: usize,
    pub tau: usize,
    pub seeds: usize,
    pub mean_precision: f64,
    pub std_precision: f64,
    pub mean_recall: f64,
    pub std_recall: f64,
    pub mean_f1: f64,
    pub std_f1: f64,
}

pub const SWEEP_CSV_HEADER: &str =
    "policy,eta,tau,seeds,mean_precision,std_precision,mean_recall,std_recall,mean_f1,std_f1";

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn run(a: SweepArgs) -> CliResult<()> {
    let mut r = Resolver::load(a.common.config.as_deref())?;
    let out_dir = r.resolve_out_dir(a.common.out_dir)?;
    let weights_path = r.require_path("weights", a.weights)?;
    let name = r.get("out", a.out.clone(), "sweep".to_string())?;
    let seeds: Vec<u64> = r.get_list("seeds", a.seeds.clone(), &[])?;
    if seeds.len() < 2 {
        return Err(CliError::invalid_argument("sweep needs at least two seeds"));
    }

    let weights = load_weights(&weights_path).map_err(|e| CliError::in_file(&weights_path, e))?;
    let base_sim = resolve::sim_config(&mut r, &a.sim, 0)?;
    let ocfg = resolve::oracle_config(&mut r, &a.oracle)?;
    let pipe = resolve::pipeline_config(&mut r, &a.pipeline, weights.calibration.as_ref())?;
    let etas: Vec<usize> = r.get_list("etas", a.etas.clone(), &[pipe.policy.eta])?;
    let taus: Vec<usize> = r.get_list("taus", a.taus.clone(), &[pipe.tau])?;
    let policies: Vec<PolicyChoice> = r.get_list(
        "policies",
        a.policies.clone(),
        &[PolicyChoice::Uncertainty, PolicyChoice::Random],
    )?;
    r.finish(&out_dir, "sweep")?;

    let scenes = seeds
        .iter()
        .map(|&seed| {
            let (scene, _) = generate_scene(&SimConfig { seed, ..base_sim.clone() })?;
            let gt: Vec<GroupMembers> = scene.groups.iter().map(GroupMembers::from).collect();
            Ok((seed, scene, gt))
        })
        .collect::<crowdgroups_core::Result<Vec<_>>>()?;

    let mut grid = Vec::new();
    for &policy in &policies {
        for &eta in &etas {
            for &tau in &taus {
                grid.push((policy, eta, tau));
            }
        }
    }

    let rows = grid
        .par_iter()
        .map(|&(policy, eta, tau)| {
            let (mut ps, mut rs, mut f1s) = (Vec::new(), Vec::new(), Vec::new());
            for (seed, scene, gt) in &scenes {
                let mut cfg = pipe.clone();
                cfg.policy.kind = policy.into();
                cfg.policy.eta = eta;
                cfg.tau = tau;
                cfg.policy.seed =
                    mix_all(pipe.policy.seed, &[policy as u64, eta as u64, tau as u64, *seed]);
                let scorer =
                    OracleScorer::new(scene, OracleConfig { seed: mix(ocfg.seed, *seed), ..ocfg })?;
                let (pred, _) = detect_groups(scene, &weights.params, &scorer, &cfg)?;
                let res = group_half_prf(&pred, gt);
                ps.push(res.precision);
                rs.push(res.recall);
                f1s.push(res.f1);
            }
            let (mean_precision, std_precision) = mean_std(&ps);
            let (mean_recall, std_recall) = mean_std(&rs);
            let (mean_f1, std_f1) = mean_std(&f1s);
            Ok(SweepRow {
                policy: policy.to_string(),
                eta,
                tau,
                seeds: scenes.len(),
                mean_precision,
                std_precision,
                mean_recall,
                std_recall,
                mean_f1,
                std_f1,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;

    let mut csv = String::from(SWEEP_CSV_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            row.policy,
            row.eta,
            row.tau,
            row.seeds,
            row.mean_precision,
            row.std_precision,
            row.mean_recall,
            row.std_recall,
            row.mean_f1,
            row.std_f1
        ));
    }
    out::write_text(&out_dir.join(format!("{name}.csv")), &csv)?;
    #[derive(Serialize)]
    struct Wrapper<'a> {
        rows: &'a [SweepRow],
    }
    let mut body = serde_json::to_string_pretty(&Wrapper { rows: &rows })
        .map_err(|e| CliError::parse(format!("sweep rows: {e}")))?;
    body.push('\n');
    out::write_text(&out_dir.join(format!("{name}.json")), &body)?;
    Ok(())
}
