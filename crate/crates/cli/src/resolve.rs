//! Flag-group resolution shared by the commands that build simulator,
//! oracle, and pipeline configurations.

use crate::args::{OracleFlags, PipelineFlags, PolicyChoice, SimFlags};
use crate::config::Resolver;
use crate::errors::CliResult;
use crowdgroups_core::pipeline::{CalibratedThresholds, PipelineConfig};
use crowdgroups_core::sim::{OracleConfig, SimConfig};

pub fn sim_config(r: &mut Resolver, f: &SimFlags, seed: u64) -> CliResult<SimConfig> {
    let d = SimConfig::default();
    Ok(SimConfig {
        frame_w: r.get("frame_w", f.frame_w, d.frame_w)?,
        frame_h: r.get("frame_h", f.frame_h, d.frame_h)?,
        num_frames: r.get("num_frames", f.num_frames, d.num_frames)?,
        keyframe_interval: r.get("keyframe_interval", f.keyframe_interval, d.keyframe_interval)?,
        n_groups: r.get("n_groups", f.n_groups, d.n_groups)?,
        n_singles: r.get("n_singles", f.n_singles, d.n_singles)?,
        group_size_mean: r.get("group_size_mean", f.group_size_mean, d.group_size_mean)?,
        stationary_fraction: r.get(
            "stationary_fraction",
            f.stationary_fraction,
            d.stationary_fraction,
        )?,
        member_spacing: r.get("member_spacing", f.member_spacing, d.member_spacing)?,
        member_offset_std: r.get("member_offset_std", f.member_offset_std, d.member_offset_std)?,
        interaction_rate: r.get("interaction_rate", f.interaction_rate, d.interaction_rate)?,
        interaction_mean_duration: r.get(
            "interaction_duration",
            f.interaction_duration,
            d.interaction_mean_duration,
        )?,
        seed,
        ..d
    })
}

pub fn oracle_config(r: &mut Resolver, f: &OracleFlags) -> CliResult<OracleConfig> {
    let d = OracleConfig::default();
    Ok(OracleConfig {
        flip_prob: r.get("oracle_flip", f.oracle_flip, d.flip_prob)?,
        jitter_std: r.get("oracle_jitter", f.oracle_jitter, d.jitter_std)?,
        clips_per_edge: r.get("oracle_clips", f.oracle_clips, d.clips_per_edge)?,
        seed: r.get("oracle_seed", f.oracle_seed, d.seed)?,
    })
}

/// Thresholds default to the weights file's calibration when one is present,
/// falling back to the built-ins otherwise.
pub fn pipeline_config(
    r: &mut Resolver,
    f: &PipelineFlags,
    calibration: Option<&CalibratedThresholds>,
) -> CliResult<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    let default_theta = calibration.map_or(cfg.merge.theta, |c| c.theta);
    let default_theta_pos = calibration.map_or(cfg.policy.theta_pos, |c| c.theta_pos);

    let policy: PolicyChoice = r.get(
        "policy",
        f.policy,
        match cfg.policy.kind {
            crowdgroups_core::pipeline::ZoomKind::Uncertainty => PolicyChoice::Uncertainty,
            crowdgroups_core::pipeline::ZoomKind::Random => PolicyChoice::Random,
        },
    )?;
    cfg.policy.kind = policy.into();
    cfg.policy.eta = r.get("eta", f.eta, cfg.policy.eta)?;
    cfg.policy.theta_pos = r.get("theta_pos", f.theta_pos, default_theta_pos)?;
    cfg.policy.seed = r.get("policy_seed", f.policy_seed, cfg.policy.seed)?;
    cfg.tau = r.get("tau", f.tau, cfg.tau)?;
    cfg.merge.theta = r.get("theta", f.theta, default_theta)?;
    cfg.merge.beta = r.get("beta", f.beta, cfg.merge.beta)?;
    cfg.merge.max_group_size = r.get("max_group_size", f.max_group_size, cfg.merge.max_group_size)?;
    cfg.merge.theta_step = r.get("theta_step", f.theta_step, cfg.merge.theta_step)?;
    cfg.merge.sigma = r.get_opt("merge_sigma", f.merge_sigma)?;
    cfg.use_local = r.get_flag("use_local", f.no_local.then_some(false), cfg.use_local)?;
    cfg.cooccur_min_frames =
        r.get("cooccur_min_frames", f.cooccur_min_frames, cfg.cooccur_min_frames)?;
    cfg.radius_scale = r.get("radius_scale", f.radius_scale, cfg.radius_scale)?;
    cfg.clip_radius_scale = r.get("clip_radius_scale", f.clip_radius_scale, cfg.clip_radius_scale)?;
    cfg.clip_len = r.get("clip_len", f.clip_len, cfg.clip_len)?;
    cfg.mc_seed = r.get("mc_seed", f.mc_seed, cfg.mc_seed)?;
    Ok(cfg)
}
