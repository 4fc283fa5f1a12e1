//! Command-line surface. Every value-bearing flag is optional here;
//! defaults live in the command implementations, behind the
//! flag > config file > default resolution.

use crate::errors::EXIT_CODE_TABLE;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Parser)]
#[command(
    name = "crowdgroups",
    version,
    about = "Synthetic crowd scenes, trajectory-embedding group detection, and evaluation metrics",
    after_help = EXIT_CODE_TABLE
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate synthetic scenes (plus ground-truth sidecars, optionally
    /// corrupted detections and hypothesis tracks).
    Simulate(SimulateArgs),
    /// Train the trajectory encoder on scenes and write a weights file,
    /// thresholds calibrated by default.
    TrainEncoder(TrainArgs),
    /// Detect groups in one scene with trained weights.
    DetectGroups(DetectArgs),
    /// Score detections against a scene's ground-truth boxes.
    EvalDet(EvalDetArgs),
    /// Score hypothesis tracks against a scene's ground-truth tracks.
    EvalMot(EvalMotArgs),
    /// Score predicted groups against a scene's ground-truth groups.
    EvalGroup(EvalGroupArgs),
    /// Print or write the tiling geometry for a frame size.
    TilePlan(TilePlanArgs),
    /// Grid-sweep zoom policies, budgets, and sample counts over seeds.
    Sweep(SweepArgs),
}

#[derive(Args)]
pub struct CommonArgs {
    /// Flat `key = value` config file; flags override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory (default: $CROWDGROUPS_OUT_DIR, then ".").
    #[arg(short, long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args)]
pub struct SimFlags {
    #[arg(long)]
    pub frame_w: Option<u32>,
    #[arg(long)]
    pub frame_h: Option<u32>,
    #[arg(long)]
    pub num_frames: Option<u32>,
    #[arg(long)]
    pub keyframe_interval: Option<u32>,
    #[arg(long)]
    pub n_groups: Option<u32>,
    #[arg(long)]
    pub n_singles: Option<u32>,
    #[arg(long)]
    pub group_size_mean: Option<f64>,
    /// Fraction of groups and singles that stand still.
    #[arg(long)]
    pub stationary_fraction: Option<f64>,
    #[arg(long)]
    pub member_spacing: Option<f64>,
    #[arg(long)]
    pub member_offset_std: Option<f64>,
    /// Expected interaction episodes per intra-group pair.
    #[arg(long)]
    pub interaction_rate: Option<f64>,
    #[arg(long)]
    pub interaction_duration: Option<f64>,
}

#[derive(Args)]
pub struct OracleFlags {
    /// Probability the oracle flips a clip's interaction label.
    #[arg(long)]
    pub oracle_flip: Option<f64>,
    /// Std of the Gaussian jitter on oracle scores.
    #[arg(long)]
    pub oracle_jitter: Option<f64>,
    /// Clips the oracle scores per zoomed edge.
    #[arg(long)]
    pub oracle_clips: Option<u32>,
    #[arg(long)]
    pub oracle_seed: Option<u64>,
}

#[derive(Args)]
pub struct PipelineFlags {
    /// Zoom-in selection policy.
    #[arg(long, value_enum)]
    pub policy: Option<PolicyChoice>,
    /// Zoom budget: edges that receive local interaction scoring.
    #[arg(long)]
    pub eta: Option<usize>,
    /// Stochastic forward passes per track for uncertainty.
    #[arg(long)]
    pub tau: Option<usize>,
    /// Merge threshold (default: the weights file's calibration).
    #[arg(long)]
    pub theta: Option<f64>,
    /// Positive-edge threshold (default: the weights file's calibration).
    #[arg(long)]
    pub theta_pos: Option<f64>,
    /// Blend of local score into merged similarity on zoomed edges.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Skip local scoring entirely (global-only pipeline).
    #[arg(long)]
    pub no_local: bool,
    #[arg(long)]
    pub radius_scale: Option<f64>,
    #[arg(long)]
    pub clip_radius_scale: Option<f64>,
    #[arg(long)]
    pub clip_len: Option<u32>,
    #[arg(long)]
    pub cooccur_min_frames: Option<u32>,
    #[arg(long)]
    pub max_group_size: Option<usize>,
    #[arg(long)]
    pub theta_step: Option<f64>,
    /// Fixed similarity scale; omitted means the graph's median distance.
    #[arg(long)]
    pub merge_sigma: Option<f64>,
    /// Seed driving the random zoom policy.
    #[arg(long)]
    pub policy_seed: Option<u64>,
    /// Seed for the stochastic uncertainty passes.
    #[arg(long)]
    pub mc_seed: Option<u64>,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Seed of the first scene; scene k uses seed + k.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of scenes to generate.
    #[arg(long)]
    pub count: Option<u32>,
    #[command(flatten)]
    pub sim: SimFlags,
    /// Also write per-frame detections and hypothesis tracks derived from
    /// the ground truth under the corruption flags below.
    #[arg(long)]
    pub emit_detections: bool,
    /// Probability a ground-truth box is dropped.
    #[arg(long)]
    pub fn_rate: Option<f64>,
    /// Expected spurious boxes per frame.
    #[arg(long)]
    pub fp_rate: Option<f64>,
    /// Std of the positional jitter in pixels.
    #[arg(long)]
    pub jitter_std: Option<f64>,
    /// Probability two overlapping identities swap.
    #[arg(long)]
    pub idswitch_rate: Option<f64>,
    #[arg(long)]
    pub det_seed: Option<u64>,
}

#[derive(Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Training scenes (ground-truth groups required).
    #[arg(long, num_args = 1.., value_name = "FILE")]
    pub scenes: Vec<PathBuf>,
    /// Weights file name inside the output directory.
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub train_seed: Option<u64>,
    /// Skip threshold calibration (the weights file then carries none).
    #[arg(long)]
    pub no_calibrate: bool,
    #[command(flatten)]
    pub oracle: OracleFlags,
    #[command(flatten)]
    pub pipeline: PipelineFlags,
}

#[derive(Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_name = "FILE")]
    pub scene: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub weights: Option<PathBuf>,
    /// Output name (writes <out>.json).
    #[arg(long)]
    pub out: Option<String>,
    #[command(flatten)]
    pub oracle: OracleFlags,
    #[command(flatten)]
    pub pipeline: PipelineFlags,
}

#[derive(Args)]
pub struct EvalDetArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Ground-truth scenes, one per detections file.
    #[arg(long, num_args = 1.., value_name = "FILE")]
    pub scenes: Vec<PathBuf>,
    #[arg(long, num_args = 1.., value_name = "FILE")]
    pub detections: Vec<PathBuf>,
    /// Ground-truth box kind to score against.
    #[arg(long, value_enum)]
    pub box_kind: Option<BoxKindChoice>,
    /// Report name (writes <out>.csv and <out>.json).
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Args)]
pub struct EvalMotArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, num_args = 1.., value_name = "FILE")]
    pub scenes: Vec<PathBuf>,
    /// Hypothesis track files, one per scene.
    #[arg(long, num_args = 1.., value_name = "FILE")]
    pub hypotheses: Vec<PathBuf>,
    #[arg(long)]
    pub iou_threshold: Option<f64>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Args)]
pub struct EvalGroupArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, num_args = 1.., value_name = "FILE")]
    pub scenes: Vec<PathBuf>,
    /// Predicted-group files (detect-groups output), one per scene.
    #[arg(long, num_args = 1.., value_name = "FILE")]
    pub groups: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Args)]
pub struct TilePlanArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub frame_w: Option<u32>,
    #[arg(long)]
    pub frame_h: Option<u32>,
    #[arg(long)]
    pub tile_w: Option<u32>,
    #[arg(long)]
    pub tile_h: Option<u32>,
    #[arg(long)]
    pub overlap: Option<u32>,
    /// Comma-separated scale factors.
    #[arg(long)]
    pub scales: Option<String>,
    /// Output file name; omitted prints the plan to stdout.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_name = "FILE")]
    pub weights: Option<PathBuf>,
    /// Comma-separated scene seeds; at least two.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Comma-separated zoom budgets.
    #[arg(long)]
    pub etas: Option<String>,
    /// Comma-separated stochastic sample counts.
    #[arg(long)]
    pub taus: Option<String>,
    /// Comma-separated policies to sweep.
    #[arg(long)]
    pub policies: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    #[command(flatten)]
    pub sim: SimFlags,
    #[command(flatten)]
    pub oracle: OracleFlags,
    #[command(flatten)]
    pub pipeline: PipelineFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyChoice {
    Uncertainty,
    Random,
}

impl fmt::Display for PolicyChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyChoice::Uncertainty => "uncertainty",
            PolicyChoice::Random => "random",
        })
    }
}

impl FromStr for PolicyChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "uncertainty" => Ok(PolicyChoice::Uncertainty),
            "random" => Ok(PolicyChoice::Random),
            other => Err(format!("unknown policy `{other}` (expected uncertainty or random)")),
        }
    }
}

impl From<PolicyChoice> for crowdgroups_core::pipeline::ZoomKind {
    fn from(p: PolicyChoice) -> Self {
        match p {
            PolicyChoice::Uncertainty => Self::Uncertainty,
            PolicyChoice::Random => Self::Random,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoxKindChoice {
    VisibleBody,
    FullBody,
    Head,
    HeadPoint,
}

impl fmt::Display for BoxKindChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoxKindChoice::VisibleBody => "visible-body",
            BoxKindChoice::FullBody => "full-body",
            BoxKindChoice::Head => "head",
            BoxKindChoice::HeadPoint => "head-point",
        })
    }
}

impl FromStr for BoxKindChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "visible-body" => Ok(BoxKindChoice::VisibleBody),
            "full-body" => Ok(BoxKindChoice::FullBody),
            "head" => Ok(BoxKindChoice::Head),
            "head-point" => Ok(BoxKindChoice::HeadPoint),
            other => Err(format!("unknown box kind `{other}`")),
        }
    }
}

impl From<BoxKindChoice> for crowdgroups_core::anno::BoxKind {
    fn from(k: BoxKindChoice) -> Self {
        match k {
            BoxKindChoice::VisibleBody => Self::VisibleBody,
            BoxKindChoice::FullBody => Self::FullBody,
            BoxKindChoice::Head => Self::Head,
            BoxKindChoice::HeadPoint => Self::HeadPoint,
        }
    }
}
