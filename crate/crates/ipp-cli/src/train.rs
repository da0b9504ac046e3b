//! Drives DQN training from an experiment configuration and writes the
//! checkpoint plus a learning-curve CSV.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;

use ipp_core::field::FieldInstance;
use ipp_core::mission::DEFAULT_SEED_LOCS;
use ipp_core::nn::NetSpec;
use ipp_core::rl::{train_dqn, ActionSet, DqnConfig, LearningCurvePoint, RewardParams, TrainResult};

use crate::checkpoint::save_checkpoint;
use crate::config::{parse_method, ExperimentConfig, MethodSpec};
use crate::fmt::sig9;

/// Scale profile: the desk profile trims the network and interaction
/// budget to something a laptop CPU finishes quickly; the paper profile
/// is the full-size configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    Desk,
    Paper,
}

impl Profile {
    pub fn conv_channels(self) -> [usize; 4] {
        match self {
            Profile::Desk => [8, 16, 32, 32],
            Profile::Paper => [64, 128, 256, 256],
        }
    }

    pub fn dqn_config(self) -> DqnConfig {
        match self {
            Profile::Desk => DqnConfig::desk(),
            Profile::Paper => DqnConfig::default(),
        }
    }
}

/// Network spec for a profile over fields of the given size.
pub fn net_spec_for(profile: Profile, input_hw: usize, actions: usize) -> NetSpec {
    NetSpec {
        input_hw,
        conv_channels: profile.conv_channels(),
        scalar_embed: 8,
        hidden: 1024,
        actions,
        leaky_alpha: 0.01,
    }
}

pub struct TrainedArtifacts {
    pub result: TrainResult,
    pub action_levels: Vec<u32>,
    pub reward_scale: f64,
}

/// Trains the RL method named in the config's `[train]` section on the
/// configured instances.
pub fn train_from_config(
    cfg: &ExperimentConfig,
    instances: &[FieldInstance],
    profile: Profile,
    seed: u64,
    progress: Option<&mut dyn FnMut(usize, usize)>,
) -> Result<TrainedArtifacts> {
    let Some(tc) = &cfg.train else {
        bail!("config has no [train] section");
    };
    let MethodSpec::Rl { label, levels } = parse_method(&tc.method, cfg.q_init)? else {
        bail!("[train].method must be an RL method, got {}", tc.method);
    };
    if instances.is_empty() {
        bail!("no training instances");
    }
    let (h, w) = instances[0].truth.dims();
    if h != w {
        bail!("training fields must be square, got {h}x{w}");
    }
    for inst in instances {
        if inst.truth.dims() != (h, w) {
            bail!("training instances disagree on field size");
        }
    }
    let actions = ActionSet::from_levels(&levels)
        .map_err(|e| anyhow::anyhow!("action set for {label}: {e}"))?;
    let spec = net_spec_for(profile, h, actions.len());
    let mut dqn = profile.dqn_config();
    if let Some(v) = tc.interactions {
        dqn.total_interactions = v;
    }
    if let Some(v) = tc.learning_rate {
        dqn.learning_rate = v;
    }
    if let Some(v) = tc.discount {
        dqn.discount = v;
    }
    if let Some(v) = tc.batch_size {
        dqn.batch_size = v;
    }
    if let Some(v) = tc.buffer_capacity {
        dqn.buffer_capacity = v;
    }
    if let Some(v) = tc.target_sync_interval {
        dqn.target_sync_interval = v;
    }
    let result = train_dqn(
        instances,
        &actions,
        spec,
        &dqn,
        &RewardParams::default(),
        cfg.budget,
        &DEFAULT_SEED_LOCS,
        seed,
        progress,
    )
    .map_err(|e| anyhow::anyhow!("training failed: {e}"))?;
    Ok(TrainedArtifacts { result, action_levels: levels, reward_scale: dqn.reward_scale })
}

/// `episode,reward,rolling_mean` with a trailing-window rolling mean.
pub fn learning_curve_csv(curve: &[LearningCurvePoint], window: usize) -> String {
    let mut out = String::from("episode,reward,rolling_mean\n");
    let window = window.max(1);
    for (i, point) in curve.iter().enumerate() {
        let lo = i.saturating_sub(window - 1);
        let slice: Vec<f64> = curve[lo..=i].iter().map(|p| p.reward).collect();
        let rolling = slice.iter().sum::<f64>() / slice.len() as f64;
        out.push_str(&format!("{},{},{}\n", point.episode, sig9(point.reward), sig9(rolling)));
    }
    out
}

pub fn write_artifacts(
    artifacts: &TrainedArtifacts,
    checkpoint_path: &Path,
    curve_path: Option<&Path>,
) -> Result<()> {
    save_checkpoint(
        checkpoint_path,
        &artifacts.result.params,
        &artifacts.action_levels,
        artifacts.reward_scale,
    )?;
    if let Some(curve_path) = curve_path {
        fs::write(curve_path, learning_curve_csv(&artifacts.result.curve, 20))
            .with_context(|| format!("writing curve {}", curve_path.display()))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_csv_rolls_means() {
        let curve = vec![
            LearningCurvePoint { episode: 0, reward: 1.0 },
            LearningCurvePoint { episode: 1, reward: 3.0 },
            LearningCurvePoint { episode: 2, reward: 5.0 },
        ];
        let csv = learning_curve_csv(&curve, 2);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "episode,reward,rolling_mean");
        assert!(lines[1].starts_with("0,1.00000000,1.00000000"));
        assert!(lines[2].starts_with("1,3.00000000,2.00000000"));
        assert!(lines[3].starts_with("2,5.00000000,4.00000000"));
    }

    #[test]
    fn tiny_training_run_produces_checkpoint() {
        let text = r#"
            budget = 15
            methods = ["RL-21"]
            [instances]
            kind = "synthetic"
            count = 2
            h = 16
            w = 16
            bumps = 3
            length_scale = 4.0
            [train]
            method = "RL-21"
            interactions = 30
        "#;
        let cfg: ExperimentConfig = toml::from_str(text).unwrap();
        let instances = cfg.load_instances().unwrap();
        let artifacts = train_from_config(&cfg, &instances, Profile::Desk, 1, None).unwrap();
        assert!(artifacts.result.interactions >= 30);
        assert_eq!(artifacts.action_levels, vec![2, 1]);
        let dir = tempfile::tempdir().unwrap();
        let cp = dir.path().join("rl21.json");
        let curve = dir.path().join("curve.csv");
        write_artifacts(&artifacts, &cp, Some(&curve)).unwrap();
        let loaded = crate::checkpoint::load_checkpoint(&cp).unwrap();
        assert_eq!(loaded.params, artifacts.result.params);
        assert!(std::fs::read_to_string(&curve).unwrap().starts_with("episode,reward"));
    }
}
