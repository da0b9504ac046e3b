//! TOML experiment configuration shared by `run` and `train`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use ipp_core::field::{generate_synthetic_field, FieldInstance};
use ipp_core::mission::MissionPolicy;
use ipp_core::rng::SeedMix;

use crate::instance_io;

/// Where mission instances come from.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InstanceSource {
    /// Seeded Gaussian-bump fields generated on the fly.
    Synthetic {
        count: usize,
        #[serde(default = "default_hw")]
        h: usize,
        #[serde(default = "default_hw")]
        w: usize,
        #[serde(default = "default_bumps")]
        bumps: usize,
        #[serde(default = "default_length_scale")]
        length_scale: f64,
        #[serde(default)]
        seed: u64,
    },
    /// Instance JSON files on disk, optionally restricted by a split file.
    Dir {
        path: PathBuf,
        #[serde(default)]
        split: Option<PathBuf>,
        #[serde(default)]
        subset: Subset,
    },
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    Train,
    #[default]
    Test,
    All,
}

fn default_hw() -> usize {
    32
}
fn default_bumps() -> usize {
    5
}
fn default_length_scale() -> f64 {
    6.0
}
fn default_budget() -> usize {
    ipp_core::mission::DEFAULT_BUDGET
}
fn default_runs() -> usize {
    1
}
fn default_q_init() -> usize {
    5
}
fn default_mixture_probs() -> Vec<f64> {
    vec![0.62, 0.38]
}
fn default_mixture_levels() -> Vec<u32> {
    vec![2, 1]
}

/// The context-free mixture baseline: probabilities over LS levels.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureConfig {
    #[serde(default = "default_mixture_probs")]
    pub probs: Vec<f64>,
    #[serde(default = "default_mixture_levels")]
    pub levels: Vec<u32>,
}

impl Default for MixtureConfig {
    fn default() -> Self {
        MixtureConfig { probs: default_mixture_probs(), levels: default_mixture_levels() }
    }
}

/// Training section consumed by the `train` subcommand.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Controller to train, e.g. "RL-21".
    pub method: String,
    /// Overrides the profile's interaction budget.
    #[serde(default)]
    pub interactions: Option<usize>,
    #[serde(default)]
    pub learning_rate: Option<f64>,
    #[serde(default)]
    pub discount: Option<f64>,
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub buffer_capacity: Option<usize>,
    #[serde(default)]
    pub target_sync_interval: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instances: InstanceSource,
    pub methods: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// 0 lets the thread pool pick.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default = "default_q_init")]
    pub q_init: usize,
    #[serde(default)]
    pub mixture: MixtureConfig,
    /// Method label -> checkpoint path for RL methods.
    #[serde(default)]
    pub checkpoints: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub train: Option<TrainConfig>,
}

/// A method label resolved into something runnable.
#[derive(Debug, Clone)]
pub enum MethodSpec {
    Fixed(MissionPolicy),
    Rl { label: String, levels: Vec<u32> },
    Mixture,
}

impl MethodSpec {
    pub fn label(&self, _cfg: &ExperimentConfig) -> String {
        match self {
            MethodSpec::Fixed(p) => p.label(),
            MethodSpec::Rl { label, .. } => label.clone(),
            MethodSpec::Mixture => "empirical-mixture".to_string(),
        }
    }
}

/// Parses a method label from the configuration's `methods` list.
pub fn parse_method(label: &str, q_init: usize) -> Result<MethodSpec> {
    match label {
        "Rand" => Ok(MethodSpec::Fixed(MissionPolicy::Random)),
        "GS" => Ok(MethodSpec::Fixed(MissionPolicy::GlobalSearch)),
        "GS-TSP" => Ok(MethodSpec::Fixed(MissionPolicy::GsTsp { q_init })),
        "empirical-mixture" => Ok(MethodSpec::Mixture),
        _ => {
            if let Some(level) = label.strip_prefix("LS-") {
                let level: u32 = level.parse().with_context(|| format!("bad LS level in {label}"))?;
                if level == 0 {
                    bail!("LS level must be at least 1 in {label}");
                }
                return Ok(MethodSpec::Fixed(MissionPolicy::LocalSearch {
                    radius: level as f64 * 10.0,
                }));
            }
            if let Some(digits) = label.strip_prefix("RL-") {
                let levels: Vec<u32> = digits
                    .chars()
                    .map(|c| c.to_digit(10).map(|d| d as u32))
                    .collect::<Option<Vec<u32>>>()
                    .with_context(|| format!("bad RL action digits in {label}"))?;
                if !(2..=3).contains(&levels.len()) {
                    bail!("RL method {label} must name 2 or 3 LS levels");
                }
                return Ok(MethodSpec::Rl { label: label.to_string(), levels });
            }
            bail!("unknown method label {label}");
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget < 4 {
            bail!("budget must be at least 4 (three seeds plus one decision)");
        }
        if self.runs < 1 {
            bail!("runs must be at least 1");
        }
        if self.methods.is_empty() {
            bail!("methods list is empty");
        }
        for m in &self.methods {
            parse_method(m, self.q_init)?;
        }
        let k = self.mixture.levels.len();
        if self.mixture.probs.len() != k {
            bail!("mixture.probs and mixture.levels lengths differ");
        }
        if (self.mixture.probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            bail!("mixture.probs must sum to 1");
        }
        Ok(())
    }

    /// Materializes the instance list this configuration runs over.
    pub fn load_instances(&self) -> Result<Vec<FieldInstance>> {
        match &self.instances {
            InstanceSource::Synthetic { count, h, w, bumps, length_scale, seed } => {
                (0..*count)
                    .map(|i| {
                        let inst_seed = SeedMix::new(*seed).str("instance").u64(i as u64).build();
                        let mut inst =
                            generate_synthetic_field(inst_seed, *h, *w, *bumps, *length_scale)?;
                        inst.id = format!("synth-{i:03}");
                        Ok(inst)
                    })
                    .collect()
            }
            InstanceSource::Dir { path, split, subset } => {
                let all = instance_io::read_instance_dir(path)?;
                let Some(split_path) = split else {
                    return Ok(all);
                };
                let text = fs::read_to_string(split_path)
                    .with_context(|| format!("reading split {}", split_path.display()))?;
                let split: SplitFile = serde_json::from_str(&text)
                    .with_context(|| format!("parsing split {}", split_path.display()))?;
                let wanted: Vec<&String> = match subset {
                    Subset::Train => split.train.iter().collect(),
                    Subset::Test => split.test.iter().collect(),
                    Subset::All => split.train.iter().chain(split.test.iter()).collect(),
                };
                let mut out = Vec::with_capacity(wanted.len());
                for id in wanted {
                    match all.iter().find(|inst| &inst.id == id) {
                        Some(inst) => out.push(inst.clone()),
                        None => bail!("split references unknown instance id {id}"),
                    }
                }
                Ok(out)
            }
        }
    }
}

#[derive(Debug, serde::Serialize, Deserialize)]
pub struct SplitFile {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let text = r#"
            seed = 7
            budget = 15
            runs = 3
            methods = ["Rand", "GS", "GS-TSP", "LS-1", "LS-2", "LS-3", "RL-21", "empirical-mixture"]

            [instances]
            kind = "synthetic"
            count = 20
            h = 32
            w = 32

            [mixture]
            probs = [0.62, 0.38]
            levels = [2, 1]

            [checkpoints]
            "RL-21" = "rl21.json"
        "#;
        let cfg: ExperimentConfig = toml::from_str(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.budget, 15);
        assert_eq!(cfg.methods.len(), 8);
        let instances = cfg.load_instances().unwrap();
        assert_eq!(instances.len(), 20);
        assert_eq!(instances[0].id, "synth-000");
        assert_eq!(instances[0].truth.dims(), (32, 32));
    }

    #[test]
    fn method_labels_resolve() {
        assert!(matches!(
            parse_method("LS-2", 5).unwrap(),
            MethodSpec::Fixed(MissionPolicy::LocalSearch { radius }) if radius == 20.0
        ));
        match parse_method("RL-321", 5).unwrap() {
            MethodSpec::Rl { levels, .. } => assert_eq!(levels, vec![3, 2, 1]),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_method("LS-0", 5).is_err());
        assert!(parse_method("RL-1", 5).is_err());
        assert!(parse_method("???", 5).is_err());
    }

    #[test]
    fn rejects_bad_configs() {
        let base = r#"
            methods = ["Rand"]
            [instances]
            kind = "synthetic"
            count = 2
        "#;
        let mut cfg: ExperimentConfig = toml::from_str(base).unwrap();
        cfg.budget = 3;
        assert!(cfg.validate().is_err());
        cfg.budget = 15;
        cfg.methods.clear();
        assert!(cfg.validate().is_err());
    }
}
