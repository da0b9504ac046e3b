//! Versioned Q-network checkpoints. Every file carries the architecture
//! fingerprint (layer stack + state channel ordering) and the reward
//! scale it was trained with; loading rejects any fingerprint mismatch.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use ipp_core::nn::{ConvLayer, DenseLayer, NetSpec, QNetworkParams, Tensor};
use ipp_core::rl::ActionSet;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize, Clone, Copy)]
struct NetSpecDto {
    input_hw: usize,
    conv_channels: [usize; 4],
    scalar_embed: usize,
    hidden: usize,
    actions: usize,
    leaky_alpha: f64,
}

impl From<NetSpec> for NetSpecDto {
    fn from(s: NetSpec) -> Self {
        NetSpecDto {
            input_hw: s.input_hw,
            conv_channels: s.conv_channels,
            scalar_embed: s.scalar_embed,
            hidden: s.hidden,
            actions: s.actions,
            leaky_alpha: s.leaky_alpha,
        }
    }
}

impl From<NetSpecDto> for NetSpec {
    fn from(s: NetSpecDto) -> Self {
        NetSpec {
            input_hw: s.input_hw,
            conv_channels: s.conv_channels,
            scalar_embed: s.scalar_embed,
            hidden: s.hidden,
            actions: s.actions,
            leaky_alpha: s.leaky_alpha,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TensorDto {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct LayerDto {
    weight: TensorDto,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    version: u32,
    /// Hex digest of the architecture spec; must match on load.
    fingerprint: String,
    spec: NetSpecDto,
    /// LS levels of the action set, in action-index order.
    action_levels: Vec<u32>,
    /// Reward divisor used during training.
    reward_scale: f64,
    conv: Vec<LayerDto>,
    scalar_fc: LayerDto,
    fc1: LayerDto,
    fc2: LayerDto,
}

/// A trained controller ready to roll out.
#[derive(Debug)]
pub struct LoadedCheckpoint {
    pub params: QNetworkParams,
    pub actions: ActionSet,
    pub action_levels: Vec<u32>,
    pub reward_scale: f64,
}

fn tensor_dto(t: &Tensor) -> TensorDto {
    TensorDto { shape: t.shape().to_vec(), data: t.data().to_vec() }
}

fn dense_dto(l: &DenseLayer) -> LayerDto {
    LayerDto { weight: tensor_dto(&l.weight), bias: l.bias.clone() }
}

pub fn save_checkpoint(
    path: &Path,
    params: &QNetworkParams,
    action_levels: &[u32],
    reward_scale: f64,
) -> Result<()> {
    let file = CheckpointFile {
        version: CHECKPOINT_VERSION,
        fingerprint: format!("{:016x}", params.spec.fingerprint()),
        spec: params.spec.into(),
        action_levels: action_levels.to_vec(),
        reward_scale,
        conv: params
            .conv
            .iter()
            .map(|l| LayerDto { weight: tensor_dto(&l.weight), bias: l.bias.clone() })
            .collect(),
        scalar_fc: dense_dto(&params.scalar_fc),
        fc1: dense_dto(&params.fc1),
        fc2: dense_dto(&params.fc2),
    };
    let mut body = serde_json::to_string(&file)?;
    body.push('\n');
    fs::write(path, body).with_context(|| format!("writing checkpoint {}", path.display()))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<LoadedCheckpoint> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading checkpoint {}", path.display()))?;
    let file: CheckpointFile = serde_json::from_str(&text)
        .with_context(|| format!("parsing checkpoint {}", path.display()))?;
    if file.version != CHECKPOINT_VERSION {
        bail!("checkpoint version {} unsupported (expected {CHECKPOINT_VERSION})", file.version);
    }
    let spec: NetSpec = file.spec.into();
    let expected = format!("{:016x}", spec.fingerprint());
    if expected != file.fingerprint {
        bail!(
            "checkpoint fingerprint mismatch: file says {}, architecture hashes to {expected}",
            file.fingerprint
        );
    }
    let actions = ActionSet::from_levels(&file.action_levels)
        .map_err(|e| anyhow::anyhow!("checkpoint action set invalid: {e}"))?;
    if actions.len() != spec.actions {
        bail!("checkpoint action set size {} does not match network outputs {}", actions.len(), spec.actions);
    }
    let rebuild_tensor = |dto: TensorDto, what: &str| -> Result<Tensor> {
        Tensor::from_vec(&dto.shape, dto.data)
            .map_err(|e| anyhow::anyhow!("checkpoint {what} invalid: {e}"))
    };
    let reference = QNetworkParams::init(spec, 0)
        .map_err(|e| anyhow::anyhow!("checkpoint spec invalid: {e}"))?;
    if file.conv.len() != reference.conv.len() {
        bail!("checkpoint has {} conv layers, expected {}", file.conv.len(), reference.conv.len());
    }
    let mut conv = Vec::with_capacity(file.conv.len());
    for (i, (dto, reference_layer)) in file.conv.into_iter().zip(&reference.conv).enumerate() {
        let weight = rebuild_tensor(dto.weight, "conv weight")?;
        if weight.shape() != reference_layer.weight.shape()
            || dto.bias.len() != reference_layer.bias.len()
        {
            bail!("checkpoint conv layer {i} has unexpected shape");
        }
        conv.push(ConvLayer { weight, bias: dto.bias });
    }
    let rebuild_dense = |dto: LayerDto, reference_layer: &DenseLayer, what: &str| -> Result<DenseLayer> {
        let weight = rebuild_tensor(dto.weight, what)?;
        if weight.shape() != reference_layer.weight.shape()
            || dto.bias.len() != reference_layer.bias.len()
        {
            bail!("checkpoint {what} has unexpected shape");
        }
        Ok(DenseLayer { weight, bias: dto.bias })
    };
    let params = QNetworkParams {
        spec,
        conv,
        scalar_fc: rebuild_dense(file.scalar_fc, &reference.scalar_fc, "scalar layer")?,
        fc1: rebuild_dense(file.fc1, &reference.fc1, "first head layer")?,
        fc2: rebuild_dense(file.fc2, &reference.fc2, "output layer")?,
    };
    Ok(LoadedCheckpoint {
        params,
        actions,
        action_levels: file.action_levels,
        reward_scale: file.reward_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_params() {
        let params = QNetworkParams::init(NetSpec::desk(2), 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        save_checkpoint(&path, &params, &[2, 1], 1876.0).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded.params, params);
        assert_eq!(loaded.action_levels, vec![2, 1]);
        assert_eq!(loaded.reward_scale, 1876.0);
        assert_eq!(loaded.actions.label(0), "LS-2");
    }

    #[test]
    fn fingerprint_mismatch_rejected() {
        let params = QNetworkParams::init(NetSpec::desk(2), 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        save_checkpoint(&path, &params, &[2, 1], 1.0).unwrap();
        let mut text = fs::read_to_string(&path).unwrap();
        // Flip the stored spec so the recomputed fingerprint differs.
        text = text.replace("\"hidden\":1024", "\"hidden\":512");
        fs::write(&path, text).unwrap();
        let err = load_checkpoint(&path).unwrap_err().to_string();
        assert!(err.contains("fingerprint mismatch"), "{err}");
    }

    #[test]
    fn action_count_must_match_outputs() {
        let params = QNetworkParams::init(NetSpec::desk(3), 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        save_checkpoint(&path, &params, &[2, 1], 1.0).unwrap();
        let err = load_checkpoint(&path).unwrap_err().to_string();
        assert!(err.contains("does not match network outputs"), "{err}");
    }
}
