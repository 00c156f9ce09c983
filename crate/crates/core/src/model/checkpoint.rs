use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::state::{MovingAverageCounter, NodeState};
use super::{ModelConfig, Roland};
use crate::diffcore::{read_tensor_file, write_tensor_file, NamedTensor};
use crate::{Error, Result};

const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    config: ModelConfig,
    step: usize,
    counter: MovingAverageCounter,
    state_layers: usize,
}

/// Paths written by [`save_checkpoint`] for a given stem.
pub fn checkpoint_paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("json"), stem.with_extension("tensors"))
}

/// Writes parameters, batch-norm statistics and the node state to
/// `<stem>.tensors` and the configuration, step and edge counters to
/// `<stem>.json`.
pub fn save_checkpoint(stem: &Path, model: &Roland, state: &NodeState) -> Result<()> {
    let (json_path, tensor_path) = checkpoint_paths(stem);
    let mut tensors: Vec<NamedTensor> = model.params().iter().map(|p| p.to_named()).collect();
    for bn in model.batch_norms() {
        let prefix = bn.gamma.name.trim_end_matches(".gamma");
        let mean = bn.stats.running_mean.as_slice().expect("contiguous");
        let var = bn.stats.running_var.as_slice().expect("contiguous");
        tensors.push(NamedTensor::from_vec(&format!("{prefix}.running_mean"), mean));
        tensors.push(NamedTensor::from_vec(&format!("{prefix}.running_var"), var));
    }
    for (l, h) in state.layers.iter().enumerate() {
        tensors.push(NamedTensor::from_matrix(&format!("state.{l}"), h));
    }
    write_tensor_file(&tensor_path, &tensors)?;
    let header = Header {
        format_version: FORMAT_VERSION,
        config: model.config.clone(),
        step: state.step,
        counter: state.counter.clone(),
        state_layers: state.layers.len(),
    };
    let text = serde_json::to_string_pretty(&header).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))
}

pub fn load_checkpoint(stem: &Path) -> Result<(Roland, NodeState)> {
    let (json_path, tensor_path) = checkpoint_paths(stem);
    let text = fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
    let header: Header =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", json_path.display())))?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "checkpoint format {} (expected {FORMAT_VERSION})",
            header.format_version
        )));
    }
    let mut by_name: HashMap<String, NamedTensor> = read_tensor_file(&tensor_path)?
        .into_iter()
        .map(|t| (t.name.clone(), t))
        .collect();
    let mut take = |name: &str| {
        by_name
            .remove(name)
            .ok_or_else(|| Error::Format(format!("checkpoint is missing tensor `{name}`")))
    };
    let mut model = Roland::new(header.config, 0)?;
    for p in model.params_mut() {
        let m = take(&p.name)?.to_matrix()?;
        if m.dim() != p.value.dim() {
            return Err(Error::Format(format!("tensor `{}` has shape {:?}, expected {:?}", p.name, m.dim(), p.value.dim())));
        }
        p.value = m;
    }
    for bn in model.batch_norms_mut() {
        let prefix = bn.gamma.name.trim_end_matches(".gamma").to_string();
        for (suffix, target) in [("running_mean", &mut bn.stats.running_mean), ("running_var", &mut bn.stats.running_var)] {
            let t = take(&format!("{prefix}.{suffix}"))?;
            if t.data.len() != target.len() {
                return Err(Error::Format(format!("tensor `{prefix}.{suffix}` has the wrong length")));
            }
            *target = t.data.into();
        }
    }
    let layers = (0..header.state_layers)
        .map(|l| take(&format!("state.{l}"))?.to_matrix())
        .collect::<Result<Vec<_>>>()?;
    let state = NodeState {
        layers,
        step: header.step,
        counter: header.counter,
    };
    Ok((model, state))
}
