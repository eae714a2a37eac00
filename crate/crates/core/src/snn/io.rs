//! Topology files and spike-train export.
//!
//! A topology is a JSON document
//!
//! ```json
//! {"layers": [
//!   {"kind": "dense", "n_in": 2, "n_out": 1, "threshold": 1.5, "weights": [[1.0], [1.0]]},
//!   ...
//! ]}
//! ```
//!
//! Weights are either inline (`weights`, one inner array per input row) or supplied in a
//! sidecar binary file holding one blob per layer, in layer order: two little-endian `u32`
//! dimensions `rows, cols` followed by `rows * cols` little-endian `f32` values in
//! row-major (input-major) order. Subsample layers have fixed weights; their blob is `0 x 0`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LayerSpec, SnnTopology, SpikeTrain, WeightMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct LayerEntry {
    #[serde(flatten)]
    spec: LayerSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TopologyFile {
    layers: Vec<LayerEntry>,
}

fn parse_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), msg: msg.into() }
}

/// Load a topology, taking weights from `weights` when given and inline arrays otherwise.
pub fn load_topology(path: &Path, weights: Option<&Path>) -> Result<SnnTopology> {
    let text = fs::read_to_string(path).map_err(|e| parse_err(path, e.to_string()))?;
    parse_topology(&text, path, weights)
}

pub fn parse_topology(text: &str, path: &Path, weights: Option<&Path>) -> Result<SnnTopology> {
    let file: TopologyFile = serde_json::from_str(text).map_err(|e| parse_err(path, e.to_string()))?;
    let specs: Vec<LayerSpec> = file.layers.iter().map(|l| l.spec).collect();
    let mats = match weights {
        Some(wpath) => read_weight_blobs(wpath, &specs)?,
        None => file
            .layers
            .iter()
            .enumerate()
            .map(|(i, entry)| {
                let (r, c) = entry.spec.weight_shape();
                match &entry.weights {
                    Some(rows) => {
                        let m = WeightMatrix::from_rows(rows)
                            .map_err(|e| parse_err(path, format!("layer {i}: {e}")))?;
                        if (m.rows(), m.cols()) != (r, c) && !(r * c == 0 && rows.is_empty()) {
                            return Err(parse_err(
                                path,
                                format!("layer {i}: inline weights are {}x{}, expected {r}x{c}", m.rows(), m.cols()),
                            ));
                        }
                        Ok(if r * c == 0 { WeightMatrix::empty() } else { m })
                    }
                    None if r * c == 0 => Ok(WeightMatrix::empty()),
                    None => Err(parse_err(path, format!("layer {i}: no inline weights and no weights file"))),
                }
            })
            .collect::<Result<Vec<_>>>()?,
    };
    SnnTopology::new(specs, mats).map_err(|e| parse_err(path, e.to_string()))
}

fn read_weight_blobs(path: &Path, specs: &[LayerSpec]) -> Result<Vec<WeightMatrix>> {
    let bytes = fs::read(path).map_err(|e| parse_err(path, e.to_string()))?;
    let mut pos = 0usize;
    let mut take = |n: usize, what: &str, layer: usize| -> Result<&[u8]> {
        if pos + n > bytes.len() {
            return Err(parse_err(path, format!("layer {layer}: truncated while reading {what}")));
        }
        let s = &bytes[pos..pos + n];
        pos += n;
        Ok(s)
    };
    let mut out = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        let dims = take(8, "dimensions", i)?;
        let rows = u32::from_le_bytes(dims[0..4].try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(dims[4..8].try_into().unwrap()) as usize;
        let (er, ec) = spec.weight_shape();
        if (rows, cols) != (er, ec) {
            return Err(parse_err(
                path,
                format!("layer {i}: weights blob is {rows}x{cols}, layer expects {er}x{ec}"),
            ));
        }
        let raw = take(rows * cols * 4, "weights", i)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        let m = if rows * cols == 0 {
            WeightMatrix::empty()
        } else {
            WeightMatrix::new(rows, cols, data).map_err(|e| parse_err(path, format!("layer {i}: {e}")))?
        };
        out.push(m);
    }
    if pos != bytes.len() {
        return Err(parse_err(path, format!("{} trailing bytes after last layer", bytes.len() - pos)));
    }
    Ok(out)
}

/// Write the layer list as JSON and the weights as a sidecar blob file.
pub fn save_topology(topology: &SnnTopology, json_path: &Path, weights_path: &Path) -> Result<()> {
    let file = TopologyFile {
        layers: topology.layers().iter().map(|&spec| LayerEntry { spec, weights: None }).collect(),
    };
    let json = serde_json::to_string_pretty(&file).map_err(|e| parse_err(json_path, e.to_string()))?;
    fs::write(json_path, json + "\n")?;
    let mut blob = Vec::new();
    for w in topology.weights() {
        blob.extend_from_slice(&(w.rows() as u32).to_le_bytes());
        blob.extend_from_slice(&(w.cols() as u32).to_le_bytes());
        for &v in w.data() {
            blob.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    fs::write(weights_path, blob)?;
    Ok(())
}

/// Topology JSON with all weights inline.
pub fn topology_to_inline_json(topology: &SnnTopology) -> String {
    let file = TopologyFile {
        layers: topology
            .layers()
            .iter()
            .zip(topology.weights())
            .map(|(&spec, w)| LayerEntry {
                spec,
                weights: (w.rows() > 0).then(|| w.data().chunks(w.cols()).map(<[f64]>::to_vec).collect()),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("topology serializes")
}

/// `timestep,neuron` rows, one per spike, in time then neuron order.
pub fn write_spikes_csv<W: Write>(train: &SpikeTrain, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["timestep", "neuron"])?;
    for (t, step) in train.steps().iter().enumerate() {
        for (i, _) in step.iter().enumerate().filter(|(_, &s)| s) {
            w.write_record([t.to_string(), i.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
