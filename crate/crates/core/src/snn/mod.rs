//! Spiking network topologies, integrate-and-fire dynamics, input encoding and the
//! dense reference simulator.
//!
//! The reference simulator is deliberately simple: every timestep walks the layers in
//! order, accumulates `Σ spike_i · w_ij` for each neuron and applies [`if_step`]. The
//! mapped architecture simulator in [`crate::archsim`] must reproduce its output
//! spike-for-spike.

mod connectivity;
pub mod io;

pub use connectivity::{build_connectivity, ConnectivityMatrix, Structure};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quant::{self, QuantConfig};

/// Shape of one network layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayerKind {
    Dense {
        n_in: usize,
        n_out: usize,
    },
    /// Valid (unpadded) 2-D convolution. Neurons are indexed `(y * width + x) * channels + c`.
    Conv {
        in_width: usize,
        in_height: usize,
        in_channels: usize,
        kernel_size: usize,
        out_channels: usize,
        stride: usize,
    },
    /// Fixed-weight averaging over `window × window` patches of each channel.
    Subsample {
        in_width: usize,
        in_height: usize,
        channels: usize,
        window: usize,
        stride: usize,
    },
}

fn default_threshold() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    #[serde(flatten)]
    pub kind: LayerKind,
    /// Firing threshold of every neuron in the layer.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

impl LayerSpec {
    pub fn dense(n_in: usize, n_out: usize, threshold: f64) -> Self {
        LayerSpec { kind: LayerKind::Dense { n_in, n_out }, threshold }
    }

    pub fn conv(
        in_width: usize,
        in_height: usize,
        in_channels: usize,
        kernel_size: usize,
        out_channels: usize,
        stride: usize,
        threshold: f64,
    ) -> Self {
        LayerSpec {
            kind: LayerKind::Conv {
                in_width,
                in_height,
                in_channels,
                kernel_size,
                out_channels,
                stride,
            },
            threshold,
        }
    }

    pub fn subsample(
        in_width: usize,
        in_height: usize,
        channels: usize,
        window: usize,
        stride: usize,
        threshold: f64,
    ) -> Self {
        LayerSpec {
            kind: LayerKind::Subsample { in_width, in_height, channels, window, stride },
            threshold,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(Error::invalid(format!("threshold must be positive, got {}", self.threshold)));
        }
        let dims_ok = match self.kind {
            LayerKind::Dense { n_in, n_out } => n_in > 0 && n_out > 0,
            LayerKind::Conv { in_width, in_height, in_channels, kernel_size, out_channels, stride } => {
                [in_width, in_height, in_channels, kernel_size, out_channels, stride]
                    .iter()
                    .all(|&d| d > 0)
            }
            LayerKind::Subsample { in_width, in_height, channels, window, stride } => {
                [in_width, in_height, channels, window, stride].iter().all(|&d| d > 0)
            }
        };
        if !dims_ok {
            return Err(Error::shape(format!("all layer dimensions must be positive: {:?}", self.kind)));
        }
        let (w, h, k, s) = match self.kind {
            LayerKind::Dense { .. } => return Ok(()),
            LayerKind::Conv { in_width, in_height, kernel_size, stride, .. } => {
                (in_width, in_height, kernel_size, stride)
            }
            LayerKind::Subsample { in_width, in_height, window, stride, .. } => {
                (in_width, in_height, window, stride)
            }
        };
        if k > w || k > h {
            return Err(Error::shape(format!("window {k} larger than {w}x{h} input")));
        }
        if (w - k) % s != 0 || (h - k) % s != 0 {
            return Err(Error::shape(format!(
                "non-integral output size: ({w}-{k}) and ({h}-{k}) must be multiples of stride {s}"
            )));
        }
        Ok(())
    }

    /// Number of input neurons feeding the layer.
    pub fn n_inputs(&self) -> usize {
        match self.kind {
            LayerKind::Dense { n_in, .. } => n_in,
            LayerKind::Conv { in_width, in_height, in_channels, .. } => in_width * in_height * in_channels,
            LayerKind::Subsample { in_width, in_height, channels, .. } => in_width * in_height * channels,
        }
    }

    pub fn n_outputs(&self) -> usize {
        match self.kind {
            LayerKind::Dense { n_out, .. } => n_out,
            LayerKind::Conv { out_channels, .. } => {
                let (ow, oh) = self.out_dims();
                ow * oh * out_channels
            }
            LayerKind::Subsample { channels, .. } => {
                let (ow, oh) = self.out_dims();
                ow * oh * channels
            }
        }
    }

    /// Spatial output size (width, height); `(n_out, 1)` for dense layers.
    pub fn out_dims(&self) -> (usize, usize) {
        match self.kind {
            LayerKind::Dense { n_out, .. } => (n_out, 1),
            LayerKind::Conv { in_width, in_height, kernel_size, stride, .. } => {
                ((in_width - kernel_size) / stride + 1, (in_height - kernel_size) / stride + 1)
            }
            LayerKind::Subsample { in_width, in_height, window, stride, .. } => {
                ((in_width - window) / stride + 1, (in_height - window) / stride + 1)
            }
        }
    }

    /// Expected `(rows, cols)` of the layer's weight matrix. Conv kernels are stored
    /// as `(k·k·in_channels) × out_channels`, rows ordered `(ky, kx, ci)`. Subsample
    /// layers carry no weights.
    pub fn weight_shape(&self) -> (usize, usize) {
        match self.kind {
            LayerKind::Dense { n_in, n_out } => (n_in, n_out),
            LayerKind::Conv { in_channels, kernel_size, out_channels, .. } => {
                (kernel_size * kernel_size * in_channels, out_channels)
            }
            LayerKind::Subsample { .. } => (0, 0),
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.kind, LayerKind::Dense { .. })
    }
}

/// Row-major real-valued weight matrix (rows = inputs, cols = outputs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "weight matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|w| !w.is_finite()) {
            return Err(Error::invalid(format!("non-finite weight {bad}")));
        }
        Ok(WeightMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(Error::shape(format!("row {i} has {} entries, expected {cols}", r.len())));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn empty() -> Self {
        WeightMatrix { rows: 0, cols: 0, data: Vec::new() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, w| m.max(w.abs()))
    }
}

/// A layered network with one weight matrix per layer (empty for subsample layers).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnnTopology {
    layers: Vec<LayerSpec>,
    weights: Vec<WeightMatrix>,
}

impl SnnTopology {
    pub fn new(layers: Vec<LayerSpec>, weights: Vec<WeightMatrix>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::shape("topology has no layers"));
        }
        if layers.len() != weights.len() {
            return Err(Error::shape(format!(
                "{} layers but {} weight matrices",
                layers.len(),
                weights.len()
            )));
        }
        for (i, (layer, w)) in layers.iter().zip(&weights).enumerate() {
            layer.validate().map_err(|e| Error::shape(format!("layer {i}: {e}")))?;
            let (r, c) = layer.weight_shape();
            if (w.rows(), w.cols()) != (r, c) {
                return Err(Error::shape(format!(
                    "layer {i}: weight matrix is {}x{}, layer expects {r}x{c}",
                    w.rows(),
                    w.cols()
                )));
            }
            if i + 1 < layers.len() && layer.n_outputs() != layers[i + 1].n_inputs() {
                return Err(Error::shape(format!(
                    "layer {i} emits {} neurons but layer {} consumes {}",
                    layer.n_outputs(),
                    i + 1,
                    layers[i + 1].n_inputs()
                )));
            }
        }
        Ok(SnnTopology { layers, weights })
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn weights(&self) -> &[WeightMatrix] {
        &self.weights
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].n_inputs()
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().map_or(0, LayerSpec::n_outputs)
    }

    /// Weight scale used for quantizing layer `l`: the largest synapse magnitude.
    /// An all-zero layer reports 1.0 so every level is zero.
    pub fn w_max(&self, l: usize) -> f64 {
        let m = match self.layers[l].kind {
            LayerKind::Subsample { window, .. } => 1.0 / (window * window) as f64,
            _ => self.weights[l].max_abs(),
        };
        if m > 0.0 {
            m
        } else {
            1.0
        }
    }

    pub fn connectivity(&self, l: usize) -> Result<ConnectivityMatrix> {
        build_connectivity(&self.layers[l], &self.weights[l])
    }
}

/// Binary spikes over `timesteps × width`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpikeTrain {
    width: usize,
    steps: Vec<Vec<bool>>,
}

impl SpikeTrain {
    pub fn zeros(width: usize, timesteps: usize) -> Self {
        SpikeTrain { width, steps: vec![vec![false; width]; timesteps] }
    }

    pub fn from_steps(steps: Vec<Vec<bool>>) -> Result<Self> {
        let width = steps.first().map_or(0, Vec::len);
        if let Some(t) = steps.iter().position(|s| s.len() != width) {
            return Err(Error::shape(format!("timestep {t} has {} neurons, expected {width}", steps[t].len())));
        }
        Ok(SpikeTrain { width, steps })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn timesteps(&self) -> usize {
        self.steps.len()
    }

    pub fn step(&self, t: usize) -> &[bool] {
        &self.steps[t]
    }

    pub fn set(&mut self, t: usize, neuron: usize, spike: bool) {
        self.steps[t][neuron] = spike;
    }

    pub fn steps(&self) -> &[Vec<bool>] {
        &self.steps
    }

    /// Spike count per neuron over the whole train.
    pub fn counts(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.width];
        for step in &self.steps {
            for (c, &s) in counts.iter_mut().zip(step) {
                *c += s as u32;
            }
        }
        counts
    }

    pub fn total_spikes(&self) -> u64 {
        self.steps.iter().map(|s| s.iter().filter(|&&b| b).count() as u64).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronState {
    pub potential: f64,
    pub threshold: f64,
}

impl NeuronState {
    pub fn new(threshold: f64) -> Self {
        NeuronState { potential: 0.0, threshold }
    }
}

/// One integrate-and-fire update. Emits at most one spike per call and resets by
/// subtracting the threshold, so any overshoot carries into the next step.
pub fn if_step(state: NeuronState, input_current: f64) -> (NeuronState, bool) {
    let potential = state.potential + input_current;
    if potential >= state.threshold {
        (NeuronState { potential: potential - state.threshold, ..state }, true)
    } else {
        (NeuronState { potential, ..state }, false)
    }
}

/// Bernoulli rate coding. The draw for `(neuron, t)` comes from ChaCha8 stream `neuron`
/// at word offset `2t`, so trains are reproducible and independent of evaluation order.
pub fn rate_encode(values: &[f64], timesteps: usize, seed: u64) -> Result<SpikeTrain> {
    if timesteps == 0 {
        return Err(Error::invalid("rate_encode needs at least one timestep"));
    }
    if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
        return Err(Error::invalid(format!("input value {v} at index {i} outside [0, 1]")));
    }
    let base = ChaCha8Rng::seed_from_u64(seed);
    let mut train = SpikeTrain::zeros(values.len(), timesteps);
    for (i, &v) in values.iter().enumerate() {
        let mut rng = base.clone();
        rng.set_stream(i as u64);
        for t in 0..timesteps {
            rng.set_word_pos(2 * t as u128);
            let draw: f64 = rng.gen();
            if draw < v {
                train.set(t, i, true);
            }
        }
    }
    Ok(train)
}

/// Index of the output neuron with the most spikes; ties go to the lowest index.
pub fn classify(output: &SpikeTrain) -> usize {
    let counts = output.counts();
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Per-layer synapses in input-major order, ready for event-driven accumulation.
struct RefLayer {
    /// `fanout[i]` = `(output, weight)` pairs for input neuron `i`, ascending output.
    fanout: Vec<Vec<(usize, f64)>>,
    n_out: usize,
    threshold: f64,
}

fn ref_layers(topology: &SnnTopology, quant: Option<&QuantConfig>) -> Result<Vec<RefLayer>> {
    let mut out = Vec::with_capacity(topology.layers().len());
    for (l, spec) in topology.layers().iter().enumerate() {
        let conn = topology.connectivity(l)?;
        let w_max = topology.w_max(l);
        let threshold = match quant {
            Some(cfg) => quant::threshold_in_level_units(spec.threshold, w_max, cfg),
            None => spec.threshold,
        };
        let mut fanout = vec![Vec::new(); conn.n_in()];
        for (j, col) in conn.columns().iter().enumerate() {
            for &(i, w) in col {
                let w = match quant {
                    // Quantized synapses accumulate in units of one conductance step, which
                    // keeps every weighted sum an exact integer.
                    Some(cfg) => quant::quantize_weight(w, w_max, cfg)?.signed_level() as f64,
                    None => w,
                };
                fanout[i].push((j, w));
            }
        }
        out.push(RefLayer { fanout, n_out: conn.n_out(), threshold });
    }
    Ok(out)
}

/// Dense reference simulation. Returns the spike train of every layer.
///
/// With `quant`, synapses are replaced by their quantized levels and each layer's
/// threshold is expressed in the same level units
/// (see [`quant::threshold_in_level_units`]); this is the exact arithmetic the
/// crossbar hardware performs, so the mapped simulation can be compared bit-for-bit.
pub fn reference_forward(
    topology: &SnnTopology,
    input: &SpikeTrain,
    quant: Option<&QuantConfig>,
) -> Result<Vec<SpikeTrain>> {
    if input.width() != topology.n_inputs() {
        return Err(Error::shape(format!(
            "input train has {} neurons, first layer expects {}",
            input.width(),
            topology.n_inputs()
        )));
    }
    let layers = ref_layers(topology, quant)?;
    let t_max = input.timesteps();
    let mut states: Vec<Vec<NeuronState>> =
        layers.iter().map(|l| vec![NeuronState::new(l.threshold); l.n_out]).collect();
    let mut trains: Vec<SpikeTrain> = layers.iter().map(|l| SpikeTrain::zeros(l.n_out, t_max)).collect();

    for t in 0..t_max {
        for (l, layer) in layers.iter().enumerate() {
            let spikes: &[bool] = if l == 0 { input.step(t) } else { trains[l - 1].step(t) };
            let mut current = vec![0.0f64; layer.n_out];
            for (i, _) in spikes.iter().enumerate().filter(|(_, &s)| s) {
                for &(j, w) in &layer.fanout[i] {
                    current[j] += w;
                }
            }
            let mut fired = vec![false; layer.n_out];
            for (j, state) in states[l].iter_mut().enumerate() {
                let (next, spike) = if_step(*state, current[j]);
                *state = next;
                fired[j] = spike;
            }
            trains[l].steps[t] = fired;
        }
    }
    Ok(trains)
}
