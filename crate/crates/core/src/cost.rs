//! Energy and latency from simulation counters, plus an event-driven digital CMOS baseline.
//!
//! Every constant is a configuration input; the shipped defaults are calibration values
//! chosen for desk-scale networks, not measured silicon data.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::archsim::SimResult;
use crate::error::{Error, Result};
use crate::mapper::MappingPlan;
use crate::snn::{SnnTopology, SpikeTrain};

/// Per-event energies in joules, static powers in watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    /// Fixed cost of one crossbar activation (row drivers, sense timing).
    pub e_xbar_fixed: f64,
    /// Per cross-point of the `R × C` array.
    pub e_xbar_per_cell: f64,
    /// Per physical column (sense amplifier / integrator input).
    pub e_xbar_per_col: f64,
    pub e_neuron_integrate: f64,
    pub e_spike: f64,
    pub e_switch_hop: f64,
    pub e_buffer_access: f64,
    pub e_bus_broadcast: f64,
    pub e_sram_read: f64,
    pub e_sram_write: f64,
    /// Per mPE crossed by a partial sum on a `C_ext` wire.
    pub e_cext: f64,
    pub p_static_mpe: f64,
    pub p_static_switch: f64,
    /// Seconds.
    pub cycle_time: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig {
            e_xbar_fixed: 20e-12,
            e_xbar_per_cell: 10e-15,
            e_xbar_per_col: 0.1e-12,
            e_neuron_integrate: 0.5e-12,
            e_spike: 0.2e-12,
            e_switch_hop: 1.0e-12,
            e_buffer_access: 0.5e-12,
            e_bus_broadcast: 5.0e-12,
            e_sram_read: 3.0e-12,
            e_sram_write: 4.0e-12,
            e_cext: 0.3e-12,
            p_static_mpe: 10e-6,
            p_static_switch: 5e-6,
            cycle_time: 1e-9,
        }
    }
}

impl EnergyConfig {
    fn fields(&self) -> [(&'static str, f64); 14] {
        [
            ("e_xbar_fixed", self.e_xbar_fixed),
            ("e_xbar_per_cell", self.e_xbar_per_cell),
            ("e_xbar_per_col", self.e_xbar_per_col),
            ("e_neuron_integrate", self.e_neuron_integrate),
            ("e_spike", self.e_spike),
            ("e_switch_hop", self.e_switch_hop),
            ("e_buffer_access", self.e_buffer_access),
            ("e_bus_broadcast", self.e_bus_broadcast),
            ("e_sram_read", self.e_sram_read),
            ("e_sram_write", self.e_sram_write),
            ("e_cext", self.e_cext),
            ("p_static_mpe", self.p_static_mpe),
            ("p_static_switch", self.p_static_switch),
            ("cycle_time", self.cycle_time),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.fields() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("energy.{name} must be nonnegative, got {v}")));
            }
        }
        if self.cycle_time <= 0.0 {
            return Err(Error::Config("energy.cycle_time must be positive".into()));
        }
        Ok(())
    }

    /// Energy of one activation of an `rows × cols` crossbar.
    pub fn xbar_read(&self, rows: usize, cols: usize) -> f64 {
        self.e_xbar_fixed + self.e_xbar_per_cell * (rows * cols) as f64 + self.e_xbar_per_col * cols as f64
    }

    /// Every energy and power scaled by `k` (the cycle time is kept).
    pub fn scaled(&self, k: f64) -> Self {
        EnergyConfig {
            e_xbar_fixed: self.e_xbar_fixed * k,
            e_xbar_per_cell: self.e_xbar_per_cell * k,
            e_xbar_per_col: self.e_xbar_per_col * k,
            e_neuron_integrate: self.e_neuron_integrate * k,
            e_spike: self.e_spike * k,
            e_switch_hop: self.e_switch_hop * k,
            e_buffer_access: self.e_buffer_access * k,
            e_bus_broadcast: self.e_bus_broadcast * k,
            e_sram_read: self.e_sram_read * k,
            e_sram_write: self.e_sram_write * k,
            e_cext: self.e_cext * k,
            p_static_mpe: self.p_static_mpe * k,
            p_static_switch: self.p_static_switch * k,
            cycle_time: self.cycle_time,
        }
    }
}

/// Joules, split into the neuron, crossbar and peripheral categories.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub neuron: f64,
    pub crossbar: f64,
    pub peripheral: f64,
    pub total: f64,
    pub classifications: usize,
}

impl EnergyReport {
    pub fn per_classification(&self) -> f64 {
        self.total / self.classifications.max(1) as f64
    }

    /// Accumulate another run's energy.
    pub fn add(&mut self, other: &EnergyReport) {
        self.neuron += other.neuron;
        self.crossbar += other.crossbar;
        self.peripheral += other.peripheral;
        self.total = self.neuron + self.crossbar + self.peripheral;
        self.classifications += other.classifications;
    }
}

pub fn resparc_energy(result: &SimResult, plan: &MappingPlan, e: &EnergyConfig) -> EnergyReport {
    let c = &result.counters;
    let f = |n: u64| n as f64;
    let neuron = e.e_neuron_integrate * f(c.neuron_integrations) + e.e_spike * f(c.spikes_emitted);
    let crossbar = f(c.crossbar_reads) * e.xbar_read(plan.arch.mca_rows, plan.arch.mca_cols);
    let static_power = e.p_static_mpe * plan.mpes.len() as f64 + e.p_static_switch * plan.used_switches() as f64;
    let peripheral = e.e_switch_hop * f(c.hop_count)
        + e.e_buffer_access * f(c.buffer_accesses)
        + e.e_bus_broadcast * f(c.bus_broadcasts)
        + e.e_sram_read * f(c.sram_reads)
        + e.e_sram_write * f(c.sram_writes)
        + e.e_cext * f(c.cext_transfers)
        + static_power * f(c.cycles_elapsed) * e.cycle_time;
    EnergyReport { neuron, crossbar, peripheral, total: neuron + crossbar + peripheral, classifications: 1 }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub cycles: u64,
    pub seconds: f64,
    pub classifications_per_sec: f64,
    pub bus_cycles: u64,
    pub mpe_compute_cycles: u64,
    pub cext_cycles: u64,
    pub switch_cycles: u64,
}

/// Sum of the per-stage critical paths recorded by the simulator.
pub fn resparc_latency(result: &SimResult, e: &EnergyConfig) -> LatencyReport {
    let mut r = LatencyReport::default();
    for s in &result.stages {
        r.cycles += s.total;
        r.bus_cycles += s.bus_cycles;
        r.mpe_compute_cycles += s.mpe_compute_cycles;
        r.cext_cycles += s.cext_cycles;
        r.switch_cycles += s.switch_cycles;
    }
    r.seconds = r.cycles as f64 * e.cycle_time;
    r.classifications_per_sec = if r.seconds > 0.0 { 1.0 / r.seconds } else { 0.0 };
    r
}

/// Digital baseline: an event-driven MAC datapath with weight fetches from memory and
/// on-chip reuse buffers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmosConfig {
    pub e_mac: f64,
    /// Joules per byte fetched from weight memory.
    pub e_weight_fetch: f64,
    /// Joules per MAC operand served from the reuse buffer.
    pub e_buffer: f64,
    /// Watts of weight-memory leakage at 8-bit weights.
    pub leakage_power: f64,
    pub cycle_time: f64,
    /// Fraction of weight reads served from reuse buffers, in `[0, 1)`.
    pub buffer_reuse_factor: f64,
    pub macs_per_cycle: u64,
    /// Weight precision; fetch bytes and memory size scale linearly with it.
    pub bits: u32,
}

impl Default for CmosConfig {
    fn default() -> Self {
        CmosConfig {
            e_mac: 1.0e-12,
            e_weight_fetch: 10e-12,
            e_buffer: 0.3e-12,
            leakage_power: 20e-3,
            cycle_time: 1e-9,
            buffer_reuse_factor: 0.5,
            macs_per_cycle: 16,
            bits: 8,
        }
    }
}

impl CmosConfig {
    pub fn with_bits(self, bits: u32) -> Self {
        CmosConfig { bits, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("e_mac", self.e_mac),
            ("e_weight_fetch", self.e_weight_fetch),
            ("e_buffer", self.e_buffer),
            ("leakage_power", self.leakage_power),
            ("cycle_time", self.cycle_time),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("cmos.{name} must be positive, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.buffer_reuse_factor) {
            return Err(Error::Config(format!(
                "cmos.buffer_reuse_factor must be in [0, 1), got {}",
                self.buffer_reuse_factor
            )));
        }
        if self.macs_per_cycle == 0 || self.bits == 0 {
            return Err(Error::Config("cmos.macs_per_cycle and cmos.bits must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CmosReport {
    pub macs: u64,
    pub cycles: u64,
    pub core: f64,
    pub memory_access: f64,
    pub memory_leakage: f64,
    pub total: f64,
}

impl CmosReport {
    pub fn add(&mut self, o: &CmosReport) {
        self.macs += o.macs;
        self.cycles += o.cycles;
        self.core += o.core;
        self.memory_access += o.memory_access;
        self.memory_leakage += o.memory_leakage;
        self.total = self.core + self.memory_access + self.memory_leakage;
    }
}

/// Synaptic operations triggered by the spikes entering each layer: every input spike
/// touches each of its outgoing synapses once.
pub fn event_macs(topology: &SnnTopology, input: &SpikeTrain, layer_spikes: &[SpikeTrain]) -> Result<u64> {
    if layer_spikes.len() != topology.layers().len() {
        return Err(Error::shape(format!(
            "{} layer trains for {} layers",
            layer_spikes.len(),
            topology.layers().len()
        )));
    }
    let mut macs = 0u64;
    for l in 0..topology.layers().len() {
        let conn = topology.connectivity(l)?;
        let mut fanout = vec![0u64; conn.n_in()];
        for col in conn.columns() {
            for &(i, _) in col {
                fanout[i] += 1;
            }
        }
        let train = if l == 0 { input } else { &layer_spikes[l - 1] };
        for (i, count) in train.counts().into_iter().enumerate() {
            macs += count as u64 * fanout[i];
        }
    }
    Ok(macs)
}

pub fn cmos_baseline(macs: u64, cfg: &CmosConfig) -> CmosReport {
    let bytes_per_weight = cfg.bits as f64 / 8.0;
    let m = macs as f64;
    let reuse = cfg.buffer_reuse_factor;
    let cycles = macs.div_ceil(cfg.macs_per_cycle);
    let core = cfg.e_mac * m + cfg.e_buffer * m * reuse;
    let memory_access = cfg.e_weight_fetch * m * (1.0 - reuse) * bytes_per_weight;
    let memory_leakage = cfg.leakage_power * bytes_per_weight * cycles as f64 * cfg.cycle_time;
    CmosReport { macs, cycles, core, memory_access, memory_leakage, total: core + memory_access + memory_leakage }
}

/// `metric,resparc,cmos,ratio` rows; `ratio` is CMOS over RESPARC.
pub fn write_comparison_csv<W: Write>(
    resparc: &EnergyReport,
    latency: &LatencyReport,
    cmos: &CmosReport,
    cmos_cfg: &CmosConfig,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["metric", "resparc", "cmos", "ratio"])?;
    let cmos_seconds = cmos.cycles as f64 * cmos_cfg.cycle_time;
    let rows = [
        ("energy_total_j", resparc.total, cmos.total),
        ("energy_per_classification_j", resparc.per_classification(), cmos.total / resparc.classifications.max(1) as f64),
        ("latency_s", latency.seconds, cmos_seconds),
    ];
    for (name, a, b) in rows {
        let ratio = if a > 0.0 { b / a } else { f64::NAN };
        w.write_record([name.to_string(), format!("{a:e}"), format!("{b:e}"), ratio.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// `component,joules` rows for a RESPARC energy report.
pub fn write_energy_csv<W: Write>(r: &EnergyReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["component", "joules"])?;
    for (name, v) in [
        ("neuron", r.neuron),
        ("crossbar", r.crossbar),
        ("peripheral", r.peripheral),
        ("total", r.total),
        ("per_classification", r.per_classification()),
    ] {
        w.write_record([name, &format!("{v:e}")])?;
    }
    w.flush()?;
    Ok(())
}
