//! End-to-end experiments: single runs, crossbar-size and precision sweeps, the
//! event-driven ablation and oracle checks, with CSV/SVG/JSON artifacts.

pub mod bench;
mod config;
pub mod svg;

pub use config::{Config, SimConfig};

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::archsim::{simulate, Counters, SimOptions, SimResult};
use crate::cost::{
    cmos_baseline, event_macs, resparc_energy, resparc_latency, write_comparison_csv, write_energy_csv, CmosReport,
    EnergyReport, LatencyReport,
};
use crate::error::{Error, Result};
use crate::mapper::{compile, utilization, MappingPlan, UtilizationReport};
use crate::snn::{io::write_spikes_csv, rate_encode, reference_forward, SnnTopology, SpikeTrain};
use svg::Series;

/// Rate-coded inputs for a run: `sim.inputs` trains, input `k` seeded with `seed + k`.
pub fn uniform_inputs(n_in: usize, rate: f64, sim: &SimConfig) -> Result<Vec<SpikeTrain>> {
    (0..sim.inputs as u64)
        .map(|k| rate_encode(&bench::uniform_values(n_in, rate), sim.timesteps, sim.seed.wrapping_add(k)))
        .collect()
}

/// Upper bound of the per-neuron input values used for fidelity checks on arbitrary
/// topologies.
pub const FIDELITY_MAX_VALUE: f64 = 0.3;

/// `count` input vectors with every value drawn uniformly from `[0, max_value)`.
pub fn random_values(n_in: usize, count: usize, max_value: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..n_in).map(|_| rng.gen_range(0.0..max_value)).collect()).collect()
}

fn add_counters(a: &mut Counters, b: &Counters) {
    a.crossbar_reads += b.crossbar_reads;
    a.neuron_integrations += b.neuron_integrations;
    a.spikes_emitted += b.spikes_emitted;
    a.packets_generated += b.packets_generated;
    a.packets_sent += b.packets_sent;
    a.packets_suppressed += b.packets_suppressed;
    a.hop_count += b.hop_count;
    a.cext_transfers += b.cext_transfers;
    a.bus_broadcasts += b.bus_broadcasts;
    a.bus_suppressed += b.bus_suppressed;
    a.sram_reads += b.sram_reads;
    a.sram_writes += b.sram_writes;
    a.buffer_accesses += b.buffer_accesses;
    a.cycles_elapsed += b.cycles_elapsed;
}

/// Simulate one input and confirm the spikes against the quantized reference.
pub fn simulate_checked(
    topology: &SnnTopology,
    plan: &MappingPlan,
    input: &SpikeTrain,
    opts: SimOptions,
) -> Result<SimResult> {
    let result = simulate(plan, input, opts)?;
    let expect = reference_forward(topology, input, Some(&plan.quant))?;
    if let Some(l) = (0..expect.len()).find(|&l| expect[l] != result.layer_spikes[l]) {
        return Err(Error::OracleMismatch(format!("layer {l} spike trains differ")));
    }
    Ok(result)
}

/// Aggregate over a set of inputs on one plan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurement {
    pub counters: Counters,
    pub energy: EnergyReport,
    pub latency: LatencyReport,
    pub cmos: CmosReport,
    /// Result of the first input, kept for spike and trace export.
    #[serde(skip)]
    pub first: Option<SimResult>,
}

pub fn measure(
    topology: &SnnTopology,
    plan: &MappingPlan,
    cfg: &Config,
    inputs: &[SpikeTrain],
    event_driven: bool,
) -> Result<Measurement> {
    let opts = SimOptions { event_driven, trace: cfg.sim.trace };
    let results: Vec<SimResult> =
        inputs.par_iter().map(|x| simulate_checked(topology, plan, x, opts)).collect::<Result<_>>()?;
    let mut m = Measurement {
        counters: Counters::default(),
        energy: EnergyReport::default(),
        latency: LatencyReport::default(),
        cmos: CmosReport::default(),
        first: None,
    };
    for (r, x) in results.iter().zip(inputs) {
        add_counters(&mut m.counters, &r.counters);
        m.energy.add(&resparc_energy(r, plan, &cfg.energy));
        let lat = resparc_latency(r, &cfg.energy);
        m.latency.cycles += lat.cycles;
        m.latency.seconds += lat.seconds;
        m.latency.bus_cycles += lat.bus_cycles;
        m.latency.mpe_compute_cycles += lat.mpe_compute_cycles;
        m.latency.cext_cycles += lat.cext_cycles;
        m.latency.switch_cycles += lat.switch_cycles;
        m.cmos.add(&cmos_baseline(event_macs(topology, x, &r.layer_spikes)?, &cfg.cmos));
    }
    m.latency.classifications_per_sec =
        if m.latency.seconds > 0.0 { inputs.len() as f64 / m.latency.seconds } else { 0.0 };
    m.first = results.into_iter().next();
    Ok(m)
}

pub struct RunOutput {
    pub plan: MappingPlan,
    pub utilization: UtilizationReport,
    pub measurement: Measurement,
}

/// Compile, simulate and cost one topology under `cfg`.
pub fn run_single(topology: &SnnTopology, cfg: &Config) -> Result<RunOutput> {
    cfg.validate()?;
    let plan = compile(topology, &cfg.arch, &cfg.quant)?;
    let inputs = uniform_inputs(topology.n_inputs(), cfg.sim.input_rate, &cfg.sim)?;
    let measurement = measure(topology, &plan, cfg, &inputs, cfg.sim.event_driven)?;
    Ok(RunOutput { utilization: utilization(&plan), plan, measurement })
}

fn create(dir: &Path, name: &str) -> Result<fs::File> {
    fs::create_dir_all(dir)?;
    Ok(fs::File::create(dir.join(name))?)
}

pub fn write_plan(plan: &MappingPlan, util: &UtilizationReport, dir: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(plan).map_err(|e| Error::invalid(e.to_string()))?;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("plan.json"), json + "\n")?;
    util.write_csv(create(dir, "utilization.csv")?)
}

/// Counters, per-layer spikes of the first input and (when enabled) the packet trace.
pub fn write_simulation(m: &Measurement, dir: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(dir, "counters.csv")?);
    w.write_record(["counter", "value"])?;
    for (name, v) in m.counters.named() {
        w.write_record([name, &v.to_string()])?;
    }
    w.flush()?;
    if let Some(first) = &m.first {
        for (l, train) in first.layer_spikes.iter().enumerate() {
            write_spikes_csv(train, create(dir, &format!("spikes_layer{l}.csv"))?)?;
        }
        if !first.trace.is_empty() {
            first.write_trace_csv(create(dir, "trace.csv")?)?;
        }
    }
    Ok(())
}

pub fn write_costs(m: &Measurement, cfg: &Config, dir: &Path) -> Result<()> {
    write_energy_csv(&m.energy, create(dir, "energy.csv")?)?;
    let mut w = csv::Writer::from_writer(create(dir, "latency.csv")?);
    w.write_record(["metric", "value"])?;
    let l = &m.latency;
    for (name, v) in [
        ("cycles", l.cycles.to_string()),
        ("seconds", format!("{:e}", l.seconds)),
        ("classifications_per_sec", l.classifications_per_sec.to_string()),
        ("bus_cycles", l.bus_cycles.to_string()),
        ("mpe_compute_cycles", l.mpe_compute_cycles.to_string()),
        ("cext_cycles", l.cext_cycles.to_string()),
        ("switch_cycles", l.switch_cycles.to_string()),
    ] {
        w.write_record([name, &v])?;
    }
    w.flush()?;
    write_comparison_csv(&m.energy, &m.latency, &m.cmos, &cfg.cmos, create(dir, "comparison.csv")?)
}

pub fn write_run(out: &RunOutput, cfg: &Config, dir: &Path) -> Result<()> {
    write_plan(&out.plan, &out.utilization, dir)?;
    write_simulation(&out.measurement, dir)?;
    write_costs(&out.measurement, cfg, dir)
}

fn write_rows<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeRow {
    pub size: usize,
    pub neuron_j: f64,
    pub crossbar_j: f64,
    pub peripheral_j: f64,
    pub total_j: f64,
    pub mean_fill: f64,
    pub tiles: usize,
    pub mpes: usize,
    pub neurocells: usize,
    pub cycles: u64,
}

/// Energy, utilization and latency for square crossbars of each size. Packets are as wide
/// as a crossbar's rows at every size.
pub fn sweep_mca(topology: &SnnTopology, cfg: &Config, sizes: &[usize]) -> Result<Vec<SizeRow>> {
    cfg.validate()?;
    let inputs = uniform_inputs(topology.n_inputs(), cfg.sim.input_rate, &cfg.sim)?;
    sizes
        .iter()
        .map(|&size| {
            let plan = compile(topology, &cfg.arch.with_crossbar(size), &cfg.quant)?;
            let m = measure(topology, &plan, cfg, &inputs, cfg.sim.event_driven)?;
            let util = utilization(&plan);
            Ok(SizeRow {
                size,
                neuron_j: m.energy.neuron,
                crossbar_j: m.energy.crossbar,
                peripheral_j: m.energy.peripheral,
                total_j: m.energy.total,
                mean_fill: util.mean_fill,
                tiles: util.total_tiles,
                mpes: util.total_mpes,
                neurocells: util.total_neurocells,
                cycles: m.latency.cycles,
            })
        })
        .collect()
}

pub fn write_sweep_mca(rows: &[SizeRow], dir: &Path) -> Result<()> {
    write_rows(rows, &dir.join("sweep_mca.csv"))?;
    let cats: Vec<String> = rows.iter().map(|r| r.size.to_string()).collect();
    let chart = svg::stacked_bars(
        "Energy by crossbar size",
        "joules",
        &cats,
        &[
            Series { name: "neuron", values: rows.iter().map(|r| r.neuron_j).collect() },
            Series { name: "crossbar", values: rows.iter().map(|r| r.crossbar_j).collect() },
            Series { name: "peripheral", values: rows.iter().map(|r| r.peripheral_j).collect() },
        ],
    );
    fs::write(dir.join("sweep_mca.svg"), chart)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub size: usize,
    pub rate: f64,
    pub energy_on_j: f64,
    pub energy_off_j: f64,
    /// `(off - on) / off`
    pub savings: f64,
    pub packets_sent_on: u64,
    pub packets_sent_off: u64,
    pub packets_suppressed: u64,
    pub bus_suppressed: u64,
    pub crossbar_reads_on: u64,
    pub crossbar_reads_off: u64,
}

/// Energy with and without zero-packet suppression at input rate `rate`.
pub fn event_ablation(topology: &SnnTopology, cfg: &Config, sizes: &[usize], rate: f64) -> Result<Vec<AblationRow>> {
    cfg.validate()?;
    let inputs = uniform_inputs(topology.n_inputs(), rate, &cfg.sim)?;
    sizes
        .iter()
        .map(|&size| {
            let plan = compile(topology, &cfg.arch.with_crossbar(size), &cfg.quant)?;
            let on = measure(topology, &plan, cfg, &inputs, true)?;
            let off = measure(topology, &plan, cfg, &inputs, false)?;
            Ok(AblationRow {
                size,
                rate,
                energy_on_j: on.energy.total,
                energy_off_j: off.energy.total,
                savings: (off.energy.total - on.energy.total) / off.energy.total,
                packets_sent_on: on.counters.packets_sent,
                packets_sent_off: off.counters.packets_sent,
                packets_suppressed: on.counters.packets_suppressed,
                bus_suppressed: on.counters.bus_suppressed,
                crossbar_reads_on: on.counters.crossbar_reads,
                crossbar_reads_off: off.counters.crossbar_reads,
            })
        })
        .collect()
}

pub fn write_ablation(rows: &[AblationRow], dir: &Path) -> Result<()> {
    write_rows(rows, &dir.join("event_ablation.csv"))?;
    let cats: Vec<String> = rows.iter().map(|r| format!("{} @ {}", r.size, r.rate)).collect();
    let chart = svg::lines(
        "Event-driven energy savings",
        "fraction of energy saved",
        &cats,
        &[Series { name: "savings", values: rows.iter().map(|r| r.savings).collect() }],
    );
    fs::write(dir.join("event_ablation.svg"), chart)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BitsRow {
    pub bits: u32,
    /// Energy of the reference activity (recorded at the configured precision) on the
    /// plan compiled for `bits`.
    pub resparc_fixed_activity_j: f64,
    /// Energy of a fresh simulation at `bits`.
    pub resparc_measured_j: f64,
    pub cmos_core_j: f64,
    pub cmos_memory_access_j: f64,
    pub cmos_memory_leakage_j: f64,
    pub cmos_total_j: f64,
    /// Fraction of inputs whose argmax matches the full-precision reference.
    pub fidelity: f64,
    /// Mean L1 distance between output spike counts and the full-precision reference.
    pub spike_count_l1: f64,
}

/// Weight precision sweep. `fidelity_inputs` are input values rate-coded with
/// `sim.fidelity_timesteps` steps.
pub fn sweep_bits(
    topology: &SnnTopology,
    cfg: &Config,
    bits: &[u32],
    fidelity_inputs: &[Vec<f64>],
) -> Result<Vec<BitsRow>> {
    cfg.validate()?;
    let inputs = uniform_inputs(topology.n_inputs(), cfg.sim.input_rate, &cfg.sim)?;
    let base_plan = compile(topology, &cfg.arch, &cfg.quant)?;
    let opts = SimOptions { event_driven: cfg.sim.event_driven, trace: false };
    let base_results: Vec<SimResult> =
        inputs.par_iter().map(|x| simulate_checked(topology, &base_plan, x, opts)).collect::<Result<_>>()?;
    let mut base_macs = 0;
    for (r, x) in base_results.iter().zip(&inputs) {
        base_macs += event_macs(topology, x, &r.layer_spikes)?;
    }
    let fid_trains: Vec<SpikeTrain> = fidelity_inputs
        .iter()
        .enumerate()
        .map(|(k, v)| rate_encode(v, cfg.sim.fidelity_timesteps, cfg.sim.seed.wrapping_add(k as u64)))
        .collect::<Result<_>>()?;
    let full: Vec<Vec<u32>> = fid_trains
        .par_iter()
        .map(|x| Ok(reference_forward(topology, x, None)?.pop().expect("layers").counts()))
        .collect::<Result<_>>()?;

    bits.iter()
        .map(|&b| {
            let qcfg = Config { quant: cfg.quant.with_bits(b), cmos: cfg.cmos.with_bits(b), ..*cfg };
            qcfg.validate()?;
            let plan = compile(topology, &qcfg.arch, &qcfg.quant)?;
            let mut fixed = EnergyReport::default();
            for r in &base_results {
                fixed.add(&resparc_energy(r, &plan, &qcfg.energy));
            }
            let measured = measure(topology, &plan, &qcfg, &inputs, qcfg.sim.event_driven)?;
            let cmos = cmos_baseline(base_macs, &qcfg.cmos);
            let outs: Vec<Vec<u32>> = fid_trains
                .par_iter()
                .map(|x| {
                    let r = simulate(&plan, x, SimOptions { event_driven: true, trace: false })?;
                    Ok(r.output().counts())
                })
                .collect::<Result<_>>()?;
            let n = outs.len().max(1) as f64;
            let agree = outs.iter().zip(&full).filter(|(a, f)| argmax(a) == argmax(f)).count() as f64;
            let l1: f64 = outs
                .iter()
                .zip(&full)
                .map(|(a, f)| a.iter().zip(f.iter()).map(|(x, y)| x.abs_diff(*y) as f64).sum::<f64>())
                .sum();
            Ok(BitsRow {
                bits: b,
                resparc_fixed_activity_j: fixed.total,
                resparc_measured_j: measured.energy.total,
                cmos_core_j: cmos.core,
                cmos_memory_access_j: cmos.memory_access,
                cmos_memory_leakage_j: cmos.memory_leakage,
                cmos_total_j: cmos.total,
                fidelity: agree / n,
                spike_count_l1: l1 / n,
            })
        })
        .collect()
}

pub fn write_sweep_bits(rows: &[BitsRow], dir: &Path) -> Result<()> {
    write_rows(rows, &dir.join("sweep_bits.csv"))?;
    let cats: Vec<String> = rows.iter().map(|r| r.bits.to_string()).collect();
    let chart = svg::lines(
        "Energy by weight precision",
        "joules",
        &cats,
        &[
            Series { name: "RESPARC", values: rows.iter().map(|r| r.resparc_fixed_activity_j).collect() },
            Series { name: "CMOS", values: rows.iter().map(|r| r.cmos_total_j).collect() },
        ],
    );
    fs::write(dir.join("sweep_bits.svg"), chart)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub input: usize,
    pub event_driven: bool,
    pub matches: bool,
    pub output_spikes: u64,
}

/// Compare the mapped simulation with the quantized reference on `sim.inputs` inputs,
/// in both event-driven modes.
pub fn verify_oracle(topology: &SnnTopology, cfg: &Config) -> Result<Vec<OracleRow>> {
    cfg.validate()?;
    let plan = compile(topology, &cfg.arch, &cfg.quant)?;
    let inputs = uniform_inputs(topology.n_inputs(), cfg.sim.input_rate, &cfg.sim)?;
    let mut rows = Vec::new();
    for (k, x) in inputs.iter().enumerate() {
        let expect = reference_forward(topology, x, Some(&cfg.quant))?;
        for ed in [true, false] {
            let r = simulate(&plan, x, SimOptions { event_driven: ed, trace: false })?;
            rows.push(OracleRow {
                input: k,
                event_driven: ed,
                matches: r.layer_spikes == expect,
                output_spikes: r.output().total_spikes(),
            });
        }
    }
    Ok(rows)
}

pub fn write_oracle(rows: &[OracleRow], dir: &Path) -> Result<()> {
    write_rows(rows, &dir.join("oracle.csv"))
}

/// Index of the largest count, lowest index on ties.
fn argmax(counts: &[u32]) -> usize {
    let mut best = 0;
    for (i, &v) in counts.iter().enumerate() {
        if v > counts[best] {
            best = i;
        }
    }
    best
}
