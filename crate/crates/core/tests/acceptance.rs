//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Runs without the libtest harness so the lines are always printed.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use resparc::archsim::{simulate, Counters, SimOptions, SimResult};
use resparc::harness::{self, bench, Config};
use resparc::mapper::{compile, ArchConfig};
use resparc::quant::{effective_weight, level_to_conductance, quantize_weight, QuantConfig, SignedMode};
use resparc::snn::{rate_encode, reference_forward, LayerSpec, SnnTopology, SpikeTrain, WeightMatrix};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const DESK_SEED: u64 = 7;
const SIZES: [usize; 3] = [32, 64, 128];

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    ensure(elapsed <= Duration::from_secs(limit_s), || format!("took {:.1}s, limit {limit_s}s", elapsed.as_secs_f64()))
}

fn conserved(c: &Counters) -> bool {
    c.packets_generated == c.packets_sent + c.packets_suppressed
}

fn err(e: resparc::Error) -> String {
    e.to_string()
}

// ---------------------------------------------------------------------------
// 1. Oracle equivalence

struct Combo {
    topology: SnnTopology,
    arch: ArchConfig,
    quant: QuantConfig,
    input: SpikeTrain,
    event_driven: bool,
    conv: bool,
}

fn weights(rng: &mut ChaCha8Rng, rows: usize, cols: usize, unsigned: bool) -> WeightMatrix {
    let lo = if unsigned { 0.0 } else { -0.4 };
    WeightMatrix::new(rows, cols, (0..rows * cols).map(|_| rng.gen_range(lo..0.6)).collect()).unwrap()
}

/// Combo `k` targets time-mux degree `1 + k % 8` on its first layer.
fn combo(k: usize) -> Combo {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + k as u64);
    let degree = 1 + k % 8;
    let mode = if k.is_multiple_of(2) { SignedMode::Differential } else { SignedMode::Unsigned };
    let unsigned = mode == SignedMode::Unsigned;
    let quant = QuantConfig::default().with_mode(mode).with_bits(rng.gen_range(1..=8));
    let conv = k.is_multiple_of(3);
    let size = [4, 8, 16][rng.gen_range(0..3)];
    let mut arch = ArchConfig::default().with_crossbar(size);
    arch.mcas_per_mpe = [1, 2, 4][rng.gen_range(0..3)];

    let (mut layers, mut ws) = (Vec::new(), Vec::new());
    let n_in;
    let mut width;
    if conv {
        // Fan-in k·k·c_in spread over `degree` row blocks.
        let kernel = 3;
        let c_in = (degree * size).div_ceil(kernel * kernel).max(1);
        let side = rng.gen_range(4..=6);
        let c_out = rng.gen_range(1..=3);
        n_in = side * side * c_in;
        let fan_in = kernel * kernel * c_in;
        layers.push(LayerSpec::conv(side, side, c_in, kernel, c_out, 1, 0.04 * fan_in as f64));
        ws.push(weights(&mut rng, fan_in, c_out, unsigned));
        width = (side - 2) * (side - 2) * c_out;
    } else {
        n_in = (degree - 1) * size + rng.gen_range(1..=size);
        let n_out = rng.gen_range(2..=2 * size);
        layers.push(LayerSpec::dense(n_in, n_out, 0.04 * n_in as f64));
        ws.push(weights(&mut rng, n_in, n_out, unsigned));
        width = n_out;
    }
    for _ in 0..rng.gen_range(0..=2) {
        let n_out = rng.gen_range(2..=12);
        layers.push(LayerSpec::dense(width, n_out, rng.gen_range(0.2..1.0)));
        ws.push(weights(&mut rng, width, n_out, unsigned));
        width = n_out;
    }
    let topology = SnnTopology::new(layers, ws).unwrap();
    let values: Vec<f64> = (0..n_in).map(|_| rng.gen_range(0.0..0.6)).collect();
    let input = rate_encode(&values, rng.gen_range(10..=25), k as u64).unwrap();
    Combo { topology, arch, quant, input, event_driven: k % 4 < 2, conv }
}

struct ComboReport {
    degree: usize,
    conv: bool,
    mode: SignedMode,
    event_driven: bool,
    spikes: u64,
}

fn run_combo(k: usize) -> Result<ComboReport, String> {
    let c = combo(k);
    let plan = compile(&c.topology, &c.arch, &c.quant).map_err(|e| format!("combo {k}: {e}"))?;
    let res = simulate(&plan, &c.input, SimOptions { event_driven: c.event_driven, trace: false })
        .map_err(|e| format!("combo {k}: {e}"))?;
    let expect = reference_forward(&c.topology, &c.input, Some(&c.quant)).map_err(err)?;
    ensure(res.layer_spikes == expect, || format!("combo {k}: spike trains differ from the reference"))?;
    ensure(conserved(&res.counters), || format!("combo {k}: packet counters not conserved"))?;
    Ok(ComboReport {
        degree: plan.layers[0].schedule.max_degree(),
        conv: c.conv,
        mode: c.quant.signed_mode,
        event_driven: c.event_driven,
        spikes: res.layer_spikes.iter().map(SpikeTrain::total_spikes).sum(),
    })
}

fn oracle_equivalence() -> Outcome {
    const COMBOS: usize = 64;
    let start = Instant::now();
    let reports: Vec<ComboReport> = (0..COMBOS).into_par_iter().map(run_combo).collect::<Result<_, _>>()?;
    within(start.elapsed(), 120)?;
    let degrees: BTreeSet<usize> = reports.iter().map(|r| r.degree).collect();
    ensure((1..=8).all(|d| degrees.contains(&d)), || format!("degrees covered {degrees:?}"))?;
    ensure(reports.iter().any(|r| r.conv) && reports.iter().any(|r| !r.conv), || "need dense and conv".into())?;
    for mode in [SignedMode::Differential, SignedMode::Unsigned] {
        ensure(reports.iter().any(|r| r.mode == mode), || format!("no {mode:?} combo"))?;
    }
    ensure(reports.iter().any(|r| r.event_driven) && reports.iter().any(|r| !r.event_driven), || {
        "need event-driven on and off".into()
    })?;
    let silent = reports.iter().filter(|r| r.spikes == 0).count();
    ensure(silent * 4 < COMBOS, || format!("{silent} of {COMBOS} combos never spike"))?;
    Ok(format!(
        "{COMBOS} combos bit-exact, degrees {degrees:?}, {silent} silent, {:.1}s",
        start.elapsed().as_secs_f64()
    ))
}

// ---------------------------------------------------------------------------
// 2. Tiling correctness

/// Signed nearest level, computed without the library quantizer.
fn expected_level(w: f64, w_max: f64, bits: u32) -> i32 {
    let top = ((1u32 << bits) - 1) as f64;
    let mag = (w.abs() / w_max * top + 0.5).floor() as i32;
    if w < 0.0 {
        -mag
    } else {
        mag
    }
}

/// 4 inputs fully connected to 4 outputs.
fn fan_in_four() -> SnnTopology {
    let rows = [[0.5, 0.25, 1.0, 0.0], [1.0, 0.0, 0.5, 0.75], [0.75, 0.5, 0.25, 1.0], [0.25, 1.0, 0.0, 0.5]];
    let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
    SnnTopology::new(vec![LayerSpec::dense(4, 4, 1.0)], vec![WeightMatrix::from_rows(&rows).unwrap()]).unwrap()
}

fn check_reconstruction(topology: &SnnTopology, arch: &ArchConfig, quant: &QuantConfig) -> Result<usize, String> {
    let plan = compile(topology, arch, quant).map_err(err)?;
    let mut synapses = 0;
    for l in 0..topology.layers().len() {
        let got = plan.reconstruct_layer(l).map_err(err)?;
        let conn = topology.connectivity(l).map_err(err)?;
        let w_max = topology.w_max(l);
        let mut want = BTreeMap::new();
        for (j, col) in conn.columns().iter().enumerate() {
            for &(i, w) in col {
                want.insert((i, j), expected_level(w, w_max, quant.bits));
            }
        }
        ensure(got.len() == want.len(), || format!("layer {l}: {} synapses mapped, {} expected", got.len(), want.len()))?;
        for (key, level) in &want {
            let e = got.get(key).ok_or_else(|| format!("layer {l}: synapse {key:?} missing"))?;
            ensure(e.signed_level() == *level, || format!("layer {l}: synapse {key:?} level {:?} != {level}", e))?;
            if quant.signed_mode == SignedMode::Unsigned {
                ensure(e.minus == 0, || format!("layer {l}: unsigned entry with a minus level"))?;
            } else {
                ensure(e.plus == 0 || e.minus == 0, || format!("layer {l}: both cells of a pair programmed"))?;
            }
        }
        synapses += want.len();
    }
    Ok(synapses)
}

fn tiling_correctness() -> Outcome {
    let mut synapses = 0;
    for k in 0..24 {
        let c = combo(k);
        synapses += check_reconstruction(&c.topology, &c.arch, &c.quant)?;
    }
    let cfg = Config::default();
    for topo in [bench::desk_mlp(DESK_SEED), bench::desk_cnn(DESK_SEED)] {
        for size in SIZES {
            synapses += check_reconstruction(&topo, &cfg.arch.with_crossbar(size), &cfg.quant)?;
        }
    }

    // 4×4 onto 2×2 crossbars: 4 tiles, every output gathered from 2 of them.
    let topo = fan_in_four();
    let quant = QuantConfig::default().with_mode(SignedMode::Unsigned);
    let arch = ArchConfig::default().with_crossbar(2);
    let plan = compile(&topo, &arch, &quant).map_err(err)?;
    let sched = &plan.layers[0].schedule;
    ensure(plan.tiles.len() == 4, || format!("fan-in 4 case: {} tiles", plan.tiles.len()))?;
    ensure((0..4).all(|j| sched.degree(j) == 2), || format!("fan-in 4 case: degrees {:?}", sched.sources))?;
    synapses += check_reconstruction(&topo, &arch, &quant)?;
    Ok(format!("{synapses} synapses reconstructed exactly; fan-in 4 on 2x2 gives 4 tiles, degree 2"))
}

// ---------------------------------------------------------------------------
// 3. Quantization endpoints and error bound

fn quantization_endpoints() -> Outcome {
    let cfg = QuantConfig::default().with_bits(4);
    ensure(cfg.r_min == 20e3 && cfg.r_max == 200e3, || "default resistance range changed".into())?;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let g0 = level_to_conductance(0, &cfg).map_err(err)?;
    let g15 = level_to_conductance(15, &cfg).map_err(err)?;
    ensure(rel(g0, 5.0e-6) <= 1e-12, || format!("level 0 -> {g0:e} S"))?;
    ensure(rel(g15, 5.0e-5) <= 1e-12, || format!("level 15 -> {g15:e} S"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for n in 0..100_000 {
        let bits = 1 + n % 8;
        let mode = if n % 2 == 0 { SignedMode::Differential } else { SignedMode::Unsigned };
        let q = QuantConfig::default().with_bits(bits as u32).with_mode(mode);
        let w_max = rng.gen_range(0.01..10.0);
        let w = if mode == SignedMode::Unsigned { rng.gen_range(0.0..=w_max) } else { rng.gen_range(-w_max..=w_max) };
        let e = quantize_weight(w, w_max, &q).map_err(err)?;
        let bound = w_max / (2.0 * (q.levels() - 1) as f64);
        let error = (effective_weight(e, w_max, &q) - w).abs();
        ensure(error <= bound * (1.0 + 1e-12), || format!("w {w} w_max {w_max} bits {bits}: error {error} > {bound}"))?;
        worst = worst.max(error / bound);
    }
    Ok(format!("G(0) {g0:e} S, G(15) {g15:e} S; worst error/bound {worst:.6} over 1e5 weights"))
}

// ---------------------------------------------------------------------------
// 4-6. Size trends and the event-driven ablation

fn mlp_size_trend() -> Outcome {
    let start = Instant::now();
    let rows = harness::sweep_mca(&bench::desk_mlp(DESK_SEED), &Config::default(), &SIZES).map_err(err)?;
    within(start.elapsed(), 60)?;
    let e: Vec<f64> = rows.iter().map(|r| r.total_j).collect();
    ensure(e[0] > e[1] && e[1] > e[2], || format!("energies {e:?} not strictly decreasing"))?;
    Ok(format!("total energy {:.3e} > {:.3e} > {:.3e} J at 32/64/128", e[0], e[1], e[2]))
}

fn cnn_size_trend() -> Outcome {
    let start = Instant::now();
    let rows = harness::sweep_mca(&bench::desk_cnn(DESK_SEED), &Config::default(), &SIZES).map_err(err)?;
    within(start.elapsed(), 120)?;
    let e: Vec<f64> = rows.iter().map(|r| r.total_j).collect();
    let fill: Vec<f64> = rows.iter().map(|r| r.mean_fill).collect();
    ensure(e[1] < e[0] && e[1] < e[2], || format!("energies {e:?}: minimum not at 64"))?;
    ensure(fill[2] < fill[1], || format!("fill {fill:?}: 128 not below 64"))?;
    Ok(format!(
        "energy {:.3e}/{:.3e}/{:.3e} J (min at 64), fill {:.3}/{:.3}/{:.3}",
        e[0], e[1], e[2], fill[0], fill[1], fill[2]
    ))
}

fn event_ablation() -> Outcome {
    let start = Instant::now();
    let cfg = Config::default();
    let mlp = bench::desk_mlp(DESK_SEED);
    let cnn = bench::desk_cnn(DESK_SEED);
    let mut sparse = Vec::new();
    for (name, topo) in [("MLP", &mlp), ("CNN", &cnn)] {
        let rows = harness::event_ablation(topo, &cfg, &SIZES, 0.05).map_err(err)?;
        let s: Vec<f64> = rows.iter().map(|r| r.savings).collect();
        ensure(s.iter().all(|&x| x > 0.0), || format!("{name} savings {s:?} not all positive"))?;
        ensure(s[0] > s[1] && s[0] > s[2], || format!("{name} savings {s:?} not largest at 32"))?;
        let dense = harness::event_ablation(topo, &cfg, &SIZES, 1.0).map_err(err)?;
        for r in &dense {
            ensure(r.savings == 0.0, || format!("{name} size {} rate 1.0 savings {}", r.size, r.savings))?;
            ensure(r.energy_on_j == r.energy_off_j, || format!("{name} size {}: energies differ at rate 1.0", r.size))?;
        }
        sparse.push(s);
    }
    within(start.elapsed(), 120)?;
    for (i, size) in SIZES.iter().enumerate() {
        ensure(sparse[0][i] >= sparse[1][i], || {
            format!("size {size}: MLP savings {} < CNN savings {}", sparse[0][i], sparse[1][i])
        })?;
    }
    let fmt = |s: &[f64]| s.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join("/");
    Ok(format!("rate 0.05 savings MLP {} CNN {}; rate 1.0 savings exactly 0", fmt(&sparse[0]), fmt(&sparse[1])))
}

// ---------------------------------------------------------------------------
// 7. Bit sweep

fn fidelity_gap(rows: &[harness::BitsRow]) -> (f64, f64) {
    let fid = |b: u32| rows.iter().find(|r| r.bits == b).unwrap().fidelity;
    (fid(4), fid(8))
}

fn bit_sweep() -> Outcome {
    let start = Instant::now();
    let cfg = Config::default();
    let topo = bench::desk_mlp(DESK_SEED);
    let inputs: Vec<Vec<f64>> =
        bench::class_inputs(DESK_SEED, cfg.sim.seed, cfg.sim.fidelity_inputs).into_iter().map(|(_, v)| v).collect();
    ensure(inputs.len() == 200, || format!("{} fidelity inputs", inputs.len()))?;
    let bits: Vec<u32> = (1..=8).collect();
    let rows = harness::sweep_bits(&topo, &cfg, &bits, &inputs).map_err(err)?;
    let fixed = rows[0].resparc_fixed_activity_j;
    ensure(rows.iter().all(|r| r.resparc_fixed_activity_j == fixed), || {
        format!("fixed-activity energy varies: {:?}", rows.iter().map(|r| r.resparc_fixed_activity_j).collect::<Vec<_>>())
    })?;
    ensure(rows.windows(2).all(|w| w[1].cmos_memory_access_j > w[0].cmos_memory_access_j), || {
        "CMOS memory access energy not strictly increasing".into()
    })?;
    let (f4, f8) = fidelity_gap(&rows);
    ensure((f4 - f8).abs() <= 0.05, || format!("fidelity 4 bits {f4} vs 8 bits {f8}"))?;

    // Reported only: uniform noise sits near the untrained network's decision boundaries.
    let noise = harness::random_values(topo.n_inputs(), inputs.len(), harness::FIDELITY_MAX_VALUE, cfg.sim.seed);
    let (n4, n8) = fidelity_gap(&harness::sweep_bits(&topo, &cfg, &[4, 8], &noise).map_err(err)?);
    within(start.elapsed(), 180)?;
    Ok(format!(
        "fixed-activity energy {fixed:.4e} J at every width; fidelity 4 bits {f4:.3}, 8 bits {f8:.3} \
         on class inputs (uniform noise: {n4:.3}, {n8:.3})"
    ))
}

// ---------------------------------------------------------------------------
// 8. Counter conservation and determinism

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn write_all(dir: &Path) -> Result<u64, String> {
    let mut cfg = Config::default();
    cfg.sim.trace = true;
    cfg.sim.inputs = 3;
    let mut runs = 0;
    for (name, topo) in [("mlp", bench::desk_mlp(DESK_SEED)), ("cnn", bench::desk_cnn(DESK_SEED))] {
        for ed in [true, false] {
            cfg.sim.event_driven = ed;
            let out = harness::run_single(&topo, &cfg).map_err(err)?;
            ensure(conserved(&out.measurement.counters), || format!("{name}: counters not conserved"))?;
            harness::write_run(&out, &cfg, &dir.join(format!("{name}_{ed}"))).map_err(err)?;
            runs += 1;
        }
    }
    cfg.sim.event_driven = true;
    let topo = bench::desk_cnn(DESK_SEED);
    let rows = harness::sweep_mca(&topo, &cfg, &SIZES).map_err(err)?;
    harness::write_sweep_mca(&rows, &dir.join("sweep")).map_err(err)?;
    let rows = harness::event_ablation(&topo, &cfg, &SIZES, 0.05).map_err(err)?;
    harness::write_ablation(&rows, &dir.join("ablation")).map_err(err)?;
    let rows = harness::verify_oracle(&topo, &cfg).map_err(err)?;
    harness::write_oracle(&rows, &dir.join("oracle")).map_err(err)?;
    Ok(runs)
}

fn conservation_and_determinism() -> Outcome {
    let mut checked = 0;
    for k in 0..16 {
        let c = combo(k);
        let plan = compile(&c.topology, &c.arch, &c.quant).map_err(err)?;
        for ed in [true, false] {
            let r = simulate(&plan, &c.input, SimOptions { event_driven: ed, trace: true }).map_err(err)?;
            ensure(conserved(&r.counters), || format!("combo {k}: {:?}", r.counters))?;
            checked += 1;
        }
    }
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    checked += write_all(a.path())?;
    write_all(b.path())?;
    let mut files = 0;
    for sub in std::fs::read_dir(a.path()).unwrap() {
        let name = sub.unwrap().file_name();
        let (x, y) = (read_dir(&a.path().join(&name)), read_dir(&b.path().join(&name)));
        ensure(x.keys().eq(y.keys()), || format!("{name:?}: file sets differ"))?;
        for (f, bytes) in &x {
            ensure(y[f] == *bytes, || format!("{name:?}/{f} differs between runs"))?;
            files += 1;
        }
    }
    Ok(format!("{checked} runs conserve packets; {files} artifacts byte-identical across two executions"))
}

// ---------------------------------------------------------------------------
// 9. Latency sanity

fn run_full(topo: &SnnTopology, arch: &ArchConfig, quant: &QuantConfig, input: &SpikeTrain) -> Result<SimResult, String> {
    let plan = compile(topo, arch, quant).map_err(err)?;
    let r = simulate(&plan, input, SimOptions { event_driven: false, trace: false }).map_err(err)?;
    ensure(r.layer_spikes == reference_forward(topo, input, Some(quant)).map_err(err)?, || "oracle mismatch".into())?;
    Ok(r)
}

fn latency_sanity() -> Outcome {
    // The same 4×4 layer on a 4×4 crossbar (degree 1) and on 2×2 crossbars (degree 2).
    let topo = fan_in_four();
    let quant = QuantConfig::default().with_mode(SignedMode::Unsigned);
    let all_on = SpikeTrain::from_steps(vec![vec![true; 4]; 10]).unwrap();
    let one = run_full(&topo, &ArchConfig::default().with_crossbar(4), &quant, &all_on)?;
    let two = run_full(&topo, &ArchConfig::default().with_crossbar(2), &quant, &all_on)?;
    for (a, b) in one.stages.iter().zip(&two.stages) {
        ensure(b.mpe_compute_cycles == 2 * a.mpe_compute_cycles && a.mpe_compute_cycles > 0, || {
            format!("timestep {}: degree-1 {} vs degree-2 {} compute cycles", a.timestep, a.mpe_compute_cycles, b.mpe_compute_cycles)
        })?;
    }

    // Two layers, one mPE each: both in one NeuroCell, or split over two.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let topo = SnnTopology::new(
        vec![LayerSpec::dense(8, 8, 0.8), LayerSpec::dense(8, 8, 0.8)],
        vec![weights(&mut rng, 8, 8, false), weights(&mut rng, 8, 8, false)],
    )
    .unwrap();
    let quant = QuantConfig::default();
    let input = rate_encode(&[0.5; 8], 20, 4).unwrap();
    let mut fits = ArchConfig::default().with_crossbar(16);
    (fits.nc_grid_w, fits.nc_grid_h) = (2, 1);
    let split = ArchConfig { nc_grid_w: 1, ..fits };
    let plan_fits = compile(&topo, &fits, &quant).map_err(err)?;
    let plan_split = compile(&topo, &split, &quant).map_err(err)?;
    ensure(plan_fits.num_ncs() == 1 && plan_split.num_ncs() == 2, || {
        format!("NeuroCells used: {} and {}", plan_fits.num_ncs(), plan_split.num_ncs())
    })?;
    let a = run_full(&topo, &fits, &quant, &input)?.counters.cycles_elapsed;
    let b = run_full(&topo, &split, &quant, &input)?.counters.cycles_elapsed;
    ensure(b > a, || format!("one NeuroCell {a} cycles, two NeuroCells {b} cycles"))?;
    Ok(format!(
        "degree 2 doubles compute cycles ({} vs {} total); one NeuroCell {a} cycles < two NeuroCells {b}",
        two.counters.cycles_elapsed, one.counters.cycles_elapsed
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("tiling correctness", tiling_correctness),
        ("quantization endpoints", quantization_endpoints),
        ("MLP size trend", mlp_size_trend),
        ("CNN size trend", cnn_size_trend),
        ("event-driven ablation", event_ablation),
        ("bit sweep", bit_sweep),
        ("conservation and determinism", conservation_and_determinism),
        ("latency sanity", latency_sanity),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
