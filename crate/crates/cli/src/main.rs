//! `resparc`: compile, simulate and cost spiking networks on a memristive crossbar core.
//!
//! Exit status: 0 success, 1 input error, 2 capacity error, 3 simulation error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use resparc::harness::{self, bench, Config};
use resparc::snn::{io::load_topology, SnnTopology};
use resparc::Error;

#[derive(Parser, Debug)]
#[command(name = "resparc", version, about = "Memristive crossbar SNN accelerator simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Map a topology onto crossbars, mPEs and NeuroCells; writes plan.json and utilization.csv.
    Compile(Common),
    /// Compile and simulate; writes counters.csv, per-layer spike CSVs and the optional trace.
    Simulate(Common),
    /// Full run: plan, simulation and energy/latency/CMOS comparison reports.
    Cost(Common),
    /// Energy and utilization across crossbar sizes.
    SweepMca {
        #[command(flatten)]
        common: Common,
        /// Square crossbar sizes.
        #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
        sizes: Vec<usize>,
    },
    /// Energy and classification fidelity across weight precisions.
    SweepBits {
        #[command(flatten)]
        common: Common,
        /// Weight precisions to compare.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8")]
        bits: Vec<u32>,
        /// Measure fidelity on noisy class prototypes of the desk MLP built with this seed
        /// instead of uniform random inputs.
        #[arg(long)]
        prototype_seed: Option<u64>,
    },
    /// Energy with and without zero-packet suppression.
    EventAblation {
        #[command(flatten)]
        common: Common,
        /// Square crossbar sizes.
        #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
        sizes: Vec<usize>,
        /// Input firing rates to compare.
        #[arg(long = "rates", value_delimiter = ',', default_value = "0.05,1.0")]
        rates: Vec<f64>,
    },
    /// Check the mapped simulation against the reference simulator spike-for-spike.
    VerifyOracle(Common),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Args, Debug)]
struct Common {
    /// Topology JSON.
    #[arg(long)]
    topology: PathBuf,
    /// Binary weights file; inline JSON weights are used when omitted.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Simulation length per input.
    #[arg(long)]
    timesteps: Option<usize>,
    /// Base seed for input encoding.
    #[arg(long)]
    seed: Option<u64>,
    /// Input firing probability per timestep.
    #[arg(long)]
    rate: Option<f64>,
    /// Suppress all-zero spike packets.
    #[arg(long, value_enum)]
    event_driven: Option<OnOff>,
    /// Record a per-packet trace (simulate and cost).
    #[arg(long)]
    trace: bool,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Common {
    fn load(&self) -> Result<(SnnTopology, Config), Error> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        if let Some(t) = self.timesteps {
            cfg.sim.timesteps = t;
        }
        if let Some(s) = self.seed {
            cfg.sim.seed = s;
        }
        if let Some(r) = self.rate {
            cfg.sim.input_rate = r;
        }
        if let Some(e) = self.event_driven {
            cfg.sim.event_driven = e == OnOff::On;
        }
        cfg.sim.trace |= self.trace;
        cfg.validate()?;
        let topology = load_topology(&self.topology, self.weights.as_deref())?;
        Ok((topology, cfg))
    }
}

fn report(dir: &Path) {
    println!("wrote {}", dir.display());
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Compile(c) => {
            let (topo, cfg) = c.load()?;
            let plan = resparc::mapper::compile(&topo, &cfg.arch, &cfg.quant)?;
            let util = resparc::mapper::utilization(&plan);
            harness::write_plan(&plan, &util, &c.out)?;
            println!(
                "{} tiles on {} mPEs in {} NeuroCells, mean fill {:.4}",
                util.total_tiles, util.total_mpes, util.total_neurocells, util.mean_fill
            );
            report(&c.out);
        }
        Command::Simulate(c) => {
            let (topo, cfg) = c.load()?;
            let out = harness::run_single(&topo, &cfg)?;
            harness::write_simulation(&out.measurement, &c.out)?;
            let k = &out.measurement.counters;
            println!(
                "{} output spikes, {} crossbar reads, {} packets sent, {} suppressed, {} cycles",
                out.measurement.first.as_ref().map_or(0, |r| r.output().total_spikes()),
                k.crossbar_reads,
                k.packets_sent,
                k.packets_suppressed,
                k.cycles_elapsed
            );
            report(&c.out);
        }
        Command::Cost(c) => {
            let (topo, cfg) = c.load()?;
            let out = harness::run_single(&topo, &cfg)?;
            harness::write_run(&out, &cfg, &c.out)?;
            let m = &out.measurement;
            println!(
                "energy {:.4e} J (neuron {:.4e}, crossbar {:.4e}, peripheral {:.4e}); CMOS {:.4e} J; {} cycles",
                m.energy.total, m.energy.neuron, m.energy.crossbar, m.energy.peripheral, m.cmos.total, m.latency.cycles
            );
            report(&c.out);
        }
        Command::SweepMca { common, sizes } => {
            let (topo, cfg) = common.load()?;
            let rows = harness::sweep_mca(&topo, &cfg, &sizes)?;
            harness::write_sweep_mca(&rows, &common.out)?;
            for r in &rows {
                println!("size {:>4}: {:.4e} J, fill {:.4}, {} tiles", r.size, r.total_j, r.mean_fill, r.tiles);
            }
            report(&common.out);
        }
        Command::SweepBits { common, bits, prototype_seed } => {
            let (topo, cfg) = common.load()?;
            let inputs = match prototype_seed {
                Some(seed) => {
                    if topo.n_inputs() != bench::MLP_INPUTS {
                        return Err(Error::Config(format!(
                            "--prototype-seed needs {} inputs, the topology has {}",
                            bench::MLP_INPUTS,
                            topo.n_inputs()
                        )));
                    }
                    bench::class_inputs(seed, cfg.sim.seed, cfg.sim.fidelity_inputs).into_iter().map(|(_, v)| v).collect()
                }
                None => harness::random_values(
                    topo.n_inputs(),
                    cfg.sim.fidelity_inputs,
                    harness::FIDELITY_MAX_VALUE,
                    cfg.sim.seed,
                ),
            };
            let rows = harness::sweep_bits(&topo, &cfg, &bits, &inputs)?;
            harness::write_sweep_bits(&rows, &common.out)?;
            for r in &rows {
                println!(
                    "bits {}: RESPARC {:.4e} J, CMOS {:.4e} J, fidelity {:.3}",
                    r.bits, r.resparc_fixed_activity_j, r.cmos_total_j, r.fidelity
                );
            }
            report(&common.out);
        }
        Command::EventAblation { common, sizes, rates } => {
            let (topo, cfg) = common.load()?;
            let mut rows = Vec::new();
            for rate in rates {
                rows.extend(harness::event_ablation(&topo, &cfg, &sizes, rate)?);
            }
            harness::write_ablation(&rows, &common.out)?;
            for r in &rows {
                println!("size {:>4} rate {}: savings {:.4}", r.size, r.rate, r.savings);
            }
            report(&common.out);
        }
        Command::VerifyOracle(c) => {
            let (topo, cfg) = c.load()?;
            let rows = harness::verify_oracle(&topo, &cfg)?;
            harness::write_oracle(&rows, &c.out)?;
            let bad = rows.iter().filter(|r| !r.matches).count();
            println!("{} of {} runs match the reference", rows.len() - bad, rows.len());
            report(&c.out);
            if bad > 0 {
                return Err(Error::OracleMismatch(format!("{bad} runs differ")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
