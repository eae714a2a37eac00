use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cost::{CmosConfig, EnergyConfig};
use crate::error::{Error, Result};
use crate::mapper::ArchConfig;
use crate::quant::QuantConfig;

/// Run parameters not owned by any hardware model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub timesteps: usize,
    pub seed: u64,
    pub event_driven: bool,
    pub trace: bool,
    /// Firing probability of every input neuron per timestep in single runs and sweeps.
    pub input_rate: f64,
    /// Independently seeded inputs averaged per run.
    pub inputs: usize,
    /// Inputs used to measure classification fidelity in the bit sweep.
    pub fidelity_inputs: usize,
    /// Timesteps of each fidelity input.
    pub fidelity_timesteps: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            timesteps: 50,
            seed: 1,
            event_driven: true,
            trace: false,
            input_rate: 0.05,
            inputs: 1,
            fidelity_inputs: 200,
            fidelity_timesteps: 30,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.timesteps == 0 || self.inputs == 0 || self.fidelity_timesteps == 0 {
            return Err(Error::Config("sim.timesteps, sim.inputs and sim.fidelity_timesteps must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.input_rate) {
            return Err(Error::Config(format!("sim.input_rate must be in [0, 1], got {}", self.input_rate)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub quant: QuantConfig,
    pub arch: ArchConfig,
    pub energy: EnergyConfig,
    pub cmos: CmosConfig,
    pub sim: SimConfig,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse { path: path.to_path_buf(), msg: e.to_string() })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let cfg: Config =
            toml::from_str(text).map_err(|e| Error::Parse { path: path.to_path_buf(), msg: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.quant.validate()?;
        self.arch.validate()?;
        self.energy.validate()?;
        self.cmos.validate()?;
        self.sim.validate()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
