//! Memristive crossbar spiking neural network accelerator: network mapping, cycle-level
//! architecture simulation and energy/latency estimation.

pub mod archsim;
pub mod cost;
pub mod error;
pub mod harness;
pub mod mapper;
pub mod quant;
pub mod snn;

pub use error::{Error, Result};
