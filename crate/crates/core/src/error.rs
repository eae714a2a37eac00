use std::path::PathBuf;

/// Errors produced anywhere in the compile / simulate / cost pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("capacity exceeded: {required_mpes} mPEs required ({required_ncs} NeuroCells), {available_mpes} available ({available_ncs} NeuroCells)")]
    Capacity {
        required_mpes: usize,
        required_ncs: usize,
        available_mpes: usize,
        available_ncs: usize,
    },

    #[error("layer {layer}: a group of {tiles} tiles sharing outputs needs {mpes} adjacent mPEs, a NeuroCell has {per_nc}")]
    ChainTooLong {
        layer: usize,
        tiles: usize,
        mpes: usize,
        per_nc: usize,
    },

    #[error("buffer overflow at switch {switch} port {port} (timestep {timestep}): depth {depth} exceeded")]
    BufferOverflow {
        switch: usize,
        port: String,
        timestep: usize,
        depth: usize,
    },

    #[error("routing table miss at timestep {timestep}: no route from {src} to mPE {dst}")]
    RouteMiss {
        src: String,
        dst: usize,
        timestep: usize,
    },

    #[error("mapped simulation diverged from the reference: {0}")]
    OracleMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit status for the command-line front end:
    /// 1 input error, 2 capacity error, 3 simulation error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Capacity { .. } | Error::ChainTooLong { .. } => 2,
            Error::BufferOverflow { .. } | Error::RouteMiss { .. } | Error::OracleMismatch(_) => 3,
            _ => 1,
        }
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidValue(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
