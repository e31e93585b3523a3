use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulator and the analytic toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported constellation `{0}` (supported: bpsk, qpsk)")]
    UnsupportedConstellation(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("ML search space of {candidates} vectors exceeds the cap of {cap}")]
    SearchSpaceTooLarge { candidates: usize, cap: usize },

    #[error("no feasible Max-Link candidate")]
    NoFeasibleCandidate,

    #[error("degenerate slot: zero direct-link distance and no feasible relay link")]
    DegenerateSlot,

    #[error("matrix is not Hermitian positive definite")]
    NotPositiveDefinite,

    #[error("empty PEP trace")]
    EmptyTrace,

    #[error("sum-rate aggregate over zero slots")]
    ZeroSlots,

    #[error("DTMC state space of {states} states exceeds the cap of {cap}")]
    StateSpaceTooLarge { states: usize, cap: usize },

    #[error("Markov chain is not irreducible")]
    NotIrreducible,

    #[error("stationary distribution did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error("invalid transition from state {state}: {reason}")]
    InvalidTransition { state: usize, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{}", path.display())]
    Config {
        path: PathBuf,
        #[source]
        source: crate::experiment::ConfigError,
    },

    #[error("I/O error on {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{protocol} at {snr_db} dB (seed {seed}): {source}")]
    Trial {
        protocol: String,
        snr_db: f64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
