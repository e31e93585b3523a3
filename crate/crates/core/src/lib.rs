//! Link-level simulator and analytic toolkit for buffer-aided cooperative
//! MIMO relay selection.
//!
//! The kernels are generic over the [`Real`] scalar (`f32` or `f64`); the
//! aliases below fix the scalar for callers that do not care.
//!
//! ```
//! use maxlink::{metric_count, CMatrixF64, ConstellationF64, min_distance_submatrix};
//!
//! let h = CMatrixF64::from_real_rows(&[&[1.0, 2.0], &[1.0, 2.0]]).unwrap();
//! let bpsk = maxlink::build_constellation::<f64>("bpsk").unwrap();
//! let (d_min, _) = min_distance_submatrix(&h, &bpsk).unwrap();
//! assert_eq!(d_min, 8.0);
//! assert_eq!(metric_count(2, 1), 4);
//! # let _: &ConstellationF64 = &bpsk;
//! ```

pub mod analysis;
pub mod channel;
pub mod detection;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod scalar;
pub mod selection;

pub use analysis::{
    complexity_report, dtmc_build, outage_throughput_delay, pep_cooperative, pep_direct, q_function,
    stationary_distribution, sum_rate_aggregate, sum_rate_slot, theoretical_pep_curve, ComplexityReport, DtmcModel,
};
pub use channel::{
    apply_csi_error, awgn, build_constellation, enumerate_symbol_vectors, generate_channels, ChannelRealization,
    Constellation, ConstellationKind, CsiModel, LinkVarianceProfile, SymbolVectorSet,
};
pub use detection::{ml_detect, DetectionResult, MlDetector};
pub use engine::{run_protocol, EngineConfig, Protocol, RunMetrics};
pub use error::{Error, Result};
pub use experiment::{emit_results, load_config, parse_config, run_experiment, ExperimentConfig};
pub use linalg::CMatrix;
pub use scalar::Real;
pub use selection::{
    decide_mode, metric_count, min_distance_submatrix, qn_metric, select_max_link, BalancingState, DistanceEnumerator,
    DistanceReport, Mode, SlotDecision,
};

pub type Complex64 = num_complex::Complex<f64>;
pub type Complex32 = num_complex::Complex<f32>;

pub type CMatrixF64 = CMatrix<f64>;
pub type CMatrixF32 = CMatrix<f32>;
pub type ConstellationF64 = Constellation<f64>;
pub type ConstellationF32 = Constellation<f32>;
pub type SymbolVectorSetF64 = SymbolVectorSet<f64>;
pub type SymbolVectorSetF32 = SymbolVectorSet<f32>;
pub type ChannelRealizationF64 = ChannelRealization<f64>;
pub type ChannelRealizationF32 = ChannelRealization<f32>;
pub type DistanceReportF64 = DistanceReport<f64>;
pub type DistanceReportF32 = DistanceReport<f32>;
pub type EngineConfigF64 = EngineConfig<f64>;
pub type EngineConfigF32 = EngineConfig<f32>;
pub type RunMetricsF64 = RunMetrics<f64>;
pub type RunMetricsF32 = RunMetrics<f32>;
