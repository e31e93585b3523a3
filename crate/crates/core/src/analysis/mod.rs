//! Worst-case PEP, sum-rate, complexity counts and the DTMC queue model.

pub mod complexity;
pub mod dtmc;
pub mod estimator;
pub mod pep;
pub mod rate;

pub use complexity::{complexity_report, ComplexityReport};
pub use dtmc::{
    dtmc_build, fixed_point_residual, is_irreducible, outage_throughput_delay, stationary_distribution, switch_prime,
    DtmcMetrics, DtmcModel, DtmcState, Move, StateSpace, SwitchedParams, TransitionEstimator, DEFAULT_STATE_CAP,
};
pub use estimator::{SelectionRuleEstimator, DEFAULT_DRAWS_PER_STATE};
pub use pep::{pep_cooperative, pep_direct, q_function, theoretical_pep, theoretical_pep_curve, PepMode, PepSample};
pub use rate::{link_mutual_information, sum_rate_aggregate, sum_rate_slot, RateParams};
