//! Worst-case pairwise error probability.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Gaussian tail Q(x) = ½·erfc(x/√2).
#[inline]
pub fn q_function<T: Real>(x: T) -> T {
    T::lit(0.5) * (x * T::FRAC_1_SQRT_2()).erfc()
}

#[inline]
fn q_argument<T: Real>(d_min: T, energy: T, n0: T, ms: usize) -> T {
    (energy / (T::lit(2.0) * n0 * T::lit(ms as f64)) * d_min).sqrt()
}

/// Q(√(E/(2·N0·M_S)·𝒟′_min)).
pub fn pep_direct<T: Real>(d_min: T, energy: T, n0: T, ms: usize) -> T {
    q_function(q_argument(d_min, energy, n0, ms))
}

/// 1 − (1 − Q(·))², the two-hop approximation.
pub fn pep_cooperative<T: Real>(d_min: T, energy: T, n0: T, ms: usize) -> T {
    let q = pep_direct(d_min, energy, n0, ms);
    T::one() - (T::one() - q) * (T::one() - q)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PepMode {
    Direct,
    Cooperative,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PepSample<T> {
    pub slot: usize,
    /// 𝒟′_min of the matrix used in the slot.
    pub d_min: T,
    pub pep: T,
    pub mode: PepMode,
}

impl<T: Real> PepSample<T> {
    pub fn new(slot: usize, d_min: T, mode: PepMode, energy: T, n0: T, ms: usize) -> Self {
        let pep = match mode {
            PepMode::Direct => pep_direct(d_min, energy, n0, ms),
            PepMode::Cooperative => pep_cooperative(d_min, energy, n0, ms),
        };
        Self { slot, d_min, pep, mode }
    }
}

/// Mean worst-case PEP over a trace, accumulated in f64.
pub fn theoretical_pep<T: Real>(trace: &[PepSample<T>]) -> Result<f64> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    Ok(trace.iter().map(|s| s.pep.as_f64()).sum::<f64>() / trace.len() as f64)
}

/// One averaged point per SNR, in input order.
pub fn theoretical_pep_curve<T: Real>(traces: &[(f64, Vec<PepSample<T>>)]) -> Result<Vec<(f64, f64)>> {
    traces
        .iter()
        .map(|(snr, trace)| Ok((*snr, theoretical_pep(trace)?)))
        .collect()
}
