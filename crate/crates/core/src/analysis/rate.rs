//! Per-slot mutual information and the weighted sum-rate aggregate.

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::Real;
use crate::selection::Mode;

/// Input covariance scalars: Q_SR = Q_RD = E/M_S·I, Q_SD = 2E/M_S·I.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateParams<T> {
    pub energy: T,
    pub n0: T,
    pub ms: usize,
}

impl<T: Real> RateParams<T> {
    pub fn new(energy: T, n0: T, ms: usize) -> Result<Self> {
        if !(energy > T::zero() && n0 > T::zero()) || ms == 0 {
            return Err(Error::InvalidParameter(format!(
                "rate parameters need E > 0, N0 > 0, M_S >= 1 (got {energy}, {n0}, {ms})"
            )));
        }
        Ok(Self { energy, n0, ms })
    }

    pub fn cooperative_snr(&self) -> T {
        self.energy / (T::lit(self.ms as f64) * self.n0)
    }

    pub fn direct_snr(&self) -> T {
        T::lit(2.0) * self.cooperative_snr()
    }
}

/// log2 det(I + snr·H·Hᴴ) with the ½ two-hop prelog on relay links.
pub fn sum_rate_slot<T: Real>(mode: Mode, h: &CMatrix<T>, params: &RateParams<T>) -> Result<T> {
    let ms = params.ms;
    let ok = match mode {
        Mode::MaxLinkSr => h.cols() == ms && h.rows() > 0 && h.rows() % ms == 0,
        Mode::MaxLinkRd | Mode::Direct => h.cols() == ms && h.rows() == ms,
        Mode::Outage => true,
    };
    if !ok {
        return Err(Error::Dimension(format!(
            "{}x{} matrix does not fit a {mode:?} slot with M_S={ms}",
            h.rows(),
            h.cols()
        )));
    }
    match mode {
        Mode::MaxLinkSr | Mode::MaxLinkRd => Ok(T::lit(0.5) * h.log2_det_identity_plus_gram(params.cooperative_snr())?),
        Mode::Direct => h.log2_det_identity_plus_gram(params.direct_snr()),
        Mode::Outage => Ok(T::zero()),
    }
}

/// Single-link mutual information without the two-hop prelog, used for
/// outage tests.
pub fn link_mutual_information<T: Real>(h: &CMatrix<T>, snr: T) -> Result<T> {
    h.log2_det_identity_plus_gram(snr)
}

/// (Σ𝓡_SR + Σ𝓡_RD + 2Σ𝓡_SD) / (n_SR + n_RD + 2·n_SD).
pub fn sum_rate_aggregate<T: Real>(sr: &[T], rd: &[T], sd: &[T]) -> Result<T> {
    let denom = sr.len() + rd.len() + 2 * sd.len();
    if denom == 0 {
        return Err(Error::ZeroSlots);
    }
    let sum = |v: &[T]| v.iter().fold(T::zero(), |a, &b| a + b);
    Ok((sum(sr) + sum(rd) + T::lit(2.0) * sum(sd)) / T::lit(denom as f64))
}
