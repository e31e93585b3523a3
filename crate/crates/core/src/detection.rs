//! Exhaustive maximum-likelihood detection.

use num_complex::Complex;

use crate::channel::SymbolVectorSet;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::Real;

/// Largest candidate set the exhaustive search accepts.
pub const MAX_CANDIDATES: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectionResult<T> {
    /// Index into the [`SymbolVectorSet`]; equals the bit label.
    pub index: usize,
    /// ‖y − √e·Ĥ·x̂‖².
    pub residual: T,
}

/// ML detector with the noiseless receive points √e·Ĥ·x precomputed, for
/// detecting many symbol vectors through the same channel estimate.
#[derive(Clone, Debug)]
pub struct MlDetector<T> {
    rows: usize,
    images: Vec<Complex<T>>,
}

impl<T: Real> MlDetector<T> {
    pub fn new(h_eff: &CMatrix<T>, energy_per_antenna: T, vectors: &SymbolVectorSet<T>) -> Result<Self> {
        check_search_space(vectors.len())?;
        if h_eff.cols() != vectors.ms() {
            return Err(Error::Dimension(format!(
                "channel has {} columns but vectors have {} entries",
                h_eff.cols(),
                vectors.ms()
            )));
        }
        if !(energy_per_antenna > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "energy per antenna must be positive, got {energy_per_antenna}"
            )));
        }
        let rows = h_eff.rows();
        let scaled = h_eff.scale(energy_per_antenna.sqrt());
        let mut images = vec![Complex::new(T::zero(), T::zero()); rows * vectors.len()];
        for (x, out) in vectors.iter().zip(images.chunks_exact_mut(rows.max(1))) {
            scaled.mul_vec_into(x, &mut out[..rows]);
        }
        Ok(Self { rows, images })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn detect(&self, y: &[Complex<T>]) -> Result<DetectionResult<T>> {
        if y.len() != self.rows {
            return Err(Error::Dimension(format!(
                "received vector of length {} for a {}-row channel",
                y.len(),
                self.rows
            )));
        }
        Ok(self.detect_unchecked(y))
    }

    /// Same as [`detect`](Self::detect) without the length check.
    pub fn detect_unchecked(&self, y: &[Complex<T>]) -> DetectionResult<T> {
        let mut best = DetectionResult {
            index: 0,
            residual: T::infinity(),
        };
        if self.rows == 0 {
            best.residual = T::zero();
            return best;
        }
        for (index, image) in self.images.chunks_exact(self.rows).enumerate() {
            let mut residual = T::zero();
            for (a, b) in y.iter().zip(image) {
                residual += (*a - *b).norm_sqr();
            }
            // strict comparison keeps the lowest index on ties
            if residual < best.residual {
                best = DetectionResult { index, residual };
            }
        }
        best
    }
}

fn check_search_space(candidates: usize) -> Result<()> {
    if candidates > MAX_CANDIDATES {
        return Err(Error::SearchSpaceTooLarge {
            candidates,
            cap: MAX_CANDIDATES,
        });
    }
    Ok(())
}

/// argmin over x′ of ‖y − √e·Ĥ·x′‖², ties to the lowest index.
pub fn ml_detect<T: Real>(
    y: &[Complex<T>],
    h_eff: &CMatrix<T>,
    energy_per_antenna: T,
    vectors: &SymbolVectorSet<T>,
) -> Result<DetectionResult<T>> {
    if y.len() != h_eff.rows() {
        return Err(Error::Dimension(format!(
            "received vector of length {} for a {}-row channel",
            y.len(),
            h_eff.rows()
        )));
    }
    MlDetector::new(h_eff, energy_per_antenna, vectors)?.detect(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{enumerate_symbol_vectors, Constellation, ConstellationKind};

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn identity_channel_bpsk() {
        let con = Constellation::new(ConstellationKind::Bpsk);
        let v = enumerate_symbol_vectors(&con, 2).unwrap();
        let h = CMatrix::<f64>::identity(2);
        // E = 2, M_S = 2 -> energy per antenna 1
        let y = [c(0.9), c(-1.1)];
        let r = ml_detect(&y, &h, 1.0, &v).unwrap();
        assert_eq!(r.index, 2);
        assert_eq!(v.get(r.index), &[c(1.0), c(-1.0)]);
        assert!((r.residual - 0.02).abs() < 1e-12);
    }

    #[test]
    fn noiseless_is_exact() {
        let con = Constellation::new(ConstellationKind::Qpsk);
        let v = enumerate_symbol_vectors(&con, 2).unwrap();
        let h = CMatrix::from_rows(&[
            vec![Complex::new(0.3, -1.2), Complex::new(0.8, 0.1)],
            vec![Complex::new(-0.5, 0.4), Complex::new(1.1, 0.9)],
        ])
        .unwrap();
        let det = MlDetector::new(&h, 2.5, &v).unwrap();
        for k in 0..v.len() {
            let y = h.scale(2.5f64.sqrt()).mul_vec(v.get(k)).unwrap();
            let r = det.detect(&y).unwrap();
            assert_eq!(r.index, k);
            assert!(r.residual < 1e-20);
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let con = Constellation::new(ConstellationKind::Bpsk);
        let v = enumerate_symbol_vectors(&con, 1).unwrap();
        let h = CMatrix::<f64>::identity(1);
        let r = ml_detect(&[c(0.0)], &h, 1.0, &v).unwrap();
        assert_eq!(r.index, 0);
    }

    #[test]
    fn dimension_errors() {
        let con = Constellation::new(ConstellationKind::Bpsk);
        let v = enumerate_symbol_vectors(&con, 2).unwrap();
        let h = CMatrix::<f64>::identity(2);
        assert!(matches!(ml_detect(&[c(1.0)], &h, 1.0, &v), Err(Error::Dimension(_))));
        let h3 = CMatrix::<f64>::identity(3);
        assert!(matches!(
            ml_detect(&[c(1.0), c(1.0), c(1.0)], &h3, 1.0, &v),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn search_space_cap() {
        let con = Constellation::<f64>::new(ConstellationKind::Qpsk);
        let v = enumerate_symbol_vectors(&con, 7).unwrap();
        let h = CMatrix::<f64>::identity(7);
        let err = MlDetector::new(&h, 1.0, &v).unwrap_err();
        assert!(matches!(
            err,
            Error::SearchSpaceTooLarge {
                candidates: 16384,
                cap: 4096
            }
        ));
        let v6 = enumerate_symbol_vectors(&con, 6).unwrap();
        assert!(MlDetector::new(&CMatrix::<f64>::identity(6), 1.0, &v6).is_ok());
    }
}
