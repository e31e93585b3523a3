//! Constellations, transmit-vector enumeration and Rayleigh block-fading
//! channel generation with optional imperfect CSI.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstellationKind {
    Bpsk,
    Qpsk,
}

impl FromStr for ConstellationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Self::Bpsk),
            "qpsk" => Ok(Self::Qpsk),
            _ => Err(Error::UnsupportedConstellation(s.to_string())),
        }
    }
}

impl fmt::Display for ConstellationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Bpsk => "bpsk",
            Self::Qpsk => "qpsk",
        })
    }
}

/// Unit-energy symbol alphabet together with its inter-symbol differences.
///
/// Symbol `k` carries the bit label `k` (Gray-mapped for QPSK), so the
/// index of a transmit vector doubles as its bit pattern.
#[derive(Clone, Debug)]
pub struct Constellation<T> {
    kind: ConstellationKind,
    symbols: Vec<Complex<T>>,
    distance_alphabet: Vec<Complex<T>>,
    differences: Vec<Complex<T>>,
}

impl<T: Real> Constellation<T> {
    pub fn new(kind: ConstellationKind) -> Self {
        let one = T::one();
        let zero = T::zero();
        let (symbols, distance_alphabet) = match kind {
            ConstellationKind::Bpsk => (
                vec![Complex::new(-one, zero), Complex::new(one, zero)],
                vec![Complex::new(T::lit(2.0), zero)],
            ),
            ConstellationKind::Qpsk => {
                let a = T::FRAC_1_SQRT_2();
                let r2 = T::SQRT_2();
                (
                    // bits b0 b1 -> ((1 - 2 b0) + j (1 - 2 b1)) / sqrt(2)
                    vec![
                        Complex::new(a, a),
                        Complex::new(a, -a),
                        Complex::new(-a, a),
                        Complex::new(-a, -a),
                    ],
                    vec![Complex::new(r2, zero), Complex::new(zero, r2), Complex::new(r2, r2)],
                )
            }
        };
        let differences = difference_set(&symbols);
        Self {
            kind,
            symbols,
            distance_alphabet,
            differences,
        }
    }

    #[inline]
    pub fn kind(&self) -> ConstellationKind {
        self.kind
    }

    #[inline]
    pub fn symbols(&self) -> &[Complex<T>] {
        &self.symbols
    }

    /// Number of symbols N_s.
    #[inline]
    pub fn order(&self) -> usize {
        self.symbols.len()
    }

    #[inline]
    pub fn bits_per_symbol(&self) -> u32 {
        self.order().trailing_zeros()
    }

    /// Representative inter-symbol distances d_c (one per magnitude class).
    #[inline]
    pub fn distance_alphabet(&self) -> &[Complex<T>] {
        &self.distance_alphabet
    }

    /// W, the number of distinct distance representatives.
    #[inline]
    pub fn w(&self) -> usize {
        self.distance_alphabet.len()
    }

    /// Every distinct nonzero difference `a - b` between two symbols, sign
    /// representatives first, followed by their negatives in the same order.
    #[inline]
    pub fn differences(&self) -> &[Complex<T>] {
        &self.differences
    }

    /// The differences modulo a global sign flip.
    #[inline]
    pub fn sign_representatives(&self) -> &[Complex<T>] {
        &self.differences[..self.differences.len() / 2]
    }

    pub fn average_energy(&self) -> T {
        let total = self.symbols.iter().fold(T::zero(), |acc, s| acc + s.norm_sqr());
        total / T::lit(self.order() as f64)
    }
}

/// Builds a constellation by name; anything other than BPSK/QPSK is refused.
pub fn build_constellation<T: Real>(name: &str) -> Result<Constellation<T>> {
    Ok(Constellation::new(name.parse()?))
}

fn is_sign_representative<T: Real>(z: &Complex<T>) -> bool {
    z.re > T::zero() || (z.re == T::zero() && z.im > T::zero())
}

fn difference_set<T: Real>(symbols: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut reps: Vec<Complex<T>> = Vec::new();
    for a in symbols {
        for b in symbols {
            let d = *a - *b;
            if is_sign_representative(&d) && !reps.contains(&d) {
                reps.push(d);
            }
        }
    }
    let negs: Vec<Complex<T>> = reps.iter().map(|d| -*d).collect();
    reps.extend(negs);
    reps
}

/// All N_s^M_S transmit vectors in lexicographic order (first antenna most
/// significant).
#[derive(Clone, Debug)]
pub struct SymbolVectorSet<T> {
    ms: usize,
    flat: Vec<Complex<T>>,
}

impl<T: Real> SymbolVectorSet<T> {
    #[inline]
    pub fn ms(&self) -> usize {
        self.ms
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.flat.len() / self.ms
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    #[inline]
    pub fn get(&self, index: usize) -> &[Complex<T>] {
        &self.flat[index * self.ms..(index + 1) * self.ms]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[Complex<T>]> {
        self.flat.chunks_exact(self.ms)
    }
}

pub fn enumerate_symbol_vectors<T: Real>(constellation: &Constellation<T>, ms: usize) -> Result<SymbolVectorSet<T>> {
    if ms == 0 {
        return Err(Error::InvalidParameter("M_S must be at least 1".into()));
    }
    let ns = constellation.order();
    let count = ns
        .checked_pow(ms as u32)
        .ok_or_else(|| Error::InvalidParameter(format!("{ns}^{ms} transmit vectors overflow")))?;
    let mut flat = Vec::with_capacity(count * ms);
    for index in 0..count {
        for m in 0..ms {
            let digit = (index / ns.pow((ms - 1 - m) as u32)) % ns;
            flat.push(constellation.symbols()[digit]);
        }
    }
    Ok(SymbolVectorSet { ms, flat })
}

/// Per-link variances of the complex channel coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkVarianceProfile<T> {
    pub sigma2_sr: T,
    pub sigma2_rd: T,
    pub sigma2_sd: T,
}

impl<T: Real> LinkVarianceProfile<T> {
    pub fn new(sigma2_sr: T, sigma2_rd: T, sigma2_sd: T) -> Result<Self> {
        for (name, v) in [("SR", sigma2_sr), ("RD", sigma2_rd), ("SD", sigma2_sd)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} link variance must be positive, got {v}"
                )));
            }
        }
        Ok(Self {
            sigma2_sr,
            sigma2_rd,
            sigma2_sd,
        })
    }

    pub fn unit() -> Self {
        Self {
            sigma2_sr: T::one(),
            sigma2_rd: T::one(),
            sigma2_sd: T::one(),
        }
    }
}

impl<T: Real> Default for LinkVarianceProfile<T> {
    fn default() -> Self {
        Self::unit()
    }
}

/// Channel-estimation error model: error variance β·E^−α on relay links and
/// β·(2E)^−α on the direct link.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CsiModel<T> {
    pub beta: T,
    pub alpha: T,
}

impl<T: Real> CsiModel<T> {
    pub fn new(beta: T, alpha: T) -> Result<Self> {
        if !(beta >= T::zero()) {
            return Err(Error::InvalidParameter(format!("CSI beta must be >= 0, got {beta}")));
        }
        if !(alpha >= T::zero() && alpha <= T::one()) {
            return Err(Error::InvalidParameter(format!(
                "CSI alpha must lie in [0, 1], got {alpha}"
            )));
        }
        Ok(Self { beta, alpha })
    }

    pub fn perfect() -> Self {
        Self {
            beta: T::zero(),
            alpha: T::zero(),
        }
    }

    #[inline]
    pub fn is_perfect(&self) -> bool {
        self.beta == T::zero()
    }

    pub fn cooperative_error_variance(&self, energy: T) -> T {
        self.beta * energy.powf(-self.alpha)
    }

    pub fn direct_error_variance(&self, energy: T) -> T {
        self.beta * (energy + energy).powf(-self.alpha)
    }
}

impl<T: Real> Default for CsiModel<T> {
    fn default() -> Self {
        Self::perfect()
    }
}

/// One time slot's channels: true matrices and the estimates the receivers
/// and the selection logic see.
///
/// Relay matrices are `U·M_S × M_S`, stacking `U` square submatrices.
#[derive(Clone, Debug)]
pub struct ChannelRealization<T> {
    pub ms: usize,
    pub u: usize,
    pub h_sr: Vec<CMatrix<T>>,
    pub h_rd: Vec<CMatrix<T>>,
    pub h_sd: CMatrix<T>,
    pub est_sr: Vec<CMatrix<T>>,
    pub est_rd: Vec<CMatrix<T>>,
    pub est_sd: CMatrix<T>,
}

impl<T: Real> ChannelRealization<T> {
    /// Realization from known matrices with perfect CSI.
    pub fn from_matrices(h_sr: Vec<CMatrix<T>>, h_rd: Vec<CMatrix<T>>, h_sd: CMatrix<T>) -> Result<Self> {
        let ms = h_sd.cols();
        if !h_sd.is_square() {
            return Err(Error::Dimension("SD matrix must be M_S x M_S".into()));
        }
        if h_sr.len() != h_rd.len() {
            return Err(Error::Dimension("SR and RD relay counts differ".into()));
        }
        let u = h_sr.first().map_or(1, |h| h.rows() / ms.max(1));
        for h in h_sr.iter().chain(&h_rd) {
            if h.cols() != ms || h.rows() != u * ms {
                return Err(Error::Dimension(format!(
                    "relay matrix is {}x{}, expected {}x{ms}",
                    h.rows(),
                    h.cols(),
                    u * ms
                )));
            }
        }
        Ok(Self {
            ms,
            u,
            est_sr: h_sr.clone(),
            est_rd: h_rd.clone(),
            est_sd: h_sd.clone(),
            h_sr,
            h_rd,
            h_sd,
        })
    }

    #[inline]
    pub fn relays(&self) -> usize {
        self.h_sr.len()
    }

    /// Square submatrix `sub` (0-based) of a stacked relay matrix.
    pub fn submatrix(&self, h: &CMatrix<T>, sub: usize) -> CMatrix<T> {
        h.row_block(sub * self.ms, self.ms)
            .expect("relay matrices always hold U square blocks")
    }
}

/// Zero-mean circularly-symmetric complex Gaussian with the given variance.
#[inline]
pub fn complex_gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R, variance: T) -> Complex<T> {
    let sd = (variance / T::lit(2.0)).sqrt();
    let re = T::standard_normal(rng);
    let im = T::standard_normal(rng);
    Complex::new(re * sd, im * sd)
}

fn gaussian_matrix<T: Real, R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, variance: T) -> CMatrix<T> {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng, variance))
}

/// Fresh independent Rayleigh draw for all links; estimates equal the truth.
pub fn generate_channels<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    relays: usize,
    ms: usize,
    u: usize,
    profile: &LinkVarianceProfile<T>,
) -> ChannelRealization<T> {
    let mr = u * ms;
    let h_sr: Vec<_> = (0..relays)
        .map(|_| gaussian_matrix(rng, mr, ms, profile.sigma2_sr))
        .collect();
    let h_rd: Vec<_> = (0..relays)
        .map(|_| gaussian_matrix(rng, mr, ms, profile.sigma2_rd))
        .collect();
    let h_sd = gaussian_matrix(rng, ms, ms, profile.sigma2_sd);
    ChannelRealization {
        ms,
        u,
        est_sr: h_sr.clone(),
        est_rd: h_rd.clone(),
        est_sd: h_sd.clone(),
        h_sr,
        h_rd,
        h_sd,
    }
}

fn perturb<T: Real, R: Rng + ?Sized>(rng: &mut R, truth: &CMatrix<T>, variance: T) -> CMatrix<T> {
    let mut est = truth.clone();
    for z in est.as_mut_slice() {
        *z += complex_gaussian(rng, variance);
    }
    est
}

/// Fills the estimated matrices as Ĥ = H + H_e. Perfect CSI leaves Ĥ = H
/// untouched and consumes no randomness.
pub fn apply_csi_error<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    mut realization: ChannelRealization<T>,
    csi: &CsiModel<T>,
    energy: T,
) -> ChannelRealization<T> {
    if csi.is_perfect() {
        return realization;
    }
    let coop = csi.cooperative_error_variance(energy);
    let direct = csi.direct_error_variance(energy);
    realization.est_sr = realization.h_sr.iter().map(|h| perturb(rng, h, coop)).collect();
    realization.est_rd = realization.h_rd.iter().map(|h| perturb(rng, h, coop)).collect();
    realization.est_sd = perturb(rng, &realization.h_sd, direct);
    realization
}

/// Complex AWGN vector with variance `n0` per entry (`n0 / 2` per real part).
pub fn awgn<T: Real, R: Rng + ?Sized>(rng: &mut R, dimension: usize, n0: T) -> Vec<Complex<T>> {
    (0..dimension).map(|_| complex_gaussian(rng, n0)).collect()
}

/// Adds AWGN in place.
#[inline]
pub fn add_awgn<T: Real, R: Rng + ?Sized>(rng: &mut R, signal: &mut [Complex<T>], n0: T) {
    for s in signal {
        *s += complex_gaussian(rng, n0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    fn variance(samples: &[Complex<f64>]) -> f64 {
        samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / samples.len() as f64
    }

    #[test]
    fn bpsk_alphabet() {
        let c = Constellation::<f64>::new(ConstellationKind::Bpsk);
        assert_eq!(c.symbols(), &[Complex::new(-1.0, 0.0), Complex::new(1.0, 0.0)]);
        assert_eq!(c.w(), 1);
        assert_eq!(c.distance_alphabet(), &[Complex::new(2.0, 0.0)]);
        assert_eq!(c.sign_representatives(), &[Complex::new(2.0, 0.0)]);
        assert_eq!(c.differences(), &[Complex::new(2.0, 0.0), Complex::new(-2.0, 0.0)]);
    }

    #[test]
    fn qpsk_alphabet() {
        let c = Constellation::<f64>::new(ConstellationKind::Qpsk);
        let r2 = std::f64::consts::SQRT_2;
        assert_eq!(c.w(), 3);
        assert_eq!(
            c.distance_alphabet(),
            &[Complex::new(r2, 0.0), Complex::new(0.0, r2), Complex::new(r2, r2)]
        );
        assert!((c.average_energy() - 1.0).abs() < 1e-15);
        // every listed representative appears among the actual differences
        for d in c.distance_alphabet() {
            assert!(c.differences().iter().any(|x| (x - d).norm() < 1e-12));
        }
        // 8 nonzero differences: two magnitude classes under 4 rotations
        assert_eq!(c.differences().len(), 8);
        assert_eq!(c.sign_representatives().len(), 4);
    }

    #[test]
    fn unsupported_constellation() {
        let err = build_constellation::<f64>("16qam").unwrap_err();
        assert!(matches!(err, Error::UnsupportedConstellation(_)));
        assert!(err.to_string().contains("unsupported"));
    }

    #[test]
    fn bpsk_vectors_lexicographic() {
        let c = Constellation::<f64>::new(ConstellationKind::Bpsk);
        let v = enumerate_symbol_vectors(&c, 2).unwrap();
        let got: Vec<Vec<f64>> = v.iter().map(|x| x.iter().map(|z| z.re).collect()).collect();
        assert_eq!(
            got,
            vec![vec![-1.0, -1.0], vec![-1.0, 1.0], vec![1.0, -1.0], vec![1.0, 1.0]]
        );
        let one = enumerate_symbol_vectors(&c, 1).unwrap();
        assert_eq!(one.len(), 2);
        assert_eq!(one.get(0)[0].re, -1.0);
        assert_eq!(one.get(1)[0].re, 1.0);
    }

    #[test]
    fn qpsk_vector_count() {
        let c = Constellation::<f64>::new(ConstellationKind::Qpsk);
        let v = enumerate_symbol_vectors(&c, 2).unwrap();
        assert_eq!(v.len(), 16);
        let mut seen: Vec<&[Complex<f64>]> = v.iter().collect();
        seen.dedup();
        assert_eq!(seen.len(), 16);
        assert!(enumerate_symbol_vectors(&c, 0).is_err());
    }

    #[test]
    fn sd_variance_unit_and_low_power() {
        let mut r = rng();
        for (s2, tol) in [(1.0, 0.02), (0.2, 0.01)] {
            let profile = LinkVarianceProfile::new(1.0, 1.0, s2).unwrap();
            let mut samples = Vec::new();
            while samples.len() < 100_000 {
                let ch = generate_channels(&mut r, 0, 2, 1, &profile);
                samples.extend_from_slice(ch.h_sd.as_slice());
            }
            assert!((variance(&samples) - s2).abs() < tol, "σ²={s2}");
        }
    }

    #[test]
    fn no_relays_only_direct() {
        let ch = generate_channels::<f64, _>(&mut rng(), 0, 2, 1, &LinkVarianceProfile::unit());
        assert!(ch.h_sr.is_empty() && ch.h_rd.is_empty());
        assert_eq!((ch.h_sd.rows(), ch.h_sd.cols()), (2, 2));
    }

    #[test]
    fn relay_matrices_are_stacked_squares() {
        let ch = generate_channels::<f64, _>(&mut rng(), 3, 2, 4, &LinkVarianceProfile::unit());
        for h in ch.h_sr.iter().chain(&ch.h_rd) {
            assert_eq!((h.rows(), h.cols()), (8, 2));
            let blocks: Vec<_> = (0..4).map(|b| ch.submatrix(h, b)).collect();
            assert_eq!(&CMatrix::vstack(&blocks).unwrap(), h);
        }
    }

    #[test]
    fn perfect_csi_is_bit_exact() {
        let mut r = rng();
        let ch = generate_channels::<f64, _>(&mut r, 2, 2, 1, &LinkVarianceProfile::unit());
        let est = apply_csi_error(&mut r, ch.clone(), &CsiModel::perfect(), 10.0);
        assert_eq!(est.est_sr, ch.h_sr);
        assert_eq!(est.est_rd, ch.h_rd);
        assert_eq!(est.est_sd, ch.h_sd);
    }

    #[test]
    fn csi_error_variances() {
        let mut r = rng();
        let csi = CsiModel::new(1.0, 0.8).unwrap();
        let mut sr = Vec::new();
        let mut sd = Vec::new();
        while sr.len() < 100_000 {
            let ch = generate_channels::<f64, _>(&mut r, 1, 2, 1, &LinkVarianceProfile::unit());
            let ch = apply_csi_error(&mut r, ch, &csi, 10.0);
            for (e, h) in ch.est_sr[0].as_slice().iter().zip(ch.h_sr[0].as_slice()) {
                sr.push(e - h);
            }
            for (e, h) in ch.est_sd.as_slice().iter().zip(ch.h_sd.as_slice()) {
                sd.push(e - h);
            }
        }
        // 10^-0.8 and 20^-0.8
        assert!((variance(&sr) - 0.158_489_319).abs() < 0.158_489_319 * 0.03);
        assert!((variance(&sd) - 0.090_961_9).abs() < 0.090_961_9 * 0.03);
    }

    #[test]
    fn awgn_statistics() {
        let mut r = rng();
        let n = awgn::<f64, _>(&mut r, 100_000, 1.0);
        let len = n.len() as f64;
        let var_re = n.iter().map(|z| z.re * z.re).sum::<f64>() / len;
        let var_im = n.iter().map(|z| z.im * z.im).sum::<f64>() / len;
        let mean = n.iter().sum::<Complex<f64>>() / len;
        assert!((variance(&n) - 1.0).abs() < 0.02);
        assert!((var_re - 0.5).abs() < 0.02);
        assert!((var_im - 0.5).abs() < 0.02);
        assert!(mean.norm() < 0.02);
    }

    #[test]
    fn invalid_profiles_and_csi() {
        assert!(LinkVarianceProfile::new(1.0, 0.0, 1.0).is_err());
        assert!(CsiModel::new(-1.0, 0.5).is_err());
        assert!(CsiModel::new(1.0, 1.5).is_err());
        assert!(CsiModel::<f64>::perfect().is_perfect());
    }
}
