//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use maxlink::{enumerate_symbol_vectors, CMatrix, Complex64, Constellation};
use rand::Rng;

/// Minimum ‖H(x_l − x_n)‖² over every unordered pair of distinct symbol
/// vectors, plus the number of pairs visited.
pub fn brute_force_min_distance(h: &CMatrix<f64>, c: &Constellation<f64>) -> (f64, usize) {
    let vectors = enumerate_symbol_vectors(c, h.cols()).unwrap();
    let all: Vec<Vec<Complex64>> = vectors.iter().map(|v| v.to_vec()).collect();
    let mut best = f64::INFINITY;
    let mut pairs = 0;
    for l in 0..all.len() {
        for n in l + 1..all.len() {
            pairs += 1;
            let mut d = 0.0;
            for r in 0..h.rows() {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..h.cols() {
                    acc += h.row(r)[k] * (all[l][k] - all[n][k]);
                }
                d += acc.norm_sqr();
            }
            best = best.min(d);
        }
    }
    (best, pairs)
}

/// Index of the symbol vector closest to `y` after scaling by √e·H.
pub fn brute_force_ml(y: &[Complex64], h: &CMatrix<f64>, e: f64, c: &Constellation<f64>) -> (usize, f64) {
    let vectors = enumerate_symbol_vectors(c, h.cols()).unwrap();
    let mut best = (0, f64::INFINITY);
    for (i, x) in vectors.iter().enumerate() {
        let mut r = 0.0;
        for row in 0..h.rows() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..h.cols() {
                acc += h.row(row)[k] * x[k];
            }
            r += (y[row] - acc * e.sqrt()).norm_sqr();
        }
        if r < best.1 {
            best = (i, r);
        }
    }
    best
}

/// Gaussian tail by composite Simpson integration of the density on [x, x+12].
pub fn q_oracle(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - q_oracle(-x);
    }
    let n = 20_000;
    let h = 12.0 / n as f64;
    let f = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = f(x) + f(x + 12.0);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(x + k as f64 * h);
    }
    s * h / 3.0
}

/// BPSK over flat Rayleigh fading with mean per-bit SNR `gamma`.
pub fn rayleigh_bpsk_ber(gamma: f64) -> f64 {
    0.5 * (1.0 - (gamma / (1.0 + gamma)).sqrt())
}

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix<f64> {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0)
    })
}

pub fn real(rows: &[&[f64]]) -> CMatrix<f64> {
    CMatrix::from_real_rows(rows).unwrap()
}

/// Largest index by `key`, first one on ties.
pub fn argmax_by(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Two-sided 97.5% Student-t quantiles for 1..=30 degrees of freedom.
pub fn t975(dof: usize) -> f64 {
    const T: [f64; 30] = [
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160, 2.145, 2.131,
        2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
    ];
    T[dof.clamp(1, 30) - 1]
}

/// Upper end of a paired 95% interval on mean(a − b).
pub fn paired_upper(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    mean + t975(d.len() - 1) * (var / n).sqrt()
}
