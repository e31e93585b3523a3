//! MMD and QN link metrics, Max-Link candidate ranking and the per-slot
//! mode decision.

use std::cmp::Ordering;

use num_complex::Complex;

use crate::channel::{ChannelRealization, Constellation};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::Real;

/// Precomputed difference vectors Δ = x_l − x_n covering every distinct
/// pair of transmit vectors up to a global sign.
///
/// Terms are grouped by support size: for `i` nonzero positions the first
/// one takes a sign representative and the rest take any difference, which
/// is the ± structure of the per-column, per-pair and all-column metrics.
#[derive(Clone, Debug)]
pub struct DistanceEnumerator<T> {
    ms: usize,
    deltas: Vec<Complex<T>>,
}

impl<T: Real> DistanceEnumerator<T> {
    pub fn new(constellation: &Constellation<T>, ms: usize) -> Result<Self> {
        if ms == 0 {
            return Err(Error::InvalidParameter("M_S must be at least 1".into()));
        }
        let reps = constellation.sign_representatives();
        let all = constellation.differences();
        let zero = Complex::new(T::zero(), T::zero());
        let mut deltas = Vec::new();
        for size in 1..=ms {
            let tail = all.len().pow(size as u32 - 1);
            for support in combinations(ms, size) {
                for t in 0..reps.len() * tail {
                    let mut delta = vec![zero; ms];
                    delta[support[0]] = reps[t / tail];
                    let mut rest = t % tail;
                    for &pos in support[1..].iter().rev() {
                        delta[pos] = all[rest % all.len()];
                        rest /= all.len();
                    }
                    deltas.extend(delta);
                }
            }
        }
        Ok(Self { ms, deltas })
    }

    #[inline]
    pub fn ms(&self) -> usize {
        self.ms
    }

    /// Number of enumerated difference vectors.
    #[inline]
    pub fn len(&self) -> usize {
        self.deltas.len() / self.ms
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn deltas(&self) -> impl Iterator<Item = &[Complex<T>]> {
        self.deltas.chunks_exact(self.ms)
    }

    fn check(&self, h: &CMatrix<T>) -> Result<()> {
        if !h.is_square() || h.cols() != self.ms {
            return Err(Error::Dimension(format!(
                "metric needs a {0}x{0} submatrix, got {1}x{2}",
                self.ms,
                h.rows(),
                h.cols()
            )));
        }
        Ok(())
    }

    /// All ‖HΔ‖² in enumeration order.
    pub fn distances(&self, h: &CMatrix<T>) -> Result<Vec<T>> {
        self.check(h)?;
        Ok(self.deltas().map(|d| h.image_norm_sqr(d)).collect())
    }

    /// min over Δ of ‖HΔ‖².
    pub fn min_distance(&self, h: &CMatrix<T>) -> Result<T> {
        self.check(h)?;
        Ok(self.min_distance_unchecked(h))
    }

    #[inline]
    pub(crate) fn min_distance_unchecked(&self, h: &CMatrix<T>) -> T {
        self.deltas()
            .map(|d| h.image_norm_sqr(d))
            .fold(T::infinity(), |a, b| if b < a { b } else { a })
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..n {
            current.push(i);
            rec(i + 1, n, k, current, out);
            current.pop();
        }
    }
    rec(0, n, k, &mut current, &mut out);
    out
}

/// 𝒟′_min of a square submatrix together with every enumerated 𝒟′ term.
pub fn min_distance_submatrix<T: Real>(h: &CMatrix<T>, constellation: &Constellation<T>) -> Result<(T, Vec<T>)> {
    if !h.is_square() {
        return Err(Error::Dimension(format!(
            "metric needs a square submatrix, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    let all = DistanceEnumerator::new(constellation, h.cols())?.distances(h)?;
    let min = all
        .iter()
        .copied()
        .fold(T::infinity(), |a, b| if b < a { b } else { a });
    Ok((min, all))
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// 𝒳 = Σ_{i=1}^{M_S} 2^{i−1} W^i C(M_S, i).
pub fn metric_count(ms: u32, w: u32) -> u64 {
    (1..=ms as u64)
        .map(|i| (1u64 << (i - 1)) * (w as u64).pow(i as u32) * binomial(ms as u64, i))
        .sum()
}

/// Quadratic-norm metric 𝒬: squared Frobenius norm.
#[inline]
pub fn qn_metric<T: Real>(h: &CMatrix<T>) -> T {
    h.frobenius_sqr()
}

/// Per-slot MMD distances on the 𝒟′ scale.
///
/// SR and RD values carry the common E/M_S factor; `sd_min` is 2‖H_SD Δ‖²
/// so the doubled DT energy is already folded in and G is a plain ratio.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceReport<T> {
    /// `[relay][u]` 𝒟′_min of each SR submatrix.
    pub sr_sub: Vec<Vec<T>>,
    /// min over u of `sr_sub`.
    pub sr_min: Vec<T>,
    /// `sr_min` scaled by the balancing ratio.
    pub sr_balanced: Vec<T>,
    /// `[relay][u]` 𝒟′_min of each RD submatrix.
    pub rd_sub: Vec<Vec<T>>,
    /// (max over u, u*) per relay.
    pub rd_best: Vec<(T, usize)>,
    pub sd_min: T,
}

impl<T: Real> DistanceReport<T> {
    /// Computes all metrics on the estimated channels of `realization`.
    pub fn compute(
        realization: &ChannelRealization<T>,
        enumerator: &DistanceEnumerator<T>,
        balancing: &BalancingState<T>,
    ) -> Result<Self> {
        let ms = realization.ms;
        if enumerator.ms() != ms {
            return Err(Error::Dimension(format!(
                "enumerator built for M_S={} used with M_S={ms}",
                enumerator.ms()
            )));
        }
        let per_sub = |h: &CMatrix<T>| -> Result<Vec<T>> {
            h.split_rows(ms)?.iter().map(|b| enumerator.min_distance(b)).collect()
        };
        let sr_sub: Vec<Vec<T>> = realization.est_sr.iter().map(per_sub).collect::<Result<_>>()?;
        let rd_sub: Vec<Vec<T>> = realization.est_rd.iter().map(per_sub).collect::<Result<_>>()?;
        let sr_min: Vec<T> = sr_sub.iter().map(|v| min_of(v)).collect();
        let ratio = balancing.ratio();
        let sr_balanced = sr_min.iter().map(|&d| d * ratio).collect();
        let rd_best = rd_sub.iter().map(|v| argmax(v)).collect();
        let sd_min = T::lit(2.0) * enumerator.min_distance(&realization.est_sd)?;
        Ok(Self {
            sr_sub,
            sr_min,
            sr_balanced,
            rd_sub,
            rd_best,
            sd_min,
        })
    }
}

fn min_of<T: Real>(v: &[T]) -> T {
    v.iter().copied().fold(T::infinity(), |a, b| if b < a { b } else { a })
}

/// Largest value and its first index.
pub(crate) fn argmax<T: Real>(v: &[T]) -> (T, usize) {
    let mut best = (T::neg_infinity(), 0);
    for (i, &x) in v.iter().enumerate() {
        if x > best.0 {
            best = (x, i);
        }
    }
    best
}

/// Running means of the SR and RD minimum distances used to rescale SR
/// metrics so both link types are picked equally often.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BalancingState<T> {
    sum_sr: T,
    count_sr: u64,
    sum_rd: T,
    count_rd: u64,
    frozen: Option<T>,
}

impl<T: Real> BalancingState<T> {
    pub fn new() -> Self {
        Self {
            sum_sr: T::zero(),
            count_sr: 0,
            sum_rd: T::zero(),
            count_rd: 0,
            frozen: None,
        }
    }

    /// A state whose ratio never changes.
    pub fn fixed(ratio: T) -> Self {
        Self {
            frozen: Some(ratio),
            ..Self::new()
        }
    }

    pub fn mean_sr(&self) -> Option<T> {
        (self.count_sr > 0).then(|| self.sum_sr / T::lit(self.count_sr as f64))
    }

    pub fn mean_rd(&self) -> Option<T> {
        (self.count_rd > 0).then(|| self.sum_rd / T::lit(self.count_rd as f64))
    }

    pub fn samples(&self) -> (u64, u64) {
        (self.count_sr, self.count_rd)
    }

    /// m_RD / m_SR, or 1 until both means exist and m_SR is positive.
    pub fn ratio(&self) -> T {
        if let Some(r) = self.frozen {
            return r;
        }
        match (self.mean_sr(), self.mean_rd()) {
            (Some(sr), Some(rd)) if sr > T::zero() => rd / sr,
            _ => T::one(),
        }
    }

    pub fn balance(&self, sr_distance: T) -> T {
        sr_distance * self.ratio()
    }

    pub fn update(&mut self, sr_samples: &[T], rd_samples: &[T]) {
        if self.frozen.is_some() {
            return;
        }
        for &s in sr_samples {
            self.sum_sr += s;
        }
        for &s in rd_samples {
            self.sum_rd += s;
        }
        self.count_sr += sr_samples.len() as u64;
        self.count_rd += rd_samples.len() as u64;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LinkKind {
    Sr,
    Rd,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Candidate<T> {
    pub link: LinkKind,
    pub relay: usize,
    /// Transmit submatrix for RD; 0 for SR.
    pub u: usize,
    pub value: T,
}

/// Buffer occupancy as seen by the selection logic.
#[derive(Clone, Copy, Debug)]
pub struct BufferView<'a> {
    pub occupancy: &'a [usize],
    pub capacity: usize,
    pub source_has_packets: bool,
}

impl BufferView<'_> {
    pub fn feasible(&self, link: LinkKind, relay: usize) -> bool {
        match link {
            LinkKind::Sr => self.source_has_packets && self.occupancy[relay] < self.capacity,
            LinkKind::Rd => self.occupancy[relay] > 0,
        }
    }
}

/// All 2N candidates sorted by decreasing value; ties go SR first, then by
/// relay index.
pub fn rank_candidates<T: Real>(sr: &[T], rd: &[(T, usize)]) -> Vec<Candidate<T>> {
    let mut all: Vec<Candidate<T>> = sr
        .iter()
        .enumerate()
        .map(|(relay, &value)| Candidate {
            link: LinkKind::Sr,
            relay,
            u: 0,
            value,
        })
        .chain(rd.iter().enumerate().map(|(relay, &(value, u))| Candidate {
            link: LinkKind::Rd,
            relay,
            u,
            value,
        }))
        .collect();
    all.sort_by(|a, b| {
        b.value
            .partial_cmp(&a.value)
            .unwrap_or(Ordering::Equal)
            .then(a.link.cmp(&b.link))
            .then(a.relay.cmp(&b.relay))
    });
    all
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxLinkSelection<T> {
    pub ranking: Vec<Candidate<T>>,
    /// Position of the winner in `ranking`.
    pub winner_rank: usize,
}

impl<T: Real> MaxLinkSelection<T> {
    pub fn winner(&self) -> &Candidate<T> {
        &self.ranking[self.winner_rank]
    }

    /// The unconstrained maximum over all candidates.
    pub fn maxmin(&self) -> T {
        self.ranking[0].value
    }
}

/// Highest-ranked candidate whose buffer constraint holds.
pub fn select_from_ranking<T: Real>(
    ranking: Vec<Candidate<T>>,
    buffers: &BufferView<'_>,
) -> Result<MaxLinkSelection<T>> {
    let winner_rank = ranking
        .iter()
        .position(|c| buffers.feasible(c.link, c.relay))
        .ok_or(Error::NoFeasibleCandidate)?;
    Ok(MaxLinkSelection { ranking, winner_rank })
}

/// MMD Max-Link selection over the balanced SR and best-submatrix RD
/// distances of `report`.
pub fn select_max_link<T: Real>(report: &DistanceReport<T>, buffers: &BufferView<'_>) -> Result<MaxLinkSelection<T>> {
    select_from_ranking(rank_candidates(&report.sr_balanced, &report.rd_best), buffers)
}

/// Transmission mode of one slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    MaxLinkSr,
    MaxLinkRd,
    Direct,
    /// Nothing is transmitted (rate-threshold baseline only).
    Outage,
}

impl Mode {
    pub fn is_cooperative(self) -> bool {
        matches!(self, Self::MaxLinkSr | Self::MaxLinkRd)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlotDecision<T> {
    pub mode: Mode,
    pub relay: Option<usize>,
    pub u: Option<usize>,
    /// Value of the winning Max-Link candidate (NaN when there is none).
    pub metric: T,
    /// 𝒟_maxmin / 𝒟_min,SD (NaN when undefined).
    pub g: T,
}

impl<T: Real> SlotDecision<T> {
    pub fn direct(g: T) -> Self {
        Self {
            mode: Mode::Direct,
            relay: None,
            u: None,
            metric: T::nan(),
            g,
        }
    }

    pub fn from_candidate(c: &Candidate<T>, g: T) -> Self {
        match c.link {
            LinkKind::Sr => Self {
                mode: Mode::MaxLinkSr,
                relay: Some(c.relay),
                u: None,
                metric: c.value,
                g,
            },
            LinkKind::Rd => Self {
                mode: Mode::MaxLinkRd,
                relay: Some(c.relay),
                u: Some(c.u),
                metric: c.value,
                g,
            },
        }
    }
}

/// Switch between the Max-Link winner and direct transmission.
///
/// SR wins when G > 𝒮, RD when G > min(𝒮, 1); otherwise DT. DT needs a
/// packet at the source, so once the source is drained the Max-Link
/// winner is used regardless of G.
pub fn decide_mode<T: Real>(
    winner: Option<&Candidate<T>>,
    d_sd: T,
    switch: T,
    source_has_packets: bool,
) -> Result<SlotDecision<T>> {
    let Some(w) = winner else {
        if d_sd == T::zero() {
            return Err(Error::DegenerateSlot);
        }
        if !source_has_packets {
            return Err(Error::NoFeasibleCandidate);
        }
        return Ok(SlotDecision::direct(T::nan()));
    };
    let g = if d_sd == T::zero() {
        T::infinity()
    } else {
        w.value / d_sd
    };
    let threshold = match w.link {
        LinkKind::Sr => switch,
        LinkKind::Rd => switch.min(T::one()),
    };
    if g > threshold || !source_has_packets {
        Ok(SlotDecision::from_candidate(w, g))
    } else {
        Ok(SlotDecision::direct(g))
    }
}
