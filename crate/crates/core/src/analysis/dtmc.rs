//! Buffer-state Markov chain: construction, stationary distribution and the
//! outage / throughput / delay figures derived from it.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const DEFAULT_STATE_CAP: usize = 100_000;

/// Above this many states the stationary distribution is found by power
/// iteration instead of a dense solve.
const DENSE_LIMIT: usize = 1024;
const POWER_ITERATION_CAP: usize = 1_000_000;
const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// States (𝓔_d, B_1..B_N) in mixed radix: 𝓔_d most significant, then B_1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StateSpace {
    pub relays: usize,
    /// Buffer capacity L in packet-sets.
    pub capacity: usize,
    /// 1 without a direct mode, 2 with the 𝓔_d toggle.
    pub z: usize,
}

impl StateSpace {
    pub fn new(relays: usize, capacity: usize, z: usize, cap: usize) -> Result<Self> {
        if !(z == 1 || z == 2) {
            return Err(Error::InvalidParameter(format!("Z must be 1 or 2, got {z}")));
        }
        let count = (capacity + 1)
            .checked_pow(relays as u32)
            .and_then(|c| c.checked_mul(z))
            .unwrap_or(usize::MAX);
        if count > cap {
            return Err(Error::StateSpaceTooLarge { states: count, cap });
        }
        Ok(Self { relays, capacity, z })
    }

    pub fn buffer_states(&self) -> usize {
        (self.capacity + 1).pow(self.relays as u32)
    }

    pub fn len(&self) -> usize {
        self.z * self.buffer_states()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn decode(&self, index: usize) -> DtmcState {
        let base = self.capacity + 1;
        let mut rest = index % self.buffer_states();
        let mut buffers = vec![0; self.relays];
        for b in buffers.iter_mut().rev() {
            *b = rest % base;
            rest /= base;
        }
        DtmcState {
            index,
            ed: index / self.buffer_states(),
            buffers,
        }
    }

    pub fn encode(&self, ed: usize, buffers: &[usize]) -> usize {
        let base = self.capacity + 1;
        ed * self.buffer_states() + buffers.iter().fold(0, |acc, &b| acc * base + b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DtmcState {
    pub index: usize,
    pub ed: usize,
    pub buffers: Vec<usize>,
}

/// What one slot does to the state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Move {
    /// SR success into relay n.
    Fill(usize),
    /// RD success out of relay n.
    Drain(usize),
    /// Direct delivery, toggling 𝓔_d.
    Direct,
    /// Outage; the state is unchanged.
    Stay,
}

/// Supplies each state's outgoing move probabilities.
pub trait TransitionEstimator: Sync {
    fn outgoing(&self, state: &DtmcState, space: &StateSpace) -> Result<Vec<(Move, f64)>>;
}

impl<F> TransitionEstimator for F
where
    F: Fn(&DtmcState) -> Result<Vec<(Move, f64)>> + Sync,
{
    fn outgoing(&self, state: &DtmcState, _space: &StateSpace) -> Result<Vec<(Move, f64)>> {
        self(state)
    }
}

/// Row-stochastic sparse chain: `rows[i]` lists (j, P(i → j)).
#[derive(Clone, Debug)]
pub struct DtmcModel {
    pub space: StateSpace,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl DtmcModel {
    /// Builds a chain from explicit sparse rows, checking stochasticity.
    pub fn from_rows(space: StateSpace, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        if rows.len() != space.len() {
            return Err(Error::Dimension(format!(
                "{} rows for {} states",
                rows.len(),
                space.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            check_row(i, row, space.len())?;
        }
        Ok(Self { space, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// P(i → j).
    pub fn probability(&self, i: usize, j: usize) -> f64 {
        self.rows[i].iter().filter(|e| e.0 == j).map(|e| e.1).sum()
    }

    /// Self-loop (outage) probability p̄_i.
    pub fn self_loop(&self, i: usize) -> f64 {
        self.probability(i, i)
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.rows[i].iter().map(|e| e.1).sum()
    }

    /// Dense matrix with `a[i][j] = P(i → j)`.
    pub fn dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut a = vec![vec![0.0; n]; n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, p) in row {
                a[i][j] += p;
            }
        }
        a
    }

    /// π·A as a vector.
    pub fn left_multiply(&self, pi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, p) in row {
                out[j] += pi[i] * p;
            }
        }
        out
    }
}

fn check_row(state: usize, row: &[(usize, f64)], n: usize) -> Result<()> {
    let mut sum = 0.0;
    for &(j, p) in row {
        if j >= n {
            return Err(Error::InvalidTransition {
                state,
                reason: format!("target {j} out of range"),
            });
        }
        if !(p >= 0.0) {
            return Err(Error::InvalidTransition {
                state,
                reason: format!("negative probability {p}"),
            });
        }
        sum += p;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidTransition {
            state,
            reason: format!("outgoing probabilities sum to {sum}"),
        });
    }
    Ok(())
}

fn apply(space: &StateSpace, state: &DtmcState, mv: Move) -> Result<usize> {
    let invalid = |reason: String| Error::InvalidTransition {
        state: state.index,
        reason,
    };
    let mut b = state.buffers.clone();
    let mut ed = state.ed;
    match mv {
        Move::Fill(n) => {
            if n >= space.relays || b[n] >= space.capacity {
                return Err(invalid(format!("cannot fill relay {n}")));
            }
            b[n] += 1;
        }
        Move::Drain(n) => {
            if n >= space.relays || b[n] == 0 {
                return Err(invalid(format!("cannot drain relay {n}")));
            }
            b[n] -= 1;
        }
        Move::Direct => {
            if space.z != 2 {
                return Err(invalid("direct move in a chain without the direct toggle".into()));
            }
            ed = 1 - ed;
        }
        Move::Stay => {}
    }
    Ok(space.encode(ed, &b))
}

/// Builds the chain by asking `estimator` for every state's moves (in
/// parallel) and mapping them onto target states.
pub fn dtmc_build<E: TransitionEstimator + ?Sized>(
    relays: usize,
    capacity: usize,
    z: usize,
    estimator: &E,
    state_cap: usize,
) -> Result<DtmcModel> {
    let space = StateSpace::new(relays, capacity, z, state_cap)?;
    let rows = (0..space.len())
        .into_par_iter()
        .map(|i| {
            let state = space.decode(i);
            let moves = estimator.outgoing(&state, &space)?;
            let mut row: Vec<(usize, f64)> = Vec::with_capacity(moves.len());
            for (mv, p) in moves {
                if p == 0.0 {
                    continue;
                }
                let j = apply(&space, &state, mv)?;
                match row.iter_mut().find(|e| e.0 == j) {
                    Some(e) => e.1 += p,
                    None => row.push((j, p)),
                }
            }
            row.sort_by_key(|e| e.0);
            check_row(i, &row, space.len())?;
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DtmcModel { space, rows })
}

fn reaches_all(n: usize, adjacency: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = queue.pop_front() {
        for &j in &adjacency[i] {
            if !seen[j] {
                seen[j] = true;
                count += 1;
                queue.push_back(j);
            }
        }
    }
    count == n
}

pub fn is_irreducible(model: &DtmcModel) -> bool {
    let n = model.len();
    if n == 0 {
        return false;
    }
    let mut forward = vec![Vec::new(); n];
    let mut backward = vec![Vec::new(); n];
    for (i, row) in model.rows.iter().enumerate() {
        for &(j, p) in row {
            if p > 0.0 && i != j {
                forward[i].push(j);
                backward[j].push(i);
            }
        }
    }
    n == 1 || (reaches_all(n, &forward) && reaches_all(n, &backward))
}

/// ‖π·A − π‖∞.
pub fn fixed_point_residual(model: &DtmcModel, pi: &[f64]) -> f64 {
    model
        .left_multiply(pi)
        .iter()
        .zip(pi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn solve_dense(model: &DtmcModel) -> Vec<f64> {
    let n = model.len();
    // (Aᵀ − I) π = 0 with the last equation replaced by Σπ = 1
    let mut m = vec![vec![0.0; n + 1]; n];
    for (i, row) in model.rows.iter().enumerate() {
        for &(j, p) in row {
            m[j][i] += p;
        }
    }
    for (i, r) in m.iter_mut().enumerate() {
        r[i] -= 1.0;
    }
    m[n - 1] = vec![1.0; n + 1];
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap_or(col);
        m.swap(col, pivot);
        let p = m[col][col];
        if p.abs() < f64::MIN_POSITIVE {
            continue;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col] / p;
                if f != 0.0 {
                    for c in col..=n {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    (0..n).map(|i| m[i][n] / m[i][i]).collect()
}

fn solve_power(model: &DtmcModel) -> Result<Vec<f64>> {
    let n = model.len();
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..POWER_ITERATION_CAP {
        let next = model.left_multiply(&pi);
        let change = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        // lazy step (A + I)/2 removes periodicity without moving the fixed point
        for (p, q) in pi.iter_mut().zip(&next) {
            *p = 0.5 * (*p + q);
        }
        if change <= 1e-13 {
            return Ok(pi);
        }
    }
    Err(Error::NoConvergence(POWER_ITERATION_CAP))
}

/// Stationary distribution π with π·A = π and Σπ = 1.
pub fn stationary_distribution(model: &DtmcModel) -> Result<Vec<f64>> {
    if !is_irreducible(model) {
        return Err(Error::NotIrreducible);
    }
    let mut pi = if model.len() <= DENSE_LIMIT {
        solve_dense(model)
    } else {
        solve_power(model)?
    };
    for p in pi.iter_mut() {
        if *p < 0.0 {
            *p = 0.0;
        }
    }
    let total: f64 = pi.iter().sum();
    for p in pi.iter_mut() {
        *p /= total;
    }
    let residual = fixed_point_residual(model, &pi);
    if !(residual <= RESIDUAL_TOLERANCE) {
        return Err(Error::NoConvergence(0));
    }
    Ok(pi)
}

/// Switch-dependent inputs of the Switched Max-Link quantities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwitchedParams {
    /// Fraction of packets relayed under 𝒮, P_ML^𝒮.
    pub p_ml: f64,
    /// Fraction of packets relayed under 𝒮′, P_ML^𝒮′.
    pub p_ml_prime: f64,
}

/// 𝒮′ = 1 when 𝒮 ≥ 1, otherwise 𝒮.
pub fn switch_prime(switch: f64) -> f64 {
    if switch >= 1.0 {
        1.0
    } else {
        switch
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DtmcMetrics {
    pub p_outage: f64,
    /// Per-relay throughput E[T_n].
    pub throughput: f64,
    /// E[L_n] per relay.
    pub queue_lengths: Vec<f64>,
    /// E[d_n] per relay.
    pub delays: Vec<f64>,
    /// Mean of `delays`.
    pub delay: f64,
}

/// Outage, per-relay throughput, queue lengths and Little's-law delay.
pub fn outage_throughput_delay(
    model: &DtmcModel,
    pi: &[f64],
    rho: f64,
    switched: Option<SwitchedParams>,
) -> Result<DtmcMetrics> {
    if pi.len() != model.len() {
        return Err(Error::Dimension(format!(
            "π has {} entries for {} states",
            pi.len(),
            model.len()
        )));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidParameter(format!("ρ must lie in (0, 1], got {rho}")));
    }
    let n = model.space.relays;
    let p_outage = pi
        .iter()
        .enumerate()
        .fold(0.0, |acc, (r, p)| acc + p * model.self_loop(r));
    let mut queue_lengths = vec![0.0; n];
    for (r, p) in pi.iter().enumerate() {
        let state = model.space.decode(r);
        for (q, b) in queue_lengths.iter_mut().zip(&state.buffers) {
            *q += p * *b as f64;
        }
    }
    let (rho_eff, scale) = match switched {
        None => (rho, 1.0),
        Some(s) => {
            for v in [s.p_ml, s.p_ml_prime] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidParameter(format!("P_ML must lie in [0, 1], got {v}")));
                }
            }
            (2.0 * rho * s.p_ml_prime / (s.p_ml_prime + 1.0), s.p_ml)
        }
    };
    let throughput = if n == 0 {
        0.0
    } else {
        rho_eff * (1.0 - p_outage) / n as f64
    };
    let delays: Vec<f64> = queue_lengths
        .iter()
        .map(|&l| {
            if scale == 0.0 || rho_eff == 0.0 {
                0.0
            } else {
                l / throughput * scale
            }
        })
        .collect();
    let delay = if n == 0 {
        0.0
    } else {
        delays.iter().sum::<f64>() / n as f64
    };
    Ok(DtmcMetrics {
        p_outage,
        throughput,
        queue_lengths,
        delays,
        delay,
    })
}
