//! Monte Carlo transition probabilities from the protocol's own selection
//! rule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analysis::dtmc::{DtmcState, Move, StateSpace, TransitionEstimator};
use crate::analysis::rate::link_mutual_information;
use crate::channel::{apply_csi_error, generate_channels, ChannelRealization, Constellation};
use crate::engine::{EngineConfig, Protocol, Selector};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::selection::{BalancingState, BufferView, DistanceEnumerator, DistanceReport, Mode, SlotDecision};

pub const DEFAULT_DRAWS_PER_STATE: usize = 10_000;

/// Estimates each state's moves by drawing channels, running the selection
/// with the source backlogged, and tallying the outcomes.
///
/// The SR/RD balancing ratio is frozen at the ratio of unconditional mean
/// distances, which is what the running means of a long trial converge to.
#[derive(Clone, Debug)]
pub struct SelectionRuleEstimator<T> {
    cfg: EngineConfig<T>,
    protocol: Protocol,
    constellation: Constellation<T>,
    draws: usize,
    seed: u64,
    /// Outage threshold in bits per channel use per stream.
    outage_r0: Option<f64>,
    balancing_ratio: T,
}

impl<T: Real> SelectionRuleEstimator<T> {
    pub fn new(cfg: &EngineConfig<T>, protocol: Protocol, draws: usize, seed: u64) -> Result<Self> {
        protocol.validate()?;
        if !protocol.uses_relays() {
            return Err(Error::InvalidParameter(
                "DTMC analysis needs a relaying protocol".into(),
            ));
        }
        if draws == 0 {
            return Err(Error::InvalidParameter("draws per state must be positive".into()));
        }
        let constellation = Constellation::new(cfg.constellation);
        let mut est = Self {
            cfg: cfg.clone(),
            protocol,
            constellation,
            draws,
            seed,
            outage_r0: None,
            balancing_ratio: T::one(),
        };
        if matches!(protocol, Protocol::MmdMaxLink | Protocol::SwitchedMaxLink { .. }) {
            est.balancing_ratio = est.unconditional_ratio()?;
        }
        Ok(est)
    }

    /// Treat slots whose chosen link carries less than `r0` per stream as
    /// outages.
    pub fn with_outage_threshold(mut self, r0: f64) -> Self {
        self.outage_r0 = Some(r0);
        self
    }

    pub fn balancing_ratio(&self) -> T {
        self.balancing_ratio
    }

    /// 1 with no direct mode, 2 with one.
    pub fn z(&self) -> usize {
        if self.protocol.has_direct_mode() {
            2
        } else {
            1
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> ChannelRealization<T> {
        let c = &self.cfg;
        let ch = generate_channels(rng, c.relays, c.ms, c.u, &c.profile);
        apply_csi_error(rng, ch, &c.csi, c.energy)
    }

    fn unconditional_ratio(&self) -> Result<T> {
        let enumerator = DistanceEnumerator::new(&self.constellation, self.cfg.ms)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(u64::MAX);
        let neutral = BalancingState::new();
        let mut means = BalancingState::new();
        for _ in 0..self.draws {
            let ch = self.draw(&mut rng);
            let report = DistanceReport::compute(&ch, &enumerator, &neutral)?;
            let rd: Vec<T> = report.rd_best.iter().map(|r| r.0).collect();
            means.update(&report.sr_min, &rd);
        }
        Ok(means.ratio())
    }

    fn in_outage(&self, ch: &ChannelRealization<T>, d: &SlotDecision<T>, r0: f64) -> Result<bool> {
        let ms = T::lit(self.cfg.ms as f64);
        let snr = self.cfg.energy / (ms * self.cfg.n0);
        let info = match d.mode {
            Mode::MaxLinkSr => link_mutual_information(&ch.h_sr[d.relay.unwrap_or(0)], snr)?,
            Mode::MaxLinkRd => {
                let h = ch.submatrix(&ch.h_rd[d.relay.unwrap_or(0)], d.u.unwrap_or(0));
                link_mutual_information(&h, snr)?
            }
            Mode::Direct => link_mutual_information(&ch.h_sd, snr + snr)?,
            Mode::Outage => return Ok(true),
        };
        Ok(info < T::lit(r0) * ms)
    }
}

impl<T: Real> TransitionEstimator for SelectionRuleEstimator<T> {
    fn outgoing(&self, state: &DtmcState, space: &StateSpace) -> Result<Vec<(Move, f64)>> {
        if space.relays != self.cfg.relays {
            return Err(Error::Dimension(format!(
                "chain has {} relays, estimator {}",
                space.relays, self.cfg.relays
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(state.index as u64);
        let mut selector = Selector::new(
            self.protocol,
            &self.constellation,
            self.cfg.ms,
            self.cfg.energy,
            self.cfg.n0,
        )?
        .with_balancing(BalancingState::fixed(self.balancing_ratio));
        let view = BufferView {
            occupancy: &state.buffers,
            capacity: space.capacity,
            source_has_packets: true,
        };
        let mut tally: Vec<(Move, usize)> = Vec::new();
        for _ in 0..self.draws {
            let ch = self.draw(&mut rng);
            let d = selector.decide(&ch, &view)?.slot;
            let outage = match self.outage_r0 {
                Some(r0) => self.in_outage(&ch, &d, r0)?,
                None => d.mode == Mode::Outage,
            };
            let mv = if outage {
                Move::Stay
            } else {
                match d.mode {
                    Mode::MaxLinkSr => Move::Fill(d.relay.unwrap_or(0)),
                    Mode::MaxLinkRd => Move::Drain(d.relay.unwrap_or(0)),
                    Mode::Direct if space.z == 2 => Move::Direct,
                    Mode::Direct | Mode::Outage => Move::Stay,
                }
            };
            match tally.iter_mut().find(|e| e.0 == mv) {
                Some(e) => e.1 += 1,
                None => tally.push((mv, 1)),
            }
        }
        let total = self.draws as f64;
        Ok(tally.into_iter().map(|(m, c)| (m, c as f64 / total)).collect())
    }
}
