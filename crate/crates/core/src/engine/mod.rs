//! Slot-by-slot simulation of the relaying protocols.

mod buffers;
mod reassembly;
mod selector;

pub use buffers::{PacketSet, RelayBuffers};
pub use reassembly::{reassemble, DeliveredSet, Reassembled};
pub use selector::{Decision, Protocol, Selector};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::pep::{theoretical_pep, PepMode, PepSample};
use crate::analysis::rate::{sum_rate_aggregate, sum_rate_slot, RateParams};
use crate::channel::{
    add_awgn, apply_csi_error, enumerate_symbol_vectors, generate_channels, ChannelRealization, Constellation,
    ConstellationKind, CsiModel, LinkVarianceProfile, SymbolVectorSet,
};
use crate::detection::MlDetector;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::Real;
use crate::selection::{BufferView, Mode};

/// Everything a single trial needs apart from the protocol and seed.
#[derive(Clone, Debug)]
pub struct EngineConfig<T> {
    pub relays: usize,
    pub ms: usize,
    /// Submatrices per relay; relays have U·M_S antennas.
    pub u: usize,
    /// Buffer capacity L in packet-sets.
    pub buffer_sets: usize,
    pub constellation: ConstellationKind,
    pub packet_sets: usize,
    pub symbols_per_packet: usize,
    pub energy: T,
    pub n0: T,
    pub profile: LinkVarianceProfile<T>,
    pub csi: CsiModel<T>,
    /// Slot limit; `None` means 20x the fewest slots the protocol could need.
    pub slot_budget: Option<usize>,
    pub record_trace: bool,
}

impl<T: Real> EngineConfig<T> {
    /// Unit link powers, perfect CSI, N0 = 1 and E = 10^(snr_db/10).
    pub fn new(relays: usize, ms: usize, buffer_sets: usize, constellation: ConstellationKind, snr_db: f64) -> Self {
        Self {
            relays,
            ms,
            u: 1,
            buffer_sets,
            constellation,
            packet_sets: 10_000,
            symbols_per_packet: 100,
            energy: T::lit(10f64.powf(snr_db / 10.0)),
            n0: T::one(),
            profile: LinkVarianceProfile::unit(),
            csi: CsiModel::perfect(),
            slot_budget: None,
            record_trace: false,
        }
    }

    fn validate(&self, protocol: &Protocol) -> Result<()> {
        protocol.validate()?;
        if self.ms == 0 || self.u == 0 {
            return Err(Error::InvalidParameter("M_S and U must be at least 1".into()));
        }
        if self.packet_sets == 0 || self.symbols_per_packet == 0 {
            return Err(Error::InvalidParameter("nothing to transmit".into()));
        }
        if !(self.energy > T::zero() && self.n0 > T::zero()) {
            return Err(Error::InvalidParameter("E and N0 must be positive".into()));
        }
        if protocol.uses_relays() && !protocol.has_direct_mode() && (self.relays == 0 || self.buffer_sets == 0) {
            return Err(Error::InvalidParameter(format!(
                "{} needs at least one relay with a nonzero buffer",
                protocol.name()
            )));
        }
        Ok(())
    }

    fn budget(&self, protocol: &Protocol) -> usize {
        self.slot_budget.unwrap_or_else(|| {
            let hops = if protocol.has_direct_mode() { 1 } else { 2 };
            20 * hops * self.packet_sets
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SlotRecord {
    pub slot: usize,
    pub mode: Mode,
    pub relay: Option<usize>,
    pub u: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateSample<T> {
    pub mode: Mode,
    pub rate: T,
}

#[derive(Clone, Debug)]
pub struct RunMetrics<T> {
    pub slots: usize,
    pub n_sr: usize,
    pub n_rd: usize,
    pub n_sd: usize,
    pub n_outage: usize,
    pub bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub delivered_sets: usize,
    pub relayed_sets: usize,
    pub direct_sets: usize,
    /// Sequence ids still at the source or in a buffer when the run ended.
    pub undelivered: Vec<u64>,
    pub budget_exhausted: bool,
    /// Mean delay in slots over all delivered sets, DT sets counting 0.
    pub avg_delay: f64,
    /// Mean delay over relayed sets only.
    pub avg_relay_delay: f64,
    /// Delivered packet-sets per slot.
    pub avg_throughput: f64,
    /// Time-average buffer occupancy per relay, sampled at the end of every slot.
    pub mean_occupancy: Vec<f64>,
    pub pep_theory: f64,
    pub sum_rate: f64,
    pub pep_samples: Vec<PepSample<T>>,
    pub rate_samples: Vec<RateSample<T>>,
    pub trace: Vec<SlotRecord>,
    pub balancing_ratio: f64,
}

impl<T: Real> RunMetrics<T> {
    /// Fraction of delivered sets that went through a relay.
    pub fn fraction_relayed(&self) -> f64 {
        if self.delivered_sets == 0 {
            0.0
        } else {
            self.relayed_sets as f64 / self.delivered_sets as f64
        }
    }

    pub fn is_complete(&self) -> bool {
        self.undelivered.is_empty()
    }
}

/// Seeds the channel, noise and data streams of one trial. `stream`
/// separates e.g. SNR points sharing a seed; protocols run with the same
/// (seed, stream) see identical channel realizations.
pub fn trial_rngs(seed: u64, stream: u64) -> [ChaCha8Rng; 3] {
    std::array::from_fn(|k| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream.wrapping_mul(3).wrapping_add(k as u64));
        rng
    })
}

fn transmit<T: Real, R: Rng + ?Sized>(
    h: &CMatrix<T>,
    est: &CMatrix<T>,
    energy_per_antenna: T,
    n0: T,
    symbols: &[u32],
    vectors: &SymbolVectorSet<T>,
    rng: &mut R,
) -> Result<Vec<u32>> {
    let detector = MlDetector::new(est, energy_per_antenna, vectors)?;
    let scaled = h.scale(energy_per_antenna.sqrt());
    let mut y = vec![Complex::new(T::zero(), T::zero()); h.rows()];
    Ok(symbols
        .iter()
        .map(|&s| {
            scaled.mul_vec_into(vectors.get(s as usize), &mut y);
            add_awgn(rng, &mut y, n0);
            detector.detect_unchecked(&y).index as u32
        })
        .collect())
}

/// Runs one trial until every packet-set reaches the destination or the
/// slot budget runs out.
pub fn run_protocol<T: Real>(
    cfg: &EngineConfig<T>,
    protocol: Protocol,
    seed: u64,
    stream: u64,
) -> Result<RunMetrics<T>> {
    cfg.validate(&protocol)?;
    let constellation = Constellation::<T>::new(cfg.constellation);
    let vectors = enumerate_symbol_vectors(&constellation, cfg.ms)?;
    let n_vectors = vectors.len() as u32;
    let bits_per_vector = constellation.bits_per_symbol() as u64 * cfg.ms as u64;
    let [mut channel_rng, mut noise_rng, mut data_rng] = trial_rngs(seed, stream);
    let mut selector = Selector::new(protocol, &constellation, cfg.ms, cfg.energy, cfg.n0)?;
    let rate_params = RateParams::new(cfg.energy, cfg.n0, cfg.ms)?;
    let relays = if protocol.uses_relays() { cfg.relays } else { 0 };
    let coop_energy = cfg.energy / T::lit(cfg.ms as f64);
    let direct_energy = coop_energy + coop_energy;
    let budget = cfg.budget(&protocol);

    let mut buffers = RelayBuffers::new(relays, cfg.buffer_sets);
    let mut sent: Vec<Vec<u32>> = Vec::with_capacity(cfg.packet_sets);
    let mut delivered: Vec<DeliveredSet> = Vec::with_capacity(cfg.packet_sets);
    let mut m = RunMetrics {
        slots: 0,
        n_sr: 0,
        n_rd: 0,
        n_sd: 0,
        n_outage: 0,
        bits: 0,
        bit_errors: 0,
        ber: 0.0,
        delivered_sets: 0,
        relayed_sets: 0,
        direct_sets: 0,
        undelivered: Vec::new(),
        budget_exhausted: false,
        avg_delay: 0.0,
        avg_relay_delay: 0.0,
        avg_throughput: 0.0,
        mean_occupancy: vec![0.0; relays],
        pep_theory: f64::NAN,
        sum_rate: f64::NAN,
        pep_samples: Vec::new(),
        rate_samples: Vec::new(),
        trace: Vec::new(),
        balancing_ratio: 1.0,
    };
    let mut occupancy_sum = vec![0u64; relays];
    let mut delay_sum = 0u64;
    let (mut rates_sr, mut rates_rd, mut rates_sd) = (Vec::new(), Vec::new(), Vec::new());

    let new_set = |data_rng: &mut ChaCha8Rng, sent: &mut Vec<Vec<u32>>| -> (u64, Vec<u32>) {
        let symbols: Vec<u32> = (0..cfg.symbols_per_packet)
            .map(|_| data_rng.random_range(0..n_vectors))
            .collect();
        sent.push(symbols.clone());
        ((sent.len() - 1) as u64, symbols)
    };

    for slot in 0..budget {
        let source_has_packets = sent.len() < cfg.packet_sets;
        if !source_has_packets && buffers.is_empty() {
            break;
        }
        let ch: ChannelRealization<T> = generate_channels(&mut channel_rng, cfg.relays, cfg.ms, cfg.u, &cfg.profile);
        let ch = apply_csi_error(&mut channel_rng, ch, &cfg.csi, cfg.energy);
        let view = BufferView {
            occupancy: buffers.occupancy(),
            capacity: buffers.capacity(),
            source_has_packets,
        };
        let decision = selector.decide(&ch, &view)?;
        let d = decision.slot;

        match d.mode {
            Mode::MaxLinkSr => {
                let r = d.relay.expect("SR decisions name a relay");
                assert!(
                    source_has_packets && buffers.occupancy()[r] < buffers.capacity(),
                    "SR into a full buffer"
                );
                let (seq, symbols) = new_set(&mut data_rng, &mut sent);
                let detected = transmit(
                    &ch.h_sr[r],
                    &ch.est_sr[r],
                    coop_energy,
                    cfg.n0,
                    &symbols,
                    &vectors,
                    &mut noise_rng,
                )?;
                buffers.push(
                    r,
                    PacketSet {
                        seq,
                        symbols: detected,
                        arrival_slot: slot,
                    },
                )?;
                rates_sr.push(sum_rate_slot(Mode::MaxLinkSr, &ch.h_sr[r], &rate_params)?);
                m.n_sr += 1;
            }
            Mode::MaxLinkRd => {
                let r = d.relay.expect("RD decisions name a relay");
                let u = d.u.unwrap_or(0);
                let set = buffers.pop(r).expect("RD from an empty buffer");
                let h = ch.submatrix(&ch.h_rd[r], u);
                let est = ch.submatrix(&ch.est_rd[r], u);
                let detected = transmit(&h, &est, coop_energy, cfg.n0, &set.symbols, &vectors, &mut noise_rng)?;
                let delay = slot - set.arrival_slot;
                delay_sum += delay as u64;
                delivered.push(DeliveredSet {
                    seq: set.seq,
                    symbols: detected,
                    delay,
                });
                rates_rd.push(sum_rate_slot(Mode::MaxLinkRd, &h, &rate_params)?);
                m.relayed_sets += 1;
                m.n_rd += 1;
            }
            Mode::Direct => {
                assert!(source_has_packets, "DT with an empty source");
                let (seq, symbols) = new_set(&mut data_rng, &mut sent);
                let detected = transmit(
                    &ch.h_sd,
                    &ch.est_sd,
                    direct_energy,
                    cfg.n0,
                    &symbols,
                    &vectors,
                    &mut noise_rng,
                )?;
                delivered.push(DeliveredSet {
                    seq,
                    symbols: detected,
                    delay: 0,
                });
                rates_sd.push(sum_rate_slot(Mode::Direct, &ch.h_sd, &rate_params)?);
                m.direct_sets += 1;
                m.n_sd += 1;
            }
            Mode::Outage => m.n_outage += 1,
        }

        if d.mode != Mode::Outage {
            let pep_mode = if d.mode == Mode::Direct {
                PepMode::Direct
            } else {
                PepMode::Cooperative
            };
            m.pep_samples.push(PepSample::new(
                slot,
                decision.d_prime,
                pep_mode,
                cfg.energy,
                cfg.n0,
                cfg.ms,
            ));
        }
        if cfg.record_trace {
            m.trace.push(SlotRecord {
                slot,
                mode: d.mode,
                relay: d.relay,
                u: d.u,
            });
        }
        for (acc, &b) in occupancy_sum.iter_mut().zip(buffers.occupancy()) {
            *acc += b as u64;
        }
        m.slots = slot + 1;
        assert_eq!(
            delivered.len() + buffers.total() + (cfg.packet_sets - sent.len()),
            cfg.packet_sets,
            "packet-set conservation"
        );
    }

    let complete = sent.len() == cfg.packet_sets && buffers.is_empty();
    m.budget_exhausted = !complete;
    m.delivered_sets = delivered.len();
    m.avg_delay = if delivered.is_empty() {
        0.0
    } else {
        delay_sum as f64 / delivered.len() as f64
    };
    m.avg_relay_delay = if m.relayed_sets == 0 {
        0.0
    } else {
        delay_sum as f64 / m.relayed_sets as f64
    };
    let slots = m.slots.max(1) as f64;
    m.avg_throughput = delivered.len() as f64 / slots;
    m.mean_occupancy = occupancy_sum.iter().map(|&s| s as f64 / slots).collect();
    m.balancing_ratio = selector.balancing().ratio().as_f64();

    let reassembled = reassemble(delivered, cfg.packet_sets as u64);
    for set in &reassembled.ordered {
        let original = &sent[set.seq as usize];
        m.bit_errors += original
            .iter()
            .zip(&set.symbols)
            .map(|(a, b)| (a ^ b).count_ones() as u64)
            .sum::<u64>();
        m.bits += original.len() as u64 * bits_per_vector;
    }
    m.ber = if m.bits == 0 {
        0.0
    } else {
        m.bit_errors as f64 / m.bits as f64
    };
    m.undelivered = reassembled.missing;
    if !m.pep_samples.is_empty() {
        m.pep_theory = theoretical_pep(&m.pep_samples)?;
    }
    if let Ok(r) = sum_rate_aggregate(&rates_sr, &rates_rd, &rates_sd) {
        m.sum_rate = r.as_f64();
    }
    m.rate_samples = rates_sr
        .into_iter()
        .map(|rate| RateSample {
            mode: Mode::MaxLinkSr,
            rate,
        })
        .chain(rates_rd.into_iter().map(|rate| RateSample {
            mode: Mode::MaxLinkRd,
            rate,
        }))
        .chain(rates_sd.into_iter().map(|rate| RateSample {
            mode: Mode::Direct,
            rate,
        }))
        .collect();
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(relays: usize, snr_db: f64) -> EngineConfig<f64> {
        let mut c = EngineConfig::new(relays, 2, 2, ConstellationKind::Bpsk, snr_db);
        c.packet_sets = 300;
        c.symbols_per_packet = 10;
        c.record_trace = true;
        c
    }

    #[test]
    fn no_relays_is_all_direct() {
        let m = run_protocol(&small(0, 6.0), Protocol::SwitchedMaxLink { switch: 1.0 }, 1, 0).unwrap();
        assert_eq!((m.n_sd, m.n_sr, m.n_rd), (300, 0, 0));
        assert_eq!(m.avg_delay, 0.0);
        assert!(m.is_complete());
    }

    #[test]
    fn first_slot_of_max_link_is_sr() {
        let m = run_protocol(&small(3, 6.0), Protocol::MmdMaxLink, 1, 0).unwrap();
        assert_eq!(m.trace[0].mode, Mode::MaxLinkSr);
        assert_eq!(m.n_sd, 0);
        assert_eq!(m.n_sr, 300);
        assert_eq!(m.n_rd, 300);
        assert_eq!(m.slots, 600);
        assert!(m.is_complete());
    }

    #[test]
    fn slot_counts_add_up() {
        for p in [
            Protocol::SwitchedMaxLink { switch: 1.0 },
            Protocol::QnMaxLink,
            Protocol::DirectMimo,
            Protocol::ThresholdMaxLinkDt { r0: 1.0 },
        ] {
            let m = run_protocol(&small(3, 4.0), p, 9, 2).unwrap();
            assert_eq!(m.n_sr + m.n_rd + m.n_sd + m.n_outage, m.slots, "{p}");
            assert_eq!(m.n_sr, m.n_rd, "{p}");
            assert!(m.is_complete(), "{p}");
            assert!((0.0..=1.0).contains(&m.ber));
            assert_eq!(m.bits, 300 * 10 * 2);
        }
    }

    #[test]
    fn reruns_are_identical() {
        let a = run_protocol(&small(3, 4.0), Protocol::SwitchedMaxLink { switch: 1.0 }, 5, 1).unwrap();
        let b = run_protocol(&small(3, 4.0), Protocol::SwitchedMaxLink { switch: 1.0 }, 5, 1).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.bit_errors, b.bit_errors);
    }

    #[test]
    fn tiny_budget_is_flagged() {
        let mut c = small(3, 4.0);
        c.slot_budget = Some(10);
        let m = run_protocol(&c, Protocol::MmdMaxLink, 1, 0).unwrap();
        assert!(m.budget_exhausted);
        assert!(!m.undelivered.is_empty());
        assert_eq!(m.slots, 10);
    }

    #[test]
    fn max_link_without_relays_is_rejected() {
        assert!(run_protocol(&small(0, 4.0), Protocol::MmdMaxLink, 1, 0).is_err());
    }
}
