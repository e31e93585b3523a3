use std::fmt;
use std::str::FromStr;

use crate::analysis::rate::link_mutual_information;
use crate::channel::{ChannelRealization, Constellation};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::Real;
use crate::selection::{
    argmax, decide_mode, qn_metric, rank_candidates, select_from_ranking, select_max_link, BalancingState, BufferView,
    DistanceEnumerator, DistanceReport, LinkKind, Mode, SlotDecision,
};

/// Relaying protocol run by the engine.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Protocol {
    /// Max-Link with MMD selection plus a direct mode gated by the switch 𝒮.
    SwitchedMaxLink { switch: f64 },
    /// Max-Link with MMD selection, never transmits directly.
    MmdMaxLink,
    /// Max-Link with the quadratic-norm criterion.
    QnMaxLink,
    /// Conventional point-to-point MIMO.
    DirectMimo,
    /// Approximate rate-threshold Max-Link with direct transmission: links
    /// whose mutual information falls below r0 per stream are in outage.
    ThresholdMaxLinkDt { r0: f64 },
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Self::SwitchedMaxLink { .. } => "switched_max_link",
            Self::MmdMaxLink => "mmd_max_link",
            Self::QnMaxLink => "qn_max_link",
            Self::DirectMimo => "direct_mimo",
            Self::ThresholdMaxLinkDt { .. } => "threshold_max_link_dt",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::SwitchedMaxLink { switch } if !(switch >= 0.0 && switch.is_finite()) => {
                Err(Error::InvalidParameter(format!("switch must be >= 0, got {switch}")))
            }
            Self::ThresholdMaxLinkDt { r0 } if !(r0 > 0.0 && r0.is_finite()) => {
                Err(Error::InvalidParameter(format!("r0 must be > 0, got {r0}")))
            }
            _ => Ok(()),
        }
    }

    /// Whether the protocol ever uses the relays.
    pub fn uses_relays(&self) -> bool {
        !matches!(self, Self::DirectMimo)
    }

    /// Whether the protocol can transmit directly.
    pub fn has_direct_mode(&self) -> bool {
        matches!(
            self,
            Self::SwitchedMaxLink { .. } | Self::DirectMimo | Self::ThresholdMaxLinkDt { .. }
        )
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::SwitchedMaxLink { switch } => write!(f, "{}:{switch}", self.name()),
            Self::ThresholdMaxLinkDt { r0 } => write!(f, "{}:{r0}", self.name()),
            _ => f.write_str(self.name()),
        }
    }
}

impl Protocol {
    /// Parses `name` or `name:value`, falling back to `switch` / `r0` when
    /// no value is given.
    pub fn parse_with_defaults(s: &str, switch: f64, r0: f64) -> Result<Self> {
        let (name, value) = match s.split_once(':') {
            Some((n, v)) => {
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad protocol parameter in `{s}`")))?;
                (n.trim(), Some(v))
            }
            None => (s.trim(), None),
        };
        let p = match name {
            "switched_max_link" => Self::SwitchedMaxLink {
                switch: value.unwrap_or(switch),
            },
            "threshold_max_link_dt" => Self::ThresholdMaxLinkDt {
                r0: value.unwrap_or(r0),
            },
            other => {
                if value.is_some() {
                    return Err(Error::InvalidParameter(format!(
                        "protocol `{other}` takes no parameter"
                    )));
                }
                match other {
                    "mmd_max_link" => Self::MmdMaxLink,
                    "qn_max_link" => Self::QnMaxLink,
                    "direct_mimo" => Self::DirectMimo,
                    _ => return Err(Error::InvalidParameter(format!("unknown protocol `{other}`"))),
                }
            }
        };
        p.validate()?;
        Ok(p)
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse_with_defaults(s, 1.0, 1.0)
    }
}

/// A slot decision plus the 𝒟′_min of the matrix it will use (NaN for an
/// outage slot).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decision<T> {
    pub slot: SlotDecision<T>,
    pub d_prime: T,
}

/// Per-trial selection state: the protocol, its metric tables and the SR/RD
/// balancing means.
#[derive(Clone, Debug)]
pub struct Selector<T> {
    protocol: Protocol,
    ms: usize,
    energy: T,
    n0: T,
    enumerator: DistanceEnumerator<T>,
    balancing: BalancingState<T>,
}

impl<T: Real> Selector<T> {
    pub fn new(protocol: Protocol, constellation: &Constellation<T>, ms: usize, energy: T, n0: T) -> Result<Self> {
        protocol.validate()?;
        Ok(Self {
            protocol,
            ms,
            energy,
            n0,
            enumerator: DistanceEnumerator::new(constellation, ms)?,
            balancing: BalancingState::new(),
        })
    }

    pub fn with_balancing(mut self, balancing: BalancingState<T>) -> Self {
        self.balancing = balancing;
        self
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol
    }

    pub fn balancing(&self) -> &BalancingState<T> {
        &self.balancing
    }

    pub fn enumerator(&self) -> &DistanceEnumerator<T> {
        &self.enumerator
    }

    fn sub_min(&self, h: &CMatrix<T>) -> Result<T> {
        let mut best = T::infinity();
        for b in h.split_rows(self.ms)? {
            best = best.min(self.enumerator.min_distance(&b)?);
        }
        Ok(best)
    }

    fn sd_prime(&self, ch: &ChannelRealization<T>) -> Result<T> {
        Ok(T::lit(2.0) * self.enumerator.min_distance(&ch.est_sd)?)
    }

    pub fn decide(&mut self, ch: &ChannelRealization<T>, buffers: &BufferView<'_>) -> Result<Decision<T>> {
        match self.protocol {
            Protocol::MmdMaxLink | Protocol::SwitchedMaxLink { .. } => self.decide_mmd(ch, buffers),
            Protocol::QnMaxLink => self.decide_qn(ch, buffers),
            Protocol::DirectMimo => {
                if !buffers.source_has_packets {
                    return Err(Error::NoFeasibleCandidate);
                }
                Ok(Decision {
                    slot: SlotDecision::direct(T::nan()),
                    d_prime: self.sd_prime(ch)?,
                })
            }
            Protocol::ThresholdMaxLinkDt { r0 } => self.decide_threshold(ch, buffers, T::lit(r0)),
        }
    }

    fn decide_mmd(&mut self, ch: &ChannelRealization<T>, buffers: &BufferView<'_>) -> Result<Decision<T>> {
        let report = DistanceReport::compute(ch, &self.enumerator, &self.balancing)?;
        let rd_values: Vec<T> = report.rd_best.iter().map(|r| r.0).collect();
        self.balancing.update(&report.sr_min, &rd_values);

        let selection = match select_max_link(&report, buffers) {
            Ok(s) => Some(s),
            Err(Error::NoFeasibleCandidate) => None,
            Err(e) => return Err(e),
        };
        let winner = selection.as_ref().map(|s| *s.winner());
        let slot = match self.protocol {
            Protocol::SwitchedMaxLink { switch } => decide_mode(
                winner.as_ref(),
                report.sd_min,
                T::lit(switch),
                buffers.source_has_packets,
            )?,
            _ => {
                let w = winner.ok_or(Error::NoFeasibleCandidate)?;
                SlotDecision::from_candidate(&w, w.value / report.sd_min)
            }
        };
        let d_prime = match slot.mode {
            Mode::MaxLinkSr => report.sr_min[slot.relay.unwrap_or_default()],
            Mode::MaxLinkRd => report.rd_best[slot.relay.unwrap_or_default()].0,
            Mode::Direct => report.sd_min,
            Mode::Outage => T::nan(),
        };
        Ok(Decision { slot, d_prime })
    }

    fn decide_qn(&mut self, ch: &ChannelRealization<T>, buffers: &BufferView<'_>) -> Result<Decision<T>> {
        let sr: Vec<T> = ch.est_sr.iter().map(qn_metric).collect();
        let rd = ch
            .est_rd
            .iter()
            .map(|h| -> Result<(T, usize)> {
                let per: Vec<T> = h.split_rows(self.ms)?.iter().map(qn_metric).collect();
                Ok(argmax(&per))
            })
            .collect::<Result<Vec<_>>>()?;
        let selection = select_from_ranking(rank_candidates(&sr, &rd), buffers)?;
        let w = *selection.winner();
        let d_prime = match w.link {
            LinkKind::Sr => self.sub_min(&ch.est_sr[w.relay])?,
            LinkKind::Rd => self.enumerator.min_distance(&ch.submatrix(&ch.est_rd[w.relay], w.u))?,
        };
        Ok(Decision {
            slot: SlotDecision::from_candidate(&w, T::nan()),
            d_prime,
        })
    }

    fn decide_threshold(&mut self, ch: &ChannelRealization<T>, buffers: &BufferView<'_>, r0: T) -> Result<Decision<T>> {
        let ms = T::lit(self.ms as f64);
        let threshold = r0 * ms;
        let snr = self.energy / (ms * self.n0);
        if buffers.source_has_packets {
            let i_sd = link_mutual_information(&ch.est_sd, snr + snr)?;
            if i_sd >= threshold {
                return Ok(Decision {
                    slot: SlotDecision::direct(T::nan()),
                    d_prime: self.sd_prime(ch)?,
                });
            }
        }
        let sr: Vec<T> = ch
            .est_sr
            .iter()
            .map(|h| link_mutual_information(h, snr))
            .collect::<Result<_>>()?;
        let rd = ch
            .est_rd
            .iter()
            .map(|h| -> Result<(T, usize)> {
                let per = h
                    .split_rows(self.ms)?
                    .iter()
                    .map(|b| link_mutual_information(b, snr))
                    .collect::<Result<Vec<T>>>()?;
                Ok(argmax(&per))
            })
            .collect::<Result<Vec<_>>>()?;
        let winner = rank_candidates(&sr, &rd)
            .into_iter()
            .find(|c| c.value >= threshold && buffers.feasible(c.link, c.relay));
        match winner {
            Some(w) => {
                let d_prime = match w.link {
                    LinkKind::Sr => self.sub_min(&ch.est_sr[w.relay])?,
                    LinkKind::Rd => self.enumerator.min_distance(&ch.submatrix(&ch.est_rd[w.relay], w.u))?,
                };
                Ok(Decision {
                    slot: SlotDecision::from_candidate(&w, T::nan()),
                    d_prime,
                })
            }
            None => Ok(Decision {
                slot: SlotDecision {
                    mode: Mode::Outage,
                    relay: None,
                    u: None,
                    metric: T::nan(),
                    g: T::nan(),
                },
                d_prime: T::nan(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn protocol_names_round_trip() {
        for p in [
            Protocol::SwitchedMaxLink { switch: 5.0 },
            Protocol::MmdMaxLink,
            Protocol::QnMaxLink,
            Protocol::DirectMimo,
            Protocol::ThresholdMaxLinkDt { r0: 0.5 },
        ] {
            assert_eq!(p.to_string().parse::<Protocol>().unwrap(), p);
        }
        assert_eq!(
            Protocol::parse_with_defaults("switched_max_link", 3.0, 1.0).unwrap(),
            Protocol::SwitchedMaxLink { switch: 3.0 }
        );
        assert!("max_link".parse::<Protocol>().is_err());
        assert!("mmd_max_link:2".parse::<Protocol>().is_err());
        assert!("switched_max_link:-1".parse::<Protocol>().is_err());
        assert!("threshold_max_link_dt:0".parse::<Protocol>().is_err());
    }
}
