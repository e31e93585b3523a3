use rayon::prelude::*;

use crate::analysis::{
    dtmc_build, fixed_point_residual, outage_throughput_delay, stationary_distribution, switch_prime,
    SelectionRuleEstimator, SwitchedParams,
};
use crate::engine::{run_protocol, Protocol, RunMetrics};
use crate::error::{Error, Result};
use crate::experiment::config::ExperimentConfig;

/// Scalar outcome of one (protocol, SNR, seed) trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialSummary {
    pub protocol: Protocol,
    pub snr_db: f64,
    pub seed: u64,
    pub ber: f64,
    pub pep_theory: f64,
    pub sum_rate: f64,
    pub avg_delay: f64,
    pub avg_throughput: f64,
    pub n_sr: usize,
    pub n_rd: usize,
    pub n_sd: usize,
    pub n_outage: usize,
    pub fraction_relayed: f64,
    pub undelivered: usize,
}

impl TrialSummary {
    pub fn from_metrics(protocol: Protocol, snr_db: f64, seed: u64, m: &RunMetrics<f64>) -> Self {
        Self {
            protocol,
            snr_db,
            seed,
            ber: m.ber,
            pep_theory: m.pep_theory,
            sum_rate: m.sum_rate,
            avg_delay: m.avg_delay,
            avg_throughput: m.avg_throughput,
            n_sr: m.n_sr,
            n_rd: m.n_rd,
            n_sd: m.n_sd,
            n_outage: m.n_outage,
            fraction_relayed: m.fraction_relayed(),
            undelivered: m.undelivered.len(),
        }
    }
}

/// Mean and standard error of a metric across seeds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stderr = if values.len() < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        };
        Self { mean, stderr }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub protocol: Protocol,
    pub snr_db: f64,
    pub seeds: usize,
    pub ber: Estimate,
    pub pep_theory: Estimate,
    pub sum_rate: Estimate,
    pub avg_delay: Estimate,
    pub avg_throughput: Estimate,
    pub n_sr: f64,
    pub n_rd: f64,
    pub n_sd: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResults {
    pub name: String,
    /// Ordered by protocol, then SNR, then seed, as listed in the config.
    pub trials: Vec<TrialSummary>,
}

impl ExperimentResults {
    /// One row per (protocol, SNR), reduced in seed order.
    pub fn aggregate(&self) -> Vec<AggregateRow> {
        let mut rows: Vec<AggregateRow> = Vec::new();
        let mut start = 0;
        while start < self.trials.len() {
            let head = &self.trials[start];
            let end = start
                + self.trials[start..]
                    .iter()
                    .take_while(|t| t.protocol == head.protocol && t.snr_db == head.snr_db)
                    .count();
            let group = &self.trials[start..end];
            let col = |f: fn(&TrialSummary) -> f64| Estimate::of(&group.iter().map(f).collect::<Vec<_>>());
            let mean =
                |f: fn(&TrialSummary) -> usize| group.iter().map(|t| f(t) as f64).sum::<f64>() / group.len() as f64;
            rows.push(AggregateRow {
                protocol: head.protocol,
                snr_db: head.snr_db,
                seeds: group.len(),
                ber: col(|t| t.ber),
                pep_theory: col(|t| t.pep_theory),
                sum_rate: col(|t| t.sum_rate),
                avg_delay: col(|t| t.avg_delay),
                avg_throughput: col(|t| t.avg_throughput),
                n_sr: mean(|t| t.n_sr),
                n_rd: mean(|t| t.n_rd),
                n_sd: mean(|t| t.n_sd),
            });
            start = end;
        }
        rows
    }
}

fn with_context(protocol: Protocol, snr_db: f64, seed: u64, e: Error) -> Error {
    Error::Trial {
        protocol: protocol.to_string(),
        snr_db,
        seed,
        source: Box::new(e),
    }
}

/// Runs every (protocol, SNR, seed) trial in parallel. The SNR index is the
/// RNG stream, so all protocols see the same channels at a given point.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResults> {
    let jobs: Vec<(Protocol, usize, u64)> = cfg
        .protocols
        .iter()
        .flat_map(|&p| (0..cfg.snr_db.len()).flat_map(move |k| cfg.seeds.iter().map(move |&s| (p, k, s))))
        .collect();
    let trials = jobs
        .par_iter()
        .map(|&(protocol, k, seed)| {
            let snr = cfg.snr_db[k];
            let m = run_protocol(&cfg.engine_config::<f64>(snr), protocol, seed, k as u64)
                .map_err(|e| with_context(protocol, snr, seed, e))?;
            Ok(TrialSummary::from_metrics(protocol, snr, seed, &m))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResults {
        name: cfg.name.clone(),
        trials,
    })
}

/// DTMC predictions for one relaying protocol at one SNR.
#[derive(Clone, Debug, PartialEq)]
pub struct DtmcRow {
    pub protocol: Protocol,
    pub snr_db: f64,
    pub states: usize,
    pub p_outage: f64,
    pub throughput: f64,
    pub mean_queue: f64,
    pub delay: f64,
    /// Measured P_ML^𝒮 and P_ML^𝒮′ (1 for protocols without a direct mode).
    pub p_ml: f64,
    pub p_ml_prime: f64,
    pub residual: f64,
    pub pi: Vec<f64>,
}

/// Fraction of packet-sets routed through relays in a short simulation.
fn measured_p_ml(cfg: &ExperimentConfig, switch: f64, snr_index: usize) -> Result<f64> {
    let mut engine = cfg.engine_config::<f64>(cfg.snr_db[snr_index]);
    engine.packet_sets = engine.packet_sets.min(2000);
    let m = run_protocol(
        &engine,
        Protocol::SwitchedMaxLink { switch },
        cfg.seeds[0],
        snr_index as u64,
    )?;
    Ok(m.fraction_relayed())
}

/// Builds the chain for every relaying protocol and SNR in the config.
pub fn dtmc_report(cfg: &ExperimentConfig) -> Result<Vec<DtmcRow>> {
    let mut rows = Vec::new();
    for &protocol in cfg.protocols.iter().filter(|p| p.uses_relays()) {
        for (k, &snr) in cfg.snr_db.iter().enumerate() {
            let ctx = |e| with_context(protocol, snr, cfg.seeds[0], e);
            let engine = cfg.engine_config::<f64>(snr);
            let mut est =
                SelectionRuleEstimator::new(&engine, protocol, cfg.dtmc.draws_per_state, cfg.seeds[0]).map_err(ctx)?;
            if let Protocol::ThresholdMaxLinkDt { r0 } = protocol {
                est = est.with_outage_threshold(r0);
            }
            let model = dtmc_build(cfg.relays, cfg.buffer_sets(), est.z(), &est, cfg.dtmc.state_cap).map_err(ctx)?;
            let pi = stationary_distribution(&model).map_err(ctx)?;
            let (switched, p_ml, p_ml_prime) = match protocol {
                Protocol::SwitchedMaxLink { switch } => {
                    let p = measured_p_ml(cfg, switch, k).map_err(ctx)?;
                    let pp = measured_p_ml(cfg, switch_prime(switch), k).map_err(ctx)?;
                    (
                        Some(SwitchedParams {
                            p_ml: p,
                            p_ml_prime: pp,
                        }),
                        p,
                        pp,
                    )
                }
                _ => (None, 1.0, 1.0),
            };
            let metrics = outage_throughput_delay(&model, &pi, cfg.dtmc.rho, switched).map_err(ctx)?;
            rows.push(DtmcRow {
                protocol,
                snr_db: snr,
                states: model.len(),
                p_outage: metrics.p_outage,
                throughput: metrics.throughput,
                mean_queue: metrics.queue_lengths.iter().sum::<f64>() / metrics.queue_lengths.len().max(1) as f64,
                delay: metrics.delay,
                p_ml,
                p_ml_prime,
                residual: fixed_point_residual(&model, &pi),
                pi,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stderr_of_constant_is_zero() {
        let e = Estimate::of(&[0.25, 0.25, 0.25]);
        assert_eq!((e.mean, e.stderr), (0.25, 0.0));
        assert_eq!(Estimate::of(&[1.0]).stderr, 0.0);
        let e = Estimate::of(&[1.0, 3.0]);
        assert_eq!(e.mean, 2.0);
        assert!((e.stderr - 1.0).abs() < 1e-15);
    }
}
