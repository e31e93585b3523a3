//! End-to-end acceptance checks. Runs as a plain binary so every verdict is
//! printed, then exits nonzero if any check failed.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{brute_force_min_distance, paired_upper, random_matrix, real};
use maxlink::analysis::{
    dtmc_build, fixed_point_residual, outage_throughput_delay, stationary_distribution, RateParams,
    SelectionRuleEstimator, DEFAULT_STATE_CAP,
};
use maxlink::engine::Selector;
use maxlink::selection::BufferView;
use maxlink::{
    complexity_report, metric_count, qn_metric, run_protocol, sum_rate_aggregate, sum_rate_slot, CMatrix,
    ChannelRealization, Constellation, ConstellationKind, DistanceEnumerator, EngineConfig, LinkVarianceProfile, Mode,
    Protocol,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn within(limit: Duration, start: Instant) -> bool {
    start.elapsed() <= limit
}

fn c1_metric_count() -> Verdict {
    let t = Instant::now();
    let a = metric_count(2, 1);
    let b = metric_count(2, 3);
    let fast = within(Duration::from_millis(1), t);
    verdict(a == 4 && b == 24 && fast, format!("X(2,1)={a}, X(2,3)={b}"))
}

fn c2_pair_count() -> Verdict {
    let t = Instant::now();
    let bpsk = Constellation::<f64>::new(ConstellationKind::Bpsk);
    let (_, pairs) = brute_force_min_distance(&real(&[&[1.0, 2.0], &[1.0, 2.0]]), &bpsk);
    let e = DistanceEnumerator::new(&bpsk, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    for _ in 0..10_000 {
        let h = random_matrix(&mut rng, 2, 2);
        if e.min_distance(&h).unwrap() != brute_force_min_distance(&h, &bpsk).0 {
            mismatches += 1;
        }
    }
    let ok = pairs == 6 && e.len() == 4 && mismatches == 0 && within(Duration::from_secs(5), t);
    verdict(
        ok,
        format!("{pairs} pairs, {} terms, {mismatches} mismatches in 10^4", e.len()),
    )
}

fn c3_dominance() -> Verdict {
    let t = Instant::now();
    let violations: usize = [
        (2usize, ConstellationKind::Bpsk),
        (5, ConstellationKind::Bpsk),
        (2, ConstellationKind::Qpsk),
        (5, ConstellationKind::Qpsk),
    ]
    .par_iter()
    .enumerate()
    .map(|(k, &(n, kind))| {
        let c = Constellation::<f64>::new(kind);
        let e = DistanceEnumerator::new(&c, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(300 + k as u64);
        let mut bad = 0;
        for _ in 0..25_000 {
            // 2N candidates: N SR and N RD matrices
            let pool: Vec<CMatrix<f64>> = (0..2 * n).map(|_| random_matrix(&mut rng, 2, 2)).collect();
            let d: Vec<f64> = pool.iter().map(|h| e.min_distance(h).unwrap()).collect();
            let q: Vec<f64> = pool.iter().map(qn_metric).collect();
            if d[common::argmax_by(&d)] < d[common::argmax_by(&q)] {
                bad += 1;
            }
        }
        bad
    })
    .sum();
    verdict(
        violations == 0 && within(Duration::from_secs(60), t),
        format!("{violations} violations in 10^5 pools"),
    )
}

fn pick(protocol: Protocol, h_sr: CMatrix<f64>, h_rd: CMatrix<f64>) -> Mode {
    let bpsk = Constellation::new(ConstellationKind::Bpsk);
    let ch = ChannelRealization::from_matrices(vec![h_sr], vec![h_rd], CMatrix::identity(2)).unwrap();
    let mut sel = Selector::new(protocol, &bpsk, 2, 1.0, 1.0).unwrap();
    let view = BufferView {
        occupancy: &[1],
        capacity: 2,
        source_has_packets: true,
    };
    sel.decide(&ch, &view).unwrap().slot.mode
}

fn c4_examples() -> Verdict {
    let eps = 1e-6;
    let one = (
        pick(
            Protocol::QnMaxLink,
            real(&[&[1.0, 2.0], &[1.0, 2.0]]),
            real(&[&[2.0 + eps, 2.0], &[2.0 + eps, 2.0]]),
        ),
        pick(
            Protocol::MmdMaxLink,
            real(&[&[1.0, 2.0], &[1.0, 2.0]]),
            real(&[&[2.0 + eps, 2.0], &[2.0 + eps, 2.0]]),
        ),
    );
    let two = (
        pick(
            Protocol::QnMaxLink,
            real(&[&[eps, 5.0], &[eps, 4.0]]),
            real(&[&[1.0, 3.0], &[1.0, 3.0]]),
        ),
        pick(
            Protocol::MmdMaxLink,
            real(&[&[eps, 5.0], &[eps, 4.0]]),
            real(&[&[1.0, 3.0], &[1.0, 3.0]]),
        ),
    );
    let ok = one == (Mode::MaxLinkRd, Mode::MaxLinkSr) && two == (Mode::MaxLinkSr, Mode::MaxLinkRd);
    verdict(ok, format!("example 1 (QN, MMD) = {one:?}, example 2 = {two:?}"))
}

const GRID: [f64; 7] = [0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0];

fn pep_curve(protocol: Protocol, relays: usize) -> Vec<f64> {
    GRID.par_iter()
        .enumerate()
        .map(|(k, &snr)| {
            let mut c = EngineConfig::<f64>::new(relays, 2, 2, ConstellationKind::Bpsk, snr);
            c.packet_sets = 50_000;
            c.symbols_per_packet = 1;
            let m = run_protocol(&c, protocol, 5, k as u64).unwrap();
            assert!(m.slots >= 100_000);
            m.pep_theory
        })
        .collect()
}

fn c5_pep_ordering() -> Verdict {
    let t = Instant::now();
    let mmd3 = pep_curve(Protocol::MmdMaxLink, 3);
    let qn3 = pep_curve(Protocol::QnMaxLink, 3);
    let mmd5 = pep_curve(Protocol::MmdMaxLink, 5);
    let mmd10 = pep_curve(Protocol::MmdMaxLink, 10);
    let ordered = mmd3.iter().zip(&qn3).all(|(a, b)| a <= b);
    let improving = (2..GRID.len()).all(|k| mmd10[k] < mmd5[k] && mmd5[k] < mmd3[k]);
    let ok = ordered && improving && within(Duration::from_secs(600), t);
    verdict(
        ok,
        format!(
            "MMD<=QN at all points: {ordered}; N 3->5->10 improves from 4 dB: {improving}; at 12 dB MMD {:.3e} QN {:.3e}",
            mmd3[6], qn3[6]
        ),
    )
}

fn mmd_delay(relays: usize) -> f64 {
    let mut c = EngineConfig::<f64>::new(relays, 2, 2, ConstellationKind::Bpsk, 12.0);
    c.symbols_per_packet = 10;
    run_protocol(&c, Protocol::MmdMaxLink, 1, 0).unwrap().avg_delay
}

fn c6_delay() -> Verdict {
    let t = Instant::now();
    let d5 = mmd_delay(5);
    let d3 = mmd_delay(3);
    let ok = (d5 - 10.0).abs() <= 1.0 && (d3 - 6.0).abs() <= 0.6 && within(Duration::from_secs(600), t);
    verdict(
        ok,
        format!("N=5: {d5:.3} slots (target 10), N=3: {d3:.3} slots (target 6)"),
    )
}

fn c7_switched_delay() -> Verdict {
    let t = Instant::now();
    let mut c = EngineConfig::<f64>::new(5, 2, 2, ConstellationKind::Bpsk, 12.0);
    c.symbols_per_packet = 10;
    c.record_trace = true;
    let a = run_protocol(&c, Protocol::SwitchedMaxLink { switch: 0.0 }, 9, 0).unwrap();
    let b = run_protocol(&c, Protocol::MmdMaxLink, 9, 0).unwrap();
    let identical = a.trace == b.trace && a.bit_errors == b.bit_errors;
    c.record_trace = false;
    c.profile = LinkVarianceProfile::new(1.0, 1.0, 0.2).unwrap();
    let m = run_protocol(&c, Protocol::SwitchedMaxLink { switch: 10.0 }, 9, 0).unwrap();
    let ok = identical && m.avg_delay < 1.0 && within(Duration::from_secs(600), t);
    verdict(
        ok,
        format!(
            "S=0 trace identical to MMD: {identical}; S=10, sd=0.2: delay {:.3} slots, {:.1}% of sets relayed",
            m.avg_delay,
            100.0 * m.fraction_relayed()
        ),
    )
}

const SEEDS: u64 = 10;

/// Per-seed BER of each protocol at one SNR, 10^4 packet-sets in total.
fn ber_trials(base: &EngineConfig<f64>, protocols: &[Protocol], snr: f64, stream: u64) -> Vec<Vec<f64>> {
    let mut c = base.clone();
    c.energy = 10f64.powf(snr / 10.0);
    c.packet_sets = 10_000 / SEEDS as usize;
    protocols
        .iter()
        .map(|&p| {
            (0..SEEDS)
                .into_par_iter()
                .map(|s| run_protocol(&c, p, 100 + s, stream).unwrap().ber)
                .collect()
        })
        .collect()
}

/// First protocol below the second at every SNR with 95% confidence.
fn ber_below(base: &EngineConfig<f64>, better: Protocol, worse: Protocol, grid: &[f64]) -> (bool, String) {
    let mut ok = true;
    let mut notes = Vec::new();
    for (k, &snr) in grid.iter().enumerate() {
        let r = ber_trials(base, &[better, worse], snr, k as u64);
        let upper = paired_upper(&r[0], &r[1]);
        ok &= upper < 0.0;
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        notes.push(format!("{snr}dB {:.2e}/{:.2e}", mean(&r[0]), mean(&r[1])));
    }
    (ok, notes.join(", "))
}

fn c8_ber_orderings() -> Verdict {
    let t = Instant::now();
    let a_cfg = EngineConfig::<f64>::new(3, 2, 2, ConstellationKind::Bpsk, 0.0);
    let (a, a_note) = ber_below(
        &a_cfg,
        Protocol::MmdMaxLink,
        Protocol::QnMaxLink,
        &[2.0, 4.0, 6.0, 8.0, 10.0, 12.0],
    );
    let b_cfg = EngineConfig::<f64>::new(10, 2, 2, ConstellationKind::Qpsk, 0.0);
    let (b, b_note) = ber_below(
        &b_cfg,
        Protocol::SwitchedMaxLink { switch: 1.0 },
        Protocol::DirectMimo,
        &[4.0, 6.0, 8.0, 10.0, 12.0],
    );
    let mut c_cfg = EngineConfig::<f64>::new(5, 2, 2, ConstellationKind::Bpsk, 0.0);
    c_cfg.profile = LinkVarianceProfile::new(1.0, 1.0, 5.0).unwrap();
    let (c, c_note) = ber_below(
        &c_cfg,
        Protocol::SwitchedMaxLink { switch: 1.0 },
        Protocol::MmdMaxLink,
        &[0.0, 2.0, 4.0, 6.0, 8.0, 10.0],
    );
    let ok = a && b && c && within(Duration::from_secs(1800), t);
    verdict(
        ok,
        format!("(a) MMD<QN {a} [{a_note}]; (b) Switched<MIMO {b} [{b_note}]; (c) Switched<MMD at sd=5 {c} [{c_note}]"),
    )
}

fn c9_dtmc() -> Verdict {
    let t = Instant::now();
    let engine = |relays: usize, l: usize| {
        let mut c = EngineConfig::<f64>::new(relays, 1, l, ConstellationKind::Bpsk, 6.0);
        c.packet_sets = 40_000;
        c.symbols_per_packet = 1;
        c
    };
    let est = SelectionRuleEstimator::new(&engine(1, 1), Protocol::MmdMaxLink, 1000, 1).unwrap();
    let model = dtmc_build(1, 1, 1, &est, DEFAULT_STATE_CAP).unwrap();
    let pi = stationary_distribution(&model).unwrap();
    let m = outage_throughput_delay(&model, &pi, 0.5, None).unwrap();
    let two_state =
        model.len() == 2 && (pi[0] - 0.5).abs() < 1e-12 && m.p_outage == 0.0 && (m.delay - 1.0).abs() < 1e-12;

    let mut worst_residual = 0.0f64;
    let mut worst_row = 0.0f64;
    let mut worst_queue = 0.0f64;
    for (relays, l) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
        for protocol in [
            Protocol::MmdMaxLink,
            Protocol::QnMaxLink,
            Protocol::SwitchedMaxLink { switch: 1.0 },
        ] {
            let cfg = engine(relays, l);
            let est = SelectionRuleEstimator::new(&cfg, protocol, 20_000, 3).unwrap();
            let model = dtmc_build(relays, l, est.z(), &est, DEFAULT_STATE_CAP).unwrap();
            for i in 0..model.len() {
                worst_row = worst_row.max((model.row_sum(i) - 1.0).abs());
            }
            let pi = stationary_distribution(&model).unwrap();
            worst_residual = worst_residual.max(fixed_point_residual(&model, &pi));
            let predicted = outage_throughput_delay(&model, &pi, 0.5, None).unwrap();
            let sim = run_protocol(&cfg, protocol, 3, 0).unwrap();
            for (p, s) in predicted.queue_lengths.iter().zip(&sim.mean_occupancy) {
                worst_queue = worst_queue.max((p - s).abs() / s);
            }
        }
    }
    let ok = two_state
        && worst_row <= 1e-10
        && worst_residual <= 1e-10
        && worst_queue <= 0.10
        && within(Duration::from_secs(300), t);
    verdict(
        ok,
        format!(
            "N=L=1 chain exact: {two_state}; max |row sum - 1| {worst_row:.1e}; max residual {worst_residual:.1e}; \
             max queue error {:.1}%",
            100.0 * worst_queue
        ),
    )
}

fn c10_sum_rate() -> Verdict {
    let p = RateParams::new(1.0, 1.0, 2).unwrap();
    let i = CMatrix::<f64>::identity(2);
    let sd = sum_rate_slot(Mode::Direct, &i, &p).unwrap();
    let sr = sum_rate_slot(Mode::MaxLinkSr, &i, &p).unwrap();
    let hand_sr = 0.5 * 2.25f64.log2();
    let agg = sum_rate_aggregate(&[sr, sr], &[sr], &[sd]).unwrap();
    let weighted = (3.0 * sr + 2.0 * sd) / (3.0 + 2.0);
    let ok = (sd - 2.0).abs() <= 1e-12 && (sr - hand_sr).abs() <= 1e-12 && (agg - weighted).abs() <= 1e-12;
    verdict(
        ok,
        format!("SD {sd}, SR {sr:.12}, aggregate {agg:.12} vs {weighted:.12}"),
    )
}

fn c11_complexity() -> Verdict {
    let r = complexity_report(3, 1, 2, 1);
    let ok = (
        r.mmd_additions,
        r.mmd_multiplications,
        r.qn_additions,
        r.qn_multiplications,
    ) == (36, 48, 18, 24);
    verdict(
        ok,
        format!(
            "MMD {} adds {} mults, QN {} adds {} mults",
            r.mmd_additions, r.mmd_multiplications, r.qn_additions, r.qn_multiplications
        ),
    )
}

fn main() -> ExitCode {
    let checks: [(&str, fn() -> Verdict); 11] = [
        ("1 metric count", c1_metric_count),
        ("2 pair count", c2_pair_count),
        ("3 MMD dominates QN", c3_dominance),
        ("4 worked examples", c4_examples),
        ("5 PEP ordering", c5_pep_ordering),
        ("6 MMD delay", c6_delay),
        ("7 switched delay", c7_switched_delay),
        ("8 BER orderings", c8_ber_orderings),
        ("9 DTMC", c9_dtmc),
        ("10 sum rate", c10_sum_rate),
        ("11 complexity", c11_complexity),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let t = Instant::now();
        let v = check();
        failed += !v.pass as usize;
        println!(
            "criterion {name}: {} ({:.1}s) {}",
            if v.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            v.detail
        );
    }
    println!("acceptance: {} of 11 passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
