use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiment::runner::{AggregateRow, ExperimentResults};

pub const TRIAL_HEADER: &str =
    "protocol,snr_db,seed,ber,pep_theory,sum_rate_bits_hz,avg_delay_slots,avg_throughput,n_sr,n_rd,n_sd";

pub const AGGREGATE_HEADER: &str = "protocol,snr_db,seeds,ber_mean,ber_stderr,pep_theory_mean,pep_theory_stderr,\
sum_rate_bits_hz_mean,sum_rate_bits_hz_stderr,avg_delay_slots_mean,avg_delay_slots_stderr,\
avg_throughput_mean,avg_throughput_stderr,n_sr_mean,n_rd_mean,n_sd_mean";

/// Per-trial CSV text. Floats use Rust's shortest round-trip scientific
/// notation, so they parse back exactly.
pub fn trials_csv(results: &ExperimentResults) -> String {
    let mut out = String::from(TRIAL_HEADER);
    out.push('\n');
    for t in &results.trials {
        out.push_str(&format!(
            "{},{:e},{},{:e},{:e},{:e},{:e},{:e},{},{},{}\n",
            t.protocol,
            t.snr_db,
            t.seed,
            t.ber,
            t.pep_theory,
            t.sum_rate,
            t.avg_delay,
            t.avg_throughput,
            t.n_sr,
            t.n_rd,
            t.n_sd
        ));
    }
    out
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from(AGGREGATE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{:e},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
            r.protocol,
            r.snr_db,
            r.seeds,
            r.ber.mean,
            r.ber.stderr,
            r.pep_theory.mean,
            r.pep_theory.stderr,
            r.sum_rate.mean,
            r.sum_rate.stderr,
            r.avg_delay.mean,
            r.avg_delay.stderr,
            r.avg_throughput.mean,
            r.avg_throughput.stderr,
            r.n_sr,
            r.n_rd,
            r.n_sd
        ));
    }
    out
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(text.as_bytes()).map_err(io)
}

/// Writes `<dir>/<name>.csv` and `<dir>/<name>_aggregate.csv`, creating
/// `dir` if needed. Returns both paths.
pub fn emit_results(results: &ExperimentResults, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    if results.trials.is_empty() {
        return Err(Error::InvalidParameter("no results to write".into()));
    }
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let trials = dir.join(format!("{}.csv", results.name));
    let aggregate = dir.join(format!("{}_aggregate.csv", results.name));
    write_file(&trials, &trials_csv(results))?;
    write_file(&aggregate, &aggregate_csv(&results.aggregate()))?;
    Ok((trials, aggregate))
}
