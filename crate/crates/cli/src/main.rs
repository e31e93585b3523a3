use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use maxlink::experiment::{dtmc_report, DtmcRow};
use maxlink::{complexity_report, emit_results, load_config, run_experiment};

#[derive(Parser)]
#[command(
    name = "maxlink",
    version,
    about = "Buffer-aided cooperative MIMO relay selection simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo sweep and write trial and aggregate CSVs.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the buffer-state Markov chain and print outage, throughput and delay.
    Dtmc {
        #[arg(long)]
        config: PathBuf,
        /// Also write the stationary distributions here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Theoretical worst-case PEP per protocol and SNR.
    Pep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Arithmetic cost of the MMD and QN metrics.
    Complexity {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        ms: u32,
        #[arg(long)]
        u: u64,
        #[arg(long)]
        w: u32,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, out } => simulate(&config, &out),
        Command::Dtmc { config, out } => dtmc(&config, out.as_deref()),
        Command::Pep { config } => pep(&config),
        Command::Complexity { n, ms, u, w } => {
            let r = complexity_report(n, u, ms, w);
            println!("criterion,metrics,additions,multiplications");
            println!("mmd,{},{},{}", r.metric_count, r.mmd_additions, r.mmd_multiplications);
            println!("qn,1,{},{}", r.qn_additions, r.qn_multiplications);
            Ok(())
        }
    }
}

fn simulate(config: &Path, out: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    let results = run_experiment(&cfg)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let (trials, aggregate) = emit_results(&results, out)?;
    println!("{}", trials.display());
    println!("{}", aggregate.display());
    Ok(())
}

fn dtmc(config: &Path, out: Option<&Path>) -> Result<()> {
    let cfg = load_config(config)?;
    let rows = dtmc_report(&cfg)?;
    println!("protocol,snr_db,states,p_outage,throughput,mean_queue,delay,p_ml,p_ml_prime,residual");
    for r in &rows {
        println!(
            "{},{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.protocol,
            r.snr_db,
            r.states,
            r.p_outage,
            r.throughput,
            r.mean_queue,
            r.delay,
            r.p_ml,
            r.p_ml_prime,
            r.residual
        );
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(format!("{}_pi.csv", cfg.name));
        fs::write(&path, pi_csv(&rows)).with_context(|| format!("writing {}", path.display()))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn pi_csv(rows: &[DtmcRow]) -> String {
    let mut s = String::from("protocol,snr_db,state,pi\n");
    for r in rows {
        for (k, p) in r.pi.iter().enumerate() {
            let _ = writeln!(s, "{},{:e},{k},{p:e}", r.protocol, r.snr_db);
        }
    }
    s
}

fn pep(config: &Path) -> Result<()> {
    let mut cfg = load_config(config)?;
    // the PEP trace only needs the per-slot selections
    cfg.symbols_per_packet = 1;
    let results = run_experiment(&cfg)?;
    println!("protocol,snr_db,seeds,pep_mean,pep_stderr");
    for row in results.aggregate() {
        println!(
            "{},{:e},{},{:e},{:e}",
            row.protocol, row.snr_db, row.seeds, row.pep_theory.mean, row.pep_theory.stderr
        );
    }
    Ok(())
}
