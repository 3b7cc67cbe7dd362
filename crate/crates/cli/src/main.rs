use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use noisytd::verify::{self, CorruptedGini, VerifyOptions};
use noisytd::{check_invariants, config, plot, report, thread_pool, write_outputs, HarnessError};

#[derive(Parser)]
#[command(
    name = "noisytd",
    version,
    about = "Noise-tolerant top-down decision tree experiments"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fault {
    CorruptedGini,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// `key=value` override; repeatable.
        #[arg(long = "set", value_name = "K=V")]
        set: Vec<String>,
        #[arg(long, hide = true)]
        inject_fault: Option<Fault>,
    },
    /// Run every oracle suite and print the ledger.
    VerifyAll {
        /// Soft time budget in seconds.
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, hide = true)]
        inject_fault: Option<Fault>,
    },
    /// Render SVG charts from a report CSV.
    Plot {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// List config keys with defaults.
    Keys,
}

fn options(fault: Option<Fault>) -> VerifyOptions {
    let mut o = VerifyOptions::default();
    if let Some(Fault::CorruptedGini) = fault {
        o.gini = Arc::new(CorruptedGini);
    }
    o
}

fn overrides(set: &[String]) -> Result<Vec<(String, String)>, HarnessError> {
    set.iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| HarnessError::Config(format!("--set `{s}` is not key=value")))
        })
        .collect()
}

fn exec(cmd: Cmd) -> Result<(), HarnessError> {
    match cmd {
        Cmd::Run {
            config: path,
            set,
            inject_fault,
        } => {
            let cfg = config::ExperimentConfig::load(&path, &overrides(&set)?)?;
            let pool = thread_pool()?;
            let out = pool.install(|| noisytd::run_with(&cfg, options(inject_fault)))?;
            write_outputs(&out, &cfg.out_dir)?;
            for r in &out.summary.invariants {
                println!(
                    "{} {} {}",
                    if r.pass { "PASS" } else { "FAIL" },
                    r.name,
                    r.detail
                );
            }
            println!("{} rows -> {}", out.rows.len(), cfg.out_dir.display());
            check_invariants(&out)
        }
        Cmd::VerifyAll {
            budget,
            seed,
            inject_fault,
        } => {
            let opts = VerifyOptions {
                seed,
                budget: budget.map(Duration::from_secs_f64),
                ..options(inject_fault)
            };
            let results = thread_pool()?.install(|| verify::verify_all(&opts));
            for r in &results {
                println!("{r}");
            }
            match results.iter().find(|r| !r.pass()) {
                None => Ok(()),
                Some(r) => Err(HarnessError::Invariant(r.name.to_string())),
            }
        }
        Cmd::Plot { report: path, out } => {
            let rows = report::from_csv(&std::fs::read_to_string(&path)?)?;
            for p in plot::emit_plots(&rows, &out)? {
                println!("{}", p.display());
            }
            Ok(())
        }
        Cmd::Keys => {
            for (k, default, doc) in config::KEYS {
                println!("{k} = {default}    # {doc}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match exec(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
