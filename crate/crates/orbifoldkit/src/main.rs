use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use orbifoldkit::{run_file, to_json, Options};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "orbifoldkit", version, about = "Run orbifold scenario files")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute scenarios and report per-command outcomes.
    Run {
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        /// Write the machine-readable report here.
        #[arg(long)]
        json_out: Option<PathBuf>,
        /// Scenarios run in parallel; each one runs sequentially.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Word-length cap for groupoid saturation.
        #[arg(long, default_value_t = orbifold_core::groupoid::DEFAULT_DEPTH_CAP)]
        depth_cap: usize,
        /// Do not count unknown outcomes as failures.
        #[arg(long)]
        allow_unknown: bool,
    },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(2)
        }
    }
}

fn real_main() -> anyhow::Result<u8> {
    let Cmd::Run { scenarios, json_out, jobs, depth_cap, allow_unknown } = Cli::parse().cmd;
    let opts = Options { depth_cap, allow_unknown };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().context("thread pool")?;
    let results: Vec<_> = pool.install(|| scenarios.par_iter().map(|p| run_file(p, &opts)).collect());
    let mut reports = Vec::new();
    let mut code = 0;
    for (path, r) in scenarios.iter().zip(results) {
        match r {
            Ok(rep) => {
                print!("{}", rep.human());
                code = code.max(rep.exit_code(allow_unknown));
                reports.push(rep);
            }
            Err(e) => {
                eprintln!("{}: {}", path.display(), e);
                code = 2;
            }
        }
    }
    if let Some(out) = json_out {
        std::fs::write(&out, to_json(&reports)).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(code as u8)
}
