use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use leafray::experiment::{export_convergence, leaf_sweep, run_experiment, ExperimentConfig, Status};
use leafray::{Error, Result};

#[derive(Parser)]
#[command(name = "leafray", version, about = "Leafwise complex ray transform and parallel transport experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    config: PathBuf,
    /// Output directory; defaults to `output` in the config, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write report.json, fields/ and plot/.
    Run(Common),
    /// Symmetry checks over the frame plan; writes sweep.csv.
    Sweep(Common),
    /// Rerun at successively halved spacing; writes convergence.csv.
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        levels: u32,
    },
}

fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("threads: {e}")))?;
    }
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    cfg.validate()?;
    let out = common.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| Path::new("out").to_path_buf());
    Ok((cfg, out))
}

fn execute(command: &Command) -> Result<bool> {
    match command {
        Command::Run(common) => {
            let (cfg, out) = load(common)?;
            let art = run_experiment(&cfg)?;
            art.write(&out)?;
            let r = &art.report;
            match &r.error {
                Some(e) => eprintln!("{}: error: {e}", r.kind),
                None => println!("{}: gap {:.3e} (tolerance {:.1e}) {}", r.kind, r.gap, r.tolerance, if r.pass { "pass" } else { "FAIL" }),
            }
            Ok(r.pass)
        }
        Command::Sweep(common) => {
            let (cfg, out) = load(common)?;
            let sweep = leaf_sweep(&cfg)?;
            sweep.write(&cfg, &out)?;
            let failed = sweep.rows.iter().filter(|r| !r.pass).count();
            println!("{} frames, {failed} failed", sweep.rows.len());
            Ok(sweep.pass())
        }
        Command::Converge { common, levels } => {
            let (cfg, out) = load(common)?;
            let conv = export_convergence(&cfg, *levels)?;
            conv.write(&out)?;
            println!("slope {} (minimum {}) {}", conv.slope_label(), conv.min_slope, if conv.pass { "pass" } else { "FAIL" });
            Ok(conv.pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let status = match execute(&cli.command) {
        Ok(pass) => Status::from_pass(pass),
        Err(e) => {
            eprintln!("leafray: {e}");
            Status::from_error(&e)
        }
    };
    ExitCode::from(status as u8)
}
