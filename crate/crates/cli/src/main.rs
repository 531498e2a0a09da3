use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use mixbank::harness::{run_demo, run_experiment_to_dir, ExperimentConfig};
use mixbank::model::{validate_parameters, Snr};

#[derive(Parser)]
#[command(
    name = "mixbank",
    version,
    about = "Sub-Nyquist multiband acquisition and blind recovery simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check acquisition parameters against the uniqueness conditions.
    Validate(ValidateArgs),
    /// Run one fully traced acquisition/recovery pass.
    Demo(DemoArgs),
    /// Run the Monte Carlo recovery-rate sweep and write CSV outputs.
    Experiment(ExperimentArgs),
}

/// Options shared by demo and experiment; every flag overrides the config
/// file, which overrides the built-in defaults.
#[derive(Args)]
struct ConfigArgs {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Nyquist rate f_nyq in Hz.
    #[arg(long)]
    nyquist_rate: Option<f64>,
    /// Number of band pairs N.
    #[arg(long)]
    band_count: Option<usize>,
    /// Band width B in Hz.
    #[arg(long)]
    band_width: Option<f64>,
    /// Per-band energies, comma separated.
    #[arg(long)]
    energies: Option<String>,
    /// Acquisition channel count m.
    #[arg(long)]
    channels: Option<usize>,
    /// Sign alternations per period M (odd).
    #[arg(long)]
    alternations: Option<usize>,
    /// Anti-alias filter: "ideal" or a FIR order.
    #[arg(long)]
    filter: Option<String>,
    /// Rendering half-window in units of 1/f_nyq.
    #[arg(long)]
    grid_half_width_cycles: Option<f64>,
    /// Rendering grid cells.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Trials per (channel subset, SNR) cell.
    #[arg(long)]
    trials: Option<usize>,
    /// SNR levels in dB, comma separated; "noiseless" allowed.
    #[arg(long)]
    snr_list: Option<String>,
    /// Channel subset sizes, comma separated.
    #[arg(long)]
    channel_subsets: Option<String>,
    /// Master seed for the whole run.
    #[arg(long)]
    master_seed: Option<u64>,
    /// Relative eigenvalue threshold for the noise space.
    #[arg(long)]
    tau: Option<f64>,
    /// SOMP budget; 0 selects the joint-sparsity bound 4N.
    #[arg(long)]
    sparsity_budget: Option<usize>,
    /// SNR definition: norm10 (10 log10 of the norm ratio) or norm20.
    #[arg(long)]
    snr_convention: Option<String>,
    /// Draw channel subsets at random instead of taking the first channels.
    #[arg(long)]
    random_subsets: bool,
    /// Record wall time per trial (makes outputs non-reproducible).
    #[arg(long)]
    timing: bool,
}

impl ConfigArgs {
    fn build(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            cfg.apply_text(&text)?;
        }
        macro_rules! over {
            ($field:expr, $key:literal) => {
                if let Some(v) = &$field {
                    cfg.set($key, &v.to_string())?;
                }
            };
        }
        over!(self.nyquist_rate, "nyquist_rate_hz");
        over!(self.band_count, "band_count");
        over!(self.band_width, "band_width_hz");
        over!(self.energies, "energies");
        over!(self.channels, "channels");
        over!(self.alternations, "alternations");
        over!(self.filter, "filter");
        over!(self.grid_half_width_cycles, "grid_half_width_cycles");
        over!(self.grid_points, "grid_points");
        over!(self.trials, "trials");
        over!(self.snr_list, "snr_list_db");
        over!(self.channel_subsets, "channel_subsets");
        over!(self.master_seed, "master_seed");
        over!(self.tau, "tau");
        over!(self.sparsity_budget, "sparsity_budget");
        over!(self.snr_convention, "snr_convention");
        if self.random_subsets {
            cfg.random_subsets = true;
        }
        if self.timing {
            cfg.record_timing = true;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Check the blind (4N) rather than known-support (2N) channel bound.
    #[arg(long, default_value_t = true)]
    blind: bool,
}

#[derive(Args)]
struct DemoArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Trial seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// SNR in dB, or "noiseless".
    #[arg(long, default_value = "noiseless")]
    snr: String,
    /// Directory for waveform/stream/matrix dumps.
    #[arg(long)]
    dump_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory for trials.csv, summary.csv, manifest.txt.
    #[arg(long, default_value = "mixbank-out")]
    out_dir: PathBuf,
}

fn parse_snr(s: &str) -> anyhow::Result<Snr> {
    if s.eq_ignore_ascii_case("noiseless") {
        Ok(Snr::Noiseless)
    } else {
        Ok(Snr::Db(s.parse().context("SNR must be a dB value or 'noiseless'")?))
    }
}

fn run() -> anyhow::Result<bool> {
    match Cli::parse().command {
        Command::Validate(args) => {
            let cfg = args.config.build()?;
            let report =
                validate_parameters(&cfg.model, cfg.alternations, cfg.channels, args.blind);
            println!("{report}");
            Ok(report.all_pass())
        }
        Command::Demo(args) => {
            let cfg = args.config.build()?;
            let snr = parse_snr(&args.snr)?;
            let out = run_demo(&cfg, args.seed, snr, args.dump_dir.as_deref())?;
            print!("{}", out.report);
            if let Some(dir) = &args.dump_dir {
                println!("dumps written to {}", dir.display());
            }
            Ok(true)
        }
        Command::Experiment(args) => {
            let cfg = args.config.build()?;
            let result = run_experiment_to_dir(&cfg, &args.out_dir)?;
            println!("{}", result.summary_csv.trim_end());
            println!(
                "wrote {} trial rows to {}",
                result.records.len(),
                args.out_dir.display()
            );
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
