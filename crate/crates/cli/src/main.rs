use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use iniqkd_core::sweep::{self, SweepConfig};

/// Key rates of INI-QKD with and without advantage distillation.
#[derive(Debug, Parser)]
#[command(name = "iniqkd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// key=value configuration file, applied on top of the preset
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Bundled scenario (ideal, ed10, ed30, ed50, d15, d23, d25, d20ed15, d10ed10)
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Output file (CSV)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true)]
    workers: Option<usize>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Search the distilled rate in max-distance
    #[arg(long, global = true, value_name = "BOOL")]
    use_ad: Option<bool>,

    #[arg(long, global = true)]
    b_max: Option<u32>,

    /// per-event or total
    #[arg(long, global = true)]
    clamp: Option<String>,

    /// arm or arm-etad
    #[arg(long, global = true)]
    ie_eta: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimised rates over the distance grid, as CSV
    Sweep,
    /// Largest distance with a positive rate
    MaxDistance,
    /// Compare analytic values with Monte-Carlo estimates
    Verify,
    /// Print the fully resolved configuration
    ShowConfig,
}

fn resolve(cli: &Cli) -> iniqkd_core::Result<SweepConfig> {
    let mut config = match &cli.preset {
        Some(name) => SweepConfig::preset(name)?,
        None => SweepConfig::default(),
    };
    if let Some(path) = &cli.config {
        config = SweepConfig::load(path, config)?;
    }
    if let Some(out) = &cli.out {
        config.out = Some(out.clone());
    }
    if let Some(w) = cli.workers {
        config.workers = w;
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(u) = cli.use_ad {
        config.use_ad = u;
    }
    if let Some(b) = cli.b_max {
        config.params.b_max = b;
    }
    if let Some(c) = &cli.clamp {
        config.clamp = sweep::parse_clamp(c)?;
    }
    if let Some(e) = &cli.ie_eta {
        config.ie_eta = sweep::parse_ie_eta(e)?;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> iniqkd_core::Result<ExitCode> {
    let config = resolve(cli)?;
    match cli.command {
        Command::ShowConfig => print!("{}", config.to_text()),
        Command::Sweep => {
            let csv = sweep::run_sweep(&config)?;
            if config.out.is_none() {
                print!("{csv}");
            }
        }
        Command::MaxDistance => {
            let md = sweep::run_max_distance(&config, config.use_ad)?;
            println!(
                "use_ad={} distance_km={:.1} b_at_endpoint={} mu_at_endpoint={:.4}",
                config.use_ad, md.distance_km, md.b, md.mu
            );
        }
        Command::Verify => {
            let report = sweep::run_verify(&config)?;
            print!("{}", report.text());
            if !report.verdict.passed() {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
