use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lg4nmr_lab::config::{validate_config, Engine, ExperimentConfig};
use lg4nmr_lab::run::{run_experiment, RunReport};
use lg4nmr_lab::spectrum::most_prominent;
use lg4nmr_lab::sweep::sweep;
use lg4nmr_lab::LabError;

#[derive(Parser)]
#[command(name = "lg4nmr", version, about = "LG4-decoupled NV-NMR spectroscopy simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Engine override: full density-matrix simulation, geometric oracle, or both.
    #[arg(long, global = true, value_enum)]
    engine: Option<Engine>,
    /// Use the full 0.5 s evolution instead of the 0.05 s desk default.
    #[arg(long, global = true)]
    full: bool,
    /// Seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run { config: PathBuf },
    /// Run one experiment per value of a dotted config path.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
}

fn load(cli: &Cli, path: &Path) -> Result<ExperimentConfig, LabError> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(engine) = cli.engine {
        cfg.run.engine = engine;
    }
    if cli.full {
        cfg = cfg.full_scale();
    }
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
        cfg.noise.seed = None;
    }
    if let Some(out) = &cli.out {
        cfg.run.output_dir = out.clone();
    }
    Ok(cfg)
}

fn describe(report: &RunReport) {
    println!("output: {}", report.output_dir.display());
    println!(
        "blocks: {}  wall time: {:.1} s  expected peaks (Hz): {:?}",
        report.manifest.n_blocks, report.manifest.wall_time_s, report.manifest.expected_peaks_hz
    );
    for (name, out) in [("quantum", &report.quantum), ("oracle", &report.oracle)] {
        if let Some(out) = out {
            let peaks = most_prominent(&out.spectrum.peaks, 2);
            let list: Vec<String> = peaks
                .iter()
                .map(|p| format!("{:.1} Hz (δ = {:.1} Hz)", p.frequency, p.shift.unwrap_or(f64::NAN)))
                .collect();
            println!("{name}: peaks {}  off-peak fraction {:.3e}", list.join(", "), out.off_peak_fraction);
        }
    }
    if let Some(r) = &report.residual {
        println!("quantum vs oracle RMS residual: {:.3e} ({:.2}% of amplitude)", r.rms, 100.0 * r.relative);
    }
}

fn execute(cli: &Cli) -> Result<(), LabError> {
    match &cli.command {
        Command::Validate { config } => {
            let cfg = load(cli, config)?;
            let geometry = validate_config(&cfg)?;
            let d = cfg.derived();
            println!("ok: {} nuclei, {} blocks of {:.3e} s", geometry.positions.len(), d.n_blocks, 4.0 * d.segment);
        }
        Command::Run { config } => {
            let cfg = load(cli, config)?;
            describe(&run_experiment(&cfg)?);
        }
        Command::Sweep { config, param, values } => {
            let cfg = load(cli, config)?;
            let (outcomes, summary) = sweep(&cfg, param, values)?;
            let mut failed = 0;
            for o in &outcomes {
                match &o.result {
                    Ok(report) => {
                        println!("[{param} = {}]", o.value);
                        describe(report);
                    }
                    Err(e) => {
                        failed += 1;
                        eprintln!("[{param} = {}] failed: {e}", o.value);
                    }
                }
            }
            println!("summary: {}", cfg.output_dir().join(&summary.path).display());
            if failed > 0 {
                return Err(LabError::Sampling(format!("{failed} of {} sweep runs failed", outcomes.len())));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}
