use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oamspec_cli::commands::{
    cmd_calibrate, cmd_deviation_scan, cmd_reconstruct, cmd_simulate, cmd_smf_compare, ReconstructArgs, SimulateArgs,
    SmfCompareArgs,
};
use oamspec_cli::config::ProtocolChoice;
use oamspec_cli::CliResult;

/// Simulate a rotating-interferometer OAM spectrometer and reconstruct spectra.
#[derive(Parser)]
#[command(name = "oamspec", version)]
struct Cli {
    /// Directory receiving all output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    /// Also write SVG plots.
    #[arg(long, global = true)]
    plot: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize intensity traces for every shot of a protocol.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        protocol: Option<ProtocolChoice>,
    },
    /// Recover the OAM spectrum from trace files.
    Reconstruct {
        /// Run config supplying protocol, N and polarization defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory holding trace_*.csv/json; defaults to --out-dir.
        #[arg(long)]
        traces: Option<PathBuf>,
        #[arg(long, value_enum)]
        protocol: Option<ProtocolChoice>,
        /// Reconstruction truncation N.
        #[arg(long)]
        n: Option<usize>,
        /// Polarization curve CSV (theta_rad, cos_psi or inv_cos_psi).
        #[arg(long)]
        polarization: Option<PathBuf>,
        /// Known input spectrum for R^2 and bar data.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        allow_undersampled: bool,
    },
    /// Apparent spectrum of a single-mode-fiber detector.
    SmfCompare {
        #[arg(long)]
        spectrum: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        sigma_over_w0: Option<f64>,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        diffraction_efficiency: Option<f64>,
    },
    /// Overlap and fractional-overlap sweeps for rotator angular deviation.
    DeviationScan {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Fit I = a + b cos 2(beta - c) to half-wave-plate measurements.
    Calibrate {
        /// CSV with columns beta_deg,intensity.
        #[arg(long, alias = "config")]
        measurements: PathBuf,
    },
}

fn run(cli: Cli) -> CliResult<Vec<PathBuf>> {
    match cli.command {
        Command::Simulate { config, seed, protocol } => cmd_simulate(SimulateArgs {
            config: &config,
            out_dir: &cli.out_dir,
            seed,
            protocol,
        }),
        Command::Reconstruct {
            config,
            traces,
            protocol,
            n,
            polarization,
            reference,
            allow_undersampled,
        } => cmd_reconstruct(ReconstructArgs {
            config: config.as_deref(),
            traces_dir: traces.as_deref().unwrap_or(&cli.out_dir),
            out_dir: &cli.out_dir,
            protocol,
            n,
            polarization: polarization.as_deref(),
            reference: reference.as_deref(),
            allow_undersampled,
            plot: cli.plot,
        }),
        Command::SmfCompare {
            spectrum,
            config,
            sigma_over_w0,
            kappa,
            diffraction_efficiency,
        } => cmd_smf_compare(SmfCompareArgs {
            spectrum: &spectrum,
            config: config.as_deref(),
            out_dir: &cli.out_dir,
            sigma_over_w0,
            kappa,
            diffraction_efficiency,
            plot: cli.plot,
        }),
        Command::DeviationScan { config } => cmd_deviation_scan(config.as_deref(), &cli.out_dir, cli.plot),
        Command::Calibrate { measurements } => cmd_calibrate(&measurements, &cli.out_dir),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
