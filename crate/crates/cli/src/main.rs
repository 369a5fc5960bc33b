//! `cit` — command-line interface to the cavity-EIT photon-number filter
//! toolkit in `cit-core`.
//!
//! Exit codes: `0` success, `1` invalid input (flags, config files,
//! parameter ranges), `2` runtime failures (numerical guards, unreachable
//! gates, I/O).

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use cit_cli::commands::{self, Io, SolveTdArgs, SweepFormat};
use cit_cli::config::{self, engine_from_name, RunConfig};
use cit_cli::error::CliError;
use cit_cli::presets;

#[derive(Parser)]
#[command(
    name = "cit",
    version,
    about = "cavity-EIT photon-number filtering: delays, feasibility, propagation, time gates",
    propagate_version = true
)]
struct Cli {
    /// Directory for output files (commands that analyse without producing
    /// data write their JSON report only when this is set)
    #[arg(long, global = true, env = "CIT_OUT_DIR", value_name = "DIR")]
    out: Option<PathBuf>,

    /// Print the JSON report on stdout instead of the human summary
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

/// Where the run configuration comes from.
#[derive(Args)]
struct ConfigSource {
    /// Config file to run (`-` reads stdin)
    #[arg(long, value_name = "FILE", conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Run a shipped operating point unchanged
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
}

impl ConfigSource {
    fn load(&self) -> Result<RunConfig, CliError> {
        match (&self.config, &self.preset) {
            (Some(path), None) => {
                let (text, shown) = if path.as_os_str() == "-" {
                    let mut text = String::new();
                    std::io::stdin()
                        .read_to_string(&mut text)
                        .map_err(|e| CliError::validation(format!("cannot read stdin: {e}")))?;
                    (text, "<stdin>".to_string())
                } else {
                    let text = std::fs::read_to_string(path).map_err(|e| {
                        CliError::validation(format!("cannot read {}: {e}", path.display()))
                    })?;
                    (text, path.display().to_string())
                };
                config::parse(&text).map_err(|errors| {
                    let lines: Vec<String> = errors
                        .iter()
                        .map(|e| match e.line {
                            Some(n) => format!("{shown}:{n}: {}", e.message),
                            None => format!("{shown}: {}", e.message),
                        })
                        .collect();
                    CliError::validation(lines.join("\n"))
                })
            }
            (None, Some(name)) => presets::preset(name).ok_or_else(|| {
                CliError::validation(format!(
                    "unknown preset `{name}` (available: {})",
                    presets::SUMMARIES
                        .iter()
                        .map(|(n, _)| *n)
                        .collect::<Vec<_>>()
                        .join(", ")
                ))
            }),
            (None, None) => Err(CliError::validation(
                "give a configuration: --config FILE (or `-` for stdin) or --preset NAME",
            )),
            (Some(_), Some(_)) => unreachable!("clap rejects --config with --preset"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate per-sector group velocities, delays, and windows
    Delay {
        #[command(flatten)]
        source: ConfigSource,
        /// Highest photon number to tabulate (default: the pulse's)
        #[arg(long, value_name = "N")]
        n_max: Option<u32>,
    },

    /// Check an operating point against the design gates
    Feasibility {
        #[command(flatten)]
        source: ConfigSource,
        /// Ratio that counts as comfortably satisfied (default 10)
        #[arg(long, value_name = "RATIO")]
        strong_ratio: Option<f64>,
        /// Worst margin still counted as marginal (default 0.25)
        #[arg(long, value_name = "MARGIN")]
        marginal_floor: Option<f64>,
    },

    /// Propagate one photon-number sector through the medium spectrally
    Propagate {
        #[command(flatten)]
        source: ConfigSource,
        /// Photon sector to traverse (default: one probe photon on top of
        /// the initial cavity occupation)
        #[arg(long, value_name = "N")]
        sector: Option<u32>,
        /// Detune the carrier from the sector resonance (rad/s)
        #[arg(long, value_name = "RAD_PER_S", default_value_t = 0.0, allow_negative_numbers = true)]
        carrier_offset: f64,
    },

    /// Integrate the driven medium in the time domain
    #[command(name = "solve-td")]
    SolveTd {
        #[command(flatten)]
        source: ConfigSource,
        /// Pin the cavity to this photon sector (default: one probe photon
        /// on top of the initial occupation)
        #[arg(long, value_name = "N", conflicts_with = "dynamic")]
        sector: Option<u32>,
        /// Let the cavity occupation follow the probe flux
        #[arg(long)]
        dynamic: bool,
        /// Spatial cells (default: automatic from the coupling strength)
        #[arg(long, value_name = "CELLS")]
        z_cells: Option<usize>,
        /// Integration span in seconds (default: covers the slow sector)
        #[arg(long, value_name = "SECONDS")]
        duration: Option<f64>,
        /// Medium snapshots to record (default 32)
        #[arg(long, value_name = "COUNT")]
        snapshots: Option<usize>,
        /// Photon content of the drive (default: the pulse's mean)
        #[arg(long, value_name = "PHOTONS")]
        photons_in: Option<f64>,
        /// Start from a polariton inside the medium: CENTER,WIDTH as
        /// fractions of the length (suppresses the boundary drive)
        #[arg(long, value_name = "CENTER,WIDTH")]
        preload: Option<String>,
    },

    /// Find the best time gate for one photon number
    Filter {
        #[command(flatten)]
        source: ConfigSource,
        /// Photon number the gate should keep
        #[arg(long, default_value_t = 1, value_name = "N")]
        target: u32,
        /// Component engine: analytic, spectral, or time-domain
        #[arg(long, default_value = "analytic", value_name = "ENGINE")]
        engine: String,
        /// Smallest acceptable success probability
        #[arg(long, default_value_t = 0.9, value_name = "P")]
        min_success: f64,
        /// Candidate gate boundaries per envelope
        #[arg(long, default_value_t = 64, value_name = "COUNT")]
        resolution: usize,
    },

    /// Evaluate metrics over the configured parameter grid
    Sweep {
        #[command(flatten)]
        source: ConfigSource,
        /// Evaluate points on one thread (same output, just slower)
        #[arg(long)]
        serial: bool,
        /// Table format: csv, jsonl, or both
        #[arg(long, default_value = "csv", value_name = "FORMAT")]
        format: String,
    },

    /// List the shipped operating points, or print one as config text
    Presets {
        /// Print this preset as a ready-to-edit config file
        #[arg(long, value_name = "NAME")]
        show: Option<String>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let io = Io {
        out: cli.out,
        json: cli.json,
    };
    match cli.command {
        Command::Delay { source, n_max } => commands::delay(&source.load()?, n_max, &io),
        Command::Feasibility {
            source,
            strong_ratio,
            marginal_floor,
        } => commands::feasibility_cmd(&source.load()?, strong_ratio, marginal_floor, &io),
        Command::Propagate {
            source,
            sector,
            carrier_offset,
        } => commands::propagate_cmd(&source.load()?, sector, carrier_offset, &io),
        Command::SolveTd {
            source,
            sector,
            dynamic,
            z_cells,
            duration,
            snapshots,
            photons_in,
            preload,
        } => {
            let args = SolveTdArgs {
                sector,
                dynamic,
                z_cells,
                duration,
                snapshots,
                photons_in,
                preload,
            };
            commands::solve_td(&source.load()?, &args, &io)
        }
        Command::Filter {
            source,
            target,
            engine,
            min_success,
            resolution,
        } => {
            let engine = engine_from_name(&engine).ok_or_else(|| {
                CliError::validation(format!(
                    "unknown engine `{engine}` (analytic, spectral, time-domain)"
                ))
            })?;
            commands::filter(&source.load()?, target, engine, min_success, resolution, &io)
        }
        Command::Sweep {
            source,
            serial,
            format,
        } => {
            let format = match format.as_str() {
                "csv" => SweepFormat::Csv,
                "jsonl" => SweepFormat::Jsonl,
                "both" => SweepFormat::Both,
                other => {
                    return Err(CliError::validation(format!(
                        "unknown format `{other}` (csv, jsonl, both)"
                    )))
                }
            };
            commands::sweep(&source.load()?, serial, format, &io)
        }
        Command::Presets { show } => commands::presets_cmd(show.as_deref(), &io),
    }
}

/// Restore the default `SIGPIPE` disposition. The Rust runtime ignores
/// the signal, which turns a closed pipe (`cit delay … | head`) into a
/// write *error* and a panic; a command-line tool should instead end
/// quietly, as every other pipeline filter does.
#[cfg(unix)]
fn restore_sigpipe() {
    // SAFETY: installing the default handler for a valid signal has no
    // preconditions and cannot race anything this early in main.
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn restore_sigpipe() {}

fn main() -> ExitCode {
    restore_sigpipe();
    // clap uses exit status 2 for usage errors; remap onto this tool's
    // contract (1 = invalid input, 2 = runtime failure)
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
