//! `vortexcorr` command-line tool.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use error::{CliError, EXIT_CONFIG, EXIT_OK};

const AFTER_HELP: &str = "\
States:
  --state fermi-fock            |1⟲, 1⟳> fermions
  --state bose-fock --n N --m M |N⟲, M⟳> bosons (default 1, 1)
  --state coherent --alpha-x A --alpha-y B
                                dipole-basis coherent state (default i, 1)
  --state thermal --nbar-a A --nbar-b B
                                vortex thermal state (default 1, 1)
  --state cothermal --alpha-x A --alpha-y B --nbar T
                                displaced thermal state (default i/√2, 1/√2, 0.5)
  --state noon                  bosonic |1→, 1↑>, a two-particle NOON state of the vortices
Complex values take the forms 1, i, -i, 0.5-0.5i, 1e-3+2i.

Outputs (all floats with 17 significant digits; each file carries provenance):
  profile    rho1.csv (x,y,value)  rho1_radial.csv (r,value)  rho1.json + rho1.bin (LE f64)  rho1.svg
  pairdist   distance.csv (distance,density)  distance_summary.json  distance.svg
             --two-angle: two_angle.csv (theta,vartheta,density)  two_angle_summary.json  two_angle.svg
  pairangle  angle.csv (relative-angle,density)  angle_summary.json  angle.svg
  frames     frames.csv (JSON header line, then frame_index,x1,y1,x2,y2)
             --stats: frames_stats.json  frames_distance.csv / frames_angle.csv (lo,hi,count,density,expected)
                      frames_profile.csv (x,y,count)  frames_distance.svg  frames_profile.svg
  verify     verify.json  verify.csv (claim,category,verdict,max_deviation) and a table on stdout
CSV files start with one `# provenance: {...}` comment line. See FORMATS.md.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical failure, 4 wrong tool for the state.";

#[derive(Debug, Parser)]
#[command(name = "vortexcorr", version, about = "Spatial correlations of two-mode vortex quantum states", after_help = AFTER_HELP)]
struct Cli {
    /// Worker threads (output does not depend on this)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON config file; flags override its fields
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One-particle density on the [-6, 6]² lattice
    Profile {
        #[command(flatten)]
        run: RunConfig,
    },
    /// Pair-distance law D(d), or the joint angle law with --two-angle
    Pairdist {
        #[command(flatten)]
        run: RunConfig,
        /// Joint density of the two polar angles
        #[arg(long)]
        two_angle: bool,
        /// Compare against the Bose law as printed, without the leading d
        #[arg(long)]
        printed_bose: bool,
    },
    /// Relative-angle law D(Δθ) folded to [0, π]
    Pairangle {
        #[command(flatten)]
        run: RunConfig,
    },
    /// Monte Carlo single-shot frames
    Frames {
        #[command(flatten)]
        run: RunConfig,
        /// Also write empirical histograms and goodness-of-fit tests
        #[arg(long)]
        stats: bool,
    },
    /// Cross-check engine, oracle and printed closed forms
    Verify {
        #[command(flatten)]
        run: RunConfig,
    },
}

fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(CliError::Config("--threads must be at least 1".into()));
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads(cli.threads)?;
    let base = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let sink = match cli.command {
        Command::Profile { run } => commands::profile(&base.merged(run))?,
        Command::Pairdist {
            run,
            two_angle,
            printed_bose,
        } => commands::pairdist(&base.merged(run), two_angle, printed_bose)?,
        Command::Pairangle { run } => commands::pairangle(&base.merged(run))?,
        Command::Frames { run, stats } => commands::frames(&base.merged(run), stats)?,
        Command::Verify { run } => {
            let mut cfg = base.merged(run);
            cfg.state = None;
            commands::verify(&cfg)?
        }
    };
    for p in &sink.written {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(h) = e.hint() {
                eprintln!("{h}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
