use boxtdse_cli::cache::cache_dir;
use boxtdse_cli::commands::{self, Context, Report};
use boxtdse_cli::config::RunConfig;
use boxtdse_cli::CliError;
use clap::{Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

/// Multiphoton excitation and ionisation of one-electron atoms and
/// diatomics in a box.
#[derive(Debug, Parser)]
#[command(name = "boxtdse", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Named system preset; overrides `system.preset`.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Worker threads for scans.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write results here instead of `output.path` or stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Ignore any cached basis.
    #[arg(long, global = true)]
    force_rebuild: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build or load the field-free basis and couplings.
    Basis,
    /// Propagate at `pulse.omega_ev` and write one row per orientation.
    Propagate,
    /// Propagate over the pulse grid.
    Scan,
    /// Derived tables.
    Analyze {
        #[command(subcommand)]
        what: Analysis,
    },
}

#[derive(Debug, Subcommand)]
enum Analysis {
    /// Numerical Ip of the model atom against the closed-form estimate.
    IpCurve {
        #[arg(long, default_value_t = -0.3, allow_hyphen_values = true)]
        alpha_min: f64,
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        alpha_max: f64,
        #[arg(long, default_value_t = 17)]
        points: usize,
    },
    /// Fourier component of the pulse at a resonance, over the grid.
    Fourier {
        #[arg(long)]
        omega0_ev: f64,
    },
    /// N-photon ionisation thresholds.
    Thresholds {
        /// Ionisation potential in hartree; defaults to that of the system.
        #[arg(long)]
        ip: Option<f64>,
        #[arg(long, default_value_t = 5)]
        n_max: u32,
    },
    /// Ratio of the ionisation yields of two scans.
    Ratio {
        #[arg(long)]
        parallel: PathBuf,
        #[arg(long)]
        perpendicular: PathBuf,
    },
}

fn context(cli: &Cli) -> Result<Context, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &cli.preset {
        cfg.system.preset = Some(p.clone());
    }
    if cli.threads == Some(0) {
        return Err(CliError::Config("--threads must be positive".into()));
    }
    Ok(Context {
        run: cfg.resolve()?,
        cache_dir: cache_dir(),
        force_rebuild: cli.force_rebuild,
        threads: cli.threads,
    })
}

fn run(cli: &Cli) -> Result<Report, CliError> {
    if let Command::Analyze {
        what: Analysis::Ratio { parallel, perpendicular },
    } = &cli.command
    {
        return commands::cmd_ratio(parallel, perpendicular);
    }
    let ctx = context(cli)?;
    match &cli.command {
        Command::Basis => commands::cmd_basis(&ctx),
        Command::Propagate => commands::cmd_propagate(&ctx),
        Command::Scan => commands::cmd_scan(&ctx),
        Command::Analyze { what } => match what {
            Analysis::IpCurve {
                alpha_min,
                alpha_max,
                points,
            } => commands::cmd_ip_curve(&ctx, *alpha_min, *alpha_max, *points),
            Analysis::Fourier { omega0_ev } => commands::cmd_fourier(&ctx, *omega0_ev),
            Analysis::Thresholds { ip, n_max } => commands::cmd_thresholds(&ctx, *ip, *n_max),
            Analysis::Ratio { .. } => unreachable!(),
        },
    }
}

fn output_path(cli: &Cli) -> Option<PathBuf> {
    if cli.output.is_some() {
        return cli.output.clone();
    }
    let p = cli.config.as_ref()?;
    RunConfig::load(p).ok()?.output.path
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let written = match output_path(&cli) {
        Some(p) => std::fs::write(&p, &report.bytes).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(&report.bytes)
            .map_err(|e| CliError::Io(format!("stdout: {e}"))),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    if report.failures > 0 {
        eprintln!("error: {} point(s) failed", report.failures);
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}
