use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cavarray::commands;
use cavarray::output::{OutputDir, DEFAULT_OUTPUT_DIR, OUTPUT_DIR_ENV};
use cavarray::{parse_config, run_experiment, CliError, ExperimentConfig, RunOptions};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cavarray", version, about = "Coupled cavity array simulator")]
struct Cli {
    /// Directory for result files. Falls back to the config's run.output.dir,
    /// then to ./cavarray-out.
    #[arg(long, global = true, env = OUTPUT_DIR_ENV)]
    output_dir: Option<PathBuf>,

    /// Worker threads for concurrent runs.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Record that no random seed is involved. Every computation is
    /// deterministic, so this only affects the manifest.
    #[arg(long, global = true)]
    seedless: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Effective coefficients and the regime report.
    Coeffs { config: PathBuf },
    /// Propagate the full and/or effective model.
    Simulate { config: PathBuf },
    /// Plan the configured protocol.
    Protocol { config: PathBuf },
    /// First-order decoherence estimate.
    Estimate {
        config: PathBuf,
        /// Atomic spontaneous emission rate.
        #[arg(long)]
        gamma: f64,
        /// Cavity decay rate.
        #[arg(long)]
        kappa: f64,
        /// Duration; defaults to the planned interaction time.
        #[arg(long)]
        time: Option<f64>,
    },
    /// Vary one config field over several values.
    Sweep {
        config: PathBuf,
        /// Dotted field path, e.g. sites.site.omega or lattice.v.
        #[arg(long)]
        vary: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Also run the configured simulation for every value.
        #[arg(long)]
        simulate: bool,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn load(path: &Path) -> Result<(String, ExperimentConfig), CliError> {
    let text = read(path)?;
    let cfg = parse_config(&text).map_err(|e| match e {
        CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
        other => other,
    })?;
    Ok((text, cfg))
}

fn output_dir(cli: &Cli, cfg: &ExperimentConfig) -> Result<OutputDir, CliError> {
    let dir = cli
        .output_dir
        .clone()
        .or_else(|| cfg.run.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    OutputDir::create(dir)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    let opts = RunOptions {
        seedless: cli.seedless,
    };
    match &cli.command {
        Command::Coeffs { config } => {
            let (_, cfg) = load(config)?;
            let mut out = output_dir(cli, &cfg)?;
            print!("{}", commands::coeffs(&cfg, &mut out, &opts)?);
        }
        Command::Simulate { config } => {
            let (_, cfg) = load(config)?;
            let mut out = output_dir(cli, &cfg)?;
            let r = run_experiment(&cfg, &mut out, &opts)?;
            for m in &r.runs {
                println!(
                    "{}: dimension {}, {} steps, final norm error {:.2e}",
                    m.label, m.dimension, m.trajectory.steps, m.trajectory.final_norm_error
                );
                for w in &m.warnings {
                    eprintln!("warning: {w}");
                }
            }
            if let Some(c) = &r.comparison {
                if let Some(fit) = c.chi_fit {
                    println!(
                        "fitted |chi| {fit:.6e} (first minimum at t = {:.4})",
                        c.time_of_first_minimum.unwrap_or(f64::NAN)
                    );
                }
                for conv in &c.conventions {
                    println!(
                        "{}: max |P_full - P_eff| {:.4} at t = {:.2} over [0, {:.2}]",
                        conv.dispersion,
                        conv.max_deviation,
                        conv.time_of_max_deviation,
                        c.window_end
                    );
                }
                println!("closest convention: {}", c.winner);
                if let Some(x) = &c.exchange {
                    println!(
                        "full-model Bell fidelity peak {:.4} at t = {:.2}",
                        x.full_bell_peak.fidelity, x.full_bell_peak.time
                    );
                }
            }
            println!("results in {}", out.path().display());
        }
        Command::Protocol { config } => {
            let (_, cfg) = load(config)?;
            let mut out = output_dir(cli, &cfg)?;
            print!("{}", commands::protocol(&cfg, &mut out, &opts)?);
        }
        Command::Estimate {
            config,
            gamma,
            kappa,
            time,
        } => {
            let (_, cfg) = load(config)?;
            let mut out = output_dir(cli, &cfg)?;
            let (_, text) = commands::estimate(&cfg, *gamma, *kappa, *time, &mut out, &opts)?;
            print!("{text}");
        }
        Command::Sweep {
            config,
            vary,
            values,
            simulate,
        } => {
            let (text, cfg) = load(config)?;
            let mut out = output_dir(cli, &cfg)?;
            let rows = commands::sweep(&text, vary, values, *simulate, &mut out, &opts)?;
            for r in rows {
                println!(
                    "{vary} = {}: |chi| {}",
                    r.value,
                    r.chi_abs.map_or("-".into(), |c| format!("{c:.6e}"))
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
