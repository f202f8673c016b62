use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wignerdyn::cli_io::commands::{info_text, resolve_out_dir};
use wignerdyn::cli_io::config::{config_from_table, parse_table};
use wignerdyn::cli_io::{cmd_compare, cmd_run, cmd_sweep, preset_text, read_config_text};
use wignerdyn::error::{ConfigError, Error, Result};

#[derive(Parser)]
#[command(name = "wignerdyn", version, about = "Wigner and Fokker-Planck phase-space evolution of a driven anharmonic oscillator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Config file (TOML)
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset name (fig1, harmonic)
    #[arg(long)]
    preset: Option<String>,
    /// Output directory (overrides output.dir)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (results do not depend on this)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one configuration
    Run(Common),
    /// Quantum/classical runs with and without decoherence, plus the screening report
    Compare(Common),
    /// One comparison per value of a scalar config key
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Key to vary, as section.name (e.g. decoherence.d)
        #[arg(long)]
        key: String,
        /// Comma-separated values
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<String>,
    },
    /// Print the resolved configuration and its resolution limits
    Info(Common),
}

fn load_table(common: &Common) -> Result<toml::Table> {
    let text = match (&common.config, &common.preset) {
        (Some(path), _) => read_config_text(path)?,
        (None, Some(name)) => preset_text(name)?.to_string(),
        (None, None) => return Err(ConfigError::MissingKey("--config or --preset".into()).into()),
    };
    Ok(parse_table(&text)?)
}

fn setup_threads(common: &Common) {
    if let Some(n) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(common) => {
            setup_threads(&common);
            let cfg = config_from_table(load_table(&common)?)?;
            let out = resolve_out_dir(common.out.as_deref(), &cfg);
            let outcome = cmd_run(&cfg, &out)?;
            println!(
                "{} steps of dt = {:e}; final time {:e}; output in {}",
                outcome.n_steps,
                outcome.dt,
                outcome.final_field.time,
                out.display()
            );
        }
        Command::Compare(common) => {
            setup_threads(&common);
            let cfg = config_from_table(load_table(&common)?)?;
            let out = resolve_out_dir(common.out.as_deref(), &cfg);
            let report = cmd_compare(&cfg, &out)?;
            print!("{}", report.to_toml());
        }
        Command::Sweep { common, key, values } => {
            setup_threads(&common);
            let table = load_table(&common)?;
            let cfg = config_from_table(table.clone())?;
            let out = resolve_out_dir(common.out.as_deref(), &cfg);
            let rows = cmd_sweep(&table, &key, &values, &out)?;
            print!("{}", wignerdyn::cli_io::commands::sweep_csv(&rows));
        }
        Command::Info(common) => {
            let cfg = config_from_table(load_table(&common)?)?;
            print!("{}", info_text(&cfg));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    e.exit_code() as u8
}
