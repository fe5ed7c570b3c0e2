use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use quench_thermo::sweep::{self, figure_preset, run_sweep, tc_table, validate_config, SweepConfig, FIGURES};
use quench_thermo::{Error, ErrorClass};

#[derive(Parser)]
#[command(name = "quench-thermo", version, about = "Thermal states of quenched coupled oscillators")]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a temperature sweep described by a JSON config.
    Sweep {
        /// JSON sweep config.
        #[arg(long)]
        config: PathBuf,
        /// CSV file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the CSV curves of one figure preset, or `all`.
    Figure {
        name: String,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Tabulate exact and approximate critical temperatures against J.
    Tc {
        #[arg(long)]
        k0: f64,
        #[arg(long, allow_hyphen_values = true)]
        j_min: f64,
        #[arg(long, allow_hyphen_values = true)]
        j_max: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// CSV file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a sweep config without running it.
    Validate {
        /// JSON sweep config.
        #[arg(long)]
        config: PathBuf,
    },
}

fn exit_for(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(match e.class() {
        ErrorClass::Config => 1,
        ErrorClass::Domain => 2,
        ErrorClass::Numerical => 3,
    })
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Sweep { config, out } => {
            let mut cfg = SweepConfig::from_path(&config)?;
            if cli.threads > 0 {
                cfg.threads = cli.threads;
            }
            let result = run_sweep(&cfg)?;
            if result.all_failed() {
                let flag = result.rows.iter().flat_map(|r| r.flags.first()).next().cloned().unwrap_or_default();
                eprintln!("error: every grid point failed (first flag: {flag})");
                return Ok(ExitCode::from(2));
            }
            let name = out.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep").to_string();
            let file = std::fs::File::create(&out)?;
            result.to_table(&name).write_csv(std::io::BufWriter::new(file))?;
            let flagged = result.rows.iter().filter(|r| !r.flags.is_empty()).count();
            eprintln!("wrote {} rows to {} ({flagged} flagged)", result.rows.len(), out.display());
        }
        Command::Figure { name, out_dir } => {
            std::fs::create_dir_all(&out_dir)?;
            let names: Vec<&str> = if name == "all" { FIGURES.to_vec() } else { vec![name.as_str()] };
            for n in names {
                for table in figure_preset(n, cli.threads)? {
                    let path = table.write_file(&out_dir)?;
                    eprintln!("wrote {}", path.display());
                }
            }
        }
        Command::Tc { k0, j_min, j_max, points, out } => {
            let table = tc_table(k0, j_min, j_max, points)?;
            let file = std::fs::File::create(&out)?;
            table.write_csv(std::io::BufWriter::new(file))?;
            eprintln!("wrote {points} rows to {}", out.display());
        }
        Command::Validate { config } => {
            let report = validate_config(&config);
            if let Some(m) = report.modes {
                for (i, (wi, wf)) in m.iter().enumerate() {
                    println!(
                        "mode {}: omega_i = {}, omega_f = {}",
                        i + 1,
                        sweep::format_sig(*wi),
                        sweep::format_sig(*wf)
                    );
                }
            }
            for w in &report.warnings {
                println!("warning: {w}");
            }
            for e in &report.errors {
                eprintln!("error: {e}");
            }
            if !report.valid {
                return Ok(ExitCode::from(1));
            }
            println!("{}: valid", config.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => exit_for(&e),
    }
}
