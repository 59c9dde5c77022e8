use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use metastab::error::Error;
use metastab::potential::catalog;
use metastab_cli::config::ExperimentConfig;
use metastab_cli::{run, write_csvs};

#[derive(Parser)]
#[command(name = "metastab", about = "Metastable transition-time and capacity estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config file
    Run {
        /// Path to the config file
        config: PathBuf,
        /// Output directory (overrides the config's `output`)
        #[arg(long)]
        out: Option<PathBuf>,
        /// RNG seed (overrides the config's `seed`)
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for path simulation (orchestration stays
        /// single-threaded)
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the built-in landscapes
    ListCatalog,
    /// Print the JSON schema of the config document
    Schema,
}

const EXIT_OK: u8 = 0;
const EXIT_TASK_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out, seed, threads } => cmd_run(config, out, seed, threads),
        Command::ListCatalog => {
            for entry in catalog() {
                let pot = &entry.potential;
                println!(
                    "{:<22} dim {}  topology {:?}  pair {:?} -> {:?}",
                    entry.name, pot.dim, entry.expected_topology, entry.pair.0, entry.pair.1
                );
            }
            ExitCode::from(EXIT_OK)
        }
        Command::Schema => {
            println!(
                "{}",
                serde_json::to_string_pretty(&metastab_cli::schema::schema_document()).unwrap()
            );
            ExitCode::from(EXIT_OK)
        }
    }
}

fn cmd_run(
    config_path: PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
) -> ExitCode {
    let text = match std::fs::read_to_string(&config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config_path.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let mut cfg = match ExperimentConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    let out_dir = out
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        return ExitCode::from(EXIT_CONFIG);
    }

    let bundle = match run(&cfg) {
        Ok(b) => b,
        Err(e @ Error::ConfigInvalid { .. }) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_TASK_FAILED);
        }
    };

    let json_path = out_dir.join("results.json");
    match serde_json::to_string_pretty(&bundle) {
        Ok(s) => {
            if let Err(e) = std::fs::write(&json_path, s + "\n") {
                eprintln!("error: cannot write {}: {e}", json_path.display());
                return ExitCode::from(EXIT_TASK_FAILED);
            }
        }
        Err(e) => {
            eprintln!("error: cannot serialize results: {e}");
            return ExitCode::from(EXIT_TASK_FAILED);
        }
    }
    if let Err(e) = write_csvs(&bundle, &out_dir) {
        eprintln!("error: cannot write CSV tables: {e}");
        return ExitCode::from(EXIT_TASK_FAILED);
    }

    for rec in &bundle.records {
        let status = if rec.ok { "ok" } else { "FAILED" };
        match rec.eps {
            Some(eps) => println!("{:<20} eps={:<8} {status}", rec.task, eps),
            None => println!("{:<20} {:<12} {status}", rec.task, ""),
        }
        if let Some(err) = &rec.error {
            println!("    {err}");
        }
    }
    println!("results written to {}", out_dir.display());

    if bundle.any_failed() {
        ExitCode::from(EXIT_TASK_FAILED)
    } else {
        ExitCode::from(EXIT_OK)
    }
}
