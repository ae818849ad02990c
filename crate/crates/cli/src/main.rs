use clap::{Parser, Subcommand};
use sff_cli::{list, load, run_text, Options, EXIT_SCHEMA};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "sff",
    version,
    about = "Run second-fundamental-form geometry scenarios"
)]
struct Cli {
    /// Directory for report files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Seed for seeded subjects; overrides the scenario file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Multiplier applied to every tolerance.
    #[arg(long, global = true)]
    tolerance_scale: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file, or a bundled scenario by name.
    Run { scenario: String },
    /// List bundled scenarios and those found in --dir.
    List {
        #[arg(long)]
        json: bool,
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Some(t) = cli.tolerance_scale {
        if !(t > 0.0) {
            eprintln!("--tolerance-scale must be positive");
            std::process::exit(EXIT_SCHEMA);
        }
    }
    let code = match cli.command {
        Command::Run { scenario } => match load(&scenario) {
            Ok(text) => run_text(
                &text,
                &Options {
                    seed: cli.seed,
                    tolerance_scale: cli.tolerance_scale,
                    out_dir: cli.out_dir,
                },
            ),
            Err(e) => {
                eprintln!("{e}");
                EXIT_SCHEMA
            }
        },
        Command::List { json, dir } => {
            let rows = list(dir.as_deref());
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&rows).expect("listing serializes")
                );
            } else {
                let w = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
                for r in rows {
                    println!("{:<w$}  {}", r.name, r.description);
                }
            }
            0
        }
    };
    std::process::exit(code);
}
