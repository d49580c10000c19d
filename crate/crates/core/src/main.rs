use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use affine_formation::pipeline::{certificate_text, prepare, run_pipeline, RunOptions};
use affine_formation::presets;
use affine_formation::scenario::Scenario;

#[derive(Parser)]
#[command(version, about = "Affine formation maneuvering by modified Laplacian weights")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (or a bundled preset name) and write CSVs plus a summary.
    Run {
        scenario: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Store every N-th integration step.
        #[arg(long)]
        decimate: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse a scenario and print its stress and gain certificates.
    Validate { scenario: String },
    /// Bundled presets.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn execute(command: Command) -> affine_formation::Result<u8> {
    match command {
        Command::Run { scenario, out, decimate, seed } => {
            let s = Scenario::load(&scenario)?;
            let report = run_pipeline(&s, &RunOptions { out_dir: out, decimate, seed, dry_run: false })?;
            print!("{}", report.summary());
            if let Some(dir) = &report.out_dir {
                println!("output: {}", dir.display());
            }
            if !report.prepared.gain_certified() {
                eprintln!("warning: uncertified gain, h = {} <= h_min = {}", report.prepared.h, report.prepared.h_min);
            }
            Ok(report.exit_code() as u8)
        }
        Command::Validate { scenario } => {
            let s = Scenario::load(&scenario)?;
            let p = prepare(&s)?;
            print!("{}", certificate_text(&p));
            Ok(if p.certified() { 0 } else { 2 })
        }
        Command::Presets { action: PresetAction::List } => {
            println!("scenarios:");
            for (name, text) in presets::SCENARIOS {
                let title = text.lines().next().unwrap_or("").trim_start_matches('#').trim();
                println!("  {name:<8} {title}");
            }
            println!("shapes:");
            for name in presets::SHAPE_PRESETS {
                println!("  {name}");
            }
            Ok(0)
        }
    }
}
