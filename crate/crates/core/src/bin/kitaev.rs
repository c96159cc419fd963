use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kitaev_qsim::runner::{self, EXIT_OK, EXIT_VERIFY};

/// Variational ground-state preparation for the honeycomb Kitaev model.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment described by a TOML config.
    Run { config: PathBuf },
    /// Re-check acceptance thresholds on a results directory.
    Verify { dir: PathBuf },
    /// Print the lattice geometry, stabilizers and default bond pairs as JSON.
    LatticeDump {
        #[arg(long)]
        lx: usize,
        #[arg(long)]
        ly: usize,
    },
    /// Print the gate budget and fidelity estimates of a config's protocol.
    NoiseReport { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run { config } => runner::run(&config).map(|out| {
            println!("{}", serde_json::to_string_pretty(&out.summary).unwrap_or_default());
            eprintln!(
                "wrote {} artifacts to {} in {:.1}s",
                out.manifest.artifacts.len() + 1,
                out.dir.display(),
                out.manifest.wall_time_s
            );
            EXIT_OK
        }),
        Cmd::Verify { dir } => runner::verify(&dir).map(|report| {
            print!("{}", report.table());
            if report.passed() {
                EXIT_OK
            } else {
                EXIT_VERIFY
            }
        }),
        Cmd::LatticeDump { lx, ly } => runner::lattice_dump(lx, ly).map(|s| {
            println!("{s}");
            EXIT_OK
        }),
        Cmd::NoiseReport { config } => runner::noise_report(&config).map(|s| {
            print!("{s}");
            EXIT_OK
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(runner::exit_code(&e) as u8)
        }
    }
}
