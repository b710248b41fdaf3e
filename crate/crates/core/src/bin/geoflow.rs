use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use geoflow::lax::PauliEmbedding;
use geoflow::runner::{self, RunConfig, RunError, Status};

#[derive(Parser)]
#[command(name = "geoflow", version, about = "Config-driven runs of integrable geometric flows")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a config; artifacts go to DIR/<name>/.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Evaluate every check of a config on N successively refined grids;
    /// the table goes to DIR/<name>-convergence/.
    Convergence {
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the initial-data presets.
    ListPresets,
    /// Check a config without running it.
    Validate { config: PathBuf },
}

const EXIT_CONFIG: u8 = 4;
const EXIT_ERROR: u8 = 1;

fn load(path: &PathBuf) -> Result<RunConfig, ExitCode> {
    RunConfig::load(path).map_err(|e| {
        eprintln!("{e}");
        ExitCode::from(EXIT_CONFIG)
    })
}

fn failure(e: RunError) -> ExitCode {
    eprintln!("{e}");
    match e {
        RunError::Config(_) => ExitCode::from(EXIT_CONFIG),
        _ => ExitCode::from(EXIT_ERROR),
    }
}

fn main() -> ExitCode {
    let pauli = PauliEmbedding::default().self_test();
    if pauli > 1e-14 {
        eprintln!("Pauli embedding self-test failed: {pauli:e}");
        return ExitCode::from(EXIT_ERROR);
    }
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::ListPresets => {
            for (name, fields, flows) in runner::preset_catalogue() {
                println!("{name:<14} {fields:<32} {flows}");
            }
            ExitCode::SUCCESS
        }
        Cmd::Validate { config } => match load(&config) {
            Ok(c) => {
                println!("{}: valid ({} checks)", c.name, c.checks.len());
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Cmd::Run { config, out } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let (report, dir) = match runner::run(&cfg, &out) {
                Ok(r) => r,
                Err(e) => return failure(e),
            };
            for c in &report.checks {
                let tag = match c.status {
                    Status::Pass => "PASS",
                    Status::Fail => "FAIL",
                    Status::Skipped => "SKIP",
                };
                let slope = c
                    .primary
                    .as_ref()
                    .and_then(|p| c.slopes.get(p))
                    .map(|s| format!(" slope {s:.3}"))
                    .unwrap_or_default();
                let worst = c.bounds.iter().map(|(k, b)| format!(" {k}={:.3e}<={b:.1e}", c.norms[k])).collect::<String>();
                println!("{tag} {}{worst}{slope}{}", c.name.name(), c.error.as_ref().map(|e| format!(" ({e})")).unwrap_or_default());
            }
            if let Some(b) = &report.blowup {
                println!("blow-up at t = {:.6}{}", b.t, b.relative_gap.map(|g| format!(" (gap {g:.2e})")).unwrap_or_default());
            }
            println!("{:?} -> {}", report.status, dir.display());
            ExitCode::from(report.exit_code as u8)
        }
        Cmd::Convergence { config, levels, out } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let table = match runner::convergence(&cfg, levels) {
                Ok(t) => t,
                Err(e) => return failure(e),
            };
            print!("{}", table.pretty());
            let dir = out.join(format!("{}-convergence", cfg.name));
            let written = std::fs::create_dir_all(&dir)
                .and_then(|_| std::fs::write(dir.join("convergence.csv"), table.to_csv()))
                .and_then(|_| std::fs::write(dir.join("convergence.txt"), table.pretty()));
            if let Err(e) = written {
                eprintln!("{}: {e}", dir.display());
                return ExitCode::from(EXIT_ERROR);
            }
            if table.any_below() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}
