use std::path::PathBuf;

use clap::{Parser, Subcommand};

use cbflcp_cli::{cmd_fuzz, cmd_plot, cmd_simulate, FuzzArgs};

#[derive(Parser)]
#[command(
    name = "cbflcp",
    version,
    about = "Safety-filtered planar arm simulation and solver cross-checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a closed-loop simulation from a TOML scene file.
    Simulate {
        scene: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Cross-check the projection and complementarity solvers on random problems.
    Fuzz {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 8)]
        m_max: usize,
        #[arg(long, default_value_t = 10)]
        n_max: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Directory for fuzz_report.json.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0, hide = true)]
        zero_row_probability: f64,
    },
    /// Render scene.svg and curves.svg from a trajectory.csv.
    Plot {
        csv: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Scene file; defaults to scene.toml next to the CSV.
        #[arg(long)]
        scene: Option<PathBuf>,
    },
}

fn main() {
    let code = match Cli::parse().command {
        Command::Simulate { scene, out } => cmd_simulate(&scene, &out),
        Command::Fuzz {
            seed,
            count,
            m_max,
            n_max,
            tol,
            out,
            zero_row_probability,
        } => cmd_fuzz(&FuzzArgs {
            seed,
            count,
            m_max,
            n_max,
            tol,
            zero_row_probability,
            out,
        }),
        Command::Plot { csv, out, scene } => cmd_plot(&csv, scene.as_deref(), &out),
    };
    std::process::exit(code);
}
