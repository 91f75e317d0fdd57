//! Command implementations behind the `cbflcp` binary.
//!
//! Each `cmd_*` function returns the process exit code so the commands can be
//! driven from tests without spawning a process.

pub mod plot;
pub mod scene;
pub mod trajectory;

use std::path::{Path, PathBuf};

use cbflcp_core::fuzz::{fuzz_equivalence, FuzzConfig};
use cbflcp_core::simulate::{run, RunMetrics, Termination};
use cbflcp_core::solvers::MAX_ENUMERATION;
use serde::Serialize;

use scene::SceneFile;

pub const EXIT_OK: i32 = 0;
/// Run ended without reaching the goal, or fuzzing found a discrepancy.
pub const EXIT_INCOMPLETE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_SAFETY: i32 = 4;

#[derive(Debug, Serialize)]
struct MetricsFile<'a> {
    #[serde(flatten)]
    metrics: &'a RunMetrics,
    termination: &'a Termination,
}

fn fail(code: i32, msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    code
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

/// Simulates a scene and writes `trajectory.csv`, `metrics.json` and a copy
/// of the scene to `out_dir`.
///
/// Exit codes: 0 goal reached safely, 1 step budget exhausted, 2 bad scene or
/// unwritable output, 3 safety filter failure, 4 `h'` reached zero or below.
pub fn cmd_simulate(scene_path: &Path, out_dir: &Path) -> i32 {
    let text = match std::fs::read_to_string(scene_path) {
        Ok(t) => t,
        Err(e) => {
            return fail(
                EXIT_CONFIG,
                format!("cannot read {}: {e}", scene_path.display()),
            )
        }
    };
    let config = match SceneFile::parse(&text).and_then(|s| s.to_config()) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, format!("{}: {e}", scene_path.display())),
    };
    let (log, metrics) = match run(&config) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_CONFIG, e),
    };

    let written = std::fs::create_dir_all(out_dir)
        .map_err(|e| format!("cannot create {}: {e}", out_dir.display()))
        .and_then(|_| {
            trajectory::write_file(
                &out_dir.join("trajectory.csv"),
                &log,
                config.model.dof(),
                config.constraint_count(),
            )
            .map_err(|e| format!("cannot write trajectory.csv: {e}"))
        })
        .and_then(|_| {
            let body = serde_json::to_string_pretty(&MetricsFile {
                metrics: &metrics,
                termination: &log.termination,
            })
            .map_err(|e| e.to_string())?;
            write(&out_dir.join("metrics.json"), body + "\n")
        })
        .and_then(|_| write(&out_dir.join("scene.toml"), &text));
    if let Err(e) = written {
        return fail(EXIT_CONFIG, e);
    }

    println!(
        "{:?} after {} steps, goal error {:.3e} m, min h' {:.3e} m, max e {}",
        log.termination,
        metrics.steps,
        metrics.goal_error,
        metrics.hprime_min,
        metrics
            .e_max
            .map_or("n/a".to_string(), |e| format!("{e:.3e}")),
    );
    if metrics.hprime_min <= 0.0 {
        return fail(
            EXIT_SAFETY,
            format!("reduced constraint reached {:.3e}", metrics.hprime_min),
        );
    }
    match log.termination {
        Termination::GoalReached => EXIT_OK,
        Termination::SolverFailure(reason) => fail(EXIT_SOLVER, reason),
        Termination::MaxSteps => fail(EXIT_INCOMPLETE, "step budget exhausted before the goal"),
    }
}

pub struct FuzzArgs {
    pub seed: u64,
    pub count: usize,
    pub m_max: usize,
    pub n_max: usize,
    pub tol: f64,
    pub zero_row_probability: f64,
    pub out: Option<PathBuf>,
}

/// Exit codes: 0 clean, 1 discrepancies, 2 invalid arguments or generator
/// contract violations.
pub fn cmd_fuzz(args: &FuzzArgs) -> i32 {
    if !(1..=MAX_ENUMERATION).contains(&args.m_max) {
        return fail(
            EXIT_CONFIG,
            format!("--m-max must be in 1..={MAX_ENUMERATION}"),
        );
    }
    if args.n_max == 0 {
        return fail(EXIT_CONFIG, "--n-max must be at least 1");
    }
    if !(args.tol.is_finite() && args.tol > 0.0) {
        return fail(EXIT_CONFIG, "--tol must be positive");
    }
    if !(0.0..=1.0).contains(&args.zero_row_probability) {
        return fail(EXIT_CONFIG, "--zero-row-probability must be in [0, 1]");
    }
    let mut config = FuzzConfig::new(args.seed, args.count, args.m_max, args.n_max, args.tol);
    config.zero_row_probability = args.zero_row_probability;
    let report = fuzz_equivalence(&config);

    println!(
        "{} instances ({} optimal, {} infeasible): max error {:.3e}, oracle {:.3e} on {}, \
         {} status / {} oracle disagreements, {} failures",
        report.instances,
        report.optimal,
        report.infeasible,
        report.max_error,
        report.max_oracle_error,
        report.oracle_checked,
        report.status_disagreements,
        report.oracle_disagreements,
        report.solver_failures,
    );
    if let Some(dir) = &args.out {
        let res = std::fs::create_dir_all(dir)
            .map_err(|e| e.to_string())
            .and_then(|_| serde_json::to_string_pretty(&report).map_err(|e| e.to_string()))
            .and_then(|body| write(&dir.join("fuzz_report.json"), body + "\n"));
        if let Err(e) = res {
            return fail(EXIT_CONFIG, e);
        }
    }
    if report.contract_violations > 0 {
        return fail(
            EXIT_CONFIG,
            format!("{} instances had all-zero rows", report.contract_violations),
        );
    }
    if report.success {
        EXIT_OK
    } else {
        fail(EXIT_INCOMPLETE, "solvers disagree beyond tolerance")
    }
}

/// Renders `scene.svg` and `curves.svg` from a trajectory file. The scene
/// defaults to the `scene.toml` written next to the CSV by `simulate`.
pub fn cmd_plot(csv_path: &Path, scene_path: Option<&Path>, out_dir: &Path) -> i32 {
    let table = match trajectory::read_file(csv_path) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_CONFIG, format!("{}: {e}", csv_path.display())),
    };
    let scene_path = scene_path.map(Path::to_path_buf).unwrap_or_else(|| {
        csv_path
            .parent()
            .unwrap_or(Path::new("."))
            .join("scene.toml")
    });
    let config = match SceneFile::load(&scene_path).and_then(|s| s.to_config()) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, format!("{}: {e}", scene_path.display())),
    };
    if let Some(q) = table.q.first() {
        if q.len() != config.model.dof() {
            return fail(
                EXIT_CONFIG,
                format!(
                    "trajectory has {} joints, scene has {}",
                    q.len(),
                    config.model.dof()
                ),
            );
        }
    }
    let res = std::fs::create_dir_all(out_dir)
        .map_err(|e| format!("cannot create {}: {e}", out_dir.display()))
        .and_then(|_| write(&out_dir.join("scene.svg"), plot::scene_svg(&config, &table)))
        .and_then(|_| write(&out_dir.join("curves.svg"), plot::curves_svg(&table)));
    match res {
        Ok(()) => EXIT_OK,
        Err(e) => fail(EXIT_CONFIG, e),
    }
}
