//! The four CLI commands: steady-state analysis, transient simulation,
//! randomized no-go verification, and the built-in reference run.
//!
//! Exit-code contract: configuration and usage problems exit 2, an unstable
//! loop in `analyze` exits 2 with the abscissa, an invalid initial covariance
//! in `simulate` exits 3, and any verification or checkpoint failure exits 1.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use qlin_core::covariance::{is_hurwitz, propagate, solve_steady_state, CovarianceTrajectory};
use qlin_core::entanglement::{
    log_negativity, separability_lmi, sudden_death_from_series_with_tol, uncertainty_margin,
    verify_no_go, EntanglementReport, Verdict, NO_GO_TOL,
};

use crate::config::ScenarioConfig;
use crate::output::{emit_summary, format_matrix, write_trajectory_csv, SampleRow};
use crate::scenario::{example_scenario, Scenario};

/// A command failure carrying the process exit code.
#[derive(Debug)]
pub struct CmdError {
    pub code: i32,
    pub message: String,
}

impl CmdError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

type CmdResult<T> = Result<T, CmdError>;

fn config_error(message: impl std::fmt::Display) -> CmdError {
    CmdError::new(2, message.to_string())
}

fn internal_error(message: impl std::fmt::Display) -> CmdError {
    CmdError::new(1, message.to_string())
}

fn load_scenario(path: &Path) -> CmdResult<Scenario> {
    let text = fs::read_to_string(path)
        .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    let config: ScenarioConfig =
        toml::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    log::info!("loaded scenario from {}", path.display());
    Scenario::from_config(config).map_err(config_error)
}

fn output_prefix(scenario: &Scenario, path: &Path) -> PathBuf {
    match &scenario.config.output {
        Some(prefix) => PathBuf::from(prefix),
        None => path.with_extension(""),
    }
}

/// Steady-state analysis: solve the Lyapunov equation and judge separability.
pub fn cmd_analyze(path: &Path) -> CmdResult<()> {
    let scenario = load_scenario(path)?;
    let cl = &scenario.closed_loop;
    let (hurwitz, abscissa) = is_hurwitz(cl.a_tilde());
    if !hurwitz {
        return Err(CmdError::new(
            2,
            format!("closed loop is not Hurwitz: spectral abscissa {abscissa}"),
        ));
    }
    let p_ss = solve_steady_state(cl.a_tilde(), &cl.noise_intensity()).map_err(internal_error)?;
    let p11 = p_ss.view((0, 0), (4, 4)).into_owned();
    let report = log_negativity(&p11).map_err(internal_error)?;
    let heisenberg = uncertainty_margin(&p11).map_err(internal_error)?;
    let verdict = verdict_with_tol(&report, scenario.tolerances.verdict);

    let nc = cl.partition().classical;
    let mut summary = String::new();
    let _ = writeln!(summary, "steady-state analysis: {}", path.display());
    let _ = writeln!(
        summary,
        "state dimension: {} (plant pairs 2+2, controller {nc})",
        4 + nc
    );
    let _ = writeln!(summary, "spectral abscissa: {abscissa}");
    let _ = writeln!(summary, "steady-state covariance P:");
    summary.push_str(&format_matrix(&p_ss));
    let _ = writeln!(summary, "quantum block P11:");
    summary.push_str(&format_matrix(&p11));
    let _ = writeln!(summary, "separability margin: {}", report.sep_min_eig);
    let _ = writeln!(summary, "symplectic eigenvalue nu: {}", report.nu);
    let _ = writeln!(summary, "log-negativity E_N: {}", report.log_negativity);
    let _ = writeln!(summary, "uncertainty margin: {heisenberg}");
    let _ = writeln!(summary, "verdict: {verdict}");

    let prefix = output_prefix(&scenario, path);
    let summary_path = with_suffix(&prefix, "_analysis.txt");
    ensure_parent(&summary_path)?;
    emit_summary(Some(&summary_path), &summary)
        .map_err(|e| internal_error(format!("writing {}: {e}", summary_path.display())))?;
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_os_string();
    name.push(suffix);
    PathBuf::from(name)
}

fn ensure_parent(path: &Path) -> CmdResult<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)
                .map_err(|e| internal_error(format!("creating {}: {e}", dir.display())))?;
        }
    }
    Ok(())
}

fn verdict_with_tol(report: &EntanglementReport, tol: f64) -> Verdict {
    if report.sep_min_eig >= -tol {
        Verdict::Separable
    } else {
        Verdict::Entangled
    }
}

struct TrajectoryRun {
    traj: CovarianceTrajectory,
    p11s: Vec<DMatrix<f64>>,
    reports: Vec<EntanglementReport>,
    heisenberg: Vec<f64>,
    sudden_death: Option<f64>,
}

fn run_trajectory(scenario: &Scenario, times: &[f64]) -> CmdResult<TrajectoryRun> {
    let cl = &scenario.closed_loop;
    let p0 = scenario
        .initial
        .as_ref()
        .ok_or_else(|| config_error("scenario has no [initial] section"))?;
    let traj = propagate(cl.a_tilde(), &cl.noise_intensity(), p0, times)
        .map_err(internal_error)?
        .with_partition(cl.partition())
        .map_err(internal_error)?;

    let mut p11s = Vec::with_capacity(traj.len());
    let mut reports = Vec::with_capacity(traj.len());
    let mut heisenberg = Vec::with_capacity(traj.len());
    for i in 0..traj.len() {
        let p11 = traj.quantum_block(i).map_err(internal_error)?;
        let report = log_negativity(&p11)
            .map_err(|e| internal_error(format!("at t = {}: {e}", traj.times()[i])))?;
        let margin = uncertainty_margin(&p11).map_err(internal_error)?;
        if margin < -scenario.tolerances.heisenberg {
            return Err(internal_error(format!(
                "trajectory violates the uncertainty LMI at t = {} (margin {margin})",
                traj.times()[i]
            )));
        }
        p11s.push(p11);
        reports.push(report);
        heisenberg.push(margin);
    }
    let e_n: Vec<f64> = reports.iter().map(|r| r.log_negativity).collect();
    let sudden_death =
        sudden_death_from_series_with_tol(traj.times(), &e_n, scenario.tolerances.verdict);
    Ok(TrajectoryRun {
        traj,
        p11s,
        reports,
        heisenberg,
        sudden_death,
    })
}

fn trajectory_rows(run: &TrajectoryRun) -> Vec<SampleRow<'_>> {
    run.traj
        .times()
        .iter()
        .zip(&run.reports)
        .zip(&run.heisenberg)
        .zip(&run.p11s)
        .map(|(((t, report), heis), p11)| SampleRow {
            t: *t,
            report,
            heisenberg_min_eig: *heis,
            p11,
        })
        .collect()
}

fn trajectory_summary(run: &TrajectoryRun, heading: &str) -> String {
    let mut summary = String::new();
    let times = run.traj.times();
    let _ = writeln!(summary, "{heading}");
    let _ = writeln!(
        summary,
        "grid: {} samples over [0, {}]",
        times.len(),
        times.last().unwrap()
    );
    let first = &run.reports[0];
    let last = run.reports.last().unwrap();
    let _ = writeln!(
        summary,
        "initial: E_N = {}, separability margin = {}, verdict = {}",
        first.log_negativity, first.sep_min_eig, first.verdict
    );
    let _ = writeln!(
        summary,
        "final:   E_N = {}, separability margin = {}, verdict = {}",
        last.log_negativity, last.sep_min_eig, last.verdict
    );
    match run.sudden_death {
        Some(t) => {
            let _ = writeln!(summary, "sudden-death time: {t}");
        }
        None => {
            let _ = writeln!(summary, "sudden-death time: none (entanglement persists)");
        }
    }
    let min_heis = run
        .heisenberg
        .iter()
        .fold(f64::INFINITY, |acc, v| acc.min(*v));
    let _ = writeln!(summary, "minimum uncertainty margin: {min_heis}");
    summary
}

/// Transient simulation: propagate the configured initial covariance and emit
/// the trajectory CSV plus a summary.
pub fn cmd_simulate(path: &Path) -> CmdResult<()> {
    let scenario = load_scenario(path)?;
    let p0 = scenario
        .initial
        .as_ref()
        .ok_or_else(|| config_error("simulate needs an [initial] section"))?;

    // Initial-state validity gate (exit 3): quantum uncertainty LMI plus a
    // positive-semidefinite classical block.
    let p11_0 = p0.view((0, 0), (4, 4)).into_owned();
    let margin = uncertainty_margin(&p11_0).map_err(|e| CmdError::new(3, e.to_string()))?;
    if margin < -scenario.tolerances.heisenberg {
        return Err(CmdError::new(
            3,
            format!("initial covariance violates the uncertainty LMI (margin {margin})"),
        ));
    }
    let nc = scenario.closed_loop.partition().classical;
    if nc > 0 {
        let z = p0.view((4, 4), (nc, nc)).into_owned();
        let zero = DMatrix::zeros(nc, nc);
        let z_min = qlin_core::covariance::min_eig_hermitian(&z, &zero)
            .map_err(|e| CmdError::new(3, e.to_string()))?;
        if z_min < -1e-12 {
            return Err(CmdError::new(
                3,
                format!("initial classical covariance is not PSD (min eigenvalue {z_min})"),
            ));
        }
    }

    let times = scenario.time_grid().map_err(config_error)?;
    let run = run_trajectory(&scenario, &times)?;

    let prefix = output_prefix(&scenario, path);
    ensure_parent(&with_suffix(&prefix, ".csv"))?;
    let csv_path = prefix.with_extension("csv");
    write_trajectory_csv(&csv_path, &trajectory_rows(&run))
        .map_err(|e| internal_error(format!("writing {}: {e}", csv_path.display())))?;
    log::info!("wrote {}", csv_path.display());

    let mut summary = trajectory_summary(&run, &format!("simulation: {}", path.display()));
    let _ = writeln!(summary, "trajectory: {}", csv_path.display());
    let summary_path = with_suffix(&prefix, "_summary.txt");
    emit_summary(Some(&summary_path), &summary)
        .map_err(|e| internal_error(format!("writing {}: {e}", summary_path.display())))?;
    Ok(())
}

/// Randomized verification of the no-go theorems.
///
/// `flip_sign` is a fault-injection hook for exercising the failure path: it
/// negates every steady-state separability margin before judging it, so a
/// healthy ensemble is reported as violating and the process exits nonzero.
pub fn cmd_verify(seed: u64, trials: u64, flip_sign: bool) -> CmdResult<()> {
    if trials == 0 {
        return Err(config_error("--trials must be at least 1"));
    }
    let report = verify_no_go(seed, trials).map_err(internal_error)?;

    let mut failures: Vec<String> = report
        .failures
        .iter()
        .map(|f| {
            format!(
                "trial {}: {} violated (margin {})\n{}",
                f.trial, f.check, f.margin, f.detail
            )
        })
        .collect();
    if flip_sign {
        println!("fault injection active: separability margins sign-flipped");
        for (trial, margin) in report.steady_margins.iter().enumerate() {
            let flipped = -margin;
            if flipped < -NO_GO_TOL {
                failures.push(format!(
                    "trial {trial}: steady-state separability violated (flipped margin {flipped})"
                ));
            }
        }
    }

    println!("no-go verification: seed {seed}, {trials} trials");
    println!(
        "steady-state checks: {} (worst separability margin {})",
        report.steady_state_checks, report.worst_steady_margin
    );
    println!(
        "finite-time checks:  {} (worst log-negativity {})",
        report.transient_checks, report.worst_transient_log_negativity
    );
    println!("controller resamples: {}", report.controller_resamples);
    if failures.is_empty() {
        println!("result: pass");
        Ok(())
    } else {
        for failure in &failures {
            eprintln!("{failure}");
        }
        Err(CmdError::new(
            1,
            format!("result: fail ({} violations)", failures.len()),
        ))
    }
}

/// Expected closed-loop matrices of the built-in reference scenario.
fn reference_matrices() -> (DMatrix<f64>, DMatrix<f64>) {
    let a = DMatrix::from_row_slice(
        5,
        5,
        &[
            -0.005, 0.0, 0.0, 0.0, -0.1, //
            0.0, -0.005, 0.0, 0.0, -0.1, //
            0.0, 0.0, -0.005, 0.0, 0.0, //
            0.0, 0.0, 0.0, -0.005, 0.0, //
            0.0, 0.0, 0.1, 0.0, -1.0,
        ],
    );
    let b = DMatrix::from_row_slice(
        5,
        4,
        &[
            -0.1, 0.0, 0.0, 0.0, //
            0.0, -0.1, 0.0, 0.0, //
            0.0, 0.0, -0.1, 0.0, //
            0.0, 0.0, 0.0, -0.1, //
            0.0, 0.0, 1.0, 0.0,
        ],
    );
    (a, b)
}

/// Run the built-in two-cavity reference scenario: both initial covariances,
/// CSV emission, and a set of hard checkpoints on the results.
pub fn cmd_example_paper(out: &Path) -> CmdResult<()> {
    fs::create_dir_all(out)
        .map_err(|e| internal_error(format!("creating {}: {e}", out.display())))?;
    let mut checkpoints: Vec<(String, Result<(), String>)> = Vec::new();
    let mut check = |name: &str, result: Result<(), String>| {
        checkpoints.push((name.to_string(), result));
    };

    let entangled = example_scenario(true).map_err(config_error)?;
    let separable = example_scenario(false).map_err(config_error)?;

    // Checkpoint: composed matrices match the reference closed loop. The
    // drift diagonal carries one inexact product, so it is compared within
    // an ulp-scale tolerance; every other entry must be exact.
    let (expected_a, expected_b) = reference_matrices();
    let max_diff = (entangled.closed_loop.a_tilde() - &expected_a)
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    check(
        "drift matrix matches reference",
        if max_diff <= 1e-17 {
            Ok(())
        } else {
            Err(format!("max |difference| = {max_diff:e}"))
        },
    );
    check(
        "noise matrix matches reference",
        if entangled.closed_loop.b_tilde() == &expected_b {
            Ok(())
        } else {
            Err("entries differ".into())
        },
    );

    let times = entangled.time_grid().map_err(config_error)?;
    let run_entangled = run_trajectory(&entangled, &times)?;
    let run_separable = run_trajectory(&separable, &times)?;

    // Checkpoint: initial log-negativity and symplectic eigenvalue.
    let first = &run_entangled.reports[0];
    check(
        "initial E_N = 0.1054 (+-1e-3)",
        if (first.log_negativity - 0.1054).abs() <= 1e-3 {
            Ok(())
        } else {
            Err(format!("E_N(0) = {}", first.log_negativity))
        },
    );
    check(
        "initial nu = 0.45 (+-1e-3)",
        if (first.nu - 0.45).abs() <= 1e-3 {
            Ok(())
        } else {
            Err(format!("nu(0) = {}", first.nu))
        },
    );

    // Checkpoint: E_N decays monotonically and dies in finite time.
    let e_n: Vec<f64> = run_entangled
        .reports
        .iter()
        .map(|r| r.log_negativity)
        .collect();
    let monotone = e_n.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    check(
        "E_N is non-increasing",
        if monotone {
            Ok(())
        } else {
            Err("an increase beyond tolerance occurred".into())
        },
    );
    check(
        "entangled curve reaches zero and stays there",
        match run_entangled.sudden_death {
            Some(t) if t > 0.0 => Ok(()),
            Some(_) => Err("curve starts separable".into()),
            None => Err("entanglement persists on the whole grid".into()),
        },
    );

    // Checkpoint: the separable start never becomes entangled.
    let max_sep_e_n = run_separable
        .reports
        .iter()
        .fold(0.0_f64, |acc, r| acc.max(r.log_negativity));
    check(
        "separable curve stays separable",
        if max_sep_e_n <= 1e-9 {
            Ok(())
        } else {
            Err(format!("max E_N = {max_sep_e_n:e}"))
        },
    );

    // Checkpoint: separable steady state.
    let p_ss = solve_steady_state(
        entangled.closed_loop.a_tilde(),
        &entangled.closed_loop.noise_intensity(),
    )
    .map_err(internal_error)?;
    let p11_ss = p_ss.view((0, 0), (4, 4)).into_owned();
    let steady_margin = separability_lmi(&p11_ss).map_err(internal_error)?;
    check(
        "steady state is separable",
        if steady_margin >= -NO_GO_TOL {
            Ok(())
        } else {
            Err(format!("margin {steady_margin}"))
        },
    );

    // Artifacts.
    let entangled_csv = out.join("entangled.csv");
    let separable_csv = out.join("separable.csv");
    write_trajectory_csv(&entangled_csv, &trajectory_rows(&run_entangled))
        .map_err(|e| internal_error(format!("writing {}: {e}", entangled_csv.display())))?;
    write_trajectory_csv(&separable_csv, &trajectory_rows(&run_separable))
        .map_err(|e| internal_error(format!("writing {}: {e}", separable_csv.display())))?;

    let mut summary = String::new();
    summary.push_str(&trajectory_summary(
        &run_entangled,
        "reference run, entangled start",
    ));
    summary.push('\n');
    summary.push_str(&trajectory_summary(
        &run_separable,
        "reference run, separable start",
    ));
    summary.push('\n');
    let _ = writeln!(summary, "steady-state separability margin: {steady_margin}");
    for (name, result) in &checkpoints {
        match result {
            Ok(()) => {
                let _ = writeln!(summary, "checkpoint {name}: ok");
            }
            Err(msg) => {
                let _ = writeln!(summary, "checkpoint {name}: FAILED ({msg})");
            }
        }
    }
    let summary_path = out.join("example_summary.txt");
    emit_summary(Some(&summary_path), &summary)
        .map_err(|e| internal_error(format!("writing {}: {e}", summary_path.display())))?;

    let failed: Vec<&(String, Result<(), String>)> =
        checkpoints.iter().filter(|(_, r)| r.is_err()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CmdError::new(
            1,
            format!("{} checkpoint(s) failed", failed.len()),
        ))
    }
}
