//! Acceptance suite: every numbered criterion below runs standalone, pins its
//! tolerances in code, and prints one pass line. Timing budgets are asserted
//! with `std::time::Instant` over enough repetitions to be stable.

use std::hint::black_box;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;

use qlin_cli::scenario::{example_initial_entangled, example_scenario, Scenario};
use qlin_core::covariance::{is_hurwitz, propagate, solve_steady_state, uniform_grid};
use qlin_core::entanglement::{
    log_negativity, log_negativity_series, random_quantum_covariance, random_realizable_system,
    separability_lmi, sudden_death_from_series, Verdict,
};
use qlin_core::model::{
    heisenberg_check, realizability_residual, to_quadrature, vacuum_field, OscillatorSpec,
};

fn matrix(rows: Vec<Vec<f64>>) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, rows[0].len(), |i, j| rows[i][j])
}

fn cavity_system() -> qlin_core::model::QuadratureSystem {
    let spec = OscillatorSpec::new(
        DMatrix::zeros(2, 2),
        DMatrix::from_row_slice(
            1,
            2,
            &[Complex64::new(0.05, 0.0), Complex64::new(0.0, 0.05)],
        ),
        DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)),
    )
    .unwrap();
    to_quadrature(&spec, &vacuum_field(1).unwrap()).unwrap()
}

fn noise_intensity(sys: &qlin_core::model::QuadratureSystem) -> DMatrix<f64> {
    let q = sys.b() * sys.field().s_w() * sys.b().transpose();
    0.5 * (&q + q.transpose())
}

/// Criterion 1: the entangled reference covariance reproduces the known
/// log-negativity and symplectic eigenvalue, cross-checked against an
/// independent arithmetic oracle, in under a millisecond.
#[test]
fn acceptance_1_log_negativity_reproduction() {
    let p11 = matrix(example_initial_entangled());

    // Independent oracle: closed-form determinants of the X-shaped matrix.
    let (a, c) = (0.5028_f64, 0.0528_f64);
    let delta_oracle = 2.0 * (a * a + c * c);
    assert!((delta_oracle - 0.51119).abs() <= 1e-5);
    let det_oracle = (a * a - c * c) * (a * a - c * c);
    let nu_oracle =
        (0.5 * (delta_oracle - (delta_oracle * delta_oracle - 4.0 * det_oracle).sqrt())).sqrt();

    let report = log_negativity(&p11).unwrap();
    assert!((report.delta_tilde - delta_oracle).abs() <= 1e-12);
    assert!((report.nu - nu_oracle).abs() <= 1e-12);
    assert!((report.nu - 0.45).abs() <= 1e-3, "nu = {}", report.nu);
    assert!(
        (report.log_negativity - 0.1054).abs() <= 1e-3,
        "E_N = {}",
        report.log_negativity
    );

    let reps = 100;
    let start = Instant::now();
    for _ in 0..reps {
        black_box(log_negativity(black_box(&p11)).unwrap());
    }
    let per_call = start.elapsed() / reps;
    assert!(per_call < Duration::from_millis(1), "took {per_call:?}");
    println!("acceptance 1 (log-negativity reproduction): pass ({per_call:?}/call)");
}

/// Criterion 2: the built-in reference wiring reproduces the known 5x5 drift
/// and 5x4 noise matrices. The four plant damping entries carry the single
/// inexact coupling product and are allowed one ulp; everything else must be
/// bit-exact.
#[test]
fn acceptance_2_reference_matrix_fidelity() {
    let scenario = example_scenario(true).unwrap();
    let cl = &scenario.closed_loop;
    let expected_a = DMatrix::from_row_slice(
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
    let expected_b = DMatrix::from_row_slice(
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
    for i in 0..5 {
        for j in 0..5 {
            let got = cl.a_tilde()[(i, j)];
            let want = expected_a[(i, j)];
            if i == j && i < 4 {
                assert!(
                    (got - want).abs() <= 1e-18,
                    "A({i},{j}) = {got:e}, want {want:e} within one ulp"
                );
            } else {
                assert_eq!(got, want, "A({i},{j})");
            }
        }
    }
    assert_eq!(cl.b_tilde(), &expected_b);
    println!("acceptance 2 (reference matrix fidelity): pass");
}

/// Criterion 3: the reference loop's steady state satisfies the
/// partial-transpose separability LMI, solved and judged in under 10 ms.
#[test]
fn acceptance_3_steady_state_separability() {
    let scenario = example_scenario(true).unwrap();
    let cl = &scenario.closed_loop;
    let solve_and_judge = || {
        let p_ss = solve_steady_state(cl.a_tilde(), &cl.noise_intensity()).unwrap();
        separability_lmi(&p_ss.view((0, 0), (4, 4)).into_owned()).unwrap()
    };
    let margin = solve_and_judge();
    assert!(margin >= -1e-8, "steady-state margin {margin}");
    // Sharper form at the dynamics normalization: full symplectic weight.
    let p_ss = solve_steady_state(cl.a_tilde(), &cl.noise_intensity()).unwrap();
    let unit_margin = qlin_core::covariance::min_eig_hermitian(
        &p_ss.view((0, 0), (4, 4)).into_owned(),
        &qlin_core::entanglement::partial_transpose_theta(),
    )
    .unwrap();
    assert!(unit_margin >= -1e-8, "unit-scale margin {unit_margin}");

    let reps = 20;
    let start = Instant::now();
    for _ in 0..reps {
        black_box(solve_and_judge());
    }
    let per_call = start.elapsed() / reps;
    assert!(per_call < Duration::from_millis(10), "took {per_call:?}");
    println!("acceptance 3 (steady-state separability): pass (margin {margin}, {per_call:?}/call)");
}

fn e_n_series(scenario: &Scenario) -> (Vec<f64>, Vec<f64>) {
    let cl = &scenario.closed_loop;
    let times = scenario.time_grid().unwrap();
    let traj = propagate(
        cl.a_tilde(),
        &cl.noise_intensity(),
        scenario.initial.as_ref().unwrap(),
        &times,
    )
    .unwrap()
    .with_partition(cl.partition())
    .unwrap();
    let e_n = log_negativity_series(&traj)
        .unwrap()
        .iter()
        .map(|r| r.log_negativity)
        .collect();
    (times, e_n)
}

/// Criterion 4: qualitative decay-curve reproduction on the 2000-step grid.
/// The entangled start decays monotonically to zero at a finite grid time and
/// stays there; the separable start never leaves zero. The absolute time
/// units of the published curve are unspecified, so only shape properties are
/// asserted. The full entangled run must finish within a second.
#[test]
fn acceptance_4_decay_curve_shape() {
    let entangled = example_scenario(true).unwrap();
    let start = Instant::now();
    let (times, e_n) = e_n_series(&entangled);
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    assert_eq!(times.len(), 2001);

    assert!(
        e_n.windows(2).all(|w| w[1] <= w[0] + 1e-9),
        "E_N must be non-increasing"
    );
    let death = sudden_death_from_series(&times, &e_n);
    let death = death.expect("entanglement must die at a finite grid time");
    assert!(death > 0.0 && death < *times.last().unwrap());
    let first_dead = times.iter().position(|t| *t >= death).unwrap();
    assert!(
        e_n[first_dead..].iter().all(|v| *v <= 1e-9),
        "E_N must stay at zero after sudden death"
    );

    let separable = example_scenario(false).unwrap();
    let (_, e_n_sep) = e_n_series(&separable);
    assert!(
        e_n_sep.iter().all(|v| *v <= 1e-9),
        "separable start must stay separable"
    );
    println!(
        "acceptance 4 (decay curve shape): pass (sudden death at t = {death}, run {elapsed:?})"
    );
}

/// Criterion 5: quadrature conversion preserves the commutation relations
/// across a random ensemble and exactly on the reference cavity.
#[test]
fn acceptance_5_realizability() {
    for seed in 0..100u64 {
        let spec = random_realizable_system(seed, 1 + (seed as usize % 2));
        let sys = to_quadrature(&spec, &vacuum_field(spec.fields()).unwrap()).unwrap();
        let residual = realizability_residual(&sys);
        assert!(residual <= 1e-10, "seed {seed}: residual {residual:e}");
    }
    let cavity = cavity_system();
    let residual = realizability_residual(&cavity);
    assert!(residual <= 1e-12, "cavity residual {residual:e}");
    println!("acceptance 5 (realizability): pass");
}

/// Criterion 6: steady states of random realizable Hurwitz systems satisfy
/// the uncertainty LMI `P + i Theta >= 0`.
#[test]
fn acceptance_6_uncertainty_at_steady_state() {
    let mut checked = 0;
    let mut seed = 0u64;
    let mut worst = f64::INFINITY;
    while checked < 100 {
        seed += 1;
        let spec = random_realizable_system(seed, 1 + (seed as usize % 2));
        let sys = to_quadrature(&spec, &vacuum_field(spec.fields()).unwrap()).unwrap();
        if !is_hurwitz(sys.a()).0 {
            continue;
        }
        checked += 1;
        let p_ss = solve_steady_state(sys.a(), &noise_intensity(&sys)).unwrap();
        let report = heisenberg_check(&p_ss, &sys.theta()).unwrap();
        worst = worst.min(report.min_eig);
        assert!(
            report.min_eig >= -1e-8,
            "seed {seed}: uncertainty margin {}",
            report.min_eig
        );
    }
    println!("acceptance 6 (uncertainty at steady state): pass (worst margin {worst})");
}

/// Criterion 7: the randomized no-go ensemble (seed 42, 100 trials) passes
/// both theorem legs through the real binary in under 30 seconds, with the
/// worst separability margin within tolerance.
#[test]
fn acceptance_7_randomized_no_go_suite() {
    let start = Instant::now();
    let output = Command::new(env!("CARGO_BIN_EXE_qlin"))
        .args(["verify", "--seed", "42", "--trials", "100"])
        .output()
        .expect("binary runs");
    let elapsed = start.elapsed();
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(
        output.status.success(),
        "verify failed:\n{stdout}\n{}",
        String::from_utf8_lossy(&output.stderr)
    );
    assert!(stdout.contains("result: pass"), "{stdout}");
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");

    let worst: f64 = stdout
        .lines()
        .find_map(|l| {
            l.split("worst separability margin ")
                .nth(1)
                .and_then(|rest| rest.trim_end_matches(')').parse().ok())
        })
        .expect("worst margin reported");
    assert!(worst >= -1e-8, "worst steady-state margin {worst}");
    println!("acceptance 7 (randomized no-go suite): pass (worst margin {worst}, {elapsed:?})");
}

/// Criterion 8: solver oracles. The steady-state solver matches the closed
/// form for scalar-multiple drift, propagation matches the scalar ODE closed
/// form, and long-horizon propagation lands on the steady state.
#[test]
fn acceptance_8_solver_oracles() {
    // Closed form P = I for A = -0.005 I, Q = 0.01 I.
    let a = -0.005 * DMatrix::<f64>::identity(4, 4);
    let q = 0.01 * DMatrix::<f64>::identity(4, 4);
    let p = solve_steady_state(&a, &q).unwrap();
    let err = (&p - DMatrix::<f64>::identity(4, 4)).norm();
    assert!(err <= 1e-10, "steady-state error {err:e}");

    // Scalar closed form P(t) = 1 - exp(-2t).
    let a1 = DMatrix::from_element(1, 1, -1.0);
    let q1 = DMatrix::from_element(1, 1, 2.0);
    let times = uniform_grid(10.0, 500);
    let traj = propagate(&a1, &q1, &DMatrix::zeros(1, 1), &times).unwrap();
    for (t, p) in times.iter().zip(traj.covariances()) {
        let expected = 1.0 - (-2.0 * t).exp();
        assert!(
            (p[(0, 0)] - expected).abs() <= 1e-9,
            "t = {t}: {} vs {expected}",
            p[(0, 0)]
        );
    }

    // Long-horizon propagation reaches the steady state of a random system.
    let sys = (0..)
        .map(|seed| {
            let spec = random_realizable_system(seed, 1);
            to_quadrature(&spec, &vacuum_field(1).unwrap()).unwrap()
        })
        .find(|sys| is_hurwitz(sys.a()).0)
        .unwrap();
    let (_, abscissa) = is_hurwitz(sys.a());
    let q = noise_intensity(&sys);
    let p_ss = solve_steady_state(sys.a(), &q).unwrap();
    let p0 = 5.0 * DMatrix::<f64>::identity(2, 2);
    let horizon = uniform_grid(20.0 / abscissa.abs(), 800);
    let traj = propagate(sys.a(), &q, &p0, &horizon).unwrap();
    let drift = (traj.covariances().last().unwrap() - &p_ss).norm();
    assert!(drift <= 1e-6, "long-horizon drift {drift:e}");
    println!("acceptance 8 (solver oracles): pass");
}

/// Criterion 9: the separability LMI verdict and the `E_N > 0` verdict agree
/// on 1000 random valid two-mode covariances, with both verdicts represented.
#[test]
fn acceptance_9_criterion_equivalence() {
    let mut separable = 0u32;
    let mut entangled = 0u32;
    for seed in 0..1000u64 {
        let p = random_quantum_covariance(seed).unwrap();
        let margin = separability_lmi(&p).unwrap();
        // log_negativity internally errors on any disagreement; comparing the
        // verdicts here keeps the check explicit.
        let report = log_negativity(&p).unwrap();
        let lmi_entangled = margin < -1e-9;
        let en_entangled = report.log_negativity > 1e-9;
        assert_eq!(
            lmi_entangled, en_entangled,
            "seed {seed}: margin {margin}, E_N {}",
            report.log_negativity
        );
        match report.verdict {
            Verdict::Separable => separable += 1,
            Verdict::Entangled => entangled += 1,
        }
    }
    assert!(separable > 0 && entangled > 0);
    println!(
        "acceptance 9 (criterion equivalence): pass ({separable} separable, {entangled} entangled)"
    );
}
