//! Separability verdicts, logarithmic negativity, entanglement sudden death,
//! and the randomized verification that classical linear control cannot
//! create bipartite Gaussian entanglement.
//!
//! Two-mode covariances in this module follow the normalization of the
//! log-negativity formula `E_N = max(0, -ln 2 nu)`: a vacuum mode has
//! variance 1/2, so the uncertainty LMI reads `P + (i/2) diag(J, J) >= 0` and
//! the partial-transpose separability LMI reads
//! `P + (i/2) diag(J, -J) >= 0`. Both criteria share their boundary at the
//! smallest partial-transpose symplectic eigenvalue `nu = 1/2`, which is what
//! makes the LMI verdict and the `E_N > 0` verdict interchangeable.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::covariance::{
    is_hurwitz, min_eig_hermitian, propagate, solve_steady_state, uniform_grid,
    CovarianceTrajectory,
};
use crate::interconnect::{
    compose_closed_loop, ClosedLoop, ControllerSpec, Measurement, PlantWiring, Quadrature,
    WiringSpec,
};
use crate::model::{block_j, to_quadrature, vacuum_field, OscillatorSpec, QuadratureSystem};
use crate::{Error, Result};

/// Verdict tolerance on LMI minimum eigenvalues and on `E_N`.
pub const VERDICT_TOL: f64 = 1e-9;

/// Tolerance for the validity pre-check of a quantum covariance.
pub const VALIDITY_TOL: f64 = 1e-8;

/// Margin tolerance asserted by the randomized no-go verification.
pub const NO_GO_TOL: f64 = 1e-8;

/// `diag(J, J)` for a two-mode system.
pub fn two_mode_theta() -> DMatrix<f64> {
    block_j(2)
}

/// `diag(J, -J)`: the symplectic form after partially transposing mode two.
pub fn partial_transpose_theta() -> DMatrix<f64> {
    let mut t = block_j(2);
    t[(2, 3)] = -1.0;
    t[(3, 2)] = 1.0;
    t
}

fn check_two_mode(p11: &DMatrix<f64>) -> Result<()> {
    if p11.nrows() != 4 || p11.ncols() != 4 {
        return Err(Error::Dimension(format!(
            "two-mode covariance must be 4x4, got {}x{}",
            p11.nrows(),
            p11.ncols()
        )));
    }
    let res = (p11 - p11.transpose())
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if res > 1e-12 {
        return Err(Error::NotSymmetric {
            what: "two-mode covariance",
            residual: res,
        });
    }
    Ok(())
}

/// Uncertainty margin `lambda_min(P + (i/2) diag(J, J))` of a two-mode
/// covariance; nonnegative (to tolerance) for every valid quantum state.
pub fn uncertainty_margin(p11: &DMatrix<f64>) -> Result<f64> {
    check_two_mode(p11)?;
    min_eig_hermitian(p11, &(0.5 * two_mode_theta()))
}

fn require_valid(p11: &DMatrix<f64>) -> Result<()> {
    let margin = uncertainty_margin(p11)?;
    if margin < -VALIDITY_TOL {
        return Err(Error::InvalidCovariance { min_eig: margin });
    }
    Ok(())
}

/// Separability LMI margin `lambda_min(P + (i/2) diag(J, -J))`.
///
/// Nonnegative (to tolerance) exactly for separable two-mode Gaussian states;
/// errors if `P` is not a valid quantum covariance to begin with.
pub fn separability_lmi(p11: &DMatrix<f64>) -> Result<f64> {
    require_valid(p11)?;
    min_eig_hermitian(p11, &(0.5 * partial_transpose_theta()))
}

/// Separability verdict of a two-mode Gaussian state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Separable,
    Entangled,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Separable => write!(f, "separable"),
            Verdict::Entangled => write!(f, "entangled"),
        }
    }
}

/// Entanglement figures of one two-mode covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementReport {
    /// `det(P_1) + det(P_3) - 2 det(P_2)` over the 2x2 blocks of `P`.
    pub delta_tilde: f64,
    /// Smallest partial-transpose symplectic eigenvalue.
    pub nu: f64,
    /// Logarithmic negativity `max(0, -ln 2 nu)`.
    pub log_negativity: f64,
    /// Separability LMI margin.
    pub sep_min_eig: f64,
    pub verdict: Verdict,
}

fn det2(m: nalgebra::DMatrixView<'_, f64>) -> f64 {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

/// Logarithmic negativity of a two-mode covariance, cross-checked against the
/// separability LMI.
///
/// Computes `delta = det P_1 + det P_3 - 2 det P_2`,
/// `nu = sqrt((delta - sqrt(delta^2 - 4 det P)) / 2)` and
/// `E_N = max(0, -ln 2 nu)`. The LMI margin decides the same boundary; any
/// disagreement between the two criteria beyond tolerance is reported as an
/// internal error.
pub fn log_negativity(p11: &DMatrix<f64>) -> Result<EntanglementReport> {
    require_valid(p11)?;

    let p1 = det2(p11.view((0, 0), (2, 2)));
    let p3 = det2(p11.view((2, 2), (2, 2)));
    let p2 = det2(p11.view((0, 2), (2, 2)));
    let delta_tilde = p1 + p3 - 2.0 * p2;
    let det_p = p11.determinant();

    let inner = delta_tilde * delta_tilde - 4.0 * det_p;
    if inner < -1e-12 {
        return Err(Error::NumericDomain {
            what: "partial-transpose symplectic radicand",
            value: inner,
        });
    }
    let outer = 0.5 * (delta_tilde - inner.max(0.0).sqrt());
    if outer < -1e-12 {
        return Err(Error::NumericDomain {
            what: "squared symplectic eigenvalue",
            value: outer,
        });
    }
    let nu = outer.max(0.0).sqrt();
    if nu == 0.0 {
        return Err(Error::NumericDomain {
            what: "symplectic eigenvalue",
            value: nu,
        });
    }
    let log_negativity = (-(2.0 * nu).ln()).max(0.0);

    let sep_min_eig = min_eig_hermitian(p11, &(0.5 * partial_transpose_theta()))?;
    let lmi_separable = sep_min_eig >= -VERDICT_TOL;
    let en_separable = log_negativity <= VERDICT_TOL;
    if lmi_separable != en_separable {
        return Err(Error::CriterionDisagreement {
            sep_min_eig,
            log_negativity,
        });
    }

    Ok(EntanglementReport {
        delta_tilde,
        nu,
        log_negativity,
        sep_min_eig,
        verdict: if lmi_separable {
            Verdict::Separable
        } else {
            Verdict::Entangled
        },
    })
}

/// Entanglement report for every sample of a trajectory's quantum block.
pub fn log_negativity_series(traj: &CovarianceTrajectory) -> Result<Vec<EntanglementReport>> {
    (0..traj.len())
        .map(|i| log_negativity(&traj.quantum_block(i)?))
        .collect()
}

/// Sudden-death time from a precomputed `E_N` series at [`VERDICT_TOL`].
///
/// Returns the first grid time from which `E_N` stays below tolerance,
/// refined by linear interpolation of the threshold crossing between the
/// bracketing samples; `None` if entanglement persists to the last sample.
pub fn sudden_death_from_series(times: &[f64], e_n: &[f64]) -> Option<f64> {
    sudden_death_from_series_with_tol(times, e_n, VERDICT_TOL)
}

/// [`sudden_death_from_series`] with a caller-chosen threshold.
pub fn sudden_death_from_series_with_tol(times: &[f64], e_n: &[f64], tol: f64) -> Option<f64> {
    assert_eq!(times.len(), e_n.len(), "series lengths differ");
    if e_n.is_empty() {
        return None;
    }
    let mut first_dead = e_n.len();
    for (i, &value) in e_n.iter().enumerate().rev() {
        if value > tol {
            break;
        }
        first_dead = i;
    }
    if first_dead == e_n.len() {
        return None;
    }
    if first_dead == 0 {
        return Some(times[0]);
    }
    let (t0, t1) = (times[first_dead - 1], times[first_dead]);
    let (e0, e1) = (e_n[first_dead - 1], e_n[first_dead]);
    Some(t0 + (e0 - tol) / (e0 - e1) * (t1 - t0))
}

/// Sudden-death time of a closed-loop covariance trajectory.
pub fn sudden_death_time(traj: &CovarianceTrajectory) -> Result<Option<f64>> {
    let reports = log_negativity_series(traj)?;
    let e_n: Vec<f64> = reports.iter().map(|r| r.log_negativity).collect();
    Ok(sudden_death_from_series(traj.times(), &e_n))
}

fn random_spec(rng: &mut ChaCha8Rng, m: usize) -> OscillatorSpec {
    let r11 = rng.gen_range(-1.0..=1.0);
    let r22 = rng.gen_range(-1.0..=1.0);
    let r12 = rng.gen_range(-1.0..=1.0);
    let r = DMatrix::from_row_slice(2, 2, &[r11, r12, r12, r22]);
    let mut k = DMatrix::zeros(m, 2);
    for j in 0..m {
        for col in 0..2 {
            // complex entries drawn uniformly from the unit disk
            let z = loop {
                let re = rng.gen_range(-1.0..=1.0);
                let im = rng.gen_range(-1.0..=1.0);
                if re * re + im * im <= 1.0 {
                    break Complex64::new(re, im);
                }
            };
            k[(j, col)] = z;
        }
    }
    let s = DMatrix::from_diagonal_element(m, m, Complex64::new(1.0, 0.0));
    OscillatorSpec::new(r, k, s).expect("random spec is symmetric and unitary by construction")
}

/// Deterministic random single-oscillator spec: symmetric `R` with entries in
/// `[-1, 1]`, coupling entries in the complex unit disk, identity scattering.
pub fn random_realizable_system(seed: u64, m: usize) -> OscillatorSpec {
    assert!(m >= 1, "need at least one field");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_spec(&mut rng, m)
}

fn random_separable_from_rng(rng: &mut ChaCha8Rng) -> Result<DMatrix<f64>> {
    const ATTEMPTS: usize = 10_000;
    for _ in 0..ATTEMPTS {
        // Valid single-mode covariances (vacuum I/2 plus positive noise) on
        // the diagonal, plus a shared classical correlation term.
        let mut blocks = [DMatrix::zeros(2, 2), DMatrix::zeros(2, 2)];
        for block in &mut blocks {
            let margin = rng.gen_range(0.05..=0.5);
            let g = DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-0.5..=0.5));
            *block = 0.5 * (1.0 + margin) * DMatrix::identity(2, 2) + 0.5 * (&g * g.transpose());
        }
        let h = DMatrix::from_fn(4, 4, |_, _| rng.gen_range(-0.5..=0.5));
        let classical = rng.gen_range(0.0..=0.5) * (&h * h.transpose());
        let mut local = DMatrix::zeros(4, 4);
        local.view_mut((0, 0), (2, 2)).copy_from(&blocks[0]);
        local.view_mut((2, 2), (2, 2)).copy_from(&blocks[1]);
        let p: DMatrix<f64> = local + classical;
        let p = 0.5 * (&p + p.transpose());

        let valid = min_eig_hermitian(&p, &(0.5 * two_mode_theta()))?;
        let sep = min_eig_hermitian(&p, &(0.5 * partial_transpose_theta()))?;
        if valid >= 0.0 && sep >= 0.0 {
            return Ok(p);
        }
    }
    Err(Error::SamplingExhausted {
        what: "separable covariance sampling",
        attempts: ATTEMPTS,
    })
}

/// Deterministic random separable two-mode covariance.
///
/// Built as `diag(V_A, V_B) + W` with valid single-mode blocks and a random
/// positive-semidefinite classical correlation `W`, then accepted only if both
/// the uncertainty and the partial-transpose LMIs hold.
pub fn random_separable_covariance(seed: u64) -> Result<DMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_separable_from_rng(&mut rng)
}

fn planar_rotation(theta: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[theta.cos(), theta.sin(), -theta.sin(), theta.cos()])
}

/// Deterministic random valid two-mode covariance, separable or entangled.
///
/// Half the draws are separable by construction; the rest come from the
/// two-mode squeezed family with random isotropic noise, which crosses the
/// separability boundary when the noise exceeds the squeezing gap, and random
/// local rotations to mix the quadratures.
pub fn random_quantum_covariance(seed: u64) -> Result<DMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if rng.gen_bool(0.5) {
        return random_separable_from_rng(&mut rng);
    }
    let r: f64 = rng.gen_range(0.1..=1.2);
    let ch = 0.5 * (2.0 * r).cosh();
    let sh = 0.5 * (2.0 * r).sinh();
    let mut p = DMatrix::from_diagonal_element(4, 4, ch);
    p[(0, 2)] = sh;
    p[(2, 0)] = sh;
    p[(1, 3)] = -sh;
    p[(3, 1)] = -sh;
    let gap = 0.5 - 0.5 * (-2.0 * r).exp();
    let noise = rng.gen_range(0.0..=1.5) * gap;
    p += noise * DMatrix::identity(4, 4);

    let mut local = DMatrix::zeros(4, 4);
    local
        .view_mut((0, 0), (2, 2))
        .copy_from(&planar_rotation(rng.gen_range(-3.0..=3.0)));
    local
        .view_mut((2, 2), (2, 2))
        .copy_from(&planar_rotation(rng.gen_range(-3.0..=3.0)));
    let p = &local * p * local.transpose();
    Ok(0.5 * (&p + p.transpose()))
}

fn trial_seed(seed: u64, trial: u64) -> u64 {
    let mut z = seed ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..=1.0))
}

struct PlantDraw {
    sys: QuadratureSystem,
    wiring: PlantWiring,
}

fn draw_plant(rng: &mut ChaCha8Rng) -> Result<PlantDraw> {
    let m = rng.gen_range(1..=2usize);
    // Reject anti-damped plants: the steady-state theorem assumes a Hurwitz
    // closed loop, and random controller search essentially never stabilizes
    // a plant that is unstable on its own.
    let sys = {
        let mut attempts = 0;
        loop {
            let spec = random_spec(rng, m);
            let sys = to_quadrature(&spec, &vacuum_field(m)?)?;
            if is_hurwitz(sys.a()).0 {
                break sys;
            }
            attempts += 1;
            if attempts > 10_000 {
                return Err(Error::SamplingExhausted {
                    what: "Hurwitz plant sampling",
                    attempts,
                });
            }
        }
    };
    let mut measured = Vec::new();
    let mut modulated = Vec::new();
    for field in 0..m {
        match rng.gen_range(0..3u8) {
            0 => measured.push(Measurement {
                field,
                quadrature: if rng.gen_bool(0.5) {
                    Quadrature::Amplitude
                } else {
                    Quadrature::Phase
                },
            }),
            1 => modulated.push(field),
            _ => {}
        }
    }
    let wiring = PlantWiring {
        measured,
        modulated,
        ham_mod: Some(random_matrix(rng, 2, 2)),
    };
    Ok(PlantDraw { sys, wiring })
}

fn draw_controller(rng: &mut ChaCha8Rng, nc: usize, wiring: &WiringSpec) -> Result<ControllerSpec> {
    let n_meas = wiring.plants[0].measured.len() + wiring.plants[1].measured.len();
    ControllerSpec::new(
        random_matrix(rng, nc, nc),
        random_matrix(rng, nc, n_meas),
        [random_matrix(rng, 2, nc), random_matrix(rng, 2, nc)],
        [
            random_matrix(rng, 2 * wiring.plants[0].modulated.len(), nc),
            random_matrix(rng, 2 * wiring.plants[1].modulated.len(), nc),
        ],
    )
}

/// One violated assertion found by [`verify_no_go`], with the offending
/// system matrices rendered into `detail`.
#[derive(Debug, Clone)]
pub struct NoGoFailure {
    pub trial: u64,
    pub check: &'static str,
    pub margin: f64,
    pub detail: String,
}

/// Outcome of the randomized no-go verification.
#[derive(Debug, Clone)]
pub struct NoGoReport {
    pub trials: u64,
    pub steady_state_checks: u64,
    pub transient_checks: u64,
    /// Smallest steady-state separability margin seen across the ensemble.
    pub worst_steady_margin: f64,
    /// Largest transient log-negativity seen across the ensemble.
    pub worst_transient_log_negativity: f64,
    pub controller_resamples: u64,
    pub steady_margins: Vec<f64>,
    pub failures: Vec<NoGoFailure>,
}

impl NoGoReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn dump_system(cl: &ClosedLoop) -> String {
    format!("A_tilde = {}B_tilde = {}", cl.a_tilde(), cl.b_tilde())
}

const MAX_CONTROLLER_RESAMPLES: usize = 1_000;
const MAX_PLANT_REDRAWS: usize = 64;
const TRANSIENT_SAMPLES: usize = 400;
const REJECTED_SAMPLES: usize = 150;

struct TrialSystems {
    hurwitz: ClosedLoop,
    abscissa: f64,
    rejected: Option<(ClosedLoop, f64)>,
    resamples: u64,
}

fn draw_hurwitz_loop(rng: &mut ChaCha8Rng) -> Result<TrialSystems> {
    let mut rejected: Option<(ClosedLoop, f64)> = None;
    let mut resamples = 0_u64;
    for _ in 0..MAX_PLANT_REDRAWS {
        let p1 = draw_plant(rng)?;
        let p2 = draw_plant(rng)?;
        let wiring = WiringSpec::new([p1.wiring.clone(), p2.wiring.clone()])?;
        let nc = rng.gen_range(1..=2usize);
        for _ in 0..MAX_CONTROLLER_RESAMPLES {
            let ctrl = draw_controller(rng, nc, &wiring)?;
            let cl = compose_closed_loop(&p1.sys, &p2.sys, &ctrl, &wiring)?;
            let (hurwitz, abscissa) = is_hurwitz(cl.a_tilde());
            if hurwitz {
                return Ok(TrialSystems {
                    hurwitz: cl,
                    abscissa,
                    rejected,
                    resamples,
                });
            }
            if rejected.is_none() {
                rejected = Some((cl, abscissa));
            }
            resamples += 1;
        }
    }
    Err(Error::SamplingExhausted {
        what: "Hurwitz closed-loop sampling",
        attempts: MAX_PLANT_REDRAWS * MAX_CONTROLLER_RESAMPLES,
    })
}

fn embed_initial(p11: &DMatrix<f64>, nc: usize) -> DMatrix<f64> {
    let mut p0 = DMatrix::zeros(4 + nc, 4 + nc);
    p0.view_mut((0, 0), (4, 4)).copy_from(p11);
    p0
}

fn transient_max_log_negativity(
    cl: &ClosedLoop,
    p0_quantum: &DMatrix<f64>,
    t_end: f64,
    samples: usize,
) -> Result<f64> {
    let p0 = embed_initial(p0_quantum, cl.partition().classical);
    let traj = propagate(
        cl.a_tilde(),
        &cl.noise_intensity(),
        &p0,
        &uniform_grid(t_end, samples),
    )?
    .with_partition(cl.partition())?;
    let mut max_e_n = 0.0_f64;
    for report in log_negativity_series(&traj)? {
        max_e_n = max_e_n.max(report.log_negativity);
    }
    Ok(max_e_n)
}

/// Randomized verification of the two no-go theorems.
///
/// Each trial draws two random realizable plants plus random wiring, then
/// resamples random controllers until the closed loop is Hurwitz. The steady
/// state must satisfy the separability LMI (no entanglement at steady state),
/// and a trajectory started from a random separable covariance must keep
/// `E_N` at zero throughout (no entanglement in finite time). The first
/// rejected non-Hurwitz composition of a trial, when one exists, is also run
/// through the finite-time leg, since that theorem needs no stability
/// assumption. Any violated margin lands in the report's `failures` with the
/// offending system dumped.
pub fn verify_no_go(seed: u64, trials: u64) -> Result<NoGoReport> {
    if trials == 0 {
        return Err(Error::Invalid(
            "verification needs at least one trial".into(),
        ));
    }
    let mut report = NoGoReport {
        trials,
        steady_state_checks: 0,
        transient_checks: 0,
        worst_steady_margin: f64::INFINITY,
        worst_transient_log_negativity: 0.0,
        controller_resamples: 0,
        steady_margins: Vec::with_capacity(trials as usize),
        failures: Vec::new(),
    };

    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, trial));
        let systems = draw_hurwitz_loop(&mut rng)?;
        report.controller_resamples += systems.resamples;
        let cl = &systems.hurwitz;

        // Steady-state leg. The steady state lives at the dynamics
        // normalization (vacuum covariance I), where the partial-transpose
        // LMI carries the full symplectic form; the weaker half-scale margin
        // used by the entanglement layer is checked alongside it.
        let p_ss = solve_steady_state(cl.a_tilde(), &cl.noise_intensity())?;
        let p11 = p_ss.view((0, 0), (4, 4)).into_owned();
        let margin_half = separability_lmi(&p11)?;
        let margin = min_eig_hermitian(&p11, &partial_transpose_theta())?;
        report.steady_state_checks += 1;
        report.steady_margins.push(margin);
        report.worst_steady_margin = report.worst_steady_margin.min(margin);
        if margin < -NO_GO_TOL || margin_half < -NO_GO_TOL {
            report.failures.push(NoGoFailure {
                trial,
                check: "steady-state separability",
                margin: margin.min(margin_half),
                detail: format!("P_11 = {}{}", p11, dump_system(cl)),
            });
        }

        // Finite-time leg on the Hurwitz loop.
        let p0_quantum = random_separable_from_rng(&mut rng)?;
        let t_end = 20.0 / systems.abscissa.abs();
        let max_e_n = transient_max_log_negativity(cl, &p0_quantum, t_end, TRANSIENT_SAMPLES)?;
        report.transient_checks += 1;
        report.worst_transient_log_negativity = report.worst_transient_log_negativity.max(max_e_n);
        if max_e_n > NO_GO_TOL {
            report.failures.push(NoGoFailure {
                trial,
                check: "finite-time separability",
                margin: max_e_n,
                detail: format!("P_0 = {}{}", p0_quantum, dump_system(cl)),
            });
        }

        // Finite-time leg on a rejected non-Hurwitz draw: the theorem holds
        // without the stability hypothesis. The horizon is capped so the
        // growing covariance stays at a scale where absolute tolerances are
        // meaningful.
        if let Some((unstable, abscissa)) = &systems.rejected {
            let p0_quantum = random_separable_from_rng(&mut rng)?;
            let t_end = 1.0 / abscissa.max(1.0);
            let max_e_n =
                transient_max_log_negativity(unstable, &p0_quantum, t_end, REJECTED_SAMPLES)?;
            report.transient_checks += 1;
            report.worst_transient_log_negativity =
                report.worst_transient_log_negativity.max(max_e_n);
            if max_e_n > NO_GO_TOL {
                report.failures.push(NoGoFailure {
                    trial,
                    check: "finite-time separability (non-Hurwitz draw)",
                    margin: max_e_n,
                    detail: format!("P_0 = {}{}", p0_quantum, dump_system(unstable)),
                });
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::matrix_exponential;
    use crate::model::realizability_residual;
    use approx::assert_abs_diff_eq;

    pub(crate) fn entangled_example() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            4,
            4,
            &[
                0.5028, 0.0, -0.0528, 0.0, //
                0.0, 0.5028, 0.0, 0.0528, //
                -0.0528, 0.0, 0.5028, 0.0, //
                0.0, 0.0528, 0.0, 0.5028,
            ],
        )
    }

    pub(crate) fn separable_example() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            4,
            4,
            &[
                0.5704, 0.0, 0.0034, 0.0562, //
                0.0, 0.5704, 0.0, 0.0528, //
                0.0034, 0.0, 0.6203, 0.0499, //
                0.0562, 0.0528, 0.0499, 0.6203,
            ],
        )
    }

    #[test]
    fn vacuum_pair_is_exactly_on_the_boundary() {
        // diag(1/2, 1/2) per mode sits on both LMI boundaries.
        let p = 0.5 * DMatrix::<f64>::identity(4, 4);
        assert_abs_diff_eq!(separability_lmi(&p).unwrap(), 0.0, epsilon = 1e-12);
        let report = log_negativity(&p).unwrap();
        assert_abs_diff_eq!(report.nu, 0.5, epsilon = 1e-12);
        assert_eq!(report.log_negativity, 0.0);
        assert_eq!(report.verdict, Verdict::Separable);
    }

    #[test]
    fn identity_covariance_report() {
        let p = DMatrix::<f64>::identity(4, 4);
        let report = log_negativity(&p).unwrap();
        assert_abs_diff_eq!(report.delta_tilde, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(report.nu, 1.0, epsilon = 1e-15);
        assert_eq!(report.log_negativity, 0.0);
        assert_eq!(report.verdict, Verdict::Separable);
        assert_abs_diff_eq!(separability_lmi(&p).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn entangled_example_report() {
        // Independent arithmetic oracle: the example covariance has
        // delta = 2 (a^2 + c^2) and det P = (a^2 - c^2)^2 with a = 0.5028,
        // c = 0.0528; nu follows from the closed-form radical.
        let (a, c) = (0.5028_f64, 0.0528_f64);
        let delta = 2.0 * (a * a + c * c);
        let det_p = (a * a - c * c) * (a * a - c * c);
        let nu_oracle = (0.5 * (delta - (delta * delta - 4.0 * det_p).sqrt())).sqrt();
        assert_abs_diff_eq!(delta, 0.51119136, epsilon = 1e-12);

        let report = log_negativity(&entangled_example()).unwrap();
        assert_abs_diff_eq!(report.delta_tilde, delta, epsilon = 1e-12);
        assert_abs_diff_eq!(report.nu, nu_oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(report.nu, 0.45, epsilon = 1e-3);
        assert_abs_diff_eq!(report.log_negativity, 0.1054, epsilon = 1e-3);
        assert_eq!(report.verdict, Verdict::Entangled);
        // Closed form for this covariance family: margin = a - (1 + 2c)/2.
        assert_abs_diff_eq!(
            separability_lmi(&entangled_example()).unwrap(),
            a - 0.5 - c,
            epsilon = 1e-12
        );
        // With the full symplectic form the closed form is a - 1 - c.
        assert_abs_diff_eq!(
            min_eig_hermitian(&entangled_example(), &partial_transpose_theta()).unwrap(),
            a - 1.0 - c,
            epsilon = 1e-12
        );
    }

    #[test]
    fn separable_example_report() {
        let margin = separability_lmi(&separable_example()).unwrap();
        assert!(margin >= -1e-9, "margin {margin}");
        let report = log_negativity(&separable_example()).unwrap();
        assert_eq!(report.log_negativity, 0.0);
        assert_eq!(report.verdict, Verdict::Separable);
    }

    #[test]
    fn invalid_covariance_is_rejected() {
        let p = 0.2 * DMatrix::<f64>::identity(4, 4);
        assert!(matches!(
            separability_lmi(&p),
            Err(Error::InvalidCovariance { .. })
        ));
        assert!(matches!(
            log_negativity(&p),
            Err(Error::InvalidCovariance { .. })
        ));
    }

    #[test]
    fn isotropic_noise_never_increases_log_negativity() {
        let base = log_negativity(&entangled_example()).unwrap().log_negativity;
        let mut previous = base;
        for &eps in &[1e-6, 1e-5, 1e-4, 1e-3] {
            let noisy = entangled_example() + eps * DMatrix::identity(4, 4);
            let e_n = log_negativity(&noisy).unwrap().log_negativity;
            assert!(e_n <= base + 1e-9, "eps {eps}: {e_n} > {base}");
            assert!(e_n <= previous + 1e-9);
            previous = e_n;
        }
    }

    #[test]
    fn log_negativity_is_invariant_under_local_rotations() {
        let base = log_negativity(&entangled_example()).unwrap();
        for (t1, t2) in [(0.3, -1.2), (1.0, 0.5), (-2.4, 2.0)] {
            let o1 = matrix_exponential(&(t1 * block_j(1))).unwrap();
            let o2 = matrix_exponential(&(t2 * block_j(1))).unwrap();
            let mut local = DMatrix::zeros(4, 4);
            local.view_mut((0, 0), (2, 2)).copy_from(&o1);
            local.view_mut((2, 2), (2, 2)).copy_from(&o2);
            let rotated = &local * entangled_example() * local.transpose();
            let rotated = 0.5 * (&rotated + rotated.transpose());
            let report = log_negativity(&rotated).unwrap();
            assert_abs_diff_eq!(report.log_negativity, base.log_negativity, epsilon = 1e-9);
        }
    }

    #[test]
    fn sudden_death_refines_threshold_crossing() {
        let times = [0.0, 1.0, 2.0, 3.0];
        let e_n = [0.2, 0.1, 0.0, 0.0];
        let t = sudden_death_from_series(&times, &e_n).unwrap();
        assert_abs_diff_eq!(t, 1.0 + (0.1 - VERDICT_TOL) / 0.1, epsilon = 1e-6);
        // Already dead at the start.
        assert_eq!(sudden_death_from_series(&times, &[0.0; 4]), Some(0.0));
        // Never dies.
        assert_eq!(sudden_death_from_series(&times, &[0.2; 4]), None);
        // A temporary dip does not count.
        let dip = sudden_death_from_series(&times, &[0.2, 0.0, 0.1, 0.0]).unwrap();
        assert_abs_diff_eq!(dip, 3.0, epsilon = 1e-6);
    }

    #[test]
    fn random_systems_are_deterministic_and_realizable() {
        let a = random_realizable_system(7, 1);
        let b = random_realizable_system(7, 1);
        assert_eq!(a, b);
        for seed in 0..100 {
            let spec = random_realizable_system(seed, 1 + (seed as usize % 2));
            let sys = to_quadrature(&spec, &vacuum_field(spec.fields()).unwrap()).unwrap();
            assert!(realizability_residual(&sys) <= 1e-10, "seed {seed}");
        }
    }

    #[test]
    fn forced_zero_coupling_leaves_pure_hamiltonian_drift() {
        let spec = random_realizable_system(3, 1);
        let closed = OscillatorSpec::new(
            spec.hamiltonian().clone(),
            DMatrix::zeros(1, 2),
            DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)),
        )
        .unwrap();
        let sys = to_quadrature(&closed, &vacuum_field(1).unwrap()).unwrap();
        assert_eq!(sys.a(), &(2.0 * block_j(1) * spec.hamiltonian()));
        assert_eq!(sys.b(), &DMatrix::zeros(2, 2));
    }

    #[test]
    fn random_separable_covariances_pass_both_criteria() {
        for seed in 0..50 {
            let p = random_separable_covariance(seed).unwrap();
            assert!(separability_lmi(&p).unwrap() >= 0.0, "seed {seed}");
            let report = log_negativity(&p).unwrap();
            assert_eq!(report.log_negativity, 0.0, "seed {seed}");
        }
    }

    #[test]
    fn random_quantum_covariances_cover_both_verdicts() {
        let mut separable = 0;
        let mut entangled = 0;
        for seed in 0..400 {
            let p = random_quantum_covariance(seed).unwrap();
            match log_negativity(&p).unwrap().verdict {
                Verdict::Separable => separable += 1,
                Verdict::Entangled => entangled += 1,
            }
        }
        assert!(separable >= 50, "only {separable} separable draws");
        assert!(entangled >= 50, "only {entangled} entangled draws");
    }

    #[test]
    fn criteria_agree_on_random_covariances() {
        for seed in 0..1000 {
            let p = random_quantum_covariance(seed).unwrap();
            let margin = separability_lmi(&p).unwrap();
            let report = log_negativity(&p).unwrap();
            let lmi_entangled = margin < -VERDICT_TOL;
            let en_entangled = report.log_negativity > VERDICT_TOL;
            assert_eq!(lmi_entangled, en_entangled, "seed {seed}: {report:?}");
        }
    }

    #[test]
    fn no_go_holds_on_a_small_ensemble() {
        let report = verify_no_go(7, 5).unwrap();
        assert!(report.passed(), "failures: {:?}", report.failures);
        assert!(report.worst_steady_margin >= -NO_GO_TOL);
        assert!(report.worst_transient_log_negativity <= NO_GO_TOL);
        assert_eq!(report.steady_state_checks, 5);
    }

    #[test]
    fn verify_no_go_rejects_zero_trials() {
        assert!(verify_no_go(1, 0).is_err());
    }

    #[test]
    fn zeroed_controller_steady_state_is_separable_from_entangled_start() {
        // Two independent decaying cavities: an entangled start relaxes to an
        // uncorrelated steady state.
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
        let g = to_quadrature(&spec, &vacuum_field(1).unwrap()).unwrap();
        let ctrl = ControllerSpec::new(
            DMatrix::from_element(1, 1, -1.0),
            DMatrix::zeros(1, 0),
            [DMatrix::zeros(0, 1), DMatrix::zeros(0, 1)],
            [DMatrix::zeros(0, 1), DMatrix::zeros(0, 1)],
        )
        .unwrap();
        let wiring = WiringSpec::new([PlantWiring::unwired(), PlantWiring::unwired()]).unwrap();
        let cl = compose_closed_loop(&g, &g, &ctrl, &wiring).unwrap();
        let p_ss = solve_steady_state(cl.a_tilde(), &cl.noise_intensity()).unwrap();
        let p11 = p_ss.view((0, 0), (4, 4)).into_owned();
        assert!((&p11 - DMatrix::identity(4, 4)).norm() <= 1e-9);
        assert!(separability_lmi(&p11).unwrap() >= -NO_GO_TOL);
        // Vacuum pair of cavities saturates the uncertainty LMI.
        let heis = crate::model::heisenberg_check(&p11, &block_j(2)).unwrap();
        assert!(heis.satisfied);
        assert_abs_diff_eq!(heis.min_eig, 0.0, epsilon = 1e-9);

        // And the transient from the entangled example dies out.
        let p0 = embed_initial(&entangled_example(), 1);
        let traj = propagate(
            cl.a_tilde(),
            &cl.noise_intensity(),
            &p0,
            &uniform_grid(2000.0, 400),
        )
        .unwrap()
        .with_partition(cl.partition())
        .unwrap();
        let death = sudden_death_time(&traj).unwrap();
        assert!(death.is_some());
    }
}
