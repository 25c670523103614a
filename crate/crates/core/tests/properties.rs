//! Cross-module invariants: every physically parametrized system converts to
//! a realizable quadruple, every composition keeps the forbidden blocks at
//! zero and satisfies both commutation identities, and the steady-state
//! solver agrees with long-horizon propagation.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use qlin_core::covariance::{
    is_hurwitz, min_eig_hermitian, propagate, solve_steady_state, uniform_grid,
};
use qlin_core::entanglement::random_realizable_system;
use qlin_core::interconnect::{
    compose_closed_loop, validate_block_structure, ControllerSpec, Measurement, PlantWiring,
    Quadrature, WiringSpec,
};
use qlin_core::model::{
    block_j, realizability_residual, to_quadrature, vacuum_field, OscillatorSpec, QuadratureSystem,
};

fn unitary_from_entries(m: usize, entries: &[(f64, f64)]) -> DMatrix<Complex64> {
    let raw = DMatrix::from_fn(m, m, |i, j| {
        let (re, im) = entries[i * m + j];
        Complex64::new(re, im)
    }) + DMatrix::from_diagonal_element(m, m, Complex64::new(2.0, 0.0));
    let qr = raw.qr();
    qr.q()
}

fn spec_from_entries(
    m: usize,
    r_entries: [f64; 3],
    k_entries: &[(f64, f64)],
    s_entries: &[(f64, f64)],
) -> OscillatorSpec {
    let r = DMatrix::from_row_slice(
        2,
        2,
        &[r_entries[0], r_entries[2], r_entries[2], r_entries[1]],
    );
    let k = DMatrix::from_fn(m, 2, |i, j| {
        let (re, im) = k_entries[i * 2 + j];
        let z = Complex64::new(re, im);
        // keep entries inside the unit disk
        z / z.norm().max(1.0)
    });
    let s = unitary_from_entries(m, s_entries);
    OscillatorSpec::new(r, k, s).expect("generated spec is symmetric and unitary")
}

fn plant_strategy() -> impl Strategy<Value = OscillatorSpec> {
    (
        1usize..=2,
        prop::array::uniform3(-1.0f64..1.0),
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4),
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4),
    )
        .prop_map(|(m, r, k, s)| spec_from_entries(m, r, &k, &s))
}

fn quadrature(spec: &OscillatorSpec) -> QuadratureSystem {
    to_quadrature(spec, &vacuum_field(spec.fields()).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn conversion_preserves_commutation_relations(spec in plant_strategy()) {
        let sys = quadrature(&spec);
        prop_assert!(realizability_residual(&sys) <= 1e-10);
    }

    #[test]
    fn feedthrough_is_symplectic_orthogonal(spec in plant_strategy()) {
        let sys = quadrature(&spec);
        let m = sys.fields();
        let eye = DMatrix::<f64>::identity(2 * m, 2 * m);
        prop_assert!((sys.d().transpose() * sys.d() - eye).norm() <= 1e-10);
        prop_assert!((sys.d() * block_j(m) - block_j(m) * sys.d()).norm() <= 1e-10);
    }

    #[test]
    fn compositions_have_zero_cross_blocks_and_valid_identities(
        spec1 in plant_strategy(),
        spec2 in plant_strategy(),
        nc in 1usize..=2,
        entries in prop::collection::vec(-1.0f64..1.0, 64),
        measure_phase in any::<bool>(),
    ) {
        let g1 = quadrature(&spec1);
        let g2 = quadrature(&spec2);
        // Plant 1: displace field 0 and modulate the Hamiltonian.
        // Plant 2: measure one quadrature of field 0 and modulate too.
        let mut next = entries.into_iter();
        let mut take = |rows: usize, cols: usize| {
            DMatrix::from_fn(rows, cols, |_, _| next.next().unwrap_or(0.37))
        };
        let wiring = WiringSpec::new([
            PlantWiring {
                measured: vec![],
                modulated: vec![0],
                ham_mod: Some(take(2, 2)),
            },
            PlantWiring {
                measured: vec![Measurement {
                    field: 0,
                    quadrature: if measure_phase {
                        Quadrature::Phase
                    } else {
                        Quadrature::Amplitude
                    },
                }],
                modulated: vec![],
                ham_mod: Some(take(2, 2)),
            },
        ]).unwrap();
        let ctrl = ControllerSpec::new(
            take(nc, nc),
            take(nc, 1),
            [take(2, nc), take(2, nc)],
            [take(2, nc), take(0, nc)],
        ).unwrap();
        let cl = compose_closed_loop(&g1, &g2, &ctrl, &wiring).unwrap();

        let report = validate_block_structure(&cl);
        prop_assert!(report.pass, "forbidden block nonzero: {:?}", report.worst());
        prop_assert!(cl.realizability_residual() <= 1e-10);
        prop_assert!(cl.partial_transpose_residual() <= 1e-10);
        // The sign-flipped Ito matrix stays positive semidefinite (the
        // flipped block is the entrywise conjugate of a PSD matrix).
        let f_hat_min = min_eig_hermitian(cl.s_w(), &cl.t_w_imag_hat()).unwrap();
        prop_assert!(f_hat_min >= -1e-10, "F_hat min eigenvalue {f_hat_min}");
    }
}

/// Steady state of a random Hurwitz plant obeys the uncertainty LMI, and the
/// propagated covariance converges to it.
#[test]
fn steady_states_respect_uncertainty_and_match_propagation() {
    let mut checked = 0;
    let mut seed = 0u64;
    while checked < 20 {
        seed += 1;
        let spec = random_realizable_system(seed, 1 + (seed as usize % 2));
        let sys = to_quadrature(&spec, &vacuum_field(spec.fields()).unwrap()).unwrap();
        let (hurwitz, abscissa) = is_hurwitz(sys.a());
        if !hurwitz {
            continue;
        }
        checked += 1;
        let q = sys.b() * sys.field().s_w() * sys.b().transpose();
        let q = 0.5 * (&q + q.transpose());
        let p_ss = solve_steady_state(sys.a(), &q).unwrap();

        let margin = min_eig_hermitian(&p_ss, &sys.theta()).unwrap();
        assert!(margin >= -1e-8, "seed {seed}: uncertainty margin {margin}");

        let p0 = 3.0 * DMatrix::<f64>::identity(2, 2);
        let traj = propagate(sys.a(), &q, &p0, &uniform_grid(20.0 / abscissa.abs(), 400)).unwrap();
        let drift = (traj.covariances().last().unwrap() - &p_ss).norm();
        assert!(drift <= 1e-6, "seed {seed}: final distance {drift:.3e}");
    }
}
