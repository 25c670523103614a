//! Composition of two quantum plants and a classical linear controller into a
//! mixed quantum-classical closed loop.
//!
//! The plants are never connected to each other directly: the controller reads
//! homodyne measurements of selected output quadratures and acts back either
//! by displacing selected input fields or by modulating a plant's Hamiltonian
//! with a linear term. The composed drift and noise matrices therefore carry
//! exact zero blocks between the two plants, and both commutation identities
//! (the plain one and its partial-transpose sign-flipped variant) hold by
//! construction.

use nalgebra::DMatrix;

use crate::covariance::StatePartition;
use crate::model::{block_j, commutation_residual, realizability_residual, QuadratureSystem};
use crate::{Error, Result};

/// Residual tolerance for the closed-loop commutation identities.
pub const CLOSED_LOOP_TOL: f64 = 1e-10;

/// Which quadrature of an output field a homodyne detector measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    /// The real (position-like) quadrature, row `2 * field` of the output.
    Amplitude,
    /// The imaginary (momentum-like) quadrature, row `2 * field + 1`.
    Phase,
}

impl Quadrature {
    fn row(self, field: usize) -> usize {
        match self {
            Quadrature::Amplitude => 2 * field,
            Quadrature::Phase => 2 * field + 1,
        }
    }
}

/// One homodyne measurement: a quadrature of one output field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Measurement {
    pub field: usize,
    pub quadrature: Quadrature,
}

/// Wiring of one plant: which output quadratures are measured, which input
/// fields receive classical displacements, and an optional Hamiltonian
/// modulation matrix `M` (the controller then adds the linear term
/// `u^T M x_k` to the plant Hamiltonian).
#[derive(Debug, Clone, PartialEq)]
pub struct PlantWiring {
    pub measured: Vec<Measurement>,
    pub modulated: Vec<usize>,
    pub ham_mod: Option<DMatrix<f64>>,
}

impl PlantWiring {
    /// A plant left untouched by the controller.
    pub fn unwired() -> Self {
        Self {
            measured: Vec::new(),
            modulated: Vec::new(),
            ham_mod: None,
        }
    }
}

/// Wiring for both plants.
#[derive(Debug, Clone, PartialEq)]
pub struct WiringSpec {
    pub plants: [PlantWiring; 2],
}

impl WiringSpec {
    pub fn new(plants: [PlantWiring; 2]) -> Result<Self> {
        let spec = Self { plants };
        spec.validate_internal()?;
        Ok(spec)
    }

    fn validate_internal(&self) -> Result<()> {
        for (idx, plant) in self.plants.iter().enumerate() {
            let plant_no = idx + 1;
            let mut seen = Vec::new();
            for meas in &plant.measured {
                if seen.contains(&meas.field) {
                    return Err(Error::DuplicateMeasurement {
                        plant: plant_no,
                        field: meas.field,
                    });
                }
                seen.push(meas.field);
            }
            let mut mod_seen = Vec::new();
            for &field in &plant.modulated {
                if mod_seen.contains(&field) {
                    return Err(Error::WiringOverlap {
                        plant: plant_no,
                        field,
                    });
                }
                mod_seen.push(field);
                if seen.contains(&field) {
                    return Err(Error::WiringOverlap {
                        plant: plant_no,
                        field,
                    });
                }
            }
            if let Some(m) = &plant.ham_mod {
                if m.nrows() != 2 || m.ncols() != 2 {
                    return Err(Error::Dimension(format!(
                        "plant {plant_no}: Hamiltonian modulation matrix must be 2x2, got {}x{}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
            }
        }
        Ok(())
    }

    fn validate_against(&self, plants: [&QuadratureSystem; 2]) -> Result<()> {
        self.validate_internal()?;
        for (idx, (wiring, sys)) in self.plants.iter().zip(plants).enumerate() {
            let plant_no = idx + 1;
            let fields = sys.fields();
            for meas in &wiring.measured {
                if meas.field >= fields {
                    return Err(Error::FieldOutOfRange {
                        plant: plant_no,
                        field: meas.field,
                        fields,
                    });
                }
            }
            for &field in &wiring.modulated {
                if field >= fields {
                    return Err(Error::FieldOutOfRange {
                        plant: plant_no,
                        field,
                        fields,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Classical linear controller `dz = A_c z dt + B_c dm` with output maps for
/// Hamiltonian modulation (`u_{1,k} = C_ham_k z`) and field displacement
/// (`u_{2,k} = C_mod_k z`).
///
/// `B_c`'s columns follow the stacked measurement record: plant-1 measurements
/// first, then plant-2's, each in wiring order. `C_mod_k` has one row pair
/// (amplitude, phase) per modulated field of plant `k`, in wiring order.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerSpec {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c_ham: [DMatrix<f64>; 2],
    c_mod: [DMatrix<f64>; 2],
}

impl ControllerSpec {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c_ham: [DMatrix<f64>; 2],
        c_mod: [DMatrix<f64>; 2],
    ) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Dimension(format!(
                "controller state matrix must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let nc = a.nrows();
        if b.nrows() != nc {
            return Err(Error::Dimension(format!(
                "controller input matrix must have {nc} rows, got {}",
                b.nrows()
            )));
        }
        for (idx, c) in c_ham.iter().enumerate() {
            if c.nrows() != 0 && (c.nrows() != 2 || c.ncols() != nc) {
                return Err(Error::Dimension(format!(
                    "Hamiltonian output map for plant {} must be 2x{nc}, got {}x{}",
                    idx + 1,
                    c.nrows(),
                    c.ncols()
                )));
            }
        }
        for (idx, c) in c_mod.iter().enumerate() {
            if c.nrows() % 2 != 0 || (c.nrows() != 0 && c.ncols() != nc) {
                return Err(Error::Dimension(format!(
                    "modulation output map for plant {} must have row pairs and {nc} columns, got {}x{}",
                    idx + 1,
                    c.nrows(),
                    c.ncols()
                )));
            }
        }
        Ok(Self { a, b, c_ham, c_mod })
    }

    /// A controller of dimension `nc` with every matrix zero (no wiring).
    pub fn zeroed(nc: usize) -> Self {
        Self {
            a: DMatrix::zeros(nc, nc),
            b: DMatrix::zeros(nc, 0),
            c_ham: [DMatrix::zeros(0, nc), DMatrix::zeros(0, nc)],
            c_mod: [DMatrix::zeros(0, nc), DMatrix::zeros(0, nc)],
        }
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c_ham(&self, plant: usize) -> &DMatrix<f64> {
        &self.c_ham[plant]
    }

    pub fn c_mod(&self, plant: usize) -> &DMatrix<f64> {
        &self.c_mod[plant]
    }
}

/// The composed mixed quantum-classical closed loop.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoop {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    partition: StatePartition,
    noise_widths: (usize, usize),
    s_w: DMatrix<f64>,
    t_w_imag: DMatrix<f64>,
}

impl ClosedLoop {
    pub fn a_tilde(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b_tilde(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn partition(&self) -> StatePartition {
        self.partition
    }

    /// Widths `(2 m_1, 2 m_2)` of the two plants' noise column blocks.
    pub fn noise_widths(&self) -> (usize, usize) {
        self.noise_widths
    }

    pub fn s_w(&self) -> &DMatrix<f64> {
        &self.s_w
    }

    /// Imaginary part of the stacked `T_w = i diag(J, ..., J)`.
    pub fn t_w_imag(&self) -> &DMatrix<f64> {
        &self.t_w_imag
    }

    /// Degenerate canonical commutation matrix `diag(J, J, 0)`.
    pub fn theta(&self) -> DMatrix<f64> {
        let d = self.partition.total();
        let mut theta = DMatrix::zeros(d, d);
        theta.view_mut((0, 0), (4, 4)).copy_from(&block_j(2));
        theta
    }

    /// Partial-transpose frame `diag(J, -J, 0)`.
    pub fn theta_hat(&self) -> DMatrix<f64> {
        let d = self.partition.total();
        let mut theta = DMatrix::zeros(d, d);
        theta.view_mut((0, 0), (2, 2)).copy_from(&block_j(1));
        theta.view_mut((2, 2), (2, 2)).copy_from(&(-block_j(1)));
        theta
    }

    /// Imaginary part of the sign-flipped field commutators `diag(T_1, -T_2)`.
    pub fn t_w_imag_hat(&self) -> DMatrix<f64> {
        let (w1, w2) = self.noise_widths;
        let mut t = self.t_w_imag.clone();
        t.view_mut((w1, w1), (w2, w2))
            .copy_from(&(-block_j(w2 / 2)));
        t
    }

    /// Noise intensity `B S_w B^T` of the covariance dynamics.
    pub fn noise_intensity(&self) -> DMatrix<f64> {
        let q = &self.b * &self.s_w * self.b.transpose();
        0.5 * (&q + q.transpose())
    }

    /// Residual of the commutation identity in the plain frame.
    pub fn realizability_residual(&self) -> f64 {
        commutation_residual(&self.a, &self.b, &self.theta(), &self.t_w_imag)
            .expect("closed-loop dimensions are consistent")
    }

    /// Residual of the commutation identity in the partial-transpose frame.
    pub fn partial_transpose_residual(&self) -> f64 {
        commutation_residual(&self.a, &self.b, &self.theta_hat(), &self.t_w_imag_hat())
            .expect("closed-loop dimensions are consistent")
    }
}

fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), (b.nrows(), b.ncols()))
        .copy_from(b);
    out
}

/// Compose two single-oscillator plants with a classical controller.
///
/// Drift blocks: the plant diagonals are `A_1`, `A_2`; the controller feeds
/// plant `k` through `B_k E_k C_mod_k + 2 J M_k^T C_ham_k` (field displacement
/// plus Hamiltonian modulation) and is fed by `B_c S_k C_k` where `S_k`
/// selects the measured output quadratures. Measurement feedthrough noise adds
/// `B_c S_k D_k` to the controller's noise rows. Plant-plant blocks stay zero.
pub fn compose_closed_loop(
    g1: &QuadratureSystem,
    g2: &QuadratureSystem,
    ctrl: &ControllerSpec,
    wiring: &WiringSpec,
) -> Result<ClosedLoop> {
    for (idx, sys) in [g1, g2].into_iter().enumerate() {
        if sys.oscillators() != 1 {
            return Err(Error::Invalid(format!(
                "plant {} must be a single oscillator, has {}",
                idx + 1,
                sys.oscillators()
            )));
        }
        let res = realizability_residual(sys);
        if res > CLOSED_LOOP_TOL {
            return Err(Error::Realizability {
                what: if idx == 0 { "plant 1" } else { "plant 2" },
                residual: res,
            });
        }
    }
    wiring.validate_against([g1, g2])?;

    let nc = ctrl.state_dim();
    let n_meas: [usize; 2] = [
        wiring.plants[0].measured.len(),
        wiring.plants[1].measured.len(),
    ];
    if ctrl.b().ncols() != n_meas[0] + n_meas[1] {
        return Err(Error::Dimension(format!(
            "controller B_c has {} columns but the wiring measures {} quadratures",
            ctrl.b().ncols(),
            n_meas[0] + n_meas[1]
        )));
    }

    let d = 4 + nc;
    let widths = (2 * g1.fields(), 2 * g2.fields());
    let mut a = DMatrix::<f64>::zeros(d, d);
    let mut b = DMatrix::<f64>::zeros(d, widths.0 + widths.1);

    a.view_mut((0, 0), (2, 2)).copy_from(g1.a());
    a.view_mut((2, 2), (2, 2)).copy_from(g2.a());
    a.view_mut((4, 4), (nc, nc)).copy_from(ctrl.a());
    b.view_mut((0, 0), (2, widths.0)).copy_from(g1.b());
    b.view_mut((2, widths.0), (2, widths.1)).copy_from(g2.b());

    for (idx, sys) in [g1, g2].into_iter().enumerate() {
        let plant_wiring = &wiring.plants[idx];
        let row = 2 * idx;
        let noise_col = if idx == 0 { 0 } else { widths.0 };
        let width = 2 * sys.fields();

        // Controller-to-plant drift: field displacement plus Hamiltonian term.
        let c_mod = ctrl.c_mod(idx);
        if c_mod.nrows() != 2 * plant_wiring.modulated.len() {
            return Err(Error::Dimension(format!(
                "plant {}: modulation map has {} rows but the wiring displaces {} fields",
                idx + 1,
                c_mod.nrows(),
                plant_wiring.modulated.len()
            )));
        }
        let mut a_to_plant = DMatrix::<f64>::zeros(2, nc);
        if !plant_wiring.modulated.is_empty() {
            let mut embed = DMatrix::<f64>::zeros(width, 2 * plant_wiring.modulated.len());
            for (slot, &field) in plant_wiring.modulated.iter().enumerate() {
                embed[(2 * field, 2 * slot)] = 1.0;
                embed[(2 * field + 1, 2 * slot + 1)] = 1.0;
            }
            a_to_plant += sys.b() * embed * c_mod;
        }
        if let Some(m) = &plant_wiring.ham_mod {
            let c_ham = ctrl.c_ham(idx);
            if c_ham.nrows() != 2 {
                return Err(Error::Dimension(format!(
                    "plant {}: Hamiltonian modulation wired but its output map is {}x{}",
                    idx + 1,
                    c_ham.nrows(),
                    c_ham.ncols()
                )));
            }
            a_to_plant += 2.0 * block_j(1) * m.transpose() * c_ham;
        }
        a.view_mut((row, 4), (2, nc)).copy_from(&a_to_plant);

        // Plant-to-controller drift and measurement feedthrough noise.
        if n_meas[idx] > 0 {
            let mut selector = DMatrix::<f64>::zeros(n_meas[idx], width);
            for (slot, meas) in plant_wiring.measured.iter().enumerate() {
                selector[(slot, meas.quadrature.row(meas.field))] = 1.0;
            }
            let col_offset = if idx == 0 { 0 } else { n_meas[0] };
            let b_c = ctrl.b().columns(col_offset, n_meas[idx]).into_owned();
            a.view_mut((4, row), (nc, 2))
                .copy_from(&(&b_c * &selector * sys.c()));
            b.view_mut((4, noise_col), (nc, width))
                .copy_from(&(&b_c * &selector * sys.d()));
        }
    }

    let closed = ClosedLoop {
        a,
        b,
        partition: StatePartition {
            plant1: 2,
            plant2: 2,
            classical: nc,
        },
        noise_widths: widths,
        s_w: block_diag(g1.field().s_w(), g2.field().s_w()),
        t_w_imag: block_diag(&g1.field().t_w_imag(), &g2.field().t_w_imag()),
    };

    let res = closed.realizability_residual();
    if res > CLOSED_LOOP_TOL {
        return Err(Error::Realizability {
            what: "closed loop",
            residual: res,
        });
    }
    Ok(closed)
}

/// Maximum absolute entry found in one forbidden (plant-plant) block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCheck {
    pub block: &'static str,
    pub max_abs: f64,
}

/// Outcome of the block-zero structure validation.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    pub checks: Vec<BlockCheck>,
    pub pass: bool,
}

impl StructureReport {
    pub fn worst(&self) -> Option<&BlockCheck> {
        self.checks
            .iter()
            .max_by(|a, b| a.max_abs.total_cmp(&b.max_abs))
    }
}

/// Check the forbidden cross-plant blocks of raw closed-loop matrices.
///
/// Passes only if every forbidden entry is exactly zero: the composition
/// writes these blocks as structural zeros, so any nonzero entry means the
/// matrices did not come from a controller-mediated interconnection.
pub fn check_forbidden_blocks(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    noise_widths: (usize, usize),
) -> StructureReport {
    let max_abs =
        |view: nalgebra::DMatrixView<'_, f64>| view.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let checks = vec![
        BlockCheck {
            block: "drift plant1<-plant2",
            max_abs: max_abs(a.view((0, 2), (2, 2))),
        },
        BlockCheck {
            block: "drift plant2<-plant1",
            max_abs: max_abs(a.view((2, 0), (2, 2))),
        },
        BlockCheck {
            block: "noise plant1<-w2",
            max_abs: max_abs(b.view((0, noise_widths.0), (2, noise_widths.1))),
        },
        BlockCheck {
            block: "noise plant2<-w1",
            max_abs: max_abs(b.view((2, 0), (2, noise_widths.0))),
        },
    ];
    let pass = checks.iter().all(|c| c.max_abs == 0.0);
    StructureReport { checks, pass }
}

/// Block-zero structure validation for a composed closed loop.
pub fn validate_block_structure(cl: &ClosedLoop) -> StructureReport {
    check_forbidden_blocks(cl.a_tilde(), cl.b_tilde(), cl.noise_widths())
}

/// The partial-transpose frame `(Theta_hat, T_w_hat)` of a closed loop.
///
/// Returns `Theta_hat = diag(J, -J, 0)` and the imaginary part of
/// `T_w_hat = diag(T_1, -T_2)` after verifying that the sign-flipped
/// commutation identity holds; a violation means the composition is not
/// physically realizable and is reported as an error carrying the residual.
pub fn partial_transpose_frame(cl: &ClosedLoop) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let residual = cl.partial_transpose_residual();
    if residual > CLOSED_LOOP_TOL {
        return Err(Error::Realizability {
            what: "partial-transpose commutation identity",
            residual,
        });
    }
    Ok((cl.theta_hat(), cl.t_w_imag_hat()))
}
