//! Covariance dynamics: steady-state Lyapunov solves, exact-discretization
//! propagation of the covariance differential equation, and the dense-matrix
//! kernels shared by the LMI checks.
//!
//! The differential equation `P' = A P + P A^T + Q` is linear, so instead of a
//! Runge-Kutta scheme each step uses the exact discretization
//! `P(t+h) = Phi P(t) Phi^T + G_h` with `Phi = exp(A h)` and
//! `G_h = int_0^h exp(A s) Q exp(A^T s) ds`, both read off a single
//! exponential of the augmented block matrix `[[-A, Q], [0, A^T]]`.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result};

/// Relative residual bound for the steady-state Lyapunov solve.
pub const LYAPUNOV_RESIDUAL_TOL: f64 = 1e-10;

fn require_square(m: &DMatrix<f64>, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (m + m.transpose())
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose())
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Matrix 1-norm (maximum absolute column sum).
fn norm_1(m: &DMatrix<f64>) -> f64 {
    let mut max = 0.0_f64;
    for j in 0..m.ncols() {
        let s: f64 = m.column(j).iter().map(|v| v.abs()).sum();
        max = max.max(s);
    }
    max
}

// Pade(13) numerator coefficients for the matrix exponential, Higham's
// scaling-and-squaring formulation.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// Scaling threshold theta_13 for the Pade(13) approximant.
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling-and-squaring with a diagonal Pade(13)
/// approximant.
pub fn matrix_exponential(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = require_square(m, "matrix exponential input")?;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "matrix exponential input",
        });
    }
    if d == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    if d == 1 {
        let e = m[(0, 0)].exp();
        if !e.is_finite() {
            return Err(Error::NonFinite {
                what: "matrix exponential",
            });
        }
        return Ok(DMatrix::from_element(1, 1, e));
    }

    let norm = norm_1(m);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m / 2.0_f64.powi(squarings as i32);

    let eye = DMatrix::<f64>::identity(d, d);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;

    let u_inner = &a6 * PADE13[13] + &a4 * PADE13[11] + &a2 * PADE13[9];
    let u = &scaled
        * (&a6 * &u_inner + &a6 * PADE13[7] + &a4 * PADE13[5] + &a2 * PADE13[3] + &eye * PADE13[1]);
    let v_inner = &a6 * PADE13[12] + &a4 * PADE13[10] + &a2 * PADE13[8];
    let v = &a6 * &v_inner + &a6 * PADE13[6] + &a4 * PADE13[4] + &a2 * PADE13[2] + &eye * PADE13[0];

    let mut result = (&v - &u).lu().solve(&(&v + &u)).ok_or(Error::Singular)?;
    for _ in 0..squarings {
        result = &result * &result;
    }
    if result.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "matrix exponential",
        });
    }
    Ok(result)
}

fn abscissa_of(m: DMatrix<f64>) -> Option<f64> {
    nalgebra::linalg::Schur::try_new(m, 1e-13, 100_000).map(|schur| {
        schur
            .complex_eigenvalues()
            .iter()
            .fold(f64::NEG_INFINITY, |acc, l| acc.max(l.re))
    })
}

/// Whether every eigenvalue of `a` has a strictly negative real part, plus the
/// spectral abscissa (largest real part).
///
/// The QR iteration can stall on exactly degenerate matrices (an all-zero
/// matrix is the canonical case), so a failed decomposition is retried after
/// a uniform diagonal shift, which moves the whole spectrum by a known amount
/// and is undone afterwards.
pub fn is_hurwitz(a: &DMatrix<f64>) -> (bool, f64) {
    assert_eq!(a.nrows(), a.ncols(), "is_hurwitz needs a square matrix");
    let d = a.nrows();
    if d == 0 {
        return (true, f64::NEG_INFINITY);
    }
    let abscissa = abscissa_of(a.clone()).unwrap_or_else(|| {
        let shift = 1.0 + norm_1(a);
        let eye = DMatrix::<f64>::identity(d, d);
        abscissa_of(a + shift * &eye)
            .map(|x| x - shift)
            .unwrap_or_else(|| {
                // Last resort: an orthogonal similarity leaves the spectrum
                // unchanged up to roundoff but breaks the degeneracy.
                let skew = DMatrix::from_fn(d, d, |i, j| 0.3 / (1.0 + (i + 2 * j) as f64));
                let skew = &skew - skew.transpose();
                let q = matrix_exponential(&skew)
                    .expect("exponential of a fixed skew matrix is finite");
                abscissa_of(&q * (a + shift * &eye) * q.transpose())
                    .map(|x| x - shift)
                    .expect("eigenvalue iteration failed on every regularization")
            })
    });
    (abscissa < 0.0, abscissa)
}

/// Unique symmetric solution of `A P + P A^T + Q = 0` for Hurwitz `A`.
///
/// Solves the Kronecker-vectorized system `(I (x) A + A (x) I) vec(P) = -vec(Q)`
/// by dense LU; at the problem sizes of this crate the cubic-in-`d^2` cost is
/// irrelevant.
pub fn solve_steady_state(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = require_square(a, "drift matrix")?;
    if q.nrows() != d || q.ncols() != d {
        return Err(Error::Dimension(format!(
            "noise intensity must be {d}x{d}, got {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    let res = asymmetry(q);
    if res > 1e-12 {
        return Err(Error::NotSymmetric {
            what: "noise intensity Q",
            residual: res,
        });
    }
    let (hurwitz, abscissa) = is_hurwitz(a);
    if !hurwitz {
        return Err(Error::NotHurwitz { abscissa });
    }

    let eye = DMatrix::<f64>::identity(d, d);
    let system = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = DMatrix::from_column_slice(d * d, 1, q.as_slice()) * -1.0;
    let solution = system.lu().solve(&rhs).ok_or(Error::Singular)?;
    let p = symmetrize(&DMatrix::from_column_slice(d, d, solution.as_slice()));

    let residual = (a * &p + &p * a.transpose() + q).norm();
    if residual > LYAPUNOV_RESIDUAL_TOL * (1.0 + q.norm()) {
        return Err(Error::Invalid(format!(
            "steady-state Lyapunov residual {residual:.3e} exceeds tolerance"
        )));
    }
    Ok(p)
}

/// Minimum eigenvalue of the Hermitian matrix `X + iY` for real symmetric `X`
/// and real antisymmetric `Y`, computed through the real symmetric embedding
/// `[[X, -Y], [Y, X]]` (which doubles multiplicities but keeps the spectrum).
pub fn min_eig_hermitian(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64> {
    let d = require_square(x, "Hermitian real part")?;
    if y.nrows() != d || y.ncols() != d {
        return Err(Error::Dimension(format!(
            "imaginary part must be {d}x{d}, got {}x{}",
            y.nrows(),
            y.ncols()
        )));
    }
    if d == 0 {
        return Err(Error::Dimension("empty matrix has no eigenvalues".into()));
    }
    let sym_res = asymmetry(x);
    if sym_res > 1e-12 {
        return Err(Error::NotSymmetric {
            what: "Hermitian real part",
            residual: sym_res,
        });
    }
    let antisym_res = (y + y.transpose())
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if antisym_res > 1e-12 {
        return Err(Error::Invalid(format!(
            "imaginary part must be antisymmetric (residual {antisym_res:.3e})"
        )));
    }

    let mut embed = DMatrix::<f64>::zeros(2 * d, 2 * d);
    embed.view_mut((0, 0), (d, d)).copy_from(x);
    embed.view_mut((0, d), (d, d)).copy_from(&(-y));
    embed.view_mut((d, 0), (d, d)).copy_from(y);
    embed.view_mut((d, d), (d, d)).copy_from(x);
    let eigen = SymmetricEigen::new(embed);
    Ok(eigen
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |acc, v| acc.min(*v)))
}

/// Uniform grid `0, h, 2h, ..., t_end` with `steps` intervals.
///
/// A zero `t_end` (or zero `steps`) collapses to the single sample `{0}`.
pub fn uniform_grid(t_end: f64, steps: usize) -> Vec<f64> {
    if t_end <= 0.0 || steps == 0 {
        return vec![0.0];
    }
    (0..=steps)
        .map(|k| t_end * (k as f64) / (steps as f64))
        .collect()
}

/// How the closed-loop state vector splits into the two plant quadrature pairs
/// and the classical controller state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StatePartition {
    pub plant1: usize,
    pub plant2: usize,
    pub classical: usize,
}

impl StatePartition {
    pub fn quantum(&self) -> usize {
        self.plant1 + self.plant2
    }

    pub fn total(&self) -> usize {
        self.plant1 + self.plant2 + self.classical
    }
}

/// A sampled covariance evolution: a strictly increasing time grid and one
/// symmetric covariance matrix per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceTrajectory {
    times: Vec<f64>,
    covariances: Vec<DMatrix<f64>>,
    partition: Option<StatePartition>,
}

impl CovarianceTrajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn covariances(&self) -> &[DMatrix<f64>] {
        &self.covariances
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn partition(&self) -> Option<StatePartition> {
        self.partition
    }

    /// Attach the quantum/classical state partition (dimension-checked).
    pub fn with_partition(mut self, partition: StatePartition) -> Result<Self> {
        let d = self.covariances[0].nrows();
        if partition.total() != d {
            return Err(Error::Dimension(format!(
                "partition covers {} states but the trajectory has {d}",
                partition.total()
            )));
        }
        self.partition = Some(partition);
        Ok(self)
    }

    /// Top-left quantum block of the covariance at sample `idx`.
    pub fn quantum_block(&self, idx: usize) -> Result<DMatrix<f64>> {
        let partition = self
            .partition
            .ok_or_else(|| Error::Invalid("trajectory has no state partition attached".into()))?;
        let q = partition.quantum();
        Ok(self.covariances[idx].view((0, 0), (q, q)).into_owned())
    }
}

/// Exact one-step discretization `(Phi, G_h)` of `P' = A P + P A^T + Q` over a
/// step `h`, via the exponential of the Van Loan block `[[-A, Q], [0, A^T]]`.
fn discretize(a: &DMatrix<f64>, q: &DMatrix<f64>, h: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let d = a.nrows();
    let mut block = DMatrix::<f64>::zeros(2 * d, 2 * d);
    block.view_mut((0, 0), (d, d)).copy_from(&(-a * h));
    block.view_mut((0, d), (d, d)).copy_from(&(q * h));
    block
        .view_mut((d, d), (d, d))
        .copy_from(&(a.transpose() * h));
    let e = matrix_exponential(&block)?;
    let f12 = e.view((0, d), (d, d)).into_owned();
    let phi = e.view((d, d), (d, d)).transpose();
    let g = symmetrize(&(&phi * f12));
    Ok((phi, g))
}

/// Propagate `P' = A P + P A^T + Q` from `P0` across the given time grid.
///
/// Each step uses the exact discretization, so the sampled values do not
/// depend on how finely the grid subdivides an interval; symmetry is
/// re-imposed after every step to suppress floating-point drift.
pub fn propagate(
    a: &DMatrix<f64>,
    q: &DMatrix<f64>,
    p0: &DMatrix<f64>,
    times: &[f64],
) -> Result<CovarianceTrajectory> {
    let d = require_square(a, "drift matrix")?;
    if q.nrows() != d || q.ncols() != d || p0.nrows() != d || p0.ncols() != d {
        return Err(Error::Dimension(format!(
            "drift is {d}x{d} but Q is {}x{} and P0 is {}x{}",
            q.nrows(),
            q.ncols(),
            p0.nrows(),
            p0.ncols()
        )));
    }
    let res = asymmetry(p0);
    if res > 1e-12 {
        return Err(Error::NotSymmetric {
            what: "initial covariance P0",
            residual: res,
        });
    }
    if times.is_empty() {
        return Err(Error::InvalidGrid("time grid is empty".into()));
    }
    if times[0] != 0.0 {
        return Err(Error::InvalidGrid(format!(
            "time grid must start at 0, got {}",
            times[0]
        )));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidGrid(
            "time grid has non-finite entries".into(),
        ));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(
            "time grid must be strictly increasing".into(),
        ));
    }
    if a.iter()
        .chain(q.iter())
        .chain(p0.iter())
        .any(|v| !v.is_finite())
    {
        return Err(Error::NonFinite {
            what: "propagation input",
        });
    }

    let mut covariances = Vec::with_capacity(times.len());
    let mut p = symmetrize(p0);
    covariances.push(p.clone());

    let mut steps: HashMap<u64, (DMatrix<f64>, DMatrix<f64>)> = HashMap::new();
    for w in times.windows(2) {
        let h = w[1] - w[0];
        let (phi, g) = match steps.get(&h.to_bits()) {
            Some(cached) => cached.clone(),
            None => {
                let computed = discretize(a, q, h)?;
                steps.insert(h.to_bits(), computed.clone());
                computed
            }
        };
        p = symmetrize(&(&phi * &p * phi.transpose() + &g));
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "propagated covariance",
            });
        }
        covariances.push(p.clone());
    }

    Ok(CovarianceTrajectory {
        times: times.to_vec(),
        covariances,
        partition: None,
    })
}

/// One piecewise-constant segment of covariance dynamics.
#[derive(Debug, Clone)]
pub struct Segment {
    pub a: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub duration: f64,
    pub steps: usize,
}

/// Propagate through a schedule of piecewise-constant dynamics, e.g. a
/// time-varying controller held constant on each segment. Segment boundaries
/// appear once in the concatenated grid.
pub fn propagate_piecewise(
    segments: &[Segment],
    p0: &DMatrix<f64>,
) -> Result<CovarianceTrajectory> {
    if segments.is_empty() {
        return Err(Error::InvalidGrid("schedule has no segments".into()));
    }
    let mut times = vec![0.0];
    let mut covariances = vec![symmetrize(p0)];
    let mut offset = 0.0;
    for (idx, seg) in segments.iter().enumerate() {
        if seg.duration <= 0.0 || seg.steps == 0 {
            return Err(Error::InvalidGrid(format!(
                "segment {idx} must have positive duration and at least one step"
            )));
        }
        let local = uniform_grid(seg.duration, seg.steps);
        let start = covariances
            .last()
            .expect("trajectory is never empty")
            .clone();
        let traj = propagate(&seg.a, &seg.q, &start, &local)?;
        for (t, p) in traj.times.iter().zip(traj.covariances.iter()).skip(1) {
            times.push(offset + t);
            covariances.push(p.clone());
        }
        offset += seg.duration;
    }
    Ok(CovarianceTrajectory {
        times,
        covariances,
        partition: None,
    })
}
