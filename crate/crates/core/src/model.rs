//! Quadrature-form linear quantum stochastic systems.
//!
//! An open system of `n` harmonic oscillators is specified physically by a
//! quadratic Hamiltonian matrix `R`, a field coupling matrix `K` and a unitary
//! scattering matrix `S`. In the canonical quadrature basis
//! `x = (q1, p1, ..., qn, pn)` with `[q_j, p_j] = 2i` the induced dynamics are
//!
//! ```text
//! dx = A x dt + B dw,    dy = C x dt + D dw,
//! ```
//!
//! where `w` stacks the real and imaginary field quadratures per input field.
//! [`to_quadrature`] performs this conversion and [`realizability_residual`]
//! measures how well a quadruple preserves the canonical commutation
//! relations.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::covariance::min_eig_hermitian;
use crate::{Error, Result};

/// Tolerance for structural identities (symmetry, unitarity, conversion residues).
pub const STRUCT_TOL: f64 = 1e-12;

/// Tolerance below which an LMI minimum eigenvalue still counts as nonnegative.
pub const LMI_TOL: f64 = 1e-9;

/// Tolerance for positive-semidefiniteness checks of field Ito matrices.
pub const PSD_TOL: f64 = 1e-10;

/// Tolerance on the commutation residual of a converted quadruple.
pub const REALIZABILITY_TOL: f64 = 1e-10;

/// The single-mode symplectic form `J = [[0, 1], [-1, 0]]`.
pub fn symplectic_j() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
}

/// Block diagonal `diag(J, ..., J)` with `blocks` copies of `J`.
pub fn block_j(blocks: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(2 * blocks, 2 * blocks);
    for b in 0..blocks {
        m[(2 * b, 2 * b + 1)] = 1.0;
        m[(2 * b + 1, 2 * b)] = -1.0;
    }
    m
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    max_abs(&(m - m.transpose()))
}

/// Physical parametrization of `n` open oscillators coupled to `m` fields.
///
/// Holds the Hamiltonian matrix `R` (`H = x^T R x / 2`), the coupling matrix
/// `K` (`L = K x`) and the unitary scattering matrix `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorSpec {
    n: usize,
    m: usize,
    r: DMatrix<f64>,
    k: DMatrix<Complex64>,
    s: DMatrix<Complex64>,
}

impl OscillatorSpec {
    pub fn new(r: DMatrix<f64>, k: DMatrix<Complex64>, s: DMatrix<Complex64>) -> Result<Self> {
        if r.nrows() != r.ncols() || !r.nrows().is_multiple_of(2) || r.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "Hamiltonian matrix R must be square with even size, got {}x{}",
                r.nrows(),
                r.ncols()
            )));
        }
        let n = r.nrows() / 2;
        let res = asymmetry(&r);
        if res > 0.0 {
            return Err(Error::NotSymmetric {
                what: "Hamiltonian matrix R",
                residual: res,
            });
        }
        let m = k.nrows();
        if k.ncols() != 2 * n {
            return Err(Error::Dimension(format!(
                "coupling matrix K must be m x {}, got {}x{}",
                2 * n,
                k.nrows(),
                k.ncols()
            )));
        }
        if s.nrows() != m || s.ncols() != m {
            return Err(Error::Dimension(format!(
                "scattering matrix S must be {m}x{m}, got {}x{}",
                s.nrows(),
                s.ncols()
            )));
        }
        let unit_res = (s.adjoint() * &s - DMatrix::<Complex64>::identity(m, m)).norm();
        if unit_res > STRUCT_TOL {
            return Err(Error::NotUnitary { residual: unit_res });
        }
        Ok(Self { n, m, r, k, s })
    }

    pub fn oscillators(&self) -> usize {
        self.n
    }

    pub fn fields(&self) -> usize {
        self.m
    }

    pub fn hamiltonian(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn coupling(&self) -> &DMatrix<Complex64> {
        &self.k
    }

    pub fn scattering(&self) -> &DMatrix<Complex64> {
        &self.s
    }
}

/// Ito matrices of `m` bosonic input fields: `dw dw^T = (S_w + i T_w) dt`.
///
/// The commutator part is fixed by the field algebra to `T_w = i diag_m(J)`,
/// so only its real prefactor is stored; `S_w` carries the field statistics
/// (`S_w = I` for vacuum inputs).
#[derive(Debug, Clone, PartialEq)]
pub struct ItoFieldSpec {
    m: usize,
    s_w: DMatrix<f64>,
}

impl ItoFieldSpec {
    pub fn new(s_w: DMatrix<f64>) -> Result<Self> {
        if s_w.nrows() != s_w.ncols() || !s_w.nrows().is_multiple_of(2) || s_w.nrows() == 0 {
            return Err(Error::Dimension(format!(
                "field covariance S_w must be square with even size, got {}x{}",
                s_w.nrows(),
                s_w.ncols()
            )));
        }
        let res = asymmetry(&s_w);
        if res > 0.0 {
            return Err(Error::NotSymmetric {
                what: "field covariance S_w",
                residual: res,
            });
        }
        let m = s_w.nrows() / 2;
        let spec = Self { m, s_w };
        let min_eig = spec.f_w_min_eig()?;
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidCovariance { min_eig });
        }
        Ok(spec)
    }

    pub fn fields(&self) -> usize {
        self.m
    }

    pub fn s_w(&self) -> &DMatrix<f64> {
        &self.s_w
    }

    /// Imaginary part of `T_w`, i.e. the real matrix `diag_m(J)` with `T_w = i diag_m(J)`.
    pub fn t_w_imag(&self) -> DMatrix<f64> {
        block_j(self.m)
    }

    /// Minimum eigenvalue of the Hermitian Ito matrix `F_w = S_w + T_w`.
    pub fn f_w_min_eig(&self) -> Result<f64> {
        min_eig_hermitian(&self.s_w, &self.t_w_imag())
    }
}

/// Vacuum input statistics for `m` fields: `S_w = I`, `T_w = i diag_m(J)`.
pub fn vacuum_field(m: usize) -> Result<ItoFieldSpec> {
    if m == 0 {
        return Err(Error::Invalid(
            "a field spec needs at least one field".into(),
        ));
    }
    ItoFieldSpec::new(DMatrix::identity(2 * m, 2 * m))
}

/// Real state-space quadruple `(A, B, C, D)` in the quadrature basis, together
/// with the commutation matrix `Theta = diag_n(J)` and the input field spec.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSystem {
    n: usize,
    m: usize,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
    field: ItoFieldSpec,
}

impl QuadratureSystem {
    pub fn oscillators(&self) -> usize {
        self.n
    }

    pub fn fields(&self) -> usize {
        self.m
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn field(&self) -> &ItoFieldSpec {
        &self.field
    }

    /// Commutation matrix `Theta = diag_n(J)` of the oscillator quadratures.
    pub fn theta(&self) -> DMatrix<f64> {
        block_j(self.n)
    }
}

/// Convert a physical oscillator spec plus field statistics to quadrature form.
///
/// The drift is `A = 2 Theta (R + Im(K^dag K))`; the noise, output and
/// feedthrough matrices are the real quadrature images of the annihilation
/// picture matrices under the per-field change of basis
/// `(dA_j, dA_j^*) = [[1, i], [1, -i]] / 2 * (dw_{2j-1}, dw_{2j})`.
pub fn to_quadrature(spec: &OscillatorSpec, field: &ItoFieldSpec) -> Result<QuadratureSystem> {
    if field.fields() != spec.fields() {
        return Err(Error::Dimension(format!(
            "field spec has {} fields but the oscillator spec couples to {}",
            field.fields(),
            spec.fields()
        )));
    }
    let n = spec.oscillators();
    let m = spec.fields();
    let theta = block_j(n);

    // A = 2 Theta (R + Im{K^dag K}); Im of a Hermitian matrix is real, taken entrywise.
    let kdk = spec.k.adjoint() * &spec.k;
    let im_kdk = DMatrix::from_fn(2 * n, 2 * n, |i, j| kdk[(i, j)].im);
    let a = 2.0 * &theta * (&spec.r + im_kdk);

    // B from B_o = 2i Theta [-K^dag S, K^T S^conj], column pairs recombined per field.
    let i_unit = Complex64::new(0.0, 1.0);
    let theta_c = theta.map(|v| Complex64::new(v, 0.0));
    let b_ann = (&theta_c * (spec.k.adjoint() * &spec.s)) * (-2.0 * i_unit);
    let b_cre = (&theta_c * (spec.k.transpose() * spec.s.map(|z| z.conj()))) * (2.0 * i_unit);
    let mut b = DMatrix::<f64>::zeros(2 * n, 2 * m);
    let mut residue = 0.0_f64;
    for j in 0..m {
        for row in 0..2 * n {
            let re_col = (b_ann[(row, j)] + b_cre[(row, j)]) * 0.5;
            let im_col = (b_ann[(row, j)] - b_cre[(row, j)]) * 0.5 * i_unit;
            residue = residue.max(re_col.im.abs()).max(im_col.im.abs());
            b[(row, 2 * j)] = re_col.re;
            b[(row, 2 * j + 1)] = im_col.re;
        }
    }
    if residue > STRUCT_TOL {
        return Err(Error::ImaginaryResidue {
            what: "noise matrix B",
            residual: residue,
        });
    }

    // C interleaves 2 Re(K_j), 2 Im(K_j) row-wise.
    let mut c = DMatrix::<f64>::zeros(2 * m, 2 * n);
    for j in 0..m {
        for col in 0..2 * n {
            c[(2 * j, col)] = 2.0 * spec.k[(j, col)].re;
            c[(2 * j + 1, col)] = 2.0 * spec.k[(j, col)].im;
        }
    }

    // D has the 2x2 rotation block of S_jk at block position (j, k).
    let mut d = DMatrix::<f64>::zeros(2 * m, 2 * m);
    for j in 0..m {
        for k in 0..m {
            let s = spec.s[(j, k)];
            d[(2 * j, 2 * k)] = s.re;
            d[(2 * j, 2 * k + 1)] = -s.im;
            d[(2 * j + 1, 2 * k)] = s.im;
            d[(2 * j + 1, 2 * k + 1)] = s.re;
        }
    }

    let ortho_res = (d.transpose() * &d - DMatrix::<f64>::identity(2 * m, 2 * m)).norm();
    if ortho_res > PSD_TOL {
        return Err(Error::NotUnitary {
            residual: ortho_res,
        });
    }

    let sys = QuadratureSystem {
        n,
        m,
        a,
        b,
        c,
        d,
        field: field.clone(),
    };
    let res = realizability_residual(&sys);
    if res > REALIZABILITY_TOL {
        return Err(Error::Realizability {
            what: "quadrature conversion",
            residual: res,
        });
    }
    Ok(sys)
}

/// Frobenius norm of `A Theta + Theta A^T + B T_im B^T` where `T_w = i T_im`.
///
/// This is the residual of the commutation-preservation identity
/// `A Theta + Theta A^T - i B T_w B^T = 0` written in real arithmetic; it
/// vanishes exactly when the quadruple preserves the canonical commutation
/// relations.
pub fn commutation_residual(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    theta: &DMatrix<f64>,
    t_w_imag: &DMatrix<f64>,
) -> Result<f64> {
    let d = a.nrows();
    if a.ncols() != d || theta.nrows() != d || theta.ncols() != d || b.nrows() != d {
        return Err(Error::Dimension(format!(
            "commutation residual needs square A, Theta of size {d} and B with {d} rows"
        )));
    }
    if t_w_imag.nrows() != b.ncols() || t_w_imag.ncols() != b.ncols() {
        return Err(Error::Dimension(format!(
            "T_w must be {}x{} to match B",
            b.ncols(),
            b.ncols()
        )));
    }
    Ok((a * theta + theta * a.transpose() + b * t_w_imag * b.transpose()).norm())
}

/// Commutation-preservation residual of a converted system.
pub fn realizability_residual(sys: &QuadratureSystem) -> f64 {
    commutation_residual(&sys.a, &sys.b, &sys.theta(), &sys.field.t_w_imag())
        .expect("a QuadratureSystem always has consistent dimensions")
}

/// Result of the uncertainty-principle LMI check `P + i Theta >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeisenbergReport {
    pub min_eig: f64,
    pub satisfied: bool,
}

/// Minimum eigenvalue of the Hermitian matrix `P + i Theta` and the verdict
/// `min_eig >= -1e-9`.
pub fn heisenberg_check(p: &DMatrix<f64>, theta: &DMatrix<f64>) -> Result<HeisenbergReport> {
    if p.nrows() != p.ncols() || p.shape() != theta.shape() {
        return Err(Error::Dimension(format!(
            "covariance is {}x{} but Theta is {}x{}",
            p.nrows(),
            p.ncols(),
            theta.nrows(),
            theta.ncols()
        )));
    }
    let res = asymmetry(p);
    if res > STRUCT_TOL {
        return Err(Error::NotSymmetric {
            what: "covariance matrix P",
            residual: res,
        });
    }
    let min_eig = min_eig_hermitian(p, theta)?;
    Ok(HeisenbergReport {
        min_eig,
        satisfied: min_eig >= -LMI_TOL,
    })
}
