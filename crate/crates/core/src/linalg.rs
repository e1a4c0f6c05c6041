//! Dense complex matrix kernel.
//!
//! Every matrix inverse that appears in the transceiver formulas is realized
//! here as a Hermitian positive-definite solve or an eigendecomposition-based
//! pseudo-solve. Storage is nalgebra's column-major `DMatrix`; callers only
//! rely on logical `(row, col)` indexing.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::LinalgError;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Relative clip applied to eigenvalues in pseudo-solves.
pub const PINV_CLIP: f64 = 1e-10;

const EVD_MAX_SWEEPS: usize = 10_000;

/// Eigendecomposition `A = U diag(λ) Uᴴ` of a Hermitian matrix, eigenvalues
/// sorted in descending order.
#[derive(Debug, Clone)]
pub struct HermitianEvd {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl HermitianEvd {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U f(Λ) Uᴴ` for a real spectral function.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> CMatrix {
        let n = self.dim();
        let mut scaled = self.eigenvectors.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let v = f(lam);
            scaled.column_mut(j).scale_mut(v);
        }
        let out = scaled * self.eigenvectors.adjoint();
        debug_assert_eq!(out.nrows(), n);
        hermitian_part(&out)
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.apply(|l| l)
    }
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Builds a matrix from row-major complex entries, rejecting NaN and Inf.
pub fn from_rows(rows: usize, cols: usize, entries: &[C64]) -> Result<CMatrix, LinalgError> {
    if entries.len() != rows * cols {
        return Err(LinalgError::Dimension(format!(
            "{} entries supplied for a {rows}x{cols} matrix",
            entries.len()
        )));
    }
    let m = CMatrix::from_row_slice(rows, cols, entries);
    check_finite(&m)?;
    Ok(m)
}

/// Real-valued convenience constructor (row-major).
pub fn from_real_rows(rows: usize, cols: usize, entries: &[f64]) -> Result<CMatrix, LinalgError> {
    let z: Vec<C64> = entries.iter().map(|&x| c(x, 0.0)).collect();
    from_rows(rows, cols, &z)
}

pub fn check_finite(m: &CMatrix) -> Result<(), LinalgError> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(LinalgError::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

pub fn eye(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

/// `diag(values)` as a complex matrix.
pub fn diag(values: &[f64]) -> CMatrix {
    let n = values.len();
    let mut m = zeros(n, n);
    for (i, &v) in values.iter().enumerate() {
        m[(i, i)] = c(v, 0.0);
    }
    m
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diagonal().iter().copied().sum()
}

/// Real part of the trace; the traces used by the MSE formulas are real.
pub fn trace_re(a: &CMatrix) -> f64 {
    trace(a).re
}

pub fn fro_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn fro_norm_sqr(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

/// `(A + Aᴴ)/2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Relative Frobenius distance of `a` from Hermitian symmetry.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let n = fro_norm(a).max(1.0);
    fro_norm(&(a - a.adjoint())) / n
}

fn require_square(a: &CMatrix) -> Result<usize, LinalgError> {
    if a.nrows() != a.ncols() {
        return Err(LinalgError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(a.nrows())
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Column stacking: `(rows·cols) × 1`.
pub fn vec(a: &CMatrix) -> CMatrix {
    CMatrix::from_column_slice(a.nrows() * a.ncols(), 1, a.as_slice())
}

/// Inverse of [`vec`].
pub fn unvec(v: &CMatrix, rows: usize, cols: usize) -> Result<CMatrix, LinalgError> {
    if v.ncols() != 1 || v.nrows() != rows * cols {
        return Err(LinalgError::Dimension(format!(
            "cannot reshape {}x{} into {rows}x{cols}",
            v.nrows(),
            v.ncols()
        )));
    }
    Ok(CMatrix::from_column_slice(rows, cols, v.as_slice()))
}

pub fn block_diag(blocks: &[CMatrix]) -> Result<CMatrix, LinalgError> {
    if blocks.is_empty() {
        return Err(LinalgError::EmptyBlocks);
    }
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let (mut r, mut k) = (0, 0);
    for b in blocks {
        out.view_mut((r, k), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        k += b.ncols();
    }
    Ok(out)
}

/// Horizontal concatenation `[A_1 A_2 …]`.
pub fn hstack(blocks: &[CMatrix]) -> Result<CMatrix, LinalgError> {
    let Some(first) = blocks.first() else {
        return Err(LinalgError::EmptyBlocks);
    };
    let rows = first.nrows();
    if blocks.iter().any(|b| b.nrows() != rows) {
        return Err(LinalgError::Dimension("hstack row counts differ".into()));
    }
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let mut k = 0;
    for b in blocks {
        out.view_mut((0, k), (rows, b.ncols())).copy_from(b);
        k += b.ncols();
    }
    Ok(out)
}

/// Eigendecomposition of the Hermitian part of `a`.
///
/// The input is symmetrized before factorization, so `a` and `aᴴ` produce
/// identical spectra.
pub fn hermitian_evd(a: &CMatrix) -> Result<HermitianEvd, LinalgError> {
    let n = require_square(a)?;
    check_finite(a)?;
    if n == 0 {
        return Ok(HermitianEvd {
            eigenvalues: Vec::new(),
            eigenvectors: zeros(0, 0),
        });
    }
    let sym = hermitian_part(a);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, EVD_MAX_SWEEPS).ok_or(
        LinalgError::NoConvergence {
            iterations: EVD_MAX_SWEEPS,
            dim: n,
        },
    )?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let mut vectors = zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(eig.eigenvalues[src]);
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(HermitianEvd {
        eigenvalues: values,
        eigenvectors: vectors,
    })
}

/// Hermitian PSD square root. Eigenvalues down to `-1e-8·‖a‖` are treated
/// as round-off and clipped to zero.
pub fn psd_sqrt(a: &CMatrix) -> Result<CMatrix, LinalgError> {
    let evd = hermitian_evd(a)?;
    let norm = fro_norm(a);
    if let Some(&min) = evd.eigenvalues.last() {
        if min < -1e-8 * norm {
            return Err(LinalgError::NotPsd {
                eigenvalue: min,
                norm,
            });
        }
    }
    Ok(evd.apply(|l| l.max(0.0).sqrt()))
}

/// Solves `a X = rhs` for Hermitian positive-definite `a` by Cholesky.
///
/// A pivot at or below `1e-12·tr(a)/n` is reported as not-HPD.
pub fn solve_hpd(a: &CMatrix, rhs: &CMatrix) -> Result<CMatrix, LinalgError> {
    let n = require_square(a)?;
    if rhs.nrows() != n {
        return Err(LinalgError::Dimension(format!(
            "rhs has {} rows, matrix is {n}x{n}",
            rhs.nrows()
        )));
    }
    check_finite(a)?;
    let sym = hermitian_part(a);
    let threshold = 1e-12 * (trace_re(&sym) / n.max(1) as f64).abs();
    let chol = Cholesky::new(sym).ok_or(LinalgError::NotHpd {
        index: 0,
        pivot: f64::NAN,
        threshold,
    })?;
    let l = chol.l_dirty();
    for i in 0..n {
        let pivot = l[(i, i)].re * l[(i, i)].re;
        if pivot <= threshold {
            return Err(LinalgError::NotHpd {
                index: i,
                pivot,
                threshold,
            });
        }
    }
    Ok(chol.solve(rhs))
}

pub fn inv_hpd(a: &CMatrix) -> Result<CMatrix, LinalgError> {
    let n = require_square(a)?;
    solve_hpd(a, &eye(n)).map(|x| hermitian_part(&x))
}

/// Pseudo-solve `a⁺ rhs` for Hermitian `a`, dropping eigenvalues below
/// `rel_clip · max|λ|`.
pub fn pinv_solve_hermitian(
    a: &CMatrix,
    rhs: &CMatrix,
    rel_clip: f64,
) -> Result<CMatrix, LinalgError> {
    let n = require_square(a)?;
    if rhs.nrows() != n {
        return Err(LinalgError::Dimension(format!(
            "rhs has {} rows, matrix is {n}x{n}",
            rhs.nrows()
        )));
    }
    let evd = hermitian_evd(a)?;
    let scale = evd.eigenvalues.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
    let cut = rel_clip * scale;
    let pinv = evd.apply(|l| if l.abs() > cut { 1.0 / l } else { 0.0 });
    Ok(pinv * rhs)
}

/// Inverse of a small Hermitian positive-definite matrix, falling back to
/// the clipped pseudo-inverse when the Cholesky pivots collapse.
pub fn inv_hpd_or_pinv(a: &CMatrix) -> Result<CMatrix, LinalgError> {
    match inv_hpd(a) {
        Ok(x) => Ok(x),
        Err(LinalgError::NotHpd { .. }) => {
            let n = a.nrows();
            pinv_solve_hermitian(a, &eye(n), PINV_CLIP).map(|x| hermitian_part(&x))
        }
        Err(e) => Err(e),
    }
}

/// Right singular vectors and singular values of `a` via the eigensystem of
/// `aᴴa`, sorted by decreasing singular value.
pub fn right_singular(a: &CMatrix) -> Result<(Vec<f64>, CMatrix), LinalgError> {
    let gram = a.adjoint() * a;
    let evd = hermitian_evd(&gram)?;
    let sv = evd.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
    Ok((sv, evd.eigenvectors))
}
