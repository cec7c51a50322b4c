//! Small dense-matrix helpers shared across the crate.
//!
//! Everything here works on `nalgebra` dynamic matrices over `Complex64`
//! (or `f64` where the quantity is real by construction). Problem sizes are
//! tiny (tens of rows), so clarity wins over cleverness throughout.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// (M + M^H) / 2. Keeps covariances exactly Hermitian after assembly.
pub fn hermitize(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()).scale(0.5)
}

/// Lift a real matrix into the complex field.
pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Block-diagonal assembly; off-block entries are exactly zero.
pub fn block_diag(blocks: &[DMatrix<Complex64>]) -> DMatrix<Complex64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r0, c0), (b.nrows(), b.ncols())).copy_from(b);
        r0 += b.nrows();
        c0 += b.ncols();
    }
    out
}

/// tr(X·Y) without forming the product.
pub fn trace_prod(x: &DMatrix<Complex64>, y: &DMatrix<Complex64>) -> Complex64 {
    debug_assert_eq!(x.ncols(), y.nrows());
    debug_assert_eq!(y.ncols(), x.nrows());
    let mut acc = Complex64::new(0.0, 0.0);
    for a in 0..x.nrows() {
        for b in 0..x.ncols() {
            acc += x[(a, b)] * y[(b, a)];
        }
    }
    acc
}

/// Eigenvalues of a Hermitian matrix via its real symmetric embedding
/// [[Re, -Im], [Im, Re]]; each eigenvalue of the input appears twice.
pub fn herm_eigenvalues(m: &DMatrix<Complex64>) -> DVector<f64> {
    let n = m.nrows();
    let mut t = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for r in 0..n {
        for c in 0..n {
            let z = m[(r, c)];
            t[(r, c)] = z.re;
            t[(r, c + n)] = -z.im;
            t[(r + n, c)] = z.im;
            t[(r + n, c + n)] = z.re;
        }
    }
    t.symmetric_eigen().eigenvalues
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn herm_min_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    herm_eigenvalues(m).iter().copied().fold(f64::INFINITY, f64::min)
}

/// Condition-number estimate |λ|_max / |λ|_min of a Hermitian matrix.
pub fn herm_condition(m: &DMatrix<Complex64>) -> f64 {
    let ev = herm_eigenvalues(m);
    let max = ev.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let min = ev.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn cholesky_with_jitter(
    m: &DMatrix<Complex64>,
    context: &str,
) -> Result<Cholesky<Complex64, Dyn>> {
    if let Some(chol) = Cholesky::new(m.clone()) {
        return Ok(chol);
    }
    // Jitter only on factorization failure: 1e-12 * trace / dim on the diagonal.
    let n = m.nrows();
    let jitter = 1e-12 * m.trace().re / n as f64;
    log::debug!("cholesky failed in {context}; retrying with diagonal jitter {jitter:.3e}");
    let mut jm = m.clone();
    for i in 0..n {
        jm[(i, i)] += Complex64::new(jitter.abs().max(f64::MIN_POSITIVE), 0.0);
    }
    Cholesky::new(jm).ok_or_else(|| Error::Singular {
        context: context.to_string(),
        cond: herm_condition(m),
    })
}

/// Solve M·X = RHS for Hermitian positive (semi-)definite M, rescuing
/// borderline factorizations with a tiny diagonal jitter.
pub fn herm_solve(
    m: &DMatrix<Complex64>,
    rhs: &DMatrix<Complex64>,
    context: &str,
) -> Result<DMatrix<Complex64>> {
    Ok(cholesky_with_jitter(m, context)?.solve(rhs))
}

/// Vector right-hand-side variant of [`herm_solve`].
pub fn herm_solve_vec(
    m: &DMatrix<Complex64>,
    rhs: &DVector<Complex64>,
    context: &str,
) -> Result<DVector<Complex64>> {
    Ok(cholesky_with_jitter(m, context)?.solve(rhs))
}

fn cholesky_strict(m: &DMatrix<Complex64>, context: &str) -> Result<Cholesky<Complex64, Dyn>> {
    Cholesky::new(m.clone()).ok_or_else(|| Error::Singular {
        context: context.to_string(),
        cond: herm_condition(m),
    })
}

/// Like [`herm_solve`] but surfacing rank deficiency as an error instead of
/// regularizing; used where a pseudo-solution would silently hide a
/// genuinely singular observation map.
pub fn herm_solve_strict(
    m: &DMatrix<Complex64>,
    rhs: &DMatrix<Complex64>,
    context: &str,
) -> Result<DMatrix<Complex64>> {
    Ok(cholesky_strict(m, context)?.solve(rhs))
}

/// Vector right-hand-side variant of [`herm_solve_strict`].
pub fn herm_solve_vec_strict(
    m: &DMatrix<Complex64>,
    rhs: &DVector<Complex64>,
    context: &str,
) -> Result<DVector<Complex64>> {
    Ok(cholesky_strict(m, context)?.solve(rhs))
}

/// PSD square root of a real symmetric matrix. Eigenvalues that roundoff
/// pushed slightly negative are clamped to zero.
pub fn sym_sqrt_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let scaled = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals);
    let out = &scaled * eig.eigenvectors.transpose();
    // Re-symmetrize to kill roundoff asymmetry.
    (&out + out.transpose()).scale(0.5)
}

/// Column-major vectorization vec(M).
pub fn vec_col_major(m: &DMatrix<Complex64>) -> DVector<Complex64> {
    DVector::from_column_slice(m.as_slice())
}
