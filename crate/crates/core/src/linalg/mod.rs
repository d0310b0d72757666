//! Dense linear-algebra kernels.
//!
//! Matrices are `nalgebra` dense matrices. Least squares and spectral
//! quantities go through the SVD; symmetric indefinite systems use the
//! Bunch–Kaufman factorization in [`ldlt`].

mod ldlt;

pub use ldlt::{Inertia, SymmetricFactorization};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

pub type DenseMatrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative rank cutoff for least squares and pseudo-inverses.
pub const RANK_TOL: f64 = 1e-12;
/// Relative symmetry tolerance.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Minimum-norm least-squares solution together with the attained residual.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub solution: Vector,
    pub residual_norm: f64,
}

fn check_finite_matrix(m: &DenseMatrix, context: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(context))
    }
}

fn check_finite_vector(v: &Vector, context: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(context))
    }
}

/// Minimum-Euclidean-norm minimizer of `‖M u − rhs‖`.
///
/// Singular values below `RANK_TOL · σ_max` are treated as zero, so the
/// result is the pseudo-inverse solution `M⁺ rhs` even when `M` is rank
/// deficient.
pub fn least_squares_min_norm(m: &DenseMatrix, rhs: &Vector) -> Result<LeastSquares> {
    if rhs.len() != m.nrows() {
        return Err(Error::DimensionMismatch {
            context: "least squares right-hand side",
            expected: m.nrows(),
            found: rhs.len(),
        });
    }
    check_finite_matrix(m, "least squares matrix")?;
    check_finite_vector(rhs, "least squares right-hand side")?;
    if m.ncols() == 0 {
        return Ok(LeastSquares {
            solution: Vector::zeros(0),
            residual_norm: rhs.norm(),
        });
    }
    if m.nrows() == 0 {
        return Ok(LeastSquares {
            solution: Vector::zeros(m.ncols()),
            residual_norm: 0.0,
        });
    }
    let svd = m.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let solution = if sigma_max == 0.0 {
        Vector::zeros(m.ncols())
    } else {
        svd.solve(rhs, RANK_TOL * sigma_max)
            .map_err(|_| Error::NonFinite("least squares"))?
    };
    let residual_norm = (m * &solution - rhs).norm();
    Ok(LeastSquares {
        solution,
        residual_norm,
    })
}

/// Moore–Penrose pseudo-inverse with the same rank cutoff as
/// [`least_squares_min_norm`].
pub fn pseudo_inverse(m: &DenseMatrix) -> Result<DenseMatrix> {
    check_finite_matrix(m, "pseudo-inverse")?;
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(DenseMatrix::zeros(m.ncols(), m.nrows()));
    }
    let svd = m.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    if sigma_max == 0.0 {
        return Ok(DenseMatrix::zeros(m.ncols(), m.nrows()));
    }
    svd.pseudo_inverse(RANK_TOL * sigma_max)
        .map_err(|_| Error::NonFinite("pseudo-inverse"))
}

/// Numerical rank with singular values below `rel_tol · σ_max` discarded.
pub fn numerical_rank(m: &DenseMatrix, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.singular_values();
    let cutoff = rel_tol * sv.max();
    sv.iter().filter(|&&s| s > cutoff).count()
}

/// Largest singular value. Empty matrices have norm zero.
pub fn spectral_norm(m: &DenseMatrix) -> Result<f64> {
    check_finite_matrix(m, "spectral norm")?;
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    Ok(m.singular_values().max())
}

/// `true` when `m` is symmetric to `SYMMETRY_TOL · (1 + max|m_ij|)`.
pub fn is_symmetric(m: &DenseMatrix) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let tol = SYMMETRY_TOL * (1.0 + m.amax());
    let n = m.nrows();
    (0..n).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DenseMatrix) -> Result<f64> {
    if !is_symmetric(m) {
        return Err(Error::NotSymmetric("eigenvalue test"));
    }
    check_finite_matrix(m, "eigenvalue test")?;
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    Ok(SymmetricEigen::new(m.clone()).eigenvalues.min())
}

/// `true` iff the smallest eigenvalue of `m` is at least `-tol`.
pub fn is_positive_semidefinite(m: &DenseMatrix, tol: f64) -> Result<bool> {
    Ok(min_eigenvalue(m)? >= -tol)
}

/// Solves `K v = rhs` for symmetric, possibly indefinite `K`.
///
/// On factorization breakdown the solve is retried once with a diagonal
/// shift of magnitude `1e-10 · (1 + max|K_ii|)` that follows the sign of each
/// diagonal entry (zeros are shifted up). The returned solution is refined
/// against the unshifted matrix.
pub fn solve_symmetric_indefinite(k: &DenseMatrix, rhs: &Vector) -> Result<Vector> {
    let n = k.nrows();
    if k.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "symmetric solve (square)",
            expected: n,
            found: k.ncols(),
        });
    }
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            context: "symmetric solve right-hand side",
            expected: n,
            found: rhs.len(),
        });
    }
    check_finite_vector(rhs, "symmetric solve right-hand side")?;
    if !is_symmetric(k) {
        return Err(Error::NotSymmetric("symmetric solve"));
    }
    // One pass of symmetric row/column equilibration; interior point systems
    // mix entries of wildly different size.
    let scale: Vec<f64> = (0..n)
        .map(|i| {
            let r = k.row(i).amax();
            if r > 0.0 {
                1.0 / r.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let ks = DenseMatrix::from_fn(n, n, |i, j| scale[i] * k[(i, j)] * scale[j]);
    let rs = Vector::from_fn(n, |i, _| scale[i] * rhs[i]);
    let factor = match SymmetricFactorization::new(&ks) {
        Ok(f) => f,
        Err(Error::Singular(_)) => SymmetricFactorization::new(&sign_regularized(&ks))?,
        Err(e) => return Err(e),
    };
    let z = solve_refined(&factor, &ks, &rs)?;
    Ok(Vector::from_fn(n, |i, _| scale[i] * z[i]))
}

/// Diagonal shift following the sign pattern of the diagonal.
pub fn sign_regularized(k: &DenseMatrix) -> DenseMatrix {
    let n = k.nrows();
    let max_diag = (0..n).map(|i| k[(i, i)].abs()).fold(0.0, f64::max);
    let delta = 1e-10 * (1.0 + max_diag);
    let mut out = k.clone();
    for i in 0..n {
        if out[(i, i)] < 0.0 {
            out[(i, i)] -= delta;
        } else {
            out[(i, i)] += delta;
        }
    }
    out
}

/// Solves with `factor` and applies up to two steps of iterative refinement
/// against `k`.
pub fn solve_refined(
    factor: &SymmetricFactorization,
    k: &DenseMatrix,
    rhs: &Vector,
) -> Result<Vector> {
    let mut v = factor.solve(rhs);
    let target = 1e-14 * (1.0 + rhs.amax());
    for _ in 0..2 {
        let r = rhs - k * &v;
        if r.amax() <= target {
            break;
        }
        v += factor.solve(&r);
    }
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(Error::NonFinite("symmetric solve"))
    }
}

/// Rows `rows` and columns `cols` of `m`, in the given order.
pub fn submatrix(m: &DenseMatrix, rows: &[usize], cols: &[usize]) -> DenseMatrix {
    DenseMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Entries `idx` of `v`, in the given order.
pub fn subvector(v: &Vector, idx: &[usize]) -> Vector {
    Vector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}
