//! Perfect perturbations, the relaxed band test, and the least-squares point
//! that carries an exact solution into a perturbed problem while keeping its
//! strictly positive components positive.

use crate::linalg::{self, submatrix, subvector, DenseMatrix, Vector};
use crate::model::{optimal_partition, IndexSet, StandardQP, Tripartition};
use crate::{Error, Result};

/// Zero test used to split a solution into active and inactive indices.
pub const SET_TOL: f64 = 1e-8;

/// Per-component `λ` with `(x_i + λ_i)(s_i + λ_i) = μ̂` for a complementary pair.
pub fn perfect_perturbation(x_star: &Vector, s_star: &Vector, mu_hat: f64) -> Result<Vector> {
    if x_star.len() != s_star.len() {
        return Err(Error::DimensionMismatch {
            context: "perfect perturbation s",
            expected: x_star.len(),
            found: s_star.len(),
        });
    }
    if !(mu_hat > 0.0 && mu_hat.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "mu_hat {mu_hat} must be positive"
        )));
    }
    let mut out = Vector::zeros(x_star.len());
    for i in 0..x_star.len() {
        let (x, s) = (x_star[i], s_star[i]);
        if !(x.is_finite() && s.is_finite()) {
            return Err(Error::NonFinite("perfect perturbation input"));
        }
        if x < -SET_TOL || s < -SET_TOL || x.min(s) > SET_TOL {
            return Err(Error::NotComplementary(i));
        }
        // λ² + (x+s)λ + xs − μ̂ = 0, positive root in cancellation-free form.
        let gap = mu_hat - x * s;
        if gap <= 0.0 {
            return Err(Error::NotComplementary(i));
        }
        let t = x + s;
        out[i] = 2.0 * gap / (t + (t * t + 4.0 * gap).sqrt());
    }
    Ok(out)
}

/// True when `x* + λ > 0`, `s* + λ > 0` and every product
/// `(x*_i + λ_i)(s*_i + λ_i)` lies in `[ξμ̂, μ̂/ξ]`.
pub fn relaxed_band_check(
    x_star: &Vector,
    s_star: &Vector,
    lambda: &Vector,
    mu_hat: f64,
    xi: f64,
) -> Result<bool> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::InvalidParameter(format!("xi {xi} not in (0,1)")));
    }
    let n = x_star.len();
    for (context, len) in [("band s", s_star.len()), ("band lambda", lambda.len())] {
        if len != n {
            return Err(Error::DimensionMismatch {
                context,
                expected: n,
                found: len,
            });
        }
    }
    Ok((0..n).all(|i| {
        let p = x_star[i] + lambda[i];
        let q = s_star[i] + lambda[i];
        let prod = p * q;
        p > 0.0 && q > 0.0 && prod >= xi * mu_hat && prod <= mu_hat / xi
    }))
}

/// Point of the perturbed problem built from an exact solution.
#[derive(Debug, Clone)]
pub struct PreservingPoint {
    pub p_hat: Vector,
    pub y_hat: Vector,
    pub q_hat: Vector,
    pub u_hat: Vector,
    pub v_hat: Vector,
    /// `‖M(û, v̂) − W(λ_A, λ_As)‖`
    pub ls_residual: f64,
    /// `2‖W‖‖λ‖`
    pub bound_2w_lambda: f64,
    /// `‖Ap̂ − b̂_λ‖`
    pub primal_residual: f64,
    /// `‖Aᵀŷ + q̂ − Hp̂ − ĉ_λ‖`
    pub dual_residual: f64,
    /// `p̂_I > 0` and `q̂_S > 0`.
    pub preserved: bool,
}

impl PreservingPoint {
    /// Tripartition read off with thresholds at `−λ`, i.e. from the signs of
    /// `p̂` and `q̂`.
    pub fn tripartition(&self) -> Tripartition {
        let n = self.p_hat.len();
        let mut part = Tripartition::default();
        for k in 0..n {
            if self.p_hat[k] > 0.0 {
                part.i.insert(k);
            } else if self.q_hat[k] > 0.0 {
                part.s.insert(k);
            } else {
                part.t.insert(k);
            }
        }
        part
    }
}

/// Index sets of a solution: `A = {x* ≈ 0}`, `I` its complement,
/// `As = {s* ≈ 0}`, `S` its complement.
#[derive(Debug, Clone)]
struct SolutionSets {
    a: Vec<usize>,
    i: Vec<usize>,
    a_s: Vec<usize>,
    s: Vec<usize>,
}

impl SolutionSets {
    fn new(x_star: &Vector, s_star: &Vector) -> Result<Self> {
        let part = optimal_partition(x_star, s_star, SET_TOL)?;
        let n = x_star.len();
        let to_vec = |set: &IndexSet| set.iter().copied().collect::<Vec<_>>();
        let complement = |set: &IndexSet| (0..n).filter(|k| !set.contains(k)).collect::<Vec<_>>();
        Ok(Self {
            a: complement(&part.i),
            i: to_vec(&part.i),
            a_s: complement(&part.s),
            s: to_vec(&part.s),
        })
    }
}

/// `M = [A_I 0; −H_{As,I} A_Asᵀ]` and `W = [A_A 0; −H_{As,A} I]`.
fn assemble_mw(qp: &StandardQP, sets: &SolutionSets) -> (DenseMatrix, DenseMatrix) {
    let m = qp.m();
    let rows: Vec<usize> = (0..m).collect();
    let (ni, na, nas) = (sets.i.len(), sets.a.len(), sets.a_s.len());

    let mut mm = DenseMatrix::zeros(m + nas, ni + m);
    mm.view_mut((0, 0), (m, ni))
        .copy_from(&submatrix(qp.a(), &rows, &sets.i));
    mm.view_mut((m, 0), (nas, ni))
        .copy_from(&-submatrix(qp.h(), &sets.a_s, &sets.i));
    mm.view_mut((m, ni), (nas, m))
        .copy_from(&submatrix(qp.a(), &rows, &sets.a_s).transpose());

    let mut w = DenseMatrix::zeros(m + nas, na + nas);
    w.view_mut((0, 0), (m, na))
        .copy_from(&submatrix(qp.a(), &rows, &sets.a));
    w.view_mut((m, 0), (nas, na))
        .copy_from(&-submatrix(qp.h(), &sets.a_s, &sets.a));
    w.view_mut((m, na), (nas, nas)).fill_with_identity();
    (mm, w)
}

fn check_lengths(vs: &[(&'static str, &Vector, usize)]) -> Result<()> {
    for &(context, v, expected) in vs {
        if v.len() != expected {
            return Err(Error::DimensionMismatch {
                context,
                expected,
                found: v.len(),
            });
        }
    }
    Ok(())
}

/// Carries a solution `(x*, y*, s*)` of `qp` to the problem shifted by `λ`.
///
/// With `(û, v̂)` the minimum-norm least-squares solution of
/// `M(u, v) = W(λ_A, λ_As)`:
/// `p̂_A = 0`, `p̂_I = x*_I + λ_I + û`, `ŷ = y* + v̂`, `q̂_As = 0` and
/// `q̂_S = s*_S + λ_S − H_{S,A}λ_A − A_Sᵀv̂ + H_{S,I}û`.
pub fn preserving_point(
    qp: &StandardQP,
    x_star: &Vector,
    y_star: &Vector,
    s_star: &Vector,
    lambda: &Vector,
) -> Result<PreservingPoint> {
    let (n, m) = (qp.n(), qp.m());
    check_lengths(&[
        ("solution x", x_star, n),
        ("solution y", y_star, m),
        ("solution s", s_star, n),
        ("perturbation", lambda, n),
    ])?;
    if lambda.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::InvalidParameter(
            "perturbation must be nonnegative".into(),
        ));
    }
    let sets = SolutionSets::new(x_star, s_star)?;
    let (mm, w) = assemble_mw(qp, &sets);
    let (ni, nas) = (sets.i.len(), sets.a_s.len());

    let mut lam_w = Vector::zeros(sets.a.len() + nas);
    lam_w
        .rows_mut(0, sets.a.len())
        .copy_from(&subvector(lambda, &sets.a));
    lam_w
        .rows_mut(sets.a.len(), nas)
        .copy_from(&subvector(lambda, &sets.a_s));
    let rhs = &w * &lam_w;

    let (u_hat, v_hat, ls_residual) = if mm.ncols() == 0 || mm.nrows() == 0 {
        (Vector::zeros(ni), Vector::zeros(m), rhs.norm())
    } else {
        let ls = linalg::least_squares_min_norm(&mm, &rhs)?;
        (
            ls.solution.rows(0, ni).into_owned(),
            ls.solution.rows(ni, m).into_owned(),
            ls.residual_norm,
        )
    };

    let mut p_hat = Vector::zeros(n);
    for (k, &j) in sets.i.iter().enumerate() {
        p_hat[j] = x_star[j] + lambda[j] + u_hat[k];
    }
    let y_hat = y_star + &v_hat;

    let mut q_hat = Vector::zeros(n);
    if !sets.s.is_empty() {
        let rows: Vec<usize> = (0..m).collect();
        let lam_a = subvector(lambda, &sets.a);
        let q_s = subvector(s_star, &sets.s) + subvector(lambda, &sets.s)
            - submatrix(qp.h(), &sets.s, &sets.a) * lam_a
            - submatrix(qp.a(), &rows, &sets.s).tr_mul(&v_hat)
            + submatrix(qp.h(), &sets.s, &sets.i) * &u_hat;
        for (k, &j) in sets.s.iter().enumerate() {
            q_hat[j] = q_s[k];
        }
    }

    let bound_2w_lambda = 2.0 * linalg::spectral_norm(&w)? * lambda.norm();

    // Residuals in the shifted problem: b̂ = b + Aλ, ĉ = c + (I − H)λ.
    let b_hat = qp.b() + qp.a() * lambda;
    let c_hat = qp.c() + lambda - qp.h() * lambda;
    let primal_residual = (qp.a() * &p_hat - b_hat).norm();
    let dual_residual = (qp.a().tr_mul(&y_hat) + &q_hat - qp.h() * &p_hat - c_hat).norm();

    let preserved =
        sets.i.iter().all(|&j| p_hat[j] > 0.0) && sets.s.iter().all(|&j| q_hat[j] > 0.0);

    Ok(PreservingPoint {
        p_hat,
        y_hat,
        q_hat,
        u_hat,
        v_hat,
        ls_residual,
        bound_2w_lambda,
        primal_residual,
        dual_residual,
        preserved,
    })
}

/// Largest `‖λ‖` for which the preserving point is guaranteed to keep
/// `p̂_I > 0` and `q̂_S > 0`:
///
/// ```text
/// min( m₀ / (2‖M⁺W‖),  m₀ / (‖H_{S,A}‖ + 2(‖A_S‖ + ‖H_{S,I}‖)‖M⁺W‖) )
/// ```
///
/// with `m₀ = min(x*_I, s*_S)`. Returns `+∞` when `I ∪ S` is empty or a
/// denominator vanishes.
pub fn lambda_hat_threshold(qp: &StandardQP, x_star: &Vector, s_star: &Vector) -> Result<f64> {
    let n = qp.n();
    check_lengths(&[("solution x", x_star, n), ("solution s", s_star, n)])?;
    let sets = SolutionSets::new(x_star, s_star)?;
    let m0 = sets
        .i
        .iter()
        .map(|&j| x_star[j])
        .chain(sets.s.iter().map(|&j| s_star[j]))
        .fold(f64::INFINITY, f64::min);
    if m0.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let (mm, w) = assemble_mw(qp, &sets);
    let mpw = if mm.nrows() == 0 || mm.ncols() == 0 || w.ncols() == 0 {
        0.0
    } else {
        linalg::spectral_norm(&(linalg::pseudo_inverse(&mm)? * &w))?
    };
    let rows: Vec<usize> = (0..qp.m()).collect();
    let norm = |mat: DenseMatrix| -> Result<f64> {
        if mat.is_empty() {
            Ok(0.0)
        } else {
            linalg::spectral_norm(&mat)
        }
    };
    let h_sa = norm(submatrix(qp.h(), &sets.s, &sets.a))?;
    let a_s = norm(submatrix(qp.a(), &rows, &sets.s))?;
    let h_si = norm(submatrix(qp.h(), &sets.s, &sets.i))?;

    let ratio = |den: f64| if den > 0.0 { m0 / den } else { f64::INFINITY };
    Ok(ratio(2.0 * mpw).min(ratio(h_sa + 2.0 * (a_s + h_si) * mpw)))
}
