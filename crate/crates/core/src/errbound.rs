//! Monotone LCP form of the optimality conditions and the residual terms that
//! enter its global error bound.

use crate::linalg::{DenseMatrix, Vector};
use crate::model::StandardQP;
use crate::{Error, Result};

/// `z ≥ 0, Mz + q ≥ 0, zᵀ(Mz + q) = 0` with `z = (x, y⁺, y⁻)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LcpInstance {
    pub m: DenseMatrix,
    pub q: Vector,
}

impl LcpInstance {
    /// `vᵀMv ≥ −tol‖v‖²` for all `v`, tested on the symmetric part of `M`.
    pub fn is_positive_semidefinite(&self, tol: f64) -> Result<bool> {
        let sym = (&self.m + self.m.transpose()) * 0.5;
        crate::linalg::is_positive_semidefinite(&sym, tol)
    }
}

/// `M = [H −Aᵀ Aᵀ; A 0 0; −A 0 0]`, `q = (c, −b, b)`.
pub fn lcp_embedding(qp: &StandardQP) -> LcpInstance {
    let (n, m) = (qp.n(), qp.m());
    let dim = n + 2 * m;
    let mut mm = DenseMatrix::zeros(dim, dim);
    let at = qp.a().transpose();
    mm.view_mut((0, 0), (n, n)).copy_from(qp.h());
    mm.view_mut((0, n), (n, m)).copy_from(&-&at);
    mm.view_mut((0, n + m), (n, m)).copy_from(&at);
    mm.view_mut((n, 0), (m, n)).copy_from(qp.a());
    mm.view_mut((n + m, 0), (m, n)).copy_from(&-qp.a());

    let mut q = Vector::zeros(dim);
    q.rows_mut(0, n).copy_from(qp.c());
    q.rows_mut(n, m).copy_from(&-qp.b());
    q.rows_mut(n + m, m).copy_from(qp.b());
    LcpInstance { m: mm, q }
}

/// Natural residual `r` and positive-part residual `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualTerms {
    pub r: f64,
    pub w: f64,
}

fn pos(v: f64) -> f64 {
    v.max(0.0)
}

/// `r = ‖min(x, s)‖`, `w = ‖(−x, −s, xᵀs)₊‖`.
pub fn residual_terms_feasible(x: &Vector, s: &Vector) -> Result<ResidualTerms> {
    if x.len() != s.len() {
        return Err(Error::DimensionMismatch {
            context: "residual terms s",
            expected: x.len(),
            found: s.len(),
        });
    }
    let r2: f64 = x.iter().zip(s.iter()).map(|(a, b)| a.min(*b).powi(2)).sum();
    let w2: f64 = x
        .iter()
        .chain(s.iter())
        .map(|v| pos(-v).powi(2))
        .sum::<f64>()
        + pos(x.dot(s)).powi(2);
    Ok(ResidualTerms {
        r: r2.sqrt(),
        w: w2.sqrt(),
    })
}

/// Residual terms of the LCP form at `(x, y)` without assuming feasibility.
///
/// With `s = c − Aᵀy + Hx`:
/// `r = ‖(min(x, s), min(y⁺, Ax − b), min(y⁻, b − Ax))‖` and
/// `w = ‖(−s, b − Ax, Ax − b, −x, cᵀx − bᵀy + xᵀHx)₊‖`.
pub fn residual_terms_general(qp: &StandardQP, x: &Vector, y: &Vector) -> Result<ResidualTerms> {
    for (context, expected, found) in [
        ("residual terms x", qp.n(), x.len()),
        ("residual terms y", qp.m(), y.len()),
    ] {
        if expected != found {
            return Err(Error::DimensionMismatch {
                context,
                expected,
                found,
            });
        }
    }
    let hx = qp.h() * x;
    let s = qp.c() - qp.a().tr_mul(y) + &hx;
    let rp = qp.a() * x - qp.b();

    let mut r2 = 0.0;
    for i in 0..x.len() {
        r2 += x[i].min(s[i]).powi(2);
    }
    for j in 0..y.len() {
        let (yp, ym) = (pos(y[j]), pos(-y[j]));
        r2 += yp.min(rp[j]).powi(2) + ym.min(-rp[j]).powi(2);
    }

    let gap = qp.c().dot(x) - qp.b().dot(y) + x.dot(&hx);
    let w2: f64 = s.iter().map(|v| pos(-v).powi(2)).sum::<f64>()
        + rp.iter()
            .map(|v| pos(-v).powi(2) + pos(*v).powi(2))
            .sum::<f64>()
        + x.iter().map(|v| pos(-v).powi(2)).sum::<f64>()
        + pos(gap).powi(2);
    Ok(ResidualTerms {
        r: r2.sqrt(),
        w: w2.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::{dq1, m, v};
    use approx::assert_relative_eq;

    #[test]
    fn dq1_embedding() {
        let lcp = lcp_embedding(&dq1());
        let expected = m(
            4,
            4,
            &[
                1.0, 0.0, -1.0, 1.0, //
                0.0, 1.0, -1.0, 1.0, //
                1.0, 1.0, 0.0, 0.0, //
                -1.0, -1.0, 0.0, 0.0,
            ],
        );
        assert_eq!(lcp.m, expected);
        assert_eq!(lcp.q, v(&[0.0, 0.0, -1.0, 1.0]));
        assert!(lcp.is_positive_semidefinite(1e-10).unwrap());
    }

    #[test]
    fn lp_embedding_is_psd() {
        let qp = StandardQP::new(
            "lp",
            DenseMatrix::zeros(3, 3),
            m(2, 3, &[1.0, 2.0, 0.0, 0.0, 1.0, -1.0]),
            v(&[1.0, 0.5]),
            v(&[1.0, 1.0, 1.0]),
        )
        .unwrap();
        let lcp = lcp_embedding(&qp);
        assert!(lcp.m.view((0, 0), (3, 3)).iter().all(|&e| e == 0.0));
        assert!(lcp.is_positive_semidefinite(1e-10).unwrap());
    }

    #[test]
    fn feasible_terms_examples() {
        let t = residual_terms_feasible(&v(&[1.0, 0.5]), &v(&[0.0, 0.2])).unwrap();
        assert_relative_eq!(t.r, 0.2);
        assert_relative_eq!(t.w, 0.1);
        let z = v(&[0.0, 0.0]);
        assert_eq!(
            residual_terms_feasible(&z, &z).unwrap(),
            ResidualTerms { r: 0.0, w: 0.0 }
        );
        let t = residual_terms_feasible(&v(&[-1.0, 2.0]), &v(&[3.0, 4.0])).unwrap();
        assert_relative_eq!(t.r, 5f64.sqrt());
        assert_relative_eq!(t.w, 26f64.sqrt());
    }

    #[test]
    fn general_terms_examples() {
        let qp = dq1();
        let t = residual_terms_general(&qp, &v(&[0.5, 0.5]), &v(&[0.5])).unwrap();
        assert_eq!((t.r, t.w), (0.0, 0.0));
        let t = residual_terms_general(&qp, &v(&[1.0, 0.0]), &v(&[0.0])).unwrap();
        assert_relative_eq!(t.r, 1.0);
        assert_relative_eq!(t.w, 1.0);
    }
}
