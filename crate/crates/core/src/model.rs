//! Problem data, primal-dual iterates, perturbations and index partitions.

use std::collections::BTreeSet;

use crate::linalg::{self, DenseMatrix, Vector};
use crate::{Error, Result};

/// Ordered set of 0-based variable indices.
pub type IndexSet = BTreeSet<usize>;

/// Default zero threshold for set membership (variables below it are active).
pub const ZERO_TOL: f64 = 1e-5;

/// Dense convex QP in standard form: `min ½xᵀHx + cᵀx  s.t.  Ax = b, x ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardQP {
    name: String,
    h: DenseMatrix,
    a: DenseMatrix,
    b: Vector,
    c: Vector,
}

impl StandardQP {
    /// Builds and validates a problem: symmetric PSD `H`, `m ≤ n`, `A` of
    /// full row rank and finite data.
    pub fn new(
        name: impl Into<String>,
        h: DenseMatrix,
        a: DenseMatrix,
        b: Vector,
        c: Vector,
    ) -> Result<Self> {
        let qp = Self::new_unchecked(name, h, a, b, c)?;
        let (m, n) = (qp.m(), qp.n());
        if m > n {
            return Err(Error::RankDeficient { rank: n, rows: m });
        }
        if !linalg::is_symmetric(&qp.h) {
            return Err(Error::NotSymmetric("quadratic term"));
        }
        let lmin = linalg::min_eigenvalue(&qp.h)?;
        if lmin < -1e-8 * qp.h.amax().max(1.0) {
            return Err(Error::NotPositiveSemidefinite(lmin));
        }
        if m > 0 {
            let rank = linalg::numerical_rank(&qp.a, 1e-10);
            if rank < m {
                return Err(Error::RankDeficient { rank, rows: m });
            }
        }
        Ok(qp)
    }

    /// Builds a problem checking only dimensions and finiteness. Reduced
    /// sub-problems use this, since dropping columns can cost row rank.
    pub fn new_unchecked(
        name: impl Into<String>,
        h: DenseMatrix,
        a: DenseMatrix,
        b: Vector,
        c: Vector,
    ) -> Result<Self> {
        let n = c.len();
        let m = b.len();
        let dims = [
            ("quadratic term rows", n, h.nrows()),
            ("quadratic term cols", n, h.ncols()),
            ("constraint rows", m, a.nrows()),
            ("constraint cols", n, a.ncols()),
        ];
        for (context, expected, found) in dims {
            if expected != found {
                return Err(Error::DimensionMismatch {
                    context,
                    expected,
                    found,
                });
            }
        }
        let finite = h.iter().chain(a.iter()).chain(b.iter()).chain(c.iter());
        if !finite.into_iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("problem data"));
        }
        Ok(Self {
            name: name.into(),
            h,
            a,
            b,
            c,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn h(&self) -> &DenseMatrix {
        &self.h
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn b(&self) -> &Vector {
        &self.b
    }

    pub fn c(&self) -> &Vector {
        &self.c
    }

    /// Number of variables.
    pub fn n(&self) -> usize {
        self.c.len()
    }

    /// Number of equality constraints.
    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// `½xᵀHx + cᵀx`.
    pub fn objective(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.h * x)) + self.c.dot(x)
    }

    /// Scale used by relative residuals: `1 + max(‖b‖∞, ‖c‖∞)`.
    pub fn residual_scale(&self) -> f64 {
        1.0 + self.b.amax().max(self.c.amax())
    }
}

/// Primal-dual point `(x, y, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub x: Vector,
    pub y: Vector,
    pub s: Vector,
}

impl Iterate {
    pub fn new(x: Vector, y: Vector, s: Vector) -> Self {
        Self { x, y, s }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self::new(Vector::zeros(n), Vector::zeros(m), Vector::zeros(n))
    }

    fn check(&self, qp: &StandardQP) -> Result<()> {
        check_len("iterate x", qp.n(), self.x.len())?;
        check_len("iterate y", qp.m(), self.y.len())?;
        check_len("iterate s", qp.n(), self.s.len())
    }
}

/// Primal and dual bound relaxations `x ≥ -λ`, `s ≥ -φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub lambda: Vector,
    pub phi: Vector,
}

impl Perturbation {
    pub fn new(lambda: Vector, phi: Vector) -> Result<Self> {
        check_len("perturbation phi", lambda.len(), phi.len())?;
        if lambda.iter().chain(phi.iter()).any(|&v| !(v >= 0.0)) {
            return Err(Error::InvalidParameter(
                "perturbations must be nonnegative".into(),
            ));
        }
        Ok(Self { lambda, phi })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            lambda: Vector::zeros(n),
            phi: Vector::zeros(n),
        }
    }

    /// `λ = φ = ε·e`.
    pub fn uniform(n: usize, eps: f64) -> Result<Self> {
        Self::new(Vector::from_element(n, eps), Vector::from_element(n, eps))
    }

    /// Same relaxation on both sides.
    pub fn symmetric(lambda: Vector) -> Result<Self> {
        Self::new(lambda.clone(), lambda)
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.lambda.iter().chain(self.phi.iter()).all(|&v| v == 0.0)
    }
}

/// Disjoint cover `(S, I, T)` of the index set: dual inactive, primal
/// inactive, and the remainder where both vanish.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Tripartition {
    pub s: IndexSet,
    pub i: IndexSet,
    pub t: IndexSet,
}

impl Tripartition {
    /// Primal active set `S ∪ T`.
    pub fn active(&self) -> IndexSet {
        self.s.union(&self.t).copied().collect()
    }

    pub fn is_partition_of(&self, n: usize) -> bool {
        self.s.is_disjoint(&self.i)
            && self.s.is_disjoint(&self.t)
            && self.i.is_disjoint(&self.t)
            && self.s.len() + self.i.len() + self.t.len() == n
            && self.s.iter().chain(&self.i).chain(&self.t).all(|&k| k < n)
    }
}

/// Equality and complementarity residuals at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct KktResiduals {
    /// `Ax − b`
    pub primal: Vector,
    /// `Aᵀy + s − Hx − c`
    pub dual: Vector,
    /// `(x_i + λ_i)(s_i + φ_i)`
    pub complementarity: Vector,
}

impl KktResiduals {
    /// `‖(Rp, Rd, comp)‖∞`.
    pub fn max_abs(&self) -> f64 {
        self.primal
            .amax()
            .max(self.dual.amax())
            .max(self.complementarity.amax())
    }
}

fn check_len(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}

/// `Ax − b`.
pub fn primal_residual(qp: &StandardQP, x: &Vector) -> Vector {
    qp.a() * x - qp.b()
}

/// `Aᵀy + s − Hx − c`.
pub fn dual_residual(qp: &StandardQP, it: &Iterate) -> Vector {
    qp.a().tr_mul(&it.y) + &it.s - qp.h() * &it.x - qp.c()
}

pub fn kkt_residuals(qp: &StandardQP, it: &Iterate, pert: &Perturbation) -> Result<KktResiduals> {
    it.check(qp)?;
    check_len("perturbation", qp.n(), pert.len())?;
    let complementarity = (&it.x + &pert.lambda).component_mul(&(&it.s + &pert.phi));
    Ok(KktResiduals {
        primal: primal_residual(qp, &it.x),
        dual: dual_residual(qp, it),
        complementarity,
    })
}

/// The problem in shifted variables `p = x + λ`: `b̂ = b + Aλ`,
/// `ĉ = c + (I − H)λ`, with `H` and `A` unchanged.
pub fn shifted_problem(qp: &StandardQP, lambda: &Vector) -> Result<StandardQP> {
    check_len("shift", qp.n(), lambda.len())?;
    if lambda.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::InvalidParameter("shift must be nonnegative".into()));
    }
    let b = qp.b() + qp.a() * lambda;
    let c = qp.c() + lambda - qp.h() * lambda;
    StandardQP::new_unchecked(qp.name(), qp.h().clone(), qp.a().clone(), b, c)
}

/// Perturbed duality measure `(x + λ)ᵀ(s + φ) / n`.
pub fn mu_lambda(it: &Iterate, pert: &Perturbation) -> Result<f64> {
    let n = it.x.len();
    check_len("iterate s", n, it.s.len())?;
    check_len("perturbation", n, pert.len())?;
    if n == 0 {
        return Err(Error::InvalidParameter("empty iterate".into()));
    }
    Ok((&it.x + &pert.lambda).dot(&(&it.s + &pert.phi)) / n as f64)
}

/// Membership in the symmetric neighbourhood of the perturbed central path:
/// strictly inside the relaxed bounds, equality residuals within `1e-8`
/// relative, and every product in `[γ μ_λ, μ_λ / γ]`.
pub fn in_symmetric_neighbourhood(
    qp: &StandardQP,
    it: &Iterate,
    pert: &Perturbation,
    gamma: f64,
) -> Result<bool> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma {gamma} not in (0,1)"
        )));
    }
    let res = kkt_residuals(qp, it, pert)?;
    let strictly_inside =
        (0..qp.n()).all(|i| it.x[i] + pert.lambda[i] > 0.0 && it.s[i] + pert.phi[i] > 0.0);
    if !strictly_inside {
        return Ok(false);
    }
    let feasible = res.primal.amax() <= 1e-8 * (1.0 + qp.b().amax())
        && res.dual.amax() <= 1e-8 * (1.0 + qp.c().amax());
    if !feasible {
        return Ok(false);
    }
    let mu = mu_lambda(it, pert)?;
    Ok(res
        .complementarity
        .iter()
        .all(|&p| p >= gamma * mu && p <= mu / gamma))
}

/// `‖(Rp, Rd, comp)‖∞ / (1 + max(‖b‖∞, ‖c‖∞))`.
pub fn relative_residual(qp: &StandardQP, it: &Iterate, pert: &Perturbation) -> Result<f64> {
    Ok(kkt_residuals(qp, it, pert)?.max_abs() / qp.residual_scale())
}

/// Tripartition of a complementary pair: `I = {x_i > tol}`, `S = {s_i > tol}`
/// and `T` the rest. Overlapping `I` and `S` means the pair is not
/// complementary at this tolerance.
pub fn optimal_partition(x: &Vector, s: &Vector, tol: f64) -> Result<Tripartition> {
    check_len("partition s", x.len(), s.len())?;
    let mut part = Tripartition::default();
    for k in 0..x.len() {
        match (x[k] > tol, s[k] > tol) {
            (true, true) => return Err(Error::NotComplementary(k)),
            (true, false) => {
                part.i.insert(k);
            }
            (false, true) => {
                part.s.insert(k);
            }
            (false, false) => {
                part.t.insert(k);
            }
        }
    }
    Ok(part)
}

/// `C₂ = √(n/γ) + n`, the constant in the neighbourhood distance bound.
pub fn c2_constant(n: usize, gamma: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma {gamma} not in (0,1)"
        )));
    }
    let n = n as f64;
    Ok((n / gamma).sqrt() + n)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub fn v(x: &[f64]) -> Vector {
        Vector::from_row_slice(x)
    }

    pub fn m(r: usize, c: usize, x: &[f64]) -> DenseMatrix {
        DenseMatrix::from_row_slice(r, c, x)
    }

    /// H = I₂, A = [1 1], b = 1, c = 0. Solution x = (½, ½), y = ½, s = 0.
    pub fn dq1() -> StandardQP {
        StandardQP::new(
            "DQ1",
            DenseMatrix::identity(2, 2),
            m(1, 2, &[1.0, 1.0]),
            v(&[1.0]),
            v(&[0.0, 0.0]),
        )
        .unwrap()
    }

    /// H = I₂, A = [1 0], b = 1, c = (0, 1). Solution x = (1, 0), y = 1, s = (0, 1).
    pub fn dq2() -> StandardQP {
        StandardQP::new(
            "DQ2",
            DenseMatrix::identity(2, 2),
            m(1, 2, &[1.0, 0.0]),
            v(&[1.0]),
            v(&[0.0, 1.0]),
        )
        .unwrap()
    }

    /// H = diag(0, 1), A = [1 0], b = 1, c = (1, 0). Solution x = (1, 0), y = 1, s = 0.
    pub fn dq3() -> StandardQP {
        StandardQP::new(
            "DQ3",
            m(2, 2, &[0.0, 0.0, 0.0, 1.0]),
            m(1, 2, &[1.0, 0.0]),
            v(&[1.0]),
            v(&[1.0, 0.0]),
        )
        .unwrap()
    }

    #[test]
    fn validation_rejects_bad_problems() {
        let h = m(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            StandardQP::new("x", h, m(1, 2, &[1.0, 1.0]), v(&[1.0]), v(&[0.0, 0.0])),
            Err(Error::NotPositiveSemidefinite(_))
        ));
        assert!(matches!(
            StandardQP::new(
                "x",
                DenseMatrix::identity(2, 2),
                m(2, 2, &[1.0, 1.0, 2.0, 2.0]),
                v(&[1.0, 2.0]),
                v(&[0.0, 0.0])
            ),
            Err(Error::RankDeficient { rank: 1, rows: 2 })
        ));
        assert!(matches!(
            StandardQP::new(
                "x",
                DenseMatrix::identity(2, 2),
                m(1, 2, &[1.0, 1.0]),
                v(&[1.0]),
                v(&[0.0])
            ),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn residuals_at_dq1_solution() {
        let it = Iterate::new(v(&[0.5, 0.5]), v(&[0.5]), v(&[0.0, 0.0]));
        let r = kkt_residuals(&dq1(), &it, &Perturbation::zeros(2)).unwrap();
        assert_eq!(r.max_abs(), 0.0);

        let pert = Perturbation::uniform(2, 0.1).unwrap();
        let r = kkt_residuals(&dq1(), &it, &pert).unwrap();
        assert_relative_eq!(r.complementarity, v(&[0.06, 0.06]), epsilon = 1e-15);
    }

    #[test]
    fn residuals_at_zero_point() {
        let qp = dq2();
        let r = kkt_residuals(&qp, &Iterate::zeros(2, 1), &Perturbation::zeros(2)).unwrap();
        assert_eq!(r.primal, -qp.b());
        assert_eq!(r.dual, -qp.c());
        assert_eq!(r.complementarity, v(&[0.0, 0.0]));
    }

    #[test]
    fn shifted_problem_examples() {
        let qp = dq1();
        assert_eq!(shifted_problem(&qp, &v(&[0.0, 0.0])).unwrap(), qp);

        let sh = shifted_problem(&qp, &v(&[1.0, 1.0])).unwrap();
        assert_eq!(sh.b(), &v(&[3.0]));
        assert_eq!(sh.c(), &v(&[0.0, 0.0]));

        let sh = shifted_problem(&dq3(), &v(&[1.0, 1.0])).unwrap();
        assert_eq!(sh.b(), &v(&[2.0]));
        assert_eq!(sh.c(), &v(&[2.0, 0.0]));

        assert!(shifted_problem(&qp, &v(&[-1.0, 0.0])).is_err());
    }

    #[test]
    fn mu_lambda_examples() {
        let it = Iterate::new(v(&[1.0, 2.0]), v(&[]), v(&[3.0, 4.0]));
        assert_relative_eq!(mu_lambda(&it, &Perturbation::zeros(2)).unwrap(), 5.5);
        let pert = Perturbation::uniform(2, 0.1).unwrap();
        assert_relative_eq!(mu_lambda(&it, &pert).unwrap(), 6.01, epsilon = 1e-14);

        let mu_hat: f64 = 0.37;
        let it = Iterate::zeros(5, 0);
        let pert = Perturbation::uniform(5, mu_hat.sqrt()).unwrap();
        assert_relative_eq!(mu_lambda(&it, &pert).unwrap(), mu_hat, epsilon = 1e-15);
    }

    /// Feasible point of min ½‖x‖² + cᵀx s.t. x₁ + x₂ = 2 with products (1, 4).
    fn band_point() -> (StandardQP, Iterate) {
        let x = v(&[1.0, 1.0]);
        let s = v(&[1.0, 4.0]);
        // Rd = s − x − c at y = 0.
        let c = &s - &x;
        let qp = StandardQP::new(
            "band",
            DenseMatrix::identity(2, 2),
            m(1, 2, &[1.0, 1.0]),
            v(&[2.0]),
            c,
        )
        .unwrap();
        (qp, Iterate::new(x, v(&[0.0]), s))
    }

    #[test]
    fn neighbourhood_examples() {
        let (qp, it) = band_point();
        let zero = Perturbation::zeros(2);
        assert_eq!(kkt_residuals(&qp, &it, &zero).unwrap().max_abs(), 4.0);
        assert!(!in_symmetric_neighbourhood(&qp, &it, &zero, 0.5).unwrap());
        assert!(in_symmetric_neighbourhood(&qp, &it, &zero, 0.25).unwrap());

        let centered = Iterate::new(v(&[1.0, 1.0]), v(&[0.0]), v(&[2.0, 2.0]));
        let qp_c = StandardQP::new(
            "c",
            qp.h().clone(),
            qp.a().clone(),
            qp.b().clone(),
            v(&[1.0, 1.0]),
        )
        .unwrap();
        assert!(in_symmetric_neighbourhood(&qp_c, &centered, &zero, 0.99).unwrap());
        assert!(in_symmetric_neighbourhood(&qp, &it, &zero, 1.0).is_err());
    }

    #[test]
    fn relative_residual_examples() {
        let qp = dq1();
        let sol = Iterate::new(v(&[0.5, 0.5]), v(&[0.5]), v(&[0.0, 0.0]));
        assert_eq!(
            relative_residual(&qp, &sol, &Perturbation::zeros(2)).unwrap(),
            0.0
        );
        // Rp = −1, Rd = 0, comp = 0; scale 1 + max(1, 0) = 2.
        assert_relative_eq!(
            relative_residual(&qp, &Iterate::zeros(2, 1), &Perturbation::zeros(2)).unwrap(),
            0.5
        );
        let scaled = StandardQP::new(
            "s",
            qp.h().clone(),
            qp.a().clone(),
            qp.b() * 10.0,
            v(&[10.0, 0.0]),
        )
        .unwrap();
        assert_relative_eq!(scaled.residual_scale(), 11.0);
    }

    #[test]
    fn partition_examples() {
        let p = optimal_partition(&v(&[1.0, 0.0]), &v(&[0.0, 1.0]), 1e-8).unwrap();
        assert_eq!(p.i, IndexSet::from([0]));
        assert_eq!(p.s, IndexSet::from([1]));
        assert!(p.t.is_empty());

        let p = optimal_partition(&v(&[1.0, 0.0]), &v(&[0.0, 0.0]), 1e-8).unwrap();
        assert_eq!(p.i, IndexSet::from([0]));
        assert!(p.s.is_empty());
        assert_eq!(p.t, IndexSet::from([1]));

        let p = optimal_partition(&v(&[0.0, 0.0]), &v(&[0.0, 0.0]), 1e-8).unwrap();
        assert_eq!(p.t, IndexSet::from([0, 1]));
        assert!(p.is_partition_of(2));

        assert!(matches!(
            optimal_partition(&v(&[1.0]), &v(&[1.0]), 1e-8),
            Err(Error::NotComplementary(0))
        ));
    }

    #[test]
    fn c2_examples() {
        assert_relative_eq!(c2_constant(1, 0.25).unwrap(), 3.0);
        assert_relative_eq!(c2_constant(4, 0.25).unwrap(), 8.0);
        assert_relative_eq!(c2_constant(9, 0.09).unwrap(), 19.0, epsilon = 1e-12);
        assert!(c2_constant(3, 1.0).is_err());
        assert!(c2_constant(0, 0.5).is_err());
    }
}
