//! Infeasible primal-dual path-following method with relaxed bounds
//! `x ≥ −λ`, `s ≥ −φ`. A zero initial perturbation gives the classical
//! unperturbed method.

use crate::linalg::{self, DenseMatrix, Vector};
use crate::model::{
    dual_residual, mu_lambda, primal_residual, relative_residual, IndexSet, Iterate, Perturbation,
    StandardQP,
};
use crate::predict::PredictionState;
use crate::{Error, Result};

/// Solver parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// `ε₀` in `λ⁰ = φ⁰ = ε₀ e`; zero disables perturbations.
    pub initial_perturbation: f64,
    /// Fraction of the step to the boundary.
    pub alpha_bar: f64,
    /// Stop once `μ_λ` falls below this (and the equations are satisfied).
    pub mu_tolerance: f64,
    pub max_iterations: usize,
    /// Threshold `C` of the active-set predictor.
    pub prediction_threshold: f64,
    /// Factor applied to `λ`, `φ` while the iterate stays positive.
    pub shrink_fraction: f64,
    /// Relative equality residual required for convergence.
    pub feasibility_tolerance: f64,
    /// Stop when the relative residual has not dropped tenfold over this many
    /// iterations. Zero disables the check.
    pub stagnation_window: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            initial_perturbation: 1e-3,
            alpha_bar: 0.9995,
            mu_tolerance: 1e-3,
            max_iterations: 100,
            prediction_threshold: 1e-5,
            shrink_fraction: 0.9,
            feasibility_tolerance: 1e-6,
            stagnation_window: 30,
        }
    }
}

impl SolveOptions {
    /// Same options with `λ = φ = 0`.
    pub fn unperturbed(&self) -> Self {
        Self {
            initial_perturbation: 0.0,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.initial_perturbation >= 0.0 && self.initial_perturbation.is_finite()) {
            return bad("initial_perturbation must be finite and nonnegative");
        }
        if !(self.alpha_bar > 0.0 && self.alpha_bar < 1.0) {
            return bad("alpha_bar must lie in (0,1)");
        }
        if !(self.mu_tolerance > 0.0) {
            return bad("mu_tolerance must be positive");
        }
        if !(self.prediction_threshold > 0.0) {
            return bad("prediction_threshold must be positive");
        }
        if !(self.shrink_fraction > 0.0 && self.shrink_fraction < 1.0) {
            return bad("shrink_fraction must lie in (0,1)");
        }
        if !(self.feasibility_tolerance > 0.0) {
            return bad("feasibility_tolerance must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    IterationLimit,
    NumericalFailure,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::IterationLimit => "iteration-limit",
            Self::NumericalFailure => "numerical-failure",
        }
    }
}

/// State after one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub mu_lambda: f64,
    /// `xᵀs / n`
    pub mu: f64,
    /// Relative residual including the perturbed products.
    pub residual: f64,
    pub alpha_p: f64,
    pub alpha_d: f64,
    pub sigma: f64,
    pub lambda_inf: f64,
    pub phi_inf: f64,
    /// Active set of the three-set predictor after this iteration.
    pub predicted_active: IndexSet,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub final_iterate: Iterate,
    pub final_perturbation: Perturbation,
    pub iterations: usize,
    pub trace: Vec<IterationRecord>,
    pub status: SolveStatus,
    pub prediction: PredictionState,
}

impl SolveReport {
    pub fn final_mu_lambda(&self) -> f64 {
        mu_lambda(&self.final_iterate, &self.final_perturbation).unwrap_or(f64::NAN)
    }

    pub fn final_mu(&self) -> f64 {
        let it = &self.final_iterate;
        if it.x.is_empty() {
            0.0
        } else {
            it.x.dot(&it.s) / it.x.len() as f64
        }
    }

    /// Predicted active set after iteration `k` (1-based), if reached.
    pub fn predicted_active_at(&self, k: usize) -> Option<&IndexSet> {
        k.checked_sub(1)
            .and_then(|i| self.trace.get(i))
            .map(|r| &r.predicted_active)
    }
}

/// Search direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub dx: Vector,
    pub dy: Vector,
    pub ds: Vector,
}

/// Mehrotra-type starting point with `x⁰ > 0`, `s⁰ > 0`.
pub fn mehrotra_start(qp: &StandardQP) -> Result<Iterate> {
    let (n, m) = (qp.n(), qp.m());
    if m > 0 {
        let rank = linalg::numerical_rank(qp.a(), 1e-10);
        if rank < m {
            return Err(Error::RankDeficient { rank, rows: m });
        }
    }
    let x_t = if m == 0 {
        Vector::zeros(n)
    } else {
        linalg::least_squares_min_norm(qp.a(), qp.b())?.solution
    };
    let g = qp.c() + qp.h() * &x_t;
    let y_t = if m == 0 {
        Vector::zeros(0)
    } else {
        linalg::least_squares_min_norm(&qp.a().transpose(), &g)?.solution
    };
    let s_t = &g - qp.a().tr_mul(&y_t);

    let shift = |v: &Vector| (-1.5 * v.min()).max(0.0);
    let (dx, ds) = if n == 0 {
        (0.0, 0.0)
    } else {
        (shift(&x_t), shift(&s_t))
    };
    let xs = x_t.add_scalar(dx);
    let ss = s_t.add_scalar(ds);
    let cross = 0.5 * xs.dot(&ss);
    // Complementary starts make the cross term vanish and would leave a zero
    // vector; shift by one instead.
    let widen = |base: f64, denom: f64, v: &Vector| {
        let d = if denom > 1e-12 && cross > 1e-12 {
            base + cross / denom
        } else {
            base + 1.0
        };
        if v.iter().all(|&e| e + d > 0.0) {
            d
        } else {
            base + 1.0
        }
    };
    let dx_hat = widen(dx, ss.sum(), &x_t);
    let ds_hat = widen(ds, xs.sum(), &s_t);
    Ok(Iterate::new(
        x_t.add_scalar(dx_hat),
        y_t,
        s_t.add_scalar(ds_hat),
    ))
}

/// `σ = min(0.1, 100 μ_λ)`.
pub fn centering_sigma(mu_lambda: f64) -> f64 {
    (100.0 * mu_lambda).clamp(0.0, 0.1)
}

/// Newton direction for the perturbed central-path equations through the
/// augmented system
///
/// ```text
/// [ −H − D⁻²  Aᵀ ] [dx]     [ R_d − (X+Λ)⁻¹R_μ ]
/// [    A      0  ] [dy] = − [       R_p        ]
/// ```
///
/// with `D⁻² = (S+Φ)(X+Λ)⁻¹` and `R_μ = (X+Λ)(S+Φ)e − σμ_λ e`, followed by
/// `ds = −(X+Λ)⁻¹(R_μ + (S+Φ)dx)`.
pub fn newton_step(qp: &StandardQP, it: &Iterate, pert: &Perturbation, sigma: f64) -> Result<Step> {
    let (n, m) = (qp.n(), qp.m());
    if !(0.0..=1.0).contains(&sigma) {
        return Err(Error::InvalidParameter(format!(
            "sigma {sigma} not in [0,1]"
        )));
    }
    let p = &it.x + &pert.lambda;
    let q = &it.s + &pert.phi;
    if let Some(i) = (0..n).find(|&i| !(p[i] > 0.0 && q[i] > 0.0)) {
        return Err(Error::BoundViolation(i));
    }
    let mu = mu_lambda(it, pert)?;
    let rp = primal_residual(qp, &it.x);
    let rd = dual_residual(qp, it);
    let r_mu = p.component_mul(&q).add_scalar(-sigma * mu);

    let mut k = DenseMatrix::zeros(n + m, n + m);
    k.view_mut((0, 0), (n, n)).copy_from(&-qp.h());
    for i in 0..n {
        k[(i, i)] -= q[i] / p[i];
    }
    k.view_mut((0, n), (n, m)).copy_from(&qp.a().transpose());
    k.view_mut((n, 0), (m, n)).copy_from(qp.a());

    let mut rhs = Vector::zeros(n + m);
    for i in 0..n {
        rhs[i] = -(rd[i] - r_mu[i] / p[i]);
    }
    rhs.rows_mut(n, m).copy_from(&-rp);

    let sol = linalg::solve_symmetric_indefinite(&k, &rhs)?;
    let dx = sol.rows(0, n).into_owned();
    let dy = sol.rows(n, m).into_owned();
    let ds = Vector::from_fn(n, |i, _| -(r_mu[i] + q[i] * dx[i]) / p[i]);
    Ok(Step { dx, dy, ds })
}

fn boundary_step(v: &Vector, shift: &Vector, d: &Vector, alpha_bar: f64) -> f64 {
    let max_step = (0..v.len())
        .filter(|&i| d[i] < 0.0)
        .map(|i| (-v[i] - shift[i]) / d[i])
        .fold(f64::INFINITY, f64::min);
    (alpha_bar * max_step).min(1.0)
}

/// Fraction `ᾱ` of the largest primal and dual steps keeping `x + λ > 0` and
/// `s + φ > 0`, capped at one.
pub fn step_lengths(
    it: &Iterate,
    pert: &Perturbation,
    dx: &Vector,
    ds: &Vector,
    alpha_bar: f64,
) -> (f64, f64) {
    (
        boundary_step(&it.x, &pert.lambda, dx, alpha_bar),
        boundary_step(&it.s, &pert.phi, ds, alpha_bar),
    )
}

/// Segment parameter of the shrink rule when the iterate has left the
/// nonnegative orthant.
pub const SEGMENT_T: f64 = 0.9;
/// Margin of the positivity floor `1.01·max(0, −min v)`.
pub const FLOOR_FACTOR: f64 = 1.01;

fn shrink_one(bound: &Vector, v: &Vector, fraction: f64) -> Result<Vector> {
    if v.is_empty() {
        return Ok(bound.clone());
    }
    let vmin = v.min();
    let out = if vmin > 0.0 {
        bound * fraction
    } else {
        let depth = -vmin;
        let floor = FLOOR_FACTOR * depth.max(0.0);
        bound.map(|l| {
            ((1.0 - SEGMENT_T) * l + SEGMENT_T * depth)
                .max(floor)
                .max(0.0)
        })
    };
    match (0..v.len()).find(|&i| !(v[i] + out[i] > 0.0)) {
        Some(i) => Err(Error::BoundViolation(i)),
        None => Ok(out),
    }
}

/// Shrinks `λ` (and `φ`) for the next iteration: by `shrink_fraction` while
/// `x > 0`, otherwise towards `−min(x)·e` along a segment with a positivity
/// floor.
pub fn shrink_perturbations(
    pert: &Perturbation,
    next: &Iterate,
    shrink_fraction: f64,
) -> Result<Perturbation> {
    Ok(Perturbation {
        lambda: shrink_one(&pert.lambda, &next.x, shrink_fraction)?,
        phi: shrink_one(&pert.phi, &next.s, shrink_fraction)?,
    })
}

fn equality_residual(qp: &StandardQP, it: &Iterate) -> f64 {
    let rp = primal_residual(qp, &it.x).amax();
    let rd = dual_residual(qp, it).amax();
    rp.max(rd) / qp.residual_scale()
}

/// Runs the method from the Mehrotra start.
pub fn solve(qp: &StandardQP, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    let n = qp.n();
    if n == 0 {
        return Err(Error::InvalidParameter("problem has no variables".into()));
    }
    let mut it = mehrotra_start(qp)?;
    let mut pert = Perturbation::uniform(n, opts.initial_perturbation)?;
    let mut prediction = PredictionState::new(n);
    let mut trace: Vec<IterationRecord> = Vec::new();

    let status = loop {
        let mu = mu_lambda(&it, &pert)?;
        if !mu.is_finite() {
            break SolveStatus::NumericalFailure;
        }
        if mu < opts.mu_tolerance && equality_residual(qp, &it) <= opts.feasibility_tolerance {
            break SolveStatus::Converged;
        }
        if trace.len() >= opts.max_iterations {
            break SolveStatus::IterationLimit;
        }
        let w = opts.stagnation_window;
        if w > 0 && trace.len() > w {
            let last = trace[trace.len() - 1].residual;
            let before = trace[trace.len() - 1 - w].residual;
            if !(last < 0.1 * before) {
                break SolveStatus::IterationLimit;
            }
        }

        let sigma = centering_sigma(mu);
        let step = match newton_step(qp, &it, &pert, sigma) {
            Ok(step) => step,
            Err(e) => {
                log::debug!("{}: newton step failed: {e}", qp.name());
                break SolveStatus::NumericalFailure;
            }
        };
        let (alpha_p, alpha_d) = step_lengths(&it, &pert, &step.dx, &step.ds, opts.alpha_bar);
        let next = Iterate::new(
            &it.x + &step.dx * alpha_p,
            &it.y + &step.dy * alpha_d,
            &it.s + &step.ds * alpha_d,
        );
        pert = match shrink_perturbations(&pert, &next, opts.shrink_fraction) {
            Ok(p) => p,
            Err(e) => {
                log::debug!("{}: shrink failed: {e}", qp.name());
                break SolveStatus::NumericalFailure;
            }
        };
        it = next;
        prediction = prediction.update(&it.x, &it.s, opts.prediction_threshold)?;

        let record = IterationRecord {
            iteration: trace.len() + 1,
            mu_lambda: mu_lambda(&it, &pert)?,
            mu: it.x.dot(&it.s) / n as f64,
            residual: relative_residual(qp, &it, &pert)?,
            alpha_p,
            alpha_d,
            sigma,
            lambda_inf: pert.lambda.amax(),
            phi_inf: pert.phi.amax(),
            predicted_active: prediction.active.clone(),
        };
        log::trace!(
            "{} it {:3} mu_l {:.3e} res {:.3e} ap {:.3} ad {:.3}",
            qp.name(),
            record.iteration,
            record.mu_lambda,
            record.residual,
            alpha_p,
            alpha_d
        );
        trace.push(record);
    };

    Ok(SolveReport {
        final_iterate: it,
        final_perturbation: pert,
        iterations: trace.len(),
        trace,
        status,
        prediction,
    })
}
