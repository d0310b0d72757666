//! Primal active-set method for `min ½xᵀHx + cᵀx, Ax = b, x ≥ 0`, plus the
//! crossover pieces: sub-problem extraction on a predicted active set and the
//! feasibility/objective scores of the lifted solution.
//!
//! The working set is the set of variables fixed at zero. Phase 1 finds a
//! vertex with a dense tableau simplex (Bland's rule), so the first free set
//! is a basis and the reduced Hessian is trivially positive definite. Phase 2
//! keeps it that way: a variable is released along the direction that keeps
//! `Ax = b`, and when that direction has no curvature the step must be
//! blocked by a bound.

use crate::linalg::{self, submatrix, subvector, DenseMatrix, SymmetricFactorization, Vector};
use crate::model::{IndexSet, StandardQP};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSetOptions {
    /// Relative tolerance for stationarity, multipliers and pivots.
    pub tolerance: f64,
    /// Consecutive zero-length steps before switching to lowest-index release.
    pub degenerate_switch: usize,
    /// Working-set changes allowed per variable.
    pub cycle_factor: usize,
}

impl Default for ActiveSetOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            degenerate_switch: 5,
            cycle_factor: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSetSolution {
    pub x: Vector,
    pub y: Vector,
    /// Bound multipliers `Hx + c − Aᵀy`.
    pub z: Vector,
    /// Working-set changes in phase 2.
    pub iterations: usize,
    pub phase1_pivots: usize,
}

/// Feasible vertex from phase 1 and the rows that stay linearly independent.
struct Vertex {
    x: Vector,
    basis: Vec<usize>,
    rows: Vec<usize>,
    pivots: usize,
}

fn pivot(t: &mut DenseMatrix, r: usize, j: usize) {
    let w = t.ncols();
    let p = t[(r, j)];
    for k in 0..w {
        t[(r, k)] /= p;
    }
    for i in 0..t.nrows() {
        if i == r {
            continue;
        }
        let f = t[(i, j)];
        if f != 0.0 {
            for k in 0..w {
                t[(i, k)] -= f * t[(r, k)];
            }
            t[(i, j)] = 0.0;
        }
    }
}

/// Rows of the `m×k` full-column-rank matrix picked by partial pivoting.
fn independent_rows(ab: &DenseMatrix) -> Vec<usize> {
    let (m, k) = ab.shape();
    let mut w = ab.clone();
    let mut left: Vec<usize> = (0..m).collect();
    let mut chosen = Vec::with_capacity(k);
    for col in 0..k {
        let (pos, &r) = left
            .iter()
            .enumerate()
            .max_by(|a, b| w[(*a.1, col)].abs().total_cmp(&w[(*b.1, col)].abs()))
            .expect("rank k implies enough rows");
        left.remove(pos);
        let piv = w[(r, col)];
        for &i in &left {
            let f = w[(i, col)] / piv;
            if f != 0.0 {
                for c in col..k {
                    w[(i, c)] -= f * w[(r, c)];
                }
            }
        }
        chosen.push(r);
    }
    chosen.sort_unstable();
    chosen
}

fn phase_one(a: &DenseMatrix, b: &Vector, tol: f64, limit: usize) -> Result<Vertex> {
    let (m, n) = a.shape();
    let rhs = n + m;
    let mut t = DenseMatrix::zeros(m + 1, rhs + 1);
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[(i, j)] = sign * a[(i, j)];
        }
        t[(i, n + i)] = 1.0;
        t[(i, rhs)] = sign * b[i];
    }
    for j in (0..n).chain(std::iter::once(rhs)) {
        t[(m, j)] = -(0..m).map(|i| t[(i, j)]).sum::<f64>();
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let scale = 1.0 + a.amax().max(b.amax());
    let piv_tol = tol * scale;
    let mut pivots = 0;

    while let Some(j) = (0..n).find(|&j| t[(m, j)] < -piv_tol) {
        let mut best: Option<(f64, usize)> = None;
        for i in 0..m {
            if t[(i, j)] > piv_tol {
                let ratio = t[(i, rhs)] / t[(i, j)];
                let better = match best {
                    None => true,
                    Some((r, bi)) => ratio < r || (ratio == r && basis[i] < basis[bi]),
                };
                if better {
                    best = Some((ratio, i));
                }
            }
        }
        let Some((_, r)) = best else { break };
        pivot(&mut t, r, j);
        basis[r] = j;
        pivots += 1;
        if pivots > limit {
            return Err(Error::CycleLimit(limit));
        }
    }

    let infeasibility = -t[(m, rhs)];
    if infeasibility > 1e-9 * (1.0 + b.amax()) {
        return Err(Error::Infeasible(infeasibility));
    }
    for r in 0..m {
        if basis[r] < n {
            continue;
        }
        let cand = (0..n)
            .filter(|j| !basis.contains(j))
            .max_by(|&p, &q| t[(r, p)].abs().total_cmp(&t[(r, q)].abs()));
        if let Some(j) = cand {
            if t[(r, j)].abs() > piv_tol {
                pivot(&mut t, r, j);
                basis[r] = j;
            }
        }
    }
    let mut cols: Vec<usize> = basis.iter().copied().filter(|&j| j < n).collect();
    cols.sort_unstable();
    let all_rows: Vec<usize> = (0..m).collect();
    let rows = independent_rows(&submatrix(a, &all_rows, &cols));
    let mut x = Vector::zeros(n);
    if !cols.is_empty() {
        let ab = submatrix(a, &rows, &cols);
        let xb = ab
            .lu()
            .solve(&subvector(b, &rows))
            .ok_or(Error::Singular(cols.len()))?;
        for (k, &j) in cols.iter().enumerate() {
            x[j] = xb[k].max(0.0);
        }
    }
    Ok(Vertex {
        x,
        basis: cols,
        rows,
        pivots,
    })
}

/// Multipliers `y` with `g − Aᵀy` zero on the positive components of `x` and
/// nonnegative on the zero ones, found as a phase-1 feasibility problem.
fn optimality_certificate(
    a: &DenseMatrix,
    g: &Vector,
    x: &Vector,
    mult_tol: f64,
    tol: f64,
) -> Option<Vector> {
    let (k, n) = a.shape();
    let zero_tol = tol * (1.0 + x.amax());
    let zeros: Vec<usize> = (0..n).filter(|&i| x[i] <= zero_tol).collect();
    let mut lp = DenseMatrix::zeros(n, 2 * k + zeros.len());
    for i in 0..n {
        for r in 0..k {
            lp[(i, r)] = a[(r, i)];
            lp[(i, k + r)] = -a[(r, i)];
        }
    }
    for (col, &i) in zeros.iter().enumerate() {
        lp[(i, 2 * k + col)] = 1.0;
    }
    let v = phase_one(&lp, g, tol, 50 * (n + lp.ncols())).ok()?;
    let y = Vector::from_fn(k, |r, _| v.x[r] - v.x[k + r]);
    let z = g - a.tr_mul(&y);
    let ok = (0..n).all(|i| {
        if x[i] <= zero_tol {
            z[i] >= -mult_tol
        } else {
            z[i].abs() <= mult_tol
        }
    });
    ok.then_some(y)
}

/// Solves `[H_FF A_Fᵀ; A_F 0][p; v] = [top; bottom]`.
fn kkt_solve(
    h: &DenseMatrix,
    a: &DenseMatrix,
    free: &[usize],
    top: &Vector,
    bottom: &Vector,
) -> Result<(Vector, Vector)> {
    let nf = free.len();
    let k = a.nrows();
    let kkt = kkt_matrix(h, a, free);
    let mut rhs = Vector::zeros(nf + k);
    rhs.rows_mut(0, nf).copy_from(top);
    rhs.rows_mut(nf, k).copy_from(bottom);
    let sol = linalg::solve_symmetric_indefinite(&kkt, &rhs)?;
    Ok((sol.rows(0, nf).into_owned(), sol.rows(nf, k).into_owned()))
}

fn kkt_matrix(h: &DenseMatrix, a: &DenseMatrix, free: &[usize]) -> DenseMatrix {
    let nf = free.len();
    let k = a.nrows();
    let rows: Vec<usize> = (0..k).collect();
    let af = submatrix(a, &rows, free);
    let mut kkt = DenseMatrix::zeros(nf + k, nf + k);
    kkt.view_mut((0, 0), (nf, nf))
        .copy_from(&submatrix(h, free, free));
    kkt.view_mut((0, nf), (nf, k)).copy_from(&af.transpose());
    kkt.view_mut((nf, 0), (k, nf)).copy_from(&af);
    kkt
}

/// Largest step along `d` keeping free variables nonnegative and the first
/// (lowest-index) blocking variable. Components of `d` below `tol·‖d‖∞` in
/// size are roundoff and never block.
fn ratio_test(x: &Vector, d: &Vector, free: &[usize], tol: f64) -> (f64, Option<usize>) {
    let floor = -tol * d.amax();
    let mut best = (f64::INFINITY, None);
    for &i in free {
        if d[i] < floor {
            let ratio = (-x[i] / d[i]).max(0.0);
            if ratio < best.0 {
                best = (ratio, Some(i));
            }
        }
    }
    best
}

/// Accepts a caller start only if it is already feasible and its support
/// gives a KKT matrix with the inertia of a strictly convex face.
fn usable_start(qp: &StandardQP, start: &Vector) -> Option<Vector> {
    if start.len() != qp.n() || start.iter().any(|v| !v.is_finite()) {
        return None;
    }
    if qp.m() > 0 && linalg::numerical_rank(qp.a(), 1e-10) < qp.m() {
        return None;
    }
    let x = project_start(qp, start)?;
    let free: Vec<usize> = (0..qp.n()).filter(|&i| x[i] > 0.0).collect();
    let fac = SymmetricFactorization::new(&kkt_matrix(qp.h(), qp.a(), &free)).ok()?;
    let inertia = fac.inertia();
    (inertia.positive == free.len() && inertia.negative == qp.m() && inertia.zero == 0).then_some(x)
}

/// Moves `start` onto `{Ax = b, x ≥ 0}` by clipping and minimum-norm corrections
/// on the positive components. Gives up when a correction keeps going negative.
fn project_start(qp: &StandardQP, start: &Vector) -> Option<Vector> {
    let tol = 1e-9 * (1.0 + qp.b().amax());
    let rows: Vec<usize> = (0..qp.m()).collect();
    let mut x = start.map(|v| v.max(0.0));
    for _ in 0..START_PROJECTION_PASSES {
        let r = qp.b() - qp.a() * &x;
        if r.amax() <= tol {
            return Some(x);
        }
        let free: Vec<usize> = (0..qp.n()).filter(|&i| x[i] > 0.0).collect();
        if free.len() < qp.m() {
            return None;
        }
        let delta = linalg::least_squares_min_norm(&submatrix(qp.a(), &rows, &free), &r)
            .ok()?
            .solution;
        for (k, &i) in free.iter().enumerate() {
            x[i] = (x[i] + delta[k]).max(0.0);
        }
    }
    ((qp.b() - qp.a() * &x).amax() <= tol).then_some(x)
}

const START_PROJECTION_PASSES: usize = 5;
const PIVOT_TOL: f64 = 1e-9;

pub fn active_set_solve(qp: &StandardQP, start: Option<&Vector>) -> Result<ActiveSetSolution> {
    active_set_solve_with(qp, start, &ActiveSetOptions::default())
}

/// A warm start that runs into the cycle limit is abandoned for the phase-1
/// vertex; the wasted working-set changes stay in the count.
pub fn active_set_solve_with(
    qp: &StandardQP,
    start: Option<&Vector>,
    opts: &ActiveSetOptions,
) -> Result<ActiveSetSolution> {
    match (start, solve_from(qp, start, opts)) {
        (Some(_), Err(Error::CycleLimit(wasted))) => {
            log::debug!("{}: warm start cycled, restarting from a vertex", qp.name());
            let mut sol = solve_from(qp, None, opts)?;
            sol.iterations += wasted;
            Ok(sol)
        }
        (_, out) => out,
    }
}

fn solve_from(
    qp: &StandardQP,
    start: Option<&Vector>,
    opts: &ActiveSetOptions,
) -> Result<ActiveSetSolution> {
    let (n, m) = (qp.n(), qp.m());
    let limit = opts.cycle_factor * n.max(1);
    if n == 0 {
        if qp.b().amax() > 0.0 {
            return Err(Error::Infeasible(qp.b().amax()));
        }
        return Ok(ActiveSetSolution {
            x: Vector::zeros(0),
            y: Vector::zeros(m),
            z: Vector::zeros(0),
            iterations: 0,
            phase1_pivots: 0,
        });
    }

    let (mut x, free0, rows, phase1_pivots) = match start.and_then(|s| usable_start(qp, s)) {
        Some(x) => {
            let free = (0..n).filter(|&i| x[i] > 0.0).collect::<Vec<_>>();
            (x, free, (0..m).collect::<Vec<_>>(), 0)
        }
        None => {
            let v = phase_one(qp.a(), qp.b(), opts.tolerance, 50 * (n + m))?;
            (v.x, v.basis, v.rows, v.pivots)
        }
    };
    let all_cols: Vec<usize> = (0..n).collect();
    let a = submatrix(qp.a(), &rows, &all_cols);
    let b = subvector(qp.b(), &rows);
    let h = qp.h();
    let c = qp.c();
    let mut is_free = vec![false; n];
    for j in free0 {
        is_free[j] = true;
    }

    let mut changes = 0usize;
    let mut degenerate = 0usize;
    let mut y_rows;
    loop {
        let free: Vec<usize> = (0..n).filter(|&i| is_free[i]).collect();
        let g = h * &x + c;
        let r = &b - &a * &x;
        let (p_f, v) = kkt_solve(h, &a, &free, &-subvector(&g, &free), &r)?;
        y_rows = -v;
        let mut p = Vector::zeros(n);
        for (k, &i) in free.iter().enumerate() {
            p[i] = p_f[k];
        }

        let stat_tol = opts.tolerance * 1e2 * (1.0 + x.amax());
        if p.amax() > stat_tol {
            let (alpha, block) = ratio_test(&x, &p, &free, PIVOT_TOL);
            if alpha >= 1.0 {
                x += &p;
                degenerate = 0;
            } else {
                let k = block.expect("finite ratio has a blocking index");
                x += &p * alpha;
                x[k] = 0.0;
                is_free[k] = false;
                changes += 1;
                degenerate = if alpha == 0.0 { degenerate + 1 } else { 0 };
            }
            clip(&mut x, &is_free);
            if changes > limit {
                return Err(Error::CycleLimit(limit));
            }
            continue;
        }

        // Stationary on the current face: look for a bound to release.
        let z = &g - a.tr_mul(&y_rows);
        let mult_tol = opts.tolerance * 10.0 * (1.0 + g.amax());
        let bland = degenerate >= opts.degenerate_switch;
        let mut release: Option<usize> = None;
        for j in (0..n).filter(|&j| !is_free[j] && z[j] < -mult_tol) {
            match release {
                None => release = Some(j),
                Some(_) if bland => {}
                Some(cur) if z[j] < z[cur] => release = Some(j),
                Some(_) => {}
            }
        }
        let Some(j) = release else { break };
        // After a zero-length step the multipliers are not unique and the
        // releases can cycle at an optimal vertex.
        if degenerate > 0 {
            if let Some(y_cert) = optimality_certificate(&a, &g, &x, mult_tol, opts.tolerance) {
                y_rows = y_cert;
                break;
            }
        }

        let rows_k: Vec<usize> = (0..a.nrows()).collect();
        let (d_f, _) = kkt_solve(
            h,
            &a,
            &free,
            &-submatrix(h, &free, &[j]).column(0).into_owned(),
            &-submatrix(&a, &rows_k, &[j]).column(0).into_owned(),
        )?;
        let mut d = Vector::zeros(n);
        for (k, &i) in free.iter().enumerate() {
            d[i] = d_f[k];
        }
        d[j] = 1.0;
        let kappa = d.dot(&(h * &d));
        let curv_tol = opts.tolerance * (1.0 + h.amax()) * d.norm_squared();
        let alpha_star = if kappa > curv_tol {
            -z[j] / kappa
        } else {
            f64::INFINITY
        };
        let (alpha_max, block) = ratio_test(&x, &d, &free, PIVOT_TOL);
        if alpha_star.is_infinite() && alpha_max.is_infinite() {
            return Err(Error::Unbounded);
        }
        is_free[j] = true;
        changes += 1;
        if alpha_max < alpha_star {
            let k = block.expect("finite ratio has a blocking index");
            x += &d * alpha_max;
            x[k] = 0.0;
            is_free[k] = false;
            changes += 1;
            degenerate = if alpha_max == 0.0 { degenerate + 1 } else { 0 };
        } else {
            x += &d * alpha_star;
            degenerate = 0;
        }
        clip(&mut x, &is_free);
        if changes > limit {
            return Err(Error::CycleLimit(limit));
        }
    }

    let mut y = Vector::zeros(m);
    for (k, &i) in rows.iter().enumerate() {
        y[i] = y_rows[k];
    }
    let z = h * &x + c - qp.a().tr_mul(&y);
    Ok(ActiveSetSolution {
        x,
        y,
        z,
        iterations: changes,
        phase1_pivots,
    })
}

fn clip(x: &mut Vector, is_free: &[bool]) {
    for (i, &f) in is_free.iter().enumerate() {
        if !f || x[i] < 0.0 {
            x[i] = 0.0;
        }
    }
}

/// Problem restricted to the complement of a predicted active set.
#[derive(Debug, Clone)]
pub struct Subproblem {
    pub qp: StandardQP,
    /// Kept (inactive) parent indices, increasing.
    pub kept: Vec<usize>,
    pub parent_n: usize,
}

impl Subproblem {
    /// Parent-sized vector with zeros on the active set.
    pub fn lift(&self, x_sub: &Vector) -> Vector {
        let mut x = Vector::zeros(self.parent_n);
        for (k, &j) in self.kept.iter().enumerate() {
            x[j] = x_sub[k];
        }
        x
    }
}

/// Drops the `active` columns: `H_{Ac,Ac}`, `A_{:,Ac}`, `c_{Ac}`, `b` kept.
pub fn extract_subproblem(qp: &StandardQP, active: &IndexSet) -> Result<Subproblem> {
    let n = qp.n();
    if let Some(&bad) = active.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidParameter(format!(
            "active index {bad} out of range for n = {n}"
        )));
    }
    let kept: Vec<usize> = (0..n).filter(|i| !active.contains(i)).collect();
    if kept.is_empty() && qp.b().amax() > 0.0 {
        return Err(Error::Infeasible(qp.b().amax()));
    }
    let rows: Vec<usize> = (0..qp.m()).collect();
    let sub = StandardQP::new_unchecked(
        qp.name(),
        submatrix(qp.h(), &kept, &kept),
        submatrix(qp.a(), &rows, &kept),
        qp.b().clone(),
        subvector(qp.c(), &kept),
    )?;
    Ok(Subproblem {
        qp: sub,
        kept,
        parent_n: n,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverScore {
    /// `‖A_{Ac} x_sub − b‖∞ / (1 + ‖b‖∞)`
    pub feasibility_error: f64,
    /// `|f(x̄) − f(x_ref)| / (1 + |f(x_ref)|)`
    pub objective_error: f64,
    pub active_set_iterations: usize,
    /// `x_sub` lifted with zeros on the active set.
    pub lifted: Vector,
}

/// Scores a sub-problem point against a reference optimum of the full problem.
pub fn crossover_scores(
    qp: &StandardQP,
    active: &IndexSet,
    x_sub: &Vector,
    x_ref: &Vector,
) -> Result<CrossoverScore> {
    let n = qp.n();
    if x_ref.len() != n {
        return Err(Error::DimensionMismatch {
            context: "reference solution",
            expected: n,
            found: x_ref.len(),
        });
    }
    let kept: Vec<usize> = (0..n).filter(|i| !active.contains(i)).collect();
    if x_sub.len() != kept.len() {
        return Err(Error::DimensionMismatch {
            context: "sub-problem solution",
            expected: kept.len(),
            found: x_sub.len(),
        });
    }
    let mut lifted = Vector::zeros(n);
    for (k, &j) in kept.iter().enumerate() {
        lifted[j] = x_sub[k];
    }
    let feasibility_error = (qp.a() * &lifted - qp.b()).amax() / (1.0 + qp.b().amax());
    let f_ref = qp.objective(x_ref);
    let objective_error = (qp.objective(&lifted) - f_ref).abs() / (1.0 + f_ref.abs());
    Ok(CrossoverScore {
        feasibility_error,
        objective_error,
        active_set_iterations: 0,
        lifted,
    })
}

/// How the sub-problem point was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubproblemStatus {
    Solved,
    /// Inconsistent rows: minimum-norm least-squares point clipped at zero.
    InfeasibleFallback,
}

#[derive(Debug, Clone)]
pub struct CrossoverOutcome {
    pub score: CrossoverScore,
    pub status: SubproblemStatus,
    pub phase1_pivots: usize,
}

/// Fixes `active` at zero, solves the rest with the active-set method and
/// scores the lifted point against `x_ref`. Inconsistent sub-problems fall
/// back to the clipped minimum-norm least-squares point.
pub fn crossover(qp: &StandardQP, active: &IndexSet, x_ref: &Vector) -> Result<CrossoverOutcome> {
    crossover_from(qp, active, x_ref, None)
}

/// [`crossover`] with a warm start: `start` is a full-length point (usually the
/// last interior point iterate) whose kept components seed the active-set method.
pub fn crossover_from(
    qp: &StandardQP,
    active: &IndexSet,
    x_ref: &Vector,
    start: Option<&Vector>,
) -> Result<CrossoverOutcome> {
    let solved = extract_subproblem(qp, active).and_then(|sub| {
        let x0 = start.map(|x| subvector(x, &sub.kept));
        active_set_solve(&sub.qp, x0.as_ref())
    });
    match solved {
        Ok(sol) => {
            let mut score = crossover_scores(qp, active, &sol.x, x_ref)?;
            score.active_set_iterations = sol.iterations;
            Ok(CrossoverOutcome {
                score,
                status: SubproblemStatus::Solved,
                phase1_pivots: sol.phase1_pivots,
            })
        }
        Err(Error::Infeasible(_)) => {
            let kept: Vec<usize> = (0..qp.n()).filter(|i| !active.contains(i)).collect();
            let rows: Vec<usize> = (0..qp.m()).collect();
            let x_sub = if kept.is_empty() {
                Vector::zeros(0)
            } else {
                linalg::least_squares_min_norm(&submatrix(qp.a(), &rows, &kept), qp.b())?
                    .solution
                    .map(|v| v.max(0.0))
            };
            Ok(CrossoverOutcome {
                score: crossover_scores(qp, active, &x_sub, x_ref)?,
                status: SubproblemStatus::InfeasibleFallback,
                phase1_pivots: 0,
            })
        }
        Err(e) => Err(e),
    }
}
