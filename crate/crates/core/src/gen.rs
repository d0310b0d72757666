//! Seeded random test problems.
//!
//! All randomness comes from a ChaCha8 stream seeded with a `u64`; floats are
//! drawn with rand's 53-bit mapping, so a seed and parameter set identify a
//! problem exactly on every platform.
//!
//! - QTS1: a feasible (not necessarily optimal) point is fixed first and the
//!   data `b = Ax`, `c = Aᵀy + s − Hx` are built around it.
//! - QTS2: as QTS1, but the point is complementary with fewer than `m`
//!   positive `x` entries and fewer than `n − m` positive `s` entries, so it
//!   is a degenerate optimal solution.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{self, DenseMatrix, Vector};
use crate::model::{Iterate, StandardQP};
use crate::{Error, Result};

/// Shift added to the first `m` columns of a rank-deficient constraint matrix.
const RANK_FIX: f64 = 1e-2;
const MAX_REDRAWS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    Qts1,
    Qts2,
}

impl ProblemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Qts1 => "qts1",
            Self::Qts2 => "qts2",
        }
    }
}

impl std::str::FromStr for ProblemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qts1" => Ok(Self::Qts1),
            "qts2" => Ok(Self::Qts2),
            other => Err(Error::InvalidParameter(format!(
                "unknown generator `{other}`"
            ))),
        }
    }
}

/// Generator parameters. Dimension ranges are inclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub seed: u64,
    pub m_range: (usize, usize),
    pub n_range: (usize, usize),
    pub density: f64,
    pub scale: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            seed: 0,
            m_range: (11, 199),
            n_range: (21, 499),
            density: 0.5,
            scale: 1.0,
        }
    }
}

impl GenParams {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    /// Fixes `m` and `n`.
    pub fn with_dims(mut self, m: usize, n: usize) -> Self {
        self.m_range = (m, m);
        self.n_range = (n, n);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.density > 0.0 && self.density <= 1.0) {
            return bad(format!("density {} not in (0,1]", self.density));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return bad(format!("scale {} must be positive", self.scale));
        }
        let (m0, m1) = self.m_range;
        let (n0, n1) = self.n_range;
        if m0 == 0 || m0 > m1 || n0 > n1 {
            return bad(format!(
                "empty dimension ranges m {:?}, n {:?}",
                self.m_range, self.n_range
            ));
        }
        if n1 <= m0 {
            return bad(format!("n range {:?} leaves no n > m", self.n_range));
        }
        Ok(())
    }
}

/// Problem plus the point it was built around.
#[derive(Debug, Clone)]
pub struct Generated {
    pub qp: StandardQP,
    pub point: Iterate,
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Uniform on `(0, scale]`.
fn magnitude(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    scale * (1.0 - rng.random::<f64>())
}

fn draw_dims(rng: &mut ChaCha8Rng, p: &GenParams) -> (usize, usize) {
    let (n0, n1) = p.n_range;
    let m = rng.random_range(p.m_range.0..=p.m_range.1.min(n1 - 1));
    let n = rng.random_range(n0.max(m + 1)..=n1);
    (m, n)
}

fn draw_constraints(rng: &mut ChaCha8Rng, m: usize, n: usize, density: f64) -> Result<DenseMatrix> {
    for _ in 0..MAX_REDRAWS {
        let mut a = DenseMatrix::zeros(m, n);
        for i in 0..m {
            for j in 0..n {
                if rng.random::<f64>() < density {
                    a[(i, j)] = uniform(rng, -1.0, 1.0);
                }
            }
        }
        if linalg::numerical_rank(&a, 1e-10) < m {
            for i in 0..m {
                a[(i, i)] += RANK_FIX;
            }
        }
        if linalg::numerical_rank(&a, 1e-10) == m {
            return Ok(a);
        }
    }
    Err(Error::Generation(format!(
        "no full-rank {m}x{n} constraint matrix after {MAX_REDRAWS} draws"
    )))
}

/// `H = BᵀB` with dense uniform `B`, symmetrized exactly.
fn draw_hessian(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    let b = DenseMatrix::from_fn(n, n, |_, _| uniform(rng, -1.0, 1.0));
    let h = b.tr_mul(&b);
    (&h + h.transpose()) * 0.5
}

fn assemble(name: String, h: DenseMatrix, a: DenseMatrix, point: Iterate) -> Result<Generated> {
    let b = &a * &point.x;
    let c = a.tr_mul(&point.y) + &point.s - &h * &point.x;
    let qp = StandardQP::new(name, h, a, b, c)?;
    Ok(Generated { qp, point })
}

/// QTS1: each `x_i` and `s_i` is independently positive with probability
/// `density`.
pub fn generate_qts1(params: &GenParams) -> Result<Generated> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (m, n) = draw_dims(&mut rng, params);
    let a = draw_constraints(&mut rng, m, n, params.density)?;
    let h = draw_hessian(&mut rng, n);
    let sparse = |rng: &mut ChaCha8Rng| {
        Vector::from_fn(n, |_, _| {
            if rng.random::<f64>() < params.density {
                magnitude(rng, params.scale)
            } else {
                0.0
            }
        })
    };
    let x = sparse(&mut rng);
    let s = sparse(&mut rng);
    let y = Vector::from_fn(m, |_, _| uniform(&mut rng, -1.0, 1.0));
    assemble(format!("QTS1-{}", params.seed), h, a, Iterate::new(x, y, s))
}

/// QTS2: complementary `(x, s)` with `|supp x| = min(m−1, ⌈density·n⌉)` and
/// `|supp s| = min(n−m−1, ⌈density·n⌉)` on disjoint random supports.
pub fn generate_qts2(params: &GenParams) -> Result<Generated> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (m, n) = draw_dims(&mut rng, params);
    let a = draw_constraints(&mut rng, m, n, params.density)?;
    let h = draw_hessian(&mut rng, n);

    let target = (params.density * n as f64).ceil() as usize;
    let kx = target.min(m - 1);
    let ks = target.min(n - m - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut x = Vector::zeros(n);
    let mut s = Vector::zeros(n);
    for &i in &order[..kx] {
        x[i] = magnitude(&mut rng, params.scale);
    }
    for &i in &order[kx..kx + ks] {
        s[i] = magnitude(&mut rng, params.scale);
    }
    let y = Vector::from_fn(m, |_, _| uniform(&mut rng, -1.0, 1.0));
    assemble(format!("QTS2-{}", params.seed), h, a, Iterate::new(x, y, s))
}

pub fn generate(kind: ProblemKind, params: &GenParams) -> Result<Generated> {
    match kind {
        ProblemKind::Qts1 => generate_qts1(params),
        ProblemKind::Qts2 => generate_qts2(params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{kkt_residuals, optimal_partition, Perturbation};

    fn small(seed: u64) -> GenParams {
        GenParams {
            seed,
            m_range: (4, 12),
            n_range: (9, 30),
            ..GenParams::default()
        }
    }

    #[test]
    fn qts1_point_satisfies_equations() {
        for seed in 0..5 {
            let g = generate_qts1(&small(seed)).unwrap();
            let r = kkt_residuals(&g.qp, &g.point, &Perturbation::zeros(g.qp.n())).unwrap();
            let scale = 1.0 + g.qp.h().amax() * g.qp.n() as f64;
            assert!(r.primal.amax() < 1e-12 * scale);
            assert!(r.dual.amax() < 1e-12 * scale);
            assert!(g.qp.m() < g.qp.n());
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let a = generate_qts1(&small(42)).unwrap();
        let b = generate_qts1(&small(42)).unwrap();
        assert_eq!(a.qp, b.qp);
        assert_eq!(a.point, b.point);
        let c = generate_qts1(&small(43)).unwrap();
        assert_ne!(a.qp, c.qp);
    }

    #[test]
    fn forced_dims_give_psd_hessian() {
        let g = generate_qts1(&GenParams::with_seed(1).with_dims(5, 10)).unwrap();
        assert_eq!((g.qp.m(), g.qp.n()), (5, 10));
        assert!(linalg::is_positive_semidefinite(g.qp.h(), 1e-10).unwrap());
    }

    #[test]
    fn qts2_point_is_degenerate_solution() {
        for seed in 0..5 {
            let g = generate_qts2(&small(seed)).unwrap();
            let (m, n) = (g.qp.m(), g.qp.n());
            let p = &g.point;
            assert!(p.x.component_mul(&p.s).iter().all(|&v| v == 0.0));
            assert!(p.x.iter().filter(|&&v| v > 0.0).count() < m);
            assert!(p.s.iter().filter(|&&v| v > 0.0).count() < n - m);
            let part = optimal_partition(&p.x, &p.s, 0.0).unwrap();
            assert!(!part.t.is_empty());
        }
    }

    #[test]
    fn bad_params_rejected() {
        let p = GenParams {
            density: 0.0,
            ..GenParams::default()
        };
        assert!(generate_qts1(&p).is_err());
        assert!(generate_qts2(&GenParams::default().with_dims(10, 10)).is_err());
    }
}
