//! Bunch–Kaufman symmetric indefinite factorization `P K Pᵀ = L D Lᵀ`.
//!
//! `D` is block diagonal with 1×1 and 2×2 blocks, `L` is unit lower
//! triangular. Storage is a dense row-major square whose lower triangle holds
//! the multipliers of `L` below the diagonal blocks and `D` on (and directly
//! below) the diagonal.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Pivot-size threshold `(1 + √17) / 8`, which bounds element growth.
const ALPHA: f64 = 0.640_388_203_202_208;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Block {
    One(usize),
    Two(usize),
}

/// A completed `L D Lᵀ` factorization of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricFactorization {
    n: usize,
    a: Vec<f64>,
    perm: Vec<usize>,
    blocks: Vec<Block>,
}

/// Number of positive, negative and zero eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

impl SymmetricFactorization {
    /// Factors the lower triangle of `k`. The upper triangle is ignored.
    pub fn new(k: &DMatrix<f64>) -> Result<Self> {
        let n = k.nrows();
        if k.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "symmetric factorization",
                expected: n,
                found: k.ncols(),
            });
        }
        let mut a = vec![0.0; n * n];
        let mut scale: f64 = 0.0;
        for i in 0..n {
            for j in 0..=i {
                let v = k[(i, j)];
                if !v.is_finite() {
                    return Err(Error::NonFinite("symmetric factorization"));
                }
                scale = scale.max(v.abs());
                a[i * n + j] = v;
            }
        }
        let tiny = (n.max(1) as f64) * f64::EPSILON * scale;

        let mut perm: Vec<usize> = (0..n).collect();
        let mut blocks = Vec::with_capacity(n);
        let mut col = vec![0.0; n];
        let mut col2 = vec![0.0; n];

        let mut k = 0;
        while k < n {
            let akk = a[k * n + k].abs();
            let (mut imax, mut colmax) = (k, 0.0_f64);
            for i in k + 1..n {
                let v = a[i * n + k].abs();
                if v > colmax {
                    colmax = v;
                    imax = i;
                }
            }
            if akk.max(colmax) <= tiny {
                return Err(Error::Singular(k));
            }

            let (kp, two) = if akk >= ALPHA * colmax {
                (k, false)
            } else {
                let mut rowmax: f64 = 0.0;
                for j in k..imax {
                    rowmax = rowmax.max(a[imax * n + j].abs());
                }
                for i in imax + 1..n {
                    rowmax = rowmax.max(a[i * n + imax].abs());
                }
                if akk >= ALPHA * colmax * (colmax / rowmax) {
                    (k, false)
                } else if a[imax * n + imax].abs() >= ALPHA * rowmax {
                    (imax, false)
                } else {
                    (imax, true)
                }
            };

            let kk = if two { k + 1 } else { k };
            if kp != kk {
                swap_symmetric(&mut a, n, kk, kp);
                perm.swap(kk, kp);
            }

            if !two {
                let d = a[k * n + k];
                if d.abs() <= tiny {
                    return Err(Error::Singular(k));
                }
                for i in k + 1..n {
                    col[i] = a[i * n + k];
                }
                for i in k + 1..n {
                    let l = col[i] / d;
                    let row = &mut a[i * n..i * n + i + 1];
                    for j in k + 1..=i {
                        row[j] -= l * col[j];
                    }
                    row[k] = l;
                }
                blocks.push(Block::One(k));
                k += 1;
            } else {
                let d11 = a[k * n + k];
                let d21 = a[(k + 1) * n + k];
                let d22 = a[(k + 1) * n + k + 1];
                let det = d11 * d22 - d21 * d21;
                if det.abs() <= tiny * tiny || !det.is_finite() {
                    return Err(Error::Singular(k));
                }
                for i in k + 2..n {
                    col[i] = a[i * n + k];
                    col2[i] = a[i * n + k + 1];
                }
                for i in k + 2..n {
                    let l1 = (col[i] * d22 - col2[i] * d21) / det;
                    let l2 = (col2[i] * d11 - col[i] * d21) / det;
                    let row = &mut a[i * n..i * n + i + 1];
                    for j in k + 2..=i {
                        row[j] -= l1 * col[j] + l2 * col2[j];
                    }
                    row[k] = l1;
                    row[k + 1] = l2;
                }
                blocks.push(Block::Two(k));
                k += 2;
            }
        }

        Ok(Self { n, a, perm, blocks })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `K x = rhs` with the stored factors.
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let a = &self.a;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| rhs[p]).collect();

        for block in &self.blocks {
            match *block {
                Block::One(k) => {
                    let yk = y[k];
                    if yk != 0.0 {
                        for i in k + 1..n {
                            y[i] -= a[i * n + k] * yk;
                        }
                    }
                }
                Block::Two(k) => {
                    let (y1, y2) = (y[k], y[k + 1]);
                    for i in k + 2..n {
                        y[i] -= a[i * n + k] * y1 + a[i * n + k + 1] * y2;
                    }
                }
            }
        }

        for block in &self.blocks {
            match *block {
                Block::One(k) => y[k] /= a[k * n + k],
                Block::Two(k) => {
                    let d11 = a[k * n + k];
                    let d21 = a[(k + 1) * n + k];
                    let d22 = a[(k + 1) * n + k + 1];
                    let det = d11 * d22 - d21 * d21;
                    let (y1, y2) = (y[k], y[k + 1]);
                    y[k] = (d22 * y1 - d21 * y2) / det;
                    y[k + 1] = (d11 * y2 - d21 * y1) / det;
                }
            }
        }

        for block in self.blocks.iter().rev() {
            match *block {
                Block::One(k) => {
                    let mut acc = 0.0;
                    for i in k + 1..n {
                        acc += a[i * n + k] * y[i];
                    }
                    y[k] -= acc;
                }
                Block::Two(k) => {
                    let (mut acc1, mut acc2) = (0.0, 0.0);
                    for i in k + 2..n {
                        acc1 += a[i * n + k] * y[i];
                        acc2 += a[i * n + k + 1] * y[i];
                    }
                    y[k] -= acc1;
                    y[k + 1] -= acc2;
                }
            }
        }

        let mut x = DVector::zeros(n);
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }

    /// Inertia of the factored matrix, read off the block diagonal.
    pub fn inertia(&self) -> Inertia {
        let n = self.n;
        let mut inertia = Inertia {
            positive: 0,
            negative: 0,
            zero: 0,
        };
        for block in &self.blocks {
            match *block {
                Block::One(k) => {
                    let d = self.a[k * n + k];
                    if d > 0.0 {
                        inertia.positive += 1;
                    } else if d < 0.0 {
                        inertia.negative += 1;
                    } else {
                        inertia.zero += 1;
                    }
                }
                Block::Two(k) => {
                    let d11 = self.a[k * n + k];
                    let d21 = self.a[(k + 1) * n + k];
                    let d22 = self.a[(k + 1) * n + k + 1];
                    let det = d11 * d22 - d21 * d21;
                    if det < 0.0 {
                        inertia.positive += 1;
                        inertia.negative += 1;
                    } else if d11 + d22 > 0.0 {
                        inertia.positive += 2;
                    } else {
                        inertia.negative += 2;
                    }
                }
            }
        }
        inertia
    }
}

/// Symmetric interchange of rows/columns `p < q` in lower-triangle storage.
fn swap_symmetric(a: &mut [f64], n: usize, p: usize, q: usize) {
    debug_assert!(p < q);
    for j in 0..p {
        a.swap(p * n + j, q * n + j);
    }
    a.swap(p * n + p, q * n + q);
    for i in p + 1..q {
        a.swap(i * n + p, q * n + i);
    }
    for i in q + 1..n {
        a.swap(i * n + p, i * n + q);
    }
}
