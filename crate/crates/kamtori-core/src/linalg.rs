//! Small dense complex linear algebra: LU with partial pivoting for the
//! homological blocks and a cyclic Jacobi eigensolver for Hermitian matrices
//! (singular values via `A^H A`). Block dimensions here are tiny, so no
//! sparse machinery.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::math;
use crate::series::{cabs, C64};

#[derive(Clone, Debug, PartialEq)]
pub enum LinalgError {
    Singular { pivot_row: usize },
    NotSquare { len: usize },
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::Singular { pivot_row } => {
                write!(f, "singular matrix (zero pivot at row {pivot_row})")
            }
            LinalgError::NotSquare { len } => write!(f, "buffer of length {len} is not square"),
        }
    }
}

impl core::error::Error for LinalgError {}

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    pub n: usize,
    pub data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix { n, data: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.n + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.n + c] = v;
    }

    pub fn add_assign_scaled(&mut self, other: &CMatrix, a: C64) {
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * *y;
        }
    }

    /// `A^H A`, Hermitian positive semidefinite.
    pub fn gram(&self) -> CMatrix {
        let n = self.n;
        let mut g = CMatrix::zeros(n);
        for r in 0..n {
            for c in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for t in 0..n {
                    acc += self.at(t, r).conj() * self.at(t, c);
                }
                g.set(r, c, acc);
            }
        }
        g
    }

    /// Eigenvalues of a Hermitian matrix by cyclic Jacobi with complex
    /// rotations. Returns them sorted ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let n = self.n;
        let mut h = self.clone();
        if n == 1 {
            return vec![h.at(0, 0).re];
        }
        let max_sweeps = 60;
        for _ in 0..max_sweeps {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += cabs(h.at(p, q));
                }
            }
            let scale: f64 = (0..n).map(|i| math::abs(h.at(i, i).re)).fold(0.0, f64::max);
            if off <= 1e-15 * (1.0 + scale) {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let hpq = h.at(p, q);
                    let apq = cabs(hpq);
                    if apq <= 1e-300 {
                        continue;
                    }
                    let app = h.at(p, p).re;
                    let aqq = h.at(q, q).re;
                    let phase = hpq / apq; // e^{i phi}
                    let tau = (aqq - app) / (2.0 * apq);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + math::sqrt(1.0 + tau * tau))
                    } else {
                        -1.0 / (-tau + math::sqrt(1.0 + tau * tau))
                    };
                    let c = 1.0 / math::sqrt(1.0 + t * t);
                    let s = t * c;
                    // Columns p, q: G_pp = c, G_pq = s*phase, G_qp = -s*conj(phase), G_qq = c
                    for r in 0..n {
                        let hrp = h.at(r, p);
                        let hrq = h.at(r, q);
                        h.set(r, p, hrp * c - hrq * s * phase.conj());
                        h.set(r, q, hrp * s * phase + hrq * c);
                    }
                    for r in 0..n {
                        let hpr = h.at(p, r);
                        let hqr = h.at(q, r);
                        h.set(p, r, hpr * c - hqr * s * phase);
                        h.set(q, r, hpr * s * phase.conj() + hqr * c);
                    }
                }
            }
        }
        let mut eigs: Vec<f64> = (0..n).map(|i| h.at(i, i).re).collect();
        eigs.sort_unstable_by(|a, b| a.total_cmp(b));
        eigs
    }

    /// Smallest singular value via the Gram matrix.
    pub fn smallest_singular_value(&self) -> f64 {
        let eigs = self.gram().hermitian_eigenvalues();
        math::sqrt(eigs[0].max(0.0))
    }

    /// Largest singular value via the Gram matrix.
    pub fn largest_singular_value(&self) -> f64 {
        let eigs = self.gram().hermitian_eigenvalues();
        math::sqrt(eigs[eigs.len() - 1].max(0.0))
    }

    /// 2-norm condition estimate `sigma_max / sigma_min`.
    pub fn condition_estimate(&self) -> f64 {
        let eigs = self.gram().hermitian_eigenvalues();
        let lo = eigs[0].max(0.0);
        let hi = eigs[eigs.len() - 1].max(0.0);
        if lo == 0.0 {
            f64::INFINITY
        } else {
            math::sqrt(hi / lo)
        }
    }
}

/// Solves `A x = b` in place by LU with partial pivoting; `b` becomes `x`.
pub fn lu_solve(a: &CMatrix, b: &mut [C64]) -> Result<(), LinalgError> {
    let n = a.n;
    if b.len() != n {
        return Err(LinalgError::NotSquare { len: b.len() });
    }
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let mut best = col;
        let mut best_mag = cabs(lu.at(col, col));
        for r in (col + 1)..n {
            let mag = cabs(lu.at(r, col));
            if mag > best_mag {
                best = r;
                best_mag = mag;
            }
        }
        if best_mag <= 1e-300 {
            return Err(LinalgError::Singular { pivot_row: col });
        }
        if best != col {
            for c in 0..n {
                let tmp = lu.at(col, c);
                lu.set(col, c, lu.at(best, c));
                lu.set(best, c, tmp);
            }
            perm.swap(col, best);
        }
        let pivot = lu.at(col, col);
        for r in (col + 1)..n {
            let factor = lu.at(r, col) / pivot;
            lu.set(r, col, factor);
            for c in (col + 1)..n {
                let v = lu.at(r, c) - factor * lu.at(col, c);
                lu.set(r, c, v);
            }
        }
    }
    // Apply permutation to b.
    let orig: Vec<C64> = b.to_vec();
    for (i, &p) in perm.iter().enumerate() {
        b[i] = orig[p];
    }
    // Forward substitution (unit lower).
    for r in 1..n {
        let mut acc = b[r];
        for c in 0..r {
            acc -= lu.at(r, c) * b[c];
        }
        b[r] = acc;
    }
    // Back substitution.
    for r in (0..n).rev() {
        let mut acc = b[r];
        for c in (r + 1)..n {
            acc -= lu.at(r, c) * b[c];
        }
        b[r] = acc / lu.at(r, r);
    }
    Ok(())
}

/// Solves a small real system by routing through the complex LU.
pub fn solve_real(a: &[f64], b: &[f64], n: usize) -> Result<Vec<f64>, LinalgError> {
    let mut m = CMatrix::zeros(n);
    for r in 0..n {
        for c in 0..n {
            m.set(r, c, C64::new(a[r * n + c], 0.0));
        }
    }
    let mut rhs: Vec<C64> = b.iter().map(|&x| C64::new(x, 0.0)).collect();
    lu_solve(&m, &mut rhs)?;
    Ok(rhs.iter().map(|c| c.re).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_known_system() {
        let mut a = CMatrix::zeros(2);
        a.set(0, 0, C64::new(2.0, 0.0));
        a.set(0, 1, C64::new(1.0, 1.0));
        a.set(1, 0, C64::new(0.0, -1.0));
        a.set(1, 1, C64::new(3.0, 0.0));
        let x_true = [C64::new(1.0, -2.0), C64::new(0.5, 0.25)];
        let mut b = [
            a.at(0, 0) * x_true[0] + a.at(0, 1) * x_true[1],
            a.at(1, 0) * x_true[0] + a.at(1, 1) * x_true[1],
        ];
        lu_solve(&a, &mut b).unwrap();
        for (got, want) in b.iter().zip(&x_true) {
            assert!(cabs(*got - *want) < 1e-13);
        }
    }

    #[test]
    fn lu_reports_singular() {
        let mut a = CMatrix::zeros(2);
        a.set(0, 0, C64::new(1.0, 0.0));
        a.set(0, 1, C64::new(2.0, 0.0));
        a.set(1, 0, C64::new(2.0, 0.0));
        a.set(1, 1, C64::new(4.0, 0.0));
        let mut b = [C64::new(1.0, 0.0), C64::new(1.0, 0.0)];
        assert!(matches!(lu_solve(&a, &mut b), Err(LinalgError::Singular { .. })));
    }

    #[test]
    fn random_residuals_are_small() {
        use rand_chacha::rand_core::{RngCore, SeedableRng};
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let uf = |rng: &mut ChaCha8Rng| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
        for n in [1usize, 2, 3, 5, 8] {
            let mut a = CMatrix::zeros(n);
            for r in 0..n {
                for c in 0..n {
                    a.set(r, c, C64::new(uf(&mut rng), uf(&mut rng)));
                }
                // diagonal boost keeps the instances well conditioned
                let d = a.at(r, r) + C64::new(2.0, 0.0);
                a.set(r, r, d);
            }
            let b0: Vec<C64> = (0..n).map(|_| C64::new(uf(&mut rng), uf(&mut rng))).collect();
            let mut x = b0.clone();
            lu_solve(&a, &mut x).unwrap();
            for r in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for c in 0..n {
                    acc += a.at(r, c) * x[c];
                }
                assert!(cabs(acc - b0[r]) < 1e-12);
            }
        }
    }

    #[test]
    fn hermitian_eigenvalues_match_closed_forms() {
        // diag
        let mut d = CMatrix::zeros(3);
        d.set(0, 0, C64::new(3.0, 0.0));
        d.set(1, 1, C64::new(-1.0, 0.0));
        d.set(2, 2, C64::new(0.5, 0.0));
        let eigs = d.hermitian_eigenvalues();
        assert!((eigs[0] + 1.0).abs() < 1e-14);
        assert!((eigs[1] - 0.5).abs() < 1e-14);
        assert!((eigs[2] - 3.0).abs() < 1e-14);

        // 2x2 Hermitian with complex off-diagonal: eig = (a+d)/2 +- sqrt(((a-d)/2)^2 + |b|^2)
        let mut h = CMatrix::zeros(2);
        h.set(0, 0, C64::new(1.0, 0.0));
        h.set(1, 1, C64::new(2.0, 0.0));
        h.set(0, 1, C64::new(0.3, -0.4));
        h.set(1, 0, C64::new(0.3, 0.4));
        let eigs = h.hermitian_eigenvalues();
        let mid = 1.5;
        let rad = math::sqrt(0.25 + 0.25);
        assert!((eigs[0] - (mid - rad)).abs() < 1e-12);
        assert!((eigs[1] - (mid + rad)).abs() < 1e-12);
    }

    #[test]
    fn singular_values_of_scalar_multiple_of_identity() {
        let n = 4;
        let mut a = CMatrix::zeros(n);
        for i in 0..n {
            a.set(i, i, C64::new(0.0, -0.75));
        }
        assert!((a.smallest_singular_value() - 0.75).abs() < 1e-13);
        assert!((a.largest_singular_value() - 0.75).abs() < 1e-13);
    }
}
