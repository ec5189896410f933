//! Assembly and solution of the quasi-linear homological equation
//! `{N, F} + R - [R] - Q = 0` for the step generator `F`, with small-divisor
//! certificates for the scalar divisors `<k, omega>` and the divisor
//! matrices `A_{iota j}`.
//!
//! Blocks are never materialized from symbolic tensor formulas: the linear
//! operator is read off by applying the Poisson bracket with `N` to monomial
//! basis elements, one Fourier mode at a time. Couplings that raise the
//! weighted degree land strictly below the diagonal of the degree-ordered
//! system, which is asserted during assembly, so the solve proceeds
//! blockwise in ascending weighted degree.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::{lu_solve, CMatrix, LinalgError};
use crate::math;
use crate::normal_form::NormalForm;
use crate::series::{cabs, z_bracket, Caps, DomainParams, MultiIndex, TfSeries, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DivisorKind {
    Scalar,
    Matrix { dim: usize },
}

/// Witness that one nonresonance condition holds with positive margin.
#[derive(Clone, Debug, PartialEq)]
pub struct SmallDivisorCert {
    pub k: Vec<i32>,
    /// Representative `(iota, j)` class; the divisor matrix depends only on
    /// the total `z`-degree `|j|`, so one certificate covers every `iota`.
    pub w_class: (Vec<u32>, Vec<u32>),
    pub kind: DivisorKind,
    pub margin: f64,
}

/// First failing condition encountered during certification.
#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceViolation {
    pub k: Vec<i32>,
    pub class: Option<(Vec<u32>, Vec<u32>)>,
    pub value: f64,
    pub bound: f64,
}

impl fmt::Display for ResonanceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.class {
            None => write!(
                f,
                "resonance at k = {:?}: |<k,omega>| = {:e} <= {:e}",
                self.k, self.value, self.bound
            ),
            Some((_, j)) => write!(
                f,
                "resonance at k = {:?}, class |j| = {}: sigma_min = {:e} <= {:e}",
                self.k,
                j.iter().sum::<u32>(),
                self.value,
                self.bound
            ),
        }
    }
}

impl core::error::Error for ResonanceViolation {}

#[derive(Clone, Debug, PartialEq)]
pub enum SolveError {
    ZeroMode,
    SingularBlock { k: Vec<i32>, weight: u32, source: LinalgError },
    Triangularity { k: Vec<i32>, from_weight: u32, to_weight: u32 },
    MissingCertificate { k: Vec<i32> },
    Series(crate::series::SeriesError),
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::ZeroMode => write!(f, "k = 0 has no divisor matrix"),
            SolveError::SingularBlock { k, weight, source } => {
                write!(f, "singular block at k = {k:?}, weight {weight}: {source}")
            }
            SolveError::Triangularity { k, from_weight, to_weight } => write!(
                f,
                "degree-lowering coupling at k = {k:?}: weight {from_weight} -> {to_weight}"
            ),
            SolveError::MissingCertificate { k } => {
                write!(f, "no nonresonance certificate covers k = {k:?}")
            }
            SolveError::Series(e) => write!(f, "series error: {e}"),
        }
    }
}

impl core::error::Error for SolveError {}

impl From<crate::series::SeriesError> for SolveError {
    fn from(e: crate::series::SeriesError) -> Self {
        SolveError::Series(e)
    }
}

/// All `z`-exponent vectors of length `zn` with total degree `deg`, in
/// lexicographic order.
pub fn z_monomials(zn: usize, deg: u32) -> Vec<Vec<u32>> {
    fn rec(out: &mut Vec<Vec<u32>>, stem: &mut Vec<u32>, left: u32, pos: usize, zn: usize) {
        if pos == zn - 1 {
            stem.push(left);
            out.push(stem.clone());
            stem.pop();
            return;
        }
        for e in (0..=left).rev() {
            stem.push(e);
            rec(out, stem, left - e, pos + 1, zn);
            stem.pop();
        }
    }
    let mut out = Vec::new();
    if zn == 0 {
        return out;
    }
    rec(&mut out, &mut Vec::with_capacity(zn), deg, 0, zn);
    out.sort();
    out
}

/// All `(iota, j)` with `2|iota| + |j| <= m`, ordered by ascending weighted
/// degree, ties broken lexicographically. This is the per-mode coefficient
/// basis of the generator.
pub fn weighted_basis(n: usize, zn: usize, m: u32) -> Vec<(Vec<u32>, Vec<u32>)> {
    let mut out = Vec::new();
    for w in 0..=m {
        let mut at_w = Vec::new();
        for wy2 in (0..=w).step_by(2) {
            let wy = wy2 / 2;
            let wz = w - wy2;
            for iota in z_monomials(n, wy) {
                for j in z_monomials(zn, wz) {
                    at_w.push((iota.clone(), j));
                }
            }
        }
        at_w.sort();
        out.extend(at_w);
    }
    out
}

/// Quadratic form series `(1/2) z^T H z` from a dense Hessian.
fn quadratic_from_hessian(dims: crate::series::Dims, hess: &[f64]) -> TfSeries {
    let zn = dims.zn();
    let caps = Caps::new(0, 2);
    let mut g2 = TfSeries::zero(dims, caps);
    let zk = vec![0i32; dims.n];
    let zi = vec![0u32; dims.n];
    for a in 0..zn {
        for b in a..zn {
            let coeff = if a == b { hess[a * zn + a] / 2.0 } else { hess[a * zn + b] };
            if coeff != 0.0 {
                let mut j = vec![0u32; zn];
                j[a] += 1;
                j[b] += 1;
                g2.add_term(&zk, &zi, &j, C64::new(coeff, 0.0)).expect("quad term");
            }
        }
    }
    g2
}

/// Matrix of `T -> (Hess g(0) . z) J d_z T` on the `z`-monomials of total
/// degree `deg`, read off column by column through the series algebra.
fn stilde_matrix(dims: crate::series::Dims, hess: &[f64], deg: u32) -> CMatrix {
    let zn = dims.zn();
    let basis = z_monomials(zn, deg);
    let dim = basis.len();
    let g2 = quadratic_from_hessian(dims, hess);
    let caps = Caps::new(0, deg + 2);
    let zk = vec![0i32; dims.n];
    let zi = vec![0u32; dims.n];
    let mut mat = CMatrix::zeros(dim);
    for (col, j) in basis.iter().enumerate() {
        let t = TfSeries::monomial(dims, caps, &zk, &zi, j, C64::new(1.0, 0.0)).expect("monomial");
        let image = z_bracket(&g2, &t, caps).expect("z bracket");
        for (idx, &c) in image.terms() {
            debug_assert_eq!(idx.j_norm(), deg);
            let row = basis.binary_search(&idx.j).expect("image stays in the degree class");
            mat.set(row, col, mat.at(row, col) + c);
        }
    }
    mat
}

/// The divisor matrix `A_{iota j} = i <k/|k|, omega> I + S~ / |k|` on the
/// `z`-monomial basis of degree `|j|`.
pub fn build_divisor_matrix(
    k: &[i32],
    omega: &[f64],
    hess_g0: &[f64],
    class: (&[u32], &[u32]),
) -> Result<CMatrix, SolveError> {
    let k_norm: u32 = k.iter().map(|&ki| ki.unsigned_abs()).sum();
    if k_norm == 0 {
        return Err(SolveError::ZeroMode);
    }
    let n = k.len();
    let zn2 = hess_g0.len();
    let zn = math::sqrt(zn2 as f64) as usize;
    debug_assert_eq!(zn * zn, zn2);
    let dims = crate::series::Dims::new(n, zn / 2);
    let deg: u32 = class.1.iter().sum();
    let mut kw = 0.0;
    for (ki, wi) in k.iter().zip(omega) {
        kw += *ki as f64 * wi;
    }
    let scaled = kw / k_norm as f64;
    let mut a = stilde_matrix(dims, hess_g0, deg);
    let inv_k = 1.0 / k_norm as f64;
    for v in a.data.iter_mut() {
        *v *= inv_k;
    }
    for i in 0..a.n {
        let d = a.at(i, i) + C64::new(0.0, scaled);
        a.set(i, i, d);
    }
    Ok(a)
}

fn hess_is_zero(hess: &[f64]) -> bool {
    hess.iter().all(|&h| h == 0.0)
}

/// Enumerates lattice modes with `k_lo < |k| <= k_hi`, canonical half only
/// (first nonzero component positive); the conditions for `k` and `-k`
/// coincide.
pub fn canonical_modes(n: usize, k_lo: u32, k_hi: u32) -> Vec<Vec<i32>> {
    fn rec(out: &mut Vec<Vec<i32>>, stem: &mut Vec<i32>, budget: i32, pos: usize, n: usize) {
        if pos == n {
            out.push(stem.clone());
            return;
        }
        for v in -budget..=budget {
            stem.push(v);
            rec(out, stem, budget - v.abs(), pos + 1, n);
            stem.pop();
        }
    }
    let mut all = Vec::new();
    rec(&mut all, &mut Vec::with_capacity(n), k_hi as i32, 0, n);
    all.retain(|k| {
        let norm: u32 = k.iter().map(|&ki| ki.unsigned_abs()).sum();
        if norm <= k_lo || norm > k_hi {
            return false;
        }
        for &ki in k {
            if ki > 0 {
                return true;
            }
            if ki < 0 {
                return false;
            }
        }
        false
    });
    all.sort();
    all
}

/// Checks every nonresonance condition for modes in the window
/// `k_lo < |k| <= k_hi` and classes `2|iota| + |j| <= m`, `|j| >= 1`:
/// the scalar bound `|<k, omega>| > gamma/|k|^tau` and the matrix bound
/// `sigma_min(A_{iota j}) > gamma/|k|^tau`. With a vanishing Hessian every
/// matrix condition for a mode collapses to the same scalar value; those
/// duplicates are certified once.
pub fn certify_nonresonance_window(
    omega: &[f64],
    hess_g0: &[f64],
    gamma: f64,
    tau: f64,
    k_lo: u32,
    k_hi: u32,
    m: u32,
) -> Result<Vec<SmallDivisorCert>, ResonanceViolation> {
    let n = omega.len();
    let zn2 = hess_g0.len();
    let zn = math::sqrt(zn2 as f64) as usize;
    let degenerate = hess_is_zero(hess_g0);
    let mut certs = Vec::new();
    for k in canonical_modes(n, k_lo, k_hi) {
        let k_norm: u32 = k.iter().map(|&ki| ki.unsigned_abs()).sum();
        let bound = gamma / math::powf(k_norm as f64, tau);
        let mut kw = 0.0;
        for (ki, wi) in k.iter().zip(omega) {
            kw += *ki as f64 * wi;
        }
        let scalar_value = math::abs(kw);
        if scalar_value <= bound {
            return Err(ResonanceViolation { k, class: None, value: scalar_value, bound });
        }
        certs.push(SmallDivisorCert {
            k: k.clone(),
            w_class: (vec![0; n], vec![0; zn]),
            kind: DivisorKind::Scalar,
            margin: scalar_value - bound,
        });
        let max_jdeg = if degenerate { 1 } else { m };
        for jdeg in 1..=max_jdeg {
            let mut j_rep = vec![0u32; zn];
            j_rep[0] = jdeg;
            let a = build_divisor_matrix(&k, omega, hess_g0, (&vec![0; n], &j_rep))
                .expect("k is nonzero");
            let sigma = a.smallest_singular_value();
            if sigma <= bound {
                return Err(ResonanceViolation {
                    k,
                    class: Some((vec![0; n], j_rep)),
                    value: sigma,
                    bound,
                });
            }
            certs.push(SmallDivisorCert {
                k: k.clone(),
                w_class: (vec![0; n], j_rep),
                kind: DivisorKind::Matrix { dim: a.n },
                margin: sigma - bound,
            });
        }
    }
    Ok(certs)
}

/// Full-ball certification `0 < |k| <= k_plus`.
pub fn certify_nonresonance(
    omega: &[f64],
    hess_g0: &[f64],
    gamma: f64,
    tau: f64,
    k_plus: u32,
    m: u32,
) -> Result<Vec<SmallDivisorCert>, ResonanceViolation> {
    certify_nonresonance_window(omega, hess_g0, gamma, tau, 0, k_plus, m)
}

/// The correction term: the weighted-degree `> m` part of
/// `(d_z g + d_z g_bar) J d_z F`.
pub fn split_q(
    g: &TfSeries,
    g_bar: &TfSeries,
    f: &TfSeries,
    m: u32,
    caps: Caps,
) -> Result<TfSeries, crate::series::SeriesError> {
    let sum = TfSeries::add_scale(C64::new(1.0, 0.0), g, g_bar)?;
    let product = z_bracket(&sum, f, caps)?;
    Ok(product.project(|idx| idx.weight() > m))
}

/// Per-block diagnostic row for the tabular report.
#[derive(Clone, Debug)]
pub struct BlockDiagnostic {
    pub k: Vec<i32>,
    pub weight: u32,
    pub dim: usize,
    pub condition: f64,
    /// `sigma_min(block)/|k| - gamma/|k|^tau` when the bound parameters are
    /// known, else the raw `sigma_min(block)/|k|`.
    pub margin: f64,
}

pub struct HomologicalSolution {
    pub f: TfSeries,
    pub q: TfSeries,
    pub blocks: Vec<BlockDiagnostic>,
}

/// Renders the per-block diagnostics as a fixed-width text table.
pub fn diagnostics_table(blocks: &[BlockDiagnostic]) -> String {
    use core::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(out, "{:<16} {:>3} {:>4} {:>12} {:>12}", "k", "w", "dim", "cond", "margin");
    for b in blocks {
        let _ = writeln!(
            out,
            "{:<16} {:>3} {:>4} {:>12.4e} {:>12.4e}",
            alloc::format!("{:?}", b.k),
            b.weight,
            b.dim,
            b.condition,
            b.margin
        );
    }
    out
}

/// Solves `{N, F} + R - [R] - Q = 0` for `F` in the truncated space
/// (modes `0 < |k| <= K`, weighted degree `<= m`), blockwise in ascending
/// weighted degree; `Q` is the weighted-degree `> m` remainder of `{N, F}`,
/// returned on `caps`.
pub fn solve_homological(
    nf: &NormalForm,
    r: &TfSeries,
    certs: &[SmallDivisorCert],
    m: u32,
    caps: Caps,
    gamma_over_ktau: Option<(f64, f64)>,
) -> Result<HomologicalSolution, SolveError> {
    let dims = nf.dims();
    let basis = weighted_basis(dims.n, dims.zn(), m);
    let basis_pos = |iota: &[u32], j: &[u32]| -> Option<usize> {
        basis.iter().position(|(bi, bj)| bi.as_slice() == iota && bj.as_slice() == j)
    };
    let kappa = basis.len();
    let weight_of = |pos: usize| -> u32 {
        basis[pos].0.iter().sum::<u32>() * 2 + basis[pos].1.iter().sum::<u32>()
    };

    // Fourier modes present in R away from the average, canonical half.
    let mut modes: Vec<Vec<i32>> = Vec::new();
    for (idx, _) in r.terms() {
        if idx.is_zero_mode() || !idx.is_canonical_mode() {
            continue;
        }
        if !modes.contains(&idx.k) {
            modes.push(idx.k.clone());
        }
    }
    modes.sort();

    // Every mode we are about to divide by must be certified.
    for k in &modes {
        let covered = certs.iter().any(|c| {
            c.kind == DivisorKind::Scalar
                && (c.k == *k || c.k.iter().zip(k).all(|(a, b)| *a == -b))
        });
        if !covered {
            return Err(SolveError::MissingCertificate { k: k.clone() });
        }
    }

    let n_series = nf.assemble(Caps::new(caps.k_max, caps.w_max));
    let mut f = TfSeries::zero(dims, Caps::new(caps.k_max.max(r.caps().k_max), m));
    let mut blocks = Vec::new();

    for k in &modes {
        let k_norm: u32 = k.iter().map(|&ki| ki.unsigned_abs()).sum();
        let assembly_caps = Caps::new(k_norm, m);
        // Column-by-column assembly of L(T) = {N, T} restricted to weight <= m.
        let mut l = CMatrix::zeros(kappa);
        for (col, (iota, j)) in basis.iter().enumerate() {
            let t = TfSeries::monomial(dims, assembly_caps, k, iota, j, C64::new(1.0, 0.0))?;
            let image = n_series.poisson_bracket(&t, assembly_caps)?;
            let col_weight = weight_of(col);
            for (idx, &c) in image.terms() {
                debug_assert_eq!(idx.k, *k);
                let row = basis_pos(&idx.iota, &idx.j).expect("image stays under weight cap");
                let row_weight = idx.weight();
                if row_weight < col_weight {
                    return Err(SolveError::Triangularity {
                        k: k.clone(),
                        from_weight: col_weight,
                        to_weight: row_weight,
                    });
                }
                l.set(row, col, l.at(row, col) + c);
            }
        }
        // Right-hand side: -(R - [R]) at this mode; k != 0 so [R] drops out.
        let mut rhs = vec![C64::new(0.0, 0.0); kappa];
        for (pos, (iota, j)) in basis.iter().enumerate() {
            let idx = MultiIndex::new(k.clone(), iota.clone(), j.clone());
            rhs[pos] = -r.coeff(&idx);
        }

        // Ascending-degree block solve.
        let mut x = vec![C64::new(0.0, 0.0); kappa];
        for w in 0..=m {
            let rows: Vec<usize> = (0..kappa).filter(|&i| weight_of(i) == w).collect();
            if rows.is_empty() {
                continue;
            }
            let dim = rows.len();
            let mut a = CMatrix::zeros(dim);
            let mut b = vec![C64::new(0.0, 0.0); dim];
            for (bi, &ri) in rows.iter().enumerate() {
                let mut acc = rhs[ri];
                for cj in 0..kappa {
                    if weight_of(cj) < w {
                        acc -= l.at(ri, cj) * x[cj];
                    }
                }
                b[bi] = acc;
                for (bj, &rj) in rows.iter().enumerate() {
                    a.set(bi, bj, l.at(ri, rj));
                }
            }
            if !b.iter().any(|c| cabs(*c) > 0.0) {
                continue;
            }
            lu_solve(&a, &mut b).map_err(|source| SolveError::SingularBlock {
                k: k.clone(),
                weight: w,
                source,
            })?;
            for (bi, &ri) in rows.iter().enumerate() {
                x[ri] = b[bi];
            }
            let sigma = a.smallest_singular_value();
            let margin = match gamma_over_ktau {
                Some((gamma, tau)) => sigma / k_norm as f64 - gamma / math::powf(k_norm as f64, tau),
                None => sigma / k_norm as f64,
            };
            blocks.push(BlockDiagnostic {
                k: k.clone(),
                weight: w,
                dim,
                condition: a.condition_estimate(),
                margin,
            });
        }

        for (pos, (iota, j)) in basis.iter().enumerate() {
            let c = x[pos];
            if cabs(c) == 0.0 {
                continue;
            }
            f.insert_term_idx(MultiIndex::new(k.clone(), iota.clone(), j.clone()), c);
            let neg: Vec<i32> = k.iter().map(|&ki| -ki).collect();
            f.insert_term_idx(MultiIndex::new(neg, iota.clone(), j.clone()), c.conj());
        }
    }

    // Q: everything the truncated solve pushes past weighted degree m.
    let bracket = n_series.poisson_bracket(&f, caps)?;
    let q = bracket.project(|idx| idx.weight() > m);
    Ok(HomologicalSolution { f, q, blocks })
}

/// Majorant norm of `{N, F} + R - [R] - Q`; for an exact solve this is at the
/// scale of the linear-algebra roundoff.
pub fn residual_check(
    nf: &NormalForm,
    f: &TfSeries,
    r: &TfSeries,
    q: &TfSeries,
    dom: DomainParams,
) -> f64 {
    let caps = Caps::join(Caps::join(f.caps(), r.caps()), q.caps());
    let n_series = nf.assemble(caps);
    let bracket = n_series.poisson_bracket(f, caps).expect("same dims");
    let rbar = r.average();
    let mut acc = TfSeries::add_scale(C64::new(1.0, 0.0), &bracket, r).expect("same dims");
    acc = TfSeries::add_scale(C64::new(-1.0, 0.0), &rbar, &acc).expect("same dims");
    acc = TfSeries::add_scale(C64::new(-1.0, 0.0), q, &acc).expect("same dims");
    acc.majorant_norm(dom)
}
