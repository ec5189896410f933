//! The translation step: find the shift `zeta_+ - zeta` that kills the first
//! order `z`-terms of the updated normal part, and rebuild the normal form
//! under `z -> z + delta` by exhaustive sector regrouping.
//!
//! Plain Newton degenerates at the origin when `Hess g(0) = 0`, so the root
//! finder runs damped (Levenberg-regularized) Newton seeded from a refined
//! grid multistart inside the prescribed ball.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::degree::{brouwer_degree_2d, BoxRegion};
use crate::linalg::solve_real;
use crate::math;
use crate::normal_form::NormalForm;
use crate::series::{Caps, TfSeries, Var, C64};

/// Outcome of the shift search.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftResult {
    /// `zeta_+ - zeta`.
    pub delta: Vec<f64>,
    /// `|grad g(delta) + grad_z [R](0, delta)|` at the returned point.
    pub residual: f64,
    /// Whether `|delta|` stayed inside the prescribed ball radius.
    pub within_ball: bool,
    pub newton_iters: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShiftFailure {
    /// Best residual over the whole multistart.
    pub best_residual: f64,
    pub best_point: Vec<f64>,
    /// Winding of the shift map over the search ball, when computable.
    /// Nonzero degree guarantees a zero exists, so failure with nonzero
    /// degree signals resolution trouble rather than absence.
    pub degree: Option<i64>,
    pub message: String,
}

impl fmt::Display for ShiftFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "no shift zero found (best residual {:e} at {:?}; degree {:?}): {}",
            self.best_residual, self.best_point, self.degree, self.message
        )
    }
}

impl core::error::Error for ShiftFailure {}

/// The map whose zero is the translation:
/// `H(delta) = grad(g + [R](0, .))(delta)`.
struct ShiftMap {
    grad: Vec<TfSeries>,
    hess: Vec<TfSeries>,
    zn: usize,
    n: usize,
}

impl ShiftMap {
    fn build(g: &TfSeries, rbar: &TfSeries) -> ShiftMap {
        let dims = g.dims();
        let zn = dims.zn();
        // [R](0, z): the y-free part of the average.
        let rbar_z = rbar.average().project(|idx| idx.iota_norm() == 0);
        let total = TfSeries::add_scale(C64::new(1.0, 0.0), g, &rbar_z).expect("same dims");
        let mut grad = Vec::with_capacity(zn);
        for a in 0..zn {
            grad.push(total.partial_derivative(Var::Z(a)).expect("z index"));
        }
        let mut hess = Vec::with_capacity(zn * zn);
        for a in 0..zn {
            for b in 0..zn {
                hess.push(grad[a].partial_derivative(Var::Z(b)).expect("z index"));
            }
        }
        ShiftMap { grad, hess, zn, n: dims.n }
    }

    fn eval(&self, z: &[f64]) -> Vec<f64> {
        let x0 = vec![0.0; self.n];
        let y0 = vec![0.0; self.n];
        self.grad.iter().map(|s| s.evaluate(&x0, &y0, z)).collect()
    }

    fn jacobian(&self, z: &[f64]) -> Vec<f64> {
        let x0 = vec![0.0; self.n];
        let y0 = vec![0.0; self.n];
        self.hess.iter().map(|s| s.evaluate(&x0, &y0, z)).collect()
    }

    fn residual(&self, z: &[f64]) -> f64 {
        math::norm2(&self.eval(z))
    }
}

/// Damped, Levenberg-regularized Newton from `start`; returns the refined
/// point, its residual, and the iteration count.
fn damped_newton(map: &ShiftMap, start: &[f64], tol: f64, max_iters: u32) -> (Vec<f64>, f64, u32) {
    let zn = map.zn;
    let mut z = start.to_vec();
    let mut res = map.residual(&z);
    let mut lambda = 0.0f64;
    let mut iters = 0;
    while iters < max_iters && res > tol {
        iters += 1;
        let f = map.eval(&z);
        let jac = map.jacobian(&z);
        let jnorm: f64 = jac.iter().map(|v| math::abs(*v)).fold(0.0, f64::max);
        let mut reg = jac.clone();
        let lam = lambda.max(1e-14 * (1.0 + jnorm));
        for a in 0..zn {
            reg[a * zn + a] += lam;
        }
        let step = match solve_real(&reg, &f, zn) {
            Ok(s) => s,
            Err(_) => {
                lambda = (lambda * 10.0).max(1e-8 * (1.0 + jnorm));
                continue;
            }
        };
        // backtracking line search on |H|
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let cand: Vec<f64> = z.iter().zip(&step).map(|(zi, si)| zi - t * si).collect();
            let cres = map.residual(&cand);
            if cres < res {
                z = cand;
                res = cres;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if improved {
            lambda *= 0.3;
        } else {
            lambda = (lambda * 10.0).max(1e-10 * (1.0 + jnorm));
            if lambda > 1e6 * (1.0 + jnorm) {
                break;
            }
        }
    }
    (z, res, iters)
}

/// Recursively refined grid multistart over the cube inscribed in the search
/// ball; deterministic, with lexicographic tie-breaks. Returns the best few
/// seeds by residual.
fn grid_multistart(map: &ShiftMap, radius: f64, per_dim: usize, rounds: usize) -> Vec<Vec<f64>> {
    let zn = map.zn;
    let mut center = vec![0.0; zn];
    let mut half = radius;
    let mut seeds: Vec<(f64, Vec<f64>)> = Vec::new();
    for _ in 0..rounds {
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut point = vec![0usize; zn];
        loop {
            let z: Vec<f64> = (0..zn)
                .map(|a| center[a] - half + 2.0 * half * point[a] as f64 / (per_dim - 1) as f64)
                .collect();
            if math::norm2(&z) <= radius * 1.0001 + half * 1e-12 {
                let res = map.residual(&z);
                let better = match &best {
                    None => true,
                    Some((bres, bz)) => res < *bres || (res == *bres && z < *bz),
                };
                if better {
                    best = Some((res, z.clone()));
                }
                seeds.push((res, z));
            }
            // odometer increment over the grid
            let mut a = 0;
            loop {
                point[a] += 1;
                if point[a] < per_dim {
                    break;
                }
                point[a] = 0;
                a += 1;
                if a == zn {
                    break;
                }
            }
            if a == zn {
                break;
            }
        }
        if let Some((_, bz)) = best {
            center = bz;
            half /= 4.0;
        } else {
            break;
        }
    }
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.partial_cmp(&b.1).unwrap()));
    seeds.truncate(6);
    seeds.into_iter().map(|(_, z)| z).collect()
}

/// Finds `delta` with `grad g(delta) + grad_z [R](0, delta) = 0` to `tol`,
/// searching inside the ball of the prescribed radius. Newton from the
/// origin first, then a refined multistart when the degenerate Jacobian
/// stalls it.
pub fn find_shift(
    g: &TfSeries,
    rbar: &TfSeries,
    ball_radius: f64,
    tol: f64,
) -> Result<ShiftResult, ShiftFailure> {
    let map = ShiftMap::build(g, rbar);
    let zn = map.zn;
    let origin = vec![0.0; zn];

    let res0 = map.residual(&origin);
    if res0 <= tol {
        return Ok(ShiftResult {
            delta: origin,
            residual: res0,
            within_ball: true,
            newton_iters: 0,
        });
    }

    let (z1, res1, it1) = damped_newton(&map, &origin, tol, 60);
    if res1 <= tol {
        let within = math::norm2(&z1) <= ball_radius;
        return Ok(ShiftResult {
            delta: z1,
            residual: res1,
            within_ball: within,
            newton_iters: it1,
        });
    }

    // Multistart fallback: 17 points per dimension, refined around the best.
    let mut best = (res1, z1, it1);
    for seed in grid_multistart(&map, ball_radius, 17, 4) {
        let (z, res, it) = damped_newton(&map, &seed, tol, 60);
        if res < best.0 || (res == best.0 && z < best.1) {
            best = (res, z, it1 + it);
        }
        if best.0 <= tol {
            break;
        }
    }
    let (res, z, iters) = (best.0, best.1, best.2);
    if res <= tol {
        let within = math::norm2(&z) <= ball_radius;
        return Ok(ShiftResult { delta: z, residual: res, within_ball: within, newton_iters: iters });
    }

    // Report with the degree of the shift map over the ball: nonzero degree
    // means a zero exists and the search under-resolved it.
    let degree = if zn == 2 {
        let f = |p: &[f64]| map.eval(p);
        BoxRegion::new(vec![0.0; zn], ball_radius.max(1e-6), 1024)
            .ok()
            .and_then(|region| brouwer_degree_2d(&f, &region).ok())
    } else {
        None
    };
    let message = match degree {
        Some(0) => String::from(
            "degree 0 over the search ball: no zero is forced; the first-order terms cannot be translated away",
        ),
        Some(_) => String::from("nonzero degree: a zero exists but was not resolved"),
        None => String::from("degree unavailable"),
    };
    Err(ShiftFailure { best_residual: res, best_point: z, degree, message })
}

/// Rebuilds the normal form under the translation `z -> z + delta` applied
/// to `N + [R]`: the shifted series is regrouped exhaustively by
/// `(iota, j)` sector, so the five parts reassemble the shifted `N + [R]`
/// coefficient by coefficient.
pub fn rebuild_normal_form(
    nf: &NormalForm,
    rbar: &TfSeries,
    delta: &[f64],
    caps: Caps,
) -> Result<NormalForm, crate::series::SeriesError> {
    let dims = nf.dims();
    let one = C64::new(1.0, 0.0);

    let g_shifted = nf.g.shift_z(delta, caps)?;
    let gbar_shifted = nf.g_bar.shift_z(delta, caps)?;
    let rbar_shifted = rbar.average().shift_z(delta, caps)?;

    // Everything that moves: shifted g + g_bar + [R] (h_tilde has no z).
    let mut moved = TfSeries::add_scale(one, &g_shifted, &gbar_shifted)?;
    moved = TfSeries::add_scale(one, &rbar_shifted, &moved)?;

    // Sector split of the moved series.
    let const_part = moved.project(|idx| idx.iota_norm() == 0 && idx.j_norm() == 0);
    let lin_y = moved.project(|idx| idx.iota_norm() == 1 && idx.j_norm() == 0);
    let pure_y_high = moved.project(|idx| idx.iota_norm() >= 2 && idx.j_norm() == 0);
    let pure_z = moved.project(|idx| idx.iota_norm() == 0 && idx.j_norm() >= 1);
    let mixed = moved.project(|idx| idx.iota_norm() >= 1 && idx.j_norm() >= 1);

    let zero_x = vec![0.0; dims.n];
    let zero_y = vec![0.0; dims.n];
    let zero_z = vec![0.0; dims.zn()];
    let e_plus = nf.e + const_part.evaluate(&zero_x, &zero_y, &zero_z);

    let mut omega_plus = nf.omega.clone();
    for (idx, &c) in lin_y.terms() {
        let i = idx.iota.iter().position(|&e| e == 1).expect("linear term");
        omega_plus[i] += c.re;
    }

    let h_plus = TfSeries::add_scale(one, &nf.h_tilde, &pure_y_high)?;
    let g_plus = pure_z;
    let gbar_plus = mixed;

    let mut zeta = nf.zeta.clone();
    for (za, da) in zeta.iter_mut().zip(delta) {
        *za += da;
    }

    Ok(NormalForm {
        e: e_plus,
        omega: omega_plus,
        h_tilde: h_plus,
        g: g_plus,
        g_bar: gbar_plus,
        zeta,
    })
}

/// One row of the drift table: the shift size against its schedule bound and
/// the five normal-form drift magnitudes of the step.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftRow {
    pub step: u32,
    pub shift_size: f64,
    /// `(s_minus^{m-1} mu_minus)^{1/L}`.
    pub bound: f64,
    pub ratio: f64,
    pub e_drift: f64,
    pub omega_drift: f64,
    pub h_drift: f64,
    pub g_drift: f64,
    pub gbar_drift: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftReport {
    pub rows: Vec<DriftRow>,
    /// Empirical constant making the shift/drift bounds tight (max ratio).
    pub c3_empirical: f64,
    /// Steps where the shift size failed to decay from the previous step.
    pub monotonicity_violations: Vec<u32>,
}

/// Tabulates shift sizes against their schedule bounds and flags steps where
/// the decay is not monotone.
pub fn shift_drift_bounds(rows: &[DriftRow]) -> DriftReport {
    let mut c3 = 0.0f64;
    let mut violations = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let drifts = [row.e_drift, row.omega_drift, row.h_drift, row.g_drift, row.gbar_drift];
        let worst = drifts.iter().fold(row.shift_size, |acc, d| acc.max(*d));
        if row.bound > 0.0 {
            c3 = c3.max(worst / row.bound);
        }
        if i > 0 && row.shift_size > rows[i - 1].shift_size && row.shift_size > 0.0 {
            violations.push(row.step);
        }
    }
    DriftReport { rows: rows.to_vec(), c3_empirical: c3, monotonicity_violations: violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normal_form::test_support::{cubic_g, quartic_g};
    use crate::series::Dims;
    use rand_chacha::rand_core::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dims() -> Dims {
        Dims::new(2, 1)
    }

    fn caps() -> Caps {
        Caps::new(8, 12)
    }

    #[test]
    fn zero_average_needs_no_shift() {
        let g = quartic_g(dims(), caps());
        let rbar = TfSeries::zero(dims(), caps());
        let out = find_shift(&g, &rbar, 0.5, 1e-12).unwrap();
        assert_eq!(out.delta, vec![0.0, 0.0]);
        assert_eq!(out.residual, 0.0);
        assert_eq!(out.newton_iters, 0);
        assert!(out.within_ball);
    }

    #[test]
    fn constant_forcing_has_cube_root_shift() {
        // g = (u^4+v^4)/4, grad_z [R](0,.) = (-c, 0): u^3 = c, v^3 = 0.
        let g = quartic_g(dims(), caps());
        let c = 1e-6;
        let mut rbar = TfSeries::zero(dims(), caps());
        rbar.add_term(&[0, 0], &[0, 0], &[1, 0], C64::new(-c, 0.0)).unwrap();
        let out = find_shift(&g, &rbar, 0.5, 1e-14).unwrap();
        let want = math::cbrt(c);
        assert!(
            math::abs(out.delta[0] - want) <= 1e-9 * want.max(1e-9),
            "delta = {:?}, want ({want}, 0)",
            out.delta
        );
        assert!(math::abs(out.delta[1]) <= 1e-6);
        assert!(out.residual <= 1e-14);
    }

    #[test]
    fn unsolvable_cubic_reports_degree_zero() {
        // g = (u^3+v^3)/3 with constant forcing (eps^2, 0): u^2 + eps^2 > 0.
        let g = cubic_g(dims(), caps());
        let mut rbar = TfSeries::zero(dims(), caps());
        rbar.add_term(&[0, 0], &[0, 0], &[1, 0], C64::new(1e-2, 0.0)).unwrap();
        let err = find_shift(&g, &rbar, 0.5, 1e-12).unwrap_err();
        assert!(err.best_residual > 1e-12);
        assert_eq!(err.degree, Some(0));
        assert!(err.message.contains("no zero is forced"));
    }

    fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
        lo + (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * (hi - lo)
    }

    fn random_rbar(rng: &mut ChaCha8Rng, scale: f64) -> TfSeries {
        let mut rbar = TfSeries::zero(dims(), caps());
        for iota in [[0u32, 0], [1, 0], [0, 1]] {
            for j in [[0u32, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2], [3, 0], [0, 3]] {
                let w = 2 * (iota[0] + iota[1]) + j[0] + j[1];
                if w > 3 {
                    continue;
                }
                let c = scale * uniform(rng, -1.0, 1.0);
                rbar.add_term(&[0, 0], &iota, &j, C64::new(c, 0.0)).unwrap();
            }
        }
        rbar
    }

    fn random_nf(rng: &mut ChaCha8Rng) -> NormalForm {
        let g = quartic_g(dims(), caps());
        let mut h_tilde = TfSeries::zero(dims(), caps());
        h_tilde
            .add_term(&[0, 0], &[2, 0], &[0, 0], C64::new(uniform(rng, -0.2, 0.2), 0.0))
            .unwrap();
        h_tilde
            .add_term(&[0, 0], &[0, 2], &[0, 0], C64::new(uniform(rng, -0.2, 0.2), 0.0))
            .unwrap();
        let mut g_bar = TfSeries::zero(dims(), caps());
        g_bar
            .add_term(&[0, 0], &[1, 0], &[1, 0], C64::new(uniform(rng, -0.1, 0.1), 0.0))
            .unwrap();
        g_bar
            .add_term(&[0, 0], &[0, 1], &[0, 1], C64::new(uniform(rng, -0.1, 0.1), 0.0))
            .unwrap();
        NormalForm::new(uniform(rng, -1.0, 1.0), vec![1.0, 1.5], h_tilde, g, g_bar).unwrap()
    }

    #[test]
    fn rebuild_with_zero_inputs_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let nf = random_nf(&mut rng);
        let rbar = TfSeries::zero(dims(), caps());
        let out = rebuild_normal_form(&nf, &rbar, &[0.0, 0.0], caps()).unwrap();
        assert_eq!(out.e, nf.e);
        assert_eq!(out.omega, nf.omega);
        assert_eq!(out.h_tilde, nf.h_tilde.with_caps(out.h_tilde.caps()));
        assert_eq!(out.g, nf.g.with_caps(out.g.caps()));
        assert_eq!(out.g_bar, nf.g_bar.with_caps(out.g_bar.caps()));
    }

    #[test]
    fn rebuild_regroups_exhaustively() {
        // e+ + <omega+,y> + h+ + g+ + gbar+ must equal (N + [R]) shifted,
        // coefficient by coefficient.
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..10 {
            let nf = random_nf(&mut rng);
            let rbar = random_rbar(&mut rng, 1e-3);
            let delta = [uniform(&mut rng, -1e-2, 1e-2), uniform(&mut rng, -1e-2, 1e-2)];
            let wide = Caps::new(8, 16);
            let out = rebuild_normal_form(&nf, &rbar, &delta, wide).unwrap();
            let lhs = out.assemble(wide);
            let full =
                TfSeries::add_scale(C64::new(1.0, 0.0), &nf.assemble(wide), &rbar.average())
                    .unwrap();
            let rhs = full.shift_z(&delta, wide).unwrap();
            let diff = TfSeries::add_scale(C64::new(-1.0, 0.0), &rhs, &lhs).unwrap();
            assert!(
                diff.max_coeff() <= 1e-12 * (1.0 + rhs.max_coeff()),
                "defect {}",
                diff.max_coeff()
            );
        }
    }

    #[test]
    fn rebuild_after_solved_shift_kills_the_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        for _ in 0..5 {
            let nf = random_nf(&mut rng);
            let rbar = random_rbar(&mut rng, 1e-5);
            let shift = find_shift(&nf.g, &rbar, 0.5, 1e-13).unwrap();
            let out = rebuild_normal_form(&nf, &rbar, &shift.delta, Caps::new(8, 16)).unwrap();
            let grad = out.grad_g_at_origin();
            assert!(math::norm2(&grad) <= 1e-10, "grad g+(0) = {grad:?}");
            out.validate_shape(1e-10).unwrap();
        }
    }

    #[test]
    fn shifted_hamiltonian_matches_pointwise() {
        // The translation is a plain coordinate shift: the rebuilt normal
        // form at (x, y, z) equals the old N + [R] at (x, y, z + delta).
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let nf = random_nf(&mut rng);
        let rbar = random_rbar(&mut rng, 1e-4);
        let delta = [0.037, -0.011];
        let wide = Caps::new(8, 16);
        let out = rebuild_normal_form(&nf, &rbar, &delta, wide).unwrap();
        let rebuilt = out.assemble(wide);
        let old =
            TfSeries::add_scale(C64::new(1.0, 0.0), &nf.assemble(wide), &rbar.average()).unwrap();
        for _ in 0..10 {
            let x = [0.4, 1.3];
            let y = [uniform(&mut rng, -0.1, 0.1), uniform(&mut rng, -0.1, 0.1)];
            let z = [uniform(&mut rng, -0.2, 0.2), uniform(&mut rng, -0.2, 0.2)];
            let zs = [z[0] + delta[0], z[1] + delta[1]];
            let lhs = rebuilt.evaluate(&x, &y, &z);
            let rhs = old.evaluate(&x, &y, &zs);
            assert!(math::abs(lhs - rhs) <= 1e-12 * (1.0 + math::abs(rhs)), "lhs={lhs} rhs={rhs}");
        }
    }

    #[test]
    fn drift_report_on_trivial_and_synthetic_histories() {
        // all-zero shifts: every ratio is zero
        let rows: Vec<DriftRow> = (0..4)
            .map(|i| DriftRow {
                step: i,
                shift_size: 0.0,
                bound: 0.1,
                ratio: 0.0,
                e_drift: 0.0,
                omega_drift: 0.0,
                h_drift: 0.0,
                g_drift: 0.0,
                gbar_drift: 0.0,
            })
            .collect();
        let report = shift_drift_bounds(&rows);
        assert_eq!(report.c3_empirical, 0.0);
        assert!(report.monotonicity_violations.is_empty());

        // synthetic geometric history: constant ratio, monotone decay
        let rows: Vec<DriftRow> = (0..5)
            .map(|i| {
                let size = 0.5 * math::powi(0.1, i);
                DriftRow {
                    step: i,
                    shift_size: size,
                    bound: 2.0 * size,
                    ratio: 0.5,
                    e_drift: size,
                    omega_drift: size,
                    h_drift: size,
                    g_drift: size,
                    gbar_drift: size,
                }
            })
            .collect();
        let report = shift_drift_bounds(&rows);
        assert!((report.c3_empirical - 0.5).abs() < 1e-14);
        assert!(report.monotonicity_violations.is_empty());

        // a non-monotone step is flagged
        let mut rows2 = rows.clone();
        rows2[3].shift_size = 1.0;
        let report2 = shift_drift_bounds(&rows2);
        assert_eq!(report2.monotonicity_violations, vec![3]);
    }
}
