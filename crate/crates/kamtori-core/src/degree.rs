//! Brouwer topological degree in the plane by boundary winding with adaptive
//! refinement, the Borsuk odd-map shortcut (any even dimension), and the
//! empirical weak-convexity certificate `|grad g(z) - grad g(z*)| >= sigma
//! |z - z*|^L`.
//!
//! Winding is the primary route and covers `d = 1`; in higher normal
//! dimensions only the Borsuk path is offered.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::math;
use crate::series::TfSeries;

/// Closed ball region for degree and convexity sampling.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxRegion {
    pub center: Vec<f64>,
    pub radius: f64,
    pub boundary_resolution: usize,
}

impl BoxRegion {
    pub fn new(
        center: Vec<f64>,
        radius: f64,
        boundary_resolution: usize,
    ) -> Result<Self, DegreeError> {
        if !(radius > 0.0) {
            return Err(DegreeError::BadRegion(String::from("radius must be positive")));
        }
        if boundary_resolution < 64 {
            return Err(DegreeError::BadRegion(String::from(
                "boundary_resolution must be at least 64",
            )));
        }
        Ok(BoxRegion { center, radius, boundary_resolution })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DegreeError {
    BadRegion(String),
    /// `|f|` dips below the certification threshold on the boundary even at
    /// the maximal refinement.
    BoundaryZero { min_abs: f64, resolution: usize },
    UnsupportedDimension { dim: usize },
    DegenerateFit(String),
    GradientAtOrigin { magnitude: f64 },
}

impl fmt::Display for DegreeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DegreeError::BadRegion(m) => write!(f, "bad region: {m}"),
            DegreeError::BoundaryZero { min_abs, resolution } => write!(
                f,
                "map not certified nonzero on the boundary (min |f| = {min_abs:e} at resolution {resolution})"
            ),
            DegreeError::UnsupportedDimension { dim } => {
                write!(f, "winding degree supports dimension 2 only, got {dim}")
            }
            DegreeError::DegenerateFit(m) => write!(f, "degenerate convexity fit: {m}"),
            DegreeError::GradientAtOrigin { magnitude } => {
                write!(f, "grad g(0) = {magnitude:e} is not zero to tolerance")
            }
        }
    }
}

impl core::error::Error for DegreeError {}

const MAX_RESOLUTION: usize = 1 << 20;

fn boundary_point(region: &BoxRegion, theta: f64) -> [f64; 2] {
    [
        region.center[0] + region.radius * math::cos(theta),
        region.center[1] + region.radius * math::sin(theta),
    ]
}

/// Winding number of `f` along the positively oriented boundary circle.
///
/// Certification: the minimum sampled `|f|` must exceed 10x the largest
/// adjacent-sample variation; otherwise the resolution is doubled, up to
/// 2^20 samples.
pub fn brouwer_degree_2d(
    f: &dyn Fn(&[f64]) -> Vec<f64>,
    region: &BoxRegion,
) -> Result<i64, DegreeError> {
    if region.dim() != 2 {
        return Err(DegreeError::UnsupportedDimension { dim: region.dim() });
    }
    let mut resolution = region.boundary_resolution.max(64);
    loop {
        let mut values = Vec::with_capacity(resolution);
        for i in 0..resolution {
            let theta = core::f64::consts::TAU * i as f64 / resolution as f64;
            let p = boundary_point(region, theta);
            let v = f(&p);
            values.push([v[0], v[1]]);
        }
        let mut min_abs = f64::INFINITY;
        let mut max_step = 0.0f64;
        for i in 0..resolution {
            let a = values[i];
            let b = values[(i + 1) % resolution];
            let na = math::hypot(a[0], a[1]);
            if na < min_abs {
                min_abs = na;
            }
            let step = math::hypot(b[0] - a[0], b[1] - a[1]);
            if step > max_step {
                max_step = step;
            }
        }
        if min_abs > 10.0 * max_step {
            let mut total = 0.0;
            let mut prev = math::atan2(values[0][1], values[0][0]);
            for i in 1..=resolution {
                let v = values[i % resolution];
                let ang = math::atan2(v[1], v[0]);
                let mut delta = ang - prev;
                while delta > core::f64::consts::PI {
                    delta -= core::f64::consts::TAU;
                }
                while delta < -core::f64::consts::PI {
                    delta += core::f64::consts::TAU;
                }
                total += delta;
                prev = ang;
            }
            let winding = total / core::f64::consts::TAU;
            return Ok(libm::round(winding) as i64);
        }
        if resolution >= MAX_RESOLUTION {
            return Err(DegreeError::BoundaryZero { min_abs, resolution });
        }
        resolution *= 2;
    }
}

/// Outcome of the Borsuk odd-map test on boundary antipode pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct BorsukResult {
    pub pass: bool,
    /// Worst relative odd-symmetry defect `|f(-z) + f(z)| / |f(z)|`.
    pub defect: f64,
    pub min_abs: f64,
    /// Boundary point witnessing the failure, when `pass` is false.
    pub witness: Option<Vec<f64>>,
}

/// Samples antipodal boundary pairs `(z, -z)`: passes iff
/// `|f(-z) + f(z)| <= 1e-9 |f(z)|` everywhere and `|f|` stays away from zero.
/// A pass implies the map is odd on the boundary, hence of odd (nonzero)
/// degree. Works in any ambient dimension.
pub fn borsuk_odd_check(f: &dyn Fn(&[f64]) -> Vec<f64>, region: &BoxRegion) -> BorsukResult {
    let dim = region.dim();
    let samples = region.boundary_resolution.max(64);
    let mut rng = ChaCha8Rng::seed_from_u64(0x60d5);
    let mut defect = 0.0f64;
    let mut min_abs = f64::INFINITY;
    let mut witness = None;
    for i in 0..samples {
        let dir: Vec<f64> = if dim == 2 {
            let theta = core::f64::consts::PI * i as f64 / samples as f64;
            vec![math::cos(theta), math::sin(theta)]
        } else {
            let mut v: Vec<f64> = (0..dim)
                .map(|_| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0)
                .collect();
            let norm = math::norm2(&v);
            if norm < 1e-9 {
                v[0] = 1.0;
            } else {
                for x in v.iter_mut() {
                    *x /= norm;
                }
            }
            v
        };
        let p: Vec<f64> =
            region.center.iter().zip(&dir).map(|(c, u)| c + region.radius * u).collect();
        let q: Vec<f64> =
            region.center.iter().zip(&dir).map(|(c, u)| c - region.radius * u).collect();
        let fp = f(&p);
        let fq = f(&q);
        let np = math::norm2(&fp);
        if np < min_abs {
            min_abs = np;
        }
        let sum: Vec<f64> = fp.iter().zip(&fq).map(|(a, b)| a + b).collect();
        let rel = if np > 0.0 { math::norm2(&sum) / np } else { f64::INFINITY };
        if rel > defect {
            defect = rel;
            if rel > 1e-9 {
                witness = Some(p);
            }
        }
    }
    let pass = defect <= 1e-9 && min_abs > 0.0;
    BorsukResult { pass, defect, min_abs, witness: if pass { None } else { witness } }
}

/// Empirical weak-convexity certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexityCert {
    pub sigma: f64,
    pub l_exponent: f64,
    pub sample_count: usize,
    /// Pair attaining the minimal observed ratio
    /// `|grad g(z) - grad g(z*)| / |z - z*|^L`.
    pub min_ratio_witness: (Vec<f64>, Vec<f64>),
}

/// Fits the exponent `L` as the log-log slope of the lower envelope of
/// `|grad g(z) - grad g(z*)|` against `|z - z*|` over anchored sample pairs
/// (the region center is always an anchor), then sets `sigma` to half the
/// minimal observed ratio. Rejects fits with `L < 2` and gradients that
/// vanish identically on the samples.
pub fn estimate_convexity(
    grad: &dyn Fn(&[f64]) -> Vec<f64>,
    region: &BoxRegion,
    samples: usize,
    seed: u64,
) -> Result<ConvexityCert, DegreeError> {
    let dim = region.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unit = |rng: &mut ChaCha8Rng| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;

    let n_anchors = 8.max(samples / 512);
    let mut anchors: Vec<Vec<f64>> = vec![region.center.clone()];
    for _ in 1..n_anchors {
        let p: Vec<f64> = region
            .center
            .iter()
            .map(|c| c + region.radius * (2.0 * unit(&mut rng) - 1.0) * 0.7)
            .collect();
        anchors.push(p);
    }

    let per_anchor = (samples / anchors.len()).max(8);
    // (ln|dz|, ln|dgrad|, z, anchor)
    let mut pairs: Vec<(f64, f64, Vec<f64>, Vec<f64>)> = Vec::new();
    let mut any_nonzero = false;
    for anchor in &anchors {
        let ga = grad(anchor);
        for _ in 0..per_anchor {
            // log-spaced radii reach deep toward the anchor
            let t = unit(&mut rng);
            let rho = region.radius * math::powf(10.0, -5.0 * t);
            let mut dir: Vec<f64> = (0..dim).map(|_| 2.0 * unit(&mut rng) - 1.0).collect();
            let norm = math::norm2(&dir);
            if norm < 1e-12 {
                dir[0] = 1.0;
            } else {
                for x in dir.iter_mut() {
                    *x /= norm;
                }
            }
            let z: Vec<f64> = anchor.iter().zip(&dir).map(|(a, u)| a + rho * u).collect();
            let gz = grad(&z);
            let dgrad: Vec<f64> = gz.iter().zip(&ga).map(|(a, b)| a - b).collect();
            let dg_norm = math::norm2(&dgrad);
            if dg_norm > 0.0 {
                any_nonzero = true;
                pairs.push((math::ln(rho), math::ln(dg_norm), z, anchor.clone()));
            }
        }
    }
    if !any_nonzero || pairs.len() < 16 {
        return Err(DegreeError::DegenerateFit(String::from(
            "gradient vanishes on (nearly) all sampled pairs",
        )));
    }

    // Lower envelope: bin by ln|dz|, keep the minimum ln|dgrad| per bin, then
    // least-squares fit a line through the bin minima.
    let lo = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pairs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let bins = 24usize;
    let width = ((hi - lo) / bins as f64).max(1e-12);
    let mut mins: Vec<Option<(f64, f64)>> = vec![None; bins];
    for (t, d, _, _) in &pairs {
        let b = (((t - lo) / width) as usize).min(bins - 1);
        match mins[b] {
            None => mins[b] = Some((*t, *d)),
            Some((_, dmin)) if *d < dmin => mins[b] = Some((*t, *d)),
            _ => {}
        }
    }
    let pts: Vec<(f64, f64)> = mins.into_iter().flatten().collect();
    if pts.len() < 4 {
        return Err(DegreeError::DegenerateFit(String::from("too few envelope bins")));
    }
    let count = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = count * sxx - sx * sx;
    if math::abs(denom) < 1e-12 {
        return Err(DegreeError::DegenerateFit(String::from("envelope has no spread")));
    }
    let l_exponent = (count * sxy - sx * sy) / denom;
    if l_exponent < 2.0 {
        return Err(DegreeError::DegenerateFit(alloc::format!(
            "fitted exponent L = {l_exponent:.3} is below 2; the weak-convexity hypothesis fails as stated"
        )));
    }

    // sigma: half the minimal observed ratio at the fitted exponent.
    let mut min_ratio = f64::INFINITY;
    let mut witness = (pairs[0].2.clone(), pairs[0].3.clone());
    for (t, d, z, anchor) in &pairs {
        let ratio = math::exp(d - l_exponent * t);
        if ratio < min_ratio {
            min_ratio = ratio;
            witness = (z.clone(), anchor.clone());
        }
    }
    Ok(ConvexityCert {
        sigma: min_ratio / 2.0,
        l_exponent,
        sample_count: pairs.len(),
        min_ratio_witness: witness,
    })
}

/// How the nonvanishing degree was certified.
#[derive(Clone, Debug, PartialEq)]
pub enum DegreeEvidence {
    /// Boundary winding value (2D).
    Winding(i64),
    /// Odd map on the boundary; degree odd, hence nonzero (any dimension).
    BorsukOdd,
}

/// Bundle returned by the full nondegeneracy check.
#[derive(Clone, Debug)]
pub struct A0Certificate {
    pub degree: Option<i64>,
    pub evidence: Vec<DegreeEvidence>,
    pub convexity: Result<ConvexityCert, String>,
    pub pass: bool,
    pub note: String,
}

/// Checks the topological-degree and weak-convexity hypotheses for a
/// `z`-only series `g`: `deg(grad g, region, 0) != 0` and
/// `|grad g(z) - grad g(z*)| >= sigma |z - z*|^L` with `L >= 2`.
///
/// Precondition: `grad g(0) = 0` to `1e-12`.
pub fn check_a0(
    g: &TfSeries,
    region: &BoxRegion,
    convexity_samples: usize,
    seed: u64,
) -> Result<A0Certificate, DegreeError> {
    let dims = g.dims();
    let zn = dims.zn();
    if region.dim() != zn {
        return Err(DegreeError::BadRegion(alloc::format!(
            "region dimension {} does not match 2d = {zn}",
            region.dim()
        )));
    }
    let x0 = vec![0.0; dims.n];
    let y0 = vec![0.0; dims.n];
    let grad_fn = move |z: &[f64]| -> Vec<f64> { g.grad_z_at(&x0, &y0, z) };
    let origin_grad = math::norm2(&grad_fn(&vec![0.0; zn]));
    if origin_grad > 1e-12 {
        return Err(DegreeError::GradientAtOrigin { magnitude: origin_grad });
    }

    let mut evidence = Vec::new();
    let borsuk = borsuk_odd_check(&grad_fn, region);
    if borsuk.pass {
        evidence.push(DegreeEvidence::BorsukOdd);
    }
    let degree = if zn == 2 {
        let val = brouwer_degree_2d(&grad_fn, region)?;
        evidence.push(DegreeEvidence::Winding(val));
        Some(val)
    } else {
        None
    };

    let degree_nonzero = match degree {
        Some(v) => v != 0,
        None => borsuk.pass,
    };
    let convexity = estimate_convexity(&grad_fn, region, convexity_samples, seed)
        .map_err(|e| alloc::format!("{e}"));
    let convexity_ok = convexity.as_ref().map(|c| c.l_exponent >= 2.0).unwrap_or(false);
    let pass = degree_nonzero && convexity_ok;
    let note = if !degree_nonzero {
        String::from(
            "degree of grad g vanishes: no zero of the translated gradient is forced, and the normal drift obstruction applies",
        )
    } else if !convexity_ok {
        String::from("weak-convexity certificate not established")
    } else {
        String::from("nondegeneracy certified")
    };
    Ok(A0Certificate { degree, evidence, convexity, pass, note })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{Caps, Dims, C64};

    fn region_unit() -> BoxRegion {
        BoxRegion::new(vec![0.0, 0.0], 1.0, 1024).unwrap()
    }

    #[test]
    fn region_validation() {
        assert!(BoxRegion::new(vec![0.0, 0.0], 0.0, 128).is_err());
        assert!(BoxRegion::new(vec![0.0, 0.0], 1.0, 32).is_err());
    }

    #[test]
    fn identity_has_degree_one() {
        let f = |z: &[f64]| vec![z[0], z[1]];
        assert_eq!(brouwer_degree_2d(&f, &region_unit()).unwrap(), 1);
    }

    #[test]
    fn squared_gradient_has_degree_zero() {
        // grad of (u^3 + v^3)/3
        let f = |z: &[f64]| vec![z[0] * z[0], z[1] * z[1]];
        assert_eq!(brouwer_degree_2d(&f, &region_unit()).unwrap(), 0);
    }

    #[test]
    fn cubed_map_has_degree_one() {
        let f = |z: &[f64]| vec![z[0] * z[0] * z[0], z[1] * z[1] * z[1]];
        let deg = brouwer_degree_2d(&f, &region_unit()).unwrap();
        assert_eq!(deg, 1);
        assert_ne!(deg, 0);
    }

    #[test]
    fn complex_power_maps_have_expected_winding_and_compose_multiplicatively() {
        fn zpow(p: u32) -> impl Fn(&[f64]) -> Vec<f64> {
            move |z: &[f64]| {
                let mut re = 1.0;
                let mut im = 0.0;
                for _ in 0..p {
                    let nr = re * z[0] - im * z[1];
                    let ni = re * z[1] + im * z[0];
                    re = nr;
                    im = ni;
                }
                vec![re, im]
            }
        }
        let region = region_unit();
        assert_eq!(brouwer_degree_2d(&zpow(2), &region).unwrap(), 2);
        assert_eq!(brouwer_degree_2d(&zpow(3), &region).unwrap(), 3);
        // composition z^2 after z^3 = z^6: degree multiplies
        let comp = |z: &[f64]| {
            let w = zpow(3)(z);
            zpow(2)(&w)
        };
        assert_eq!(brouwer_degree_2d(&comp, &region).unwrap(), 6);
    }

    #[test]
    fn borsuk_accepts_odd_and_rejects_even_maps() {
        // grad of |u|^{2 l0}/(2 l0) + |v|^{2 k0}/(2 k0) with l0 = k0 = 2
        let odd = |z: &[f64]| {
            vec![
                z[0] * math::abs(z[0]) * math::abs(z[0]),
                z[1] * math::abs(z[1]) * math::abs(z[1]),
            ]
        };
        assert!(borsuk_odd_check(&odd, &region_unit()).pass);

        let even = |z: &[f64]| vec![z[0] * z[0], z[1] * z[1]];
        let res = borsuk_odd_check(&even, &region_unit());
        assert!(!res.pass);
        assert!(res.witness.is_some());

        let ident = |z: &[f64]| vec![z[0], z[1]];
        assert!(borsuk_odd_check(&ident, &region_unit()).pass);
    }

    #[test]
    fn homotopy_invariance_on_certified_affine_paths() {
        // Affine homotopies between odd maps of equal degree stay nonzero on
        // the boundary, so every slice carries the same winding.
        let f0 = |z: &[f64]| vec![z[0], z[1]];
        let f1 = |z: &[f64]| vec![z[0] * z[0] * z[0], z[1] * z[1] * z[1]];
        let region = region_unit();
        let d_start = brouwer_degree_2d(&f0, &region).unwrap();
        for i in 0..=4 {
            let t = i as f64 / 4.0;
            let ht = |z: &[f64]| {
                let a = f0(z);
                let b = f1(z);
                vec![(1.0 - t) * a[0] + t * b[0], (1.0 - t) * a[1] + t * b[1]]
            };
            assert_eq!(brouwer_degree_2d(&ht, &region).unwrap(), d_start);
        }
    }

    #[test]
    fn excision_shrinks_the_region_without_changing_degree() {
        let f = |z: &[f64]| vec![z[0] * z[0] * z[0], z[1] * z[1] * z[1]];
        let big = region_unit();
        let small = BoxRegion::new(vec![0.0, 0.0], 0.25, 1024).unwrap();
        assert_eq!(brouwer_degree_2d(&f, &big).unwrap(), brouwer_degree_2d(&f, &small).unwrap());
    }

    #[test]
    fn convexity_exponent_for_quartic_is_near_three() {
        // g = (u^4 + v^4)/4: L = 2*max(l0, k0) - 1 = 3 with l0 = k0 = 2.
        let grad = |z: &[f64]| vec![z[0] * z[0] * z[0], z[1] * z[1] * z[1]];
        let region = BoxRegion::new(vec![0.0, 0.0], 0.5, 1024).unwrap();
        let cert = estimate_convexity(&grad, &region, 10_000, 7).unwrap();
        assert!(cert.l_exponent > 2.8 && cert.l_exponent < 3.2, "L = {}", cert.l_exponent);
        assert!(cert.sigma > 0.0);

        // re-verify sigma |dz|^L <= |dgrad| on a fresh sample set
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let mut unit = |rng: &mut ChaCha8Rng| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        for _ in 0..1000 {
            let z = [0.4 * (2.0 * unit(&mut rng) - 1.0), 0.4 * (2.0 * unit(&mut rng) - 1.0)];
            let zs = [0.4 * (2.0 * unit(&mut rng) - 1.0), 0.4 * (2.0 * unit(&mut rng) - 1.0)];
            let dz = math::hypot(z[0] - zs[0], z[1] - zs[1]);
            if dz < 1e-9 {
                continue;
            }
            let ga = grad(&z);
            let gb = grad(&zs);
            let dg = math::hypot(ga[0] - gb[0], ga[1] - gb[1]);
            assert!(
                dg >= cert.sigma * math::powf(dz, cert.l_exponent) * (1.0 - 1e-9),
                "pair violates the certificate: dz={dz} dg={dg}"
            );
        }
    }

    #[test]
    fn linear_gradient_is_rejected() {
        // g = |z|^2/2, grad = z: the observed exponent is 1 < 2.
        let grad = |z: &[f64]| vec![z[0], z[1]];
        let region = BoxRegion::new(vec![0.0, 0.0], 0.5, 1024).unwrap();
        match estimate_convexity(&grad, &region, 4096, 7) {
            Err(DegreeError::DegenerateFit(msg)) => assert!(msg.contains("below 2")),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn vanishing_gradient_is_a_degenerate_fit() {
        let grad = |_: &[f64]| vec![0.0, 0.0];
        let region = BoxRegion::new(vec![0.0, 0.0], 0.5, 1024).unwrap();
        assert!(matches!(
            estimate_convexity(&grad, &region, 1024, 7),
            Err(DegreeError::DegenerateFit(_))
        ));
    }

    fn series_g_quartic() -> TfSeries {
        crate::normal_form::test_support::quartic_g(Dims::new(2, 1), Caps::new(0, 8))
    }

    fn series_g_cubic() -> TfSeries {
        crate::normal_form::test_support::cubic_g(Dims::new(2, 1), Caps::new(0, 8))
    }

    #[test]
    fn check_a0_passes_quartic_and_fails_cubic() {
        let region = BoxRegion::new(vec![0.0, 0.0], 0.5, 1024).unwrap();
        let good = check_a0(&series_g_quartic(), &region, 8192, 11).unwrap();
        assert!(good.pass);
        assert_eq!(good.degree, Some(1));
        assert!(good.evidence.contains(&DegreeEvidence::BorsukOdd));

        let bad = check_a0(&series_g_cubic(), &region, 8192, 11).unwrap();
        assert!(!bad.pass);
        assert_eq!(bad.degree, Some(0));
        assert!(bad.note.contains("degree"));
    }

    #[test]
    fn check_a0_radial_quartic_passes() {
        // g = |z|^4 = (u^2 + v^2)^2: grad = 4 z |z|^2, winding 1, L = 3.
        let dims = Dims::new(2, 1);
        let caps = Caps::new(0, 8);
        let mut g = TfSeries::zero(dims, caps);
        g.add_term(&[0, 0], &[0, 0], &[4, 0], C64::new(1.0, 0.0)).unwrap();
        g.add_term(&[0, 0], &[0, 0], &[2, 2], C64::new(2.0, 0.0)).unwrap();
        g.add_term(&[0, 0], &[0, 0], &[0, 4], C64::new(1.0, 0.0)).unwrap();
        let region = BoxRegion::new(vec![0.0, 0.0], 0.5, 1024).unwrap();
        let cert = check_a0(&g, &region, 8192, 11).unwrap();
        assert!(cert.pass);
        assert_eq!(cert.degree, Some(1));
    }

    #[test]
    fn check_a0_rejects_nonzero_gradient_at_origin() {
        let mut g = series_g_quartic();
        g.add_term(&[0, 0], &[0, 0], &[1, 0], C64::new(1e-3, 0.0)).unwrap();
        let region = BoxRegion::new(vec![0.0, 0.0], 0.5, 1024).unwrap();
        assert!(matches!(
            check_a0(&g, &region, 1024, 11),
            Err(DegreeError::GradientAtOrigin { .. })
        ));
    }
}
