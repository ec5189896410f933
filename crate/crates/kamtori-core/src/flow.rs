//! Direct numerical integration of Hamilton's equations
//! `xdot = dH/dy, ydot = -dH/dx, zdot = J dH/dz` for verification: torus
//! near-invariance of a constructed normal form, and the normal-drift
//! obstruction of the cubic counterexample.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::math;
use crate::series::{Caps, Dims, TfSeries, Var, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// States with the angles reduced mod 2 pi.
    pub states: Vec<State>,
    pub energy: Vec<f64>,
}

impl Trajectory {
    /// `|H(end) - H(start)|`.
    pub fn energy_drift(&self) -> f64 {
        match (self.energy.first(), self.energy.last()) {
            (Some(a), Some(b)) => math::abs(b - a),
            _ => 0.0,
        }
    }

    /// Tabular dump `(t, x.., y.., z.., H)` for plotting.
    pub fn to_table(&self) -> String {
        use core::fmt::Write as _;
        let mut out = String::new();
        for ((t, s), h) in self.times.iter().zip(&self.states).zip(&self.energy) {
            let _ = write!(out, "{t}");
            for v in s.x.iter().chain(&s.y).chain(&s.z) {
                let _ = write!(out, "\t{v}");
            }
            let _ = writeln!(out, "\t{h}");
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FlowError {
    BadStep { h: f64, t: f64 },
    NonFinite { t: f64 },
    Series(crate::series::SeriesError),
}

impl fmt::Display for FlowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowError::BadStep { h, t } => write!(f, "need h > 0 and T > 0, got h={h}, T={t}"),
            FlowError::NonFinite { t } => write!(f, "state became non-finite at t = {t}"),
            FlowError::Series(e) => write!(f, "series error: {e}"),
        }
    }
}

impl core::error::Error for FlowError {}

impl From<crate::series::SeriesError> for FlowError {
    fn from(e: crate::series::SeriesError) -> Self {
        FlowError::Series(e)
    }
}

/// Precomputed gradient fields of a Hamiltonian series.
pub struct HamiltonianField {
    dims: Dims,
    dx: Vec<TfSeries>,
    dy: Vec<TfSeries>,
    dz: Vec<TfSeries>,
    h: TfSeries,
}

impl HamiltonianField {
    pub fn new(h: &TfSeries) -> Result<Self, FlowError> {
        let dims = h.dims();
        let mut dx = Vec::with_capacity(dims.n);
        let mut dy = Vec::with_capacity(dims.n);
        for i in 0..dims.n {
            dx.push(h.partial_derivative(Var::X(i))?);
            dy.push(h.partial_derivative(Var::Y(i))?);
        }
        let mut dz = Vec::with_capacity(dims.zn());
        for a in 0..dims.zn() {
            dz.push(h.partial_derivative(Var::Z(a))?);
        }
        Ok(HamiltonianField { dims, dx, dy, dz, h: h.clone() })
    }

    /// `(xdot, ydot, zdot)` packed as one flat vector.
    fn velocity(&self, state: &[f64]) -> Vec<f64> {
        let n = self.dims.n;
        let zn = self.dims.zn();
        let (x, rest) = state.split_at(n);
        let (y, z) = rest.split_at(n);
        let mut out = Vec::with_capacity(2 * n + zn);
        for i in 0..n {
            out.push(self.dy[i].evaluate(x, y, z));
        }
        for i in 0..n {
            out.push(-self.dx[i].evaluate(x, y, z));
        }
        // zdot = J dH/dz with J = [[0, I], [-I, 0]]
        let d = self.dims.d;
        for l in 0..d {
            out.push(self.dz[d + l].evaluate(x, y, z));
        }
        for l in 0..d {
            out.push(-self.dz[l].evaluate(x, y, z));
        }
        out
    }

    pub fn energy(&self, x: &[f64], y: &[f64], z: &[f64]) -> f64 {
        self.h.evaluate(x, y, z)
    }
}

fn wrap_angle(x: f64) -> f64 {
    let tau = core::f64::consts::TAU;
    let mut w = x % tau;
    if w < 0.0 {
        w += tau;
    }
    w
}

/// Classical fixed-step 4th-order Runge-Kutta integration of the Hamiltonian
/// flow. Aborts on non-finite states (normal-direction escape).
pub fn integrate_flow(
    h: &TfSeries,
    initial: &State,
    t_final: f64,
    h_step: f64,
) -> Result<Trajectory, FlowError> {
    integrate_flow_guarded(h, initial, t_final, h_step, f64::INFINITY)
}

/// As `integrate_flow`, but stops cleanly once `|(y, z)|` exceeds
/// `escape_bound`; the trajectory collected so far is returned.
pub fn integrate_flow_guarded(
    h: &TfSeries,
    initial: &State,
    t_final: f64,
    h_step: f64,
    escape_bound: f64,
) -> Result<Trajectory, FlowError> {
    if !(h_step > 0.0 && t_final > 0.0) {
        return Err(FlowError::BadStep { h: h_step, t: t_final });
    }
    let field = HamiltonianField::new(h)?;
    let n = field.dims.n;
    let zn = field.dims.zn();
    let mut state: Vec<f64> = initial
        .x
        .iter()
        .chain(&initial.y)
        .chain(&initial.z)
        .copied()
        .collect();
    let steps = libm::ceil(t_final / h_step) as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut energy = Vec::with_capacity(steps + 1);
    let record = |state: &[f64], times: &mut Vec<f64>, states: &mut Vec<State>, energy: &mut Vec<f64>, t: f64| {
        let x: Vec<f64> = state[..n].iter().map(|&v| wrap_angle(v)).collect();
        let y = state[n..2 * n].to_vec();
        let z = state[2 * n..2 * n + zn].to_vec();
        energy.push(field.energy(&x, &y, &z));
        times.push(t);
        states.push(State { x, y, z });
    };
    record(&state, &mut times, &mut states, &mut energy, 0.0);
    let mut t = 0.0;
    for _ in 0..steps {
        let dt = h_step.min(t_final - t);
        if dt <= 0.0 {
            break;
        }
        let k1 = field.velocity(&state);
        let s2: Vec<f64> = state.iter().zip(&k1).map(|(s, k)| s + 0.5 * dt * k).collect();
        let k2 = field.velocity(&s2);
        let s3: Vec<f64> = state.iter().zip(&k2).map(|(s, k)| s + 0.5 * dt * k).collect();
        let k3 = field.velocity(&s3);
        let s4: Vec<f64> = state.iter().zip(&k3).map(|(s, k)| s + dt * k).collect();
        let k4 = field.velocity(&s4);
        for i in 0..state.len() {
            state[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += dt;
        if state.iter().any(|v| !v.is_finite()) {
            return Err(FlowError::NonFinite { t });
        }
        record(&state, &mut times, &mut states, &mut energy, t);
        let yz_norm = math::norm2(&state[n..]);
        if yz_norm > escape_bound {
            break;
        }
    }
    Ok(Trajectory { times, states, energy })
}

/// Integrates from `n_angles` points on the torus `{y = 0, z = 0}` (angles
/// low-discrepancy over the torus) and returns the largest excursion
/// `max_t |(y(t), z(t))|` over all trajectories.
pub fn torus_deviation(
    h_final: &TfSeries,
    t_final: f64,
    h_step: f64,
    n_angles: usize,
) -> Result<f64, FlowError> {
    let dims = h_final.dims();
    let mut worst = 0.0f64;
    for idx in 0..n_angles.max(1) {
        let mut x = Vec::with_capacity(dims.n);
        for i in 0..dims.n {
            // golden-ratio lattice points cover the torus evenly
            let alpha = math::powf(1.618033988749894848, (i + 1) as f64);
            let frac = (idx as f64 * alpha) % 1.0;
            x.push(core::f64::consts::TAU * frac);
        }
        let initial = State { x, y: vec![0.0; dims.n], z: vec![0.0; dims.zn()] };
        let traj = integrate_flow(h_final, &initial, t_final, h_step)?;
        for s in &traj.states {
            let mut acc = 0.0;
            for v in s.y.iter().chain(&s.z) {
                acc += v * v;
            }
            let dev = math::sqrt(acc);
            if dev > worst {
                worst = dev;
            }
        }
    }
    Ok(worst)
}

/// Certificate produced by the cubic-counterexample check.
#[derive(Clone, Debug)]
pub struct Prop2Report {
    /// The `v`-equation reduces symbolically to `vdot = -(u^2 + eps^2)`.
    pub vdot_identity: bool,
    /// `min(u^2 + eps^2)` over the root scan: positive means no real root.
    pub scan_min: f64,
    /// Largest drop `v(0) - v(t)` observed within the horizon.
    pub v_drop: f64,
    /// Time at which the drop first reached `eps^2 * t` certification.
    pub drift_certified: bool,
    /// Integration end (early when the normal direction escapes).
    pub t_end: f64,
    pub note: String,
}

/// Checks the non-existence mechanism for
/// `H = omega y + (u^3 + v^3)/3 + eps^2 u`:
/// symbolically `vdot = -u^2 - eps^2 <= -eps^2`, the root scan of
/// `u^2 + eps^2` finds no real zero, and trajectories near the origin drift
/// down in `v` at least linearly until they escape.
pub fn prop2_check(epsilon: f64, omega: f64, t_final: f64) -> Result<Prop2Report, FlowError> {
    if epsilon == 0.0 {
        return Ok(Prop2Report {
            vdot_identity: false,
            scan_min: 0.0,
            v_drop: 0.0,
            drift_certified: false,
            t_end: 0.0,
            note: String::from(
                "epsilon = 0: the origin is an equilibrium and the obstruction does not apply",
            ),
        });
    }
    let dims = Dims::new(1, 1);
    let caps = Caps::new(2, 6);
    let mut h = TfSeries::zero(dims, caps);
    h.add_term(&[0], &[1], &[0, 0], C64::new(omega, 0.0)).expect("term");
    h.add_term(&[0], &[0], &[3, 0], C64::new(1.0 / 3.0, 0.0)).expect("term");
    h.add_term(&[0], &[0], &[0, 3], C64::new(1.0 / 3.0, 0.0)).expect("term");
    h.add_term(&[0], &[0], &[1, 0], C64::new(epsilon * epsilon, 0.0)).expect("term");

    // vdot = -dH/du as a series: must be exactly -u^2 - eps^2.
    let vdot = h.partial_derivative(Var::Z(0))?.scale(C64::new(-1.0, 0.0));
    let mut expected = TfSeries::zero(dims, caps);
    expected.add_term(&[0], &[0], &[2, 0], C64::new(-1.0, 0.0)).expect("term");
    expected.add_term(&[0], &[0], &[0, 0], C64::new(-epsilon * epsilon, 0.0)).expect("term");
    let diff = TfSeries::add_scale(C64::new(-1.0, 0.0), &expected, &vdot)?;
    let vdot_identity = diff.is_zero();

    // Root scan of u^2 + eps^2 over [-10, 10].
    let mut scan_min = f64::INFINITY;
    let mut u = -10.0;
    while u <= 10.0 {
        let val = u * u + epsilon * epsilon;
        if val < scan_min {
            scan_min = val;
        }
        u += 1e-3;
    }

    // Drift: trajectories starting near the torus drop in v at rate >= eps^2
    // for as long as they exist; stop early once (y, z) escapes.
    let mut v_drop = 0.0f64;
    let mut drift_certified = true;
    let mut t_end = 0.0f64;
    for &z0 in &[[0.0, 0.0], [1e-3, 1e-3], [-1e-3, 5e-4]] {
        let initial = State { x: vec![0.0], y: vec![0.0], z: z0.to_vec() };
        let traj = integrate_flow_guarded(&h, &initial, t_final, 1e-3, 1e3)?;
        let v0 = traj.states[0].z[1];
        let mut ok = true;
        for (t, s) in traj.times.iter().zip(&traj.states) {
            let drop = v0 - s.z[1];
            if drop > v_drop {
                v_drop = drop;
            }
            // vdot <= -eps^2 integrates to v(t) <= v(0) - eps^2 t
            if drop + 1e-9 < epsilon * epsilon * t {
                ok = false;
            }
        }
        if !ok {
            drift_certified = false;
        }
        if let Some(t) = traj.times.last() {
            if *t > t_end {
                t_end = *t;
            }
        }
    }

    let note = if t_end < t_final {
        alloc::format!(
            "normal direction escaped at t = {t_end:.3} (well before T = {t_final}): the drift has no invariant set to settle on"
        )
    } else {
        String::from("drift certified over the full horizon")
    };
    Ok(Prop2Report { vdot_identity, scan_min, v_drop, drift_certified, t_end, note })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims() -> Dims {
        Dims::new(2, 1)
    }

    #[test]
    fn linear_flow_is_exact() {
        // H = <omega, y>: x(t) = x0 + omega t for any step size; y, z frozen.
        let caps = Caps::new(4, 4);
        let mut h = TfSeries::zero(dims(), caps);
        let omega = [1.0, 0.7];
        h.add_term(&[0, 0], &[1, 0], &[0, 0], C64::new(omega[0], 0.0)).unwrap();
        h.add_term(&[0, 0], &[0, 1], &[0, 0], C64::new(omega[1], 0.0)).unwrap();
        let initial = State { x: vec![0.3, 5.9], y: vec![0.1, -0.2], z: vec![0.05, 0.0] };
        let t_final = 10.0;
        let traj = integrate_flow(&h, &initial, t_final, 0.01).unwrap();
        let last = traj.states.last().unwrap();
        for i in 0..2 {
            let want = (initial.x[i] + omega[i] * t_final) % core::f64::consts::TAU;
            let got = last.x[i];
            let circ = (want - got + core::f64::consts::PI).rem_euclid(core::f64::consts::TAU)
                - core::f64::consts::PI;
            assert!(math::abs(circ) <= 1e-9, "x[{i}] = {got}, want {want}");
            assert!(math::abs(last.y[i] - initial.y[i]) <= 1e-12);
        }
        assert!(math::abs(last.z[0] - initial.z[0]) <= 1e-12);
        assert!(traj.energy_drift() <= 1e-12);
    }

    fn harmonic() -> TfSeries {
        // H = (u^2 + v^2)/2 (integrator testing only)
        let caps = Caps::new(0, 4);
        let mut h = TfSeries::zero(dims(), caps);
        h.add_term(&[0, 0], &[0, 0], &[2, 0], C64::new(0.5, 0.0)).unwrap();
        h.add_term(&[0, 0], &[0, 0], &[0, 2], C64::new(0.5, 0.0)).unwrap();
        h
    }

    #[test]
    fn harmonic_norm_is_conserved_to_fourth_order() {
        let h = harmonic();
        let initial = State { x: vec![0.0, 0.0], y: vec![0.0, 0.0], z: vec![1.0, 0.0] };
        let traj = integrate_flow(&h, &initial, 10.0, 1e-2).unwrap();
        for s in &traj.states {
            let r = math::hypot(s.z[0], s.z[1]);
            assert!(math::abs(r - 1.0) <= 1e-7, "|z| drifted to {r}");
        }
        // C h^4 T with a modest constant
        assert!(traj.energy_drift() <= 10.0 * 1e-8 * 10.0);
    }

    #[test]
    fn halving_the_step_cuts_the_error_sixteenfold() {
        let h = harmonic();
        let initial = State { x: vec![0.0, 0.0], y: vec![0.0, 0.0], z: vec![1.0, 0.0] };
        let t_final = 5.0;
        let exact = |t: f64| [math::cos(t) * 1.0 + math::sin(t) * 0.0, -math::sin(t)];
        // zdot = J dH/dz = (v, -u): clockwise rotation
        let err = |h_step: f64| {
            let traj = integrate_flow(&h, &initial, t_final, h_step).unwrap();
            let last = traj.states.last().unwrap();
            let want = exact(t_final);
            math::hypot(last.z[0] - want[0], last.z[1] - want[1])
        };
        let e1 = err(0.02);
        let e2 = err(0.01);
        let ratio = e1 / e2;
        assert!(
            ratio > 12.0 && ratio < 20.0,
            "order-4 convergence expected, got ratio {ratio} ({e1} / {e2})"
        );
    }

    #[test]
    fn invariant_normal_form_has_no_deviation() {
        // N = <omega, y> + g(z) with grad g(0) = 0: the torus is exactly
        // invariant and the deviation is pure integrator roundoff.
        let caps = Caps::new(4, 8);
        let mut h = TfSeries::zero(dims(), caps);
        h.add_term(&[0, 0], &[1, 0], &[0, 0], C64::new(1.0, 0.0)).unwrap();
        h.add_term(&[0, 0], &[0, 1], &[0, 0], C64::new(1.618033988749895, 0.0)).unwrap();
        h.add_term(&[0, 0], &[0, 0], &[4, 0], C64::new(0.25, 0.0)).unwrap();
        h.add_term(&[0, 0], &[0, 0], &[0, 4], C64::new(0.25, 0.0)).unwrap();
        let dev = torus_deviation(&h, 100.0, 1e-3, 4).unwrap();
        assert!(dev <= 1e-10, "deviation {dev}");
    }

    #[test]
    fn prop2_drift_certificate() {
        let report = prop2_check(0.1, 1.0, 100.0).unwrap();
        assert!(report.vdot_identity);
        assert!((report.scan_min - 0.01).abs() <= 1e-9);
        assert!(report.scan_min > 0.0);
        assert!(report.drift_certified);
        // v(T) <= v(0) - 1.0 is reached (long before any escape)
        assert!(report.v_drop >= 1.0, "drop {}", report.v_drop);
    }

    #[test]
    fn prop2_zero_epsilon_is_out_of_scope() {
        let report = prop2_check(0.0, 1.0, 10.0).unwrap();
        assert!(!report.drift_certified);
        assert!(report.note.contains("equilibrium"));
    }

    #[test]
    fn bad_steps_are_rejected() {
        let h = harmonic();
        let initial = State { x: vec![0.0, 0.0], y: vec![0.0, 0.0], z: vec![0.1, 0.0] };
        assert!(matches!(
            integrate_flow(&h, &initial, 0.0, 1e-3),
            Err(FlowError::BadStep { .. })
        ));
        assert!(matches!(
            integrate_flow(&h, &initial, 1.0, -1e-3),
            Err(FlowError::BadStep { .. })
        ));
    }
}
