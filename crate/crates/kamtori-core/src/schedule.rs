//! Step parameters of the iteration: the 0-th step quantities derived from
//! `epsilon`, the per-step recursions for `r, beta, gamma, sigma, s, alpha,
//! mu, K`, their closed forms, and the mode-sum `Gamma(r - r_+)`.
//!
//! Two modes: `PaperFaithful` evaluates the exact cutoff rule
//! `K_+ = ([log 1/s] + 1)^{3 eta}`, which is astronomically large at any
//! usable `epsilon` and is meant only for checking the step hypotheses as
//! inequalities; `Practical` replaces it with a user cap and sets the
//! lemma constants to 1, and is the mode the iteration actually runs in.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::math;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    PaperFaithful,
    Practical,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScheduleError {
    BadInput(String),
}

impl fmt::Display for ScheduleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleError::BadInput(m) => write!(f, "invalid schedule input: {m}"),
        }
    }
}

impl core::error::Error for ScheduleError {}

/// All step parameters. Fields suffixed `0` are the 0-th step values; the
/// unsuffixed ones are the current (step `nu`) values.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub mode: Mode,
    pub epsilon: f64,
    pub m: u32,
    /// Weak-convexity exponent; when only `m` is supplied this is the
    /// largest `L` compatible with the `m`-versus-`L` constraint.
    pub l_exponent: f64,
    pub n: usize,
    pub d: usize,
    pub tau: f64,
    pub rho: f64,
    pub eta: u32,
    /// Lemma constants `c0..c6`; all 1 in practical mode.
    pub c: [f64; 7],

    pub s_input: f64,
    pub r_input: f64,
    pub gamma0: f64,
    pub mu0: f64,
    pub s0: f64,
    pub r0: f64,
    pub beta0: f64,
    pub sigma0: f64,
    /// `mu_* = s^2 eps^{1/(4(m+1))} gamma0^{2(m+1)(2d)^m}` (drift reporting).
    pub mu_star: f64,

    pub nu: u32,
    pub r: f64,
    pub beta: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub s: f64,
    pub alpha: f64,
    pub mu: f64,
    /// Previous step's `(s, mu)`; at step 0 these equal `(s0, mu0)`.
    pub s_minus: f64,
    pub mu_minus: f64,

    /// Practical-mode cutoff base and growth: `K_{nu+1} = k_cap * k_growth^nu`.
    pub k_cap: u32,
    pub k_growth: u32,
}

/// `(m+1)(2d)^m`, the exponent carried by `gamma` throughout.
pub fn gamma_exponent(m: u32, d: usize) -> f64 {
    (m as f64 + 1.0) * math::powi(2.0 * d as f64, m)
}

/// Least integer `m` satisfying `m >= (L + sqrt(L^2 + 16 L + 16))/4`.
pub fn m_from_l(l: f64) -> u32 {
    let target = (l + math::sqrt(l * l + 16.0 * l + 16.0)) / 4.0;
    let mut m = math::ceil(target) as u32;
    if m as f64 == target {
        // boundary case: the inequality is not strict, keep m
    }
    if m < 2 {
        m = 2;
    }
    m
}

/// Largest `L` compatible with a given `m` (the constraint inverted).
pub fn l_from_m(m: u32) -> f64 {
    let mf = m as f64;
    2.0 * (mf * mf - 1.0) / (mf + 2.0)
}

/// Least positive integer with `(1 + rho)^eta > 2`.
pub fn eta_from_rho(rho: f64) -> u32 {
    let mut eta = 1u32;
    let mut acc = 1.0 + rho;
    while acc <= 2.0 {
        acc *= 1.0 + rho;
        eta += 1;
        if eta > 10_000 {
            break;
        }
    }
    eta
}

impl Schedule {
    /// Builds the 0-th step parameters from the closed forms. Exactly one of
    /// `m` or `l` may be supplied (supplying both cross-checks them).
    #[allow(clippy::too_many_arguments)]
    pub fn init_schedule(
        epsilon: f64,
        m: Option<u32>,
        l: Option<f64>,
        n: usize,
        d: usize,
        tau: f64,
        s: f64,
        r: f64,
        mode: Mode,
    ) -> Result<Schedule, ScheduleError> {
        if !(epsilon > 0.0) {
            return Err(ScheduleError::BadInput(alloc::format!("epsilon = {epsilon} must be > 0")));
        }
        if !(tau > n as f64 - 1.0) {
            return Err(ScheduleError::BadInput(alloc::format!(
                "tau = {tau} must exceed n - 1 = {}",
                n as f64 - 1.0
            )));
        }
        if !(s > 0.0 && s <= 1.0 && r > 0.0 && r <= 1.0) {
            return Err(ScheduleError::BadInput(alloc::format!("need 0 < s, r <= 1; got s={s} r={r}")));
        }
        if n == 0 || d == 0 {
            return Err(ScheduleError::BadInput(String::from("n and d must be positive")));
        }
        let (m, l_exponent) = match (m, l) {
            (Some(m), None) => (m, l_from_m(m)),
            (None, Some(l)) => {
                if l < 2.0 {
                    return Err(ScheduleError::BadInput(alloc::format!("L = {l} must be >= 2")));
                }
                (m_from_l(l), l)
            }
            (Some(m), Some(l)) => {
                if m < m_from_l(l) {
                    return Err(ScheduleError::BadInput(alloc::format!(
                        "m = {m} is below the least admissible value {} for L = {l}",
                        m_from_l(l)
                    )));
                }
                (m, l)
            }
            (None, None) => {
                return Err(ScheduleError::BadInput(String::from("one of m or L is required")))
            }
        };
        if m < 2 {
            return Err(ScheduleError::BadInput(alloc::format!("m = {m} must be >= 2")));
        }
        let rho = 1.0 / (2.0 * (m as f64 + 1.0));
        let eta = eta_from_rho(rho);
        let ge = gamma_exponent(m, d);
        let gamma0 = math::powf(epsilon, 1.0 / (2.0 * m as f64 * (m as f64 + 1.0) * math::powi(2.0 * d as f64, m)));
        let mu0 = math::powf(epsilon, 1.0 / (8.0 * (m as f64 + 1.0)));
        let s0 = s * mu0 * math::powf(gamma0, ge);
        let mu_star = s * s
            * math::powf(epsilon, 1.0 / (4.0 * (m as f64 + 1.0)))
            * math::powf(gamma0, 2.0 * ge);
        Ok(Schedule {
            mode,
            epsilon,
            m,
            l_exponent,
            n,
            d,
            tau,
            rho,
            eta,
            c: [1.0; 7],
            s_input: s,
            r_input: r,
            gamma0,
            mu0,
            s0,
            r0: r,
            beta0: s,
            sigma0: 1.0,
            mu_star,
            nu: 0,
            r,
            beta: s,
            gamma: gamma0,
            sigma: 1.0,
            s: s0,
            alpha: math::powf(s0, 1.0 / (m as f64 + 1.0)),
            mu: mu0,
            s_minus: s0,
            mu_minus: mu0,
            k_cap: 8,
            k_growth: 2,
        })
    }

    /// The weak-convexity constant from the nondegeneracy certificate; also
    /// resets the current `sigma`.
    pub fn with_sigma0(mut self, sigma0: f64) -> Schedule {
        self.sigma0 = sigma0;
        self.sigma = sigma0;
        self
    }

    pub fn with_k_rule(mut self, k_cap: u32, k_growth: u32) -> Schedule {
        self.k_cap = k_cap;
        self.k_growth = k_growth.max(1);
        self
    }

    pub fn with_constants(mut self, c: [f64; 7]) -> Schedule {
        self.c = c;
        self
    }

    /// Truncation cutoff for the upcoming step (`K_{nu+1}`). Paper-faithful
    /// mode evaluates `([log 1/s] + 1)^{3 eta}` (often astronomically large,
    /// reported as a float); practical mode uses the capped rule.
    pub fn k_plus(&self) -> f64 {
        match self.mode {
            Mode::PaperFaithful => {
                let base = math::floor(math::ln(1.0 / self.s)) + 1.0;
                math::powf(base, 3.0 * self.eta as f64)
            }
            Mode::Practical => {
                self.k_cap as f64 * math::powi(self.k_growth as f64, self.nu)
            }
        }
    }

    /// `k_plus` clamped into a usable integer cutoff.
    pub fn k_plus_int(&self) -> u32 {
        let k = self.k_plus();
        if k >= u32::MAX as f64 {
            u32::MAX
        } else {
            k as u32
        }
    }

    /// Next-step values of the halving-plus-quarter recursions.
    pub fn r_next(&self) -> f64 {
        self.r / 2.0 + self.r0 / 4.0
    }

    pub fn beta_next(&self) -> f64 {
        self.beta / 2.0 + self.beta0 / 4.0
    }

    pub fn gamma_next(&self) -> f64 {
        self.gamma / 2.0 + self.gamma0 / 4.0
    }

    pub fn sigma_next(&self) -> f64 {
        self.sigma / 2.0 + self.sigma0 / 4.0
    }

    pub fn s_next(&self) -> f64 {
        self.alpha * self.s / 8.0
    }

    pub fn mu_next(&self) -> f64 {
        math::powi(8.0, self.m) * self.c[0] * self.mu * math::powf(self.s, self.rho)
    }

    /// Advances every sequence by one step.
    pub fn advance(&mut self) {
        let s_new = self.s_next();
        let mu_new = self.mu_next();
        self.s_minus = self.s;
        self.mu_minus = self.mu;
        self.r = self.r_next();
        self.beta = self.beta_next();
        self.gamma = self.gamma_next();
        self.sigma = self.sigma_next();
        self.s = s_new;
        self.mu = mu_new;
        self.alpha = math::powf(s_new, 1.0 / (self.m as f64 + 1.0));
        self.nu += 1;
    }

    /// Closed form `r_nu = r0 (1/2 + 1/2^{nu+1})`.
    pub fn r_closed(&self, nu: u32) -> f64 {
        self.r0 * (0.5 + math::powi(0.5, nu + 1))
    }

    /// Closed form `gamma_nu = gamma0 (1/2 + 1/2^{nu+1})`.
    pub fn gamma_closed(&self, nu: u32) -> f64 {
        self.gamma0 * (0.5 + math::powi(0.5, nu + 1))
    }

    /// Closed form for `s_nu`:
    /// `(1/8)^{(m+1)(B^nu - 1)} s0^{B^nu}` with `B = 1 + 1/(m+1)`.
    pub fn s_closed(&self, nu: u32) -> f64 {
        let b = 1.0 + 1.0 / (self.m as f64 + 1.0);
        let bnu = math::powf(b, nu as f64);
        math::powf(0.125, (self.m as f64 + 1.0) * (bnu - 1.0)) * math::powf(self.s0, bnu)
    }

    /// The target perturbation bound `gamma^{(m+1)(2d)^m} s^m mu` at the
    /// current step.
    pub fn p_bound(&self) -> f64 {
        math::powf(self.gamma, gamma_exponent(self.m, self.d))
            * math::powi(self.s, self.m)
            * self.mu
    }

    /// `(s_minus^{m-1} mu_minus)^{1/L}`: the translation search radius.
    pub fn shift_ball_radius(&self) -> f64 {
        math::powf(
            math::powi(self.s_minus, self.m - 1) * self.mu_minus,
            1.0 / self.l_exponent,
        )
    }
}

/// Number of lattice points in `Z^n` with l1 norm exactly `kappa`, as a log
/// (the counts overflow f64 for large `kappa` and the caller sums in
/// log-space).
fn ln_lattice_count(n: usize, kappa: f64) -> f64 {
    if kappa == 0.0 {
        return 0.0;
    }
    // sum over i = number of nonzero coordinates:
    //   2^i C(n, i) C(kappa-1, i-1)
    let mut acc = f64::NEG_INFINITY;
    for i in 1..=n.min(kappa as usize) {
        let ln_term = i as f64 * math::ln(2.0) + ln_choose(n as f64, i as f64)
            + ln_choose(kappa - 1.0, i as f64 - 1.0);
        acc = math::log_add_exp(acc, ln_term);
    }
    acc
}

fn ln_choose(n: f64, k: f64) -> f64 {
    if k < 0.0 || k > n {
        return f64::NEG_INFINITY;
    }
    math::lgamma(n + 1.0) - math::lgamma(k + 1.0) - math::lgamma(n - k + 1.0)
}

/// The mode sum
/// `Gamma(dr) = sum_{0 < |k| <= K} |k|^{(m+1)(2d)^m tau + m} e^{-|k| dr / 8}`
/// computed in log-space (the value may overflow to infinity, which the
/// hypothesis comparisons handle). Returns `(value, ln_value)`.
pub fn gamma_mode_sum(n: usize, m: u32, d: usize, tau: f64, dr: f64, k_plus: f64) -> (f64, f64) {
    let power = gamma_exponent(m, d) * tau + m as f64;
    let a = dr / 8.0;
    let mut ln_acc = f64::NEG_INFINITY;
    let mut kappa = 1.0f64;
    let mut ln_peak = f64::NEG_INFINITY;
    while kappa <= k_plus {
        let ln_term = ln_lattice_count(n, kappa) + power * math::ln(kappa) - a * kappa;
        ln_acc = math::log_add_exp(ln_acc, ln_term);
        if ln_term > ln_peak {
            ln_peak = ln_term;
        }
        // once terms are decaying and negligibly small the tail is spent
        if kappa > power / a && ln_term < ln_peak - 80.0 {
            break;
        }
        if kappa > 1e7 {
            // log-space extrapolation is pointless past this; the sum is
            // already astronomically large or fully converged
            break;
        }
        kappa += 1.0;
    }
    (math::exp(ln_acc), ln_acc)
}

/// Exact value of `int_K^inf t^n e^{-a t} dt` for integer `n >= 0`:
/// `(n!/a^{n+1}) e^{-aK} sum_{j<=n} (aK)^j / j!`.
pub fn tail_integral(n: usize, a: f64, k: f64) -> f64 {
    // evaluated in log-space to survive huge K
    let mut ln_sum = f64::NEG_INFINITY;
    let ak = a * k;
    for j in 0..=n {
        let ln_term = j as f64 * math::ln(ak.max(1e-300)) - math::lgamma(j as f64 + 1.0);
        ln_sum = math::log_add_exp(ln_sum, ln_term);
    }
    let ln_value = math::lgamma(n as f64 + 1.0) - (n as f64 + 1.0) * math::ln(a) - ak + ln_sum;
    math::exp(ln_value)
}

/// A report table of the closed-form checks used by the schedule tests.
pub fn closed_form_table(sched: &Schedule, steps: u32) -> Vec<(u32, f64, f64, f64)> {
    let mut clone = sched.clone();
    let mut rows = Vec::new();
    for nu in 0..=steps {
        rows.push((nu, clone.r, clone.gamma, clone.s));
        clone.advance();
    }
    rows
}
