//! The normal form `N = e + <omega, y> + h_tilde(y) + g(z) + g_bar(y, z)`
//! carried through the iteration, together with its shape constraints and
//! the accumulated normal-direction shift `zeta`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::series::{Caps, Dims, MultiIndex, TfSeries, C64};

#[derive(Clone, Debug, PartialEq)]
pub enum ShapeError {
    HTilde(String),
    G(String),
    GBar(String),
    Lengths(String),
}

impl fmt::Display for ShapeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeError::HTilde(m) => write!(f, "h_tilde shape violation: {m}"),
            ShapeError::G(m) => write!(f, "g shape violation: {m}"),
            ShapeError::GBar(m) => write!(f, "g_bar shape violation: {m}"),
            ShapeError::Lengths(m) => write!(f, "normal form field mismatch: {m}"),
        }
    }
}

impl core::error::Error for ShapeError {}

/// The tuple `(e, omega, h_tilde, g, g_bar)` plus the current shift `zeta`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalForm {
    pub e: f64,
    pub omega: Vec<f64>,
    /// `y`-only part, every term of `y`-degree >= 2.
    pub h_tilde: TfSeries,
    /// `z`-only part with vanishing value and gradient at the origin
    /// (gradient up to the translation-step tolerance).
    pub g: TfSeries,
    /// Mixed part: every term has `|iota| >= 1`, `|j| >= 1`, `2|iota|+|j| <= m`.
    pub g_bar: TfSeries,
    /// Accumulated translation in `z` (length `2d`).
    pub zeta: Vec<f64>,
}

impl NormalForm {
    pub fn new(
        e: f64,
        omega: Vec<f64>,
        h_tilde: TfSeries,
        g: TfSeries,
        g_bar: TfSeries,
    ) -> Result<Self, ShapeError> {
        let dims = h_tilde.dims();
        if omega.len() != dims.n {
            return Err(ShapeError::Lengths(alloc::format!(
                "omega has {} entries, n = {}",
                omega.len(),
                dims.n
            )));
        }
        if g.dims() != dims || g_bar.dims() != dims {
            return Err(ShapeError::Lengths(String::from("series dims disagree")));
        }
        let zeta = vec![0.0; dims.zn()];
        let nf = NormalForm { e, omega, h_tilde, g, g_bar, zeta };
        nf.validate_shape(0.0)?;
        Ok(nf)
    }

    pub fn dims(&self) -> Dims {
        self.h_tilde.dims()
    }

    /// Checks the sector constraints. `grad_tol` bounds the magnitude allowed
    /// in the linear `z`-part of `g` (the translation step only kills it up
    /// to the shift solver's tolerance).
    pub fn validate_shape(&self, grad_tol: f64) -> Result<(), ShapeError> {
        for (idx, _) in self.h_tilde.terms() {
            if !idx.is_zero_mode() || idx.j_norm() != 0 || idx.iota_norm() < 2 {
                return Err(ShapeError::HTilde(alloc::format!("term {idx:?}")));
            }
        }
        for (idx, c) in self.g.terms() {
            if !idx.is_zero_mode() || idx.iota_norm() != 0 {
                return Err(ShapeError::G(alloc::format!("term {idx:?}")));
            }
            let jn = idx.j_norm();
            if jn == 0 {
                return Err(ShapeError::G(alloc::format!("constant term {c}")));
            }
            if jn == 1 && crate::series::cabs(*c) > grad_tol {
                return Err(ShapeError::G(alloc::format!(
                    "linear term {idx:?} with coefficient {c} exceeds tolerance {grad_tol:e}"
                )));
            }
        }
        for (idx, _) in self.g_bar.terms() {
            if !idx.is_zero_mode() || idx.iota_norm() < 1 || idx.j_norm() < 1 {
                return Err(ShapeError::GBar(alloc::format!("term {idx:?}")));
            }
        }
        Ok(())
    }

    /// Assembles the full series `e + <omega, y> + h_tilde + g + g_bar`.
    pub fn assemble(&self, caps: Caps) -> TfSeries {
        let dims = self.dims();
        let mut out = TfSeries::zero(dims, caps);
        let zero_k = vec![0i32; dims.n];
        let zero_j = vec![0u32; dims.zn()];
        let mut iota = vec![0u32; dims.n];
        out.add_term(&zero_k, &iota, &zero_j, C64::new(self.e, 0.0)).expect("const term");
        for (i, &wi) in self.omega.iter().enumerate() {
            iota[i] = 1;
            out.add_term(&zero_k, &iota, &zero_j, C64::new(wi, 0.0)).expect("omega term");
            iota[i] = 0;
        }
        for (idx, &c) in self.h_tilde.terms() {
            out.insert_term_idx(idx.clone(), c);
        }
        for (idx, &c) in self.g.terms() {
            out.insert_term_idx(idx.clone(), c);
        }
        for (idx, &c) in self.g_bar.terms() {
            out.insert_term_idx(idx.clone(), c);
        }
        out
    }

    /// Gradient of `g` at `z = 0` (the linear coefficients of `g`).
    pub fn grad_g_at_origin(&self) -> Vec<f64> {
        let dims = self.dims();
        let mut grad = vec![0.0; dims.zn()];
        for (idx, &c) in self.g.terms() {
            if idx.j_norm() == 1 {
                let a = idx.j.iter().position(|&e| e == 1).expect("degree-1 term");
                grad[a] += c.re;
            }
        }
        grad
    }

    /// Hessian of `g` at `z = 0` as a dense `2d x 2d` row-major matrix.
    pub fn hess_g_at_origin(&self) -> Vec<f64> {
        let zn = self.dims().zn();
        let mut hess = vec![0.0; zn * zn];
        for (idx, &c) in self.g.terms() {
            if idx.j_norm() != 2 {
                continue;
            }
            let nz: Vec<usize> = (0..zn).filter(|&a| idx.j[a] > 0).collect();
            if nz.len() == 1 {
                let a = nz[0]; // z_a^2 contributes 2c on the diagonal
                hess[a * zn + a] += 2.0 * c.re;
            } else {
                let (a, b) = (nz[0], nz[1]);
                hess[a * zn + b] += c.re;
                hess[b * zn + a] += c.re;
            }
        }
        hess
    }
}

impl TfSeries {
    pub(crate) fn insert_term_idx(&mut self, idx: MultiIndex, c: C64) {
        self.insert_raw(idx, c);
    }
}
