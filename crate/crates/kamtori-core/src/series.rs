//! Truncated Taylor-Fourier series in `(x, y, z)`: Fourier modes in the
//! angles `x`, monomials in the actions `y` and the normal variables
//! `z = (u, v)`, with complex coefficients kept Hermitian-symmetric so the
//! series is real on real arguments.
//!
//! Every operation is a pure function of immutable values. Terms are held in
//! a `BTreeMap` keyed by the multi-index, which fixes a deterministic
//! (lexicographic) term order for serialization and iteration.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write as _;

use num_complex::Complex;

use crate::math;

pub type C64 = Complex<f64>;

/// Coefficients with magnitude below this are dropped during
/// canonicalization to keep underflow noise out of the sparse maps.
pub const COEFF_FLOOR: f64 = 1e-300;

#[inline]
pub(crate) fn cabs(c: C64) -> f64 {
    math::hypot(c.re, c.im)
}

/// Torus dimension `n` and half normal dimension `d` (so `z` has length `2d`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub n: usize,
    pub d: usize,
}

impl Dims {
    pub fn new(n: usize, d: usize) -> Self {
        Dims { n, d }
    }

    #[inline]
    pub fn zn(&self) -> usize {
        2 * self.d
    }
}

/// Truncation caps: largest kept Fourier norm `|k|` and weighted degree
/// `2|iota| + |j|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Caps {
    pub k_max: u32,
    pub w_max: u32,
}

impl Caps {
    pub fn new(k_max: u32, w_max: u32) -> Self {
        Caps { k_max, w_max }
    }

    pub fn join(a: Caps, b: Caps) -> Caps {
        Caps {
            k_max: a.k_max.max(b.k_max),
            w_max: a.w_max.max(b.w_max),
        }
    }
}

/// Analyticity domain parameters for `D(s, r)`: `|Im x| < r`, `|y| < s^2`,
/// `|z| < s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DomainParams {
    pub s: f64,
    pub r: f64,
}

impl DomainParams {
    pub fn new(s: f64, r: f64) -> Result<Self, SeriesError> {
        if !(s > 0.0 && s < 1.0 && r > 0.0 && r < 1.0) {
            return Err(SeriesError::InvalidDomain { s, r });
        }
        Ok(DomainParams { s, r })
    }
}

/// Index of one term: Fourier mode `k`, `y`-exponent `iota`, `z`-exponent `j`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex {
    pub k: Vec<i32>,
    pub iota: Vec<u32>,
    pub j: Vec<u32>,
}

impl MultiIndex {
    pub fn new(k: Vec<i32>, iota: Vec<u32>, j: Vec<u32>) -> Self {
        MultiIndex { k, iota, j }
    }

    /// `|k|` in the lattice l1 norm.
    pub fn k_norm(&self) -> u32 {
        self.k.iter().map(|&ki| ki.unsigned_abs()).sum()
    }

    /// Weighted degree `2|iota| + |j|`.
    pub fn weight(&self) -> u32 {
        let wy: u32 = self.iota.iter().sum();
        let wz: u32 = self.j.iter().sum();
        2 * wy + wz
    }

    pub fn iota_norm(&self) -> u32 {
        self.iota.iter().sum()
    }

    pub fn j_norm(&self) -> u32 {
        self.j.iter().sum()
    }

    pub fn is_zero_mode(&self) -> bool {
        self.k.iter().all(|&ki| ki == 0)
    }

    /// Index with the Fourier mode negated (the Hermitian partner).
    pub fn conjugate_partner(&self) -> MultiIndex {
        MultiIndex {
            k: self.k.iter().map(|&ki| -ki).collect(),
            iota: self.iota.clone(),
            j: self.j.clone(),
        }
    }

    /// True when the first nonzero component of `k` is positive, or `k = 0`.
    /// Exactly one of each Hermitian pair is canonical.
    pub fn is_canonical_mode(&self) -> bool {
        for &ki in &self.k {
            if ki > 0 {
                return true;
            }
            if ki < 0 {
                return false;
            }
        }
        true
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    X(usize),
    Y(usize),
    Z(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub enum SeriesError {
    DimMismatch { left: Dims, right: Dims },
    IndexLen { expected: usize, found: usize, part: &'static str },
    InvalidVar { var: Var, dims: Dims },
    InvalidDomain { s: f64, r: f64 },
    NonConvergentLie { order: usize, last_norm: f64 },
    Parse { line: usize, msg: String },
}

impl fmt::Display for SeriesError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeriesError::DimMismatch { left, right } => write!(
                f,
                "dimension mismatch: (n={}, d={}) vs (n={}, d={})",
                left.n, left.d, right.n, right.d
            ),
            SeriesError::IndexLen { expected, found, part } => {
                write!(f, "{part} index has length {found}, expected {expected}")
            }
            SeriesError::InvalidVar { var, dims } => {
                write!(f, "variable {var:?} out of range for n={}, d={}", dims.n, dims.d)
            }
            SeriesError::InvalidDomain { s, r } => {
                write!(f, "domain parameters must satisfy 0<s<1, 0<r<1; got s={s}, r={r}")
            }
            SeriesError::NonConvergentLie { order, last_norm } => write!(
                f,
                "Lie series failed to contract below the floor by order {order} (last term norm {last_norm:e})"
            ),
            SeriesError::Parse { line, msg } => write!(f, "parse error at line {line}: {msg}"),
        }
    }
}

impl core::error::Error for SeriesError {}

/// Sparse truncated Taylor-Fourier series.
#[derive(Clone, Debug, PartialEq)]
pub struct TfSeries {
    dims: Dims,
    caps: Caps,
    coeffs: BTreeMap<MultiIndex, C64>,
}

impl TfSeries {
    pub fn zero(dims: Dims, caps: Caps) -> Self {
        TfSeries { dims, caps, coeffs: BTreeMap::new() }
    }

    pub fn constant(dims: Dims, caps: Caps, value: f64) -> Self {
        let mut s = TfSeries::zero(dims, caps);
        let idx = MultiIndex::new(vec![0; dims.n], vec![0; dims.n], vec![0; dims.zn()]);
        s.insert_raw(idx, C64::new(value, 0.0));
        s
    }

    pub fn monomial(
        dims: Dims,
        caps: Caps,
        k: &[i32],
        iota: &[u32],
        j: &[u32],
        coeff: C64,
    ) -> Result<Self, SeriesError> {
        if k.len() != dims.n {
            return Err(SeriesError::IndexLen { expected: dims.n, found: k.len(), part: "k" });
        }
        if iota.len() != dims.n {
            return Err(SeriesError::IndexLen { expected: dims.n, found: iota.len(), part: "iota" });
        }
        if j.len() != dims.zn() {
            return Err(SeriesError::IndexLen { expected: dims.zn(), found: j.len(), part: "j" });
        }
        let mut s = TfSeries::zero(dims, caps);
        s.insert_raw(MultiIndex::new(k.to_vec(), iota.to_vec(), j.to_vec()), coeff);
        Ok(s)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn caps(&self) -> Caps {
        self.caps
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &C64)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, idx: &MultiIndex) -> C64 {
        self.coeffs.get(idx).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    /// Canonicalizing insert: accumulates, drops sub-floor magnitudes and
    /// anything beyond the caps.
    pub(crate) fn insert_raw(&mut self, idx: MultiIndex, c: C64) {
        if idx.k_norm() > self.caps.k_max || idx.weight() > self.caps.w_max {
            return;
        }
        let entry = self.coeffs.entry(idx);
        match entry {
            alloc::collections::btree_map::Entry::Vacant(v) => {
                if cabs(c) >= COEFF_FLOOR {
                    v.insert(c);
                }
            }
            alloc::collections::btree_map::Entry::Occupied(mut o) => {
                let acc = *o.get() + c;
                if cabs(acc) >= COEFF_FLOOR {
                    *o.get_mut() = acc;
                } else {
                    o.remove();
                }
            }
        }
    }

    /// Adds a term, validating index lengths against the dims.
    pub fn add_term(&mut self, k: &[i32], iota: &[u32], j: &[u32], c: C64) -> Result<(), SeriesError> {
        if k.len() != self.dims.n {
            return Err(SeriesError::IndexLen { expected: self.dims.n, found: k.len(), part: "k" });
        }
        if iota.len() != self.dims.n {
            return Err(SeriesError::IndexLen { expected: self.dims.n, found: iota.len(), part: "iota" });
        }
        if j.len() != self.dims.zn() {
            return Err(SeriesError::IndexLen { expected: self.dims.zn(), found: j.len(), part: "j" });
        }
        self.insert_raw(MultiIndex::new(k.to_vec(), iota.to_vec(), j.to_vec()), c);
        Ok(())
    }

    /// Re-truncates to new caps.
    pub fn with_caps(&self, caps: Caps) -> TfSeries {
        let mut out = TfSeries::zero(self.dims, caps);
        for (idx, &c) in &self.coeffs {
            out.insert_raw(idx.clone(), c);
        }
        out
    }

    /// Keeps only terms satisfying the predicate.
    pub fn project(&self, keep: impl Fn(&MultiIndex) -> bool) -> TfSeries {
        let mut out = TfSeries::zero(self.dims, self.caps);
        for (idx, &c) in &self.coeffs {
            if keep(idx) {
                out.insert_raw(idx.clone(), c);
            }
        }
        out
    }

    pub fn scale(&self, a: C64) -> TfSeries {
        let mut out = TfSeries::zero(self.dims, self.caps);
        for (idx, &c) in &self.coeffs {
            out.insert_raw(idx.clone(), a * c);
        }
        out
    }

    /// Coefficientwise `a*F + G`; caps are the componentwise max of the inputs.
    pub fn add_scale(a: C64, f: &TfSeries, g: &TfSeries) -> Result<TfSeries, SeriesError> {
        if f.dims != g.dims {
            return Err(SeriesError::DimMismatch { left: f.dims, right: g.dims });
        }
        let mut out = TfSeries::zero(f.dims, Caps::join(f.caps, g.caps));
        for (idx, &c) in &g.coeffs {
            out.insert_raw(idx.clone(), c);
        }
        if cabs(a) > 0.0 {
            for (idx, &c) in &f.coeffs {
                out.insert_raw(idx.clone(), a * c);
            }
        }
        Ok(out)
    }

    /// Convolution product truncated to `caps`.
    pub fn multiply(&self, other: &TfSeries, caps: Caps) -> Result<TfSeries, SeriesError> {
        if self.dims != other.dims {
            return Err(SeriesError::DimMismatch { left: self.dims, right: other.dims });
        }
        let mut out = TfSeries::zero(self.dims, caps);
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        for (ia, &ca) in &small.coeffs {
            for (ib, &cb) in &large.coeffs {
                let k: Vec<i32> = ia.k.iter().zip(&ib.k).map(|(a, b)| a + b).collect();
                let iota: Vec<u32> = ia.iota.iter().zip(&ib.iota).map(|(a, b)| a + b).collect();
                let j: Vec<u32> = ia.j.iter().zip(&ib.j).map(|(a, b)| a + b).collect();
                out.insert_raw(MultiIndex::new(k, iota, j), ca * cb);
            }
        }
        Ok(out)
    }

    /// Term-by-term partial derivative. `d/dx_i` multiplies by `sqrt(-1) k_i`.
    pub fn partial_derivative(&self, var: Var) -> Result<TfSeries, SeriesError> {
        let valid = match var {
            Var::X(i) | Var::Y(i) => i < self.dims.n,
            Var::Z(a) => a < self.dims.zn(),
        };
        if !valid {
            return Err(SeriesError::InvalidVar { var, dims: self.dims });
        }
        let mut out = TfSeries::zero(self.dims, self.caps);
        for (idx, &c) in &self.coeffs {
            match var {
                Var::X(i) => {
                    let ki = idx.k[i];
                    if ki != 0 {
                        out.insert_raw(idx.clone(), c * C64::new(0.0, ki as f64));
                    }
                }
                Var::Y(i) => {
                    let e = idx.iota[i];
                    if e > 0 {
                        let mut nidx = idx.clone();
                        nidx.iota[i] = e - 1;
                        out.insert_raw(nidx, c * (e as f64));
                    }
                }
                Var::Z(a) => {
                    let e = idx.j[a];
                    if e > 0 {
                        let mut nidx = idx.clone();
                        nidx.j[a] = e - 1;
                        out.insert_raw(nidx, c * (e as f64));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Poisson bracket `{F, G} = -dF/dy . dG/dx + dF/dx . dG/dy + dF/dz J dG/dz`
    /// with `J = [[0, I_d], [-I_d, 0]]`.
    pub fn poisson_bracket(&self, other: &TfSeries, caps: Caps) -> Result<TfSeries, SeriesError> {
        if self.dims != other.dims {
            return Err(SeriesError::DimMismatch { left: self.dims, right: other.dims });
        }
        let mut acc = TfSeries::zero(self.dims, caps);
        for i in 0..self.dims.n {
            let fy = self.partial_derivative(Var::Y(i))?;
            if !fy.is_zero() {
                let gx = other.partial_derivative(Var::X(i))?;
                if !gx.is_zero() {
                    let prod = fy.multiply(&gx, caps)?;
                    acc = TfSeries::add_scale(C64::new(-1.0, 0.0), &prod, &acc)?;
                }
            }
            let fx = self.partial_derivative(Var::X(i))?;
            if !fx.is_zero() {
                let gy = other.partial_derivative(Var::Y(i))?;
                if !gy.is_zero() {
                    let prod = fx.multiply(&gy, caps)?;
                    acc = TfSeries::add_scale(C64::new(1.0, 0.0), &prod, &acc)?;
                }
            }
        }
        let zb = z_bracket(self, other, caps)?;
        acc = TfSeries::add_scale(C64::new(1.0, 0.0), &zb, &acc)?;
        Ok(acc.with_caps(caps))
    }

    /// Splits into the kept truncation (modes `|k| <= k_plus`, weighted degree
    /// `<= m`) and the exact tail, so that `R + tail = P` coefficientwise.
    pub fn truncate(&self, k_plus: u32, m: u32) -> (TfSeries, TfSeries) {
        let mut kept = TfSeries::zero(self.dims, self.caps);
        let mut tail = TfSeries::zero(self.dims, self.caps);
        for (idx, &c) in &self.coeffs {
            if idx.k_norm() <= k_plus && idx.weight() <= m {
                kept.insert_raw(idx.clone(), c);
            } else {
                tail.insert_raw(idx.clone(), c);
            }
        }
        (kept, tail)
    }

    /// Angular average: keeps exactly the `k = 0` terms.
    pub fn average(&self) -> TfSeries {
        self.project(|idx| idx.is_zero_mode())
    }

    /// Composition with the translation `z -> z + delta`, expanded by the
    /// binomial theorem and truncated to `caps`.
    pub fn shift_z(&self, delta: &[f64], caps: Caps) -> Result<TfSeries, SeriesError> {
        if delta.len() != self.dims.zn() {
            return Err(SeriesError::IndexLen {
                expected: self.dims.zn(),
                found: delta.len(),
                part: "delta",
            });
        }
        if delta.iter().all(|&d| d == 0.0) {
            return Ok(self.with_caps(caps));
        }
        let mut out = TfSeries::zero(self.dims, caps);
        let zn = self.dims.zn();
        for (idx, &c) in &self.coeffs {
            // Expand prod_a (z_a + delta_a)^{j_a}.
            let mut expansion: Vec<(Vec<u32>, f64)> = vec![(Vec::with_capacity(zn), 1.0)];
            for a in 0..zn {
                let ja = idx.j[a];
                let da = delta[a];
                let mut next = Vec::with_capacity(expansion.len() * (ja as usize + 1));
                for (stem, w) in &expansion {
                    if da == 0.0 {
                        let mut s = stem.clone();
                        s.push(ja);
                        next.push((s, *w));
                        continue;
                    }
                    for t in 0..=ja {
                        let mut s = stem.clone();
                        s.push(t);
                        let bc = binomial(ja, t);
                        next.push((s, w * bc * math::powi(da, ja - t)));
                    }
                }
                expansion = next;
            }
            for (jnew, w) in expansion {
                if w == 0.0 {
                    continue;
                }
                out.insert_raw(MultiIndex::new(idx.k.clone(), idx.iota.clone(), jnew), c * w);
            }
        }
        Ok(out)
    }

    /// Weighted-l1 majorant `sum |c| s^(2|iota|+|j|) e^(|k| r)`, an upper bound
    /// for the sup norm on `D(s, r)`.
    pub fn majorant_norm(&self, dom: DomainParams) -> f64 {
        let mut acc = 0.0;
        for (idx, &c) in &self.coeffs {
            acc += cabs(c)
                * math::powi(dom.s, idx.weight())
                * math::exp(idx.k_norm() as f64 * dom.r);
        }
        acc
    }

    /// Evaluates the finite sum at a real point. The Hermitian-symmetry
    /// invariant makes the value real; the real part is returned.
    pub fn evaluate(&self, x: &[f64], y: &[f64], z: &[f64]) -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for (idx, &c) in &self.coeffs {
            let mut phase = 0.0;
            for (ki, xi) in idx.k.iter().zip(x) {
                phase += *ki as f64 * xi;
            }
            let mut mono = 1.0;
            for (e, v) in idx.iota.iter().zip(y) {
                if *e > 0 {
                    mono *= math::powi(*v, *e);
                }
            }
            for (e, v) in idx.j.iter().zip(z) {
                if *e > 0 {
                    mono *= math::powi(*v, *e);
                }
            }
            acc += c * C64::new(math::cos(phase), math::sin(phase)) * mono;
        }
        acc.re
    }

    /// Gradient with respect to `z` evaluated at a real point.
    pub fn grad_z_at(&self, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        let zn = self.dims.zn();
        let mut out = Vec::with_capacity(zn);
        for a in 0..zn {
            let da = self.partial_derivative(Var::Z(a)).expect("valid z index");
            out.push(da.evaluate(x, y, z));
        }
        out
    }

    /// Largest deviation from Hermitian symmetry of the coefficient map.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (idx, &c) in &self.coeffs {
            let partner = self.coeff(&idx.conjugate_partner());
            let defect = cabs(c - partner.conj());
            if defect > worst {
                worst = defect;
            }
        }
        worst
    }

    /// Supremum of coefficient magnitudes (scale estimate).
    pub fn max_coeff(&self) -> f64 {
        self.coeffs.values().map(|&c| cabs(c)).fold(0.0, f64::max)
    }

    // ----- serialization -------------------------------------------------

    /// Line-oriented text form: header `TFS n d Kmax wmax`, then one term per
    /// line `k1 .. kn | i1 .. in | j1 .. j2d | re im` in canonical order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "TFS {} {} {} {}",
            self.dims.n, self.dims.d, self.caps.k_max, self.caps.w_max
        );
        for (idx, c) in &self.coeffs {
            let mut line = String::new();
            for (pos, ki) in idx.k.iter().enumerate() {
                if pos > 0 {
                    line.push(' ');
                }
                let _ = write!(line, "{ki}");
            }
            line.push_str(" |");
            for e in &idx.iota {
                let _ = write!(line, " {e}");
            }
            line.push_str(" |");
            for e in &idx.j {
                let _ = write!(line, " {e}");
            }
            let _ = writeln!(out, "{} | {} {}", line, c.re, c.im);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<TfSeries, SeriesError> {
        let mut lines = text.lines().enumerate();
        let (ln, header) = loop {
            match lines.next() {
                Some((i, l)) if !l.trim().is_empty() => break (i + 1, l.trim()),
                Some(_) => continue,
                None => {
                    return Err(SeriesError::Parse { line: 0, msg: String::from("empty input") })
                }
            }
        };
        let mut hp = header.split_whitespace();
        if hp.next() != Some("TFS") {
            return Err(SeriesError::Parse { line: ln, msg: String::from("missing TFS header") });
        }
        let mut next_usize = |name: &str| -> Result<usize, SeriesError> {
            hp.next()
                .and_then(|t| t.parse::<usize>().ok())
                .ok_or_else(|| SeriesError::Parse { line: ln, msg: alloc::format!("bad {name} in header") })
        };
        let n = next_usize("n")?;
        let d = next_usize("d")?;
        let k_max = next_usize("Kmax")? as u32;
        let w_max = next_usize("wmax")? as u32;
        let dims = Dims::new(n, d);
        let mut series = TfSeries::zero(dims, Caps::new(k_max, w_max));
        for (i, raw) in lines {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, iota, j, c) = parse_term_line(line, dims).map_err(|msg| SeriesError::Parse {
                line: line_no,
                msg,
            })?;
            series.insert_raw(MultiIndex::new(k, iota, j), c);
        }
        Ok(series)
    }
}

/// Parses `k.. | i.. | j.. | re im` against `dims`; shared with the run-spec
/// file format.
pub fn parse_term_line(
    line: &str,
    dims: Dims,
) -> Result<(Vec<i32>, Vec<u32>, Vec<u32>, C64), String> {
    let fields: Vec<&str> = line.split('|').collect();
    if fields.len() != 4 {
        return Err(alloc::format!("expected 4 '|'-separated fields, found {}", fields.len()));
    }
    let k: Vec<i32> = fields[0]
        .split_whitespace()
        .map(|t| t.parse::<i32>().map_err(|_| alloc::format!("bad k entry '{t}'")))
        .collect::<Result<_, _>>()?;
    let iota: Vec<u32> = fields[1]
        .split_whitespace()
        .map(|t| t.parse::<u32>().map_err(|_| alloc::format!("bad iota entry '{t}'")))
        .collect::<Result<_, _>>()?;
    let j: Vec<u32> = fields[2]
        .split_whitespace()
        .map(|t| t.parse::<u32>().map_err(|_| alloc::format!("bad j entry '{t}'")))
        .collect::<Result<_, _>>()?;
    if k.len() != dims.n {
        return Err(alloc::format!("k has {} entries, expected n={}", k.len(), dims.n));
    }
    if iota.len() != dims.n {
        return Err(alloc::format!("iota has {} entries, expected n={}", iota.len(), dims.n));
    }
    if j.len() != dims.zn() {
        return Err(alloc::format!("j has {} entries, expected 2d={}", j.len(), dims.zn()));
    }
    let cparts: Vec<&str> = fields[3].split_whitespace().collect();
    if cparts.len() != 2 {
        return Err(alloc::format!("coefficient needs 're im', found {} fields", cparts.len()));
    }
    let re = cparts[0].parse::<f64>().map_err(|_| alloc::format!("bad re '{}'", cparts[0]))?;
    let im = cparts[1].parse::<f64>().map_err(|_| alloc::format!("bad im '{}'", cparts[1]))?;
    Ok((k, iota, j, C64::new(re, im)))
}

/// The `z`-part of the bracket, `dF/dz J dG/dz`, on its own. This is the
/// operator behind the correction term `Q` and the divisor matrices.
pub fn z_bracket(f: &TfSeries, g: &TfSeries, caps: Caps) -> Result<TfSeries, SeriesError> {
    if f.dims() != g.dims() {
        return Err(SeriesError::DimMismatch { left: f.dims(), right: g.dims() });
    }
    let d = f.dims().d;
    let mut acc = TfSeries::zero(f.dims(), caps);
    for l in 0..d {
        let fu = f.partial_derivative(Var::Z(l))?;
        if !fu.is_zero() {
            let gv = g.partial_derivative(Var::Z(d + l))?;
            if !gv.is_zero() {
                let prod = fu.multiply(&gv, caps)?;
                acc = TfSeries::add_scale(C64::new(1.0, 0.0), &prod, &acc)?;
            }
        }
        let fv = f.partial_derivative(Var::Z(d + l))?;
        if !fv.is_zero() {
            let gu = g.partial_derivative(Var::Z(l))?;
            if !gu.is_zero() {
                let prod = fv.multiply(&gu, caps)?;
                acc = TfSeries::add_scale(C64::new(-1.0, 0.0), &prod, &acc)?;
            }
        }
    }
    Ok(acc)
}

/// Exponential-of-adjoint Lie transform: `sum_q (1/q!) ad_F^q H` truncated to
/// `caps`, where `ad_F H = {H, F}`. Stops once a term's majorant norm falls
/// below `floor`; errors if that never happens within `order_cap` orders.
pub fn lie_transform(
    h: &TfSeries,
    f: &TfSeries,
    caps: Caps,
    dom: DomainParams,
    order_cap: usize,
    floor: f64,
) -> Result<TfSeries, SeriesError> {
    if h.dims() != f.dims() {
        return Err(SeriesError::DimMismatch { left: h.dims(), right: f.dims() });
    }
    let mut acc = h.with_caps(caps);
    if f.is_zero() {
        return Ok(acc);
    }
    let mut term = h.with_caps(caps);
    let mut last_norm = f64::INFINITY;
    for q in 1..=order_cap {
        term = term.poisson_bracket(f, caps)?;
        term = term.scale(C64::new(1.0 / q as f64, 0.0));
        let norm = term.majorant_norm(dom);
        acc = TfSeries::add_scale(C64::new(1.0, 0.0), &term, &acc)?;
        if norm <= floor || term.is_zero() {
            return Ok(acc);
        }
        last_norm = norm;
    }
    Err(SeriesError::NonConvergentLie { order: order_cap, last_norm })
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k.min(n));
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}
