//! Core algebra and iteration machinery for constructing lower-dimensional
//! invariant tori of completely degenerate Hamiltonians: truncated
//! Taylor-Fourier series, the quasi-linear homological equation with
//! small-divisor certificates, Brouwer-degree nondegeneracy checks, the
//! degree-guided translation step, the KAM stepper with its schedule and
//! hypothesis verification, parameter-region resonance filtering, and direct
//! flow verification.
//!
//! The crate is `no_std` (alloc only); IO, file formats and the CLI live in
//! the companion `kamtori-cli` crate.

#![no_std]

extern crate alloc;

pub mod math;
pub mod series;

pub mod degree;
pub mod engine;
pub mod flow;
pub mod homological;
pub mod linalg;
pub mod normal_form;
pub mod region;
pub mod schedule;
pub mod translate;

pub use series::{Caps, Dims, DomainParams, MultiIndex, SeriesError, TfSeries, Var, C64};
