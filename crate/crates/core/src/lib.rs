//! Numerical toolkit for multiple averages on multiplicative sublattices of
//! `N^d`.
//!
//! The object of study is the multiple sum `S = sum_{i in box} sigma_i *
//! sigma_{p (.) i}` of products of independent biased spins, where `p (.) i`
//! multiplies each coordinate by a fixed integer. The crate provides, layer
//! by layer:
//!
//! * [`lattice`] — exact decomposition of finite boxes into the geometric
//!   chains induced by the multiplier map, with closed-form per-length counts
//!   and their asymptotic densities;
//! * [`ising`] — one-dimensional transfer-matrix quantities (eigenvalues,
//!   boundary overlaps, partition functions, per-chain exponential moments)
//!   in numerically guarded form;
//! * [`free_energy`] — the scaled cumulant generating functions ("free
//!   energies") of the multiple sum: general bias, symmetric bias,
//!   weight-profiled and arithmetic-weighted variants, and boundary-condition
//!   variants, all as interchangeable evaluators;
//! * [`rate`] — Fenchel–Legendre transforms of the free energies (large
//!   deviation rate functions) and the Hausdorff dimension spectra of
//!   level sets of weighted averages;
//! * [`oracle`] — independent ground truth: brute-force enumeration over all
//!   spin assignments, the exact symmetric-bias distribution, and seeded
//!   Monte Carlo estimators;
//! * [`io`] — deterministic CSV/JSON readers and writers for every record
//!   the toolkit exchanges;
//! * [`figures`] — preset free-energy sweeps over bias/coupling grids.

// Validation deliberately writes `!(x > lo && x < hi)` instead of the
// de-Morganized form: the negated comparison is false for NaN, so NaN input
// lands on the rejection path.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod figures;
pub mod free_energy;
pub mod io;
pub mod ising;
pub mod lattice;
pub mod oracle;
pub mod rate;

pub use error::Error;
