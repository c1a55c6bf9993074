//! Large-deviation rate functions and dimension spectra.
//!
//! The rate function of a multiple average is the Fenchel-Legendre transform
//! of its free energy, `I(x) = sup_eta (eta*x - F(eta))`.  All in-scope free
//! energies are convex and differentiable, so the supremum is attained where
//! `F'(eta) = x` and [`legendre_rate`] solves that equation by monotone
//! bisection on an expanding bracket.  Closed forms are provided for the
//! even-bias case ([`symmetric_rate_closed`]) and the weighted case
//! ([`weighted_rate`]), whose derivative is a finite tanh sum.
//!
//! The same tilting parameter drives the dimension spectra of weighted-average
//! level sets: [`level_set_dimension`] evaluates the entropy-over-`log 2`
//! formula at the tilt matching a prescribed level `alpha`, and
//! [`mobius_level_set_dimension`] is its closed form for the
//! multiplicative-parity weight.

use std::f64::consts::{LN_2, PI};

use crate::error::RateError;
use crate::free_energy::{symmetric_free_energy, FreeEnergy, WeightProfile, WeightedFreeEnergy};

/// Controls for the monotone bisection solver behind the Legendre transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverControl {
    bracket_limit: f64,
    tol: f64,
    max_iter: u32,
}

impl SolverControl {
    /// Validates and builds a control.
    ///
    /// `bracket_limit` caps the expanding bracket for the tilt parameter:
    /// queries whose tilt would exceed it are declared out of domain.  `tol`
    /// is the bracket width at which bisection stops, and `max_iter` bounds
    /// the number of bisection steps.
    pub fn new(bracket_limit: f64, tol: f64, max_iter: u32) -> Result<Self, RateError> {
        if !(bracket_limit > 0.0) || !bracket_limit.is_finite() {
            return Err(RateError::InvalidControl(format!(
                "bracket limit must be a positive real, got {bracket_limit}"
            )));
        }
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(RateError::InvalidControl(format!(
                "tolerance must be a positive real, got {tol}"
            )));
        }
        if max_iter == 0 {
            return Err(RateError::InvalidControl(
                "iteration budget must be at least 1".into(),
            ));
        }
        Ok(Self {
            bracket_limit,
            tol,
            max_iter,
        })
    }

    /// Largest tilt magnitude the bracket may reach.
    pub fn bracket_limit(&self) -> f64 {
        self.bracket_limit
    }

    /// Bracket width at which bisection stops.
    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Maximum number of bisection steps.
    pub fn max_iter(&self) -> u32 {
        self.max_iter
    }
}

impl Default for SolverControl {
    fn default() -> Self {
        Self {
            bracket_limit: 50.0,
            tol: 1e-10,
            max_iter: 200,
        }
    }
}

/// One evaluated point of a rate function.
///
/// Finite points carry the maximizing tilt `eta` with `F'(eta) = x` to solver
/// tolerance and satisfy `value = eta*x - F(eta) >= 0`.  Points outside the
/// domain carry the infinity marker: `value` is `f64::INFINITY`, `eta` is
/// `None`, and `in_domain` is false.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateValue {
    /// The query point.
    pub x: f64,
    /// `I(x) >= 0`, or `f64::INFINITY` outside the domain.
    pub value: f64,
    /// The maximizing tilt, when finite.
    pub eta: Option<f64>,
    /// False exactly when the infinity marker is reported.
    pub in_domain: bool,
    /// Heuristic uncertainty on `eta` propagated from the free-energy
    /// truncation tail, when the evaluator reports one.  Never serialized.
    pub eta_uncertainty: Option<f64>,
}

impl RateValue {
    /// The infinity marker at query point `x`.
    pub fn out_of_domain(x: f64) -> Self {
        Self {
            x,
            value: f64::INFINITY,
            eta: None,
            in_domain: false,
            eta_uncertainty: None,
        }
    }

    fn finite(x: f64, value: f64, eta: f64) -> Self {
        Self {
            x,
            value: value.max(0.0),
            eta: Some(eta),
            in_domain: true,
            eta_uncertainty: None,
        }
    }
}

/// Fenchel-Legendre transform of a convex differentiable free energy at `x`.
///
/// Solves `F'(eta) = x` by bisection: the initial bracket `[-1, 1]` doubles
/// outward until it straddles `x` or hits `ctrl.bracket_limit`; hitting the
/// limit while `x` is still outside the derivative's range reports the
/// out-of-domain marker.  When the evaluator reports a positive truncation
/// tail at the solution, a heuristic `eta` uncertainty `tail / F''(eta)` is
/// attached.
pub fn legendre_rate<F: FreeEnergy + ?Sized>(
    f: &F,
    x: f64,
    ctrl: SolverControl,
) -> Result<RateValue, RateError> {
    let start = ctrl.bracket_limit.min(1.0);
    let mut lo = -start;
    let mut hi = start;
    let mut g_lo = f.derivative(lo)?;
    let mut g_hi = f.derivative(hi)?;

    while x < g_lo {
        if lo <= -ctrl.bracket_limit {
            return Ok(RateValue::out_of_domain(x));
        }
        hi = lo;
        g_hi = g_lo;
        lo = (lo * 2.0).max(-ctrl.bracket_limit);
        g_lo = f.derivative(lo)?;
    }
    while x > g_hi {
        if hi >= ctrl.bracket_limit {
            return Ok(RateValue::out_of_domain(x));
        }
        lo = hi;
        hi = (hi * 2.0).min(ctrl.bracket_limit);
        g_hi = f.derivative(hi)?;
    }

    let mut iterations = 0u32;
    while hi - lo > ctrl.tol {
        if iterations >= ctrl.max_iter {
            return Err(RateError::NonConvergence { lo, hi, iterations });
        }
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if f.derivative(mid)? < x {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let eta = 0.5 * (lo + hi);
    let value = eta * x - f.value(eta)?;
    let mut out = RateValue::finite(x, value, eta);

    let (_, tail) = f.value_and_tail(eta)?;
    if tail > 0.0 && tail.is_finite() {
        let h = 1e-4;
        let second = (f.derivative(eta + h)? - f.derivative(eta - h)?) / (2.0 * h);
        out.eta_uncertainty = Some(tail / second.max(1e-12));
    }
    Ok(out)
}

/// Shannon entropy of a `{q, 1-q}` coin, in nats.
pub fn binary_entropy(q: f64) -> f64 {
    if q == 0.0 || q == 1.0 {
        return 0.0;
    }
    -q * q.ln() - (1.0 - q) * (1.0 - q).ln()
}

/// Closed-form rate function of the even-bias multiple average.
///
/// For `|y| < 1` the tilt is `eta = atanh(y)` and the value is
/// `eta*y - ln cosh(eta)`, equivalently `ln 2 - H((1+y)/2)`; `|y| >= 1`
/// reports the infinity marker.  Independent of the box and multiplier
/// vector.
pub fn symmetric_rate_closed(y: f64) -> RateValue {
    if !(y.abs() < 1.0) {
        return RateValue::out_of_domain(y);
    }
    let eta = y.atanh();
    RateValue::finite(y, eta * y - symmetric_free_energy(eta), eta)
}

/// Rate function of the weighted multiple average at even spin bias.
///
/// The domain is the open interval `(-R, R)` with `R = sum_k P_k |v_k|`;
/// outside it the infinity marker is reported.  A profile supported entirely
/// on the zero weight has an average that is identically zero, so `y = 0` is
/// its single finite point.
pub fn weighted_rate(
    profile: &WeightProfile,
    y: f64,
    ctrl: SolverControl,
) -> Result<RateValue, RateError> {
    let radius = profile.mean_abs_weight();
    if radius == 0.0 {
        return Ok(if y == 0.0 {
            RateValue::finite(y, 0.0, 0.0)
        } else {
            RateValue::out_of_domain(y)
        });
    }
    if !(y.abs() < radius) {
        return Ok(RateValue::out_of_domain(y));
    }
    legendre_rate(&WeightedFreeEnergy::new(profile.clone()), y, ctrl)
}

/// Hausdorff dimension of the level set where the weighted average of digit
/// weights equals `alpha`.
///
/// Solves `sum_j P_j v_j tanh(lambda v_j) = alpha` for the tilt, then returns
/// `(1/ln 2) * sum_j P_j (ln(2 cosh(lambda v_j)) - lambda v_j tanh(lambda v_j))`.
/// The admissible levels form the open interval bounded by
/// `sum_j P_j |v_j|`.
pub fn level_set_dimension(profile: &WeightProfile, alpha: f64) -> Result<f64, RateError> {
    let bound = profile.mean_abs_weight();
    if !(alpha.abs() < bound) {
        return Err(RateError::OutOfSpectrumDomain { alpha, bound });
    }
    let solved = legendre_rate(
        &WeightedFreeEnergy::new(profile.clone()),
        alpha,
        SolverControl::default(),
    )?;
    let lambda = solved
        .eta
        .expect("level inside the open domain always yields a finite tilt");
    let dim: f64 = profile
        .values()
        .iter()
        .zip(profile.freqs())
        .map(|(v, q)| {
            let a = lambda * v;
            q * (a.abs() + (-2.0 * a.abs()).exp().ln_1p() - a * a.tanh())
        })
        .sum();
    Ok(dim / LN_2)
}

/// Closed-form dimension spectrum of the multiplicative-parity weight:
/// `1 - 6/pi^2 + (6/(pi^2 ln 2)) * H(1/2 + (pi^2/12) * alpha)`.
///
/// The entropy argument lies in `[0, 1]` exactly for `|alpha| <= 6/pi^2`
/// (the density of nonzero weight values), so that open interval is the
/// domain; its endpoints are the limit value `1 - 6/pi^2`.
pub fn mobius_level_set_dimension(alpha: f64) -> Result<f64, RateError> {
    let bound = 6.0 / (PI * PI);
    if !(alpha.abs() < bound) {
        return Err(RateError::OutOfSpectrumDomain { alpha, bound });
    }
    let q = 0.5 + PI * PI / 12.0 * alpha;
    Ok(1.0 - bound + bound / LN_2 * binary_entropy(q))
}
