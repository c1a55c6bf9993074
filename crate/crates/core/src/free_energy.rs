//! Free energies of multiple averages.
//!
//! The scaled cumulant generating function ("free energy") of the multiple
//! average is obtained by summing one-dimensional chain contributions against
//! the chain-length distribution of the box.  In the infinite-volume limit the
//! chain-length frequencies have the closed form `(P-1)^2 / P^(l+1)` with
//! `P` the product of the multiplier entries, which turns the free energy into
//! three closed terms plus a geometrically convergent series
//! ([`GeneralFreeEnergy`]).  This module also provides
//!
//! * the symmetric closed form `log cosh(beta)` for even spin bias
//!   ([`symmetric_free_energy`]), which is independent of the multiplier
//!   vector;
//! * exact finite-volume values assembled from the chain census
//!   ([`finite_volume_free_energy`]);
//! * weighted variants where each site weight is drawn from a finite value set
//!   with prescribed frequencies ([`WeightedFreeEnergy`], [`WeightProfile`]),
//!   including the multiplicative-parity specialization
//!   ([`mobius_free_energy`]);
//! * boundary-conditioned energies for pinned or end-matched spins
//!   ([`BoundaryFreeEnergy`], [`BoundaryKind`]).
//!
//! All evaluators implement the [`FreeEnergy`] trait, which supplies the
//! value, an optional truncation-tail bound, and the derivative in `beta`
//! (closed form where one exists, five-point central finite difference
//! otherwise).

use std::f64::consts::{LN_2, PI};

use crate::error::{EnergyError, IsingError, LatticeError};
use crate::ising::{chain_mgf_log, spectrum, BernoulliField};
use crate::lattice::{BoxSpec, ChainCensus, MultiplierVector, ENUMERATION_LIMIT};

/// Step for the five-point central finite-difference derivative.
const FD_STEP: f64 = 1e-5;

/// Truncation control for the chain-length series.
///
/// The infinite-volume evaluators truncate the geometric chain-length series
/// after `num_terms` terms (default 100, the truncation used for the bundled
/// figure sweeps) and can report a rigorous bound on the discarded tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeriesControl {
    num_terms: usize,
    report_tail: bool,
}

impl SeriesControl {
    /// Creates a control keeping `num_terms >= 1` series terms.
    ///
    /// When `report_tail` is false the evaluators skip the tail bound and
    /// report it as zero.
    pub fn new(num_terms: usize, report_tail: bool) -> Result<Self, EnergyError> {
        if num_terms == 0 {
            return Err(EnergyError::EmptyTruncation);
        }
        Ok(Self {
            num_terms,
            report_tail,
        })
    }

    /// Number of series terms kept.
    pub fn num_terms(&self) -> usize {
        self.num_terms
    }

    /// Whether evaluators compute the truncation-tail bound.
    pub fn report_tail(&self) -> bool {
        self.report_tail
    }
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            num_terms: 100,
            report_tail: true,
        }
    }
}

/// A finite set of site-weight values with their asymptotic frequencies.
///
/// `values` are pairwise distinct reals; `freqs` are nonnegative and sum to 1
/// (within `1e-12`).  The weighted free energy and rate functions are defined
/// entirely in terms of this profile.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightProfile {
    values: Vec<f64>,
    freqs: Vec<f64>,
}

impl WeightProfile {
    /// Validates and builds a profile from parallel value/frequency slices.
    pub fn new(values: &[f64], freqs: &[f64]) -> Result<Self, EnergyError> {
        if values.is_empty() {
            return Err(EnergyError::InvalidProfile(
                "profile must contain at least one weight value".into(),
            ));
        }
        if values.len() != freqs.len() {
            return Err(EnergyError::InvalidProfile(format!(
                "{} values but {} frequencies",
                values.len(),
                freqs.len()
            )));
        }
        for (k, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(EnergyError::InvalidProfile(format!(
                    "value #{k} is not finite: {v}"
                )));
            }
        }
        for (k, q) in freqs.iter().enumerate() {
            if !q.is_finite() || *q < 0.0 {
                return Err(EnergyError::InvalidProfile(format!(
                    "frequency #{k} must be a finite nonnegative real, got {q}"
                )));
            }
        }
        let total: f64 = freqs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(EnergyError::InvalidProfile(format!(
                "frequencies sum to {total}, expected 1"
            )));
        }
        for i in 0..values.len() {
            for j in (i + 1)..values.len() {
                if values[i] == values[j] {
                    return Err(EnergyError::InvalidProfile(format!(
                        "values #{i} and #{j} are both {}",
                        values[i]
                    )));
                }
            }
        }
        Ok(Self {
            values: values.to_vec(),
            freqs: freqs.to_vec(),
        })
    }

    /// Profile of the multiplicative-parity (Mobius) weight on squarefree
    /// supports: values `{1, -1, 0}` where the squarefree density `6/pi^2` is
    /// split evenly between the two signs and the rest of the mass sits on 0.
    ///
    /// Only the combined nonzero mass `6/pi^2` enters any even quantity; the
    /// even split is the natural symmetric choice for the signed masses.
    pub fn mobius() -> Self {
        let nonzero = 6.0 / (PI * PI);
        Self {
            values: vec![1.0, -1.0, 0.0],
            freqs: vec![nonzero / 2.0, nonzero / 2.0, 1.0 - nonzero],
        }
    }

    /// The weight values `v_k`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The frequencies `P_k`.
    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    /// `sum_k P_k |v_k|` — the open domain radius of the weighted averages.
    pub fn mean_abs_weight(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.freqs)
            .map(|(v, q)| q * v.abs())
            .sum()
    }

    /// True when no weight value equals zero.
    pub fn is_zero_free(&self) -> bool {
        self.values.iter().all(|v| *v != 0.0)
    }
}

/// Estimates a [`WeightProfile`] from a weight field evaluated along chains.
///
/// All samples are pooled into empirical value frequencies (values reported in
/// ascending order).  The second return value lists the indices of chains
/// whose own per-chain frequencies deviate from the pooled ones by more than
/// 1% for some value; short chains trip this naturally, so the flags are
/// advisory.  Chains with no samples are skipped.
pub fn estimate_weight_profile(
    chain_weights: &[Vec<f64>],
) -> Result<(WeightProfile, Vec<usize>), EnergyError> {
    // Collapse signed zeros so that -0.0 and 0.0 count as one value.
    let normalize = |w: f64| if w == 0.0 { 0.0 } else { w };
    let total: usize = chain_weights.iter().map(Vec::len).sum();
    if total == 0 {
        return Err(EnergyError::InvalidProfile(
            "no weight samples supplied".into(),
        ));
    }
    for (i, chain) in chain_weights.iter().enumerate() {
        if let Some(w) = chain.iter().find(|w| !w.is_finite()) {
            return Err(EnergyError::InvalidProfile(format!(
                "non-finite weight {w} in chain #{i}"
            )));
        }
    }

    let mut values: Vec<f64> = chain_weights
        .iter()
        .flatten()
        .map(|&w| normalize(w))
        .collect();
    values.sort_by(f64::total_cmp);
    values.dedup();

    let index_of = |w: f64| {
        values
            .binary_search_by(|probe| probe.total_cmp(&normalize(w)))
            .expect("every sample was inserted into the value list")
    };

    let mut counts = vec![0u64; values.len()];
    for w in chain_weights.iter().flatten() {
        counts[index_of(*w)] += 1;
    }
    let freqs: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();

    let mut flagged = Vec::new();
    let mut chain_counts = vec![0u64; values.len()];
    for (i, chain) in chain_weights.iter().enumerate() {
        if chain.is_empty() {
            continue;
        }
        chain_counts.fill(0);
        for w in chain {
            chain_counts[index_of(*w)] += 1;
        }
        let deviates = chain_counts.iter().zip(&freqs).any(|(&c, &pooled)| {
            let local = c as f64 / chain.len() as f64;
            (local - pooled).abs() > 0.01
        });
        if deviates {
            flagged.push(i);
        }
    }

    Ok((WeightProfile::new(&values, &freqs)?, flagged))
}

/// A free-energy evaluator: value, truncation tail, and derivative in `beta`.
pub trait FreeEnergy {
    /// The free-energy value at inverse temperature `beta`.
    fn value(&self, beta: f64) -> Result<f64, EnergyError>;

    /// The value together with an upper bound on the truncation error of any
    /// internal series (zero when the value is exact or tail reporting is
    /// disabled).
    fn value_and_tail(&self, beta: f64) -> Result<(f64, f64), EnergyError> {
        Ok((self.value(beta)?, 0.0))
    }

    /// The derivative in `beta`: closed form where one exists, otherwise a
    /// five-point central finite difference with step `1e-5`.
    fn derivative(&self, beta: f64) -> Result<f64, EnergyError> {
        five_point_derivative(|b| self.value(b), beta)
    }
}

/// Five-point central finite difference with step [`FD_STEP`].
fn five_point_derivative(
    f: impl Fn(f64) -> Result<f64, EnergyError>,
    x: f64,
) -> Result<f64, EnergyError> {
    let h = FD_STEP;
    let num = -f(x + 2.0 * h)? + 8.0 * f(x + h)? - 8.0 * f(x - h)? + f(x - 2.0 * h)?;
    Ok(num / (12.0 * h))
}

/// `ln(2 cosh x)`, computed without overflow as `|x| + ln(1 + e^(-2|x|))`.
fn log_two_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p()
}

/// `ln cosh(beta)` — the free energy at even spin bias, for every box and
/// multiplier vector.  Computed stably as `|beta| - ln 2 + ln(1 + e^(-2|beta|))`,
/// which is exactly 0 at `beta = 0`.
pub fn symmetric_free_energy(beta: f64) -> f64 {
    let a = beta.abs();
    a - LN_2 + (-2.0 * a).exp().ln_1p()
}

/// The even-bias evaluator wrapping [`symmetric_free_energy`].
#[derive(Debug, Clone, Copy, Default)]
pub struct SymmetricFreeEnergy;

impl FreeEnergy for SymmetricFreeEnergy {
    fn value(&self, beta: f64) -> Result<f64, EnergyError> {
        Ok(symmetric_free_energy(beta))
    }

    fn derivative(&self, beta: f64) -> Result<f64, EnergyError> {
        Ok(beta.tanh())
    }
}

/// `sum_{l=1..terms} (P-1)^2 / P^(l+1) * ln(1 + c * rho^l)`.
///
/// The argument of `ln(1+x)` stays above -1 in exact arithmetic because each
/// term is the tail correction of a positive partition function; a defensive
/// clamp guards rounding, mirroring the chain evaluator.
fn truncated_log_series(p: f64, c: f64, rho: f64, terms: usize) -> f64 {
    let mut sum = 0.0;
    let mut weight = (p - 1.0) * (p - 1.0) / (p * p);
    let mut rho_pow = rho;
    for _ in 0..terms {
        sum += weight * (c * rho_pow).max(-1.0 + 1e-300).ln_1p();
        weight /= p;
        rho_pow *= rho;
    }
    sum
}

/// Rigorous bound on the series tail discarded after `terms` terms.
///
/// Uses `|ln(1+x)| <= |x| / (1-|x|)` with `|x| <= c |rho|^(terms+1)` on every
/// tail term, then sums the geometric envelope.  Returns infinity when the
/// bound's premise `c |rho|^(terms+1) < 1` fails.
fn series_tail_bound(p: f64, c: f64, rho: f64, terms: usize) -> f64 {
    if c == 0.0 || rho == 0.0 {
        return 0.0;
    }
    let a = rho.abs();
    let lead = c * a.powf((terms + 1) as f64);
    if lead >= 1.0 {
        return f64::INFINITY;
    }
    let q = a / p;
    let geom = q.powf((terms + 1) as f64) / (1.0 - q);
    c * (p - 1.0) * (p - 1.0) / p * geom / (1.0 - lead)
}

/// Infinite-volume free energy for a general spin bias `r`.
///
/// The value is
/// `(2P-1)/(2P) * ln(r(1-r)) + (P-1)/P * ln(overlap_sq) + ln(lambda_plus) + G(beta)`
/// with `P` the product of the multiplier entries and `G` the truncated
/// chain-length series over `ln(1 + c * ratio^l)` terms.
#[derive(Debug, Clone)]
pub struct GeneralFreeEnergy {
    field: BernoulliField,
    p_product: f64,
    control: SeriesControl,
}

impl GeneralFreeEnergy {
    /// Builds the evaluator for bias `r` and multiplier vector `p`.
    pub fn new(r: f64, p: &MultiplierVector, control: SeriesControl) -> Result<Self, EnergyError> {
        Ok(Self {
            field: BernoulliField::from_bias(r)?,
            p_product: p.product() as f64,
            control,
        })
    }

    /// The spin bias `r`.
    pub fn bias(&self) -> f64 {
        self.field.r()
    }
}

impl FreeEnergy for GeneralFreeEnergy {
    fn value(&self, beta: f64) -> Result<f64, EnergyError> {
        Ok(self.value_and_tail(beta)?.0)
    }

    fn value_and_tail(&self, beta: f64) -> Result<(f64, f64), EnergyError> {
        // The moment generating function at 0 is 1, so the value is exactly 0.
        if beta == 0.0 {
            return Ok((0.0, 0.0));
        }
        let sp = spectrum(beta, &self.field)?;
        let p = self.p_product;
        let r = self.field.r();
        let c = ((sp.norm_sq - sp.overlap_sq) / sp.overlap_sq).max(0.0);
        let series = truncated_log_series(p, c, sp.ratio, self.control.num_terms());
        let value = (2.0 * p - 1.0) / (2.0 * p) * (r * (1.0 - r)).ln()
            + (p - 1.0) / p * sp.overlap_sq.ln()
            + sp.log_lambda_plus
            + series;
        let tail = if self.control.report_tail() {
            series_tail_bound(p, c, sp.ratio, self.control.num_terms())
        } else {
            0.0
        };
        Ok((value, tail))
    }
}

/// Convenience wrapper: infinite-volume free energy and tail bound for bias
/// `r`, multiplier vector `p`, at inverse temperature `beta`.
pub fn asymptotic_free_energy(
    r: f64,
    p: &MultiplierVector,
    beta: f64,
    control: SeriesControl,
) -> Result<(f64, f64), EnergyError> {
    GeneralFreeEnergy::new(r, p, control)?.value_and_tail(beta)
}

/// Exact finite-volume free energy `(1/|N|) * ln E exp(beta * S)` on box `n`.
///
/// Assembled from the closed-form chain census: each chain of length `l`
/// contributes its one-dimensional cumulant generating function.  At `r = 1/2`
/// the chain lengths tile the volume and the value collapses to
/// `ln cosh(beta)` for every box.
pub fn finite_volume_free_energy(
    n: &BoxSpec,
    p: &MultiplierVector,
    r: f64,
    beta: f64,
) -> Result<f64, EnergyError> {
    let field = BernoulliField::from_bias(r)?;
    if n.volume() > ENUMERATION_LIMIT {
        return Err(EnergyError::Lattice(LatticeError::BoxTooLarge {
            volume: n.volume(),
            limit: ENUMERATION_LIMIT,
        }));
    }
    let census = ChainCensus::closed_form(n, p)?;
    if beta == 0.0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for row in census.rows() {
        if row.count_free == 0 {
            continue;
        }
        total += row.count_free as f64 * chain_mgf_log(beta, &field, row.ell as u32)?;
    }
    Ok(total / census.volume() as f64)
}

/// Weighted free energy at even spin bias:
/// `sum_k P_k * ln(2 cosh(beta * v_k)) - ln 2`.
///
/// Exactly 0 at `beta = 0` (the expectation of 1).
pub fn weighted_free_energy(profile: &WeightProfile, beta: f64) -> f64 {
    if beta == 0.0 {
        return 0.0;
    }
    let sum: f64 = profile
        .values()
        .iter()
        .zip(profile.freqs())
        .map(|(v, q)| q * log_two_cosh(beta * v))
        .sum();
    sum - LN_2
}

/// Derivative of the weighted free energy:
/// `sum_k P_k * v_k * tanh(beta * v_k)`.
pub fn weighted_free_energy_derivative(profile: &WeightProfile, beta: f64) -> f64 {
    profile
        .values()
        .iter()
        .zip(profile.freqs())
        .map(|(v, q)| q * v * (beta * v).tanh())
        .sum()
}

/// Evaluator wrapping [`weighted_free_energy`] for a fixed profile.
///
/// The weighted formulas hold only at even spin bias `r = 1/2`; for biased
/// spins the site transfer matrices stop commuting and no product formula
/// exists, so biased requests are rejected up front via
/// [`require_symmetric_bias`].
#[derive(Debug, Clone)]
pub struct WeightedFreeEnergy {
    profile: WeightProfile,
}

impl WeightedFreeEnergy {
    /// Builds the evaluator for `profile`.
    pub fn new(profile: WeightProfile) -> Self {
        Self { profile }
    }

    /// The weight profile.
    pub fn profile(&self) -> &WeightProfile {
        &self.profile
    }
}

impl FreeEnergy for WeightedFreeEnergy {
    fn value(&self, beta: f64) -> Result<f64, EnergyError> {
        Ok(weighted_free_energy(&self.profile, beta))
    }

    fn derivative(&self, beta: f64) -> Result<f64, EnergyError> {
        Ok(weighted_free_energy_derivative(&self.profile, beta))
    }
}

/// Rejects spin biases other than `r = 1/2` for the weighted evaluators.
pub fn require_symmetric_bias(r: f64) -> Result<(), EnergyError> {
    if (r - 0.5).abs() > 1e-12 {
        return Err(EnergyError::BiasedWeightsUnsupported { r });
    }
    Ok(())
}

/// Free energy of the multiplicative-parity weight:
/// exactly `(6/pi^2) * ln cosh(beta)`.
pub fn mobius_free_energy(beta: f64) -> f64 {
    6.0 / (PI * PI) * symmetric_free_energy(beta)
}

/// Evaluator wrapping [`mobius_free_energy`].
#[derive(Debug, Clone, Copy, Default)]
pub struct MobiusFreeEnergy;

impl FreeEnergy for MobiusFreeEnergy {
    fn value(&self, beta: f64) -> Result<f64, EnergyError> {
        Ok(mobius_free_energy(beta))
    }

    fn derivative(&self, beta: f64) -> Result<f64, EnergyError> {
        Ok(6.0 / (PI * PI) * beta.tanh())
    }
}

/// Boundary conditions imposed on the spin field, at even bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// No constraint; delegates to [`symmetric_free_energy`].
    Free,
    /// Spins pinned to +1 on the lattice boundary.  The pinned set has
    /// vanishing density, so the energy equals the free value.
    PinnedBoundary,
    /// Spins pinned to +1 everywhere except the open interior of the box
    /// (one pinned spin per chain in the volume limit); shifts the
    /// zero-coupling energy to `-(P-1)/P * ln 2`.
    PinnedFrame,
    /// Each chain's first and last spins must carry the same sign (periodic
    /// along chains); adds a `ln(1 + tanh(beta)^l)` series on top of
    /// [`BoundaryKind::PinnedFrame`].
    MatchedEnds,
}

impl BoundaryKind {
    /// Stable lowercase label used in error messages and the CLI.
    pub fn label(&self) -> &'static str {
        match self {
            BoundaryKind::Free => "free",
            BoundaryKind::PinnedBoundary => "pinned-boundary",
            BoundaryKind::PinnedFrame => "pinned-frame",
            BoundaryKind::MatchedEnds => "matched-ends",
        }
    }
}

/// Boundary-conditioned energy evaluator at even spin bias.
///
/// The pinned-frame and matched-ends formulas are derived for planar
/// (`d = 2`) multiplier vectors only; other dimensions are rejected.
#[derive(Debug, Clone)]
pub struct BoundaryFreeEnergy {
    kind: BoundaryKind,
    p_product: f64,
    control: SeriesControl,
}

impl BoundaryFreeEnergy {
    /// Builds the evaluator, checking the dimension requirement.
    pub fn new(
        kind: BoundaryKind,
        p: &MultiplierVector,
        control: SeriesControl,
    ) -> Result<Self, EnergyError> {
        if matches!(kind, BoundaryKind::PinnedFrame | BoundaryKind::MatchedEnds) && p.dim() != 2 {
            return Err(EnergyError::UnsupportedDimension {
                kind: kind.label(),
                dim: p.dim(),
            });
        }
        Ok(Self {
            kind,
            p_product: p.product() as f64,
            control,
        })
    }

    /// The boundary kind.
    pub fn kind(&self) -> BoundaryKind {
        self.kind
    }

    fn pinned_frame_value(&self, beta: f64) -> f64 {
        log_two_cosh(beta) - (2.0 * self.p_product - 1.0) / self.p_product * LN_2
    }
}

impl FreeEnergy for BoundaryFreeEnergy {
    fn value(&self, beta: f64) -> Result<f64, EnergyError> {
        Ok(self.value_and_tail(beta)?.0)
    }

    fn value_and_tail(&self, beta: f64) -> Result<(f64, f64), EnergyError> {
        if !beta.is_finite() {
            return Err(EnergyError::Ising(IsingError::NonFiniteInput {
                name: "beta",
                value: beta,
            }));
        }
        match self.kind {
            BoundaryKind::Free | BoundaryKind::PinnedBoundary => {
                Ok((symmetric_free_energy(beta), 0.0))
            }
            BoundaryKind::PinnedFrame => Ok((self.pinned_frame_value(beta), 0.0)),
            BoundaryKind::MatchedEnds => {
                let t = beta.tanh();
                let series = truncated_log_series(self.p_product, 1.0, t, self.control.num_terms());
                let tail = if self.control.report_tail() {
                    series_tail_bound(self.p_product, 1.0, t, self.control.num_terms())
                } else {
                    0.0
                };
                Ok((self.pinned_frame_value(beta) + series, tail))
            }
        }
    }

    fn derivative(&self, beta: f64) -> Result<f64, EnergyError> {
        match self.kind {
            BoundaryKind::Free | BoundaryKind::PinnedBoundary | BoundaryKind::PinnedFrame => {
                Ok(beta.tanh())
            }
            BoundaryKind::MatchedEnds => {
                let t = beta.tanh();
                let sech_sq = 1.0 - t * t;
                let p = self.p_product;
                let mut sum = 0.0;
                let mut weight = (p - 1.0) * (p - 1.0) / (p * p);
                let mut t_prev = 1.0; // t^(l-1)
                for l in 1..=self.control.num_terms() {
                    let t_l = t_prev * t;
                    sum += weight * l as f64 * t_prev * sech_sq / (1.0 + t_l);
                    weight /= p;
                    t_prev = t_l;
                }
                Ok(t + sum)
            }
        }
    }
}

/// Convenience wrapper: boundary-conditioned energy and tail bound.
pub fn boundary_free_energy(
    kind: BoundaryKind,
    p: &MultiplierVector,
    beta: f64,
    control: SeriesControl,
) -> Result<(f64, f64), EnergyError> {
    BoundaryFreeEnergy::new(kind, p, control)?.value_and_tail(beta)
}
