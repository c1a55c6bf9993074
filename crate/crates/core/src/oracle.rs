//! Independent verification paths for the analytic machinery.
//!
//! Everything here is deliberately redundant with the closed-form modules:
//!
//! * [`brute_force_mgf_log`] enumerates every spin assignment on the extended
//!   support of a tiny box and evaluates the multiple sum site by site — no
//!   chain decomposition, no transfer matrices — so it can serve as ground
//!   truth for both;
//! * [`exact_symmetric_distribution`] gives the exact law of the multiple sum
//!   at even bias (a shifted binomial, because the bond variables are
//!   independent uniform signs);
//! * [`mc_free_energy`] and [`empirical_rate`] are seeded Monte Carlo
//!   estimators whose results are bit-identical for a given seed regardless
//!   of thread count: every sample draws from its own counter-derived stream
//!   and the reductions accumulate exact integer counts.
//!
//! The free-energy estimator averages `exp(beta * T)` per chain-length class
//! and combines the classes through the product structure of the expectation
//! (chains occupy disjoint spin sets, so their contributions are independent
//! factors).  A single global average of `exp(beta * S)` would need
//! astronomically many samples on boxes of interesting size — the integrand
//! is dominated by spin fields that plain sampling essentially never visits —
//! while the per-class averages concentrate and lose nothing: the same plain
//! spin draws are used, just aggregated along the factorization.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{IsingError, LatticeError, OracleError};
use crate::lattice::{BoxSpec, ChainCensus, MultiplierVector, ENUMERATION_LIMIT};

/// Exhaustive enumeration cap on the extended-support size (2^22 assignments).
pub const BRUTE_FORCE_LIMIT: usize = 22;

/// Cap on the exact even-bias distribution volume.
pub const DISTRIBUTION_LIMIT: u64 = 1_000_000;

/// Minimum samples for a Monte Carlo free-energy estimate.
pub const MIN_MC_SAMPLES: u64 = 100;

/// Minimum window hits for an empirical rate estimate.
pub const MIN_RATE_HITS: u64 = 10;

/// Samples per parallel work unit.
const SAMPLE_CHUNK: u64 = 1024;

/// The sites whose spins enter the multiple sum on a box: the box itself plus
/// the stepped images of its sites, in lexicographic order.
#[derive(Debug, Clone)]
pub struct ExtendedSupport {
    sites: Vec<Vec<u64>>,
    pairs: Vec<(usize, usize)>,
    box_size: usize,
}

impl ExtendedSupport {
    /// Enumerates the support of box `n` under multiplier vector `p`.
    pub fn new(n: &BoxSpec, p: &MultiplierVector) -> Result<Self, OracleError> {
        if n.dim() != p.dim() {
            return Err(OracleError::Lattice(LatticeError::DimensionMismatch {
                box_dim: n.dim(),
                multiplier_dim: p.dim(),
            }));
        }
        if n.volume() > ENUMERATION_LIMIT {
            return Err(OracleError::Lattice(LatticeError::BoxTooLarge {
                volume: n.volume(),
                limit: ENUMERATION_LIMIT,
            }));
        }
        let box_sites: Vec<Vec<u64>> = n.sites().collect();
        let mut targets = Vec::with_capacity(box_sites.len());
        for site in &box_sites {
            targets.push(p.step(site).map_err(OracleError::Lattice)?);
        }
        let mut sites = box_sites.clone();
        sites.extend(targets.iter().cloned());
        sites.sort();
        sites.dedup();
        let locate = |site: &Vec<u64>| {
            sites
                .binary_search(site)
                .expect("every referenced site was inserted into the support")
        };
        let pairs = box_sites
            .iter()
            .zip(&targets)
            .map(|(site, target)| (locate(site), locate(target)))
            .collect();
        Ok(Self {
            sites,
            pairs,
            box_size: box_sites.len(),
        })
    }

    /// All support sites in lexicographic order.
    pub fn sites(&self) -> &[Vec<u64>] {
        &self.sites
    }

    /// Per box site, the support indices of `(site, stepped site)`.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Number of box sites.
    pub fn box_size(&self) -> usize {
        self.box_size
    }

    /// Number of support sites (box plus out-of-box images).
    pub fn total_size(&self) -> usize {
        self.sites.len()
    }
}

/// The multiple sum `S = sum over box sites of sigma_i * sigma_{p(i)}` for an
/// explicit spin assignment on the extended support (indexed like
/// [`ExtendedSupport::sites`]).
pub fn multiple_sum(support: &ExtendedSupport, spins: &[i8]) -> Result<i64, OracleError> {
    if spins.len() != support.total_size() {
        return Err(OracleError::MissingSite {
            expected: support.total_size(),
            got: spins.len(),
        });
    }
    for (index, &value) in spins.iter().enumerate() {
        if value != 1 && value != -1 {
            return Err(OracleError::InvalidSpin { index, value });
        }
    }
    Ok(support
        .pairs
        .iter()
        .map(|&(a, b)| i64::from(spins[a]) * i64::from(spins[b]))
        .sum())
}

fn check_bias(r: f64) -> Result<(), OracleError> {
    if !(r > 0.0 && r < 1.0) {
        return Err(OracleError::Ising(IsingError::BiasOutOfRange { r }));
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<(), OracleError> {
    if !beta.is_finite() {
        return Err(OracleError::Ising(IsingError::NonFiniteInput {
            name: "beta",
            value: beta,
        }));
    }
    Ok(())
}

/// `ln E exp(beta * S)` by exhaustive enumeration of all spin assignments on
/// the extended support, with `P(sigma = +1) = r` independently per site.
///
/// This is the maximally naive evaluator — every assignment is visited and the
/// multiple sum is recomputed pair by pair — and is capped at
/// [`BRUTE_FORCE_LIMIT`] support sites.
pub fn brute_force_mgf_log(
    n: &BoxSpec,
    p: &MultiplierVector,
    r: f64,
    beta: f64,
) -> Result<f64, OracleError> {
    check_bias(r)?;
    check_beta(beta)?;
    let support = ExtendedSupport::new(n, p)?;
    let total = support.total_size();
    if total > BRUTE_FORCE_LIMIT {
        return Err(OracleError::SupportTooLarge {
            size: total,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let log_r = r.ln();
    let log_q = (1.0 - r).ln();
    // Online log-sum-exp over all 2^total assignments.
    let mut running_max = f64::NEG_INFINITY;
    let mut scaled_sum = 0.0f64;
    for mask in 0u64..(1u64 << total) {
        let plus = mask.count_ones();
        let minus = total as u32 - plus;
        let mut s = 0i64;
        for &(a, b) in &support.pairs {
            let unequal = ((mask >> a) ^ (mask >> b)) & 1 == 1;
            s += if unequal { -1 } else { 1 };
        }
        let term = f64::from(plus) * log_r + f64::from(minus) * log_q + beta * s as f64;
        if term > running_max {
            scaled_sum = scaled_sum * (running_max - term).exp() + 1.0;
            running_max = term;
        } else {
            scaled_sum += (term - running_max).exp();
        }
    }
    Ok(running_max + scaled_sum.ln())
}

/// The exact law of the multiple sum at even bias on a box of the given
/// volume: `P(S = volume - 2k) = C(volume, k) / 2^volume`.
///
/// At `r = 1/2` every bond variable `sigma_i * sigma_{p(i)}` is an
/// independent uniform sign, so `S` is a shifted binomial over `volume`
/// trials regardless of the box shape or multiplier vector.
#[derive(Debug, Clone)]
pub struct SymmetricDistribution {
    volume: u64,
    /// Index `k` holds `ln P(S = volume - 2k)`.
    log_probs: Vec<f64>,
}

/// Builds the exact even-bias distribution for `volume` bond variables.
pub fn exact_symmetric_distribution(volume: u64) -> Result<SymmetricDistribution, OracleError> {
    if volume == 0 {
        return Err(OracleError::InvalidQuery(
            "distribution volume must be at least 1".into(),
        ));
    }
    if volume > DISTRIBUTION_LIMIT {
        return Err(OracleError::VolumeTooLarge {
            volume,
            limit: DISTRIBUTION_LIMIT,
        });
    }
    let v = volume as f64;
    let log_probs = (0..=volume)
        .map(|k| {
            let kf = k as f64;
            ln_gamma(v + 1.0) - ln_gamma(kf + 1.0) - ln_gamma(v - kf + 1.0) - v * LN_2
        })
        .collect();
    Ok(SymmetricDistribution { volume, log_probs })
}

impl SymmetricDistribution {
    /// The number of bond variables.
    pub fn volume(&self) -> u64 {
        self.volume
    }

    /// `ln P(S = s)`, or `None` when `s` is outside the support (wrong parity
    /// or magnitude).
    pub fn log_prob(&self, s: i64) -> Option<f64> {
        let v = self.volume as i64;
        if s.abs() > v || (v - s) % 2 != 0 {
            return None;
        }
        Some(self.log_probs[((v - s) / 2) as usize])
    }

    /// All `(s, P(S = s))` pairs in increasing `s`.
    pub fn probabilities(&self) -> BTreeMap<i64, f64> {
        let v = self.volume as i64;
        self.log_probs
            .iter()
            .enumerate()
            .map(|(k, &lp)| (v - 2 * k as i64, lp.exp()))
            .collect()
    }

    /// `ln P(S / volume in [x - eps, x + eps])` (negative infinity when the
    /// window misses the support).
    pub fn average_interval_log_prob(&self, x: f64, eps: f64) -> f64 {
        let v = self.volume as f64;
        let lo = (x - eps) * v;
        let hi = (x + eps) * v;
        let mut running_max = f64::NEG_INFINITY;
        let mut scaled_sum = 0.0f64;
        for (k, &lp) in self.log_probs.iter().enumerate() {
            let s = v - 2.0 * k as f64;
            if s < lo || s > hi {
                continue;
            }
            if lp > running_max {
                scaled_sum = scaled_sum * (running_max - lp).exp() + 1.0;
                running_max = lp;
            } else {
                scaled_sum += (lp - running_max).exp();
            }
        }
        if running_max == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        running_max + scaled_sum.ln()
    }
}

/// A seeded Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    /// The point estimate.
    pub mean: f64,
    /// One standard error of the estimate.
    pub stderr: f64,
    /// Number of samples drawn.
    pub samples: u64,
    /// The seed that reproduces the estimate bit for bit.
    pub seed: u64,
    /// Window hit count, for rate estimates.
    pub hits: Option<u64>,
}

/// Probability threshold on raw `u32` draws: a draw below it means spin `+1`.
///
/// Exact at `r = 1/2`; otherwise the bias is quantized to `2^-32`, far below
/// any reported standard error.
fn bias_threshold(r: f64) -> u64 {
    (r * 4_294_967_296.0) as u64
}

/// `Some(threshold)` selects the general biased sampler; `None` selects the
/// one-bit-per-spin sampler available at exactly even bias.
fn sampling_mode(r: f64) -> Option<u64> {
    if r == 0.5 {
        None
    } else {
        Some(bias_threshold(r))
    }
}

/// Walks the `len + 1` spins of one chain and counts unequal adjacent pairs.
#[inline]
fn draw_chain_mismatches(rng: &mut ChaCha8Rng, threshold: u64, len: u32) -> u32 {
    let mut prev = u64::from(rng.next_u32()) < threshold;
    let mut mismatches = 0u32;
    for _ in 0..len {
        let cur = u64::from(rng.next_u32()) < threshold;
        if cur != prev {
            mismatches += 1;
        }
        prev = cur;
    }
    mismatches
}

/// Bits 0 (inclusive) through `n` (exclusive) set.
#[inline]
fn low_mask(n: u32) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Even positions of a 64-bit word.
const PAIR_BITS: u64 = 0x5555_5555_5555_5555;

/// LSB-first bit reservoir over a sample's RNG stream, so even-bias spins
/// cost one bit each instead of one `u32` draw.
struct BitSource<'a> {
    rng: &'a mut ChaCha8Rng,
    bits: u64,
    available: u32,
}

impl<'a> BitSource<'a> {
    fn new(rng: &'a mut ChaCha8Rng) -> Self {
        Self {
            rng,
            bits: 0,
            available: 0,
        }
    }

    #[inline]
    fn take(&mut self, count: u32) -> u64 {
        debug_assert!((1..=64).contains(&count));
        if count <= self.available {
            let out = self.bits & low_mask(count);
            self.bits = if count == 64 { 0 } else { self.bits >> count };
            self.available -= count;
            return out;
        }
        let have = self.available;
        let low = self.bits & low_mask(have);
        let fresh = self.rng.next_u64();
        let need = count - have;
        let out = low | ((fresh & low_mask(need)) << have);
        self.bits = if need == 64 { 0 } else { fresh >> need };
        self.available = 64 - need;
        out
    }
}

/// One observation reported while walking a sampled spin field.
enum ChainObservation {
    /// A single chain showed `mismatches` unequal adjacent pairs.
    One { bucket: usize, mismatches: u32 },
    /// A batch of `chains` length-1 chains showed `mismatched` unequal pairs
    /// in total (each such chain has a single bond, so the total determines
    /// the per-chain histogram).
    PairBatch {
        bucket: usize,
        mismatched: u64,
        chains: u64,
    },
}

/// Walks every chain of one sampled spin field in census order and reports
/// mismatch (unequal adjacent spin pair) counts to `observe`.
///
/// At even bias (`threshold` = `None`) each spin costs one RNG bit and
/// length-1 chains are batched 32 to a word; otherwise each spin costs one
/// `u32` draw compared against the bias threshold.
#[inline]
fn walk_sample(
    rng: &mut ChaCha8Rng,
    buckets: &[(u32, u64)],
    threshold: Option<u64>,
    observe: &mut impl FnMut(ChainObservation),
) {
    match threshold {
        None => {
            let mut source = BitSource::new(rng);
            for (bucket, &(len, chains)) in buckets.iter().enumerate() {
                if len == 1 {
                    let mut mismatched = 0u64;
                    let mut remaining = chains;
                    while remaining > 0 {
                        let batch = remaining.min(32) as u32;
                        let word = source.take(2 * batch);
                        let diffs = (word ^ (word >> 1)) & PAIR_BITS & low_mask(2 * batch);
                        mismatched += u64::from(diffs.count_ones());
                        remaining -= u64::from(batch);
                    }
                    observe(ChainObservation::PairBatch {
                        bucket,
                        mismatched,
                        chains,
                    });
                } else {
                    // The volume cap keeps chains at <= 27 in-box sites, so a
                    // chain's spins (length + 1 of them) always fit one word.
                    let spins = len + 1;
                    debug_assert!(spins <= 64);
                    for _ in 0..chains {
                        let word = source.take(spins);
                        let m = ((word ^ (word >> 1)) & low_mask(spins - 1)).count_ones();
                        observe(ChainObservation::One {
                            bucket,
                            mismatches: m,
                        });
                    }
                }
            }
        }
        Some(threshold) => {
            for (bucket, &(len, chains)) in buckets.iter().enumerate() {
                for _ in 0..chains {
                    observe(ChainObservation::One {
                        bucket,
                        mismatches: draw_chain_mismatches(rng, threshold, len),
                    });
                }
            }
        }
    }
}

/// Chain-length classes with at least one chain, from the closed-form census.
fn length_buckets(census: &ChainCensus) -> Vec<(u32, u64)> {
    census
        .rows()
        .iter()
        .filter(|row| row.count_free > 0)
        .map(|row| (row.ell as u32, row.count_free))
        .collect()
}

fn mc_preflight(
    n: &BoxSpec,
    p: &MultiplierVector,
    r: f64,
    samples: u64,
    minimum_samples: u64,
) -> Result<ChainCensus, OracleError> {
    check_bias(r)?;
    if samples < minimum_samples {
        return Err(OracleError::TooFewSamples {
            samples,
            minimum: minimum_samples,
        });
    }
    if n.volume() > ENUMERATION_LIMIT {
        return Err(OracleError::Lattice(LatticeError::BoxTooLarge {
            volume: n.volume(),
            limit: ENUMERATION_LIMIT,
        }));
    }
    ChainCensus::closed_form(n, p).map_err(OracleError::Lattice)
}

/// Seeded Monte Carlo estimate of the finite-volume free energy
/// `(1/volume) * ln E exp(beta * S)`.
///
/// Each sample draws a fresh spin field from its own counter-derived stream
/// of `ChaCha8Rng::seed_from_u64(seed)` (stream = sample index), so estimates
/// are bit-identical for a given seed regardless of thread count.  Standard
/// errors come from the delta method applied per chain-length class.
pub fn mc_free_energy(
    n: &BoxSpec,
    p: &MultiplierVector,
    r: f64,
    beta: f64,
    samples: u64,
    seed: u64,
) -> Result<McEstimate, OracleError> {
    check_beta(beta)?;
    let census = mc_preflight(n, p, r, samples, MIN_MC_SAMPLES)?;
    if beta == 0.0 {
        // The expectation of 1 is 1; no sampling required.
        return Ok(McEstimate {
            mean: 0.0,
            stderr: 0.0,
            samples,
            seed,
            hits: None,
        });
    }
    let buckets = length_buckets(&census);
    let threshold = sampling_mode(r);
    let base = ChaCha8Rng::seed_from_u64(seed);

    // counts[bucket][m] = how often a chain of that length showed exactly m
    // unequal adjacent pairs, over all samples.  Integer counts make the
    // parallel reduction exact, hence independent of scheduling.
    let chunk_count = samples.div_ceil(SAMPLE_CHUNK);
    let chunk_counts: Vec<Vec<Vec<u64>>> = (0..chunk_count)
        .into_par_iter()
        .map(|chunk| {
            let mut local: Vec<Vec<u64>> = buckets
                .iter()
                .map(|&(len, _)| vec![0u64; len as usize + 1])
                .collect();
            let begin = chunk * SAMPLE_CHUNK;
            let end = (begin + SAMPLE_CHUNK).min(samples);
            for sample in begin..end {
                let mut rng = base.clone();
                rng.set_stream(sample);
                walk_sample(&mut rng, &buckets, threshold, &mut |event| match event {
                    ChainObservation::One { bucket, mismatches } => {
                        local[bucket][mismatches as usize] += 1;
                    }
                    ChainObservation::PairBatch {
                        bucket,
                        mismatched,
                        chains,
                    } => {
                        local[bucket][1] += mismatched;
                        local[bucket][0] += chains - mismatched;
                    }
                });
            }
            local
        })
        .collect();
    let mut counts: Vec<Vec<u64>> = buckets
        .iter()
        .map(|&(len, _)| vec![0u64; len as usize + 1])
        .collect();
    for local in chunk_counts {
        for (bucket, row) in local.into_iter().enumerate() {
            for (m, c) in row.into_iter().enumerate() {
                counts[bucket][m] += c;
            }
        }
    }

    let volume = census.volume() as f64;
    let n_samples = samples as f64;
    let mut value = 0.0f64;
    let mut variance = 0.0f64;
    for (bucket, &(len, chains)) in buckets.iter().enumerate() {
        let draws = n_samples * chains as f64;
        let mut sum = 0.0f64;
        let mut sum_sq = 0.0f64;
        for (m, &count) in counts[bucket].iter().enumerate() {
            if count == 0 {
                continue;
            }
            let w = (beta * (f64::from(len) - 2.0 * m as f64)).exp();
            sum += count as f64 * w;
            sum_sq += count as f64 * w * w;
        }
        let mean = sum / draws;
        let spread = ((sum_sq - sum * sum / draws) / (draws - 1.0)).max(0.0);
        value += chains as f64 * mean.ln();
        variance += chains as f64 * spread / (n_samples * mean * mean);
    }
    Ok(McEstimate {
        mean: value / volume,
        stderr: variance.sqrt() / volume,
        samples,
        seed,
        hits: None,
    })
}

/// Draws `samples` independent spin fields and returns each field's multiple
/// sum, in sample order.  Deterministic given the seed; shares its sampling
/// scheme with [`empirical_rate`], so a dump and a rate estimate with the
/// same seed see the same fields.
pub fn sample_sums(
    n: &BoxSpec,
    p: &MultiplierVector,
    r: f64,
    samples: u64,
    seed: u64,
) -> Result<Vec<i64>, OracleError> {
    let census = mc_preflight(n, p, r, samples, 1)?;
    let buckets = length_buckets(&census);
    let threshold = sampling_mode(r);
    let base = ChaCha8Rng::seed_from_u64(seed);
    let volume = census.volume() as i64;

    let chunk_count = samples.div_ceil(SAMPLE_CHUNK);
    let chunks: Vec<Vec<i64>> = (0..chunk_count)
        .into_par_iter()
        .map(|chunk| {
            let begin = chunk * SAMPLE_CHUNK;
            let end = (begin + SAMPLE_CHUNK).min(samples);
            let mut sums = Vec::with_capacity((end - begin) as usize);
            for sample in begin..end {
                let mut rng = base.clone();
                rng.set_stream(sample);
                let mut mismatches = 0u64;
                walk_sample(&mut rng, &buckets, threshold, &mut |event| match event {
                    ChainObservation::One { mismatches: m, .. } => {
                        mismatches += u64::from(m);
                    }
                    ChainObservation::PairBatch { mismatched, .. } => mismatches += mismatched,
                });
                // Chain lengths tile the volume, so S = volume - 2 * mismatches.
                sums.push(volume - 2 * mismatches as i64);
            }
            sums
        })
        .collect();
    Ok(chunks.into_iter().flatten().collect())
}

/// Plug-in estimate of the large-deviation rate
/// `-(1/volume) * ln P(S / volume in [x - eps, x + eps])`.
///
/// The standard error propagates the binomial error of the hit frequency
/// through the logarithm.  Fewer than [`MIN_RATE_HITS`] window hits is
/// reported as an error carrying the raw hit count, so callers can tell
/// statistical starvation from a genuinely rare target.
pub fn empirical_rate(
    n: &BoxSpec,
    p: &MultiplierVector,
    r: f64,
    x: f64,
    eps: f64,
    samples: u64,
    seed: u64,
) -> Result<McEstimate, OracleError> {
    if !x.is_finite() {
        return Err(OracleError::InvalidQuery(format!(
            "rate target must be finite, got {x}"
        )));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(OracleError::InvalidQuery(format!(
            "window half-width must be a positive real, got {eps}"
        )));
    }
    let sums = sample_sums(n, p, r, samples, seed)?;
    let volume = n.volume() as f64;
    let lo = (x - eps) * volume;
    let hi = (x + eps) * volume;
    let hits = sums
        .iter()
        .filter(|&&s| {
            let sf = s as f64;
            sf >= lo && sf <= hi
        })
        .count() as u64;
    if hits < MIN_RATE_HITS {
        return Err(OracleError::InsufficientHits {
            hits,
            minimum: MIN_RATE_HITS,
        });
    }
    let p_hat = hits as f64 / samples as f64;
    Ok(McEstimate {
        mean: -p_hat.ln() / volume,
        stderr: ((1.0 - p_hat) / hits as f64).sqrt() / volume,
        samples,
        seed,
        hits: Some(hits),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free_energy::{finite_volume_free_energy, symmetric_free_energy};
    use approx::assert_relative_eq;

    fn mv(entries: &[u64]) -> MultiplierVector {
        MultiplierVector::new(entries).unwrap()
    }

    fn bx(sides: &[u64]) -> BoxSpec {
        BoxSpec::new(sides).unwrap()
    }

    #[test]
    fn extended_support_enumerates_and_orders_sites() {
        let support = ExtendedSupport::new(&bx(&[2, 2]), &mv(&[2, 3])).unwrap();
        let expected: Vec<Vec<u64>> = vec![
            vec![1, 1],
            vec![1, 2],
            vec![2, 1],
            vec![2, 2],
            vec![2, 3],
            vec![2, 6],
            vec![4, 3],
            vec![4, 6],
        ];
        assert_eq!(support.sites(), expected.as_slice());
        assert_eq!(support.box_size(), 4);
        assert_eq!(support.total_size(), 8);
        assert_eq!(support.pairs().len(), 4);
    }

    #[test]
    fn multiple_sum_matches_hand_computations() {
        let support = ExtendedSupport::new(&bx(&[2, 2]), &mv(&[2, 3])).unwrap();
        assert_eq!(multiple_sum(&support, &[1; 8]).unwrap(), 4);
        assert_eq!(multiple_sum(&support, &[-1; 8]).unwrap(), 4);

        // Flipping only the spin at (2,3) flips exactly the bond of the chain
        // started at (1,1).
        let flip_at = support
            .sites()
            .iter()
            .position(|s| s == &vec![2, 3])
            .unwrap();
        let mut spins = [1i8; 8];
        spins[flip_at] = -1;
        assert_eq!(multiple_sum(&support, &spins).unwrap(), 2);

        assert!(matches!(
            multiple_sum(&support, &[1; 5]),
            Err(OracleError::MissingSite {
                expected: 8,
                got: 5
            })
        ));
        let mut bad = [1i8; 8];
        bad[3] = 0;
        assert!(matches!(
            multiple_sum(&support, &bad),
            Err(OracleError::InvalidSpin { index: 3, value: 0 })
        ));
    }

    #[test]
    fn multiple_sum_parity_and_bounds_hold_exhaustively() {
        let support = ExtendedSupport::new(&bx(&[2, 2]), &mv(&[2, 3])).unwrap();
        for mask in 0u32..256 {
            let spins: Vec<i8> = (0..8)
                .map(|b| if (mask >> b) & 1 == 1 { 1 } else { -1 })
                .collect();
            let s = multiple_sum(&support, &spins).unwrap();
            assert!(s.abs() <= 4);
            assert_eq!((4 - s) % 2, 0);
        }
    }

    #[test]
    fn brute_force_is_zero_at_zero_coupling() {
        for r in [0.3, 0.5, 0.8] {
            let v = brute_force_mgf_log(&bx(&[2, 2]), &mv(&[2, 3]), r, 0.0).unwrap();
            assert!(v.abs() <= 1e-10, "r={r}: {v}");
        }
    }

    #[test]
    fn brute_force_matches_census_assembly() {
        for sides in [[2u64, 2], [3, 3]] {
            let n = bx(&sides);
            let p = mv(&[2, 3]);
            let volume = n.volume() as f64;
            for r in [0.3, 0.5, 0.8] {
                for beta in [-1.0, 0.5] {
                    let naive = brute_force_mgf_log(&n, &p, r, beta).unwrap();
                    let assembled = volume * finite_volume_free_energy(&n, &p, r, beta).unwrap();
                    assert!(
                        (naive - assembled).abs() <= 1e-10,
                        "sides={sides:?}, r={r}, beta={beta}: {naive} vs {assembled}"
                    );
                }
            }
        }
    }

    #[test]
    fn brute_force_matches_frozen_values() {
        let v = brute_force_mgf_log(&bx(&[2, 2]), &mv(&[2, 3]), 0.3, 0.5).unwrap();
        assert_relative_eq!(v, 4.0 * 0.19144746711824792, max_relative = 1e-12);

        for beta in [-1.0, 0.5, 2.0] {
            let v = brute_force_mgf_log(&bx(&[3, 3]), &mv(&[2, 3]), 0.5, beta).unwrap();
            assert!((v - 9.0 * symmetric_free_energy(beta)).abs() <= 1e-10);
        }
    }

    #[test]
    fn brute_force_rejects_large_supports() {
        let err = brute_force_mgf_log(&bx(&[4, 4]), &mv(&[2, 3]), 0.5, 1.0).unwrap_err();
        assert!(matches!(err, OracleError::SupportTooLarge { .. }));
    }

    #[test]
    fn symmetric_distribution_smallest_case_and_moments() {
        let d = exact_symmetric_distribution(1).unwrap();
        let probs = d.probabilities();
        assert_eq!(probs.len(), 2);
        assert_relative_eq!(probs[&1], 0.5, max_relative = 1e-15);
        assert_relative_eq!(probs[&-1], 0.5, max_relative = 1e-15);
        assert!(d.log_prob(0).is_none());
        assert!(d.log_prob(3).is_none());

        let d = exact_symmetric_distribution(64).unwrap();
        let probs = d.probabilities();
        let total: f64 = probs.values().sum();
        let mean: f64 = probs.iter().map(|(&s, &p)| s as f64 * p).sum();
        let var: f64 = probs.iter().map(|(&s, &p)| (s as f64).powi(2) * p).sum();
        assert!((total - 1.0).abs() <= 1e-12);
        assert!(mean.abs() <= 1e-10);
        assert!((var - 64.0).abs() <= 1e-8);

        assert!(exact_symmetric_distribution(0).is_err());
        assert!(matches!(
            exact_symmetric_distribution(DISTRIBUTION_LIMIT + 1),
            Err(OracleError::VolumeTooLarge { .. })
        ));
    }

    #[test]
    fn symmetric_distribution_matches_enumeration_histogram() {
        // Enumerate all spin fields of the (3,3) support at even bias and
        // histogram the multiple sum; the law must match the shifted binomial
        // to floating precision.
        let n = bx(&[3, 3]);
        let support = ExtendedSupport::new(&n, &mv(&[2, 3])).unwrap();
        let total = support.total_size();
        assert!(total <= BRUTE_FORCE_LIMIT);
        let weight = 0.5f64.powi(total as i32);
        let mut histogram: BTreeMap<i64, f64> = BTreeMap::new();
        for mask in 0u64..(1u64 << total) {
            let spins: Vec<i8> = (0..total)
                .map(|b| if (mask >> b) & 1 == 1 { 1 } else { -1 })
                .collect();
            let s = multiple_sum(&support, &spins).unwrap();
            *histogram.entry(s).or_insert(0.0) += weight;
        }
        let exact = exact_symmetric_distribution(9).unwrap().probabilities();
        let mut tv = 0.0f64;
        for (&s, &p) in exact.iter() {
            tv += (p - histogram.get(&s).copied().unwrap_or(0.0)).abs();
        }
        for (&s, &p) in histogram.iter() {
            if !exact.contains_key(&s) {
                tv += p;
            }
        }
        assert!(tv * 0.5 <= 1e-12, "total variation distance {tv}");
    }

    #[test]
    fn interval_probability_covers_the_whole_support() {
        let d = exact_symmetric_distribution(64).unwrap();
        let everything = d.average_interval_log_prob(0.0, 1.0);
        assert!(everything.abs() <= 1e-12);
        assert_eq!(d.average_interval_log_prob(0.9, 0.001), f64::NEG_INFINITY);
    }

    #[test]
    fn mc_estimate_is_deterministic_and_seed_sensitive() {
        let n = bx(&[12, 12]);
        let p = mv(&[2, 3]);
        let a = mc_free_energy(&n, &p, 0.3, 0.7, 500, 42).unwrap();
        let b = mc_free_energy(&n, &p, 0.3, 0.7, 500, 42).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());

        let c = mc_free_energy(&n, &p, 0.3, 0.7, 500, 43).unwrap();
        assert_ne!(a.mean.to_bits(), c.mean.to_bits());

        // The reduction is exact integer counting, so a single-threaded pool
        // reproduces the default pool bit for bit.
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| mc_free_energy(&n, &p, 0.3, 0.7, 500, 42).unwrap());
        assert_eq!(a.mean.to_bits(), single.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), single.stderr.to_bits());
    }

    #[test]
    fn mc_estimate_covers_known_targets() {
        let n = bx(&[12, 12]);
        let p = mv(&[2, 3]);

        let est = mc_free_energy(&n, &p, 0.5, 0.5, 4000, 1).unwrap();
        let target = symmetric_free_energy(0.5);
        assert!(
            (est.mean - target).abs() <= 3.5 * est.stderr,
            "even bias: {} vs {target} (stderr {})",
            est.mean,
            est.stderr
        );

        let est = mc_free_energy(&n, &p, 0.3, 0.5, 4000, 1).unwrap();
        let target = finite_volume_free_energy(&n, &p, 0.3, 0.5).unwrap();
        assert!(
            (est.mean - target).abs() <= 3.5 * est.stderr,
            "biased: {} vs {target} (stderr {})",
            est.mean,
            est.stderr
        );
    }

    #[test]
    fn mc_zero_coupling_is_exact() {
        let est = mc_free_energy(&bx(&[12, 12]), &mv(&[2, 3]), 0.3, 0.0, 500, 9).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn mc_validation_errors() {
        let n = bx(&[12, 12]);
        let p = mv(&[2, 3]);
        assert!(matches!(
            mc_free_energy(&n, &p, 0.3, 0.5, 50, 1),
            Err(OracleError::TooFewSamples { .. })
        ));
        assert!(matches!(
            mc_free_energy(&n, &p, 1.5, 0.5, 500, 1),
            Err(OracleError::Ising(_))
        ));
        assert!(matches!(
            mc_free_energy(&n, &p, 0.3, f64::INFINITY, 500, 1),
            Err(OracleError::Ising(_))
        ));
        assert!(matches!(
            mc_free_energy(&bx(&[100_000, 10_000]), &p, 0.3, 0.5, 500, 1),
            Err(OracleError::Lattice(LatticeError::BoxTooLarge { .. }))
        ));
    }

    #[test]
    fn sampled_sums_respect_parity_and_bounds() {
        let n = bx(&[7, 9]);
        let p = mv(&[2, 3]);
        let sums = sample_sums(&n, &p, 0.4, 300, 5).unwrap();
        assert_eq!(sums.len(), 300);
        for &s in &sums {
            assert!(s.abs() <= 63);
            assert_eq!((63 - s) % 2, 0, "S={s} has wrong parity");
        }
        assert_eq!(sums, sample_sums(&n, &p, 0.4, 300, 5).unwrap());
    }

    #[test]
    fn empirical_rate_near_certain_event_is_tiny() {
        let est = empirical_rate(&bx(&[8, 8]), &mv(&[2, 3]), 0.5, 0.0, 0.9, 1000, 3).unwrap();
        assert_eq!(est.hits, Some(1000));
        assert_eq!(est.mean, 0.0);
    }

    #[test]
    fn empirical_rate_matches_the_exact_binomial() {
        let n = bx(&[8, 8]);
        let p = mv(&[2, 3]);
        let est = empirical_rate(&n, &p, 0.5, 0.25, 1.0 / 64.0, 20_000, 7).unwrap();
        let exact = -exact_symmetric_distribution(64)
            .unwrap()
            .average_interval_log_prob(0.25, 1.0 / 64.0)
            / 64.0;
        assert!(
            (est.mean - exact).abs() <= 3.0 * est.stderr,
            "{} vs {exact} (stderr {})",
            est.mean,
            est.stderr
        );
        assert!(est.hits.unwrap() >= MIN_RATE_HITS);
    }

    #[test]
    fn empirical_rate_reports_starvation_with_the_hit_count() {
        let err =
            empirical_rate(&bx(&[8, 8]), &mv(&[2, 3]), 0.5, 0.95, 1e-3, 1000, 11).unwrap_err();
        assert!(matches!(err, OracleError::InsufficientHits { .. }));
    }

    #[test]
    fn empirical_rate_validates_the_query() {
        let n = bx(&[8, 8]);
        let p = mv(&[2, 3]);
        assert!(matches!(
            empirical_rate(&n, &p, 0.5, f64::NAN, 0.1, 1000, 1),
            Err(OracleError::InvalidQuery(_))
        ));
        assert!(matches!(
            empirical_rate(&n, &p, 0.5, 0.0, 0.0, 1000, 1),
            Err(OracleError::InvalidQuery(_))
        ));
    }
}
