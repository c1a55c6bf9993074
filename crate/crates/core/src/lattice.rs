//! Chain decomposition of finite boxes in `N^d` under a componentwise
//! multiplier map.
//!
//! Fix a multiplier vector `p = (p_1, ..., p_d)` with entries >= 1, at least
//! one entry >= 2, and pairwise coprime entries. The map `x -> p (.) x`
//! (componentwise product) partitions `N^d` into geometric chains
//! `i, p(.)i, p^2(.)i, ...` whose starts are the points `i` with `p_j` not
//! dividing `i_j` for some coordinate `j`. Restricted to a finite box
//! `{1..N_1} x ... x {1..N_d}`, every site lies on exactly one maximal
//! in-box run, and the number of runs of each length has a closed form in
//! terms of the products `A_m = prod_k floor(N_k / p_k^m)`:
//!
//! * runs of length exactly `l` through arbitrary sites: `A_{l-1} - A_l`,
//! * runs of length exactly `l` started at a chain start: `A_{l-1} - 2 A_l + A_{l+1}`.
//!
//! This module provides the validated parameter types, the explicit
//! decomposition, the closed-form counts, and their asymptotic densities.

use crate::error::LatticeError;

/// Hard cap on the number of sites any enumeration walks.
pub const ENUMERATION_LIMIT: u64 = 100_000_000;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// A validated multiplier vector `p`.
///
/// Entries are >= 1 with at least one entry >= 2. Entries are pairwise
/// coprime unless the caller explicitly overrides that check, in which case
/// the offending pair is kept as a warning: without coprimality distinct
/// chains can collide, and every count produced from such a vector is suspect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiplierVector {
    entries: Vec<u64>,
    product: u64,
    coprimality_warning: Option<(usize, usize)>,
}

impl MultiplierVector {
    /// Validates entries strictly (pairwise coprimality enforced).
    pub fn new(entries: &[u64]) -> Result<Self, LatticeError> {
        Self::validate(entries, false)
    }

    /// Validates entries but downgrades a coprimality failure to a warning
    /// retrievable via [`MultiplierVector::coprimality_warning`].
    pub fn new_allowing_non_coprime(entries: &[u64]) -> Result<Self, LatticeError> {
        Self::validate(entries, true)
    }

    fn validate(entries: &[u64], allow_non_coprime: bool) -> Result<Self, LatticeError> {
        if entries.is_empty() {
            return Err(LatticeError::AllOnes);
        }
        for (index, &e) in entries.iter().enumerate() {
            if e == 0 {
                return Err(LatticeError::NonPositiveEntry { index });
            }
        }
        if entries.iter().all(|&e| e == 1) {
            return Err(LatticeError::AllOnes);
        }
        let mut coprimality_warning = None;
        'outer: for i in 0..entries.len() {
            for j in (i + 1)..entries.len() {
                let g = gcd(entries[i], entries[j]);
                if g > 1 {
                    if allow_non_coprime {
                        coprimality_warning = Some((i, j));
                        break 'outer;
                    }
                    return Err(LatticeError::NotPairwiseCoprime {
                        first: i,
                        second: j,
                        gcd: g,
                    });
                }
            }
        }
        let mut product: u64 = 1;
        for &e in entries {
            product = product
                .checked_mul(e)
                .ok_or(LatticeError::CoordinateOverflow)?;
        }
        Ok(Self {
            entries: entries.to_vec(),
            product,
            coprimality_warning,
        })
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    /// The product `P = p_1 p_2 ... p_d`.
    pub fn product(&self) -> u64 {
        self.product
    }

    /// The offending index pair when coprimality was overridden.
    pub fn coprimality_warning(&self) -> Option<(usize, usize)> {
        self.coprimality_warning
    }

    /// Whether `site` starts a chain: some coordinate with `p_j >= 2` is not
    /// divisible by `p_j`. (Coordinates with `p_j = 1` never witness this,
    /// since 1 divides everything.)
    pub fn is_chain_start(&self, site: &[u64]) -> bool {
        site.iter()
            .zip(&self.entries)
            .any(|(&x, &p)| p >= 2 && x % p != 0)
    }

    /// Componentwise product `p (.) site`, or an overflow error.
    pub fn step(&self, site: &[u64]) -> Result<Vec<u64>, LatticeError> {
        site.iter()
            .zip(&self.entries)
            .map(|(&x, &p)| x.checked_mul(p).ok_or(LatticeError::CoordinateOverflow))
            .collect()
    }
}

/// A validated finite box `{1..N_1} x ... x {1..N_d}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoxSpec {
    sides: Vec<u64>,
    volume: u64,
}

impl BoxSpec {
    /// Validates the sides; an empty side list is rejected.
    pub fn new(sides: &[u64]) -> Result<Self, LatticeError> {
        if sides.is_empty() {
            return Err(LatticeError::NonPositiveSide { index: 0 });
        }
        for (index, &n) in sides.iter().enumerate() {
            if n == 0 {
                return Err(LatticeError::NonPositiveSide { index });
            }
        }
        let mut volume: u64 = 1;
        for &n in sides {
            volume = volume.checked_mul(n).ok_or(LatticeError::VolumeOverflow)?;
        }
        Ok(Self {
            sides: sides.to_vec(),
            volume,
        })
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[u64] {
        &self.sides
    }

    pub fn volume(&self) -> u64 {
        self.volume
    }

    pub fn contains(&self, site: &[u64]) -> bool {
        site.len() == self.sides.len()
            && site
                .iter()
                .zip(&self.sides)
                .all(|(&x, &n)| (1..=n).contains(&x))
    }

    fn check_dim(&self, p: &MultiplierVector) -> Result<(), LatticeError> {
        if self.dim() != p.dim() {
            return Err(LatticeError::DimensionMismatch {
                box_dim: self.dim(),
                multiplier_dim: p.dim(),
            });
        }
        Ok(())
    }

    fn check_enumerable(&self) -> Result<(), LatticeError> {
        if self.volume > ENUMERATION_LIMIT {
            return Err(LatticeError::BoxTooLarge {
                volume: self.volume,
                limit: ENUMERATION_LIMIT,
            });
        }
        Ok(())
    }

    /// Iterates all box sites in lexicographic order.
    pub fn sites(&self) -> impl Iterator<Item = Vec<u64>> + '_ {
        let d = self.dim();
        let mut current: Vec<u64> = vec![1; d];
        let mut done = false;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            let out = current.clone();
            // Odometer increment, last coordinate fastest (lexicographic order).
            let mut k = d;
            loop {
                if k == 0 {
                    done = true;
                    break;
                }
                k -= 1;
                if current[k] < self.sides[k] {
                    current[k] += 1;
                    break;
                }
                current[k] = 1;
            }
            Some(out)
        })
    }
}

/// One maximal in-box chain run: `start, p(.)start, ..., p^{len-1}(.)start`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    sites: Vec<Vec<u64>>,
}

impl Chain {
    pub fn start(&self) -> &[u64] {
        &self.sites[0]
    }

    /// Number of sites `l >= 1` on the run.
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty() // never true: a chain always has its start site
    }

    pub fn sites(&self) -> &[Vec<u64>] {
        &self.sites
    }
}

/// Decomposes the box into its maximal chains, ordered lexicographically by
/// start site. Every box site appears on exactly one returned chain, and each
/// chain's start lies in the chain-start set of `p`.
pub fn decompose_box(n: &BoxSpec, p: &MultiplierVector) -> Result<Vec<Chain>, LatticeError> {
    n.check_dim(p)?;
    n.check_enumerable()?;
    let mut chains = Vec::new();
    for site in n.sites() {
        if !p.is_chain_start(&site) {
            continue;
        }
        let mut sites = Vec::new();
        let mut x = site;
        loop {
            let next = match p.step(&x) {
                Ok(next) => next,
                // The next coordinate does not even fit in u64, so it is
                // certainly outside the box: the run ends here.
                Err(LatticeError::CoordinateOverflow) => {
                    sites.push(x);
                    break;
                }
                Err(e) => return Err(e),
            };
            sites.push(x);
            if !n.contains(&next) {
                break;
            }
            x = next;
        }
        chains.push(Chain { sites });
    }
    Ok(chains)
}

/// `A_m = prod_k floor(N_k / p_k^m)`, computed by nested floor division so no
/// intermediate power can overflow (`floor(floor(N/p)/p) = floor(N/p^2)`).
fn shrunken_volume(n: &BoxSpec, p: &MultiplierVector, m: u64) -> u64 {
    let mut product: u64 = 1;
    for (&side, &mult) in n.sides().iter().zip(p.entries()) {
        let mut q = side;
        if mult >= 2 {
            for _ in 0..m {
                q /= mult;
                if q == 0 {
                    break;
                }
            }
        }
        if q == 0 {
            return 0;
        }
        product *= q; // q <= side, so the product is <= the box volume
    }
    product
}

/// Closed-form count of box sites whose maximal in-box run has length
/// exactly `l` (`l >= 1`): `A_{l-1} - A_l`.
pub fn count_all_chains(n: &BoxSpec, p: &MultiplierVector, l: u64) -> Result<u64, LatticeError> {
    n.check_dim(p)?;
    assert!(l >= 1, "run length l must be >= 1");
    Ok(shrunken_volume(n, p, l - 1)
        .checked_sub(shrunken_volume(n, p, l))
        .expect("shrunken volumes are monotone in the shrink exponent"))
}

/// Closed-form count of chains of length exactly `l` whose start is a chain
/// start: `A_{l-1} - 2 A_l + A_{l+1}`. Equivalently the difference of
/// [`count_all_chains`] at `l` and `l + 1`, which is how it is computed so the
/// arithmetic stays in nonnegative integers.
pub fn count_free_chains(n: &BoxSpec, p: &MultiplierVector, l: u64) -> Result<u64, LatticeError> {
    let all_l = count_all_chains(n, p, l)?;
    let all_next = count_all_chains(n, p, l + 1)?;
    Ok(all_l
        .checked_sub(all_next)
        .expect("per-length site counts are monotone in l"))
}

/// Limiting density of chain starts with run length exactly `l` in a growing
/// box: `(P - 1)^2 / P^{l+1}` with `P = p_1 ... p_d`. These sum against `l`
/// to 1, mirroring the exact tiling identity.
pub fn asymptotic_chain_density(p: &MultiplierVector, l: u64) -> f64 {
    assert!(l >= 1, "run length l must be >= 1");
    let big_p = p.product() as f64;
    (big_p - 1.0) * (big_p - 1.0) / big_p.powf((l + 1) as f64)
}

/// Limit of (#chain starts in the box) / (box volume): `1 - 1/P`.
pub fn free_to_all_ratio_limit(p: &MultiplierVector) -> f64 {
    1.0 - 1.0 / p.product() as f64
}

/// Per-length row of a [`ChainCensus`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CensusRow {
    /// Run length `l >= 1`.
    pub ell: u64,
    /// Box sites whose maximal in-box run has length exactly `ell`.
    pub count_all: u64,
    /// Chains of length exactly `ell` starting at a chain start.
    pub count_free: u64,
    /// `count_all / volume`.
    pub density_all: f64,
    /// `count_free / volume`.
    pub density_free: f64,
}

/// Complete per-length tally of a box decomposition.
///
/// Invariants (exercised by the test suite): the `count_all` column sums to
/// the volume, and `sum_l l * count_free(l)` equals the volume — the chains
/// tile the box exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainCensus {
    volume: u64,
    rows: Vec<CensusRow>,
}

impl ChainCensus {
    /// Builds the census from the closed-form counts.
    pub fn closed_form(n: &BoxSpec, p: &MultiplierVector) -> Result<Self, LatticeError> {
        n.check_dim(p)?;
        let volume = n.volume();
        let mut rows = Vec::new();
        let mut l = 1;
        while shrunken_volume(n, p, l - 1) > 0 {
            let count_all = count_all_chains(n, p, l)?;
            let count_free = count_free_chains(n, p, l)?;
            rows.push(CensusRow {
                ell: l,
                count_all,
                count_free,
                density_all: count_all as f64 / volume as f64,
                density_free: count_free as f64 / volume as f64,
            });
            l += 1;
        }
        Ok(Self { volume, rows })
    }

    /// Builds the census by walking every box site: each site contributes to
    /// `count_all` at its run length, and to `count_free` when it is a chain
    /// start. Exists so the closed forms can be checked against brute
    /// enumeration.
    pub fn from_enumeration(n: &BoxSpec, p: &MultiplierVector) -> Result<Self, LatticeError> {
        n.check_dim(p)?;
        n.check_enumerable()?;
        let volume = n.volume();
        let mut all: Vec<u64> = Vec::new();
        let mut free: Vec<u64> = Vec::new();
        for site in n.sites() {
            let mut run = 0usize;
            let mut x = site.clone();
            loop {
                run += 1;
                match p.step(&x) {
                    Ok(next) if n.contains(&next) => x = next,
                    _ => break,
                }
            }
            if all.len() < run {
                all.resize(run, 0);
                free.resize(run, 0);
            }
            all[run - 1] += 1;
            if p.is_chain_start(&site) {
                free[run - 1] += 1;
            }
        }
        let rows = all
            .iter()
            .zip(&free)
            .enumerate()
            .map(|(i, (&count_all, &count_free))| CensusRow {
                ell: (i + 1) as u64,
                count_all,
                count_free,
                density_all: count_all as f64 / volume as f64,
                density_free: count_free as f64 / volume as f64,
            })
            .collect();
        Ok(Self { volume, rows })
    }

    pub fn volume(&self) -> u64 {
        self.volume
    }

    pub fn rows(&self) -> &[CensusRow] {
        &self.rows
    }

    /// Largest run length present in the box.
    pub fn max_length(&self) -> u64 {
        self.rows.last().map_or(0, |row| row.ell)
    }
}
