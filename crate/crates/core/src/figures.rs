//! Preset parameter sweeps producing plot-ready free-energy data.
//!
//! Each sweep evaluates the general free energy over the standard grid —
//! biases `r = 0.1, 0.2, ..., 0.9` crossed with 121 equally spaced couplings
//! `beta = -3, -2.95, ..., 3` — truncating the chain-length series at 100
//! terms and reporting the truncation tail bound per point.

use crate::error::EnergyError;
use crate::free_energy::{FreeEnergy, GeneralFreeEnergy, SeriesControl};
use crate::io::FigureRow;
use crate::lattice::MultiplierVector;

/// Series terms kept by the preset sweeps.
pub const FIGURE_TERMS: usize = 100;

/// The two preset sweep settings, selected by index on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureSetting {
    /// Planar setting with multipliers `(2, 1)`: chains advance along a
    /// single doubling coordinate, the second coordinate only adds
    /// multiplicity.
    PlanarDoubling,
    /// Five-dimensional setting with multipliers `(2, 3, 5, 7, 11)`.
    FivePrimes,
}

impl FigureSetting {
    /// Resolves the 1-based preset index used by the command line.
    pub fn from_index(index: u8) -> Option<Self> {
        match index {
            1 => Some(Self::PlanarDoubling),
            2 => Some(Self::FivePrimes),
            _ => None,
        }
    }

    /// The multiplier vector of this setting.
    pub fn multipliers(&self) -> MultiplierVector {
        let entries: &[u64] = match self {
            Self::PlanarDoubling => &[2, 1],
            Self::FivePrimes => &[2, 3, 5, 7, 11],
        };
        MultiplierVector::new(entries).expect("preset multiplier vectors are valid")
    }
}

/// The 121-point coupling grid `-3, -2.95, ..., 3`.
pub fn figure_coupling_grid() -> Vec<f64> {
    (-60..=60).map(|k| f64::from(k) * 0.05).collect()
}

/// The bias grid `0.1, 0.2, ..., 0.9`.
pub fn figure_bias_grid() -> Vec<f64> {
    (1..=9).map(|k| f64::from(k) / 10.0).collect()
}

/// Runs a preset sweep: for every bias, the free-energy curve over the
/// coupling grid with value, derivative, and truncation tail bound.
pub fn figure_sweep(setting: FigureSetting) -> Result<Vec<FigureRow>, EnergyError> {
    let multipliers = setting.multipliers();
    let control = SeriesControl::new(FIGURE_TERMS, true)?;
    let mut rows = Vec::with_capacity(9 * 121);
    for r in figure_bias_grid() {
        let evaluator = GeneralFreeEnergy::new(r, &multipliers, control)?;
        for beta in figure_coupling_grid() {
            let (value, tail_bound) = evaluator.value_and_tail(beta)?;
            let derivative = evaluator.derivative(beta)?;
            rows.push(FigureRow {
                r,
                beta,
                value,
                derivative,
                tail_bound,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free_energy::symmetric_free_energy;

    #[test]
    fn grids_have_the_advertised_shape() {
        let betas = figure_coupling_grid();
        assert_eq!(betas.len(), 121);
        assert_eq!(betas[0], -3.0);
        assert_eq!(betas[60], 0.0);
        assert_eq!(betas[120], 3.0);
        let biases = figure_bias_grid();
        assert_eq!(biases.len(), 9);
        assert_eq!(biases[4], 0.5);
    }

    #[test]
    fn preset_multipliers_resolve_by_index() {
        assert_eq!(
            FigureSetting::from_index(1),
            Some(FigureSetting::PlanarDoubling)
        );
        assert_eq!(
            FigureSetting::from_index(2),
            Some(FigureSetting::FivePrimes)
        );
        assert_eq!(FigureSetting::from_index(3), None);
        assert_eq!(FigureSetting::PlanarDoubling.multipliers().product(), 2);
        assert_eq!(FigureSetting::FivePrimes.multipliers().product(), 2310);
    }

    #[test]
    fn sweeps_cover_the_grid_with_finite_tight_values() {
        for setting in [FigureSetting::PlanarDoubling, FigureSetting::FivePrimes] {
            let rows = figure_sweep(setting).unwrap();
            assert_eq!(rows.len(), 9 * 121);
            assert_eq!(rows[0].r, 0.1);
            assert_eq!(rows[0].beta, -3.0);
            for row in &rows {
                assert!(row.value.is_finite());
                assert!(row.derivative.is_finite());
                assert!(row.tail_bound >= 0.0 && row.tail_bound < 1e-6);
            }
        }
    }

    #[test]
    fn even_bias_slice_reduces_to_the_symmetric_curve() {
        let rows = figure_sweep(FigureSetting::PlanarDoubling).unwrap();
        for row in rows.iter().filter(|row| row.r == 0.5) {
            assert!(
                (row.value - symmetric_free_energy(row.beta)).abs() <= 1e-10,
                "beta={}: {} vs {}",
                row.beta,
                row.value,
                symmetric_free_energy(row.beta)
            );
        }
    }
}
