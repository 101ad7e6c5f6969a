//! Frequency-dependent inputs: either a constant or a tabulated profile.
//!
//! Tables are linearly interpolated between grid points and vanish outside
//! the grid.

use std::ops::{Add, Mul};

use num_complex::Complex64 as C64;
use num_traits::Zero;

use crate::error::{Error, Result};

/// A scalar function of frequency.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile<T> {
    Constant(T),
    Table { grid: Vec<f64>, values: Vec<T> },
}

/// Discrete-continuum coupling `W_i(Δ)`.
pub type CouplingProfile = Profile<C64>;
/// Mode density, either `ρ_c(Δ)` or the true-mode `ρ(ω)`.
pub type DensityProfile = Profile<f64>;

impl<T> Profile<T>
where
    T: Copy + Zero + Add<Output = T> + Mul<f64, Output = T>,
{
    pub fn table(grid: Vec<f64>, values: Vec<T>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "table needs at least two points and matching lengths (grid {}, values {})",
                grid.len(),
                values.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(
                "table grid must be finite and strictly increasing".into(),
            ));
        }
        Ok(Profile::Table { grid, values })
    }

    /// Tabulate `f` on `grid`.
    pub fn sample(grid: Vec<f64>, f: impl Fn(f64) -> T) -> Result<Self> {
        let values = grid.iter().map(|&x| f(x)).collect();
        Self::table(grid, values)
    }

    pub fn at(&self, x: f64) -> T {
        match self {
            Profile::Constant(c) => *c,
            Profile::Table { grid, values } => {
                let n = grid.len();
                if x < grid[0] || x > grid[n - 1] || x.is_nan() {
                    return T::zero();
                }
                // first index with grid[idx] > x
                let idx = grid.partition_point(|&g| g <= x);
                if idx == n {
                    return values[n - 1];
                }
                let (x0, x1) = (grid[idx - 1], grid[idx]);
                let s = (x - x0) / (x1 - x0);
                values[idx - 1] * (1.0 - s) + values[idx] * s
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Profile::Constant(_))
    }

    /// Closed interval outside which the profile vanishes; `None` for constants.
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            Profile::Constant(_) => None,
            Profile::Table { grid, .. } => Some((grid[0], grid[grid.len() - 1])),
        }
    }

    pub fn grid(&self) -> Option<&[f64]> {
        match self {
            Profile::Constant(_) => None,
            Profile::Table { grid, .. } => Some(grid),
        }
    }

    pub fn map<U>(&self, f: impl Fn(T) -> U) -> Profile<U> {
        match self {
            Profile::Constant(c) => Profile::Constant(f(*c)),
            Profile::Table { grid, values } => Profile::Table {
                grid: grid.clone(),
                values: values.iter().map(|&v| f(v)).collect(),
            },
        }
    }
}

impl DensityProfile {
    /// Smallest tabulated value (the constant itself for constants), with its location.
    pub fn min_sample(&self) -> (f64, f64) {
        match self {
            Profile::Constant(c) => (*c, f64::NAN),
            Profile::Table { grid, values } => grid
                .iter()
                .zip(values)
                .map(|(&x, &v)| (v, x))
                .fold((f64::INFINITY, f64::NAN), |a, b| if b.0 < a.0 { b } else { a }),
        }
    }

    pub fn check_positive(&self) -> Result<()> {
        let (v, at) = self.min_sample();
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::NonpositiveDensity { at })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_interpolation_and_zero_outside() {
        let p = DensityProfile::table(vec![0.0, 1.0, 3.0], vec![1.0, 3.0, 7.0]).unwrap();
        assert_eq!(p.at(0.0), 1.0);
        assert_eq!(p.at(0.5), 2.0);
        assert_eq!(p.at(2.0), 5.0);
        assert_eq!(p.at(3.0), 7.0);
        assert_eq!(p.at(-0.1), 0.0);
        assert_eq!(p.at(3.1), 0.0);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(DensityProfile::table(vec![0.0], vec![1.0]).is_err());
        assert!(DensityProfile::table(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(DensityProfile::table(vec![0.0, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn positivity() {
        assert!(DensityProfile::Constant(1.0).check_positive().is_ok());
        assert!(DensityProfile::Constant(0.0).check_positive().is_err());
        let p = DensityProfile::table(vec![0.0, 1.0], vec![1.0, -1.0]).unwrap();
        assert_eq!(p.check_positive(), Err(Error::NonpositiveDensity { at: 1.0 }));
    }
}
