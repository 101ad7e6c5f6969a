//! Single-excitation decay of an initially excited atom, by four routes that
//! must agree: pseudomode ODEs, the memory-kernel Volterra equation, a
//! discretised true-mode continuum, and the quasimode Lindblad equation.
//!
//! All solvers share one time grid `t_n = n h` and report Schrödinger-picture
//! amplitudes.

use std::str::FromStr;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub mod lindblad;
pub mod pseudomode;
pub mod rk4;
pub mod truemode;
pub mod volterra;

pub use lindblad::{solve_lindblad, LindbladOptions};
pub use pseudomode::{solve_pseudomode, solve_pseudomode_with};
pub use truemode::{solve_truemode_discretized, TruemodeGrid};
pub use volterra::solve_volterra;

/// Largest accepted `h · max frequency`.
pub const STEP_GUARD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Pseudomode,
    Volterra,
    Truemode,
    Lindblad,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Pseudomode, Method::Volterra, Method::Truemode, Method::Lindblad];

    pub fn name(self) -> &'static str {
        match self {
            Method::Pseudomode => "pseudomode",
            Method::Volterra => "volterra",
            Method::Truemode => "truemode",
            Method::Lindblad => "lindblad",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown method `{s}`")))
    }
}

/// Per-step density-matrix diagnostics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DensityDiagnostics {
    pub trace: Vec<f64>,
    pub min_eig: Vec<f64>,
    /// `max |ρ - ρ†|`.
    pub hermiticity: Vec<f64>,
}

impl DensityDiagnostics {
    pub fn max_trace_deviation(&self) -> f64 {
        self.trace.iter().map(|t| (t - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eig.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_hermiticity(&self) -> f64 {
        self.hermiticity.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsTrace {
    pub method: Method,
    pub times: Vec<f64>,
    /// Population of the initially excited level.
    pub p1: Vec<f64>,
    /// Its amplitude, where the solver tracks one.
    pub c1: Option<Vec<C64>>,
    /// Per-step pseudomode or quasimode amplitudes; empty when not recorded.
    pub auxiliary: Vec<Vec<C64>>,
    /// Per-step quasimode occupations; empty when not recorded.
    pub mode_populations: Vec<Vec<f64>>,
    /// Total probability in the tracked amplitudes.
    pub norm: Vec<f64>,
    pub density: Option<DensityDiagnostics>,
}

impl DynamicsTrace {
    fn new(method: Method, times: Vec<f64>) -> Self {
        let n = times.len();
        DynamicsTrace {
            method,
            times,
            p1: Vec::with_capacity(n),
            c1: None,
            auxiliary: Vec::new(),
            mode_populations: Vec::new(),
            norm: Vec::with_capacity(n),
            density: None,
        }
    }

    pub fn step(&self) -> f64 {
        if self.times.len() > 1 {
            self.times[1] - self.times[0]
        } else {
            0.0
        }
    }

    /// Every `stride`-th sample, starting at `t = 0`.
    pub fn subsample(&self, stride: usize) -> DynamicsTrace {
        let pick = |i: &usize| i % stride == 0;
        let keep = |v: &[f64]| v.iter().enumerate().filter(|(i, _)| pick(i)).map(|(_, x)| *x).collect();
        let keep_rows = |v: &[Vec<C64>]| -> Vec<Vec<C64>> {
            v.iter().enumerate().filter(|(i, _)| pick(i)).map(|(_, x)| x.clone()).collect()
        };
        let n = (self.times.len() - 1) / stride;
        DynamicsTrace {
            method: self.method,
            times: time_grid_steps(n, self.step() * stride as f64),
            p1: keep(&self.p1),
            c1: self
                .c1
                .as_ref()
                .map(|c| c.iter().enumerate().filter(|(i, _)| pick(i)).map(|(_, x)| *x).collect()),
            auxiliary: keep_rows(&self.auxiliary),
            mode_populations: self
                .mode_populations
                .iter()
                .enumerate()
                .filter(|(i, _)| pick(i))
                .map(|(_, x)| x.clone())
                .collect(),
            norm: keep(&self.norm),
            density: self.density.as_ref().map(|d| DensityDiagnostics {
                trace: keep(&d.trace),
                min_eig: keep(&d.min_eig),
                hermiticity: keep(&d.hermiticity),
            }),
        }
    }
}

fn time_grid_steps(steps: usize, h: f64) -> Vec<f64> {
    (0..=steps).map(|n| n as f64 * h).collect()
}

/// `t_n = n h` for `n = 0..=N`, with `N h ≥ t_max` the smallest such `N`.
pub fn time_grid(t_max: f64, h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) || !(t_max >= 0.0) || !h.is_finite() || !t_max.is_finite() {
        return Err(Error::InvalidInput(format!("need h > 0 and t_max >= 0, got h = {h}, t_max = {t_max}")));
    }
    let steps = (t_max / h - 1e-9).ceil().max(0.0) as usize;
    Ok(time_grid_steps(steps, h))
}

/// `StepTooLarge` unless `h · scale ≤ STEP_GUARD`.
pub fn check_step(h: f64, scale: f64) -> Result<()> {
    let product = h * scale;
    if product > STEP_GUARD {
        return Err(Error::StepTooLarge { h, product, limit: STEP_GUARD });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationReport {
    pub max_dp1: f64,
    pub rms_dp1: f64,
    /// Present when both traces carry amplitudes.
    pub max_dc1: Option<f64>,
    pub rms_dc1: Option<f64>,
}

pub fn compare_traces(a: &DynamicsTrace, b: &DynamicsTrace) -> Result<DeviationReport> {
    if a.times != b.times {
        return Err(Error::GridMismatch);
    }
    let stats = |d: Vec<f64>| {
        let max = d.iter().copied().fold(0.0, f64::max);
        let rms = if d.is_empty() { 0.0 } else { (d.iter().map(|x| x * x).sum::<f64>() / d.len() as f64).sqrt() };
        (max, rms)
    };
    let (max_dp1, rms_dp1) = stats(a.p1.iter().zip(&b.p1).map(|(x, y)| (x - y).abs()).collect());
    let (max_dc1, rms_dc1) = match (&a.c1, &b.c1) {
        (Some(x), Some(y)) => {
            let (m, r) = stats(x.iter().zip(y).map(|(p, q)| (p - q).norm()).collect());
            (Some(m), Some(r))
        }
        _ => (None, None),
    };
    Ok(DeviationReport { max_dp1, rms_dp1, max_dc1, rms_dc1 })
}

/// Largest difference between two traces on the coarser trace's grid.
///
/// The finer step must divide the coarser one.
pub fn coarse_difference(coarse: &DynamicsTrace, fine: &DynamicsTrace) -> Result<f64> {
    let ratio = (coarse.step() / fine.step()).round() as usize;
    if ratio == 0 {
        return Err(Error::GridMismatch);
    }
    let sub = fine.subsample(ratio);
    if sub.times.len() != coarse.times.len()
        || sub.times.iter().zip(&coarse.times).any(|(a, b)| (a - b).abs() > 1e-9 * (1.0 + b.abs()))
    {
        return Err(Error::GridMismatch);
    }
    let mut sub = sub;
    sub.times = coarse.times.clone();
    let r = compare_traces(coarse, &sub)?;
    Ok(r.max_dc1.unwrap_or(r.max_dp1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub steps: Vec<f64>,
    /// `max |y_h - y_{h/2}|` between successive halvings.
    pub differences: Vec<f64>,
    /// `log2` of successive difference ratios.
    pub orders: Vec<f64>,
}

impl ConvergenceReport {
    pub fn min_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Self-convergence of `solve` from step `h` over `halvings` halvings.
pub fn convergence_order<F>(solve: F, h: f64, halvings: usize) -> Result<ConvergenceReport>
where
    F: Fn(f64) -> Result<DynamicsTrace>,
{
    let steps: Vec<f64> = (0..=halvings).map(|k| h / (1u64 << k) as f64).collect();
    let traces = steps.iter().map(|&s| solve(s)).collect::<Result<Vec<_>>>()?;
    let differences = traces
        .windows(2)
        .map(|w| coarse_difference(&w[0], &w[1]))
        .collect::<Result<Vec<_>>>()?;
    let orders = differences.windows(2).map(|d| (d[0] / d[1]).log2()).collect();
    Ok(ConvergenceReport { steps, differences, orders })
}

/// Halve `h` until successive solutions differ by less than `tol`, then
/// return the finest solution on the grid of step `h`.
pub fn solve_converged<F>(solve: F, h: f64, tol: f64, max_halvings: usize) -> Result<(DynamicsTrace, f64)>
where
    F: Fn(f64) -> Result<DynamicsTrace>,
{
    let mut coarse = solve(h)?;
    let mut step = h;
    let mut change = f64::INFINITY;
    for k in 1..=max_halvings {
        step *= 0.5;
        let fine = solve(step)?;
        change = coarse_difference(&coarse, &fine)?;
        coarse = fine;
        if change < tol {
            let mut out = coarse.subsample(1 << k);
            out.times = time_grid_steps(out.times.len() - 1, h);
            return Ok((out, change));
        }
    }
    let mut out = coarse.subsample(1 << max_halvings);
    out.times = time_grid_steps(out.times.len() - 1, h);
    Ok((out, change))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pseudo::PseudomodeSet;

    #[test]
    fn time_grid_and_guard() {
        let t = time_grid(1.0, 0.25).unwrap();
        assert_eq!(t, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(time_grid(1.0, 0.3).unwrap().len(), 5);
        assert!(time_grid(1.0, 0.0).is_err());
        assert!(check_step(0.01, 5.0).is_ok());
        assert!(matches!(check_step(0.02, 5.0), Err(Error::StepTooLarge { .. })));
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("rk45".parse::<Method>().is_err());
    }

    #[test]
    fn identical_traces_have_zero_deviation() {
        let set = PseudomodeSet::lorentzian(1.0, 1.0, 0.5, 1.0).unwrap();
        let a = solve_pseudomode(&set, 2.0, 0.01).unwrap();
        let r = compare_traces(&a, &a).unwrap();
        assert_eq!((r.max_dp1, r.rms_dp1, r.max_dc1, r.rms_dc1), (0.0, 0.0, Some(0.0), Some(0.0)));
        let b = solve_pseudomode(&set, 2.0, 0.02).unwrap();
        assert_eq!(compare_traces(&a, &b), Err(Error::GridMismatch));
    }

    #[test]
    fn subsample_keeps_grid_points() {
        let set = PseudomodeSet::lorentzian(1.0, 1.0, 0.5, 1.0).unwrap();
        let fine = solve_pseudomode(&set, 1.0, 0.01).unwrap();
        let coarse = solve_pseudomode(&set, 1.0, 0.02).unwrap();
        let sub = fine.subsample(2);
        assert_eq!(sub.times.len(), coarse.times.len());
        assert!(coarse_difference(&coarse, &fine).unwrap() < 1e-8);
    }

    #[test]
    fn converged_solution_lands_on_requested_grid() {
        let set = PseudomodeSet::lorentzian(1.0, 1.0, 0.5, 1.0).unwrap();
        let (trace, change) = solve_converged(|h| solve_volterra(&set, 2.0, h), 0.04, 1e-6, 8).unwrap();
        assert!(change < 1e-6);
        assert_eq!(trace.times, time_grid(2.0, 0.04).unwrap());
        let exact = solve_pseudomode(&set, 2.0, 0.04).unwrap();
        assert!(compare_traces(&trace, &exact).unwrap().max_dc1.unwrap() < 2e-6);
    }
}
