//! The continuum replaced by `N` true modes on a uniform band, with
//! `|g_λ|² = D(ω_λ) δω` and amplitude equations
//! `i dc_1/dt = ω_1 c_1 + Σ g_λ c_λ`, `i dc_λ/dt = ω_λ c_λ + g_λ* c_1`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::rk4::Rk4;
use super::{check_step, time_grid, DynamicsTrace, Method};
use crate::error::{Error, Result};
use crate::fano::ReservoirStructure;
use crate::pseudo::extract_pseudomodes;

const I: C64 = C64::new(0.0, 1.0);

/// Required half-band margin beyond the outermost pole, in units of the largest width.
pub const BAND_MARGIN: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruemodeGrid {
    pub modes: usize,
    pub bandwidth: f64,
}

impl TruemodeGrid {
    pub fn spacing(&self) -> f64 {
        self.bandwidth / self.modes as f64
    }

    /// `2π/δω`.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * PI / self.spacing()
    }
}

/// Band centre and the bandwidth it must at least have.
fn band_requirement(structure: &ReservoirStructure, omega_1: f64) -> Result<(f64, f64)> {
    match structure {
        ReservoirStructure::Sampled(s) => {
            let total: f64 = s.d.iter().sum();
            if !(total > 0.0) {
                return Err(Error::ZeroStrength);
            }
            let centre = s.omega.iter().zip(&s.d).map(|(w, d)| w * d).sum::<f64>() / total;
            Ok((centre, 0.0))
        }
        _ => {
            let set = extract_pseudomodes(structure, omega_1)?;
            let lo = set.modes.iter().map(|m| m.pole.re).fold(f64::INFINITY, f64::min);
            let hi = set.modes.iter().map(|m| m.pole.re).fold(f64::NEG_INFINITY, f64::max);
            let centre = 0.5 * (lo + hi);
            Ok((centre, (hi - lo) + 2.0 * BAND_MARGIN * set.max_width()))
        }
    }
}

/// Mode frequencies at the cell midpoints of the band.
pub fn band_frequencies(centre: f64, grid: &TruemodeGrid) -> Vec<f64> {
    let dw = grid.spacing();
    (0..grid.modes).map(|l| centre - 0.5 * grid.bandwidth + (l as f64 + 0.5) * dw).collect()
}

pub fn solve_truemode_discretized(
    structure: &ReservoirStructure,
    omega_1: f64,
    grid: &TruemodeGrid,
    t_max: f64,
    h: f64,
) -> Result<DynamicsTrace> {
    if grid.modes == 0 || !(grid.bandwidth > 0.0) {
        return Err(Error::InvalidInput("need at least one mode and a positive bandwidth".into()));
    }
    let (centre, required) = band_requirement(structure, omega_1)?;
    if grid.bandwidth < required * (1.0 - 1e-12) {
        return Err(Error::BandTooNarrow { bandwidth: grid.bandwidth, required });
    }
    let recurrence = grid.recurrence_time();
    if t_max >= recurrence {
        return Err(Error::RecurrenceHorizonExceeded { t_max, recurrence });
    }
    let times = time_grid(t_max, h)?;
    let freqs = band_frequencies(centre, grid);
    let dw = grid.spacing();
    let g: Vec<f64> = freqs.iter().map(|&w| (structure.density(w).max(0.0) * dw).sqrt()).collect();
    let coupling = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = freqs.iter().map(|w| w.abs()).fold(omega_1.abs().max(coupling), f64::max);
    check_step(h, scale)?;

    let mut rhs = |y: &[C64], out: &mut [C64]| {
        let mut acc = y[0] * omega_1;
        for l in 0..g.len() {
            acc += y[l + 1] * g[l];
            out[l + 1] = -I * (y[l + 1] * freqs[l] + y[0] * g[l]);
        }
        out[0] = -I * acc;
    };
    let mut y = vec![C64::new(0.0, 0.0); grid.modes + 1];
    y[0] = C64::new(1.0, 0.0);
    let mut rk = Rk4::new(y.len());
    let mut trace = DynamicsTrace::new(Method::Truemode, times);
    let mut amplitudes = Vec::with_capacity(trace.times.len());
    for n in 0..trace.times.len() {
        if n > 0 {
            rk.step(&mut rhs, &mut y, h);
        }
        amplitudes.push(y[0]);
        trace.p1.push(y[0].norm_sqr());
        trace.norm.push(y.iter().map(|a| a.norm_sqr()).sum());
    }
    trace.c1 = Some(amplitudes);
    Ok(trace)
}
