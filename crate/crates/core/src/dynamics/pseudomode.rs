//! `i dc_1/dt = ω_1 c_1 + Σ_l K_l b_l`, `i db_l/dt = z_l b_l + K_l c_1`.

use num_complex::Complex64 as C64;

use super::rk4::Rk4;
use super::{check_step, time_grid, DynamicsTrace, Method};
use crate::error::{Error, Result};
use crate::pseudo::PseudomodeSet;

const I: C64 = C64::new(0.0, 1.0);

/// Atom excited, pseudomodes empty.
pub fn solve_pseudomode(set: &PseudomodeSet, t_max: f64, h: f64) -> Result<DynamicsTrace> {
    let zeros = vec![C64::new(0.0, 0.0); set.modes.len()];
    solve_pseudomode_with(set, C64::new(1.0, 0.0), &zeros, t_max, h)
}

pub fn solve_pseudomode_with(
    set: &PseudomodeSet,
    c1: C64,
    b: &[C64],
    t_max: f64,
    h: f64,
) -> Result<DynamicsTrace> {
    if b.len() != set.modes.len() {
        return Err(Error::InvalidInput(format!(
            "{} initial pseudomode amplitudes for {} pseudomodes",
            b.len(),
            set.modes.len()
        )));
    }
    let times = time_grid(t_max, h)?;
    check_step(h, set.max_frequency())?;
    let poles = set.poles();
    let k = set.couplings();
    let omega_1 = set.atom_frequency;
    let mut rhs = |y: &[C64], out: &mut [C64]| {
        let mut acc = y[0] * omega_1;
        for l in 0..k.len() {
            acc += k[l] * y[l + 1];
            out[l + 1] = -I * (poles[l] * y[l + 1] + k[l] * y[0]);
        }
        out[0] = -I * acc;
    };

    let mut y: Vec<C64> = std::iter::once(c1).chain(b.iter().copied()).collect();
    let mut rk = Rk4::new(y.len());
    let mut trace = DynamicsTrace::new(Method::Pseudomode, times);
    let steps = trace.times.len();
    let mut amplitudes = Vec::with_capacity(steps);
    for n in 0..steps {
        if n > 0 {
            rk.step(&mut rhs, &mut y, h);
        }
        trace.p1.push(y[0].norm_sqr());
        trace.norm.push(y.iter().map(|a| a.norm_sqr()).sum());
        amplitudes.push(y[0]);
        trace.auxiliary.push(y[1..].to_vec());
        trace.mode_populations.push(y[1..].iter().map(|a| a.norm_sqr()).collect());
    }
    trace.c1 = Some(amplitudes);
    Ok(trace)
}
