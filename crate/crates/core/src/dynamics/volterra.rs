//! `dc̃_1/dt = -∫_0^t G(τ) c̃_1(t-τ) dτ` by product trapezoidal integration.
//!
//! With `G(τ) = Σ_l a_l e^{-μ_l τ}`, `a_l = -iΩ² r_l`, `μ_l = i(z_l - ω_1)`,
//! the kernel is integrated exactly against the piecewise-linear interpolant
//! of `c̃_1`, and the memory sum is carried recursively per pole. Time
//! stepping is the trapezoidal rule, implicit in the newest value only.

use num_complex::Complex64 as C64;

use super::{check_step, time_grid, DynamicsTrace, Method};
use crate::error::Result;
use crate::pseudo::PseudomodeSet;

const I: C64 = C64::new(0.0, 1.0);

/// `∫_0^h e^{x u}(1 - u/h) du = h (e^y - 1 - y)/y²`, `y = xh`.
fn e_weight(x: C64, h: f64) -> C64 {
    let y = x * h;
    if y.norm() < 1e-3 {
        // 1/2 + y/6 + y²/24 + y³/120
        h * (0.5 + y * (1.0 / 6.0 + y * (1.0 / 24.0 + y / 120.0)))
    } else {
        h * (y.exp() - 1.0 - y) / (y * y)
    }
}

pub fn solve_volterra(set: &PseudomodeSet, t_max: f64, h: f64) -> Result<DynamicsTrace> {
    let times = time_grid(t_max, h)?;
    check_step(h, set.max_frequency())?;
    let omega_sq = set.strength * set.strength;
    let a: Vec<C64> = set.modes.iter().map(|m| -I * omega_sq * m.residue).collect();
    let mu: Vec<C64> = set.modes.iter().map(|m| I * (m.pole - set.atom_frequency)).collect();
    let e_plus: Vec<C64> = mu.iter().map(|&m| e_weight(m, h)).collect();
    let e_minus: Vec<C64> = mu.iter().map(|&m| e_weight(-m, h)).collect();
    let decay: Vec<C64> = mu.iter().map(|&m| (-m * h).exp()).collect();
    let c_new: C64 = a.iter().zip(&e_minus).map(|(a, e)| a * e).sum();
    let both: Vec<C64> = (0..a.len()).map(|l| a[l] * (e_plus[l] + e_minus[l])).collect();

    let steps = times.len();
    let mut c = Vec::with_capacity(steps);
    let c0 = C64::new(1.0, 0.0);
    c.push(c0);
    // h_acc[l] = Σ_{j=1}^{n-1} e^{-μ(n-j)h} c_j ; powers[l] = e^{-μ n h}
    let mut h_acc = vec![C64::new(0.0, 0.0); a.len()];
    let mut powers = vec![C64::new(1.0, 0.0); a.len()];
    let mut memory = C64::new(0.0, 0.0);
    for n in 0..steps.saturating_sub(1) {
        // memory sum at t_{n+1} without the c_{n+1} term
        if n > 0 {
            for l in 0..a.len() {
                h_acc[l] = decay[l] * (h_acc[l] + c[n]);
            }
        }
        let mut s = C64::new(0.0, 0.0);
        for l in 0..a.len() {
            powers[l] *= decay[l];
            s += a[l] * powers[l] * e_plus[l] * c0 + both[l] * h_acc[l];
        }
        let next = (c[n] - 0.5 * h * (memory + s)) / (1.0 + 0.5 * h * c_new);
        memory = s + c_new * next;
        c.push(next);
    }

    let mut trace = DynamicsTrace::new(Method::Volterra, times);
    let amplitudes: Vec<C64> = c
        .iter()
        .zip(&trace.times)
        .map(|(ct, &t)| ct * (-I * set.atom_frequency * t).exp())
        .collect();
    trace.p1 = amplitudes.iter().map(|z| z.norm_sqr()).collect();
    trace.norm = trace.p1.clone();
    trace.c1 = Some(amplitudes);
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{compare_traces, convergence_order, solve_pseudomode};

    #[test]
    fn weights_match_series_across_threshold() {
        let h = 0.1;
        for x in [C64::new(0.0099, 0.0), C64::new(0.0, 0.0101), C64::new(-0.007, 0.007)] {
            let y = x * h;
            let direct = h * (y.exp() - 1.0 - y) / (y * y);
            assert!((e_weight(x, h) - direct).norm() < 1e-9);
        }
    }

    #[test]
    fn empty_kernel_leaves_amplitude_free() {
        let set = PseudomodeSet::empty(2.0);
        let trace = solve_volterra(&set, 3.0, 0.01).unwrap();
        let c = trace.c1.unwrap();
        for (z, t) in c.iter().zip(&trace.times) {
            assert!((z - (-I * 2.0 * t).exp()).norm() < 1e-12);
        }
    }

    #[test]
    fn agrees_with_pseudomodes() {
        let sets = [
            PseudomodeSet::lorentzian(1.0, 1.0, 0.5, 1.0).unwrap(),
            PseudomodeSet::lorentzian(1.3, 0.4, 0.8, 1.0).unwrap(),
            PseudomodeSet::new(
                &[C64::new(1.0, -1.0), C64::new(1.0, -0.25)],
                &[C64::new(0.0, 1.5), C64::new(0.0, -0.5)],
                0.6,
                1.0,
            )
            .unwrap(),
        ];
        for set in &sets {
            let p = solve_pseudomode(set, 10.0, 0.01).unwrap();
            let v = solve_volterra(set, 10.0, 0.01).unwrap();
            let r = compare_traces(&p, &v).unwrap();
            assert!(r.max_dc1.unwrap() < 1e-4, "{r:?}");
        }
    }

    #[test]
    fn second_order_convergence() {
        let set = PseudomodeSet::lorentzian(1.0, 1.0, 0.5, 1.0).unwrap();
        let report = convergence_order(|h| solve_volterra(&set, 5.0, h), 0.04, 3).unwrap();
        assert!(report.min_order() >= 1.9, "{report:?}");
    }
}
