//! Pseudomodes: the lower-half-plane poles of the reservoir structure
//! function, their residues, couplings and the memory kernel
//! `G(τ) = -iΩ² Σ_l r_l exp(-i(z_l - ω_1)τ)`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fano::{PoleResidue, RationalFlat, ReservoirStructure};
use crate::poly::find_repeated;

const I: C64 = C64::new(0.0, 1.0);

/// Roots of `P` and `Q` closer than this (relative) are taken to cancel.
pub const CANCEL_TOL: f64 = 1e-8;
/// Poles closer than this (relative) are reported as repeated.
pub const REPEAT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pseudomode {
    /// `z_l = ω_l - iΓ_l/2`.
    pub pole: C64,
    /// Residue of the normalised structure function at `z_l`.
    pub residue: C64,
    /// `K_l = Ω √(-i r_l)`, principal branch.
    pub coupling: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudomodeSet {
    pub modes: Vec<Pseudomode>,
    /// `Ω`.
    pub strength: f64,
    /// `ω_1`.
    pub atom_frequency: f64,
    /// Real roots of `P` cancelled against roots of `Q`.
    pub cancelled: Vec<C64>,
}

impl PseudomodeSet {
    /// Couplings are derived from the residues.
    pub fn new(poles: &[C64], residues: &[C64], strength: f64, atom_frequency: f64) -> Result<Self> {
        if poles.len() != residues.len() {
            return Err(Error::InvalidInput("one residue per pole is required".into()));
        }
        if let Some(z) = poles.iter().find(|z| !(z.im < 0.0)) {
            return Err(Error::UpperHalfPlanePole { at: *z });
        }
        if !(strength >= 0.0) || !atom_frequency.is_finite() {
            return Err(Error::InvalidInput("strength must be non-negative and ω_1 finite".into()));
        }
        let modes = poles
            .iter()
            .zip(residues)
            .map(|(&pole, &residue)| Pseudomode { pole, residue, coupling: strength * (-I * residue).sqrt() })
            .collect();
        Ok(PseudomodeSet { modes, strength, atom_frequency, cancelled: Vec::new() })
    }

    /// One normalised Lorentzian of width `gamma` centred at `centre`.
    pub fn lorentzian(centre: f64, gamma: f64, strength: f64, atom_frequency: f64) -> Result<Self> {
        Self::new(&[C64::new(centre, -0.5 * gamma)], &[I], strength, atom_frequency)
    }

    /// An atom with no reservoir.
    pub fn empty(atom_frequency: f64) -> Self {
        PseudomodeSet { modes: Vec::new(), strength: 0.0, atom_frequency, cancelled: Vec::new() }
    }

    pub fn poles(&self) -> Vec<C64> {
        self.modes.iter().map(|m| m.pole).collect()
    }

    pub fn residues(&self) -> Vec<C64> {
        self.modes.iter().map(|m| m.residue).collect()
    }

    pub fn couplings(&self) -> Vec<C64> {
        self.modes.iter().map(|m| m.coupling).collect()
    }

    /// `|Σ_l r_l - i|`; zero for an empty set.
    pub fn residue_sum_residual(&self) -> f64 {
        if self.modes.is_empty() {
            return 0.0;
        }
        (self.modes.iter().map(|m| m.residue).sum::<C64>() - I).norm()
    }

    /// `max(|z_l|, Ω, |ω_1|)`, the scale the step guard is applied to.
    pub fn max_frequency(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| m.pole.norm())
            .fold(self.strength.max(self.atom_frequency.abs()), f64::max)
    }

    /// Largest `Γ_l = -2 Im z_l`.
    pub fn max_width(&self) -> f64 {
        self.modes.iter().map(|m| -2.0 * m.pole.im).fold(0.0, f64::max)
    }

    /// Smallest `Γ_l`.
    pub fn min_width(&self) -> f64 {
        self.modes.iter().map(|m| -2.0 * m.pole.im).fold(f64::INFINITY, f64::min)
    }

    /// Normalised `D(ω) = Σ_l [r_l/(ω - z_l) + c.c.]`, integrating to `2π`.
    pub fn normalized_density(&self, omega: f64) -> f64 {
        let x = C64::new(omega, 0.0);
        self.modes
            .iter()
            .map(|m| (m.residue / (x - m.pole) + m.residue.conj() / (x - m.pole.conj())).re)
            .sum()
    }
}

/// Reduced rational model: lower-half-plane poles and the residues of the
/// unnormalised density at each, with the cancelled real roots.
struct RationalPoles {
    poles: Vec<C64>,
    residues: Vec<C64>,
    cancelled: Vec<C64>,
}

fn rational_poles(r: &RationalFlat) -> Result<RationalPoles> {
    if r.q.is_zero() {
        return Err(Error::ZeroStrength);
    }
    if r.q.degree() >= r.p.degree() {
        return Err(Error::DivergentIntegral);
    }
    let scale = r.xi.iter().chain(&r.theta).map(|z| z.norm()).fold(1.0, f64::max);
    let mut theta = r.theta.clone();
    let mut xi = Vec::with_capacity(r.xi.len());
    let mut cancelled = Vec::new();
    for &x in &r.xi {
        let hit = theta
            .iter()
            .enumerate()
            .filter(|(_, t)| (**t - x).norm() <= CANCEL_TOL * scale)
            .min_by(|a, b| (*a.1 - x).norm().total_cmp(&(*b.1 - x).norm()))
            .map(|(j, _)| j);
        match hit {
            Some(j) => {
                theta.swap_remove(j);
                cancelled.push(x);
            }
            None => xi.push(x),
        }
    }
    if let Some(z) = xi.iter().find(|z| z.im.abs() <= CANCEL_TOL * scale) {
        return Err(Error::RealAxisPole { at: *z });
    }
    let poles: Vec<C64> = xi.iter().map(|z| if z.im > 0.0 { z.conj() } else { *z }).collect();
    if let Some(z) = find_repeated(&poles, REPEAT_TOL) {
        return Err(Error::RepeatedPole { at: z });
    }
    // D(ω) = ρ_c |s|² Π(ω-θ)(ω-θ*) / Π(ω-z)(ω-z*) continued off the real axis
    let lead = r.q.leading().norm_sqr() * r.rho_c;
    let all_poles: Vec<C64> = poles.iter().flat_map(|z| [*z, z.conj()]).collect();
    let residues = poles
        .iter()
        .enumerate()
        .map(|(l, &z)| {
            let num: C64 = theta.iter().map(|t| (z - t) * (z - t.conj())).product();
            let den: C64 = all_poles
                .iter()
                .enumerate()
                .filter(|(m, _)| *m != 2 * l)
                .map(|(_, p)| z - p)
                .product();
            num * lead / den
        })
        .collect();
    Ok(RationalPoles { poles, residues, cancelled })
}

/// `Ω² = ∫ D dω` of the unnormalised structure function.
pub fn transition_strength(structure: &ReservoirStructure) -> Result<f64> {
    let omega_sq = match structure {
        ReservoirStructure::RationalFlat(r) => {
            let rp = rational_poles(r)?;
            (-2.0 * PI * I * rp.residues.iter().sum::<C64>()).re
        }
        ReservoirStructure::PoleResidue(p) => p.omega_sq,
        ReservoirStructure::Sampled(s) => s
            .omega
            .windows(2)
            .zip(s.d.windows(2))
            .map(|(w, d)| 0.5 * (w[1] - w[0]) * (d[0] + d[1]))
            .sum(),
    };
    if !omega_sq.is_finite() {
        return Err(Error::DivergentIntegral);
    }
    if !(omega_sq > 0.0) {
        return Err(Error::ZeroStrength);
    }
    Ok(omega_sq)
}

/// One pseudomode per lower-half-plane pole of `D`.
pub fn extract_pseudomodes(structure: &ReservoirStructure, atom_frequency: f64) -> Result<PseudomodeSet> {
    match structure {
        ReservoirStructure::RationalFlat(r) => {
            let rp = rational_poles(r)?;
            let total: C64 = rp.residues.iter().sum();
            let omega_sq = (-2.0 * PI * I * total).re;
            if !(omega_sq > 0.0) {
                return Err(Error::ZeroStrength);
            }
            let residues: Vec<C64> = rp.residues.iter().map(|res| res * (2.0 * PI / omega_sq)).collect();
            let mut set = PseudomodeSet::new(&rp.poles, &residues, omega_sq.sqrt(), atom_frequency)?;
            set.cancelled = rp.cancelled;
            Ok(set)
        }
        ReservoirStructure::PoleResidue(PoleResidue { poles, residues, omega_sq }) => {
            if let Some(z) = find_repeated(poles, REPEAT_TOL) {
                return Err(Error::RepeatedPole { at: z });
            }
            if !(*omega_sq > 0.0) {
                return Err(Error::ZeroStrength);
            }
            PseudomodeSet::new(poles, residues, omega_sq.sqrt(), atom_frequency)
        }
        ReservoirStructure::Sampled(_) => Err(Error::NoRationalModel),
    }
}

/// `G(τ)` for `τ ≥ 0`.
pub fn kernel(set: &PseudomodeSet, tau: f64) -> Result<C64> {
    if tau < 0.0 {
        return Err(Error::NegativeTime(tau));
    }
    let omega_sq = set.strength * set.strength;
    let sum: C64 = set
        .modes
        .iter()
        .map(|m| m.residue * (-I * (m.pole - set.atom_frequency) * tau).exp())
        .sum();
    Ok(-I * omega_sq * sum)
}
