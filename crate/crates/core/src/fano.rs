//! Fano diagonalisation of the quasi-mode field.
//!
//! Evaluates the shift matrix, `ρ_c z(ω)`, the expansion coefficients
//! `α_i(ω)` and `β(ω, Δ)`, the atom/true-mode coupling `g^k(ω)`, and the
//! reservoir structure function `D^k(ω) = ρ(ω)|g^k(ω)|²`.
//!
//! With `A = ωE - Ω(ω)` and `Ω_ij = ω_i δ_ij + (1-δ_ij) v_ji + F_ij`:
//!
//! * `P(ω) = det A - iπρ_c Wᵀ adj(A) W*`
//! * `Q^k(ω) = λ_kᵀ adj(A) W*`
//! * `α = -i √(ρ_c/ρ) adj(A) W* / P`

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{det_adjugate, max_abs, CMatrix};
use crate::model::{prediagonalize_discrete, QuasiModeSystem};
use crate::poly::Poly;
use crate::profile::DensityProfile;
use crate::quadrature::{principal_value, PvOutcome};

/// Convergence threshold for principal-value integrals.
pub const PV_TOL: f64 = 1e-8;
/// Largest accepted residual of the normalisation condition.
pub const NORMALIZATION_TOL: f64 = 1e-8;

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftMatrix {
    pub omega: f64,
    pub f: CMatrix,
}

impl ShiftMatrix {
    pub fn hermiticity_residual(&self) -> f64 {
        max_abs(&(&self.f - self.f.adjoint()))
    }
}

/// `F_ij(ω) = P∫ dΔ ρ_c(Δ) W_i*(Δ) W_j(Δ) / (ω - Δ)`.
///
/// Integrals whose integrand is constant over the whole line vanish by
/// convention, so flat systems give `F = 0`.
pub fn shift_matrix(system: &QuasiModeSystem, omega: f64) -> Result<ShiftMatrix> {
    let n = system.n();
    let mut f = CMatrix::zeros(n, n);
    if system.is_flat() {
        return Ok(ShiftMatrix { omega, f });
    }
    let rho = system.rho_c();
    let w = system.w();
    let breaks = system.breakpoints();
    for i in 0..n {
        for j in 0..n {
            let supports: Vec<(f64, f64)> =
                [w[i].support(), w[j].support(), rho.support()].into_iter().flatten().collect();
            if supports.is_empty() {
                continue;
            }
            let lo = supports.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
            let hi = supports.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
            if lo >= hi {
                continue;
            }
            let integrand = |d: f64| w[i].at(d).conj() * w[j].at(d) * rho.at(d);
            f[(i, j)] = match principal_value(integrand, lo, hi, omega, &breaks, PV_TOL) {
                PvOutcome::Converged(v) => v,
                PvOutcome::NotConverged { change, .. } => {
                    return Err(Error::QuadratureFailure { omega, change })
                }
            };
        }
    }
    Ok(ShiftMatrix { omega, f })
}

/// Everything the closed-form expressions need at one frequency.
#[derive(Debug, Clone)]
struct Evaluation {
    a: CMatrix,
    det: C64,
    adj: CMatrix,
    w: Vec<C64>,
    rho_c: f64,
    /// `Wᵀ adj(A) W*`
    jp: C64,
}

impl Evaluation {
    fn new(system: &QuasiModeSystem, omega: f64) -> Result<Self> {
        let n = system.n();
        let f = shift_matrix(system, omega)?.f;
        let mut a = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let omega_ij = if i == j {
                    C64::new(system.omegas()[i], 0.0)
                } else {
                    system.v()[(j, i)]
                } + f[(i, j)];
                a[(i, j)] = if i == j { C64::new(omega, 0.0) } else { ZERO } - omega_ij;
            }
        }
        let (det, adj) = det_adjugate(&a);
        let w = system.w_at(omega);
        let w_conj: Vec<C64> = w.iter().map(|x| x.conj()).collect();
        let jp = bilinear(&w, &adj, &w_conj);
        Ok(Evaluation { a, det, adj, w, rho_c: system.rho_c().at(omega), jp })
    }

    fn p(&self) -> C64 {
        self.det - I * PI * self.rho_c * self.jp
    }

    fn p_scale(&self) -> f64 {
        self.det.norm() + PI * self.rho_c.abs() * max_abs(&self.adj) * self.w_norm_sqr()
    }

    fn w_norm_sqr(&self) -> f64 {
        self.w.iter().map(|x| x.norm_sqr()).sum()
    }

    /// `adj(A) W*`
    fn adj_w(&self) -> Vec<C64> {
        let n = self.w.len();
        (0..n).map(|i| (0..n).map(|j| self.adj[(i, j)] * self.w[j].conj()).sum()).collect()
    }
}

/// `xᵀ M y`
fn bilinear(x: &[C64], m: &CMatrix, y: &[C64]) -> C64 {
    let n = x.len();
    (0..n).map(|i| x[i] * (0..n).map(|j| m[(i, j)] * y[j]).sum::<C64>()).sum()
}

/// `ρ_c(ω) z(ω) = {Wᵀ (ωE - Ω)⁻¹ W*}⁻¹`, computed as `det A / (Wᵀ adj(A) W*)`.
///
/// Fails with `SingularMatrix` where the denominator vanishes (`z` infinite).
pub fn z_function(system: &QuasiModeSystem, omega: f64) -> Result<C64> {
    let ev = Evaluation::new(system, omega)?;
    if ev.w.iter().all(|w| *w == ZERO) {
        return Err(Error::ZeroCouplingRow { omega });
    }
    let scale = max_abs(&ev.adj) * ev.w_norm_sqr();
    if ev.jp.norm() <= 1e-14 * scale || ev.jp == ZERO {
        return Err(Error::SingularMatrix { omega });
    }
    Ok(ev.det / ev.jp)
}

/// Expansion coefficients of the true-mode operator `Â(ω)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FanoSolution {
    pub omega: f64,
    /// True-mode density at `omega`.
    pub rho: f64,
    pub rho_c: f64,
    /// `ρ_c z`; infinite where `Wᵀ adj(A) W*` vanishes.
    pub rho_c_z: C64,
    pub alpha: Vec<C64>,
    /// Coefficient of `δ(ω - Δ)` in `β(ω, Δ)`.
    pub beta_delta_coeff: C64,
    /// `Σ_j W_j(ω) α_j`: the coefficient of `P/(ω - Δ)` in `β` when the couplings are flat.
    pub beta_pv_coeff: C64,
    w: Vec<C64>,
    a: CMatrix,
    det: C64,
    jp: C64,
}

impl FanoSolution {
    /// Principal-value part of `β(ω, Δ)` without the `1/(ω - Δ)` factor: `Σ_j W_j(Δ) α_j(ω)`.
    pub fn beta_pv_part(&self, w_delta: &[C64]) -> C64 {
        w_delta.iter().zip(&self.alpha).map(|(w, a)| w * a).sum()
    }

    /// `Σ |W_i α_i|`, the size of the terms that cancel in `Σ W_i α_i`.
    fn pv_magnitude(&self) -> f64 {
        self.w.iter().zip(&self.alpha).map(|(w, a)| (w * a).norm()).sum()
    }

    /// `‖m α‖ / ‖α‖`, with `m_ij = -A_ij + ρ_c z W_i* W_j`.
    ///
    /// Where `ρ_c z` is not usable the equation is multiplied through by
    /// `Wᵀ adj(A) W*` first.
    pub fn defining_residual(&self) -> f64 {
        let n = self.alpha.len();
        let alpha_norm = self.alpha.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if alpha_norm == 0.0 {
            return 0.0;
        }
        let s: C64 = self.beta_pv_part(&self.w);
        let a_alpha: Vec<C64> =
            (0..n).map(|i| (0..n).map(|j| self.a[(i, j)] * self.alpha[j]).sum()).collect();
        let w_norm = self.w.iter().map(|x| x.norm_sqr()).sum::<f64>();
        let a_norm = max_abs(&self.a).max(f64::MIN_POSITIVE);
        if self.rho_c_z.is_finite() && self.jp.norm() > 1e-6 * (self.det.norm() / a_norm + w_norm) {
            let r: f64 = (0..n)
                .map(|i| (-a_alpha[i] + self.w[i].conj() * (self.rho_c_z * s)).norm_sqr())
                .sum::<f64>()
                .sqrt();
            r / alpha_norm
        } else {
            let r: f64 = (0..n)
                .map(|i| (-self.jp * a_alpha[i] + self.w[i].conj() * (self.det * s)).norm_sqr())
                .sum::<f64>()
                .sqrt();
            r / (alpha_norm * (self.jp.norm() * a_norm + self.det.norm() * w_norm).max(f64::MIN_POSITIVE))
        }
    }

    /// Error of `|Σ W_i α_i|² ρ ρ_c (π² + |z|²) = 1`, relative to the larger side
    /// or to the uncancelled size of the sum.
    pub fn normalization_residual(&self) -> f64 {
        let s = self.beta_pv_part(&self.w);
        let rc_jp = self.rho_c * self.jp;
        // both sides multiplied by |ρ_c Wᵀ adj W*|²
        let factor = self.rho * self.rho_c * (PI * PI * rc_jp.norm_sqr() + self.det.norm_sqr());
        let lhs = s.norm_sqr() * factor;
        let rhs = rc_jp.norm_sqr();
        let scale = rhs.max(lhs).max(self.pv_magnitude().powi(2) * factor);
        if scale == 0.0 {
            0.0
        } else {
            (lhs - rhs).abs() / scale
        }
    }

    /// Error of the phase convention `Σ W_i α_i = 1/(√(ρρ_c)(π + iz))`, scaled
    /// as for the normalisation.
    pub fn phase_residual(&self) -> f64 {
        let s = self.beta_pv_part(&self.w);
        let rc_jp = self.rho_c * self.jp;
        let factor = (self.rho * self.rho_c).sqrt() * (PI * rc_jp + I * self.det);
        let lhs = s * factor;
        let scale = rc_jp.norm().max(lhs.norm()).max(self.pv_magnitude() * factor.norm());
        if scale == 0.0 {
            0.0
        } else {
            (lhs - rc_jp).norm() / scale
        }
    }
}

fn check_density(value: f64, omega: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::NonpositiveDensity { at: omega })
    }
}

/// `α_i(ω)` and the two parts of `β(ω, Δ)`; `rho_true` is the true-mode density.
pub fn alpha_coefficients(
    system: &QuasiModeSystem,
    omega: f64,
    rho_true: &DensityProfile,
) -> Result<FanoSolution> {
    let rho = rho_true.at(omega);
    check_density(rho, omega)?;
    let ev = Evaluation::new(system, omega)?;
    check_density(ev.rho_c, omega)?;
    if ev.w.iter().all(|w| *w == ZERO) {
        return Err(Error::ZeroCouplingRow { omega });
    }
    let p = ev.p();
    if p.norm() <= 1e-14 * ev.p_scale() || p == ZERO {
        return Err(Error::SingularMatrix { omega });
    }
    let pref = -I * (ev.rho_c / rho).sqrt() / p;
    let alpha: Vec<C64> = ev.adj_w().into_iter().map(|x| x * pref).collect();
    let rho_c_z = if ev.jp == ZERO { C64::new(f64::INFINITY, 0.0) } else { ev.det / ev.jp };
    let sol = FanoSolution {
        omega,
        rho,
        rho_c: ev.rho_c,
        rho_c_z,
        beta_delta_coeff: -I * ev.det / ((rho * ev.rho_c).sqrt() * p),
        beta_pv_coeff: pref * ev.jp,
        alpha,
        w: ev.w,
        a: ev.a,
        det: ev.det,
        jp: ev.jp,
    };
    let residual = sol.phase_residual();
    if residual > NORMALIZATION_TOL {
        return Err(Error::NormalizationFailure { omega, residual });
    }
    Ok(sol)
}

/// `g^k(ω) = Σ_i λ_ki α_i(ω)`.
pub fn coupling_constant(
    system: &QuasiModeSystem,
    k: usize,
    omega: f64,
    rho_true: &DensityProfile,
) -> Result<C64> {
    let lambda = system.lambda(k)?;
    let sol = alpha_coefficients(system, omega, rho_true)?;
    Ok(lambda.iter().zip(&sol.alpha).map(|(l, a)| l * a).sum())
}

/// `D^k` tabulated on a frequency grid, with the coupling it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledStructure {
    pub omega: Vec<f64>,
    pub d: Vec<f64>,
    pub g: Vec<C64>,
}

/// Flat-case rational form `D = ρ_c |Q(ω)|² / |P(ω)|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFlat {
    /// Monic, degree `n`.
    pub p: Poly,
    /// Degree `n - 1` when the strength is non-zero.
    pub q: Poly,
    /// `S_k = Σ_i λ_ki W_i*`, the leading coefficient of `q`.
    pub strength: C64,
    pub rho_c: f64,
    /// Roots of `p`.
    pub xi: Vec<C64>,
    /// Roots of `q`.
    pub theta: Vec<C64>,
}

impl RationalFlat {
    pub fn density(&self, omega: f64) -> f64 {
        let x = C64::new(omega, 0.0);
        self.rho_c * self.q.eval(x).norm_sqr() / self.p.eval(x).norm_sqr()
    }

    /// `g(ω) = -i √(ρ_c/ρ) Q(ω) / P(ω)`.
    pub fn coupling(&self, omega: f64, rho: f64) -> C64 {
        let x = C64::new(omega, 0.0);
        -I * (self.rho_c / rho).sqrt() * self.q.eval(x) / self.p.eval(x)
    }

    /// `Q` has lost its top coefficient.
    pub fn is_degenerate(&self) -> bool {
        self.strength == ZERO
    }
}

/// Lower-half-plane poles with residues of the normalised structure function.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleResidue {
    pub poles: Vec<C64>,
    pub residues: Vec<C64>,
    /// `Ω²`; the unnormalised density is `Ω²/(2π)` times the normalised one.
    pub omega_sq: f64,
}

impl PoleResidue {
    pub fn new(poles: Vec<C64>, residues: Vec<C64>, omega_sq: f64) -> Result<Self> {
        if poles.len() != residues.len() {
            return Err(Error::InvalidInput("one residue per pole is required".into()));
        }
        if let Some(z) = poles.iter().find(|z| !(z.im < 0.0)) {
            return Err(Error::UpperHalfPlanePole { at: *z });
        }
        if !(omega_sq > 0.0) {
            return Err(Error::ZeroStrength);
        }
        Ok(PoleResidue { poles, residues, omega_sq })
    }

    /// `Γ/((ω - ω_c)² + Γ²/4)`, which already integrates to `2π`.
    pub fn lorentzian(centre: f64, width: f64, omega_sq: f64) -> Result<Self> {
        Self::lorentzians(&[(centre, width, 1.0)], omega_sq)
    }

    /// `Σ_l w_l Γ_l/((ω - ω_l)² + Γ_l²/4)`; weights should sum to one.
    pub fn lorentzians(terms: &[(f64, f64, f64)], omega_sq: f64) -> Result<Self> {
        if terms.iter().any(|t| !(t.1 > 0.0)) {
            return Err(Error::InvalidInput("Lorentzian widths must be positive".into()));
        }
        let poles = terms.iter().map(|&(c, g, _)| C64::new(c, -0.5 * g)).collect();
        let residues = terms.iter().map(|&(_, _, w)| C64::new(0.0, w)).collect();
        Self::new(poles, residues, omega_sq)
    }

    /// `D(ω) = Σ_l [r_l/(ω - z_l) + r_l*/(ω - z_l*)]`, integrating to `2π Σ Im r_l`.
    pub fn normalized_density(&self, omega: f64) -> f64 {
        let x = C64::new(omega, 0.0);
        self.poles
            .iter()
            .zip(&self.residues)
            .map(|(z, r)| (r / (x - z) + r.conj() / (x - z.conj())).re)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReservoirStructure {
    RationalFlat(RationalFlat),
    Sampled(SampledStructure),
    PoleResidue(PoleResidue),
}

impl ReservoirStructure {
    /// Unnormalised `D(ω) = ρ|g|²`; sampled data are interpolated linearly and vanish off-grid.
    pub fn density(&self, omega: f64) -> f64 {
        match self {
            ReservoirStructure::RationalFlat(r) => r.density(omega),
            ReservoirStructure::PoleResidue(p) => p.omega_sq / (2.0 * PI) * p.normalized_density(omega),
            ReservoirStructure::Sampled(s) => {
                let n = s.omega.len();
                if n == 0 || omega < s.omega[0] || omega > s.omega[n - 1] {
                    return 0.0;
                }
                let idx = s.omega.partition_point(|&x| x <= omega);
                if idx == n {
                    return s.d[n - 1];
                }
                let t = (omega - s.omega[idx - 1]) / (s.omega[idx] - s.omega[idx - 1]);
                s.d[idx - 1] * (1.0 - t) + s.d[idx] * t
            }
        }
    }
}

/// General-engine `D^k` on a grid, with `g^k` alongside.
///
/// Where `P` vanishes on the real axis (a pole cancelled by `Q`, as for
/// degenerate modes at their common frequency) `D` and `g` are taken as the
/// mean of the two neighbouring values at `ω ± δ`.
pub fn structure_function(
    system: &QuasiModeSystem,
    k: usize,
    grid: &[f64],
    rho_true: &DensityProfile,
) -> Result<ReservoirStructure> {
    system.lambda(k)?;
    let mut d = Vec::with_capacity(grid.len());
    let mut g = Vec::with_capacity(grid.len());
    for &omega in grid {
        let gk = match coupling_constant(system, k, omega, rho_true) {
            Err(Error::SingularMatrix { .. }) => {
                let delta = 1e-7 * (1.0 + omega.abs());
                let lo = coupling_constant(system, k, omega - delta, rho_true)?;
                let hi = coupling_constant(system, k, omega + delta, rho_true)?;
                let dl = rho_true.at(omega - delta) * lo.norm_sqr();
                let dh = rho_true.at(omega + delta) * hi.norm_sqr();
                d.push(0.5 * (dl + dh));
                g.push(0.5 * (lo + hi));
                continue;
            }
            other => other?,
        };
        d.push(rho_true.at(omega) * gk.norm_sqr());
        g.push(gk);
    }
    Ok(ReservoirStructure::Sampled(SampledStructure { omega: grid.to_vec(), d, g }))
}

/// `points` frequencies over `[min ω_i - 10Γ_max, max ω_i + 10Γ_max]`.
pub fn default_omega_grid(system: &QuasiModeSystem, points: usize) -> Vec<f64> {
    let gamma = mode_widths(system).into_iter().fold(0.0, f64::max);
    let gamma = if gamma > 0.0 { gamma } else { 1.0 };
    let lo = system.omegas().iter().copied().fold(f64::INFINITY, f64::min) - 10.0 * gamma;
    let hi = system.omegas().iter().copied().fold(f64::NEG_INFINITY, f64::max) + 10.0 * gamma;
    linspace(lo, hi, points)
}

/// `Γ_i = 2πρ_c|W_i|²` evaluated at each mode frequency.
pub fn mode_widths(system: &QuasiModeSystem) -> Vec<f64> {
    system
        .omegas()
        .iter()
        .enumerate()
        .map(|(i, &w)| 2.0 * PI * system.rho_c().at(w) * system.w()[i].at(w).norm_sqr())
        .collect()
}

pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| if i + 1 == points { hi } else { lo + (hi - lo) * i as f64 / (points - 1) as f64 })
            .collect(),
    }
}

/// Flat-case polynomials `P_n` and `Q^k_{n-1}`.
///
/// Systems with `v ≠ 0` are rotated to the eigenbasis of their discrete block
/// first; `P` and `Q` are invariant under that rotation.
pub fn characteristic_polynomials(system: &QuasiModeSystem, k: usize) -> Result<RationalFlat> {
    if !system.is_flat() {
        return Err(Error::NotFlat);
    }
    system.lambda(k)?;
    let rotated;
    let sys = if system.hermiticity_residual() == 0.0 && (0..system.n()).all(|i| {
        (0..system.n()).all(|j| system.v_offdiag(i, j) == ZERO)
    }) {
        system
    } else {
        rotated = prediagonalize_discrete(system)?;
        &rotated
    };
    let n = sys.n();
    let rho_c = sys.rho_c().at(0.0);
    let w = sys.w_at(0.0);
    let lambda = sys.lambda(k)?;
    let omegas = sys.omegas();
    let roots = |skip: Option<usize>| -> Vec<C64> {
        (0..n).filter(|&j| Some(j) != skip).map(|j| C64::new(omegas[j], 0.0)).collect()
    };
    let mut p = Poly::from_roots(&roots(None));
    let mut q = Poly::zero();
    for i in 0..n {
        let cofactor = Poly::from_roots(&roots(Some(i)));
        p = &p + &cofactor.scale(-I * PI * rho_c * w[i].norm_sqr());
        q = &q + &cofactor.scale(lambda[i] * w[i].conj());
    }
    // drop the exactly-zero top coefficient of q so its length is n
    q.coeffs.truncate(n.max(1));
    let strength: C64 = (0..n).map(|i| lambda[i] * w[i].conj()).sum();
    let xi = p.roots()?;
    let theta = if q.is_zero() { Vec::new() } else { q.roots()? };
    Ok(RationalFlat { p, q, strength, rho_c, xi, theta })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwoModeRegime {
    DegenerateFrequencies,
    LargeSeparation,
    SmallSeparation,
    General,
}

/// Named quantities of the two-mode, two-level case.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeAnalysis {
    pub omegas: [f64; 2],
    pub w: [C64; 2],
    pub lambda: [C64; 2],
    pub rho_c: f64,
    pub strength: C64,
    /// Zero of `Q`; `None` when the strength vanishes.
    pub omega_0: Option<C64>,
    pub xi: [C64; 2],
    pub regime: TwoModeRegime,
    pub omega_c: Option<f64>,
    pub delta_omega_c: Option<C64>,
    pub delta_omega_r: Option<f64>,
    pub delta_f_gamma: Option<f64>,
    pub gammas: [f64; 2],
}

/// Classify a flat two-mode system with `v = 0`.
///
/// A separation equal to `Γ` counts as `SmallSeparation` with `Δf_Γ = 1`;
/// both pole formulas coincide there.
pub fn two_mode_analysis(system: &QuasiModeSystem, k: usize) -> Result<TwoModeAnalysis> {
    if system.n() != 2 {
        return Err(Error::WrongArity { expected: 2, found: system.n() });
    }
    if !system.is_flat() {
        return Err(Error::NotFlat);
    }
    if system.v_offdiag(0, 1) != ZERO || system.v_offdiag(1, 0) != ZERO {
        return Err(Error::WrongRegime("two-mode analysis requires v = 0".into()));
    }
    let lam = system.lambda(k)?;
    let (w1, w2) = (system.w()[0].at(0.0), system.w()[1].at(0.0));
    let (o1, o2) = (system.omegas()[0], system.omegas()[1]);
    let (l1, l2) = (lam[0], lam[1]);
    let rho_c = system.rho_c().at(0.0);
    let a1 = l1 * w1.conj();
    let a2 = l2 * w2.conj();
    let strength = a1 + a2;
    let omega_0 = (strength != ZERO).then(|| (a2 * o1 + a1 * o2) / strength);

    let (s1, s2) = (w1.norm_sqr(), w2.norm_sqr());
    let centre = 0.5 * (C64::new(o1 + o2, 0.0) + I * PI * rho_c * (s1 + s2));
    let inner = C64::new(o1 - o2, PI * rho_c * (s1 - s2));
    let root = (inner * inner - 4.0 * PI * PI * rho_c * rho_c * s1 * s2).sqrt();
    let xi = [centre + 0.5 * root, centre - 0.5 * root];
    let gammas = [2.0 * PI * rho_c * s1, 2.0 * PI * rho_c * s2];

    let scale = o1.abs().max(o2.abs()).max(1.0);
    let equal_freq = (o1 - o2).abs() <= 1e-14 * scale;
    let equal_w = (w1 - w2).norm() <= 1e-14 * w1.norm().max(w2.norm()).max(f64::MIN_POSITIVE);
    let sep = (o2 - o1).abs();
    let gamma = gammas[0];

    let mut out = TwoModeAnalysis {
        omegas: [o1, o2],
        w: [w1, w2],
        lambda: [l1, l2],
        rho_c,
        strength,
        omega_0,
        xi,
        regime: TwoModeRegime::General,
        omega_c: None,
        delta_omega_c: None,
        delta_omega_r: None,
        delta_f_gamma: None,
        gammas,
    };
    if equal_freq {
        out.regime = TwoModeRegime::DegenerateFrequencies;
        out.omega_c = Some(o1);
        if equal_w {
            out.delta_f_gamma = Some(0.0);
            out.delta_omega_c = Some(ZERO);
        }
    } else if equal_w {
        out.omega_c = Some(0.5 * (o1 + o2));
        out.delta_omega_c = (l1 + l2 != ZERO).then(|| (l1 - l2) / (2.0 * (l1 + l2)) * (o2 - o1));
        if sep > gamma {
            out.regime = TwoModeRegime::LargeSeparation;
            out.delta_omega_r = Some(0.5 * sep - 0.5 * (sep * sep - gamma * gamma).sqrt());
        } else {
            out.regime = TwoModeRegime::SmallSeparation;
            out.delta_f_gamma = Some(1.0 - (gamma * gamma - sep * sep).max(0.0).sqrt() / gamma);
        }
    }
    Ok(out)
}

impl TwoModeAnalysis {
    /// The structure function from the closed form of the detected regime.
    pub fn closed_form_d(&self, omega: f64) -> Option<f64> {
        match self.regime {
            TwoModeRegime::DegenerateFrequencies => Some(closed_form::degenerate_two_mode(
                omega,
                self.omega_c?,
                self.rho_c,
                self.strength,
                self.gammas,
            )),
            TwoModeRegime::LargeSeparation => {
                let (lo, hi) = (self.omegas[0].min(self.omegas[1]), self.omegas[0].max(self.omegas[1]));
                Some(closed_form::large_separation(
                    omega,
                    [lo, hi],
                    self.lambda[0] + self.lambda[1],
                    self.gammas[0],
                    self.omega_0?,
                    self.delta_omega_r?,
                ))
            }
            TwoModeRegime::SmallSeparation => Some(closed_form::small_separation(
                omega,
                self.omega_c?,
                self.lambda[0] + self.lambda[1],
                self.gammas[0],
                self.omega_0?,
                self.delta_f_gamma?,
            )),
            TwoModeRegime::General => None,
        }
    }

    fn require_small_equal_w(&self) -> Result<(f64, f64)> {
        match (self.regime, self.delta_f_gamma) {
            (TwoModeRegime::SmallSeparation, Some(df)) => Ok((df, self.gammas[0])),
            _ => Err(Error::WrongRegime(format!(
                "needs small separation with equal continuum couplings, found {:?}",
                self.regime
            ))),
        }
    }
}

/// Fano-profile parameters `(q, κ, γ)`.
pub fn fano_profile_map(analysis: &TwoModeAnalysis) -> Result<(f64, f64, f64)> {
    let (df, gamma) = analysis.require_small_equal_w()?;
    let shift = analysis
        .delta_omega_c
        .ok_or_else(|| Error::WrongRegime("λ_1 + λ_2 = 0 leaves Δω_C undefined".into()))?;
    let scale = analysis.omegas[0].abs().max(analysis.omegas[1].abs()).max(1.0);
    if shift.im.abs() > 1e-12 * scale {
        return Err(Error::WrongRegime("Δω_C is complex; the profile needs a real q".into()));
    }
    Ok((-shift.re, 2.0 * gamma * (1.0 - 0.5 * df), gamma * df))
}

/// Difference-of-Lorentzians parameters `(Γ_1, Γ_2, w_1, w_2)`.
pub fn lorentzian_difference_map(analysis: &TwoModeAnalysis) -> Result<(f64, f64, f64, f64)> {
    let (df, gamma) = analysis.require_small_equal_w()?;
    let [l1, l2] = analysis.lambda;
    if (l1 - l2).norm() > 1e-14 * l1.norm().max(l2.norm()) {
        return Err(Error::WrongRegime("needs λ_1 = λ_2".into()));
    }
    if 1.0 - df == 0.0 {
        return Err(Error::DivisionByZero("weights diverge at Δf_Γ = 1".into()));
    }
    let g1 = 2.0 * gamma * (1.0 - 0.5 * df);
    let g2 = gamma * df;
    let w1 = (1.0 - 0.5 * df) / (1.0 - df);
    let w2 = 0.5 * df / (1.0 - df);
    Ok((g1, g2, w1, w2))
}

/// Closed-form structure functions of the special cases.
pub mod closed_form {
    use super::*;

    /// One mode with shift `Δω_1`, width `Γ` and atom coupling `λ`.
    pub fn single_mode(omega: f64, omega_1: f64, shift: f64, gamma: f64, lambda: C64) -> f64 {
        let x = omega - omega_1 - shift;
        lambda.norm_sqr() * gamma / (2.0 * PI) / (x * x + 0.25 * gamma * gamma)
    }

    /// Two modes at the common frequency `ω_C`.
    pub fn degenerate_two_mode(omega: f64, omega_c: f64, rho_c: f64, strength: C64, gammas: [f64; 2]) -> f64 {
        let x = omega - omega_c;
        let h = 0.5 * (gammas[0] + gammas[1]);
        rho_c * strength.norm_sqr() / (x * x + h * h)
    }

    /// Equal couplings, separation above `Γ`; `omegas` ascending.
    pub fn large_separation(
        omega: f64,
        omegas: [f64; 2],
        lambda_sum: C64,
        gamma: f64,
        omega_0: C64,
        delta_omega_r: f64,
    ) -> f64 {
        let g2 = 0.25 * gamma * gamma;
        let a = omega - omegas[1] + delta_omega_r;
        let b = omega - omegas[0] - delta_omega_r;
        lambda_sum.norm_sqr() * gamma / (2.0 * PI) * (C64::new(omega, 0.0) - omega_0).norm_sqr()
            / ((a * a + g2) * (b * b + g2))
    }

    /// Equal couplings, separation below `Γ`.
    pub fn small_separation(
        omega: f64,
        omega_c: f64,
        lambda_sum: C64,
        gamma: f64,
        omega_0: C64,
        delta_f: f64,
    ) -> f64 {
        let x = omega - omega_c;
        let wide = gamma * (1.0 - 0.5 * delta_f);
        let narrow = gamma * 0.5 * delta_f;
        lambda_sum.norm_sqr() * gamma / (2.0 * PI) * (C64::new(omega, 0.0) - omega_0).norm_sqr()
            / ((x * x + wide * wide) * (x * x + narrow * narrow))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Profile;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn one() -> DensityProfile {
        Profile::Constant(1.0)
    }

    fn single(omega_1: f64, w: C64, rho_c: f64, lambda: C64) -> QuasiModeSystem {
        QuasiModeSystem::flat(vec![omega_1], CMatrix::zeros(1, 1), vec![w], rho_c, vec![vec![lambda]]).unwrap()
    }

    fn random_flat(rng: &mut ChaCha8Rng, n: usize, with_v: bool) -> QuasiModeSystem {
        let omegas: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..3.0)).collect();
        let mut v = CMatrix::zeros(n, n);
        if with_v {
            for i in 0..n {
                for j in i + 1..n {
                    let z = c(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
                    v[(i, j)] = z;
                    v[(j, i)] = z.conj();
                }
            }
        }
        let w = (0..n).map(|_| c(rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6))).collect();
        let lam = vec![(0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()];
        QuasiModeSystem::flat(omegas, v, w, rng.random_range(0.5..2.0), lam).unwrap()
    }

    #[test]
    fn flat_shift_matrix_vanishes() {
        let s = single(1.0, c(0.3, 0.1), 1.0, c(1.0, 0.0));
        assert_eq!(max_abs(&shift_matrix(&s, 0.7).unwrap().f), 0.0);
    }

    fn gaussian_system(centre: f64) -> QuasiModeSystem {
        let grid = linspace(-12.0, 12.0, 4801);
        let w = Profile::sample(grid, |d| c((-(d - centre) * (d - centre) / 2.0).exp(), 0.0)).unwrap();
        QuasiModeSystem::new(vec![1.0], CMatrix::zeros(1, 1), vec![w], Profile::Constant(1.0), vec![vec![c(1.0, 0.0)]])
            .unwrap()
    }

    #[test]
    fn symmetric_gaussian_shift_vanishes() {
        let f = shift_matrix(&gaussian_system(0.0), 0.0).unwrap().f[(0, 0)];
        assert!(f.norm() < 1e-9, "{f}");
    }

    /// Subtraction-method PV on a dense uniform grid with composite Simpson.
    fn dense_pv(f: impl Fn(f64) -> f64, a: f64, b: f64, omega: f64, n: usize) -> f64 {
        let f0 = f(omega);
        let g = |x: f64| {
            if (x - omega).abs() < 1e-12 {
                // derivative limit by central difference
                -(f(x + 1e-6) - f(x - 1e-6)) / 2e-6
            } else {
                (f(x) - f0) / (omega - x)
            }
        };
        let h = (b - a) / n as f64;
        let mut s = g(a) + g(b);
        for i in 1..n {
            s += g(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0 + f0 * ((omega - a) / (b - omega)).ln()
    }

    #[test]
    fn shifted_gaussian_matches_dense_quadrature() {
        let system = gaussian_system(1.0);
        let f = shift_matrix(&system, 0.0).unwrap().f[(0, 0)];
        let w = &system.w()[0];
        let reference = dense_pv(|d| w.at(d).norm_sqr(), -12.0, 12.0, 0.0, 480_000 + 1);
        assert!((f.re - reference).abs() < 1e-6, "{} vs {}", f.re, reference);
        assert!(f.im.abs() < 1e-12);
        // continuum value: P∫ e^{-(Δ-1)²}/(0-Δ) dΔ = -2√π F(1), Dawson F(1) = 0.5380795069127684
        let dawson = -2.0 * PI.sqrt() * 0.538_079_506_912_768_4;
        assert!((f.re - dawson).abs() < 1e-4, "{} vs {}", f.re, dawson);
    }

    #[test]
    fn tabulated_shift_matrix_is_hermitian() {
        let grid = linspace(-6.0, 8.0, 701);
        let w1 = Profile::sample(grid.clone(), |d| c((-(d - 1.0) * (d - 1.0) / 2.0).exp(), 0.2)).unwrap();
        let w2 = Profile::sample(grid, |d| c(0.5, (-(d - 2.0).powi(2)).exp())).unwrap();
        let s = QuasiModeSystem::new(
            vec![1.0, 2.0],
            CMatrix::zeros(2, 2),
            vec![w1, w2],
            Profile::Constant(0.8),
            vec![vec![c(1.0, 0.0), c(0.5, 0.0)]],
        )
        .unwrap();
        for omega in [0.3, 1.25, 2.7] {
            let f = shift_matrix(&s, omega).unwrap();
            assert!(f.hermiticity_residual() < 1e-8, "{}", f.hermiticity_residual());
        }
    }

    #[test]
    fn z_single_mode_and_resonance() {
        let s = single(1.0, c((1.0 / (2.0 * PI)).sqrt(), 0.0), 1.0, c(1.0, 0.0));
        assert!((z_function(&s, 2.0).unwrap() - c(2.0 * PI, 0.0)).norm() < 1e-12);
        assert!(z_function(&s, 1.0).unwrap().norm() < 1e-15);
    }

    #[test]
    fn z_two_modes() {
        let s = QuasiModeSystem::flat(vec![1.0, 2.0], CMatrix::zeros(2, 2), vec![c(1.0, 0.0); 2], 1.0, vec![])
            .unwrap();
        assert!((z_function(&s, 0.0).unwrap() - c(-2.0 / 3.0, 0.0)).norm() < 1e-14);
        // J = 0 halfway between the modes
        assert!(matches!(z_function(&s, 1.5), Err(Error::SingularMatrix { .. })));
        let zero = QuasiModeSystem::flat(vec![1.0], CMatrix::zeros(1, 1), vec![c(0.0, 0.0)], 1.0, vec![]).unwrap();
        assert!(matches!(z_function(&zero, 0.5), Err(Error::ZeroCouplingRow { .. })));
    }

    #[test]
    fn alpha_single_mode_at_resonance() {
        let s = single(1.0, c(1.0, 0.0), 1.0, c(1.0, 0.0));
        let sol = alpha_coefficients(&s, 1.0, &one()).unwrap();
        assert!((sol.alpha[0] - c(1.0 / PI, 0.0)).norm() < 1e-15);
        assert!((sol.beta_pv_coeff.norm_sqr() - 1.0 / (PI * PI)).abs() < 1e-15);
        assert!(sol.normalization_residual() < 1e-14);
        assert!(sol.rho_c_z.norm() < 1e-15);
    }

    #[test]
    fn alpha_single_mode_formula() {
        let (w, rho_c, rho) = (c(0.4, -0.3), 1.7, 0.6);
        let s = single(1.2, w, rho_c, c(1.0, 0.0));
        for omega in [0.1, 1.0, 1.3, 4.0] {
            let sol = alpha_coefficients(&s, omega, &Profile::Constant(rho)).unwrap();
            let expect = -I * (rho_c / rho).sqrt() * w.conj() / (omega - 1.2 - I * PI * rho_c * w.norm_sqr());
            assert!((sol.alpha[0] - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn random_flat_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &n in &[1usize, 2, 3, 5] {
            for _ in 0..4 {
                let s = random_flat(&mut rng, n, true);
                for j in 0..50 {
                    let omega = -1.0 + 5.0 * j as f64 / 49.0 + 1e-3;
                    let sol = alpha_coefficients(&s, omega, &Profile::Constant(0.7)).unwrap();
                    assert!(sol.defining_residual() <= 1e-10, "n={n} {}", sol.defining_residual());
                    assert!(sol.normalization_residual() <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn beta_parts() {
        let s = single(1.0, c(0.5, 0.0), 1.0, c(1.0, 0.0));
        let sol = alpha_coefficients(&s, 1.4, &one()).unwrap();
        // delta coefficient is z times the PV coefficient
        let z = sol.rho_c_z / sol.rho_c;
        assert!((sol.beta_delta_coeff - z * sol.beta_pv_coeff).norm() < 1e-14);
    }

    #[test]
    fn zero_lambda_gives_zero_coupling() {
        let s = single(1.0, c(0.5, 0.0), 1.0, c(0.0, 0.0));
        assert_eq!(coupling_constant(&s, 0, 0.8, &one()).unwrap(), ZERO);
    }

    #[test]
    fn single_mode_lorentzian_peak() {
        let w = c(0.3, 0.0);
        let s = single(1.0, w, 1.0, c(1.0, 0.0));
        let gamma = 2.0 * PI * w.norm_sqr();
        let ReservoirStructure::Sampled(d) = structure_function(&s, 0, &[1.0, 1.5], &one()).unwrap() else {
            panic!()
        };
        assert!((d.d[0] - 2.0 / (PI * gamma)).abs() < 1e-12);
        assert!((d.d[1] - closed_form::single_mode(1.5, 1.0, 0.0, gamma, c(1.0, 0.0))).abs() < 1e-14);
    }

    #[test]
    fn degenerate_pair_is_finite_at_common_frequency() {
        let s = QuasiModeSystem::flat(
            vec![1.0, 1.0],
            CMatrix::zeros(2, 2),
            vec![c(0.3, 0.0), c(0.2, 0.1)],
            1.0,
            vec![vec![c(1.0, 0.0), c(0.5, 0.0)]],
        )
        .unwrap();
        let a = two_mode_analysis(&s, 0).unwrap();
        assert_eq!(a.regime, TwoModeRegime::DegenerateFrequencies);
        let ReservoirStructure::Sampled(d) = structure_function(&s, 0, &[1.0, 1.2], &one()).unwrap() else {
            panic!()
        };
        for (omega, value) in d.omega.iter().zip(&d.d) {
            let cf = a.closed_form_d(*omega).unwrap();
            assert!((value - cf).abs() < 1e-10 * cf, "{value} vs {cf}");
        }
    }

    #[test]
    fn polynomials_single_mode() {
        let w = c(0.3, 0.2);
        let s = single(1.5, w, 2.0, c(0.7, 0.0));
        let r = characteristic_polynomials(&s, 0).unwrap();
        let xi = c(1.5, PI * 2.0 * w.norm_sqr());
        assert!((r.xi[0] - xi).norm() < 1e-14);
        assert_eq!(r.p.leading(), c(1.0, 0.0));
        assert!((r.strength - c(0.7, 0.0) * w.conj()).norm() < 1e-15);
    }

    #[test]
    fn polynomials_two_modes_root_sum() {
        let s = QuasiModeSystem::flat(
            vec![1.0, 1.8],
            CMatrix::zeros(2, 2),
            vec![c(0.3, 0.0), c(0.1, 0.4)],
            1.3,
            vec![vec![c(1.0, 0.0), c(0.5, 0.0)]],
        )
        .unwrap();
        let r = characteristic_polynomials(&s, 0).unwrap();
        let sum = r.xi[0] + r.xi[1];
        let expect = c(2.8, PI * 1.3 * (0.09 + 0.17));
        assert!((sum - expect).norm() < 1e-13);
        let a = two_mode_analysis(&s, 0).unwrap();
        for xi in a.xi {
            assert!(r.p.eval(xi).norm() < 1e-10);
        }
    }

    #[test]
    fn polynomials_degenerate_roots() {
        let (w1, w2) = (c(0.3, 0.0), c(0.2, 0.0));
        let s = QuasiModeSystem::flat(vec![1.0, 1.0], CMatrix::zeros(2, 2), vec![w1, w2], 1.0, vec![vec![c(1.0, 0.0); 2]])
            .unwrap();
        let mut xi = characteristic_polynomials(&s, 0).unwrap().xi;
        xi.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((xi[0] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((xi[1] - c(1.0, PI * 0.13)).norm() < 1e-14);
    }

    #[test]
    fn not_flat_rejected() {
        assert_eq!(characteristic_polynomials(&gaussian_system(0.0), 0), Err(Error::NotFlat));
    }

    #[test]
    fn dual_path_coupling() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let s = random_flat(&mut rng, 3, true);
            let r = characteristic_polynomials(&s, 0).unwrap();
            for j in 0..100 {
                let omega = -1.0 + 5.0 * j as f64 / 99.0;
                let g1 = coupling_constant(&s, 0, omega, &Profile::Constant(0.4)).unwrap();
                let g2 = r.coupling(omega, 0.4);
                assert!((g1 - g2).norm() <= 1e-10 * g2.norm().max(1e-3), "{g1} vs {g2}");
            }
        }
    }

    #[test]
    fn two_mode_regimes() {
        let w = c((1.0 / (2.0 * PI)).sqrt(), 0.0); // Γ = 1
        let make = |o1: f64, o2: f64, l1: f64, l2: f64| {
            QuasiModeSystem::flat(vec![o1, o2], CMatrix::zeros(2, 2), vec![w, w], 1.0, vec![vec![c(l1, 0.0), c(l2, 0.0)]])
                .unwrap()
        };
        let a = two_mode_analysis(&make(1.0, 4.0, 1.0, 1.0), 0).unwrap();
        assert_eq!(a.regime, TwoModeRegime::LargeSeparation);
        assert_eq!(a.delta_omega_c, Some(ZERO));
        let half_root = 0.5 * (9.0f64 - 4.0 * PI * PI * (1.0 / (2.0 * PI)).powi(2)).sqrt();
        assert!((half_root - (1.5 - a.delta_omega_r.unwrap())).abs() < 1e-14);

        let a = two_mode_analysis(&make(1.0, 1.5, 1.0, 0.5), 0).unwrap();
        assert_eq!(a.regime, TwoModeRegime::SmallSeparation);
        let df = a.delta_f_gamma.unwrap();
        assert!((df - (1.0 - (0.75f64).sqrt())).abs() < 1e-14);

        let a = two_mode_analysis(&make(1.0, 2.0, 1.0, 1.0), 0).unwrap();
        assert_eq!(a.regime, TwoModeRegime::SmallSeparation);
        assert_eq!(a.delta_f_gamma, Some(1.0));
        assert!(matches!(lorentzian_difference_map(&a), Err(Error::DivisionByZero(_))));
        let (q, kappa, gamma) = fano_profile_map(&a).unwrap();
        assert_eq!(q, 0.0);
        assert!((kappa - 1.0).abs() < 1e-14 && (gamma - 1.0).abs() < 1e-14);

        let a = two_mode_analysis(&make(1.0, 1.0, 1.0, 1.0), 0).unwrap();
        assert_eq!(a.regime, TwoModeRegime::DegenerateFrequencies);
        assert_eq!(a.delta_f_gamma, Some(0.0));

        let three = QuasiModeSystem::flat(vec![1.0; 3], CMatrix::zeros(3, 3), vec![w; 3], 1.0, vec![vec![c(1.0, 0.0); 3]]);
        assert_eq!(two_mode_analysis(&three.unwrap(), 0), Err(Error::WrongArity { expected: 2, found: 3 }));
    }

    #[test]
    fn fano_profile_generic_values() {
        // ρ_c|W|² = 1/π gives Γ = 2; pick the separation that yields Δf = 0.2
        let w = c((1.0 / PI).sqrt(), 0.0);
        let gamma: f64 = 2.0;
        let sep = (gamma * gamma - (0.8 * gamma).powi(2)).sqrt();
        let s = QuasiModeSystem::flat(vec![1.0, 1.0 + sep], CMatrix::zeros(2, 2), vec![w, w], 1.0, vec![vec![c(1.0, 0.0); 2]])
            .unwrap();
        let a = two_mode_analysis(&s, 0).unwrap();
        assert!((a.delta_f_gamma.unwrap() - 0.2).abs() < 1e-14);
        let (q, kappa, g) = fano_profile_map(&a).unwrap();
        assert_eq!(q, 0.0);
        assert!((kappa - 3.6).abs() < 1e-13);
        assert!((g - 0.4).abs() < 1e-13);
        let (_, _, w1, w2) = lorentzian_difference_map(&a).unwrap();
        assert!((w1 - w2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lorentzian_difference_weights() {
        let w = c((1.0 / (2.0 * PI)).sqrt(), 0.0);
        let sep = (1.0f64 - 0.25).sqrt(); // Δf = 0.5 for Γ = 1
        let s = QuasiModeSystem::flat(vec![1.0, 1.0 + sep], CMatrix::zeros(2, 2), vec![w, w], 1.0, vec![vec![c(1.0, 0.0); 2]])
            .unwrap();
        let a = two_mode_analysis(&s, 0).unwrap();
        let (_, _, w1, w2) = lorentzian_difference_map(&a).unwrap();
        assert!((w1 - 1.5).abs() < 1e-14 && (w2 - 0.5).abs() < 1e-14);
        let unequal = QuasiModeSystem::flat(vec![1.0, 1.0 + sep], CMatrix::zeros(2, 2), vec![w, w], 1.0, vec![vec![c(1.0, 0.0), c(2.0, 0.0)]])
            .unwrap();
        assert!(matches!(lorentzian_difference_map(&two_mode_analysis(&unequal, 0).unwrap()), Err(Error::WrongRegime(_))));
    }

    #[test]
    fn lorentzian_pole_residue_density() {
        let p = PoleResidue::lorentzian(1.0, 0.5, 1.0).unwrap();
        let expect = 0.5 / (0.3f64.powi(2) + 0.0625);
        assert!((p.normalized_density(1.3) - expect).abs() < 1e-13);
        assert!(matches!(PoleResidue::new(vec![c(1.0, 0.1)], vec![I], 1.0), Err(Error::UpperHalfPlanePole { .. })));
    }

    proptest! {
        #[test]
        fn rho_cancellation(seed in 0u64..1000, omega in -1.0f64..4.0, rho in 0.05f64..20.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_flat(&mut rng, 2, true);
            let g1 = coupling_constant(&s, 0, omega, &one()).unwrap();
            let g2 = coupling_constant(&s, 0, omega, &Profile::Constant(rho)).unwrap();
            prop_assert!((rho * g2.norm_sqr() - g1.norm_sqr()).abs() <= 1e-12 * g1.norm_sqr().max(1e-300));
            prop_assert!((g2 * rho.sqrt() - g1).norm() <= 1e-12 * g1.norm());
        }

        #[test]
        fn sampled_structure_nonnegative(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.random_range(1..4);
            let s = random_flat(&mut rng, n, true);
            let ReservoirStructure::Sampled(d) = structure_function(&s, 0, &linspace(-2.0, 5.0, 50), &one()).unwrap() else {
                unreachable!()
            };
            prop_assert!(d.d.iter().all(|&x| x >= -1e-14));
        }

        #[test]
        fn prediagonalisation_preserves_structure(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_flat(&mut rng, 3, true);
            let p = prediagonalize_discrete(&s).unwrap();
            let grid = linspace(-1.0, 4.5, 200);
            let (ReservoirStructure::Sampled(a), ReservoirStructure::Sampled(b)) =
                (structure_function(&s, 0, &grid, &one()).unwrap(), structure_function(&p, 0, &grid, &one()).unwrap())
            else { unreachable!() };
            for (x, y) in a.d.iter().zip(&b.d) {
                prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1e-12), "{} vs {}", x, y);
            }
        }

        #[test]
        fn unit_scaling_preserves_structure(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_flat(&mut rng, 2, false);
            let u = crate::model::apply_unit_scaling(&s, one()).unwrap();
            let grid = linspace(-1.0, 4.5, 100);
            let (ReservoirStructure::Sampled(a), ReservoirStructure::Sampled(b)) =
                (structure_function(&s, 0, &grid, &one()).unwrap(), structure_function(&u.system, 0, &grid, &one()).unwrap())
            else { unreachable!() };
            for (x, y) in a.d.iter().zip(&b.d) {
                prop_assert!((x - y).abs() <= 1e-10 * x.abs().max(1e-12));
            }
        }
    }
}
