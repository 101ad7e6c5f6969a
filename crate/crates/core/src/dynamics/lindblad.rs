//! Atom plus discrete quasimodes, damped into a flat vacuum continuum:
//!
//! `dρ/dt = -i[H_S, ρ] + Σ_ij πρ_c W_i W_j* ([a_j, ρ a_i†] + [a_j ρ, a_i†])`
//!
//! which is the single-channel dissipator of `L = √(2πρ_c) Σ_j W_j* a_j`.
//! The density matrix is propagated as `-i(H_eff ρ - ρ H_eff†) + L ρ L†`
//! with `H_eff = H_S - (i/2) L†L`.
//!
//! For a two-level atom the one-excitation sector closes on the amplitudes
//! `(c_1, b_1..b_n)` under `H_eff`; the ground-vacuum population is
//! integrated alongside so the trace stays an independent check.

use nalgebra::SymmetricEigen;
use num_complex::Complex64 as C64;

use super::rk4::Rk4;
use super::{check_step, time_grid, DensityDiagnostics, DynamicsTrace, Method};
use crate::error::{Error, Result};
use crate::linalg::{max_abs, CMatrix};
use crate::model::{AtomicSystem, QuasiModeSystem};

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Population allowed in the highest retained Fock layer.
pub const TRUNCATION_TOL: f64 = 1e-6;
/// Largest Hilbert-space dimension of the dense solver.
pub const MAX_DIMENSION: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LindbladOptions {
    /// Fock states `0..d` kept per quasimode.
    pub truncation: usize,
    pub single_excitation: bool,
    /// Initially occupied level; the highest by default.
    pub initial_level: Option<usize>,
}

impl Default for LindbladOptions {
    fn default() -> Self {
        LindbladOptions { truncation: 3, single_excitation: false, initial_level: None }
    }
}

pub fn solve_lindblad(
    system: &QuasiModeSystem,
    atom: &AtomicSystem,
    options: &LindbladOptions,
    t_max: f64,
    h: f64,
) -> Result<DynamicsTrace> {
    if !system.is_flat() {
        return Err(Error::NotFlat);
    }
    if system.transition_count() != atom.transitions().len() {
        return Err(Error::InvalidInput(format!(
            "{} atom-mode coupling rows for {} transitions",
            system.transition_count(),
            atom.transitions().len()
        )));
    }
    let levels = atom.levels();
    let initial = match options.initial_level {
        Some(l) if l < levels.len() => l,
        Some(l) => return Err(Error::InvalidInput(format!("initial level {l} does not exist"))),
        None => (0..levels.len()).max_by(|&a, &b| levels[a].total_cmp(&levels[b])).unwrap_or(0),
    };
    if options.single_excitation {
        single_excitation(system, atom, initial, t_max, h)
    } else {
        dense(system, atom, options.truncation, initial, t_max, h)
    }
}

/// `|z_i|` of the diagonal and the largest off-diagonal row sum.
fn step_scale(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let diag = (0..n).map(|i| m[(i, i)].norm()).fold(0.0, f64::max);
    let off = (0..n)
        .map(|i| (0..n).filter(|&j| j != i).map(|j| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    diag.max(off)
}

fn single_excitation(
    system: &QuasiModeSystem,
    atom: &AtomicSystem,
    initial: usize,
    t_max: f64,
    h: f64,
) -> Result<DynamicsTrace> {
    let ts = atom.transitions();
    if atom.levels().len() != 2 || ts.len() != 1 {
        return Err(Error::InvalidInput("the single-excitation sector needs a two-level atom".into()));
    }
    if initial != ts[0].upper {
        return Err(Error::InvalidInput("the single-excitation sector starts in the upper level".into()));
    }
    let n = system.n();
    let rho_c = system.rho_c().at(0.0);
    let w = system.w_at(0.0);
    let lambda = system.lambda(0)?;
    // basis |e,0>, |g,1_i>
    let mut heff = CMatrix::zeros(n + 1, n + 1);
    heff[(0, 0)] = C64::new(ts[0].omega, 0.0);
    for i in 0..n {
        heff[(0, i + 1)] = lambda[i].conj();
        heff[(i + 1, 0)] = lambda[i];
        for j in 0..n {
            let hermitian = if i == j { C64::new(system.omegas()[i], 0.0) } else { system.v_offdiag(i, j) };
            heff[(i + 1, j + 1)] = hermitian - I * std::f64::consts::PI * rho_c * w[i] * w[j].conj();
        }
    }
    let diag = (0..=n).map(|i| heff[(i, i)].norm()).fold(0.0, f64::max);
    let coupling = lambda.iter().map(|l| l.norm_sqr()).sum::<f64>().sqrt();
    let times = time_grid(t_max, h)?;
    check_step(h, diag.max(coupling))?;

    let jump: Vec<C64> = w.iter().map(|x| x.conj() * (2.0 * std::f64::consts::PI * rho_c).sqrt()).collect();
    // y = (c_1, b_1..b_n, p_ground)
    let mut rhs = |y: &[C64], out: &mut [C64]| {
        for r in 0..=n {
            let mut acc = ZERO;
            for c in 0..=n {
                acc += heff[(r, c)] * y[c];
            }
            out[r] = -I * acc;
        }
        let l: C64 = (0..n).map(|j| jump[j] * y[j + 1]).sum();
        out[n + 1] = C64::new(l.norm_sqr(), 0.0);
    };
    let mut y = vec![ZERO; n + 2];
    y[0] = C64::new(1.0, 0.0);
    let mut rk = Rk4::new(n + 2);
    let mut trace = DynamicsTrace::new(Method::Lindblad, times);
    let mut diag_out = DensityDiagnostics::default();
    let mut amplitudes = Vec::with_capacity(trace.times.len());
    for step in 0..trace.times.len() {
        if step > 0 {
            rk.step(&mut rhs, &mut y, h);
        }
        let sector: f64 = y[..=n].iter().map(|a| a.norm_sqr()).sum();
        let ground = y[n + 1].re;
        amplitudes.push(y[0]);
        trace.p1.push(y[0].norm_sqr());
        trace.norm.push(sector);
        trace.auxiliary.push(y[1..=n].to_vec());
        trace.mode_populations.push(y[1..=n].iter().map(|a| a.norm_sqr()).collect());
        diag_out.trace.push(sector + ground);
        diag_out.min_eig.push(ground.min(0.0));
        diag_out.hermiticity.push(0.0);
    }
    trace.c1 = Some(amplitudes);
    trace.density = Some(diag_out);
    Ok(trace)
}

/// Product basis `|level> ⊗ |n_1 .. n_m>` with index `level·dᵐ + Σ n_i dⁱ`.
struct Basis {
    levels: usize,
    d: usize,
    fock: usize,
}

impl Basis {
    fn dim(&self) -> usize {
        self.levels * self.fock
    }

    fn occupation(&self, index: usize, mode: usize) -> usize {
        (index % self.fock) / self.d.pow(mode as u32) % self.d
    }

    fn level(&self, index: usize) -> usize {
        index / self.fock
    }

    fn annihilation(&self, mode: usize) -> CMatrix {
        let dim = self.dim();
        let stride = self.d.pow(mode as u32);
        let mut a = CMatrix::zeros(dim, dim);
        for s in 0..dim {
            let k = self.occupation(s, mode);
            if k > 0 {
                a[(s - stride, s)] = C64::new((k as f64).sqrt(), 0.0);
            }
        }
        a
    }

    /// `|upper><lower| ⊗ 1`.
    fn raising(&self, upper: usize, lower: usize) -> CMatrix {
        let dim = self.dim();
        let mut s = CMatrix::zeros(dim, dim);
        for f in 0..self.fock {
            s[(upper * self.fock + f, lower * self.fock + f)] = C64::new(1.0, 0.0);
        }
        s
    }
}

fn dense(
    system: &QuasiModeSystem,
    atom: &AtomicSystem,
    d: usize,
    initial: usize,
    t_max: f64,
    h: f64,
) -> Result<DynamicsTrace> {
    if d < 2 {
        return Err(Error::InvalidInput("Fock truncation must keep at least two states".into()));
    }
    let m = system.n();
    let fock = (0..m).try_fold(1usize, |acc, _| acc.checked_mul(d)).unwrap_or(usize::MAX);
    let levels = atom.levels();
    if fock.saturating_mul(levels.len()) > MAX_DIMENSION {
        return Err(Error::InvalidInput(format!(
            "Hilbert space of {} levels and {m} modes truncated at {d} exceeds {MAX_DIMENSION}",
            levels.len()
        )));
    }
    let basis = Basis { levels: levels.len(), d, fock };
    let dim = basis.dim();
    let ground = levels.iter().copied().fold(f64::INFINITY, f64::min);
    let rho_c = system.rho_c().at(0.0);
    let w = system.w_at(0.0);
    let a: Vec<CMatrix> = (0..m).map(|i| basis.annihilation(i)).collect();

    let mut hs = CMatrix::zeros(dim, dim);
    for s in 0..dim {
        let field: f64 = (0..m).map(|i| system.omegas()[i] * basis.occupation(s, i) as f64).sum();
        hs[(s, s)] = C64::new(levels[basis.level(s)] - ground + field, 0.0);
    }
    for i in 0..m {
        for j in 0..m {
            if i != j && system.v_offdiag(i, j) != ZERO {
                hs += (a[i].adjoint() * &a[j]) * system.v_offdiag(i, j);
            }
        }
    }
    for (k, t) in atom.transitions().iter().enumerate() {
        let sigma = basis.raising(t.upper, t.lower);
        let lambda = system.lambda(k)?;
        for i in 0..m {
            let term = (&sigma * &a[i]) * lambda[i].conj();
            hs += &term + term.adjoint();
        }
    }
    let mut jump = CMatrix::zeros(dim, dim);
    for j in 0..m {
        jump += &a[j] * (w[j].conj() * (2.0 * std::f64::consts::PI * rho_c).sqrt());
    }
    let jump_dag = jump.adjoint();
    let heff = &hs - (&jump_dag * &jump) * (0.5 * I);
    let heff_dag = heff.adjoint();
    let times = time_grid(t_max, h)?;
    check_step(h, step_scale(&heff))?;

    let deriv = |rho: &CMatrix| -> CMatrix {
        let coherent = &heff * rho - rho * &heff_dag;
        coherent * (-I) + &jump * rho * &jump_dag
    };
    let mut rho = CMatrix::zeros(dim, dim);
    rho[(initial * fock, initial * fock)] = C64::new(1.0, 0.0);
    let top: Vec<bool> = (0..dim).map(|s| (0..m).any(|i| basis.occupation(s, i) == d - 1)).collect();

    let mut trace = DynamicsTrace::new(Method::Lindblad, times);
    let mut diag_out = DensityDiagnostics::default();
    for step in 0..trace.times.len() {
        if step > 0 {
            let k1 = deriv(&rho);
            let k2 = deriv(&(&rho + &k1 * C64::new(0.5 * h, 0.0)));
            let k3 = deriv(&(&rho + &k2 * C64::new(0.5 * h, 0.0)));
            let k4 = deriv(&(&rho + &k3 * C64::new(h, 0.0)));
            rho += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0);
        }
        let pop = |s: usize| rho[(s, s)].re;
        let top_population: f64 = (0..dim).filter(|&s| top[s]).map(pop).sum();
        if top_population > TRUNCATION_TOL {
            return Err(Error::TruncationTooSmall { population: top_population });
        }
        trace.p1.push((0..fock).map(|f| pop(initial * fock + f)).sum());
        trace
            .mode_populations
            .push((0..m).map(|i| (0..dim).map(|s| pop(s) * basis.occupation(s, i) as f64).sum()).collect());
        let tr: f64 = (0..dim).map(pop).sum();
        trace.norm.push(tr);
        diag_out.trace.push(tr);
        diag_out.hermiticity.push(max_abs(&(&rho - rho.adjoint())));
        let hermitian = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(hermitian).eigenvalues;
        diag_out.min_eig.push(eig.iter().copied().fold(f64::INFINITY, f64::min));
    }
    trace.density = Some(diag_out);
    Ok(trace)
}
