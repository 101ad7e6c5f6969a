//! Atomic systems and the quasi-mode field model.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{max_abs, CMatrix};
use crate::profile::{CouplingProfile, DensityProfile, Profile};

const HERMITIAN_TOL: f64 = 1e-12;

/// One atomic transition `upper -> lower`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub upper: usize,
    pub lower: usize,
    /// `energy(upper) - energy(lower)`.
    pub omega: f64,
}

/// A multilevel atom written as `Σ_k η_k ω_k (σ_k⁺σ_k⁻ - σ_k⁻σ_k⁺)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicSystem {
    levels: Vec<f64>,
    transitions: Vec<Transition>,
    etas: Vec<f64>,
    energy_offset: f64,
}

impl AtomicSystem {
    /// Two-level atom with transition frequency `omega`.
    pub fn two_level(omega: f64) -> Result<Self> {
        build_atomic_system(&[0.0, omega], &[(1, 0)], None)
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn etas(&self) -> &[f64] {
        &self.etas
    }

    /// The constant `c` with `Σ_k η_k ω_k s_k(ℓ) = energy(ℓ) + c` for every level.
    pub fn energy_offset(&self) -> f64 {
        self.energy_offset
    }

    /// Sign with which `level` enters transition `k`.
    pub fn sign(&self, k: usize, level: usize) -> f64 {
        let t = &self.transitions[k];
        if level == t.upper {
            1.0
        } else if level == t.lower {
            -1.0
        } else {
            0.0
        }
    }

    /// Diagonal energy of `level` in the η form.
    pub fn eta_energy(&self, level: usize) -> f64 {
        (0..self.transitions.len())
            .map(|k| self.etas[k] * self.transitions[k].omega * self.sign(k, level))
            .sum()
    }

    /// Largest deviation of the η-form energies from `energy + offset`.
    pub fn level_residual(&self) -> f64 {
        (0..self.levels.len())
            .map(|l| (self.eta_energy(l) - self.levels[l] - self.energy_offset).abs())
            .fold(0.0, f64::max)
    }
}

fn real_rank(m: &DMatrix<f64>) -> usize {
    if m.ncols() == 0 || m.nrows() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > 1e-10 * top.max(f64::MIN_POSITIVE)).count()
}

/// Coefficient matrix of the level equations for the active transitions, plus the offset column.
fn level_matrix(
    levels: &[f64],
    transitions: &[Transition],
    active: &[usize],
) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(levels.len(), active.len() + 1);
    for (col, &k) in active.iter().enumerate() {
        let t = transitions[k];
        m[(t.upper, col)] += t.omega;
        m[(t.lower, col)] -= t.omega;
    }
    for l in 0..levels.len() {
        m[(l, active.len())] = -1.0;
    }
    m
}

/// Solve for the η coefficients and the energy offset.
///
/// `zero_eta` lists transitions whose η is fixed to zero. With `None` the
/// lowest-frequency transitions are zeroed one at a time (ties going to the
/// transition whose lower level lies highest, then to the earlier index)
/// while they are redundant, until the solution is unique.
pub fn build_atomic_system(
    levels: &[f64],
    transitions: &[(usize, usize)],
    zero_eta: Option<&[usize]>,
) -> Result<AtomicSystem> {
    if levels.is_empty() || levels.iter().any(|e| !e.is_finite()) {
        return Err(Error::InvalidInput("level energies must be finite and non-empty".into()));
    }
    let mut ts = Vec::with_capacity(transitions.len());
    for &(upper, lower) in transitions {
        if upper >= levels.len() || lower >= levels.len() || upper == lower {
            return Err(Error::InvalidInput(format!(
                "transition ({upper}, {lower}) does not join two distinct levels of {}",
                levels.len()
            )));
        }
        ts.push(Transition { upper, lower, omega: levels[upper] - levels[lower] });
    }

    let mut zeroed = vec![false; ts.len()];
    match zero_eta {
        Some(list) => {
            for &k in list {
                if k >= ts.len() {
                    return Err(Error::InvalidInput(format!("zero_eta index {k} out of range")));
                }
                zeroed[k] = true;
            }
        }
        None => {
            let mut order: Vec<usize> = (0..ts.len()).collect();
            order.sort_by(|&a, &b| {
                ts[a]
                    .omega
                    .abs()
                    .total_cmp(&ts[b].omega.abs())
                    .then(levels[ts[b].lower].total_cmp(&levels[ts[a].lower]))
                    .then(a.cmp(&b))
            });
            for k in order {
                let active: Vec<usize> = (0..ts.len()).filter(|&j| !zeroed[j]).collect();
                let full = level_matrix(levels, &ts, &active);
                let rank = real_rank(&full);
                if rank == active.len() + 1 {
                    break;
                }
                let without: Vec<usize> = active.iter().copied().filter(|&j| j != k).collect();
                if real_rank(&level_matrix(levels, &ts, &without)) == rank {
                    zeroed[k] = true;
                }
            }
        }
    }

    let active: Vec<usize> = (0..ts.len()).filter(|&j| !zeroed[j]).collect();
    let m = level_matrix(levels, &ts, &active);
    let unknowns = active.len() + 1;
    let rank = real_rank(&m);
    if rank < unknowns {
        return Err(Error::UnderdeterminedSystem { free: unknowns - rank });
    }
    let rhs = DVector::from_column_slice(levels);
    let svd = m.clone().svd(true, true);
    let x = svd
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::InvalidInput(format!("level equations: {e}")))?;
    let residual = (&m * &x - &rhs).amax();
    let scale = levels.iter().map(|e| e.abs()).fold(1.0, f64::max);
    if residual > 1e-10 * scale {
        return Err(Error::InconsistentSystem { residual });
    }
    let mut etas = vec![0.0; ts.len()];
    for (col, &k) in active.iter().enumerate() {
        etas[k] = x[col];
    }
    Ok(AtomicSystem {
        levels: levels.to_vec(),
        transitions: ts,
        etas,
        energy_offset: x[active.len()],
    })
}

/// Discrete quasimodes coupled to one continuum and to the atomic transitions.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiModeSystem {
    omegas: Vec<f64>,
    v: CMatrix,
    w: Vec<CouplingProfile>,
    rho_c: DensityProfile,
    lambdas: Vec<Vec<C64>>,
}

impl QuasiModeSystem {
    /// `lambdas[k][i]` couples transition `k` to mode `i`. The diagonal of `v` is ignored.
    pub fn new(
        omegas: Vec<f64>,
        v: CMatrix,
        w: Vec<CouplingProfile>,
        rho_c: DensityProfile,
        lambdas: Vec<Vec<C64>>,
    ) -> Result<Self> {
        let n = omegas.len();
        if n == 0 {
            return Err(Error::InvalidInput("at least one discrete quasimode is required".into()));
        }
        if v.nrows() != n || v.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "v is {}x{}, expected {n}x{n}",
                v.nrows(),
                v.ncols()
            )));
        }
        if w.len() != n {
            return Err(Error::InvalidInput(format!("{} continuum couplings for {n} modes", w.len())));
        }
        if let Some(row) = lambdas.iter().find(|row| row.len() != n) {
            return Err(Error::InvalidInput(format!(
                "atom coupling row has {} entries for {n} modes",
                row.len()
            )));
        }
        if omegas.iter().any(|x| !x.is_finite()) || v.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidInput("non-finite mode frequency or coupling".into()));
        }
        Ok(QuasiModeSystem { omegas, v, w, rho_c, lambdas })
    }

    /// All profiles constant.
    pub fn flat(
        omegas: Vec<f64>,
        v: CMatrix,
        w: Vec<C64>,
        rho_c: f64,
        lambdas: Vec<Vec<C64>>,
    ) -> Result<Self> {
        let w = w.into_iter().map(Profile::Constant).collect();
        Self::new(omegas, v, w, Profile::Constant(rho_c), lambdas)
    }

    pub fn n(&self) -> usize {
        self.omegas.len()
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn v(&self) -> &CMatrix {
        &self.v
    }

    /// Off-diagonal part of `v`.
    pub fn v_offdiag(&self, i: usize, j: usize) -> C64 {
        if i == j {
            C64::new(0.0, 0.0)
        } else {
            self.v[(i, j)]
        }
    }

    pub fn w(&self) -> &[CouplingProfile] {
        &self.w
    }

    pub fn rho_c(&self) -> &DensityProfile {
        &self.rho_c
    }

    pub fn lambdas(&self) -> &[Vec<C64>] {
        &self.lambdas
    }

    pub fn transition_count(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambda(&self, k: usize) -> Result<&[C64]> {
        self.lambdas.get(k).map(|r| r.as_slice()).ok_or_else(|| {
            Error::InvalidInput(format!(
                "transition {k} out of range ({} coupled transitions)",
                self.lambdas.len()
            ))
        })
    }

    pub fn is_flat(&self) -> bool {
        self.rho_c.is_constant() && self.w.iter().all(|w| w.is_constant())
    }

    /// Continuum couplings at `delta`.
    pub fn w_at(&self, delta: f64) -> Vec<C64> {
        self.w.iter().map(|w| w.at(delta)).collect()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.n();
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    r = r.max((self.v[(i, j)] - self.v[(j, i)].conj()).norm());
                }
            }
        }
        r
    }

    /// Every tabulated grid point of any profile.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .w
            .iter()
            .filter_map(|w| w.grid())
            .chain(self.rho_c.grid())
            .flatten()
            .copied()
            .collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn push(&mut self, name: &str, passed: bool, residual: f64) {
        self.checks.push(Check { name: name.to_string(), passed, residual: residual.abs() });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub fn validate(system: &QuasiModeSystem) -> ValidationReport {
    let mut report = ValidationReport::default();
    let herm = system.hermiticity_residual();
    report.push("v_hermitian", herm <= HERMITIAN_TOL, herm);

    let (min_rho, _) = system.rho_c.min_sample();
    report.push("rho_c_positive", min_rho > 0.0, (-min_rho).max(0.0));

    let min_omega = system.omegas.iter().copied().fold(f64::INFINITY, f64::min);
    report.push("omega_positive", min_omega > 0.0, (-min_omega).max(0.0));
    report
}

/// A system rescaled to unit continuum density.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitScaledSystem {
    pub system: QuasiModeSystem,
    /// True-mode density of the original problem.
    pub rho_true: DensityProfile,
}

impl UnitScaledSystem {
    /// Factor `1/√ρ(ω)` carried by true-mode amplitudes of the scaled system.
    pub fn true_mode_factor(&self, omega: f64) -> f64 {
        1.0 / self.rho_true.at(omega).sqrt()
    }
}

/// Absorb `√ρ_c` into the continuum couplings so that `ρ_c ≡ 1`.
pub fn apply_unit_scaling(system: &QuasiModeSystem, rho_true: DensityProfile) -> Result<UnitScaledSystem> {
    system.rho_c.check_positive()?;
    let rho_c = &system.rho_c;
    let w = system
        .w
        .iter()
        .map(|w| match (w, rho_c) {
            (Profile::Constant(c), Profile::Constant(r)) => Ok(Profile::Constant(c * r.sqrt())),
            _ => {
                let mut grid: Vec<f64> =
                    w.grid().into_iter().chain(rho_c.grid()).flatten().copied().collect();
                grid.sort_by(f64::total_cmp);
                grid.dedup();
                Profile::sample(grid, |x| w.at(x) * rho_c.at(x).sqrt())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let scaled = QuasiModeSystem {
        omegas: system.omegas.clone(),
        v: system.v.clone(),
        w,
        rho_c: Profile::Constant(1.0),
        lambdas: system.lambdas.clone(),
    };
    Ok(UnitScaledSystem { system: scaled, rho_true })
}

/// Rotate the discrete block `diag(ω) + v` to its eigenbasis.
///
/// Eigenvalues come out ascending. The continuum couplings and atom couplings
/// transform with `U = V†`, where `V` holds the eigenvectors as columns.
pub fn prediagonalize_discrete(system: &QuasiModeSystem) -> Result<QuasiModeSystem> {
    let residual = system.hermiticity_residual();
    if residual > HERMITIAN_TOL {
        return Err(Error::NonHermitianCoupling { residual });
    }
    let n = system.n();
    let mut h = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] = system.v_offdiag(i, j);
        }
        h[(i, i)] = C64::new(system.omegas[i], 0.0);
    }

    let (xi, vecs) = if max_abs(&(&h - CMatrix::from_diagonal(&h.diagonal()))) == 0.0 {
        (system.omegas.clone(), CMatrix::identity(n, n))
    } else {
        let eig = SymmetricEigen::new(h);
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };
    // dominant original index of each eigenvector breaks ties
    let dominant: Vec<usize> = (0..n)
        .map(|c| {
            (0..n)
                .max_by(|&a, &b| vecs[(a, c)].norm().total_cmp(&vecs[(b, c)].norm()))
                .unwrap_or(0)
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xi[a].total_cmp(&xi[b]).then(dominant[a].cmp(&dominant[b])));

    let u: CMatrix = CMatrix::from_fn(n, n, |r, c| vecs[(c, order[r])].conj());
    let omegas: Vec<f64> = order.iter().map(|&c| xi[c]).collect();

    let w = rotate_profiles(&system.w, &u)?;
    let lambdas = system
        .lambdas
        .iter()
        .map(|row| (0..n).map(|r| (0..n).map(|j| u[(r, j)] * row[j]).sum()).collect())
        .collect();
    Ok(QuasiModeSystem {
        omegas,
        v: CMatrix::zeros(n, n),
        w,
        rho_c: system.rho_c.clone(),
        lambdas,
    })
}

fn rotate_profiles(w: &[CouplingProfile], u: &CMatrix) -> Result<Vec<CouplingProfile>> {
    let n = w.len();
    if w.iter().all(|p| p.is_constant()) {
        let vals: Vec<C64> = w.iter().map(|p| p.at(0.0)).collect();
        return Ok((0..n)
            .map(|r| Profile::Constant((0..n).map(|j| u[(r, j)] * vals[j]).sum()))
            .collect());
    }
    let grid = match w[0].grid() {
        Some(g) => g.to_vec(),
        None => return Err(Error::IncompatibleProfiles),
    };
    if w.iter().any(|p| p.grid() != Some(grid.as_slice())) {
        return Err(Error::IncompatibleProfiles);
    }
    (0..n)
        .map(|r| {
            let values = (0..grid.len())
                .map(|g| {
                    (0..n)
                        .map(|j| match &w[j] {
                            Profile::Table { values, .. } => u[(r, j)] * values[g],
                            Profile::Constant(_) => unreachable!(),
                        })
                        .sum()
                })
                .collect();
            Profile::table(grid.clone(), values)
        })
        .collect()
}
