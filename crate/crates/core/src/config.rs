//! JSON run configuration.
//!
//! ```json
//! {
//!   "atom":  { "levels": [0.0, 1.0], "transitions": [{"upper": 1, "lower": 0}], "zero_eta": [] },
//!   "field": {
//!     "omegas": [1.0],
//!     "v": [[{"re": 0.0, "im": 0.0}]],
//!     "W": [{"type": "constant", "re": 0.4, "im": 0.0}],
//!     "rho_c": {"type": "constant", "value": 1.0},
//!     "lambda": [[{"re": 0.5, "im": 0.0}]]
//!   },
//!   "numerics": { "t_max": 10.0, "h": 0.01 }
//! }
//! ```
//!
//! Tables are `{"type": "table", "delta": [...], "re": [...], "im": [...]}`
//! for couplings and `{"type": "table", "delta": [...], "values": [...]}`
//! for densities. Frequencies are angular frequencies.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    solve_lindblad, solve_pseudomode, solve_truemode_discretized, solve_volterra, DynamicsTrace, LindbladOptions,
    Method, TruemodeGrid,
};
use crate::error::{Error, Result};
use crate::fano::{
    characteristic_polynomials, linspace, structure_function, PoleResidue, ReservoirStructure, SampledStructure,
};
use crate::linalg::CMatrix;
use crate::model::{build_atomic_system, AtomicSystem, QuasiModeSystem};
use crate::profile::{CouplingProfile, DensityProfile, Profile};
use crate::pseudo::{extract_pseudomodes, PseudomodeSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexValue {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl From<ComplexValue> for C64 {
    fn from(c: ComplexValue) -> C64 {
        C64::new(c.re, c.im)
    }
}

impl From<C64> for ComplexValue {
    fn from(c: C64) -> ComplexValue {
        ComplexValue { re: c.re, im: c.im }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum CouplingSpec {
    Constant {
        re: f64,
        #[serde(default)]
        im: f64,
    },
    Table {
        delta: Vec<f64>,
        re: Vec<f64>,
        #[serde(default)]
        im: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum DensitySpec {
    Constant {
        #[serde(alias = "re")]
        value: f64,
    },
    Table {
        delta: Vec<f64>,
        #[serde(alias = "re")]
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionSpec {
    pub upper: usize,
    pub lower: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub levels: Vec<f64>,
    pub transitions: Vec<TransitionSpec>,
    #[serde(default)]
    pub zero_eta: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub omegas: Vec<f64>,
    #[serde(default)]
    pub v: Option<Vec<Vec<ComplexValue>>>,
    #[serde(rename = "W")]
    pub w: Vec<CouplingSpec>,
    pub rho_c: DensitySpec,
    pub lambda: Vec<Vec<ComplexValue>>,
    /// True-mode density `ρ(ω)`; defaults to 1.
    #[serde(default)]
    pub rho_true: Option<DensitySpec>,
}

/// An explicit rational model of the normalised structure function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirSpec {
    pub poles: Vec<ComplexValue>,
    pub residues: Vec<ComplexValue>,
    pub omega_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationSpec {
    #[serde(rename = "N")]
    pub n: usize,
    pub bandwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSpec {
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default)]
    pub omega_grid: Option<GridSpec>,
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    #[serde(default)]
    pub discretization: Option<DiscretizationSpec>,
    #[serde(default)]
    pub single_excitation: bool,
    #[serde(default)]
    pub initial_level: Option<usize>,
    /// Transition whose structure function is analysed.
    #[serde(default)]
    pub transition: usize,
    /// Default pass/fail threshold for `compare`.
    #[serde(default)]
    pub tolerance: Option<f64>,
}

impl Default for NumericsSpec {
    fn default() -> Self {
        NumericsSpec {
            t_max: default_t_max(),
            h: default_h(),
            omega_grid: None,
            truncation: default_truncation(),
            discretization: None,
            single_excitation: false,
            initial_level: None,
            transition: 0,
            tolerance: None,
        }
    }
}

fn default_t_max() -> f64 {
    10.0
}

fn default_h() -> f64 {
    0.01
}

fn default_truncation() -> usize {
    3
}

/// Points on the default structure-function grid.
pub const DEFAULT_GRID_POINTS: usize = 2001;
/// Discretised continuum used when none is configured.
pub const DEFAULT_DISCRETIZATION: DiscretizationSpec = DiscretizationSpec { n: 4000, bandwidth: 40.0 };

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub atom: AtomSpec,
    pub field: FieldSpec,
    #[serde(default)]
    pub reservoir: Option<ReservoirSpec>,
    #[serde(default)]
    pub numerics: NumericsSpec,
    #[serde(default)]
    pub output: Option<String>,
}

fn config_error(path: &str, message: impl Into<String>) -> Error {
    Error::Config { path: path.to_string(), message: message.into() }
}

impl RunConfig {
    /// Parse and validate; errors name the offending key.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_error(&path, e.into_inner().to_string())
        })?;
        config.check_numerics()?;
        Ok(config)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    fn check_numerics(&self) -> Result<()> {
        let n = &self.numerics;
        if !(n.t_max > 0.0 && n.t_max.is_finite()) {
            return Err(config_error("numerics.t_max", "must be positive"));
        }
        if !(n.h > 0.0 && n.h.is_finite()) {
            return Err(config_error("numerics.h", "must be positive"));
        }
        if n.truncation < 1 {
            return Err(config_error("numerics.truncation", "must be positive"));
        }
        if let Some(g) = n.omega_grid {
            if g.points < 2 {
                return Err(config_error("numerics.omega_grid.points", "need at least 2 points"));
            }
            if !(g.max > g.min) {
                return Err(config_error("numerics.omega_grid.max", "must exceed min"));
            }
        }
        if let Some(d) = n.discretization {
            if d.n == 0 {
                return Err(config_error("numerics.discretization.N", "must be positive"));
            }
            if !(d.bandwidth > 0.0) {
                return Err(config_error("numerics.discretization.bandwidth", "must be positive"));
            }
        }
        if let Some(t) = n.tolerance {
            if !(t > 0.0) {
                return Err(config_error("numerics.tolerance", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn atom(&self) -> Result<AtomicSystem> {
        let transitions: Vec<(usize, usize)> = self.atom.transitions.iter().map(|t| (t.upper, t.lower)).collect();
        build_atomic_system(&self.atom.levels, &transitions, self.atom.zero_eta.as_deref())
    }

    pub fn system(&self) -> Result<QuasiModeSystem> {
        let f = &self.field;
        let n = f.omegas.len();
        let v = match &f.v {
            None => CMatrix::zeros(n, n),
            Some(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(config_error("field.v", format!("expected a {n}x{n} matrix")));
                }
                CMatrix::from_fn(n, n, |i, j| rows[i][j].into())
            }
        };
        let w = f
            .w
            .iter()
            .enumerate()
            .map(|(i, spec)| coupling_profile(spec).map_err(|e| config_error(&format!("field.W[{i}]"), e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let rho_c = density_profile(&f.rho_c).map_err(|e| config_error("field.rho_c", e.to_string()))?;
        let lambdas = f.lambda.iter().map(|row| row.iter().map(|&c| c.into()).collect()).collect();
        QuasiModeSystem::new(f.omegas.clone(), v, w, rho_c, lambdas)
    }

    pub fn rho_true(&self) -> Result<DensityProfile> {
        match &self.field.rho_true {
            None => Ok(Profile::Constant(1.0)),
            Some(spec) => density_profile(spec).map_err(|e| config_error("field.rho_true", e.to_string())),
        }
    }

    /// `ω_k` of the analysed transition.
    pub fn atom_frequency(&self) -> Result<f64> {
        let atom = self.atom()?;
        atom.transitions()
            .get(self.numerics.transition)
            .map(|t| t.omega)
            .ok_or_else(|| config_error("numerics.transition", "no such transition"))
    }

    /// Structure-function grid: configured, or spanning the modes ± 10 widths.
    pub fn omega_grid(&self, system: &QuasiModeSystem) -> Vec<f64> {
        match self.numerics.omega_grid {
            Some(g) => linspace(g.min, g.max, g.points),
            None => crate::fano::default_omega_grid(system, DEFAULT_GRID_POINTS),
        }
    }

    /// Explicit pole model if given, the rational form for flat fields,
    /// otherwise the general engine sampled on the frequency grid.
    pub fn reservoir(&self) -> Result<ReservoirStructure> {
        if let Some(r) = &self.reservoir {
            let p = PoleResidue::new(
                r.poles.iter().map(|&c| c.into()).collect(),
                r.residues.iter().map(|&c| c.into()).collect(),
                r.omega_sq,
            )
            .map_err(|e| config_error("reservoir", e.to_string()))?;
            return Ok(ReservoirStructure::PoleResidue(p));
        }
        let system = self.system()?;
        if system.is_flat() {
            return Ok(ReservoirStructure::RationalFlat(characteristic_polynomials(
                &system,
                self.numerics.transition,
            )?));
        }
        structure_function(&system, self.numerics.transition, &self.omega_grid(&system), &self.rho_true()?)
    }

    pub fn lindblad_options(&self) -> LindbladOptions {
        LindbladOptions {
            truncation: self.numerics.truncation,
            single_excitation: self.numerics.single_excitation,
            initial_level: self.numerics.initial_level,
        }
    }

    pub fn truemode_grid(&self) -> TruemodeGrid {
        let d = self.numerics.discretization.unwrap_or(DEFAULT_DISCRETIZATION);
        TruemodeGrid { modes: d.n, bandwidth: d.bandwidth }
    }

    /// General-engine `D` and `g` on the frequency grid; all zero without atom couplings.
    pub fn sampled_structure(&self) -> Result<SampledStructure> {
        let system = self.system()?;
        let grid = self.omega_grid(&system);
        if system.transition_count() == 0 {
            let n = grid.len();
            return Ok(SampledStructure { omega: grid, d: vec![0.0; n], g: vec![C64::new(0.0, 0.0); n] });
        }
        match structure_function(&system, self.numerics.transition, &grid, &self.rho_true()?)? {
            ReservoirStructure::Sampled(s) => Ok(s),
            _ => unreachable!("the general engine always samples"),
        }
    }

    pub fn pseudomodes(&self) -> Result<PseudomodeSet> {
        extract_pseudomodes(&self.reservoir()?, self.atom_frequency()?)
    }

    /// Atom initially excited, reservoir empty, evolved on the configured grid.
    pub fn solve(&self, method: Method) -> Result<DynamicsTrace> {
        let n = &self.numerics;
        match method {
            Method::Pseudomode => solve_pseudomode(&self.pseudomodes()?, n.t_max, n.h),
            Method::Volterra => solve_volterra(&self.pseudomodes()?, n.t_max, n.h),
            Method::Truemode => {
                solve_truemode_discretized(&self.reservoir()?, self.atom_frequency()?, &self.truemode_grid(), n.t_max, n.h)
            }
            Method::Lindblad => solve_lindblad(&self.system()?, &self.atom()?, &self.lindblad_options(), n.t_max, n.h),
        }
    }
}

fn coupling_profile(spec: &CouplingSpec) -> Result<CouplingProfile> {
    match spec {
        CouplingSpec::Constant { re, im } => Ok(Profile::Constant(C64::new(*re, *im))),
        CouplingSpec::Table { delta, re, im } => {
            let im = im.clone().unwrap_or_else(|| vec![0.0; re.len()]);
            if im.len() != re.len() {
                return Err(Error::InvalidInput("re and im tables differ in length".into()));
            }
            Profile::table(delta.clone(), re.iter().zip(&im).map(|(&a, &b)| C64::new(a, b)).collect())
        }
    }
}

fn density_profile(spec: &DensitySpec) -> Result<DensityProfile> {
    let p = match spec {
        DensitySpec::Constant { value } => Profile::Constant(*value),
        DensitySpec::Table { delta, values } => Profile::table(delta.clone(), values.clone())?,
    };
    p.check_positive()?;
    Ok(p)
}

/// Parse a method name, reporting it as a config error.
pub fn parse_method(name: &str) -> Result<Method> {
    name.parse().map_err(|_| config_error("method", format!("unknown method `{name}`")))
}
