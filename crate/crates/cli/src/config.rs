//! Scenario files. Dense matrices are lists of `[row, col, re, im]` entries;
//! omitted entries are zero. Complex vectors are lists of `[re, im]`.

use std::path::{Path, PathBuf};

use arealaw::model::{BipartiteSystem, PureState};
use arealaw::random::{random_env_commuting_system, random_product_state, random_system, seeded_rng};
use arealaw::spin_boson::{SpinBosonParams, DEFAULT_ORACLE_NMAX};
use arealaw::ComplexMatrix;
use num_complex::Complex64;
use serde::Deserialize;

use crate::RunError;

pub const DEFAULT_T_MAX: f64 = 5.0;
pub const DEFAULT_STEPS: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    GenericBipartite,
    SpinBoson,
    Divisibility,
    ZassenhausScan,
    BoundEnsemble,
}

impl ScenarioKind {
    pub fn label(self) -> &'static str {
        match self {
            ScenarioKind::GenericBipartite => "generic-bipartite",
            ScenarioKind::SpinBoson => "spin-boson",
            ScenarioKind::Divisibility => "divisibility",
            ScenarioKind::ZassenhausScan => "zassenhaus-scan",
            ScenarioKind::BoundEnsemble => "bound-ensemble",
        }
    }
}

pub type MatrixEntries = Vec<(usize, usize, f64, f64)>;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ScenarioConfig {
    pub kind: Option<ScenarioKind>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub output: OutputConfig,
    pub model: Option<ModelConfig>,
    pub state: Option<StateConfig>,
    #[serde(default)]
    pub bound: BoundConfig,
    #[serde(default)]
    pub divisibility: DivisibilityConfig,
    pub spin_boson: Option<SpinBosonConfig>,
    #[serde(default)]
    pub zassenhaus: ZassenhausConfig,
    #[serde(default)]
    pub ensemble: EnsembleConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct GridConfig {
    pub t_max: Option<f64>,
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ModelConfig {
    pub dim_a: usize,
    pub dim_e: usize,
    /// Draw the blocks from the scenario seed instead of reading them.
    #[serde(default)]
    pub random: bool,
    /// With `random`, build `H_AE` block diagonal in a diagonal `H_E`.
    #[serde(default)]
    pub env_commuting: bool,
    #[serde(default)]
    pub h_a: MatrixEntries,
    #[serde(default)]
    pub h_e: MatrixEntries,
    #[serde(default)]
    pub h_ae: MatrixEntries,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    #[serde(default)]
    pub random: bool,
    pub system: Option<Vec<(f64, f64)>>,
    pub env: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    pub c: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct DivisibilityConfig {
    /// Final time; defaults to the grid end.
    pub t: Option<f64>,
    /// Absolute split times; defaults to quarters of `t`.
    pub splits: Option<Vec<f64>>,
    /// Environment weights `d`; defaults to the environment factor of the start.
    pub env_weights: Option<MatrixEntries>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SpinBosonConfig {
    pub omega: f64,
    pub beta: f64,
    pub eta: f64,
    #[serde(default = "default_two_j")]
    pub two_j: u32,
    #[serde(default = "default_nmax")]
    pub nmax: usize,
    #[serde(default = "default_oracle_nmax")]
    pub oracle_nmax: usize,
}

fn default_two_j() -> u32 {
    1
}

fn default_nmax() -> usize {
    1
}

fn default_oracle_nmax() -> usize {
    DEFAULT_ORACLE_NMAX
}

impl Default for SpinBosonConfig {
    fn default() -> Self {
        Self { omega: 1.0, beta: 1.0, eta: 0.5, two_j: 1, nmax: 1, oracle_nmax: DEFAULT_ORACLE_NMAX }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct ZassenhausConfig {
    pub dim: usize,
    pub orders: Vec<usize>,
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    /// Explicit Hermitian generators; drawn from the seed when absent.
    pub a: Option<MatrixEntries>,
    pub b: Option<MatrixEntries>,
}

impl Default for ZassenhausConfig {
    fn default() -> Self {
        Self { dim: 4, orders: vec![2, 3], t_min: 1e-2, t_max: 1e-1, points: 6, a: None, b: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct EnsembleConfig {
    pub count: usize,
    pub dim_a: usize,
    pub dim_e: usize,
    pub start: EnsembleStart,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self { count: 100, dim_a: 2, dim_e: 2, start: EnsembleStart::Product }
    }
}

/// Product starts have zero initial rate; entangled ones probe the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleStart {
    Product,
    Entangled,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub t_max: Option<f64>,
    pub steps: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Validation(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Validation(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            RunError::Validation(msg) => RunError::Validation(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if o.t_max.is_some() {
            self.grid.t_max = o.t_max;
        }
        if o.steps.is_some() {
            self.grid.steps = o.steps;
        }
        if o.out.is_some() {
            self.output.path = o.out.clone();
        }
    }

    pub fn t_max(&self) -> Result<f64, RunError> {
        let t = self.grid.t_max.unwrap_or(DEFAULT_T_MAX);
        if !(t > 0.0 && t.is_finite()) {
            return Err(RunError::Validation(format!("grid.t-max: must be positive, got {t}")));
        }
        Ok(t)
    }

    pub fn steps(&self) -> Result<usize, RunError> {
        let steps = self.grid.steps.unwrap_or(DEFAULT_STEPS);
        if steps < 2 {
            return Err(RunError::Validation(format!("grid.steps: must be at least 2, got {steps}")));
        }
        Ok(steps)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.output.path.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn require_seed(&self, what: &str) -> Result<u64, RunError> {
        self.seed
            .ok_or_else(|| RunError::Validation(format!("seed: required because {what} is random")))
    }

    pub fn c(&self) -> Result<f64, RunError> {
        let c = self.bound.c.unwrap_or(arealaw::entropy::DEFAULT_C);
        if !(c > 0.0 && c.is_finite()) {
            return Err(RunError::Validation(format!("bound.c: must be positive, got {c}")));
        }
        Ok(c)
    }

    /// Model and start state. Random pieces share one generator seeded from
    /// `seed`, model first.
    pub fn build_system(&self) -> Result<(BipartiteSystem, PureState), RunError> {
        let model = self
            .model
            .as_ref()
            .ok_or_else(|| RunError::Validation("model: section missing".into()))?;
        let (da, de) = (model.dim_a, model.dim_e);
        if da == 0 || de == 0 {
            return Err(RunError::Validation("model: dim-a and dim-e must be at least 1".into()));
        }
        let state = self.state.clone().unwrap_or_default();
        let mut rng = if model.random || state.random {
            Some(seeded_rng(self.require_seed("the model or state")?))
        } else {
            None
        };
        let sys = if model.random {
            let rng = rng.as_mut().expect("seeded above");
            if model.env_commuting {
                random_env_commuting_system(rng, da, de)
            } else {
                random_system(rng, da, de)
            }
        } else {
            let h_a = matrix_from_entries("model.h-a", da, &model.h_a)?;
            let h_e = matrix_from_entries("model.h-e", de, &model.h_e)?;
            let h_ae = matrix_from_entries("model.h-ae", da * de, &model.h_ae)?;
            BipartiteSystem::new(da, de, h_a, h_e, h_ae).map_err(|e| RunError::Validation(format!("model: {e}")))?
        };
        let init = if state.random {
            random_product_state(rng.as_mut().expect("seeded above"), da, de)
        } else {
            let c = match &state.system {
                Some(v) => complex_vector("state.system", da, v)?,
                None => vec![Complex64::new(1.0 / (da as f64).sqrt(), 0.0); da],
            };
            let e = match &state.env {
                Some(v) => complex_vector("state.env", de, v)?,
                None => arealaw::random::basis_vector(de, 0),
            };
            PureState::product(&c, &e).map_err(|e| RunError::Validation(format!("state: {e}")))?
        };
        Ok((sys, init))
    }

    pub fn spin_boson_params(&self) -> Result<(SpinBosonParams, usize), RunError> {
        let sb = self.spin_boson.clone().unwrap_or_default();
        let p = SpinBosonParams::new(sb.omega, sb.beta, sb.eta, sb.two_j, sb.nmax)
            .map_err(|e| RunError::Validation(format!("spin-boson: {e}")))?;
        if sb.oracle_nmax < 1 {
            return Err(RunError::Validation("spin-boson.oracle-nmax: must be at least 1".into()));
        }
        Ok((p, sb.oracle_nmax))
    }
}

pub fn matrix_from_entries(field: &str, n: usize, entries: &MatrixEntries) -> Result<ComplexMatrix, RunError> {
    let mut m = ComplexMatrix::zeros(n, n);
    for (k, &(r, c, re, im)) in entries.iter().enumerate() {
        if r >= n || c >= n {
            return Err(RunError::Validation(format!(
                "{field}[{k}]: index ({r}, {c}) outside {n}x{n}"
            )));
        }
        if !(re.is_finite() && im.is_finite()) {
            return Err(RunError::Validation(format!("{field}[{k}]: non-finite value")));
        }
        m[(r, c)] = Complex64::new(re, im);
    }
    Ok(m)
}

fn complex_vector(field: &str, n: usize, v: &[(f64, f64)]) -> Result<Vec<Complex64>, RunError> {
    if v.len() != n {
        return Err(RunError::Validation(format!("{field}: expected {n} entries, got {}", v.len())));
    }
    Ok(v.iter().map(|&(re, im)| Complex64::new(re, im)).collect())
}
