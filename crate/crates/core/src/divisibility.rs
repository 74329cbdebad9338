//! Semi-group (divisibility) test of the reduced dynamics.
//!
//! The dynamical map of the system factor is written as a supermatrix
//! `C_{(i1,i2),(j1,j2)}(t, s)` acting on pairs of system indices, with the
//! environment prepared in the weight matrix `d` at the start of every
//! interval. The evolution is divisible at a split `s` when
//! `C(t, 0) = C(s, 0) C(t, s)` under contraction over the middle index pair.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dynamics::Evolution;
use crate::error::{Error, Result};
use crate::linalg::{commutator, ComplexMatrix, Propagator, I, ZERO};
use crate::model::{validate_env_weights, BipartiteSystem, CommutationClass, PureState};

/// Largest composition residual accepted as divisible.
pub const DIVISIBILITY_TOL: f64 = 1e-8;

/// Split fractions used when none are given.
pub const DEFAULT_SPLIT_FRACTIONS: [f64; 3] = [0.25, 0.5, 0.75];

pub fn default_splits(t: f64) -> Vec<f64> {
    DEFAULT_SPLIT_FRACTIONS.iter().map(|f| f * t).collect()
}

#[derive(Debug, Clone)]
pub struct SuperMatrix {
    dim_a: usize,
    start: f64,
    end: f64,
    /// Row `(i1, i2)` at `i1 * dim_a + i2`, column `(j1, j2)` likewise.
    entries: ComplexMatrix,
}

impl SuperMatrix {
    pub fn identity(dim_a: usize, at: f64) -> Self {
        Self { dim_a, start: at, end: at, entries: ComplexMatrix::identity(dim_a * dim_a) }
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    /// `(s, t)`.
    pub fn interval(&self) -> (f64, f64) {
        (self.start, self.end)
    }

    pub fn entries(&self) -> &ComplexMatrix {
        &self.entries
    }

    pub fn entry(&self, i1: usize, i2: usize, j1: usize, j2: usize) -> Complex64 {
        self.entries[(i1 * self.dim_a + i2, j1 * self.dim_a + j2)]
    }

    /// Contraction over the middle index pair: `self` covers `(s, r)` and
    /// `later` covers `(r, t)`; the result covers `(s, t)`.
    pub fn then(&self, later: &SuperMatrix) -> Result<SuperMatrix> {
        if self.dim_a != later.dim_a {
            return Err(Error::Dimension("supermatrices act on different systems".into()));
        }
        Ok(SuperMatrix {
            dim_a: self.dim_a,
            start: self.start,
            end: later.end,
            entries: &self.entries * &later.entries,
        })
    }

    /// `rho_{j1 j2} = sum rho0_{i1 i2} C_{(i1,i2),(j1,j2)}`.
    pub fn apply(&self, rho0: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.dim_a;
        if rho0.rows() != n || rho0.cols() != n {
            return Err(Error::Dimension(format!("expected a {n}x{n} system matrix")));
        }
        Ok(ComplexMatrix::from_fn(n, n, |j1, j2| {
            let mut acc = ZERO;
            for i1 in 0..n {
                for i2 in 0..n {
                    acc += rho0[(i1, i2)] * self.entry(i1, i2, j1, j2);
                }
            }
            acc
        }))
    }

    /// Applies the map to the pure system start `c`.
    pub fn apply_coefficients(&self, c: &[Complex64]) -> Result<ComplexMatrix> {
        self.apply(&ComplexMatrix::outer(c, c))
    }

    pub fn max_abs_diff(&self, other: &SuperMatrix) -> f64 {
        self.entries.max_abs_diff(&other.entries)
    }
}

fn check_weights(sys: &BipartiteSystem, d: &ComplexMatrix) -> Result<()> {
    if d.rows() != sys.dim_e() || d.cols() != sys.dim_e() {
        return Err(Error::InvalidState(format!(
            "environment weights must be {0}x{0}",
            sys.dim_e()
        )));
    }
    validate_env_weights(d)
}

/// `C_{(i1,i2),(j1,j2)} = sum_{a1,a2,g} d_{a1 a2} <j1 g|U|i1 a1> <i2 a2|U^dagger|j2 g>`
/// for a propagator `U` spanning the interval.
fn supermatrix_from_propagator(
    sys: &BipartiteSystem,
    d: &ComplexMatrix,
    u: &ComplexMatrix,
    start: f64,
    end: f64,
) -> SuperMatrix {
    let (dim_a, dim_e) = (sys.dim_a(), sys.dim_e());
    let idx = |i: usize, a: usize| i * dim_e + a;
    let mut entries = ComplexMatrix::zeros(dim_a * dim_a, dim_a * dim_a);
    for i1 in 0..dim_a {
        for j1 in 0..dim_a {
            for a1 in 0..dim_e {
                for g in 0..dim_e {
                    let left = u[(idx(j1, g), idx(i1, a1))];
                    if left == ZERO {
                        continue;
                    }
                    for i2 in 0..dim_a {
                        for j2 in 0..dim_a {
                            let mut acc = ZERO;
                            for a2 in 0..dim_e {
                                acc += d[(a1, a2)] * u[(idx(j2, g), idx(i2, a2))].conj();
                            }
                            entries[(i1 * dim_a + i2, j1 * dim_a + j2)] += left * acc;
                        }
                    }
                }
            }
        }
    }
    SuperMatrix { dim_a, start, end, entries }
}

/// Supermatrix `C(t, s)` of the reduced map with the environment prepared in
/// `d` at time `s`.
pub fn supermatrix(sys: &BipartiteSystem, d: &ComplexMatrix, t: f64, s: f64) -> Result<SuperMatrix> {
    check_weights(sys, d)?;
    if t < s {
        return Err(Error::InvalidParameter(format!("interval end {t} precedes start {s}")));
    }
    let u = Propagator::new(&sys.total_hamiltonian())?.at(t - s);
    Ok(supermatrix_from_propagator(sys, d, &u, s, t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Divisible,
    NonDivisible,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Divisible => "divisible",
            Verdict::NonDivisible => "non-divisible",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitResidual {
    pub split_time: f64,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct DivisibilityReport {
    /// Max-entry deviation over all splits.
    pub residual: f64,
    pub per_split: Vec<SplitResidual>,
    pub condition_class: CommutationClass,
    pub verdict: Verdict,
    pub split_times: Vec<f64>,
    pub t: f64,
}

/// `max_s max |C(t,0) - C(s,0) C(t,s)|` over the given splits.
pub fn divisibility_residual(
    sys: &BipartiteSystem,
    d: &ComplexMatrix,
    t: f64,
    splits: &[f64],
) -> Result<DivisibilityReport> {
    check_weights(sys, d)?;
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("final time {t} must be positive")));
    }
    if splits.is_empty() {
        return Err(Error::InvalidParameter("no split times given".into()));
    }
    if let Some(bad) = splits.iter().find(|&&s| !(s > 0.0 && s < t)) {
        return Err(Error::InvalidParameter(format!("split {bad} outside (0, {t})")));
    }
    let propagator = Propagator::new(&sys.total_hamiltonian())?;
    let full = supermatrix_from_propagator(sys, d, &propagator.at(t), 0.0, t);
    let per_split: Vec<SplitResidual> = splits
        .par_iter()
        .map(|&s| {
            let first = supermatrix_from_propagator(sys, d, &propagator.at(s), 0.0, s);
            let second = supermatrix_from_propagator(sys, d, &propagator.at(t - s), s, t);
            let composed = first.then(&second).expect("same system");
            SplitResidual { split_time: s, residual: full.max_abs_diff(&composed) }
        })
        .collect();
    let residual = per_split.iter().map(|r| r.residual).fold(0.0, f64::max);
    Ok(DivisibilityReport {
        residual,
        per_split,
        condition_class: sys.commutator_classification().class,
        verdict: if residual <= DIVISIBILITY_TOL { Verdict::Divisible } else { Verdict::NonDivisible },
        split_times: splits.to_vec(),
        t,
    })
}

/// One-time master-equation decomposition of the environment-diagonal block
/// `rho_{A g}` at time `t`.
#[derive(Debug, Clone)]
pub struct MemoryTerms {
    pub gamma: usize,
    pub t: f64,
    /// `(beta, Omega_{g beta})` for every `beta != g`.
    pub omega_gamma_beta: Vec<(usize, ComplexMatrix)>,
    /// `(beta, Omega_{beta g})` for every `beta != g`.
    pub omega_beta_gamma: Vec<(usize, ComplexMatrix)>,
    /// Exact derivative of the block by Richardson-extrapolated central differences.
    pub derivative: ComplexMatrix,
    /// `-i [H_d, rho_{A g}] - i sum_beta (Omega_{g beta} - Omega_{beta g})`.
    pub rhs: ComplexMatrix,
    pub master_residual: f64,
}

impl MemoryTerms {
    /// Largest entry over all `Omega` matrices.
    pub fn max_omega(&self) -> f64 {
        self.omega_gamma_beta
            .iter()
            .chain(&self.omega_beta_gamma)
            .map(|(_, m)| m.max_abs())
            .fold(0.0, f64::max)
    }
}

fn env_block(m: &ComplexMatrix, dim_a: usize, dim_e: usize, row_env: usize, col_env: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim_a, dim_a, |i, k| m[(i * dim_e + row_env, k * dim_e + col_env)])
}

/// Memory contributions of the environment off-diagonal couplings to the
/// `g`-block of the global state. `H_E` must be diagonal; use
/// [`BipartiteSystem::to_env_eigenbasis`] and [`PureState::rotate_env`] first
/// if it is not.
pub fn memory_terms(
    sys: &BipartiteSystem,
    init: &PureState,
    t: f64,
    gamma: usize,
) -> Result<MemoryTerms> {
    let (dim_a, dim_e) = (sys.dim_a(), sys.dim_e());
    if gamma >= dim_e {
        return Err(Error::InvalidParameter(format!(
            "environment index {gamma} out of range 0..{dim_e}"
        )));
    }
    let h_e = sys.h_e();
    let off_diag = (0..dim_e)
        .flat_map(|a| (0..dim_e).filter(move |&b| b != a).map(move |b| (a, b)))
        .map(|(a, b)| h_e[(a, b)].norm())
        .fold(0.0, f64::max);
    if off_diag > 1e-12 * h_e.max_abs().max(1.0) {
        return Err(Error::InvalidParameter(
            "H_E must be diagonal; rotate the model into the H_E eigenbasis first".into(),
        ));
    }

    let evo = Evolution::new(sys, init)?;
    let h = sys.total_hamiltonian();
    let h_ae = sys.h_ae();
    let rho = evo.rho_full_raw(t);
    let block = env_block(&rho, dim_a, dim_e, gamma, gamma);
    let h_diag = env_block(&h, dim_a, dim_e, gamma, gamma);

    let mut omega_gamma_beta = Vec::with_capacity(dim_e.saturating_sub(1));
    let mut omega_beta_gamma = Vec::with_capacity(dim_e.saturating_sub(1));
    let mut rhs = commutator(&h_diag, &block).scale(-I);
    for beta in (0..dim_e).filter(|&b| b != gamma) {
        let coupling_out = env_block(h_ae, dim_a, dim_e, gamma, beta);
        let coupling_in = env_block(h_ae, dim_a, dim_e, beta, gamma);
        let og_b = &coupling_out * &env_block(&rho, dim_a, dim_e, beta, gamma);
        let ob_g = &env_block(&rho, dim_a, dim_e, gamma, beta) * &coupling_in;
        rhs += &(&og_b - &ob_g).scale(-I);
        omega_gamma_beta.push((beta, og_b));
        omega_beta_gamma.push((beta, ob_g));
    }

    let step = 1e-3 / evo.hamiltonian_norm().max(1.0);
    let central = |h: f64| {
        let forward = env_block(&evo.rho_full_raw(t + h), dim_a, dim_e, gamma, gamma);
        let backward = env_block(&evo.rho_full_raw(t - h), dim_a, dim_e, gamma, gamma);
        (&forward - &backward).scale_real(1.0 / (2.0 * h))
    };
    let coarse = central(step);
    let fine = central(step / 2.0);
    let derivative = (&fine.scale_real(4.0) - &coarse).scale_real(1.0 / 3.0);
    let master_residual = derivative.max_abs_diff(&rhs);

    Ok(MemoryTerms {
        gamma,
        t,
        omega_gamma_beta,
        omega_beta_gamma,
        derivative,
        rhs,
        master_residual,
    })
}
