//! System plus environment: Hamiltonian blocks, initial states and the
//! commutator classification that decides which closed-form results apply.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    commutator, hermitian_eig, hermitian_eigenvalues, kron, operator_norm, ComplexMatrix,
    HERMITIAN_TOL, PSD_TOL,
};

/// Normalisation tolerance for pure-state amplitudes.
pub const NORM_TOL: f64 = 1e-12;

/// Relative tolerance of the commutator classification.
pub const COMMUTATOR_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct BipartiteSystem {
    dim_a: usize,
    dim_e: usize,
    h_a: ComplexMatrix,
    h_e: ComplexMatrix,
    h_ae: ComplexMatrix,
}

impl BipartiteSystem {
    pub fn new(
        dim_a: usize,
        dim_e: usize,
        h_a: ComplexMatrix,
        h_e: ComplexMatrix,
        h_ae: ComplexMatrix,
    ) -> Result<Self> {
        if dim_a == 0 || dim_e == 0 {
            return Err(Error::Dimension("subsystem dimensions must be at least 1".into()));
        }
        let expect = |name: &str, m: &ComplexMatrix, n: usize| -> Result<()> {
            if m.rows() != n || m.cols() != n {
                return Err(Error::Dimension(format!(
                    "{name} must be {n}x{n}, got {}x{}",
                    m.rows(),
                    m.cols()
                )));
            }
            m.check_hermitian(HERMITIAN_TOL)
        };
        expect("H_A", &h_a, dim_a)?;
        expect("H_E", &h_e, dim_e)?;
        expect("H_AE", &h_ae, dim_a * dim_e)?;
        Ok(Self { dim_a, dim_e, h_a, h_e, h_ae })
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_e(&self) -> usize {
        self.dim_e
    }

    pub fn dim(&self) -> usize {
        self.dim_a * self.dim_e
    }

    pub fn h_a(&self) -> &ComplexMatrix {
        &self.h_a
    }

    pub fn h_e(&self) -> &ComplexMatrix {
        &self.h_e
    }

    pub fn h_ae(&self) -> &ComplexMatrix {
        &self.h_ae
    }

    /// `H_A (x) I_E`.
    pub fn lifted_h_a(&self) -> ComplexMatrix {
        kron(&self.h_a, &ComplexMatrix::identity(self.dim_e))
    }

    /// `I_A (x) H_E`.
    pub fn lifted_h_e(&self) -> ComplexMatrix {
        kron(&ComplexMatrix::identity(self.dim_a), &self.h_e)
    }

    /// `H = H_A (x) I + I (x) H_E + H_AE`.
    pub fn total_hamiltonian(&self) -> ComplexMatrix {
        let mut h = self.lifted_h_a();
        h += &self.lifted_h_e();
        h += &self.h_ae;
        h
    }

    pub fn coupling_norm(&self) -> f64 {
        operator_norm(&self.h_ae)
    }

    /// `min(dim_A, dim_E)`.
    pub fn delta_dim(&self) -> usize {
        self.dim_a.min(self.dim_e)
    }

    /// Same model with the interaction switched off.
    pub fn uncoupled(&self) -> Self {
        Self { h_ae: ComplexMatrix::zeros(self.dim(), self.dim()), ..self.clone() }
    }

    pub fn commutator_classification(&self) -> CommutatorReport {
        let env_norm = operator_norm(&commutator(&self.lifted_h_e(), &self.h_ae));
        let sys_norm = operator_norm(&commutator(&self.lifted_h_a(), &self.h_ae));
        let tol = COMMUTATOR_TOL * self.coupling_norm().max(1.0);
        let class = match (env_norm <= tol, sys_norm <= tol) {
            (true, true) => CommutationClass::Both,
            (true, false) => CommutationClass::EnvCommuting,
            (false, true) => CommutationClass::SysCommuting,
            (false, false) => CommutationClass::Neither,
        };
        CommutatorReport { env_norm, sys_norm, class }
    }

    /// Rewrites the model in the eigenbasis of `H_E`, returning the rotated
    /// model and the environment rotation `V` (columns are eigenvectors).
    pub fn to_env_eigenbasis(&self) -> Result<(Self, ComplexMatrix)> {
        let eig = hermitian_eig(&self.h_e)?;
        let v = eig.vectors;
        let lift = kron(&ComplexMatrix::identity(self.dim_a), &v);
        let h_ae = &(&lift.adjoint() * &self.h_ae) * &lift;
        let h_ae = (&h_ae + &h_ae.adjoint()).scale_real(0.5);
        let rotated = Self::new(
            self.dim_a,
            self.dim_e,
            self.h_a.clone(),
            ComplexMatrix::from_real_diagonal(&eig.values),
            h_ae,
        )?;
        Ok((rotated, v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommutationClass {
    /// `[H_E, H_AE] = 0` only.
    EnvCommuting,
    /// `[H_A, H_AE] = 0` only.
    SysCommuting,
    Both,
    Neither,
}

impl CommutationClass {
    pub fn label(self) -> &'static str {
        match self {
            CommutationClass::EnvCommuting => "E-commuting",
            CommutationClass::SysCommuting => "A-commuting",
            CommutationClass::Both => "both",
            CommutationClass::Neither => "neither",
        }
    }

    pub fn env_commutes(self) -> bool {
        matches!(self, CommutationClass::EnvCommuting | CommutationClass::Both)
    }

    pub fn sys_commutes(self) -> bool {
        matches!(self, CommutationClass::SysCommuting | CommutationClass::Both)
    }
}

impl fmt::Display for CommutationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CommutatorReport {
    /// `||[I (x) H_E, H_AE]||`
    pub env_norm: f64,
    /// `||[H_A (x) I, H_AE]||`
    pub sys_norm: f64,
    pub class: CommutationClass,
}

/// Global pure start with amplitudes `a_{i alpha}` stored system-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    dim_a: usize,
    dim_e: usize,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    pub fn new(dim_a: usize, dim_e: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != dim_a * dim_e {
            return Err(Error::Dimension(format!(
                "{} amplitudes for a {dim_a}x{dim_e} product basis",
                amplitudes.len()
            )));
        }
        let norm_sq: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "sum |a|^2 = {norm_sq:.15} deviates from 1"
            )));
        }
        Ok(Self { dim_a, dim_e, amplitudes })
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(dim_a: usize, dim_e: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("amplitudes have zero or non-finite norm".into()));
        }
        Self::new(dim_a, dim_e, amplitudes.into_iter().map(|z| z / norm).collect())
    }

    /// `a_{i alpha} = c_i e_alpha`.
    pub fn product(system: &[Complex64], env: &[Complex64]) -> Result<Self> {
        let amplitudes = system
            .iter()
            .flat_map(|&c| env.iter().map(move |&e| c * e))
            .collect();
        Self::new(system.len(), env.len(), amplitudes)
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_e(&self) -> usize {
        self.dim_e
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, i: usize, alpha: usize) -> Complex64 {
        self.amplitudes[i * self.dim_e + alpha]
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
    }

    /// Applies `I_A (x) W` to the state.
    pub fn rotate_env(&self, w: &ComplexMatrix) -> Result<Self> {
        if w.rows() != self.dim_e || w.cols() != self.dim_e {
            return Err(Error::Dimension("environment rotation has wrong size".into()));
        }
        let lift = kron(&ComplexMatrix::identity(self.dim_a), w);
        Self::normalized(self.dim_a, self.dim_e, lift.matvec(&self.amplitudes))
    }

    pub fn check_compatible(&self, sys: &BipartiteSystem) -> Result<()> {
        if self.dim_a != sys.dim_a() || self.dim_e != sys.dim_e() {
            return Err(Error::Dimension(format!(
                "state dims ({}, {}) do not match model dims ({}, {})",
                self.dim_a,
                self.dim_e,
                sys.dim_a(),
                sys.dim_e()
            )));
        }
        Ok(())
    }
}

/// Product start `|c><c| (x) d` with a mixed environment.
#[derive(Debug, Clone)]
pub struct EnvWeightedState {
    system: Vec<Complex64>,
    weights: ComplexMatrix,
}

impl EnvWeightedState {
    pub fn new(system: Vec<Complex64>, weights: ComplexMatrix) -> Result<Self> {
        let norm_sq: f64 = system.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "sum |c|^2 = {norm_sq:.15} deviates from 1"
            )));
        }
        validate_env_weights(&weights)?;
        Ok(Self { system, weights })
    }

    pub fn system(&self) -> &[Complex64] {
        &self.system
    }

    pub fn weights(&self) -> &ComplexMatrix {
        &self.weights
    }

    pub fn dim_a(&self) -> usize {
        self.system.len()
    }

    pub fn dim_e(&self) -> usize {
        self.weights.rows()
    }

    /// `|c><c|`.
    pub fn system_density(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.system, &self.system)
    }
}

/// Checks that `d` is Hermitian, positive semidefinite and of unit trace.
pub fn validate_env_weights(d: &ComplexMatrix) -> Result<()> {
    if !d.is_square() || d.rows() == 0 {
        return Err(Error::InvalidState("environment weights must be a non-empty square matrix".into()));
    }
    d.check_hermitian(HERMITIAN_TOL)
        .map_err(|e| Error::InvalidState(format!("environment weights: {e}")))?;
    let tr = d.trace();
    if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
        return Err(Error::InvalidState(format!("environment weights have trace {tr}")));
    }
    let min = hermitian_eigenvalues(d)?[0];
    if min < PSD_TOL {
        return Err(Error::InvalidState(format!(
            "environment weights have negative eigenvalue {min:.3e}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub enum InitialState {
    Pure(PureState),
    EnvWeighted(EnvWeightedState),
}

impl InitialState {
    pub fn as_pure(&self) -> Result<&PureState> {
        match self {
            InitialState::Pure(p) => Ok(p),
            InitialState::EnvWeighted(_) => Err(Error::InvalidState(
                "operation requires a pure product-basis start".into(),
            )),
        }
    }

    pub fn as_env_weighted(&self) -> Result<&EnvWeightedState> {
        match self {
            InitialState::EnvWeighted(w) => Ok(w),
            InitialState::Pure(_) => Err(Error::InvalidState(
                "operation requires an environment-weighted start".into(),
            )),
        }
    }
}
