//! Exact unitary evolution of a global pure start and its reduction onto the
//! system factor.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eigenvalues, partial_trace_env, partial_trace_sys, ComplexMatrix, Propagator,
};
use crate::model::{BipartiteSystem, PureState};

/// Tolerance for the Hermiticity, trace and positivity invariants.
pub const DENSITY_TOL: f64 = 1e-10;

/// Discriminants above `-DISCRIMINANT_TOL` are clamped to zero.
pub const DISCRIMINANT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dims {
    Bipartite { dim_a: usize, dim_e: usize },
    Single(usize),
}

impl Dims {
    pub fn total(self) -> usize {
        match self {
            Dims::Bipartite { dim_a, dim_e } => dim_a * dim_e,
            Dims::Single(n) => n,
        }
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix with its dimensions.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
    dims: Dims,
    eigenvalues: Vec<f64>,
}

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix, dims: Dims) -> Result<Self> {
        let n = dims.total();
        if mat.rows() != n || mat.cols() != n {
            return Err(Error::Dimension(format!(
                "density matrix is {}x{}, dims say {n}",
                mat.rows(),
                mat.cols()
            )));
        }
        let asymmetry = mat.hermitian_asymmetry();
        if asymmetry > DENSITY_TOL {
            return Err(Error::InvariantViolation(format!("asymmetry {asymmetry:.3e}")));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
            return Err(Error::InvariantViolation(format!("trace {tr}")));
        }
        let eigenvalues = hermitian_eigenvalues(&mat)?;
        if eigenvalues[0] < -DENSITY_TOL {
            return Err(Error::InvariantViolation(format!(
                "minimum eigenvalue {:.3e}",
                eigenvalues[0]
            )));
        }
        Ok(Self { mat, dims, eigenvalues })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    /// Spectrum, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn trace_deviation(&self) -> f64 {
        (self.mat.trace() - Complex64::new(1.0, 0.0)).norm()
    }

    /// `Tr rho^2`.
    pub fn purity(&self) -> f64 {
        self.mat.hs_inner(&self.mat).re
    }

    pub fn entropy(&self) -> f64 {
        crate::entropy::entropy_from_spectrum(&self.eigenvalues)
    }

    pub fn reduce_env(&self) -> Result<DensityMatrix> {
        match self.dims {
            Dims::Bipartite { dim_a, dim_e } => {
                DensityMatrix::new(partial_trace_env(&self.mat, dim_a, dim_e)?, Dims::Single(dim_a))
            }
            Dims::Single(_) => Err(Error::Dimension("state is not bipartite".into())),
        }
    }

    pub fn reduce_sys(&self) -> Result<DensityMatrix> {
        match self.dims {
            Dims::Bipartite { dim_a, dim_e } => {
                DensityMatrix::new(partial_trace_sys(&self.mat, dim_a, dim_e)?, Dims::Single(dim_e))
            }
            Dims::Single(_) => Err(Error::Dimension("state is not bipartite".into())),
        }
    }
}

/// Explicit, strictly increasing time grid starting at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidGrid("grid is empty".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidGrid(format!("grid starts at {} instead of 0", times[0])));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("grid contains non-finite times".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("grid is not strictly increasing".into()));
        }
        Ok(Self { times })
    }

    /// `steps` equally spaced points on `[0, t_max]`.
    pub fn uniform(t_max: f64, steps: usize) -> Result<Self> {
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::InvalidGrid(format!("t_max = {t_max} must be positive")));
        }
        if steps < 2 {
            return Err(Error::InvalidGrid(format!("{steps} steps; need at least 2")));
        }
        let dt = t_max / (steps - 1) as f64;
        Self::new((0..steps).map(|k| k as f64 * dt).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> f64 {
        *self.times.last().expect("grid is non-empty")
    }
}

/// Cached propagator for a fixed model and start.
#[derive(Debug, Clone)]
pub struct Evolution {
    sys: BipartiteSystem,
    state: PureState,
    propagator: Propagator,
}

impl Evolution {
    pub fn new(sys: &BipartiteSystem, state: &PureState) -> Result<Self> {
        state.check_compatible(sys)?;
        Ok(Self {
            sys: sys.clone(),
            state: state.clone(),
            propagator: Propagator::new(&sys.total_hamiltonian())?,
        })
    }

    pub fn system(&self) -> &BipartiteSystem {
        &self.sys
    }

    pub fn state(&self) -> &PureState {
        &self.state
    }

    pub fn hamiltonian_norm(&self) -> f64 {
        self.propagator.generator_norm()
    }

    pub fn propagator_at(&self, t: f64) -> ComplexMatrix {
        self.propagator.at(t)
    }

    /// `|psi(t)> = U(t) |psi_0>`.
    pub fn state_vector(&self, t: f64) -> Vec<Complex64> {
        self.propagator.at(t).matvec(self.state.amplitudes())
    }

    /// Global density matrix without invariant checks. Negative `t` is
    /// allowed (backward evolution, used by the differentiation stencils).
    pub fn rho_full_raw(&self, t: f64) -> ComplexMatrix {
        let psi = self.state_vector(t);
        let rho = ComplexMatrix::outer(&psi, &psi);
        (&rho + &rho.adjoint()).scale_real(0.5)
    }

    pub fn rho_reduced_raw(&self, t: f64) -> ComplexMatrix {
        partial_trace_env(&self.rho_full_raw(t), self.sys.dim_a(), self.sys.dim_e())
            .expect("dimensions fixed at construction")
    }

    pub fn rho_full(&self, t: f64) -> Result<DensityMatrix> {
        DensityMatrix::new(
            self.rho_full_raw(t),
            Dims::Bipartite { dim_a: self.sys.dim_a(), dim_e: self.sys.dim_e() },
        )
    }

    pub fn rho_reduced(&self, t: f64) -> Result<DensityMatrix> {
        DensityMatrix::new(self.rho_reduced_raw(t), Dims::Single(self.sys.dim_a()))
    }

    /// Entanglement entropy of the system factor; no invariant checks.
    pub fn entropy_raw(&self, t: f64) -> Result<f64> {
        crate::entropy::von_neumann_entropy(&self.rho_reduced_raw(t))
    }

    pub fn sweep(&self, grid: &TimeGrid) -> Result<Vec<DensityMatrix>> {
        grid.times().par_iter().map(|&t| self.rho_reduced(t)).collect()
    }
}

/// `rho_AE(t) = U(t) |psi_0><psi_0| U(t)^dagger`.
pub fn rho_full(sys: &BipartiteSystem, init: &PureState, t: f64) -> Result<DensityMatrix> {
    Evolution::new(sys, init)?.rho_full(t)
}

/// The global density matrix written as the explicit double sum over initial
/// amplitudes and propagator elements,
/// `rho_{(j1 n1),(j2 n2)} = sum a_{i1 a1} a*_{i2 a2} <j1 n1|U|i1 a1> <i2 a2|U^dagger|j2 n2>`.
/// Kept as an independent route to cross-check [`rho_full`].
pub fn rho_full_index_sum(sys: &BipartiteSystem, init: &PureState, t: f64) -> Result<ComplexMatrix> {
    init.check_compatible(sys)?;
    let u = crate::linalg::matexp_hermitian_generator(&sys.total_hamiltonian(), t)?;
    let (dim_a, dim_e) = (sys.dim_a(), sys.dim_e());
    let n = dim_a * dim_e;
    let idx = |i: usize, alpha: usize| i * dim_e + alpha;
    let mut rho = ComplexMatrix::zeros(n, n);
    for j1 in 0..dim_a {
        for n1 in 0..dim_e {
            for j2 in 0..dim_a {
                for n2 in 0..dim_e {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for i1 in 0..dim_a {
                        for a1 in 0..dim_e {
                            let left = init.amplitude(i1, a1) * u[(idx(j1, n1), idx(i1, a1))];
                            if left == Complex64::new(0.0, 0.0) {
                                continue;
                            }
                            for i2 in 0..dim_a {
                                for a2 in 0..dim_e {
                                    acc += left
                                        * init.amplitude(i2, a2).conj()
                                        * u[(idx(j2, n2), idx(i2, a2))].conj();
                                }
                            }
                        }
                    }
                    rho[(idx(j1, n1), idx(j2, n2))] = acc;
                }
            }
        }
    }
    Ok(rho)
}

/// `rho_A(t) = Tr_E rho_AE(t)`.
pub fn rho_reduced(sys: &BipartiteSystem, init: &PureState, t: f64) -> Result<DensityMatrix> {
    Evolution::new(sys, init)?.rho_reduced(t)
}

/// One reduced density matrix per grid point, in grid order.
pub fn sweep(sys: &BipartiteSystem, init: &PureState, grid: &TimeGrid) -> Result<Vec<DensityMatrix>> {
    Evolution::new(sys, init)?.sweep(grid)
}

/// Closed-form spectrum of a 2x2 density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelSpectrum {
    pub sigma11: f64,
    pub sigma22: f64,
    pub delta: f64,
}

/// `sigma = (rho11 + rho22 -/+ sqrt(Delta)) / 2` with
/// `Delta = (rho11 - rho22)^2 + 4 rho12 rho21`.
pub fn two_level_spectrum(rho: &ComplexMatrix) -> Result<TwoLevelSpectrum> {
    if rho.rows() != 2 || rho.cols() != 2 {
        return Err(Error::Dimension(format!(
            "two-level spectrum needs a 2x2 matrix, got {}x{}",
            rho.rows(),
            rho.cols()
        )));
    }
    let (r11, r22) = (rho[(0, 0)].re, rho[(1, 1)].re);
    let raw = (r11 - r22).powi(2) + 4.0 * (rho[(0, 1)] * rho[(1, 0)]).re;
    let delta = if raw < 0.0 {
        if raw < -DISCRIMINANT_TOL {
            return Err(Error::NegativeDiscriminant(raw));
        }
        0.0
    } else {
        raw
    };
    let root = delta.sqrt();
    Ok(TwoLevelSpectrum {
        sigma11: (r11 + r22 - root) / 2.0,
        sigma22: (r11 + r22 + root) / 2.0,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eigenvalues, ONE, ZERO};
    use crate::random::{random_density_matrix, random_product_state, random_system, seeded_rng};

    #[test]
    fn start_is_the_initial_projector() {
        let mut rng = seeded_rng(1);
        let sys = random_system(&mut rng, 2, 3);
        let init = random_product_state(&mut rng, 2, 3);
        let rho = rho_full(&sys, &init, 0.0).unwrap();
        assert!(rho.matrix().max_abs_diff(&init.projector()) < 1e-15);
    }

    #[test]
    fn index_sum_matches_matrix_product() {
        let mut rng = seeded_rng(7);
        let sys = random_system(&mut rng, 2, 2);
        let init = PureState::normalized(
            2,
            2,
            crate::random::random_unit_vector(&mut rng, 4),
        )
        .unwrap();
        let t = 0.7;
        let u = crate::linalg::matexp_hermitian_generator(&sys.total_hamiltonian(), t).unwrap();
        let oracle = &(&u * &init.projector()) * &u.adjoint();
        let literal = rho_full_index_sum(&sys, &init, t).unwrap();
        assert!(literal.max_abs_diff(&oracle) < 1e-12);
        assert!(rho_full(&sys, &init, t).unwrap().matrix().max_abs_diff(&oracle) < 1e-12);
    }

    #[test]
    fn uncoupled_evolution_stays_product() {
        let mut rng = seeded_rng(2);
        let sys = random_system(&mut rng, 2, 3).uncoupled();
        let init = random_product_state(&mut rng, 2, 3);
        let evo = Evolution::new(&sys, &init).unwrap();
        for t in [0.3, 1.0, 4.2] {
            assert!((evo.rho_reduced(t).unwrap().purity() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn product_start_reduces_to_pure_system_state() {
        let c = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        let e = [ZERO, ONE, ZERO];
        let init = PureState::product(&c, &e).unwrap();
        let mut rng = seeded_rng(3);
        let sys = random_system(&mut rng, 2, 3);
        let rho = rho_reduced(&sys, &init, 0.0).unwrap();
        assert!(rho.matrix().max_abs_diff(&ComplexMatrix::outer(&c, &c)) < 1e-15);
    }

    #[test]
    fn single_env_level_matches_restricted_propagator() {
        // With one environment level the reduced state is U_A rho_A(0) U_A^dagger
        // where U_A is generated by H_A + H_AE + eta.
        let mut rng = seeded_rng(4);
        let sys = random_system(&mut rng, 3, 1);
        let init = random_product_state(&mut rng, 3, 1);
        let t = 1.3;
        let u = crate::linalg::matexp_hermitian_generator(&sys.total_hamiltonian(), t).unwrap();
        let c: Vec<Complex64> = (0..3).map(|i| init.amplitude(i, 0)).collect();
        let expected = ComplexMatrix::from_fn(3, 3, |j1, j2| {
            let mut acc = ZERO;
            for i1 in 0..3 {
                for i2 in 0..3 {
                    acc += c[i1] * c[i2].conj() * u[(j1, i1)] * u[(j2, i2)].conj();
                }
            }
            acc
        });
        let rho = rho_reduced(&sys, &init, t).unwrap();
        assert!(rho.matrix().max_abs_diff(&expected) < 1e-12);
        assert!((rho.purity() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn two_level_spectrum_examples() {
        let s = two_level_spectrum(&ComplexMatrix::from_real_diagonal(&[1.0, 0.0])).unwrap();
        assert_eq!((s.sigma11, s.sigma22), (0.0, 1.0));
        let s = two_level_spectrum(&ComplexMatrix::identity(2).scale_real(0.5)).unwrap();
        assert_eq!((s.sigma11, s.sigma22, s.delta), (0.5, 0.5, 0.0));
    }

    #[test]
    fn two_level_spectrum_matches_eigensolver() {
        let mut rng = seeded_rng(5);
        for _ in 0..50 {
            let rho = random_density_matrix(&mut rng, 2);
            let s = two_level_spectrum(&rho).unwrap();
            let eig = hermitian_eigenvalues(&rho).unwrap();
            assert!((s.sigma11 - eig[0]).abs() < 1e-12);
            assert!((s.sigma22 - eig[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn two_level_spectrum_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_row_major(2, 2, &[0.5, 1.0, -1.0, 0.5]).unwrap();
        assert!(matches!(two_level_spectrum(&m), Err(Error::NegativeDiscriminant(_))));
    }

    #[test]
    fn grid_validation() {
        assert!(matches!(TimeGrid::new(vec![]), Err(Error::InvalidGrid(_))));
        assert!(TimeGrid::new(vec![0.1, 0.2]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.2, 0.2]).is_err());
        assert!(TimeGrid::uniform(1.0, 1).is_err());
        assert!(TimeGrid::uniform(-1.0, 5).is_err());
        let g = TimeGrid::uniform(2.0, 5).unwrap();
        assert_eq!(g.times(), &[0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn single_point_sweep_is_initial_state() {
        let mut rng = seeded_rng(6);
        let sys = random_system(&mut rng, 2, 2);
        let init = random_product_state(&mut rng, 2, 2);
        let out = sweep(&sys, &init, &TimeGrid::new(vec![0.0]).unwrap()).unwrap();
        assert_eq!(out.len(), 1);
        let rho0 = partial_trace_env(&init.projector(), 2, 2).unwrap();
        assert!(out[0].matrix().max_abs_diff(&rho0) < 1e-13);
    }

    #[test]
    fn density_matrix_rejects_bad_trace() {
        let m = ComplexMatrix::identity(2);
        assert!(matches!(DensityMatrix::new(m, Dims::Single(2)), Err(Error::InvariantViolation(_))));
    }

    #[test]
    fn density_matrix_rejects_negative_eigenvalue() {
        let m = ComplexMatrix::from_real_diagonal(&[1.1, -0.1]);
        assert!(matches!(DensityMatrix::new(m, Dims::Single(2)), Err(Error::InvariantViolation(_))));
    }

    #[test]
    fn rejects_state_of_wrong_shape() {
        let mut rng = seeded_rng(8);
        let sys = random_system(&mut rng, 2, 2);
        let init = random_product_state(&mut rng, 2, 3);
        assert!(matches!(rho_full(&sys, &init, 0.1), Err(Error::Dimension(_))));
    }
}
