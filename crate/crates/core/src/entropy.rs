//! Von Neumann entropy of the reduced state, its growth rate at the initial
//! time, and the area-law bound `dS/dt <= c ||H_AE|| ln(min(dA, dE))`.

use rayon::prelude::*;

use crate::dynamics::{two_level_spectrum, Evolution, TimeGrid, TwoLevelSpectrum};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, ComplexMatrix};
use crate::model::{BipartiteSystem, PureState};

/// Trace tolerance accepted by [`von_neumann_entropy`].
pub const ENTROPY_TRACE_TOL: f64 = 1e-8;

/// Base differentiation step, divided by `max(1, ||H||)`.
pub const RATE_STEP: f64 = 1e-4;

/// Maximum disagreement of the `h` and `h/2` stencils before the estimate is
/// flagged as non-convergent.
pub const RATE_CONVERGENCE_TOL: f64 = 1e-4;

/// Rates below this magnitude count as zero when `ln(delta) = 0`.
pub const ZERO_RATE_TOL: f64 = 1e-8;

/// Largest `|S(t) - S(0)|` still considered constant.
pub const CONSTANT_ENTROPY_TOL: f64 = 1e-8;

pub const DEFAULT_C: f64 = 2.0;

/// `-sum p ln p` with eigenvalues clipped to `[0, 1]`.
pub fn entropy_from_spectrum(eigenvalues: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .map(|&p| p.clamp(0.0, 1.0))
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}

/// Entropy in nats of a Hermitian, unit-trace matrix.
pub fn von_neumann_entropy(rho: &ComplexMatrix) -> Result<f64> {
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > ENTROPY_TRACE_TOL || tr.im.abs() > ENTROPY_TRACE_TOL {
        return Err(Error::InvariantViolation(format!("entropy of a matrix with trace {tr}")));
    }
    Ok(entropy_from_spectrum(&hermitian_eigenvalues(rho)?))
}

/// Entanglement entropy of the system factor at time `t`.
pub fn entropy_at(sys: &BipartiteSystem, init: &PureState, t: f64) -> Result<f64> {
    Evolution::new(sys, init)?.entropy_raw(t)
}

/// Richardson-extrapolated central difference of `S_A` at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub value: f64,
    pub error_estimate: f64,
    pub step: f64,
    /// Central difference with step `h`.
    pub coarse: f64,
    /// Central difference with step `h / 2`.
    pub fine: f64,
    pub converged: bool,
}

/// Derivative of `S_A(t)` at `t = 0` by central differences at `h` and `h/2`
/// combined with one Richardson step. Non-convergence is reported through
/// [`RateEstimate::converged`].
pub fn entanglement_rate_at_zero(sys: &BipartiteSystem, init: &PureState) -> Result<RateEstimate> {
    let evo = Evolution::new(sys, init)?;
    rate_at_zero_of(|t| evo.entropy_raw(t), evo.hamiltonian_norm())
}

pub(crate) fn rate_at_zero_of(
    entropy: impl Fn(f64) -> Result<f64>,
    generator_norm: f64,
) -> Result<RateEstimate> {
    let h = RATE_STEP / generator_norm.max(1.0);
    let central = |step: f64| -> Result<f64> { Ok((entropy(step)? - entropy(-step)?) / (2.0 * step)) };
    let coarse = central(h)?;
    let fine = central(h / 2.0)?;
    let value = (4.0 * fine - coarse) / 3.0;
    Ok(RateEstimate {
        value,
        error_estimate: (value - fine).abs(),
        step: h,
        coarse,
        fine,
        converged: (coarse - fine).abs() <= RATE_CONVERGENCE_TOL,
    })
}

/// `c ||H_AE|| ln(delta)`.
pub fn bound_rhs(c: f64, coupling_norm: f64, delta_dim: usize) -> f64 {
    c * coupling_norm * (delta_dim as f64).ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub rate: f64,
    pub coupling_norm: f64,
    pub delta_dim: usize,
    pub c: f64,
    pub bound_rhs: f64,
    /// `rate <= bound_rhs` as a signed inequality; when `ln(delta) = 0` this
    /// requires `|rate| <= 1e-8`.
    pub satisfied: bool,
    /// `|rate| <= bound_rhs`.
    pub satisfied_abs: bool,
    /// `rate / (||H_AE|| ln delta)`, undefined when the denominator vanishes.
    pub ratio: Option<f64>,
}

impl BoundReport {
    pub fn from_rate(rate: f64, coupling_norm: f64, delta_dim: usize, c: f64) -> Self {
        let log_delta = (delta_dim as f64).ln();
        let rhs = bound_rhs(c, coupling_norm, delta_dim);
        let (satisfied, satisfied_abs) = if log_delta > 0.0 {
            (rate <= rhs + ZERO_RATE_TOL, rate.abs() <= rhs + ZERO_RATE_TOL)
        } else {
            let zero = rate.abs() <= ZERO_RATE_TOL;
            (zero, zero)
        };
        let denom = coupling_norm * log_delta;
        let ratio = (denom > 0.0).then(|| rate / denom);
        Self { rate, coupling_norm, delta_dim, c, bound_rhs: rhs, satisfied, satisfied_abs, ratio }
    }
}

/// Measures the initial entanglement rate and compares it with the area-law
/// bound for constant `c`.
pub fn area_law_bound_report(
    sys: &BipartiteSystem,
    init: &PureState,
    c: f64,
) -> Result<(BoundReport, RateEstimate)> {
    let rate = entanglement_rate_at_zero(sys, init)?;
    let report = BoundReport::from_rate(rate.value, sys.coupling_norm(), sys.delta_dim(), c);
    Ok((report, rate))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstancyReport {
    pub max_deviation: f64,
    pub constant: bool,
}

/// `max_t |S_A(t) - S_A(0)|` over the grid.
pub fn constant_entropy_check(
    sys: &BipartiteSystem,
    init: &PureState,
    grid: &TimeGrid,
) -> Result<ConstancyReport> {
    let evo = Evolution::new(sys, init)?;
    let s0 = evo.entropy_raw(0.0)?;
    let deviations: Vec<f64> = grid
        .times()
        .par_iter()
        .map(|&t| evo.entropy_raw(t).map(|s| (s - s0).abs()))
        .collect::<Result<_>>()?;
    let max_deviation = deviations.into_iter().fold(0.0, f64::max);
    Ok(ConstancyReport { max_deviation, constant: max_deviation <= CONSTANT_ENTROPY_TOL })
}

/// Entropy trace over a grid together with the bound data at `t = 0`.
#[derive(Debug, Clone)]
pub struct EntropyTrace {
    pub times: Vec<f64>,
    /// Nats.
    pub entropy: Vec<f64>,
    pub purity: Vec<f64>,
    /// Closed-form two-level spectrum, present when `dim_A = 2`.
    pub spectrum: Option<Vec<TwoLevelSpectrum>>,
    pub rate_at_zero: RateEstimate,
    pub bound: BoundReport,
    pub c_constant: f64,
    pub delta_dim: usize,
}

/// Full trace of `S_A(t)`; every reduced state is checked against the
/// density-matrix invariants.
pub fn entropy_trace(
    sys: &BipartiteSystem,
    init: &PureState,
    grid: &TimeGrid,
    c: f64,
) -> Result<EntropyTrace> {
    let evo = Evolution::new(sys, init)?;
    let states = evo.sweep(grid)?;
    let entropy = states.iter().map(|rho| rho.entropy()).collect();
    let purity = states.iter().map(|rho| rho.purity()).collect();
    let spectrum = if sys.dim_a() == 2 {
        Some(states.iter().map(|rho| two_level_spectrum(rho.matrix())).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };
    let rate = rate_at_zero_of(|t| evo.entropy_raw(t), evo.hamiltonian_norm())?;
    let bound = BoundReport::from_rate(rate.value, sys.coupling_norm(), sys.delta_dim(), c);
    Ok(EntropyTrace {
        times: grid.times().to_vec(),
        entropy,
        purity,
        spectrum,
        rate_at_zero: rate,
        bound,
        c_constant: c,
        delta_dim: sys.delta_dim(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::DensityMatrix;
    use crate::linalg::ComplexMatrix;
    use crate::random::{
        product_with_env_eigenstate, random_density_matrix, random_env_commuting_system,
        random_product_state, random_real_product_state, random_system, random_unit_vector,
        random_unitary, seeded_rng,
    };

    #[test]
    fn entropy_examples() {
        let psi = [num_complex::Complex64::new(0.6, 0.0), num_complex::Complex64::new(0.0, 0.8)];
        assert!(von_neumann_entropy(&ComplexMatrix::outer(&psi, &psi)).unwrap().abs() < 1e-14);
        let mixed = ComplexMatrix::identity(2).scale_real(0.5);
        assert!((von_neumann_entropy(&mixed).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        let d = ComplexMatrix::from_real_diagonal(&[0.25, 0.75]);
        // -(0.25 ln 0.25 + 0.75 ln 0.75)
        assert!((von_neumann_entropy(&d).unwrap() - 0.562_335_144_618_808_2).abs() < 1e-15);
    }

    #[test]
    fn entropy_rejects_bad_trace() {
        let m = ComplexMatrix::from_real_diagonal(&[0.5, 0.6]);
        assert!(matches!(von_neumann_entropy(&m), Err(Error::InvariantViolation(_))));
    }

    #[test]
    fn entropy_is_basis_invariant() {
        let mut rng = seeded_rng(10);
        for n in [2, 3, 5] {
            let rho = random_density_matrix(&mut rng, n);
            let w = random_unitary(&mut rng, n);
            let rotated = &(&w * &rho) * &w.adjoint();
            let rotated = (&rotated + &rotated.adjoint()).scale_real(0.5);
            let diff = von_neumann_entropy(&rho).unwrap() - von_neumann_entropy(&rotated).unwrap();
            assert!(diff.abs() < 1e-10);
        }
    }

    #[test]
    fn rate_vanishes_for_single_env_level() {
        let mut rng = seeded_rng(20);
        let sys = random_system(&mut rng, 3, 1);
        let init = random_product_state(&mut rng, 3, 1);
        let rate = entanglement_rate_at_zero(&sys, &init).unwrap();
        assert!(rate.value.abs() < 1e-8);
        assert!(rate.converged);
    }

    #[test]
    fn rate_vanishes_without_coupling() {
        let mut rng = seeded_rng(21);
        let sys = random_system(&mut rng, 2, 3).uncoupled();
        let init = random_product_state(&mut rng, 2, 3);
        assert!(entanglement_rate_at_zero(&sys, &init).unwrap().value.abs() < 1e-8);
    }

    #[test]
    fn rate_agrees_with_quadratic_fit() {
        let mut rng = seeded_rng(22);
        let sys = random_system(&mut rng, 2, 2);
        let init = random_product_state(&mut rng, 2, 2);
        let rate = entanglement_rate_at_zero(&sys, &init).unwrap();
        // least-squares quadratic through five symmetric samples; the slope
        // coefficient only depends on the odd moments
        let h = rate.step;
        let ts: Vec<f64> = (-2..=2).map(|k| k as f64 * h).collect();
        let s: Vec<f64> = ts.iter().map(|&t| entropy_at(&sys, &init, t).unwrap()).collect();
        let num: f64 = ts.iter().zip(&s).map(|(t, s)| t * s).sum();
        let den: f64 = ts.iter().map(|t| t * t).sum();
        let fit_slope = num / den;
        assert!((rate.value - fit_slope).abs() < 1e-5, "{} vs {}", rate.value, fit_slope);
    }

    #[test]
    fn rate_is_not_negative_at_a_pure_point() {
        let mut rng = seeded_rng(23);
        for _ in 0..5 {
            let sys = random_system(&mut rng, 2, 3);
            let init = random_real_product_state(&mut rng, 2, 3);
            assert!(entanglement_rate_at_zero(&sys, &init).unwrap().value >= -1e-8);
        }
    }

    #[test]
    fn degenerate_bound() {
        let mut rng = seeded_rng(24);
        let sys = random_system(&mut rng, 2, 1);
        let init = random_product_state(&mut rng, 2, 1);
        let (report, _) = area_law_bound_report(&sys, &init, DEFAULT_C).unwrap();
        assert_eq!(report.bound_rhs, 0.0);
        assert!(report.satisfied);
        assert!(report.ratio.is_none());
    }

    #[test]
    fn bound_without_coupling() {
        let mut rng = seeded_rng(25);
        let sys = random_system(&mut rng, 2, 2).uncoupled();
        let init = random_product_state(&mut rng, 2, 2);
        let (report, rate) = area_law_bound_report(&sys, &init, DEFAULT_C).unwrap();
        assert_eq!(report.bound_rhs, 0.0);
        assert!(rate.value.abs() < 1e-8);
        assert!(report.satisfied);
    }

    #[test]
    fn bound_report_from_negative_rate() {
        let r = BoundReport::from_rate(-1.2699, 0.75, 2, 2.0);
        assert!(r.satisfied);
        assert!(!r.satisfied_abs);
        assert!((r.bound_rhs - 1.5 * std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn constant_entropy_single_env_level() {
        let mut rng = seeded_rng(26);
        let sys = random_system(&mut rng, 2, 1);
        let init = random_product_state(&mut rng, 2, 1);
        let grid = TimeGrid::uniform(5.0, 50).unwrap();
        assert!(constant_entropy_check(&sys, &init, &grid).unwrap().constant);
    }

    #[test]
    fn constant_entropy_env_commuting_eigenstate_start() {
        let mut rng = seeded_rng(27);
        let sys = random_env_commuting_system(&mut rng, 2, 3);
        let c = random_unit_vector(&mut rng, 2);
        let init = product_with_env_eigenstate(&c, &sys, 1);
        let grid = TimeGrid::uniform(5.0, 50).unwrap();
        assert!(constant_entropy_check(&sys, &init, &grid).unwrap().constant);
    }

    #[test]
    fn entropy_grows_for_generic_coupling() {
        let mut rng = seeded_rng(28);
        let sys = random_system(&mut rng, 2, 3);
        let init = random_product_state(&mut rng, 2, 3);
        let grid = TimeGrid::uniform(5.0, 50).unwrap();
        let report = constant_entropy_check(&sys, &init, &grid).unwrap();
        assert!(!report.constant);
        assert!(report.max_deviation > 1e-3);
    }

    #[test]
    fn schmidt_symmetry_holds_along_the_trace() {
        let mut rng = seeded_rng(29);
        let sys = random_system(&mut rng, 2, 3);
        let init = random_product_state(&mut rng, 2, 3);
        let evo = Evolution::new(&sys, &init).unwrap();
        for t in [0.0, 0.4, 1.1, 3.0] {
            let full = evo.rho_full(t).unwrap();
            let s_a = full.reduce_env().unwrap().entropy();
            let s_e = full.reduce_sys().unwrap().entropy();
            assert!((s_a - s_e).abs() < 1e-9);
        }
    }

    #[test]
    fn trace_has_spectrum_for_qubits_only() {
        let mut rng = seeded_rng(30);
        let grid = TimeGrid::uniform(1.0, 5).unwrap();
        let sys = random_system(&mut rng, 2, 2);
        let init = random_product_state(&mut rng, 2, 2);
        let tr = entropy_trace(&sys, &init, &grid, DEFAULT_C).unwrap();
        assert_eq!(tr.spectrum.as_ref().unwrap().len(), 5);
        assert!(tr.entropy.iter().all(|&s| (-1e-9..=std::f64::consts::LN_2 + 1e-9).contains(&s)));
        let sys3 = random_system(&mut rng, 3, 2);
        let init3 = random_product_state(&mut rng, 3, 2);
        assert!(entropy_trace(&sys3, &init3, &grid, DEFAULT_C).unwrap().spectrum.is_none());
    }

    #[test]
    fn density_matrix_entropy_matches_free_function() {
        let mut rng = seeded_rng(31);
        let rho = random_density_matrix(&mut rng, 3);
        let dm = DensityMatrix::new(rho.clone(), crate::dynamics::Dims::Single(3)).unwrap();
        assert!((dm.entropy() - von_neumann_entropy(&rho).unwrap()).abs() < 1e-15);
    }
}
