//! Spin coupled to a truncated boson mode,
//! `H = omega J_z + beta b^dagger b + eta (b^dagger + b) J^2`.
//!
//! Besides the exact model this module carries the closed-form bosonic
//! functions `alpha`, `zeta`, `Psi`, the polynomials `E_{n,n'}`, the
//! environment factor `Omega_E` and the entropy/rate expressions built from
//! them, plus [`cross_check`] which compares all of it against brute-force
//! evolution of the truncated model.

use std::f64::consts::LN_2;
use std::fmt;

use num_complex::Complex64;

use crate::dynamics::{Evolution, TimeGrid};
use crate::entropy::{entanglement_rate_at_zero, entropy_from_spectrum};
use crate::error::{Error, Result};
use crate::linalg::{kron, ComplexMatrix, ZERO};
use crate::model::{BipartiteSystem, PureState};

/// Largest boson cutoff; factorials up to 20! are exact in `u64`.
pub const MAX_NMAX: usize = 20;

/// Below this `|gamma(j)|` the series branch of `zeta` is used.
pub const ZETA_SERIES_THRESHOLD: f64 = 1e-8;

/// Default boson cutoff for brute-force oracle runs.
pub const DEFAULT_ORACLE_NMAX: usize = 8;

/// Largest entropy drift tolerated when the oracle cutoff is raised by 2.
pub const TRUNCATION_TOL: f64 = 1e-6;

/// Tolerance of the cross-check verdict.
pub const CROSS_CHECK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinBosonParams {
    pub omega: f64,
    pub beta: f64,
    pub eta: f64,
    /// Twice the spin, so `j = two_j / 2`.
    pub two_j: u32,
    pub nmax: usize,
}

impl SpinBosonParams {
    pub fn new(omega: f64, beta: f64, eta: f64, two_j: u32, nmax: usize) -> Result<Self> {
        if !(omega.is_finite() && beta.is_finite() && eta.is_finite()) {
            return Err(Error::InvalidParameter("omega, beta and eta must be finite".into()));
        }
        if beta == 0.0 {
            return Err(Error::InvalidParameter("beta must be non-zero".into()));
        }
        if two_j == 0 {
            return Err(Error::InvalidParameter("spin must be at least 1/2".into()));
        }
        if nmax == 0 {
            return Err(Error::InvalidParameter("boson cutoff must be at least 1".into()));
        }
        if nmax > MAX_NMAX {
            return Err(Error::InvalidParameter(format!(
                "boson cutoff {nmax} exceeds {MAX_NMAX} (factorial overflow)"
            )));
        }
        Ok(Self { omega, beta, eta, two_j, nmax })
    }

    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn dim_a(&self) -> usize {
        self.two_j as usize + 1
    }

    pub fn dim_e(&self) -> usize {
        self.nmax + 1
    }

    /// `gamma(j) = eta j (j + 1)`.
    pub fn gamma(&self) -> f64 {
        let j = self.j();
        self.eta * j * (j + 1.0)
    }

    pub fn with_nmax(&self, nmax: usize) -> Result<Self> {
        Self::new(self.omega, self.beta, self.eta, self.two_j, nmax)
    }

    fn require_half_spin(&self, what: &str) -> Result<()> {
        if self.two_j != 1 {
            return Err(Error::InvalidParameter(format!("{what} is only available for j = 1/2")));
        }
        Ok(())
    }
}

/// `b^dagger + b` on occupations `0..=nmax`.
pub fn boson_quadrature(nmax: usize) -> ComplexMatrix {
    let n = nmax + 1;
    ComplexMatrix::from_fn(n, n, |r, c| {
        if r + 1 == c || c + 1 == r {
            Complex64::new((r.max(c) as f64).sqrt(), 0.0)
        } else {
            ZERO
        }
    })
}

/// `m` values of the spin basis, ordered `j, j - 1, ..., -j`.
pub fn magnetic_numbers(two_j: u32) -> Vec<f64> {
    (0..=two_j).map(|k| (two_j as f64 - 2.0 * k as f64) / 2.0).collect()
}

pub fn build_model(p: &SpinBosonParams) -> BipartiteSystem {
    let j = p.j();
    let h_a = ComplexMatrix::from_real_diagonal(
        &magnetic_numbers(p.two_j).iter().map(|m| p.omega * m).collect::<Vec<_>>(),
    );
    let h_e = ComplexMatrix::from_real_diagonal(
        &(0..=p.nmax).map(|n| p.beta * n as f64).collect::<Vec<_>>(),
    );
    let j_squared = ComplexMatrix::identity(p.dim_a()).scale_real(j * (j + 1.0));
    let h_ae = kron(&j_squared, &boson_quadrature(p.nmax)).scale_real(p.eta);
    BipartiteSystem::new(p.dim_a(), p.dim_e(), h_a, h_e, h_ae).expect("blocks are Hermitian")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BosonicClosedForm {
    pub alpha: f64,
    pub zeta: f64,
    pub psi: f64,
}

fn zeta_of(beta: f64, gamma: f64, t: f64) -> f64 {
    if gamma.abs() < ZETA_SERIES_THRESHOLD {
        // beta (1 - cos(gamma t)) / gamma ~ beta gamma t^2 / 2 (1 - (gamma t)^2 / 12)
        let x = gamma * t;
        beta * gamma * t * t / 2.0 * (1.0 - x * x / 12.0)
    } else {
        let half = (gamma * t / 2.0).sin();
        beta * 2.0 * half * half / gamma
    }
}

/// `alpha = gamma sin(beta t) / beta`, `zeta = beta (1 - cos(gamma t)) / gamma`,
/// `Psi = -(alpha^2 + zeta^2) / 2`.
pub fn closed_form_functions(p: &SpinBosonParams, t: f64) -> BosonicClosedForm {
    let gamma = p.gamma();
    let alpha = gamma * (p.beta * t).sin() / p.beta;
    let zeta = zeta_of(p.beta, gamma, t);
    BosonicClosedForm { alpha, zeta, psi: -0.5 * (alpha * alpha + zeta * zeta) }
}

fn factorials() -> [f64; MAX_NMAX + 1] {
    let mut out = [1.0; MAX_NMAX + 1];
    let mut acc: u64 = 1;
    for (k, slot) in out.iter_mut().enumerate().skip(1) {
        acc *= k as u64;
        *slot = acc as f64;
    }
    out
}

fn check_index(p: &SpinBosonParams, n: usize) -> Result<()> {
    if n > p.nmax {
        return Err(Error::InvalidParameter(format!(
            "boson index {n} outside truncation 0..={}",
            p.nmax
        )));
    }
    Ok(())
}

/// `i^k` for integer `k`.
fn i_pow(k: i64) -> Complex64 {
    match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn sign(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Bosonic polynomial `E_{n,n'}(j, t)`.
///
/// The inner index `n3` is bounded by the boson cutoff; the remaining bounds
/// are `n2 <= min(n, n3)` and `n4 <= min(n3, n')`. Zero exponents evaluate to
/// one, including `0^0`.
pub fn e_polynomial(p: &SpinBosonParams, t: f64, n: usize, n_prime: usize) -> Result<Complex64> {
    check_index(p, n)?;
    check_index(p, n_prime)?;
    let f = factorials();
    let BosonicClosedForm { alpha, zeta, psi } = closed_form_functions(p, t);
    let mut sum = ZERO;
    for n3 in 0..=p.nmax {
        for n2 in 0..=n.min(n3) {
            for n4 in 0..=n3.min(n_prime) {
                let phase = i_pow(-((n + n3) as i64)) * sign((n_prime + n2) as i64 - n4 as i64);
                let num = f[n] * f[n_prime] * f[n3] * f[n3]
                    * alpha.powi((n + n3 - 2 * n2) as i32)
                    * zeta.powi((n3 + n_prime - 2 * n4) as i32);
                let den = f[n - n2] * f[n3 - n4] * f[n3 - n2] * f[n_prime - n4];
                sum += phase * (num / den);
            }
        }
    }
    Ok(Complex64::from_polar(1.0, -p.beta * t) * sum * psi.exp())
}

/// Conjugate-side polynomial `E*_{n'',n}(j, t)`, evaluated from its own
/// expansion rather than by conjugating [`e_polynomial`].
pub fn e_polynomial_conj(p: &SpinBosonParams, t: f64, n_second: usize, n: usize) -> Result<Complex64> {
    check_index(p, n_second)?;
    check_index(p, n)?;
    let f = factorials();
    let BosonicClosedForm { alpha, zeta, psi } = closed_form_functions(p, t);
    let mut sum = ZERO;
    for n3 in 0..=p.nmax {
        for n2 in 0..=n_second.min(n3) {
            for n4 in 0..=n3.min(n) {
                let phase = i_pow((n_second + n3) as i64) * sign((n + n2) as i64 - n4 as i64);
                let num = f[n_second] * f[n] * f[n3] * f[n3]
                    * alpha.powi((n_second + n3 - 2 * n2) as i32)
                    * zeta.powi((n + n3 - 2 * n4) as i32);
                let den = f[n_second - n2] * f[n3 - n2] * f[n3 - n4] * f[n - n4];
                sum += phase * (num / den);
            }
        }
    }
    Ok(Complex64::from_polar(1.0, p.beta * t) * sum * psi.exp())
}

/// `Omega_E = sum_n 1/n! sum_{n',n''} E_{n,n'} E*_{n'',n} / sqrt(n'! n''!)`.
pub fn omega_e_sum(p: &SpinBosonParams, t: f64) -> Complex64 {
    let f = factorials();
    let mut total = ZERO;
    for n in 0..=p.nmax {
        let mut inner = ZERO;
        for n1 in 0..=p.nmax {
            let e = e_polynomial(p, t, n, n1).expect("indices within cutoff");
            for n2 in 0..=p.nmax {
                let e_star = e_polynomial_conj(p, t, n2, n).expect("indices within cutoff");
                inner += e * e_star / (f[n1] * f[n2]).sqrt();
            }
        }
        total += inner / f[n];
    }
    total
}

/// `Pi(t)` of the single-excitation environment.
pub fn pi_factor(f: &BosonicClosedForm) -> f64 {
    let (a, z) = (f.alpha, f.zeta);
    2.0 * (1.0 + a * (z * z + z - 1.0) + 2.0 * a * a * (1.0 - z))
        + z * (z * z * z + z * z + z - 1.0)
        + a.powi(4) * (z.powi(4) - 1.0)
}

/// `Omega_E = Pi(t) exp(2 Psi(t))` for the cutoff `N = 1`.
pub fn omega_e_explicit(p: &SpinBosonParams, t: f64) -> f64 {
    let f = closed_form_functions(p, t);
    pi_factor(&f) * (2.0 * f.psi).exp()
}

/// The closed-form environment factor used for the entropy: the explicit
/// `Pi exp(2 Psi)` expression at cutoff 1, the real part of the general sum
/// otherwise.
pub fn closed_form_omega(p: &SpinBosonParams, t: f64) -> f64 {
    if p.nmax == 1 {
        omega_e_explicit(p, t)
    } else {
        omega_e_sum(p, t).re
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormEntropy {
    pub omega_e: f64,
    /// `-Omega ln Omega`; `None` when `Omega <= 0`.
    pub s_raw: Option<f64>,
    /// `Omega(t) / Omega(0)`.
    pub coherence: f64,
    /// Entropy of the spectrum `(1 +/- |coherence|) / 2`, with `|coherence|`
    /// clipped to 1.
    pub s_normalized: f64,
    pub coherence_clipped: bool,
}

/// Literal and normalised closed-form entropies for `j = 1/2`.
pub fn closed_form_entropy(p: &SpinBosonParams, t: f64) -> Result<ClosedFormEntropy> {
    p.require_half_spin("the closed-form entropy")?;
    let omega_e = closed_form_omega(p, t);
    let omega_0 = closed_form_omega(p, 0.0);
    let s_raw = (omega_e > 0.0).then(|| -omega_e * omega_e.ln());
    let coherence = omega_e / omega_0;
    let modulus = coherence.abs();
    let clipped = modulus.min(1.0);
    let s_normalized = entropy_from_spectrum(&[(1.0 - clipped) / 2.0, (1.0 + clipped) / 2.0]);
    Ok(ClosedFormEntropy { omega_e, s_raw, coherence, s_normalized, coherence_clipped: modulus > 1.0 })
}

/// `dS/dt|_0 = -gamma (ln 2 + 1)` for `j = 1/2`.
pub fn closed_form_rate(p: &SpinBosonParams) -> Result<f64> {
    p.require_half_spin("the closed-form rate")?;
    Ok(-p.gamma() * (LN_2 + 1.0))
}

/// The same rate in the form `-(3/4)(1 + 1/ln 2) eta ln 2`.
pub fn closed_form_rate_bound_form(p: &SpinBosonParams) -> Result<f64> {
    p.require_half_spin("the closed-form rate")?;
    Ok(-0.75 * (1.0 + 1.0 / LN_2) * p.eta * LN_2)
}

/// Spin in the uniform superposition of all `m`, bosons in the vacuum.
pub fn coherent_product_start(p: &SpinBosonParams) -> PureState {
    let amp = Complex64::new(1.0 / (p.dim_a() as f64).sqrt(), 0.0);
    let mut vacuum = vec![ZERO; p.dim_e()];
    vacuum[0] = Complex64::new(1.0, 0.0);
    PureState::product(&vec![amp; p.dim_a()], &vacuum).expect("normalised by construction")
}

/// Purification of the maximally mixed spin: `sum_k |m_k>|n = k> / sqrt(2j+1)`.
pub fn mixed_spin_start(p: &SpinBosonParams) -> Result<PureState> {
    if p.dim_e() < p.dim_a() {
        return Err(Error::InvalidParameter(format!(
            "purifying a spin-{} needs a cutoff of at least {}",
            p.j(),
            p.dim_a() - 1
        )));
    }
    let amp = Complex64::new(1.0 / (p.dim_a() as f64).sqrt(), 0.0);
    let mut amplitudes = vec![ZERO; p.dim_a() * p.dim_e()];
    for k in 0..p.dim_a() {
        amplitudes[k * p.dim_e() + k] = amp;
    }
    PureState::new(p.dim_a(), p.dim_e(), amplitudes)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CrossCheckVerdict {
    Match,
    ConstantFactorMismatch { factor: f64 },
    Mismatch,
}

impl CrossCheckVerdict {
    pub fn label(self) -> &'static str {
        match self {
            CrossCheckVerdict::Match => "match",
            CrossCheckVerdict::ConstantFactorMismatch { .. } => "constant-factor-mismatch",
            CrossCheckVerdict::Mismatch => "mismatch",
        }
    }
}

impl fmt::Display for CrossCheckVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CrossCheckVerdict::ConstantFactorMismatch { factor } => {
                write!(f, "{} (factor {factor:.12})", self.label())
            }
            _ => f.write_str(self.label()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossCheckRow {
    pub t: f64,
    /// Closed-form factor used for the entropy.
    pub omega_closed: f64,
    /// General sum form, which may be complex.
    pub omega_sum: Complex64,
    /// `omega_closed(t) / omega_closed(0)`.
    pub omega_normalized: f64,
    /// Brute-force coherence factor `rho_A^{m1 m2}(t) / rho_0^{m1 m2}(t)` for
    /// the product start, first two `m` values.
    pub oracle_factor: Complex64,
    /// `omega_closed / |oracle_factor|`.
    pub ratio_raw: f64,
    /// `omega_normalized / |oracle_factor|`.
    pub ratio_normalized: f64,
    pub s_raw: Option<f64>,
    pub s_normalized: Option<f64>,
    /// Brute-force entropy from the mixed-spin start.
    pub s_oracle: f64,
    /// Brute-force entropy from the product start.
    pub s_oracle_product: f64,
}

#[derive(Debug, Clone)]
pub struct CrossCheckReport {
    pub params: SpinBosonParams,
    pub oracle_nmax: usize,
    pub truncation_drift: f64,
    pub rows: Vec<CrossCheckRow>,
    pub verdict: CrossCheckVerdict,
    pub closed_rate: Option<f64>,
    pub oracle_rate: f64,
    pub oracle_rate_converged: bool,
}

impl CrossCheckReport {
    pub fn row_at_zero(&self) -> &CrossCheckRow {
        &self.rows[0]
    }
}

struct OracleRun {
    product: Evolution,
    mixed: Evolution,
}

impl OracleRun {
    fn new(p: &SpinBosonParams) -> Result<Self> {
        let sys = build_model(p);
        Ok(Self {
            product: Evolution::new(&sys, &coherent_product_start(p))?,
            mixed: Evolution::new(&sys, &mixed_spin_start(p)?)?,
        })
    }
}

/// Tabulates the closed forms against brute-force evolution of the model
/// truncated at `oracle_nmax` bosons. Fails when raising the oracle cutoff by
/// two moves either oracle entropy by more than [`TRUNCATION_TOL`].
pub fn cross_check(p: &SpinBosonParams, grid: &TimeGrid, oracle_nmax: usize) -> Result<CrossCheckReport> {
    let oracle_params = p.with_nmax(oracle_nmax)?;
    let oracle = OracleRun::new(&oracle_params)?;
    let refined = OracleRun::new(&oracle_params.with_nmax(oracle_nmax + 2)?)?;

    let mut drift = 0.0_f64;
    for &t in grid.times() {
        drift = drift
            .max((oracle.mixed.entropy_raw(t)? - refined.mixed.entropy_raw(t)?).abs())
            .max((oracle.product.entropy_raw(t)? - refined.product.entropy_raw(t)?).abs());
    }
    if drift >= TRUNCATION_TOL {
        return Err(Error::TruncationNotConverged { drift });
    }

    let magnetic = magnetic_numbers(p.two_j);
    let omega_0 = closed_form_omega(p, 0.0);
    let mut rows = Vec::with_capacity(grid.len());
    for &t in grid.times() {
        let rho = oracle.product.rho_reduced(t)?;
        let rho_0 = Complex64::from_polar(1.0 / p.dim_a() as f64, -p.omega * (magnetic[0] - magnetic[1]) * t);
        let oracle_factor = rho.matrix()[(0, 1)] / rho_0;
        let omega_closed = closed_form_omega(p, t);
        let omega_normalized = omega_closed / omega_0;
        let entropy = closed_form_entropy(p, t).ok();
        rows.push(CrossCheckRow {
            t,
            omega_closed,
            omega_sum: omega_e_sum(p, t),
            omega_normalized,
            oracle_factor,
            ratio_raw: omega_closed / oracle_factor.norm(),
            ratio_normalized: omega_normalized / oracle_factor.norm(),
            s_raw: entropy.and_then(|e| e.s_raw),
            s_normalized: entropy.map(|e| e.s_normalized),
            s_oracle: oracle.mixed.rho_reduced(t)?.entropy(),
            s_oracle_product: rho.entropy(),
        });
    }

    let first = rows[0].ratio_raw;
    let verdict = if rows.iter().all(|r| (r.ratio_raw - 1.0).abs() <= CROSS_CHECK_TOL) {
        CrossCheckVerdict::Match
    } else if rows
        .iter()
        .all(|r| (r.ratio_raw - first).abs() <= CROSS_CHECK_TOL * first.abs().max(1.0))
    {
        CrossCheckVerdict::ConstantFactorMismatch { factor: first }
    } else {
        CrossCheckVerdict::Mismatch
    };

    let oracle_rate = entanglement_rate_at_zero(oracle.product.system(), oracle.product.state())?;
    Ok(CrossCheckReport {
        params: *p,
        oracle_nmax,
        truncation_drift: drift,
        rows,
        verdict,
        closed_rate: closed_form_rate(p).ok(),
        oracle_rate: oracle_rate.value,
        oracle_rate_converged: oracle_rate.converged,
    })
}
