//! Zassenhaus product `e^{X+Y} = e^X e^Y e^{-c2/2!} e^{-c3/3!} e^{-c4/4!} ...`.
//!
//! `c2..c4` are the explicit nested-commutator combinations. Arbitrary orders
//! come from [`zassenhaus_terms`], which peels one factor at a time off the
//! power series of `e^{-sY} e^{-sX} e^{s(X+Y)}` in an auxiliary parameter `s`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{
    commutator, expm_general, matexp_hermitian_generator, operator_norm, ComplexMatrix, I,
};

/// Errors below this are treated as machine floor by the order scan.
pub const ERROR_FLOOR: f64 = 1e-14;

fn check_pair(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<()> {
    if !x.is_square() || x.rows() != y.rows() || x.cols() != y.cols() {
        return Err(Error::Dimension(format!(
            "Zassenhaus terms need equal square matrices, got {}x{} and {}x{}",
            x.rows(),
            x.cols(),
            y.rows(),
            y.cols()
        )));
    }
    Ok(())
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Closed-form `c_k(X, Y)` for `k` in `2..=4`; larger `k` falls through to
/// the iterative generator.
pub fn c_term(x: &ComplexMatrix, y: &ComplexMatrix, k: usize) -> Result<ComplexMatrix> {
    check_pair(x, y)?;
    let xy = commutator(x, y);
    match k {
        0 | 1 => Err(Error::InvalidParameter(format!("c_{k} is not defined; orders start at 2"))),
        2 => Ok(xy),
        3 => {
            let xyy = commutator(&xy, y);
            let xyx = commutator(&xy, x);
            Ok(&xyy.scale_real(2.0) + &xyx)
        }
        4 => {
            let xyy = commutator(&xy, y);
            let xyx = commutator(&xy, x);
            let xyyy = commutator(&xyy, y);
            let xyxy = commutator(&xyx, y);
            let xyxx = commutator(&xyx, x);
            Ok(&(&xyyy.scale_real(3.0) + &xyxy.scale_real(3.0)) + &xyxx)
        }
        _ => Ok(zassenhaus_terms(x, y, k)?.pop().expect("at least one term")),
    }
}

type Series = Vec<ComplexMatrix>;

fn series_mul(a: &Series, b: &Series) -> Series {
    let degree = a.len() - 1;
    let n = a[0].rows();
    (0..=degree)
        .map(|k| {
            let mut acc = ComplexMatrix::zeros(n, n);
            for i in 0..=k {
                acc += &(&a[i] * &b[k - i]);
            }
            acc
        })
        .collect()
}

/// Series of `exp(s^power A)` truncated at `degree`.
fn exp_monomial(a: &ComplexMatrix, power: usize, degree: usize) -> Series {
    let n = a.rows();
    let mut out = vec![ComplexMatrix::zeros(n, n); degree + 1];
    let mut term = ComplexMatrix::identity(n);
    let mut m = 0;
    while m * power <= degree {
        out[m * power] = term.clone();
        m += 1;
        term = (&term * a).scale_real(1.0 / m as f64);
    }
    out
}

/// `c_2 ..= c_max_order` generated order by order.
pub fn zassenhaus_terms(x: &ComplexMatrix, y: &ComplexMatrix, max_order: usize) -> Result<Vec<ComplexMatrix>> {
    check_pair(x, y)?;
    if max_order < 2 {
        return Ok(Vec::new());
    }
    let degree = max_order;
    let sum = x + y;
    let mut remainder = series_mul(
        &series_mul(&exp_monomial(&-y, 1, degree), &exp_monomial(&-x, 1, degree)),
        &exp_monomial(&sum, 1, degree),
    );
    let mut terms = Vec::with_capacity(max_order - 1);
    for k in 2..=max_order {
        // remainder = exp(s^k C_k) exp(s^{k+1} C_{k+1}) ..., so its first
        // non-trivial coefficient is C_k itself.
        let ck = remainder[k].clone();
        remainder = series_mul(&exp_monomial(&-&ck, k, degree), &remainder);
        terms.push(ck.scale_real(-factorial(k)));
    }
    Ok(terms)
}

#[derive(Debug, Clone)]
pub struct ZassenhausExpansion {
    pub order: usize,
    /// `c_2 ..= c_order`.
    pub terms: Vec<ComplexMatrix>,
    pub product: ComplexMatrix,
}

/// `exp(A)`, through the unitary spectral route when `A` is anti-Hermitian.
fn exp_factor(a: &ComplexMatrix) -> ComplexMatrix {
    let h = a.scale(I);
    if h.hermitian_asymmetry() <= 1e-12 * h.max_abs().max(1.0) {
        let h = (&h + &h.adjoint()).scale_real(0.5);
        matexp_hermitian_generator(&h, 1.0).expect("Hermitian by check")
    } else {
        expm_general(a)
    }
}

/// Ordered product `e^X e^Y prod_{k=2}^{order} e^{-c_k / k!}`; order 1 is the
/// plain splitting `e^X e^Y`.
pub fn truncated_exponential(x: &ComplexMatrix, y: &ComplexMatrix, order: usize) -> Result<ZassenhausExpansion> {
    check_pair(x, y)?;
    if order == 0 {
        return Err(Error::InvalidParameter("Zassenhaus order must be at least 1".into()));
    }
    let terms: Vec<ComplexMatrix> = if order <= 4 {
        (2..=order).map(|k| c_term(x, y, k)).collect::<Result<_>>()?
    } else {
        zassenhaus_terms(x, y, order)?
    };
    let mut product = &exp_factor(x) * &exp_factor(y);
    for (offset, ck) in terms.iter().enumerate() {
        let k = offset + 2;
        product = &product * &exp_factor(&ck.scale_real(-1.0 / factorial(k)));
    }
    Ok(ZassenhausExpansion { order, terms, product })
}

#[derive(Debug, Clone)]
pub struct OrderScan {
    pub order: usize,
    pub t_values: Vec<f64>,
    /// Spectral-norm error of the truncated product at each `t`.
    pub errors: Vec<f64>,
    /// Whether each point entered the regression.
    pub used: Vec<bool>,
    /// Least-squares slope of `ln error` against `ln t`.
    pub slope: Option<f64>,
    /// Every error sits at the floating-point floor (e.g. commuting generators).
    pub degenerate: bool,
}

/// Error of the order-`order` product for `X = -i t A`, `Y = -i t B` against
/// the dense exponential, with the log-log slope over `t_values`.
pub fn truncation_order_scan(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    order: usize,
    t_values: &[f64],
) -> Result<OrderScan> {
    check_pair(a, b)?;
    if t_values.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "order scan needs at least 4 times, got {}",
            t_values.len()
        )));
    }
    if t_values.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidParameter("scan times must be positive".into()));
    }
    let total = a + b;
    let errors: Vec<f64> = t_values
        .par_iter()
        .map(|&t| -> Result<f64> {
            let factor = Complex64::new(0.0, -t);
            let approx = truncated_exponential(&a.scale(factor), &b.scale(factor), order)?;
            let exact = matexp_hermitian_generator(&total, t)?;
            Ok(operator_norm(&(&approx.product - &exact)))
        })
        .collect::<Result<_>>()?;
    let used: Vec<bool> = errors.iter().map(|&e| e >= ERROR_FLOOR).collect();
    let points: Vec<(f64, f64)> = t_values
        .iter()
        .zip(&errors)
        .zip(&used)
        .filter(|(_, &u)| u)
        .map(|((&t, &e), _)| (t.ln(), e.ln()))
        .collect();
    let degenerate = points.is_empty();
    let slope = match points.len() {
        0 => None,
        n if n < 3 => return Err(Error::TooFewPoints(n)),
        _ => Some(least_squares_slope(&points)),
    };
    Ok(OrderScan { order, t_values: t_values.to_vec(), errors, used, slope, degenerate })
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// `n` log-spaced times on `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1).max(1) as f64).exp())
        .collect()
}
