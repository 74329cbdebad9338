//! Seeded random instances for ensembles and tests.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{hermitian_eig, kron, ComplexMatrix, ZERO};
use crate::model::{BipartiteSystem, PureState};

pub type ModelRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> ModelRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im)
}

/// Matrix with i.i.d. complex Gaussian entries.
pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> ComplexMatrix {
    let entries = (0..rows * cols).map(|_| gaussian(rng)).collect();
    ComplexMatrix::from_row_major(rows, cols, entries).expect("entry count matches shape")
}

/// Hermitian matrix rescaled to spectral norm `scale` (zero stays zero).
pub fn random_hermitian(rng: &mut impl Rng, n: usize, scale: f64) -> ComplexMatrix {
    let g = random_matrix(rng, n, n);
    let h = (&g + &g.adjoint()).scale_real(0.5);
    let norm = crate::linalg::operator_norm(&h);
    if norm == 0.0 {
        h
    } else {
        h.scale_real(scale / norm)
    }
}

pub fn random_unitary(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    let h = random_hermitian(rng, n, std::f64::consts::PI);
    crate::linalg::matexp_hermitian_generator(&h, 1.0).expect("Hermitian by construction")
}

pub fn random_unit_vector(rng: &mut impl Rng, n: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..n).map(|_| gaussian(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// Full-rank density matrix `G G^dagger / Tr`.
pub fn random_density_matrix(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    let g = random_matrix(rng, n, n);
    let rho = &g * &g.adjoint();
    let tr = rho.trace().re;
    let rho = rho.scale_real(1.0 / tr);
    // exact Hermitian symmetry
    (&rho + &rho.adjoint()).scale_real(0.5)
}

/// Dense random model with every block normalised to unit spectral norm.
pub fn random_system(rng: &mut impl Rng, dim_a: usize, dim_e: usize) -> BipartiteSystem {
    let h_a = random_hermitian(rng, dim_a, 1.0);
    let h_e = random_hermitian(rng, dim_e, 1.0);
    let h_ae = random_hermitian(rng, dim_a * dim_e, 1.0);
    BipartiteSystem::new(dim_a, dim_e, h_a, h_e, h_ae).expect("random blocks are Hermitian")
}

/// Model with diagonal, non-degenerate `H_E` and an interaction that is block
/// diagonal in the environment index, so `[I (x) H_E, H_AE] = 0`.
pub fn random_env_commuting_system(rng: &mut impl Rng, dim_a: usize, dim_e: usize) -> BipartiteSystem {
    let h_a = random_hermitian(rng, dim_a, 1.0);
    let levels: Vec<f64> = (0..dim_e).map(|k| k as f64 + 0.5 * rng.random::<f64>()).collect();
    let h_e = ComplexMatrix::from_real_diagonal(&levels);
    let mut h_ae = ComplexMatrix::zeros(dim_a * dim_e, dim_a * dim_e);
    for g in 0..dim_e {
        let mut proj = ComplexMatrix::zeros(dim_e, dim_e);
        proj[(g, g)] = Complex64::new(1.0, 0.0);
        let block = random_hermitian(rng, dim_a, 1.0);
        h_ae += &kron(&block, &proj);
    }
    BipartiteSystem::new(dim_a, dim_e, h_a, h_e, h_ae).expect("blocks are Hermitian")
}

/// Product start `|c> (x) |e>` with random factors.
pub fn random_product_state(rng: &mut impl Rng, dim_a: usize, dim_e: usize) -> PureState {
    let c = random_unit_vector(rng, dim_a);
    let e = random_unit_vector(rng, dim_e);
    PureState::product(&c, &e).expect("unit factors")
}

/// Product start with real amplitudes.
pub fn random_real_product_state(rng: &mut impl Rng, dim_a: usize, dim_e: usize) -> PureState {
    let real = |rng: &mut dyn rand::RngCore, n: usize| {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| Complex64::new(x / norm, 0.0)).collect::<Vec<_>>()
    };
    let c = real(rng, dim_a);
    let e = real(rng, dim_e);
    PureState::product(&c, &e).expect("unit factors")
}

/// Product start with the environment in one eigenstate of `H_E`.
pub fn product_with_env_eigenstate(
    system_coeffs: &[Complex64],
    sys: &BipartiteSystem,
    level: usize,
) -> PureState {
    let eig = hermitian_eig(sys.h_e()).expect("H_E validated Hermitian");
    let e: Vec<Complex64> = (0..sys.dim_e()).map(|k| eig.vectors[(k, level)]).collect();
    PureState::product(system_coeffs, &e).expect("unit factors")
}

pub fn basis_vector(n: usize, k: usize) -> Vec<Complex64> {
    let mut v = vec![ZERO; n];
    v[k] = Complex64::new(1.0, 0.0);
    v
}
