#![allow(dead_code)]

use l1l2_core::linalg::DenseMatrix;
use l1l2_core::problems::{gen_gaussian, gen_sparse_signal, spectral_normalize};
use l1l2_core::{PenaltySpec, ProblemInstance};

pub const FRAC_1_SQRT_2: f64 = core::f64::consts::FRAC_1_SQRT_2;

/// `||x||_1 - ||x||_2 + 0.5*(x1 + x2 - c)^2 + 0.5*(x2 + x3 - c)^2`, `c = 1.2 - 1/sqrt(2)`.
pub fn three_point() -> ProblemInstance {
    let a = DenseMatrix::from_rows(&[&[1.0, 1.0, 0.0], &[0.0, 1.0, 1.0]]).unwrap();
    let c = 1.2 - FRAC_1_SQRT_2;
    ProblemInstance::new(a, vec![c, c], PenaltySpec::new(1.0, 1.0).unwrap()).unwrap()
}

pub fn three_point_minimizer() -> [f64; 3] {
    [0.0, 1.2 - FRAC_1_SQRT_2, 0.0]
}

/// `||x||_1 - ||x||_2 + 0.5*(x1 + x2 - 1)^2`.
pub fn two_point() -> ProblemInstance {
    let a = DenseMatrix::from_rows(&[&[1.0, 1.0]]).unwrap();
    ProblemInstance::new(a, vec![1.0], PenaltySpec::new(1.0, 1.0).unwrap()).unwrap()
}

/// Spectrally normalized Gaussian `m x n` with a `k`-sparse signal and exact data.
pub fn gaussian_instance(m: usize, n: usize, k: usize, alpha: f64, gamma: f64, seed: u64) -> ProblemInstance {
    let a = spectral_normalize(&gen_gaussian(m, n, seed).unwrap()).unwrap();
    let (x, _) = gen_sparse_signal(n, k, seed ^ 0xabc).unwrap();
    let b = a.matvec(&x);
    ProblemInstance::new(a, b, PenaltySpec::new(alpha, gamma).unwrap())
        .unwrap()
        .with_truth(x)
        .unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
