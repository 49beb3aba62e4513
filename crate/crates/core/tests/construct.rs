use l1l2_core::construct::{
    construct_b, construct_stationary, orthonormal_range_basis, pocs_sign_vector, POCS_TOL,
};
use l1l2_core::linalg::dist2;
use l1l2_core::problems::{gen_gaussian, gen_partial_dct, gen_sparse_signal, spectral_normalize};
use l1l2_core::solvers::check_stationarity;
use l1l2_core::{PenaltySpec, ProblemInstance};

#[test]
fn gaussian_basis_is_orthonormal() {
    let a = gen_gaussian(64, 256, 1).unwrap();
    let u = orthonormal_range_basis(&a).unwrap();
    assert_eq!(u.shape(), (256, 64));
    let g = u.gram_cols();
    for i in 0..64 {
        for j in 0..64 {
            let e = if i == j { 1.0 } else { 0.0 };
            assert!((g.get(i, j) - e).abs() < 1e-10);
        }
    }
    // Rows of A lie in the span.
    for i in 0..64 {
        let r = a.row(i);
        let back = u.matvec(&u.matvec_t(r));
        assert!(dist2(&back, r) < 1e-10 * (1.0 + l1l2_core::linalg::norm2(r)));
    }
}

#[test]
fn pocs_steps_shrink_and_stay_in_sign_set() {
    let a = gen_gaussian(64, 256, 3).unwrap();
    let u = orthonormal_range_basis(&a).unwrap();
    let (x, _) = gen_sparse_signal(256, 10, 4).unwrap();
    let mut prev_step = f64::INFINITY;
    let mut prev_w: Option<Vec<f64>> = None;
    for k in 1..40 {
        let r = pocs_sign_vector(&u, &x, 1.0, 0.0, k).unwrap();
        for (wi, xi) in r.w.iter().zip(&x) {
            if *xi != 0.0 {
                assert_eq!(*wi, xi.signum());
            } else {
                assert!(wi.abs() <= 1.0);
            }
        }
        if let Some(pw) = prev_w {
            let step = dist2(&r.w, &pw);
            assert!(step <= prev_step + 1e-14);
            prev_step = step;
        }
        prev_w = Some(r.w);
    }
}

fn constructed(seed: u64, gamma: f64, dct: bool) -> Option<(ProblemInstance, Vec<f64>)> {
    let a = if dct {
        gen_partial_dct(64, 256, seed).unwrap()
    } else {
        spectral_normalize(&gen_gaussian(64, 256, seed).unwrap()).unwrap()
    };
    let (x, _) = gen_sparse_signal(256, 10, seed + 1000).unwrap();
    let c = construct_stationary(&a, &x, 1.0, gamma).unwrap();
    if !c.converged {
        return None;
    }
    let p = ProblemInstance::new(a, c.b, PenaltySpec::new(1.0, gamma).unwrap()).unwrap();
    Some((p, x))
}

#[test]
fn constructed_points_are_stationary() {
    let mut hits = 0;
    for seed in 0..10 {
        for dct in [false, true] {
            if let Some((p, x)) = constructed(seed, 0.01, dct) {
                hits += 1;
                let r = check_stationarity(&p, &x, 1e-8);
                assert!(r.residual_eq12 < 1e-8, "{}", r.residual_eq12);
            }
        }
    }
    assert!(hits >= 10, "only {hits} constructions converged");
}

#[test]
fn gamma_rescales_the_dual_part() {
    let a = spectral_normalize(&gen_gaussian(64, 256, 8).unwrap()).unwrap();
    let (x, _) = gen_sparse_signal(256, 10, 9).unwrap();
    let u = orthonormal_range_basis(&a).unwrap();
    let w = pocs_sign_vector(&u, &x, 1.0, POCS_TOL, 2560).unwrap().w;
    let ax = a.matvec(&x);
    let b1 = construct_b(&a, &x, 1.0, 0.01, &w).unwrap();
    let b2 = construct_b(&a, &x, 1.0, 0.1, &w).unwrap();
    for i in 0..64 {
        assert!(((b2[i] - ax[i]) - 10.0 * (b1[i] - ax[i])).abs() < 1e-12);
    }
}
