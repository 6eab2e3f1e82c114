//! Finite-difference and algebraic cross-checks of the potential family.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vortexlab_core::kernel::{
    cauchy_schwarz_k_bound, grad_potential, hessian_potential, kappa1, kappa2, kernel_k,
    log_grid_point, potential, strain_kernel, PotentialParams,
};
use vortexlab_core::{Mat3, Vec3};

const DELTAS: [f64; 3] = [0.0, 0.4, 0.8];

fn random_point(rng: &mut ChaCha8Rng, r_lo: f64, r_hi: f64) -> Vec3 {
    let dir = loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            break v / n;
        }
    };
    let r = (rng.gen_range(r_lo.ln()..r_hi.ln())).exp();
    dir * r
}

fn axis(i: usize) -> Vec3 {
    [Vec3::X, Vec3::Y, Vec3::Z][i]
}

fn fd_gradient(z: Vec3, p: &PotentialParams) -> Vec3 {
    let h = 1e-5 * z.norm().max(1.0);
    let mut g = [0.0; 3];
    for (i, gi) in g.iter_mut().enumerate() {
        let e = axis(i) * h;
        *gi = (potential(z + e, p).unwrap() - potential(z - e, p).unwrap()) / (2.0 * h);
    }
    Vec3::from_array(g)
}

fn fd_hessian_from_gradient(z: Vec3, p: &PotentialParams) -> Mat3 {
    let h = 1e-5 * z.norm().max(1.0);
    let mut rows = [Vec3::ZERO; 3];
    for (i, row) in rows.iter_mut().enumerate() {
        let e = axis(i) * h;
        *row = (grad_potential(z + e, p).unwrap() - grad_potential(z - e, p).unwrap()) / (2.0 * h);
    }
    Mat3::from_rows(rows[0], rows[1], rows[2])
}

/// Fourth-order second differences of the potential itself.
#[allow(clippy::needless_range_loop)]
fn fd_hessian_from_potential(z: Vec3, p: &PotentialParams) -> Mat3 {
    let h = 2e-3 * z.norm();
    let f = |v: Vec3| potential(v, p).unwrap();
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        let ei = axis(i) * h;
        m[i][i] = (-f(z + ei * 2.0) + 16.0 * f(z + ei) - 30.0 * f(z) + 16.0 * f(z - ei)
            - f(z - ei * 2.0))
            / (12.0 * h * h);
        for j in 0..i {
            let ej = axis(j) * h;
            let d = |a: f64, b: f64| f(z + ei * a + ej * b);
            let first = d(1.0, 1.0) - d(1.0, -1.0) - d(-1.0, 1.0) + d(-1.0, -1.0);
            let second = d(2.0, 2.0) - d(2.0, -2.0) - d(-2.0, 2.0) + d(-2.0, -2.0);
            m[i][j] = (16.0 * first - second) / (48.0 * h * h);
            m[j][i] = m[i][j];
        }
    }
    Mat3 { m }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for d in DELTAS {
        for _ in 0..100 {
            let p =
                PotentialParams::new(rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0), d).unwrap();
            let z = random_point(&mut rng, 0.1, 10.0);
            let exact = grad_potential(z, &p).unwrap();
            let err = (exact - fd_gradient(z, &p)).norm() / exact.norm();
            assert!(err < 1e-6, "delta={d} z={z:?} err={err:e}");
        }
    }
}

#[test]
fn hessian_matches_differences_of_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for d in DELTAS {
        for _ in 0..100 {
            let p =
                PotentialParams::new(rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0), d).unwrap();
            let z = random_point(&mut rng, 0.1, 10.0);
            let exact = hessian_potential(z, &p).unwrap();
            let err = (exact - fd_hessian_from_gradient(z, &p)).frobenius() / exact.frobenius();
            assert!(err < 1e-6, "delta={d} z={z:?} err={err:e}");
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(exact.m[i][j], exact.m[j][i]);
                }
            }
        }
    }
}

#[test]
fn hessian_matches_second_differences_of_potential() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for d in DELTAS {
        for _ in 0..50 {
            let p = PotentialParams::new(1.0, rng.gen_range(0.5..2.0), d).unwrap();
            let z = random_point(&mut rng, 0.1, 10.0);
            let exact = hessian_potential(z, &p).unwrap();
            let err = (exact - fd_hessian_from_potential(z, &p)).frobenius() / exact.frobenius();
            assert!(err < 1e-6, "delta={d} z={z:?} err={err:e}");
        }
    }
}

/// `M_ij = ∂_i (grad phi × w)_j`, assembled row by row from the Hessian.
fn hessian_cross(z: Vec3, w: Vec3, p: &PotentialParams) -> Mat3 {
    let h = hessian_potential(z, p).unwrap();
    Mat3::from_rows(h.row(0).cross(w), h.row(1).cross(w), h.row(2).cross(w))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn strain_kernel_is_symmetrized_hessian_cross(
        zx in -3.0..3.0f64, zy in -3.0..3.0f64, zz in -3.0..3.0f64,
        wx in -2.0..2.0f64, wy in -2.0..2.0f64, wz in -2.0..2.0f64,
        gamma in 0.1..5.0f64, mu in 0.3..3.0f64, di in 0usize..4,
    ) {
        let delta = [0.0, 0.2, 0.4, 0.8][di];
        let z = Vec3::new(zx, zy, zz);
        let w = Vec3::new(wx, wy, wz);
        prop_assume!(z.norm() > 0.1 && z.cross(w).norm() > 1e-3 * z.norm() * w.norm());
        let p = PotentialParams::new(gamma, mu, delta).unwrap();
        let s = strain_kernel(z, w, &p).unwrap();
        let m = hessian_cross(z, w, &p);
        let sym = m.symmetric_part();
        let err = (s - sym).frobenius() / s.frobenius();
        prop_assert!(err < 1e-12, "err = {:e}", err);
        // The antisymmetric remainder carries no symmetric part.
        let rest = m - s;
        let rest_sym = rest.symmetric_part().frobenius() / m.frobenius();
        prop_assert!(rest_sym < 1e-12);
    }

    #[test]
    fn radial_quantities_ignore_direction(
        x in -3.0..3.0f64, y in -3.0..3.0f64, z in -3.0..3.0f64,
        angle in 0.0..std::f64::consts::TAU, di in 0usize..3,
    ) {
        let v = Vec3::new(x, y, z);
        prop_assume!(v.norm() > 1e-3);
        let p = PotentialParams::new(1.3, 0.7, DELTAS[di]).unwrap();
        let (c, s) = (angle.cos(), angle.sin());
        let rotated = Vec3::new(c * v.x - s * v.y, s * v.x + c * v.y, v.z);
        let a = potential(v, &p).unwrap();
        let b = potential(rotated, &p).unwrap();
        prop_assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
        let ka = kernel_k(v.norm(), &p).unwrap();
        let kb = kernel_k(rotated.norm(), &p).unwrap();
        prop_assert!((ka - kb).abs() <= 1e-14 * ka);
    }
}

#[test]
fn cauchy_schwarz_majorant_on_log_grid() {
    for d in DELTAS {
        for (g, mu) in [(1.0, 1.0), (0.5, 2.0), (2.0, 0.5)] {
            let p = PotentialParams::new(g, mu, d).unwrap();
            let n = 10_000;
            for i in 0..n {
                let r = log_grid_point(1e-3, 1e3, n, i);
                let k = kernel_k(r, &p).unwrap();
                let b = cauchy_schwarz_k_bound(r, &p).unwrap();
                assert!(b >= k, "delta={d} r={r} K={k} bound={b}");
            }
        }
    }
}

#[test]
fn rosenhead_kappa_closed_forms() {
    for (g, mu, eta) in [(1.0, 1.0, 1.0), (0.5, 2.0, 3.0), (2.0, 0.7, 2.5)] {
        let p = PotentialParams::rosenhead(g, mu).unwrap();
        assert_eq!(kappa1(eta, &p).unwrap(), 3.0 * g * eta.powi(-3));
        let k2 = kappa2(eta, &p).unwrap();
        assert!((k2 - 3.0 * g * mu.powi(-5) * eta * eta).abs() <= 1e-15 * k2);
    }
}
