//! Filament dynamics against quadrature, symmetry and self-convergence oracles.

use std::f64::consts::TAU;

use vortexlab_core::dynamics::{step_rk4, velocity_field};
use vortexlab_core::geometry::{seed_curve, ClosedCurve, CurveKind};
use vortexlab_core::kernel::PotentialParams;
use vortexlab_core::Vec3;

#[allow(clippy::too_many_arguments)]
fn simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(&f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Axial speed of a unit ring for the Rosenhead potential, by direct quadrature
/// of the regularized line integral.
fn ring_speed_oracle(gamma: f64, mu: f64) -> f64 {
    let f = |s: f64| {
        let c = (TAU * s).cos();
        (1.0 - c) / (2.0 - 2.0 * c + mu * mu).powf(1.5)
    };
    -0.5 * gamma * adaptive_simpson(f, 0.0, 1.0, 1e-15)
}

fn ring_axial_speed(n: usize, gamma: f64, mu: f64) -> f64 {
    let c = seed_curve(CurveKind::Ring, n, 1.0, 0.0).unwrap();
    let p = PotentialParams::rosenhead(gamma, mu).unwrap();
    velocity_field(&c, &p).unwrap()[0].z
}

#[test]
fn ring_speed_matches_quadrature() {
    let exact = ring_speed_oracle(1.0, 0.1);
    let v = ring_axial_speed(512, 1.0, 0.1);
    let rel = (v - exact).abs() / exact.abs();
    assert!(rel < 1e-6, "v={v} exact={exact} rel={rel:e}");
}

#[test]
fn ring_speed_converges_at_least_second_order() {
    let exact = ring_speed_oracle(1.0, 0.2);
    let ns = [64, 128, 256, 512];
    let errs: Vec<f64> = ns
        .iter()
        .map(|&n| (ring_axial_speed(n, 1.0, 0.2) - exact).abs() / exact.abs())
        .collect();
    for w in errs.windows(2) {
        if w[1] > 1e-12 {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 2.0, "errors {errs:?}");
        }
    }
    assert!(errs[3] < 1e-6, "errors {errs:?}");
}

#[test]
fn ring_velocity_is_axial_and_uniform() {
    let c = seed_curve(CurveKind::Ring, 96, 1.0, 0.0).unwrap();
    for delta in [0.0, 0.4, 0.8] {
        let p = PotentialParams::new(1.0, 0.5, delta).unwrap();
        let v = velocity_field(&c, &p).unwrap();
        let vz = v[0].z;
        for u in &v {
            assert!(u.x.abs() < 1e-12 * vz.abs() && u.y.abs() < 1e-12 * vz.abs());
            assert!((u.z - vz).abs() < 1e-12 * vz.abs());
        }
    }
}

#[test]
fn mirror_image_moves_as_mirrored_reversal() {
    let c = seed_curve(CurveKind::Trefoil, 128, 1.0, 0.0).unwrap();
    let mirror = |v: Vec3| Vec3::new(-v.x, v.y, v.z);
    let m = c.map(mirror).unwrap();
    for delta in [0.0, 0.4] {
        let p = PotentialParams::new(1.0, 0.5, delta).unwrap();
        let v = velocity_field(&c, &p).unwrap();
        let vm = velocity_field(&m, &p).unwrap();
        // A reflection flips the sign of the cross product.
        for (a, b) in v.iter().zip(&vm) {
            let expected = mirror(*a) * -1.0;
            assert!((expected - *b).norm() < 1e-12 * a.norm().max(1.0));
        }
    }
}

#[test]
fn trefoil_velocity_self_converges() {
    let p = PotentialParams::rosenhead(1.0, 0.5).unwrap();
    let coarse =
        velocity_field(&seed_curve(CurveKind::Trefoil, 128, 1.0, 0.0).unwrap(), &p).unwrap();
    let fine =
        velocity_field(&seed_curve(CurveKind::Trefoil, 1024, 1.0, 0.0).unwrap(), &p).unwrap();
    let scale = fine.iter().map(|u| u.norm()).fold(0.0, f64::max);
    for (k, u) in coarse.iter().enumerate() {
        let err = (*u - fine[8 * k]).norm() / scale;
        assert!(err < 1e-4, "node {k}: err {err:e}");
    }
}

#[test]
fn rk4_step_error_shrinks_fifth_order() {
    let c = seed_curve(CurveKind::PerturbedRing, 64, 1.0, 0.2).unwrap();
    let p = PotentialParams::new(4.0, 0.5, 0.4).unwrap();
    let local_error = |dt: f64| {
        let one = step_rk4(&c, &p, dt).unwrap();
        let half = step_rk4(&step_rk4(&c, &p, 0.5 * dt).unwrap(), &p, 0.5 * dt).unwrap();
        one.nodes()
            .iter()
            .zip(half.nodes())
            .map(|(a, b)| (*a - *b).norm())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (local_error(0.2), local_error(0.1));
    let ratio = e1 / e2;
    assert!(
        ratio > 20.0 && ratio < 48.0,
        "e1={e1:e} e2={e2:e} ratio={ratio}"
    );
}

#[test]
fn forward_then_backward_step_returns() {
    let c = seed_curve(CurveKind::Ring, 64, 1.0, 0.0).unwrap();
    let p = PotentialParams::rosenhead(1.0, 0.3).unwrap();
    let back = step_rk4(&step_rk4(&c, &p, 1e-3).unwrap(), &p, -1e-3).unwrap();
    for (a, b) in c.nodes().iter().zip(back.nodes()) {
        assert!((*a - *b).norm() < 1e-10);
    }
}

#[test]
fn ring_translates_rigidly_for_many_steps() {
    let c0 = seed_curve(CurveKind::Ring, 64, 1.0, 0.0).unwrap();
    let p = PotentialParams::new(1.0, 0.3, 0.4).unwrap();
    let mut c: ClosedCurve = c0.clone();
    for _ in 0..500 {
        c = step_rk4(&c, &p, 1e-2).unwrap();
    }
    let shift = c.centroid() - c0.centroid();
    assert!(shift.x.abs() < 1e-12 && shift.y.abs() < 1e-12 && shift.z.abs() > 0.0);
    for (a, b) in c0.nodes().iter().zip(c.nodes()) {
        assert!((*a + shift - *b).norm() < 1e-8);
    }
}
