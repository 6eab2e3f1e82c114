//! Particle representation of a vorticity field and the stretching diagnostics
//! built on the strain kernel.
//!
//! Each particle carries a vector weight approximating `∫_cell ω dx`, i.e.
//! circulation times length. Velocities follow the discrete law
//! `u(x) = -(1/4pi) Σ_i grad phi(x - p_i) × w_i`, and the strain is the
//! symmetric part of its gradient. Pair sums exclude coincident points, which
//! is the discrete analogue of the principal value.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{self, ClosedCurve};
use crate::kernel::{
    kernel_k_unchecked, strain_kernel, KappaConstants, PotentialParams, Radial, Verdict,
};
use crate::linalg::{Mat3, Vec3};
use crate::math;
use crate::par;

/// Normalization of the discrete Biot-Savart sum.
pub const BIOT_SAVART_PREFACTOR: f64 = -1.0 / (4.0 * PI);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Particle {
    pub position: Vec3,
    pub weight: Vec3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VorticityField {
    particles: Vec<Particle>,
    mollifier_h: f64,
}

/// Symmetric velocity gradient at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrainTensor(pub Mat3);

impl StrainTensor {
    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    /// Not constrained to vanish: the regularized velocity need not be solenoidal.
    pub fn trace(&self) -> f64 {
        self.0.trace()
    }
}

impl VorticityField {
    pub fn new(particles: Vec<Particle>, mollifier_h: f64) -> Result<Self> {
        if !(mollifier_h > 0.0 && mollifier_h.is_finite()) {
            return Err(Error::Domain("mollifier width h must be finite and > 0"));
        }
        if !particles
            .iter()
            .all(|q| q.position.is_finite() && q.weight.is_finite())
        {
            return Err(Error::Domain(
                "particle positions and weights must be finite",
            ));
        }
        Ok(VorticityField {
            particles,
            mollifier_h,
        })
    }

    /// One particle per node with weight `gamma * tangent_k / N`.
    pub fn from_curve(c: &ClosedCurve, gamma: f64, h: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::Domain("filament strength must be finite and >= 0"));
        }
        let n = c.len() as f64;
        let particles = c
            .nodes()
            .iter()
            .zip(geometry::tangents(c))
            .map(|(&position, t)| Particle {
                position,
                weight: t * (gamma / n),
            })
            .collect();
        Self::new(particles, h)
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn mollifier_h(&self) -> f64 {
        self.mollifier_h
    }

    /// Same positions, weights replaced by `f(weight)`.
    pub fn map_weights(&self, f: impl Fn(Vec3) -> Vec3) -> Result<Self> {
        let particles = self
            .particles
            .iter()
            .map(|q| Particle {
                position: q.position,
                weight: f(q.weight),
            })
            .collect();
        Self::new(particles, self.mollifier_h)
    }

    /// Discrete Biot-Savart velocity at `x`; fails if `x` sits on a particle.
    pub fn velocity_at(&self, x: Vec3, p: &PotentialParams) -> Result<Vec3> {
        let mut acc = Vec3::ZERO;
        for q in &self.particles {
            let z = x - q.position;
            let r2 = z.norm_sq();
            if r2 == 0.0 {
                return Err(Error::SingularPoint);
            }
            acc += (z * Radial::at(r2, p).grad_factor(p)).cross(q.weight);
        }
        Ok(acc * BIOT_SAVART_PREFACTOR)
    }
}

/// `Σ_i |w_i|`.
pub fn total_circulation(f: &VorticityField) -> f64 {
    f.particles.iter().map(|q| q.weight.norm()).sum()
}

fn strain_sum<'a>(
    x: Vec3,
    p: &PotentialParams,
    sources: impl Iterator<Item = &'a Particle>,
) -> Result<Mat3> {
    let mut acc = Mat3::ZERO;
    for q in sources {
        if q.weight == Vec3::ZERO {
            continue;
        }
        acc += strain_kernel(x - q.position, q.weight, p)?;
    }
    Ok(acc * BIOT_SAVART_PREFACTOR)
}

/// Strain of the discrete velocity at `x`.
///
/// `x` must not coincide with a particle carrying non-zero weight; use
/// [`strain_at_particle`] to evaluate at a particle with the p.v. exclusion.
pub fn strain_at(f: &VorticityField, x: Vec3, p: &PotentialParams) -> Result<StrainTensor> {
    if f.particles
        .iter()
        .any(|q| q.position == x && q.weight != Vec3::ZERO)
    {
        return Err(Error::SingularPoint);
    }
    strain_sum(x, p, f.particles.iter()).map(StrainTensor)
}

/// Strain at particle `i`, excluding every particle located exactly at `p_i`.
pub fn strain_at_particle(
    f: &VorticityField,
    i: usize,
    p: &PotentialParams,
) -> Result<StrainTensor> {
    let x = f
        .particles
        .get(i)
        .ok_or(Error::Domain("particle index out of range"))?
        .position;
    strain_sum(x, p, f.particles.iter().filter(|q| q.position != x)).map(StrainTensor)
}

/// Discrete stretching term `Σ_i S_{-i}(p_i) : w_i ⊗ w_i`.
pub fn stretching_term(f: &VorticityField, p: &PotentialParams) -> f64 {
    let per_particle = par::map_indices(f.len(), |i| {
        let q = f.particles[i];
        if q.weight == Vec3::ZERO {
            return 0.0;
        }
        let s = strain_at_particle(f, i, p).expect("coincident points are excluded");
        s.0.bilinear(q.weight, q.weight)
    });
    per_particle.iter().sum()
}

/// Sum of the absolute values of all pair contributions to
/// [`stretching_term`]; the natural magnitude to compare cancellations against.
pub fn stretching_scale(f: &VorticityField, p: &PotentialParams) -> f64 {
    let per_particle = par::map_indices(f.len(), |i| {
        let qi = f.particles[i];
        let wi2 = qi.weight.norm_sq();
        if wi2 == 0.0 {
            return 0.0;
        }
        let mut s = 0.0;
        for qj in &f.particles {
            let r = (qi.position - qj.position).norm();
            if r == 0.0 || qj.weight == Vec3::ZERO {
                continue;
            }
            // |bracket : e⊗e| <= 2 for unit directions.
            s += 2.0 * kernel_k_unchecked(r, p) * qj.weight.norm() * wi2;
        }
        s
    });
    -BIOT_SAVART_PREFACTOR * per_particle.iter().sum::<f64>()
}

/// Enstrophy `½ ∫ |ω_h|²` of the Gaussian-mollified field
/// `ω_h(x) = Σ_i w_i g_h(x - p_i)`, in closed form:
/// `½ Σ_ij (w_i · w_j) (4 pi h²)^(-3/2) exp(-|p_i - p_j|² / (4h²))`.
pub fn enstrophy(f: &VorticityField) -> f64 {
    let h2 = f.mollifier_h * f.mollifier_h;
    let norm = 1.0 / (4.0 * PI * h2 * math::sqrt(4.0 * PI * h2));
    let rows = par::map_indices(f.len(), |i| {
        let qi = f.particles[i];
        f.particles
            .iter()
            .map(|qj| {
                let d2 = (qi.position - qj.position).norm_sq();
                qi.weight.dot(qj.weight) * math::exp(-d2 / (4.0 * h2))
            })
            .sum::<f64>()
    });
    (0.5 * norm * rows.iter().sum::<f64>()).max(0.0)
}

/// A particle pair whose separation falls where `K` exceeds its bound constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairWitness {
    pub i: usize,
    pub j: usize,
    pub r: f64,
    pub k: f64,
    pub bound: f64,
}

/// Comparison of the stretching term against `max(kappa1, kappa2) Σ E`.
#[derive(Clone, Debug, PartialEq)]
pub struct StretchingBoundReport {
    pub stretching: f64,
    pub bound: f64,
    pub ratio: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub eta: f64,
    pub sigma: f64,
    pub enstrophy: f64,
    pub verdict: Verdict,
    pub witnesses: Vec<PairWitness>,
    /// `(3 gamma / 4) max(eta^-3, eta^2 mu^-5) Σ E`, only for `delta = 0`.
    pub rosenhead_bound: Option<f64>,
    pub strain_trace_max: f64,
}

/// Evaluate the stretching estimate on a particle field. Reports, never asserts.
pub fn stretching_bound_check(
    f: &VorticityField,
    p: &PotentialParams,
    eta: f64,
) -> Result<StretchingBoundReport> {
    let kappas = KappaConstants::new(p, eta)?;
    let stretching = stretching_term(f, p);
    let sigma = total_circulation(f);
    let e = enstrophy(f);
    let bound = kappas.max() * sigma * e;
    let ratio = if bound > 0.0 {
        stretching.abs() / bound
    } else if stretching == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let verdict = if stretching.abs() <= bound {
        Verdict::Pass
    } else {
        Verdict::Fail
    };

    let active: Vec<usize> = (0..f.len())
        .filter(|&i| f.particles[i].weight != Vec3::ZERO)
        .collect();
    let mut witnesses = Vec::new();
    for (a, &i) in active.iter().enumerate() {
        for &j in &active[a + 1..] {
            let r = (f.particles[i].position - f.particles[j].position).norm();
            if r == 0.0 {
                continue;
            }
            let k = kernel_k_unchecked(r, p);
            let b = kappas.bound_at(r);
            if k > b {
                witnesses.push(PairWitness {
                    i,
                    j,
                    r,
                    k,
                    bound: b,
                });
            }
        }
    }

    let rosenhead_bound = (p.delta() == 0.0).then(|| {
        let mu = p.mu();
        let c = math::pow(eta, -3.0).max(eta * eta * math::pow(mu, -5.0));
        0.75 * p.gamma() * c * sigma * e
    });

    let strain_trace_max = (0..f.len())
        .filter_map(|i| strain_at_particle(f, i, p).ok())
        .map(|s| s.trace().abs())
        .fold(0.0, f64::max);

    Ok(StretchingBoundReport {
        stretching,
        bound,
        ratio,
        kappa1: kappas.kappa1,
        kappa2: kappas.kappa2,
        eta,
        sigma,
        enstrophy: e,
        verdict,
        witnesses,
        rosenhead_bound,
        strain_trace_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{seed_curve, CurveKind};
    use alloc::vec;

    fn particle(p: [f64; 3], w: [f64; 3]) -> Particle {
        Particle {
            position: Vec3::from_array(p),
            weight: Vec3::from_array(w),
        }
    }

    #[test]
    fn circulation_examples() {
        let empty = VorticityField::new(Vec::new(), 1.0).unwrap();
        assert_eq!(total_circulation(&empty), 0.0);
        let one =
            VorticityField::new(vec![particle([1.0, 2.0, 3.0], [3.0, 4.0, 0.0])], 1.0).unwrap();
        assert_eq!(total_circulation(&one), 5.0);
    }

    #[test]
    fn ring_field_weights() {
        let c = seed_curve(CurveKind::Ring, 256, 1.0, 0.0).unwrap();
        let f = VorticityField::from_curve(&c, 1.0, 0.05).unwrap();
        assert!((total_circulation(&f) - 2.0 * PI).abs() < 1e-6);
        let mut sum = Vec3::ZERO;
        for q in f.particles() {
            sum += q.weight;
        }
        assert!(sum.norm() < 1e-12);
        let zero = VorticityField::from_curve(&c, 0.0, 0.05).unwrap();
        assert_eq!(total_circulation(&zero), 0.0);
        assert!(zero.particles().iter().all(|q| q.weight == Vec3::ZERO));
    }

    #[test]
    fn circulation_is_rigid_motion_invariant() {
        let c = seed_curve(CurveKind::Trefoil, 64, 1.0, 0.0).unwrap();
        let f = VorticityField::from_curve(&c, 1.3, 0.1).unwrap();
        let moved = VorticityField::new(
            f.particles()
                .iter()
                .map(|q| Particle {
                    position: q.position + Vec3::new(5.0, -1.0, 2.0),
                    weight: q.weight,
                })
                .collect(),
            0.1,
        )
        .unwrap();
        assert_eq!(total_circulation(&f), total_circulation(&moved));
    }

    #[test]
    fn strain_single_particle() {
        let p = PotentialParams::new(1.0, 0.5, 0.4).unwrap();
        let w = Vec3::new(0.0, 0.0, 2.0);
        let f = VorticityField::new(vec![particle([0.0, 0.0, 0.0], [0.0, 0.0, 2.0])], 1.0).unwrap();
        let along = strain_at(&f, Vec3::new(0.0, 0.0, 3.0), &p).unwrap();
        assert_eq!(along.0, Mat3::ZERO);
        let x = Vec3::new(0.3, -0.7, 0.2);
        let s = strain_at(&f, x, &p).unwrap();
        assert_eq!(
            s.0,
            strain_kernel(x, w, &p).unwrap() * BIOT_SAVART_PREFACTOR
        );
        assert_eq!(strain_at(&f, Vec3::ZERO, &p), Err(Error::SingularPoint));
    }

    #[test]
    fn stretching_trivial_cases() {
        let p = PotentialParams::rosenhead(1.0, 0.3).unwrap();
        let one = VorticityField::new(vec![particle([0.0; 3], [1.0, 2.0, 3.0])], 1.0).unwrap();
        assert_eq!(stretching_term(&one, &p), 0.0);
        let parallel = VorticityField::new(
            vec![
                particle([0.0, 0.0, 0.0], [1.0, 1.0, 0.0]),
                particle([0.4, -0.2, 0.9], [2.0, 2.0, 0.0]),
                particle([-0.3, 0.5, 0.1], [-0.5, -0.5, 0.0]),
            ],
            1.0,
        )
        .unwrap();
        let s = stretching_term(&parallel, &p);
        assert!(s.abs() < 1e-12 * stretching_scale(&parallel, &p));
    }

    #[test]
    fn enstrophy_examples() {
        let one = VorticityField::new(vec![particle([0.0; 3], [0.0, 1.0, 0.0])], 1.0).unwrap();
        let expected = 0.5 * (4.0 * PI).powf(-1.5);
        assert!((enstrophy(&one) - expected).abs() < 1e-15 * expected);

        let a = particle([0.0; 3], [1.0, 0.5, 0.0]);
        let b = particle([100.0, 0.0, 0.0], [0.2, -1.0, 0.3]);
        let ea = enstrophy(&VorticityField::new(vec![a], 0.5).unwrap());
        let eb = enstrophy(&VorticityField::new(vec![b], 0.5).unwrap());
        let both = enstrophy(&VorticityField::new(vec![a, b], 0.5).unwrap());
        assert!((both - (ea + eb)).abs() < 1e-12 * both);
        assert!(VorticityField::new(vec![a], 0.0).is_err());
    }

    #[test]
    fn bound_check_parallel_field_passes() {
        let p = PotentialParams::rosenhead(1.0, 0.5).unwrap();
        let f = VorticityField::new(
            vec![
                particle([0.0, 0.0, 0.0], [0.0, 0.0, 1.0]),
                particle([0.5, 0.0, 0.0], [0.0, 0.0, 1.0]),
            ],
            0.2,
        )
        .unwrap();
        let eta = crate::kernel::eta_min(&p).max(1.0);
        let r = stretching_bound_check(&f, &p, eta).unwrap();
        assert_eq!(r.stretching, 0.0);
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.rosenhead_bound.is_some());
        assert!(r.witnesses.is_empty());
    }

    #[test]
    fn bound_check_flags_close_pair_for_singular_kernel() {
        let p = PotentialParams::new(1.0, 1.0, 0.4).unwrap();
        let f = VorticityField::new(
            vec![
                particle([0.0, 0.0, 0.0], [1.0, 0.0, 0.0]),
                particle([1e-6, 2e-6, 0.0], [0.0, 1.0, 1.0]),
            ],
            5.0,
        )
        .unwrap();
        let r = stretching_bound_check(&f, &p, 1.0).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.witnesses.len(), 1);
        assert_eq!((r.witnesses[0].i, r.witnesses[0].j), (0, 1));
        assert!(r.rosenhead_bound.is_none());
    }
}
