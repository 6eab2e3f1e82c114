//! The potential family `phi_delta`, its derivatives, the strain kernel and
//! the scalar stretching kernel `K` together with its bound constants.
//!
//! With `A(r) = r^2 + mu^2 r^delta` and `B(r) = 2 + delta mu^2 r^(delta-2)`:
//!
//! ```text
//! phi(z)      = gamma A^(-1/2)
//! grad phi(z) = -(gamma/2) B A^(-3/2) z
//! hess phi(z) = -(gamma/2) A^(-3/2) [B I + delta(delta-2) mu^2 |z|^(delta-4) z⊗z]
//!               + (3 gamma/4) A^(-5/2) B^2 z⊗z
//! ```
//!
//! Every function here is pure; `delta = 0` (the Rosenhead core) is smooth at
//! the origin while `delta > 0` is singular there.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3};
use crate::math;

/// Largest admissible singularity exponent.
pub const DELTA_MAX: f64 = 0.8;

/// The triple `(gamma, mu, delta)` defining the potential.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialParams {
    gamma: f64,
    mu: f64,
    delta: f64,
}

impl PotentialParams {
    pub fn new(gamma: f64, mu: f64, delta: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidParams("gamma must be finite and > 0"));
        }
        if !(mu.is_finite() && mu > 0.0) {
            return Err(Error::InvalidParams("mu must be finite and > 0"));
        }
        if !(0.0..=DELTA_MAX).contains(&delta) {
            return Err(Error::InvalidParams("delta must lie in [0, 4/5]"));
        }
        Ok(PotentialParams { gamma, mu, delta })
    }

    /// The classical core, `delta = 0`.
    pub fn rosenhead(gamma: f64, mu: f64) -> Result<Self> {
        Self::new(gamma, mu, 0.0)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Same `mu` and `delta` with a different strength.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(gamma, self.mu, self.delta)
    }
}

/// `A(r)`, `B(r)` and `r^delta` at one radius, computed once.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Radial {
    pub r2: f64,
    pub a: f64,
    pub b: f64,
    /// `r^delta`; exactly 1 when `delta = 0`.
    pub r_delta: f64,
}

impl Radial {
    /// `r2 = |z|^2`; caller guarantees `r2 > 0` or `delta = 0`.
    #[inline]
    pub(crate) fn at(r2: f64, p: &PotentialParams) -> Radial {
        let mu2 = p.mu * p.mu;
        if p.delta == 0.0 {
            Radial {
                r2,
                a: r2 + mu2,
                b: 2.0,
                r_delta: 1.0,
            }
        } else {
            let r_delta = math::pow(r2, 0.5 * p.delta);
            Radial {
                r2,
                a: r2 + mu2 * r_delta,
                b: 2.0 + p.delta * mu2 * r_delta / r2,
                r_delta,
            }
        }
    }

    /// `A^(-3/2)`.
    #[inline]
    pub(crate) fn a_m32(&self) -> f64 {
        1.0 / (self.a * math::sqrt(self.a))
    }

    /// `A^(-5/2)`.
    #[inline]
    pub(crate) fn a_m52(&self) -> f64 {
        self.a_m32() / self.a
    }

    /// Coefficient `c` with `strain_kernel(z, w) = c [(z×w)⊗z + z⊗(z×w)]`.
    #[inline]
    pub(crate) fn strain_coefficient(&self, p: &PotentialParams) -> f64 {
        let mut c = 0.375 * p.gamma * self.b * self.b * self.a_m52();
        if p.delta != 0.0 {
            let r_dm4 = self.r_delta / (self.r2 * self.r2);
            c += 0.25 * p.gamma * p.delta * (2.0 - p.delta) * p.mu * p.mu * self.a_m32() * r_dm4;
        }
        c
    }

    /// Scalar factor `s` with `grad phi(z) = s z`.
    #[inline]
    pub(crate) fn grad_factor(&self, p: &PotentialParams) -> f64 {
        -0.5 * p.gamma * self.b * self.a_m32()
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain("radius must be finite and > 0"))
    }
}

fn check_point(z: Vec3, p: &PotentialParams) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::Domain("evaluation point must be finite"));
    }
    let r2 = z.norm_sq();
    if r2 == 0.0 && p.delta > 0.0 {
        return Err(Error::SingularPoint);
    }
    Ok(r2)
}

/// `A(r) = r^2 + mu^2 r^delta`.
pub fn scale_a(r: f64, p: &PotentialParams) -> Result<f64> {
    check_radius(r)?;
    Ok(r * r + p.mu * p.mu * math::pow(r, p.delta))
}

/// `B(r) = 2 + delta mu^2 r^(delta-2)`.
pub fn scale_b(r: f64, p: &PotentialParams) -> Result<f64> {
    check_radius(r)?;
    Ok(2.0 + p.delta * p.mu * p.mu * math::pow(r, p.delta - 2.0))
}

/// `phi(z) = gamma / sqrt(|z|^2 + mu^2 |z|^delta)`; `gamma / mu` at the origin when `delta = 0`.
pub fn potential(z: Vec3, p: &PotentialParams) -> Result<f64> {
    let r2 = check_point(z, p)?;
    let rad = Radial::at(r2, p);
    Ok(p.gamma / math::sqrt(rad.a))
}

pub fn grad_potential(z: Vec3, p: &PotentialParams) -> Result<Vec3> {
    let r2 = check_point(z, p)?;
    if r2 == 0.0 {
        return Ok(Vec3::ZERO);
    }
    Ok(z * Radial::at(r2, p).grad_factor(p))
}

/// Hessian of `phi`; symmetric by construction.
pub fn hessian_potential(z: Vec3, p: &PotentialParams) -> Result<Mat3> {
    let r2 = check_point(z, p)?;
    let rad = Radial::at(r2, p);
    let a_m32 = rad.a_m32();
    let iso = -0.5 * p.gamma * a_m32 * rad.b;
    if r2 == 0.0 {
        return Ok(Mat3::IDENTITY * iso);
    }
    let mut zz = 0.75 * p.gamma * rad.a_m52() * rad.b * rad.b;
    if p.delta != 0.0 {
        let r_dm4 = rad.r_delta / (r2 * r2);
        zz -= 0.5 * p.gamma * a_m32 * p.delta * (p.delta - 2.0) * p.mu * p.mu * r_dm4;
    }
    let mut h = z.outer(z) * zz;
    for i in 0..3 {
        h.m[i][i] += iso;
    }
    // Entry-wise symmetry.
    for i in 0..3 {
        for j in 0..i {
            h.m[i][j] = h.m[j][i];
        }
    }
    Ok(h)
}

/// Symmetric strain contribution of a vorticity sample `w` seen at offset `z`:
/// `c(|z|) [(z×w)⊗z + z⊗(z×w)]`.
pub fn strain_kernel(z: Vec3, w: Vec3, p: &PotentialParams) -> Result<Mat3> {
    let r2 = check_point(z, p)?;
    if r2 == 0.0 {
        return Ok(Mat3::ZERO);
    }
    let c = Radial::at(r2, p).strain_coefficient(p);
    Ok(symmetric_outer(z.cross(w), z) * c)
}

/// `a⊗b + b⊗a` with bit-exact symmetry.
pub(crate) fn symmetric_outer(a: Vec3, b: Vec3) -> Mat3 {
    let mut m = a.outer(b);
    for i in 0..3 {
        for j in i..3 {
            let s = m.m[i][j] + m.m[j][i];
            m.m[i][j] = s;
            m.m[j][i] = s;
        }
    }
    m
}

/// Scalar stretching kernel
/// `K(r) = (gamma/4) delta (2-delta) mu^2 r^(delta-2) A^(-3/2) + (3 gamma/8) r^2 B^2 A^(-5/2)`.
pub fn kernel_k(r: f64, p: &PotentialParams) -> Result<f64> {
    check_radius(r)?;
    Ok(kernel_k_unchecked(r, p))
}

pub(crate) fn kernel_k_unchecked(r: f64, p: &PotentialParams) -> f64 {
    let a = r * r + p.mu * p.mu * math::pow(r, p.delta);
    let b = 2.0 + p.delta * p.mu * p.mu * math::pow(r, p.delta - 2.0);
    let a_m32 = math::pow(a, -1.5);
    let a_m52 = math::pow(a, -2.5);
    0.25 * p.gamma * p.delta * (2.0 - p.delta) * p.mu * p.mu * math::pow(r, p.delta - 2.0) * a_m32
        + 0.375 * p.gamma * r * r * b * b * a_m52
}

/// Three-term majorant of `K` obtained termwise from Cauchy-Schwarz.
pub fn cauchy_schwarz_k_bound(r: f64, p: &PotentialParams) -> Result<f64> {
    check_radius(r)?;
    let (g, d, mu) = (p.gamma, p.delta, p.mu);
    let mu2 = mu * mu;
    let first = 0.25
        * g
        * d
        * (2.0 - d)
        * mu2
        * math::pow(
            math::pow(r, (10.0 - 2.0 * d) / 3.0) + mu2 * math::pow(r, (4.0 + d) / 3.0),
            -1.5,
        );
    let second = 3.0 * g * math::pow(math::pow(r, 1.2) + mu2 * math::pow(r, d - 0.8), -2.5);
    let third = 0.75
        * g
        * d
        * d
        * mu2
        * mu2
        * math::pow(
            math::pow(r, (14.0 - 4.0 * d) / 5.0) + mu2 * math::pow(r, (4.0 + d) / 5.0),
            -2.5,
        );
    Ok(first + second + third)
}

/// Smallest admissible split radius: `max(mu^(-6/(4+delta)), mu^(-10/(4+delta)))`.
pub fn eta_min(p: &PotentialParams) -> f64 {
    let s = 4.0 + p.delta;
    math::pow(p.mu, -6.0 / s).max(math::pow(p.mu, -10.0 / s))
}

/// Far-field bound constant, valid for `|z| >= eta`.
pub fn kappa1(eta: f64, p: &PotentialParams) -> Result<f64> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Domain("eta must be finite and > 0"));
    }
    let (g, d, mu) = (p.gamma, p.delta, p.mu);
    Ok(
        0.25 * g * d * (2.0 - d) * mu * mu * math::pow(eta, -5.0 + d)
            + 0.5 * g * d * (1.0 - d) / mu * math::pow(eta, -2.0 - 0.5 * d)
            + 3.0 * g * math::pow(eta, -3.0)
            + 0.75 * g * d * d * math::pow(mu, 4.0) * math::pow(eta, 2.0 * d - 7.0),
    )
}

/// Near-field bound constant, valid for `|z| <= eta`; requires `eta >= eta_min`.
pub fn kappa2(eta: f64, p: &PotentialParams) -> Result<f64> {
    if !eta.is_finite() || eta < eta_min(p) {
        return Err(Error::Precondition(
            "eta must be at least max(mu^(-6/(4+delta)), mu^(-10/(4+delta)))",
        ));
    }
    let (g, d, mu) = (p.gamma, p.delta, p.mu);
    Ok(0.25 * g * d * (2.0 - d) * mu * mu
        + 0.75 * g * d * d * math::pow(mu, 4.0)
        + 3.0 * g * math::pow(mu, -5.0) * math::pow(eta, 2.0 - 2.5 * d))
}

/// `kappa1`, `kappa2` and the split radius they were evaluated at.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KappaConstants {
    pub kappa1: f64,
    pub kappa2: f64,
    pub eta: f64,
}

impl KappaConstants {
    pub fn new(p: &PotentialParams, eta: f64) -> Result<Self> {
        Ok(KappaConstants {
            kappa1: kappa1(eta, p)?,
            kappa2: kappa2(eta, p)?,
            eta,
        })
    }

    /// Constants at `eta = eta_min(p)`.
    pub fn at_eta_min(p: &PotentialParams) -> Self {
        Self::new(p, eta_min(p)).expect("eta_min is admissible")
    }

    pub fn max(&self) -> f64 {
        self.kappa1.max(self.kappa2)
    }

    /// The bound that applies at radius `r`; both apply at `r == eta`.
    pub fn bound_at(&self, r: f64) -> f64 {
        if r < self.eta {
            self.kappa2
        } else if r > self.eta {
            self.kappa1
        } else {
            self.kappa1.min(self.kappa2)
        }
    }
}

/// Outcome of a bound check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        }
    }
}

/// A sampled radius where `K` exceeds the bound constant for its region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundWitness {
    /// Position in the log-uniform sample grid.
    pub index: usize,
    pub r: f64,
    pub k: f64,
    pub bound: f64,
}

/// Result of sweeping `K` against `kappa1` / `kappa2`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub params: PotentialParams,
    pub constants: KappaConstants,
    pub r_lo: f64,
    pub r_hi: f64,
    pub samples: usize,
    /// Violations in increasing `r`.
    pub violations: Vec<BoundWitness>,
    /// Largest observed `K(r) / bound(r)`.
    pub max_ratio: f64,
}

impl BoundReport {
    pub fn verdict(&self) -> Verdict {
        if self.violations.is_empty() {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// True when the violating samples are exactly the first `m` grid points,
    /// i.e. every sample below a violation is itself a violation.
    pub fn violations_form_down_set(&self) -> bool {
        self.violations
            .iter()
            .enumerate()
            .all(|(k, w)| w.index == k)
    }

    /// Largest violating radius, if any.
    pub fn violation_edge(&self) -> Option<f64> {
        self.violations.last().map(|w| w.r)
    }
}

/// `i`-th point of an `n`-point log-uniform grid on `[lo, hi]`.
pub fn log_grid_point(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if i == 0 {
        return lo;
    }
    if i == n - 1 {
        return hi;
    }
    let (l0, l1) = (math::ln(lo), math::ln(hi));
    math::exp(l0 + (l1 - l0) * i as f64 / (n - 1) as f64)
}

/// Sample `K` on a log grid over `[r_lo, r_hi]` and collect every radius where
/// it exceeds `kappa2` (for `r <= eta`) or `kappa1` (for `r >= eta`).
///
/// This reports; it never asserts the bounds.
pub fn sweep_bounds(
    p: &PotentialParams,
    eta: f64,
    r_lo: f64,
    r_hi: f64,
    samples: usize,
) -> Result<BoundReport> {
    if !(r_lo > 0.0 && r_lo < r_hi && r_hi.is_finite()) {
        return Err(Error::Domain("sweep range must satisfy 0 < r_lo < r_hi"));
    }
    if samples < 2 {
        return Err(Error::Domain("sweep needs at least 2 samples"));
    }
    let constants = KappaConstants::new(p, eta)?;
    let mut violations = Vec::new();
    let mut max_ratio = 0.0_f64;
    for i in 0..samples {
        let r = log_grid_point(r_lo, r_hi, samples, i);
        let k = kernel_k_unchecked(r, p);
        let bound = constants.bound_at(r);
        max_ratio = max_ratio.max(k / bound);
        if k > bound {
            violations.push(BoundWitness {
                index: i,
                r,
                k,
                bound,
            });
        }
    }
    Ok(BoundReport {
        params: *p,
        constants,
        r_lo,
        r_hi,
        samples,
        violations,
        max_ratio,
    })
}
