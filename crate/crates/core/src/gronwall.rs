//! Scalar Gronwall envelopes for the enstrophy balance
//! `dE/dt + nu ∫|grad ω|² <= k Σ E` and a sandbox ODE that exercises them.

use alloc::vec::Vec;
use core::cell::Cell;

use crate::error::{Error, Result};
use crate::kernel::Verdict;
use crate::math;

/// Relative slack allowed above the envelope.
pub const ENVELOPE_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GronwallParams {
    /// Viscosity.
    pub nu: f64,
    /// Initial enstrophy.
    pub e0: f64,
    /// Total circulation.
    pub sigma: f64,
    /// Combined bound constant `max(kappa1, kappa2)`.
    pub k: f64,
}

impl GronwallParams {
    pub fn new(nu: f64, e0: f64, sigma: f64, k: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::Domain("nu must be finite and > 0"));
        }
        for (v, msg) in [
            (e0, "E0 must be finite and >= 0"),
            (sigma, "sigma must be finite and >= 0"),
            (k, "k must be finite and >= 0"),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Domain(msg));
            }
        }
        Ok(GronwallParams { nu, e0, sigma, k })
    }

    /// Growth rate `k Σ`.
    pub fn rate(&self) -> f64 {
        self.k * self.sigma
    }
}

/// Whether the exponent carries the elapsed time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ExponentPolicy {
    /// `E0 exp(k Σ t)`, the Gronwall conclusion of the differential inequality.
    #[default]
    WithTime,
    /// `E0 exp(k Σ)`, independent of `t`.
    Literal,
}

/// `E0 exp(k Σ t)`.
pub fn enstrophy_envelope(g: &GronwallParams, t: f64) -> f64 {
    enstrophy_envelope_with(g, t, ExponentPolicy::WithTime)
}

pub fn enstrophy_envelope_with(g: &GronwallParams, t: f64, policy: ExponentPolicy) -> f64 {
    match policy {
        ExponentPolicy::WithTime => g.e0 * math::exp(g.rate() * t),
        ExponentPolicy::Literal => g.e0 * math::exp(g.rate()),
    }
}

/// `nu^-1 k Σ E0 exp(k Σ)`.
pub fn grad_enstrophy_budget(g: &GronwallParams) -> f64 {
    g.rate() * g.e0 * math::exp(g.rate()) / g.nu
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SandboxSample {
    pub t: f64,
    pub e: f64,
    pub envelope: f64,
    /// `envelope - E`; negative means the envelope was exceeded.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SandboxOutcome {
    pub series: Vec<SandboxSample>,
    /// `nu ∫ P dt` accumulated alongside `E`.
    pub dissipation_integral: f64,
    /// First sample with `E > envelope (1 + slack)`.
    pub first_excess: Option<SandboxSample>,
    /// First `(t, E)` where the profile exceeded `k Σ |E|` or `P < 0`.
    pub profile_violation: Option<(f64, f64)>,
}

impl SandboxOutcome {
    pub fn verdict(&self) -> Verdict {
        if self.first_excess.is_none() && self.profile_violation.is_none() {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Largest `(E - envelope) / envelope` over the series.
    pub fn max_relative_excess(&self) -> f64 {
        self.series
            .iter()
            .filter(|s| s.envelope > 0.0)
            .map(|s| (s.e - s.envelope) / s.envelope)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Integrate `dE/dt = -nu P(t, E) + profile(t, E)` with RK4 and compare
/// against [`enstrophy_envelope`] after every step.
///
/// `profile` must satisfy `|profile(t, E)| <= k Σ |E|` and `dissipation` must
/// be non-negative; both are checked at every stage and the run stops at the
/// first violation.
pub fn gronwall_sandbox(
    g: &GronwallParams,
    profile: impl Fn(f64, f64) -> f64,
    dissipation: impl Fn(f64, f64) -> f64,
    t_end: f64,
    dt: f64,
) -> Result<SandboxOutcome> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::Domain("t_end must be finite and > 0"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Domain("dt must be finite and > 0"));
    }
    let rate = g.rate();
    let violation = Cell::new(None);
    // d/dt (E, D) with D = nu ∫ P.
    let rhs = |t: f64, e: f64| -> (f64, f64) {
        let s = profile(t, e);
        let p = dissipation(t, e);
        let admissible = s.abs() <= rate * e.abs() * (1.0 + 1e-12) && p >= 0.0;
        if !admissible && violation.get().is_none() {
            violation.set(Some((t, e)));
        }
        (-g.nu * p + s, g.nu * p)
    };

    let sample = |t: f64, e: f64| {
        let envelope = enstrophy_envelope(g, t);
        SandboxSample {
            t,
            e,
            envelope,
            margin: envelope - e,
        }
    };

    let n_steps = (libm::ceil(t_end / dt - 1e-9) as usize).max(1);
    let mut series = Vec::with_capacity(n_steps + 1);
    series.push(sample(0.0, g.e0));
    let (mut e, mut d) = (g.e0, 0.0);
    let mut first_excess = None;
    for step in 1..=n_steps {
        let t0 = (step - 1) as f64 * dt;
        let last = step == n_steps;
        let h = if last { t_end - t0 } else { dt };
        let (k1e, k1d) = rhs(t0, e);
        let (k2e, k2d) = rhs(t0 + 0.5 * h, e + 0.5 * h * k1e);
        let (k3e, k3d) = rhs(t0 + 0.5 * h, e + 0.5 * h * k2e);
        let (k4e, k4d) = rhs(t0 + h, e + h * k3e);
        e += h / 6.0 * (k1e + 2.0 * (k2e + k3e) + k4e);
        d += h / 6.0 * (k1d + 2.0 * (k2d + k3d) + k4d);
        let t = if last { t_end } else { step as f64 * dt };
        let s = sample(t, e);
        if first_excess.is_none() && s.e > s.envelope * (1.0 + ENVELOPE_SLACK) {
            first_excess = Some(s);
        }
        series.push(s);
        if violation.get().is_some() {
            break;
        }
    }
    Ok(SandboxOutcome {
        series,
        dissipation_integral: d,
        first_excess,
        profile_violation: violation.get(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(nu: f64, e0: f64, sigma: f64, k: f64) -> GronwallParams {
        GronwallParams::new(nu, e0, sigma, k).unwrap()
    }

    #[test]
    fn envelope_examples() {
        let p = g(1.0, 1.0, 3.0, 2.0);
        assert_eq!(enstrophy_envelope(&p, 0.0), 1.0);
        assert!((enstrophy_envelope(&p, 0.5) - 3f64.exp()).abs() < 1e-13);
        assert!((enstrophy_envelope(&p, 0.5) - 20.0855).abs() < 1e-4);
        for t in [0.0, 1.0, 7.0] {
            assert_eq!(enstrophy_envelope(&g(1.0, 2.5, 3.0, 0.0), t), 2.5);
            assert_eq!(enstrophy_envelope(&g(1.0, 2.5, 0.0, 4.0), t), 2.5);
        }
        let lit = enstrophy_envelope_with(&p, 123.0, ExponentPolicy::Literal);
        assert!((lit - 6f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn budget_examples() {
        assert_eq!(grad_enstrophy_budget(&g(1.0, 1.0, 0.0, 3.0)), 0.0);
        let b = grad_enstrophy_budget(&g(1.0, 1.0, 1.0, 1.0));
        assert!((b - core::f64::consts::E).abs() < 1e-15);
        let b2 = grad_enstrophy_budget(&g(2.0, 1.0, 1.0, 1.0));
        assert_eq!(b2, b / 2.0);
    }

    #[test]
    fn params_validation() {
        assert!(GronwallParams::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(GronwallParams::new(1.0, -1.0, 1.0, 1.0).is_err());
        assert!(GronwallParams::new(1.0, 1.0, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn zero_profile_keeps_enstrophy_constant() {
        let p = g(1.0, 2.0, 1.0, 1.0);
        let out = gronwall_sandbox(&p, |_, _| 0.0, |_, _| 0.0, 1.0, 0.01).unwrap();
        assert_eq!(out.verdict(), Verdict::Pass);
        assert!(out.series.iter().all(|s| s.e == 2.0));
        assert_eq!(out.series.len(), 101);
    }

    #[test]
    fn saturating_profile_tracks_exponential() {
        let p = g(1.0, 1.0, 3.0, 2.0);
        let rate = p.rate();
        let out = gronwall_sandbox(&p, |_, e| rate * e, |_, _| 0.0, 1.0, 1e-3).unwrap();
        assert_eq!(out.verdict(), Verdict::Pass);
        for s in &out.series {
            let exact = (rate * s.t).exp();
            assert!((s.e - exact).abs() <= 1e-8 * exact);
        }
    }

    #[test]
    fn dissipation_keeps_strictly_below() {
        let p = g(1.0, 1.0, 1.0, 1.0);
        let out = gronwall_sandbox(&p, |_, e| e, |_, e| e, 1.0, 1e-2).unwrap();
        assert_eq!(out.verdict(), Verdict::Pass);
        assert!(out.series[1..].iter().all(|s| s.e < s.envelope));
        assert!(out.dissipation_integral > 0.0);
    }

    #[test]
    fn inadmissible_profile_is_reported() {
        let p = g(1.0, 1.0, 1.0, 1.0);
        let out = gronwall_sandbox(
            &p,
            |t, e| if t > 0.5 { 3.0 * e } else { 0.0 },
            |_, _| 0.0,
            1.0,
            0.1,
        )
        .unwrap();
        assert_eq!(out.verdict(), Verdict::Fail);
        let (t, e) = out.profile_violation.unwrap();
        assert!(t > 0.5 && t <= 0.6 + 1e-12);
        assert_eq!(e, 1.0);
    }
}
