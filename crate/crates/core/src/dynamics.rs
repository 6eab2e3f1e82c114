//! Self-induced motion of a closed filament under the de-singularized
//! Biot-Savart velocity, integrated with fixed-step classical RK4.
//!
//! The line integral over the filament parameter is evaluated with the
//! periodic trapezoidal rule, skipping the node the velocity is evaluated at.
//! For `delta = 0` the integrand vanishes on the diagonal, so the skip costs
//! nothing; for `delta > 0` it is integrable there and the skip error vanishes
//! under refinement.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{self, ClosedCurve, CurveDiagnostics};
use crate::kernel::{PotentialParams, Radial};
use crate::linalg::Vec3;
use crate::par;

/// Speeds above this abort the integration.
pub const MAX_SPEED: f64 = 1e12;

/// Sign and circulation placement of the velocity integral.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SignConvention {
    /// `u(x) = -(1/4pi) ∫ grad phi(x - y) × gamma_y dy` with the circulation inside `phi`.
    #[default]
    Field,
    /// `u(x) = -(gamma/4pi) ∫ a(x - y) × gamma_y dy` with
    /// `a(z) = (B/2) A^(-3/2) z`, which carries no circulation. Equal to `-Field`.
    Literal,
}

impl SignConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            SignConvention::Field => "field",
            SignConvention::Literal => "literal",
        }
    }
}

impl FromStr for SignConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "field" => Ok(SignConvention::Field),
            "literal" => Ok(SignConvention::Literal),
            _ => Err(Error::Config("sign_convention must be field or literal")),
        }
    }
}

fn velocity_at(
    nodes: &[Vec3],
    tangents: &[Vec3],
    p: &PotentialParams,
    x: Vec3,
    skip: Option<usize>,
    convention: SignConvention,
) -> Result<Vec3> {
    let mut acc = Vec3::ZERO;
    for (k, (&node, &t)) in nodes.iter().zip(tangents).enumerate() {
        if Some(k) == skip {
            continue;
        }
        let z = x - node;
        let r2 = z.norm_sq();
        if r2 == 0.0 {
            if p.delta() > 0.0 {
                return Err(Error::SingularPoint);
            }
            // grad phi_0(0) = 0.
            continue;
        }
        let rad = Radial::at(r2, p);
        let factor = match convention {
            SignConvention::Field => rad.grad_factor(p),
            SignConvention::Literal => 0.5 * rad.b * rad.a_m32(),
        };
        acc += (z * factor).cross(t);
    }
    let prefactor = match convention {
        SignConvention::Field => -1.0 / (4.0 * PI * nodes.len() as f64),
        SignConvention::Literal => -p.gamma() / (4.0 * PI * nodes.len() as f64),
    };
    Ok(acc * prefactor)
}

/// Velocity induced by the filament at `x`.
///
/// If `x` is one of the nodes its index must be passed as `skip_index`; for
/// `delta > 0` evaluating at a node without skipping it is a
/// [`Error::SingularPoint`].
pub fn induced_velocity(
    c: &ClosedCurve,
    p: &PotentialParams,
    x: Vec3,
    skip_index: Option<usize>,
) -> Result<Vec3> {
    induced_velocity_with(c, p, x, skip_index, SignConvention::Field)
}

pub fn induced_velocity_with(
    c: &ClosedCurve,
    p: &PotentialParams,
    x: Vec3,
    skip_index: Option<usize>,
    convention: SignConvention,
) -> Result<Vec3> {
    let t = geometry::tangents(c);
    velocity_at(c.nodes(), &t, p, x, skip_index, convention)
}

fn velocities_of(
    nodes: &[Vec3],
    p: &PotentialParams,
    convention: SignConvention,
) -> Result<Vec<Vec3>> {
    let t = geometry::tangents_of(nodes)?;
    par::map_indices(nodes.len(), |i| {
        velocity_at(nodes, &t, p, nodes[i], Some(i), convention)
    })
    .into_iter()
    .collect()
}

/// Self-induced velocity at every node (diagonal term excluded).
pub fn velocity_field(c: &ClosedCurve, p: &PotentialParams) -> Result<Vec<Vec3>> {
    velocities_of(c.nodes(), p, SignConvention::Field)
}

pub fn velocity_field_with(
    c: &ClosedCurve,
    p: &PotentialParams,
    convention: SignConvention,
) -> Result<Vec<Vec3>> {
    velocities_of(c.nodes(), p, convention)
}

fn max_speed(v: &[Vec3]) -> f64 {
    v.iter().map(|u| u.norm()).fold(0.0, |a: f64, s| {
        if s.is_nan() || a.is_nan() {
            f64::NAN
        } else {
            a.max(s)
        }
    })
}

fn check_speed(v: &[Vec3]) -> core::result::Result<(), f64> {
    let s = max_speed(v);
    if s.is_finite() && s <= MAX_SPEED {
        Ok(())
    } else {
        Err(s)
    }
}

fn axpy(base: &[Vec3], k: &[Vec3], h: f64) -> Vec<Vec3> {
    base.iter().zip(k).map(|(&x, &v)| x + v * h).collect()
}

/// One RK4 step over raw nodes; every stage is checked for runaway speeds.
fn rk4_nodes(
    nodes: &[Vec3],
    p: &PotentialParams,
    dt: f64,
    convention: SignConvention,
) -> core::result::Result<Vec<Vec3>, StepFailure> {
    let stage = |pts: &[Vec3]| -> core::result::Result<Vec<Vec3>, StepFailure> {
        if !pts.iter().all(|v| v.is_finite()) {
            return Err(StepFailure::BlowUp(f64::NAN));
        }
        let v = velocities_of(pts, p, convention).map_err(StepFailure::Other)?;
        check_speed(&v).map_err(StepFailure::BlowUp)?;
        Ok(v)
    };
    let k1 = stage(nodes)?;
    let k2 = stage(&axpy(nodes, &k1, 0.5 * dt))?;
    let k3 = stage(&axpy(nodes, &k2, 0.5 * dt))?;
    let k4 = stage(&axpy(nodes, &k3, dt))?;
    let out: Vec<Vec3> = (0..nodes.len())
        .map(|i| nodes[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0))
        .collect();
    if !out.iter().all(|v| v.is_finite()) {
        return Err(StepFailure::BlowUp(f64::NAN));
    }
    Ok(out)
}

enum StepFailure {
    BlowUp(f64),
    Other(Error),
}

/// Classical four-stage RK4 step of every node.
pub fn step_rk4(c: &ClosedCurve, p: &PotentialParams, dt: f64) -> Result<ClosedCurve> {
    step_rk4_with(c, p, dt, SignConvention::Field)
}

pub fn step_rk4_with(
    c: &ClosedCurve,
    p: &PotentialParams,
    dt: f64,
    convention: SignConvention,
) -> Result<ClosedCurve> {
    if !(dt.is_finite() && dt != 0.0) {
        return Err(Error::Domain("time step must be finite and non-zero"));
    }
    match rk4_nodes(c.nodes(), p, dt, convention) {
        Ok(nodes) => ClosedCurve::from_nodes_unchecked(nodes),
        Err(StepFailure::BlowUp(max_speed)) => Err(Error::BlowUp {
            step: 1,
            t: dt,
            max_speed,
        }),
        Err(StepFailure::Other(e)) => Err(e),
    }
}

/// Thresholds for flagging discrete loss of smoothness. Flags never stop a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothnessMonitor {
    /// Flag when `min_separation < factor * length / N`.
    pub min_separation_factor: f64,
    /// Flag when the maximum discrete curvature exceeds this value.
    pub max_curvature: Option<f64>,
}

impl Default for SmoothnessMonitor {
    fn default() -> Self {
        SmoothnessMonitor {
            min_separation_factor: 1.0,
            max_curvature: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SmoothnessIssue {
    NodesTooClose { min_separation: f64, threshold: f64 },
    CurvatureTooLarge { max_curvature: f64, threshold: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothnessWarning {
    pub step: usize,
    pub t: f64,
    pub issue: SmoothnessIssue,
}

impl SmoothnessMonitor {
    fn inspect(
        &self,
        n: usize,
        d: &CurveDiagnostics,
    ) -> (Option<SmoothnessIssue>, Option<SmoothnessIssue>) {
        let threshold = self.min_separation_factor * d.length / n as f64;
        let close = (d.min_separation < threshold).then_some(SmoothnessIssue::NodesTooClose {
            min_separation: d.min_separation,
            threshold,
        });
        let bent = self.max_curvature.and_then(|threshold| {
            (d.max_curvature > threshold).then_some(SmoothnessIssue::CurvatureTooLarge {
                max_curvature: d.max_curvature,
                threshold,
            })
        });
        (close, bent)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub potential: PotentialParams,
    pub dt: f64,
    pub t_end: f64,
    pub output_every: usize,
    pub curve: ClosedCurve,
    pub sign_convention: SignConvention,
    pub monitor: SmoothnessMonitor,
}

impl SimulationConfig {
    pub fn new(
        potential: PotentialParams,
        curve: ClosedCurve,
        dt: f64,
        t_end: f64,
        output_every: usize,
    ) -> Result<Self> {
        let cfg = SimulationConfig {
            potential,
            dt,
            t_end,
            output_every,
            curve,
            sign_convention: SignConvention::Field,
            monitor: SmoothnessMonitor::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Domain("dt must be finite and > 0"));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.dt) {
            return Err(Error::Domain("t_end must be finite and >= dt"));
        }
        if self.output_every == 0 {
            return Err(Error::Domain("output_every must be >= 1"));
        }
        Ok(())
    }

    /// Number of RK4 steps; the last one is shortened to land on `t_end`.
    pub fn step_count(&self) -> usize {
        let n = libm::ceil(self.t_end / self.dt - 1e-9);
        (n as usize).max(1)
    }
}

/// One recorded snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub step: usize,
    pub t: f64,
    pub curve: ClosedCurve,
    pub diagnostics: CurveDiagnostics,
    pub mean_speed: f64,
    pub max_speed: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub frames: Vec<Frame>,
    pub warnings: Vec<SmoothnessWarning>,
}

/// A run stopped early; `partial` holds everything recorded before the failure.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationAbort {
    pub error: Error,
    pub partial: Trajectory,
}

impl fmt::Display for SimulationAbort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ({} frames recorded)",
            self.error,
            self.partial.frames.len()
        )
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SimulationAbort {}

fn record(
    step: usize,
    t: f64,
    nodes: &[Vec3],
    cfg: &SimulationConfig,
) -> core::result::Result<Frame, Error> {
    let curve = ClosedCurve::from_nodes_unchecked(nodes.to_vec())?;
    let v = velocities_of(nodes, &cfg.potential, cfg.sign_convention)?;
    let speeds: Vec<f64> = v.iter().map(|u| u.norm()).collect();
    let mean_speed = speeds.iter().sum::<f64>() / speeds.len() as f64;
    Ok(Frame {
        step,
        t,
        diagnostics: geometry::curve_diagnostics(&curve),
        curve,
        mean_speed,
        max_speed: max_speed(&v),
    })
}

/// Fixed-step RK4 from `t = 0` to `t_end`.
///
/// Frames are recorded at step 0, every `output_every` steps and at the final
/// step.
pub fn run_simulation(cfg: &SimulationConfig) -> core::result::Result<Trajectory, SimulationAbort> {
    let mut traj = Trajectory::default();
    let abort = |error: Error, partial: Trajectory| SimulationAbort { error, partial };
    if let Err(e) = cfg.validate() {
        return Err(abort(e, traj));
    }
    let n_steps = cfg.step_count();
    let n = cfg.curve.len();
    let mut nodes = cfg.curve.nodes().to_vec();
    match record(0, 0.0, &nodes, cfg) {
        Ok(f) => traj.frames.push(f),
        Err(e) => return Err(abort(e, traj)),
    }
    let mut flagged = (false, false);
    for step in 1..=n_steps {
        let last = step == n_steps;
        let t0 = (step - 1) as f64 * cfg.dt;
        let h = if last { cfg.t_end - t0 } else { cfg.dt };
        let t = if last {
            cfg.t_end
        } else {
            step as f64 * cfg.dt
        };
        nodes = match rk4_nodes(&nodes, &cfg.potential, h, cfg.sign_convention) {
            Ok(next) => next,
            Err(StepFailure::BlowUp(max_speed)) => {
                return Err(abort(Error::BlowUp { step, t, max_speed }, traj))
            }
            Err(StepFailure::Other(e)) => return Err(abort(e, traj)),
        };

        let curve = ClosedCurve::from_nodes_unchecked(nodes.clone())
            .expect("rk4 output is finite and keeps the node count");
        let diag = geometry::curve_diagnostics(&curve);
        let (close, bent) = cfg.monitor.inspect(n, &diag);
        for (issue, was) in [(close, &mut flagged.0), (bent, &mut flagged.1)] {
            match issue {
                Some(issue) if !*was => {
                    traj.warnings.push(SmoothnessWarning { step, t, issue });
                    *was = true;
                }
                None => *was = false,
                _ => {}
            }
        }

        if step % cfg.output_every == 0 || last {
            match record(step, t, &nodes, cfg) {
                Ok(f) => traj.frames.push(f),
                Err(e) => return Err(abort(e, traj)),
            }
        }
    }
    Ok(traj)
}
