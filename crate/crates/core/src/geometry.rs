//! Periodic discretized closed curves and the geometric quantities used by the
//! stretching estimate.

use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::math;

/// Minimum node count for the five-point periodic stencils.
pub const MIN_NODES: usize = 8;

/// A closed curve sampled at `y_k = k / N`; node `N` is node `0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedCurve {
    nodes: Vec<Vec3>,
}

impl ClosedCurve {
    /// Validates node count, finiteness and that no two non-adjacent nodes coincide.
    pub fn new(nodes: Vec<Vec3>) -> Result<Self> {
        let curve = Self::from_nodes_unchecked(nodes)?;
        if curve.min_separation() <= 0.0 {
            return Err(Error::Domain(
                "curve is not embedded: two non-adjacent nodes coincide",
            ));
        }
        Ok(curve)
    }

    /// Only node count and finiteness are checked.
    pub(crate) fn from_nodes_unchecked(nodes: Vec<Vec3>) -> Result<Self> {
        if nodes.len() < MIN_NODES {
            return Err(Error::Resolution {
                nodes: nodes.len(),
                min: MIN_NODES,
            });
        }
        if !nodes.iter().all(|v| v.is_finite()) {
            return Err(Error::Domain("curve nodes must be finite"));
        }
        Ok(ClosedCurve { nodes })
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn into_nodes(self) -> Vec<Vec3> {
        self.nodes
    }

    /// Apply `f` to every node (rigid motions, scalings, reflections).
    pub fn map(&self, f: impl Fn(Vec3) -> Vec3) -> Result<Self> {
        Self::new(self.nodes.iter().map(|&v| f(v)).collect())
    }

    /// Same point set traversed backwards, starting at the same node.
    pub fn reversed(&self) -> Self {
        let n = self.nodes.len();
        let nodes = (0..n).map(|k| self.nodes[(n - k) % n]).collect();
        ClosedCurve { nodes }
    }

    /// Minimum chord length over node pairs at periodic index distance >= 2.
    pub fn min_separation(&self) -> f64 {
        min_separation(&self.nodes)
    }

    pub fn centroid(&self) -> Vec3 {
        let mut c = Vec3::ZERO;
        for &v in &self.nodes {
            c += v;
        }
        c / self.nodes.len() as f64
    }
}

pub(crate) fn min_separation(nodes: &[Vec3]) -> f64 {
    let n = nodes.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in (i + 2)..n {
            // (i, j) with j - i >= 2; also exclude the wrap-around neighbour.
            if i == 0 && j == n - 1 {
                continue;
            }
            best = best.min((nodes[i] - nodes[j]).norm_sq());
        }
    }
    math::sqrt(best)
}

/// Discrete `d gamma / dy` by fourth-order central differences on the periodic
/// grid with spacing `1/N`. Not normalized.
pub fn tangents(c: &ClosedCurve) -> Vec<Vec3> {
    tangents_of(&c.nodes).expect("validated curve has enough nodes")
}

pub(crate) fn tangents_of(nodes: &[Vec3]) -> Result<Vec<Vec3>> {
    let n = nodes.len();
    if n < MIN_NODES {
        return Err(Error::Resolution {
            nodes: n,
            min: MIN_NODES,
        });
    }
    let scale = n as f64 / 12.0;
    Ok((0..n)
        .map(|k| {
            let m2 = nodes[(k + n - 2) % n];
            let m1 = nodes[(k + n - 1) % n];
            let p1 = nodes[(k + 1) % n];
            let p2 = nodes[(k + 2) % n];
            ((m2 - p2) + (p1 - m1) * 8.0) * scale
        })
        .collect())
}

/// Fourth-order periodic second derivative `d^2 gamma / dy^2`.
fn second_derivatives(nodes: &[Vec3]) -> Vec<Vec3> {
    let n = nodes.len();
    let scale = (n * n) as f64 / 12.0;
    (0..n)
        .map(|k| {
            let m2 = nodes[(k + n - 2) % n];
            let m1 = nodes[(k + n - 1) % n];
            let c = nodes[k];
            let p1 = nodes[(k + 1) % n];
            let p2 = nodes[(k + 2) % n];
            (-(m2 + p2) + (m1 + p1) * 16.0 - c * 30.0) * scale
        })
        .collect()
}

/// Length, embeddedness proxy and curvature of a discrete curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveDiagnostics {
    pub length: f64,
    pub min_separation: f64,
    pub max_curvature: f64,
}

pub fn curve_diagnostics(c: &ClosedCurve) -> CurveDiagnostics {
    let d1 = tangents(c);
    let d2 = second_derivatives(&c.nodes);
    // Trapezoid on a periodic grid is the plain mean.
    let length = d1.iter().map(|t| t.norm()).sum::<f64>() / d1.len() as f64;
    let max_curvature = d1
        .iter()
        .zip(&d2)
        .map(|(t, a)| {
            let s = t.norm();
            t.cross(*a).norm() / (s * s * s)
        })
        .fold(0.0_f64, f64::max);
    CurveDiagnostics {
        length,
        min_separation: c.min_separation(),
        max_curvature,
    }
}

/// `(e1 · e3) det[e1 e2 e3]` for unit vectors.
pub fn geometric_d(e1: Vec3, e2: Vec3, e3: Vec3) -> Result<f64> {
    for e in [e1, e2, e3] {
        if (e.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Precondition("geometric_d expects unit vectors"));
        }
    }
    Ok(e1.dot(e3) * e1.dot(e2.cross(e3)))
}

/// `|sin angle(a, b)| = |a × b| / (|a| |b|)`.
pub fn sin_angle(a: Vec3, b: Vec3) -> Result<f64> {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Domain("sin_angle of a zero vector"));
    }
    Ok((a.cross(b).norm() / (na * nb)).min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CurveKind {
    Ring,
    PerturbedRing,
    Trefoil,
}

impl CurveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveKind::Ring => "ring",
            CurveKind::PerturbedRing => "perturbed_ring",
            CurveKind::Trefoil => "trefoil",
        }
    }
}

impl FromStr for CurveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ring" => Ok(CurveKind::Ring),
            "perturbed_ring" => Ok(CurveKind::PerturbedRing),
            "trefoil" => Ok(CurveKind::Trefoil),
            _ => Err(Error::Config(
                "unknown curve kind (expected ring, perturbed_ring or trefoil)",
            )),
        }
    }
}

/// Test geometries.
///
/// * `Ring`: circle of radius `scale` in the xy-plane.
/// * `PerturbedRing`: the ring displaced radially by `amplitude sin(3t)`.
/// * `Trefoil`: the (2,3) torus knot `((2 + cos 3t) cos 2t, (2 + cos 3t) sin 2t, sin 3t)`
///   scaled by `scale`.
pub fn seed_curve(kind: CurveKind, n: usize, scale: f64, amplitude: f64) -> Result<ClosedCurve> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Domain("curve scale must be finite and > 0"));
    }
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::Domain("curve amplitude must be finite and >= 0"));
    }
    if n < MIN_NODES {
        return Err(Error::Resolution {
            nodes: n,
            min: MIN_NODES,
        });
    }
    let nodes = (0..n)
        .map(|k| {
            let t = TAU * k as f64 / n as f64;
            let (s, c) = (math::sin(t), math::cos(t));
            match kind {
                CurveKind::Ring => Vec3::new(scale * c, scale * s, 0.0),
                CurveKind::PerturbedRing => {
                    let radius = scale + amplitude * math::sin(3.0 * t);
                    Vec3::new(radius * c, radius * s, 0.0)
                }
                CurveKind::Trefoil => {
                    let rho = 2.0 + math::cos(3.0 * t);
                    Vec3::new(
                        scale * rho * math::cos(2.0 * t),
                        scale * rho * math::sin(2.0 * t),
                        scale * math::sin(3.0 * t),
                    )
                }
            }
        })
        .collect();
    ClosedCurve::new(nodes)
}
