//! Where periodic rays land, and which rays land at a given periodic point.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::angle::Angle;
use crate::error::{Error, Result};
use crate::poly::{PeriodicPoint, PointClass};
use crate::potential::PotentialField;
use crate::ray::{trace_ray, RayKind, RayTrace, Side, S_FLOOR};

/// Largest endpoint distance at which a ray counts as landed.
pub const LAND_TOL: f64 = 1e-3;

/// Agreement needed to call two periodic points the same.
const SAME_POINT_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LandingReport {
    pub angle: Angle,
    pub kind: RayKind,
    #[serde(with = "crate::json::complex")]
    pub endpoint: Complex64,
    pub landed_at: Option<PeriodicPoint>,
    pub distance: f64,
    pub converged: bool,
}

/// Newton on `P^k(z) = z` from `z`.
fn periodic_newton(field: &PotentialField, z: Complex64, k: u32) -> Option<Complex64> {
    let poly = field.poly();
    let mut z = z;
    for _ in 0..100 {
        let (w, dw) = poly.iterate_with_derivative(z, k as usize);
        let f = w - z;
        let df = dw - 1.0;
        if df.norm() == 0.0 || !f.re.is_finite() {
            return None;
        }
        let step = f / df;
        z -= step;
        if step.norm() <= 1e-15 * z.norm().max(1.0) {
            break;
        }
    }
    let scale = z.norm().max(1.0);
    ((poly.iterate(z, k as usize) - z).norm() <= 1e-9 * scale).then_some(z)
}

fn periodic_point_at(field: &PotentialField, z: Complex64, k: u32) -> PeriodicPoint {
    let poly = field.poly();
    let scale = z.norm().max(1.0);
    let period = (1..=k)
        .filter(|j| k.is_multiple_of(*j))
        .find(|&j| (poly.iterate(z, j as usize) - z).norm() <= 1e-9 * scale)
        .unwrap_or(k);
    let multiplier = poly.iterate_with_derivative(z, period as usize).1;
    PeriodicPoint {
        location: z,
        period,
        multiplier,
        class: PointClass::of_multiplier(multiplier),
    }
}

/// The repelling or parabolic point of period dividing `q` nearest to `z`,
/// if one lies within [`LAND_TOL`].
fn match_endpoint(field: &PotentialField, z: Complex64, q: u32) -> Option<PeriodicPoint> {
    (1..=q)
        .filter(|k| q.is_multiple_of(*k))
        .filter_map(|k| periodic_newton(field, z, k))
        .map(|p| periodic_point_at(field, p, q))
        .filter(|p| p.class.is_landing_class() && (p.location - z).norm() <= LAND_TOL)
        .min_by(|a, b| (a.location - z).norm().total_cmp(&(b.location - z).norm()))
}

/// Whether the trace settles: the gaps between samples a decade apart in
/// potential shrink over the last three decades.
fn settles(trace: &RayTrace) -> bool {
    let pts: Vec<Complex64> = [1000.0, 100.0, 10.0, 1.0]
        .iter()
        .filter_map(|f| trace.sample_near(S_FLOOR * f).map(|s| s.point))
        .collect();
    if pts.len() < 4 {
        return false;
    }
    let gaps: Vec<f64> = pts.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    gaps.windows(2).all(|g| g[1] <= g[0])
}

fn report_for(field: &PotentialField, trace: RayTrace, q: u32) -> LandingReport {
    let endpoint = trace.endpoint();
    let landed_at = match_endpoint(field, endpoint, q);
    let distance = landed_at.as_ref().map_or(f64::INFINITY, |p| (p.location - endpoint).norm());
    let converged = settles(&trace);
    LandingReport {
        angle: trace.angle,
        kind: trace.kind,
        endpoint,
        landed_at,
        distance,
        converged,
    }
}

fn angle_period(field: &PotentialField, theta: &Angle) -> Result<u32> {
    if !theta.is_exact() {
        return Err(Error::Precondition(format!(
            "landing needs an exact rational angle, got {theta}"
        )));
    }
    theta.period(field.degree()).ok_or_else(|| {
        Error::Precondition(format!("angle {theta} is not periodic under multiplication by {}", field.degree()))
    })
}

/// Traces the ray at `theta` to the floor and matches its endpoint against
/// periodic points whose period divides that of `theta`.
///
/// Without a side the ray must be smooth; a crash is reported as a
/// precondition error naming the crash potential.
pub fn land(field: &PotentialField, theta: &Angle, side: Option<Side>) -> Result<LandingReport> {
    let q = angle_period(field, theta)?;
    let trace = trace_ray(field, theta, side, S_FLOOR)?;
    if side.is_none() && !trace.crashes.is_empty() {
        return Err(Error::Precondition(format!(
            "the ray at {theta} crashes at potential {:e}; choose a side",
            trace.crash_potential()
        )));
    }
    Ok(report_for(field, trace, q))
}

/// Period bound beyond which enumeration is refused.
pub fn max_lambda_period(degree: u32) -> u32 {
    if degree >= 4 {
        3
    } else {
        5
    }
}

/// Angles of period dividing `q` whose rays land at `z0`, each with its kind.
/// Crashing angles are traced on both sides.
pub fn lambda_set(field: &PotentialField, z0: &PeriodicPoint, q: u32) -> Result<Vec<(Angle, RayKind)>> {
    let d = field.degree();
    if q == 0 || q > max_lambda_period(d) {
        return Err(Error::UnsupportedPeriod {
            period: q,
            max: max_lambda_period(d),
        });
    }
    if !z0.class.is_landing_class() {
        return Err(Error::Precondition(format!(
            "{} is not repelling or parabolic",
            z0.location
        )));
    }
    let angles = Angle::periodic_angles(d, q);
    let reports: Vec<Vec<LandingReport>> = angles
        .par_iter()
        .map(|theta| {
            let first = land(field, theta, Some(Side::Right))?;
            if first.kind == RayKind::Smooth {
                return Ok(vec![first]);
            }
            let second = land(field, theta, Some(Side::Left))?;
            Ok(vec![first, second])
        })
        .collect::<Result<_>>()?;
    let hits: Vec<(Angle, RayKind)> = reports
        .into_iter()
        .flatten()
        .filter(|r| {
            r.landed_at
                .as_ref()
                .is_some_and(|p| (p.location - z0.location).norm() <= SAME_POINT_TOL * z0.location.norm().max(1.0))
        })
        .map(|r| (r.angle, r.kind))
        .collect();
    if let Some((first, _)) = hits.first() {
        let p = first.period(d);
        if let Some((other, _)) = hits.iter().find(|(a, _)| a.period(d) != p) {
            return Err(Error::Inconsistency {
                step: 0,
                geometric: format!("{first} has period {p:?}"),
                combinatorial: format!("{other} has period {:?}", other.period(d)),
            });
        }
    }
    Ok(hits)
}
