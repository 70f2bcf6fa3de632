//! External rays: seeding in the Böttcher chart, tracing smooth rays down to
//! their first saddle, continuing broken rays through saddles, crash angles
//! and partner rays.

mod limit;
mod saddle;
pub(crate) mod walk;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize};

use crate::angle::Angle;
use crate::error::{Error, Result};
use crate::potential::{PotentialField, Singularity};
use saddle::SaddleModel;
use walk::{Cursor, Direction, Walker};

pub use limit::{one_sided_limit, LimitOptions};

/// Traces that reach this potential are treated as landed.
pub const S_FLOOR: f64 = 1e-8;
/// Agreement required between a sample's label and its actual potential.
pub const POT_TOL: f64 = 1e-9;
/// Uniform distance under which two traces count as the same curve.
pub const RAY_LIMIT_TOL: f64 = 1e-6;
/// Measured angles are snapped to rationals this close.
pub const SNAP_TOL: f64 = 1e-9;
/// Phase offset below which a ray is considered to run into a saddle.
pub const CRASH_ANGLE_TOL: f64 = walk::ANGLE_TOL;
const SEED_RETRIES: usize = 5;

/// Distance at which a trace point is identified with a singularity.
pub fn capture_radius(omega: Complex64) -> f64 {
    1e-6 * (1.0 + omega.norm())
}

/// Largest denominator used when snapping measured angles.
pub fn snap_denominator(degree: u32) -> i64 {
    (degree as i64).pow(6) - 1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

impl std::str::FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            _ => Err(Error::Precondition(format!("side must be left or right, got {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RayKind {
    Smooth,
    LeftBroken,
    RightBroken,
}

impl RayKind {
    pub fn broken(side: Side) -> RayKind {
        match side {
            Side::Left => RayKind::LeftBroken,
            Side::Right => RayKind::RightBroken,
        }
    }

    pub fn side(self) -> Option<Side> {
        match self {
            RayKind::Smooth => None,
            RayKind::LeftBroken => Some(Side::Left),
            RayKind::RightBroken => Some(Side::Right),
        }
    }
}

/// How a trace stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceEnd {
    /// Reached the requested lowest potential.
    Floor,
    /// Ran into a singularity and was not asked to continue.
    Crash,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RaySample {
    pub potential: f64,
    pub point: Complex64,
}

impl Serialize for RaySample {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(3))?;
        seq.serialize_element(&self.potential)?;
        seq.serialize_element(&self.point.re)?;
        seq.serialize_element(&self.point.im)?;
        seq.end()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CrashEvent {
    pub singularity: Singularity,
    pub potential: f64,
    /// Unit vector from the singularity toward the side the ray came from.
    #[serde(with = "crate::json::complex")]
    pub incoming_direction: Complex64,
    /// Unit vector along which the ray leaves; absent when the trace stops.
    #[serde(with = "crate::json::opt_complex")]
    pub outgoing_direction: Option<Complex64>,
    pub turn: Option<Side>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RayTrace {
    pub angle: Angle,
    pub kind: RayKind,
    pub samples: Vec<RaySample>,
    pub crashes: Vec<CrashEvent>,
    pub end: TraceEnd,
}

impl RayTrace {
    pub fn endpoint(&self) -> Complex64 {
        self.samples.last().map_or(Complex64::new(f64::NAN, f64::NAN), |s| s.point)
    }

    pub fn lowest_potential(&self) -> f64 {
        self.samples.last().map_or(f64::NAN, |s| s.potential)
    }

    /// The sample whose potential is closest to `s` on a log scale.
    pub fn sample_near(&self, s: f64) -> Option<&RaySample> {
        self.samples
            .iter()
            .min_by(|a, b| {
                (a.potential / s).ln().abs().total_cmp(&(b.potential / s).ln().abs())
            })
    }

    /// The sample at exactly potential `s` (up to rounding), if any.
    pub fn sample_at(&self, s: f64) -> Option<&RaySample> {
        self.samples
            .iter()
            .find(|x| (x.potential - s).abs() <= 1e-12 * s)
    }

    /// Potential of the first crash, zero if none.
    pub fn crash_potential(&self) -> f64 {
        self.crashes.first().map_or(0.0, |c| c.potential)
    }
}

/// Default starting potential: comfortably above every singularity.
pub fn default_s_hi(field: &PotentialField) -> f64 {
    2f64.max(2.0 * field.highest_singular_potential() + 1.0)
}

fn wrap_phase(x: f64) -> f64 {
    let y = (x + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU);
    y - std::f64::consts::PI
}

/// Point of potential `s_hi` on the ray at angle `theta`, by Newton in the
/// Böttcher chart started from `exp(s_hi + 2 pi i theta)`.
pub fn ray_seed(field: &PotentialField, theta: &Angle, s_hi: f64) -> Result<Complex64> {
    let fail = || Error::SeedFailure {
        angle: theta.turns(),
        potential: s_hi,
    };
    if s_hi <= field.highest_singular_potential() {
        return Err(Error::Domain(format!(
            "seed potential {s_hi} is not above the highest singularity"
        )));
    }
    let target = Complex64::new(s_hi, std::f64::consts::TAU * theta.turns());
    let mut z = target.exp();
    for _ in 0..80 {
        let b = field.boettcher(z).map_err(|_| fail())?;
        let mut f = b.ln() - target;
        f.im = wrap_phase(f.im);
        if f.norm() <= 4.0 * f64::EPSILON * (1.0 + s_hi) {
            break;
        }
        let q = field.phi_derivative(z).map_err(|_| fail())?;
        let mut step = f / q;
        if step.norm() > 0.5 * z.norm() {
            step *= 0.5 * z.norm() / step.norm();
        }
        z -= step;
        if step.norm() <= 1e-16 * z.norm() {
            break;
        }
    }
    let b = field.boettcher(z).map_err(|_| fail())?;
    if (b - target.exp()).norm() > 1e-10 * s_hi.exp() {
        return Err(fail());
    }
    Ok(z)
}

/// Seeds at `s_hi`, raising it when Newton fails.
fn seed_with_retries(field: &PotentialField, theta: &Angle, s_hi: f64) -> Result<(Complex64, f64)> {
    let mut s = s_hi;
    let mut last = None;
    for _ in 0..=SEED_RETRIES {
        match ray_seed(field, theta, s) {
            Ok(z) => return Ok((z, s)),
            Err(e @ Error::SeedFailure { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
        s += 1.0;
    }
    Err(last.unwrap_or(Error::SeedFailure {
        angle: theta.turns(),
        potential: s,
    }))
}

fn check_range(field: &PotentialField, s_lo: f64, s_hi: f64) -> Result<()> {
    if !(s_lo >= S_FLOOR * (1.0 - 1e-12)) {
        return Err(Error::Precondition(format!(
            "s_lo = {s_lo} is below the potential floor {S_FLOOR}"
        )));
    }
    if !(s_hi > s_lo) {
        return Err(Error::Precondition(format!("s_hi = {s_hi} must exceed s_lo = {s_lo}")));
    }
    if s_hi <= field.highest_singular_potential() {
        return Err(Error::Precondition(format!(
            "s_hi = {s_hi} must lie above the highest singular potential"
        )));
    }
    Ok(())
}

fn trace_with(
    field: &PotentialField,
    theta: &Angle,
    side: Option<Side>,
    s_lo: f64,
    s_hi: Option<f64>,
) -> Result<RayTrace> {
    let s_hi = s_hi.unwrap_or_else(|| default_s_hi(field));
    check_range(field, s_lo, s_hi)?;
    let (z, s_hi) = seed_with_retries(field, theta, s_hi)?;
    let walker = Walker::new(field);
    let walk = walker.walk(Cursor { z, s: s_hi }, s_lo, Direction::Down, side)?;
    let kind = match (side, walk.crashes.is_empty()) {
        (Some(side), false) => RayKind::broken(side),
        _ => RayKind::Smooth,
    };
    Ok(RayTrace {
        angle: *theta,
        kind,
        samples: walk.samples,
        crashes: walk.crashes,
        end: walk.end,
    })
}

/// Traces the smooth ray at `theta` from `s_hi` down to `s_lo`, stopping at
/// the first singularity it runs into.
pub fn trace_smooth(field: &PotentialField, theta: &Angle, s_lo: f64, s_hi: Option<f64>) -> Result<RayTrace> {
    trace_with(field, theta, None, s_lo, s_hi)
}

/// Traces the broken ray that turns to `side` at every singularity. For
/// angles that never crash this is the smooth ray.
pub fn trace_broken(field: &PotentialField, theta: &Angle, side: Side, s_lo: f64) -> Result<RayTrace> {
    trace_with(field, theta, Some(side), s_lo, None)
}

/// Traces the ray at `theta`: smooth when `side` is `None`.
pub fn trace_ray(field: &PotentialField, theta: &Angle, side: Option<Side>, s_lo: f64) -> Result<RayTrace> {
    trace_with(field, theta, side, s_lo, None)
}

/// Potential at which the smooth ray at `theta` first runs into a
/// singularity, or zero if it reaches the floor.
pub fn crash_potential(field: &PotentialField, theta: &Angle) -> Result<f64> {
    crash_potential_above(field, theta, S_FLOOR)
}

/// As [`crash_potential`] but only looking down to `s_lo`.
pub fn crash_potential_above(field: &PotentialField, theta: &Angle, s_lo: f64) -> Result<f64> {
    if field.highest_singular_potential() == 0.0 {
        return Ok(0.0);
    }
    Ok(trace_smooth(field, theta, s_lo, None)?.crash_potential())
}

/// Result of an upward walk from a point to the top of the chart.
pub(crate) struct Ascent {
    pub angle: f64,
    pub reached_top: bool,
}

fn ascend(field: &PotentialField, start: Cursor, side: Option<Side>) -> Result<Ascent> {
    let walker = Walker::new(field);
    let top = default_s_hi(field);
    let walk = walker.walk(start, top, Direction::Up, side)?;
    if walk.end == TraceEnd::Crash {
        return Ok(Ascent {
            angle: f64::NAN,
            reached_top: false,
        });
    }
    let b = field.boettcher(walk.last.z)?;
    Ok(Ascent {
        angle: (b.arg() / std::f64::consts::TAU).rem_euclid(1.0),
        reached_top: true,
    })
}

/// Ascends from a singularity along `direction`, following broken-ray turns
/// of the given side at higher singularities.
pub(crate) fn ascend_from(
    field: &PotentialField,
    singularity: Singularity,
    direction: f64,
    side: Option<Side>,
) -> Result<Ascent> {
    let walker = Walker::new(field);
    let top = default_s_hi(field);
    let start = walker.depart(singularity, direction, Direction::Up, top)?;
    ascend(field, start, side)
}

/// An angle whose smooth ray crashes, with its crash potential.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CrashAngle {
    pub angle: Angle,
    pub potential: f64,
}

/// Angles whose smooth rays crash at potential at least `s_min`.
///
/// Rays crashing straight into escaping critical points are found by
/// ascending from each such point along its unstable directions; the rest
/// are their iterated preimages under the circle map, each confirmed by a
/// trace.
pub fn crash_angles(field: &PotentialField, s_min: f64) -> Result<Vec<CrashAngle>> {
    if !(s_min >= S_FLOOR * (1.0 - 1e-12)) {
        return Err(Error::Precondition(format!("s_min = {s_min} is below the floor")));
    }
    let d = field.degree();
    let max_den = snap_denominator(d);
    let mut seeds: Vec<CrashAngle> = Vec::new();
    for (c, g) in field.escaping_critical_points() {
        if g < s_min {
            continue;
        }
        let (order, generation) = field.singular_data(c.location)?;
        let sing = Singularity {
            location: c.location,
            potential: g,
            order,
            generation,
        };
        let model = SaddleModel::new(field, c.location, order)
            .ok_or_else(|| Error::trace(g, c.location, "no local model at critical point"))?;
        for alpha in model.unstable_directions() {
            let up = ascend_from(field, sing, alpha, None)?;
            if up.reached_top {
                let angle = Angle::snap_or_keep(up.angle, max_den, SNAP_TOL);
                seeds.push(CrashAngle { angle, potential: g });
            }
        }
    }
    let mut all: Vec<CrashAngle> = Vec::new();
    let mut frontier = Vec::new();
    for s in seeds {
        if !all.iter().any(|a| a.angle.same_as(&s.angle)) {
            all.push(s);
            frontier.push(s);
        }
    }
    while let Some(cur) = frontier.pop() {
        let child_potential = cur.potential / d as f64;
        if child_potential < s_min {
            continue;
        }
        for pre in cur.angle.preimages(d) {
            if all.iter().any(|a| a.angle.same_as(&pre)) {
                continue;
            }
            let entry = CrashAngle {
                angle: pre,
                potential: child_potential,
            };
            all.push(entry);
            frontier.push(entry);
        }
    }
    let s_lo = (s_min * 0.5).max(S_FLOOR);
    let measured: Vec<f64> = all
        .par_iter()
        .map(|a| crash_potential_above(field, &a.angle, s_lo))
        .collect::<Result<_>>()?;
    let mut out: Vec<CrashAngle> = all
        .into_iter()
        .zip(measured)
        .filter(|(_, m)| *m >= s_min * (1.0 - 1e-9))
        .map(|(a, m)| CrashAngle {
            angle: a.angle,
            potential: m,
        })
        .collect();
    out.sort_by(|a, b| {
        b.potential
            .total_cmp(&a.potential)
            .then(a.angle.turns().total_cmp(&b.angle.turns()))
    });
    Ok(out)
}

/// The partner of a broken ray at the singularity `omega` it crashes into:
/// the ray that arrives along the neighbouring unstable direction and leaves
/// along the same stable direction. Returns its angle and side.
pub fn partner_at(field: &PotentialField, arriving: &RayTrace, omega: Complex64) -> Result<(Angle, Side)> {
    let event = arriving
        .crashes
        .iter()
        .find(|c| (c.singularity.location - omega).norm() <= capture_radius(omega))
        .ok_or(Error::NoPartner(omega))?;
    let side = event
        .turn
        .ok_or_else(|| Error::Precondition("arriving ray does not turn at this singularity".into()))?;
    let m = event.singularity.order as f64;
    let sign = match side {
        Side::Right => 1.0,
        Side::Left => -1.0,
    };
    let partner_dir = event.incoming_direction.arg() + sign * std::f64::consts::TAU / m;
    let partner_side = side.opposite();
    let up = ascend_from(field, event.singularity, partner_dir, Some(partner_side))?;
    if !up.reached_top {
        return Err(Error::NoPartner(omega));
    }
    let angle = Angle::snap_or_keep(up.angle, snap_denominator(field.degree()), SNAP_TOL);
    Ok((angle, partner_side))
}

#[cfg(test)]
mod tests;
