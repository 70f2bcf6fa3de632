//! Numerical run of the smooth-ray construction: starting from a broken
//! fixed ray landing at a fixed point, follow its partner rays to the next
//! fixed angle, check that the angles in between do not accumulate on the
//! component of the fixed point, and repeat until a smooth ray turns up.

use num_complex::Complex64;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::angle::{Angle, Orientation};
use crate::error::{Error, Result};
use crate::landing::{land, LandingReport};
use crate::poly::{PeriodicPoint, Polynomial};
use crate::potential::PotentialField;
use crate::probe::{component_probe, ray_meets, ComponentProbe};
use crate::ray::{
    capture_radius, crash_angles, partner_at, trace_broken, trace_ray, RayKind, Side, SNAP_TOL, S_FLOOR,
};

/// Partner entries computed per chain link.
pub const DEFAULT_PARTNERS: usize = 4;
/// Equispaced samples per gap.
pub const DEFAULT_GAP_SAMPLES: usize = 64;
/// Crash angles at or above this potential are added to each gap.
pub const GAP_CRASH_POTENTIAL: f64 = 1e-3;
/// Potential and resolution of the non-degeneracy probe.
pub const NONDEGENERACY_POTENTIAL: f64 = 1e-3;
pub const NONDEGENERACY_RESOLUTION: usize = 1024;
/// Smallest mask extent, in cells, accepted as a non-degenerate component.
pub const NONDEGENERACY_CELLS: usize = 10;
/// Largest gap between the extrapolated limit and a fixed angle.
pub const LIMIT_SNAP_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartnerEntry {
    pub n: usize,
    pub sigma: f64,
    #[serde(with = "crate::json::complex")]
    pub omega: Complex64,
    /// Exact preimage selected by crash location.
    pub b: Angle,
    /// Angle read off by ascending from the crash.
    pub geometric: Angle,
    /// Whether the geometric angle snapped to a rational.
    pub snapped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartnerSequence {
    pub degree: u32,
    pub a1: Angle,
    pub side: Side,
    /// Direction in which the partners move away from `a1`.
    pub orientation: Orientation,
    pub entries: Vec<PartnerEntry>,
}

/// Partners of a ray broken to the right move clockwise from it.
pub fn partner_orientation(side: Side) -> Orientation {
    match side {
        Side::Right => Orientation::Decreasing,
        Side::Left => Orientation::Increasing,
    }
}

/// The fixed angle reached first when leaving `from` in `orientation`;
/// `from` itself when it is the only one.
fn next_fixed_angle(degree: u32, from: &Angle, orientation: Orientation) -> Angle {
    Angle::fixed_angles(degree)
        .into_iter()
        .filter(|f| !f.same_as(from))
        .min_by(|a, b| from.arc_to(a, orientation).total_cmp(&from.arc_to(b, orientation)))
        .unwrap_or(*from)
}

fn strictly_inside(from: &Angle, to: &Angle, orientation: Orientation, x: &Angle) -> bool {
    if from.same_as(to) {
        !x.same_as(from)
    } else {
        from.arc_contains(to, orientation, x)
    }
}

/// Whether the `side`-broken ray at `theta` passes through `omega`.
fn passes_through(field: &PotentialField, theta: &Angle, side: Side, omega: Complex64, sigma: f64) -> Result<bool> {
    let s_lo = (0.5 * sigma).max(S_FLOOR);
    let t = trace_broken(field, theta, side, s_lo)?;
    Ok(t
        .crashes
        .iter()
        .any(|c| (c.singularity.location - omega).norm() <= capture_radius(omega)))
}

/// Follows the `side`-broken ray at the fixed angle `a1` through its first
/// `n_max` crashes and finds the partner angle at each, both by ascending
/// from the crash and by picking the exact preimage whose ray passes
/// through it.
pub fn partner_sequence(field: &PotentialField, a1: &Angle, side: Side, n_max: usize) -> Result<PartnerSequence> {
    let d = field.degree();
    if !a1.is_exact() || !a1.times(d).same_as(a1) {
        return Err(Error::Precondition(format!("{a1} is not an exact fixed angle")));
    }
    if n_max == 0 {
        return Err(Error::Precondition("at least one partner is needed".into()));
    }
    let probe = trace_ray(field, a1, None, S_FLOOR)?;
    if probe.crashes.is_empty() {
        return Err(Error::Precondition(format!("the ray at {a1} is smooth")));
    }
    let sigma1 = probe.crash_potential();
    let df = d as f64;
    let deepest = sigma1 / df.powi(n_max as i32 - 1);
    if deepest < S_FLOOR {
        return Err(Error::TraceDepth(deepest));
    }
    let trace = trace_broken(field, a1, side, (0.5 * deepest).max(S_FLOOR))?;
    let orientation = partner_orientation(side);
    let mut prev = *a1;
    let bound = next_fixed_angle(d, a1, orientation);
    let mut entries = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let sigma = sigma1 / df.powi(n as i32 - 1);
        let crash = trace
            .crashes
            .iter()
            .find(|c| (c.potential - sigma).abs() <= 1e-9 * sigma)
            .ok_or(Error::TraceDepth(sigma))?;
        let omega = crash.singularity.location;
        let (geometric, partner_side) = partner_at(field, &trace, omega)?;
        let candidates: Vec<Angle> = prev
            .preimages(d)
            .into_iter()
            .filter(|x| strictly_inside(&prev, &bound, orientation, x))
            .collect();
        let hits: Vec<bool> = candidates
            .par_iter()
            .map(|x| passes_through(field, x, partner_side, omega, sigma))
            .collect::<Result<_>>()?;
        let chosen: Vec<Angle> = candidates
            .iter()
            .zip(&hits)
            .filter(|(_, &h)| h)
            .map(|(x, _)| *x)
            .collect();
        let mismatch = |combinatorial: String| Error::Inconsistency {
            step: n,
            geometric: geometric.to_string(),
            combinatorial,
        };
        let b = match chosen.as_slice() {
            [b] => *b,
            [] => return Err(mismatch("no preimage passes through the crash".into())),
            many => {
                let names: Vec<String> = many.iter().map(|x| x.to_string()).collect();
                return Err(mismatch(names.join(", ")));
            }
        };
        if geometric.distance(&b) > SNAP_TOL {
            return Err(mismatch(b.to_string()));
        }
        entries.push(PartnerEntry {
            n,
            sigma,
            omega,
            b,
            geometric,
            snapped: geometric.is_exact(),
        });
        // the partners move monotonically, so the next one lies beyond this one
        prev = b;
    }
    Ok(PartnerSequence {
        degree: d,
        a1: *a1,
        side,
        orientation,
        entries,
    })
}

/// Extrapolated end of a partner sequence.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitAngle {
    pub angle: Angle,
    /// Distance in turns from the extrapolated value to the snapped angle.
    pub residual: f64,
    /// The limit coincides with the starting angle.
    pub degenerate: bool,
}

/// Signed lifts of the partners, measured from `a1` in the sequence's
/// orientation.
fn lifts(seq: &PartnerSequence) -> Vec<f64> {
    let sign = match seq.orientation {
        Orientation::Increasing => 1.0,
        Orientation::Decreasing => -1.0,
    };
    let mut out = vec![0.0];
    let mut prev = seq.a1;
    let mut acc = 0.0;
    for e in &seq.entries {
        acc += sign * prev.arc_to(&e.b, seq.orientation);
        out.push(acc);
        prev = e.b;
    }
    out
}

/// Limit of the partners: the tail shrinks by the degree each step, so the
/// remaining distance is the last increment over `D - 1`.
pub fn limit_angle(seq: &PartnerSequence) -> Result<LimitAngle> {
    if seq.entries.len() < 3 {
        return Err(Error::Precondition("limit needs at least three partners".into()));
    }
    let x = lifts(seq);
    let n = x.len();
    let step = x[n - 1] - x[n - 2];
    let limit = seq.a1.turns() + x[n - 1] + step / (seq.degree as f64 - 1.0);
    let nearest = Angle::fixed_angles(seq.degree)
        .into_iter()
        .min_by(|a, b| {
            a.distance(&Angle::from_turns(limit))
                .total_cmp(&b.distance(&Angle::from_turns(limit)))
        })
        .expect("at least one fixed angle");
    let residual = nearest.distance(&Angle::from_turns(limit));
    if residual > LIMIT_SNAP_TOL {
        return Err(Error::LimitUnresolved(format!(
            "extrapolated {limit} is {residual:e} turns from the nearest fixed angle"
        )));
    }
    Ok(LimitAngle {
        angle: nearest,
        residual,
        degenerate: nearest.same_as(&seq.a1),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport {
    pub from: Angle,
    pub to: Angle,
    pub orientation: Orientation,
    pub potential: f64,
    pub samples: usize,
    pub crash_angles: usize,
    pub violations: Vec<Angle>,
}

/// Probe potential for gap checks: a point of `[s_min/D^2, s_min/D]` as far
/// as possible, on a log scale, from every singular potential.
pub fn gap_potential(field: &PotentialField, s_min: f64) -> f64 {
    let d = field.degree() as f64;
    let mut levels = Vec::new();
    for (_, g) in field.escaping_critical_points() {
        let mut s = g;
        while s > s_min / (d * d * d) {
            levels.push(s.ln());
            s /= d;
        }
    }
    let (lo, hi) = ((s_min / (d * d)).ln(), (s_min / d).ln());
    (0..=64)
        .map(|k| lo + (hi - lo) * k as f64 / 64.0)
        .max_by(|a, b| {
            let gap = |x: &f64| levels.iter().map(|l| (x - l).abs()).fold(f64::INFINITY, f64::min);
            gap(a).total_cmp(&gap(b))
        })
        .map(f64::exp)
        .unwrap_or(s_min / d)
}

/// Tests `m_samples` equispaced angles strictly between `from` and `to`,
/// plus every crash angle there, for accumulation on `probe`.
pub fn gap_check_with(
    field: &PotentialField,
    from: &Angle,
    to: &Angle,
    orientation: Orientation,
    m_samples: usize,
    probe: &ComponentProbe,
) -> Result<GapReport> {
    if from.same_as(to) {
        return Err(Error::Precondition("gap endpoints coincide".into()));
    }
    let mut angles: Vec<Angle> = (1..=m_samples as i64)
        .map(|k| from.toward(to, orientation, Ratio::new(k, m_samples as i64 + 1)))
        .collect();
    let crashes: Vec<Angle> = crash_angles(field, GAP_CRASH_POTENTIAL)?
        .into_iter()
        .map(|c| c.angle)
        .filter(|x| from.arc_contains(to, orientation, x))
        .collect();
    let crash_count = crashes.len();
    angles.extend(crashes);
    let hits: Vec<bool> = angles
        .par_iter()
        .map(|x| ray_meets(field, x, probe))
        .collect::<Result<_>>()?;
    let violations = angles
        .iter()
        .zip(&hits)
        .filter(|(_, &h)| h)
        .map(|(x, _)| *x)
        .collect();
    Ok(GapReport {
        from: *from,
        to: *to,
        orientation,
        potential: probe.potential,
        samples: m_samples,
        crash_angles: crash_count,
        violations,
    })
}

/// [`gap_check_with`] on a fresh probe around `base` at [`gap_potential`].
pub fn gap_check(
    field: &PotentialField,
    from: &Angle,
    to: &Angle,
    orientation: Orientation,
    m_samples: usize,
    base: Complex64,
) -> Result<GapReport> {
    let s = gap_potential(field, GAP_CRASH_POTENTIAL);
    let probe = component_probe(field, base, s, crate::probe::DEFAULT_RESOLUTION)?;
    gap_check_with(field, from, to, orientation, m_samples, &probe)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainLink {
    pub angle: Angle,
    pub kind: RayKind,
    pub partners: Option<PartnerSequence>,
    pub limit: Option<LimitAngle>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Nondegeneracy {
    pub potential: f64,
    pub resolution: usize,
    pub cell_size: f64,
    pub diameter_cells: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub polynomial: Polynomial,
    pub z0: PeriodicPoint,
    pub nondegeneracy: Nondegeneracy,
    pub chain: Vec<ChainLink>,
    pub gap_checks: Vec<GapReport>,
    pub terminated_smooth: bool,
    pub steps: usize,
    /// Set when the numbers contradict what the construction guarantees.
    pub theorem_violation: Option<String>,
    /// Set when a sub-step failed; the report is then partial.
    pub aborted: Option<String>,
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub partners: usize,
    pub gap_samples: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            partners: DEFAULT_PARTNERS,
            gap_samples: DEFAULT_GAP_SAMPLES,
        }
    }
}

fn same_point(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= 1e-8 * a.norm().max(1.0)
}

/// The ray at `theta` that lands at `z0`: the smooth one if it reaches the
/// floor, otherwise a broken one.
fn landing_ray(field: &PotentialField, theta: &Angle, z0: Complex64) -> Result<Option<LandingReport>> {
    let at_z0 = |r: &LandingReport| r.landed_at.as_ref().is_some_and(|p| same_point(p.location, z0));
    let right = land(field, theta, Some(Side::Right))?;
    if right.kind == RayKind::Smooth {
        return Ok(at_z0(&right).then_some(right));
    }
    if at_z0(&right) {
        return Ok(Some(right));
    }
    let left = land(field, theta, Some(Side::Left))?;
    Ok(at_z0(&left).then_some(left))
}

/// Checks the hypotheses, then builds the chain of fixed angles landing at
/// `z0`, starting from `a1`.
pub fn verify_main_theorem(
    field: &PotentialField,
    z0: &PeriodicPoint,
    a1: &Angle,
    opts: VerifyOptions,
) -> Result<VerificationReport> {
    let d = field.degree();
    if z0.period != 1 || !z0.class.is_landing_class() {
        return Err(Error::Precondition(format!(
            "{} must be a repelling or parabolic fixed point",
            z0.location
        )));
    }
    if !a1.is_exact() || !a1.times(d).same_as(a1) {
        return Err(Error::Precondition(format!("{a1} is not a fixed angle")));
    }
    let probe = component_probe(field, z0.location, NONDEGENERACY_POTENTIAL, NONDEGENERACY_RESOLUTION)?;
    let nondegeneracy = Nondegeneracy {
        potential: NONDEGENERACY_POTENTIAL,
        resolution: NONDEGENERACY_RESOLUTION,
        cell_size: probe.frame.cell_size(),
        diameter_cells: probe.diameter_cells(),
    };
    if nondegeneracy.diameter_cells <= NONDEGENERACY_CELLS {
        return Err(Error::Precondition(format!(
            "the component of {} looks degenerate: {} cells across at potential {}",
            z0.location, nondegeneracy.diameter_cells, NONDEGENERACY_POTENTIAL
        )));
    }
    let first = landing_ray(field, a1, z0.location)?
        .ok_or_else(|| Error::Precondition(format!("no ray at {a1} lands at {}", z0.location)))?;

    let mut report = VerificationReport {
        polynomial: field.poly().clone(),
        z0: z0.clone(),
        nondegeneracy,
        chain: Vec::new(),
        gap_checks: Vec::new(),
        terminated_smooth: false,
        steps: 0,
        theorem_violation: None,
        aborted: None,
    };
    let gap_probe = match component_probe(
        field,
        z0.location,
        gap_potential(field, GAP_CRASH_POTENTIAL),
        crate::probe::DEFAULT_RESOLUTION,
    ) {
        Ok(p) => p,
        Err(e) => {
            report.aborted = Some(e.to_string());
            return Ok(report);
        }
    };

    let mut current = first;
    loop {
        let angle = current.angle;
        let kind = current.kind;
        if kind == RayKind::Smooth {
            report.chain.push(ChainLink {
                angle,
                kind,
                partners: None,
                limit: None,
            });
            report.terminated_smooth = true;
            break;
        }
        let side = kind.side().expect("broken ray has a side");
        let step = partner_sequence(field, &angle, side, opts.partners).and_then(|seq| {
            let limit = limit_angle(&seq)?;
            Ok((seq, limit))
        });
        let (seq, limit) = match step {
            Ok(v) => v,
            Err(e) => {
                report.chain.push(ChainLink {
                    angle,
                    kind,
                    partners: None,
                    limit: None,
                });
                report.aborted = Some(e.to_string());
                break;
            }
        };
        let next = limit.angle;
        let orientation = seq.orientation;
        report.chain.push(ChainLink {
            angle,
            kind,
            partners: Some(seq),
            limit: Some(limit),
        });
        if report.chain.iter().any(|l| l.angle.same_as(&next)) {
            report.theorem_violation = Some(format!("the partners of {angle} converge back to {next}"));
            break;
        }
        match gap_check_with(field, &angle, &next, orientation, opts.gap_samples, &gap_probe) {
            Ok(g) => {
                let bad = !g.violations.is_empty();
                report.gap_checks.push(g);
                if bad {
                    report.theorem_violation =
                        Some(format!("angles between {angle} and {next} accumulate on the component of z0"));
                    break;
                }
            }
            Err(e) => {
                report.aborted = Some(e.to_string());
                break;
            }
        }
        current = match landing_ray(field, &next, z0.location) {
            Ok(Some(r)) => r,
            Ok(None) => {
                report.theorem_violation = Some(format!("no ray at {next} lands at z0"));
                break;
            }
            Err(e) => {
                report.aborted = Some(e.to_string());
                break;
            }
        };
        if report.chain.len() >= d as usize - 1 {
            report.chain.push(ChainLink {
                angle: current.angle,
                kind: current.kind,
                partners: None,
                limit: None,
            });
            if current.kind == RayKind::Smooth {
                report.terminated_smooth = true;
            } else {
                report.theorem_violation = Some(format!("no smooth ray within {} steps", d - 1));
            }
            break;
        }
    }
    report.steps = report.chain.len();
    Ok(report)
}
