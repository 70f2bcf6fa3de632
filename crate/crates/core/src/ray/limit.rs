//! Broken rays as one-sided limits of smooth rays at nearby angles.
//!
//! This is slow and only converges away from the crash potentials, where
//! nearby smooth rays pass a saddle at a distance that shrinks like a root of
//! the angle offset. It serves as an independent check on the saddle
//! continuation used by the main tracer.

use super::{trace_smooth, RaySample, Side, TraceEnd, RAY_LIMIT_TOL};
use crate::angle::Angle;
use crate::error::{Error, Result};
use crate::potential::PotentialField;

#[derive(Clone, Copy, Debug)]
pub struct LimitOptions {
    /// First angle offset.
    pub eps0: f64,
    /// Number of halvings tried.
    pub max_halvings: u32,
    /// Uniform tolerance between successive traces.
    pub tol: f64,
    /// Potentials compared: `[low, high]`.
    pub window: (f64, f64),
}

impl LimitOptions {
    pub fn new(low: f64, high: f64) -> Self {
        LimitOptions {
            eps0: 1e-3,
            max_halvings: 20,
            tol: RAY_LIMIT_TOL,
            window: (low, high),
        }
    }
}

/// Samples of the accepted perturbed trace within the window.
#[derive(Clone, Debug)]
pub struct LimitTrace {
    pub samples: Vec<RaySample>,
    pub epsilon: f64,
    pub discrepancy: f64,
}

impl LimitTrace {
    pub fn point_at(&self, s: f64) -> Option<num_complex::Complex64> {
        self.samples
            .iter()
            .find(|x| (x.potential - s).abs() <= 1e-12 * s)
            .map(|x| x.point)
    }
}

fn windowed(samples: &[RaySample], (lo, hi): (f64, f64)) -> Vec<RaySample> {
    samples
        .iter()
        .copied()
        .filter(|x| x.potential >= lo * (1.0 - 1e-12) && x.potential <= hi * (1.0 + 1e-12))
        .collect()
}

fn uniform_distance(a: &[RaySample], b: &[RaySample]) -> Option<f64> {
    let mut worst: f64 = 0.0;
    let mut shared = 0;
    for x in a {
        if let Some(y) = b.iter().find(|y| (y.potential - x.potential).abs() <= 1e-12 * x.potential) {
            worst = worst.max((x.point - y.point).norm());
            shared += 1;
        }
    }
    (shared > 0).then_some(worst)
}

/// Traces smooth rays at `theta + eps` (right) or `theta - eps` (left) with
/// `eps` halving until successive traces agree within the tolerance over
/// the potential window.
pub fn one_sided_limit(field: &PotentialField, theta: &Angle, side: Side, opts: LimitOptions) -> Result<LimitTrace> {
    let sign = match side {
        Side::Right => 1.0,
        Side::Left => -1.0,
    };
    let fail = |reason: &str| Error::BrokenTraceFailure {
        angle: theta.turns(),
        reason: reason.to_string(),
    };
    for eps0 in [opts.eps0, opts.eps0 / std::f64::consts::PI] {
        let mut prev: Option<Vec<RaySample>> = None;
        for j in 0..=opts.max_halvings {
            let eps = eps0 * 0.5f64.powi(j as i32);
            let t = trace_smooth(field, &theta.offset(sign * eps), opts.window.0, None)?;
            if t.end == TraceEnd::Crash {
                prev = None;
                continue;
            }
            let cur = windowed(&t.samples, opts.window);
            if let Some(p) = &prev {
                let gap = uniform_distance(p, &cur).ok_or_else(|| fail("no shared potentials"))?;
                if gap <= opts.tol {
                    return Ok(LimitTrace {
                        samples: cur,
                        epsilon: eps,
                        discrepancy: gap,
                    });
                }
            }
            prev = Some(cur);
        }
    }
    Err(fail("successive traces did not settle"))
}
