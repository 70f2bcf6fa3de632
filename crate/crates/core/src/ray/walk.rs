//! Path following along field lines of the Green's function.
//!
//! A walk moves a point along a level curve of `arg B` while the potential
//! runs through a geometric grid. Each step is an Euler predictor followed by
//! Newton on the local difference of `log B`, so the angle is preserved to
//! rounding error. Saddles are located on the fly by pulling escaping
//! critical points back with Newton, and crossings are decided from the
//! phase offset to the saddle.

use std::f64::consts::TAU;

use num_complex::Complex64;

use super::saddle::{angular_gap, SaddleModel};
use super::{CrashEvent, RaySample, Side, TraceEnd};
use crate::error::{Error, Result};
use crate::potential::{DepthState, PotentialField, Singularity};

/// Grid points per factor of `D` in potential.
pub(crate) const STEPS_PER_FACTOR: f64 = 24.0;
/// Phase offset, in turns, below which a field line is taken to run into a
/// saddle.
pub(crate) const ANGLE_TOL: f64 = 1e-10;
const MAX_GRADIENT_CHANGE: f64 = 0.3;
const MAX_CORRECTION: f64 = 0.3;
const APPROACH_STEPS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Direction {
    Down,
    Up,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Cursor {
    pub z: Complex64,
    pub s: f64,
}

/// A saddle the walk has run into.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Capture {
    pub singularity: Singularity,
    pub model: SaddleModel,
    /// Snapped direction from the saddle toward the side we came from.
    pub arrival: f64,
}

enum Outcome {
    Reached,
    Captured(Capture),
}

pub(crate) struct Walk {
    pub samples: Vec<RaySample>,
    pub crashes: Vec<CrashEvent>,
    pub end: TraceEnd,
    pub last: Cursor,
}

pub(crate) struct Walker<'a> {
    field: &'a PotentialField,
    escaping: Vec<(Complex64, f64)>,
    ln_d: f64,
}

impl<'a> Walker<'a> {
    pub fn new(field: &'a PotentialField) -> Self {
        Walker {
            field,
            escaping: field
                .escaping_critical_points()
                .into_iter()
                .map(|(c, g)| (c.location, g))
                .collect(),
            ln_d: (field.degree() as f64).ln(),
        }
    }

    /// Next grid potential strictly beyond `s` in the given direction. The
    /// grid is `D^(-k/24)` for integer `k`, so it is invariant under `s -> D s`.
    pub fn next_grid(&self, s: f64, dir: Direction) -> f64 {
        let k = -s.ln() * STEPS_PER_FACTOR / self.ln_d;
        let next = match dir {
            Direction::Down => (k + 1e-9).floor() + 1.0,
            Direction::Up => (k - 1e-9).ceil() - 1.0,
        };
        (-next * self.ln_d / STEPS_PER_FACTOR).exp()
    }

    fn beyond(dir: Direction, a: f64, b: f64) -> bool {
        match dir {
            Direction::Down => a <= b,
            Direction::Up => a >= b,
        }
    }

    /// Walks from `start` until the potential reaches `stop`. With `side` set,
    /// saddles are passed by turning to that side; without it the walk ends
    /// at the first saddle.
    pub fn walk(&self, start: Cursor, stop: f64, dir: Direction, side: Option<Side>) -> Result<Walk> {
        let mut samples = vec![RaySample {
            potential: start.s,
            point: start.z,
        }];
        let mut crashes = Vec::new();
        let mut cur = start;
        let mut end = TraceEnd::Floor;
        while !Self::beyond(dir, cur.s, stop) {
            let mut target = self.next_grid(cur.s, dir);
            if Self::beyond(dir, target, stop) {
                target = stop;
            }
            match self.move_to(&mut cur, target, dir, true)? {
                Outcome::Reached => samples.push(RaySample {
                    potential: cur.s,
                    point: cur.z,
                }),
                Outcome::Captured(cap) => {
                    let omega = cap.singularity.location;
                    samples.push(RaySample {
                        potential: cap.singularity.potential,
                        point: omega,
                    });
                    let incoming = Complex64::from_polar(1.0, cap.arrival);
                    let Some(side) = side else {
                        crashes.push(CrashEvent {
                            singularity: cap.singularity,
                            potential: cap.singularity.potential,
                            incoming_direction: incoming,
                            outgoing_direction: None,
                            turn: None,
                        });
                        end = TraceEnd::Crash;
                        cur = Cursor {
                            z: omega,
                            s: cap.singularity.potential,
                        };
                        break;
                    };
                    let exit = turn(&cap, dir, side);
                    crashes.push(CrashEvent {
                        singularity: cap.singularity,
                        potential: cap.singularity.potential,
                        incoming_direction: incoming,
                        outgoing_direction: Some(Complex64::from_polar(1.0, exit)),
                        turn: Some(side),
                    });
                    if Self::beyond(dir, cap.singularity.potential, stop) {
                        cur = Cursor {
                            z: omega,
                            s: cap.singularity.potential,
                        };
                        break;
                    }
                    cur = self.leave(&cap, exit, dir, stop)?;
                }
            }
        }
        Ok(Walk {
            samples,
            crashes,
            end,
            last: cur,
        })
    }

    /// Starts a walk at a saddle, leaving along `direction`.
    pub fn depart(&self, singularity: Singularity, direction: f64, dir: Direction, stop: f64) -> Result<Cursor> {
        let model = SaddleModel::new(self.field, singularity.location, singularity.order)
            .ok_or_else(|| Error::trace(singularity.potential, singularity.location, "no local model"))?;
        let cap = Capture {
            singularity,
            model,
            arrival: direction,
        };
        self.leave(&cap, direction, dir, stop)
    }

    /// Moves the cursor to potential `target`, possibly in several sub-steps.
    fn move_to(&self, cur: &mut Cursor, target: f64, dir: Direction, watch: bool) -> Result<Outcome> {
        let mut trial = target - cur.s;
        loop {
            let remaining = target - cur.s;
            if remaining == 0.0 {
                return Ok(Outcome::Reached);
            }
            if watch {
                if let Some(cap) = self.check_capture(cur, target, dir)? {
                    return Ok(Outcome::Captured(cap));
                }
            }
            let step = if trial.abs() >= remaining.abs() {
                remaining
            } else {
                trial
            };
            match self.try_step(*cur, step) {
                Some(z) => {
                    cur.z = z;
                    cur.s = if step == remaining { target } else { cur.s + step };
                    trial = step * 2.0;
                }
                None => {
                    trial = step / 2.0;
                    if trial.abs() < 1e-14 * cur.s {
                        return Err(Error::trace(cur.s, cur.z, "step size underflow"));
                    }
                }
            }
        }
    }

    fn working_depth(&self, z: Complex64) -> Option<usize> {
        self.field.escape(z).map(|e| e.depth + 1)
    }

    /// One predictor-corrector step changing the potential by `ds`.
    fn try_step(&self, cur: Cursor, ds: f64) -> Option<Complex64> {
        let n = self.working_depth(cur.z)?;
        let base = self.field.depth_state(cur.z, n)?;
        let q = base.phi_derivative();
        if q.norm() == 0.0 {
            return None;
        }
        let dz = ds / q;
        let guess = cur.z + dz;
        let scale = cur.s.max(cur.s + ds);
        let (w, st) = self.correct(&base, n, guess, Complex64::new(ds, 0.0), scale)?;
        if (w - guess).norm() > MAX_CORRECTION * dz.norm() {
            return None;
        }
        let qw = st.phi_derivative();
        if (qw / q - 1.0).norm() > MAX_GRADIENT_CHANGE {
            return None;
        }
        Some(w)
    }

    /// Newton on `log B(w) - log B(base) = delta` at fixed depth `n`.
    fn correct(
        &self,
        base: &DepthState,
        n: usize,
        guess: Complex64,
        delta: Complex64,
        scale: f64,
    ) -> Option<(Complex64, DepthState)> {
        let mut w = guess;
        for _ in 0..40 {
            let st = self.field.depth_state(w, n)?;
            let f = self.field.phi_difference(base, &st, n) - delta;
            let q = st.phi_derivative();
            // rounding in the orbit limits how well f can be resolved
            let tol = 1e-14 * scale + 8.0 * f64::EPSILON * w.norm() * q.norm();
            if f.norm() <= tol {
                return Some((w, st));
            }
            if q.norm() == 0.0 {
                return None;
            }
            w -= f / q;
            if !(w.re.is_finite() && w.im.is_finite()) {
                return None;
            }
        }
        None
    }

    /// Newton for a point `w` near `z` with `P^j(w) = c`.
    fn pull_back(&self, z: Complex64, c: Complex64, j: usize) -> Option<Complex64> {
        let poly = self.field.poly();
        let mut w = z;
        for _ in 0..60 {
            let (v, dv) = poly.iterate_with_derivative(w, j);
            let f = v - c;
            if dv.norm() == 0.0 || !dv.re.is_finite() {
                return None;
            }
            let step = f / dv;
            w -= step;
            if step.norm() <= 1e-15 * (1.0 + w.norm()) {
                let (v, dv) = poly.iterate_with_derivative(w, j);
                let tol = 1e-9 * (1.0 + c.norm()) + 16.0 * f64::EPSILON * (1.0 + w.norm()) * dv.norm();
                return ((v - c).norm() <= tol).then_some(w);
            }
            if !(w.re.is_finite() && w.im.is_finite()) {
                return None;
            }
        }
        None
    }

    /// `log B(z) - log B(omega)` on the local branch, if `z` is close enough
    /// to `omega` for that branch to be the continuous one.
    fn local_phase(&self, omega: Complex64, z: Complex64) -> Option<Complex64> {
        let n = self.working_depth(omega)?;
        let a = self.field.depth_state(omega, n)?;
        let b = self.field.depth_state(z, n)?;
        let ratio = (b.image / a.image).ln();
        if ratio.norm() > 1.0 {
            return None;
        }
        Some(self.field.phi_difference(&a, &b, n))
    }

    /// Looks for a saddle between the current potential and `target` that
    /// lies on the field line through the cursor.
    fn check_capture(&self, cur: &mut Cursor, target: f64, dir: Direction) -> Result<Option<Capture>> {
        let (lo, hi) = match dir {
            Direction::Down => (target, cur.s),
            Direction::Up => (cur.s, target),
        };
        let d = self.field.degree() as f64;
        let mut found: Vec<(Complex64, f64)> = Vec::new();
        for &(c, g) in &self.escaping {
            let mut level = g;
            for j in 0..256usize {
                if level < lo * (1.0 - 1e-12) {
                    break;
                }
                let inside = match dir {
                    Direction::Down => level < hi * (1.0 - 1e-13),
                    Direction::Up => level > lo * (1.0 + 1e-13) && level <= hi * (1.0 + 1e-12),
                };
                if inside {
                    let omega = if j == 0 {
                        Some(c)
                    } else {
                        self.pull_back(cur.z, c, j)
                    };
                    if let Some(omega) = omega {
                        if self.on_line(omega, cur.z, dir) && !found.iter().any(|f| (f.0 - omega).norm() < 1e-9 * (1.0 + omega.norm())) {
                            found.push((omega, level));
                        }
                    }
                }
                level /= d;
            }
        }
        match found.len() {
            0 => Ok(None),
            1 => {
                let (omega, level) = found[0];
                self.approach(cur, omega, level, dir)?;
                let (order, generation) = self.field.singular_data(omega)?;
                let model = SaddleModel::new(self.field, omega, order)
                    .ok_or_else(|| Error::trace(level, omega, "no local model at saddle"))?;
                let dirs = match dir {
                    Direction::Down => model.unstable_directions(),
                    Direction::Up => model.stable_directions(),
                };
                let arrival = SaddleModel::snap_direction(&dirs, (cur.z - omega).arg());
                Ok(Some(Capture {
                    singularity: Singularity {
                        location: omega,
                        potential: level,
                        order,
                        generation,
                    },
                    model,
                    arrival,
                }))
            }
            count => Err(Error::AmbiguousCapture {
                potential: cur.s,
                count,
            }),
        }
    }

    /// Whether the field line through `z` runs into `omega`.
    fn on_line(&self, omega: Complex64, z: Complex64, dir: Direction) -> bool {
        let Some(psi) = self.local_phase(omega, z) else {
            return false;
        };
        let ahead = match dir {
            Direction::Down => psi.re > 0.0,
            Direction::Up => psi.re < 0.0,
        };
        if !ahead || psi.im.abs() > TAU * ANGLE_TOL {
            return false;
        }
        // the phase test alone cannot tell apart saddles whose images
        // coincide; insist on the distance the local model predicts
        let Ok((order, _)) = self.field.singular_data(omega) else {
            return false;
        };
        let Some(model) = SaddleModel::new(self.field, omega, order) else {
            return false;
        };
        (z - omega).norm() <= 3.0 * model.radius_for(psi.norm())
    }

    /// Steps toward a saddle along the field line to sharpen the arrival
    /// direction.
    fn approach(&self, cur: &mut Cursor, omega: Complex64, level: f64, dir: Direction) -> Result<()> {
        for _ in 0..APPROACH_STEPS {
            let target = level + (cur.s - level) / 4.0;
            let saved = *cur;
            if self.move_to(cur, target, dir, false).is_err() {
                *cur = saved;
                break;
            }
            if (cur.z - omega).norm() < 1e-12 * (1.0 + omega.norm()) {
                break;
            }
        }
        Ok(())
    }

    /// Leaves a saddle along `exit`, landing slightly beyond its potential.
    fn leave(&self, cap: &Capture, exit: f64, dir: Direction, stop: f64) -> Result<Cursor> {
        let omega = cap.singularity.location;
        let s0 = cap.singularity.potential;
        let n = self
            .working_depth(omega)
            .ok_or_else(|| Error::trace(s0, omega, "saddle does not escape"))?;
        let base = self
            .field
            .depth_state(omega, n)
            .ok_or_else(|| Error::trace(s0, omega, "saddle orbit overflow"))?;
        let mut frac = 1e-4;
        for _ in 0..8 {
            let mut s1 = match dir {
                Direction::Down => s0 * (1.0 - frac),
                Direction::Up => s0 * (1.0 + frac),
            };
            if Self::beyond(dir, s1, stop) {
                s1 = stop;
            }
            let delta = s1 - s0;
            let guess = omega + Complex64::from_polar(cap.model.radius_for(delta), exit);
            if let Some((w, _)) = self.correct(&base, n, guess, Complex64::new(delta, 0.0), s0) {
                if angular_gap((w - omega).arg(), exit) < 0.1 * cap.model.half_sector() {
                    return Ok(Cursor { z: w, s: s1 });
                }
            }
            frac /= 10.0;
        }
        Err(Error::trace(s0, omega, "could not leave saddle along the chosen direction"))
    }
}

/// Direction in which a broken line leaves a saddle.
///
/// Descending, the line arrives along an unstable direction and leaves along
/// the adjacent stable direction on the chosen side. Ascending reverses this.
pub(crate) fn turn(cap: &Capture, dir: Direction, side: Side) -> f64 {
    let half = cap.model.half_sector();
    let sign = match side {
        Side::Right => 1.0,
        Side::Left => -1.0,
    };
    match dir {
        Direction::Down => cap.arrival + sign * half,
        Direction::Up => cap.arrival - sign * half,
    }
}
