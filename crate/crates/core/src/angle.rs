//! Angles on the circle `R/Z`, kept exact when rational.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest denominator for which exact period computation is attempted.
const MAX_PERIOD_DEN: i64 = 1 << 40;

/// A point of the circle, stored as turns in `[0, 1)`.
///
/// Rational angles carry their exact value; all dynamics on them is done in
/// integer arithmetic so `D * theta mod 1` never drifts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Angle {
    exact: Option<Ratio<i64>>,
    approx: f64,
}

/// Direction of travel along the circle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Increasing,
    Decreasing,
}

fn reduce_mod1(r: Ratio<i64>) -> Ratio<i64> {
    let (n, d) = (*r.numer(), *r.denom());
    Ratio::new(n.rem_euclid(d), d)
}

fn wrap_turns(x: f64) -> f64 {
    let y = x.rem_euclid(1.0);
    // rem_euclid may return 1.0 for tiny negative inputs
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

impl Angle {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den <= 0 {
            return Err(Error::InvalidAngle(format!(
                "denominator must be positive, got {den}"
            )));
        }
        Ok(Angle::from_ratio(Ratio::new(num, den)))
    }

    pub fn from_ratio(r: Ratio<i64>) -> Self {
        let r = reduce_mod1(r);
        Angle {
            exact: Some(r),
            approx: *r.numer() as f64 / *r.denom() as f64,
        }
    }

    /// An angle known only approximately.
    pub fn from_turns(x: f64) -> Self {
        Angle {
            exact: None,
            approx: wrap_turns(x),
        }
    }

    pub fn zero() -> Self {
        Angle::from_ratio(Ratio::from_integer(0))
    }

    pub fn exact(&self) -> Option<Ratio<i64>> {
        self.exact
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn turns(&self) -> f64 {
        self.approx
    }

    pub fn numer(&self) -> Option<i64> {
        self.exact.map(|r| *r.numer())
    }

    pub fn denom(&self) -> Option<i64> {
        self.exact.map(|r| *r.denom())
    }

    /// The circle map `theta -> d * theta mod 1`.
    pub fn times(&self, d: u32) -> Angle {
        match self.exact {
            Some(r) => {
                let n = (*r.numer() as i128 * d as i128).rem_euclid(*r.denom() as i128);
                Angle::from_ratio(Ratio::new(n as i64, *r.denom()))
            }
            None => Angle::from_turns(self.approx * d as f64),
        }
    }

    /// The `d` solutions of `d * x = theta`, in increasing order.
    pub fn preimages(&self, d: u32) -> Vec<Angle> {
        (0..d as i64)
            .map(|j| match self.exact {
                Some(r) => Angle::from_ratio((r + j) / d as i64),
                None => Angle::from_turns((self.approx + j as f64) / d as f64),
            })
            .collect()
    }

    /// Exact period under `theta -> d * theta`, or `None` for inexact or
    /// strictly preperiodic angles.
    pub fn period(&self, d: u32) -> Option<u32> {
        let r = self.exact?;
        let q = *r.denom();
        if q == 1 {
            return Some(1);
        }
        if q.gcd(&(d as i64)) != 1 || q > MAX_PERIOD_DEN {
            return None;
        }
        // multiplicative order of d modulo q
        let mut x = (d as i64).rem_euclid(q);
        let mut k = 1u32;
        while x != 1 {
            x = ((x as i128 * d as i128) % q as i128) as i64;
            k += 1;
            if k as i64 > q {
                return None;
            }
        }
        Some(k)
    }

    /// Shifts by `eps` turns; the result is inexact.
    pub fn offset(&self, eps: f64) -> Angle {
        Angle::from_turns(self.approx + eps)
    }

    /// Closest rational with denominator at most `max_den` within `tol` turns
    /// (circle distance); the smallest such denominator wins.
    pub fn snap(x: f64, max_den: i64, tol: f64) -> Option<Angle> {
        let x = wrap_turns(x);
        for q in 1..=max_den.max(1) {
            let p = (x * q as f64).round();
            if (x - p / q as f64).abs() <= tol {
                return Some(Angle::from_ratio(Ratio::new(p as i64, q)));
            }
        }
        None
    }

    /// Snaps, keeping the float when no rational is close enough.
    pub fn snap_or_keep(x: f64, max_den: i64, tol: f64) -> Angle {
        Angle::snap(x, max_den, tol).unwrap_or_else(|| Angle::from_turns(x))
    }

    /// The `d - 1` fixed points `j/(d-1)` of the circle map.
    pub fn fixed_angles(d: u32) -> Vec<Angle> {
        let q = d as i64 - 1;
        (0..q).map(|j| Angle::from_ratio(Ratio::new(j, q))).collect()
    }

    /// All angles whose period divides `q`: the points `j/(d^q - 1)`.
    pub fn periodic_angles(d: u32, q: u32) -> Vec<Angle> {
        let den = (d as i64).pow(q) - 1;
        (0..den).map(|j| Angle::from_ratio(Ratio::new(j, den))).collect()
    }

    /// Circle distance in turns, in `[0, 1/2]`.
    pub fn distance(&self, other: &Angle) -> f64 {
        let d = (self.approx - other.approx).rem_euclid(1.0);
        d.min(1.0 - d)
    }

    /// Arc length travelled from `self` to `to` in the given direction,
    /// in `[0, 1)`.
    pub fn arc_to(&self, to: &Angle, orientation: Orientation) -> f64 {
        match (self.exact, to.exact) {
            (Some(a), Some(b)) => {
                let r = match orientation {
                    Orientation::Increasing => reduce_mod1(b - a),
                    Orientation::Decreasing => reduce_mod1(a - b),
                };
                *r.numer() as f64 / *r.denom() as f64
            }
            _ => match orientation {
                Orientation::Increasing => wrap_turns(to.approx - self.approx),
                Orientation::Decreasing => wrap_turns(self.approx - to.approx),
            },
        }
    }

    /// Moves `t` of the way from `self` toward `to` along the given direction.
    /// Exact when both ends and `t` are exact.
    pub fn toward(&self, to: &Angle, orientation: Orientation, t: Ratio<i64>) -> Angle {
        match (self.exact, to.exact) {
            (Some(a), Some(b)) => {
                let len = match orientation {
                    Orientation::Increasing => reduce_mod1(b - a),
                    Orientation::Decreasing => reduce_mod1(a - b),
                };
                let step = len * t;
                match orientation {
                    Orientation::Increasing => Angle::from_ratio(a + step),
                    Orientation::Decreasing => Angle::from_ratio(a - step),
                }
            }
            _ => {
                let len = self.arc_to(to, orientation);
                let tf = *t.numer() as f64 / *t.denom() as f64;
                match orientation {
                    Orientation::Increasing => self.offset(len * tf),
                    Orientation::Decreasing => self.offset(-len * tf),
                }
            }
        }
    }

    /// Whether `x` lies strictly inside the arc from `self` to `to`.
    pub fn arc_contains(&self, to: &Angle, orientation: Orientation, x: &Angle) -> bool {
        let total = self.arc_to(to, orientation);
        let part = self.arc_to(x, orientation);
        part > 0.0 && part < total
    }

    /// Exact equality when both are exact, otherwise within `1e-12` turns.
    pub fn same_as(&self, other: &Angle) -> bool {
        match (self.exact, other.exact) {
            (Some(a), Some(b)) => a == b,
            _ => self.distance(other) <= 1e-12,
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact {
            Some(r) if *r.denom() == 1 => write!(f, "{}", r.numer()),
            Some(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            None => write!(f, "{}", self.approx),
        }
    }
}

impl FromStr for Angle {
    type Err = Error;

    /// Accepts `p/q` or a decimal; finite decimals are read exactly.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidAngle(format!("cannot parse {s:?}"));
        if let Some((p, q)) = s.split_once('/') {
            let p: i64 = p.trim().parse().map_err(|_| bad())?;
            let q: i64 = q.trim().parse().map_err(|_| bad())?;
            return Angle::new(p, q);
        }
        let x: f64 = s.parse().map_err(|_| bad())?;
        if !x.is_finite() {
            return Err(bad());
        }
        let digits = s.split_once('.').map_or("", |(_, frac)| frac);
        let plain = !s.contains(['e', 'E']);
        if plain && digits.len() <= 15 && digits.chars().all(|c| c.is_ascii_digit()) {
            let den = 10i64.pow(digits.len() as u32);
            let num: i64 = s.replace('.', "").parse().map_err(|_| bad())?;
            return Angle::new(num, den);
        }
        Ok(Angle::from_turns(x))
    }
}

#[derive(Serialize, Deserialize)]
struct AngleJson {
    num: Option<i64>,
    den: Option<i64>,
    approx: f64,
}

impl Serialize for Angle {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        AngleJson {
            num: self.numer(),
            den: self.denom(),
            approx: self.approx,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = AngleJson::deserialize(d)?;
        match (raw.num, raw.den) {
            (Some(n), Some(q)) => Angle::new(n, q).map_err(serde::de::Error::custom),
            _ => Ok(Angle::from_turns(raw.approx)),
        }
    }
}
