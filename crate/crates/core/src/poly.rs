//! Monic complex polynomials: evaluation, orbits, critical points, preimages
//! and periodic points with multiplier classification.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots;

/// Orbits are abandoned once they exceed this modulus.
pub const OVERFLOW_GUARD: f64 = 1e150;
/// Largest period accepted by [`Polynomial::periodic_points`].
pub const MAX_PERIOD: u32 = 4;
/// Tolerance used to classify multipliers.
pub const CLASS_TOL: f64 = 1e-8;
/// Largest root-of-unity order tried when testing for parabolic multipliers.
pub const MAX_ROOT_OF_UNITY: u32 = 64;

/// A monic polynomial `z^D + c_{D-1} z^{D-1} + ... + c_0` with `D >= 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct PolynomialJson {
    degree: usize,
    coeffs: Vec<[f64; 2]>,
}

impl Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolynomialJson {
            degree: self.degree(),
            coeffs: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PolynomialJson::deserialize(d)?;
        if raw.coeffs.len() != raw.degree {
            return Err(serde::de::Error::custom(format!(
                "expected {} coefficients, found {}",
                raw.degree,
                raw.coeffs.len()
            )));
        }
        Polynomial::new(raw.coeffs.iter().map(|c| Complex64::new(c[0], c[1])).collect())
            .map_err(serde::de::Error::custom)
    }
}

/// Result of [`Polynomial::orbit_with_derivative`].
#[derive(Clone, Debug, PartialEq)]
pub struct Orbit {
    /// `points[j] = P^j(z)`; shorter than requested when the guard tripped.
    pub points: Vec<Complex64>,
    /// `(P^m)'(z)` where `m = points.len() - 1`.
    pub derivative: Complex64,
    pub overflowed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    Repelling,
    Parabolic,
    Attracting,
    Superattracting,
    IndifferentIrrational,
}

impl PointClass {
    /// Classifies a multiplier with the crate-wide tolerances.
    pub fn of_multiplier(lambda: Complex64) -> Self {
        let r = lambda.norm();
        if r <= CLASS_TOL {
            PointClass::Superattracting
        } else if r > 1.0 + CLASS_TOL {
            PointClass::Repelling
        } else if r < 1.0 - CLASS_TOL {
            PointClass::Attracting
        } else if (1..=MAX_ROOT_OF_UNITY).any(|m| (lambda.powu(m) - 1.0).norm() <= CLASS_TOL) {
            PointClass::Parabolic
        } else {
            PointClass::IndifferentIrrational
        }
    }

    /// Repelling and parabolic points are the ones rays land on.
    pub fn is_landing_class(self) -> bool {
        matches!(self, PointClass::Repelling | PointClass::Parabolic)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicPoint {
    #[serde(with = "crate::json::complex")]
    pub location: Complex64,
    pub period: u32,
    #[serde(with = "crate::json::complex")]
    pub multiplier: Complex64,
    pub class: PointClass,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    #[serde(with = "crate::json::complex")]
    pub location: Complex64,
    pub multiplicity: u32,
}

fn c0() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn c1() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

impl Polynomial {
    /// Builds `z^D + sum coeffs[k] z^k` with `D = coeffs.len()`.
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::InvalidPolynomial(format!(
                "degree must be at least 2, got {}",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidPolynomial("coefficients must be finite".into()));
        }
        Ok(Polynomial { coeffs })
    }

    /// `z^D + c`.
    pub fn unicritical(degree: usize, c: Complex64) -> Result<Self> {
        let mut coeffs = vec![c0(); degree];
        if degree > 0 {
            coeffs[0] = c;
        }
        Polynomial::new(coeffs)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidPolynomial(e.to_string()))
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// Non-leading coefficients, index = power.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `sum |c_k|` over the non-leading coefficients.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    /// Radius of a disk containing the filled Julia set.
    pub fn julia_bound(&self) -> f64 {
        1.0 + self.coeff_norm()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = c1();
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// `(P(z), P'(z))`.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = c1();
        let mut dp = c0();
        for c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        self.eval_with_derivative(z).1
    }

    /// `P(w) / w^D`, evaluated as a polynomial in `1/w` so it stays accurate
    /// for huge `w`.
    pub fn leading_ratio(&self, w: Complex64) -> Complex64 {
        let u = w.inv();
        let mut acc = c0();
        for c in self.coeffs.iter() {
            acc = acc * u + c;
        }
        // acc = c_0 u^{D-1} + ... + c_{D-1}; one more factor of u
        c1() + acc * u
    }

    /// `leading_ratio` and its derivative in `w`, safe for huge `w`.
    pub fn leading_ratio_with_derivative(&self, w: Complex64) -> (Complex64, Complex64) {
        let u = w.inv();
        // r(u) = 1 + sum c_k u^(D-k); Horner on both r and dr/du
        let mut acc = c0();
        let mut dacc = c0();
        for c in self.coeffs.iter() {
            dacc = dacc * u + acc;
            acc = acc * u + c;
        }
        let r = c1() + acc * u;
        let dr_du = acc + dacc * u;
        (r, -dr_du * u * u)
    }

    /// Taylor coefficients `P^{(k)}(w)/k!` for `k = 0..=D`.
    pub fn taylor_at(&self, w: Complex64) -> Vec<Complex64> {
        // repeated synthetic division by (z - w)
        let d = self.degree();
        let mut a: Vec<Complex64> = self.coeffs.clone();
        a.push(c1());
        let mut out = Vec::with_capacity(d + 1);
        let mut len = d + 1;
        while len > 0 {
            let mut acc = c0();
            let mut quotient = vec![c0(); len.saturating_sub(1)];
            for i in (0..len).rev() {
                acc = acc * w + a[i];
                if i > 0 {
                    quotient[i - 1] = acc;
                }
            }
            out.push(acc);
            a = quotient;
            len -= 1;
        }
        out
    }

    /// `P^n(z)` and `(P^n)'(z)`, stopping early past [`OVERFLOW_GUARD`].
    pub fn orbit_with_derivative(&self, z: Complex64, n: usize) -> Orbit {
        let mut points = Vec::with_capacity(n + 1);
        points.push(z);
        let mut w = z;
        let mut derivative = c1();
        for _ in 0..n {
            if w.norm() > OVERFLOW_GUARD {
                return Orbit {
                    points,
                    derivative,
                    overflowed: true,
                };
            }
            let (p, dp) = self.eval_with_derivative(w);
            derivative *= dp;
            w = p;
            points.push(w);
        }
        let overflowed = w.norm() > OVERFLOW_GUARD;
        Orbit {
            points,
            derivative,
            overflowed,
        }
    }

    /// `(P^n(z), (P^n)'(z))` without keeping the orbit.
    pub fn iterate_with_derivative(&self, z: Complex64, n: usize) -> (Complex64, Complex64) {
        let mut w = z;
        let mut d = c1();
        for _ in 0..n {
            let (p, dp) = self.eval_with_derivative(w);
            d *= dp;
            w = p;
        }
        (w, d)
    }

    pub fn iterate(&self, z: Complex64, n: usize) -> Complex64 {
        (0..n).fold(z, |w, _| self.eval(w))
    }

    /// Local degree of `P` at `z`: one plus the critical multiplicity.
    pub fn local_degree(&self, z: Complex64, critical: &[CriticalPoint], tol: f64) -> u32 {
        critical
            .iter()
            .find(|c| (c.location - z).norm() <= tol)
            .map_or(1, |c| c.multiplicity + 1)
    }

    /// Roots of `P'` with multiplicity.
    pub fn critical_points(&self) -> Result<Vec<CriticalPoint>> {
        let d = self.degree();
        let df = d as f64;
        // monic version of P'/D, evaluated with its own derivative
        let coeffs: Vec<Complex64> = (0..d - 1)
            .map(|k| self.coeffs[k + 1] * (k as f64 + 1.0) / df)
            .collect();
        let f = |z: Complex64| {
            let mut p = c1();
            let mut dp = c0();
            for c in coeffs.iter().rev() {
                dp = dp * z + p;
                p = p * z + c;
            }
            (p, dp)
        };
        let radius = 1.0 + coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max) * 1.0001;
        let raw = roots::aberth(f, d - 1, radius)?;
        let groups = roots::cluster(&raw, 1e-6);
        let mut out = Vec::with_capacity(groups.len());
        for (z, mult) in groups {
            let z = if mult == 1 { roots::polish(&f, z, 4) } else { z };
            let residual = self.derivative(z).norm();
            if residual > 1e-12 * z.norm().max(1.0).powi(d as i32 - 1) {
                return Err(Error::SolverFailure {
                    worst_residual: residual,
                });
            }
            out.push(CriticalPoint {
                location: z,
                multiplicity: mult as u32,
            });
        }
        sort_points(&mut out, |c| c.location);
        Ok(out)
    }

    /// The `D` solutions of `P(z) = w` with multiplicity (repeated entries).
    pub fn preimages(&self, w: Complex64) -> Result<Vec<Complex64>> {
        let d = self.degree();
        let f = |z: Complex64| {
            let (p, dp) = self.eval_with_derivative(z);
            (p - w, dp)
        };
        let radius = 1.0 + (self.coeff_norm() + w.norm()).max(1.0).powf(1.0 / d as f64) * 2.0
            + self.coeff_norm();
        let raw = roots::aberth(f, d, radius)?;
        let groups = roots::cluster(&raw, 1e-6);
        let mut out = Vec::with_capacity(d);
        let tol = 1e-10 * w.norm().max(1.0);
        for (z, mult) in groups {
            let z = if mult == 1 { roots::polish(&f, z, 4) } else { z };
            let residual = f(z).0.norm();
            if residual > tol {
                return Err(Error::SolverFailure {
                    worst_residual: residual,
                });
            }
            out.extend(std::iter::repeat_n(z, mult));
        }
        sort_points(&mut out, |z| *z);
        Ok(out)
    }

    /// Points of exact period dividing `k`, each reported once with its exact
    /// period, multiplier and class.
    pub fn periodic_points(&self, k: u32) -> Result<Vec<PeriodicPoint>> {
        if k == 0 || k > MAX_PERIOD {
            return Err(Error::UnsupportedPeriod {
                period: k,
                max: MAX_PERIOD,
            });
        }
        let d = self.degree();
        let n = d.pow(k);
        let f = |z: Complex64| {
            let (w, dw) = self.iterate_with_derivative(z, k as usize);
            (w - z, dw - 1.0)
        };
        let raw = roots::aberth(f, n, self.julia_bound() * 1.05)?;
        let groups = roots::cluster(&raw, 1e-6);
        let mut out = Vec::with_capacity(groups.len());
        for (z, mult) in groups {
            let z = if mult == 1 { roots::polish(&f, z, 6) } else { z };
            let scale = z.norm().max(1.0);
            if f(z).0.norm() > 1e-9 * scale {
                return Err(Error::SolverFailure {
                    worst_residual: f(z).0.norm(),
                });
            }
            let period = (1..=k)
                .filter(|j| k.is_multiple_of(*j))
                .find(|&j| (self.iterate(z, j as usize) - z).norm() <= 1e-9 * scale)
                .unwrap_or(k);
            let multiplier = self.iterate_with_derivative(z, period as usize).1;
            out.push(PeriodicPoint {
                location: z,
                period,
                multiplier,
                class: PointClass::of_multiplier(multiplier),
            });
        }
        sort_points(&mut out, |p| p.location);
        Ok(out)
    }
}

/// Total order on complex points: real part, then imaginary part.
pub(crate) fn cmp_complex(a: Complex64, b: Complex64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

fn sort_points<T>(v: &mut [T], key: impl Fn(&T) -> Complex64) {
    v.sort_by(|a, b| cmp_complex(key(a), key(b)));
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "z^{}", self.degree())?;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.norm() == 0.0 {
                continue;
            }
            match k {
                0 => write!(f, " + ({})", c)?,
                1 => write!(f, " + ({})z", c)?,
                _ => write!(f, " + ({})z^{}", c, k)?,
            }
        }
        Ok(())
    }
}
