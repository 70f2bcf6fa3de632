//! Green's function of the basin of infinity, its gradient, the Böttcher
//! chart, and the catalog of escaping precritical points.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{cmp_complex, CriticalPoint, Polynomial};
use crate::roots;

/// Iteration cap for escape detection.
pub const MAX_ESCAPE_DEPTH: usize = 2048;
/// Gradients smaller than this are treated as vanishing.
pub const SINGULAR_GRAD_TOL: f64 = 1e-8;

/// Value of the Green's function at a point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSample {
    pub value: f64,
    pub error_bound: f64,
    pub escaped: bool,
}

/// An escaping precritical point: a saddle of the Green's function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Singularity {
    #[serde(with = "crate::json::complex")]
    pub location: Complex64,
    pub potential: f64,
    pub order: u32,
    pub generation: u32,
}

/// All singularities above a potential cutoff, highest first.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularityCatalog {
    pub cutoff: f64,
    pub entries: Vec<Singularity>,
}

impl Serialize for SingularityCatalog {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.entries.serialize(s)
    }
}

impl SingularityCatalog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of entries with potential at least `s`.
    pub fn count_above(&self, s: f64) -> usize {
        self.entries.iter().filter(|e| e.potential >= s).count()
    }

    pub fn highest_potential(&self) -> Option<f64> {
        self.entries.first().map(|e| e.potential)
    }

    /// Entry closest to `z`, with its distance.
    pub fn nearest(&self, z: Complex64) -> Option<(&Singularity, f64)> {
        self.entries
            .iter()
            .map(|e| (e, (e.location - z).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// State of an orbit once it has left the escape disk.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Escape {
    pub depth: usize,
    /// `P^n(z)`
    pub point: Complex64,
    /// `(P^n)'(z) / D^n`, tracked incrementally so it never overflows.
    pub scaled_derivative: Complex64,
}

/// Orbit data at a fixed depth used for local differences of `log B`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct DepthState {
    pub image: Complex64,
    pub scaled_derivative: Complex64,
    pub tail: Complex64,
    pub tail_derivative: Complex64,
}

impl DepthState {
    /// Holomorphic derivative of `log B` at the base point.
    pub fn phi_derivative(&self) -> Complex64 {
        self.scaled_derivative * (self.image.inv() + self.tail_derivative)
    }
}

/// A polynomial together with the data needed to evaluate its potential.
#[derive(Clone, Debug)]
pub struct PotentialField {
    poly: Polynomial,
    critical: Vec<CriticalPoint>,
    critical_potentials: Vec<f64>,
    escape_radius: f64,
    degree_f: f64,
}

impl PotentialField {
    pub fn new(poly: Polynomial) -> Result<Self> {
        let critical = poly.critical_points()?;
        let escape_radius = 1e8f64.max(2.0 * poly.julia_bound());
        let mut field = PotentialField {
            degree_f: poly.degree() as f64,
            poly,
            critical,
            critical_potentials: Vec::new(),
            escape_radius,
        };
        field.critical_potentials = field
            .critical
            .iter()
            .map(|c| field.green(c.location).value)
            .collect();
        Ok(field)
    }

    pub fn poly(&self) -> &Polynomial {
        &self.poly
    }

    pub fn degree(&self) -> u32 {
        self.poly.degree() as u32
    }

    pub fn escape_radius(&self) -> f64 {
        self.escape_radius
    }

    pub fn critical_points(&self) -> &[CriticalPoint] {
        &self.critical
    }

    /// Critical points outside the filled Julia set, with their potentials.
    pub fn escaping_critical_points(&self) -> Vec<(CriticalPoint, f64)> {
        self.critical
            .iter()
            .zip(&self.critical_potentials)
            .filter(|(_, &g)| g > 0.0)
            .map(|(c, &g)| (*c, g))
            .collect()
    }

    /// Potential of the highest singularity, zero when every critical point
    /// has bounded orbit. Above it the Böttcher chart is univalent.
    pub fn highest_singular_potential(&self) -> f64 {
        self.critical_potentials.iter().copied().fold(0.0, f64::max)
    }

    /// `D^{-n}` without overflow for large `n`.
    pub(crate) fn inv_degree_pow(&self, n: usize) -> f64 {
        (-(n as f64) * self.degree_f.ln()).exp()
    }

    /// `T(w) = log(B(w)/w)` and its derivative, valid for `|w|` beyond the
    /// escape radius where principal logarithms are continuous.
    pub(crate) fn tail(&self, w: Complex64) -> (Complex64, Complex64) {
        let d = self.degree_f;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut dsum = Complex64::new(0.0, 0.0);
        let mut wj = w;
        let mut dwj = Complex64::new(1.0, 0.0);
        let mut weight = 1.0 / d;
        for _ in 0..64 {
            let (ratio, dratio) = self.poly.leading_ratio_with_derivative(wj);
            let term = ratio.ln() * weight;
            let dterm = dratio / ratio * dwj * weight;
            let (p, dp) = self.poly.eval_with_derivative(wj);
            sum += term;
            dsum += dterm;
            if term.norm() < 1e-20 && dterm.norm() < 1e-20 * (1.0 + dsum.norm()) {
                break;
            }
            dwj *= dp;
            wj = p;
            weight /= d;
            if !wj.re.is_finite() || wj.norm() > 1e150 {
                break;
            }
        }
        (sum, dsum)
    }

    /// Iterates until the orbit leaves the escape disk.
    pub(crate) fn escape(&self, z: Complex64) -> Option<Escape> {
        self.escape_with_cap(z, MAX_ESCAPE_DEPTH)
    }

    pub(crate) fn escape_with_cap(&self, z: Complex64, cap: usize) -> Option<Escape> {
        let mut w = z;
        let mut ds = Complex64::new(1.0, 0.0);
        let r2 = self.escape_radius * self.escape_radius;
        for n in 0..=cap {
            if w.norm_sqr() >= r2 {
                return Some(Escape {
                    depth: n,
                    point: w,
                    scaled_derivative: ds,
                });
            }
            if n == cap {
                break;
            }
            let (p, dp) = self.poly.eval_with_derivative(w);
            ds *= dp / self.degree_f;
            w = p;
            if !w.re.is_finite() || !w.im.is_finite() {
                return None;
            }
        }
        None
    }

    /// Orbit data at exactly depth `n`, or `None` if the image overflows or
    /// has not yet left a disk where the tail series is reliable.
    pub(crate) fn depth_state(&self, z: Complex64, n: usize) -> Option<DepthState> {
        let mut w = z;
        let mut ds = Complex64::new(1.0, 0.0);
        for _ in 0..n {
            let (p, dp) = self.poly.eval_with_derivative(w);
            ds *= dp / self.degree_f;
            w = p;
        }
        if !(w.re.is_finite() && w.im.is_finite()) || w.norm() > 1e150 {
            return None;
        }
        if w.norm() < 1e3 * self.poly.julia_bound() {
            return None;
        }
        let (tail, tail_derivative) = self.tail(w);
        Some(DepthState {
            image: w,
            scaled_derivative: ds,
            tail,
            tail_derivative,
        })
    }

    /// `log B(b) - log B(a)` from depth states at a shared depth `n`, taking
    /// the principal branch. Only meaningful when the two images are close in
    /// angle, which callers guarantee by keeping `a` and `b` near each other.
    pub(crate) fn phi_difference(&self, a: &DepthState, b: &DepthState, n: usize) -> Complex64 {
        ((b.image / a.image).ln() + b.tail - a.tail) * self.inv_degree_pow(n)
    }

    pub fn green(&self, z: Complex64) -> PotentialSample {
        match self.escape(z) {
            Some(e) => {
                let (t, _) = self.tail(e.point);
                let scale = self.inv_degree_pow(e.depth);
                let log_abs = e.point.norm().ln();
                let value = ((log_abs + t.re) * scale).max(f64::MIN_POSITIVE);
                let error_bound = (1e-15 * (log_abs + 1.0) + 1e-20) * scale;
                PotentialSample {
                    value,
                    error_bound,
                    escaped: true,
                }
            }
            None => PotentialSample {
                value: 0.0,
                error_bound: 0.0,
                escaped: false,
            },
        }
    }

    /// Potential of `z` when its orbit leaves the escape disk within
    /// `max_iter` steps, `None` otherwise.
    pub fn green_within(&self, z: Complex64, max_iter: usize) -> Option<f64> {
        let e = self.escape_with_cap(z, max_iter)?;
        let (t, _) = self.tail(e.point);
        Some(((e.point.norm().ln() + t.re) * self.inv_degree_pow(e.depth)).max(f64::MIN_POSITIVE))
    }

    /// Shorthand for `green(z).value`.
    pub fn potential(&self, z: Complex64) -> f64 {
        self.green(z).value
    }

    /// Whether `G(z) < s`, stopping as soon as the answer is certain.
    pub fn green_below(&self, z: Complex64, s: f64) -> bool {
        // on |w| <= R the potential is bounded by its maximum on |w| = R
        let bound = self.escape_radius.ln() + 1.0;
        let mut w = z;
        let mut scale = 1.0;
        let r2 = self.escape_radius * self.escape_radius;
        for _ in 0..MAX_ESCAPE_DEPTH {
            if w.norm_sqr() >= r2 {
                let (t, _) = self.tail(w);
                return (w.norm().ln() + t.re) * scale < s;
            }
            if bound * scale < s {
                return true;
            }
            w = self.poly.eval(w);
            scale /= self.degree_f;
        }
        true
    }

    /// Holomorphic derivative of `log B`; the gradient of `G` is its conjugate.
    pub(crate) fn phi_derivative(&self, z: Complex64) -> Result<Complex64> {
        let e = self.escape(z).ok_or(Error::PointInsideK(z))?;
        let (_, dt) = self.tail(e.point);
        Ok(e.scaled_derivative * (e.point.inv() + dt))
    }

    /// The gradient of `G` as a complex number `dG/dx + i dG/dy`.
    pub fn green_gradient(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.phi_derivative(z)?.conj())
    }

    /// The Böttcher coordinate, tangent to the identity at infinity.
    pub fn boettcher(&self, z: Complex64) -> Result<Complex64> {
        let e = self.escape(z).ok_or(Error::PointInsideK(z))?;
        let g = self.green(z).value;
        let top = self.highest_singular_potential();
        if g <= top {
            return Err(Error::Domain(format!(
                "potential {g:e} is not above the highest singular potential {top:e}"
            )));
        }
        let orbit = self.poly.orbit_with_derivative(z, e.depth).points;
        let (t, _) = self.tail(e.point);
        let mut b = e.point * t.exp();
        let d = self.poly.degree();
        let sector = std::f64::consts::PI / d as f64;
        for j in (0..e.depth).rev() {
            let zj = orbit[j];
            let r = b.norm().powf(1.0 / d as f64);
            let base = b.arg() / d as f64;
            let mut best = (f64::INFINITY, Complex64::new(0.0, 0.0));
            for k in 0..d {
                let cand = Complex64::from_polar(r, base + 2.0 * sector * k as f64);
                let dev = (cand / zj).arg().abs();
                if dev < best.0 {
                    best = (dev, cand);
                }
            }
            if best.0 > 0.9 * sector {
                return Err(Error::BranchTracking { depth: j });
            }
            b = best.1;
        }
        Ok(b)
    }

    /// Product of local degrees along the orbit of `omega`.
    pub fn order_of(&self, omega: Complex64) -> Result<u32> {
        self.singular_data(omega).map(|(order, _)| order)
    }

    /// `(order, generation)` of a precritical point.
    pub(crate) fn singular_data(&self, omega: Complex64) -> Result<(u32, u32)> {
        let e = self.escape(omega).ok_or(Error::NotASingularity(omega))?;
        let mut w = omega;
        let mut order = 1u32;
        let mut generation = None;
        for n in 0..e.depth {
            if let Some(c) = self
                .critical
                .iter()
                .find(|c| (c.location - w).norm() <= 1e-7 * (1.0 + c.location.norm()))
            {
                order *= c.multiplicity + 1;
                generation.get_or_insert(n as u32);
            }
            w = self.poly.eval(w);
        }
        match generation {
            Some(g) => Ok((order, g)),
            None => Err(Error::NotASingularity(omega)),
        }
    }

    /// Every singularity with potential at least `s_min`, found by pulling
    /// escaping critical points back one generation at a time.
    pub fn singularity_catalog(&self, s_min: f64) -> Result<SingularityCatalog> {
        if !(s_min > 0.0) {
            return Err(Error::Domain(format!("cutoff must be positive, got {s_min}")));
        }
        let d = self.degree_f;
        let mut entries: Vec<Singularity> = Vec::new();
        for (c, g) in self.escaping_critical_points() {
            if g >= s_min {
                let (order, generation) = self.singular_data(c.location)?;
                entries.push(Singularity {
                    location: c.location,
                    potential: g,
                    order,
                    generation,
                });
            }
        }
        let mut frontier = entries.clone();
        while !frontier.is_empty() {
            let children: Vec<Vec<Singularity>> = frontier
                .par_iter()
                .filter(|e| e.potential / d >= s_min)
                .map(|e| self.pull_back(e))
                .collect::<Result<_>>()?;
            let mut next = Vec::new();
            for child in children.into_iter().flatten() {
                let dup = entries.iter().chain(next.iter()).any(|e: &Singularity| {
                    (e.location - child.location).norm() <= 1e-9 * (1.0 + e.location.norm())
                });
                if !dup {
                    next.push(child);
                }
            }
            entries.extend(next.iter().copied());
            frontier = next;
        }
        entries.sort_by(|a, b| {
            b.potential
                .total_cmp(&a.potential)
                .then(cmp_complex(a.location, b.location))
        });
        Ok(SingularityCatalog {
            cutoff: s_min,
            entries,
        })
    }

    fn pull_back(&self, parent: &Singularity) -> Result<Vec<Singularity>> {
        let pre = self.poly.preimages(parent.location)?;
        Ok(roots::cluster(&pre, 1e-6)
            .into_iter()
            .map(|(w, mult)| Singularity {
                location: w,
                potential: parent.potential / self.degree_f,
                order: parent.order * mult as u32,
                generation: parent.generation + 1,
            })
            .collect())
    }
}
