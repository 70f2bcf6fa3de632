//! Local model of `log B` near a saddle `w`: `log B(w + h) - log B(w)` is
//! approximately `kappa * h^m` where `m` is the order of the saddle.

use num_complex::Complex64;

use crate::potential::PotentialField;

/// Leading coefficient and order of the local expansion at a saddle.
#[derive(Clone, Copy, Debug)]
pub(crate) struct SaddleModel {
    pub order: u32,
    pub kappa: Complex64,
}

fn truncated_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = a.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (i, ai) in a.iter().enumerate() {
        if ai.norm() == 0.0 {
            continue;
        }
        for j in 0..n - i {
            out[i + j] += ai * b[j];
        }
    }
    out
}

impl SaddleModel {
    /// Composes Taylor jets of `P` along the orbit of `center` until it
    /// escapes, then reads off the coefficient of `h^order`.
    pub fn new(field: &PotentialField, center: Complex64, order: u32) -> Option<Self> {
        let m = order as usize;
        let esc = field.escape(center)?;
        let n = esc.depth + 1;
        let mut jet = vec![Complex64::new(0.0, 0.0); m + 1];
        jet[1] = Complex64::new(1.0, 0.0);
        let mut w = center;
        let d = field.degree() as f64;
        for _ in 0..n {
            let t = field.poly().taylor_at(w);
            // jet of P(w + u(h)) - P(w)
            let mut acc = vec![Complex64::new(0.0, 0.0); m + 1];
            let mut power = jet.clone();
            for tk in t.iter().skip(1) {
                for (a, p) in acc.iter_mut().zip(&power) {
                    *a += tk * p;
                }
                power = truncated_mul(&power, &jet);
            }
            jet = acc;
            w = t[0];
        }
        let (_, dt) = field.tail(w);
        let kappa = jet[m] * (w.inv() + dt) / d.powi(n as i32);
        if !(kappa.re.is_finite() && kappa.im.is_finite()) || kappa.norm() == 0.0 {
            return None;
        }
        Some(SaddleModel {
            order,
            kappa,
        })
    }

    /// Directions along which `kappa h^m` is real and positive: descending
    /// field lines arrive along these.
    pub fn unstable_directions(&self) -> Vec<f64> {
        let m = self.order as f64;
        (0..self.order)
            .map(|j| (-self.kappa.arg() + std::f64::consts::TAU * j as f64) / m)
            .collect()
    }

    /// Directions along which `kappa h^m` is real and negative.
    pub fn stable_directions(&self) -> Vec<f64> {
        let m = self.order as f64;
        (0..self.order)
            .map(|j| (std::f64::consts::PI - self.kappa.arg() + std::f64::consts::TAU * j as f64) / m)
            .collect()
    }

    /// The direction in `candidates` closest to `arg`.
    pub fn snap_direction(candidates: &[f64], arg: f64) -> f64 {
        candidates
            .iter()
            .copied()
            .min_by(|a, b| angular_gap(*a, arg).total_cmp(&angular_gap(*b, arg)))
            .unwrap_or(arg)
    }

    /// Distance from the center at which the model predicts a potential
    /// offset of `delta`.
    pub fn radius_for(&self, delta: f64) -> f64 {
        (delta.abs() / self.kappa.norm()).powf(1.0 / self.order as f64)
    }

    pub fn half_sector(&self) -> f64 {
        std::f64::consts::PI / self.order as f64
    }
}

/// Absolute difference of two directions, in `[0, pi]`.
pub(crate) fn angular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Polynomial;

    #[test]
    fn model_matches_local_difference() {
        let field = PotentialField::new(
            Polynomial::unicritical(2, Complex64::new(1.0, 0.0)).unwrap(),
        )
        .unwrap();
        let model = SaddleModel::new(&field, Complex64::new(0.0, 0.0), 2).unwrap();
        // G is symmetric about the real axis, so kappa is real
        assert!(model.kappa.im.abs() < 1e-12 * model.kappa.norm());
        let h = 1e-3;
        let g = field.potential(Complex64::new(h, 0.0)) - field.potential(Complex64::new(0.0, 0.0));
        assert!((g - model.kappa.re * h * h).abs() < 1e-3 * g.abs());
        let up = model.unstable_directions();
        assert!(up.iter().any(|&a| angular_gap(a, 0.0) < 1e-9));
        assert!(up.iter().any(|&a| angular_gap(a, std::f64::consts::PI) < 1e-9));
    }

    #[test]
    fn model_holds_at_deeper_preimages() {
        let field = PotentialField::new(
            Polynomial::unicritical(2, Complex64::new(1.0, 0.0)).unwrap(),
        )
        .unwrap();
        // i -> 0 -> 1, then a preimage of i
        for omega in [Complex64::new(0.0, 1.0), Complex64::new(0.45508986056222733, 1.09868411346781)] {
            let model = SaddleModel::new(&field, omega, 2).unwrap();
            let h = Complex64::from_polar(1e-4, 0.3);
            let g = field.potential(omega + h) - field.potential(omega);
            let predicted = (model.kappa * h * h).re;
            assert!((g - predicted).abs() < 1e-2 * predicted.abs(), "{g} vs {predicted}");
        }
    }

    #[test]
    fn direction_snapping() {
        let dirs = [0.0, std::f64::consts::PI];
        assert_eq!(SaddleModel::snap_direction(&dirs, 3.0), std::f64::consts::PI);
        assert_eq!(SaddleModel::snap_direction(&dirs, -0.2), 0.0);
        assert!((angular_gap(0.1, std::f64::consts::TAU - 0.1) - 0.2).abs() < 1e-15);
    }
}
