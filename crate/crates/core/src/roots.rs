//! Simultaneous root finding (Aberth-Ehrlich) for functions that behave like
//! polynomials of known degree. The function is only ever evaluated, never
//! expanded, so iterates such as `P^k(z) - z` can be solved without forming
//! their coefficients.

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_ITER: usize = 1500;
const RESTARTS: usize = 4;

/// Finds all `degree` roots of `f`, which returns `(f(z), f'(z))`.
///
/// `radius` must bound the moduli of all roots. The returned vector has one
/// entry per root counted with multiplicity; clusters are not merged.
pub(crate) fn aberth<F>(f: F, degree: usize, radius: f64) -> Result<Vec<Complex64>>
where
    F: Fn(Complex64) -> (Complex64, Complex64),
{
    if degree == 0 {
        return Ok(Vec::new());
    }
    let mut best: Option<(f64, Vec<Complex64>)> = None;
    for attempt in 0..RESTARTS {
        // deterministic perturbation of the starting circle per restart
        let phase = 0.4 + 0.731 * attempt as f64;
        let r = radius * (1.0 + 0.1 * attempt as f64);
        let mut z: Vec<Complex64> = (0..degree)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / degree as f64 + phase;
                Complex64::from_polar(r, t)
            })
            .collect();
        let mut stalled = 0usize;
        let mut last_max = f64::INFINITY;
        let mut converged = false;
        for _ in 0..MAX_ITER {
            let mut max_step = 0.0f64;
            for k in 0..degree {
                let (p, dp) = f(z[k]);
                if p == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let ratio = if dp.norm() > 0.0 {
                    p / dp
                } else {
                    Complex64::new(1e-8 * (1.0 + z[k].norm()), 0.0)
                };
                let mut repulsion = Complex64::new(0.0, 0.0);
                for (j, zj) in z.iter().enumerate() {
                    if j != k {
                        let d = z[k] - zj;
                        if d.norm() > 0.0 {
                            repulsion += d.inv();
                        }
                    }
                }
                let denom = Complex64::new(1.0, 0.0) - ratio * repulsion;
                let step = if denom.norm() > 0.0 { ratio / denom } else { ratio };
                z[k] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[k].norm()));
            }
            if !max_step.is_finite() || z.iter().any(|w| !w.re.is_finite() || !w.im.is_finite()) {
                break;
            }
            if max_step < 1e-15 {
                converged = true;
                break;
            }
            // multiple roots converge only linearly; stop once progress stalls
            if max_step >= 0.99 * last_max {
                stalled += 1;
                if stalled > 50 && max_step < 1e-6 {
                    converged = true;
                    break;
                }
            } else {
                stalled = 0;
            }
            last_max = max_step;
        }
        if z.iter().all(|w| w.re.is_finite() && w.im.is_finite()) {
            let worst = z.iter().map(|&w| f(w).0.norm()).fold(0.0, f64::max);
            if converged {
                return Ok(z);
            }
            if best.as_ref().is_none_or(|(b, _)| worst < *b) {
                best = Some((worst, z));
            }
        }
    }
    Err(Error::SolverFailure {
        worst_residual: best.map_or(f64::INFINITY, |(w, _)| w),
    })
}

/// Groups roots closer than `tol * max(1, |z|)` and returns cluster centers
/// with their sizes, in input order of first appearance.
pub(crate) fn cluster(roots: &[Complex64], tol: f64) -> Vec<(Complex64, usize)> {
    let mut groups: Vec<(Complex64, usize)> = Vec::new();
    let mut members: Vec<Vec<Complex64>> = Vec::new();
    for &r in roots {
        let found = groups
            .iter()
            .position(|(c, _)| (c - r).norm() <= tol * c.norm().max(1.0));
        match found {
            Some(i) => {
                members[i].push(r);
                let n = members[i].len() as f64;
                let sum: Complex64 = members[i].iter().sum();
                groups[i] = (sum / n, members[i].len());
            }
            None => {
                groups.push((r, 1));
                members.push(vec![r]);
            }
        }
    }
    groups
}

/// A few Newton steps on a simple root.
pub(crate) fn polish<F>(f: &F, mut z: Complex64, steps: usize) -> Complex64
where
    F: Fn(Complex64) -> (Complex64, Complex64),
{
    for _ in 0..steps {
        let (p, dp) = f(z);
        if dp.norm() == 0.0 {
            break;
        }
        let next = z - p / dp;
        if !(next.re.is_finite() && next.im.is_finite()) {
            break;
        }
        if f(next).0.norm() > p.norm() {
            break;
        }
        z = next;
    }
    z
}
