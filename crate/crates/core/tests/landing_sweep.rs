//! Periodic rays of a few maps with escaping critical points: where they
//! land, how often they break, and that distinct ones stay apart.

use num_complex::Complex64;
use rayforge::landing::{land, LandingReport};
use rayforge::ray::{capture_radius, trace_ray, RayKind, RayTrace, Side, S_FLOOR};
use rayforge::{presets, Angle, Polynomial, PotentialField};

fn quadratic(c: Complex64) -> PotentialField {
    PotentialField::new(Polynomial::unicritical(2, c).unwrap()).unwrap()
}

/// Angles of exact period `1..=q_max`, each once.
fn periodic_angles(d: u32, q_max: u32) -> Vec<(Angle, u32)> {
    let mut out: Vec<(Angle, u32)> = Vec::new();
    for q in 1..=q_max {
        for a in Angle::periodic_angles(d, q) {
            if a.period(d) == Some(q) && !out.iter().any(|(b, _)| b.same_as(&a)) {
                out.push((a, q));
            }
        }
    }
    out
}

/// Landing reports for every ray at `theta`: the smooth one, or both
/// broken ones.
fn reports(field: &PotentialField, theta: &Angle) -> Vec<LandingReport> {
    let right = land(field, theta, Some(Side::Right)).unwrap();
    if right.kind == RayKind::Smooth {
        return vec![right];
    }
    let left = land(field, theta, Some(Side::Left)).unwrap();
    vec![right, left]
}

fn sweep(field: &PotentialField, q_max: u32) {
    let d = field.degree();
    let mut landed = 0;
    for (theta, q) in periodic_angles(d, q_max) {
        for r in reports(field, &theta) {
            let p = r.landed_at.unwrap_or_else(|| panic!("ray {theta} {:?} did not land", r.kind));
            assert_eq!(q % p.period, 0, "ray {theta} of period {q} lands on period {}", p.period);
            assert!(p.class.is_landing_class());
            landed += 1;
        }
    }
    assert!(landed >= periodic_angles(d, q_max).len());
}

#[test]
fn landing_periods_divide_angle_periods() {
    sweep(&quadratic(Complex64::new(1.0, 0.0)), 3);
    sweep(&quadratic(Complex64::new(0.3, 0.6)), 3);
    sweep(&PotentialField::new(presets::cubic()).unwrap(), 3);
}

/// Smallest distance between two traces at equal potentials at most `s_max`.
fn min_gap(a: &RayTrace, b: &RayTrace, s_max: f64) -> f64 {
    a.samples
        .iter()
        .filter(|x| x.potential <= s_max)
        .filter_map(|x| b.sample_at(x.potential).map(|y| (x.point - y.point).norm() / capture_radius(x.point)))
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn distinct_periodic_rays_are_disjoint() {
    for field in [quadratic(Complex64::new(1.0, 0.0)), quadratic(Complex64::new(0.3, 0.6))] {
        let mut traces = Vec::new();
        for (theta, _) in periodic_angles(2, 3) {
            for side in [Side::Right, Side::Left] {
                let t = trace_ray(&field, &theta, Some(side), S_FLOOR).unwrap();
                let smooth = t.kind == RayKind::Smooth;
                traces.push(t);
                if smooth {
                    break;
                }
            }
        }
        for (i, a) in traces.iter().enumerate() {
            for b in &traces[i + 1..] {
                if a.angle.same_as(&b.angle) {
                    continue;
                }
                let gap = min_gap(a, b, 1.0);
                assert!(gap > 1.0, "rays {} and {} come within {gap} capture radii", a.angle, b.angle);
            }
        }
    }
}

#[test]
fn periodic_broken_rays_break_geometrically() {
    for field in [quadratic(Complex64::new(1.0, 0.0)), quadratic(Complex64::new(0.3, 0.6))] {
        let d = field.degree() as f64;
        for (theta, q) in periodic_angles(2, 3) {
            let t = trace_ray(&field, &theta, Some(Side::Right), S_FLOOR).unwrap();
            if t.kind == RayKind::Smooth {
                continue;
            }
            // the crashes along the ray's own orbit come every q levels
            let ratio = d.powi(-(q as i32));
            let pots: Vec<f64> = t.crashes.iter().map(|c| c.potential).collect();
            let mut s = pots[0];
            let mut chained = 0;
            while let Some(next) = pots.iter().find(|u| (**u - s * ratio).abs() <= 1e-6 * s * ratio) {
                s = *next;
                chained += 1;
            }
            assert!(chained >= 4, "ray {theta}: only {chained} crashes in ratio {ratio}");
        }
    }
}
