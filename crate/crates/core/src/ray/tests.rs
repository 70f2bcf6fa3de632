use super::*;
use crate::poly::Polynomial;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn field(coeffs: Vec<Complex64>) -> PotentialField {
    PotentialField::new(Polynomial::new(coeffs).unwrap()).unwrap()
}

fn square() -> PotentialField {
    field(vec![c(0.0, 0.0), c(0.0, 0.0)])
}

fn quadratic() -> PotentialField {
    field(vec![c(1.0, 0.0), c(0.0, 0.0)])
}

fn cubic() -> PotentialField {
    PotentialField::new(crate::presets::cubic()).unwrap()
}

fn a(p: i64, q: i64) -> Angle {
    Angle::new(p, q).unwrap()
}

const G0: f64 = 0.203677261369740001436618995382518379845796528579664360151266;

fn cubic_z0() -> Complex64 {
    c(0.2990239265016409, 0.6297789064830116)
}

#[test]
fn seeds() {
    let z = ray_seed(&square(), &a(0, 1), 2.0).unwrap();
    assert!((z - c(2f64.exp(), 0.0)).norm() < 1e-12);
    let z = ray_seed(&square(), &a(1, 4), 1.0).unwrap();
    assert!((z - c(0.0, 1f64.exp())).norm() < 1e-12);
    let f = quadratic();
    let z = ray_seed(&f, &a(0, 1), 3.0).unwrap();
    assert!(z.im.abs() < 1e-12 && (z.re - 3f64.exp()).abs() < 0.1);
    let b = f.boettcher(z).unwrap();
    assert!((b - c(3f64.exp(), 0.0)).norm() < 1e-10 * 3f64.exp());
}

#[test]
fn seed_below_singularities_is_rejected() {
    assert!(ray_seed(&quadratic(), &a(0, 1), 0.1).is_err());
}

#[test]
fn power_map_rays_are_radial() {
    let t = trace_smooth(&square(), &a(0, 1), 0.01, Some(2.0)).unwrap();
    assert_eq!(t.kind, RayKind::Smooth);
    assert!(t.crashes.is_empty());
    for x in &t.samples {
        assert!(x.point.im.abs() < 1e-12);
        assert!((x.point.re - x.potential.exp()).abs() < 1e-9 * x.point.re);
    }
    assert!((t.samples[0].potential - 2.0).abs() < 1e-15);
    assert!((t.endpoint().re - 0.01f64.exp()).abs() < 1e-9);
    let t = trace_smooth(&square(), &a(1, 4), 1e-4, None).unwrap();
    assert!(t.samples.iter().all(|x| x.point.re.abs() < 1e-9 && x.point.im > 0.0));
}

#[test]
fn potentials_strictly_decrease_and_match_labels() {
    let f = cubic();
    for t in [
        trace_smooth(&f, &a(0, 1), 1e-4, None).unwrap(),
        trace_broken(&f, &a(1, 2), Side::Right, 1e-4).unwrap(),
    ] {
        for w in t.samples.windows(2) {
            assert!(w[1].potential < w[0].potential);
        }
        for x in &t.samples {
            assert!((f.potential(x.point) - x.potential).abs() <= POT_TOL);
        }
    }
}

#[test]
fn real_axis_rays_crash_at_zero() {
    let f = quadratic();
    for theta in [a(0, 1), a(1, 2)] {
        let t = trace_smooth(&f, &theta, 1e-3, Some(3.0)).unwrap();
        assert_eq!(t.end, TraceEnd::Crash);
        assert_eq!(t.crashes.len(), 1);
        let cr = &t.crashes[0];
        assert!(cr.singularity.location.norm() < 1e-12);
        assert!((cr.potential - G0).abs() < 1e-9);
        assert!(t.samples.iter().all(|x| x.point.im.abs() < 1e-9));
        assert!((crash_potential(&f, &theta).unwrap() - G0).abs() < 1e-9);
    }
}

#[test]
fn power_map_has_no_crashes() {
    let f = square();
    assert_eq!(crash_potential(&f, &a(1, 3)).unwrap(), 0.0);
    assert!(crash_angles(&f, 1e-3).unwrap().is_empty());
    let smooth = trace_smooth(&f, &a(1, 3), 1e-3, None).unwrap();
    for side in [Side::Left, Side::Right] {
        let broken = trace_broken(&f, &a(1, 3), side, 1e-3).unwrap();
        assert_eq!(broken.kind, RayKind::Smooth);
        assert_eq!(broken.samples, smooth.samples);
    }
}

#[test]
fn cubic_ray_at_zero_is_smooth_and_lands() {
    let f = cubic();
    let t = trace_smooth(&f, &a(0, 1), S_FLOOR, None).unwrap();
    assert_eq!(t.kind, RayKind::Smooth);
    assert_eq!(t.end, TraceEnd::Floor);
    assert!((t.endpoint() - cubic_z0()).norm() < 1e-3);
    let b = trace_broken(&f, &a(1, 2), Side::Right, S_FLOOR).unwrap();
    assert_eq!(b.kind, RayKind::RightBroken);
    assert!((b.endpoint() - cubic_z0()).norm() < 1e-3);
    for w in b.crashes.windows(2) {
        assert!((w[1].potential / w[0].potential - 1.0 / 3.0).abs() < 1e-6);
    }
}

#[test]
fn right_broken_ray_of_quadratic() {
    let f = quadratic();
    let t = trace_broken(&f, &a(0, 1), Side::Right, S_FLOOR).unwrap();
    assert_eq!(t.kind, RayKind::RightBroken);
    assert!(t.crashes.len() >= 15);
    assert!(t.crashes[0].singularity.location.norm() < 1e-12);
    assert!((t.crashes[1].singularity.location - c(0.0, 1.0)).norm() < 1e-12);
    assert!((t.crashes[1].potential - G0 / 2.0).abs() < 1e-9);
    for w in t.crashes.windows(2) {
        assert!((w[1].potential / w[0].potential - 0.5).abs() < 1e-6);
        // each saddle maps to the previous one
        let image = f.poly().eval(w[1].singularity.location);
        assert!((image - w[0].singularity.location).norm() < 1e-9);
    }
    for cr in &t.crashes {
        let out = cr.outgoing_direction.unwrap();
        let m = cr.singularity.order as f64;
        let between = (out / cr.incoming_direction).arg().abs();
        let odd = between / (std::f64::consts::PI / m);
        assert!((odd - odd.round()).abs() < 1e-6 && odd.round() as i64 % 2 == 1);
    }
    let z0 = c(0.5, 0.75f64.sqrt());
    assert!((t.endpoint() - z0).norm() < 1e-4);

    let l = trace_broken(&f, &a(0, 1), Side::Left, S_FLOOR).unwrap();
    assert!((l.endpoint() - z0.conj()).norm() < 1e-4);
    for (x, y) in t.samples.iter().zip(&l.samples) {
        assert_eq!(x.potential, y.potential);
        assert!((x.point - y.point.conj()).norm() < 1e-9);
    }
}

#[test]
fn pushforward_of_smooth_rays() {
    let f = cubic();
    let theta = a(1, 7);
    let t = trace_smooth(&f, &theta, 1e-4, None).unwrap();
    let image = trace_smooth(&f, &theta.times(3), 1e-4, None).unwrap();
    let mut shared = 0;
    for x in &t.samples {
        if let Some(y) = image.sample_at(3.0 * x.potential) {
            assert!((f.poly().eval(x.point) - y.point).norm() < 1e-6);
            shared += 1;
        }
    }
    assert!(shared > 100);
}

#[test]
fn pushforward_of_broken_rays() {
    let f = quadratic();
    let t = trace_broken(&f, &a(0, 1), Side::Right, 1e-5).unwrap();
    let mut shared = 0;
    for x in &t.samples {
        if let Some(y) = t.sample_at(2.0 * x.potential) {
            assert!((f.poly().eval(x.point) - y.point).norm() < 1e-6, "at {}", x.potential);
            shared += 1;
        }
    }
    assert!(shared > 100);
}

#[test]
fn left_and_right_separate_below_the_crash() {
    let f = quadratic();
    let r = trace_broken(&f, &a(1, 2), Side::Right, 1e-4).unwrap();
    let l = trace_broken(&f, &a(1, 2), Side::Left, 1e-4).unwrap();
    let s_crash = r.crash_potential();
    let mut compared = 0;
    for x in r.samples.iter().filter(|x| x.potential < s_crash * (1.0 - 1e-9)) {
        if let Some(y) = l.sample_at(x.potential) {
            assert!((x.point - y.point).norm() > capture_radius(x.point));
            compared += 1;
        }
    }
    assert!(compared > 100);
}

#[test]
fn crash_angles_of_quadratic() {
    let f = quadratic();
    let top = crash_angles(&f, 0.15).unwrap();
    let angles: Vec<String> = top.iter().map(|x| x.angle.to_string()).collect();
    assert_eq!(angles, ["0", "1/2"]);
    assert!(top.iter().all(|x| (x.potential - G0).abs() < 1e-9));

    let more = crash_angles(&f, 0.08).unwrap();
    let angles: Vec<String> = more.iter().map(|x| x.angle.to_string()).collect();
    assert_eq!(angles, ["0", "1/2", "1/4", "3/4"]);
    assert!(more[2..].iter().all(|x| (x.potential - G0 / 2.0).abs() < 1e-9));
}

#[test]
fn crash_potential_inequality() {
    for f in [quadratic(), cubic()] {
        let d = f.degree() as f64;
        for x in crash_angles(&f, 1e-2).unwrap() {
            let image = crash_potential(&f, &x.angle.times(f.degree())).unwrap();
            assert!(image <= d * x.potential + 1e-9);
        }
    }
}

#[test]
fn partners_at_the_critical_point() {
    let f = quadratic();
    let r = trace_broken(&f, &a(0, 1), Side::Right, 0.05).unwrap();
    let (b, side) = partner_at(&f, &r, c(0.0, 0.0)).unwrap();
    assert_eq!(b, a(1, 2));
    assert_eq!(side, Side::Left);
    let back = trace_broken(&f, &b, side, 0.05).unwrap();
    let (b2, side2) = partner_at(&f, &back, c(0.0, 0.0)).unwrap();
    assert_eq!(b2, a(0, 1));
    assert_eq!(side2, Side::Right);
    // both continue up the imaginary axis
    let x = r.sample_at(2f64.powf(-66.0 / 24.0)).unwrap();
    let y = back.sample_at(2f64.powf(-66.0 / 24.0)).unwrap();
    assert!((x.point - y.point).norm() < RAY_LIMIT_TOL);
}

#[test]
fn partner_of_cubic_broken_ray() {
    let f = cubic();
    let r = trace_broken(&f, &a(1, 2), Side::Right, 1e-3).unwrap();
    assert!(r.crashes.len() >= 3);
    let omega = r.crashes[0].singularity.location;
    assert!((omega + crate::presets::CUBIC_A * (2.0 / 3.0)).norm() < 1e-12);
    let (b, side) = partner_at(&f, &r, omega).unwrap();
    assert_eq!(b.times(3), a(1, 2));
    assert!(b.turns() < 0.5);
    assert_eq!(side, Side::Left);
}

#[test]
fn one_sided_limit_matches_saddle_continuation() {
    let f = quadratic();
    let window = (0.11, 0.19);
    let lim = one_sided_limit(&f, &a(0, 1), Side::Right, LimitOptions::new(window.0, window.1)).unwrap();
    let t = trace_broken(&f, &a(0, 1), Side::Right, 0.1).unwrap();
    let mut compared = 0;
    for x in &lim.samples {
        if let Some(y) = t.sample_at(x.potential) {
            assert!((x.point - y.point).norm() < 1e-5);
            compared += 1;
        }
    }
    assert!(compared > 10);
}
#[test]
fn crash_angles_of_cubic() {
    let f = cubic();
    let found = crash_angles(&f, 0.005).unwrap();
    let angles: Vec<String> = found.iter().map(|x| x.angle.to_string()).collect();
    assert_eq!(angles, ["1/6", "1/2", "1/18", "7/18", "13/18", "5/6"]);
    let top = f.highest_singular_potential();
    assert!(found[..2].iter().all(|x| (x.potential - top).abs() < 1e-12));
    assert!(found[2..].iter().all(|x| (x.potential - top / 3.0).abs() < 1e-12));
}

#[test]
fn rounded_cubic_parameter_misses_the_critical_point() {
    let f = PotentialField::new(crate::presets::by_name("cubic-rounded").unwrap()).unwrap();
    let top = crash_angles(&f, 0.015).unwrap();
    assert!(top.iter().all(|x| !x.angle.is_exact()));
    assert!(top.iter().any(|x| (x.angle.turns() - 0.500008250).abs() < 1e-8));
    // so the ray at 1/2 passes the critical point and heads for the other
    // fixed point; deeper down it comes within rounding of a preimage
    let t = trace_smooth(&f, &a(1, 2), 1e-6, None).unwrap();
    assert!(t.crashes.is_empty());
    assert!((t.endpoint() - c(-0.6152, 1.2957)).norm() < 1e-2);
}
