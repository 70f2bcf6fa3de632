//! Acceptance criteria, one test each. `cargo test` prints one ok/FAILED
//! line per criterion; run with `--nocapture` for the measured values.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayforge::landing::{lambda_set, land};
use rayforge::ray::{crash_angles, crash_potential, trace_ray, trace_smooth, RayKind, Side, S_FLOOR};
use rayforge::verifier::{gap_check, partner_sequence, verify_main_theorem, VerifyOptions};
use rayforge::{presets, Angle, Orientation, PointClass, Polynomial, PotentialField};

/// G(0) for z^2 + 1 from a 60-digit escape iteration.
const QUADRATIC_G0: f64 = 0.203677261369740001436618995382518379845796528579664360151266;

fn field(p: Polynomial) -> PotentialField {
    PotentialField::new(p).unwrap()
}

fn angle(p: i64, q: i64) -> Angle {
    Angle::new(p, q).unwrap()
}

fn within(start: Instant, limit: Duration) {
    let spent = start.elapsed();
    println!("runtime {spent:?} (limit {limit:?})");
    assert!(spent < limit, "took {spent:?}");
}

/// Escaping points with potential in `[lo, hi]`, drawn on log-radius.
fn escaping_points(f: &PotentialField, n: usize, lo: f64, hi: f64, seed: u64) -> Vec<Complex64> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let r = rng.random_range(-1.0..4.0f64).exp();
        let z = Complex64::from_polar(r, rng.random_range(0.0..std::f64::consts::TAU));
        let g = f.green(z);
        if g.escaped && g.value >= lo && g.value <= hi {
            out.push(z);
        }
    }
    out
}

fn test_maps() -> [(&'static str, PotentialField); 3] {
    [
        ("z^2", field(presets::square())),
        ("z^2+1", field(presets::quadratic())),
        ("cubic", field(presets::cubic())),
    ]
}

#[test]
fn ac01_functional_equation() {
    let start = Instant::now();
    for (name, f) in test_maps() {
        let d = f.degree() as f64;
        let mut worst: f64 = 0.0;
        for z in escaping_points(&f, 10_000, 1e-12, f64::INFINITY, 1) {
            let g = f.potential(z);
            let err = (f.potential(f.poly().eval(z)) - d * g).abs() / (d * g).max(1.0);
            worst = worst.max(err);
        }
        println!("{name}: worst scaled error {worst:e}");
        assert!(worst <= 1e-9);
    }
    within(start, Duration::from_secs(10));
}

#[test]
fn ac02_power_map() {
    let f = field(presets::square());
    assert!((f.potential(Complex64::new(2.0, 0.0)) - 2f64.ln()).abs() <= 1e-12);
    let t = trace_smooth(&f, &angle(1, 4), S_FLOOR, None).unwrap();
    let off = t.samples.iter().map(|s| s.point.re.abs()).fold(0.0, f64::max);
    println!("ray 1/4 strays {off:e} from the imaginary axis over {} samples", t.samples.len());
    assert!(off <= 1e-9);
    assert!(t.samples.iter().all(|s| s.point.im > 0.0));
    assert!(f.singularity_catalog(S_FLOOR).unwrap().is_empty());
    assert!(crash_angles(&f, 1e-3).unwrap().is_empty());
}

#[test]
fn ac03_quadratic_broken_ray() {
    let start = Instant::now();
    let f = field(presets::quadratic());
    let g0 = f.potential(Complex64::new(0.0, 0.0));
    println!("G(0) = {g0:.17}, oracle error {:e}", (g0 - QUADRATIC_G0).abs());
    assert!((g0 - QUADRATIC_G0).abs() <= 1e-10);

    let fixed = f.poly().periodic_points(1).unwrap();
    let expect = Complex64::new(0.5, 3f64.sqrt() / 2.0);
    for target in [expect, expect.conj()] {
        let p = fixed.iter().find(|p| (p.location - target).norm() <= 1e-12).unwrap();
        assert!((p.multiplier.norm() - 2.0).abs() <= 1e-12);
    }

    let right = land(&f, &Angle::zero(), Some(Side::Right)).unwrap();
    let left = land(&f, &Angle::zero(), Some(Side::Left)).unwrap();
    let (er, el) = ((right.endpoint - expect).norm(), (left.endpoint - expect.conj()).norm());
    println!("R+_0 ends {er:e} from z0+, R-_0 ends {el:e} from z0-");
    assert!(er <= 1e-4 && el <= 1e-4);
    assert_eq!(right.kind, RayKind::RightBroken);

    let t = trace_ray(&f, &Angle::zero(), Some(Side::Right), S_FLOOR).unwrap();
    let pots: Vec<f64> = t.crashes.iter().map(|c| c.potential).collect();
    println!("{} crashes on R+_0", pots.len());
    assert!(pots.len() >= 5);
    for w in pots.windows(2) {
        assert!((w[1] / w[0] - 0.5).abs() <= 1e-6 * 0.5);
    }
    within(start, Duration::from_secs(30));
}

#[test]
fn ac04_cubic_fixed_rays_co_land() {
    let start = Instant::now();
    let f = field(presets::cubic());
    let a = presets::CUBIC_A;
    // fixed points other than 0 solve z^2 + a z - 1 = 0
    let disc = (a * a + 4.0).sqrt();
    let roots = [(-a + disc) / 2.0, (-a - disc) / 2.0];

    let smooth = trace_smooth(&f, &Angle::zero(), S_FLOOR, None).unwrap();
    assert_eq!(smooth.kind, RayKind::Smooth);
    assert!(smooth.crashes.is_empty());
    assert!((smooth.lowest_potential() - S_FLOOR).abs() <= 1e-12);

    let broken = trace_ray(&f, &angle(1, 2), Some(Side::Right), S_FLOOR).unwrap();
    assert_eq!(broken.kind, RayKind::RightBroken);
    let pots: Vec<f64> = broken.crashes.iter().map(|c| c.potential).collect();
    println!("{} crashes on R+_1/2", pots.len());
    assert!(pots.len() >= 3);
    for w in pots.windows(2) {
        assert!((w[1] / w[0] - 1.0 / 3.0).abs() <= 1e-6 / 3.0);
    }

    let z0 = roots
        .iter()
        .copied()
        .min_by(|x, y| (smooth.endpoint() - x).norm().total_cmp(&(smooth.endpoint() - y).norm()))
        .unwrap();
    let lambda = f.poly().derivative(z0);
    let (d0, d1) = ((smooth.endpoint() - z0).norm(), (broken.endpoint() - z0).norm());
    println!("z0 = {z0}, |P'(z0)| = {:.4}; R_0 ends {d0:e} away, R+_1/2 ends {d1:e} away", lambda.norm());
    assert!(lambda.norm() > 1.0);
    assert!(d0 <= 1e-3 && d1 <= 1e-3);

    let point = land(&f, &Angle::zero(), None).unwrap().landed_at.unwrap();
    assert!((point.location - z0).norm() <= 1e-10);
    assert_eq!(point.class, PointClass::Repelling);
    let set = lambda_set(&f, &point, 1).unwrap();
    assert_eq!(set, vec![(Angle::zero(), RayKind::Smooth), (angle(1, 2), RayKind::RightBroken)]);
    within(start, Duration::from_secs(60));
}

#[test]
fn ac05_smooth_ray_construction() {
    let f = field(presets::cubic());
    let point = land(&f, &Angle::zero(), None).unwrap().landed_at.unwrap();
    let r = verify_main_theorem(&f, &point, &angle(1, 2), VerifyOptions::default()).unwrap();
    let chain: Vec<String> = r.chain.iter().map(|l| l.angle.to_string()).collect();
    println!("chain {chain:?}, steps {}", r.steps);
    assert_eq!(chain, ["1/2", "0"]);
    assert!(r.terminated_smooth);
    assert_eq!(r.steps, 2);
    assert!(r.steps <= f.degree() as usize - 1);
    assert_eq!(r.theorem_violation, None);

    let seq = partner_sequence(&f, &angle(1, 2), Side::Right, 4).unwrap();
    let mut prev = angle(1, 2);
    for e in &seq.entries {
        assert!(e.b.is_exact());
        assert_eq!(e.b.times(3), prev);
        prev = e.b;
    }

    let gap = gap_check(&f, &angle(1, 2), &Angle::zero(), Orientation::Decreasing, 64, point.location).unwrap();
    println!("gap: {} samples, {} crash angles, {} violations", gap.samples, gap.crash_angles, gap.violations.len());
    assert!(gap.violations.is_empty());

    let sq = field(presets::square());
    let control = gap_check(&sq, &Angle::zero(), &angle(1, 2), Orientation::Increasing, 64, Complex64::new(0.0, 0.0))
        .unwrap();
    println!("negative control on z^2: {} violations", control.violations.len());
    assert!(!control.violations.is_empty());
}

#[test]
fn ac06_crash_potentials_under_the_circle_map() {
    for f in [field(presets::quadratic()), field(presets::cubic())] {
        let d = f.degree();
        let list = crash_angles(&f, 1e-3).unwrap();
        let mut worst = f64::NEG_INFINITY;
        for c in &list {
            let image = crash_potential(&f, &c.angle.times(d)).unwrap();
            worst = worst.max(image - d as f64 * c.potential);
            assert!(image <= d as f64 * c.potential + 1e-9, "angle {}", c.angle);
        }
        println!("degree {d}: {} crash angles, worst excess {worst:e}", list.len());
        assert!(!list.is_empty());
    }
}

#[test]
fn ac07_pushforward() {
    let cases = [
        (field(presets::cubic()), angle(1, 7), None),
        (field(presets::cubic()), angle(1, 2), Some(Side::Right)),
        (field(presets::cubic()), angle(1, 6), Some(Side::Left)),
        (field(presets::quadratic()), Angle::zero(), Some(Side::Right)),
        (field(presets::quadratic()), angle(1, 2), Some(Side::Left)),
        (field(presets::quadratic()), angle(1, 3), None),
    ];
    for (f, theta, side) in cases {
        let d = f.degree() as f64;
        let t = trace_ray(&f, &theta, side, 1e-5).unwrap();
        let image = trace_ray(&f, &theta.times(f.degree()), side, 1e-5).unwrap();
        let mut shared = 0;
        let mut worst: f64 = 0.0;
        for x in &t.samples {
            if let Some(y) = image.sample_at(d * x.potential) {
                worst = worst.max((f.poly().eval(x.point) - y.point).norm());
                shared += 1;
            }
        }
        println!("{theta} {side:?}: {shared} shared samples, worst {worst:e}");
        assert!(shared > 100);
        assert!(worst <= 1e-6);
    }
}

#[test]
fn ac08_gradient() {
    for (name, f) in test_maps() {
        let sing = f.singularity_catalog(1e-4).unwrap();
        let mut worst: f64 = 0.0;
        let mut n = 0;
        for z in escaping_points(&f, 400, 0.01, 10.0, 8) {
            if sing.nearest(z).is_some_and(|(_, dist)| dist < 0.05) {
                continue;
            }
            let grad = f.green_gradient(z).unwrap();
            let h = 1e-6 * z.norm().max(1.0);
            let dx = (f.potential(z + h) - f.potential(z - h)) / (2.0 * h);
            let dy = (f.potential(z + Complex64::i() * h) - f.potential(z - Complex64::i() * h)) / (2.0 * h);
            worst = worst.max((grad - Complex64::new(dx, dy)).norm() / grad.norm());
            n += 1;
            if n == 100 {
                break;
            }
        }
        println!("{name}: worst relative gradient error {worst:e} over {n} points");
        assert_eq!(n, 100);
        assert!(worst <= 1e-5);
    }
}

#[test]
fn ac09_periodic_landing() {
    for c in [Complex64::new(1.0, 0.0), Complex64::new(0.3, 0.6)] {
        let f = field(Polynomial::unicritical(2, c).unwrap());
        let mut traces = Vec::new();
        let mut landed = 0;
        for q in 1..=3u32 {
            for theta in Angle::periodic_angles(2, q) {
                if theta.period(2) != Some(q) {
                    continue;
                }
                for side in [Side::Right, Side::Left] {
                    let r = land(&f, &theta, Some(side)).unwrap();
                    let p = r.landed_at.as_ref().expect("periodic ray lands");
                    assert_eq!(q % p.period, 0, "{theta}: period {q} lands on period {}", p.period);
                    landed += 1;
                    let t = trace_ray(&f, &theta, Some(side), S_FLOOR).unwrap();
                    let smooth = t.kind == RayKind::Smooth;
                    traces.push(t);
                    if smooth {
                        break;
                    }
                }
            }
        }
        let mut closest = f64::INFINITY;
        for (i, a) in traces.iter().enumerate() {
            for b in traces[i + 1..].iter().filter(|b| !b.angle.same_as(&a.angle)) {
                for x in a.samples.iter().filter(|x| x.potential <= 1.0) {
                    if let Some(y) = b.sample_at(x.potential) {
                        let gap = (x.point - y.point).norm() / rayforge::ray::capture_radius(x.point);
                        closest = closest.min(gap);
                    }
                }
            }
        }
        println!("c = {c}: {landed} landed rays, closest approach {closest:.3e} capture radii");
        assert!(closest > 1.0);
    }
}

fn run_cli(dir: &Path, threads: usize, tag: &str, args: &[&str]) -> Vec<u8> {
    let out = dir.join(format!("{tag}-{threads}"));
    let status = Command::new(env!("CARGO_BIN_EXE_rayforge"))
        .args(args)
        .arg("--out")
        .arg(&out)
        .env("RAYFORGE_THREADS", threads.to_string())
        .output()
        .unwrap();
    assert!(status.status.success(), "{args:?}: {}", String::from_utf8_lossy(&status.stderr));
    std::fs::read(&out).unwrap()
}

#[test]
fn ac10_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/cubic_fixed_rays.json");
    let commands: [(&str, Vec<&str>); 7] = [
        ("info", vec!["--preset", "cubic", "info"]),
        ("singularities", vec!["--preset", "quadratic", "singularities", "--smin", "0.01"]),
        ("trace", vec!["--preset", "quadratic", "trace", "--angle", "0", "--side", "right"]),
        ("land", vec!["--preset", "cubic", "land", "--angle", "1/2", "--side", "right"]),
        ("lambda", vec!["--preset", "cubic", "lambda", "--point-index", "2"]),
        ("verify", vec!["--preset", "cubic", "verify", "--angle", "1/2", "--point-index", "2"]),
        ("render", vec!["--preset", "cubic", "render", "--config", config]),
    ];
    for (tag, args) in &commands {
        let runs: Vec<Vec<u8>> = [1, 8, 1, 8]
            .iter()
            .enumerate()
            .map(|(k, &n)| run_cli(dir.path(), n, &format!("{tag}{k}"), args))
            .collect();
        assert!(runs.iter().all(|r| r == &runs[0]), "{tag} output differs between runs");
        println!("{tag}: {} bytes, identical over 4 runs", runs[0].len());
    }
}
