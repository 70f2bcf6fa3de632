use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;

use rayforge::landing::{land, lambda_set};
use rayforge::ray::{crash_angles, trace_ray, RayKind, Side, S_FLOOR};
use rayforge::render::{render, write_image, ImageFormat, RenderConfig};
use rayforge::verifier::{verify_main_theorem, VerifyOptions};
use rayforge::{json, presets, Angle, Error, PeriodicPoint, PotentialField, Polynomial};

const EXIT_USAGE: u8 = 1;
const EXIT_PRECONDITION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_VIOLATION: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "rayforge", version, about = "External rays of polynomials with disconnected Julia sets")]
struct Cli {
    /// Polynomial as inline JSON (`{"degree":2,"coeffs":[[1,0],[0,0]]}`) or a path to a JSON file.
    #[arg(long, global = true, conflicts_with = "preset")]
    poly: Option<String>,
    /// Named polynomial: square, quadratic, cubic or cubic-rounded.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output file; JSON goes to stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Degree, critical points and fixed points.
    Info,
    /// Singularities of the potential above a cutoff, and the angles whose
    /// rays crash into them.
    Singularities {
        #[arg(long, default_value_t = 1e-3)]
        smin: f64,
    },
    /// Trace a ray.
    Trace {
        #[arg(long)]
        angle: String,
        #[arg(long)]
        side: Option<Side>,
        #[arg(long, default_value_t = S_FLOOR)]
        slo: f64,
    },
    /// Where a periodic ray lands.
    Land {
        #[arg(long)]
        angle: String,
        #[arg(long)]
        side: Option<Side>,
    },
    /// Periodic angles whose rays land at a fixed point.
    Lambda {
        /// Index into the fixed points listed by `info`.
        #[arg(long)]
        point_index: usize,
        #[arg(long, default_value_t = 1)]
        period: u32,
    },
    /// Build the chain of fixed angles from a ray landing at a fixed point
    /// until a smooth one is reached.
    Verify {
        #[arg(long)]
        angle: String,
        #[arg(long)]
        point_index: usize,
        #[arg(long, default_value_t = rayforge::verifier::DEFAULT_PARTNERS)]
        partners: usize,
        #[arg(long, default_value_t = rayforge::verifier::DEFAULT_GAP_SAMPLES)]
        samples: usize,
    },
    /// Render a picture from a JSON config; the format follows the output extension.
    Render {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_precondition() {
            EXIT_PRECONDITION
        } else {
            EXIT_NUMERICAL
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn load_polynomial(cli: &Cli) -> Result<Polynomial, Failure> {
    match (&cli.poly, &cli.preset) {
        (Some(p), _) => {
            let text = if p.trim_start().starts_with('{') {
                p.clone()
            } else {
                std::fs::read_to_string(p).map_err(|e| usage(format!("{p}: {e}")))?
            };
            Polynomial::from_json(&text).map_err(|e| usage(e.to_string()))
        }
        (None, Some(name)) => presets::by_name(name).map_err(|e| usage(e.to_string())),
        (None, None) => Err(usage("one of --poly or --preset is required")),
    }
}

fn parse_angle(s: &str) -> Result<Angle, Failure> {
    s.parse().map_err(|e: Error| usage(e.to_string()))
}

/// Writes `value` as canonical JSON to `out`, or to stdout.
fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), Failure> {
    let mut text = json::to_canonical_string(value)?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| {
            Failure::from(Error::Io {
                path: path.to_path_buf(),
                source,
            })
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// One-line summary: stdout when the payload went to a file, stderr otherwise.
fn summary(line: &str, out: Option<&Path>) {
    if out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn fixed_point(field: &PotentialField, index: usize) -> Result<PeriodicPoint, Failure> {
    let fixed = field.poly().periodic_points(1)?;
    let n = fixed.len();
    fixed
        .into_iter()
        .nth(index)
        .ok_or_else(|| usage(format!("point index {index} out of range (0..{n})")))
}

fn fmt_z(z: Complex64) -> String {
    format!("{:.10}{:+.10}i", z.re, z.im)
}

fn kind_name(kind: RayKind) -> &'static str {
    match kind {
        RayKind::Smooth => "smooth",
        RayKind::LeftBroken => "left_broken",
        RayKind::RightBroken => "right_broken",
    }
}

#[derive(Serialize)]
struct CriticalInfo {
    #[serde(with = "rayforge::json::complex")]
    location: Complex64,
    multiplicity: u32,
    potential: f64,
}

#[derive(Serialize)]
struct Info {
    polynomial: Polynomial,
    degree: u32,
    critical_points: Vec<CriticalInfo>,
    fixed_points: Vec<PeriodicPoint>,
}

#[derive(Serialize)]
struct SingularityReport {
    s_min: f64,
    singularities: rayforge::SingularityCatalog,
    crash_angles: Vec<rayforge::ray::CrashAngle>,
}

#[derive(Serialize)]
struct LambdaEntry {
    angle: Angle,
    kind: RayKind,
}

#[derive(Serialize)]
struct LambdaReport {
    point: PeriodicPoint,
    period: u32,
    angles: Vec<LambdaEntry>,
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let out = cli.out.as_deref();
    let field = PotentialField::new(load_polynomial(cli)?)?;
    match &cli.command {
        Command::Info => {
            let critical_points = field
                .critical_points()
                .iter()
                .map(|c| CriticalInfo {
                    location: c.location,
                    multiplicity: c.multiplicity,
                    potential: field.potential(c.location),
                })
                .collect();
            let info = Info {
                polynomial: field.poly().clone(),
                degree: field.degree(),
                critical_points,
                fixed_points: field.poly().periodic_points(1)?,
            };
            emit(&info, out)?;
            let fixed: Vec<String> = info
                .fixed_points
                .iter()
                .map(|p| format!("{} ({:?}, |l|={:.4})", fmt_z(p.location), p.class, p.multiplier.norm()))
                .collect();
            summary(
                &format!("degree {}; fixed points: {}", info.degree, fixed.join(", ")),
                out,
            );
        }
        Command::Singularities { smin } => {
            let singularities = field.singularity_catalog(*smin)?;
            let crash_angles = crash_angles(&field, *smin)?;
            let report = SingularityReport {
                s_min: *smin,
                singularities,
                crash_angles,
            };
            emit(&report, out)?;
            summary(
                &format!(
                    "{} singularities and {} crash angles at potential >= {smin}",
                    report.singularities.len(),
                    report.crash_angles.len()
                ),
                out,
            );
        }
        Command::Trace { angle, side, slo } => {
            let theta = parse_angle(angle)?;
            let trace = trace_ray(&field, &theta, *side, *slo)?;
            emit(&trace, out)?;
            summary(
                &format!(
                    "ray {theta} {}: {} samples, {} crashes, endpoint {} at potential {:e}",
                    kind_name(trace.kind),
                    trace.samples.len(),
                    trace.crashes.len(),
                    fmt_z(trace.endpoint()),
                    trace.lowest_potential()
                ),
                out,
            );
        }
        Command::Land { angle, side } => {
            let theta = parse_angle(angle)?;
            let report = land(&field, &theta, *side)?;
            emit(&report, out)?;
            let target = report.landed_at.as_ref().map_or("nothing".to_string(), |p| {
                format!("{} (period {}, {:?})", fmt_z(p.location), p.period, p.class)
            });
            summary(
                &format!(
                    "ray {theta} {} lands at {target}; distance {:e}",
                    kind_name(report.kind),
                    report.distance
                ),
                out,
            );
        }
        Command::Lambda { point_index, period } => {
            let point = fixed_point(&field, *point_index)?;
            let angles: Vec<LambdaEntry> = lambda_set(&field, &point, *period)?
                .into_iter()
                .map(|(angle, kind)| LambdaEntry { angle, kind })
                .collect();
            let names: Vec<String> = angles.iter().map(|e| format!("{} {}", e.angle, kind_name(e.kind))).collect();
            let report = LambdaReport {
                point,
                period: *period,
                angles,
            };
            emit(&report, out)?;
            summary(
                &format!("rays landing at {}: {}", fmt_z(report.point.location), names.join(", ")),
                out,
            );
        }
        Command::Verify {
            angle,
            point_index,
            partners,
            samples,
        } => {
            let theta = parse_angle(angle)?;
            let point = fixed_point(&field, *point_index)?;
            let opts = VerifyOptions {
                partners: *partners,
                gap_samples: *samples,
            };
            let report = verify_main_theorem(&field, &point, &theta, opts)?;
            emit(&report, out)?;
            let chain: Vec<String> = report
                .chain
                .iter()
                .map(|l| format!("{} ({})", l.angle, kind_name(l.kind)))
                .collect();
            summary(
                &format!(
                    "chain {}; steps {}; terminated smooth: {}",
                    chain.join(" -> "),
                    report.steps,
                    report.terminated_smooth
                ),
                out,
            );
            if let Some(v) = &report.theorem_violation {
                return Err(Failure {
                    code: EXIT_VIOLATION,
                    message: format!("theorem violation: {v}"),
                });
            }
            if let Some(e) = &report.aborted {
                return Err(Failure {
                    code: EXIT_NUMERICAL,
                    message: format!("aborted: {e}"),
                });
            }
        }
        Command::Render { config } => {
            let path = out.ok_or_else(|| usage("render needs --out"))?;
            let text = std::fs::read_to_string(config).map_err(|e| usage(format!("{}: {e}", config.display())))?;
            let cfg = RenderConfig::from_json(&text)?;
            let raster = render(&field, &cfg)?;
            write_image(&raster, ImageFormat::from_path(path), path)?;
            println!("wrote {}x{} image to {}", raster.width, raster.height, path.display());
        }
    }
    Ok(())
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("RAYFORGE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("RAYFORGE_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match configure_threads().and_then(|_| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
