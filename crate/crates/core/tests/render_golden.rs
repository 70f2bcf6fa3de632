//! Golden-file check for a small render of the cubic with its two fixed rays.
//! Set `RAYFORGE_BLESS=1` to rewrite the reference after an intended change.

use std::path::PathBuf;

use rayforge::render::{render, RenderConfig};
use rayforge::{presets, PotentialField};

const CONFIG: &str = r#"{
  "viewport": { "center": [-0.2, 0.5], "width": 4.0 },
  "resolution": { "width": 160, "height": 160 },
  "max_iter": 400,
  "potential_contours": [0.0185201296559],
  "ray_overlays": [
    { "angle": "0", "color": [230, 40, 40] },
    { "angle": "1/2", "side": "right", "color": [40, 220, 60] }
  ]
}"#;

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/cubic_fixed_rays_160.ppm")
}

#[test]
fn cubic_render_matches_golden() {
    let field = PotentialField::new(presets::cubic()).unwrap();
    let cfg = RenderConfig::from_json(CONFIG).unwrap();
    let ppm = render(&field, &cfg).unwrap().to_ppm();
    let path = golden_path();
    if std::env::var_os("RAYFORGE_BLESS").is_some() {
        std::fs::write(&path, &ppm).unwrap();
    }
    let golden = std::fs::read(&path).expect("golden file missing; run with RAYFORGE_BLESS=1");
    assert!(golden == ppm, "render differs from {}", path.display());
}

#[test]
fn both_rays_reach_the_landing_point() {
    let field = PotentialField::new(presets::cubic()).unwrap();
    let cfg = RenderConfig::from_json(CONFIG).unwrap();
    let img = render(&field, &cfg).unwrap();
    // pixel of the landing point of the two rays
    let z0 = num_complex::Complex64::new(0.2990239265016409, 0.6297789064830116);
    let px = 4.0 / 160.0;
    let x = ((z0.re + 0.2) / px + 80.0).floor() as usize;
    let y = ((0.5 - z0.im) / px + 80.0).floor() as usize;
    let near = |color: [u8; 3]| {
        (x.saturating_sub(2)..=x + 2).any(|i| (y.saturating_sub(2)..=y + 2).any(|j| img.get(i, j) == color))
    };
    assert!(near([230, 40, 40]));
    assert!(near([40, 220, 60]));
}
