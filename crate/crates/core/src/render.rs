//! Escape-time pictures of the filled Julia set with equipotentials and
//! ray overlays.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::angle::Angle;
use crate::error::{Error, Result};
use crate::potential::PotentialField;
use crate::ray::{trace_ray, Side};

pub type Rgb = [u8; 3];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Viewport {
    #[serde(with = "crate::json::complex")]
    pub center: Complex64,
    /// Width of the picture in the plane; the height follows the pixel
    /// aspect ratio.
    pub width: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resolution {
    pub width: usize,
    pub height: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Palette {
    /// Navy through teal to white.
    Default,
    Gray,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RayOverlay {
    /// `p/q` or a decimal, in turns.
    pub angle: String,
    /// Broken side; smooth when absent.
    #[serde(default)]
    pub side: Option<Side>,
    pub color: Rgb,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderConfig {
    pub viewport: Viewport,
    pub resolution: Resolution,
    pub max_iter: usize,
    #[serde(default)]
    pub potential_contours: Vec<f64>,
    #[serde(default = "default_contour_color")]
    pub contour_color: Rgb,
    #[serde(default)]
    pub ray_overlays: Vec<RayOverlay>,
    #[serde(default = "default_palette")]
    pub palette: Palette,
    /// Lowest potential reached by overlay traces.
    #[serde(default = "default_ray_floor")]
    pub ray_floor: f64,
}

fn default_contour_color() -> Rgb {
    [255, 200, 40]
}

fn default_palette() -> Palette {
    Palette::Default
}

fn default_ray_floor() -> f64 {
    1e-6
}

impl RenderConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RenderConfig =
            serde_json::from_str(text).map_err(|e| Error::Precondition(format!("render config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Precondition(m));
        if !(self.viewport.width > 0.0 && self.viewport.width.is_finite()) {
            return bad(format!("viewport width must be positive, got {}", self.viewport.width));
        }
        if self.resolution.width < 16 || self.resolution.height < 16 {
            return bad(format!(
                "resolution must be at least 16x16, got {}x{}",
                self.resolution.width, self.resolution.height
            ));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive".into());
        }
        if let Some(c) = self.potential_contours.iter().find(|c| !(**c > 0.0)) {
            return bad(format!("contour values must be positive, got {c}"));
        }
        for r in &self.ray_overlays {
            r.angle.parse::<Angle>()?;
        }
        Ok(())
    }

    fn pixel_size(&self) -> f64 {
        self.viewport.width / self.resolution.width as f64
    }

    /// Plane point at the center of pixel `(x, y)`, `y` counted from the top.
    pub fn pixel_center(&self, x: usize, y: usize) -> Complex64 {
        let h = self.pixel_size();
        let (w, ht) = (self.resolution.width as f64, self.resolution.height as f64);
        Complex64::new(
            self.viewport.center.re + (x as f64 + 0.5 - 0.5 * w) * h,
            self.viewport.center.im - (y as f64 + 0.5 - 0.5 * ht) * h,
        )
    }

    /// Fractional pixel coordinates of a plane point.
    fn to_pixel(&self, z: Complex64) -> (f64, f64) {
        let h = self.pixel_size();
        let (w, ht) = (self.resolution.width as f64, self.resolution.height as f64);
        (
            (z.re - self.viewport.center.re) / h + 0.5 * w,
            (self.viewport.center.im - z.im) / h + 0.5 * ht,
        )
    }
}

impl Palette {
    /// Color of a point at potential `g`; `None` means inside `K`.
    pub fn color(self, g: Option<f64>) -> Rgb {
        let Some(g) = g else {
            return [0, 0, 0];
        };
        let t = 1.0 - 1.0 / (1.0 + (g / 0.05).sqrt());
        let lerp = |a: f64, b: f64, u: f64| (a + (b - a) * u).round().clamp(0.0, 255.0) as u8;
        match self {
            Palette::Gray => {
                let v = lerp(40.0, 255.0, t);
                [v, v, v]
            }
            Palette::Default => {
                // two legs, each non-decreasing in every channel
                const STOPS: [[f64; 3]; 3] = [[20.0, 24.0, 70.0], [40.0, 150.0, 170.0], [250.0, 250.0, 245.0]];
                let (a, b, u) = if t < 0.5 {
                    (STOPS[0], STOPS[1], 2.0 * t)
                } else {
                    (STOPS[1], STOPS[2], 2.0 * t - 1.0)
                };
                [lerp(a[0], b[0], u), lerp(a[1], b[1], u), lerp(a[2], b[2], u)]
            }
        }
    }
}

/// Row-major RGB pixels, top row first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Rgb>,
}

impl Raster {
    pub fn new(width: usize, height: usize, fill: Rgb) -> Self {
        Raster {
            width,
            height,
            pixels: vec![fill; width * height],
        }
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, c: Rgb) {
        self.pixels[y * self.width + x] = c;
    }

    fn bytes(&self) -> Vec<u8> {
        self.pixels.iter().flatten().copied().collect()
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.bytes());
        out
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, self.width as u32, self.height as u32);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().map_err(|e| Error::Encoding(e.to_string()))?;
            w.write_image_data(&self.bytes()).map_err(|e| Error::Encoding(e.to_string()))?;
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Ppm,
    Png,
}

impl ImageFormat {
    /// Picks the format from a file extension, PPM unless it says png.
    pub fn from_path(path: &Path) -> ImageFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("png") => ImageFormat::Png,
            _ => ImageFormat::Ppm,
        }
    }
}

pub fn write_image(raster: &Raster, format: ImageFormat, path: &Path) -> Result<()> {
    let bytes = match format {
        ImageFormat::Ppm => raster.to_ppm(),
        ImageFormat::Png => raster.to_png()?,
    };
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(&bytes).map_err(io)
}

fn draw_segment(raster: &mut Raster, a: (f64, f64), b: (f64, f64), color: Rgb) {
    let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
    if !len.is_finite() {
        return;
    }
    let steps = (2.0 * len).ceil().max(1.0) as usize;
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        let x = (a.0 + (b.0 - a.0) * t).floor();
        let y = (a.1 + (b.1 - a.1) * t).floor();
        if x >= 0.0 && y >= 0.0 && (x as usize) < raster.width && (y as usize) < raster.height {
            raster.set(x as usize, y as usize, color);
        }
    }
}

/// Renders the picture described by `cfg`. Rows are computed in parallel
/// into a preallocated buffer, so the result does not depend on the number
/// of workers.
pub fn render(field: &PotentialField, cfg: &RenderConfig) -> Result<Raster> {
    cfg.validate()?;
    let (w, h) = (cfg.resolution.width, cfg.resolution.height);
    let mut greens = vec![None; w * h];
    greens.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, g) in row.iter_mut().enumerate() {
            *g = field.green_within(cfg.pixel_center(x, y), cfg.max_iter);
        }
    });
    let mut raster = Raster {
        width: w,
        height: h,
        pixels: greens.iter().map(|g| cfg.palette.color(*g)).collect(),
    };
    let value = |x: usize, y: usize| greens[y * w + x].unwrap_or(0.0);
    for &c in &cfg.potential_contours {
        for y in 0..h {
            for x in 0..w {
                let here = value(x, y) < c;
                let right = x + 1 < w && (value(x + 1, y) < c) != here;
                let below = y + 1 < h && (value(x, y + 1) < c) != here;
                if right || below {
                    raster.set(x, y, cfg.contour_color);
                }
            }
        }
    }
    let traces: Vec<_> = cfg
        .ray_overlays
        .par_iter()
        .map(|r| {
            let theta: Angle = r.angle.parse()?;
            trace_ray(field, &theta, r.side, cfg.ray_floor)
        })
        .collect::<Result<_>>()?;
    for (overlay, trace) in cfg.ray_overlays.iter().zip(&traces) {
        let pts: Vec<(f64, f64)> = trace.samples.iter().map(|s| cfg.to_pixel(s.point)).collect();
        for seg in pts.windows(2) {
            draw_segment(&mut raster, seg[0], seg[1], overlay.color);
        }
    }
    Ok(raster)
}
