//! Raster approximations of the sublevel components of the potential, and
//! the test of whether a ray accumulates on a given component of `K`.

use std::collections::VecDeque;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::angle::Angle;
use crate::error::{Error, Result};
use crate::potential::PotentialField;
use crate::ray::{trace_ray, RayKind, Side, S_FLOOR};

pub const DEFAULT_RESOLUTION: usize = 2048;

/// Square window of the plane split into `resolution` cells per side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Frame {
    #[serde(with = "crate::json::complex")]
    pub center: Complex64,
    pub half_width: f64,
    pub resolution: usize,
}

impl Frame {
    /// A frame holding the whole region where the potential is below `s`,
    /// padded by a fifth.
    pub fn covering(field: &PotentialField, s: f64, resolution: usize) -> Frame {
        let radius = (1.0 + field.poly().coeff_norm()) * s.exp();
        Frame {
            center: Complex64::new(0.0, 0.0),
            half_width: 1.2 * radius,
            resolution,
        }
    }

    pub fn cell_size(&self) -> f64 {
        2.0 * self.half_width / self.resolution as f64
    }

    /// Cell holding `z` as (column, row), rows counted from the top.
    pub fn cell_of(&self, z: Complex64) -> Option<(usize, usize)> {
        let h = self.cell_size();
        let x = ((z.re - self.center.re + self.half_width) / h).floor();
        let y = ((self.center.im + self.half_width - z.im) / h).floor();
        let n = self.resolution as f64;
        (x >= 0.0 && y >= 0.0 && x < n && y < n).then_some((x as usize, y as usize))
    }

    pub fn cell_center(&self, col: usize, row: usize) -> Complex64 {
        let h = self.cell_size();
        Complex64::new(
            self.center.re - self.half_width + (col as f64 + 0.5) * h,
            self.center.im + self.half_width - (row as f64 + 0.5) * h,
        )
    }

    fn grown(&self) -> Frame {
        Frame {
            half_width: 2.0 * self.half_width,
            ..*self
        }
    }
}

/// The raster component of `{G < s}` containing a base point.
#[derive(Clone, Debug)]
pub struct ComponentProbe {
    pub base_point: Complex64,
    pub potential: f64,
    pub frame: Frame,
    /// Row-major, top row first.
    pub mask: Vec<bool>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Cell {
    Unknown,
    Inside,
    Outside,
}

enum Fill {
    Done(Vec<bool>),
    HitEdge,
}

/// Flood fill from the base cell through cells whose centers lie below `s`.
/// Cells are only evaluated when the fill reaches them.
fn flood(field: &PotentialField, frame: &Frame, base: (usize, usize), s: f64) -> Fill {
    let n = frame.resolution;
    let mut state = vec![Cell::Unknown; n * n];
    let mut queue = VecDeque::new();
    state[base.1 * n + base.0] = Cell::Inside;
    queue.push_back(base);
    while let Some((col, row)) = queue.pop_front() {
        if col == 0 || row == 0 || col + 1 == n || row + 1 == n {
            return Fill::HitEdge;
        }
        for (c, r) in [(col - 1, row), (col + 1, row), (col, row - 1), (col, row + 1)] {
            let k = r * n + c;
            if state[k] != Cell::Unknown {
                continue;
            }
            if field.green_below(frame.cell_center(c, r), s) {
                state[k] = Cell::Inside;
                queue.push_back((c, r));
            } else {
                state[k] = Cell::Outside;
            }
        }
    }
    Fill::Done(state.into_iter().map(|c| c == Cell::Inside).collect())
}

fn check_base(field: &PotentialField, base: Complex64, s: f64) -> Result<()> {
    if !(s > 0.0) {
        return Err(Error::Precondition(format!("potential must be positive, got {s}")));
    }
    // repelling points drift off K under rounding, so only ask that the
    // base sits well inside the sublevel set
    if field.potential(base) >= 1e-3 * s {
        return Err(Error::Precondition(format!("base point {base} is not in K")));
    }
    Ok(())
}

/// [`component_probe_in`] on the frame covering `{G < s}`, doubled once if
/// the component reaches its edge.
pub fn component_probe(field: &PotentialField, base: Complex64, s: f64, resolution: usize) -> Result<ComponentProbe> {
    let frame = Frame::covering(field, s, resolution);
    match component_probe_in(field, base, s, frame) {
        Err(Error::RasterTooCoarse(_)) => component_probe_in(field, base, s, frame.grown()),
        other => other,
    }
}

/// The component of `{G < s}` containing `base`, rasterized on `frame`.
pub fn component_probe_in(field: &PotentialField, base: Complex64, s: f64, frame: Frame) -> Result<ComponentProbe> {
    check_base(field, base, s)?;
    if frame.resolution < 3 {
        return Err(Error::RasterTooCoarse(format!("{} cells per side", frame.resolution)));
    }
    let cell = frame
        .cell_of(base)
        .ok_or_else(|| Error::Precondition(format!("base point {base} lies outside the frame")))?;
    match flood(field, &frame, cell, s) {
        Fill::Done(mask) => Ok(ComponentProbe {
            base_point: base,
            potential: s,
            frame,
            mask,
        }),
        Fill::HitEdge => Err(Error::RasterTooCoarse(format!(
            "component at potential {s} reaches the edge of a frame of half width {}",
            frame.half_width
        ))),
    }
}

impl ComponentProbe {
    pub fn contains_cell(&self, col: usize, row: usize) -> bool {
        let n = self.frame.resolution;
        col < n && row < n && self.mask[row * n + col]
    }

    /// Whether the cell of `z` or one of its four neighbours is in the mask.
    pub fn touches(&self, z: Complex64) -> bool {
        let Some((col, row)) = self.frame.cell_of(z) else {
            return false;
        };
        let n = self.frame.resolution;
        self.contains_cell(col, row)
            || (col > 0 && self.contains_cell(col - 1, row))
            || (col + 1 < n && self.contains_cell(col + 1, row))
            || (row > 0 && self.contains_cell(col, row - 1))
            || (row + 1 < n && self.contains_cell(col, row + 1))
    }

    pub fn cell_count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// Extent of the mask in cells: the larger side of its bounding box.
    pub fn diameter_cells(&self) -> usize {
        let n = self.frame.resolution;
        let (mut c0, mut c1, mut r0, mut r1) = (n, 0, n, 0);
        for (k, _) in self.mask.iter().enumerate().filter(|(_, &b)| b) {
            let (c, r) = (k % n, k / n);
            c0 = c0.min(c);
            c1 = c1.max(c);
            r0 = r0.min(r);
            r1 = r1.max(r);
        }
        if c0 > c1 {
            return 0;
        }
        (c1 - c0 + 1).max(r1 - r0 + 1)
    }

    /// Binary PGM of the mask: 255 inside, 0 outside.
    pub fn to_pgm(&self) -> Vec<u8> {
        let n = self.frame.resolution;
        let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
        out.extend(self.mask.iter().map(|&b| if b { 255u8 } else { 0 }));
        out
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut f = std::fs::File::create(path).map_err(io)?;
        f.write_all(&self.to_pgm()).map_err(io)
    }
}

/// Whether some ray at `theta` meets `probe` below its potential.
///
/// The smooth ray is used when it reaches the floor; otherwise both broken
/// rays are tried. Samples from the probe potential down to a hundredth of
/// it are checked.
pub fn ray_meets(field: &PotentialField, theta: &Angle, probe: &ComponentProbe) -> Result<bool> {
    let s_test = probe.potential;
    let s_lo = (s_test / 100.0).max(S_FLOOR);
    let meets = |side: Option<Side>| -> Result<(bool, RayKind, bool)> {
        let t = trace_ray(field, theta, side, s_lo)?;
        let crashed = !t.crashes.is_empty();
        let hit = t
            .samples
            .iter()
            .filter(|x| x.potential <= s_test)
            .any(|x| probe.touches(x.point));
        Ok((hit, t.kind, crashed))
    };
    let (hit, _, crashed) = meets(None)?;
    if !crashed {
        return Ok(hit);
    }
    for side in [Side::Right, Side::Left] {
        if meets(Some(side))?.0 {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Accumulation test: does a ray at `theta` meet the component of
/// `{G < s_test}` that contains `base`?
pub fn in_i(field: &PotentialField, theta: &Angle, base: Complex64, s_test: f64) -> Result<bool> {
    if !(s_test >= S_FLOOR) {
        return Err(Error::Precondition(format!("s_test = {s_test} is below the floor")));
    }
    let probe = component_probe(field, base, s_test, DEFAULT_RESOLUTION)?;
    ray_meets(field, theta, &probe)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn field(p: crate::poly::Polynomial) -> PotentialField {
        PotentialField::new(p).unwrap()
    }

    #[test]
    fn frame_cells_round_trip() {
        let f = Frame {
            center: Complex64::new(0.5, -1.0),
            half_width: 2.0,
            resolution: 100,
        };
        for (c, r) in [(0, 0), (99, 0), (13, 57), (99, 99)] {
            assert_eq!(f.cell_of(f.cell_center(c, r)), Some((c, r)));
        }
        assert_eq!(f.cell_of(Complex64::new(-1.49, 0.99)), Some((0, 0)));
        assert_eq!(f.cell_of(Complex64::new(3.0, 0.0)), None);
    }

    #[test]
    fn square_map_component_is_a_disk() {
        let f = field(presets::square());
        let p = component_probe(&f, Complex64::new(0.0, 0.0), 1.0, 512).unwrap();
        let h = p.frame.cell_size();
        let e = 1f64.exp();
        let n = p.frame.resolution;
        for row in 0..n {
            for col in 0..n {
                let r = p.frame.cell_center(col, row).norm();
                if r < e - h {
                    assert!(p.contains_cell(col, row));
                } else if r > e + h {
                    assert!(!p.contains_cell(col, row));
                }
            }
        }
        let area = p.cell_count() as f64 * h * h;
        assert!((area - std::f64::consts::PI * e * e).abs() < 0.01 * area);
    }

    #[test]
    fn quadratic_island_excludes_the_critical_point() {
        let f = field(presets::quadratic());
        let z0 = Complex64::new(0.5, 0.75f64.sqrt());
        let p = component_probe(&f, z0, 0.15, 1024).unwrap();
        let (c, r) = p.frame.cell_of(Complex64::new(0.0, 0.0)).unwrap();
        assert!(!p.contains_cell(c, r));
        assert!(!p.touches(z0.conj()));
        assert!(p.touches(z0));
    }

    #[test]
    fn cubic_component_is_large() {
        let f = field(presets::cubic());
        let z0 = Complex64::new(0.2990239265016409, 0.6297789064830116);
        let p = component_probe(&f, z0, 1e-3, 1024).unwrap();
        assert!(p.diameter_cells() > 10);
        let q = component_probe(&f, Complex64::new(2.0, 0.0), 1e-3, 1024);
        assert!(q.is_err(), "an escaping base point is refused");
    }

    #[test]
    fn point_component_is_small() {
        let f = field(presets::quadratic());
        let p = component_probe(&f, Complex64::new(0.5, 0.75f64.sqrt()), 1e-3, 1024).unwrap();
        assert!(p.diameter_cells() <= 10);
    }

    #[test]
    fn pgm_layout() {
        let probe = ComponentProbe {
            base_point: Complex64::new(0.0, 0.0),
            potential: 1.0,
            frame: Frame {
                center: Complex64::new(0.0, 0.0),
                half_width: 1.0,
                resolution: 2,
            },
            mask: vec![true, false, false, true],
        };
        assert_eq!(probe.to_pgm(), b"P5\n2 2\n255\n\xff\x00\x00\xff".to_vec());
    }

    #[test]
    fn accumulation_test() {
        let f = field(presets::square());
        for theta in ["0", "1/3", "0.123"] {
            assert!(in_i(&f, &theta.parse().unwrap(), Complex64::new(0.0, 0.0), 1e-3).unwrap());
        }
        let f = field(presets::cubic());
        let z0 = Complex64::new(0.2990239265016409, 0.6297789064830116);
        assert!(in_i(&f, &Angle::zero(), z0, 1e-4).unwrap());
        assert!(in_i(&f, &Angle::new(1, 2).unwrap(), z0, 1e-4).unwrap());
        assert!(!in_i(&f, &Angle::new(1, 4).unwrap(), z0, 1e-4).unwrap());
        assert!(!in_i(&f, &Angle::new(1, 130).unwrap(), z0, 1e-4).unwrap());
    }
}
