//! Front half of the decode pipeline: gray conversion, binarization,
//! small-component cleanup, quad detection and rectification.

mod contour;
mod homography;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

pub use contour::{
    approximate_polygon, detect_quad, detect_quad_with, trace_outer_contour, QuadParams,
};
pub use homography::{rectify, sample_bilinear, Homography};

use crate::error::{Error, Result};
use crate::raster::Raster;
use crate::render::Polarity;

/// Four corners, clockwise (image y-down) from the corner nearest the image
/// origin: conventionally top-left, top-right, bottom-right, bottom-left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quad {
    pub corners: [[f64; 2]; 4],
}

impl Quad {
    /// Orders arbitrary corners clockwise starting nearest `(0, 0)`.
    /// Ties in distance go to the smaller `y`, then smaller `x`.
    pub fn from_corners(mut corners: [[f64; 2]; 4]) -> Quad {
        let cx = corners.iter().map(|c| c[0]).sum::<f64>() / 4.0;
        let cy = corners.iter().map(|c| c[1]).sum::<f64>() / 4.0;
        // Angle measured clockwise from +x in a y-down frame.
        corners.sort_by(|a, b| {
            let ta = (a[1] - cy).atan2(a[0] - cx);
            let tb = (b[1] - cy).atan2(b[0] - cx);
            ta.partial_cmp(&tb).unwrap_or(Ordering::Equal)
        });
        let start = (0..4)
            .min_by(|&i, &j| {
                let (a, b) = (corners[i], corners[j]);
                let da = a[0] * a[0] + a[1] * a[1];
                let db = b[0] * b[0] + b[1] * b[1];
                da.partial_cmp(&db)
                    .unwrap_or(Ordering::Equal)
                    .then(a[1].partial_cmp(&b[1]).unwrap_or(Ordering::Equal))
                    .then(a[0].partial_cmp(&b[0]).unwrap_or(Ordering::Equal))
            })
            .unwrap_or(0);
        corners.rotate_left(start);
        Quad { corners }
    }

    /// Axis-aligned square through pixel centers `[x0, x0 + side - 1]`.
    pub fn axis_aligned(x0: f64, y0: f64, side: f64) -> Quad {
        let s = side - 1.0;
        Quad {
            corners: [[x0, y0], [x0 + s, y0], [x0 + s, y0 + s], [x0, y0 + s]],
        }
    }

    /// Shoelace area; positive for clockwise order in a y-down frame.
    pub fn signed_area(&self) -> f64 {
        let c = &self.corners;
        (0..4)
            .map(|i| {
                let (a, b) = (c[i], c[(i + 1) % 4]);
                a[0] * b[1] - b[0] * a[1]
            })
            .sum::<f64>()
            / 2.0
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn perimeter(&self) -> f64 {
        (0..4)
            .map(|i| dist(self.corners[i], self.corners[(i + 1) % 4]))
            .sum()
    }

    pub fn is_convex(&self) -> bool {
        let c = &self.corners;
        let signs: Vec<f64> = (0..4)
            .map(|i| {
                cross(
                    sub(c[(i + 1) % 4], c[i]),
                    sub(c[(i + 2) % 4], c[(i + 1) % 4]),
                )
            })
            .collect();
        signs.iter().all(|&s| s > 0.0) || signs.iter().all(|&s| s < 0.0)
    }

    /// Smallest interior angle in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        let c = &self.corners;
        (0..4)
            .map(|i| {
                let p = c[i];
                let a = sub(c[(i + 3) % 4], p);
                let b = sub(c[(i + 1) % 4], p);
                let cos = (a[0] * b[0] + a[1] * b[1]) / (norm(a) * norm(b));
                cos.clamp(-1.0, 1.0).acos().to_degrees()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Convex, clockwise, and no interior angle at or below `min_angle_deg`.
    pub fn is_well_formed(&self, min_angle_deg: f64) -> bool {
        self.corners.iter().flatten().all(|v| v.is_finite())
            && self.signed_area() > 0.0
            && self.is_convex()
            && self.min_angle_deg() > min_angle_deg
    }

    /// Closed containment test (boundary counts as inside).
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let c = &self.corners;
        (0..4).all(|i| cross(sub(c[(i + 1) % 4], c[i]), sub(p, c[i])) >= -1e-9)
    }

    /// Intersection of the two diagonals.
    pub fn diagonal_center(&self) -> [f64; 2] {
        let c = &self.corners;
        let d1 = sub(c[2], c[0]);
        let d2 = sub(c[3], c[1]);
        let den = cross(d1, d2);
        if den.abs() < 1e-12 {
            return [
                c.iter().map(|p| p[0]).sum::<f64>() / 4.0,
                c.iter().map(|p| p[1]).sum::<f64>() / 4.0,
            ];
        }
        let t = cross(sub(c[1], c[0]), d2) / den;
        [c[0][0] + t * d1[0], c[0][1] + t * d1[1]]
    }

    pub fn mean_side(&self) -> f64 {
        self.perimeter() / 4.0
    }
}

pub(crate) fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub(crate) fn norm(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    norm(sub(a, b))
}

/// 1- or 3-channel to gray with weights 0.299 / 0.587 / 0.114.
pub fn to_grayscale(img: &Raster) -> Result<Raster> {
    match img.channels() {
        1 => Ok(img.clone()),
        3 => {
            // Integer weights scaled by 1000 keep the rounding exact.
            let data = img
                .data()
                .chunks_exact(3)
                .map(|p| {
                    let v = 299 * p[0] as u32 + 587 * p[1] as u32 + 114 * p[2] as u32;
                    ((v + 500) / 1000) as u8
                })
                .collect();
            Ok(Raster::from_gray(img.width(), img.height(), data))
        }
        c => Err(Error::UnsupportedFormat(format!("{c} channels"))),
    }
}

pub fn histogram(img: &Raster) -> [u64; 256] {
    let mut h = [0u64; 256];
    for &v in img.data() {
        h[v as usize] += 1;
    }
    h
}

/// `a * b` for `a < 2^128`, `b < 2^64`, as a 192-bit `(high, low)` pair.
fn widening_mul(a: u128, b: u64) -> (u128, u64) {
    let lo = (a as u64 as u128) * b as u128;
    let hi = (a >> 64) * b as u128 + (lo >> 64);
    (hi, lo as u64)
}

/// Otsu threshold: pixels `<= t` form the dark class. Between-class
/// variance is compared exactly in integer arithmetic and ties go to the
/// smallest `t`.
pub fn otsu_from_histogram(hist: &[u64; 256]) -> Result<u8> {
    let total: u64 = hist.iter().sum();
    let sum_all: u64 = hist.iter().enumerate().map(|(i, &c)| i as u64 * c).sum();
    // sigma_b^2 * N^2 = D^2 / (n0 * n1) with D = s0 * n1 - s1 * n0.
    let mut best: Option<(u8, u128, u64)> = None;
    let (mut n0, mut s0) = (0u64, 0u64);
    for t in 0..256usize {
        n0 += hist[t];
        s0 += t as u64 * hist[t];
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let s1 = sum_all - s0;
        let d = (s0 as i128 * n1 as i128 - s1 as i128 * n0 as i128).unsigned_abs();
        let num = d * d;
        let den = n0 * n1;
        let better = match best {
            None => true,
            // num / den > bnum / bden  <=>  num * bden > bnum * den
            Some((_, bnum, bden)) => widening_mul(num, bden) > widening_mul(bnum, den),
        };
        if better {
            best = Some((t as u8, num, den));
        }
    }
    best.map(|(t, _, _)| t).ok_or(Error::DegenerateHistogram)
}

pub fn otsu_threshold(img: &Raster) -> Result<u8> {
    if img.is_empty() {
        return Err(Error::DegenerateHistogram);
    }
    otsu_from_histogram(&histogram(img))
}

/// Which intensity class holds the strokes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolarityHint {
    /// Minority class is strokes; an exact tie picks dark strokes.
    #[default]
    Auto,
    DarkStrokes,
    LightStrokes,
}

/// Dark class is `v <= t`. Returns the binary raster (strokes = 1) and the
/// polarity that was applied.
pub fn binarize_with_polarity(img: &Raster, t: u8, hint: PolarityHint) -> (Raster, Polarity) {
    let polarity = match hint {
        PolarityHint::DarkStrokes => Polarity::DarkOnLight,
        PolarityHint::LightStrokes => Polarity::LightOnDark,
        PolarityHint::Auto => {
            let dark = img.data().iter().filter(|&&v| v <= t).count();
            let light = img.len() - dark;
            if dark <= light {
                Polarity::DarkOnLight
            } else {
                Polarity::LightOnDark
            }
        }
    };
    (apply_threshold(img, t, polarity), polarity)
}

pub fn apply_threshold(img: &Raster, t: u8, polarity: Polarity) -> Raster {
    let dark = polarity == Polarity::DarkOnLight;
    let data = img
        .data()
        .iter()
        .map(|&v| u8::from((v <= t) == dark))
        .collect();
    Raster::from_gray(img.width(), img.height(), data)
}

pub fn binarize(img: &Raster, t: u8, hint: PolarityHint) -> Raster {
    binarize_with_polarity(img, t, hint).0
}

/// Local-mean binarization: a pixel is a stroke when it differs from the
/// mean of its `window x window` neighborhood by more than `offset` toward
/// the stroke polarity.
pub fn binarize_adaptive(img: &Raster, window: usize, offset: f64, polarity: Polarity) -> Raster {
    let (w, h) = (img.width(), img.height());
    let mut integral = vec![0u64; (w + 1) * (h + 1)];
    for y in 0..h {
        let mut row = 0u64;
        for x in 0..w {
            row += img.get(x, y) as u64;
            integral[(y + 1) * (w + 1) + x + 1] = integral[y * (w + 1) + x + 1] + row;
        }
    }
    let r = window.max(1) / 2;
    let data = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| {
            let (x0, y0) = (x.saturating_sub(r), y.saturating_sub(r));
            let (x1, y1) = ((x + r + 1).min(w), (y + r + 1).min(h));
            let s = integral[y1 * (w + 1) + x1] + integral[y0 * (w + 1) + x0]
                - integral[y0 * (w + 1) + x1]
                - integral[y1 * (w + 1) + x0];
            let mean = s as f64 / ((x1 - x0) * (y1 - y0)) as f64;
            let v = img.get(x, y) as f64;
            let stroke = match polarity {
                Polarity::DarkOnLight => v < mean - offset,
                Polarity::LightOnDark => v > mean + offset,
            };
            u8::from(stroke)
        })
        .collect();
    Raster::from_gray(w, h, data)
}

/// 8-connected labeling of nonzero pixels.
#[derive(Debug, Clone)]
pub struct ComponentLabeling {
    pub width: usize,
    pub height: usize,
    /// 0 = background, components are `1..=count`.
    pub labels: Vec<u32>,
    /// `areas[k - 1]` is the pixel count of component `k`.
    pub areas: Vec<usize>,
}

impl ComponentLabeling {
    pub fn count(&self) -> usize {
        self.areas.len()
    }
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let p = parent[parent[x as usize] as usize];
        parent[x as usize] = p;
        x = p;
    }
    x
}

fn union(parent: &mut [u32], a: u32, b: u32) -> u32 {
    let (ra, rb) = (find(parent, a), find(parent, b));
    let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
    parent[hi as usize] = lo;
    lo
}

pub fn label_components(bin: &Raster) -> ComponentLabeling {
    let (w, h) = (bin.width(), bin.height());
    let px = bin.data();
    let mut labels = vec![0u32; w * h];
    let mut parent: Vec<u32> = vec![0];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if px[i] == 0 {
                continue;
            }
            let mut current = 0u32;
            // Previously visited 8-neighbours: W, NW, N, NE.
            let mut neighbours = [0u32; 4];
            if x > 0 {
                neighbours[0] = labels[i - 1];
            }
            if y > 0 {
                let up = i - w;
                if x > 0 {
                    neighbours[1] = labels[up - 1];
                }
                neighbours[2] = labels[up];
                if x + 1 < w {
                    neighbours[3] = labels[up + 1];
                }
            }
            for &n in &neighbours {
                if n != 0 {
                    current = if current == 0 {
                        n
                    } else {
                        union(&mut parent, current, n)
                    };
                }
            }
            if current == 0 {
                current = parent.len() as u32;
                parent.push(current);
            }
            labels[i] = current;
        }
    }
    // Compact roots to 1..=count in first-seen order.
    let mut remap = vec![0u32; parent.len()];
    let mut areas = Vec::new();
    for l in labels.iter_mut() {
        if *l == 0 {
            continue;
        }
        let root = find(&mut parent, *l) as usize;
        if remap[root] == 0 {
            areas.push(0);
            remap[root] = areas.len() as u32;
        }
        *l = remap[root];
        areas[*l as usize - 1] += 1;
    }
    ComponentLabeling {
        width: w,
        height: h,
        labels,
        areas,
    }
}

/// Erases 8-connected foreground components smaller than `min_area`.
pub fn remove_small_components(bin: &Raster, min_area: usize) -> Raster {
    if min_area == 0 {
        return bin.clone();
    }
    let cc = label_components(bin);
    let data = cc
        .labels
        .iter()
        .map(|&l| u8::from(l != 0 && cc.areas[l as usize - 1] >= min_area))
        .collect();
    Raster::from_gray(bin.width(), bin.height(), data)
}
