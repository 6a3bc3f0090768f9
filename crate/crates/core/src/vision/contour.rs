//! Outer-contour tracing, polygon approximation and quad extraction.

use super::{cross, dist, label_components, norm, sub, Quad};
use crate::error::{Error, Result};
use crate::raster::Raster;

/// Moore neighbourhood, clockwise in a y-down frame starting east.
const DIRS: [(i64, i64); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

#[derive(Debug, Clone, Copy)]
pub struct QuadParams {
    /// Douglas-Peucker tolerance as a fraction of the contour perimeter.
    pub epsilon_frac: f64,
    pub min_angle_deg: f64,
    pub min_area_px: f64,
}

impl Default for QuadParams {
    fn default() -> Self {
        QuadParams {
            epsilon_frac: 0.02,
            min_angle_deg: 10.0,
            min_area_px: 256.0,
        }
    }
}

/// Traces the outer boundary of the 8-connected component containing
/// `start`, which must be its first pixel in raster order. Returns pixel
/// centers in traversal order (clockwise on screen).
pub fn trace_outer_contour(bin: &Raster, start: (usize, usize)) -> Vec<(usize, usize)> {
    let (w, h) = (bin.width() as i64, bin.height() as i64);
    let data = bin.data();
    let fg = |x: i64, y: i64| x >= 0 && y >= 0 && x < w && y < h && data[(y * w + x) as usize] != 0;
    let s = (start.0 as i64, start.1 as i64);

    let next = |p: (i64, i64), from: usize| -> Option<usize> {
        (0..8)
            .map(|i| (from + i) % 8)
            .find(|&d| fg(p.0 + DIRS[d].0, p.1 + DIRS[d].1))
    };

    // Nothing lies west or north of the first raster pixel, so start
    // scanning at north-west.
    let Some(first_dir) = next(s, 5) else {
        return vec![start];
    };
    let mut contour = vec![start];
    let mut p = s;
    let mut d = first_dir;
    let limit = 4 * (w * h) as usize + 8;
    loop {
        p = (p.0 + DIRS[d].0, p.1 + DIRS[d].1);
        let from = if d % 2 == 0 { (d + 7) % 8 } else { (d + 6) % 8 };
        d = next(p, from).expect("a traced pixel always has its predecessor as neighbour");
        if p == s && d == first_dir {
            break;
        }
        contour.push((p.0 as usize, p.1 as usize));
        if contour.len() > limit {
            break;
        }
    }
    contour
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = sub(b, a);
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

fn douglas_peucker(pts: &[[f64; 2]], lo: usize, hi: usize, eps: f64, keep: &mut Vec<usize>) {
    if hi <= lo + 1 {
        return;
    }
    let (a, b) = (pts[lo], pts[hi % pts.len()]);
    let (mut best, mut best_d) = (lo, -1.0);
    for i in lo + 1..hi {
        let d = segment_distance(pts[i], a, b);
        if d > best_d {
            best = i;
            best_d = d;
        }
    }
    if best_d > eps {
        douglas_peucker(pts, lo, best, eps, keep);
        keep.push(best);
        douglas_peucker(pts, best, hi, eps, keep);
    }
}

/// Closed-polygon Douglas-Peucker, followed by pruning of vertices that
/// lie within `eps` of the chord joining their neighbours. Returns indices
/// into `pts`, in order.
pub fn approximate_polygon(pts: &[[f64; 2]], eps: f64) -> Vec<usize> {
    let n = pts.len();
    if n < 3 {
        return (0..n).collect();
    }
    let far = (0..n)
        .max_by(|&i, &j| dist(pts[i], pts[0]).total_cmp(&dist(pts[j], pts[0])))
        .unwrap_or(0);
    if far == 0 {
        return vec![0];
    }
    let mut keep = vec![0];
    douglas_peucker(pts, 0, far, eps, &mut keep);
    keep.push(far);
    // Wrap: index n stands for point 0.
    douglas_peucker(pts, far, n, eps, &mut keep);

    loop {
        let m = keep.len();
        if m <= 3 {
            break;
        }
        let removable = (0..m).find(|&i| {
            let prev = pts[keep[(i + m - 1) % m]];
            let next = pts[keep[(i + 1) % m]];
            segment_distance(pts[keep[i]], prev, next) <= eps
        });
        match removable {
            Some(i) => {
                keep.remove(i);
            }
            None => break,
        }
    }
    keep
}

/// Total-least-squares line through points: `(centroid, unit direction)`.
fn fit_line(pts: &[[f64; 2]]) -> Option<([f64; 2], [f64; 2])> {
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p[1]).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in pts {
        let (dx, dy) = (p[0] - cx, p[1] - cy);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    Some(([cx, cy], [theta.cos(), theta.sin()]))
}

fn intersect(l1: ([f64; 2], [f64; 2]), l2: ([f64; 2], [f64; 2])) -> Option<[f64; 2]> {
    let den = cross(l1.1, l2.1);
    if den.abs() < 1e-9 {
        return None;
    }
    let t = cross(sub(l2.0, l1.0), l2.1) / den;
    Some([l1.0[0] + t * l1.1[0], l1.0[1] + t * l1.1[1]])
}

/// Refines polygon corners by intersecting lines fitted to the contour runs
/// between them, ignoring points close to either corner.
fn refine_corners(pts: &[[f64; 2]], idx: &[usize; 4]) -> [[f64; 2]; 4] {
    let n = pts.len();
    let coarse: Vec<[f64; 2]> = idx.iter().map(|&i| pts[i]).collect();
    let mut lines = Vec::with_capacity(4);
    for e in 0..4 {
        let (a, b) = (idx[e], idx[(e + 1) % 4]);
        let (ca, cb) = (pts[a], pts[b]);
        let trim = (0.1 * dist(ca, cb)).max(2.0);
        let count = (b + n - a) % n;
        let run: Vec<[f64; 2]> = (0..=count)
            .map(|k| pts[(a + k) % n])
            .filter(|&p| dist(p, ca) > trim && dist(p, cb) > trim)
            .collect();
        let line = fit_line(&run).unwrap_or_else(|| {
            let d = sub(cb, ca);
            let l = norm(d).max(1e-12);
            (ca, [d[0] / l, d[1] / l])
        });
        lines.push(line);
    }
    let mut out = [[0.0; 2]; 4];
    for i in 0..4 {
        let refined = intersect(lines[(i + 3) % 4], lines[i]);
        let edge = dist(coarse[i], coarse[(i + 1) % 4]).min(dist(coarse[i], coarse[(i + 3) % 4]));
        out[i] = match refined {
            Some(p) if dist(p, coarse[i]) <= 0.25 * edge => p,
            _ => coarse[i],
        };
    }
    out
}

/// Finds the largest convex quadrilateral outer contour.
pub fn detect_quad(bin: &Raster) -> Result<Quad> {
    detect_quad_with(bin, &QuadParams::default())
}

pub fn detect_quad_with(bin: &Raster, params: &QuadParams) -> Result<Quad> {
    let cc = label_components(bin);
    let w = bin.width();
    let count = cc.count();
    if count == 0 {
        return Err(Error::NoMarkerFound("no foreground components".into()));
    }
    // First pixel (raster order) and bounding box of every component.
    let mut first = vec![usize::MAX; count];
    let mut bbox = vec![[usize::MAX, usize::MAX, 0, 0]; count];
    for (i, &l) in cc.labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        let k = l as usize - 1;
        let (x, y) = (i % w, i / w);
        if first[k] == usize::MAX {
            first[k] = i;
        }
        let b = &mut bbox[k];
        b[0] = b[0].min(x);
        b[1] = b[1].min(y);
        b[2] = b[2].max(x);
        b[3] = b[3].max(y);
    }
    let bbox_area = |k: usize| {
        let b = bbox[k];
        ((b[2] - b[0] + 1) * (b[3] - b[1] + 1)) as f64
    };
    let mut order: Vec<usize> = (0..count)
        .filter(|&k| bbox_area(k) >= params.min_area_px)
        .collect();
    order.sort_by(|&a, &b| bbox_area(b).total_cmp(&bbox_area(a)).then(a.cmp(&b)));

    let mut best: Option<Quad> = None;
    for k in order {
        if let Some(q) = &best {
            // A quad cannot be larger than its component's bounding box.
            if q.area() >= bbox_area(k) {
                break;
            }
        }
        let start = (first[k] % w, first[k] / w);
        let contour: Vec<[f64; 2]> = trace_outer_contour(bin, start)
            .into_iter()
            .map(|(x, y)| [x as f64, y as f64])
            .collect();
        if contour.len() < 8 {
            continue;
        }
        let perimeter: f64 = (0..contour.len())
            .map(|i| dist(contour[i], contour[(i + 1) % contour.len()]))
            .sum();
        let poly = approximate_polygon(&contour, params.epsilon_frac * perimeter);
        if poly.len() != 4 {
            continue;
        }
        let idx = [poly[0], poly[1], poly[2], poly[3]];
        let corners = refine_corners(&contour, &idx);
        let quad = Quad::from_corners(corners);
        if !quad.is_well_formed(params.min_angle_deg) || quad.area() < params.min_area_px {
            continue;
        }
        if best.as_ref().is_none_or(|b| quad.area() > b.area()) {
            best = Some(quad);
        }
    }
    best.ok_or_else(|| Error::NoMarkerFound("no convex 4-vertex contour".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(w: usize, x0: usize, x1: usize) -> Raster {
        Raster::from_fn(w, w, |x, y| {
            u8::from((x0..=x1).contains(&x) && (x0..=x1).contains(&y))
        })
    }

    #[test]
    fn traces_square_outline_clockwise() {
        let b = square(10, 2, 5);
        let c = trace_outer_contour(&b, (2, 2));
        assert_eq!(c.len(), 12);
        assert_eq!(c[0], (2, 2));
        assert_eq!(c[1], (3, 2));
        assert!(c.contains(&(5, 5)));
    }

    #[test]
    fn traces_single_pixel_and_line() {
        let mut b = Raster::filled(5, 5, 0);
        b.set(2, 2, 1);
        assert_eq!(trace_outer_contour(&b, (2, 2)), vec![(2, 2)]);
        b.set(3, 3, 1);
        assert_eq!(trace_outer_contour(&b, (2, 2)), vec![(2, 2), (3, 3)]);
    }

    #[test]
    fn detects_filled_square() {
        let b = square(64, 10, 49);
        let q = detect_quad(&b).unwrap();
        let want = [[10.0, 10.0], [49.0, 10.0], [49.0, 49.0], [10.0, 49.0]];
        for (c, w) in q.corners.iter().zip(want) {
            assert!(dist(*c, w) < 0.5, "{c:?} vs {w:?}");
        }
    }

    #[test]
    fn blank_has_no_marker() {
        let b = Raster::filled(64, 64, 0);
        assert!(matches!(detect_quad(&b), Err(Error::NoMarkerFound(_))));
    }

    #[test]
    fn rejects_l_shape() {
        let b = Raster::from_fn(80, 80, |x, y| {
            u8::from((10..70).contains(&x) && (10..70).contains(&y) && (x < 30 || y > 50))
        });
        assert!(detect_quad(&b).is_err());
    }
}
