//! Depth-band labeling inside a detected quadrilateral.
//!
//! The quad interior gets an exact Euclidean depth below its border. Stroke
//! pixels cluster at the depths of the concentric rings, so peaks in the
//! per-level stroke density give the ring bands. The diagonals split the
//! quad into four triangles, one per side, and counting labeled stroke
//! pixels per (ring, triangle) cell gives each ring's side pattern.

mod edt;

use serde::Serialize;

pub use edt::{edt_squared, UNREACHABLE};

use crate::codec::{Side, SidePattern};
use crate::error::{Error, Result};
use crate::raster::Raster;
use crate::vision::{cross, sub, Quad};

/// Nonnegative depth inside the quad, masked outside.
#[derive(Debug, Clone)]
pub struct DistanceMap {
    pub width: usize,
    pub height: usize,
    /// Depth per pixel; negative means outside the quad.
    depth: Vec<f32>,
    /// Largest depth inside the quad.
    pub max_depth: f64,
    /// Inclusive pixel bounding box `[x0, y0, x1, y1]` of the interior.
    pub bbox: [usize; 4],
}

impl DistanceMap {
    #[inline]
    pub fn depth(&self, x: usize, y: usize) -> Option<f64> {
        let d = self.depth[y * self.width + x];
        (d >= 0.0).then_some(d as f64)
    }

    #[inline]
    pub fn depth_raw(&self) -> &[f32] {
        &self.depth
    }

    pub fn inside_count(&self) -> usize {
        self.depth.iter().filter(|&&d| d >= 0.0).count()
    }

    /// Depth scaled by 256 in a 16-bit image; outside pixels are 0.
    pub fn to_u16(&self) -> Vec<u16> {
        self.depth
            .iter()
            .map(|&d| {
                if d < 0.0 {
                    0
                } else {
                    (d * 256.0).round().min(65535.0) as u16
                }
            })
            .collect()
    }
}

/// Depth below the quad boundary for every pixel whose center lies inside
/// the quad. Boundary pixels (interior pixels with a 4-neighbour outside)
/// have depth 0 and seed an exact distance transform.
pub fn distance_map(quad: &Quad, width: usize, height: usize) -> Result<DistanceMap> {
    if !quad.is_well_formed(0.0) || quad.area() < 1.0 {
        return Err(Error::DegenerateQuad);
    }
    let xs = quad.corners.map(|c| c[0]);
    let ys = quad.corners.map(|c| c[1]);
    let fmin = |v: [f64; 4]| v.iter().cloned().fold(f64::INFINITY, f64::min);
    let fmax = |v: [f64; 4]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let x0 = fmin(xs).ceil().max(0.0) as usize;
    let y0 = fmin(ys).ceil().max(0.0) as usize;
    let x1 = (fmax(xs).floor() as i64).min(width as i64 - 1);
    let y1 = (fmax(ys).floor() as i64).min(height as i64 - 1);
    if x1 < x0 as i64 || y1 < y0 as i64 {
        return Err(Error::DegenerateQuad);
    }
    let (x1, y1) = (x1 as usize, y1 as usize);
    let (bw, bh) = (x1 - x0 + 1, y1 - y0 + 1);

    let c = quad.corners;
    let edges: Vec<([f64; 2], [f64; 2])> =
        (0..4).map(|i| (c[i], sub(c[(i + 1) % 4], c[i]))).collect();
    let mut inside = vec![false; bw * bh];
    for by in 0..bh {
        let py = (y0 + by) as f64;
        for bx in 0..bw {
            let p = [(x0 + bx) as f64, py];
            inside[by * bw + bx] = edges.iter().all(|(a, e)| cross(*e, sub(p, *a)) >= -1e-9);
        }
    }
    let at = |bx: i64, by: i64| {
        bx >= 0
            && by >= 0
            && (bx as usize) < bw
            && (by as usize) < bh
            && inside[by as usize * bw + bx as usize]
    };
    let mut seeds = vec![false; bw * bh];
    for by in 0..bh as i64 {
        for bx in 0..bw as i64 {
            if at(bx, by) && !(at(bx - 1, by) && at(bx + 1, by) && at(bx, by - 1) && at(bx, by + 1))
            {
                seeds[by as usize * bw + bx as usize] = true;
            }
        }
    }
    let sq = edt_squared(&seeds, bw, bh);
    let mut depth = vec![-1.0f32; width * height];
    let mut max_sq = 0u64;
    for by in 0..bh {
        for bx in 0..bw {
            let i = by * bw + bx;
            if inside[i] {
                max_sq = max_sq.max(sq[i]);
                depth[(y0 + by) * width + x0 + bx] = (sq[i] as f64).sqrt() as f32;
            }
        }
    }
    Ok(DistanceMap {
        width,
        height,
        depth,
        max_depth: (max_sq as f64).sqrt(),
        bbox: [x0, y0, x1, y1],
    })
}

#[derive(Debug, Clone, Copy)]
pub struct BandParams {
    /// Minimum peak prominence relative to the highest density.
    pub prominence_frac: f64,
    /// Minimum distance between kept peaks, in depth units.
    pub min_separation: f64,
    /// Allowed relative deviation of any band gap from the pitch estimate.
    pub spacing_tolerance: f64,
    /// Band half-width as a fraction of the pitch estimate.
    pub half_width_frac: f64,
}

impl Default for BandParams {
    fn default() -> Self {
        BandParams {
            prominence_frac: 0.2,
            min_separation: 3.0,
            spacing_tolerance: 0.3,
            half_width_frac: 0.4,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RingBands {
    pub pitch_estimate_px: f64,
    /// Depth of the border ring's band (dropped from `centers`).
    pub border_center: f64,
    /// Code ring centers, outermost (smallest depth) first.
    pub centers: Vec<f64>,
    pub half_width: f64,
}

/// Levels with fewer pixels than this carry no density (the tiny level sets
/// near the deepest point are too noisy).
const MIN_LEVEL_PIXELS: u64 = 16;

/// Stroke density per unit depth: the fraction of each level set's pixels
/// that are strokes, with 1px bins.
pub fn level_density(dm: &DistanceMap, strokes: &Raster) -> Vec<f64> {
    let bins = dm.max_depth.round() as usize + 1;
    let mut stroke_count = vec![0u64; bins];
    let mut all_count = vec![0u64; bins];
    let [x0, y0, x1, y1] = dm.bbox;
    let px = strokes.data();
    for y in y0..=y1 {
        let row = y * dm.width;
        for x in x0..=x1 {
            let d = dm.depth[row + x];
            if d < 0.0 {
                continue;
            }
            let b = (d.round() as usize).min(bins - 1);
            all_count[b] += 1;
            if px[row + x] != 0 {
                stroke_count[b] += 1;
            }
        }
    }
    stroke_count
        .iter()
        .zip(&all_count)
        .map(|(&s, &a)| {
            if a >= MIN_LEVEL_PIXELS {
                s as f64 / a as f64
            } else {
                0.0
            }
        })
        .collect()
}

fn smooth3(v: &[f64]) -> Vec<f64> {
    (0..v.len())
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(v.len() - 1);
            v[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Peak {
    pos: f64,
    height: f64,
    prominence: f64,
}

/// Local maxima (plateaus count once, at their middle) with topographic
/// prominence. Samples beyond either end are treated as 0.
fn find_peaks(v: &[f64]) -> Vec<Peak> {
    let n = v.len();
    let get = |i: i64| {
        if i < 0 || i >= n as i64 {
            0.0
        } else {
            v[i as usize]
        }
    };
    let mut peaks = Vec::new();
    let mut i = 0usize;
    while i < n {
        let mut j = i;
        while j + 1 < n && v[j + 1] == v[i] {
            j += 1;
        }
        let h = v[i];
        if h > 0.0 && get(i as i64 - 1) < h && get(j as i64 + 1) < h {
            let mut left_min = h;
            let mut k = i as i64 - 1;
            loop {
                let val = get(k);
                left_min = left_min.min(val);
                // Equal height on the left counts as higher so twin peaks
                // share one prominence.
                if k < 0 || val >= h {
                    break;
                }
                k -= 1;
            }
            let mut right_min = h;
            let mut k = j as i64 + 1;
            loop {
                let val = get(k);
                right_min = right_min.min(val);
                if k >= n as i64 || val > h {
                    break;
                }
                k += 1;
            }
            peaks.push(Peak {
                pos: (i + j) as f64 / 2.0,
                height: h,
                prominence: h - left_min.max(right_min),
            });
        }
        i = j + 1;
    }
    peaks
}

/// Density-weighted centroid over the half-maximum run around a peak.
fn refine_center(raw: &[f64], smooth: &[f64], pos: f64, height: f64) -> f64 {
    let p = pos.round() as usize;
    let level = 0.5 * height;
    let mut lo = p;
    while lo > 0 && smooth[lo - 1] >= level {
        lo -= 1;
    }
    let mut hi = p;
    while hi + 1 < smooth.len() && smooth[hi + 1] >= level {
        hi += 1;
    }
    let (mut sw, mut swx) = (0.0, 0.0);
    for (i, &w) in raw.iter().enumerate().take(hi + 1).skip(lo) {
        sw += w;
        swx += w * i as f64;
    }
    if sw > 0.0 {
        swx / sw
    } else {
        pos
    }
}

pub fn estimate_ring_bands(
    dm: &DistanceMap,
    strokes: &Raster,
    ring_count_hint: Option<usize>,
) -> Result<RingBands> {
    estimate_ring_bands_with(dm, strokes, ring_count_hint, &BandParams::default())
}

pub fn estimate_ring_bands_with(
    dm: &DistanceMap,
    strokes: &Raster,
    ring_count_hint: Option<usize>,
    params: &BandParams,
) -> Result<RingBands> {
    let raw = level_density(dm, strokes);
    let smooth = smooth3(&raw);
    let global = smooth.iter().cloned().fold(0.0, f64::max);
    if global <= 0.0 {
        return Err(Error::NoRingsFound(
            "no stroke pixels inside the quad".into(),
        ));
    }
    let mut peaks: Vec<Peak> = find_peaks(&smooth)
        .into_iter()
        .filter(|p| p.prominence >= params.prominence_frac * global)
        .collect();
    // Enforce separation, keeping the more prominent of two close peaks.
    let mut by_prominence = peaks.clone();
    by_prominence.sort_by(|a, b| {
        b.prominence
            .total_cmp(&a.prominence)
            .then(a.pos.total_cmp(&b.pos))
    });
    let mut kept: Vec<Peak> = Vec::new();
    for p in by_prominence {
        if kept
            .iter()
            .all(|k| (k.pos - p.pos).abs() >= params.min_separation)
        {
            kept.push(p);
        }
    }
    kept.sort_by(|a, b| a.pos.total_cmp(&b.pos));
    peaks.clear();
    peaks.extend(kept);

    if peaks.len() < 2 {
        return Err(Error::NoRingsFound(format!(
            "{} density peak(s); need the border plus at least one code ring",
            peaks.len()
        )));
    }
    let border = peaks.remove(0);
    if let Some(n) = ring_count_hint {
        if peaks.len() < n {
            return Err(Error::AmbiguousBands(format!(
                "expected {n} code rings, found {}",
                peaks.len()
            )));
        }
        let mut strongest = peaks.clone();
        strongest.sort_by(|a, b| {
            b.prominence
                .total_cmp(&a.prominence)
                .then(a.pos.total_cmp(&b.pos))
        });
        strongest.truncate(n);
        strongest.sort_by(|a, b| a.pos.total_cmp(&b.pos));
        peaks = strongest;
    }

    let border_center = refine_center(&raw, &smooth, border.pos, border.height);
    let centers: Vec<f64> = peaks
        .iter()
        .map(|p| refine_center(&raw, &smooth, p.pos, p.height))
        .collect();
    // The border is drawn inward from the quad edge, so its center sits
    // about half a stroke deep rather than on the ring lattice; it only
    // anchors the pitch when there is a single code ring.
    let last = *centers.last().expect("at least one code peak");
    let pitch = if centers.len() >= 2 {
        (last - centers[0]) / (centers.len() - 1) as f64
    } else {
        last - border_center
    };
    let mut prev = border_center;
    for &c in &centers {
        let gap = c - prev;
        if pitch <= 0.0 || (gap - pitch).abs() > params.spacing_tolerance * pitch {
            return Err(Error::AmbiguousBands(format!(
                "gap {gap:.1} deviates from pitch {pitch:.1}; centers {centers:.1?}, border {border_center:.1}"
            )));
        }
        prev = c;
    }
    Ok(RingBands {
        pitch_estimate_px: pitch,
        border_center,
        centers,
        half_width: params.half_width_frac * pitch,
    })
}

/// Per-pixel ring labels: 0 for unlabeled, `k` for the k-th code ring.
#[derive(Debug, Clone)]
pub struct RingLabels {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u8>,
    pub ring_count: usize,
}

impl RingLabels {
    pub fn labeled_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l != 0).count()
    }
}

/// Ring index of a depth, or 0 when it falls outside every band.
pub fn band_of(bands: &RingBands, depth: f64) -> u8 {
    for (i, &c) in bands.centers.iter().enumerate() {
        if (depth - c).abs() <= bands.half_width {
            return (i + 1) as u8;
        }
    }
    0
}

pub fn assign_ring_labels(dm: &DistanceMap, bands: &RingBands, strokes: &Raster) -> RingLabels {
    let mut labels = vec![0u8; dm.width * dm.height];
    let [x0, y0, x1, y1] = dm.bbox;
    let px = strokes.data();
    for y in y0..=y1 {
        for x in x0..=x1 {
            let i = y * dm.width + x;
            let d = dm.depth[i];
            if d >= 0.0 && px[i] != 0 {
                labels[i] = band_of(bands, d as f64);
            }
        }
    }
    RingLabels {
        width: dm.width,
        height: dm.height,
        labels,
        ring_count: bands.centers.len(),
    }
}

/// Precomputed diagonal split of a quad into four triangles.
#[derive(Debug, Clone, Copy)]
pub struct TriangleSplit {
    center: [f64; 2],
    rays: [[f64; 2]; 4],
}

impl TriangleSplit {
    pub fn new(quad: &Quad) -> TriangleSplit {
        let center = quad.diagonal_center();
        TriangleSplit {
            center,
            rays: quad.corners.map(|c| sub(c, center)),
        }
    }

    /// Triangle `k` spans clockwise from ray `k` to ray `k + 1` and touches
    /// quad edge `k` (0 = top). A point on a ray belongs to the sector
    /// counter-clockwise of it; the center itself is TOP.
    #[inline]
    pub fn side(&self, p: [f64; 2]) -> Side {
        let v = sub(p, self.center);
        if v[0] == 0.0 && v[1] == 0.0 {
            return Side::Top;
        }
        for k in 0..4 {
            let start = self.rays[k];
            let end = self.rays[(k + 1) % 4];
            if cross(start, v) > 0.0 && cross(v, end) >= 0.0 {
                return Side::from_index(k);
            }
        }
        Side::Top
    }
}

/// Which diagonal triangle of `quad` contains `point`.
pub fn side_of(point: [f64; 2], quad: &Quad) -> Result<Side> {
    if !quad.contains(point) {
        return Err(Error::OutOfDomain {
            x: point[0],
            y: point[1],
        });
    }
    Ok(TriangleSplit::new(quad).side(point))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OccupancyTable {
    /// `counts[ring][side]`, ring 0 = outermost code ring, sides T, R, B, L.
    pub counts: Vec<[u64; 4]>,
}

impl OccupancyTable {
    pub fn max_count(&self, ring: usize) -> u64 {
        self.counts[ring].iter().copied().max().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

pub fn occupancy(labels: &RingLabels, quad: &Quad) -> OccupancyTable {
    let split = TriangleSplit::new(quad);
    let mut counts = vec![[0u64; 4]; labels.ring_count];
    for (i, &l) in labels.labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        let p = [(i % labels.width) as f64, (i / labels.width) as f64];
        counts[l as usize - 1][split.side(p).index()] += 1;
    }
    OccupancyTable { counts }
}

/// Expected pixel count of one full stroke side for each ring, used for the
/// absolute presence floor.
#[derive(Debug, Clone, Serialize)]
pub struct GeometryScale {
    pub stroke_px: f64,
    pub side_counts: Vec<f64>,
}

impl GeometryScale {
    /// Stroke width from the border band's pixel count over the quad
    /// perimeter, and side length from the quad's mean side minus twice the
    /// ring depth.
    pub fn estimate(
        dm: &DistanceMap,
        bands: &RingBands,
        strokes: &Raster,
        quad: &Quad,
    ) -> GeometryScale {
        let limit = bands.border_center + bands.half_width;
        let [x0, y0, x1, y1] = dm.bbox;
        let px = strokes.data();
        let mut border = 0usize;
        for y in y0..=y1 {
            for x in x0..=x1 {
                let i = y * dm.width + x;
                let d = dm.depth[i];
                if d >= 0.0 && (d as f64) <= limit && px[i] != 0 {
                    border += 1;
                }
            }
        }
        let stroke_px = border as f64 / quad.perimeter().max(1.0);
        let side = quad.mean_side();
        let side_counts = bands
            .centers
            .iter()
            .map(|&c| (side - 2.0 * c).max(1.0) * stroke_px)
            .collect();
        GeometryScale {
            stroke_px,
            side_counts,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ThresholdParams {
    /// Relative presence threshold against the ring's largest count.
    pub beta: f64,
    /// Absolute floor as a fraction of the expected side count.
    pub floor_factor: f64,
}

impl Default for ThresholdParams {
    fn default() -> Self {
        ThresholdParams {
            beta: 0.5,
            floor_factor: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RingBits {
    pub pattern: SidePattern,
    pub threshold: f64,
    /// `(min present count - threshold) / threshold`, clamped to `[0, 1]`;
    /// 0 when undecodable.
    pub margin: f64,
    pub undecodable: bool,
}

/// Thresholds each ring's four counts into a side pattern. A side is present
/// when its count reaches `max(beta * ring max, floor)`.
pub fn bits_from_counts(
    table: &OccupancyTable,
    expected_side_counts: &[f64],
    params: &ThresholdParams,
) -> Vec<RingBits> {
    table
        .counts
        .iter()
        .enumerate()
        .map(|(ring, counts)| {
            let max = counts.iter().copied().max().unwrap_or(0) as f64;
            let floor =
                params.floor_factor * expected_side_counts.get(ring).copied().unwrap_or(0.0);
            let threshold = (params.beta * max).max(floor);
            let mut pattern = SidePattern::EMPTY;
            for side in Side::ALL {
                let c = counts[side.index()] as f64;
                if c > 0.0 && c >= threshold {
                    pattern = pattern.with(side);
                }
            }
            let undecodable = !pattern.is_valid();
            let margin = if undecodable || threshold <= 0.0 {
                0.0
            } else {
                let min_present = pattern
                    .sides()
                    .map(|s| counts[s.index()] as f64)
                    .fold(f64::INFINITY, f64::min);
                ((min_present - threshold) / threshold).clamp(0.0, 1.0)
            };
            RingBits {
                pattern,
                threshold,
                margin,
                undecodable,
            }
        })
        .collect()
}
