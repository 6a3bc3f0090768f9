//! Success-rate charts as plain PNGs.

use std::path::{Path, PathBuf};

use super::{DistortionKind, EvalRecord};
use crate::error::{Error, Result};
use crate::raster::Raster;

pub const CHART_W: usize = 480;
pub const CHART_H: usize = 320;
const MARGIN: usize = 40;
const POINT_HALF: usize = 3;

const AXIS: [u8; 3] = [40, 40, 40];
const GRID: [u8; 3] = [220, 220, 220];
const LINE: [u8; 3] = [0, 110, 200];
const POINT: [u8; 3] = [200, 30, 30];

/// Pixel positions of each record's (level, success_rate) point.
pub fn plot_points(records: &[&EvalRecord]) -> Vec<(usize, usize)> {
    let lo = records
        .iter()
        .map(|r| r.level)
        .fold(f64::INFINITY, f64::min);
    let hi = records
        .iter()
        .map(|r| r.level)
        .fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let pw = (CHART_W - 2 * MARGIN) as f64;
    let ph = (CHART_H - 2 * MARGIN) as f64;
    records
        .iter()
        .map(|r| {
            let x = MARGIN as f64 + (r.level - lo) / span * pw;
            let y = (CHART_H - MARGIN) as f64 - r.success_rate.clamp(0.0, 1.0) * ph;
            (x.round() as usize, y.round() as usize)
        })
        .collect()
}

struct Canvas {
    rgb: Vec<u8>,
}

impl Canvas {
    fn new() -> Canvas {
        Canvas {
            rgb: vec![255; CHART_W * CHART_H * 3],
        }
    }

    fn put(&mut self, x: i64, y: i64, c: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as usize) < CHART_W && (y as usize) < CHART_H {
            let i = (y as usize * CHART_W + x as usize) * 3;
            self.rgb[i..i + 3].copy_from_slice(&c);
        }
    }

    fn line(&mut self, a: (usize, usize), b: (usize, usize), c: [u8; 3]) {
        let (x0, y0, x1, y1) = (a.0 as i64, a.1 as i64, b.0 as i64, b.1 as i64);
        let steps = (x1 - x0).abs().max((y1 - y0).abs()).max(1);
        for s in 0..=steps {
            let x = x0 + (x1 - x0) * s / steps;
            let y = y0 + (y1 - y0) * s / steps;
            self.put(x, y, c);
        }
    }
}

/// Draws one chart; `records` must share a kind and be in sweep order.
pub fn render_chart(records: &[&EvalRecord]) -> Raster {
    let mut cv = Canvas::new();
    let bottom = CHART_H - MARGIN;
    let right = CHART_W - MARGIN;
    for q in 0..=4 {
        let y = bottom - q * (CHART_H - 2 * MARGIN) / 4;
        cv.line((MARGIN, y), (right, y), GRID);
    }
    cv.line((MARGIN, MARGIN), (MARGIN, bottom), AXIS);
    cv.line((MARGIN, bottom), (right, bottom), AXIS);
    let pts = plot_points(records);
    for w in pts.windows(2) {
        cv.line(w[0], w[1], LINE);
    }
    for &(x, y) in &pts {
        let h = POINT_HALF as i64;
        for dy in -h..=h {
            for dx in -h..=h {
                cv.put(x as i64 + dx, y as i64 + dy, POINT);
            }
        }
    }
    Raster::new(CHART_W, CHART_H, 3, cv.rgb).expect("chart buffer size")
}

/// One `success_<kind>.png` per distortion kind, in first-seen order.
pub fn render_curves(records: &[EvalRecord], dir: &Path) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::NoData);
    }
    std::fs::create_dir_all(dir)?;
    let mut kinds: Vec<DistortionKind> = Vec::new();
    for r in records {
        if !kinds.contains(&r.kind) {
            kinds.push(r.kind);
        }
    }
    let mut written = Vec::new();
    for kind in kinds {
        let group: Vec<&EvalRecord> = records.iter().filter(|r| r.kind == kind).collect();
        let path = dir.join(format!("success_{}.png", kind.name()));
        render_chart(&group).save(&path)?;
        written.push(path);
    }
    Ok(written)
}
