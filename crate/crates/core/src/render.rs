//! Rasterizes an [`OiluNumber`] as nested square rings.
//!
//! Layout, from the outside in: a quiet zone, a closed border ring used only
//! for detection, then one code ring per digit (most significant outermost).
//! Each present side of a ring is an axis-aligned stroke spanning the full
//! side including both corners.
//!
//! Coordinates below are pixel centers; the canvas center is `(N - 1) / 2`.
//! Band edges are kept in doubled units so odd strokes and even canvases stay
//! in integer arithmetic.

use serde::{Deserialize, Serialize};

use crate::codec::{digit_to_pattern, OiluNumber, Side, SidePattern};
use crate::error::{Error, Result};
use crate::raster::Raster;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    #[default]
    DarkOnLight,
    LightOnDark,
}

impl Polarity {
    pub fn stroke_value(self) -> u8 {
        match self {
            Polarity::DarkOnLight => 0,
            Polarity::LightOnDark => 255,
        }
    }

    pub fn background_value(self) -> u8 {
        255 - self.stroke_value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarkerStyle {
    pub canvas_px: u32,
    pub quiet_zone_px: u32,
    pub stroke_px: u32,
    /// Center-to-center ring spacing.
    pub pitch_px: u32,
    pub polarity: Polarity,
}

impl Default for MarkerStyle {
    fn default() -> Self {
        MarkerStyle {
            canvas_px: 512,
            quiet_zone_px: 32,
            stroke_px: 12,
            pitch_px: 48,
            polarity: Polarity::DarkOnLight,
        }
    }
}

impl MarkerStyle {
    /// Default proportions, with the canvas grown just enough to fit
    /// `digits` rings when the default 512px canvas is too small.
    pub fn sized_for(digits: usize) -> MarkerStyle {
        let mut style = MarkerStyle::default();
        if style.check_fits(digits).is_err() {
            style.canvas_px = 2 * (style.quiet_zone_px + (digits as u32 + 1) * style.pitch_px);
        }
        style
    }

    pub fn with_polarity(mut self, polarity: Polarity) -> MarkerStyle {
        self.polarity = polarity;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidStyle(m.to_string()));
        if self.stroke_px < 1 {
            return bad("stroke_px must be at least 1");
        }
        if self.pitch_px <= self.stroke_px {
            return bad("pitch_px must exceed stroke_px");
        }
        // The border is drawn inward from its outer edge while code rings are
        // centered on their half-width, so the first gap is pitch - 1.5 stroke.
        if 2 * self.pitch_px <= 3 * self.stroke_px {
            return bad("pitch_px must exceed 1.5 * stroke_px so the first ring clears the border");
        }
        if self.quiet_zone_px < self.stroke_px {
            return bad("quiet_zone_px must be at least stroke_px");
        }
        if self.canvas_px <= 2 * (self.quiet_zone_px + self.stroke_px) {
            return bad("canvas too small for the border ring");
        }
        Ok(())
    }

    fn border_half_width(&self) -> i64 {
        self.canvas_px as i64 / 2 - self.quiet_zone_px as i64
    }

    /// The innermost ring must keep a half-width of at least one stroke so
    /// the center stays open.
    fn check_fits(&self, digits: usize) -> Result<()> {
        let innermost = self.border_half_width() - digits as i64 * self.pitch_px as i64;
        if digits == 0 || innermost < self.stroke_px as i64 {
            return Err(Error::LayoutOverflow {
                digits,
                canvas_px: self.canvas_px,
            });
        }
        Ok(())
    }
}

/// Half-open band of offsets from the canvas center, in doubled pixel units:
/// a pixel row `y` belongs to the top side when `lo2 < (N-1) - 2y <= hi2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Band {
    pub lo2: i64,
    pub hi2: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkerGeometry {
    pub canvas_px: u32,
    pub stroke_px: u32,
    pub pitch_px: u32,
    pub polarity: Polarity,
    /// Half-width of the border's outer edge.
    pub border_half_width_px: i64,
    /// Centerline half-widths of the code rings, outermost first.
    pub ring_half_widths_px: Vec<i64>,
    pub center_px: [f64; 2],
    pub patterns: Vec<SidePattern>,
    /// Pixel centers of the outermost border pixels, clockwise from top-left.
    pub border_outer_corners: [[f64; 2]; 4],
}

impl MarkerGeometry {
    /// Number of rings including the border (ring 0).
    pub fn ring_total(&self) -> usize {
        self.ring_half_widths_px.len() + 1
    }

    pub fn code_rings(&self) -> usize {
        self.ring_half_widths_px.len()
    }

    /// Band for ring `ring`: 0 is the border, `1..=n` the code rings.
    pub fn band(&self, ring: usize) -> Result<Band> {
        let s = self.stroke_px as i64;
        if ring == 0 {
            let b = self.border_half_width_px;
            Ok(Band {
                lo2: 2 * b - 2 * s,
                hi2: 2 * b,
            })
        } else {
            let h = *self
                .ring_half_widths_px
                .get(ring - 1)
                .ok_or(Error::InvalidRing(ring))?;
            Ok(Band {
                lo2: 2 * h - s,
                hi2: 2 * h + s,
            })
        }
    }

    pub fn pattern(&self, ring: usize) -> Result<SidePattern> {
        if ring == 0 {
            Ok(SidePattern::FULL)
        } else {
            self.patterns
                .get(ring - 1)
                .copied()
                .ok_or(Error::InvalidRing(ring))
        }
    }

    /// Depth of a code ring's centerline below the border's outermost pixel
    /// centers.
    pub fn ring_depth(&self, ring: usize) -> Result<f64> {
        let rows = self.near_range(self.band(ring)?);
        let outer = self.near_range(self.band(0)?).start;
        Ok((rows.start + rows.end - 1) as f64 / 2.0 - outer as f64)
    }

    /// Indices `i` in `[0, N)` with `lo2 < (N-1) - 2i <= hi2`.
    fn near_range(&self, band: Band) -> std::ops::Range<usize> {
        let n1 = self.canvas_px as i64 - 1;
        // (n1 - hi2) / 2 <= i < (n1 - lo2) / 2
        let start = div_ceil(n1 - band.hi2, 2).max(0);
        let end = (div_floor(n1 - band.lo2 - 1, 2) + 1).min(self.canvas_px as i64);
        start as usize..end.max(start) as usize
    }

    /// Indices `i` with `lo2 < 2i - (N-1) <= hi2`.
    fn far_range(&self, band: Band) -> std::ops::Range<usize> {
        let n = self.canvas_px as usize;
        let r = self.near_range(band);
        n - r.end..n - r.start
    }

    /// Indices `i` with `|2i - (N-1)| <= hi2`.
    fn span_range(&self, band: Band) -> std::ops::Range<usize> {
        let n1 = self.canvas_px as i64 - 1;
        let start = div_ceil(n1 - band.hi2, 2).max(0);
        let end = (div_floor(n1 + band.hi2, 2) + 1).min(self.canvas_px as i64);
        start as usize..end.max(start) as usize
    }

    /// Pixel rectangle `(xs, ys)` drawn for one side of one ring.
    pub fn side_rect(
        &self,
        ring: usize,
        side: Side,
    ) -> Result<(std::ops::Range<usize>, std::ops::Range<usize>)> {
        let band = self.band(ring)?;
        let span = self.span_range(band);
        Ok(match side {
            Side::Top => (span, self.near_range(band)),
            Side::Bottom => (span, self.far_range(band)),
            Side::Left => (self.near_range(band), span),
            Side::Right => (self.far_range(band), span),
        })
    }
}

fn div_floor(a: i64, b: i64) -> i64 {
    a.div_euclid(b)
}

fn div_ceil(a: i64, b: i64) -> i64 {
    -((-a).div_euclid(b))
}

pub fn layout_rings(n: &OiluNumber, style: &MarkerStyle) -> Result<MarkerGeometry> {
    style.validate()?;
    style.check_fits(n.len())?;
    let border = style.border_half_width();
    let pitch = style.pitch_px as i64;
    let ring_half_widths_px = (1..=n.len() as i64).map(|i| border - i * pitch).collect();
    let c = (style.canvas_px as f64 - 1.0) / 2.0;
    let mut geom = MarkerGeometry {
        canvas_px: style.canvas_px,
        stroke_px: style.stroke_px,
        pitch_px: style.pitch_px,
        polarity: style.polarity,
        border_half_width_px: border,
        ring_half_widths_px,
        center_px: [c, c],
        patterns: n.digits().iter().map(|&d| digit_to_pattern(d)).collect(),
        border_outer_corners: [[0.0; 2]; 4],
    };
    let span = geom.span_range(geom.band(0)?);
    let (lo, hi) = (span.start as f64, (span.end - 1) as f64);
    geom.border_outer_corners = [[lo, lo], [hi, lo], [hi, hi], [lo, hi]];
    Ok(geom)
}

pub fn render_geometry(geom: &MarkerGeometry) -> Raster {
    let n = geom.canvas_px as usize;
    let mut data = vec![geom.polarity.background_value(); n * n];
    let ink = geom.polarity.stroke_value();
    for ring in 0..geom.ring_total() {
        let pattern = geom.pattern(ring).expect("ring in range");
        for side in pattern.sides() {
            let (xs, ys) = geom.side_rect(ring, side).expect("ring in range");
            for y in ys {
                data[y * n + xs.start..y * n + xs.end].fill(ink);
            }
        }
    }
    Raster::from_gray(n, n, data)
}

pub fn render_marker(n: &OiluNumber, style: &MarkerStyle) -> Result<Raster> {
    Ok(render_geometry(&layout_rings(n, style)?))
}

/// Pixels the renderer emits for one side of one ring (0 = border). A corner
/// shared by two present sides belongs to the side that reaches it first
/// going clockwise (top owns top-right, right owns bottom-right, ...).
pub fn expected_side_pixel_count(geom: &MarkerGeometry, ring: usize, side: Side) -> Result<usize> {
    let pattern = geom.pattern(ring)?;
    if !pattern.contains(side) {
        return Ok(0);
    }
    let (xs, ys) = geom.side_rect(ring, side)?;
    let full = xs.len() * ys.len();
    let thickness = match side {
        Side::Top | Side::Bottom => ys.len(),
        Side::Left | Side::Right => xs.len(),
    };
    // The start corner belongs to the counter-clockwise neighbour when present.
    let prev = Side::from_index(side.index() + 3);
    Ok(if pattern.contains(prev) {
        full - thickness * thickness
    } else {
        full
    })
}
