//! End-to-end marker identification.

use std::fmt;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::codec::{facet_values, pattern_to_digit, Digit, FacetGroup, OiluNumber, SidePattern};
use crate::error::{Error, Result, Stage};
use crate::levelset::{
    assign_ring_labels, bits_from_counts, distance_map, estimate_ring_bands, occupancy,
    DistanceMap, GeometryScale, RingLabels, ThresholdParams,
};
use crate::raster::{save_gray16, Raster};
use crate::vision::{
    apply_threshold, binarize_adaptive, binarize_with_polarity, detect_quad, otsu_threshold,
    rectify, remove_small_components, to_grayscale, PolarityHint, Quad,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Binarization {
    #[default]
    Otsu,
    /// Local mean threshold; polarity is still chosen by the global Otsu
    /// minority rule.
    AdaptiveMean { window: usize, offset: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodeConfig {
    /// Resample the detected quad onto a square before labeling.
    pub rectify: bool,
    pub out_size: usize,
    pub ring_count_hint: Option<usize>,
    pub beta: f64,
    pub floor_factor: f64,
    pub binarization: Binarization,
    pub polarity: PolarityHint,
    /// Components smaller than this fraction of the image are erased.
    pub min_area_factor: f64,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            rectify: false,
            out_size: 512,
            ring_count_hint: None,
            beta: 0.5,
            floor_factor: 0.1,
            binarization: Binarization::Otsu,
            polarity: PolarityHint::Auto,
            min_area_factor: 1e-4,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(0.2..=0.8).contains(&self.beta) {
            return bad(format!("beta {} outside [0.2, 0.8]", self.beta));
        }
        if !(0.0..=1.0).contains(&self.floor_factor) {
            return bad(format!("floor_factor {} outside [0, 1]", self.floor_factor));
        }
        if !(0.0..=0.01).contains(&self.min_area_factor) {
            return bad(format!(
                "min_area_factor {} outside [0, 0.01]",
                self.min_area_factor
            ));
        }
        if !(64..=4096).contains(&self.out_size) {
            return bad(format!("out_size {} outside [64, 4096]", self.out_size));
        }
        if self.ring_count_hint == Some(0) {
            return bad("ring_count_hint must be at least 1".into());
        }
        if let Binarization::AdaptiveMean { window, offset } = self.binarization {
            if window < 3 || !(0.0..=128.0).contains(&offset) {
                return bad("adaptive window must be >= 3 and offset in [0, 128]".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RingReport {
    pub pattern: SidePattern,
    pub digit: u8,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecodeResult {
    /// Reading in the orientation the marker was seen.
    pub value: OiluNumber,
    pub facets: FacetGroup,
    #[serde(rename = "rings")]
    pub per_ring: Vec<RingReport>,
    #[serde(rename = "corners", serialize_with = "serialize_corners")]
    pub quad: Quad,
    pub timing_ms: f64,
}

fn serialize_corners<S: serde::Serializer>(q: &Quad, s: S) -> std::result::Result<S::Ok, S::Error> {
    q.corners.serialize(s)
}

impl DecodeResult {
    /// Single-line JSON record.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("decode result serializes")
    }
}

/// A failed decode, with the time spent before failing.
#[derive(Debug)]
pub struct DecodeFailure {
    pub error: Error,
    pub timing_ms: f64,
}

impl DecodeFailure {
    pub fn stage(&self) -> Option<Stage> {
        self.error.stage()
    }

    /// Single-line JSON error record.
    pub fn to_json(&self) -> String {
        let stage = self
            .stage()
            .map(|s| s.as_str().to_string())
            .unwrap_or_else(|| match self.error {
                Error::Io(_) => "Io".into(),
                Error::Format(_) | Error::UnsupportedFormat(_) => "FormatError".into(),
                _ => "Error".into(),
            });
        serde_json::json!({
            "error": stage,
            "message": self.error.to_string(),
            "timing_ms": self.timing_ms,
        })
        .to_string()
    }
}

impl fmt::Display for DecodeFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({:.2} ms)", self.error, self.timing_ms)
    }
}

impl std::error::Error for DecodeFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// Intermediate products captured for debugging.
#[derive(Debug, Default)]
pub struct Trace {
    pub gray: Option<Raster>,
    pub binary: Option<Raster>,
    pub clean: Option<Raster>,
    pub quad: Option<Quad>,
    pub rectified: Option<Raster>,
    pub depth: Option<DistanceMap>,
    pub labels: Option<RingLabels>,
}

impl Trace {
    /// Writes every captured stage into `dir` under fixed names.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        if let Some(g) = &self.gray {
            g.save(dir.join("01_gray.png"))?;
        }
        if let Some(b) = &self.binary {
            b.save(dir.join("02_binary.png"))?;
        }
        if let Some(c) = &self.clean {
            c.save(dir.join("03_clean.png"))?;
        }
        if let Some(g) = &self.gray {
            quad_overlay(g, self.quad.as_ref()).save(dir.join("04_quad.png"))?;
        }
        if let Some(r) = &self.rectified {
            r.save(dir.join("04b_rectified.png"))?;
        }
        if let Some(d) = &self.depth {
            save_gray16(dir.join("05_depth.png"), d.width, d.height, d.to_u16())?;
        }
        if let Some(l) = &self.labels {
            label_image(l).save(dir.join("06_labels.png"))?;
        }
        Ok(())
    }
}

fn quad_overlay(gray: &Raster, quad: Option<&Quad>) -> Raster {
    let (w, h) = (gray.width(), gray.height());
    let mut rgb: Vec<u8> = gray.data().iter().flat_map(|&v| [v, v, v]).collect();
    if let Some(q) = quad {
        for i in 0..4 {
            let (a, b) = (q.corners[i], q.corners[(i + 1) % 4]);
            let steps = (a[0] - b[0]).abs().max((a[1] - b[1]).abs()).ceil() as usize + 1;
            for s in 0..=steps {
                let t = s as f64 / steps as f64;
                let x = (a[0] + t * (b[0] - a[0])).round();
                let y = (a[1] + t * (b[1] - a[1])).round();
                if x >= 0.0 && y >= 0.0 && (x as usize) < w && (y as usize) < h {
                    let i = (y as usize * w + x as usize) * 3;
                    rgb[i..i + 3].copy_from_slice(&[255, 0, 0]);
                }
            }
        }
    }
    Raster::new(w, h, 3, rgb).expect("sizes match")
}

const PALETTE: [[u8; 3]; 8] = [
    [230, 25, 75],
    [60, 180, 75],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
];

fn label_image(l: &RingLabels) -> Raster {
    let data = l
        .labels
        .iter()
        .flat_map(|&v| {
            if v == 0 {
                [0, 0, 0]
            } else {
                PALETTE[(v as usize - 1) % PALETTE.len()]
            }
        })
        .collect();
    Raster::new(l.width, l.height, 3, data).expect("sizes match")
}

/// Decodes the largest marker in `img`.
pub fn decode(
    img: &Raster,
    cfg: &DecodeConfig,
) -> std::result::Result<DecodeResult, DecodeFailure> {
    decode_inner(img, cfg, None)
}

/// Like [`decode`], recording intermediate stages into `trace`.
pub fn decode_traced(
    img: &Raster,
    cfg: &DecodeConfig,
    trace: &mut Trace,
) -> std::result::Result<DecodeResult, DecodeFailure> {
    decode_inner(img, cfg, Some(trace))
}

fn decode_inner(
    img: &Raster,
    cfg: &DecodeConfig,
    trace: Option<&mut Trace>,
) -> std::result::Result<DecodeResult, DecodeFailure> {
    let start = Instant::now();
    let outcome = run_pipeline(img, cfg, trace);
    let timing_ms = start.elapsed().as_secs_f64() * 1e3;
    match outcome {
        Ok((value, per_ring, quad)) => Ok(DecodeResult {
            facets: facet_values(&value),
            value,
            per_ring,
            quad,
            timing_ms,
        }),
        Err(error) => Err(DecodeFailure { error, timing_ms }),
    }
}

fn stroke_mask(gray: &Raster, t: u8, cfg: &DecodeConfig) -> (Raster, crate::render::Polarity) {
    let (bin, polarity) = binarize_with_polarity(gray, t, cfg.polarity);
    match cfg.binarization {
        Binarization::Otsu => (bin, polarity),
        Binarization::AdaptiveMean { window, offset } => {
            (binarize_adaptive(gray, window, offset, polarity), polarity)
        }
    }
}

fn run_pipeline(
    img: &Raster,
    cfg: &DecodeConfig,
    mut trace: Option<&mut Trace>,
) -> Result<(OiluNumber, Vec<RingReport>, Quad)> {
    cfg.validate()?;
    let gray = to_grayscale(img)?;
    if let Some(tr) = trace.as_deref_mut() {
        tr.gray = Some(gray.clone());
    }
    let t = match otsu_threshold(&gray) {
        Ok(t) => t,
        Err(Error::DegenerateHistogram) => 128,
        Err(e) => return Err(e),
    };
    let (binary, polarity) = stroke_mask(&gray, t, cfg);
    let min_area = (cfg.min_area_factor * gray.len() as f64).ceil() as usize;
    let clean = remove_small_components(&binary, min_area);
    let quad = detect_quad(&clean);
    if let Some(tr) = trace.as_deref_mut() {
        tr.binary = Some(binary);
        tr.clean = Some(clean.clone());
        tr.quad = quad.as_ref().ok().copied();
    }
    let quad = quad?;

    let (strokes, label_quad) = if cfg.rectify {
        let rect = rectify(&gray, &quad, cfg.out_size)?;
        let bin = match cfg.binarization {
            Binarization::Otsu => apply_threshold(&rect, t, polarity),
            Binarization::AdaptiveMean { window, offset } => {
                binarize_adaptive(&rect, window, offset, polarity)
            }
        };
        let min_area = (cfg.min_area_factor * rect.len() as f64).ceil() as usize;
        let strokes = remove_small_components(&bin, min_area);
        if let Some(tr) = trace.as_deref_mut() {
            tr.rectified = Some(rect);
        }
        (strokes, Quad::axis_aligned(0.0, 0.0, cfg.out_size as f64))
    } else {
        (clean, quad)
    };

    let dm = distance_map(&label_quad, strokes.width(), strokes.height())?;
    let bands = estimate_ring_bands(&dm, &strokes, cfg.ring_count_hint);
    let bands = match bands {
        Ok(b) => b,
        Err(e) => {
            if let Some(tr) = trace.as_deref_mut() {
                tr.depth = Some(dm);
            }
            return Err(e);
        }
    };
    let labels = assign_ring_labels(&dm, &bands, &strokes);
    let table = occupancy(&labels, &label_quad);
    let scale = GeometryScale::estimate(&dm, &bands, &strokes, &label_quad);
    let bits = bits_from_counts(
        &table,
        &scale.side_counts,
        &ThresholdParams {
            beta: cfg.beta,
            floor_factor: cfg.floor_factor,
        },
    );
    if let Some(tr) = trace {
        tr.depth = Some(dm);
        tr.labels = Some(labels);
    }

    let mut digits: Vec<Digit> = Vec::with_capacity(bits.len());
    let mut per_ring = Vec::with_capacity(bits.len());
    for (index, b) in bits.iter().enumerate() {
        let digit = match pattern_to_digit(b.pattern) {
            Ok(d) if !b.undecodable => d,
            _ => {
                return Err(Error::UndecodableRing {
                    index,
                    pattern: b.pattern.mask(),
                })
            }
        };
        digits.push(digit);
        per_ring.push(RingReport {
            pattern: b.pattern,
            digit: digit.value(),
            margin: b.margin,
        });
    }
    Ok((OiluNumber::new(digits)?, per_ring, quad))
}

/// Loads a PNG/PGM file and decodes it. I/O and format problems surface as
/// `Error::Io` / `Error::Format`, never as a decode stage.
pub fn decode_file(
    path: impl AsRef<Path>,
    cfg: &DecodeConfig,
) -> std::result::Result<DecodeResult, DecodeFailure> {
    let start = Instant::now();
    let img = Raster::load(path).map_err(|error| DecodeFailure {
        error,
        timing_ms: start.elapsed().as_secs_f64() * 1e3,
    })?;
    decode(&img, cfg)
}
