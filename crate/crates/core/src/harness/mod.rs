//! Seeded robustness sweeps: render random markers, degrade them, decode, and
//! aggregate success rates, failure stages and decode timing.

mod distort;
mod plot;

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use distort::{
    apply_blur, apply_contrast, apply_noise, apply_radial, apply_tilt, border_fill,
    gaussian_blur_f32, gaussian_kernel, radial_source, tilt_homography,
};
pub use plot::{plot_points, render_chart, render_curves, CHART_H, CHART_W};

use crate::codec::{Digit, OiluNumber};
use crate::decoder::{decode, DecodeConfig};
use crate::error::{Error, Result, Stage};
use crate::raster::Raster;
use crate::render::{render_marker, MarkerStyle, Polarity};

/// Environment variable capping the evaluation worker count.
pub const THREADS_ENV: &str = "OILU_THREADS";

pub const CSV_HEADER: &str = "kind,level,trials,successes,success_rate,mean_ms,p95_ms,\
fail_no_marker,fail_no_rings,fail_undecodable,fail_ambiguous";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistortionKind {
    Noise,
    Blur,
    Radial,
    Tilt,
    Contrast,
}

impl DistortionKind {
    pub const ALL: [DistortionKind; 5] = [
        DistortionKind::Noise,
        DistortionKind::Blur,
        DistortionKind::Radial,
        DistortionKind::Tilt,
        DistortionKind::Contrast,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DistortionKind::Noise => "noise",
            DistortionKind::Blur => "blur",
            DistortionKind::Radial => "radial",
            DistortionKind::Tilt => "tilt",
            DistortionKind::Contrast => "contrast",
        }
    }

    fn index(self) -> u64 {
        self as u64
    }
}

/// One degradation. `level` is sigma for noise and blur, k1 for radial,
/// degrees from frontal for tilt, and contrast loss `1 - c` for contrast, so
/// that level 0 is the identity for every kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionSpec {
    pub kind: DistortionKind,
    pub level: f64,
    pub rng_seed: u64,
}

impl DistortionSpec {
    pub fn apply(&self, img: &Raster) -> Raster {
        match self.kind {
            DistortionKind::Noise => apply_noise(img, self.level, self.rng_seed),
            DistortionKind::Blur => apply_blur(img, self.level),
            DistortionKind::Radial => apply_radial(img, self.level),
            DistortionKind::Tilt => apply_tilt(img, self.level),
            DistortionKind::Contrast => apply_contrast(img, 1.0 - self.level),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRecord {
    pub kind: DistortionKind,
    pub level: f64,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_ms: f64,
    pub p95_ms: f64,
    pub fail_no_marker: usize,
    pub fail_no_rings: usize,
    /// Includes decodes that succeeded with the wrong value.
    pub fail_undecodable: usize,
    pub fail_ambiguous: usize,
    /// Subset of `fail_undecodable`.
    pub misreads: usize,
}

impl EvalRecord {
    pub fn failures(&self) -> usize {
        self.fail_no_marker + self.fail_no_rings + self.fail_undecodable + self.fail_ambiguous
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub kind: DistortionKind,
    pub levels: Vec<f64>,
    /// Overrides the decoder's `rectify` flag for this sweep.
    #[serde(default)]
    pub rectify: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub seed: u64,
    pub trials: usize,
    pub code_length: usize,
    /// Defaults to `MarkerStyle::sized_for(code_length)`.
    pub style: Option<MarkerStyle>,
    /// Background added around the rendered marker before distorting, so that
    /// tilt and radial warps keep the marker in frame.
    pub margin_px: usize,
    /// Alternate polarity between trials.
    pub mixed_polarity: bool,
    pub decode: DecodeConfig,
    pub sweeps: Vec<SweepSpec>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            seed: 1,
            trials: 100,
            code_length: 4,
            style: None,
            margin_px: 64,
            mixed_polarity: false,
            decode: DecodeConfig::default(),
            sweeps: Vec::new(),
        }
    }
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<SweepConfig> {
        let cfg: SweepConfig =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.code_length == 0 || self.code_length > crate::codec::MAX_DIGITS {
            return bad("code_length out of range");
        }
        if self.sweeps.is_empty() {
            return bad("no sweeps configured");
        }
        for s in &self.sweeps {
            if s.levels.is_empty() {
                return bad("sweep without levels");
            }
            for &l in &s.levels {
                let ok = match s.kind {
                    DistortionKind::Noise | DistortionKind::Blur => l >= 0.0,
                    DistortionKind::Radial => l.abs() <= 0.5,
                    DistortionKind::Tilt => (0.0..80.0).contains(&l),
                    DistortionKind::Contrast => (0.0..=1.0).contains(&l),
                };
                if !ok || !l.is_finite() {
                    return bad(&format!("level {l} invalid for {}", s.kind.name()));
                }
            }
        }
        self.resolved_style().validate()?;
        self.decode.validate()
    }

    pub fn resolved_style(&self) -> MarkerStyle {
        self.style
            .unwrap_or_else(|| MarkerStyle::sized_for(self.code_length))
    }
}

/// SplitMix64 finalizer; mixes stream identifiers into independent seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    mix(mix(seed) ^ trial as u64)
}

pub fn distortion_seed(seed: u64, trial: usize, kind: DistortionKind, level: f64) -> u64 {
    mix(trial_seed(seed, trial) ^ mix(kind.index()) ^ mix(level.to_bits()))
}

/// Uniformly random code of `len` digits, leading zeros allowed.
pub fn random_code(rng: &mut impl Rng, len: usize) -> OiluNumber {
    let digits = (0..len)
        .map(|_| Digit::new(rng.random_range(0..10)).expect("digit in range"))
        .collect();
    OiluNumber::new(digits).expect("length checked by caller")
}

/// Pads `img` with `margin` pixels of `fill` on every side.
pub fn pad(img: &Raster, margin: usize, fill: u8) -> Raster {
    let mut out = Raster::filled(img.width() + 2 * margin, img.height() + 2 * margin, fill);
    out.paste(img, margin, margin);
    out
}

/// The undistorted frame and code for one trial.
pub fn trial_frame(cfg: &SweepConfig, trial: usize) -> Result<(OiluNumber, Raster)> {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(cfg.seed, trial));
    let code = random_code(&mut rng, cfg.code_length);
    let mut style = cfg.resolved_style();
    if cfg.mixed_polarity && trial % 2 == 1 {
        style.polarity = match style.polarity {
            Polarity::DarkOnLight => Polarity::LightOnDark,
            Polarity::LightOnDark => Polarity::DarkOnLight,
        };
    }
    let img = render_marker(&code, &style)?;
    Ok((
        code,
        pad(&img, cfg.margin_px, style.polarity.background_value()),
    ))
}

#[derive(Debug, Clone, Copy)]
enum Outcome {
    Success,
    Failed(Stage),
    Misread,
}

/// Nearest-rank percentile of an unsorted sample.
pub fn percentile_nearest_rank(samples: &[f64], p: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let rank = ((p / 100.0) * s.len() as f64).ceil().max(1.0) as usize;
    s[rank.min(s.len()) - 1]
}

fn run_trial(
    cfg: &SweepConfig,
    kind: DistortionKind,
    level: f64,
    dcfg: &DecodeConfig,
    trial: usize,
) -> Result<(Outcome, f64)> {
    let (code, frame) = trial_frame(cfg, trial)?;
    let spec = DistortionSpec {
        kind,
        level,
        rng_seed: distortion_seed(cfg.seed, trial, kind, level),
    };
    let img = spec.apply(&frame);
    let t0 = Instant::now();
    let res = decode(&img, dcfg);
    let ms = t0.elapsed().as_secs_f64() * 1e3;
    let outcome = match res {
        Ok(r) => {
            let hit = if kind == DistortionKind::Tilt {
                r.facets.contains(&code)
            } else {
                r.value == code
            };
            if hit {
                Outcome::Success
            } else {
                Outcome::Misread
            }
        }
        Err(f) => Outcome::Failed(f.stage().unwrap_or(Stage::UndecodableRing)),
    };
    Ok((outcome, ms))
}

fn aggregate(kind: DistortionKind, level: f64, results: &[(Outcome, f64)]) -> EvalRecord {
    let mut rec = EvalRecord {
        kind,
        level,
        trials: results.len(),
        successes: 0,
        success_rate: 0.0,
        mean_ms: 0.0,
        p95_ms: 0.0,
        fail_no_marker: 0,
        fail_no_rings: 0,
        fail_undecodable: 0,
        fail_ambiguous: 0,
        misreads: 0,
    };
    for (o, _) in results {
        match o {
            Outcome::Success => rec.successes += 1,
            Outcome::Misread => {
                rec.misreads += 1;
                rec.fail_undecodable += 1;
            }
            Outcome::Failed(Stage::NoMarkerFound) => rec.fail_no_marker += 1,
            Outcome::Failed(Stage::NoRingsFound) => rec.fail_no_rings += 1,
            Outcome::Failed(Stage::UndecodableRing) => rec.fail_undecodable += 1,
            Outcome::Failed(Stage::AmbiguousBands) => rec.fail_ambiguous += 1,
        }
    }
    let times: Vec<f64> = results.iter().map(|r| r.1).collect();
    rec.success_rate = rec.successes as f64 / rec.trials as f64;
    rec.mean_ms = times.iter().sum::<f64>() / times.len() as f64;
    rec.p95_ms = percentile_nearest_rank(&times, 95.0);
    rec
}

/// Worker count from the environment cap, defaulting to rayon's choice.
pub fn worker_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

/// Runs every (kind, level) cell of the sweep with [`worker_count`] workers.
pub fn run_eval(cfg: &SweepConfig) -> Result<Vec<EvalRecord>> {
    run_eval_with_workers(cfg, worker_count())
}

/// Results other than timing do not depend on `workers`.
pub fn run_eval_with_workers(cfg: &SweepConfig, workers: usize) -> Result<Vec<EvalRecord>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut records = Vec::new();
    for sweep in &cfg.sweeps {
        let mut dcfg = cfg.decode;
        if let Some(r) = sweep.rectify {
            dcfg.rectify = r;
        }
        for &level in &sweep.levels {
            let results: Vec<(Outcome, f64)> = pool.install(|| {
                (0..cfg.trials)
                    .into_par_iter()
                    .map(|t| run_trial(cfg, sweep.kind, level, &dcfg, t))
                    .collect::<Result<Vec<_>>>()
            })?;
            records.push(aggregate(sweep.kind, level, &results));
        }
    }
    Ok(records)
}

#[derive(Serialize)]
struct CsvRow {
    kind: &'static str,
    level: f64,
    trials: usize,
    successes: usize,
    success_rate: f64,
    mean_ms: f64,
    p95_ms: f64,
    fail_no_marker: usize,
    fail_no_rings: usize,
    fail_undecodable: usize,
    fail_ambiguous: usize,
}

/// Writes the CSV report. With `include_timing` false both timing columns are
/// written as 0 so the output is byte-stable.
pub fn write_csv<W: Write>(records: &[EvalRecord], out: W, include_timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(CsvRow {
            kind: r.kind.name(),
            level: r.level,
            trials: r.trials,
            successes: r.successes,
            success_rate: r.success_rate,
            mean_ms: if include_timing { r.mean_ms } else { 0.0 },
            p95_ms: if include_timing { r.p95_ms } else { 0.0 },
            fail_no_marker: r.fail_no_marker,
            fail_no_rings: r.fail_no_rings,
            fail_undecodable: r.fail_undecodable,
            fail_ambiguous: r.fail_ambiguous,
        })?;
    }
    if records.is_empty() {
        w.write_record(CSV_HEADER.split(','))?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(records: &[EvalRecord], include_timing: bool) -> String {
    let mut buf = Vec::new();
    write_csv(records, &mut buf, include_timing).expect("in-memory write");
    String::from_utf8(buf).expect("csv is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_matches_schema() {
        let rec = aggregate(DistortionKind::Noise, 0.0, &[(Outcome::Success, 1.0)]);
        let text = csv_string(&[rec], true);
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(csv_string(&[], true).trim_end(), CSV_HEADER);
    }

    #[test]
    fn nearest_rank() {
        let s: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(percentile_nearest_rank(&s, 95.0), 19.0);
        assert_eq!(percentile_nearest_rank(&s, 50.0), 10.0);
        assert_eq!(percentile_nearest_rank(&[3.0], 95.0), 3.0);
    }

    #[test]
    fn conservation() {
        let rs = [
            (Outcome::Success, 1.0),
            (Outcome::Misread, 1.0),
            (Outcome::Failed(Stage::NoMarkerFound), 1.0),
            (Outcome::Failed(Stage::AmbiguousBands), 1.0),
        ];
        let r = aggregate(DistortionKind::Blur, 1.0, &rs);
        assert_eq!(r.successes + r.failures(), r.trials);
        assert_eq!(r.success_rate, 0.25);
    }

    #[test]
    fn seeds_are_distinct() {
        assert_ne!(trial_seed(1, 0), trial_seed(1, 1));
        assert_ne!(
            distortion_seed(1, 0, DistortionKind::Noise, 5.0),
            distortion_seed(1, 0, DistortionKind::Noise, 10.0)
        );
    }
}
