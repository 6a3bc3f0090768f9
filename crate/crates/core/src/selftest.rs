//! Embedded oracle suite run by `oilu selftest`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::codec::{
    facet_values, pattern_to_digit_with, rotate_digit, Digit, OiluNumber, SidePattern,
    DIGIT_PATTERNS,
};
use crate::decoder::{decode, DecodeConfig};
use crate::harness::random_code;
use crate::levelset::edt_squared;
use crate::render::{render_marker, MarkerStyle, Polarity};
use crate::vision::otsu_from_histogram;

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub passed: bool,
    pub detail: String,
    pub ms: f64,
}

/// Fault to inject into a suite, for exercising the failure path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Swap two entries of the digit table seen by the codec suite.
    Codec,
}

type Check = std::result::Result<String, String>;

fn timed(suite: &'static str, f: impl FnOnce() -> Check) -> SuiteReport {
    let t0 = Instant::now();
    let r = f();
    let ms = t0.elapsed().as_secs_f64() * 1e3;
    let (passed, detail) = match r {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    SuiteReport {
        suite,
        passed,
        detail,
        ms,
    }
}

/// Decoding each table entry recovers its digit, and a quarter turn of any
/// pattern decodes to the rotated digit.
pub fn codec_suite(table: &[SidePattern; 10]) -> Check {
    for d in Digit::all() {
        let p = table[d.value() as usize];
        let back = pattern_to_digit_with(table, p).map_err(|e| format!("digit {d}: {e}"))?;
        if back != d {
            return Err(format!("digit {d} reads back as {back}"));
        }
        for k in 1..4 {
            let rotated = pattern_to_digit_with(table, p.rotate_ccw(k))
                .map_err(|e| format!("digit {d} turned {k}: {e}"))?;
            if rotated != rotate_digit(d, k) {
                return Err(format!(
                    "digit {d} turned {k} reads {rotated}, expected {}",
                    rotate_digit(d, k)
                ));
            }
        }
        if rotate_digit(d, 4) != d {
            return Err(format!("four turns move digit {d}"));
        }
    }
    let valid = (0u8..16)
        .filter(|&m| SidePattern::from_mask(m).is_valid())
        .count();
    if valid != 13 {
        return Err(format!("{valid} valid side subsets, expected 13"));
    }
    let n = OiluNumber::parse("4670").expect("literal");
    let mut set = facet_values(&n).as_set();
    set.sort();
    if set != ["2450", "4670", "6890", "8230"] {
        return Err(format!("facets of 4670: {set:?}"));
    }
    Ok("digit table, rotation law, facets of 4670".into())
}

pub fn edt_suite(masks: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for m in 0..masks {
        let (w, h) = (rng.random_range(1..=16), rng.random_range(1..=16));
        let density = rng.random_range(0.02..0.5);
        let seeds: Vec<bool> = (0..w * h).map(|_| rng.random_bool(density)).collect();
        let got = edt_squared(&seeds, w, h);
        let pts: Vec<(i64, i64)> = (0..w * h)
            .filter(|&i| seeds[i])
            .map(|i| ((i % w) as i64, (i / w) as i64))
            .collect();
        for i in 0..w * h {
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            let want = pts
                .iter()
                .map(|&(sx, sy)| ((sx - x).pow(2) + (sy - y).pow(2)) as u64)
                .min()
                .unwrap_or(crate::levelset::UNREACHABLE);
            if got[i] != want {
                return Err(format!("mask {m} pixel ({x},{y}): {} != {want}", got[i]));
            }
        }
    }
    Ok(format!("{masks} masks match brute force"))
}

/// Exhaustive Otsu reference with exact integer comparison; counts are kept
/// small enough for u128.
fn otsu_reference(hist: &[u64; 256]) -> Option<u8> {
    let n: u128 = hist.iter().map(|&c| c as u128).sum();
    let s: u128 = hist
        .iter()
        .enumerate()
        .map(|(v, &c)| v as u128 * c as u128)
        .sum();
    let (mut n0, mut s0) = (0u128, 0u128);
    let mut best: Option<(u8, u128, u128)> = None;
    for t in 0..255usize {
        n0 += hist[t] as u128;
        s0 += t as u128 * hist[t] as u128;
        let n1 = n - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let s1 = s - s0;
        let d = (s0 * n1).abs_diff(s1 * n0);
        let (num, den) = (d * d, n0 * n1);
        let better = match best {
            None => true,
            Some((_, bn, bd)) => num * bd > bn * den,
        };
        if better {
            best = Some((t as u8, num, den));
        }
    }
    best.map(|b| b.0)
}

pub fn otsu_suite(histograms: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..histograms {
        let mut hist = [0u64; 256];
        let bins = rng.random_range(2..40);
        for _ in 0..bins {
            hist[rng.random_range(0..256)] += rng.random_range(1..1000);
        }
        let want = otsu_reference(&hist);
        let got = otsu_from_histogram(&hist).ok();
        if got != want {
            return Err(format!("histogram {k}: {got:?} != {want:?}"));
        }
    }
    Ok(format!("{histograms} histograms match exhaustive search"))
}

pub fn roundtrip_suite(codes: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = DecodeConfig::default();
    for i in 0..codes {
        let len = rng.random_range(1..=4);
        let code = random_code(&mut rng, len);
        let polarity = if i % 2 == 0 {
            Polarity::DarkOnLight
        } else {
            Polarity::LightOnDark
        };
        let style = MarkerStyle::sized_for(len).with_polarity(polarity);
        let img = render_marker(&code, &style).map_err(|e| format!("{code}: {e}"))?;
        match decode(&img, &cfg) {
            Ok(r) if r.value == code => {}
            Ok(r) => return Err(format!("{code} decoded as {}", r.value)),
            Err(f) => return Err(format!("{code}: {f}")),
        }
    }
    Ok(format!("{codes} codes round-trip"))
}

pub fn run(fault: Option<Fault>) -> Vec<SuiteReport> {
    let mut table = DIGIT_PATTERNS;
    if fault == Some(Fault::Codec) {
        table.swap(2, 4);
    }
    vec![
        timed("codec", || codec_suite(&table)),
        timed("edt", || edt_suite(40, 11)),
        timed("otsu", || otsu_suite(50, 13)),
        timed("roundtrip", || roundtrip_suite(12, 17)),
    ]
}
