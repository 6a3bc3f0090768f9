use num_bigint::BigInt;
use num_rational::BigRational;
use oilu_core::codec::OiluNumber;
use oilu_core::render::{layout_rings, render_marker, MarkerStyle};
use oilu_core::vision::{
    detect_quad, label_components, otsu_from_histogram, rectify, remove_small_components,
    sample_bilinear, Homography,
};
use oilu_core::{decode, DecodeConfig, Raster};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Between-class variance `w0 w1 (mu0 - mu1)^2` in exact rationals for every
/// threshold with two nonempty classes (dark class `v <= t`); the first
/// maximum wins.
fn otsu_oracle(hist: &[u64; 256]) -> Option<u8> {
    let total: u64 = hist.iter().sum();
    let mut best: Option<(u8, BigRational)> = None;
    for t in 0..256usize {
        let n0: u64 = hist[..=t].iter().sum();
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let s0: u64 = hist[..=t]
            .iter()
            .enumerate()
            .map(|(v, &c)| v as u64 * c)
            .sum();
        let s1: u64 = hist[t + 1..]
            .iter()
            .enumerate()
            .map(|(v, &c)| (v + t + 1) as u64 * c)
            .sum();
        let r = |a: u64, b: u64| BigRational::new(BigInt::from(a), BigInt::from(b));
        let diff = r(s0, n0) - r(s1, n1);
        let var = r(n0, total) * r(n1, total) * &diff * &diff;
        if best.as_ref().is_none_or(|(_, b)| var > *b) {
            best = Some((t as u8, var));
        }
    }
    best.map(|b| b.0)
}

#[test]
fn otsu_matches_exact_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..50 {
        let mut hist = [0u64; 256];
        match case % 3 {
            0 => hist.iter_mut().for_each(|c| *c = rng.random_range(0..50)),
            1 => {
                for _ in 0..rng.random_range(2..6) {
                    hist[rng.random_range(0..256)] += rng.random_range(1..2_000_000);
                }
            }
            _ => {
                let (a, b) = (rng.random_range(20..120), rng.random_range(130..240));
                for (v, c) in hist.iter_mut().enumerate() {
                    let da = (v as f64 - a as f64) / 15.0;
                    let db = (v as f64 - b as f64) / 25.0;
                    *c = (5000.0 * (-da * da).exp() + 3000.0 * (-db * db).exp()) as u64;
                }
            }
        }
        assert_eq!(
            otsu_from_histogram(&hist).ok(),
            otsu_oracle(&hist),
            "case {case}"
        );
    }
}

fn flood_fill_sizes(bin: &Raster) -> Vec<usize> {
    let (w, h) = (bin.width() as i64, bin.height() as i64);
    let mut seen = vec![false; bin.len()];
    let mut sizes = Vec::new();
    for start in 0..bin.len() {
        if seen[start] || bin.data()[start] == 0 {
            continue;
        }
        let mut stack = vec![start];
        seen[start] = true;
        let mut n = 0;
        while let Some(i) = stack.pop() {
            n += 1;
            let (x, y) = ((i as i64) % w, (i as i64) / w);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let j = (ny * w + nx) as usize;
                    if !seen[j] && bin.data()[j] != 0 {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        sizes.push(n);
    }
    sizes.sort_unstable();
    sizes
}

#[test]
fn small_blob_removed_large_kept() {
    let mut bin = Raster::filled(30, 30, 0);
    for (x, y) in [(1, 1), (2, 1), (1, 2), (2, 2)] {
        bin.set(x, y, 1);
    }
    for y in 10..15 {
        for x in 10..18 {
            bin.set(x, y, 1);
        }
    }
    assert_eq!(flood_fill_sizes(&bin), [4, 40]);
    let out = remove_small_components(&bin, 10);
    assert_eq!(flood_fill_sizes(&out), [40]);
    assert_eq!(out.get(11, 11), 1);
}

fn random_binary() -> impl Strategy<Value = Raster> {
    (4usize..24, 4usize..24, any::<u64>(), 0.1f64..0.6).prop_map(|(w, h, seed, p)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Raster::from_fn(w, h, |_, _| u8::from(rng.random_bool(p)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn labeling_matches_flood_fill(bin in random_binary()) {
        let lab = label_components(&bin);
        let mut areas = lab.areas.clone();
        areas.sort_unstable();
        prop_assert_eq!(areas, flood_fill_sizes(&bin));
        prop_assert!(lab.labels.iter().all(|&l| l as usize <= lab.count()));
    }

    #[test]
    fn cleanup_idempotent_and_shrinking(bin in random_binary(), min_area in 0usize..12) {
        let once = remove_small_components(&bin, min_area);
        prop_assert_eq!(remove_small_components(&once, min_area), once.clone());
        prop_assert!(once.count_nonzero() <= bin.count_nonzero());
        prop_assert!(flood_fill_sizes(&once).iter().all(|&s| s >= min_area));
        prop_assert_eq!(remove_small_components(&bin, 0), bin);
    }
}

fn canonical() -> (Raster, [[f64; 2]; 4]) {
    let n = OiluNumber::parse("4670").unwrap();
    let style = MarkerStyle::default();
    let geom = layout_rings(&n, &style).unwrap();
    let img = render_marker(&n, &style).unwrap();
    (img, geom.border_outer_corners)
}

fn binary_of(img: &Raster) -> Raster {
    Raster::from_fn(img.width(), img.height(), |x, y| {
        u8::from(img.get(x, y) < 128)
    })
}

fn assert_corners_near(got: &[[f64; 2]; 4], want: &[[f64; 2]; 4], tol: f64) {
    for w in want {
        let d = got
            .iter()
            .map(|g| (g[0] - w[0]).hypot(g[1] - w[1]))
            .fold(f64::INFINITY, f64::min);
        assert!(d <= tol, "corner {w:?} off by {d:.3}; got {got:?}");
    }
}

#[test]
fn canonical_corners_within_one_pixel() {
    let (img, truth) = canonical();
    let q = detect_quad(&binary_of(&img)).unwrap();
    assert_corners_near(&q.corners, &truth, 1.0);
    // Ordered clockwise from the corner nearest the origin.
    assert_eq!(
        q.corners[0],
        q.corners
            .iter()
            .copied()
            .min_by(|a, b| (a[0] + a[1]).total_cmp(&(b[0] + b[1])))
            .unwrap()
    );
    assert!(q.signed_area() > 0.0);
}

fn warp(img: &Raster, h: &Homography, w: usize, hgt: usize) -> Raster {
    let inv = h.inverse().unwrap();
    Raster::from_fn(w, hgt, |x, y| {
        let [sx, sy] = inv.apply([x as f64, y as f64]);
        sample_bilinear(img, sx, sy, 0)
            .map(|v| v.round() as u8)
            .unwrap_or(255)
    })
}

fn sample_homography() -> Homography {
    let src = [[0.0, 0.0], [511.0, 0.0], [511.0, 511.0], [0.0, 511.0]];
    let dst = [[40.0, 60.0], [600.0, 20.0], [570.0, 590.0], [70.0, 560.0]];
    Homography::from_correspondences(&src, &dst).unwrap()
}

#[test]
fn warped_corners_within_tolerance() {
    let (img, truth) = canonical();
    let h = sample_homography();
    let warped = warp(&img, &h, 640, 640);
    let q = detect_quad(&binary_of(&warped)).unwrap();
    assert_corners_near(&q.corners, &truth.map(|c| h.apply(c)), 1.5);
}

#[test]
fn rectified_warp_decodes() {
    let (img, _) = canonical();
    let warped = warp(&img, &sample_homography(), 640, 640);
    let cfg = DecodeConfig {
        rectify: true,
        ..DecodeConfig::default()
    };
    assert_eq!(decode(&warped, &cfg).unwrap().value.to_string(), "4670");
}

#[test]
fn rectify_maps_quad_onto_output_corners() {
    let (img, _) = canonical();
    let warped = warp(&img, &sample_homography(), 640, 640);
    let q = detect_quad(&binary_of(&warped)).unwrap();
    let out = rectify(&warped, &q, 256).unwrap();
    // The border's outer corner pixels are stroke pixels in the output.
    for (x, y) in [(1, 1), (254, 1), (254, 254), (1, 254)] {
        assert!(out.get(x, y) < 128, "({x},{y}) = {}", out.get(x, y));
    }
}

#[test]
fn quad_invariant_under_rotation_and_polarity() {
    let (img, _) = canonical();
    let base = detect_quad(&binary_of(&img)).unwrap();
    let mut cur = img.clone();
    let mut corners = base.corners;
    for _ in 0..3 {
        let w = cur.width() as f64;
        cur = cur.rotate90_ccw();
        corners = corners.map(|[x, y]| [y, w - 1.0 - x]);
        let q = detect_quad(&binary_of(&cur)).unwrap();
        assert_corners_near(&q.corners, &corners, 1.0);
    }
    let inv = img.complement();
    let bin = oilu_core::vision::binarize(
        &inv,
        oilu_core::vision::otsu_threshold(&inv).unwrap(),
        oilu_core::vision::PolarityHint::Auto,
    );
    let q = detect_quad(&bin).unwrap();
    assert_corners_near(&q.corners, &base.corners, 1.0);
}

#[test]
fn blank_has_no_marker() {
    assert!(detect_quad(&Raster::filled(100, 100, 0)).is_err());
}
