use oilu_core::codec::{rotate_pattern_ccw, OiluNumber, Side};
use oilu_core::levelset::{
    assign_ring_labels, distance_map, edt_squared, estimate_ring_bands, occupancy, UNREACHABLE,
};
use oilu_core::render::{expected_side_pixel_count, layout_rings, render_marker, MarkerStyle};
use oilu_core::vision::{detect_quad, Quad};
use oilu_core::{decode, DecodeConfig, Error, Raster};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn brute_edt(seeds: &[bool], w: usize, h: usize) -> Vec<u64> {
    let pts: Vec<(i64, i64)> = (0..w * h)
        .filter(|&i| seeds[i])
        .map(|i| ((i % w) as i64, (i / w) as i64))
        .collect();
    (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            pts.iter()
                .map(|&(a, b)| ((a - x) * (a - x) + (b - y) * (b - y)) as u64)
                .min()
                .unwrap_or(UNREACHABLE)
        })
        .collect()
}

#[test]
fn edt_exact_on_random_masks() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for m in 0..100 {
        let p = [0.005, 0.02, 0.1, 0.4][m % 4];
        let seeds: Vec<bool> = (0..32 * 32).map(|_| rng.random_bool(p)).collect();
        assert_eq!(
            edt_squared(&seeds, 32, 32),
            brute_edt(&seeds, 32, 32),
            "mask {m}"
        );
    }
}

/// Stroke mask and detected quad of a clean render.
fn clean(code: &str) -> (Raster, Quad) {
    let img = render_marker(&OiluNumber::parse(code).unwrap(), &MarkerStyle::default()).unwrap();
    let bin = Raster::from_fn(512, 512, |x, y| u8::from(img.get(x, y) == 0));
    let q = detect_quad(&bin).unwrap();
    (bin, q)
}

#[test]
fn depth_is_lipschitz() {
    let (_, q) = clean("4670");
    let dm = distance_map(&q, 512, 512).unwrap();
    let inside: Vec<(usize, usize)> = (0..512 * 512)
        .map(|i| (i % 512, i / 512))
        .filter(|&(x, y)| dm.depth(x, y).is_some())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let a = inside[rng.random_range(0..inside.len())];
        let b = inside[rng.random_range(0..inside.len())];
        let dd = (dm.depth(a.0, a.1).unwrap() - dm.depth(b.0, b.1).unwrap()).abs();
        let dp = (a.0 as f64 - b.0 as f64).hypot(a.1 as f64 - b.1 as f64);
        assert!(dd <= dp + 1e-6, "{a:?} {b:?}: {dd} > {dp}");
    }
    assert!((dm.max_depth - 223.5).abs() <= 1.0);
}

#[test]
fn band_centers_match_layout() {
    let (bin, q) = clean("4670");
    let dm = distance_map(&q, 512, 512).unwrap();
    let bands = estimate_ring_bands(&dm, &bin, None).unwrap();
    assert_eq!(bands.centers.len(), 4);
    for (c, want) in bands.centers.iter().zip([48.0, 96.0, 144.0, 192.0]) {
        assert!((c - want).abs() <= 2.0, "{:?}", bands.centers);
    }
    assert!(bands.border_center <= 6.0);
    assert!((bands.pitch_estimate_px - 48.0).abs() <= 1.0);
}

#[test]
fn single_digit_has_one_band() {
    for code in ["0", "1", "5"] {
        let (bin, q) = clean(code);
        let dm = distance_map(&q, 512, 512).unwrap();
        assert_eq!(
            estimate_ring_bands(&dm, &bin, None).unwrap().centers.len(),
            1,
            "{code}"
        );
    }
}

#[test]
fn empty_interior_has_no_rings() {
    let (bin, q) = clean("8");
    // Keep only the border.
    let border_only = Raster::from_fn(512, 512, |x, y| {
        let edge = x.min(y).min(511 - x).min(511 - y);
        if edge < 44 {
            bin.get(x, y)
        } else {
            0
        }
    });
    let dm = distance_map(&q, 512, 512).unwrap();
    assert!(matches!(
        estimate_ring_bands(&dm, &border_only, None),
        Err(Error::NoRingsFound(_))
    ));
}

/// Ground-truth code ring (1-based) of a pixel from the layout, 0 for border
/// or background.
fn truth_ring(x: usize, y: usize, half_widths: &[i64], stroke: i64) -> u8 {
    let up = (511 - 2 * y as i64).abs();
    let right = (2 * x as i64 - 511).abs();
    let r = up.max(right);
    for (i, &h) in half_widths.iter().enumerate() {
        if 2 * h - stroke < r && r <= 2 * h + stroke {
            return i as u8 + 1;
        }
    }
    0
}

#[test]
fn labels_match_geometry_and_are_conserved() {
    let code = OiluNumber::parse("4670").unwrap();
    let geom = layout_rings(&code, &MarkerStyle::default()).unwrap();
    let (bin, q) = clean("4670");
    let dm = distance_map(&q, 512, 512).unwrap();
    let bands = estimate_ring_bands(&dm, &bin, None).unwrap();
    let labels = assign_ring_labels(&dm, &bands, &bin);
    let (mut total, mut right) = (0usize, 0usize);
    for y in 0..512 {
        for x in 0..512 {
            if bin.get(x, y) == 0 {
                continue;
            }
            total += 1;
            if labels.labels[y * 512 + x] == truth_ring(x, y, &geom.ring_half_widths_px, 12) {
                right += 1;
            }
        }
    }
    assert!(right as f64 >= 0.99 * total as f64, "{right}/{total}");

    let table = occupancy(&labels, &q);
    assert_eq!(table.total() as usize, labels.labeled_count());
}

#[test]
fn ring_index_monotone_along_inward_rays() {
    let (bin, q) = clean("0000");
    let dm = distance_map(&q, 512, 512).unwrap();
    let bands = estimate_ring_bands(&dm, &bin, None).unwrap();
    let labels = assign_ring_labels(&dm, &bands, &bin);
    let c = 255.5;
    for k in 0..32 {
        let a = k as f64 * std::f64::consts::TAU / 32.0;
        let mut last = 0u8;
        for s in 0..400 {
            let t = s as f64 * 0.6;
            let (x, y) = ((c + t * a.cos()) as usize, (c + t * a.sin()) as usize);
            if dm.depth(x, y).is_none() {
                break;
            }
            // Walking outward the ring index must not increase.
            let l = labels.labels[y * 512 + x];
            if l != 0 {
                if last != 0 {
                    assert!(l <= last, "ray {k} step {s}: {l} after {last}");
                }
                last = l;
            }
        }
    }
}

#[test]
fn occupancy_against_renderer_counts() {
    // Outermost ring carries 0, next carries 1.
    let code = OiluNumber::parse("0100").unwrap();
    let geom = layout_rings(&code, &MarkerStyle::default()).unwrap();
    let (bin, q) = clean("0100");
    let dm = distance_map(&q, 512, 512).unwrap();
    let bands = estimate_ring_bands(&dm, &bin, None).unwrap();
    let table = occupancy(&assign_ring_labels(&dm, &bands, &bin), &q);
    for side in Side::ALL {
        let want = expected_side_pixel_count(&geom, 1, side).unwrap() as f64;
        let got = table.counts[0][side.index()] as f64;
        assert!(
            (got - want).abs() <= 0.15 * want,
            "{side:?}: {got} vs {want}"
        );
    }
    let digit_one = table.counts[1];
    let dominant = digit_one[Side::Bottom.index()];
    for side in [Side::Top, Side::Right, Side::Left] {
        assert!(
            digit_one[side.index()] as f64 <= 0.05 * dominant as f64,
            "{digit_one:?}"
        );
    }
}

#[test]
fn quarter_turn_permutes_patterns() {
    let cfg = DecodeConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let digits: String = (0..4)
            .map(|_| char::from(b'0' + rng.random_range(0..10u8)))
            .collect();
        let img = render_marker(
            &OiluNumber::parse(&digits).unwrap(),
            &MarkerStyle::default(),
        )
        .unwrap();
        let base = decode(&img, &cfg).unwrap();
        let turned = decode(&img.rotate90_ccw(), &cfg).unwrap();
        for (a, b) in base.per_ring.iter().zip(&turned.per_ring) {
            assert_eq!(rotate_pattern_ccw(a.pattern, 1), b.pattern, "{digits}");
        }
    }
}
