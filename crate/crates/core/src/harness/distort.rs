//! Synthetic image degradations. Every distortion is the identity at level 0
//! and deterministic given its inputs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::raster::Raster;
use crate::vision::{sample_bilinear, Homography};

/// Adds i.i.d. zero-mean Gaussian noise with standard deviation `sigma`
/// (8-bit intensity units), clamped to `[0, 255]`.
pub fn apply_noise(img: &Raster, sigma: f64, seed: u64) -> Raster {
    if sigma <= 0.0 {
        return img.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    let mut out = img.clone();
    for v in out.data_mut() {
        let n: f64 = normal.sample(&mut rng);
        *v = (*v as f64 + n).round().clamp(0.0, 255.0) as u8;
    }
    out
}

/// Normalized Gaussian taps for radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as i64;
    let taps: Vec<f64> = (-r..=r)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Separable Gaussian blur on a float plane with clamp-to-edge borders.
pub fn gaussian_blur_f32(data: &[f32], width: usize, height: usize, sigma: f64) -> Vec<f32> {
    if sigma <= 0.0 {
        return data.to_vec();
    }
    let k: Vec<f32> = gaussian_kernel(sigma)
        .into_iter()
        .map(|v| v as f32)
        .collect();
    let r = (k.len() / 2) as i64;
    let clamp = |v: i64, hi: usize| v.clamp(0, hi as i64 - 1) as usize;
    let mut tmp = vec![0f32; data.len()];
    for y in 0..height {
        let row = &data[y * width..(y + 1) * width];
        for x in 0..width {
            let mut acc = 0f32;
            for (j, &w) in k.iter().enumerate() {
                acc += w * row[clamp(x as i64 + j as i64 - r, width)];
            }
            tmp[y * width + x] = acc;
        }
    }
    let mut out = vec![0f32; data.len()];
    for y in 0..height {
        for (j, &w) in k.iter().enumerate() {
            let sy = clamp(y as i64 + j as i64 - r, height);
            let src = &tmp[sy * width..(sy + 1) * width];
            let dst = &mut out[y * width..(y + 1) * width];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += w * s;
            }
        }
    }
    out
}

pub fn apply_blur(img: &Raster, sigma: f64) -> Raster {
    if sigma <= 0.0 {
        return img.clone();
    }
    let plane: Vec<f32> = img.data().iter().map(|&v| v as f32).collect();
    let out = gaussian_blur_f32(&plane, img.width(), img.height(), sigma);
    Raster::from_gray(
        img.width(),
        img.height(),
        out.iter()
            .map(|v| v.round().clamp(0.0, 255.0) as u8)
            .collect(),
    )
}

/// Most common value along the image border, used to fill pixels that map
/// outside the source.
pub fn border_fill(img: &Raster) -> u8 {
    let (w, h) = (img.width(), img.height());
    let mut hist = [0usize; 256];
    for x in 0..w {
        hist[img.get(x, 0) as usize] += 1;
        hist[img.get(x, h - 1) as usize] += 1;
    }
    for y in 0..h {
        hist[img.get(0, y) as usize] += 1;
        hist[img.get(w - 1, y) as usize] += 1;
    }
    (0..256)
        .max_by_key(|&v| (hist[v], std::cmp::Reverse(v)))
        .unwrap_or(0) as u8
}

fn resample(img: &Raster, fill: u8, map: impl Fn(f64, f64) -> Option<[f64; 2]>) -> Raster {
    Raster::from_fn(img.width(), img.height(), |x, y| {
        map(x as f64, y as f64)
            .and_then(|[sx, sy]| sample_bilinear(img, sx, sy, 0))
            .map(|v| v.round().clamp(0.0, 255.0) as u8)
            .unwrap_or(fill)
    })
}

/// Source position sampled for output pixel `p` under the single-coefficient
/// radial model. The normalized radius is 1 at the image corners.
pub fn radial_source(width: usize, height: usize, k1: f64, p: [f64; 2]) -> [f64; 2] {
    let (cx, cy) = ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0);
    let rmax = cx.hypot(cy).max(1.0);
    let (dx, dy) = (p[0] - cx, p[1] - cy);
    let r2 = (dx * dx + dy * dy) / (rmax * rmax);
    let s = 1.0 + k1 * r2;
    [cx + dx * s, cy + dy * s]
}

pub fn apply_radial(img: &Raster, k1: f64) -> Raster {
    if k1 == 0.0 {
        return img.clone();
    }
    let (w, h) = (img.width(), img.height());
    resample(img, border_fill(img), |x, y| {
        Some(radial_source(w, h, k1, [x, y]))
    })
}

/// Source -> output homography for a plane tilted `theta_deg` about the
/// horizontal axis through the image center, viewed by a pinhole camera with
/// focal length 1.2 x image width placed so that `theta = 0` is the identity.
pub fn tilt_homography(width: usize, height: usize, theta_deg: f64) -> Homography {
    let (cx, cy) = ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0);
    let f = 1.2 * width as f64;
    let (s, c) = theta_deg.to_radians().sin_cos();
    let center = Homography([[1.0, 0.0, -cx], [0.0, 1.0, -cy], [0.0, 0.0, 1.0]]);
    let project = Homography([[f, 0.0, 0.0], [0.0, f * c, 0.0], [0.0, s, f]]);
    let uncenter = Homography([[1.0, 0.0, cx], [0.0, 1.0, cy], [0.0, 0.0, 1.0]]);
    center.then(&project).then(&uncenter)
}

pub fn apply_tilt(img: &Raster, theta_deg: f64) -> Raster {
    if theta_deg == 0.0 {
        return img.clone();
    }
    let back = tilt_homography(img.width(), img.height(), theta_deg)
        .inverse()
        .expect("tilt below 90 degrees is invertible");
    let m = back.0;
    resample(img, border_fill(img), |x, y| {
        // Points behind the camera have no source.
        let w = m[2][0] * x + m[2][1] * y + m[2][2];
        (w > 0.0).then(|| back.apply([x, y]))
    })
}

/// `out = 128 + c (in - 128)`, rounded.
pub fn apply_contrast(img: &Raster, c: f64) -> Raster {
    let mut out = img.clone();
    for v in out.data_mut() {
        *v = (128.0 + c * (*v as f64 - 128.0)).round().clamp(0.0, 255.0) as u8;
    }
    out
}
