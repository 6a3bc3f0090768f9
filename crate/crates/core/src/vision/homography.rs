use super::Quad;
use crate::error::{Error, Result};
use crate::raster::Raster;

/// Row-major 3x3 projective transform acting on `(x, y, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography(pub [[f64; 3]; 3]);

impl Homography {
    pub fn identity() -> Homography {
        Homography([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    /// Direct linear transform on exactly four correspondences `src[i] -> dst[i]`,
    /// with `h33` fixed to 1.
    pub fn from_correspondences(src: &[[f64; 2]; 4], dst: &[[f64; 2]; 4]) -> Result<Homography> {
        let mut a = [[0.0f64; 9]; 8];
        for i in 0..4 {
            let ([x, y], [u, v]) = (src[i], dst[i]);
            a[2 * i] = [x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, u];
            a[2 * i + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y, v];
        }
        let h = solve8(a).ok_or(Error::DegenerateQuad)?;
        let m = Homography([[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], 1.0]]);
        if !m.0.iter().flatten().all(|v| v.is_finite()) {
            return Err(Error::DegenerateQuad);
        }
        Ok(m)
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let m = &self.0;
        let w = m[2][0] * p[0] + m[2][1] * p[1] + m[2][2];
        [
            (m[0][0] * p[0] + m[0][1] * p[1] + m[0][2]) / w,
            (m[1][0] * p[0] + m[1][1] * p[1] + m[1][2]) / w,
        ]
    }

    pub fn inverse(&self) -> Option<Homography> {
        let m = &self.0;
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| {
            m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]
        };
        let adj = [
            [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
            [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
            [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
        ];
        let det = m[0][0] * adj[0][0] + m[0][1] * adj[1][0] + m[0][2] * adj[2][0];
        if det.abs() < 1e-12 {
            return None;
        }
        let mut out = [[0.0; 3]; 3];
        for (r, row) in adj.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                out[r][c] = v / det;
            }
        }
        Some(Homography(out))
    }

    pub fn then(&self, next: &Homography) -> Homography {
        let (a, b) = (&next.0, &self.0);
        let mut out = [[0.0; 3]; 3];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| a[r][k] * b[k][c]).sum();
            }
        }
        Homography(out)
    }
}

/// Gaussian elimination with partial pivoting on an 8x9 augmented matrix.
fn solve8(mut a: [[f64; 9]; 8]) -> Option<[f64; 8]> {
    let scale = a
        .iter()
        .flat_map(|r| r[..8].iter())
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(1.0);
    for col in 0..8 {
        let pivot = (col..8).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-10 * scale {
            return None;
        }
        a.swap(col, pivot);
        for row in 0..8 {
            if row != col {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for k in col..9 {
                        a[row][k] -= f * a[col][k];
                    }
                }
            }
        }
    }
    let mut x = [0.0; 8];
    for i in 0..8 {
        x[i] = a[i][8] / a[i][i];
    }
    Some(x)
}

/// Bilinear sample at a sub-pixel position (pixel centers at integers) of
/// channel `ch`; `None` when the position falls outside the pixel grid.
pub fn sample_bilinear(img: &Raster, x: f64, y: f64, ch: usize) -> Option<f64> {
    let (w, h, c) = (img.width(), img.height(), img.channels());
    if !(x > -0.5 && y > -0.5 && x < w as f64 - 0.5 && y < h as f64 - 0.5) {
        return None;
    }
    let xc = x.clamp(0.0, (w - 1) as f64);
    let yc = y.clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (xc.floor() as usize, yc.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = (xc - x0 as f64, yc - y0 as f64);
    let d = img.data();
    let at = |xx: usize, yy: usize| d[(yy * w + xx) * c + ch] as f64;
    let top = at(x0, y0) * (1.0 - fx) + at(x1, y0) * fx;
    let bottom = at(x0, y1) * (1.0 - fx) + at(x1, y1) * fx;
    Some(top * (1.0 - fy) + bottom * fy)
}

/// Resamples the quad onto an `out_size x out_size` square whose corner
/// pixels are the quad's corners.
pub fn rectify(img: &Raster, q: &Quad, out_size: usize) -> Result<Raster> {
    if out_size < 2 || !q.is_well_formed(0.0) {
        return Err(Error::DegenerateQuad);
    }
    let s = (out_size - 1) as f64;
    let square = [[0.0, 0.0], [s, 0.0], [s, s], [0.0, s]];
    // Estimate quad -> square, then invert for backward sampling.
    let forward = Homography::from_correspondences(&q.corners, &square)?;
    let back = forward.inverse().ok_or(Error::DegenerateQuad)?;
    let c = img.channels();
    let (w, h) = (img.width() as f64, img.height() as f64);
    let mut data = Vec::with_capacity(out_size * out_size * c);
    for v in 0..out_size {
        for u in 0..out_size {
            let [x, y] = back.apply([u as f64, v as f64]);
            let (x, y) = (x.clamp(0.0, w - 1.0), y.clamp(0.0, h - 1.0));
            for ch in 0..c {
                let val = sample_bilinear(img, x, y, ch).unwrap_or(0.0);
                data.push(val.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Raster::new(out_size, out_size, c, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_point_fit_hits_corners() {
        let src = [[10.0, 20.0], [200.0, 30.0], [190.0, 180.0], [15.0, 170.0]];
        let dst = [[0.0, 0.0], [99.0, 0.0], [99.0, 99.0], [0.0, 99.0]];
        let h = Homography::from_correspondences(&src, &dst).unwrap();
        for (s, d) in src.iter().zip(dst) {
            let p = h.apply(*s);
            assert!((p[0] - d[0]).abs() < 1e-9 && (p[1] - d[1]).abs() < 1e-9);
        }
        let inv = h.inverse().unwrap();
        let p = inv.apply([50.0, 50.0]);
        let q = h.apply(p);
        assert!((q[0] - 50.0).abs() < 1e-9 && (q[1] - 50.0).abs() < 1e-9);
    }

    #[test]
    fn collinear_is_degenerate() {
        let src = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]];
        let dst = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!(Homography::from_correspondences(&src, &dst).is_err());
    }

    #[test]
    fn identity_rectify_is_crop() {
        let img = Raster::from_fn(40, 30, |x, y| ((x * 7 + y * 13) % 256) as u8);
        let q = Quad::axis_aligned(5.0, 4.0, 20.0);
        let out = rectify(&img, &q, 20).unwrap();
        let crop = img.crop(5, 4, 20, 20);
        let max = out
            .data()
            .iter()
            .zip(crop.data())
            .map(|(a, b)| (*a as i32 - *b as i32).abs())
            .max()
            .unwrap();
        assert!(max <= 1);
    }

    #[test]
    fn bilinear_midpoint() {
        let img = Raster::from_gray(2, 1, vec![0, 100]);
        assert_eq!(sample_bilinear(&img, 0.5, 0.0, 0), Some(50.0));
        assert_eq!(sample_bilinear(&img, -0.6, 0.0, 0), None);
    }
}
