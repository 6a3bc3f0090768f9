//! 8-bit pixel grids and file I/O.
//!
//! A [`Raster`] holds 1 (gray) or 3 (RGB) interleaved channels, row-major.
//! Binary rasters are single-channel with values in `{0, 1}`.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl Raster {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Raster> {
        if channels != 1 && channels != 3 {
            return Err(Error::UnsupportedFormat(format!("{channels} channels")));
        }
        if data.len() != width * height * channels {
            return Err(Error::UnsupportedFormat(format!(
                "{} bytes for {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Raster {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Raster {
        Raster {
            width,
            height,
            channels: 1,
            data: vec![value; width * height],
        }
    }

    pub fn from_gray(width: usize, height: usize, data: Vec<u8>) -> Raster {
        assert_eq!(data.len(), width * height, "gray raster size mismatch");
        Raster {
            width,
            height,
            channels: 1,
            data,
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Raster {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Raster::from_gray(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    /// Single-channel pixel access.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        debug_assert_eq!(self.channels, 1);
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        debug_assert_eq!(self.channels, 1);
        self.data[y * self.width + x] = v;
    }

    pub fn is_binary(&self) -> bool {
        self.channels == 1 && self.data.iter().all(|&v| v <= 1)
    }

    pub fn count_nonzero(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    /// `v -> 255 - v` on every sample.
    pub fn complement(&self) -> Raster {
        Raster {
            data: self.data.iter().map(|&v| 255 - v).collect(),
            ..self.clone()
        }
    }

    /// Rotates the image a quarter turn counter-clockwise.
    pub fn rotate90_ccw(&self) -> Raster {
        let (w, h, c) = (self.width, self.height, self.channels);
        let mut out = vec![0u8; self.data.len()];
        // Output is h wide, w tall; source (x, y) lands at (y, w - 1 - x).
        for y in 0..h {
            for x in 0..w {
                let (nx, ny) = (y, w - 1 - x);
                let src = (y * w + x) * c;
                let dst = (ny * h + nx) * c;
                out[dst..dst + c].copy_from_slice(&self.data[src..src + c]);
            }
        }
        Raster {
            width: h,
            height: w,
            channels: c,
            data: out,
        }
    }

    /// `k` counter-clockwise quarter turns (negative = clockwise).
    pub fn rotate_quarter_turns(&self, k: i32) -> Raster {
        let mut r = self.clone();
        for _ in 0..k.rem_euclid(4) {
            r = r.rotate90_ccw();
        }
        r
    }

    /// Crops `[x0, x0 + w) x [y0, y0 + h)`; panics if out of bounds.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Raster {
        assert!(
            x0 + w <= self.width && y0 + h <= self.height,
            "crop out of bounds"
        );
        let c = self.channels;
        let mut data = Vec::with_capacity(w * h * c);
        for y in y0..y0 + h {
            let start = (y * self.width + x0) * c;
            data.extend_from_slice(&self.data[start..start + w * c]);
        }
        Raster {
            width: w,
            height: h,
            channels: c,
            data,
        }
    }

    /// Pastes a gray raster into this one with its top-left at `(x0, y0)`.
    pub fn paste(&mut self, src: &Raster, x0: usize, y0: usize) {
        assert!(self.channels == 1 && src.channels == 1);
        assert!(x0 + src.width <= self.width && y0 + src.height <= self.height);
        for y in 0..src.height {
            let d = (y0 + y) * self.width + x0;
            self.data[d..d + src.width]
                .copy_from_slice(&src.data[y * src.width..(y + 1) * src.width]);
        }
    }

    /// Decodes PNG or PGM/PPM bytes. 16-bit samples are reduced to 8 bits
    /// by `round(v * 255 / 65535)`; alpha is dropped.
    pub fn decode_bytes(bytes: &[u8]) -> Result<Raster> {
        let format = image::guess_format(bytes).map_err(|e| Error::Format(e.to_string()))?;
        if !matches!(format, ImageFormat::Png | ImageFormat::Pnm) {
            return Err(Error::Format(format!("unsupported format {format:?}")));
        }
        let img = image::load_from_memory_with_format(bytes, format)
            .map_err(|e| Error::Format(e.to_string()))?;
        Ok(Raster::from_dynamic(img))
    }

    fn from_dynamic(img: DynamicImage) -> Raster {
        let (w, h) = (img.width() as usize, img.height() as usize);
        match img {
            DynamicImage::ImageLuma8(buf) => Raster::from_gray(w, h, buf.into_raw()),
            DynamicImage::ImageLuma16(buf) => {
                Raster::from_gray(w, h, buf.into_raw().into_iter().map(reduce16).collect())
            }
            DynamicImage::ImageLumaA16(buf) => Raster::from_gray(
                w,
                h,
                buf.into_raw()
                    .chunks_exact(2)
                    .map(|p| reduce16(p[0]))
                    .collect(),
            ),
            DynamicImage::ImageRgb16(buf) => Raster {
                width: w,
                height: h,
                channels: 3,
                data: buf.into_raw().into_iter().map(reduce16).collect(),
            },
            DynamicImage::ImageRgba16(buf) => Raster {
                width: w,
                height: h,
                channels: 3,
                data: buf
                    .into_raw()
                    .chunks_exact(4)
                    .flat_map(|p| [reduce16(p[0]), reduce16(p[1]), reduce16(p[2])])
                    .collect(),
            },
            DynamicImage::ImageLumaA8(_) => Raster::from_gray(w, h, img.to_luma8().into_raw()),
            other => Raster {
                width: w,
                height: h,
                channels: 3,
                data: other.to_rgb8().into_raw(),
            },
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Raster> {
        let bytes = std::fs::read(path)?;
        Raster::decode_bytes(&bytes)
    }

    /// Writes PNG, or binary PGM/PPM when the extension is `.pgm`/`.ppm`/`.pnm`.
    /// Binary rasters are stretched to `{0, 255}` for viewing.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        let format = match ext.as_deref() {
            Some("pgm") | Some("ppm") | Some("pnm") => ImageFormat::Pnm,
            _ => ImageFormat::Png,
        };
        let bytes = self.encode(format)?;
        std::fs::write(path, bytes)?;
        Ok(())
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        self.encode(ImageFormat::Png)
    }

    fn encode(&self, format: ImageFormat) -> Result<Vec<u8>> {
        let data = if self.channels == 1 && self.is_binary() {
            self.data.iter().map(|&v| v * 255).collect()
        } else {
            self.data.clone()
        };
        let (w, h) = (self.width as u32, self.height as u32);
        let img = if self.channels == 1 {
            DynamicImage::ImageLuma8(image::GrayImage::from_raw(w, h, data).expect("size checked"))
        } else {
            DynamicImage::ImageRgb8(image::RgbImage::from_raw(w, h, data).expect("size checked"))
        };
        let mut out = Cursor::new(Vec::new());
        img.write_to(&mut out, format)
            .map_err(|e| Error::Format(e.to_string()))?;
        Ok(out.into_inner())
    }
}

/// 16-bit to 8-bit sample reduction, rounding to nearest.
pub fn reduce16(v: u16) -> u8 {
    ((v as u32 * 255 + 32767) / 65535) as u8
}

/// Writes a 16-bit single-channel PNG.
pub fn save_gray16(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    data: Vec<u16>,
) -> Result<()> {
    let img = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::from_raw(
        width as u32,
        height as u32,
        data,
    )
    .ok_or_else(|| Error::Format("16-bit buffer size mismatch".into()))?;
    img.save_with_format(path, ImageFormat::Png)
        .map_err(|e| Error::Format(e.to_string()))
}
