//! 8-bit grayscale rasters and the PGM (P2/P5) codec.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    height: usize,
    width: usize,
    pixels: Vec<u8>,
}

impl RasterImage {
    pub fn new(height: usize, width: usize, pixels: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {height}x{width}"
            )));
        }
        if pixels.len() != height * width {
            return Err(Error::InvalidImage(format!(
                "{} pixels for a {height}x{width} image",
                pixels.len()
            )));
        }
        Ok(RasterImage {
            height,
            width,
            pixels,
        })
    }

    /// Image of a single repeated intensity.
    pub fn filled(height: usize, width: usize, value: u8) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(y, x));
            }
        }
        Self::new(height, width, pixels)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Pixel lookup with coordinates clamped to the frame (border replicate).
    #[inline]
    pub fn get_clamped(&self, y: isize, x: isize) -> u8 {
        let y = y.clamp(0, self.height as isize - 1) as usize;
        let x = x.clamp(0, self.width as isize - 1) as usize;
        self.pixels[y * self.width + x]
    }
}

/// Reads a PGM file (ASCII `P2` or binary `P5`, maxval 255).
pub fn load_grayscale(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io_at(path, e))?;
    decode_pgm(&bytes)
}

/// Writes `img` as a binary `P5` PGM.
pub fn save_pgm(img: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| Error::io_at(path, e))?;
    file.write_all(&encode_pgm(img))?;
    Ok(())
}

pub fn encode_pgm(img: &RasterImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

pub fn decode_pgm(bytes: &[u8]) -> Result<RasterImage> {
    let mut cursor = HeaderCursor { bytes, pos: 0 };
    let magic = cursor
        .token()
        .ok_or_else(|| Error::MalformedHeader("empty file".into()))?;
    let binary = match magic {
        b"P2" => false,
        b"P5" => true,
        b"P3" | b"P6" => {
            return Err(Error::UnsupportedDepth(
                "color PPM input is not supported".into(),
            ))
        }
        b"P1" | b"P4" => {
            return Err(Error::UnsupportedDepth(
                "bitmap PBM input is not supported".into(),
            ))
        }
        other => {
            return Err(Error::MalformedHeader(format!(
                "bad magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let width = cursor.dimension("width")?;
    let height = cursor.dimension("height")?;
    let maxval = cursor.number("maxval")?;
    if maxval != 255 {
        return Err(Error::UnsupportedDepth(format!(
            "maxval {maxval}, only 255 is supported"
        )));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| Error::MalformedHeader("dimensions overflow".into()))?;

    let pixels = if binary {
        // exactly one whitespace byte separates maxval from the raster
        let start = cursor.pos + 1;
        let payload = bytes.get(start..start + count).ok_or_else(|| {
            Error::MalformedHeader(format!("raster shorter than {count} bytes"))
        })?;
        payload.to_vec()
    } else {
        let mut pixels = Vec::with_capacity(count);
        for _ in 0..count {
            let v = cursor.number("pixel")?;
            if v > 255 {
                return Err(Error::MalformedHeader(format!(
                    "sample {v} exceeds maxval"
                )));
            }
            pixels.push(v as u8);
        }
        pixels
    };
    RasterImage::new(height, width, pixels)
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn token(&mut self) -> Option<&'a [u8]> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.bytes.get(self.pos) == Some(&b'#') {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self
            .token()
            .ok_or_else(|| Error::MalformedHeader(format!("missing {what}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| {
                Error::MalformedHeader(format!(
                    "bad {what} {:?}",
                    String::from_utf8_lossy(tok)
                ))
            })
    }

    fn dimension(&mut self, what: &str) -> Result<usize> {
        match self.number(what)? {
            0 => Err(Error::MalformedHeader(format!("{what} must be positive"))),
            n => Ok(n),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_ascii_pgm() {
        let img = decode_pgm(b"P2\n# tiny\n2 2\n255\n0 10\n20 255\n").unwrap();
        assert_eq!(img.height(), 2);
        assert_eq!(img.width(), 2);
        assert_eq!(img.pixels(), &[0, 10, 20, 255]);
    }

    #[test]
    fn binary_matches_ascii() {
        let ascii = decode_pgm(b"P2 2 2 255 0 10 20 255").unwrap();
        let mut p5 = b"P5\n2 2\n255\n".to_vec();
        p5.extend_from_slice(&[0, 10, 20, 255]);
        assert_eq!(decode_pgm(&p5).unwrap(), ascii);
    }

    #[test]
    fn binary_payload_may_start_with_whitespace_bytes() {
        let mut p5 = b"P5 3 1 255\n".to_vec();
        p5.extend_from_slice(&[b' ', b'\n', 7]);
        assert_eq!(decode_pgm(&p5).unwrap().pixels(), &[32, 10, 7]);
    }

    #[test]
    fn rejects_color_and_bad_headers() {
        assert!(matches!(
            decode_pgm(b"P6 1 1 255 abc"),
            Err(Error::UnsupportedDepth(_))
        ));
        assert!(matches!(
            decode_pgm(b"XX 1 1 255 0"),
            Err(Error::MalformedHeader(_))
        ));
        assert!(matches!(
            decode_pgm(b"P2 0 1 255"),
            Err(Error::MalformedHeader(_))
        ));
        assert!(matches!(
            decode_pgm(b"P2 1 1 65535 0"),
            Err(Error::UnsupportedDepth(_))
        ));
        assert!(matches!(
            decode_pgm(b"P5 4 4 255\n\x01\x02"),
            Err(Error::MalformedHeader(_))
        ));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            load_grayscale("/nonexistent/face.pgm"),
            Err(Error::FileNotFound(_))
        ));
    }

    #[test]
    fn save_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.pgm");
        let img = RasterImage::from_fn(3, 5, |y, x| (y * 40 + x * 7) as u8).unwrap();
        save_pgm(&img, &path).unwrap();
        assert_eq!(load_grayscale(&path).unwrap(), img);
    }

    #[test]
    fn raster_invariants() {
        assert!(RasterImage::new(0, 3, vec![]).is_err());
        assert!(RasterImage::new(2, 2, vec![0; 3]).is_err());
    }
}
