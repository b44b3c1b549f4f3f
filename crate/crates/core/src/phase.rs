//! Gray-coded 16-PSK phase quantization.
//!
//! Sector `s` is centered on angle `s·π/8`; its boundaries sit `π/16` either
//! side. Each sector is stored as its reflected-binary Gray code so that
//! neighbouring phases differ in one bit.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::gabor::{filter_bank, ComplexResponseMap, GaborParams};
use crate::image::RasterImage;

pub const SECTORS: u8 = 16;

const SECTOR_WIDTH: f64 = PI / 8.0;

/// Gray code of a phase sector.
pub fn gray_code(sector: u8) -> Result<u8> {
    if sector >= SECTORS {
        return Err(Error::OutOfRange {
            what: "phase sector",
            value: i64::from(sector),
        });
    }
    Ok(sector ^ (sector >> 1))
}

/// Hamming distance between two 4-bit codes.
pub fn code_distance(a: u8, b: u8) -> Result<u32> {
    for c in [a, b] {
        if c >= SECTORS {
            return Err(Error::OutOfRange {
                what: "phase code",
                value: i64::from(c),
            });
        }
    }
    Ok((a ^ b).count_ones())
}

/// `SQUARED_DISTANCE[(a << 4) | b] = popcount(a ^ b)²`.
pub(crate) const SQUARED_DISTANCE: [u32; 256] = {
    let mut table = [0u32; 256];
    let mut i: u32 = 0;
    while i < 256 {
        let d = ((i >> 4) ^ (i & 15)).count_ones();
        table[i as usize] = d * d;
        i += 1;
    }
    table
};

/// Phase sector for a complex value; `(0, 0)` maps to sector 0.
pub fn phase_sector(re: f64, im: f64) -> u8 {
    if re == 0.0 && im == 0.0 {
        return 0;
    }
    let theta = im.atan2(re);
    let shifted = (theta + SECTOR_WIDTH / 2.0).rem_euclid(TAU);
    ((shifted / SECTOR_WIDTH).floor() as u32 % u32::from(SECTORS)) as u8
}

/// Per-pixel Gray-coded phase for one or more filter orientations.
///
/// Codes are channel-planar: all of channel 0 row-major, then channel 1, ...
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PhaseCodeImage {
    height: usize,
    width: usize,
    channels: usize,
    codes: Vec<u8>,
}

impl PhaseCodeImage {
    pub fn new(height: usize, width: usize, channels: usize, codes: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::InvalidCodes(format!(
                "dimensions must be positive, got {channels}x{height}x{width}"
            )));
        }
        if codes.len() != channels * height * width {
            return Err(Error::InvalidCodes(format!(
                "{} codes for {channels}x{height}x{width}",
                codes.len()
            )));
        }
        if let Some(bad) = codes.iter().find(|&&c| c >= SECTORS) {
            return Err(Error::InvalidCodes(format!("code {bad} exceeds 4 bits")));
        }
        Ok(PhaseCodeImage {
            height,
            width,
            channels,
            codes,
        })
    }

    /// Stacks single-channel images into one multi-channel image.
    pub fn stack(planes: Vec<PhaseCodeImage>) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::InvalidCodes("no channels to stack".into()))?;
        let (h, w) = (first.height, first.width);
        let mut codes = Vec::with_capacity(planes.iter().map(|p| p.codes.len()).sum());
        let mut channels = 0;
        for p in &planes {
            if (p.height, p.width) != (h, w) {
                return Err(Error::DimensionMismatch(format!(
                    "{}x{} plane stacked onto {h}x{w}",
                    p.height, p.width
                )));
            }
            channels += p.channels;
            codes.extend_from_slice(&p.codes);
        }
        Ok(PhaseCodeImage {
            height: h,
            width: w,
            channels,
            codes,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    pub fn into_codes(self) -> Vec<u8> {
        self.codes
    }

    #[inline]
    pub fn get(&self, channel: usize, y: usize, x: usize) -> u8 {
        self.codes[(channel * self.height + y) * self.width + x]
    }

    /// Row `y` of `channel`, starting at column `x`.
    #[inline]
    pub(crate) fn row_from(&self, channel: usize, y: usize, x: usize) -> &[u8] {
        let start = (channel * self.height + y) * self.width + x;
        &self.codes[start..(channel * self.height + y + 1) * self.width]
    }
}

/// Quantizes a response map into a single-channel Gray-coded phase image.
pub fn demodulate(resp: &ComplexResponseMap) -> PhaseCodeImage {
    let codes = resp
        .re()
        .iter()
        .zip(resp.im())
        .map(|(&re, &im)| {
            let s = phase_sector(re, im);
            s ^ (s >> 1)
        })
        .collect();
    PhaseCodeImage {
        height: resp.height(),
        width: resp.width(),
        channels: 1,
        codes,
    }
}

/// Gabor filtering followed by demodulation, one channel per orientation.
pub fn encode_face(img: &RasterImage, params: &GaborParams) -> Result<PhaseCodeImage> {
    let planes = filter_bank(img, params)?
        .iter()
        .map(demodulate)
        .collect::<Vec<_>>();
    PhaseCodeImage::stack(planes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single(re: f64, im: f64) -> u8 {
        let map = ComplexResponseMap::new(1, 1, vec![re], vec![im], 0).unwrap();
        demodulate(&map).codes()[0]
    }

    #[test]
    fn gray_table() {
        assert_eq!(gray_code(0).unwrap(), 0b0000);
        assert_eq!(gray_code(1).unwrap(), 0b0001);
        assert_eq!(gray_code(2).unwrap(), 0b0011);
        assert_eq!(gray_code(8).unwrap(), 0b1100);
        assert_eq!(gray_code(15).unwrap(), 0b1000);
        assert_eq!(code_distance(gray_code(15).unwrap(), gray_code(0).unwrap()).unwrap(), 1);
        assert!(matches!(gray_code(16), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn gray_adjacency_is_one_bit() {
        for s in 0..16u8 {
            let a = gray_code(s).unwrap();
            let b = gray_code((s + 1) % 16).unwrap();
            assert_eq!((a ^ b).count_ones(), 1, "sector {s}");
        }
    }

    #[test]
    fn code_distance_examples() {
        assert_eq!(code_distance(0b0000, 0b0000).unwrap(), 0);
        assert_eq!(code_distance(0b0000, 0b0001).unwrap(), 1);
        assert_eq!(code_distance(0b0011, 0b1100).unwrap(), 4);
        assert!(code_distance(16, 0).is_err());
        for a in 0..16u8 {
            for b in 0..16u8 {
                let d = code_distance(a, b).unwrap();
                assert_eq!(SQUARED_DISTANCE[usize::from(a << 4 | b)], d * d);
            }
        }
    }

    #[test]
    fn metric_axioms_exhaustive() {
        for a in 0..16u8 {
            for b in 0..16u8 {
                let ab = code_distance(a, b).unwrap();
                assert_eq!(ab, code_distance(b, a).unwrap());
                assert_eq!(ab == 0, a == b);
                for c in 0..16u8 {
                    assert!(ab <= code_distance(a, c).unwrap() + code_distance(c, b).unwrap());
                }
            }
        }
    }

    #[test]
    fn gray_distance_bounded_by_cyclic_sector_distance() {
        for i in 0..16u8 {
            for j in 0..16u8 {
                let diff = i.abs_diff(j);
                let cyclic = u32::from(diff.min(16 - diff));
                let d = code_distance(gray_code(i).unwrap(), gray_code(j).unwrap()).unwrap();
                assert!(d <= cyclic, "({i},{j})");
            }
        }
    }

    #[test]
    fn demodulation_examples() {
        assert_eq!(single(1.0, 0.0), 0b0000);
        assert_eq!(single(1.0, 1.0), 0b0011);
        assert_eq!(single(-1.0, 0.0), 0b1100);
        assert_eq!(single(-1.0, -0.0), 0b1100);
        assert_eq!(single(0.0, 0.0), 0);
        assert_eq!(single(-0.0, -0.0), 0);
    }

    #[test]
    fn constellation_centers_in_order() {
        for s in 0..16u8 {
            let theta = f64::from(s) * PI / 8.0;
            assert_eq!(phase_sector(theta.cos(), theta.sin()), s);
            assert_eq!(single(theta.cos(), theta.sin()), gray_code(s).unwrap());
        }
    }

    #[test]
    fn sector_boundaries() {
        let just = |a: f64| phase_sector(a.cos(), a.sin());
        let eps = 1e-9;
        assert_eq!(just(PI / 16.0 - eps), 0);
        assert_eq!(just(PI / 16.0 + eps), 1);
        assert_eq!(just(-PI / 16.0 + eps), 0);
        assert_eq!(just(-PI / 16.0 - eps), 15);
    }

    #[test]
    fn encode_shapes_and_constant_input() {
        let img = RasterImage::from_fn(150, 136, |y, x| ((y * 7 + x * 3) % 200) as u8).unwrap();
        let codes = encode_face(&img, &GaborParams::default()).unwrap();
        assert_eq!(
            (codes.channels(), codes.height(), codes.width()),
            (2, 150, 136)
        );

        let flat = encode_face(&RasterImage::filled(20, 20, 128).unwrap(), &GaborParams::default()).unwrap();
        for ch in 0..2 {
            let first = flat.get(ch, 0, 0);
            assert!((0..20).all(|y| (0..20).all(|x| flat.get(ch, y, x) == first)));
        }
    }

    #[test]
    fn integer_gain_changes_codes_only_near_boundaries() {
        let img = RasterImage::from_fn(40, 40, |y, x| (((y * 13) ^ (x * 29)) % 60) as u8 + 20).unwrap();
        let doubled = RasterImage::new(40, 40, img.pixels().iter().map(|v| v * 2).collect()).unwrap();
        let a = encode_face(&img, &GaborParams::default()).unwrap();
        let b = encode_face(&doubled, &GaborParams::default()).unwrap();
        // a gain of 2 is exact in binary floating point
        assert_eq!(a, b);

        let tripled = RasterImage::new(40, 40, img.pixels().iter().map(|v| v * 2 + v).collect()).unwrap();
        let c = encode_face(&tripled, &GaborParams::default()).unwrap();
        let maps = filter_bank(&img, &GaborParams::default()).unwrap();
        for (ch, map) in maps.iter().enumerate() {
            for y in 0..40 {
                for x in 0..40 {
                    if a.get(ch, y, x) != c.get(ch, y, x) {
                        let z = map.at(y, x);
                        let t = (z.im.atan2(z.re) + PI / 16.0).rem_euclid(PI / 8.0);
                        assert!(t.min(PI / 8.0 - t) < 1e-9, "({ch},{y},{x})");
                    }
                }
            }
        }
    }

    #[test]
    fn code_image_invariants() {
        assert!(PhaseCodeImage::new(2, 2, 1, vec![0, 1, 2]).is_err());
        assert!(PhaseCodeImage::new(1, 1, 1, vec![16]).is_err());
        assert!(PhaseCodeImage::new(1, 2, 2, vec![0, 1, 2, 3]).is_ok());
    }

    proptest! {
        #[test]
        fn demodulation_gain_invariant(angle in -PI..PI, mag in 1e-3f64..1e3, gain in 1e-3f64..1e3) {
            let t = (angle + PI / 16.0).rem_euclid(PI / 8.0);
            prop_assume!(t.min(PI / 8.0 - t) > 1e-6);
            let (re, im) = (mag * angle.cos(), mag * angle.sin());
            prop_assert_eq!(phase_sector(re, im), phase_sector(re * gain, im * gain));
        }
    }
}
