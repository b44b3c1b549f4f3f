//! Complex Gabor kernels and spatial filtering.
//!
//! The kernel for orientation `u` and scale `v` is
//!
//! ```text
//! ψ(z) = (‖k‖²/σ²) · exp(−‖k‖²‖z‖² / 2σ²) · [exp(i k·z) − exp(−σ²/2)]
//! k    = (k_max / f^v) · (cos(uπ/8), sin(uπ/8))
//! ```
//!
//! sampled on a `kernel_size`² window whose center sits at
//! `((size−1)/2, (size−1)/2)`, so even sizes use half-pixel offsets.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::image::RasterImage;

/// Number of orientation steps over the half-circle.
pub const ORIENTATION_STEPS: u8 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct GaborParams {
    /// Maximum radial frequency, radians per pixel.
    pub k_max: f64,
    /// Spacing factor between scales.
    pub f: f64,
    /// Relative width of the Gaussian envelope.
    pub sigma: f64,
    /// Scale index.
    pub v: u8,
    /// Orientation indices, each in `0..8`.
    pub orientations: Vec<u8>,
    /// Window side in pixels.
    pub kernel_size: usize,
}

impl Default for GaborParams {
    fn default() -> Self {
        GaborParams {
            k_max: FRAC_PI_2,
            f: SQRT_2,
            sigma: 2.0 * PI,
            v: 0,
            orientations: vec![2, 6],
            kernel_size: 6,
        }
    }
}

impl GaborParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidGaborParams(msg));
        if !(self.k_max > 0.0 && self.k_max.is_finite()) {
            return bad(format!("k_max must be positive, got {}", self.k_max));
        }
        if !(self.f > 1.0 && self.f.is_finite()) {
            return bad(format!("f must exceed 1, got {}", self.f));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if self.kernel_size == 0 {
            return bad("kernel_size must be at least 1".into());
        }
        if self.orientations.is_empty() {
            return bad("orientations must not be empty".into());
        }
        for (i, &u) in self.orientations.iter().enumerate() {
            if u >= ORIENTATION_STEPS {
                return bad(format!("orientation {u} outside 0..8"));
            }
            if self.orientations[..i].contains(&u) {
                return bad(format!("duplicate orientation {u}"));
            }
        }
        Ok(())
    }

    /// Magnitude of the wave vector at this scale, `k_max / f^v`.
    pub fn wave_number(&self) -> f64 {
        self.k_max / self.f.powi(i32::from(self.v))
    }
}

/// Orientation angle `uπ/8`.
pub fn orientation_angle(u: u8) -> f64 {
    f64::from(u) * PI / f64::from(ORIENTATION_STEPS)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaborKernel {
    size: usize,
    taps: Vec<Complex64>,
    u: u8,
    v: u8,
}

impl GaborKernel {
    pub fn size(&self) -> usize {
        self.size
    }

    /// Row-major taps; row index is `y`, column index is `x`.
    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    pub fn tap(&self, row: usize, col: usize) -> Complex64 {
        self.taps[row * self.size + col]
    }

    pub fn u(&self) -> u8 {
        self.u
    }

    pub fn v(&self) -> u8 {
        self.v
    }

    /// Distance from the window origin to its (possibly half-pixel) center.
    pub fn center(&self) -> f64 {
        (self.size as f64 - 1.0) / 2.0
    }

    /// Pixel offset of tap index 0 relative to the output pixel.
    fn anchor(&self) -> isize {
        (self.size as isize - 1) / 2
    }

    /// `row,col,re,im` CSV with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,col,re,im\n");
        for row in 0..self.size {
            for col in 0..self.size {
                let t = self.tap(row, col);
                writeln!(out, "{row},{col},{:e},{:e}", t.re, t.im).unwrap();
            }
        }
        out
    }
}

pub fn make_kernel(params: &GaborParams, u: u8) -> Result<GaborKernel> {
    params.validate()?;
    if u >= ORIENTATION_STEPS {
        return Err(Error::OutOfRange {
            what: "orientation index u",
            value: i64::from(u),
        });
    }
    let k = params.wave_number();
    let phi = orientation_angle(u);
    let (kx, ky) = (k * phi.cos(), k * phi.sin());
    let k2 = k * k;
    let s2 = params.sigma * params.sigma;
    let dc = (-s2 / 2.0).exp();
    let center = (params.kernel_size as f64 - 1.0) / 2.0;

    let size = params.kernel_size;
    let mut taps = Vec::with_capacity(size * size);
    for row in 0..size {
        let zy = row as f64 - center;
        for col in 0..size {
            let zx = col as f64 - center;
            let envelope = (k2 / s2) * (-k2 * (zx * zx + zy * zy) / (2.0 * s2)).exp();
            let phase = kx * zx + ky * zy;
            taps.push(Complex64::new(
                envelope * (phase.cos() - dc),
                envelope * phase.sin(),
            ));
        }
    }
    Ok(GaborKernel {
        size,
        taps,
        u,
        v: params.v,
    })
}

/// Complex filter output, one value per input pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexResponseMap {
    height: usize,
    width: usize,
    re: Vec<f64>,
    im: Vec<f64>,
    u: u8,
}

impl ComplexResponseMap {
    pub fn new(height: usize, width: usize, re: Vec<f64>, im: Vec<f64>, u: u8) -> Result<Self> {
        let n = height * width;
        if re.len() != n || im.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "response planes of {}/{} values for {height}x{width}",
                re.len(),
                im.len()
            )));
        }
        if re.iter().chain(&im).any(|v| !v.is_finite()) {
            return Err(Error::DimensionMismatch("non-finite response".into()));
        }
        Ok(ComplexResponseMap {
            height,
            width,
            re,
            im,
            u,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn re(&self) -> &[f64] {
        &self.re
    }

    pub fn im(&self) -> &[f64] {
        &self.im
    }

    pub fn u(&self) -> u8 {
        self.u
    }

    pub fn at(&self, y: usize, x: usize) -> Complex64 {
        let i = y * self.width + x;
        Complex64::new(self.re[i], self.im[i])
    }

    /// Same map with both planes multiplied by `gain`.
    pub fn scaled(&self, gain: f64) -> Self {
        ComplexResponseMap {
            re: self.re.iter().map(|v| v * gain).collect(),
            im: self.im.iter().map(|v| v * gain).collect(),
            ..self.clone()
        }
    }
}

/// Slides `kernel` over `img` without flipping it (correlation).
///
/// Output pixel `(y, x)` accumulates `img[y + r − a][x + c − a] · tap[r][c]`
/// with `a = (size−1)/2`; reads past the frame replicate the border.
pub fn convolve(img: &RasterImage, kernel: &GaborKernel) -> ComplexResponseMap {
    let (h, w) = (img.height(), img.width());
    let size = kernel.size;
    let anchor = kernel.anchor();
    let pad_lo = anchor as usize;
    let pad_hi = size - 1 - pad_lo;
    let pw = w + size - 1;
    let ph = h + size - 1;

    let mut padded = Vec::with_capacity(ph * pw);
    for py in 0..ph {
        let y = py as isize - pad_lo as isize;
        for px in 0..pw {
            let x = px as isize - pad_lo as isize;
            padded.push(f64::from(img.get_clamped(y, x)));
        }
    }
    debug_assert_eq!(ph, h + pad_lo + pad_hi);

    let mut re = vec![0.0; h * w];
    let mut im = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let (mut acc_re, mut acc_im) = (0.0, 0.0);
            for r in 0..size {
                let src = &padded[(y + r) * pw + x..(y + r) * pw + x + size];
                let taps = &kernel.taps[r * size..(r + 1) * size];
                for (p, t) in src.iter().zip(taps) {
                    acc_re += p * t.re;
                    acc_im += p * t.im;
                }
            }
            re[y * w + x] = acc_re;
            im[y * w + x] = acc_im;
        }
    }
    ComplexResponseMap {
        height: h,
        width: w,
        re,
        im,
        u: kernel.u,
    }
}

/// One response map per configured orientation, in listed order.
pub fn filter_bank(img: &RasterImage, params: &GaborParams) -> Result<Vec<ComplexResponseMap>> {
    params
        .orientations
        .iter()
        .map(|&u| make_kernel(params, u).map(|k| convolve(img, &k)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct evaluation of the kernel formula with complex arithmetic,
    /// treating the wave vector and position as complex numbers.
    fn psi(params: &GaborParams, u: u8, zx: f64, zy: f64) -> Complex64 {
        let kv = params.k_max / params.f.powf(f64::from(params.v));
        let k = Complex64::from_polar(kv, f64::from(u) * PI / 8.0);
        let z = Complex64::new(zx, zy);
        let kn2 = k.norm_sqr();
        let s2 = params.sigma.powi(2);
        let dot = (k.conj() * z).re;
        (kn2 / s2) * (-kn2 * z.norm_sqr() / (2.0 * s2)).exp()
            * (Complex64::new(0.0, dot).exp() - (-s2 / 2.0).exp())
    }

    #[test]
    fn defaults_match_documented_setup() {
        let p = GaborParams::default();
        assert_eq!(p.wave_number(), PI / 2.0);
        assert_eq!(orientation_angle(2), PI / 4.0);
        assert_eq!(p.orientations, vec![2, 6]);
        assert_eq!(p.kernel_size, 6);
    }

    #[test]
    fn center_value_odd_kernel() {
        let p = GaborParams {
            kernel_size: 7,
            ..Default::default()
        };
        let k = make_kernel(&p, 2).unwrap();
        let c = k.tap(3, 3);
        let expected = (1.0 / 16.0) * (1.0 - (-2.0 * PI * PI).exp());
        assert!((c.re - expected).abs() < 1e-15);
        assert_eq!(c.im, 0.0);
        assert!((c.re - 0.0625).abs() < 1e-8);
    }

    #[test]
    fn kernel_matches_direct_formula() {
        let p = GaborParams::default();
        for &u in &[0u8, 2, 5, 6, 7] {
            let k = make_kernel(&p, u).unwrap();
            for row in 0..6 {
                for col in 0..6 {
                    let want = psi(&p, u, col as f64 - 2.5, row as f64 - 2.5);
                    let got = k.tap(row, col);
                    assert!((got - want).norm() < 1e-12, "u={u} ({row},{col})");
                }
            }
        }
    }

    #[test]
    fn rejects_bad_orientation() {
        assert!(matches!(
            make_kernel(&GaborParams::default(), 8),
            Err(Error::OutOfRange { .. })
        ));
        let dup = GaborParams {
            orientations: vec![2, 2],
            ..Default::default()
        };
        assert!(dup.validate().is_err());
        let flat = GaborParams {
            f: 1.0,
            ..Default::default()
        };
        assert!(flat.validate().is_err());
    }

    #[test]
    fn constant_image_gives_constant_response() {
        let p = GaborParams::default();
        let k = make_kernel(&p, 2).unwrap();
        let sum: Complex64 = k.taps().iter().sum();
        let img = RasterImage::filled(12, 10, 128).unwrap();
        let out = convolve(&img, &k);
        let first = out.at(0, 0);
        for y in 0..12 {
            for x in 0..10 {
                assert_eq!(out.at(y, x), first);
            }
        }
        assert!((first - sum * 128.0).norm() < 1e-9);
    }

    #[test]
    fn dirac_reproduces_taps() {
        let p = GaborParams {
            kernel_size: 3,
            ..Default::default()
        };
        let k = make_kernel(&p, 6).unwrap();
        // 7x7 image, bright pixel at (3,3); anchor a = 1.
        let img = RasterImage::from_fn(7, 7, |y, x| if (y, x) == (3, 3) { 1 } else { 0 }).unwrap();
        let out = convolve(&img, &k);
        // out(y,x) = Σ img(y+r-1, x+c-1)·tap(r,c) = tap(3-y+1, 3-x+1)
        for y in 0..7usize {
            for x in 0..7usize {
                let r = 4isize - y as isize;
                let c = 4isize - x as isize;
                let want = if (0..3).contains(&r) && (0..3).contains(&c) {
                    k.tap(r as usize, c as usize)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                assert_eq!(out.at(y, x), want, "({y},{x})");
            }
        }
    }

    #[test]
    fn bank_is_per_orientation_convolution() {
        let img = RasterImage::from_fn(9, 11, |y, x| ((y * 37 + x * 11) % 251) as u8).unwrap();
        let p = GaborParams::default();
        let bank = filter_bank(&img, &p).unwrap();
        assert_eq!(bank.len(), 2);
        assert_eq!(bank[0].u(), 2);
        assert_eq!(bank[1].u(), 6);
        for (map, &u) in bank.iter().zip(&p.orientations) {
            assert_eq!(map, &convolve(&img, &make_kernel(&p, u).unwrap()));
        }
        let single = GaborParams {
            orientations: vec![0],
            ..Default::default()
        };
        assert_eq!(filter_bank(&img, &single).unwrap().len(), 1);
    }

    #[test]
    fn csv_dump_has_one_row_per_tap() {
        let k = make_kernel(&GaborParams::default(), 2).unwrap();
        let csv = k.to_csv();
        assert_eq!(csv.lines().count(), 37);
        let row: Vec<&str> = csv.lines().nth(8).unwrap().split(',').collect();
        assert_eq!(row[0], "1");
        assert_eq!(row[1], "1");
        let re: f64 = row[2].parse().unwrap();
        assert_eq!(re, k.tap(1, 1).re);
    }

    fn small_image() -> impl Strategy<Value = (usize, usize, Vec<u8>)> {
        (6usize..14, 6usize..14).prop_flat_map(|(h, w)| {
            (Just(h), Just(w), proptest::collection::vec(any::<u8>(), h * w))
        })
    }

    proptest! {
        #[test]
        fn linearity((h, w, a) in small_image(), seed in any::<u64>(), ga in 0u8..3, gb in 0u8..3) {
            let b: Vec<u8> = a.iter().enumerate()
                .map(|(i, v)| v.wrapping_mul(31).wrapping_add((seed >> (i % 56)) as u8) / 5)
                .collect();
            let a: Vec<u8> = a.iter().map(|v| v / 5).collect();
            let sum: Vec<u8> = a.iter().zip(&b)
                .map(|(x, y)| ga * x + gb * y)
                .collect();
            let k = make_kernel(&GaborParams::default(), 2).unwrap();
            let ra = convolve(&RasterImage::new(h, w, a).unwrap(), &k);
            let rb = convolve(&RasterImage::new(h, w, b).unwrap(), &k);
            let rs = convolve(&RasterImage::new(h, w, sum).unwrap(), &k);
            for i in 0..h * w {
                let want_re = f64::from(ga) * ra.re()[i] + f64::from(gb) * rb.re()[i];
                let want_im = f64::from(ga) * ra.im()[i] + f64::from(gb) * rb.im()[i];
                let scale = 1.0 + want_re.abs().max(want_im.abs());
                prop_assert!((rs.re()[i] - want_re).abs() <= 1e-9 * scale);
                prop_assert!((rs.im()[i] - want_im).abs() <= 1e-9 * scale);
            }
        }

        #[test]
        fn interior_shift_equivariance((h, w, px) in small_image(), dy in 0usize..3, dx in 0usize..3) {
            let img = RasterImage::new(h, w, px).unwrap();
            // shifted(y, x) = img(y - dy, x - dx)
            let shifted = RasterImage::from_fn(h, w, |y, x| img.get_clamped(y as isize - dy as isize, x as isize - dx as isize)).unwrap();
            let k = make_kernel(&GaborParams { kernel_size: 3, ..Default::default() }, 6).unwrap();
            let a = convolve(&img, &k);
            let b = convolve(&shifted, &k);
            // kernel support of (y, x) in the original spans y-1..=y+1
            for y in 1..h.saturating_sub(1 + dy) {
                for x in 1..w.saturating_sub(1 + dx) {
                    prop_assert_eq!(a.at(y, x), b.at(y + dy, x + dx));
                }
            }
        }

        #[test]
        fn phase_is_gain_invariant((h, w, px) in small_image(), gain in 0.01f64..100.0) {
            let k = make_kernel(&GaborParams::default(), 6).unwrap();
            let r = convolve(&RasterImage::new(h, w, px).unwrap(), &k);
            let s = r.scaled(gain);
            for i in 0..h * w {
                let a = r.im()[i].atan2(r.re()[i]);
                let b = s.im()[i].atan2(s.re()[i]);
                prop_assert!((a - b).abs() <= 4.0 * f64::EPSILON * a.abs().max(1.0));
            }
        }

        #[test]
        fn phase_is_bit_identical_under_binary_gain((h, w, px) in small_image(), exp in -8i32..8) {
            let k = make_kernel(&GaborParams::default(), 2).unwrap();
            let r = convolve(&RasterImage::new(h, w, px).unwrap(), &k);
            let s = r.scaled(2f64.powi(exp));
            for i in 0..h * w {
                prop_assert_eq!(
                    r.im()[i].atan2(r.re()[i]).to_bits(),
                    s.im()[i].atan2(s.re()[i]).to_bits()
                );
            }
        }
    }
}
