//! Procedural test faces and the photometric/geometric perturbations used
//! to exercise the matcher without licensed datasets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image::RasterImage;

/// Multi-octave value noise over an elliptical face-like shading, with two
/// dark eye blobs. Intensities stay within roughly `[30, 200]` so moderate
/// gains do not clip.
pub fn textured_face(seed: u64, height: usize, width: usize) -> RasterImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let octaves: [(f64, usize); 4] = [(0.45, 3), (0.3, 5), (0.15, 9), (0.1, 17)];
    let layers: Vec<(f64, usize, usize, Vec<f64>)> = octaves
        .iter()
        .map(|&(amp, cell)| {
            let gh = height / cell + 2;
            let gw = width / cell + 2;
            let grid = (0..gh * gw).map(|_| rng.random_range(-1.0..1.0)).collect();
            (amp, cell, gw, grid)
        })
        .collect();

    let (cy, cx) = (height as f64 / 2.0, width as f64 / 2.0);
    let eye_y = height as f64 * 0.35;
    let eyes = [width as f64 * 0.32, width as f64 * 0.68];

    RasterImage::from_fn(height, width, |y, x| {
        let mut noise = 0.0;
        for (amp, cell, gw, grid) in &layers {
            let fy = y as f64 / *cell as f64;
            let fx = x as f64 / *cell as f64;
            let (iy, ix) = (fy.floor() as usize, fx.floor() as usize);
            let (ty, tx) = (smooth(fy.fract()), smooth(fx.fract()));
            let g = |r: usize, c: usize| grid[r * gw + c];
            let top = g(iy, ix) * (1.0 - tx) + g(iy, ix + 1) * tx;
            let bottom = g(iy + 1, ix) * (1.0 - tx) + g(iy + 1, ix + 1) * tx;
            noise += amp * (top * (1.0 - ty) + bottom * ty);
        }
        let ry = (y as f64 - cy) / (height as f64 * 0.5);
        let rx = (x as f64 - cx) / (width as f64 * 0.45);
        let shade = (1.0 - (ry * ry + rx * rx)).max(0.0);
        let eye = eyes
            .iter()
            .map(|ex| {
                let d2 = ((y as f64 - eye_y).powi(2) + (x as f64 - ex).powi(2)) / 36.0;
                (-d2).exp()
            })
            .sum::<f64>();
        let v = 110.0 + 55.0 * noise + 30.0 * shade - 50.0 * eye;
        v.round().clamp(30.0, 200.0) as u8
    })
    .expect("positive dimensions")
}

fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Content moved down by `dy` and right by `dx`; uncovered pixels replicate
/// the border.
pub fn translate(img: &RasterImage, dy: isize, dx: isize) -> RasterImage {
    RasterImage::from_fn(img.height(), img.width(), |y, x| {
        img.get_clamped(y as isize - dy, x as isize - dx)
    })
    .expect("same dimensions as a valid image")
}

/// Multiplies intensities by `gain`, rounding and clipping to 8 bits.
pub fn apply_gain(img: &RasterImage, gain: f64) -> RasterImage {
    let pixels = img
        .pixels()
        .iter()
        .map(|&v| (f64::from(v) * gain).round().clamp(0.0, 255.0) as u8)
        .collect();
    RasterImage::new(img.height(), img.width(), pixels).expect("same dimensions as a valid image")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_distinct() {
        let a = textured_face(1, 50, 40);
        assert_eq!(a, textured_face(1, 50, 40));
        assert_ne!(a, textured_face(2, 50, 40));
        assert!(a.pixels().iter().all(|&v| (30..=200).contains(&v)));
    }

    #[test]
    fn translation_moves_content() {
        let a = textured_face(3, 30, 30);
        let t = translate(&a, 2, -3);
        assert_eq!(t.get(12, 10), a.get(10, 13));
        assert_eq!(translate(&a, 0, 0), a);
    }

    #[test]
    fn gain_rounds_and_clips() {
        let img = RasterImage::new(1, 3, vec![10, 100, 250]).unwrap();
        assert_eq!(apply_gain(&img, 1.25).pixels(), &[13, 125, 255]);
    }
}
