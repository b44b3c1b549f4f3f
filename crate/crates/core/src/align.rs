//! Eye-based geometric normalization of faces onto a canonical frame.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::RasterImage;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Eye centers in image coordinates. The left eye is the one on the
/// viewer's left, so `left.x < right.x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyePair {
    left: Point,
    right: Point,
}

impl EyePair {
    pub fn new(left: Point, right: Point) -> Result<Self> {
        let coords = [left.x, left.y, right.x, right.y];
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidEyes("non-finite coordinate".into()));
        }
        if left.x >= right.x {
            return Err(Error::InvalidEyes(format!(
                "left eye x {} must be less than right eye x {}",
                left.x, right.x
            )));
        }
        Ok(EyePair { left, right })
    }

    pub fn left(&self) -> Point {
        self.left
    }

    pub fn right(&self) -> Point {
        self.right
    }

    pub fn inter_eye_distance(&self) -> f64 {
        self.left.distance(self.right)
    }
}

/// Output frame geometry for [`align_face`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentSpec {
    pub out_height: usize,
    pub out_width: usize,
    pub canonical_left_eye: Point,
    pub canonical_right_eye: Point,
}

impl Default for AlignmentSpec {
    /// 150x136 frame, eyes level on row 52 and 50 px apart.
    fn default() -> Self {
        AlignmentSpec {
            out_height: 150,
            out_width: 136,
            canonical_left_eye: Point::new(43.0, 52.0),
            canonical_right_eye: Point::new(93.0, 52.0),
        }
    }
}

impl AlignmentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.out_height == 0 || self.out_width == 0 {
            return Err(Error::InvalidAlignment(
                "output dimensions must be positive".into(),
            ));
        }
        let inside = |p: Point| {
            p.x.is_finite()
                && p.y.is_finite()
                && p.x > 0.0
                && p.y > 0.0
                && p.x < (self.out_width - 1) as f64
                && p.y < (self.out_height - 1) as f64
        };
        if !inside(self.canonical_left_eye) || !inside(self.canonical_right_eye) {
            return Err(Error::InvalidAlignment(
                "canonical eyes must lie strictly inside the output frame".into(),
            ));
        }
        // canonical eyes must themselves form a valid pair
        EyePair::new(self.canonical_left_eye, self.canonical_right_eye)
            .map_err(|e| Error::InvalidAlignment(e.to_string()))?;
        Ok(())
    }
}

/// Similarity transform `p' = s·R(θ)·p + t`, stored as the complex
/// multiplier `a + ib = s·e^{iθ}` and translation `(tx, ty)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityTransform {
    pub a: f64,
    pub b: f64,
    pub tx: f64,
    pub ty: f64,
}

impl SimilarityTransform {
    /// The unique similarity taking `from.0 -> to.0` and `from.1 -> to.1`.
    pub fn from_point_pairs(from: (Point, Point), to: (Point, Point)) -> Self {
        let (fx, fy) = (from.1.x - from.0.x, from.1.y - from.0.y);
        let (gx, gy) = (to.1.x - to.0.x, to.1.y - to.0.y);
        let norm = fx * fx + fy * fy;
        // (a + ib) = (gx + i gy) / (fx + i fy)
        let a = (gx * fx + gy * fy) / norm;
        let b = (gy * fx - gx * fy) / norm;
        let tx = to.0.x - (a * from.0.x - b * from.0.y);
        let ty = to.0.y - (b * from.0.x + a * from.0.y);
        SimilarityTransform { a, b, tx, ty }
    }

    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        Point::new(
            self.a * p.x - self.b * p.y + self.tx,
            self.b * p.x + self.a * p.y + self.ty,
        )
    }

    pub fn scale(&self) -> f64 {
        self.a.hypot(self.b)
    }
}

/// Transform taking input-image coordinates to the canonical frame.
pub fn alignment_transform(eyes: &EyePair, spec: &AlignmentSpec) -> SimilarityTransform {
    SimilarityTransform::from_point_pairs(
        (eyes.left, eyes.right),
        (spec.canonical_left_eye, spec.canonical_right_eye),
    )
}

/// Warps `img` so the eyes land on the canonical positions of `spec`.
///
/// Each output pixel is pulled back through the inverse similarity and
/// sampled bilinearly; samples outside the source replicate the border.
pub fn align_face(img: &RasterImage, eyes: &EyePair, spec: &AlignmentSpec) -> Result<RasterImage> {
    spec.validate()?;
    let dist = eyes.inter_eye_distance();
    if !(dist >= 1.0) {
        return Err(Error::DegenerateEyes(dist));
    }
    let inverse = SimilarityTransform::from_point_pairs(
        (spec.canonical_left_eye, spec.canonical_right_eye),
        (eyes.left, eyes.right),
    );
    RasterImage::from_fn(spec.out_height, spec.out_width, |y, x| {
        let src = inverse.apply(Point::new(x as f64, y as f64));
        sample_bilinear(img, src)
    })
}

fn sample_bilinear(img: &RasterImage, p: Point) -> u8 {
    let x0 = p.x.floor();
    let y0 = p.y.floor();
    let fx = p.x - x0;
    let fy = p.y - y0;
    let (xi, yi) = (x0 as isize, y0 as isize);
    let px = |dy: isize, dx: isize| f64::from(img.get_clamped(yi + dy, xi + dx));
    let top = px(0, 0) * (1.0 - fx) + px(0, 1) * fx;
    let bottom = px(1, 0) * (1.0 - fx) + px(1, 1) * fx;
    let v = top * (1.0 - fy) + bottom * fy;
    v.round().clamp(0.0, 255.0) as u8
}

/// Parses an eye list: `<image-id> <lx> <ly> <rx> <ry>` per line, `#` comments.
pub fn parse_eye_list(path: impl AsRef<Path>) -> Result<BTreeMap<String, EyePair>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
    parse_eye_text(&text)
}

pub fn parse_eye_text(text: &str) -> Result<BTreeMap<String, EyePair>> {
    let mut eyes = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        let mut coords = [0.0f64; 4];
        for (slot, field) in coords.iter_mut().zip(&fields[1..]) {
            *slot = field.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("bad coordinate {field:?}"),
            })?;
        }
        let pair = EyePair::new(
            Point::new(coords[0], coords[1]),
            Point::new(coords[2], coords[3]),
        )
        .map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let id = fields[0].to_string();
        if eyes.contains_key(&id) {
            return Err(Error::DuplicateId { id, line: line_no });
        }
        eyes.insert(id, pair);
    }
    Ok(eyes)
}
