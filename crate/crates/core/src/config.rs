//! Flat `key = value` configuration covering filtering, matching and
//! alignment parameters.
//!
//! ```text
//! # defaults
//! kernel_size = 6
//! orientations = 2, 6
//! canonical_left_eye = 43, 52
//! ```
//!
//! Absent keys keep their defaults; unknown keys are rejected.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::align::{AlignmentSpec, Point};
use crate::error::{Error, Result};
use crate::gabor::GaborParams;
use crate::matcher::MatchParams;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub gabor: GaborParams,
    pub matching: MatchParams,
    pub alignment: AlignmentSpec,
}

pub const KEYS: &[&str] = &[
    "k_max",
    "f",
    "sigma",
    "v",
    "orientations",
    "kernel_size",
    "block_h",
    "block_w",
    "search_r",
    "search_c",
    "fit_count",
    "epsilon",
    "out_height",
    "out_width",
    "canonical_left_eye",
    "canonical_right_eye",
];

impl Config {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        let mut seen: Vec<&str> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config {
                line: line_no,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, found {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let key = *KEYS
                .iter()
                .find(|k| **k == key)
                .ok_or_else(|| err(format!("unknown key {key:?}")))?;
            if seen.contains(&key) {
                return Err(err(format!("duplicate key {key:?}")));
            }
            seen.push(key);
            cfg.set(key, value).map_err(err)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse()
                .map_err(|_| format!("bad value {v:?} for {key}"))
        }
        fn point(key: &str, v: &str) -> std::result::Result<Point, String> {
            let parts: Vec<&str> = v.split(',').map(str::trim).collect();
            match parts.as_slice() {
                [x, y] => Ok(Point::new(num(key, x)?, num(key, y)?)),
                _ => Err(format!("{key} expects `x, y`, found {v:?}")),
            }
        }
        match key {
            "k_max" => self.gabor.k_max = num(key, value)?,
            "f" => self.gabor.f = num(key, value)?,
            "sigma" => self.gabor.sigma = num(key, value)?,
            "v" => self.gabor.v = num(key, value)?,
            "orientations" => {
                self.gabor.orientations = value
                    .split(',')
                    .map(|s| num(key, s.trim()))
                    .collect::<std::result::Result<_, _>>()?
            }
            "kernel_size" => self.gabor.kernel_size = num(key, value)?,
            "block_h" => self.matching.block_h = num(key, value)?,
            "block_w" => self.matching.block_w = num(key, value)?,
            "search_r" => self.matching.search_r = num(key, value)?,
            "search_c" => self.matching.search_c = num(key, value)?,
            "fit_count" => self.matching.fit_count = num(key, value)?,
            "epsilon" => self.matching.epsilon = num(key, value)?,
            "out_height" => self.alignment.out_height = num(key, value)?,
            "out_width" => self.alignment.out_width = num(key, value)?,
            "canonical_left_eye" => self.alignment.canonical_left_eye = point(key, value)?,
            "canonical_right_eye" => self.alignment.canonical_right_eye = point(key, value)?,
            _ => unreachable!("key list and setter disagree on {key}"),
        }
        Ok(())
    }

    /// Validates each parameter group and the block size against the
    /// aligned frame.
    pub fn validate(&self) -> Result<()> {
        self.gabor.validate()?;
        self.alignment.validate()?;
        self.matching
            .validate_for(self.alignment.out_height, self.alignment.out_width)
    }

    /// Canonical text form; parsing it yields an equal config.
    pub fn to_text(&self) -> String {
        let g = &self.gabor;
        let m = &self.matching;
        let a = &self.alignment;
        let orientations = g
            .orientations
            .iter()
            .map(u8::to_string)
            .collect::<Vec<_>>()
            .join(", ");
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
        kv("k_max", format!("{:?}", g.k_max));
        kv("f", format!("{:?}", g.f));
        kv("sigma", format!("{:?}", g.sigma));
        kv("v", g.v.to_string());
        kv("orientations", orientations);
        kv("kernel_size", g.kernel_size.to_string());
        kv("block_h", m.block_h.to_string());
        kv("block_w", m.block_w.to_string());
        kv("search_r", m.search_r.to_string());
        kv("search_c", m.search_c.to_string());
        kv("fit_count", m.fit_count.to_string());
        kv("epsilon", format!("{:?}", m.epsilon));
        kv("out_height", a.out_height.to_string());
        kv("out_width", a.out_width.to_string());
        let p = |p: Point| format!("{:?}, {:?}", p.x, p.y);
        kv("canonical_left_eye", p(a.canonical_left_eye));
        kv("canonical_right_eye", p(a.canonical_right_eye));
        out
    }

    /// CRC-32 of the canonical text form, as eight hex digits.
    pub fn fingerprint(&self) -> String {
        format!("{:08x}", crc32fast::hash(self.to_text().as_bytes()))
    }
}
