//! Binary gallery index files.
//!
//! Little-endian layout:
//!
//! ```text
//! magic "GPBMIDX1" | version u16 | height u16 | width u16 | channels u8
//! k_max f64 | f f64 | sigma f64 | v u8 | orientation count u8 | orientations u8*
//! kernel_size u16
//! H u16 | W u16 | R u16 | C u16 | fit_count u16 | epsilon f64
//! left eye x,y f64 | right eye x,y f64
//! entry count u32
//! per entry: label len u16 | label | image id len u16 | image id | codes
//! crc32 u32 over everything before it
//! ```

use std::fs;
use std::path::Path;

use crate::align::Point;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::gallery::{GalleryEntry, GalleryIndex};
use crate::phase::PhaseCodeImage;

pub const MAGIC: &[u8; 8] = b"GPBMIDX1";
pub const FORMAT_VERSION: u16 = 1;

pub fn save_index(index: &GalleryIndex, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_index(index)?;
    fs::write(path, bytes).map_err(|e| Error::io_at(path, e))
}

pub fn load_index(path: impl AsRef<Path>) -> Result<GalleryIndex> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io_at(path, e))?;
    decode_index(&bytes)
}

fn narrow<T: TryFrom<usize>>(what: &str, v: usize) -> Result<T> {
    T::try_from(v).map_err(|_| Error::FieldOverflow(format!("{what} = {v}")))
}

pub fn encode_index(index: &GalleryIndex) -> Result<Vec<u8>> {
    let cfg = index.config();
    let (g, m, a) = (&cfg.gabor, &cfg.matching, &cfg.alignment);
    let code_len = index.channels() * index.height() * index.width();
    let mut out = Vec::with_capacity(128 + index.len() * (code_len + 32));

    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&narrow::<u16>("height", index.height())?.to_le_bytes());
    out.extend_from_slice(&narrow::<u16>("width", index.width())?.to_le_bytes());
    out.push(narrow::<u8>("channels", index.channels())?);

    for v in [g.k_max, g.f, g.sigma] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.push(g.v);
    out.push(narrow::<u8>("orientation count", g.orientations.len())?);
    out.extend_from_slice(&g.orientations);
    out.extend_from_slice(&narrow::<u16>("kernel_size", g.kernel_size)?.to_le_bytes());

    for (what, v) in [
        ("block_h", m.block_h),
        ("block_w", m.block_w),
        ("search_r", m.search_r),
        ("search_c", m.search_c),
        ("fit_count", m.fit_count),
    ] {
        out.extend_from_slice(&narrow::<u16>(what, v)?.to_le_bytes());
    }
    out.extend_from_slice(&m.epsilon.to_le_bytes());
    for v in [
        a.canonical_left_eye.x,
        a.canonical_left_eye.y,
        a.canonical_right_eye.x,
        a.canonical_right_eye.y,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }

    out.extend_from_slice(&narrow::<u32>("entry count", index.len())?.to_le_bytes());
    for e in index.entries() {
        for (what, s) in [("label", &e.identity), ("image id", &e.image_id)] {
            out.extend_from_slice(&narrow::<u16>(what, s.len())?.to_le_bytes());
            out.extend_from_slice(s.as_bytes());
        }
        out.extend_from_slice(e.codes.codes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| {
            Error::TruncatedFile(format!("{what} at byte {} needs {n} bytes", self.pos))
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn string(&mut self, what: &str) -> Result<String> {
        let len = usize::from(self.u16(what)?);
        let raw = self.take(len, what)?;
        String::from_utf8(raw.to_vec())
            .map_err(|_| Error::TruncatedFile(format!("{what} is not valid UTF-8")))
    }
}

pub fn decode_index(bytes: &[u8]) -> Result<GalleryIndex> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::BadMagic);
    }
    let mut r = Reader {
        bytes,
        pos: MAGIC.len(),
    };
    let version = r.u16("version")?;
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let height = usize::from(r.u16("height")?);
    let width = usize::from(r.u16("width")?);
    let channels = usize::from(r.u8("channels")?);

    let mut cfg = Config::default();
    cfg.gabor.k_max = r.f64("k_max")?;
    cfg.gabor.f = r.f64("f")?;
    cfg.gabor.sigma = r.f64("sigma")?;
    cfg.gabor.v = r.u8("v")?;
    let n_orient = usize::from(r.u8("orientation count")?);
    cfg.gabor.orientations = r.take(n_orient, "orientations")?.to_vec();
    cfg.gabor.kernel_size = usize::from(r.u16("kernel_size")?);

    cfg.matching.block_h = usize::from(r.u16("block_h")?);
    cfg.matching.block_w = usize::from(r.u16("block_w")?);
    cfg.matching.search_r = usize::from(r.u16("search_r")?);
    cfg.matching.search_c = usize::from(r.u16("search_c")?);
    cfg.matching.fit_count = usize::from(r.u16("fit_count")?);
    cfg.matching.epsilon = r.f64("epsilon")?;
    cfg.alignment.out_height = height;
    cfg.alignment.out_width = width;
    cfg.alignment.canonical_left_eye = Point::new(r.f64("left eye x")?, r.f64("left eye y")?);
    cfg.alignment.canonical_right_eye = Point::new(r.f64("right eye x")?, r.f64("right eye y")?);

    let count = r.u32("entry count")? as usize;
    let code_len = channels * height * width;
    let mut entries = Vec::with_capacity(count.min(bytes.len() / code_len.max(1)));
    for n in 0..count {
        let identity = r.string(&format!("entry {n} label"))?;
        let image_id = r.string(&format!("entry {n} image id"))?;
        let codes = r.take(code_len, &format!("entry {n} codes"))?.to_vec();
        entries.push((identity, image_id, codes));
    }

    let body_len = r.pos;
    let stored = r.u32("checksum")?;
    if r.pos != bytes.len() {
        return Err(Error::TruncatedFile(format!(
            "{} unexpected trailing bytes",
            bytes.len() - r.pos
        )));
    }
    let computed = crc32fast::hash(&bytes[..body_len]);
    if stored != computed {
        return Err(Error::ChecksumMismatch { stored, computed });
    }

    if channels != cfg.gabor.orientations.len() {
        return Err(Error::DimensionMismatch(format!(
            "{channels} channels for {} orientations",
            cfg.gabor.orientations.len()
        )));
    }
    let entries = entries
        .into_iter()
        .map(|(identity, image_id, codes)| {
            Ok(GalleryEntry {
                identity,
                image_id,
                codes: PhaseCodeImage::new(height, width, channels, codes)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    GalleryIndex::from_entries(cfg, entries)
}
