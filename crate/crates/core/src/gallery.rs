//! Gallery enrollment, 1:N identification and CMC evaluation.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::align::{align_face, EyePair};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::image::{load_grayscale, RasterImage};
use crate::matcher::pair_distance;
use crate::phase::{encode_face, PhaseCodeImage};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GalleryEntry {
    pub identity: String,
    pub image_id: String,
    pub codes: PhaseCodeImage,
}

/// Immutable set of enrolled phase-code images plus the parameters they
/// were encoded with.
#[derive(Debug, Clone, PartialEq)]
pub struct GalleryIndex {
    config: Config,
    height: usize,
    width: usize,
    channels: usize,
    entries: Vec<GalleryEntry>,
}

impl GalleryIndex {
    pub fn from_entries(config: Config, entries: Vec<GalleryEntry>) -> Result<Self> {
        config.validate()?;
        let height = config.alignment.out_height;
        let width = config.alignment.out_width;
        let channels = config.gabor.orientations.len();
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            let dims = (e.codes.height(), e.codes.width(), e.codes.channels());
            if dims != (height, width, channels) {
                return Err(Error::DimensionMismatch(format!(
                    "entry ({}, {}) is {:?}, index expects {:?}",
                    e.identity,
                    e.image_id,
                    dims,
                    (height, width, channels)
                )));
            }
            if !seen.insert((e.identity.as_str(), e.image_id.as_str())) {
                return Err(Error::DuplicateEntry {
                    identity: e.identity.clone(),
                    image_id: e.image_id.clone(),
                });
            }
        }
        Ok(GalleryIndex {
            config,
            height,
            width,
            channels,
            entries,
        })
    }

    pub fn config(&self) -> &Config {
        &self.config
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

    pub fn entries(&self) -> &[GalleryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains_identity(&self, identity: &str) -> bool {
        self.entries.iter().any(|e| e.identity == identity)
    }
}

/// One line of a protocol list: `<identity> <image-id> <path>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ListRecord {
    pub identity: String,
    pub image_id: String,
    pub path: PathBuf,
}

/// Parses a protocol list. Relative paths resolve against the list's directory.
pub fn parse_protocol_list(path: impl AsRef<Path>) -> Result<Vec<ListRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    parse_protocol_text(&text, base)
}

pub fn parse_protocol_text(text: &str, base: &Path) -> Result<Vec<ListRecord>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [identity, image_id, file] = fields.as_slice() else {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected `<identity> <image-id> <path>`, found {line:?}"),
            });
        };
        out.push(ListRecord {
            identity: identity.to_string(),
            image_id: image_id.to_string(),
            path: base.join(file),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GalleryRecord {
    pub identity: String,
    pub image_id: String,
    pub path: PathBuf,
    pub eyes: EyePair,
}

/// Pairs list records with eye coordinates keyed by image id.
pub fn attach_eyes(
    records: Vec<ListRecord>,
    eyes: &BTreeMap<String, EyePair>,
) -> Result<Vec<GalleryRecord>> {
    records
        .into_iter()
        .map(|r| {
            let pair = *eyes
                .get(&r.image_id)
                .ok_or_else(|| Error::MissingEyes(r.image_id.clone()))?;
            Ok(GalleryRecord {
                identity: r.identity,
                image_id: r.image_id,
                path: r.path,
                eyes: pair,
            })
        })
        .collect()
}

/// Aligns and encodes one image under `config`.
pub fn encode_image(img: &RasterImage, eyes: &EyePair, config: &Config) -> Result<PhaseCodeImage> {
    let aligned = align_face(img, eyes, &config.alignment)?;
    encode_face(&aligned, &config.gabor)
}

pub fn load_and_encode(path: &Path, eyes: &EyePair, config: &Config) -> Result<PhaseCodeImage> {
    encode_image(&load_grayscale(path)?, eyes, config)
}

/// Loads, aligns and encodes every record, preserving input order.
///
/// All records are attempted; if any fail, the build is aborted with every
/// failure listed.
pub fn build_gallery(records: &[GalleryRecord], config: &Config) -> Result<GalleryIndex> {
    config.validate()?;
    let mut seen = HashSet::new();
    for r in records {
        if !seen.insert((r.identity.as_str(), r.image_id.as_str())) {
            return Err(Error::DuplicateEntry {
                identity: r.identity.clone(),
                image_id: r.image_id.clone(),
            });
        }
    }
    let encoded: Vec<Result<PhaseCodeImage>> = records
        .par_iter()
        .map(|r| load_and_encode(&r.path, &r.eyes, config))
        .collect();

    let mut entries = Vec::with_capacity(records.len());
    let mut failures = Vec::new();
    for (r, codes) in records.iter().zip(encoded) {
        match codes {
            Ok(codes) => entries.push(GalleryEntry {
                identity: r.identity.clone(),
                image_id: r.image_id.clone(),
                codes,
            }),
            Err(e) => failures.push((r.image_id.clone(), e)),
        }
    }
    if !failures.is_empty() {
        return Err(Error::Build { failures });
    }
    GalleryIndex::from_entries(config.clone(), entries)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedCandidate {
    pub identity: String,
    pub image_id: String,
    pub dist: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedResult {
    pub probe_id: String,
    /// Ascending by distance; ties keep gallery order.
    pub candidates: Vec<RankedCandidate>,
    /// 1-based position of the first entry carrying the true identity.
    pub rank_of_truth: Option<usize>,
}

fn check_probe(probe: &PhaseCodeImage, probe_config: &Config, index: &GalleryIndex) -> Result<()> {
    if probe_config != index.config() {
        return Err(Error::FingerprintMismatch);
    }
    let dims = (probe.height(), probe.width(), probe.channels());
    if dims != (index.height, index.width, index.channels) {
        return Err(Error::DimensionMismatch(format!(
            "probe is {:?}, index holds {:?}",
            dims,
            (index.height, index.width, index.channels)
        )));
    }
    Ok(())
}

/// `(entry position, distance)` for every entry, best first.
fn rank_entries(probe: &PhaseCodeImage, index: &GalleryIndex) -> Result<Vec<(usize, f64)>> {
    let params = &index.config.matching;
    let dists = index
        .entries
        .par_iter()
        .map(|e| pair_distance(probe, &e.codes, params).map(|r| r.dist))
        .collect::<Result<Vec<f64>>>()?;
    let mut order: Vec<(usize, f64)> = dists.into_iter().enumerate().collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(order)
}

fn to_candidates(index: &GalleryIndex, order: &[(usize, f64)]) -> Vec<RankedCandidate> {
    order
        .iter()
        .map(|&(i, dist)| RankedCandidate {
            identity: index.entries[i].identity.clone(),
            image_id: index.entries[i].image_id.clone(),
            dist,
        })
        .collect()
}

/// Ranks every gallery entry against `probe` and keeps the best `top_k`.
pub fn identify(
    probe_id: &str,
    probe: &PhaseCodeImage,
    probe_config: &Config,
    index: &GalleryIndex,
    top_k: usize,
) -> Result<RankedResult> {
    check_probe(probe, probe_config, index)?;
    let order = rank_entries(probe, index)?;
    Ok(RankedResult {
        probe_id: probe_id.to_string(),
        candidates: to_candidates(index, &order[..top_k.min(order.len())]),
        rank_of_truth: None,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Probe {
    pub probe_id: String,
    pub identity: String,
    pub codes: PhaseCodeImage,
}

/// Cumulative match characteristic: `rates[k-1]` is the fraction of probes
/// whose true identity ranks within the top `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CmcCurve {
    pub rates: Vec<f64>,
    pub probe_count: usize,
}

impl CmcCurve {
    pub fn from_ranks(ranks: &[Option<usize>], max_rank: usize) -> Self {
        let mut hits = vec![0usize; max_rank];
        for rank in ranks.iter().flatten() {
            if (1..=max_rank).contains(rank) {
                hits[rank - 1] += 1;
            }
        }
        let n = ranks.len();
        let mut acc = 0;
        let rates = hits
            .iter()
            .map(|h| {
                acc += h;
                if n == 0 {
                    0.0
                } else {
                    acc as f64 / n as f64
                }
            })
            .collect();
        CmcCurve {
            rates,
            probe_count: n,
        }
    }

    pub fn rank1(&self) -> f64 {
        self.rates.first().copied().unwrap_or(0.0)
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "rate"])?;
        for (k, rate) in self.rates.iter().enumerate() {
            w.write_record([(k + 1).to_string(), format!("{rate:.6}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub cmc: CmcCurve,
    pub results: Vec<RankedResult>,
}

/// Closed-set identification of every probe. Each result keeps the top
/// `max_rank` candidates.
pub fn evaluate(
    probes: &[Probe],
    probe_config: &Config,
    index: &GalleryIndex,
    max_rank: usize,
) -> Result<Evaluation> {
    let unknown: Vec<String> = probes
        .iter()
        .filter(|p| !index.contains_identity(&p.identity))
        .map(|p| p.probe_id.clone())
        .collect();
    if !unknown.is_empty() {
        return Err(Error::UnknownIdentity(unknown));
    }
    for p in probes {
        check_probe(&p.codes, probe_config, index)?;
    }
    let results = probes
        .par_iter()
        .map(|p| {
            let order = rank_entries(&p.codes, index)?;
            let rank = order
                .iter()
                .position(|&(i, _)| index.entries[i].identity == p.identity)
                .map(|pos| pos + 1);
            Ok(RankedResult {
                probe_id: p.probe_id.clone(),
                candidates: to_candidates(index, &order[..max_rank.min(order.len())]),
                rank_of_truth: rank,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ranks: Vec<Option<usize>> = results.iter().map(|r| r.rank_of_truth).collect();
    Ok(Evaluation {
        cmc: CmcCurve::from_ranks(&ranks, max_rank),
        results,
    })
}

/// `probe_id,rank,identity,image_id,dist` rows, header first.
pub fn write_results_csv(results: &[RankedResult], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["probe_id", "rank", "identity", "image_id", "dist"])?;
    for r in results {
        for (pos, c) in r.candidates.iter().enumerate() {
            w.write_record([
                r.probe_id.as_str(),
                &(pos + 1).to_string(),
                &c.identity,
                &c.image_id,
                &format!("{:.9}", c.dist),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
