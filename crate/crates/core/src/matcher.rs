//! Block-matching distance between two phase-code images.
//!
//! The probe is cut into non-overlapping `H×W` blocks. Each block is
//! compared against every gallery patch displaced by `(Δy, Δx)` within
//! `[−R, R] × [−C, C]`; the patch distance is the 2-norm of the per-element
//! Hamming distances. Per block, the smallest distance `d_n` is weighted by
//! `s_n = k_n / d_n`, where `k_n` is the least-squares slope through the
//! few smallest sorted distances. Weights are normalized to sum to one and
//! the pair distance is `Σ ŝ_n·d_n`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::phase::{PhaseCodeImage, SQUARED_DISTANCE};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchParams {
    /// Block height `H`.
    pub block_h: usize,
    /// Block width `W`.
    pub block_w: usize,
    /// Vertical search offset bound `R`.
    pub search_r: usize,
    /// Horizontal search offset bound `C`.
    pub search_c: usize,
    /// Number of smallest candidate distances fed to the slope fit.
    pub fit_count: usize,
    /// Floor applied to `d_n` before dividing.
    pub epsilon: f64,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams {
            block_h: 29,
            block_w: 19,
            search_r: 7,
            search_c: 6,
            fit_count: 5,
            epsilon: 1e-12,
        }
    }
}

impl MatchParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidMatchParams(msg.into()));
        if self.block_h == 0 || self.block_w == 0 {
            return bad("block dimensions must be at least 1");
        }
        if self.fit_count < 2 {
            return bad("fit_count must be at least 2");
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be a positive finite number");
        }
        Ok(())
    }

    pub fn validate_for(&self, height: usize, width: usize) -> Result<()> {
        self.validate()?;
        if self.block_h > height || self.block_w > width {
            return Err(Error::BlockLargerThanImage {
                block_h: self.block_h,
                block_w: self.block_w,
                height,
                width,
            });
        }
        Ok(())
    }

    /// Candidate count of a search window that is not clamped by the frame.
    pub fn full_window(&self) -> usize {
        (2 * self.search_r + 1) * (2 * self.search_c + 1)
    }
}

/// `(R, C)` from the block size: `R = round(max(H, W)/4)`, `C = max(1, round(R/1.2))`.
pub fn suggest_search_offsets(block_h: usize, block_w: usize) -> (usize, usize) {
    let r = (block_h.max(block_w) as f64 / 4.0).round() as usize;
    let c = ((r as f64 / 1.2).round() as usize).max(1);
    (r, c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub index: usize,
    pub top: usize,
    pub left: usize,
}

/// Centered, row-major tiling of the probe frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockGrid {
    pub rows: usize,
    pub cols: usize,
    pub margin_top: usize,
    pub margin_left: usize,
    pub block_h: usize,
    pub block_w: usize,
    pub blocks: Vec<Block>,
}

impl BlockGrid {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Center of block `n` in `(x, y)` image coordinates.
    pub fn center(&self, n: usize) -> (f64, f64) {
        let b = self.blocks[n];
        (
            b.left as f64 + (self.block_w as f64 - 1.0) / 2.0,
            b.top as f64 + (self.block_h as f64 - 1.0) / 2.0,
        )
    }
}

pub fn segment_blocks(height: usize, width: usize, params: &MatchParams) -> Result<BlockGrid> {
    params.validate_for(height, width)?;
    let (bh, bw) = (params.block_h, params.block_w);
    let rows = height / bh;
    let cols = width / bw;
    // leftover pixels split evenly, odd pixel to the bottom/right
    let margin_top = (height - rows * bh) / 2;
    let margin_left = (width - cols * bw) / 2;
    let blocks = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .enumerate()
        .map(|(index, (r, c))| Block {
            index,
            top: margin_top + r * bh,
            left: margin_left + c * bw,
        })
        .collect();
    Ok(BlockGrid {
        rows,
        cols,
        margin_top,
        margin_left,
        block_h: bh,
        block_w: bw,
        blocks,
    })
}

fn check_pair(probe: &PhaseCodeImage, gallery: &PhaseCodeImage) -> Result<()> {
    if probe.channels() != gallery.channels() {
        return Err(Error::ChannelMismatch(probe.channels(), gallery.channels()));
    }
    Ok(())
}

fn check_patch(img: &PhaseCodeImage, (x, y): (usize, usize), params: &MatchParams) -> Result<()> {
    if x + params.block_w > img.width() || y + params.block_h > img.height() {
        return Err(Error::PatchOutOfBounds {
            origin: (x, y),
            height: img.height(),
            width: img.width(),
        });
    }
    Ok(())
}

/// Sum of squared element distances between two in-bounds patches.
#[inline]
fn patch_sq_sum(
    probe: &PhaseCodeImage,
    gallery: &PhaseCodeImage,
    (px, py): (usize, usize),
    (gx, gy): (usize, usize),
    bh: usize,
    bw: usize,
) -> u32 {
    let mut acc = 0u32;
    for ch in 0..probe.channels() {
        for dy in 0..bh {
            let p = &probe.row_from(ch, py + dy, px)[..bw];
            let g = &gallery.row_from(ch, gy + dy, gx)[..bw];
            acc += p
                .iter()
                .zip(g)
                .map(|(&a, &b)| SQUARED_DISTANCE[usize::from((a << 4) | b)])
                .sum::<u32>();
        }
    }
    acc
}

/// 2-norm of element-wise Hamming distances between the `H×W` patches at
/// top-left corners `probe_tl` and `gallery_tl`, both given as `(x, y)`.
pub fn patch_distance(
    probe: &PhaseCodeImage,
    gallery: &PhaseCodeImage,
    probe_tl: (usize, usize),
    gallery_tl: (usize, usize),
    params: &MatchParams,
) -> Result<f64> {
    check_pair(probe, gallery)?;
    check_patch(probe, probe_tl, params)?;
    check_patch(gallery, gallery_tl, params)?;
    let sq = patch_sq_sum(
        probe,
        gallery,
        probe_tl,
        gallery_tl,
        params.block_h,
        params.block_w,
    );
    Ok(f64::from(sq).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub dy: isize,
    pub dx: isize,
    pub dist: f64,
}

/// All candidate distances of one block, row-major in `(Δy, Δx)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceVector {
    pub candidates: Vec<Candidate>,
}

impl DistanceVector {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// First candidate attaining the minimum distance.
    pub fn best(&self) -> Option<Candidate> {
        self.candidates
            .iter()
            .copied()
            .reduce(|best, c| if c.dist < best.dist { c } else { best })
    }

    /// Distances sorted ascending; equal distances keep enumeration order.
    pub fn sorted_distances(&self) -> Vec<f64> {
        let mut d: Vec<f64> = self.candidates.iter().map(|c| c.dist).collect();
        d.sort_by(f64::total_cmp);
        d
    }
}

/// Offsets in `[lo, hi]` keeping a span of `len` starting at `origin + off`
/// inside `0..extent`.
fn feasible_offsets(origin: usize, len: usize, extent: usize, bound: usize) -> std::ops::RangeInclusive<isize> {
    let lo = -(bound.min(origin) as isize);
    let hi = bound.min(extent - len - origin) as isize;
    lo..=hi
}

pub fn search_block(
    probe: &PhaseCodeImage,
    gallery: &PhaseCodeImage,
    block: &Block,
    params: &MatchParams,
) -> Result<DistanceVector> {
    check_pair(probe, gallery)?;
    if (probe.height(), probe.width()) != (gallery.height(), gallery.width()) {
        return Err(Error::DimensionMismatch(format!(
            "probe {}x{} vs gallery {}x{}",
            probe.height(),
            probe.width(),
            gallery.height(),
            gallery.width()
        )));
    }
    check_patch(probe, (block.left, block.top), params)?;
    Ok(search_unchecked(probe, gallery, block, params))
}

fn search_unchecked(
    probe: &PhaseCodeImage,
    gallery: &PhaseCodeImage,
    block: &Block,
    params: &MatchParams,
) -> DistanceVector {
    let (bh, bw) = (params.block_h, params.block_w);
    let dys = feasible_offsets(block.top, bh, gallery.height(), params.search_r);
    let dxs = feasible_offsets(block.left, bw, gallery.width(), params.search_c);
    let mut candidates = Vec::with_capacity(params.full_window());
    for dy in dys {
        let gy = (block.top as isize + dy) as usize;
        for dx in dxs.clone() {
            let gx = (block.left as isize + dx) as usize;
            let sq = patch_sq_sum(probe, gallery, (block.left, block.top), (gx, gy), bh, bw);
            candidates.push(Candidate {
                dy,
                dx,
                dist: f64::from(sq).sqrt(),
            });
        }
    }
    DistanceVector { candidates }
}

/// Least-squares slope of `values` against their indices `0..m`.
pub fn fit_slope(sorted_head: &[f64]) -> Result<f64> {
    let m = sorted_head.len();
    if m < 2 {
        return Err(Error::TooFewCandidates(m));
    }
    let mean_j = (m as f64 - 1.0) / 2.0;
    let mean_v = sorted_head.iter().sum::<f64>() / m as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for (j, v) in sorted_head.iter().enumerate() {
        let dj = j as f64 - mean_j;
        num += dj * (v - mean_v);
        den += dj * dj;
    }
    Ok(num / den)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatch {
    pub block: Block,
    /// Number of candidates searched.
    pub candidates: usize,
    /// `d_n`, the smallest candidate distance.
    pub min_dist: f64,
    pub best_dy: isize,
    pub best_dx: isize,
    /// `k_n`
    pub slope: f64,
    /// `s_n = k_n / max(d_n, ε)`
    pub raw_weight: f64,
    /// `ŝ_n`
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    pub blocks: Vec<BlockMatch>,
    pub dist: f64,
}

impl MatchReport {
    pub fn weight_sum(&self) -> f64 {
        self.blocks.iter().map(|b| b.weight).sum()
    }

    /// Text report: a `block,d_n,dy,dx,k_n,s_hat` header, one record per
    /// block, then a closing `dist,<value>` line.
    pub fn to_text(&self) -> String {
        let mut out = String::from("block,d_n,dy,dx,k_n,s_hat\n");
        for b in &self.blocks {
            writeln!(
                out,
                "{},{:.6},{},{},{:.6},{:.9}",
                b.block.index, b.min_dist, b.best_dy, b.best_dx, b.slope, b.weight
            )
            .unwrap();
        }
        writeln!(out, "dist,{:.6}", self.dist).unwrap();
        out
    }
}

/// Distance of `probe` against `gallery`. Not symmetric: probe blocks
/// search the gallery.
pub fn pair_distance(
    probe: &PhaseCodeImage,
    gallery: &PhaseCodeImage,
    params: &MatchParams,
) -> Result<MatchReport> {
    if (probe.height(), probe.width()) != (gallery.height(), gallery.width()) {
        return Err(Error::DimensionMismatch(format!(
            "probe {}x{} vs gallery {}x{}",
            probe.height(),
            probe.width(),
            gallery.height(),
            gallery.width()
        )));
    }
    check_pair(probe, gallery)?;
    let grid = segment_blocks(probe.height(), probe.width(), params)?;

    let mut blocks = Vec::with_capacity(grid.len());
    for block in &grid.blocks {
        let dv = search_unchecked(probe, gallery, block, params);
        let best = dv.best().expect("zero offset is always feasible");
        let sorted = dv.sorted_distances();
        let head = &sorted[..params.fit_count.min(sorted.len())];
        // a fully clamped window leaves one candidate and no slope to fit
        let slope = if head.len() < 2 { 0.0 } else { fit_slope(head)? };
        let raw_weight = slope / best.dist.max(params.epsilon);
        blocks.push(BlockMatch {
            block: *block,
            candidates: dv.len(),
            min_dist: best.dist,
            best_dy: best.dy,
            best_dx: best.dx,
            slope,
            raw_weight,
            weight: 0.0,
        });
    }

    let total: f64 = blocks.iter().map(|b| b.raw_weight).sum();
    let uniform = 1.0 / blocks.len() as f64;
    for b in &mut blocks {
        b.weight = if total > 0.0 {
            b.raw_weight / total
        } else {
            uniform
        };
    }
    let dist = blocks.iter().map(|b| b.weight * b.min_dist).sum();
    Ok(MatchReport { blocks, dist })
}
