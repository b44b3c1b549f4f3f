//! Gabor-phase block-matching (GPBM) face identification.
//!
//! Faces are aligned from eye coordinates, filtered with a single-scale
//! pair of complex Gabor kernels, and phase-quantized into Gray-coded
//! 16-PSK sectors. Two code images are compared by searching each probe
//! block over a small window of the gallery image and combining the
//! per-block minima with slope-derived weights.
//!
//! ```
//! use gpbm::{encode_face, pair_distance, synth, GaborParams, MatchParams};
//!
//! let face = synth::textured_face(7, 150, 136);
//! let codes = encode_face(&face, &GaborParams::default()).unwrap();
//! let report = pair_distance(&codes, &codes, &MatchParams::default()).unwrap();
//! assert_eq!(report.dist, 0.0);
//! ```

pub mod align;
pub mod config;
mod error;
pub mod gabor;
pub mod gallery;
pub mod image;
pub mod index;
pub mod matcher;
pub mod phase;
pub mod synth;

pub use align::{align_face, parse_eye_list, AlignmentSpec, EyePair, Point};
pub use config::Config;
pub use error::{Error, Result};
pub use gabor::{convolve, filter_bank, make_kernel, ComplexResponseMap, GaborKernel, GaborParams};
pub use gallery::{
    build_gallery, evaluate, identify, CmcCurve, Evaluation, GalleryEntry, GalleryIndex, Probe,
    RankedResult,
};
pub use image::{load_grayscale, save_pgm, RasterImage};
pub use index::{load_index, save_index};
pub use matcher::{
    fit_slope, pair_distance, patch_distance, search_block, segment_blocks,
    suggest_search_offsets, BlockGrid, DistanceVector, MatchParams, MatchReport,
};
pub use phase::{code_distance, demodulate, encode_face, gray_code, PhaseCodeImage};
