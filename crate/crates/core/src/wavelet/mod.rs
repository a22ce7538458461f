//! Product wavelet analysis of multipliers on `R^{2n}`.

pub mod analysis;
pub mod filters;
pub mod split;
pub mod system;
pub mod triebel;

pub use analysis::{analyze, basis_inner_product, reconstruct, AnalysisBox, Band, CoeffRecord, WaveletCoeffs, WaveletIndex};
pub use split::{
    assemble_split_multipliers, deepest_level, diagonal_split, level_split, slice_multiplier, split_decay_sweep,
    LevelSetSplit, Site, SplitDecayPoint,
};
pub use system::{build_wavelet_system, Gender, WaveletSystem};
pub use triebel::{triebel_lq_estimate, TriebelEstimate};
