//! Extremal families for the `L^2 x L^2 -> L^1` thresholds and their checks.

pub mod scaling;
pub mod sharpness;
pub mod signs;
pub mod thm12;
pub mod thm13;

pub use scaling::{derivative_count_test, ScalingRecord};
pub use sharpness::{sharpness_exponent_test, SharpnessRecord};
pub use signs::SignSequence;
pub use thm12::{
    build_thm12_pair, conv_weight, counterexample_lq_partial, khintchine_l1, randomized_l1_average,
    thm12_c, thm12_multiplier, RandomizedReport, Thm12Family,
};
pub use thm13::{
    build_thm13_family, locate_a, localization_check, square_function_value, thm13_c, LocalizationReport,
    Thm13Family,
};
