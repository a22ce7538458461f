//! Rough singular-integral symbols, Fefferman-type kernels and the dyadic
//! bilinear spherical maximal operator.

pub mod decay;
pub mod rough;
pub mod sphere;
pub mod spherical;

pub use decay::{decay_check, DecayFit, DecayProbe};
pub use rough::{
    fefferman_scale_multipliers, rough_kernel_multiplier, Annulus, FeffermanFamily, KernelMesh, RadialFactor,
    RoughKernel,
};
pub use sphere::{sphere_area, surface_measure_ft, SphereSymbol, MAX_FT_RADIUS};
pub use spherical::{
    dyadic_spherical_max, hl_maximal, khintchine_square_function, SphericalMax, SphericalMeasure,
    SquareFunctionReport,
};
