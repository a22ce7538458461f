//! Numerical laboratory for bilinear Fourier multiplier operators
//!
//! ```text
//! T_m(f,g)(x) = sum_xi sum_eta m(xi,eta) f^(xi) g^(eta) e^{2 pi i x.(xi+eta)}
//! ```
//!
//! evaluated on finite frequency lattices of the torus. The crate covers the
//! operator itself and its dilated sums, a product-wavelet analysis of
//! multipliers (coefficients, level-set splitting, square-function norms),
//! the extremal families that show the `L^2 x L^2 -> L^1` thresholds are
//! sharp, and three applications: rough singular-integral symbols,
//! Fefferman-type kernels and the dyadic bilinear spherical maximal operator.
//!
//! Conventions: forward transform `e^{-2 pi i x.xi}`, inverse `e^{+2 pi i x.xi}`.
//! A lattice with frequency spacing `h` lives on the torus of period `1/h`;
//! spectral coefficients are `h^n f^(xi)` so that lattice sums are Riemann
//! sums of the continuum integrals.

pub mod applications;
pub mod bilinear;
pub mod error;
pub mod extremal;
pub mod fit;
pub mod lattice;
pub mod multiplier;
pub mod profile;
pub mod quadrature;
pub mod wavelet;

pub use error::{LabError, Result};
pub use num_complex::Complex64;
