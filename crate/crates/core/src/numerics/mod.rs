//! Numerical foundation: small dense linear algebra, distribution functions,
//! bracketing root finding and reproducible random streams.

mod dist;
mod linalg;
mod rng;
mod root;

pub use dist::{chisq_quantile, chisq_sf, f_sf, ln_gamma, std_normal, std_normal_sf};
pub use linalg::{check_full_column_rank, spd_inverse, sym_inv_sqrt, SymMatrix, EPS_RANK};
pub use rng::{derive_seed, fill_gaussian, gaussian_vector, RandomStream};
pub use root::{bisect, BISECT_MAX_ITER};

/// Tolerance for linear-algebra identities such as `B A B = I`.
pub const TOL_LINALG: f64 = 1e-10;

/// Tolerance for distribution functions against quadrature oracles.
pub const TOL_DIST: f64 = 1e-8;
