//! Special functions and small dense complex linear algebra.

pub mod eig;
pub mod linalg;
pub mod special;

pub use eig::{herm_eig, EigenDecomposition};
pub use linalg::{solve_hpd, CMatrix, CVector, C64};
pub use special::{
    central_chi2_cdf, central_chi2_sf, erf, erfc, erfinv, inv_reg_upper_gamma, ln_gamma,
    noncentral_chi2_sf, reg_lower_gamma, reg_upper_gamma,
};
