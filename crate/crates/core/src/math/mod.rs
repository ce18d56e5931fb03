//! Special functions and the small dense complex linear algebra the
//! receivers need.

pub mod linalg;
pub mod special;

pub use linalg::{hermitian_inverse, nullspace_basis, quad_form, ComplexMatrix, ComplexVector, Orthonormal};
pub use special::{
    digamma, inv_reg_gamma_q, ln_gamma, ln_reg_gamma_q, ln_upper_gamma, reg_gamma_q, upper_gamma,
    EULER_GAMMA,
};
