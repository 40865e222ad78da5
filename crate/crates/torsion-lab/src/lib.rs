//! Numerical laboratory for analytic torsion forms, finite-dimensional
//! Hodge theory, one-dimensional Witten Laplacians and Morse complexes.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod birth_death;
pub mod flow;
pub mod graded_complex;
pub mod linalg;
pub mod morse_complex;
pub mod par;
pub mod quadrature;
pub mod torsion_forms;
pub mod zeta;
pub mod witten1d;
