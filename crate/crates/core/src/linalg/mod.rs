//! Dense kernels: SVD, column-pivoted QR and QR least squares.

mod matrix;
mod qr;
mod svd;

pub use matrix::{dot, norm2, Matrix};
pub use qr::{back_substitute, pivoted_qr, qr_least_squares, HouseholderQr, PivotedQr};
pub use svd::{svd, truncate, SvdFactors};
