//! Vessel segmentation: multiscale Frangi vesselness, slice-wise Phansalkar
//! local thresholding, global thresholding and the F1-optimal threshold.

mod frangi;
mod hessian;
mod phansalkar;
mod threshold;

pub use frangi::{frangi_vesselness, frangi_vesselness_detailed, FrangiOutput, FrangiParams};
pub use hessian::{hessian_eigenvalues, symmetric_eigenvalues3, HessianEigen};
pub use phansalkar::{phansalkar_threshold, PhansalkarParams};
pub use threshold::{
    apply_threshold, optimal_threshold_f1, optimal_threshold_f1_with, ThresholdChoice, DEFAULT_MAX_CANDIDATES,
};
