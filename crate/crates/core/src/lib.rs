//! Single-image, self-supervised compressed-sensing MRI reconstruction.
//!
//! The crate couples three reconstruction families that share one degradation
//! model (a masked, centered, unitary 2D DFT):
//!
//! * hand-crafted CS solvers: ISTA and D-AMP with a plug-in Gaussian denoiser
//!   ([`damp`], [`denoisers`]);
//! * an unrolled cascade of small CNN denoisers interleaved with data
//!   consistency, trained on a single scan by splitting its own samples
//!   ([`dccnn`], [`selfsup`]);
//! * an ADMM / regularization-by-denoising loop that lets a CS solver guide
//!   the network while it trains ([`selfsup::train_ss_red`]).
//!
//! Supporting modules cover mask generation ([`sampling`]), quality metrics
//! ([`quality`]), a Shepp-Logan phantom, binary interchange formats and
//! experiment orchestration ([`harness`]).

pub mod damp;
pub mod dccnn;
pub mod denoisers;
pub mod error;
pub mod fourier;
pub mod grid;
pub mod harness;
pub mod quality;
pub mod sampling;
pub mod selfsup;

pub use error::{Error, Result};
pub use grid::{AcsRegion, ComplexImage, Grid, KSpaceGrid, SamplingMask};
pub use num_complex::Complex64;
