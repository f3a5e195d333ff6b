//! Holographic display pipeline with an INT8 post-training-quantization path.
//!
//! The crate covers the full loop: a small CNN maps RGB-D frames to
//! three-channel amplitude/phase holograms ([`model`]), uniform affine
//! quantization turns it into an integer-only engine ([`quant`] + the INT8
//! half of [`model`]), scalar diffraction verifies the optics
//! ([`optics`]), and [`metrics`] scores any two outputs against each other.
//! [`cli`] wraps everything into the `holoquant` binary.
//!
//! Start with the examples: `quantization_basics` for the arithmetic,
//! `ptq_pipeline` for calibration and conversion, `infer_reconstruct` for
//! the end-to-end frame path.

pub mod cli;
pub mod metrics;
pub mod model;
pub mod optics;
pub mod quant;
pub mod tensor;
