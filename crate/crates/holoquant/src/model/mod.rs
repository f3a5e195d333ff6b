//! The refined hologram CNN: architecture description, weight stores,
//! FP32 inference, post-training quantization, and INT8 inference.

pub mod arch;
pub mod fp32;
pub mod init;
pub mod quantized;
pub mod store;

pub use arch::{build_reference_arch, ArchitectureSpec, ARCH_ID};
pub use fp32::{FoldedModel, Fp32Model};
pub use init::init_weights;
pub use quantized::{
    calibrate, convert_int8_dynamic, convert_int8_static, forward_int8_dynamic,
    forward_int8_static, forward_int8_static_sim, CalibrationRecord, Int8Model,
};
pub use store::{StoreError, StoreKind, WeightStore};

use crate::quant::QuantError;
use crate::tensor::TensorError;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Quant(#[from] QuantError),
    #[error("store kind {got} where {expected} is required")]
    WrongKind { expected: &'static str, got: &'static str },
    #[error("store architecture {got:?} does not match {want:?}")]
    WrongArchitecture { want: &'static str, got: String },
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("calibration needs at least one input")]
    EmptyCalibrationSet,
    #[error("store is missing activation site {0:?}")]
    MissingSite(String),
    #[error("quantized bias for {name} is {value}, outside the supported +/-2^23")]
    BiasOutOfRange { name: String, value: i64 },
}
