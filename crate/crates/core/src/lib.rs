//! Metadata-driven Gaussian random field images for multimodal segmentation.
//!
//! The crate covers the whole data path around a segmentation model:
//!
//! * [`metadata`]: CSV ingestion, category encoding and min-max normalisation.
//! * [`grfgen`]: seeded spectral synthesis of power-law Gaussian random fields.
//! * [`tensorfuse`]: RGB + GRF early fusion into four-channel tensors.
//! * [`maskfusion`]: exact distance transforms and ensemble mask averaging.
//! * [`metrics`]: IoU, DSC, FPE and FNE with dataset reports.

pub mod grfgen;
pub mod maskfusion;
pub mod metadata;
pub mod metrics;
pub mod rng;
pub mod tensorfuse;

pub use grfgen::{
    category_seed, field_to_greyscale, grf_for_record, grf_params_for_record, power_exponent, synthesize_field,
    Field2D, GreyImage, GrfError, GrfParams, GrfSettings, GrfSidecar, RadialSpectrum,
};
pub use maskfusion::{average_merge, distance_transform, signed_distance, BinaryMask, FusionMode, MaskError};
pub use metadata::{
    Category, Gender, HistogramReport, MetadataError, MetadataRecord, MetadataSchema, NormalizationStats,
    NormalizedValue, PostcodeTable,
};
pub use metrics::{ConfusionCounts, EvalRecord, EvalReport, MetricsError, ReportFormat};
pub use tensorfuse::{FourChannelTensor, FuseError, RgbImage};

/// Toolkit version recorded in provenance sidecars.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Any error raised by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Metadata(#[from] MetadataError),
    #[error(transparent)]
    Grf(#[from] GrfError),
    #[error(transparent)]
    Fuse(#[from] FuseError),
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}
