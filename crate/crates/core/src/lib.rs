//! Spatially-adaptive 2D Gaussian image tokens.
//!
//! Images are partitioned by gradient-entropy complexity, each region seeds
//! one truncated anisotropic Gaussian carrying a feature vector, and the
//! token set is fitted by differentiable splatting. The numeric core is
//! generic over [`Scalar`] (`f32` or `f64`); aliases below name the usual
//! instantiations.

pub mod calibration;
pub mod complexity;
pub mod encoder;
pub mod error;
pub mod gaussians;
pub mod imageio;
pub mod optim;
pub mod partition;
pub mod quality;
pub mod renderer;
pub mod scalar;
pub mod synthetic;
pub mod tokenstore;

pub use calibration::{calibrate, CalibConfig, Calibration};
pub use complexity::{region_complexity, ComplexityConfig, Region};
pub use encoder::{fit, loss_mse, FitConfig, FitError, FitReport};
pub use error::{Error, Result};
pub use gaussians::{clamp_geom, eval_gaussian, GaussianGeom, Token, TokenSet};
pub use imageio::{load_image, save_image, GradientMap, RasterImage};
pub use partition::{partition_image, Axis, PartitionConfig, PartitionResult, SplitRecord};
pub use quality::{metrics, psnr, ssim, MetricReport};
pub use renderer::{backward, render, FeatureMap, TokenGrad};
pub use scalar::Scalar;
pub use tokenstore::{read_tokens, write_tokens};

pub type GaussianGeomF32 = GaussianGeom<f32>;
pub type GaussianGeomF64 = GaussianGeom<f64>;
pub type TokenF32 = Token<f32>;
pub type TokenF64 = Token<f64>;
pub type TokenSetF32 = TokenSet<f32>;
pub type TokenSetF64 = TokenSet<f64>;
pub type FeatureMapF32 = FeatureMap<f32>;
pub type FeatureMapF64 = FeatureMap<f64>;
