//! Deep feature perturbation.
//!
//! Whitening and coloring transforms over vectorized feature maps, with an
//! orthogonal noise matrix inserted into the coloring step so that every
//! noise draw gives a different feature map with exactly the same Gram
//! matrix. Around that kernel sit a symmetric eigensolver (with an
//! independent Jacobi reference), a seeded orthogonal noise generator, an
//! exactly invertible patch codec with a multi-level stylization driver, and
//! pixel-space diversity metrics.
//!
//! ```
//! use dfp_core::{center, gram, pwct, FeatureMap, NoiseSpec, PwctParams};
//!
//! let content = FeatureMap::from_rows(&[[0.3, 1.2, -0.7, 0.1, 0.9], [1.1, -0.4, 0.2, 0.8, -1.5]])?;
//! let style = FeatureMap::from_rows(&[[2.0, -1.0, 0.5, 1.5, -0.4], [0.3, 0.9, -1.2, 0.4, 0.6]])?;
//! let params = PwctParams { lambda: 1.0, alpha: 1.0, ..PwctParams::default() };
//!
//! let a = pwct(&content, &style, &PwctParams { noise: NoiseSpec::standard_normal(1), ..params })?;
//! let b = pwct(&content, &style, &PwctParams { noise: NoiseSpec::standard_normal(2), ..params })?;
//! assert!(a.distance(&b)? > 0.0);
//! let (ga, gb) = (gram(&center(&a).0), gram(&center(&b).0));
//! assert!(ga.relative_error(&gb)? < 1e-8);
//! # Ok::<(), dfp_core::Error>(())
//! ```

mod dense;
mod error;

pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod rng;
pub mod synth;
pub mod tensor;
pub mod transform;

pub use error::{Error, Result};
pub use linalg::{
    jacobi_eig, orthogonal_noise, raw_noise, sym_eig, Distribution, EigenFactorization,
    Factorization, NoiseSpec, OrthogonalMatrix, DEFAULT_THRESHOLD,
};
pub use metrics::{
    diversity_score, gram_distance, in_style_space, pixel_distance, style_loss, DiversityReport,
    PairDistance,
};
pub use pipeline::{
    decode, decode_pixels, default_config, encode, encode_pixels, stylize, CodecLevel, LevelSpec,
    PipelineConfig, Profile,
};
pub use tensor::{
    center, feature_to_image, gram, image_to_feature, load_array, load_image, recenter, save_array,
    save_image, Array, FeatureMap, GramMatrix, Image, Matrix, MeanVector,
};
pub use transform::{
    blend_content, blend_diversity, color, perturbed_color, pwct, pwct_detailed, whiten,
    PwctDiagnostics, PwctOutput, PwctParams,
};
