//! Scalar Gaussian functions, truncated sampling, random streams and
//! weighted discrete sampling.

pub mod discrete;
pub mod ks;
pub mod rng;
pub mod special;
pub mod truncated;

pub use discrete::DiscreteSampler;
pub use rng::{RandomStream, SampleCursor, StreamRng};
pub use special::{
    log_normal_cdf, normal_cdf, normal_pdf, normal_quantile, normal_quantile_from_log, normal_sf,
};
pub use truncated::{dot, sample_halfspace_conditional, sample_upper_truncated_normal};
