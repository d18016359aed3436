//! Importance-sampling sketches and the estimation primitives built on them.

pub mod estimate;
pub mod isometry;
pub mod matmul;
pub mod row_sketch;

pub use estimate::{
    bilinear_form_estimate, chained_access, estimate_singular_values, inner_product_estimate,
    inner_product_samples, median_chunks, median_of_means, trace_product_estimate, BilinearPool,
};
pub use isometry::{projective_isometry_factor, IsometryFactor, Truncation};
pub use matmul::{
    approx_gram_spectral, joint_sketch_size, product_estimate, sketch_joint, sketch_onesided,
    JointProductAccess, SpectralCertificate,
};
pub use row_sketch::{
    ImportanceDist, MixtureDist, RowNormDist, RowSketch, SketchColumnDist, SketchRow,
    SketchedMatrix, UniformDist, VectorDist,
};
