//! The dequantized application pipelines, each composed from the SQ access,
//! sketch, and SVT primitives and returning SQ-style outputs plus a
//! guarantee manifest.

pub mod clustering;
pub mod common;
pub mod discriminant;
pub mod hamiltonian;
pub mod pca;
pub mod recommend;
pub mod regression;
pub mod sdp;
pub mod svm;

pub use clustering::{build_cluster_instance, centroid_distance, centroid_distance_sq};
pub use common::{DenseMatrixQuery, DenseVectorQuery, ThresholdSpec};
pub use discriminant::{discriminant_analysis, DiscriminantOutput, DiscriminantParams};
pub use hamiltonian::{hamiltonian_evolve, EvolveMode, HamiltonianOutput, HamiltonianParams};
pub use pca::{pca, PcaOutput, PcaParams};
pub use recommend::{recommend, RecommendOutput, RecommendParams};
pub use regression::{solve_regularized, RegressionOutput, RegressionParams};
pub use sdp::{
    gibbs_trace_estimates, sdp_feasibility, sdp_guarantee, GibbsBranch, GibbsParams,
    GibbsStateDescription, SdpInstance, SdpParams, SdpVerdict,
};
pub use svm::{svm_train, svm_train_alt, SvmAltOutput, SvmAltParams, SvmOutput, SvmParams};
