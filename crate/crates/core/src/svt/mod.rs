//! Singular value and eigenvalue transformation engines.

pub mod eigen;
pub mod even;
pub mod functions;
pub mod generic;
pub mod qsvt;

pub use eigen::{eigen_transform, EigenDecompApprox, EigenTransformParams};
pub use even::{
    even_svt, EvenSvtParams, NormMode, RurDecomposition, RurDiagnostics, SketchSizes,
};
pub use functions::{HamiltonianMode, ScalarFunction};
pub use qsvt::{
    envelope_bounds, qsvt_apply, EnvelopeBounds, Parity, QsvtInnerSizes, QsvtOutput, QsvtParams,
    QsvtPolynomial,
};
pub use generic::{generic_svt, CurDecomposition, GenericSvtParams};
