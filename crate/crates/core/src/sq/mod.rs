//! Sampling-and-query access structures and their closure operations.

pub mod alias;
pub mod combine;
pub mod matrix;
pub mod oversampled;
pub mod tree;
pub mod vector;

pub use alias::AliasTable;
pub use combine::{
    column_vector, combination_phi, conj_row_vector, linear_combination,
    matrix_linear_combination, outer_product, row_vector,
};
pub use matrix::{MatrixQuery, SampleMatrix, SqMatrix};
pub use oversampled::{OversampledMatrix, OversampledVector};
pub use tree::CumulativeTree;
pub use vector::{Mode, SampleVector, SqVector, VectorQuery};
