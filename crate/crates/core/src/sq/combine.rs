//! Closure operations on oversampled handles: linear combinations, outer
//! products, matrix linear combinations, and the row/column views that let
//! sketched decompositions expose their outputs as oversampled vectors.

use std::sync::Arc;

use num_complex::Complex64;
use rand::RngCore;

use super::alias::AliasTable;
use super::matrix::{MatrixQuery, SampleMatrix};
use super::oversampled::{OversampledMatrix, OversampledVector};
use super::vector::{SampleVector, VectorQuery};
use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Linear combinations of vectors

struct CombinationQuery {
    terms: Vec<(Arc<dyn VectorQuery>, Complex64)>,
    len: usize,
}

impl VectorQuery for CombinationQuery {
    fn len(&self) -> usize {
        self.len
    }

    fn entry(&self, i: usize) -> Complex64 {
        self.terms.iter().map(|(v, l)| l * v.entry(i)).sum()
    }
}

struct CombinationBound {
    terms: Vec<(Arc<dyn SampleVector>, f64)>,
    picker: AliasTable,
    k: f64,
    norm_sq: f64,
    len: usize,
}

impl VectorQuery for CombinationBound {
    fn len(&self) -> usize {
        self.len
    }

    fn entry(&self, i: usize) -> Complex64 {
        let s: f64 = self
            .terms
            .iter()
            .map(|(v, l)| l * l * v.entry(i).norm_sqr())
            .sum();
        Complex64::new((self.k * s).sqrt(), 0.0)
    }
}

impl SampleVector for CombinationBound {
    fn sample(&self, rng: &mut dyn RngCore) -> usize {
        let t = self.picker.sample(rng);
        self.terms[t].0.sample(rng)
    }

    fn norm_sq(&self) -> f64 {
        self.norm_sq
    }
}

/// Oversampled access to sum lambda_t v_t. The bound is the root-sum-square
/// envelope sqrt(k * sum |lambda_t bound_t(i)|^2); sampling picks a term with
/// probability proportional to ||lambda_t bound_t||^2 and delegates.
///
/// The output norm is generally unknown (attach one with
/// [`OversampledVector::with_known_norm_sq`] to obtain a finite phi).
pub fn linear_combination(terms: &[(OversampledVector, Complex64)]) -> Result<OversampledVector> {
    if terms.is_empty() {
        return Err(Error::InvalidParam("empty linear combination".into()));
    }
    let len = terms[0].0.len();
    for (v, _) in terms {
        if v.len() != len {
            return Err(Error::ShapeMismatch {
                expected: format!("{len}"),
                got: format!("{}", v.len()),
            });
        }
    }
    let k = terms.len() as f64;
    let weights: Vec<f64> = terms
        .iter()
        .map(|(v, l)| l.norm_sqr() * v.bound_norm_sq())
        .collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::ExactCancellation);
    }
    let query = Arc::new(CombinationQuery {
        terms: terms
            .iter()
            .map(|(v, l)| (v.query().clone(), *l))
            .collect(),
        len,
    });
    let bound = Arc::new(CombinationBound {
        terms: terms
            .iter()
            .map(|(v, l)| (v.bound().clone(), l.norm()))
            .collect(),
        picker: AliasTable::new(&weights),
        k,
        norm_sq: k * total,
        len,
    });
    Ok(OversampledVector::trusted(query, bound, None))
}

/// The oversampling ratio predicted by the closure lemma when every component
/// norm and the combined norm are known:
/// phi = k * sum phi_t ||lambda_t v_t||^2 / ||sum lambda_t v_t||^2.
pub fn combination_phi(
    phis: &[f64],
    lambdas: &[Complex64],
    component_norm_sqs: &[f64],
    combined_norm_sq: f64,
) -> f64 {
    let k = phis.len() as f64;
    let num: f64 = phis
        .iter()
        .zip(lambdas)
        .zip(component_norm_sqs)
        .map(|((p, l), n)| p * l.norm_sqr() * n)
        .sum();
    k * num / combined_norm_sq
}

// ---------------------------------------------------------------------------
// Outer products

struct OuterQuery {
    u: Arc<dyn VectorQuery>,
    v: Arc<dyn VectorQuery>,
}

impl MatrixQuery for OuterQuery {
    fn shape(&self) -> (usize, usize) {
        (self.u.len(), self.v.len())
    }

    fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.u.entry(i) * self.v.entry(j).conj()
    }
}

struct OuterBound {
    u: Arc<dyn SampleVector>,
    v: Arc<dyn SampleVector>,
}

impl MatrixQuery for OuterBound {
    fn shape(&self) -> (usize, usize) {
        (self.u.len(), self.v.len())
    }

    fn entry(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.u.entry(i).norm() * self.v.entry(j).norm(), 0.0)
    }
}

impl SampleMatrix for OuterBound {
    fn sample_row(&self, rng: &mut dyn RngCore) -> usize {
        self.u.sample(rng)
    }

    fn sample_in_row(&self, _i: usize, rng: &mut dyn RngCore) -> usize {
        self.v.sample(rng)
    }

    fn row_norm_sq(&self, i: usize) -> f64 {
        self.u.entry(i).norm_sqr() * self.v.norm_sq()
    }

    fn frob_sq(&self) -> f64 {
        self.u.norm_sq() * self.v.norm_sq()
    }
}

/// Oversampled access to the outer product u v†. The bound is the outer
/// product of the bounds; phi multiplies.
pub fn outer_product(u: &OversampledVector, v: &OversampledVector) -> OversampledMatrix {
    let known = match (u.known_norm_sq(), v.known_norm_sq()) {
        (Some(a), Some(b)) => Some(a * b),
        _ => None,
    };
    OversampledMatrix::trusted(
        Arc::new(OuterQuery {
            u: u.query().clone(),
            v: v.query().clone(),
        }),
        Arc::new(OuterBound {
            u: u.bound().clone(),
            v: v.bound().clone(),
        }),
        known,
    )
}

// ---------------------------------------------------------------------------
// Linear combinations of matrices

struct MatrixCombinationQuery {
    terms: Vec<(Arc<dyn MatrixQuery>, Complex64)>,
    shape: (usize, usize),
}

impl MatrixQuery for MatrixCombinationQuery {
    fn shape(&self) -> (usize, usize) {
        self.shape
    }

    fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.terms.iter().map(|(a, l)| l * a.entry(i, j)).sum()
    }
}

struct MatrixCombinationBound {
    terms: Vec<(Arc<dyn SampleMatrix>, f64)>,
    picker: AliasTable,
    tau: f64,
    frob_sq: f64,
    shape: (usize, usize),
}

impl MatrixQuery for MatrixCombinationBound {
    fn shape(&self) -> (usize, usize) {
        self.shape
    }

    fn entry(&self, i: usize, j: usize) -> Complex64 {
        let s: f64 = self
            .terms
            .iter()
            .map(|(a, l)| l * l * a.entry(i, j).norm_sqr())
            .sum();
        Complex64::new((self.tau * s).sqrt(), 0.0)
    }
}

impl SampleMatrix for MatrixCombinationBound {
    fn sample_row(&self, rng: &mut dyn RngCore) -> usize {
        let t = self.picker.sample(rng);
        self.terms[t].0.sample_row(rng)
    }

    fn sample_in_row(&self, i: usize, rng: &mut dyn RngCore) -> usize {
        // Second level: re-weight terms by their mass within row i.
        let weights: Vec<f64> = self
            .terms
            .iter()
            .map(|(a, l)| l * l * a.row_norm_sq(i))
            .collect();
        let total: f64 = weights.iter().sum();
        assert!(total > 0.0, "sampling within a zero row of a combination");
        let mut u = crate::rng::unit_f64(rng) * total;
        let mut t = 0;
        for (idx, w) in weights.iter().enumerate() {
            if u < *w {
                t = idx;
                break;
            }
            u -= w;
            t = idx;
        }
        self.terms[t].0.sample_in_row(i, rng)
    }

    fn row_norm_sq(&self, i: usize) -> f64 {
        self.tau
            * self
                .terms
                .iter()
                .map(|(a, l)| l * l * a.row_norm_sq(i))
                .sum::<f64>()
    }

    fn frob_sq(&self) -> f64 {
        self.frob_sq
    }
}

/// Oversampled access to sum lambda_t A_t via two-level sampling: a term,
/// then an entry of that term's bound.
pub fn matrix_linear_combination(
    terms: &[(OversampledMatrix, Complex64)],
) -> Result<OversampledMatrix> {
    if terms.is_empty() {
        return Err(Error::InvalidParam("empty matrix combination".into()));
    }
    let shape = terms[0].0.shape();
    for (a, _) in terms {
        if a.shape() != shape {
            return Err(Error::ShapeMismatch {
                expected: format!("{shape:?}"),
                got: format!("{:?}", a.shape()),
            });
        }
    }
    let tau = terms.len() as f64;
    let weights: Vec<f64> = terms
        .iter()
        .map(|(a, l)| l.norm_sqr() * a.bound_frob_sq())
        .collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::ExactCancellation);
    }
    let query = Arc::new(MatrixCombinationQuery {
        terms: terms
            .iter()
            .map(|(a, l)| (a.query().clone(), *l))
            .collect(),
        shape,
    });
    let bound = Arc::new(MatrixCombinationBound {
        terms: terms
            .iter()
            .map(|(a, l)| (a.bound().clone(), l.norm()))
            .collect(),
        picker: AliasTable::new(&weights),
        tau,
        frob_sq: tau * total,
        shape,
    });
    Ok(OversampledMatrix::trusted(query, bound, None))
}

// ---------------------------------------------------------------------------
// Row and column views

struct RowView {
    a: Arc<dyn MatrixQuery>,
    i: usize,
    conj: bool,
}

impl VectorQuery for RowView {
    fn len(&self) -> usize {
        self.a.shape().1
    }

    fn entry(&self, j: usize) -> Complex64 {
        let z = self.a.entry(self.i, j);
        if self.conj {
            z.conj()
        } else {
            z
        }
    }
}

struct RowBoundView {
    a: Arc<dyn SampleMatrix>,
    i: usize,
}

impl VectorQuery for RowBoundView {
    fn len(&self) -> usize {
        self.a.shape().1
    }

    fn entry(&self, j: usize) -> Complex64 {
        Complex64::new(self.a.entry(self.i, j).norm(), 0.0)
    }
}

impl SampleVector for RowBoundView {
    fn sample(&self, rng: &mut dyn RngCore) -> usize {
        self.a.sample_in_row(self.i, rng)
    }

    fn norm_sq(&self) -> f64 {
        self.a.row_norm_sq(self.i)
    }
}

fn row_known_norm(a: &OversampledMatrix, i: usize) -> Option<f64> {
    // Exact row norms are only available when the handle is not oversampled.
    match a.phi() {
        Some(phi) if phi == 1.0 => Some(a.bound().row_norm_sq(i)),
        _ => None,
    }
}

/// The i-th row of A as an oversampled vector.
pub fn row_vector(a: &OversampledMatrix, i: usize) -> OversampledVector {
    OversampledVector::trusted(
        Arc::new(RowView {
            a: a.query().clone(),
            i,
            conj: false,
        }),
        Arc::new(RowBoundView {
            a: a.bound().clone(),
            i,
        }),
        row_known_norm(a, i),
    )
}

/// The conjugated i-th row of A (i.e. the i-th column of A†) as an
/// oversampled vector. Same sampling distribution as the row itself.
pub fn conj_row_vector(a: &OversampledMatrix, i: usize) -> OversampledVector {
    OversampledVector::trusted(
        Arc::new(RowView {
            a: a.query().clone(),
            i,
            conj: true,
        }),
        Arc::new(RowBoundView {
            a: a.bound().clone(),
            i,
        }),
        row_known_norm(a, i),
    )
}

struct ColumnView {
    a: Arc<dyn MatrixQuery>,
    j: usize,
}

impl VectorQuery for ColumnView {
    fn len(&self) -> usize {
        self.a.shape().0
    }

    fn entry(&self, i: usize) -> Complex64 {
        self.a.entry(i, self.j)
    }
}

struct RowNormBoundView {
    a: Arc<dyn SampleMatrix>,
}

impl VectorQuery for RowNormBoundView {
    fn len(&self) -> usize {
        self.a.shape().0
    }

    fn entry(&self, i: usize) -> Complex64 {
        Complex64::new(self.a.row_norm_sq(i).sqrt(), 0.0)
    }
}

impl SampleVector for RowNormBoundView {
    fn sample(&self, rng: &mut dyn RngCore) -> usize {
        self.a.sample_row(rng)
    }

    fn norm_sq(&self) -> f64 {
        self.a.frob_sq()
    }
}

/// The j-th column of A as an oversampled vector, bounded entrywise by the
/// vector of row norms: |A(i,j)| <= ||bound(i,.)||. The resulting phi is
/// ||bound||_F^2 / ||A(.,j)||^2.
pub fn column_vector(a: &OversampledMatrix, j: usize) -> OversampledVector {
    OversampledVector::trusted(
        Arc::new(ColumnView {
            a: a.query().clone(),
            j,
        }),
        Arc::new(RowNormBoundView {
            a: a.bound().clone(),
        }),
        None,
    )
}
