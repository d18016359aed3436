//! Approximate matrix products from importance-sampling sketches:
//! X† S† S Y is an unbiased estimator of X† Y with variance phi/s
//! ||X||_F^2 ||Y||_F^2, exponentially concentrated when both sides'
//! distributions enter the sketch.

use std::sync::Arc;

use num_complex::Complex64;
use rand::RngCore;

use super::row_sketch::{ImportanceDist, MixtureDist, RowSketch};
use crate::dense::CMatrix;
use crate::sq::{MatrixQuery, OversampledMatrix, SampleMatrix};

/// Sketch for the one-sided product bound: drawn from a single side's
/// importance distribution.
pub fn sketch_onesided(dist: &dyn ImportanceDist, s: usize, rng: &mut dyn RngCore) -> RowSketch {
    RowSketch::draw(dist, s, rng)
}

/// Sketch for the two-sided bound: drawn from the equal mixture of the two
/// sides' distributions.
pub fn sketch_joint(
    d1: &dyn ImportanceDist,
    d2: &dyn ImportanceDist,
    s: usize,
    rng: &mut dyn RngCore,
) -> RowSketch {
    let mix = MixtureDist { a: d1, b: d2 };
    RowSketch::draw(&mix, s, rng)
}

/// Sketch rows needed so that ||X† S† S Y - X† Y||_F < eps ||X||_F ||Y||_F
/// holds with probability 1 - delta (two-sided bound).
pub fn joint_sketch_size(phi1: f64, phi2: f64, eps: f64, delta: f64) -> usize {
    (8.0 * phi1 * phi2 * (2.0 / delta).ln() / (eps * eps))
        .ceil()
        .max(1.0) as usize
}

/// Materialize the product estimator (S X)† (S Y) for operands queryable by
/// source index. `x_entry(i, a)` is X(i, a), similarly for Y.
pub fn product_estimate(
    sketch: &RowSketch,
    x_cols: usize,
    x_entry: impl Fn(usize, usize) -> Complex64,
    y_cols: usize,
    y_entry: impl Fn(usize, usize) -> Complex64,
) -> CMatrix {
    let sx = sketch.apply_rows(x_cols, x_entry);
    let sy = sketch.apply_rows(y_cols, y_entry);
    sx.adjoint() * sy
}

/// Spectral-error certificate for the Gram estimator A† S† S A. The hidden
/// constant of the underlying concentration theorem is taken as `constant`
/// (default 1) and validated empirically.
#[derive(Debug, Clone)]
pub struct SpectralCertificate {
    pub s: usize,
    pub phi: f64,
    pub delta: f64,
    pub constant: f64,
    /// Claimed bound on ||A† S† S A - A† A||.
    pub bound: f64,
}

/// Draw a Gram sketch of A and compute its spectral-error certificate
/// sqrt(phi^2 log s log(1/delta) / s) * ||A|| * ||A||_F.
pub fn approx_gram_spectral(
    a: &OversampledMatrix,
    spectral_norm: f64,
    s: usize,
    delta: f64,
    constant: f64,
    rng: &mut dyn RngCore,
) -> (RowSketch, SpectralCertificate) {
    let dist = super::row_sketch::RowNormDist::of(a);
    let sketch = RowSketch::draw(&dist, s, rng);
    let phi = a.phi_or(1.0);
    let frob = a.bound_frob_sq().sqrt() / phi.sqrt();
    let bound = constant
        * (phi * phi * (s.max(2) as f64).ln() * (1.0 / delta).ln() / s as f64).sqrt()
        * spectral_norm
        * frob;
    (
        sketch,
        SpectralCertificate {
            s,
            phi,
            delta,
            constant,
            bound,
        },
    )
}

/// Oversampled access to the product estimate M = X† S† S Y per the
/// approximate-closure construction: M is a linear combination of outer
/// products of sketched bound rows, with
/// |Mbound(i,j)|^2 = s * sum_l |[S Xbound](l,i)|^2 |[S Ybound](l,j)|^2.
pub struct JointProductAccess {
    x: OversampledMatrix,
    y: OversampledMatrix,
    sketch: RowSketch,
}

impl JointProductAccess {
    pub fn new(x: OversampledMatrix, y: OversampledMatrix, sketch: RowSketch) -> Self {
        Self { x, y, sketch }
    }

    /// Wrap into an oversampled matrix handle (query side computes entries
    /// with s queries to each operand; bound side samples in two levels).
    pub fn into_handle(self) -> OversampledMatrix {
        let query = Arc::new(JointProductQuery {
            x: self.x.clone(),
            y: self.y.clone(),
            sketch: self.sketch.clone(),
        });
        let bound = Arc::new(JointProductBound {
            x: self.x.bound().clone(),
            y: self.y.bound().clone(),
            sketch: self.sketch,
        });
        OversampledMatrix::trusted(query, bound, None)
    }
}

struct JointProductQuery {
    x: OversampledMatrix,
    y: OversampledMatrix,
    sketch: RowSketch,
}

impl MatrixQuery for JointProductQuery {
    fn shape(&self) -> (usize, usize) {
        (self.x.shape().1, self.y.shape().1)
    }

    fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.sketch
            .rows()
            .iter()
            .map(|r| {
                let w = Complex64::new(r.weight * r.weight, 0.0);
                self.x.entry(r.index, i).conj() * self.y.entry(r.index, j) * w
            })
            .sum()
    }
}

struct JointProductBound {
    x: Arc<dyn SampleMatrix>,
    y: Arc<dyn SampleMatrix>,
    sketch: RowSketch,
}

impl JointProductBound {
    fn term_weight(&self, l: usize) -> f64 {
        let r = self.sketch.rows()[l];
        let w4 = r.weight * r.weight * r.weight * r.weight;
        w4 * self.x.row_norm_sq(r.index) * self.y.row_norm_sq(r.index)
    }
}

impl MatrixQuery for JointProductBound {
    fn shape(&self) -> (usize, usize) {
        (self.x.shape().1, self.y.shape().1)
    }

    fn entry(&self, i: usize, j: usize) -> Complex64 {
        let s = self.sketch.len() as f64;
        let sum: f64 = self
            .sketch
            .rows()
            .iter()
            .map(|r| {
                let w2 = r.weight * r.weight;
                w2 * w2
                    * self.x.entry(r.index, i).norm_sqr()
                    * self.y.entry(r.index, j).norm_sqr()
            })
            .sum();
        Complex64::new((s * sum).sqrt(), 0.0)
    }
}

impl SampleMatrix for JointProductBound {
    fn sample_row(&self, rng: &mut dyn RngCore) -> usize {
        // Term l with probability proportional to
        // |w_l|^4 ||X(i_l,.)||^2 ||Y(i_l,.)||^2, then a column of X's row.
        let weights: Vec<f64> = (0..self.sketch.len()).map(|l| self.term_weight(l)).collect();
        let total: f64 = weights.iter().sum();
        let mut u = crate::rng::unit_f64(rng) * total;
        let mut pick = 0;
        for (l, w) in weights.iter().enumerate() {
            if u < *w {
                pick = l;
                break;
            }
            u -= w;
            pick = l;
        }
        self.x.sample_in_row(self.sketch.rows()[pick].index, rng)
    }

    fn sample_in_row(&self, i: usize, rng: &mut dyn RngCore) -> usize {
        let weights: Vec<f64> = self
            .sketch
            .rows()
            .iter()
            .map(|r| {
                let w2 = r.weight * r.weight;
                w2 * w2 * self.x.entry(r.index, i).norm_sqr() * self.y.row_norm_sq(r.index)
            })
            .collect();
        let total: f64 = weights.iter().sum();
        assert!(total > 0.0, "zero row in product bound");
        let mut u = crate::rng::unit_f64(rng) * total;
        let mut pick = 0;
        for (l, w) in weights.iter().enumerate() {
            if u < *w {
                pick = l;
                break;
            }
            u -= w;
            pick = l;
        }
        self.y.sample_in_row(self.sketch.rows()[pick].index, rng)
    }

    fn row_norm_sq(&self, i: usize) -> f64 {
        let s = self.sketch.len() as f64;
        s * self
            .sketch
            .rows()
            .iter()
            .map(|r| {
                let w2 = r.weight * r.weight;
                w2 * w2 * self.x.entry(r.index, i).norm_sqr() * self.y.row_norm_sq(r.index)
            })
            .sum::<f64>()
    }

    fn frob_sq(&self) -> f64 {
        let s = self.sketch.len() as f64;
        s * (0..self.sketch.len())
            .map(|l| self.term_weight(l))
            .sum::<f64>()
    }
}
