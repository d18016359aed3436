//! Importance-sampling row sketches. A sketch S has rows e_i / sqrt(s p(i))
//! for indices i drawn i.i.d. from a distribution p; S A is then a rescaled
//! row subset of A. Chaining gives SQ access to (SA)† and hence column
//! sketches T, so the fully sketched core SAT stays small.

use std::sync::Arc;

use num_complex::Complex64;
use rand::RngCore;

use crate::dense::{CMatrix, CVector};
use crate::error::{Error, Result};
use crate::rng::{uniform_index, unit_f64};
use crate::sq::{
    OversampledMatrix, OversampledVector, SampleMatrix, SampleVector, VectorQuery,
};

/// A sampleable distribution over an index space with exactly computable
/// point probabilities.
pub trait ImportanceDist {
    fn len(&self) -> usize;
    fn draw(&self, rng: &mut dyn RngCore) -> usize;
    fn prob(&self, i: usize) -> f64;
}

/// D_v of a sampleable vector (or of a bound vector, for oversampled input).
pub struct VectorDist {
    v: Arc<dyn SampleVector>,
}

impl VectorDist {
    pub fn new(v: Arc<dyn SampleVector>) -> Self {
        Self { v }
    }

    pub fn of(v: &OversampledVector) -> Self {
        Self {
            v: v.bound().clone(),
        }
    }
}

impl ImportanceDist for VectorDist {
    fn len(&self) -> usize {
        self.v.len()
    }

    fn draw(&self, rng: &mut dyn RngCore) -> usize {
        self.v.sample(rng)
    }

    fn prob(&self, i: usize) -> f64 {
        self.v.entry(i).norm_sqr() / self.v.norm_sq()
    }
}

/// The row-norm distribution of a matrix bound.
pub struct RowNormDist {
    a: Arc<dyn SampleMatrix>,
}

impl RowNormDist {
    pub fn of(a: &OversampledMatrix) -> Self {
        Self {
            a: a.bound().clone(),
        }
    }
}

impl ImportanceDist for RowNormDist {
    fn len(&self) -> usize {
        self.a.shape().0
    }

    fn draw(&self, rng: &mut dyn RngCore) -> usize {
        self.a.sample_row(rng)
    }

    fn prob(&self, i: usize) -> f64 {
        self.a.row_norm_sq(i) / self.a.frob_sq()
    }
}

/// Uniform distribution, the importance distribution of the all-ones vector.
pub struct UniformDist {
    pub n: usize,
}

impl ImportanceDist for UniformDist {
    fn len(&self) -> usize {
        self.n
    }

    fn draw(&self, rng: &mut dyn RngCore) -> usize {
        uniform_index(rng, self.n)
    }

    fn prob(&self, _i: usize) -> f64 {
        1.0 / self.n as f64
    }
}

/// Equal mixture (p + q)/2 of two distributions over the same index space,
/// the sketching distribution for two-sided product approximation.
pub struct MixtureDist<'a> {
    pub a: &'a dyn ImportanceDist,
    pub b: &'a dyn ImportanceDist,
}

impl ImportanceDist for MixtureDist<'_> {
    fn len(&self) -> usize {
        self.a.len()
    }

    fn draw(&self, rng: &mut dyn RngCore) -> usize {
        if unit_f64(rng) < 0.5 {
            self.a.draw(rng)
        } else {
            self.b.draw(rng)
        }
    }

    fn prob(&self, i: usize) -> f64 {
        0.5 * (self.a.prob(i) + self.b.prob(i))
    }
}

/// One sampled row of a sketch: source index, the probability it was drawn
/// with, and the rescaling weight 1/sqrt(s p).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SketchRow {
    pub index: usize,
    pub prob: f64,
    pub weight: f64,
}

/// An importance-sampling sketch: s i.i.d. draws with their rescaling
/// weights. `phi` records the oversampling of the distribution used, when
/// known.
#[derive(Debug, Clone)]
pub struct RowSketch {
    source_len: usize,
    rows: Vec<SketchRow>,
    phi: Option<f64>,
}

impl RowSketch {
    pub fn draw(dist: &dyn ImportanceDist, s: usize, rng: &mut dyn RngCore) -> Self {
        assert!(s >= 1, "sketch needs at least one row");
        let rows = (0..s)
            .map(|_| {
                let index = dist.draw(rng);
                let prob = dist.prob(index);
                debug_assert!(prob > 0.0, "drew an index with zero probability");
                SketchRow {
                    index,
                    prob,
                    weight: 1.0 / (s as f64 * prob).sqrt(),
                }
            })
            .collect();
        Self {
            source_len: dist.len(),
            rows,
            phi: None,
        }
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = Some(phi);
        self
    }

    pub fn from_rows(source_len: usize, rows: Vec<SketchRow>) -> Result<Self> {
        for r in &rows {
            if !(r.weight.is_finite() && r.weight > 0.0) {
                return Err(Error::InvalidParam(format!(
                    "sketch weight {} at index {}",
                    r.weight, r.index
                )));
            }
        }
        Ok(Self {
            source_len,
            rows,
            phi: None,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn rows(&self) -> &[SketchRow] {
        &self.rows
    }

    pub fn phi(&self) -> Option<f64> {
        self.phi
    }

    /// Materialize S * Op for an operand queryable by source-row index:
    /// row k of the result is weight_k * Op(index_k, .).
    pub fn apply_rows(
        &self,
        width: usize,
        entry: impl Fn(usize, usize) -> Complex64,
    ) -> CMatrix {
        CMatrix::from_fn(self.rows.len(), width, |k, j| {
            let r = self.rows[k];
            Complex64::new(r.weight, 0.0) * entry(r.index, j)
        })
    }

    /// Materialize S v.
    pub fn apply_vector(&self, v: &dyn VectorQuery) -> CVector {
        CVector::from_fn(self.rows.len(), |k, _| {
            let r = self.rows[k];
            Complex64::new(r.weight, 0.0) * v.entry(r.index)
        })
    }
}

/// A sketched matrix R = SA held implicitly: the source handle plus the
/// sketch. Rows are materialized on demand; the column-side distribution of
/// Lemma-style chained access is available without touching all of A.
#[derive(Clone)]
pub struct SketchedMatrix {
    source: OversampledMatrix,
    sketch: RowSketch,
    degraded: bool,
}

impl SketchedMatrix {
    /// Chain SQ access through a sketch. For oversampled sources (phi > 1)
    /// the guarantee needs s >= 2 phi^2 ln(2/delta); smaller sketches are
    /// accepted but flagged as degraded.
    pub fn new(source: OversampledMatrix, sketch: RowSketch, delta: Option<f64>) -> Self {
        let phi = source.phi_or(1.0);
        let degraded = match delta {
            Some(d) if phi > 1.0 => {
                (sketch.len() as f64) < 2.0 * phi * phi * (2.0 / d).ln()
            }
            _ => false,
        };
        Self {
            source,
            sketch,
            degraded,
        }
    }

    pub fn source(&self) -> &OversampledMatrix {
        &self.source
    }

    pub fn sketch(&self) -> &RowSketch {
        &self.sketch
    }

    pub fn degraded(&self) -> bool {
        self.degraded
    }

    pub fn nrows(&self) -> usize {
        self.sketch.len()
    }

    pub fn ncols(&self) -> usize {
        self.source.shape().1
    }

    /// R(k, j) = weight_k * A(index_k, j).
    pub fn entry(&self, k: usize, j: usize) -> Complex64 {
        let r = self.sketch.rows()[k];
        Complex64::new(r.weight, 0.0) * self.source.entry(r.index, j)
    }

    /// Entry of the bound sketch S Abound.
    pub fn bound_entry(&self, k: usize, j: usize) -> Complex64 {
        let r = self.sketch.rows()[k];
        Complex64::new(r.weight, 0.0) * self.source.bound().entry(r.index, j)
    }

    pub fn bound_row_norm_sq(&self, k: usize) -> f64 {
        let r = self.sketch.rows()[k];
        r.weight * r.weight * self.source.bound().row_norm_sq(r.index)
    }

    /// ||S Abound||_F^2 = ||Abound||_F^2 exactly (the sketch is drawn from
    /// the bound's own row-norm distribution).
    pub fn bound_frob_sq(&self) -> f64 {
        self.source.bound_frob_sq()
    }

    /// ||SA||_F^2, exactly computable only when the source is not
    /// oversampled (the true row norms are then queryable).
    pub fn true_frob_sq(&self) -> Option<f64> {
        match self.source.phi() {
            Some(phi) if phi == 1.0 => Some(
                self.sketch
                    .rows()
                    .iter()
                    .map(|r| r.weight * r.weight * self.source.bound().row_norm_sq(r.index))
                    .sum(),
            ),
            _ => None,
        }
    }

    /// The chained column distribution: pick a sketch row uniformly, then a
    /// column from that row of the bound. Hits column j with probability
    /// ||[S Abound](., j)||^2 / ||Abound||_F^2.
    pub fn column_dist(&self) -> SketchColumnDist {
        SketchColumnDist {
            bound: self.source.bound().clone(),
            rows: self.sketch.rows().to_vec(),
            frob_sq: self.bound_frob_sq(),
        }
    }

    /// Materialize the core C = S A T for a column sketch T.
    pub fn materialize_core(&self, t: &RowSketch) -> CMatrix {
        CMatrix::from_fn(self.nrows(), t.len(), |k, l| {
            let col = t.rows()[l];
            Complex64::new(col.weight, 0.0) * self.entry(k, col.index)
        })
    }

    /// The k-th row of R as an oversampled vector (a rescaled row of A).
    pub fn row_handle(&self, k: usize) -> OversampledVector {
        let r = self.sketch.rows()[k];
        let row = crate::sq::row_vector(&self.source, r.index);
        scale_vector(&row, Complex64::new(r.weight, 0.0))
    }

    /// Dense R, for oracle comparisons at moderate sizes.
    pub fn to_dense(&self) -> CMatrix {
        self.sketch
            .apply_rows(self.ncols(), |i, j| self.source.entry(i, j))
    }
}

/// Scale an oversampled vector by a constant (bound scales by |c|).
pub fn scale_vector(v: &OversampledVector, factor: Complex64) -> OversampledVector {
    crate::sq::linear_combination(&[(v.clone(), factor)]).expect("single-term combination")
}

/// Column distribution of a sketched matrix; see
/// [`SketchedMatrix::column_dist`].
pub struct SketchColumnDist {
    bound: Arc<dyn SampleMatrix>,
    rows: Vec<SketchRow>,
    frob_sq: f64,
}

impl ImportanceDist for SketchColumnDist {
    fn len(&self) -> usize {
        self.bound.shape().1
    }

    fn draw(&self, rng: &mut dyn RngCore) -> usize {
        let k = uniform_index(rng, self.rows.len());
        self.bound.sample_in_row(self.rows[k].index, rng)
    }

    fn prob(&self, j: usize) -> f64 {
        let col_norm_sq: f64 = self
            .rows
            .iter()
            .map(|r| r.weight * r.weight * self.bound.entry(r.index, j).norm_sqr())
            .sum();
        col_norm_sq / self.frob_sq
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;
    use crate::sq::{Mode, SqMatrix};
    use crate::stats::chi_square_gof;

    fn random_matrix(m: usize, n: usize, seed: u64) -> OversampledMatrix {
        let mut rng = rng_for(seed, 7);
        let rows: Vec<Vec<Complex64>> = (0..m)
            .map(|_| {
                (0..n)
                    .map(|_| Complex64::new(crate::rng::standard_normal(&mut rng), 0.0))
                    .collect()
            })
            .collect();
        OversampledMatrix::exact(Arc::new(SqMatrix::build(rows, Mode::Static).unwrap()))
    }

    #[test]
    fn identity_sketch_weights() {
        // A = I2, s = 4: every row has p = 1/2, weight 1/sqrt(4 * 0.5).
        let a = random_identity(2);
        let dist = RowNormDist::of(&a);
        let mut rng = rng_for(1, 0);
        let sketch = RowSketch::draw(&dist, 4, &mut rng);
        for r in sketch.rows() {
            assert!((r.weight - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        }
    }

    fn random_identity(n: usize) -> OversampledMatrix {
        let rows: Vec<Vec<Complex64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
                    .collect()
            })
            .collect();
        OversampledMatrix::exact(Arc::new(SqMatrix::build(rows, Mode::Static).unwrap()))
    }

    #[test]
    fn frobenius_preserved_exactly_at_phi_one() {
        let a = random_matrix(40, 12, 2);
        let dist = RowNormDist::of(&a);
        let mut rng = rng_for(3, 0);
        for s in [1usize, 5, 50] {
            let sketch = RowSketch::draw(&dist, s, &mut rng);
            let sk = SketchedMatrix::new(a.clone(), sketch, None);
            let frob = sk.true_frob_sq().unwrap();
            assert!(
                (frob - a.bound_frob_sq()).abs() < 1e-9 * a.bound_frob_sq(),
                "s = {s}: {frob} vs {}",
                a.bound_frob_sq()
            );
        }
    }

    #[test]
    fn sketched_rows_are_rescaled_source_rows() {
        let a = random_matrix(20, 8, 4);
        let mut rng = rng_for(5, 0);
        let sketch = RowSketch::draw(&RowNormDist::of(&a), 6, &mut rng);
        let sk = SketchedMatrix::new(a.clone(), sketch, None);
        for k in 0..6 {
            let r = sk.sketch().rows()[k];
            for j in 0..8 {
                let expect = Complex64::new(r.weight, 0.0) * a.entry(r.index, j);
                assert_eq!(sk.entry(k, j), expect);
            }
        }
    }

    #[test]
    fn chained_column_distribution_matches_exact_norms() {
        let a = random_matrix(30, 10, 6);
        let mut rng = rng_for(7, 0);
        let sketch = RowSketch::draw(&RowNormDist::of(&a), 25, &mut rng);
        let sk = SketchedMatrix::new(a.clone(), sketch, None);
        let dist = sk.column_dist();

        // Exact distribution: column norms of the materialized R.
        let r = sk.to_dense();
        let frob_sq = r.norm_squared();
        let probs: Vec<f64> = (0..10).map(|j| r.column(j).norm_squared() / frob_sq).collect();
        for (j, &p) in probs.iter().enumerate() {
            assert!((dist.prob(j) - p).abs() < 1e-9, "column {j}");
        }

        let mut counts = vec![0u64; 10];
        for _ in 0..120_000 {
            counts[dist.draw(&mut rng)] += 1;
        }
        assert!(chi_square_gof(&counts, &probs, 0.001));
    }

    #[test]
    fn identity_columns_uniform_over_sampled_support() {
        let a = random_identity(4);
        let mut rng = rng_for(8, 0);
        let sketch = RowSketch::draw(&RowNormDist::of(&a), 200, &mut rng);
        let sk = SketchedMatrix::new(a.clone(), sketch, None);
        let dist = sk.column_dist();
        // For the identity, column j mass is the number of times row j was
        // sampled (times weight^2): empirical draw frequencies must match.
        let probs: Vec<f64> = (0..4).map(|j| dist.prob(j)).collect();
        let mut counts = vec![0u64; 4];
        for _ in 0..80_000 {
            counts[dist.draw(&mut rng)] += 1;
        }
        assert!(chi_square_gof(&counts, &probs, 0.001));
    }

    #[test]
    fn degraded_flag_for_undersized_oversampled_chain() {
        let a = random_matrix(20, 5, 9);
        // Fake an oversampled handle: double bound means phi = 4.
        let dense = a.query().to_dense();
        let bound_rows: Vec<Vec<Complex64>> = (0..20)
            .map(|i| (0..5).map(|j| dense[(i, j)] * Complex64::new(2.0, 0.0)).collect())
            .collect();
        let mut rng = rng_for(10, 0);
        let handle = OversampledMatrix::with_bound(
            a.query().clone(),
            Arc::new(SqMatrix::build(bound_rows, Mode::Static).unwrap()),
            Some(dense.norm_squared()),
            &mut rng,
        )
        .unwrap();
        assert!((handle.phi().unwrap() - 4.0).abs() < 1e-9);
        let small = RowSketch::draw(&RowNormDist::of(&handle), 3, &mut rng);
        assert!(SketchedMatrix::new(handle.clone(), small, Some(0.1)).degraded());
        let need = (2.0 * 16.0 * (2.0f64 / 0.1).ln()).ceil() as usize;
        let big = RowSketch::draw(&RowNormDist::of(&handle), need, &mut rng);
        assert!(!SketchedMatrix::new(handle, big, Some(0.1)).degraded());
    }

    #[test]
    fn mixture_probability_is_average() {
        let a = random_matrix(15, 6, 11);
        let rd = RowNormDist::of(&a);
        let ud = UniformDist { n: 15 };
        let mix = MixtureDist { a: &rd, b: &ud };
        for i in 0..15 {
            let expect = 0.5 * (rd.prob(i) + 1.0 / 15.0);
            assert!((mix.prob(i) - expect).abs() < 1e-12);
        }
        let probs: Vec<f64> = (0..15).map(|i| mix.prob(i)).collect();
        let mut rng = rng_for(12, 0);
        let mut counts = vec![0u64; 15];
        for _ in 0..100_000 {
            counts[mix.draw(&mut rng)] += 1;
        }
        assert!(chi_square_gof(&counts, &probs, 0.001));
    }
}
