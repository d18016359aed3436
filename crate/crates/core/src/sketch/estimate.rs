//! Median-of-means estimators over importance samples: inner products,
//! trace products, bilinear forms, and singular-value estimates from the
//! fully sketched core.

use num_complex::Complex64;
use rand::RngCore;

use super::row_sketch::{ImportanceDist, RowNormDist, RowSketch, SketchedMatrix};
use crate::error::{Error, Result};
use crate::sq::{MatrixQuery, OversampledMatrix, OversampledVector, VectorQuery};

/// Component-wise median of `chunks` means of `per_chunk` draws.
pub fn median_of_means(
    per_chunk: usize,
    chunks: usize,
    rng: &mut dyn RngCore,
    mut draw: impl FnMut(&mut dyn RngCore) -> Complex64,
) -> Complex64 {
    let mut res = Vec::with_capacity(chunks);
    let mut ims = Vec::with_capacity(chunks);
    for _ in 0..chunks.max(1) {
        let mut acc = Complex64::new(0.0, 0.0);
        for _ in 0..per_chunk.max(1) {
            acc += draw(rng);
        }
        let mean = acc / per_chunk.max(1) as f64;
        res.push(mean.re);
        ims.push(mean.im);
    }
    Complex64::new(median(&mut res), median(&mut ims))
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Number of samples per mean for the inner-product estimator:
/// 8 phi ||u||^2 ||v||^2 / eps^2, expressed through the known bound norm.
pub fn inner_product_samples(bound_norm_sq: f64, v_norm_sq_ub: f64, eps: f64) -> usize {
    (8.0 * bound_norm_sq * v_norm_sq_ub / (eps * eps))
        .ceil()
        .max(1.0) as usize
}

/// Number of means to take the median over: 8 ln(1/delta).
pub fn median_chunks(delta: f64) -> usize {
    (8.0 * (1.0 / delta).ln()).ceil().max(1.0) as usize
}

/// Estimate <u, v> = sum conj(u(i)) v(i) to additive eps with probability
/// 1 - delta. `v_norm_sq_ub` is an upper bound on ||v||^2 (required: the
/// sample count depends on it).
pub fn inner_product_estimate(
    u: &OversampledVector,
    v: &dyn VectorQuery,
    v_norm_sq_ub: Option<f64>,
    eps: f64,
    delta: f64,
    rng: &mut dyn RngCore,
) -> Result<Complex64> {
    let v_norm_sq = v_norm_sq_ub.ok_or(Error::MissingNormBound)?;
    if u.len() != v.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{}", u.len()),
            got: format!("{}", v.len()),
        });
    }
    let x = inner_product_samples(u.bound_norm_sq(), v_norm_sq, eps);
    let y = median_chunks(delta);
    let bound = u.bound().clone();
    let bound_norm_sq = bound.norm_sq();
    Ok(median_of_means(x, y, rng, |rng| {
        let i = bound.sample(rng);
        let p = bound.entry(i).norm_sqr() / bound_norm_sq;
        u.entry(i).conj() * v.entry(i) / p
    }))
}

/// Estimate Tr[A B†] = sum_ij A(i,j) conj(B(i,j)) to additive eps with
/// probability 1 - delta, sampling entries of A's bound.
pub fn trace_product_estimate(
    a: &OversampledMatrix,
    b: &dyn MatrixQuery,
    b_frob_sq_ub: Option<f64>,
    eps: f64,
    delta: f64,
    rng: &mut dyn RngCore,
) -> Result<Complex64> {
    let b_frob_sq = b_frob_sq_ub.ok_or(Error::MissingNormBound)?;
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?}", a.shape()),
            got: format!("{:?}", b.shape()),
        });
    }
    let x = inner_product_samples(a.bound_frob_sq(), b_frob_sq, eps);
    let y = median_chunks(delta);
    let bound = a.bound().clone();
    let frob_sq = bound.frob_sq();
    Ok(median_of_means(x, y, rng, |rng| {
        let (i, j) = bound.sample_entry(rng);
        let p = bound.entry(i, j).norm_sqr() / frob_sq;
        a.entry(i, j) * b.entry(i, j).conj() / p
    }))
}

/// Estimate x† A y to additive eps with probability 1 - delta via
/// Tr(A (y x†)†)-style sampling of A's bound entries.
pub fn bilinear_form_estimate(
    x: &dyn VectorQuery,
    x_norm_sq_ub: f64,
    a: &OversampledMatrix,
    y: &dyn VectorQuery,
    y_norm_sq_ub: f64,
    eps: f64,
    delta: f64,
    rng: &mut dyn RngCore,
) -> Result<Complex64> {
    let (m, n) = a.shape();
    if x.len() != m || y.len() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("({m},{n})"),
            got: format!("({},{})", x.len(), y.len()),
        });
    }
    let per = inner_product_samples(a.bound_frob_sq(), x_norm_sq_ub * y_norm_sq_ub, eps);
    let chunks = median_chunks(delta);
    let bound = a.bound().clone();
    let frob_sq = bound.frob_sq();
    Ok(median_of_means(per, chunks, rng, |rng| {
        let (i, j) = bound.sample_entry(rng);
        let p = bound.entry(i, j).norm_sqr() / frob_sq;
        x.entry(i).conj() * a.entry(i, j) * y.entry(j) / p
    }))
}

/// A pre-drawn pool of entry samples of A, reusable across many bilinear
/// estimates x† A y with no further queries to A's sampler. The pool holds
/// `chunks` blocks of `per_chunk` samples; each estimate takes the median of
/// the block means.
pub struct BilinearPool {
    samples: Vec<PoolSample>,
    per_chunk: usize,
    chunks: usize,
}

struct PoolSample {
    i: usize,
    j: usize,
    value_over_p: Complex64,
}

impl BilinearPool {
    pub fn draw(
        a: &OversampledMatrix,
        per_chunk: usize,
        chunks: usize,
        rng: &mut dyn RngCore,
    ) -> Self {
        let bound = a.bound().clone();
        let frob_sq = bound.frob_sq();
        let total = per_chunk.max(1) * chunks.max(1);
        let samples = (0..total)
            .map(|_| {
                let (i, j) = bound.sample_entry(rng);
                let p = bound.entry(i, j).norm_sqr() / frob_sq;
                PoolSample {
                    i,
                    j,
                    value_over_p: a.entry(i, j) / p,
                }
            })
            .collect();
        Self {
            samples,
            per_chunk: per_chunk.max(1),
            chunks: chunks.max(1),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Iterate raw samples as (row, col, value/probability).
    pub fn samples_iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.samples.iter().map(|s| (s.i, s.j, s.value_over_p))
    }

    /// Estimate x† A y from the pool.
    pub fn estimate(
        &self,
        x: impl Fn(usize) -> Complex64,
        y: impl Fn(usize) -> Complex64,
    ) -> Complex64 {
        let mut res = Vec::with_capacity(self.chunks);
        let mut ims = Vec::with_capacity(self.chunks);
        for c in 0..self.chunks {
            let block = &self.samples[c * self.per_chunk..(c + 1) * self.per_chunk];
            let mut acc = Complex64::new(0.0, 0.0);
            for s in block {
                acc += x(s.i).conj() * s.value_over_p * y(s.j);
            }
            let mean = acc / self.per_chunk as f64;
            res.push(mean.re);
            ims.push(mean.im);
        }
        Complex64::new(median(&mut res), median(&mut ims))
    }
}

/// Estimated singular values of A: the singular values of the fully sketched
/// core C = S A T, zero-padded and sorted descending.
pub fn estimate_singular_values(
    a: &OversampledMatrix,
    r: usize,
    c: usize,
    rng: &mut dyn RngCore,
) -> Vec<f64> {
    let s_sketch = RowSketch::draw(&RowNormDist::of(a), r, rng);
    let sk = SketchedMatrix::new(a.clone(), s_sketch, None);
    let t_sketch = RowSketch::draw(&sk.column_dist(), c, rng);
    let core = sk.materialize_core(&t_sketch);
    crate::dense::svd(&core).singular_values
}

/// Draw a sketch of `a` from an explicit distribution and return it together
/// with chained access. Convenience wrapper used by the transforms.
pub fn chained_access(
    a: &OversampledMatrix,
    dist: &dyn ImportanceDist,
    s: usize,
    delta: Option<f64>,
    rng: &mut dyn RngCore,
) -> SketchedMatrix {
    let sketch = RowSketch::draw(dist, s, rng);
    SketchedMatrix::new(a.clone(), sketch, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::CMatrix;
    use crate::rng::rng_for;
    use crate::sq::{Mode, SqMatrix, SqVector};
    use std::sync::Arc;

    fn cv(entries: &[f64]) -> Vec<Complex64> {
        entries.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    fn exact_vec(entries: &[f64]) -> OversampledVector {
        OversampledVector::exact(Arc::new(SqVector::build(cv(entries), Mode::Static).unwrap()))
    }

    #[test]
    fn inner_product_point_mass_exact() {
        let u = exact_vec(&[1.0, 0.0]);
        let v = cv(&[1.0, 0.0]);
        let mut rng = rng_for(1, 0);
        let est = inner_product_estimate(&u, &v, Some(1.0), 0.5, 0.1, &mut rng).unwrap();
        assert!((est - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn sample_count_formula() {
        // phi = 1, unit norms, eps = 0.5: x = 8 / 0.25 = 32.
        assert_eq!(inner_product_samples(1.0, 1.0, 0.5), 32);
    }

    #[test]
    fn missing_norm_bound_is_error() {
        let u = exact_vec(&[1.0, 0.0]);
        let v = cv(&[1.0, 0.0]);
        let mut rng = rng_for(2, 0);
        assert!(matches!(
            inner_product_estimate(&u, &v, None, 0.5, 0.1, &mut rng),
            Err(Error::MissingNormBound)
        ));
    }

    #[test]
    fn orthogonal_vectors_estimate_near_zero() {
        let n = 64;
        let u_data: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 0.125 } else { 0.0 }).collect();
        let v_data: Vec<f64> = (0..n).map(|i| if i % 2 == 1 { 0.125 } else { 0.0 }).collect();
        let u = exact_vec(&u_data);
        let v = cv(&v_data);
        let v_norm_sq: f64 = v_data.iter().map(|x| x * x).sum();
        let mut rng = rng_for(3, 0);
        let eps = 0.05;
        let mut failures = 0;
        for _ in 0..100 {
            let est =
                inner_product_estimate(&u, &v, Some(v_norm_sq), eps, 0.05, &mut rng).unwrap();
            if est.norm() > eps {
                failures += 1;
            }
        }
        assert!(failures <= 10, "{failures} failures");
    }

    #[test]
    fn inner_product_complex_case() {
        let u_data = vec![Complex64::new(0.4, 0.3), Complex64::new(-0.2, 0.6)];
        let v_data = vec![Complex64::new(0.1, -0.5), Complex64::new(0.7, 0.2)];
        let u = OversampledVector::exact(Arc::new(
            SqVector::build(u_data.clone(), Mode::Static).unwrap(),
        ));
        let truth: Complex64 = u_data
            .iter()
            .zip(&v_data)
            .map(|(a, b)| a.conj() * b)
            .sum();
        let v_norm_sq: f64 = v_data.iter().map(|z| z.norm_sqr()).sum();
        let mut rng = rng_for(4, 0);
        let est =
            inner_product_estimate(&u, &v_data, Some(v_norm_sq), 0.02, 0.01, &mut rng).unwrap();
        assert!((est - truth).norm() <= 0.02, "{est} vs {truth}");
    }

    #[test]
    fn trace_product_identity_case() {
        // A = B = I/sqrt(2) (2x2): Tr[A B†] = 1.
        let rows = vec![cv(&[std::f64::consts::FRAC_1_SQRT_2, 0.0]), cv(&[0.0, std::f64::consts::FRAC_1_SQRT_2])];
        let a = OversampledMatrix::exact(Arc::new(SqMatrix::build(rows.clone(), Mode::Static).unwrap()));
        let b = a.query().to_dense();
        struct Dense(CMatrix);
        impl MatrixQuery for Dense {
            fn shape(&self) -> (usize, usize) {
                (self.0.nrows(), self.0.ncols())
            }
            fn entry(&self, i: usize, j: usize) -> Complex64 {
                self.0[(i, j)]
            }
        }
        let mut rng = rng_for(5, 0);
        let est = trace_product_estimate(&a, &Dense(b), Some(1.0), 0.05, 0.01, &mut rng).unwrap();
        assert!((est - Complex64::new(1.0, 0.0)).norm() <= 0.05);
        // B = 0: result below eps.
        let zero = Dense(CMatrix::zeros(2, 2));
        let est0 = trace_product_estimate(&a, &zero, Some(1e-12), 0.05, 0.01, &mut rng).unwrap();
        assert!(est0.norm() <= 0.05);
    }

    #[test]
    fn bilinear_form_basis_cases() {
        let rows = vec![cv(&[1.0, 0.0]), cv(&[0.0, 1.0])];
        let a = OversampledMatrix::exact(Arc::new(SqMatrix::build(rows, Mode::Static).unwrap()));
        let e1 = cv(&[1.0, 0.0]);
        let e2 = cv(&[0.0, 1.0]);
        let mut rng = rng_for(6, 0);
        let est = bilinear_form_estimate(&e1, 1.0, &a, &e1, 1.0, 0.05, 0.01, &mut rng).unwrap();
        assert!((est - Complex64::new(1.0, 0.0)).norm() <= 0.05);
        let est2 = bilinear_form_estimate(&e1, 1.0, &a, &e2, 1.0, 0.05, 0.01, &mut rng).unwrap();
        assert!(est2.norm() <= 0.05);
    }

    #[test]
    fn pool_reuse_matches_direct_estimates() {
        let mut rng = rng_for(7, 0);
        let m = 30;
        let rows: Vec<Vec<Complex64>> = (0..m)
            .map(|_| {
                (0..m)
                    .map(|_| Complex64::new(crate::rng::standard_normal(&mut rng) / m as f64, 0.0))
                    .collect()
            })
            .collect();
        let dense = CMatrix::from_fn(m, m, |i, j| rows[i][j]);
        let a = OversampledMatrix::exact(Arc::new(SqMatrix::build(rows, Mode::Static).unwrap()));
        let pool = BilinearPool::draw(&a, 4000, 16, &mut rng);
        // Several unit test vectors.
        for k in 0..4usize {
            let x: Vec<Complex64> = (0..m)
                .map(|i| Complex64::new(if i % 4 == k { 0.5 } else { 0.0 }, 0.0))
                .collect();
            let y: Vec<Complex64> = (0..m)
                .map(|i| Complex64::new(if i % 3 == k % 3 { 0.5 } else { 0.0 }, 0.0))
                .collect();
            let truth: Complex64 = (0..m)
                .flat_map(|i| (0..m).map(move |j| (i, j)))
                .map(|(i, j)| x[i].conj() * dense[(i, j)] * y[j])
                .sum();
            let est = pool.estimate(|i| x[i], |j| y[j]);
            assert!((est - truth).norm() < 0.05, "k = {k}: {est} vs {truth}");
        }
    }

    #[test]
    fn singular_value_estimates_sorted_and_exact_for_scalar() {
        let rows = vec![cv(&[1.0])];
        let a = OversampledMatrix::exact(Arc::new(SqMatrix::build(rows, Mode::Static).unwrap()));
        let mut rng = rng_for(8, 0);
        let svs = estimate_singular_values(&a, 3, 3, &mut rng);
        assert!((svs[0] - 1.0).abs() < 1e-9);
        for w in svs.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn median_of_means_concentrates() {
        // Heavy-tailed-ish draw: value 10 with prob 0.1, else 0; mean 1.
        let mut rng = rng_for(9, 0);
        let est = median_of_means(4000, 16, &mut rng, |rng| {
            if crate::rng::unit_f64(rng) < 0.1 {
                Complex64::new(10.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        assert!((est.re - 1.0).abs() < 0.1, "{est}");
    }
}
