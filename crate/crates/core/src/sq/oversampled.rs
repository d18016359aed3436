//! Oversampled access: entry queries to the true object plus full SQ access
//! to an entrywise upper bound. The oversampling ratio phi = ||bound||^2 /
//! ||true||^2 is carried as the pair (bound norm, true norm if known) so
//! handles remain usable when the true norm is unknown.

use std::sync::Arc;

use num_complex::Complex64;
use rand::RngCore;

use super::matrix::{MatrixQuery, SampleMatrix, SqMatrix};
use super::vector::{SampleVector, SqVector, VectorQuery};
use crate::error::{Error, Result};
use crate::rng::{uniform_index, unit_f64};

const SPOT_CHECK_PROBES: usize = 1000;
const SPOT_CHECK_SLACK: f64 = 1e-9;

/// phi-oversampling and query access to a vector.
#[derive(Clone)]
pub struct OversampledVector {
    query: Arc<dyn VectorQuery>,
    bound: Arc<dyn SampleVector>,
    known_norm_sq: Option<f64>,
}

impl OversampledVector {
    /// Wrap plain SQ access: the vector bounds itself, phi = 1.
    pub fn exact(v: Arc<SqVector>) -> Self {
        let norm_sq = v.norm_sq();
        Self {
            query: v.clone() as Arc<dyn VectorQuery>,
            bound: v as Arc<dyn SampleVector>,
            known_norm_sq: Some(norm_sq),
        }
    }

    /// Attach an entrywise upper bound to a query accessor. The dominance
    /// claim is spot-checked on random probes.
    pub fn with_bound(
        query: Arc<dyn VectorQuery>,
        bound: Arc<dyn SampleVector>,
        known_norm_sq: Option<f64>,
        rng: &mut dyn RngCore,
    ) -> Result<Self> {
        if query.len() != bound.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("bound of length {}", query.len()),
                got: format!("{}", bound.len()),
            });
        }
        let n = query.len();
        for _ in 0..SPOT_CHECK_PROBES.min(4 * n) {
            let i = uniform_index(rng, n);
            let b = bound.entry(i).norm();
            let v = query.entry(i).norm();
            if b + SPOT_CHECK_SLACK * (1.0 + v) < v {
                return Err(Error::BoundViolation {
                    index: i,
                    bound: b,
                    value: v,
                });
            }
        }
        Ok(Self {
            query,
            bound,
            known_norm_sq,
        })
    }

    /// Internal constructor for library-built handles whose dominance holds
    /// by construction.
    pub(crate) fn trusted(
        query: Arc<dyn VectorQuery>,
        bound: Arc<dyn SampleVector>,
        known_norm_sq: Option<f64>,
    ) -> Self {
        Self {
            query,
            bound,
            known_norm_sq,
        }
    }

    /// Uniform bound of Remark-style form: max |v(i)|^2 <= beta / n, bounded
    /// by the constant vector sqrt(beta/n).
    pub fn with_uniform_bound(
        query: Arc<dyn VectorQuery>,
        beta: f64,
        known_norm_sq: Option<f64>,
        rng: &mut dyn RngCore,
    ) -> Result<Self> {
        let n = query.len();
        let bound = Arc::new(UniformBound { n, beta });
        Self::with_bound(query, bound, known_norm_sq, rng)
    }

    pub fn len(&self) -> usize {
        self.query.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entry(&self, i: usize) -> Complex64 {
        self.query.entry(i)
    }

    pub fn query(&self) -> &Arc<dyn VectorQuery> {
        &self.query
    }

    pub fn bound(&self) -> &Arc<dyn SampleVector> {
        &self.bound
    }

    pub fn bound_norm_sq(&self) -> f64 {
        self.bound.norm_sq()
    }

    pub fn known_norm_sq(&self) -> Option<f64> {
        self.known_norm_sq
    }

    /// Oversampling ratio, when the true norm is known.
    pub fn phi(&self) -> Option<f64> {
        self.known_norm_sq.map(|n| self.bound.norm_sq() / n)
    }

    /// Record the true norm (e.g. computed externally). A zero norm means the
    /// handle represents an exact cancellation and has no distribution.
    pub fn with_known_norm_sq(mut self, norm_sq: f64) -> Result<Self> {
        if norm_sq <= 0.0 {
            return Err(Error::ExactCancellation);
        }
        self.known_norm_sq = Some(norm_sq);
        Ok(self)
    }

    /// One rejection round: propose from the bound distribution, accept with
    /// probability |v(i)|^2 / |bound(i)|^2.
    pub fn rejection_round(&self, rng: &mut dyn RngCore) -> Option<usize> {
        let i = self.bound.sample(rng);
        let b = self.bound.entry(i).norm_sqr();
        let v = self.query.entry(i).norm_sqr();
        debug_assert!(b > 0.0);
        if unit_f64(rng) * b < v {
            Some(i)
        } else {
            None
        }
    }

    /// Rejection-sample an index of the true vector. Accepted indices follow
    /// D_v exactly; failure after `max_rounds` is reported, not hidden.
    pub fn rejection_sample(&self, max_rounds: usize, rng: &mut dyn RngCore) -> Result<usize> {
        for _ in 0..max_rounds {
            if let Some(i) = self.rejection_round(rng) {
                return Ok(i);
            }
        }
        Err(Error::RejectionExhausted { rounds: max_rounds })
    }

    /// Round budget giving failure probability <= delta at oversampling phi.
    pub fn rejection_rounds(phi: f64, delta: f64) -> usize {
        (2.0 * phi * (1.0 / delta).ln()).ceil().max(1.0) as usize
    }

    /// Estimate ||v||^2 to relative error nu with probability >= 1 - delta,
    /// from the empirical acceptance rate: accepted/rounds * ||bound||^2.
    /// When phi is unknown the round count adapts to the observed rate.
    pub fn estimate_norm_sq(&self, nu: f64, delta: f64, rng: &mut dyn RngCore) -> Result<f64> {
        if !(0.0 < nu && nu <= 1.0) || !(0.0 < delta && delta < 1.0) {
            return Err(Error::InvalidParam("nu, delta must lie in (0,1]".into()));
        }
        let base = 8.0 / (nu * nu) * (2.0 / delta).ln();
        let mut target = match self.phi() {
            Some(phi) => (base * phi).ceil() as u64,
            None => base.ceil() as u64,
        };
        let cap = 200_000_000u64;
        let mut rounds = 0u64;
        let mut accepts = 0u64;
        while rounds < target.min(cap) {
            if self.rejection_round(rng).is_some() {
                accepts += 1;
            }
            rounds += 1;
            if rounds == target && self.phi().is_none() {
                // Adapt: the required rounds scale with the true phi.
                let phi_hat = rounds as f64 / accepts.max(1) as f64;
                let want = (base * phi_hat).ceil() as u64;
                if want > target {
                    target = want.min(cap);
                }
            }
        }
        Ok(accepts as f64 / rounds as f64 * self.bound.norm_sq())
    }
}

struct UniformBound {
    n: usize,
    beta: f64,
}

impl VectorQuery for UniformBound {
    fn len(&self) -> usize {
        self.n
    }

    fn entry(&self, _i: usize) -> Complex64 {
        Complex64::new((self.beta / self.n as f64).sqrt(), 0.0)
    }
}

impl SampleVector for UniformBound {
    fn sample(&self, rng: &mut dyn RngCore) -> usize {
        uniform_index(rng, self.n)
    }

    fn norm_sq(&self) -> f64 {
        self.beta
    }
}

/// phi-oversampling and query access to a matrix.
#[derive(Clone)]
pub struct OversampledMatrix {
    query: Arc<dyn MatrixQuery>,
    bound: Arc<dyn SampleMatrix>,
    known_frob_sq: Option<f64>,
}

impl OversampledMatrix {
    pub fn exact(a: Arc<SqMatrix>) -> Self {
        let frob_sq = a.frob_sq();
        Self {
            query: a.clone() as Arc<dyn MatrixQuery>,
            bound: a as Arc<dyn SampleMatrix>,
            known_frob_sq: Some(frob_sq),
        }
    }

    pub fn with_bound(
        query: Arc<dyn MatrixQuery>,
        bound: Arc<dyn SampleMatrix>,
        known_frob_sq: Option<f64>,
        rng: &mut dyn RngCore,
    ) -> Result<Self> {
        if query.shape() != bound.shape() {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?}", query.shape()),
                got: format!("{:?}", bound.shape()),
            });
        }
        let (m, n) = query.shape();
        for _ in 0..SPOT_CHECK_PROBES.min(4 * m * n) {
            let i = uniform_index(rng, m);
            let j = uniform_index(rng, n);
            let b = bound.entry(i, j).norm();
            let v = query.entry(i, j).norm();
            if b + SPOT_CHECK_SLACK * (1.0 + v) < v {
                return Err(Error::BoundViolation {
                    index: i * n + j,
                    bound: b,
                    value: v,
                });
            }
        }
        Ok(Self {
            query,
            bound,
            known_frob_sq,
        })
    }

    pub(crate) fn trusted(
        query: Arc<dyn MatrixQuery>,
        bound: Arc<dyn SampleMatrix>,
        known_frob_sq: Option<f64>,
    ) -> Self {
        Self {
            query,
            bound,
            known_frob_sq,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.query.shape()
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.query.entry(i, j)
    }

    pub fn query(&self) -> &Arc<dyn MatrixQuery> {
        &self.query
    }

    pub fn bound(&self) -> &Arc<dyn SampleMatrix> {
        &self.bound
    }

    pub fn bound_frob_sq(&self) -> f64 {
        self.bound.frob_sq()
    }

    pub fn known_frob_sq(&self) -> Option<f64> {
        self.known_frob_sq
    }

    pub fn phi(&self) -> Option<f64> {
        self.known_frob_sq.map(|f| self.bound.frob_sq() / f)
    }

    pub fn with_known_frob_sq(mut self, frob_sq: f64) -> Result<Self> {
        if frob_sq <= 0.0 {
            return Err(Error::ExactCancellation);
        }
        self.known_frob_sq = Some(frob_sq);
        Ok(self)
    }

    /// phi when known, else the pessimistic fallback 1 (used only for sizing
    /// heuristics, never for correctness claims).
    pub fn phi_or(&self, fallback: f64) -> f64 {
        self.phi().unwrap_or(fallback)
    }

    /// Spot-check Hermitian-ness on random index pairs.
    pub fn hermitian_spot_check(&self, probes: usize, rng: &mut dyn RngCore) -> Result<()> {
        let (m, n) = self.shape();
        if m != n {
            return Err(Error::ShapeMismatch {
                expected: "square matrix".into(),
                got: format!("{m}x{n}"),
            });
        }
        for _ in 0..probes {
            let i = uniform_index(rng, m);
            let j = uniform_index(rng, n);
            let a = self.entry(i, j);
            let b = self.entry(j, i).conj();
            let scale = 1.0 + a.norm().max(b.norm());
            if (a - b).norm() > 1e-8 * scale {
                return Err(Error::NotHermitian { i, j });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;
    use crate::sq::vector::Mode;
    use crate::stats::chi_square_gof;

    fn cvec(entries: &[f64]) -> Vec<Complex64> {
        entries.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    fn handle(v: &[f64], bound: &[f64], norm_known: bool) -> OversampledVector {
        let mut rng = rng_for(99, 0);
        let query: Arc<dyn VectorQuery> = Arc::new(cvec(v));
        let bound_sq = Arc::new(SqVector::build(cvec(bound), Mode::Static).unwrap());
        let known = norm_known.then(|| v.iter().map(|x| x * x).sum());
        OversampledVector::with_bound(query, bound_sq, known, &mut rng).unwrap()
    }

    #[test]
    fn phi_from_pair() {
        // v = [1,1], bound = [2,2]: phi = 8/2 = 4.
        let u = handle(&[1.0, 1.0], &[2.0, 2.0], true);
        assert!((u.phi().unwrap() - 4.0).abs() < 1e-12);
        let unknown = handle(&[1.0, 1.0], &[2.0, 2.0], false);
        assert_eq!(unknown.phi(), None);
        assert!((unknown.bound_norm_sq() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn equal_bound_means_phi_one() {
        let u = handle(&[0.5, 0.5, 0.5], &[0.5, 0.5, 0.5], true);
        assert!((u.phi().unwrap() - 1.0).abs() < 1e-12);
        // phi = 1: every rejection round accepts.
        let mut rng = rng_for(1, 0);
        for _ in 0..100 {
            assert!(u.rejection_round(&mut rng).is_some());
        }
    }

    #[test]
    fn bound_violation_detected() {
        let mut rng = rng_for(7, 0);
        let query: Arc<dyn VectorQuery> = Arc::new(cvec(&[3.0, 1.0]));
        let bound = Arc::new(SqVector::build(cvec(&[1.0, 1.0]), Mode::Static).unwrap());
        assert!(matches!(
            OversampledVector::with_bound(query, bound, None, &mut rng),
            Err(Error::BoundViolation { .. })
        ));
    }

    #[test]
    fn rejection_restricted_to_support() {
        // v = [1,0], bound = [1,1] (phi = 2): accepted samples are always 0.
        let u = handle(&[1.0, 0.0], &[1.0, 1.0], true);
        let mut rng = rng_for(2, 0);
        let mut accepted = 0u64;
        let mut rounds = 0u64;
        for _ in 0..40_000 {
            rounds += 1;
            if let Some(i) = u.rejection_round(&mut rng) {
                assert_eq!(i, 0);
                accepted += 1;
            }
        }
        let rate = accepted as f64 / rounds as f64;
        assert!((rate - 0.5).abs() < 0.02, "acceptance rate {rate}");
    }

    #[test]
    fn rejection_output_matches_true_distribution() {
        let v: Vec<f64> = (0..50).map(|i| ((i * 29 + 3) % 11) as f64 / 11.0).collect();
        let bound: Vec<f64> = v.iter().map(|x| 2.0 * x.max(0.05)).collect();
        let u = handle(&v, &bound, true);
        let norm_sq: f64 = v.iter().map(|x| x * x).sum();
        let probs: Vec<f64> = v.iter().map(|x| x * x / norm_sq).collect();
        let mut rng = rng_for(3, 0);
        let mut counts = vec![0u64; v.len()];
        for _ in 0..100_000 {
            let i = u.rejection_sample(10_000, &mut rng).unwrap();
            counts[i] += 1;
        }
        assert!(chi_square_gof(&counts, &probs, 0.001));
    }

    #[test]
    fn exhaustion_is_reported() {
        // Bound enormous relative to v: acceptance ~ 1e-8.
        let u = handle(&[1e-4], &[1.0], true);
        let mut rng = rng_for(4, 0);
        assert!(matches!(
            u.rejection_sample(10, &mut rng),
            Err(Error::RejectionExhausted { rounds: 10 })
        ));
    }

    #[test]
    fn norm_estimate_exact_at_phi_one() {
        let u = handle(&[3.0, 4.0], &[3.0, 4.0], true);
        let mut rng = rng_for(5, 0);
        let est = u.estimate_norm_sq(1.0, 0.5, &mut rng).unwrap();
        assert!((est - 25.0).abs() < 1e-12);
    }

    #[test]
    fn norm_estimate_within_relative_error() {
        // v = [1,0], bound = [1,1]: ||v||^2 = 1, phi = 2.
        let u = handle(&[1.0, 0.0], &[1.0, 1.0], true);
        let mut rng = rng_for(6, 0);
        let mut failures = 0;
        let trials = 200;
        for _ in 0..trials {
            let est = u.estimate_norm_sq(0.1, 0.01, &mut rng).unwrap();
            if !(0.9..=1.1).contains(&est) {
                failures += 1;
            }
        }
        assert!(failures <= 4, "{failures} / {trials} outside [0.9, 1.1]");
    }

    #[test]
    fn norm_estimate_adapts_without_phi() {
        let u = handle(&[1.0, 0.0], &[1.0, 1.0], false);
        let mut rng = rng_for(7, 0);
        let est = u.estimate_norm_sq(0.2, 0.05, &mut rng).unwrap();
        assert!((est - 1.0).abs() <= 0.2);
    }

    #[test]
    fn uniform_bound_remark_case() {
        // s-sparse vector with entries in [c', c]; uniform bound c over the
        // support gives phi <= (c/c')^2.
        let mut rng = rng_for(8, 0);
        let c_hi = 1.0;
        let c_lo = 0.5;
        let n = 64usize;
        let v: Vec<f64> = (0..n)
            .map(|i| {
                if i % 4 == 0 {
                    c_lo + (c_hi - c_lo) * ((i % 7) as f64 / 7.0)
                } else {
                    0.0
                }
            })
            .collect();
        let support: Vec<f64> = v.iter().map(|&x| if x != 0.0 { c_hi } else { 0.0 }).collect();
        let query: Arc<dyn VectorQuery> = Arc::new(cvec(&v));
        let bound = Arc::new(SqVector::build(cvec(&support), Mode::Static).unwrap());
        let norm_sq: f64 = v.iter().map(|x| x * x).sum();
        let u = OversampledVector::with_bound(query, bound, Some(norm_sq), &mut rng).unwrap();
        assert!(u.phi().unwrap() <= (c_hi / c_lo).powi(2) + 1e-12);
    }

    #[test]
    fn matrix_hermitian_spot_check() {
        let mut rng = rng_for(9, 0);
        let rows = vec![
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)],
            vec![Complex64::new(0.0, -2.0), Complex64::new(3.0, 0.0)],
        ];
        let a = OversampledMatrix::exact(Arc::new(SqMatrix::build(rows, Mode::Static).unwrap()));
        a.hermitian_spot_check(100, &mut rng).unwrap();

        let rows_bad = vec![
            vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)],
            vec![Complex64::new(0.0, 2.0), Complex64::new(3.0, 0.0)],
        ];
        let b = OversampledMatrix::exact(Arc::new(SqMatrix::build(rows_bad, Mode::Static).unwrap()));
        assert!(b.hermitian_spot_check(200, &mut rng).is_err());
    }
}
