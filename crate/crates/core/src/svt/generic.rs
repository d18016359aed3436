//! Generic (non-even) singular value transformation: f^(SV)(A) = A g(A† A)
//! for g(x) = f(sqrt(x))/sqrt(x), realized as a CUR decomposition
//! C' M R + g(0) A with C' a rescaled column subset of A.

use num_complex::Complex64;
use rand::RngCore;

use super::even::{even_svt, EvenSvtParams, RurDecomposition};
use super::functions::ScalarFunction;
use crate::dense::{c, CMatrix, CVector};
use crate::error::{Error, Result};
use crate::sketch::{MixtureDist, RowNormDist, RowSketch};
use crate::sq::OversampledMatrix;

/// Parameters for the generic transform: the inner even-SVT run for g plus
/// the size of the column sketch T' used to replace A (S A)†.
#[derive(Debug, Clone)]
pub struct GenericSvtParams {
    pub even: EvenSvtParams,
    pub c_prime: usize,
    /// Permit the one-sided product bound when sq(A†) is unavailable; the
    /// failure probability then degrades from exponential to polynomial.
    pub allow_onesided_fallback: bool,
}

/// CUR output: column sketch T' (indices into A's columns), middle factor
/// M = (S' R†) U, the inner row decomposition, and the g(0) A shift.
pub struct CurDecomposition {
    rur: RurDecomposition,
    col_subset: RowSketch,
    mid: CMatrix,
    g0: Complex64,
    pub onesided: bool,
}

/// Build the CUR decomposition of f^(SV)(A) given g = f(sqrt(x))/sqrt(x)
/// (supplied with its own Lipschitz data; note g(0) = fbar-style shift).
///
/// `a_dagger` supplies the column-side sampling distribution; without it the
/// one-sided fallback must be explicitly allowed.
pub fn generic_svt(
    a: &OversampledMatrix,
    a_dagger: Option<&OversampledMatrix>,
    g: &ScalarFunction,
    params: GenericSvtParams,
    rng: &mut dyn RngCore,
) -> Result<CurDecomposition> {
    let rur = even_svt(a, g, params.even.clone(), rng)?;
    let col_dist = rur.sketched().column_dist();
    let (col_subset, onesided) = match a_dagger {
        Some(ad) => {
            if ad.shape() != (a.shape().1, a.shape().0) {
                return Err(Error::ShapeMismatch {
                    expected: format!("{:?} transposed", a.shape()),
                    got: format!("{:?}", ad.shape()),
                });
            }
            let ad_rows = RowNormDist::of(ad);
            let mix = MixtureDist {
                a: &ad_rows,
                b: &col_dist,
            };
            (RowSketch::draw(&mix, params.c_prime, rng), false)
        }
        None => {
            if !params.allow_onesided_fallback {
                return Err(Error::MissingNormBound);
            }
            (RowSketch::draw(&col_dist, params.c_prime, rng), true)
        }
    };
    // W = S' R† (c' x r), entries w_l conj(R(k, j_l)).
    let w = col_subset.apply_rows(rur.rows(), |j, k| rur.sketched().entry(k, j).conj());
    let mid = &w * rur.middle();
    Ok(CurDecomposition {
        rur,
        col_subset,
        mid,
        g0: g.f0(),
        onesided,
    })
}

impl CurDecomposition {
    pub fn rur(&self) -> &RurDecomposition {
        &self.rur
    }

    pub fn column_indices(&self) -> &RowSketch {
        &self.col_subset
    }

    pub fn g0(&self) -> Complex64 {
        self.g0
    }

    fn source(&self) -> &OversampledMatrix {
        self.rur.sketched().source()
    }

    /// Columns of C' = A T' materialized (m x c'), for desk-scale work.
    pub fn c_dense(&self) -> CMatrix {
        let (m, _) = self.source().shape();
        let src = self.source();
        CMatrix::from_fn(m, self.col_subset.len(), |i, l| {
            let col = self.col_subset.rows()[l];
            c(col.weight) * src.entry(i, col.index)
        })
    }

    /// Dense represented operator C' M R + g(0) A.
    pub fn to_dense_operator(&self) -> CMatrix {
        let c_mat = self.c_dense();
        let r = self.rur.r_dense();
        let mut out = c_mat * &self.mid * r;
        if self.g0.norm() > 0.0 {
            let a = self.source().query().to_dense();
            out += a * self.g0;
        }
        out
    }

    /// Apply the represented operator to a dense vector (desk scale).
    pub fn apply_dense(&self, b: &CVector) -> CVector {
        let r = self.rur.r_dense();
        let rb = &r * b;
        let mid_rb = &self.mid * rb;
        let c_mat = self.c_dense();
        let mut out = c_mat * mid_rb;
        if self.g0.norm() > 0.0 {
            let (m, n) = self.source().shape();
            let src = self.source();
            for i in 0..m {
                let mut acc = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    acc += src.entry(i, j) * b[j];
                }
                out[i] += self.g0 * acc;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::spectral_norm;
    use crate::oracle::dense_svt;
    use crate::rng::rng_for;
    use crate::sq::{Mode, SqMatrix};
    use crate::svt::even::{NormMode, SketchSizes};
    use crate::synth::{gen_matrix, SynthSpec};
    use std::sync::Arc;

    fn handle(a: &CMatrix) -> OversampledMatrix {
        OversampledMatrix::exact(Arc::new(SqMatrix::from_dense(a, Mode::Static).unwrap()))
    }

    fn transposed_handle(a: &CMatrix) -> OversampledMatrix {
        handle(&a.adjoint())
    }

    fn params(eps: f64, r: usize, cc: usize, cp: usize) -> GenericSvtParams {
        GenericSvtParams {
            even: EvenSvtParams::new(eps, 0.1, NormMode::Spectral, SketchSizes::new(r, cc)),
            c_prime: cp,
            allow_onesided_fallback: false,
        }
    }

    #[test]
    fn identity_f_recovers_matrix() {
        // f(x) = x means g = 1: CUR collapses to g(0) A = A.
        let mut rng = rng_for(1, 0);
        let a = gen_matrix(&SynthSpec::low_rank(40, 25, &[2.0, 1.0]), &mut rng);
        let h = handle(&a);
        let ht = transposed_handle(&a);
        let g = ScalarFunction::constant(c(1.0));
        let cur = generic_svt(&h, Some(&ht), &g, params(0.2, 10, 10, 10), &mut rng).unwrap();
        let op = cur.to_dense_operator();
        assert!((op - &a).norm() < 1e-9);
    }

    #[test]
    fn thresholded_identity_matches_dense() {
        // f = x t(x^2): g(y) = t(y), the low-rank approximation transform.
        let mut rng = rng_for(2, 0);
        let a = gen_matrix(&SynthSpec::low_rank(100, 60, &[2.0, 1.5, 1.0]), &mut rng);
        let h = handle(&a);
        let ht = transposed_handle(&a);
        let g = ScalarFunction::threshold_step(0.8, 0.25).unwrap();
        let cur = generic_svt(&h, Some(&ht), &g, params(0.1, 200, 200, 200), &mut rng).unwrap();
        let op = cur.to_dense_operator();
        let truth = dense_svt(&a, &|s| c(s) * g.eval(s * s));
        let err = spectral_norm(&(op - truth));
        assert!(err < 0.45, "spectral error {err}");
        assert!(!cur.onesided);
    }

    #[test]
    fn odd_chebyshev_t3() {
        // T3(x) = 4x^3 - 3x: g(y) = 4y - 3 on the occupied spectrum.
        let mut rng = rng_for(3, 0);
        let a = gen_matrix(&SynthSpec::low_rank(90, 50, &[0.9, 0.6, 0.3]), &mut rng);
        let h = handle(&a);
        let ht = transposed_handle(&a);
        let g = ScalarFunction::new(
            "t3_g",
            |y: f64| c(4.0 * y.clamp(0.0, 1.0) - 3.0),
            |y: f64| {
                let t = y.clamp(0.0, 1.0);
                if y <= 1.0 {
                    c(4.0)
                } else {
                    c((4.0 * t - 3.0 + 3.0) / y)
                }
            },
            c(-3.0),
            4.0,
            4.0,
        );
        let cur = generic_svt(&h, Some(&ht), &g, params(0.1, 160, 160, 160), &mut rng).unwrap();
        let op = cur.to_dense_operator();
        let truth = dense_svt(&a, &|s| c(4.0 * s * s * s - 3.0 * s));
        let err = spectral_norm(&(op - truth));
        assert!(err < 0.35, "spectral error {err}");
    }

    #[test]
    fn missing_adjoint_access_is_error_unless_fallback() {
        let mut rng = rng_for(4, 0);
        let a = gen_matrix(&SynthSpec::low_rank(30, 20, &[1.0]), &mut rng);
        let h = handle(&a);
        let g = ScalarFunction::constant(c(1.0));
        assert!(generic_svt(&h, None, &g, params(0.3, 8, 8, 8), &mut rng).is_err());
        let mut p = params(0.3, 8, 8, 8);
        p.allow_onesided_fallback = true;
        let cur = generic_svt(&h, None, &g, p, &mut rng).unwrap();
        assert!(cur.onesided);
    }
}
