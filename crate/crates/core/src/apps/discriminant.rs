//! Linear discriminant analysis: approximate eigenpairs of
//! fsqrt(S_B) finv(S_W) fsqrt(S_B) for the between/within scatter factors,
//! assembled from two even SVTs, one joint product sketch, and a small
//! eigendecomposition routed through the trimmed core pseudoinverse.

use num_complex::Complex64;
use rand::RngCore;

use super::common::base_guarantee;
use crate::dense::{c, hermitian_eig, CMatrix};
use crate::error::{Error, Result};
use crate::io::Manifest;
use crate::sketch::{MixtureDist, RowSketch};
use crate::sq::{conj_row_vector, linear_combination, OversampledMatrix, OversampledVector};
use crate::svt::{even_svt, EvenSvtParams, NormMode, ScalarFunction, SketchSizes};

#[derive(Debug, Clone)]
pub struct DiscriminantParams {
    pub sigma: f64,
    pub eps: f64,
    pub delta: f64,
    pub b_sizes: SketchSizes,
    pub w_sizes: SketchSizes,
    /// Joint sketch size for R_B R_W† ~ R_B' R_W'†.
    pub cross: usize,
}

pub struct DiscriminantOutput {
    /// Eigenvalue estimates, descending.
    pub eigenvalues: Vec<f64>,
    /// SQ handles over the eigenvector estimates (columns of U).
    pub eigenvectors: Vec<OversampledVector>,
    /// Measured alpha of the isometry claim (desk scale).
    pub alpha: f64,
    pub guarantee: Manifest,
}

pub fn discriminant_analysis(
    b: &OversampledMatrix,
    w: &OversampledMatrix,
    params: &DiscriminantParams,
    rng: &mut dyn RngCore,
) -> Result<DiscriminantOutput> {
    if b.shape().1 != w.shape().1 {
        return Err(Error::ShapeMismatch {
            expected: format!("{} columns", b.shape().1),
            got: format!("{}", w.shape().1),
        });
    }
    let fsqrt = ScalarFunction::disc_sqrt(params.sigma)?;
    let finv = ScalarFunction::disc_inv(params.sigma)?;
    let rur_b = even_svt(
        b,
        &fsqrt,
        EvenSvtParams::new(params.eps, params.delta / 3.0, NormMode::Spectral, params.b_sizes),
        rng,
    )?;
    let rur_w = even_svt(
        w,
        &finv,
        EvenSvtParams::new(params.eps, params.delta / 3.0, NormMode::Spectral, params.w_sizes),
        rng,
    )?;

    // Joint product sketch over columns: R_B R_W† ~ (R_B S†)(R_W S†)†.
    let b_cols = rur_b.sketched().column_dist();
    let w_cols = rur_w.sketched().column_dist();
    let mix = MixtureDist {
        a: &b_cols,
        b: &w_cols,
    };
    let s = RowSketch::draw(&mix, params.cross, rng);
    let rb_s = s.apply_rows(rur_b.rows(), |j, k| rur_b.sketched().entry(k, j).conj());
    let rw_s = s.apply_rows(rur_w.rows(), |j, k| rur_w.sketched().entry(k, j).conj());
    // cross = R_B' R_W'† (r_B x r_W).
    let cross = rb_s.adjoint() * &rw_s;

    // Z = Z_B cross Z_W cross† Z_B.
    let z_b = rur_b.middle();
    let z_w = rur_w.middle();
    let z = &z_b * &cross * z_w * cross.adjoint() * &z_b;

    // Trimmed core of C_B at sigma/sqrt(2).
    let threshold = params.sigma / 2f64.sqrt();
    let kept: Vec<usize> = rur_b
        .core_singular_values()
        .iter()
        .enumerate()
        .filter(|(_, &s)| s >= threshold)
        .map(|(i, _)| i)
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyFactor { threshold });
    }
    let k = kept.len();
    let r_b = rur_b.rows();
    let u_trim = CMatrix::from_fn(r_b, k, |i, t| rur_b.core_left()[(i, kept[t])]);
    let d_trim: Vec<f64> = kept
        .iter()
        .map(|&i| rur_b.core_singular_values()[i])
        .collect();

    // Core Q = D U† Z U D, eigendecomposed; U(., i) = R_B† (U_trim D^-1) E(., i).
    let ut_z_u = u_trim.adjoint() * &z * &u_trim;
    let mut q = CMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            q[(i, j)] = c(d_trim[i]) * ut_z_u[(i, j)] * c(d_trim[j]);
        }
    }
    let eig = hermitian_eig(&q);
    // Basis for the eigenvector handles: columns of U_trim D^-1 E.
    let mut basis = u_trim.clone();
    for (t, &d) in d_trim.iter().enumerate() {
        for i in 0..r_b {
            basis[(i, t)] *= c(1.0 / d);
        }
    }
    let basis = basis * &eig.eigenvectors;

    let mut eigenvectors = Vec::with_capacity(k);
    for col in 0..k {
        let terms: Vec<(OversampledVector, Complex64)> = rur_b
            .sketched()
            .sketch()
            .rows()
            .iter()
            .enumerate()
            .map(|(krow, srow)| {
                (
                    conj_row_vector(rur_b.sketched().source(), srow.index),
                    basis[(krow, col)] * c(srow.weight),
                )
            })
            .collect();
        eigenvectors.push(linear_combination(&terms)?);
    }

    // Measured alpha: || U† U - I || with U materialized densely.
    let n_dim = b.shape().1;
    let u_dense = CMatrix::from_fn(n_dim, k, |j, col| eigenvectors[col].entry(j));
    let gram = u_dense.adjoint() * &u_dense;
    let alpha = crate::dense::spectral_norm(&(gram - CMatrix::identity(k, k)));

    let mut guarantee = base_guarantee("discriminant", params.eps, params.delta);
    guarantee.insert("sigma".into(), format!("{}", params.sigma));
    guarantee.insert("rank".into(), format!("{k}"));
    guarantee.insert("alpha".into(), format!("{alpha}"));
    guarantee.insert("cross".into(), format!("{}", params.cross));
    Ok(DiscriminantOutput {
        eigenvalues: eig.eigenvalues,
        eigenvectors,
        alpha,
        guarantee,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::spectral_norm;
    use crate::oracle::dense_eigen_transform;
    use crate::rng::rng_for;
    use crate::sq::{Mode, SqMatrix};
    use crate::synth::{gen_matrix, SynthSpec};
    use std::sync::Arc;

    fn handle(a: &CMatrix) -> OversampledMatrix {
        OversampledMatrix::exact(Arc::new(SqMatrix::from_dense(a, Mode::Static).unwrap()))
    }

    fn dense_m_op(b: &CMatrix, w: &CMatrix, sigma: f64) -> CMatrix {
        let fsqrt = ScalarFunction::disc_sqrt(sigma).unwrap();
        let finv = ScalarFunction::disc_inv(sigma).unwrap();
        let sb = b.adjoint() * b;
        let sw = w.adjoint() * w;
        let fs = dense_eigen_transform(&sb, &|x| fsqrt.eval(x));
        let fi = dense_eigen_transform(&sw, &|x| finv.eval(x));
        &fs * fi * &fs
    }

    #[test]
    fn identity_within_class_rank_one_between() {
        // W scaled so finv acts as a constant above the threshold, B rank
        // one. A full-spectrum W is the hardest case for row sampling (every
        // row carries equal weight), so keep the dimension small and the
        // sketch generous.
        let mut rng = rng_for(1, 0);
        let n = 8;
        let b = gen_matrix(&SynthSpec::low_rank(20, n, &[2.0]), &mut rng);
        let w = gen_matrix(&SynthSpec::low_rank(n, n, &vec![1.2; n]), &mut rng);
        let params = DiscriminantParams {
            sigma: 1.0,
            eps: 0.15,
            delta: 0.1,
            b_sizes: SketchSizes::new(150, 150),
            w_sizes: SketchSizes::new(1200, 1200),
            cross: 4000,
        };
        let out =
            discriminant_analysis(&handle(&b), &handle(&w), &params, &mut rng).unwrap();
        assert_eq!(out.eigenvalues.len(), 1);
        let truth = dense_m_op(&b, &w, 1.0);
        let eig = crate::dense::hermitian_eig(&truth);
        assert!(
            (out.eigenvalues[0] - eig.eigenvalues[0]).abs() <= 0.2 * eig.eigenvalues[0].max(1.0),
            "{} vs {}",
            out.eigenvalues[0],
            eig.eigenvalues[0]
        );
        assert!(out.alpha <= 0.25, "alpha {}", out.alpha);
    }

    #[test]
    fn equal_scatter_matrices() {
        // B = W: the operator acts like a thresholded identity on the shared
        // spectrum; residual M U - U D must be small.
        let mut rng = rng_for(2, 0);
        let n = 30;
        let b = gen_matrix(&SynthSpec::low_rank(40, n, &[2.0, 1.5, 1.2]), &mut rng);
        let sigma = 1.0;
        let params = DiscriminantParams {
            sigma,
            eps: 0.12,
            delta: 0.1,
            b_sizes: SketchSizes::new(140, 140),
            w_sizes: SketchSizes::new(140, 140),
            cross: 4000,
        };
        let out = discriminant_analysis(&handle(&b), &handle(&b), &params, &mut rng).unwrap();
        let m_op = dense_m_op(&b, &b, sigma);
        let k = out.eigenvalues.len();
        let u_dense = CMatrix::from_fn(n, k, |j, col| out.eigenvectors[col].entry(j));
        let mut ud = u_dense.clone();
        for col in 0..k {
            for j in 0..n {
                ud[(j, col)] *= c(out.eigenvalues[col]);
            }
        }
        let resid = spectral_norm(&(&m_op * &u_dense - ud));
        let b_norm = spectral_norm(&b);
        let cap = params.eps * b_norm * b_norm / (sigma * sigma);
        assert!(resid <= 3.0 * cap, "residual {resid} vs {cap}");
    }

    #[test]
    fn threshold_above_spectrum_flagged() {
        let mut rng = rng_for(3, 0);
        let b = gen_matrix(&SynthSpec::low_rank(20, 15, &[0.5]), &mut rng);
        let w = gen_matrix(&SynthSpec::low_rank(20, 15, &[1.5]), &mut rng);
        let params = DiscriminantParams {
            sigma: 3.0,
            eps: 0.2,
            delta: 0.1,
            b_sizes: SketchSizes::new(40, 40),
            w_sizes: SketchSizes::new(40, 40),
            cross: 500,
        };
        assert!(matches!(
            discriminant_analysis(&handle(&b), &handle(&w), &params, &mut rng),
            Err(Error::EmptyFactor { .. })
        ));
    }
}
