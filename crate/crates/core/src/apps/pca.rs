//! Principal component analysis for close-to-low-rank data: eigenvalue
//! estimates from the sketched core, then one narrow window transform per
//! component turning the RUR into a rank-one outer product.

use num_complex::Complex64;
use rand::RngCore;

use super::common::base_guarantee;
use crate::dense::c;
use crate::error::{Error, Result};
use crate::io::Manifest;
use crate::sq::{conj_row_vector, linear_combination, OversampledMatrix, OversampledVector};
use crate::svt::{even_svt, EvenSvtParams, NormMode, ScalarFunction, SketchSizes};

#[derive(Debug, Clone)]
pub struct PcaParams {
    pub k: usize,
    /// Spectral-gap parameter: consecutive top eigenvalues of X†X are
    /// assumed separated by eta_gap ||X||^2.
    pub eta_gap: f64,
    pub eps: f64,
    pub delta: f64,
    pub sizes: SketchSizes,
}

pub struct PcaOutput {
    /// Top-k eigenvalue estimates of X†X, descending.
    pub eigenvalues: Vec<f64>,
    /// SQ handles over the corresponding eigenvector estimates.
    pub eigenvectors: Vec<OversampledVector>,
    /// The operator-norm-squared estimate used to scale the windows.
    pub spectral_sq_estimate: f64,
    pub guarantee: Manifest,
}

pub fn pca(x: &OversampledMatrix, params: &PcaParams, rng: &mut dyn RngCore) -> Result<PcaOutput> {
    let mut guarantee = base_guarantee("pca", params.eps, params.delta);
    guarantee.insert("k".into(), format!("{}", params.k));
    guarantee.insert("eta_gap".into(), format!("{}", params.eta_gap));
    guarantee.insert("rows".into(), format!("{}", params.sizes.rows));
    guarantee.insert("cols".into(), format!("{}", params.sizes.cols));
    if params.k == 0 {
        return Ok(PcaOutput {
            eigenvalues: Vec::new(),
            eigenvectors: Vec::new(),
            spectral_sq_estimate: 0.0,
            guarantee,
        });
    }
    if !(0.0 < params.eta_gap && params.eta_gap <= 1.0) {
        return Err(Error::InvalidParam("eta_gap must lie in (0, 1]".into()));
    }

    // One sketch pass shared by the eigenvalue estimates and every window.
    let identity = ScalarFunction::identity();
    let even = EvenSvtParams::new(params.eps, params.delta, NormMode::Spectral, params.sizes);
    let rur = even_svt(x, &identity, even, rng)?;
    let core_sv = rur.core_singular_values();
    if core_sv.len() < params.k {
        return Err(Error::InvalidParam(format!(
            "sketch rank {} below requested k = {}",
            core_sv.len(),
            params.k
        )));
    }
    let lambda_hat: Vec<f64> = core_sv.iter().take(params.k).map(|s| s * s).collect();
    let spectral_sq = core_sv[0] * core_sv[0];
    let width = params.eta_gap * spectral_sq;

    let mut eigenvectors = Vec::with_capacity(params.k);
    for (idx, &lam) in lambda_hat.iter().enumerate() {
        let window = ScalarFunction::pca_window(lam, width)?;
        // The window must capture exactly one sketched singular value.
        let support = width / 4.0;
        let captured: Vec<usize> = core_sv
            .iter()
            .enumerate()
            .filter(|(_, &s)| (s * s - lam).abs() < support)
            .map(|(l, _)| l)
            .collect();
        if captured.len() != 1 {
            return Err(Error::DegenerateSpectrum {
                index: idx,
                count: captured.len(),
            });
        }
        let l = captured[0];
        let d_l = core_sv[l];
        let fbar = window.eval_bar(d_l * d_l);
        // R† fbar(CC†) R is rank one here: vhat = sqrt(fbar(d^2)) R† U_C(., l).
        let scale = c(fbar.norm().sqrt());
        let terms: Vec<(OversampledVector, Complex64)> = rur
            .sketched()
            .sketch()
            .rows()
            .iter()
            .enumerate()
            .map(|(krow, srow)| {
                (
                    conj_row_vector(rur.sketched().source(), srow.index),
                    scale * rur.core_left()[(krow, l)] * c(srow.weight),
                )
            })
            .collect();
        eigenvectors.push(linear_combination(&terms)?);
    }
    Ok(PcaOutput {
        eigenvalues: lambda_hat,
        eigenvectors,
        spectral_sq_estimate: spectral_sq,
        guarantee,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{CMatrix, CVector};
    use crate::rng::rng_for;
    use crate::sq::{Mode, SqMatrix};
    use crate::synth::{gen_matrix, SynthSpec};
    use std::sync::Arc;

    fn handle(a: &CMatrix) -> OversampledMatrix {
        OversampledMatrix::exact(Arc::new(SqMatrix::from_dense(a, Mode::Static).unwrap()))
    }

    fn dense_vec(v: &OversampledVector) -> CVector {
        CVector::from_fn(v.len(), |i, _| v.entry(i))
    }

    /// Align the estimate's global phase to the reference before comparing.
    fn aligned_distance(est: &CVector, reference: &CVector) -> f64 {
        let overlap: Complex64 = reference
            .iter()
            .zip(est.iter())
            .map(|(r, e)| r.conj() * e)
            .sum();
        let phase = if overlap.norm() > 0.0 {
            overlap / c(overlap.norm())
        } else {
            c(1.0)
        };
        (est / phase - reference).norm()
    }

    #[test]
    fn empty_request() {
        let mut rng = rng_for(1, 0);
        let a = gen_matrix(&SynthSpec::low_rank(20, 10, &[1.0]), &mut rng);
        let out = pca(
            &handle(&a),
            &PcaParams {
                k: 0,
                eta_gap: 0.5,
                eps: 0.1,
                delta: 0.1,
                sizes: SketchSizes::new(10, 10),
            },
            &mut rng,
        )
        .unwrap();
        assert!(out.eigenvalues.is_empty());
        assert!(out.eigenvectors.is_empty());
    }

    #[test]
    fn diagonal_two_by_two() {
        // X = diag(2, 1): lambda_1 = 4, v_1 = e_1 up to sign.
        let mut rng = rng_for(2, 0);
        let mut x = CMatrix::zeros(2, 2);
        x[(0, 0)] = c(2.0);
        x[(1, 1)] = c(1.0);
        let out = pca(
            &handle(&x),
            &PcaParams {
                k: 1,
                eta_gap: 0.7,
                eps: 0.1,
                delta: 0.1,
                sizes: SketchSizes::new(400, 400),
            },
            &mut rng,
        )
        .unwrap();
        assert!((out.eigenvalues[0] - 4.0).abs() < 0.2, "{}", out.eigenvalues[0]);
        let v = dense_vec(&out.eigenvectors[0]);
        let e1 = CVector::from_fn(2, |i, _| c(if i == 0 { 1.0 } else { 0.0 }));
        assert!(aligned_distance(&v, &e1) < 0.1);
    }

    #[test]
    fn rank_three_recovery() {
        let mut rng = rng_for(3, 0);
        let spectrum = [3.0, 2.0, 1.0];
        let x = gen_matrix(&SynthSpec::low_rank(80, 40, &spectrum), &mut rng);
        let h = handle(&x);
        // Dense reference.
        let gram = x.adjoint() * &x;
        let eig = crate::dense::hermitian_eig(&gram);
        // eta from the true gaps: min gap / ||X||^2.
        let gaps = [
            eig.eigenvalues[0] - eig.eigenvalues[1],
            eig.eigenvalues[1] - eig.eigenvalues[2],
            eig.eigenvalues[2],
        ];
        let eta = gaps.iter().cloned().fold(f64::INFINITY, f64::min) / eig.eigenvalues[0] * 0.9;
        let out = pca(
            &h,
            &PcaParams {
                k: 3,
                eta_gap: eta,
                eps: 0.15,
                delta: 0.1,
                sizes: SketchSizes::new(200, 200),
            },
            &mut rng,
        )
        .unwrap();
        let trace: f64 = eig.eigenvalues.iter().sum();
        let total_dev: f64 = out
            .eigenvalues
            .iter()
            .zip(eig.eigenvalues.iter())
            .map(|(a, b)| (a - b).abs())
            .sum();
        assert!(total_dev <= 0.15 * trace, "sum |dev| {total_dev}");
        for i in 0..3 {
            let v = dense_vec(&out.eigenvectors[i]);
            let reference = eig.eigenvectors.column(i).clone_owned();
            let dist = aligned_distance(&v, &reference);
            assert!(dist <= 0.35, "eigenvector {i} distance {dist}");
        }
    }

    #[test]
    fn degenerate_window_detected() {
        // Two nearly equal singular values with an eta_gap that pretends they
        // are widely separated: the window captures both sketched values and
        // must error out.
        let mut rng = rng_for(4, 0);
        let x = gen_matrix(&SynthSpec::low_rank(40, 30, &[2.0, 1.999]), &mut rng);
        let res = pca(
            &handle(&x),
            &PcaParams {
                k: 1,
                eta_gap: 0.9,
                eps: 0.1,
                delta: 0.1,
                sizes: SketchSizes::new(400, 400),
            },
            &mut rng,
        );
        assert!(matches!(res, Err(Error::DegenerateSpectrum { .. })));
    }
}
