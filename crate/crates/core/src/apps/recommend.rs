//! Recommendation: sample a column from a thresholded low-rank approximation
//! of one row, Ahat(i,.) = A(i,.) R† tbar(C C†) R, without touching the full
//! matrix.

use num_complex::Complex64;
use rand::RngCore;

use super::common::{base_guarantee, ThresholdSpec};
use crate::dense::{c, CVector};
use crate::error::{Error, Result};
use crate::io::Manifest;
use crate::sketch::{MixtureDist, RowSketch, VectorDist};
use crate::sq::{linear_combination, row_vector, OversampledMatrix, OversampledVector};
use crate::svt::{even_svt, EvenSvtParams, NormMode, ScalarFunction, SketchSizes};

#[derive(Debug, Clone)]
pub struct RecommendParams {
    pub spec: ThresholdSpec,
    pub eps: f64,
    pub delta: f64,
    pub sizes: SketchSizes,
    /// Size of the inner sketch approximating A(i,.) R†.
    pub inner_rows: usize,
}

pub struct RecommendOutput {
    /// None when the thresholded row vanishes (all mass below threshold).
    pub sampled_column: Option<usize>,
    /// SQ handle over the estimated row x R.
    pub row_handle: Option<OversampledVector>,
    /// The small coefficient vector x = A'(i,.) R† tbar(C C†).
    pub x: CVector,
    pub guarantee: Manifest,
}

pub fn recommend(
    a: &OversampledMatrix,
    row: usize,
    params: &RecommendParams,
    rng: &mut dyn RngCore,
) -> Result<RecommendOutput> {
    let (m, _n) = a.shape();
    if row >= m {
        return Err(Error::InvalidParam(format!("row {row} out of {m}")));
    }
    if a.bound().row_norm_sq(row) == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let t = ScalarFunction::threshold_step(params.spec.sigma, params.spec.eta)?;
    let even = EvenSvtParams::new(
        params.eps,
        params.delta / 2.0,
        NormMode::Spectral,
        params.sizes,
    );
    let rur = even_svt(a, &t, even, rng)?;

    // Inner sketch: A(i,.) R† ~ (A(i,.) S'† S') R†, drawn from the mixture of
    // the row's own distribution and the column distribution of R.
    let row_handle_in = row_vector(a, row);
    let row_dist = VectorDist::of(&row_handle_in);
    let col_dist = rur.sketched().column_dist();
    let mix = MixtureDist {
        a: &row_dist,
        b: &col_dist,
    };
    let inner = RowSketch::draw(&mix, params.inner_rows, rng);
    // x0_k = sum_l w_l^2 A(i, j_l) conj(R(k, j_l)).
    let r_rows = rur.rows();
    let mut x0 = CVector::zeros(r_rows);
    for srow in inner.rows() {
        let w2 = c(srow.weight * srow.weight);
        let a_ij = a.entry(row, srow.index);
        if a_ij.norm() == 0.0 {
            continue;
        }
        for k in 0..r_rows {
            x0[k] += w2 * a_ij * rur.sketched().entry(k, srow.index).conj();
        }
    }
    // x = x0 U with U Hermitian: x = (U x0†)†.
    let x0_adj = CVector::from_fn(r_rows, |k, _| x0[k].conj());
    let y = rur.apply_middle(&x0_adj);
    let x = CVector::from_fn(r_rows, |k, _| y[k].conj());

    let mut guarantee = base_guarantee("recommend", params.eps, params.delta);
    guarantee.insert("sigma".into(), format!("{}", params.spec.sigma));
    guarantee.insert("eta".into(), format!("{}", params.spec.eta));
    guarantee.insert("rows".into(), format!("{}", params.sizes.rows));
    guarantee.insert("cols".into(), format!("{}", params.sizes.cols));
    guarantee.insert("inner_rows".into(), format!("{}", params.inner_rows));
    guarantee.insert("row".into(), format!("{row}"));
    // Failure accounting: delta/2 to the SVT event, delta/4 to the norm
    // estimate, delta/4 to rejection sampling.
    guarantee.insert("delta_split".into(), "svt:1/2,norm:1/4,reject:1/4".into());

    if x.norm() == 0.0 {
        return Ok(RecommendOutput {
            sampled_column: None,
            row_handle: None,
            x,
            guarantee,
        });
    }

    // Output handle x R = sum_k x_k w_k A(i_k, .).
    let terms: Vec<(OversampledVector, Complex64)> = rur
        .sketched()
        .sketch()
        .rows()
        .iter()
        .enumerate()
        .map(|(k, srow)| {
            (
                row_vector(rur.sketched().source(), srow.index),
                x[k] * c(srow.weight),
            )
        })
        .collect();
    let handle = linear_combination(&terms)?;

    // Rejection sampling with adaptive oversampling estimate.
    let norm_est = handle.estimate_norm_sq(0.5, params.delta / 4.0, rng)?;
    let sampled_column = if norm_est <= 0.0 {
        None
    } else {
        let phi_hat = (handle.bound_norm_sq() / norm_est).max(1.0);
        let rounds = OversampledVector::rejection_rounds(2.0 * phi_hat, params.delta / 4.0);
        Some(handle.rejection_sample(rounds, rng)?)
    };
    Ok(RecommendOutput {
        sampled_column,
        row_handle: Some(handle),
        x,
        guarantee,
    })
}
