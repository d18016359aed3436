//! Hamiltonian simulation: e^{iH} b = cos(H) b + i sinc(H) H b, realized by
//! two even singular value transformations (for cos and sinc of the squared
//! spectrum) and four sketched product approximations.

use num_complex::Complex64;
use rand::RngCore;

use super::common::base_guarantee;
use crate::dense::{c, CMatrix, CVector};
use crate::error::{Error, Result};
use crate::io::Manifest;
use crate::sketch::{MixtureDist, RowNormDist, RowSketch, SketchedMatrix, VectorDist};
use crate::sq::{
    conj_row_vector, linear_combination, OversampledMatrix, OversampledVector,
};
use crate::svt::{
    even_svt, EvenSvtParams, HamiltonianMode, NormMode, ScalarFunction, SketchSizes,
};

#[derive(Debug, Clone, Copy)]
pub enum EvolveMode {
    /// All singular values of H at least sigma; better Lipschitz constants.
    LowRank { sigma: f64 },
    General,
}

#[derive(Debug, Clone)]
pub struct HamiltonianParams {
    pub mode: EvolveMode,
    pub eps: f64,
    pub delta: f64,
    pub cos_sizes: SketchSizes,
    pub sinc_sizes: SketchSizes,
    /// Absolute tolerance of the R_cos b estimate.
    pub rb_tol: f64,
    /// Sketch sizes of the remaining three product approximations.
    pub s_rh: usize,
    pub s_cb: usize,
    pub s_hb: usize,
    pub hermitian_probes: usize,
}

pub struct HamiltonianOutput {
    /// SQ handle over bhat ~ e^{iH} b.
    pub handle: OversampledVector,
    pub guarantee: Manifest,
}

pub fn hamiltonian_evolve(
    h: &OversampledMatrix,
    b: &OversampledVector,
    params: &HamiltonianParams,
    rng: &mut dyn RngCore,
) -> Result<HamiltonianOutput> {
    h.hermitian_spot_check(params.hermitian_probes, rng)?;
    let n = h.shape().0;
    if b.len() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("{n}"),
            got: format!("{}", b.len()),
        });
    }
    let b_norm_sq = b
        .known_norm_sq()
        .ok_or_else(|| Error::InvalidParam("evolution needs a known ||b||".into()))?;
    if (b_norm_sq.sqrt() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParam(format!(
            "||b|| = {} but must be 1",
            b_norm_sq.sqrt()
        )));
    }
    match params.mode {
        EvolveMode::LowRank { sigma } => {
            if params.eps >= 0.5_f64.min(sigma) {
                return Err(Error::InvalidParam(
                    "low-rank mode needs eps < min(0.5, sigma)".into(),
                ));
            }
        }
        EvolveMode::General => {
            if params.eps >= 0.5 {
                return Err(Error::InvalidParam("general mode needs eps < 0.5".into()));
            }
        }
    }

    let fn_mode = match params.mode {
        EvolveMode::LowRank { sigma } => HamiltonianMode::LowRank { sigma },
        EvolveMode::General => HamiltonianMode::General,
    };
    let f_cos = ScalarFunction::hamiltonian_cos(fn_mode);
    let f_sinc = ScalarFunction::hamiltonian_sinc(fn_mode);
    let delta_part = params.delta / 6.0;
    let rur_cos = even_svt(
        h,
        &f_cos,
        EvenSvtParams::new(params.eps, delta_part, NormMode::Spectral, params.cos_sizes),
        rng,
    )?;
    let rur_sinc = even_svt(
        h,
        &f_sinc,
        EvenSvtParams::new(params.eps, delta_part, NormMode::Spectral, params.sinc_sizes),
        rng,
    )?;

    // (1) u ~ R_cos b.
    let u = rur_cos.estimate_rb(b, params.rb_tol, delta_part, rng);

    // (2) R_sinc H ~ W C2 with C2 = S2 H a row-subset handle of H.
    let h_rows = RowNormDist::of(h);
    let sinc_cols = rur_sinc.sketched().column_dist();
    let mix2 = MixtureDist {
        a: &sinc_cols,
        b: &h_rows,
    };
    let s2 = RowSketch::draw(&mix2, params.s_rh, rng);
    // W(k, l) = w_l R_sinc(k, j_l).
    let w_mat = CMatrix::from_fn(rur_sinc.rows(), s2.len(), |k, l| {
        let row = s2.rows()[l];
        c(row.weight) * rur_sinc.sketched().entry(k, row.index)
    });
    let c2 = SketchedMatrix::new(h.clone(), s2, None);

    // (3) v ~ C2 b via a joint sketch over [n].
    let c2_cols = c2.column_dist();
    let b_dist = VectorDist::of(b);
    let mix3 = MixtureDist {
        a: &c2_cols,
        b: &b_dist,
    };
    let s4 = RowSketch::draw(&mix3, params.s_cb, rng);
    let s4_c2t = s4.apply_rows(c2.nrows(), |j, l| c2.entry(l, j).conj());
    let s4_b = s4.apply_vector(b.query().as_ref());
    let v = s4_c2t.adjoint() * s4_b;

    // (4) H b ~ R3† w with R3 = S3 H, w = S3 b.
    let mix4 = MixtureDist {
        a: &h_rows,
        b: &b_dist,
    };
    let s3 = RowSketch::draw(&mix4, params.s_hb, rng);
    let w_vec = s3.apply_vector(b.query().as_ref());

    // Assemble: bhat = R_cos† fbar_cos u + b + R_sinc† fbar_sinc (W v) + i R3† w.
    let y_cos = rur_cos.apply_middle(&u);
    let y_sinc = rur_sinc.apply_middle(&(&w_mat * &v));
    let mut terms: Vec<(OversampledVector, Complex64)> = Vec::new();
    for (k, srow) in rur_cos.sketched().sketch().rows().iter().enumerate() {
        terms.push((
            conj_row_vector(rur_cos.sketched().source(), srow.index),
            y_cos[k] * c(srow.weight),
        ));
    }
    terms.push((b.clone(), c(1.0)));
    for (k, srow) in rur_sinc.sketched().sketch().rows().iter().enumerate() {
        terms.push((
            conj_row_vector(rur_sinc.sketched().source(), srow.index),
            y_sinc[k] * c(srow.weight),
        ));
    }
    let i_unit = Complex64::new(0.0, 1.0);
    for (t, srow) in s3.rows().iter().enumerate() {
        terms.push((
            conj_row_vector(h, srow.index),
            i_unit * c(srow.weight) * w_vec[t],
        ));
    }
    let handle = linear_combination(&terms)?;

    let mut guarantee = base_guarantee("hamiltonian", params.eps, params.delta);
    guarantee.insert(
        "mode".into(),
        match params.mode {
            EvolveMode::LowRank { sigma } => format!("lowrank sigma={sigma}"),
            EvolveMode::General => "general".into(),
        },
    );
    guarantee.insert("r_cos".into(), format!("{}", params.cos_sizes.rows));
    guarantee.insert("c_cos".into(), format!("{}", params.cos_sizes.cols));
    guarantee.insert("r_sinc".into(), format!("{}", params.sinc_sizes.rows));
    guarantee.insert("c_sinc".into(), format!("{}", params.sinc_sizes.cols));
    guarantee.insert("s_rh".into(), format!("{}", params.s_rh));
    guarantee.insert("s_cb".into(), format!("{}", params.s_cb));
    guarantee.insert("s_hb".into(), format!("{}", params.s_hb));
    Ok(HamiltonianOutput { handle, guarantee })
}

/// Dense entries of the output handle, for verification.
pub fn handle_to_dense(v: &OversampledVector) -> CVector {
    CVector::from_fn(v.len(), |i, _| v.entry(i))
}
