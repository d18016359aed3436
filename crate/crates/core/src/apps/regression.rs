//! Regularized least squares via the thresholded pseudoinverse:
//! xhat ~ A+_{sigma,eta} b = iota(A†A) A† b, with R A† b estimated entrywise
//! by bilinear forms and the output returned as an SQ handle over rows of A.

use num_complex::Complex64;
use rand::RngCore;

use super::common::{base_guarantee, ThresholdSpec};
use crate::dense::CVector;
use crate::error::Result;
use crate::io::Manifest;
use crate::sketch::bilinear_form_estimate;
use crate::sq::{OversampledMatrix, OversampledVector, VectorQuery};
use crate::svt::{even_svt, EvenSvtParams, NormMode, RurDecomposition, ScalarFunction, SketchSizes};

#[derive(Debug, Clone)]
pub struct RegressionParams {
    pub spec: ThresholdSpec,
    pub eps: f64,
    pub delta: f64,
    pub sizes: SketchSizes,
    /// Leading constant on the per-entry tolerance of the R A† b estimates
    /// (the asymptotic formula carries an unspecified constant; larger values
    /// mean fewer samples and are validated against the oracle during
    /// calibration).
    pub tol_constant: f64,
}

impl RegressionParams {
    pub fn new(spec: ThresholdSpec, eps: f64, delta: f64, sizes: SketchSizes) -> Self {
        Self {
            spec,
            eps,
            delta,
            sizes,
            tol_constant: 1.0,
        }
    }

    pub fn with_tol_constant(mut self, c: f64) -> Self {
        self.tol_constant = c;
        self
    }
}

pub struct RegressionOutput {
    /// SQ handle over xhat = R† iotabar(C C†) u.
    pub handle: OversampledVector,
    /// The estimated vector u ~ R A† b.
    pub u: CVector,
    /// Set when the thresholded solution is essentially zero, in which case
    /// only the worst-case bound ||xhat - x*|| <= eps sigma^-1 ||b|| is
    /// meaningful.
    pub worst_case_mode: bool,
    pub rur: RurDecomposition,
    pub guarantee: Manifest,
}

/// Solve min ||Ax - b|| on the well-conditioned subspace: xhat approximates
/// the thresholded pseudoinverse applied to b. `b_norm_sq` is an upper bound
/// on ||b||^2 (required by the estimators).
pub fn solve_regularized(
    a: &OversampledMatrix,
    b: &dyn VectorQuery,
    b_norm_sq: f64,
    params: &RegressionParams,
    rng: &mut dyn RngCore,
) -> Result<RegressionOutput> {
    let iota = ScalarFunction::thresholded_inverse(params.spec.sigma, params.spec.eta)?;
    let even = EvenSvtParams::new(
        params.eps,
        params.delta / 2.0,
        NormMode::Spectral,
        params.sizes,
    );
    let rur = even_svt(a, &iota, even, rng)?;

    // Per-entry tolerance eps ||R(k,.)|| ||A||_F ||b|| / (K sqrt(kappa)) with
    // K = ||A||_F^2/sigma^2 and kappa = ||A||^2/sigma^2; the spectral norm is
    // estimated by the top core singular value.
    let phi = a.phi_or(1.0);
    let frob = (a.bound_frob_sq() / phi).sqrt();
    let spectral_est = rur.core_singular_values().first().copied().unwrap_or(frob);
    let sigma = params.spec.sigma;
    let b_norm = b_norm_sq.sqrt();
    let r = rur.rows();
    let delta_each = params.delta / (2.0 * r as f64);
    let mut u = CVector::zeros(r);
    for k in 0..r {
        let row_norm = rur.sketched().bound_row_norm_sq(k).sqrt();
        let tol = params.tol_constant * params.eps * row_norm * b_norm * sigma.powi(3)
            / (frob * spectral_est);
        // u_k = R(k,.) A† b = conj( b† A conj(R(k,.))† ).
        let y_query = ConjSketchRow { rur: &rur, k };
        let est = bilinear_form_estimate(
            b,
            b_norm_sq,
            a,
            &y_query,
            row_norm * row_norm,
            tol.max(1e-300),
            delta_each,
            rng,
        )?;
        u[k] = est.conj();
    }

    let y = rur.apply_middle(&u);
    let worst_case_mode = y.norm() * frob <= params.eps * b_norm / sigma * 1e-6;
    let handle = rur.output_handle(&u, None)?;

    let mut guarantee = base_guarantee("regression", params.eps, params.delta);
    guarantee.insert("sigma".into(), format!("{sigma}"));
    guarantee.insert("eta".into(), format!("{}", params.spec.eta));
    guarantee.insert("rows".into(), format!("{r}"));
    guarantee.insert("cols".into(), format!("{}", rur.cols()));
    guarantee.insert("worst_case_mode".into(), format!("{worst_case_mode}"));
    Ok(RegressionOutput {
        handle,
        u,
        worst_case_mode,
        rur,
        guarantee,
    })
}

struct ConjSketchRow<'a> {
    rur: &'a RurDecomposition,
    k: usize,
}

impl VectorQuery for ConjSketchRow<'_> {
    fn len(&self) -> usize {
        self.rur.dim()
    }

    fn entry(&self, j: usize) -> Complex64 {
        self.rur.sketched().entry(self.k, j).conj()
    }
}
