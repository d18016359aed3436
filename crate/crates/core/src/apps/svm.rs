//! Least-squares support vector machines, dequantized two ways: through the
//! thresholded pseudoinverse of the normalized saddle-point matrix (with a
//! lazily estimated kernel), and through block inversion of X† X + sigma^2 I.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rand::RngCore;

use super::common::{base_guarantee, ThresholdSpec};
use super::regression::{solve_regularized, RegressionParams};
use crate::dense::{c, CVector};
use crate::error::{Error, Result};
use crate::io::Manifest;
use crate::rng::SeededRng;
use crate::sketch::inner_product_estimate;
use crate::sq::{
    linear_combination, matrix_linear_combination, outer_product, row_vector, MatrixQuery,
    Mode, OversampledMatrix, OversampledVector, SampleMatrix, SampleVector, SqMatrix, SqVector,
    VectorQuery,
};
use crate::svt::{even_svt, EvenSvtParams, NormMode, ScalarFunction, SketchSizes};

// ---------------------------------------------------------------------------
// Primary route: normalized saddle-point matrix + thresholded pseudoinverse

#[derive(Debug, Clone)]
pub struct SvmParams {
    pub gamma: f64,
    /// Threshold spec (lambda, eta) for the pseudoinverse of Fhat.
    pub spec: ThresholdSpec,
    pub eps: f64,
    pub delta: f64,
    pub sizes: SketchSizes,
    /// Additive tolerance of each lazily estimated kernel entry, relative to
    /// the Cauchy-Schwarz scale.
    pub kernel_eps: f64,
    pub kernel_seed: u64,
    /// Tolerance constant forwarded to the inner regression solve.
    pub tol_constant: f64,
}

pub struct SvmOutput {
    /// SQ handle over (b, alpha) in R^{m+1}.
    pub handle: OversampledVector,
    pub trace_f: f64,
    pub guarantee: Manifest,
}

/// Lazily estimated kernel block: entries K(i,j) ~ X(i,.) X(j,.)† computed
/// on first access by inner-product estimation and cached (Hermitian via
/// canonicalization), bounded by the Cauchy-Schwarz outer product.
struct LazyKernelQuery {
    x: OversampledMatrix,
    eps: f64,
    delta_each: f64,
    cache: Mutex<HashMap<(usize, usize), Complex64>>,
    rng: Mutex<SeededRng>,
}

impl LazyKernelQuery {
    fn kernel(&self, i: usize, j: usize) -> Complex64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        let cached = { self.cache.lock().unwrap().get(&(a, b)).copied() };
        let value = match cached {
            Some(v) => v,
            None => {
                let row_a = row_vector(&self.x, a);
                let row_b = RowQueryView { x: &self.x, i: b };
                let tol = self.eps
                    * (self.x.bound().row_norm_sq(a) * self.x.bound().row_norm_sq(b)).sqrt();
                let mut rng = self.rng.lock().unwrap();
                // K(a,b) = X(a,.) X(b,.)† = conj(<X(a,.), X(b,.)>).
                let ip = inner_product_estimate(
                    &row_a,
                    &row_b,
                    Some(self.x.bound().row_norm_sq(b)),
                    tol.max(1e-300),
                    self.delta_each,
                    &mut *rng,
                )
                .expect("kernel estimate");
                let v = ip.conj();
                self.cache.lock().unwrap().insert((a, b), v);
                v
            }
        };
        if i <= j {
            value
        } else {
            value.conj()
        }
    }
}

struct RowQueryView<'a> {
    x: &'a OversampledMatrix,
    i: usize,
}

impl VectorQuery for RowQueryView<'_> {
    fn len(&self) -> usize {
        self.x.shape().1
    }

    fn entry(&self, j: usize) -> Complex64 {
        self.x.entry(self.i, j)
    }
}

/// The full (m+1) x (m+1) query: (L + [[0,0],[0,K]]) / Tr(F).
struct SaddleQuery {
    kernel: LazyKernelQuery,
    m: usize,
    inv_gamma: f64,
    inv_trace: f64,
}

impl MatrixQuery for SaddleQuery {
    fn shape(&self) -> (usize, usize) {
        (self.m + 1, self.m + 1)
    }

    fn entry(&self, i: usize, j: usize) -> Complex64 {
        let scale = c(self.inv_trace);
        if i == 0 && j == 0 {
            c(0.0)
        } else if i == 0 || j == 0 {
            scale
        } else {
            let mut v = self.kernel.kernel(i - 1, j - 1);
            if i == j {
                v += c(self.inv_gamma);
            }
            v * scale
        }
    }
}

/// Embed an m x m bound into (m+1) x (m+1) with a zero first row/column.
struct ShiftedBound {
    inner: Arc<dyn SampleMatrix>,
}

impl MatrixQuery for ShiftedBound {
    fn shape(&self) -> (usize, usize) {
        let (m, n) = self.inner.shape();
        (m + 1, n + 1)
    }

    fn entry(&self, i: usize, j: usize) -> Complex64 {
        if i == 0 || j == 0 {
            c(0.0)
        } else {
            self.inner.entry(i - 1, j - 1)
        }
    }
}

impl SampleMatrix for ShiftedBound {
    fn sample_row(&self, rng: &mut dyn RngCore) -> usize {
        self.inner.sample_row(rng) + 1
    }

    fn sample_in_row(&self, i: usize, rng: &mut dyn RngCore) -> usize {
        assert!(i >= 1, "zero row has no mass");
        self.inner.sample_in_row(i - 1, rng) + 1
    }

    fn row_norm_sq(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.inner.row_norm_sq(i - 1)
        }
    }

    fn frob_sq(&self) -> f64 {
        self.inner.frob_sq()
    }
}

/// Train an LS-SVM: returns an SQ handle over the solution (b, alpha) of the
/// saddle-point system, solved through the thresholded pseudoinverse of
/// Fhat = F / Tr(F).
pub fn svm_train(
    x: &OversampledMatrix,
    y: &SqVector,
    params: &SvmParams,
    rng: &mut dyn RngCore,
) -> Result<SvmOutput> {
    let (m, _n) = x.shape();
    if y.len() != m {
        return Err(Error::ShapeMismatch {
            expected: format!("{m}"),
            got: format!("{}", y.len()),
        });
    }
    for (i, z) in y.entries().iter().enumerate() {
        if (z.norm() - 1.0).abs() > 1e-12 || z.im.abs() > 1e-12 {
            return Err(Error::InvalidParam(format!(
                "label {i} = {z} is not +/-1"
            )));
        }
    }
    if params.gamma <= 0.0 {
        return Err(Error::InvalidParam("gamma must be positive".into()));
    }
    let phi = x.phi_or(1.0);
    let x_frob_sq = x.bound_frob_sq() / phi;
    let trace_f = x_frob_sq + m as f64 / params.gamma;

    // Query side: lazily estimated entries with failure budget delta/2 split
    // over q = m^2 potential kernel queries.
    let delta_each = params.delta / (2.0 * (m * m) as f64);
    let kernel = LazyKernelQuery {
        x: x.clone(),
        eps: params.kernel_eps,
        delta_each,
        cache: Mutex::new(HashMap::new()),
        rng: Mutex::new(crate::rng::rng_for(params.kernel_seed, 777)),
    };
    let query = Arc::new(SaddleQuery {
        kernel,
        m,
        inv_gamma: 1.0 / params.gamma,
        inv_trace: 1.0 / trace_f,
    });

    // Bound side: L is explicit; the kernel block is bounded by
    // (1 + kernel_eps) x_norms x_norms† (Cauchy-Schwarz plus estimate slack).
    let mut l_rows = vec![vec![c(0.0); m + 1]; m + 1];
    for i in 1..=m {
        l_rows[0][i] = c(1.0);
        l_rows[i][0] = c(1.0);
        l_rows[i][i] = c(1.0 / params.gamma);
    }
    let l_handle = OversampledMatrix::exact(Arc::new(SqMatrix::build(l_rows, Mode::Static)?));
    let x_norms: Vec<Complex64> = (0..m)
        .map(|i| c((x.bound().row_norm_sq(i)).sqrt() * (1.0 + params.kernel_eps).sqrt()))
        .collect();
    let norms_vec = OversampledVector::exact(Arc::new(SqVector::build(x_norms, Mode::Static)?));
    let k_outer = outer_product(&norms_vec, &norms_vec);
    let k_shifted = OversampledMatrix::trusted(
        Arc::new(ShiftedBound {
            inner: k_outer.bound().clone(),
        }),
        Arc::new(ShiftedBound {
            inner: k_outer.bound().clone(),
        }),
        None,
    );
    let scale = c(1.0 / trace_f);
    let bound_combo = matrix_linear_combination(&[(l_handle, scale), (k_shifted, scale)])?;
    let saddle = OversampledMatrix::trusted(query, bound_combo.bound().clone(), None);

    // Right-hand side (0, y).
    let mut b_data = vec![c(0.0)];
    b_data.extend_from_slice(y.entries());
    let b_query = super::common::DenseVectorQuery(CVector::from_vec(b_data));
    let reg_params = RegressionParams::new(
        params.spec,
        params.eps,
        params.delta / 2.0,
        params.sizes,
    )
    .with_tol_constant(params.tol_constant);
    let reg = solve_regularized(&saddle, &b_query, y.norm_sq(), &reg_params, rng)?;

    let mut guarantee = base_guarantee("svm", params.eps, params.delta);
    guarantee.insert("gamma".into(), format!("{}", params.gamma));
    guarantee.insert("lambda".into(), format!("{}", params.spec.sigma));
    guarantee.insert("eta".into(), format!("{}", params.spec.eta));
    guarantee.insert("trace_f".into(), format!("{trace_f}"));
    guarantee.insert("kernel_eps".into(), format!("{}", params.kernel_eps));
    Ok(SvmOutput {
        handle: reg.handle,
        trace_f,
        guarantee,
    })
}

// ---------------------------------------------------------------------------
// Alternate route: block inversion of M = X† X + sigma^2 I

#[derive(Debug, Clone)]
pub struct SvmAltParams {
    pub gamma: f64,
    pub eps: f64,
    pub delta: f64,
    pub sizes: SketchSizes,
    /// Tolerance fractions for the R 1, R y, and 1† y estimates.
    pub vec_eps: f64,
}

pub struct SvmAltOutput {
    pub b_hat: Complex64,
    /// SQ handle over alpha-hat in R^m.
    pub alpha: OversampledVector,
    pub guarantee: Manifest,
}

/// Block-inversion LS-SVM: given sq(X†) as `d` (features x points), solve the
/// saddle-point system through f(lambda) = 1/(lambda + sigma^2) with
/// sigma^2 = 1/gamma.
pub fn svm_train_alt(
    d: &OversampledMatrix,
    y: &SqVector,
    params: &SvmAltParams,
    rng: &mut dyn RngCore,
) -> Result<SvmAltOutput> {
    let (_n_features, m) = d.shape();
    if y.len() != m {
        return Err(Error::ShapeMismatch {
            expected: format!("{m}"),
            got: format!("{}", y.len()),
        });
    }
    if params.gamma <= 0.0 {
        return Err(Error::InvalidParam("gamma must be positive".into()));
    }
    let sigma_sq = 1.0 / params.gamma;
    let f = ScalarFunction::inverse_shift(sigma_sq)?;
    let even = EvenSvtParams::new(params.eps, params.delta / 2.0, NormMode::Spectral, params.sizes);
    let rur = even_svt(d, &f, even, rng)?;

    let ones = OversampledVector::exact(Arc::new(SqVector::build(vec![c(1.0); m], Mode::Static)?));
    let y_handle = OversampledVector::exact(Arc::new(y.clone()));
    let tol = params.vec_eps * (m as f64).sqrt() * sigma_sq.sqrt();
    let r1 = rur.estimate_rb(&ones, tol, params.delta / 8.0, rng);
    let ry = rur.estimate_rb(&y_handle, tol, params.delta / 8.0, rng);
    let ones_query = super::common::DenseVectorQuery(CVector::from_element(m, c(1.0)));
    let sum_y = inner_product_estimate(
        &y_handle,
        &ones_query,
        Some(m as f64),
        params.vec_eps * m as f64,
        params.delta / 8.0,
        rng,
    )?
    .conj();

    let z_ry = rur.apply_middle(&ry);
    let z_r1 = rur.apply_middle(&r1);
    let dot = |a: &CVector, b: &CVector| -> Complex64 {
        a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
    };
    let inv_s2 = c(1.0 / sigma_sq);
    let numer = dot(&r1, &z_ry) + inv_s2 * sum_y;
    let denom = dot(&r1, &z_r1) + inv_s2 * c(m as f64);
    let b_hat = numer / denom;

    // alpha = R† Z (ry - b r1) + sigma^-2 (y - b 1).
    let mut coeff = ry.clone();
    coeff.zip_apply(&r1, |c_ry, c_r1| *c_ry -= b_hat * c_r1);
    let z_coeff = rur.apply_middle(&coeff);
    let mut terms: Vec<(OversampledVector, Complex64)> = Vec::with_capacity(rur.rows() + 2);
    for (k, srow) in rur.sketched().sketch().rows().iter().enumerate() {
        terms.push((
            crate::sq::conj_row_vector(rur.sketched().source(), srow.index),
            z_coeff[k] * c(srow.weight),
        ));
    }
    terms.push((y_handle, inv_s2));
    terms.push((ones, -b_hat * inv_s2));
    let alpha = linear_combination(&terms)?;

    let mut guarantee = base_guarantee("svm_alt", params.eps, params.delta);
    guarantee.insert("gamma".into(), format!("{}", params.gamma));
    guarantee.insert("sigma_sq".into(), format!("{sigma_sq}"));
    guarantee.insert("rows".into(), format!("{}", rur.rows()));
    Ok(SvmAltOutput {
        b_hat,
        alpha,
        guarantee,
    })
}
