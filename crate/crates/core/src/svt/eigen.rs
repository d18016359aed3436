//! Eigenvalue transformation of Hermitian matrices: a smooth projector onto
//! the large spectrum, a lazily estimated core R A R†, and a small
//! diagonalization yield (SA)† N† D N (SA) + f(0) I ~ f(A) together with
//! eigenvalue estimates.

use num_complex::Complex64;
use rand::RngCore;

use super::even::{even_svt, EvenSvtParams, RurDecomposition};
use super::functions::ScalarFunction;
use crate::dense::{c, hermitian_eig, CMatrix};
use crate::error::{Error, Result};
use crate::io::Manifest;
use crate::sketch::BilinearPool;
use crate::sq::{conj_row_vector, linear_combination, MatrixQuery, OversampledMatrix, OversampledVector};

#[derive(Debug, Clone)]
pub struct EigenTransformParams {
    pub eps: f64,
    pub delta: f64,
    /// Sketch sizes of the smooth-projector even-SVT stage.
    pub sizes: super::even::SketchSizes,
    /// Bilinear sample pool: per-chunk draws and chunk count (median of
    /// means), shared across all r^2 core-entry estimates.
    pub pool_per_chunk: usize,
    pub pool_chunks: usize,
    pub hermitian_probes: usize,
}

/// Approximate eigendecomposition output: f(A) ~ (SA)† N† D N (SA) + f(0) I
/// with N (s' x r) dense and D = diag(f(lambda_hat) - f(0)).
pub struct EigenDecompApprox {
    rur: RurDecomposition,
    n_mat: CMatrix,
    lambda_hat: Vec<f64>,
    d_values: Vec<Complex64>,
    f0: Complex64,
    pub params: EigenTransformParams,
}

/// Eigenvalue transformation. `f` must carry its Lipschitz constant (used to
/// place the projector knees and the trim threshold).
pub fn eigen_transform(
    h: &OversampledMatrix,
    f: &ScalarFunction,
    params: EigenTransformParams,
    rng: &mut dyn RngCore,
) -> Result<EigenDecompApprox> {
    h.hermitian_spot_check(params.hermitian_probes, rng)?;
    let l = f.lipschitz().max(1e-300);
    // Advisory degeneracy checks, when the information is there.
    if f.radius() <= params.eps / l {
        return Err(Error::InvalidParam(format!(
            "smoothness radius {} must exceed eps/L = {}",
            f.radius(),
            params.eps / l
        )));
    }

    let projector = ScalarFunction::smooth_projector(params.eps, l)?;
    let even_params = EvenSvtParams::new(
        params.eps,
        params.delta,
        super::even::NormMode::Spectral,
        params.sizes,
    );
    let rur = even_svt(h, &projector, even_params, rng)?;

    // Lazy core: estimate M(i,j) = R(i,.) A R(j,.)† for all i <= j from one
    // shared entry-sample pool, by rank-one accumulation per chunk.
    let pool = BilinearPool::draw(h, params.pool_per_chunk, params.pool_chunks, rng);
    let m = estimate_core(&rur, h, &pool, params.pool_per_chunk, params.pool_chunks);

    // Trim the core spectrum at eps / (sqrt(2) L).
    let threshold = params.eps / (2f64.sqrt() * l);
    let kept: Vec<usize> = rur
        .core_singular_values()
        .iter()
        .enumerate()
        .filter(|(_, &s)| s >= threshold)
        .map(|(i, _)| i)
        .collect();
    if kept.is_empty() {
        return Ok(EigenDecompApprox {
            rur,
            n_mat: CMatrix::zeros(0, 0),
            lambda_hat: Vec::new(),
            d_values: Vec::new(),
            f0: f.f0(),
            params,
        });
    }
    let k = kept.len();
    let r = rur.rows();
    let u_trim = CMatrix::from_fn(r, k, |i, t| rur.core_left()[(i, kept[t])]);
    let d_trim: Vec<f64> = kept
        .iter()
        .map(|&i| rur.core_singular_values()[i])
        .collect();
    let pibar_trim: Vec<Complex64> = kept.iter().map(|&i| rur.fbar_values()[i]).collect();

    // D_hat = diag(d pibar(d^2)) U† M U diag(d pibar(d^2)), Hermitian.
    let ut_m_u = u_trim.adjoint() * &m * &u_trim;
    let mut d_hat = CMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let si = c(d_trim[i]) * pibar_trim[i];
            let sj = c(d_trim[j]) * pibar_trim[j];
            d_hat[(i, j)] = si * ut_m_u[(i, j)] * sj;
        }
    }
    let eig = hermitian_eig(&d_hat);

    // N = U_Dhat† diag(1/d) U_trim†.
    let mut inv_scaled = u_trim.adjoint();
    for (t, &d) in d_trim.iter().enumerate() {
        let inv = c(1.0 / d);
        for j in 0..inv_scaled.ncols() {
            inv_scaled[(t, j)] *= inv;
        }
    }
    let n_mat = eig.eigenvectors.adjoint() * inv_scaled;
    let d_values: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .map(|&lam| f.eval(lam) - f.f0())
        .collect();
    Ok(EigenDecompApprox {
        rur,
        n_mat,
        lambda_hat: eig.eigenvalues,
        d_values,
        f0: f.f0(),
        params,
    })
}

fn estimate_core(
    rur: &RurDecomposition,
    h: &OversampledMatrix,
    pool: &BilinearPool,
    per_chunk: usize,
    chunks: usize,
) -> CMatrix {
    let _ = (h, per_chunk);
    let r = rur.rows();
    let sk = rur.sketched();
    // Chunked rank-one accumulation: each pool sample (a, b, A(a,b)/p)
    // contributes (R(., a)) (A/p) (R(., b))† to its chunk's mean.
    let mut chunk_sums: Vec<CMatrix> = vec![CMatrix::zeros(r, r); chunks.max(1)];
    let mut counts = vec![0usize; chunks.max(1)];
    for (idx, (a_idx, b_idx, v_over_p)) in pool.samples_iter().enumerate() {
        let chunk = idx / per_chunk.max(1);
        if chunk >= chunk_sums.len() {
            break;
        }
        let p_col: Vec<Complex64> = (0..r).map(|i| sk.entry(i, a_idx)).collect();
        let q_col: Vec<Complex64> = (0..r).map(|j| sk.entry(j, b_idx)).collect();
        let acc = &mut chunk_sums[chunk];
        for i in 0..r {
            let left = p_col[i] * v_over_p;
            for j in 0..r {
                acc[(i, j)] += left * q_col[j].conj();
            }
        }
        counts[chunk] += 1;
    }
    // Entrywise median over chunk means, then Hermitian symmetrization.
    let mut m = CMatrix::zeros(r, r);
    let mut res: Vec<f64> = Vec::with_capacity(chunks);
    let mut ims: Vec<f64> = Vec::with_capacity(chunks);
    for i in 0..r {
        for j in 0..r {
            res.clear();
            ims.clear();
            for (cix, s) in chunk_sums.iter().enumerate() {
                if counts[cix] == 0 {
                    continue;
                }
                let mean = s[(i, j)] / counts[cix] as f64;
                res.push(mean.re);
                ims.push(mean.im);
            }
            m[(i, j)] = Complex64::new(median(&mut res), median(&mut ims));
        }
    }
    let mt = m.adjoint();
    (m + mt) * c(0.5)
}

fn median(xs: &mut [f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

impl EigenDecompApprox {
    /// Eigenvalue estimates of A, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.lambda_hat
    }

    /// Diagonal of D (that is, f(lambda_hat) - f(0)).
    pub fn d_values(&self) -> &[Complex64] {
        &self.d_values
    }

    pub fn f0(&self) -> Complex64 {
        self.f0
    }

    pub fn rank(&self) -> usize {
        self.lambda_hat.len()
    }

    pub fn rur(&self) -> &RurDecomposition {
        &self.rur
    }

    pub fn n_mat(&self) -> &CMatrix {
        &self.n_mat
    }

    /// Entry of U~ = N (S A) at (p, a); costs one pass over N's row.
    pub fn u_tilde_entry(&self, p: usize, a: usize) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..self.rur.rows() {
            acc += self.n_mat[(p, k)] * self.rur.sketched().entry(k, a);
        }
        acc
    }

    /// Column of U~ at index a (length s').
    pub fn u_tilde_column(&self, a: usize) -> Vec<Complex64> {
        (0..self.rank())
            .map(|p| self.u_tilde_entry(p, a))
            .collect()
    }

    /// Dense U~ = N (S A) for desk-scale checks.
    pub fn u_tilde_dense(&self) -> CMatrix {
        &self.n_mat * self.rur.r_dense()
    }

    /// || U~ U~† - I ||: measured isometry defect.
    pub fn isometry_defect(&self) -> f64 {
        if self.rank() == 0 {
            return 0.0;
        }
        let u = self.u_tilde_dense();
        let gram = &u * u.adjoint();
        let eye = CMatrix::identity(self.rank(), self.rank());
        crate::dense::spectral_norm(&(gram - eye))
    }

    /// Dense represented operator U~† D U~ (+ f(0) I).
    pub fn to_dense_operator(&self, include_shift: bool) -> CMatrix {
        let n = self.rur.dim();
        let mut out = if self.rank() == 0 {
            CMatrix::zeros(n, n)
        } else {
            let u = self.u_tilde_dense();
            let mut scaled = u.clone();
            for p in 0..self.rank() {
                for j in 0..n {
                    scaled[(p, j)] *= self.d_values[p];
                }
            }
            u.adjoint() * scaled
        };
        if include_shift && self.f0.norm() > 0.0 {
            for i in 0..n {
                out[(i, i)] += self.f0;
            }
        }
        out
    }

    /// SQ-accessible handle for (U~† D U~ + f(0) I) b given a dense
    /// coefficient path: y = N† D N (S A b) computed by estimating (SA) b.
    pub fn apply_sketched(
        &self,
        b: &OversampledVector,
        eps_b: f64,
        delta_b: f64,
        rng: &mut dyn RngCore,
    ) -> Result<OversampledVector> {
        let u = self.rur.estimate_rb(b, eps_b, delta_b, rng);
        // y = N† diag(d) N u.
        let mut nu = &self.n_mat * &u;
        for (p, v) in nu.iter_mut().enumerate() {
            *v *= self.d_values[p];
        }
        let y = self.n_mat.adjoint() * nu;
        let mut terms: Vec<(OversampledVector, Complex64)> = Vec::new();
        for (k, row) in self.rur.sketched().sketch().rows().iter().enumerate() {
            terms.push((
                conj_row_vector(self.rur.sketched().source(), row.index),
                y[k] * c(row.weight),
            ));
        }
        if self.f0.norm() > 0.0 {
            terms.push((b.clone(), self.f0));
        }
        linear_combination(&terms)
    }

    /// Query adapter for G = U~† diag(w) U~, used by the Gibbs trace
    /// estimator with w = exp(D) - 1.
    pub fn weighted_gram_query(&self, weights: Vec<Complex64>) -> WeightedGramQuery<'_> {
        assert_eq!(weights.len(), self.rank());
        WeightedGramQuery {
            decomp: self,
            weights,
        }
    }

    pub fn manifest(&self) -> Manifest {
        let mut m = self.rur.manifest();
        m.insert("kind".into(), "eigen".into());
        m.insert("trimmed_rank".into(), format!("{}", self.rank()));
        m.insert("eps".into(), format!("{}", self.params.eps));
        m.insert("pool_per_chunk".into(), format!("{}", self.params.pool_per_chunk));
        m.insert("pool_chunks".into(), format!("{}", self.params.pool_chunks));
        m
    }
}

/// See [`EigenDecompApprox::weighted_gram_query`].
pub struct WeightedGramQuery<'a> {
    decomp: &'a EigenDecompApprox,
    weights: Vec<Complex64>,
}

impl WeightedGramQuery<'_> {
    /// ||G||_F computed from the small factors: G = U~† diag(w) U~ has
    /// Frobenius norm bounded by ||U~||^2 sqrt(sum |w|^2); we return the
    /// exact value via the s' x s' Gram.
    pub fn frob_norm_via_small(&self) -> f64 {
        let u = self.decomp.u_tilde_dense();
        let g_small = &u * u.adjoint();
        // ||G||_F^2 = Tr(diag(w) G_small diag(w)† G_small).
        let k = self.weights.len();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..k {
            for j in 0..k {
                acc += self.weights[i] * g_small[(i, j)] * self.weights[j].conj() * g_small[(j, i)];
            }
        }
        acc.re.max(0.0).sqrt()
    }
}

impl MatrixQuery for WeightedGramQuery<'_> {
    fn shape(&self) -> (usize, usize) {
        let n = self.decomp.rur.dim();
        (n, n)
    }

    fn entry(&self, a: usize, b: usize) -> Complex64 {
        let col_a = self.decomp.u_tilde_column(a);
        let col_b = self.decomp.u_tilde_column(b);
        col_a
            .iter()
            .zip(&col_b)
            .zip(&self.weights)
            .map(|((za, zb), w)| za.conj() * w * zb)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::spectral_norm;
    use crate::oracle::dense_eigen_transform;
    use crate::rng::rng_for;
    use crate::sq::{Mode, SqMatrix};
    use crate::svt::even::SketchSizes;
    use crate::synth::gen_hermitian;
    use std::sync::Arc;

    fn handle(a: &CMatrix) -> OversampledMatrix {
        OversampledMatrix::exact(Arc::new(SqMatrix::from_dense(a, Mode::Static).unwrap()))
    }

    fn params(eps: f64, r: usize, cc: usize) -> EigenTransformParams {
        EigenTransformParams {
            eps,
            delta: 0.1,
            sizes: SketchSizes::new(r, cc),
            pool_per_chunk: 20_000,
            pool_chunks: 9,
            hermitian_probes: 50,
        }
    }

    #[test]
    fn identity_recovers_eigenvalues() {
        let mut rng = rng_for(1, 0);
        let n = 60;
        let h = gen_hermitian(n, &[1.2, 0.8], false, &mut rng);
        let hh = handle(&h);
        let f = ScalarFunction::identity();
        let out = eigen_transform(&hh, &f, params(0.3, 90, 90), &mut rng).unwrap();
        assert_eq!(out.rank(), 2);
        let mut lams = out.eigenvalues().to_vec();
        lams.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!((lams[0] - 1.2).abs() < 0.25, "lambda1 {}", lams[0]);
        assert!((lams[1] - 0.8).abs() < 0.25, "lambda2 {}", lams[1]);
        let op = out.to_dense_operator(true);
        let err = spectral_norm(&(op - &h));
        assert!(err < 0.3, "operator error {err}");
        assert!(out.isometry_defect() < 0.25, "gram defect {}", out.isometry_defect());
    }

    #[test]
    fn constant_function_yields_empty_d_and_shift() {
        let mut rng = rng_for(2, 0);
        let h = gen_hermitian(30, &[1.0], false, &mut rng);
        let hh = handle(&h);
        // Constant f: the projector degenerates, every core value trims away,
        // and the represented operator is exactly f(0) I.
        let f = ScalarFunction::constant(c(2.0));
        let out = eigen_transform(&hh, &f, params(0.3, 20, 20), &mut rng).unwrap();
        assert_eq!(out.rank(), 0);
        let op = out.to_dense_operator(true);
        let expect = CMatrix::identity(30, 30) * c(2.0);
        assert!((op - expect).norm() < 1e-12);
    }

    #[test]
    fn exp_matches_dense_exponential() {
        let mut rng = rng_for(3, 0);
        let n = 48;
        let h = gen_hermitian(n, &[0.5, 0.4, -0.3], false, &mut rng);
        let hh = handle(&h);
        // exp(-x) with the Lipschitz constant restricted to a radius around
        // the occupied spectrum (|lambda| <= 0.5, radius 0.3 => L = e^0.8).
        let f = ScalarFunction::new(
            "exp_neg",
            |x: f64| c((-x).exp()),
            |x: f64| {
                if x.abs() < 1e-6 {
                    c(-1.0 + x / 2.0)
                } else {
                    c(((-x).exp() - 1.0) / x)
                }
            },
            c(1.0),
            (0.8f64).exp(),
            (0.8f64).exp(),
        )
        .with_radius(0.3);
        let out = eigen_transform(&hh, &f, params(0.35, 110, 110), &mut rng).unwrap();
        let op = out.to_dense_operator(true);
        let truth = dense_eigen_transform(&h, &|x| c((-x).exp()));
        let err = spectral_norm(&(op - truth));
        assert!(err < 0.4, "exp operator error {err}");
        // Eigenvalue Weyl-style check for the reported diagonal.
        for (i, &lam_hat) in out.eigenvalues().iter().enumerate() {
            let d = out.d_values()[i] + out.f0();
            assert!(
                (d.re - (-lam_hat).exp()).abs() < 1e-9,
                "diagonal consistent with f(lambda_hat)"
            );
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut rng = rng_for(4, 0);
        let mut h = gen_hermitian(20, &[1.0], false, &mut rng);
        // Asymmetric perturbation across the whole upper triangle so random
        // probes cannot miss it.
        for i in 0..20 {
            for j in (i + 1)..20 {
                h[(i, j)] += c(0.3);
            }
        }
        let hh = handle(&h);
        let f = ScalarFunction::identity();
        assert!(matches!(
            eigen_transform(&hh, &f, params(0.3, 10, 10), &mut rng),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn weighted_gram_matches_dense() {
        let mut rng = rng_for(5, 0);
        let n = 40;
        let h = gen_hermitian(n, &[2.0, 1.0], false, &mut rng);
        let hh = handle(&h);
        let f = ScalarFunction::identity();
        let out = eigen_transform(&hh, &f, params(0.3, 60, 60), &mut rng).unwrap();
        let weights: Vec<Complex64> = out
            .eigenvalues()
            .iter()
            .map(|&l| c(l.exp() - 1.0))
            .collect();
        let q = out.weighted_gram_query(weights.clone());
        let u = out.u_tilde_dense();
        let mut scaled = u.clone();
        for p in 0..out.rank() {
            for j in 0..n {
                scaled[(p, j)] *= weights[p];
            }
        }
        let dense = u.adjoint() * scaled;
        for (i, j) in [(0usize, 0usize), (3, 7), (12, 25)] {
            assert!((q.entry(i, j) - dense[(i, j)]).norm() < 1e-9);
        }
    }
}
