//! Even singular value transformation: from (over)sampling access to A and a
//! smooth f, build the RUR decomposition R† fbar(C C†) R + f(0) I ~ f(A† A),
//! where R = S A is a rescaled row subset and C = S A T a fully sketched
//! core.

use num_complex::Complex64;
use rand::RngCore;

use super::functions::ScalarFunction;
use crate::dense::{c, svd, CMatrix, CVector};
use crate::error::{Error, Result};
use crate::io::Manifest;
use crate::sketch::{
    joint_sketch_size, MixtureDist, RowNormDist, RowSketch, SketchedMatrix, VectorDist,
};
use crate::sq::{
    conj_row_vector, linear_combination, OversampledMatrix, OversampledVector, VectorQuery,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    Frobenius,
    Spectral,
}

impl NormMode {
    pub fn label(&self) -> &'static str {
        match self {
            NormMode::Frobenius => "frobenius",
            NormMode::Spectral => "spectral",
        }
    }
}

/// Sketch sizes for the row and column stages.
#[derive(Debug, Clone, Copy)]
pub struct SketchSizes {
    pub rows: usize,
    pub cols: usize,
}

impl SketchSizes {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self { rows, cols }
    }

    /// The asymptotic sizing of the even-SVT theorem with an explicit leading
    /// constant:
    ///   r = const * phi^2 L^2    ||A||_*^2 ||A||_F^2 ln(1/delta) / eps^2
    ///   c = const * phi^2 Lbar^2 ||A||^4 ||A||_*^2 ||A||_F^2 ln(1/delta) / eps^2.
    pub fn auto(
        f: &ScalarFunction,
        phi: f64,
        spectral_norm: f64,
        frob_norm: f64,
        eps: f64,
        delta: f64,
        norm_mode: NormMode,
        constant: f64,
    ) -> Self {
        let star = match norm_mode {
            NormMode::Frobenius => frob_norm,
            NormMode::Spectral => spectral_norm,
        };
        let log_term = (1.0 / delta).ln().max(1.0);
        let base = phi * phi * star * star * frob_norm * frob_norm * log_term / (eps * eps);
        let l = f.lipschitz();
        let lb = f.lipschitz_bar();
        let rows = (constant * l * l * base).ceil().max(2.0) as usize;
        let cols = (constant * lb * lb * spectral_norm.powi(4) * base)
            .ceil()
            .max(2.0) as usize;
        Self { rows, cols }
    }
}

/// Parameters of an even-SVT run.
#[derive(Debug, Clone)]
pub struct EvenSvtParams {
    pub eps: f64,
    pub delta: f64,
    pub norm_mode: NormMode,
    pub sizes: SketchSizes,
    /// Spectral-norm estimate enabling the smoothness-radius precondition
    /// check (advisory, constant 1).
    pub spectral_hint: Option<f64>,
}

impl EvenSvtParams {
    pub fn new(eps: f64, delta: f64, norm_mode: NormMode, sizes: SketchSizes) -> Self {
        Self {
            eps,
            delta,
            norm_mode,
            sizes,
            spectral_hint: None,
        }
    }

    pub fn with_spectral_hint(mut self, norm: f64) -> Self {
        self.spectral_hint = Some(norm);
        self
    }
}

/// Output of even SVT. The represented operator is R† U R + f(0) I with
/// U = U_C fbar(D^2) U_C† kept in factored form.
pub struct RurDecomposition {
    sketched: SketchedMatrix,
    col_sketch: RowSketch,
    core_u: CMatrix,
    core_sv: Vec<f64>,
    fbar_on_sq: Vec<Complex64>,
    /// fbar(0): the middle factor acts as fbar(0) I on the orthogonal
    /// complement of the core's left singular vectors.
    fbar_zero: Complex64,
    f0: Complex64,
    f_name: String,
    pub params: EvenSvtParams,
}

/// Build the RUR decomposition of f(A† A).
pub fn even_svt(
    a: &OversampledMatrix,
    f: &ScalarFunction,
    params: EvenSvtParams,
    rng: &mut dyn RngCore,
) -> Result<RurDecomposition> {
    let phi = a.phi_or(1.0);
    let frob = a.bound_frob_sq().sqrt() / phi.sqrt();
    if let Some(spectral) = params.spectral_hint {
        // epsilon-bar = ||A|| ||A||_F sqrt(phi^2 log(1/delta) / min(r,c));
        // the smoothness radius must exceed it (advisory check, constant 1).
        let min_rc = params.sizes.rows.min(params.sizes.cols) as f64;
        let eps_bar =
            spectral * frob * (phi * phi * (1.0 / params.delta).ln().max(1.0) / min_rc).sqrt();
        if f.radius() <= eps_bar {
            return Err(Error::SketchTooSmall {
                r: params.sizes.rows,
                c: params.sizes.cols,
                eps_bar,
                radius: f.radius(),
            });
        }
    }
    let row_sketch = RowSketch::draw(&RowNormDist::of(a), params.sizes.rows, rng);
    let sketched = SketchedMatrix::new(a.clone(), row_sketch, Some(params.delta));
    let col_sketch = RowSketch::draw(&sketched.column_dist(), params.sizes.cols, rng);
    let core = sketched.materialize_core(&col_sketch);
    let d = svd(&core);
    let fbar_on_sq: Vec<Complex64> = d
        .singular_values
        .iter()
        .map(|&s| f.eval_bar(s * s))
        .collect();
    Ok(RurDecomposition {
        sketched,
        col_sketch,
        core_u: d.u,
        core_sv: d.singular_values,
        fbar_on_sq,
        fbar_zero: f.eval_bar(0.0),
        f0: f.f0(),
        f_name: f.name().to_string(),
        params,
    })
}

impl RurDecomposition {
    pub fn rows(&self) -> usize {
        self.sketched.nrows()
    }

    pub fn cols(&self) -> usize {
        self.col_sketch.len()
    }

    pub fn dim(&self) -> usize {
        self.sketched.ncols()
    }

    pub fn f0(&self) -> Complex64 {
        self.f0
    }

    pub fn sketched(&self) -> &SketchedMatrix {
        &self.sketched
    }

    pub fn col_sketch(&self) -> &RowSketch {
        &self.col_sketch
    }

    /// Singular values of the sketched core C = S A T, descending.
    pub fn core_singular_values(&self) -> &[f64] {
        &self.core_sv
    }

    pub fn core_left(&self) -> &CMatrix {
        &self.core_u
    }

    pub fn fbar_values(&self) -> &[Complex64] {
        &self.fbar_on_sq
    }

    /// Reuse the sketches and core SVD for a different transform: only the
    /// fbar values and shift change.
    pub fn with_function(&self, f: &ScalarFunction) -> Self {
        Self {
            sketched: self.sketched.clone(),
            col_sketch: self.col_sketch.clone(),
            core_u: self.core_u.clone(),
            core_sv: self.core_sv.clone(),
            fbar_on_sq: self
                .core_sv
                .iter()
                .map(|&s| f.eval_bar(s * s))
                .collect(),
            fbar_zero: f.eval_bar(0.0),
            f0: f.f0(),
            f_name: f.name().to_string(),
            params: self.params.clone(),
        }
    }

    /// The middle factor fbar(C C†) = U_C (fbar(D^2) - fbar(0)) U_C†
    /// + fbar(0) I (r x r dense): the complement of the core's column span
    /// carries the eigenvalue fbar(0).
    pub fn middle(&self) -> CMatrix {
        let k = self.core_sv.len();
        let mut scaled = self.core_u.clone();
        for t in 0..k {
            for i in 0..scaled.nrows() {
                scaled[(i, t)] *= self.fbar_on_sq[t] - self.fbar_zero;
            }
        }
        let mut out = scaled * self.core_u.adjoint();
        if self.fbar_zero.norm() > 0.0 {
            for i in 0..self.rows() {
                out[(i, i)] += self.fbar_zero;
            }
        }
        out
    }

    /// U x without forming U: U_C ((fbar - fbar0) . (U_C† x)) + fbar0 x.
    pub fn apply_middle(&self, x: &CVector) -> CVector {
        let mut proj = self.core_u.adjoint() * x;
        for (t, v) in proj.iter_mut().enumerate() {
            *v *= self.fbar_on_sq[t] - self.fbar_zero;
        }
        let mut out = &self.core_u * proj;
        if self.fbar_zero.norm() > 0.0 {
            out += x * self.fbar_zero;
        }
        out
    }

    /// max |fbar| over the spectrum of C C† (including the zero eigenvalue
    /// of the complement when present): the recorded bound on ||fbar(CC†)||.
    pub fn fbar_max(&self) -> f64 {
        let over_core = self
            .fbar_on_sq
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if self.core_sv.len() < self.rows() {
            over_core.max(self.fbar_zero.norm())
        } else {
            over_core
        }
    }

    /// Exact application (R† U R + f(0) I) b by querying all of R: O(r n)
    /// queries, for testing and desk-scale use.
    pub fn apply_exact(&self, b: &dyn VectorQuery) -> CVector {
        let n = self.dim();
        assert_eq!(b.len(), n, "dimension mismatch");
        let r = self.rows();
        let mut rb = CVector::zeros(r);
        for k in 0..r {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                acc += self.sketched.entry(k, j) * b.entry(j);
            }
            rb[k] = acc;
        }
        let y = self.apply_middle(&rb);
        let mut out = CVector::zeros(n);
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..r {
                acc += self.sketched.entry(k, j).conj() * y[k];
            }
            out[j] = acc + self.f0 * b.entry(j);
        }
        out
    }

    /// Estimate u ~ R b by a joint product sketch (mixing the column
    /// distribution of R and the distribution of b) with
    /// ||R b - u|| <= eps_b with probability 1 - delta_b.
    pub fn estimate_rb(
        &self,
        b: &OversampledVector,
        eps_b: f64,
        delta_b: f64,
        rng: &mut dyn RngCore,
    ) -> CVector {
        let r_frob_sq = self.sketched.bound_frob_sq();
        let b_norm_sq = b.bound_norm_sq();
        let eps_rel = eps_b / (r_frob_sq * b_norm_sq).sqrt();
        let s = joint_sketch_size(1.0, 1.0, eps_rel, delta_b);
        let col_dist = self.sketched.column_dist();
        let b_dist = VectorDist::of(b);
        let mix = MixtureDist {
            a: &col_dist,
            b: &b_dist,
        };
        let inner = RowSketch::draw(&mix, s, rng);
        // u = (S2 R†)† (S2 b) accumulated sample by sample:
        // u_k = sum_l w_l^2 R(k, j_l) b(j_l). Streaming keeps memory at O(r)
        // even when the inner sketch is large.
        let mut u = CVector::zeros(self.rows());
        let b_query = b.query();
        for row in inner.rows() {
            let factor = Complex64::new(row.weight * row.weight, 0.0) * b_query.entry(row.index);
            if factor.norm() == 0.0 {
                continue;
            }
            for k in 0..self.rows() {
                u[k] += self.sketched.entry(k, row.index) * factor;
            }
        }
        u
    }

    /// Sampling-and-query output handle for (R† U u) + f(0) b given an
    /// estimate u of R b: a linear combination of conjugated rows of A and b.
    pub fn output_handle(
        &self,
        u: &CVector,
        b: Option<&OversampledVector>,
    ) -> Result<OversampledVector> {
        let y = self.apply_middle(u);
        let mut terms: Vec<(OversampledVector, Complex64)> = Vec::with_capacity(self.rows() + 1);
        for (k, row) in self.sketched.sketch().rows().iter().enumerate() {
            let component = conj_row_vector(self.sketched.source(), row.index);
            terms.push((component, y[k] * c(row.weight)));
        }
        if let Some(b) = b {
            if self.f0.norm() > 0.0 {
                terms.push((b.clone(), self.f0));
            }
        }
        linear_combination(&terms)
    }

    /// Sketched application: estimate R b, then hand back the SQ-accessible
    /// combination R† U u + f(0) b.
    pub fn apply_sketched(
        &self,
        b: &OversampledVector,
        eps_b: f64,
        delta_b: f64,
        rng: &mut dyn RngCore,
    ) -> Result<OversampledVector> {
        let u = self.estimate_rb(b, eps_b, delta_b, rng);
        self.output_handle(&u, Some(b))
    }

    /// Dense R, for oracle checks.
    pub fn r_dense(&self) -> CMatrix {
        self.sketched.to_dense()
    }

    /// Dense represented operator R† U R (+ f(0) I when `include_shift`).
    pub fn to_dense_operator(&self, include_shift: bool) -> CMatrix {
        let r = self.r_dense();
        let u = self.middle();
        let mut out = r.adjoint() * u * &r;
        if include_shift && self.f0.norm() > 0.0 {
            let n = self.dim();
            for i in 0..n {
                out[(i, i)] += self.f0;
            }
        }
        out
    }

    /// Measured norm diagnostics (desk scale: materializes R).
    pub fn measured_diagnostics(&self) -> RurDiagnostics {
        let r = self.r_dense();
        let r_gram = &r * r.adjoint();
        // ||R† sqrt(fbar(CC†))||^2 = ||sqrt(fbar)(R R†) sqrt(fbar)|| with the
        // magnitude square root S = U (sqrt|fbar| - sqrt|fbar0|) U† +
        // sqrt|fbar0| I applied on both sides.
        let root0 = self.fbar_zero.norm().sqrt();
        let k = self.core_sv.len();
        let mut scaled = self.core_u.clone();
        for t in 0..k {
            let root = self.fbar_on_sq[t].norm().sqrt() - root0;
            for i in 0..self.rows() {
                scaled[(i, t)] *= c(root);
            }
        }
        let mut s_half = scaled * self.core_u.adjoint();
        if root0 > 0.0 {
            for i in 0..self.rows() {
                s_half[(i, i)] += c(root0);
            }
        }
        let m = &s_half * r_gram * &s_half;
        RurDiagnostics {
            r_spectral: crate::dense::spectral_norm(&r),
            r_frob: r.norm(),
            fbar_max: self.fbar_max(),
            rur_half_norm_sq: crate::dense::spectral_norm(&m),
        }
    }

    pub fn manifest(&self) -> Manifest {
        let mut m = Manifest::new();
        m.insert("kind".into(), "rur".into());
        m.insert("function".into(), self.f_name.clone());
        m.insert("eps".into(), format!("{}", self.params.eps));
        m.insert("delta".into(), format!("{}", self.params.delta));
        m.insert("norm_mode".into(), self.params.norm_mode.label().into());
        m.insert("rows".into(), format!("{}", self.rows()));
        m.insert("cols".into(), format!("{}", self.cols()));
        m.insert("dim".into(), format!("{}", self.dim()));
        m.insert("f0_re".into(), format!("{}", self.f0.re));
        m.insert("f0_im".into(), format!("{}", self.f0.im));
        m.insert("fbar_max".into(), format!("{}", self.fbar_max()));
        m
    }

    /// Serialize sketches, the middle factor, and the manifest to a
    /// directory.
    pub fn save_dir(&self, dir: &std::path::Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        crate::io::write_sketch_text(&dir.join("sketch_rows.txt"), self.sketched.sketch())?;
        crate::io::write_sketch_text(&dir.join("sketch_cols.txt"), &self.col_sketch)?;
        crate::io::write_binary_matrix(&dir.join("core_u.sqla"), &self.core_u)?;
        let sv = CVector::from_fn(self.core_sv.len(), |i, _| c(self.core_sv[i]));
        crate::io::write_binary_vector(&dir.join("core_sv.sqla"), &sv)?;
        crate::io::write_manifest(&dir.join("manifest.txt"), &self.manifest())?;
        Ok(())
    }

    /// Rebuild a decomposition from a directory plus the original source
    /// handle and transform, re-deriving the fbar values.
    pub fn load_dir(
        dir: &std::path::Path,
        source: &OversampledMatrix,
        f: &ScalarFunction,
    ) -> Result<Self> {
        let row_sketch = crate::io::read_sketch_text(&dir.join("sketch_rows.txt"))?;
        let col_sketch = crate::io::read_sketch_text(&dir.join("sketch_cols.txt"))?;
        let core_u = crate::io::read_binary_matrix(&dir.join("core_u.sqla"))?;
        let sv = crate::io::read_binary_vector(&dir.join("core_sv.sqla"))?;
        let manifest = crate::io::read_manifest(&dir.join("manifest.txt"))?;
        let eps: f64 = manifest
            .get("eps")
            .and_then(|s| s.parse().ok())
            .unwrap_or(0.1);
        let delta: f64 = manifest
            .get("delta")
            .and_then(|s| s.parse().ok())
            .unwrap_or(0.1);
        let norm_mode = match manifest.get("norm_mode").map(String::as_str) {
            Some("spectral") => NormMode::Spectral,
            _ => NormMode::Frobenius,
        };
        let core_sv: Vec<f64> = sv.iter().map(|z| z.re).collect();
        let sizes = SketchSizes::new(row_sketch.len(), col_sketch.len());
        Ok(Self {
            sketched: SketchedMatrix::new(source.clone(), row_sketch, Some(delta)),
            col_sketch,
            core_u,
            fbar_on_sq: core_sv.iter().map(|&s| f.eval_bar(s * s)).collect(),
            fbar_zero: f.eval_bar(0.0),
            core_sv,
            f0: f.f0(),
            f_name: f.name().to_string(),
            params: EvenSvtParams::new(eps, delta, norm_mode, sizes),
        })
    }
}

/// Norm diagnostics of the even-SVT output, measured densely.
#[derive(Debug, Clone)]
pub struct RurDiagnostics {
    pub r_spectral: f64,
    pub r_frob: f64,
    pub fbar_max: f64,
    /// ||R† sqrt(fbar(C C†))||^2.
    pub rur_half_norm_sq: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::dense_eigen_transform;
    use crate::rng::rng_for;
    use crate::sq::{Mode, SqMatrix, SqVector};
    use crate::synth::{gen_matrix, SynthSpec};
    use std::sync::Arc;

    fn handle(a: &CMatrix) -> OversampledMatrix {
        OversampledMatrix::exact(Arc::new(SqMatrix::from_dense(a, Mode::Static).unwrap()))
    }

    fn params(eps: f64, r: usize, c: usize) -> EvenSvtParams {
        EvenSvtParams::new(eps, 0.1, NormMode::Spectral, SketchSizes::new(r, c))
    }

    #[test]
    fn constant_function_ignores_sketches() {
        let mut rng = rng_for(1, 0);
        let a = gen_matrix(&SynthSpec::low_rank(30, 20, &[2.0, 1.0]), &mut rng);
        let f = ScalarFunction::constant(c(3.0));
        let rur = even_svt(&handle(&a), &f, params(0.1, 5, 5), &mut rng).unwrap();
        // Operator = 3 I exactly: fbar vanishes identically.
        let b: Vec<Complex64> = (0..20).map(|i| c((i as f64).sin())).collect();
        let out = rur.apply_exact(&b);
        for i in 0..20 {
            assert!((out[i] - c(3.0) * b[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn identity_function_approximates_gram() {
        let mut rng = rng_for(2, 0);
        let a = gen_matrix(&SynthSpec::low_rank(120, 40, &[2.0, 1.5, 1.0]), &mut rng);
        let h = handle(&a);
        let f = ScalarFunction::identity();
        let rur = even_svt(&h, &f, params(0.3, 120, 120), &mut rng).unwrap();
        let op = rur.to_dense_operator(true);
        let gram = a.adjoint() * &a;
        let err = crate::dense::spectral_norm(&(op - gram));
        assert!(err < 0.5, "spectral error {err}");
    }

    #[test]
    fn rank_one_closed_form() {
        // A = sigma u v†: f(A†A) = f(sigma^2) v v† + f(0)(I - v v†).
        let mut rng = rng_for(3, 0);
        let sigma = 1.5;
        let a = gen_matrix(&SynthSpec::low_rank(60, 25, &[sigma]), &mut rng);
        let h = handle(&a);
        let f = ScalarFunction::threshold_step(1.0, 0.25).unwrap();
        let rur = even_svt(&h, &f, params(0.15, 150, 150), &mut rng).unwrap();
        let op = rur.to_dense_operator(true);
        let truth = dense_eigen_transform(&(a.adjoint() * &a), &|x| f.eval(x));
        let err = crate::dense::spectral_norm(&(op - truth));
        assert!(err <= 0.2, "spectral error {err}");
    }

    #[test]
    fn exact_and_middle_application_agree() {
        let mut rng = rng_for(4, 0);
        let a = gen_matrix(&SynthSpec::low_rank(40, 15, &[2.0, 1.0]), &mut rng);
        let h = handle(&a);
        let f = ScalarFunction::identity();
        let rur = even_svt(&h, &f, params(0.3, 30, 30), &mut rng).unwrap();
        // middle() and apply_middle agree.
        let x = CVector::from_fn(rur.rows(), |i, _| c((i as f64 * 0.37).cos()));
        let direct = rur.middle() * &x;
        let fast = rur.apply_middle(&x);
        assert!((direct - fast).norm() < 1e-10);
        // to_dense_operator agrees with apply_exact on a basis vector.
        let op = rur.to_dense_operator(true);
        let e3: Vec<Complex64> = (0..15).map(|i| c(if i == 3 { 1.0 } else { 0.0 })).collect();
        let applied = rur.apply_exact(&e3);
        for i in 0..15 {
            assert!((op[(i, 3)] - applied[i]).norm() < 1e-9);
        }
    }

    #[test]
    fn sketched_apply_tracks_exact_apply() {
        let mut rng = rng_for(5, 0);
        let a = gen_matrix(&SynthSpec::low_rank(80, 30, &[2.0, 1.2]), &mut rng);
        let h = handle(&a);
        let f = ScalarFunction::identity();
        let rur = even_svt(&h, &f, params(0.25, 80, 80), &mut rng).unwrap();
        let b_data: Vec<Complex64> = {
            let basis = crate::dense::svd(&a).v_t.adjoint();
            (0..30).map(|i| basis[(i, 0)]).collect()
        };
        let b_sq = Arc::new(SqVector::build(b_data.clone(), Mode::Static).unwrap());
        let b = OversampledVector::exact(b_sq);
        let exact = rur.apply_exact(&b_data);
        let out = rur.apply_sketched(&b, 0.02, 0.05, &mut rng).unwrap();
        let dense_out: Vec<Complex64> = (0..30).map(|i| out.entry(i)).collect();
        let diff: f64 = exact
            .iter()
            .zip(&dense_out)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff < 0.15, "sketched vs exact deviation {diff}");
    }

    #[test]
    fn shift_only_output() {
        // f0 = 1, fbar = 0 (constant 1): output handle is exactly b.
        let mut rng = rng_for(6, 0);
        let a = gen_matrix(&SynthSpec::low_rank(20, 10, &[1.0]), &mut rng);
        let h = handle(&a);
        let f = ScalarFunction::constant(c(1.0));
        let rur = even_svt(&h, &f, params(0.2, 4, 4), &mut rng).unwrap();
        let b_data: Vec<Complex64> = (0..10).map(|i| c(1.0 / (i + 1) as f64)).collect();
        let b = OversampledVector::exact(Arc::new(
            SqVector::build(b_data.clone(), Mode::Static).unwrap(),
        ));
        let out = rur.apply_sketched(&b, 0.1, 0.1, &mut rng).unwrap();
        for i in 0..10 {
            assert!((out.entry(i) - b_data[i]).norm() < 1e-9);
        }
    }

    #[test]
    fn radius_precondition_enforced() {
        let mut rng = rng_for(7, 0);
        let a = gen_matrix(&SynthSpec::low_rank(50, 20, &[1.0]), &mut rng);
        let h = handle(&a);
        // Tiny radius, tiny sketches: must refuse.
        let f = ScalarFunction::identity().with_radius(1e-6);
        let p = params(0.3, 3, 3).with_spectral_hint(1.0);
        assert!(matches!(
            even_svt(&h, &f, p, &mut rng),
            Err(Error::SketchTooSmall { .. })
        ));
    }

    #[test]
    fn save_load_round_trip() {
        let mut rng = rng_for(8, 0);
        let a = gen_matrix(&SynthSpec::low_rank(30, 12, &[1.5, 0.7]), &mut rng);
        let h = handle(&a);
        let f = ScalarFunction::identity();
        let rur = even_svt(&h, &f, params(0.3, 20, 20), &mut rng).unwrap();
        let dir = std::env::temp_dir().join("sqla-rur-roundtrip");
        rur.save_dir(&dir).unwrap();
        let back = RurDecomposition::load_dir(&dir, &h, &f).unwrap();
        let d1 = rur.to_dense_operator(true);
        let d2 = back.to_dense_operator(true);
        assert!((d1 - d2).norm() < 1e-9);
    }

    #[test]
    fn diagnostics_satisfy_norm_bounds_lemma() {
        // When the SVT error event holds, ||R† sqrt(fbar(CC†))||^2 is at most
        // ||f(A†A) - f(0) I|| + eps.
        let mut rng = rng_for(9, 0);
        let a = gen_matrix(&SynthSpec::low_rank(100, 30, &[2.0, 1.0]), &mut rng);
        let h = handle(&a);
        let f = ScalarFunction::threshold_step(0.9, 0.25).unwrap();
        let eps = 0.3;
        let rur = even_svt(&h, &f, params(eps, 150, 150), &mut rng).unwrap();
        let op = rur.to_dense_operator(true);
        let truth = dense_eigen_transform(&(a.adjoint() * &a), &|x| f.eval(x));
        let err = crate::dense::spectral_norm(&(op - &truth));
        if err <= eps {
            let diag = rur.measured_diagnostics();
            let cap = crate::dense::spectral_norm(&truth) + eps;
            assert!(
                diag.rur_half_norm_sq <= cap + 1e-9,
                "{} vs {}",
                diag.rur_half_norm_sq,
                cap
            );
        }
    }
}
