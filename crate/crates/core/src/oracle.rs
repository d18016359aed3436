//! Dense reference implementations of every transformation, used for
//! verification and calibration at moderate sizes. Performance is a
//! non-goal here.

use num_complex::Complex64;

use crate::dense::{c, expm, hermitian_eig, svd, CMatrix, CVector};
use crate::error::{Error, Result};
use crate::sq::OversampledVector;
use crate::svt::functions::ScalarFunction;

/// Singular value transform sum f(sigma_i) u_i v_i†. Requires f(0) = 0 so the
/// transform is independent of the choice of SVD.
pub fn dense_svt(a: &CMatrix, f: &dyn Fn(f64) -> Complex64) -> CMatrix {
    let f0 = f(0.0);
    assert!(
        f0.norm() < 1e-12,
        "singular value transform requires f(0) = 0"
    );
    let d = svd(a);
    let k = d.singular_values.len();
    let mut out = CMatrix::zeros(a.nrows(), a.ncols());
    for i in 0..k {
        let fi = f(d.singular_values[i]);
        if fi.norm() == 0.0 {
            continue;
        }
        let u_i = d.u.column(i);
        let v_i = d.v_t.row(i);
        for r in 0..a.nrows() {
            for s in 0..a.ncols() {
                out[(r, s)] += fi * u_i[r] * v_i[s];
            }
        }
    }
    out
}

/// Eigenvalue transform sum f(lambda_i) v_i v_i† of a Hermitian matrix.
/// The input is symmetrized first; the deviation is available via
/// [`crate::dense::hermitian_deviation`].
pub fn dense_eigen_transform(h: &CMatrix, f: &dyn Fn(f64) -> Complex64) -> CMatrix {
    let eig = hermitian_eig(h);
    let n = h.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        let fi = f(lam);
        if fi.norm() == 0.0 {
            continue;
        }
        let v = eig.eigenvectors.column(i);
        for r in 0..n {
            for s in 0..n {
                out[(r, s)] += fi * v[r] * v[s].conj();
            }
        }
    }
    out
}

/// exp(scale * H) b via scaling-and-squaring, independent of the
/// eigendecomposition route used by [`dense_eigen_transform`].
pub fn dense_expm_apply(h: &CMatrix, b: &CVector, scale: Complex64) -> CVector {
    let e = expm(&(h * scale));
    &e * b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdKind {
    /// A_{sigma,eta}: keep singular values above the band, zero below.
    LowRank,
    /// A^+_{sigma,eta}: thresholded pseudoinverse.
    Pseudoinverse,
}

/// The dense thresholded transform induced by the library's specific linear
/// interpolation (the same scalar functions the pipelines use).
pub fn dense_thresholded(a: &CMatrix, sigma: f64, eta: f64, kind: ThresholdKind) -> CMatrix {
    let f = match kind {
        ThresholdKind::LowRank => ScalarFunction::threshold_step(sigma, eta).expect("params"),
        ThresholdKind::Pseudoinverse => {
            ScalarFunction::thresholded_inverse(sigma, eta).expect("params")
        }
    };
    // Singular-value map sigma_i -> sigma_i * f(sigma_i^2); for the step this
    // is A t(A†A), for the inverse iota(A†A) A† transposed appropriately.
    match kind {
        ThresholdKind::LowRank => dense_svt(a, &|s| c(s) * f.eval(s * s)),
        ThresholdKind::Pseudoinverse => {
            let m = dense_svt(a, &|s| c(s) * f.eval(s * s));
            // A^+_{sigma,eta} = iota(A†A) A†, i.e. transform of A† with the
            // same singular values: transpose-conjugate the transformed A.
            m.adjoint()
        }
    }
}

/// Verdict of the dense MMW feasibility reference.
#[derive(Debug, Clone)]
pub enum MmwVerdict {
    Feasible { x: CMatrix, iterations: usize },
    Infeasible { iterations: usize },
}

/// Matrix multiplicative weights feasibility run with exact traces: at each
/// step find a violated constraint Tr[A_j X] > b_j + eps/2 or accept X.
pub fn dense_mmw_reference(constraints: &[CMatrix], bounds: &[f64], eps: f64) -> MmwVerdict {
    assert_eq!(constraints.len(), bounds.len());
    let n = constraints[0].nrows();
    let t_max = (16.0 * (n as f64).ln() / (eps * eps)).ceil() as usize;
    let mut violated: Vec<usize> = Vec::new();
    for t in 1..=t_max {
        let x = dense_gibbs_state(constraints, &violated, eps / 4.0);
        let mut found = None;
        for (j, (a, &b)) in constraints.iter().zip(bounds).enumerate() {
            let tr = (a * &x).trace().re;
            if tr > b + eps / 2.0 {
                found = Some(j);
                break;
            }
        }
        match found {
            Some(j) => violated.push(j),
            None => return MmwVerdict::Feasible { x, iterations: t },
        }
    }
    MmwVerdict::Infeasible { iterations: t_max }
}

/// The Gibbs iterate exp(-theta * sum A_j) normalized to unit trace.
pub fn dense_gibbs_state(constraints: &[CMatrix], violated: &[usize], theta: f64) -> CMatrix {
    let n = constraints[0].nrows();
    let mut h = CMatrix::zeros(n, n);
    for &j in violated {
        h += &constraints[j] * c(-theta);
    }
    let e = expm(&h);
    let tr = e.trace();
    &e / tr
}

/// Brute-force output distribution of an oversampled handle: queries every
/// true entry and normalizes the squared magnitudes.
pub fn exact_output_distribution(v: &OversampledVector) -> Result<Vec<f64>> {
    let n = v.len();
    let mut weights = vec![0.0f64; n];
    let mut total = 0.0;
    for (i, w) in weights.iter_mut().enumerate() {
        *w = v.entry(i).norm_sqr();
        total += *w;
    }
    if total <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    for w in &mut weights {
        *w /= total;
    }
    Ok(weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::spectral_norm;
    use crate::rng::rng_for;
    use crate::sq::{Mode, SqVector};
    use std::sync::Arc;

    fn test_matrix(m: usize, n: usize, seed: u64) -> CMatrix {
        let mut rng = rng_for(seed, 0);
        CMatrix::from_fn(m, n, |_, _| {
            Complex64::new(
                crate::rng::standard_normal(&mut rng),
                crate::rng::standard_normal(&mut rng),
            )
        })
    }

    #[test]
    fn identity_transform_returns_input() {
        let a = test_matrix(6, 4, 1);
        let back = dense_svt(&a, &|s| c(s));
        assert!((&a - back).norm() < 1e-10);
    }

    #[test]
    fn step_on_diagonal() {
        // diag(2, 0.1) with a threshold at 1 keeps only the large value.
        let mut a = CMatrix::zeros(2, 2);
        a[(0, 0)] = c(2.0);
        a[(1, 1)] = c(0.1);
        let t = ScalarFunction::threshold_step(1.0, 1.0 / 6.0).unwrap();
        let out = dense_svt(&a, &|s| c(s) * t.eval(s * s));
        assert!((out[(0, 0)] - c(2.0)).norm() < 1e-12);
        assert!(out[(1, 1)].norm() < 1e-12);
    }

    #[test]
    fn thresholded_inverse_matches_per_singular_value_formula() {
        let a = test_matrix(8, 5, 2);
        let sigma = 1.0;
        let eta = 0.5;
        let pinv = dense_thresholded(&a, sigma, eta, ThresholdKind::Pseudoinverse);
        // Check A * pinv acts as identity on singular directions above sigma.
        let d = svd(&a);
        for (i, &s) in d.singular_values.iter().enumerate() {
            if s >= sigma {
                let u_i = d.u.column(i).clone_owned();
                let x = &pinv * &u_i;
                let vt_i = d.v_t.row(i).adjoint();
                assert!((x - vt_i / c(s)).norm() < 1e-8, "sigma_{i} = {s}");
            }
        }
    }

    #[test]
    fn eigen_transform_identity_and_exp() {
        let h0 = {
            let b = test_matrix(7, 7, 3);
            (&b + b.adjoint()) * c(0.5)
        };
        let id = dense_eigen_transform(&h0, &|x| c(x));
        assert!((&h0 - id).norm() < 1e-10);

        // f = exp versus the scaling-and-squaring route.
        let e1 = dense_eigen_transform(&h0, &|x| c(x.exp()));
        let e2 = expm(&h0);
        assert!((e1 - e2).norm() < 1e-8);
    }

    #[test]
    fn expm_apply_scalar_cases() {
        let h = CMatrix::from_fn(1, 1, |_, _| c(std::f64::consts::PI));
        let b = CVector::from_element(1, c(1.0));
        let out = dense_expm_apply(&h, &b, Complex64::new(0.0, 1.0));
        assert!((out[0] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);

        let z = CMatrix::zeros(3, 3);
        let b3 = CVector::from_fn(3, |i, _| c(i as f64));
        let out3 = dense_expm_apply(&z, &b3, Complex64::new(0.0, 1.0));
        assert!((out3 - b3).norm() < 1e-12);
    }

    #[test]
    fn svt_composition_property() {
        // f(g(x)) on singular values equals composing the transforms when both
        // fix zero: use f = 2x, g = x^2 on a small matrix.
        let a = test_matrix(5, 5, 4);
        let g = dense_svt(&a, &|s| c(s * s));
        let fg_direct = dense_svt(&a, &|s| c(2.0 * s * s));
        let fg_composed = dense_svt(&g, &|s| c(2.0 * s));
        assert!((fg_direct - fg_composed).norm() < 1e-8);
    }

    #[test]
    fn mmw_trivially_feasible_and_infeasible() {
        let id = CMatrix::identity(8, 8);
        // Tr[I X] = 1 <= 2: feasible at once.
        match dense_mmw_reference(&[id.clone()], &[2.0], 0.5) {
            MmwVerdict::Feasible { iterations, x } => {
                assert_eq!(iterations, 1);
                assert!((x.trace().re - 1.0).abs() < 1e-10);
            }
            MmwVerdict::Infeasible { .. } => panic!("expected feasible"),
        }
        // Tr[I X] = 1 > 0.5 always: infeasible.
        match dense_mmw_reference(&[id], &[0.0], 0.5) {
            MmwVerdict::Infeasible { iterations } => {
                let expect = (16.0 * 8f64.ln() / 0.25).ceil() as usize;
                assert_eq!(iterations, expect);
            }
            MmwVerdict::Feasible { .. } => panic!("expected infeasible"),
        }
    }

    #[test]
    fn exact_distribution_point_mass_and_norm() {
        let v = OversampledVector::exact(Arc::new(
            SqVector::build(vec![c(1.0), c(0.0), c(0.0)], Mode::Static).unwrap(),
        ));
        let d = exact_output_distribution(&v).unwrap();
        assert_eq!(d, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn lipschitz_perturbation_of_standard_functions() {
        // For Hermitian A, B and an L-Lipschitz f on their spectra,
        // ||f(A) - f(B)||_F <= L ||A - B||_F. Checked densely for the
        // standard library on PSD pairs.
        use crate::svt::ScalarFunction;
        let mut rng = rng_for(77, 0);
        let cases = vec![
            ScalarFunction::threshold_step(1.0, 0.25).unwrap(),
            ScalarFunction::thresholded_inverse(1.0, 0.5).unwrap(),
            ScalarFunction::smooth_projector(0.4, 1.0).unwrap(),
            ScalarFunction::disc_sqrt(1.0).unwrap(),
            ScalarFunction::disc_inv(1.0).unwrap(),
            ScalarFunction::inverse_shift(0.8).unwrap(),
        ];
        for trial in 0..20 {
            let x = crate::synth::gen_matrix(
                &crate::synth::SynthSpec::low_rank(12, 8, &[1.6, 1.1, 0.7]).with_noise(0.05),
                &mut rng,
            );
            let y = crate::synth::gen_matrix(
                &crate::synth::SynthSpec::low_rank(12, 8, &[1.5, 1.0, 0.8]).with_noise(0.05),
                &mut rng,
            );
            let a = x.adjoint() * &x;
            let b = y.adjoint() * &y;
            let gap = (&a - &b).norm();
            for f in &cases {
                let fa = dense_eigen_transform(&a, &|t| f.eval(t));
                let fb = dense_eigen_transform(&b, &|t| f.eval(t));
                let lhs = (fa - fb).norm();
                assert!(
                    lhs <= f.lipschitz() * gap * (1.0 + 1e-9) + 1e-12,
                    "trial {trial}, {}: {lhs} > L {} * {gap}",
                    f.name(),
                    f.lipschitz()
                );
            }
        }
    }

    #[test]
    fn spectral_norm_of_projector() {
        let a = test_matrix(6, 3, 5);
        let q = svd(&a).u;
        let p = &q * q.adjoint();
        assert!((spectral_norm(&p) - 1.0).abs() < 1e-10);
    }
}
