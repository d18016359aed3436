//! SDP feasibility by matrix multiplicative weights: T = ceil(16 ln n / eps^2)
//! rounds of violation search against Gibbs iterates
//! X = exp(-theta sum A_j) / Tr(...), with traces estimated either densely
//! (small instances, the paper's literal branch test) or through the sketched
//! eigenvalue transformation.

use num_complex::Complex64;
use rand::RngCore;

use super::common::{base_guarantee, ScaledIdentityQuery};
use crate::dense::{c, expm, CMatrix};
use crate::error::{Error, Result};
use crate::io::Manifest;
use crate::sketch::trace_product_estimate;
use crate::sq::{matrix_linear_combination, OversampledMatrix};
use crate::svt::{eigen_transform, EigenTransformParams, ScalarFunction, SketchSizes};

/// The feasibility instance: Hermitian constraints with ||A^(i)|| <= 1,
/// bounds b, precision eps; the candidate X is trace-normalized.
pub struct SdpInstance {
    pub constraints: Vec<OversampledMatrix>,
    pub bounds: Vec<f64>,
    pub eps: f64,
}

impl SdpInstance {
    pub fn validate(&self, probes: usize, rng: &mut dyn RngCore) -> Result<()> {
        if self.constraints.is_empty() || self.constraints.len() != self.bounds.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} bounds", self.constraints.len()),
                got: format!("{}", self.bounds.len()),
            });
        }
        let shape = self.constraints[0].shape();
        if shape.0 != shape.1 {
            return Err(Error::ShapeMismatch {
                expected: "square".into(),
                got: format!("{shape:?}"),
            });
        }
        for a in &self.constraints {
            if a.shape() != shape {
                return Err(Error::ShapeMismatch {
                    expected: format!("{shape:?}"),
                    got: format!("{:?}", a.shape()),
                });
            }
            a.hermitian_spot_check(probes, rng)?;
        }
        if !(0.0 < self.eps && self.eps <= 1.0) {
            return Err(Error::InvalidParam("eps must lie in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.constraints[0].shape().0
    }
}

/// An implicitly represented Gibbs iterate.
#[derive(Debug, Clone)]
pub struct GibbsStateDescription {
    pub theta: f64,
    pub violated: Vec<usize>,
    pub n: usize,
}

impl GibbsStateDescription {
    /// Materialize the dense state exp(-theta sum A_j)/Tr for verification.
    pub fn dense_state(&self, constraints: &[OversampledMatrix]) -> CMatrix {
        let mut h = CMatrix::zeros(self.n, self.n);
        for &j in &self.violated {
            let a = constraints[j].query().to_dense();
            h += a * c(-self.theta);
        }
        let e = expm(&h);
        let tr = e.trace();
        &e / tr
    }
}

pub enum SdpVerdict {
    Feasible {
        state: GibbsStateDescription,
        iterations: usize,
    },
    Infeasible {
        iterations: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GibbsBranch {
    /// The literal threshold test (F/theta) ln n > sqrt(n)/18 decides.
    Auto,
    Dense,
    Sketched,
}

#[derive(Debug, Clone)]
pub struct GibbsParams {
    pub branch: GibbsBranch,
    pub delta: f64,
    /// Eigen-transformation stage for the sketched branch.
    pub eigen_sizes: SketchSizes,
    pub pool_per_chunk: usize,
    pub pool_chunks: usize,
    /// Inner precision of the eigen stage as a fraction of theta.
    pub eigen_eps_fraction: f64,
}

impl GibbsParams {
    pub fn dense(delta: f64) -> Self {
        Self {
            branch: GibbsBranch::Dense,
            delta,
            eigen_sizes: SketchSizes::new(2, 2),
            pool_per_chunk: 1,
            pool_chunks: 1,
            eigen_eps_fraction: 0.5,
        }
    }
}

/// Largest known constraint Frobenius norm, used by the branch test.
fn max_frob(constraints: &[OversampledMatrix]) -> f64 {
    constraints
        .iter()
        .map(|a| (a.bound_frob_sq() / a.phi_or(1.0)).sqrt())
        .fold(0.0, f64::max)
}

/// Estimate Tr(A^(i) e^H)/Tr(e^H) for H = -theta sum_{j in violated} A^(j),
/// each within theta with probability 1 - delta.
pub fn gibbs_trace_estimates(
    constraints: &[OversampledMatrix],
    theta: f64,
    violated: &[usize],
    params: &GibbsParams,
    rng: &mut dyn RngCore,
) -> Result<Vec<f64>> {
    let n = constraints[0].shape().0;
    let m = constraints.len();
    let delta_each = params.delta / m as f64;

    if violated.is_empty() {
        // X = I/n exactly: estimate Tr(A_i)/n by trace products against I/n.
        let id = ScaledIdentityQuery { n, scale: 1.0 / n as f64 };
        let mut out = Vec::with_capacity(m);
        for a in constraints {
            let est = trace_product_estimate(
                a,
                &id,
                Some(1.0 / n as f64),
                theta / 3.0,
                delta_each,
                rng,
            )?;
            out.push(est.re);
        }
        return Ok(out);
    }

    let f_norm = max_frob(constraints);
    let use_dense = match params.branch {
        GibbsBranch::Dense => true,
        GibbsBranch::Sketched => false,
        GibbsBranch::Auto => (f_norm / theta) * (n as f64).ln() > (n as f64).sqrt() / 18.0,
    };

    if use_dense {
        let mut h = CMatrix::zeros(n, n);
        for &j in violated {
            h += constraints[j].query().to_dense() * c(-theta);
        }
        let e = expm(&h);
        let tr = e.trace().re;
        return Ok(constraints
            .iter()
            .map(|a| ((a.query().to_dense() * &e).trace().re) / tr)
            .collect());
    }

    // Sketched branch.
    let terms: Vec<(OversampledMatrix, Complex64)> = violated
        .iter()
        .map(|&j| (constraints[j].clone(), c(-theta)))
        .collect();
    let h_handle = matrix_linear_combination(&terms)?;
    let f_id = ScalarFunction::identity();
    let eigen = eigen_transform(
        &h_handle,
        &f_id,
        EigenTransformParams {
            eps: params.eigen_eps_fraction * theta,
            delta: params.delta / 2.0,
            sizes: params.eigen_sizes,
            pool_per_chunk: params.pool_per_chunk,
            pool_chunks: params.pool_chunks,
            hermitian_probes: 30,
        },
        rng,
    )?;
    // Small-norm early out: every |lambda_hat| < 3/4 certifies ||H|| <= 1 and
    // all normalized traces are below theta.
    if eigen.eigenvalues().iter().all(|l| l.abs() < 0.75) {
        return Ok(vec![0.0; m]);
    }
    // Partition estimate Tr(e^D) + (n - s').
    let s_prime = eigen.rank();
    let z_tilde: f64 = eigen
        .eigenvalues()
        .iter()
        .map(|l| l.exp())
        .sum::<f64>()
        + (n - s_prime) as f64;
    // Per-constraint: Tr(A G) for G = U~† (e^D - I) U~ (the Tr(A) correction
    // is provably below theta Tr(e^H)/9 in this branch and is dropped).
    let weights: Vec<Complex64> = eigen
        .eigenvalues()
        .iter()
        .map(|l| c(l.exp() - 1.0))
        .collect();
    let gram = eigen.weighted_gram_query(weights);
    let g_frob = gram.frob_norm_via_small();
    let mut out = Vec::with_capacity(m);
    for a in constraints {
        let est = trace_product_estimate(
            a,
            &gram,
            Some((g_frob * g_frob).max(1e-300)),
            theta * z_tilde / 9.0,
            delta_each / 2.0,
            rng,
        )?;
        out.push(est.re / z_tilde);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SdpParams {
    pub gibbs: GibbsParams,
    pub delta: f64,
    pub hermitian_probes: usize,
}

/// The feasibility loop. Feasible returns the Gibbs description of the
/// accepted iterate; infeasible is declared after T rounds of violations.
pub fn sdp_feasibility(
    inst: &SdpInstance,
    params: &SdpParams,
    rng: &mut dyn RngCore,
) -> Result<SdpVerdict> {
    inst.validate(params.hermitian_probes, rng)?;
    let n = inst.n();
    let eps = inst.eps;
    let t_max = (16.0 * (n as f64).ln() / (eps * eps)).ceil() as usize;
    let theta = eps / 4.0;
    let mut violated: Vec<usize> = Vec::new();
    // Failure budget: delta/(2T) per iteration of trace estimation.
    let mut gibbs = params.gibbs.clone();
    gibbs.delta = params.delta / (2.0 * t_max as f64);
    for t in 1..=t_max {
        let estimates = gibbs_trace_estimates(&inst.constraints, theta, &violated, &gibbs, rng)?;
        let mut found = None;
        for (j, (&est, &b)) in estimates.iter().zip(&inst.bounds).enumerate() {
            if est > b + eps / 2.0 {
                found = Some(j);
                break;
            }
        }
        match found {
            Some(j) => violated.push(j),
            None => {
                return Ok(SdpVerdict::Feasible {
                    state: GibbsStateDescription {
                        theta,
                        violated,
                        n,
                    },
                    iterations: t,
                })
            }
        }
    }
    Ok(SdpVerdict::Infeasible { iterations: t_max })
}

pub fn sdp_guarantee(inst: &SdpInstance, params: &SdpParams) -> Manifest {
    let mut g = base_guarantee("sdp", inst.eps, params.delta);
    let n = inst.n();
    g.insert("n".into(), format!("{n}"));
    g.insert("m".into(), format!("{}", inst.constraints.len()));
    g.insert(
        "iterations_max".into(),
        format!(
            "{}",
            (16.0 * (n as f64).ln() / (inst.eps * inst.eps)).ceil() as usize
        ),
    );
    g.insert("theta".into(), format!("{}", inst.eps / 4.0));
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{dense_mmw_reference, MmwVerdict};
    use crate::rng::rng_for;
    use crate::sq::{Mode, SqMatrix};
    use crate::synth::gen_hermitian;
    use std::sync::Arc;

    fn handle(a: &CMatrix) -> OversampledMatrix {
        OversampledMatrix::exact(Arc::new(SqMatrix::from_dense(a, Mode::Static).unwrap()))
    }

    fn identity_instance(n: usize, bound: f64, eps: f64) -> SdpInstance {
        SdpInstance {
            constraints: vec![handle(&CMatrix::identity(n, n))],
            bounds: vec![bound],
            eps,
        }
    }

    fn params() -> SdpParams {
        SdpParams {
            gibbs: GibbsParams::dense(0.1),
            delta: 0.1,
            hermitian_probes: 30,
        }
    }

    #[test]
    fn trivially_feasible_identity() {
        // Tr[I X] = 1 <= 2: feasible at the first iterate X = I/n.
        let mut rng = rng_for(1, 0);
        let inst = identity_instance(16, 2.0, 0.5);
        match sdp_feasibility(&inst, &params(), &mut rng).unwrap() {
            SdpVerdict::Feasible { state, iterations } => {
                assert_eq!(iterations, 1);
                assert!(state.violated.is_empty());
                let x = state.dense_state(&inst.constraints);
                assert!((x.trace().re - 1.0).abs() < 1e-10);
            }
            SdpVerdict::Infeasible { .. } => panic!("expected feasible"),
        }
    }

    #[test]
    fn trivially_infeasible_identity() {
        // Tr[I X] = 1 > 0.5 + eps/2 always: infeasible after exactly T rounds.
        let mut rng = rng_for(2, 0);
        let inst = identity_instance(16, 0.0, 0.5);
        match sdp_feasibility(&inst, &params(), &mut rng).unwrap() {
            SdpVerdict::Infeasible { iterations } => {
                let expect = (16.0 * 16f64.ln() / 0.25).ceil() as usize;
                assert_eq!(iterations, expect);
            }
            SdpVerdict::Feasible { .. } => panic!("expected infeasible"),
        }
    }

    #[test]
    fn matches_dense_reference_on_crafted_instance() {
        let mut rng = rng_for(3, 0);
        let n = 32;
        let a1 = gen_hermitian(n, &[0.9, -0.5, 0.3], false, &mut rng);
        let a2 = gen_hermitian(n, &[0.8, 0.6], false, &mut rng);
        let eps = 0.4;
        for bounds in [vec![0.5, 0.6], vec![-0.2, -0.25]] {
            let inst = SdpInstance {
                constraints: vec![handle(&a1), handle(&a2)],
                bounds: bounds.clone(),
                eps,
            };
            let dense_cs = [a1.clone(), a2.clone()];
            let reference = dense_mmw_reference(&dense_cs, &bounds, eps);
            let mut rng2 = rng_for(4, 0);
            let verdict = sdp_feasibility(&inst, &params(), &mut rng2).unwrap();
            match (&verdict, &reference) {
                (SdpVerdict::Feasible { state, .. }, MmwVerdict::Feasible { .. }) => {
                    let x = state.dense_state(&inst.constraints);
                    for (a, &b) in dense_cs.iter().zip(&bounds) {
                        let tr = (a * &x).trace().re;
                        assert!(tr <= b + eps + 1e-9, "constraint violated: {tr} vs {b}");
                    }
                }
                (SdpVerdict::Infeasible { .. }, MmwVerdict::Infeasible { .. }) => {}
                _ => panic!("verdict mismatch vs dense reference"),
            }
        }
    }

    #[test]
    fn empty_history_estimates_traces_over_n() {
        // t = 0: estimates should approximate Tr(A_i)/n.
        let mut rng = rng_for(5, 0);
        let n = 24;
        let a = gen_hermitian(n, &[1.0, -1.0], false, &mut rng);
        let constraints = vec![handle(&a)];
        let truth = a.trace().re / n as f64;
        let g = GibbsParams::dense(0.05);
        let est = gibbs_trace_estimates(&constraints, 0.25, &[], &g, &mut rng).unwrap();
        assert!((est[0] - truth).abs() <= 0.25 / 3.0 + 1e-9, "{} vs {truth}", est[0]);
    }

    #[test]
    fn sketched_branch_matches_dense_gibbs() {
        // Force the sketched path on a single-constraint history and compare
        // with the dense Gibbs traces.
        let mut rng = rng_for(6, 0);
        let n = 48;
        let a = gen_hermitian(n, &[1.0, -1.0, 0.6], false, &mut rng);
        let constraints = vec![handle(&a)];
        let theta = 0.25;
        // History long enough that H = -theta * 8 A has norm 2 > 1.
        let violated = vec![0usize; 8];
        let g = GibbsParams {
            branch: GibbsBranch::Sketched,
            delta: 0.1,
            eigen_sizes: SketchSizes::new(90, 90),
            pool_per_chunk: 30_000,
            pool_chunks: 9,
            eigen_eps_fraction: 0.4,
        };
        let est = gibbs_trace_estimates(&constraints, theta, &violated, &g, &mut rng).unwrap();
        // Dense truth.
        let h = &a * c(-theta * 8.0);
        let e = expm(&h);
        let truth = (&a * &e).trace().re / e.trace().re;
        assert!(
            (est[0] - truth).abs() <= theta,
            "sketched {} vs dense {truth}",
            est[0]
        );
    }

    #[test]
    fn sketched_branch_small_norm_early_out() {
        let mut rng = rng_for(7, 0);
        let n = 64;
        let a = gen_hermitian(n, &[0.5, -0.4], false, &mut rng);
        let constraints = vec![handle(&a)];
        let theta = 0.25;
        // ||H|| = theta * 0.5 * 2 = 0.25 << 3/4: the early-out applies.
        let violated = vec![0usize, 0];
        let g = GibbsParams {
            branch: GibbsBranch::Sketched,
            delta: 0.1,
            eigen_sizes: SketchSizes::new(70, 70),
            pool_per_chunk: 20_000,
            pool_chunks: 9,
            eigen_eps_fraction: 0.4,
        };
        let est = gibbs_trace_estimates(&constraints, theta, &violated, &g, &mut rng).unwrap();
        assert_eq!(est, vec![0.0]);
        // And the dense value is indeed below theta.
        let h = &a * c(-theta * 2.0);
        let e = expm(&h);
        let truth = (&a * &e).trace().re / e.trace().re;
        assert!(truth.abs() <= theta, "dense value {truth}");
    }

    #[test]
    fn partition_function_lower_bound_region() {
        // For ||H||_F^2 <= n/4, Tr(e^H) >= n/2 (checked densely).
        let mut rng = rng_for(8, 0);
        let n = 40;
        for seed in 0..5 {
            let h = gen_hermitian(n, &[1.5, -1.2, 0.8, -0.5], false, &mut rng);
            let scale = ((n as f64) / 4.0).sqrt() / h.norm() * 0.99;
            let hs = &h * c(scale * ((seed + 1) as f64 / 5.0));
            assert!(hs.norm_squared() <= n as f64 / 4.0 + 1e-9);
            let tr = expm(&hs).trace().re;
            assert!(tr >= n as f64 / 2.0, "Tr(e^H) = {tr}");
        }
    }
}
