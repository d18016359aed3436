//! Trial execution: build access structures, run the requested pipeline,
//! verify against the dense oracle, and record one CSV row per trial.

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use sqla::apps;
use sqla::dense::{c, spectral_norm, CMatrix, CVector};
use sqla::oracle;
use sqla::rng::{rng_for, SeededRng};
use sqla::sq::{Mode, OversampledMatrix, OversampledVector, SqMatrix, SqVector};
use sqla::svt;
use sqla::svt::{EvenSvtParams, NormMode, ScalarFunction, SketchSizes};
use sqla::synth;

use crate::config::{ExperimentConfig, MatrixSource};
use crate::CliError;

#[derive(Debug, Clone)]
pub struct TrialRow {
    pub trial: usize,
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
    pub measured_error: f64,
    pub bound: f64,
    pub pass: bool,
    pub build_ms: f64,
    pub core_ms: f64,
    pub verify_ms: f64,
}

/// Result columns are fully deterministic given (config, seed); wall times
/// go to a companion file so trial CSVs stay byte-identical across reruns.
pub const CSV_HEADER: &str = "trial,seed,sketch_rows,sketch_cols,measured_error,bound,pass";

pub const TIMING_HEADER: &str = "trial,build_ms,core_ms,verify_ms";

impl TrialRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{:.12e},{:.12e},{}",
            self.trial,
            self.seed,
            self.rows,
            self.cols,
            self.measured_error,
            self.bound,
            self.pass
        )
    }

    pub fn timing_line(&self) -> String {
        format!(
            "{},{:.3},{:.3},{:.3}",
            self.trial, self.build_ms, self.core_ms, self.verify_ms
        )
    }
}

fn ms(from: Instant) -> f64 {
    from.elapsed().as_secs_f64() * 1e3
}

/// The matrix realized for one trial. Hermitian pipelines interpret the
/// spectrum as eigenvalues (which may be negative).
fn realize_matrix(
    config: &ExperimentConfig,
    hermitian: bool,
    rng: &mut SeededRng,
) -> Result<CMatrix, CliError> {
    match &config.source {
        MatrixSource::File(path) => {
            let a = if path.extension().and_then(|e| e.to_str()) == Some("sqla") {
                sqla::io::read_binary_matrix(path)
            } else {
                sqla::io::read_matrix_market(path)
            }
            .map_err(CliError::io_from)?;
            Ok(a)
        }
        MatrixSource::Synthetic {
            rows,
            cols,
            spectrum,
            noise,
        } => {
            if hermitian {
                Ok(synth::gen_hermitian(*rows, spectrum, false, rng))
            } else {
                let spec = synth::SynthSpec {
                    rows: *rows,
                    cols: *cols,
                    spectrum: spectrum.clone(),
                    noise: *noise,
                    complex_field: false,
                };
                Ok(synth::gen_matrix(&spec, rng))
            }
        }
    }
}

fn exact_handle(a: &CMatrix) -> Result<OversampledMatrix, CliError> {
    let sq = SqMatrix::from_dense(a, Mode::Static).map_err(CliError::validation_from)?;
    Ok(OversampledMatrix::exact(Arc::new(sq)))
}

fn scaled_sizes(config: &ExperimentConfig, r_default: usize, c_default: usize) -> SketchSizes {
    let mult = config.constant("size_multiplier", 1.0);
    let r = (config.param_usize("r", r_default) as f64 * mult).ceil() as usize;
    let c = (config.param_usize("c", c_default) as f64 * mult).ceil() as usize;
    SketchSizes::new(r.max(2), c.max(2))
}

fn scalar_function(config: &ExperimentConfig) -> Result<ScalarFunction, CliError> {
    let sigma = config.param("sigma", 1.0);
    let eta = config.param("eta", 0.5);
    match config
        .params
        .get("function_step")
        .map(|_| "step")
        .or_else(|| config.params.get("function_inverse").map(|_| "inverse"))
        .unwrap_or("step")
    {
        "inverse" => ScalarFunction::thresholded_inverse(sigma, eta),
        _ => ScalarFunction::threshold_step(sigma, eta),
    }
    .map_err(CliError::validation_from)
}

/// Run one trial of the configured pipeline.
pub fn run_trial(config: &ExperimentConfig, trial: usize) -> Result<TrialRow, CliError> {
    let seed = config.seed;
    let mut rng = rng_for(seed, trial as u64 + 1);
    let eps = config.param("eps", 0.2);
    let delta = config.param("delta", 0.1);
    let hermitian = matches!(
        config.pipeline.as_str(),
        "hamiltonian" | "hamiltonian_lowrank" | "sdp" | "eigen"
    );
    let a = realize_matrix(config, hermitian, &mut rng)?;
    let (m_dim, n_dim) = (a.nrows(), a.ncols());
    let oracle_on = config.oracle && m_dim.max(n_dim) <= config.oracle_limit;

    let build_start = Instant::now();
    let handle = exact_handle(&a)?;
    let build_ms = ms(build_start);

    let mut row = TrialRow {
        trial,
        seed,
        rows: 0,
        cols: 0,
        measured_error: f64::NAN,
        bound: eps,
        pass: !oracle_on,
        build_ms,
        core_ms: 0.0,
        verify_ms: 0.0,
    };

    match config.pipeline.as_str() {
        "even_svt" => {
            let f = scalar_function(config)?;
            let sizes = scaled_sizes(config, 200, 200);
            row.rows = sizes.rows;
            row.cols = sizes.cols;
            let core_start = Instant::now();
            let rur = svt::even_svt(
                &handle,
                &f,
                EvenSvtParams::new(eps, delta, NormMode::Spectral, sizes),
                &mut rng,
            )
            .map_err(CliError::validation_from)?;
            row.core_ms = ms(core_start);
            if oracle_on {
                let verify_start = Instant::now();
                let op = rur.to_dense_operator(true);
                let truth = oracle::dense_eigen_transform(&(a.adjoint() * &a), &|x| f.eval(x));
                row.measured_error = spectral_norm(&(op - truth));
                row.pass = row.measured_error <= eps;
                row.verify_ms = ms(verify_start);
            }
            if let Some(dir) = config.params.get("save_decomposition") {
                if *dir != 0.0 {
                    rur.save_dir(&config.out_dir.join(format!("rur-{trial:04}")))
                        .map_err(CliError::io_from)?;
                }
            }
        }
        "sve" => {
            let sizes = scaled_sizes(config, 150, 150);
            row.rows = sizes.rows;
            row.cols = sizes.cols;
            let core_start = Instant::now();
            let est = sqla::sketch::estimate_singular_values(
                &handle, sizes.rows, sizes.cols, &mut rng,
            );
            row.core_ms = ms(core_start);
            row.bound = eps * a.norm_squared();
            if oracle_on {
                let verify_start = Instant::now();
                let truth = sqla::dense::svd(&a).singular_values;
                let mut total = 0.0;
                for i in 0..truth.len().max(est.len()) {
                    let t = truth.get(i).copied().unwrap_or(0.0);
                    let e = est.get(i).copied().unwrap_or(0.0);
                    total += (e * e - t * t).powi(2);
                }
                row.measured_error = total.sqrt();
                row.pass = row.measured_error <= row.bound;
                row.verify_ms = ms(verify_start);
            }
        }
        "recommend" => {
            let spec = apps::ThresholdSpec::new(config.param("sigma", 1.0), config.param("eta", 1.0 / 6.0))
                .map_err(CliError::validation_from)?;
            let sizes = scaled_sizes(config, 150, 150);
            row.rows = sizes.rows;
            row.cols = sizes.cols;
            let params = apps::RecommendParams {
                spec,
                eps,
                delta,
                sizes,
                inner_rows: config.param_usize("inner_rows", 500),
            };
            let target_row = config.param_usize("row", 0);
            let core_start = Instant::now();
            let out = apps::recommend(&handle, target_row, &params, &mut rng)
                .map_err(CliError::validation_from)?;
            row.core_ms = ms(core_start);
            if oracle_on {
                let verify_start = Instant::now();
                let truth_matrix = oracle::dense_thresholded(
                    &a,
                    spec.sigma,
                    spec.eta,
                    oracle::ThresholdKind::LowRank,
                );
                let truth_row = truth_matrix.row(target_row);
                let denom = truth_row.norm_squared();
                row.measured_error = match &out.row_handle {
                    Some(h) => {
                        let dist = oracle::exact_output_distribution(h)
                            .map_err(CliError::validation_from)?;
                        let reference: Vec<f64> =
                            truth_row.iter().map(|z| z.norm_sqr() / denom).collect();
                        sqla::stats::tv_distance(&dist, &reference)
                    }
                    None => {
                        if denom < 1e-20 {
                            0.0
                        } else {
                            1.0
                        }
                    }
                };
                row.bound = config.param("tv_bound", 0.1);
                row.pass = row.measured_error <= row.bound;
                row.verify_ms = ms(verify_start);
            }
        }
        "pca" => {
            let k = config.param_usize("k", 3);
            let sizes = scaled_sizes(config, 250, 250);
            row.rows = sizes.rows;
            row.cols = sizes.cols;
            let params = apps::PcaParams {
                k,
                eta_gap: config.param("eta_gap", 0.2),
                eps,
                delta,
                sizes,
            };
            let core_start = Instant::now();
            let out = apps::pca(&handle, &params, &mut rng).map_err(CliError::validation_from)?;
            row.core_ms = ms(core_start);
            if oracle_on {
                let verify_start = Instant::now();
                let eig = sqla::dense::hermitian_eig(&(a.adjoint() * &a));
                let trace: f64 = eig.eigenvalues.iter().filter(|l| **l > 0.0).sum();
                let dev: f64 = out
                    .eigenvalues
                    .iter()
                    .zip(eig.eigenvalues.iter())
                    .map(|(x, y)| (x - y).abs())
                    .sum();
                row.measured_error = dev;
                row.bound = eps * trace;
                row.pass = dev <= row.bound;
                row.verify_ms = ms(verify_start);
            }
        }
        "regression" => {
            let spec = apps::ThresholdSpec::new(config.param("sigma", 1.0), config.param("eta", 0.5))
                .map_err(CliError::validation_from)?;
            let sizes = scaled_sizes(config, 300, 900);
            row.rows = sizes.rows;
            row.cols = sizes.cols;
            let rank = match &config.source {
                MatrixSource::Synthetic { spectrum, .. } => spectrum.len(),
                _ => 5,
            };
            let svd = sqla::dense::svd(&a);
            let span = svd.u.columns(0, rank.min(svd.singular_values.len())).clone_owned();
            let b = synth::gen_aligned_unit(&span, config.param("alignment", 1.0), &mut rng);
            let params = apps::RegressionParams::new(spec, eps, delta, sizes)
                .with_tol_constant(config.constant("tol", 6.0));
            let core_start = Instant::now();
            let out = apps::solve_regularized(
                &handle,
                &apps::DenseVectorQuery(b.clone()),
                b.norm_squared(),
                &params,
                &mut rng,
            )
            .map_err(CliError::validation_from)?;
            row.core_ms = ms(core_start);
            if oracle_on {
                let verify_start = Instant::now();
                let truth = oracle::dense_thresholded(
                    &a,
                    spec.sigma,
                    spec.eta,
                    oracle::ThresholdKind::Pseudoinverse,
                ) * &b;
                let got = CVector::from_fn(out.handle.len(), |i, _| out.handle.entry(i));
                row.measured_error = (&got - &truth).norm() / truth.norm().max(1e-300);
                row.pass = row.measured_error <= eps;
                row.verify_ms = ms(verify_start);
            }
        }
        "hamiltonian" | "hamiltonian_lowrank" => {
            let lowrank = config.pipeline == "hamiltonian_lowrank";
            let mode = if lowrank {
                apps::EvolveMode::LowRank {
                    sigma: config.param("h_sigma", 0.5),
                }
            } else {
                apps::EvolveMode::General
            };
            let sizes = scaled_sizes(config, 150, 150);
            row.rows = sizes.rows;
            row.cols = sizes.cols;
            let eig = sqla::dense::hermitian_eig(&a);
            let rank = match &config.source {
                MatrixSource::Synthetic { spectrum, .. } => spectrum.len(),
                _ => 4,
            };
            let span = eig.eigenvectors.columns(0, rank.min(a.ncols())).clone_owned();
            let b = synth::gen_aligned_unit(&span, config.param("alignment", 0.8), &mut rng);
            let b_handle = OversampledVector::exact(Arc::new(
                SqVector::build(b.iter().copied().collect(), Mode::Static)
                    .map_err(CliError::validation_from)?,
            ));
            let params = apps::HamiltonianParams {
                mode,
                eps,
                delta,
                cos_sizes: sizes,
                sinc_sizes: sizes,
                rb_tol: config.param("rb_tol", 0.05),
                s_rh: config.param_usize("s_rh", 3000),
                s_cb: config.param_usize("s_cb", 3000),
                s_hb: config.param_usize("s_hb", 3000),
                hermitian_probes: 50,
            };
            let core_start = Instant::now();
            let out = apps::hamiltonian_evolve(&handle, &b_handle, &params, &mut rng)
                .map_err(CliError::validation_from)?;
            row.core_ms = ms(core_start);
            if oracle_on {
                let verify_start = Instant::now();
                let truth = oracle::dense_expm_apply(&a, &b, Complex64::new(0.0, 1.0));
                let got = CVector::from_fn(out.handle.len(), |i, _| out.handle.entry(i));
                row.measured_error = (&got - &truth).norm();
                row.pass = row.measured_error <= eps;
                row.verify_ms = ms(verify_start);
            }
        }
        "sdp" => {
            // Two-constraint instance: the realized Hermitian matrix and a
            // shifted identity-like companion.
            let mut rng2 = rng_for(seed, (trial as u64 + 1) << 20);
            let a2 = synth::gen_hermitian(
                m_dim,
                &[0.8, 0.5],
                false,
                &mut rng2,
            );
            let inst = apps::SdpInstance {
                constraints: vec![handle.clone(), exact_handle(&a2)?],
                bounds: vec![config.param("b1", 0.5), config.param("b2", 0.5)],
                eps,
            };
            let params = apps::SdpParams {
                gibbs: apps::GibbsParams::dense(delta),
                delta,
                hermitian_probes: 40,
            };
            let core_start = Instant::now();
            let verdict =
                apps::sdp_feasibility(&inst, &params, &mut rng).map_err(CliError::validation_from)?;
            row.core_ms = ms(core_start);
            if oracle_on {
                let verify_start = Instant::now();
                let reference = oracle::dense_mmw_reference(
                    &[a.clone(), a2.clone()],
                    &inst.bounds,
                    eps,
                );
                let agree = matches!(
                    (&verdict, &reference),
                    (apps::SdpVerdict::Feasible { .. }, oracle::MmwVerdict::Feasible { .. })
                        | (apps::SdpVerdict::Infeasible { .. }, oracle::MmwVerdict::Infeasible { .. })
                );
                let mut constraint_ok = true;
                if let apps::SdpVerdict::Feasible { state, .. } = &verdict {
                    let x = state.dense_state(&inst.constraints);
                    for (cst, &bnd) in [&a, &a2].iter().zip(&inst.bounds) {
                        let tr = ((*cst) * &x).trace().re;
                        if tr > bnd + eps + 1e-9 {
                            constraint_ok = false;
                        }
                    }
                }
                row.measured_error = if agree && constraint_ok { 0.0 } else { 1.0 };
                row.bound = 0.5;
                row.pass = agree && constraint_ok;
                row.verify_ms = ms(verify_start);
            }
        }
        "discriminant" => {
            let sigma = config.param("sigma", 1.0);
            let mut rng2 = rng_for(seed, (trial as u64 + 1) << 21);
            let w = synth::gen_matrix(
                &synth::SynthSpec::low_rank(m_dim, n_dim, &[1.8, 1.5, 1.3]),
                &mut rng2,
            );
            let w_handle = exact_handle(&w)?;
            let sizes = scaled_sizes(config, 200, 200);
            row.rows = sizes.rows;
            row.cols = sizes.cols;
            let params = apps::DiscriminantParams {
                sigma,
                eps,
                delta,
                b_sizes: sizes,
                w_sizes: sizes,
                cross: config.param_usize("cross", 4000),
            };
            let core_start = Instant::now();
            let out = apps::discriminant_analysis(&handle, &w_handle, &params, &mut rng)
                .map_err(CliError::validation_from)?;
            row.core_ms = ms(core_start);
            if oracle_on {
                let verify_start = Instant::now();
                let fsqrt = ScalarFunction::disc_sqrt(sigma).map_err(CliError::validation_from)?;
                let finv = ScalarFunction::disc_inv(sigma).map_err(CliError::validation_from)?;
                let fs = oracle::dense_eigen_transform(&(a.adjoint() * &a), &|x| fsqrt.eval(x));
                let fi = oracle::dense_eigen_transform(&(w.adjoint() * &w), &|x| finv.eval(x));
                let m_op = &fs * fi * &fs;
                let k = out.eigenvalues.len();
                let u = CMatrix::from_fn(n_dim, k, |j, col| out.eigenvectors[col].entry(j));
                let mut ud = u.clone();
                for col in 0..k {
                    for j in 0..n_dim {
                        ud[(j, col)] *= c(out.eigenvalues[col]);
                    }
                }
                let b_norm = spectral_norm(&a);
                row.measured_error = spectral_norm(&(&m_op * &u - ud));
                row.bound = eps * b_norm * b_norm / (sigma * sigma);
                row.pass = row.measured_error <= row.bound;
                row.verify_ms = ms(verify_start);
            }
        }
        "qsvt" => {
            let frob = a.norm();
            let a_unit = &a / c(frob);
            let h_unit = exact_handle(&a_unit)?;
            let p = match config.param_usize("poly_degree", 1) {
                2 => svt::QsvtPolynomial::new(&[0.0, 0.0, 1.0]),
                4 => svt::QsvtPolynomial::chebyshev(4, 1.0),
                _ => svt::QsvtPolynomial::new(&[0.0, 1.0]),
            }
            .map_err(CliError::validation_from)?;
            let svd = sqla::dense::svd(&a_unit);
            let span = svd.v_t.rows(0, 2).adjoint();
            let b = synth::gen_aligned_unit(&span, 0.95, &mut rng);
            let b_handle = OversampledVector::exact(Arc::new(
                SqVector::build(b.iter().copied().collect(), Mode::Static)
                    .map_err(CliError::validation_from)?,
            ));
            let sizes = scaled_sizes(config, 220, 220);
            row.rows = sizes.rows;
            row.cols = sizes.cols;
            let params = svt::QsvtParams {
                eps,
                delta,
                sizes,
                inner: svt::QsvtInnerSizes {
                    rb_eps_fraction: 1.0,
                    ar: config.param_usize("ar", 4000),
                    ab: config.param_usize("ab", 2000),
                },
            };
            let core_start = Instant::now();
            let out = svt::qsvt_apply(&h_unit, &b_handle, &p, &params, &mut rng)
                .map_err(CliError::validation_from)?;
            row.core_ms = ms(core_start);
            if oracle_on {
                let verify_start = Instant::now();
                let truth = match p.parity() {
                    svt::Parity::Even => {
                        let gram = a_unit.adjoint() * &a_unit;
                        oracle::dense_eigen_transform(&gram, &|x| c(p.eval_q(x))) * &b
                    }
                    svt::Parity::Odd => {
                        oracle::dense_svt(&a_unit, &|s| c(s * p.eval_q(s * s))) * &b
                    }
                };
                let got = CVector::from_fn(out.handle.len(), |i, _| out.handle.entry(i));
                row.measured_error = (&got - &truth).norm() / truth.norm().max(1e-300);
                row.pass = row.measured_error <= eps;
                row.verify_ms = ms(verify_start);
            }
        }
        other => {
            return Err(CliError::validation(format!("unknown pipeline: {other}")));
        }
    }
    Ok(row)
}
