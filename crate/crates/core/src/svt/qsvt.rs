//! Dequantized singular value transformation for parity polynomials:
//! p(x) = q(x^2) (even) applies q(A†A) to b; p(x) = x q(x^2) (odd) applies
//! A q(A†A) to b. Inputs are normalized: ||A||_F = 1 and ||b|| = 1.

use num_complex::Complex64;
use rand::RngCore;

use super::even::{even_svt, EvenSvtParams, NormMode, SketchSizes};
use super::functions::ScalarFunction;
use crate::error::{Error, Result};
use crate::sketch::{RowSketch, VectorDist};
use crate::sq::{column_vector, linear_combination, OversampledMatrix, OversampledVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Grid maxima of q and its shifted quotient, the Lipschitz data for the
/// induced singular value transforms.
#[derive(Debug, Clone)]
pub struct EnvelopeBounds {
    pub q_max: f64,
    pub dq_max: f64,
    pub qbar_max: f64,
    pub dqbar_max: f64,
}

/// A degree-d polynomial of parity d with |p| <= 1 on [-1, 1], split as
/// p(x) = q(x^2) or x q(x^2).
#[derive(Debug, Clone)]
pub struct QsvtPolynomial {
    coeffs: Vec<f64>,
    q: Vec<f64>,
    degree: usize,
    parity: Parity,
    envelope: EnvelopeBounds,
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect()
}

const ENVELOPE_GRID: usize = 100_000;
const PARITY_GRID: usize = 10_000;

impl QsvtPolynomial {
    /// Validate and split a coefficient vector (ascending powers).
    pub fn new(coeffs: &[f64]) -> Result<Self> {
        let mut trimmed = coeffs.to_vec();
        while trimmed.len() > 1 && trimmed.last().is_some_and(|c| c.abs() < 1e-14) {
            trimmed.pop();
        }
        let degree = trimmed.len() - 1;
        if degree > 64 {
            return Err(Error::InvalidParam(format!("degree {degree} > 64")));
        }
        let parity = if degree % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        };
        for (k, &c) in trimmed.iter().enumerate() {
            let wrong_parity = (k % 2) != (degree % 2);
            if wrong_parity && c.abs() > 1e-12 {
                return Err(Error::ParityMismatch(format!(
                    "coefficient of x^{k} = {c} breaks parity-{degree}"
                )));
            }
        }
        // q from the same-parity coefficients.
        let q: Vec<f64> = match parity {
            Parity::Even => trimmed.iter().step_by(2).copied().collect(),
            Parity::Odd => trimmed.iter().skip(1).step_by(2).copied().collect(),
        };
        // |p| <= 1 on a grid of [-1, 1].
        for k in 0..=PARITY_GRID {
            let x = -1.0 + 2.0 * k as f64 / PARITY_GRID as f64;
            let px = horner(&trimmed, x);
            if px.abs() > 1.0 + 1e-9 {
                return Err(Error::InvalidParam(format!(
                    "|p({x})| = {} exceeds 1",
                    px.abs()
                )));
            }
            // Parity consistency.
            let pmx = horner(&trimmed, -x);
            let expect = match parity {
                Parity::Even => px,
                Parity::Odd => -px,
            };
            if (pmx - expect).abs() > 1e-9 {
                return Err(Error::ParityMismatch(format!("p(-x) mismatch at {x}")));
            }
        }
        let envelope = envelope_bounds(&q);
        Ok(Self {
            coeffs: trimmed,
            q,
            degree,
            parity,
            envelope,
        })
    }

    /// Chebyshev polynomial of the first kind, optionally rescaled so the
    /// supremum on [-1,1] is `scale`.
    pub fn chebyshev(d: usize, scale: f64) -> Result<Self> {
        let mut t0 = vec![1.0];
        let mut t1 = vec![0.0, 1.0];
        if d == 0 {
            return Self::new(&[scale]);
        }
        for _ in 1..d {
            let mut next = vec![0.0; t1.len() + 1];
            for (k, &c) in t1.iter().enumerate() {
                next[k + 1] += 2.0 * c;
            }
            for (k, &c) in t0.iter().enumerate() {
                next[k] -= c;
            }
            t0 = std::mem::replace(&mut t1, next);
        }
        let scaled: Vec<f64> = t1.iter().map(|c| c * scale).collect();
        Self::new(&scaled)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn q_coeffs(&self) -> &[f64] {
        &self.q
    }

    pub fn envelope(&self) -> &EnvelopeBounds {
        &self.envelope
    }

    pub fn eval(&self, x: f64) -> f64 {
        horner(&self.coeffs, x)
    }

    pub fn eval_q(&self, y: f64) -> f64 {
        horner(&self.q, y)
    }

    /// Check the grid maxima against the Markov-Bernstein-style asymptotic
    /// ceilings with a calibration constant.
    pub fn markov_bernstein_ok(&self, constant: f64) -> bool {
        let d = self.degree.max(1) as f64;
        let e = &self.envelope;
        match self.parity {
            Parity::Even => {
                e.q_max <= constant
                    && e.dq_max <= constant * d * d
                    && e.qbar_max <= constant * d * d
                    && e.dqbar_max <= constant * d.powi(4)
            }
            Parity::Odd => {
                e.q_max <= constant * d
                    && e.dq_max <= constant * d.powi(3)
                    && e.qbar_max <= constant * d.powi(3)
                    && e.dqbar_max <= constant * d.powi(5)
            }
        }
    }

    /// The singular value transform used by the even branch: q held constant
    /// outside [0, 1].
    pub fn clamped_q_function(&self) -> ScalarFunction {
        let q = self.q.clone();
        let qbar: Vec<f64> = q.iter().skip(1).copied().collect();
        let q0 = q.first().copied().unwrap_or(0.0);
        let q1 = horner(&q, 1.0);
        let q_for_bar = q.clone();
        let _ = q_for_bar;
        let f = move |x: f64| Complex64::new(horner(&q, x.clamp(0.0, 1.0)), 0.0);
        let fbar = move |x: f64| {
            if x <= 1.0 {
                Complex64::new(horner(&qbar, x.max(0.0)), 0.0)
            } else {
                Complex64::new((q1 - q0) / x, 0.0)
            }
        };
        ScalarFunction::new(
            "qsvt_q_clamped",
            f,
            fbar,
            Complex64::new(q0, 0.0),
            self.envelope.dq_max.max(1e-12),
            self.envelope.dqbar_max.max(1e-12),
        )
    }

    /// The shifted transform g = q - q(0) for the odd branch (g(0) = 0).
    pub fn shifted_q_function(&self) -> ScalarFunction {
        let q = self.q.clone();
        let qbar: Vec<f64> = q.iter().skip(1).copied().collect();
        let q0 = q.first().copied().unwrap_or(0.0);
        let q1 = horner(&q, 1.0);
        let f = move |x: f64| Complex64::new(horner(&q, x.clamp(0.0, 1.0)) - q0, 0.0);
        let fbar = move |x: f64| {
            if x <= 1.0 {
                Complex64::new(horner(&qbar, x.max(0.0)), 0.0)
            } else {
                Complex64::new((q1 - q0) / x, 0.0)
            }
        };
        ScalarFunction::new(
            "qsvt_g_shifted",
            f,
            fbar,
            Complex64::new(0.0, 0.0),
            self.envelope.dq_max.max(1e-12),
            self.envelope.dqbar_max.max(1e-12),
        )
    }
}

/// Numeric maxima of |q|, |q'|, |qbar|, |qbar'| over a dense grid of [0, 1].
pub fn envelope_bounds(q: &[f64]) -> EnvelopeBounds {
    let dq = derivative(q);
    let qbar: Vec<f64> = q.iter().skip(1).copied().collect();
    let dqbar = derivative(&qbar);
    let mut out = EnvelopeBounds {
        q_max: 0.0,
        dq_max: 0.0,
        qbar_max: 0.0,
        dqbar_max: 0.0,
    };
    for k in 0..=ENVELOPE_GRID {
        let x = k as f64 / ENVELOPE_GRID as f64;
        out.q_max = out.q_max.max(horner(q, x).abs());
        out.dq_max = out.dq_max.max(horner(&dq, x).abs());
        out.qbar_max = out.qbar_max.max(horner(&qbar, x).abs());
        out.dqbar_max = out.dqbar_max.max(horner(&dqbar, x).abs());
    }
    out
}

/// Inner product-sketch sizes for the three approximation stages of the odd
/// branch (the even branch only uses `rb`).
#[derive(Debug, Clone, Copy)]
pub struct QsvtInnerSizes {
    /// Joint sketch for R b ~ u.
    pub rb_eps_fraction: f64,
    /// One-sided sketch for A R† (odd branch only).
    pub ar: usize,
    /// One-sided sketch for A b (odd branch only).
    pub ab: usize,
}

#[derive(Debug, Clone)]
pub struct QsvtParams {
    /// Absolute error target on the output vector.
    pub eps: f64,
    pub delta: f64,
    pub sizes: SketchSizes,
    pub inner: QsvtInnerSizes,
}

pub struct QsvtOutput {
    pub handle: OversampledVector,
    pub parity: Parity,
    pub degree: usize,
}

/// Apply p^(QV)(A) to b. Requires ||A||_F = 1 and ||b|| = 1 (within 1e-8).
pub fn qsvt_apply(
    a: &OversampledMatrix,
    b: &OversampledVector,
    p: &QsvtPolynomial,
    params: &QsvtParams,
    rng: &mut dyn RngCore,
) -> Result<QsvtOutput> {
    let frob_sq = a
        .known_frob_sq()
        .ok_or_else(|| Error::InvalidParam("qsvt needs a known ||A||_F".into()))?;
    if (frob_sq.sqrt() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParam(format!(
            "||A||_F = {} but qsvt requires 1",
            frob_sq.sqrt()
        )));
    }
    let b_norm_sq = b
        .known_norm_sq()
        .ok_or_else(|| Error::InvalidParam("qsvt needs a known ||b||".into()))?;
    if (b_norm_sq.sqrt() - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParam(format!(
            "||b|| = {} but qsvt requires 1",
            b_norm_sq.sqrt()
        )));
    }

    let d_eff = p.degree().max(1) as f64;
    match p.parity() {
        Parity::Even => {
            let f = p.clamped_q_function();
            let even_params =
                EvenSvtParams::new(params.eps, params.delta, NormMode::Spectral, params.sizes);
            let rur = even_svt(a, &f, even_params, rng)?;
            let eps_b = params.inner.rb_eps_fraction * params.eps / d_eff;
            let u = rur.estimate_rb(b, eps_b, params.delta / 2.0, rng);
            let handle = rur.output_handle(&u, Some(b))?;
            Ok(QsvtOutput {
                handle,
                parity: Parity::Even,
                degree: p.degree(),
            })
        }
        Parity::Odd => {
            let g = p.shifted_q_function();
            let even_params =
                EvenSvtParams::new(params.eps, params.delta, NormMode::Spectral, params.sizes);
            let rur = even_svt(a, &g, even_params, rng)?;
            let eps_b = params.inner.rb_eps_fraction * params.eps / (d_eff * d_eff);
            let u = rur.estimate_rb(b, eps_b, params.delta / 3.0, rng);
            let y = rur.apply_middle(&u);

            // Stage 1: A R† ~ (A S1†)(S1 R†), S1 over columns of R.
            let col_dist = rur.sketched().column_dist();
            let s1 = RowSketch::draw(&col_dist, params.inner.ar, rng);
            let w = s1.apply_rows(rur.rows(), |j, k| rur.sketched().entry(k, j).conj());
            let wy = &w * &y;

            // Stage 3: A b ~ (A S3†)(S3 b), S3 from b's distribution.
            let b_dist = VectorDist::of(b);
            let s3 = RowSketch::draw(&b_dist, params.inner.ab, rng);
            let q0 = Complex64::new(p.q_coeffs().first().copied().unwrap_or(0.0), 0.0);

            let mut terms: Vec<(OversampledVector, Complex64)> = Vec::new();
            for (l, row) in s1.rows().iter().enumerate() {
                let col = column_vector(a, row.index);
                terms.push((col, Complex64::new(row.weight, 0.0) * wy[l]));
            }
            if q0.norm() > 0.0 {
                for row in s3.rows() {
                    let col = column_vector(a, row.index);
                    let coeff =
                        q0 * Complex64::new(row.weight * row.weight, 0.0) * b.entry(row.index);
                    terms.push((col, coeff));
                }
            }
            let handle = linear_combination(&terms)?;
            Ok(QsvtOutput {
                handle,
                parity: Parity::Odd,
                degree: p.degree(),
            })
        }
    }
}
