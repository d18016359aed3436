//! Dense complex linear algebra helpers shared by the oracle module and the
//! small factorizations inside the transforms (SVD and Hermitian eigen of
//! sketched cores, matrix exponentials).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Singular value decomposition with singular values sorted descending.
/// Ties and the ordering produced by the backend are normalized so that
/// results are deterministic.
pub struct Svd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    pub v_t: CMatrix,
}

pub fn svd(a: &CMatrix) -> Svd {
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();

    // Sort descending, breaking ties by original index (lower index first).
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap().then(i.cmp(&j)));

    let u_sorted = CMatrix::from_fn(u.nrows(), order.len(), |r, k| u[(r, order[k])]);
    let vt_sorted = CMatrix::from_fn(order.len(), v_t.ncols(), |k, c| v_t[(order[k], c)]);
    let s_sorted: Vec<f64> = order.iter().map(|&k| s[k]).collect();
    let result = Svd {
        u: u_sorted,
        singular_values: s_sorted,
        v_t: vt_sorted,
    };
    // The backend misfactors some degenerate inputs (repeated or clustered
    // singular values) while still returning orthonormal factors; verify the
    // reconstruction and fall back to the Gram eigendecomposition route.
    let scale = result.singular_values.first().copied().unwrap_or(0.0);
    if reconstruction_error(a, &result) <= 1e-8 * scale.max(1e-300) {
        result
    } else {
        svd_via_gram(a)
    }
}

fn reconstruction_error(a: &CMatrix, d: &Svd) -> f64 {
    let mut scaled = d.u.clone();
    for (k, &s) in d.singular_values.iter().enumerate() {
        for i in 0..scaled.nrows() {
            scaled[(i, k)] *= c(s);
        }
    }
    (a - scaled * &d.v_t).norm()
}

/// SVD through the Hermitian eigendecomposition of the Gram matrix of the
/// shorter side. Slightly less accurate for tiny singular values but robust
/// on degenerate spectra.
fn svd_via_gram(a: &CMatrix) -> Svd {
    let (m, n) = (a.nrows(), a.ncols());
    if m < n {
        let t = svd_via_gram(&a.adjoint());
        return Svd {
            u: t.v_t.adjoint(),
            singular_values: t.singular_values,
            v_t: t.u.adjoint(),
        };
    }
    let gram = a.adjoint() * a;
    let eig = hermitian_eig(&gram);
    let singular_values: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .collect();
    let cutoff = singular_values.first().copied().unwrap_or(0.0) * 1e-12;
    // Left vectors: A v_i / sigma_i for significant sigma, orthonormal
    // completion for the kernel columns.
    let mut u = CMatrix::zeros(m, n);
    let mut filled = 0usize;
    for (i, &s) in singular_values.iter().enumerate() {
        if s > cutoff {
            let av = a * eig.eigenvectors.column(i);
            let col = av / c(s);
            u.set_column(i, &col);
            filled = i + 1;
        }
    }
    // Complete remaining columns against the ones already present.
    let mut next_seed = 0usize;
    for k in filled..n {
        let mut col = CVector::zeros(m);
        loop {
            col.fill(Complex64::new(0.0, 0.0));
            col[next_seed % m] = c(1.0);
            next_seed += 1;
            for prev in 0..k {
                let p = u.column(prev);
                let overlap: Complex64 = p.iter().zip(col.iter()).map(|(a, b)| a.conj() * b).sum();
                for i in 0..m {
                    let adj = overlap * p[i];
                    col[i] -= adj;
                }
            }
            let norm = col.norm();
            if norm > 1e-6 {
                col /= c(norm);
                break;
            }
        }
        u.set_column(k, &col);
    }
    Svd {
        u,
        singular_values,
        v_t: eig.eigenvectors.adjoint(),
    }
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending.
/// The input is symmetrized as (H + H†)/2 first; the deviation is returned.
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors, matching `eigenvalues` order.
    pub eigenvectors: CMatrix,
    pub asymmetry: f64,
}

pub fn hermitian_eig(h: &CMatrix) -> HermitianEig {
    assert_eq!(h.nrows(), h.ncols(), "hermitian_eig: square input");
    let sym = (h + h.adjoint()) * c(0.5);
    let asymmetry = (h - &sym).norm();
    let se = sym.clone().symmetric_eigen();
    let vals: Vec<f64> = se.eigenvalues.iter().copied().collect();
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap().then(i.cmp(&j)));
    let vecs = CMatrix::from_fn(se.eigenvectors.nrows(), order.len(), |r, k| {
        se.eigenvectors[(r, order[k])]
    });
    let result = HermitianEig {
        eigenvalues: order.iter().map(|&k| vals[k]).collect(),
        eigenvectors: vecs,
        asymmetry,
    };
    let scale = result
        .eigenvalues
        .iter()
        .map(|l| l.abs())
        .fold(0.0, f64::max);
    if eig_reconstruction_error(&sym, &result) <= 1e-8 * scale.max(1e-300) {
        result
    } else {
        // Same backend caveat as the SVD: fall back to Jacobi sweeps, which
        // are slow but unconditionally stable on Hermitian input.
        jacobi_hermitian_eig(&sym, asymmetry)
    }
}

fn eig_reconstruction_error(h: &CMatrix, e: &HermitianEig) -> f64 {
    let mut scaled = e.eigenvectors.clone();
    for (k, &l) in e.eigenvalues.iter().enumerate() {
        for i in 0..scaled.nrows() {
            scaled[(i, k)] *= c(l);
        }
    }
    (h - scaled * e.eigenvectors.adjoint()).norm()
}

/// Cyclic complex Jacobi eigensolver for Hermitian matrices.
fn jacobi_hermitian_eig(h: &CMatrix, asymmetry: f64) -> HermitianEig {
    let n = h.nrows();
    let mut a = h.clone();
    let mut v = CMatrix::identity(n, n);
    let scale = h.norm().max(1e-300);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                let phase = apq / c(mag);
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let cos_r = 1.0 / (1.0 + t * t).sqrt();
                let sin_r = t * cos_r;
                // Columns p, q of A and V rotate by [[c, s e], [-s conj(e), c]].
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * c(cos_r) - aiq * c(sin_r) * phase.conj();
                    a[(i, q)] = aip * c(sin_r) * phase + aiq * c(cos_r);
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c(cos_r) - viq * c(sin_r) * phase.conj();
                    v[(i, q)] = vip * c(sin_r) * phase + viq * c(cos_r);
                }
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = apj * c(cos_r) - aqj * c(sin_r) * phase;
                    a[(q, j)] = apj * c(sin_r) * phase.conj() + aqj * c(cos_r);
                }
            }
        }
    }
    let vals: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap().then(i.cmp(&j)));
    HermitianEig {
        eigenvalues: order.iter().map(|&k| vals[k]).collect(),
        eigenvectors: CMatrix::from_fn(n, n, |r, k| v[(r, order[k])]),
        asymmetry,
    }
}

/// Spectral norm via SVD.
pub fn spectral_norm(a: &CMatrix) -> f64 {
    svd(a).singular_values.first().copied().unwrap_or(0.0)
}

/// Matrix exponential by scaling-and-squaring with a Padé(13) approximant.
/// Deliberately independent of any eigendecomposition route so the two can
/// cross-check each other.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm: square input");
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }

    // 1-norm controls the scaling parameter.
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let theta13 = 5.371_920_351_148_152;
    let s = if norm1 > theta13 {
        (norm1 / theta13).log2().ceil() as u32
    } else {
        0
    };
    let a_scaled = a * c(1.0 / (2f64.powi(s as i32)));
    let mut result = pade13(&a_scaled);
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

fn pade13(a: &CMatrix) -> CMatrix {
    const B: [f64; 14] = [
        64_764_752_532_480_000.0,
        32_382_376_266_240_000.0,
        7_771_770_303_897_600.0,
        1_187_353_796_428_800.0,
        129_060_195_264_000.0,
        10_559_470_521_600.0,
        670_442_572_800.0,
        33_522_128_640.0,
        1_323_241_920.0,
        40_840_800.0,
        960_960.0,
        16_380.0,
        182.0,
        1.0,
    ];
    let n = a.nrows();
    let id = CMatrix::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let u_inner = &a6 * c(B[13]) + &a4 * c(B[11]) + &a2 * c(B[9]);
    let u = a * (&a6 * u_inner + &a6 * c(B[7]) + &a4 * c(B[5]) + &a2 * c(B[3]) + &id * c(B[1]));
    let v_inner = &a6 * c(B[12]) + &a4 * c(B[10]) + &a2 * c(B[8]);
    let v = &a6 * v_inner + &a6 * c(B[6]) + &a4 * c(B[4]) + &a2 * c(B[2]) + &id * c(B[0]);
    let denom = &v - &u;
    let numer = &v + &u;
    denom
        .lu()
        .solve(&numer)
        .expect("pade13: denominator is singular")
}

/// Hermitian-ness check on the full matrix (dense, for oracles and tests).
pub fn hermitian_deviation(h: &CMatrix) -> f64 {
    (h - h.adjoint()).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_sorted_and_reconstructs() {
        let a = CMatrix::from_fn(5, 3, |i, j| Complex64::new((i * 3 + j) as f64, j as f64));
        let d = svd(&a);
        for w in d.singular_values.windows(2) {
            assert!(w[0] >= w[1]);
        }
        let sigma = CMatrix::from_fn(d.singular_values.len(), d.singular_values.len(), |i, j| {
            if i == j {
                c(d.singular_values[i])
            } else {
                c(0.0)
            }
        });
        let rec = &d.u * sigma * &d.v_t;
        assert!((&a - rec).norm() < 1e-10);
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let z = CMatrix::zeros(4, 4);
        let e = expm(&z);
        assert!((e - CMatrix::identity(4, 4)).norm() < 1e-14);
    }

    #[test]
    fn expm_matches_scalar_exponential() {
        let mut a = CMatrix::zeros(2, 2);
        a[(0, 0)] = Complex64::new(0.0, std::f64::consts::PI);
        a[(1, 1)] = c(1.0);
        let e = expm(&a);
        assert!((e[(0, 0)] - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
        assert!((e[(1, 1)] - c(std::f64::consts::E)).norm() < 1e-12);
        assert!(e[(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn expm_agrees_with_eigendecomposition_route() {
        // random-ish Hermitian
        let n = 8;
        let base = CMatrix::from_fn(n, n, |i, j| {
            Complex64::new(((i * 7 + j * 13) % 11) as f64 / 11.0, ((i + 2 * j) % 5) as f64 / 7.0)
        });
        let h = (&base + base.adjoint()) * c(0.5);
        let eig = hermitian_eig(&h);
        let exp_diag = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c(eig.eigenvalues[i].exp())
            } else {
                c(0.0)
            }
        });
        let via_eig = &eig.eigenvectors * exp_diag * eig.eigenvectors.adjoint();
        let via_pade = expm(&h);
        assert!((via_eig - via_pade).norm() < 1e-10);
    }
}
