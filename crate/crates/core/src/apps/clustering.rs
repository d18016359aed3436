//! Supervised clustering: estimate the squared distance between a point and
//! a cluster centroid as an inner product of two order-3 tensors, one with
//! SQ access built from the normalized data matrix.

use num_complex::Complex64;
use rand::RngCore;

use super::common::base_guarantee;
use crate::dense::{CMatrix, CVector};
use crate::error::{Error, Result};
use crate::io::Manifest;
use crate::sketch::{median_chunks, median_of_means};
use crate::sq::{OversampledMatrix, VectorQuery};

/// The standard construction: rows [p/||p||; -q_i/(||q_i|| sqrt(n-1))] and
/// weights w = [||p||, ||q_i||/sqrt(n-1)]. ||M||_F^2 = 2 by construction.
pub struct ClusterInstance {
    pub m: CMatrix,
    pub w: CVector,
}

pub fn build_cluster_instance(p: &CVector, qs: &[CVector]) -> Result<ClusterInstance> {
    if qs.is_empty() {
        return Err(Error::InvalidParam("need at least one cluster point".into()));
    }
    let d = p.len();
    for q in qs {
        if q.len() != d {
            return Err(Error::ShapeMismatch {
                expected: format!("{d}"),
                got: format!("{}", q.len()),
            });
        }
    }
    let n = qs.len() + 1;
    let scale = ((n - 1) as f64).sqrt();
    let p_norm = p.norm();
    if p_norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let mut m = CMatrix::zeros(n, d);
    let mut w = CVector::zeros(n);
    for j in 0..d {
        m[(0, j)] = p[j] / Complex64::new(p_norm, 0.0);
    }
    w[0] = Complex64::new(p_norm, 0.0);
    for (i, q) in qs.iter().enumerate() {
        let q_norm = q.norm();
        if q_norm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        for j in 0..d {
            m[(i + 1, j)] = -q[j] / Complex64::new(q_norm * scale, 0.0);
        }
        w[i + 1] = Complex64::new(q_norm / scale, 0.0);
    }
    Ok(ClusterInstance { m, w })
}

/// Estimate ||w M||^2 to additive eps with probability 1 - delta, given SQ
/// access to M and query access to w. This is the squared point-to-centroid
/// distance for the standard construction.
pub fn centroid_distance_sq(
    m: &OversampledMatrix,
    w: &dyn VectorQuery,
    eps: f64,
    delta: f64,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    let (n, _d) = m.shape();
    if w.len() != n {
        return Err(Error::ShapeMismatch {
            expected: format!("{n}"),
            got: format!("{}", w.len()),
        });
    }
    let bound = m.bound().clone();
    let frob_sq = bound.frob_sq();
    // ||u||^2 = ||M||_F^4, ||v||^2 = ||w||^4.
    let w_norm_sq: f64 = (0..n).map(|i| w.entry(i).norm_sqr()).sum();
    let per = (8.0 * frob_sq * frob_sq * w_norm_sq * w_norm_sq / (eps * eps))
        .ceil()
        .max(1.0) as usize;
    let chunks = median_chunks(delta);
    let est = median_of_means(per, chunks, rng, |rng| {
        // Sample (i, j) jointly from M, then k from the row-norm marginal.
        // The proposal probability comes from the bound side; with plain SQ
        // access (phi = 1) it coincides with the true distribution.
        let (i, j) = bound.sample_entry(rng);
        let k = bound.sample_row(rng);
        let m_ij = m.entry(i, j);
        let m_kj = m.entry(k, j);
        let row_k_sq = bound.row_norm_sq(k);
        let p = bound.entry(i, j).norm_sqr() * row_k_sq / (frob_sq * frob_sq);
        // u = M(i,j) m(k); v = w_i w_k M(k,j) / m(k).
        let u = m_ij * Complex64::new(row_k_sq.sqrt(), 0.0);
        let v = w.entry(i) * w.entry(k) * m_kj / Complex64::new(row_k_sq.sqrt(), 0.0);
        u.conj() * v / p
    });
    Ok(est.re)
}

/// Convenience pipeline: build the instance, wrap SQ access, and estimate
/// ||p - centroid||^2.
pub fn centroid_distance(
    p: &CVector,
    qs: &[CVector],
    eps: f64,
    delta: f64,
    rng: &mut dyn RngCore,
) -> Result<(f64, Manifest)> {
    let inst = build_cluster_instance(p, qs)?;
    let sq = crate::sq::SqMatrix::from_dense(&inst.m, crate::sq::Mode::Static)?;
    let handle = OversampledMatrix::exact(std::sync::Arc::new(sq));
    let w = super::common::DenseVectorQuery(inst.w.clone());
    let d2 = centroid_distance_sq(&handle, &w, eps, delta, rng)?;
    let mut g = base_guarantee("cluster", eps, delta);
    g.insert("points".into(), format!("{}", qs.len()));
    g.insert("frob_sq".into(), format!("{}", handle.bound_frob_sq()));
    Ok((d2, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::c;
    use crate::rng::rng_for;

    fn cvec(entries: &[f64]) -> CVector {
        CVector::from_fn(entries.len(), |i, _| c(entries[i]))
    }

    #[test]
    fn frobenius_norm_is_two() {
        let p = cvec(&[1.0, 2.0, 2.0]);
        let qs = vec![cvec(&[0.5, 0.0, 0.0]), cvec(&[0.0, 3.0, 4.0])];
        let inst = build_cluster_instance(&p, &qs).unwrap();
        assert!((inst.m.norm_squared() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn identical_point_gives_zero_distance() {
        let p = cvec(&[0.6, 0.8]);
        let qs = vec![p.clone()];
        let mut rng = rng_for(1, 0);
        let (d2, _) = centroid_distance(&p, &qs, 0.05, 0.05, &mut rng).unwrap();
        assert!(d2.abs() <= 0.05, "distance^2 {d2}");
    }

    #[test]
    fn matches_closed_form() {
        let p = cvec(&[1.0, 0.0, 0.5]);
        let qs = vec![
            cvec(&[0.0, 1.0, 0.0]),
            cvec(&[0.5, 0.5, 0.0]),
            cvec(&[0.2, -0.3, 0.9]),
        ];
        // Direct arithmetic.
        let n1 = qs.len() as f64;
        let centroid = CVector::from_fn(3, |j, _| {
            qs.iter().map(|q| q[j]).sum::<Complex64>() / c(n1)
        });
        let truth = (&p - centroid).norm_squared();
        let mut rng = rng_for(2, 0);
        let (d2, _) = centroid_distance(&p, &qs, 0.05, 0.02, &mut rng).unwrap();
        assert!((d2 - truth).abs() <= 0.05, "{d2} vs {truth}");
    }

    #[test]
    fn orthogonal_unit_vectors() {
        // p orthogonal to the centroid of unit vectors.
        let p = cvec(&[1.0, 0.0, 0.0, 0.0]);
        let qs = vec![cvec(&[0.0, 1.0, 0.0, 0.0]), cvec(&[0.0, 0.0, 1.0, 0.0])];
        let centroid = CVector::from_fn(4, |j, _| (qs[0][j] + qs[1][j]) / c(2.0));
        let truth = (&p - centroid).norm_squared();
        let mut rng = rng_for(3, 0);
        let (d2, _) = centroid_distance(&p, &qs, 0.05, 0.02, &mut rng).unwrap();
        assert!((d2 - truth).abs() <= 0.05, "{d2} vs {truth}");
    }
}
