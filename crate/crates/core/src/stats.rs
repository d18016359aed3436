//! Small statistics toolbox: incomplete gamma, chi-square goodness of fit,
//! and total variation distance. Used by the verification suites.

/// Regularized lower incomplete gamma P(a, x).
///
/// Series expansion for x < a + 1, continued fraction otherwise.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "gamma_p domain");
    if x == 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        1.0 - gamma_q_cf(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "gamma_q domain");
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_cf(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..10_000 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-15 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_q_cf(a: f64, x: f64) -> f64 {
    // Lentz's algorithm for the continued fraction representation.
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-15 {
            break;
        }
    }
    h * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// Natural log of the gamma function (Lanczos approximation, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection formula
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, &c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Survival function of the chi-square distribution with `df` degrees of freedom.
pub fn chi_square_sf(stat: f64, df: f64) -> f64 {
    gamma_q(df / 2.0, stat / 2.0)
}

/// Pearson chi-square statistic for observed counts against expected
/// probabilities. Cells with zero expected probability must have zero counts;
/// they contribute no degrees of freedom.
///
/// Returns `(statistic, degrees_of_freedom)`.
pub fn chi_square_statistic(observed: &[u64], expected_probs: &[f64], total: u64) -> (f64, f64) {
    assert_eq!(observed.len(), expected_probs.len());
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&obs, &p) in observed.iter().zip(expected_probs) {
        if p <= 0.0 {
            assert_eq!(obs, 0, "observed count in zero-probability cell");
            continue;
        }
        let exp = p * total as f64;
        let diff = obs as f64 - exp;
        stat += diff * diff / exp;
        cells += 1;
    }
    (stat, (cells.max(2) - 1) as f64)
}

/// Chi-square goodness-of-fit test: true when the sample is consistent with
/// the expected distribution at the given significance level.
pub fn chi_square_gof(observed: &[u64], expected_probs: &[f64], significance: f64) -> bool {
    let total: u64 = observed.iter().sum();
    let (stat, df) = chi_square_statistic(observed, expected_probs, total);
    chi_square_sf(stat, df) > significance
}

/// Total variation distance between two probability vectors.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_p_matches_known_values() {
        // P(1, x) = 1 - exp(-x)
        for &x in &[0.1, 1.0, 3.0, 10.0] {
            assert!((gamma_p(1.0, x) - (1.0 - (-x as f64).exp())).abs() < 1e-12);
        }
        // P(0.5, x) = erf(sqrt(x)); spot value erf(1) = 0.8427007929497149
        assert!((gamma_p(0.5, 1.0) - 0.842_700_792_949_714_9).abs() < 1e-10);
    }

    #[test]
    fn ln_gamma_matches_factorials() {
        let mut f = 1.0f64;
        for n in 1..15 {
            assert!((ln_gamma(n as f64 + 1.0) - f.ln()).abs() < 1e-9, "n = {n}");
            f *= (n + 1) as f64;
        }
    }

    #[test]
    fn chi_square_sf_median_near_df() {
        // The chi-square median is close to df for large df, so SF(df) ~ 0.5.
        for &df in &[10.0, 100.0, 999.0, 4999.0] {
            let sf = chi_square_sf(df, df);
            assert!((sf - 0.5).abs() < 0.1, "df = {df}, sf = {sf}");
        }
    }

    #[test]
    fn gof_accepts_exact_and_rejects_skew() {
        let probs = vec![0.25; 4];
        assert!(chi_square_gof(&[250, 250, 250, 250], &probs, 0.001));
        assert!(!chi_square_gof(&[400, 200, 200, 200], &probs, 0.001));
    }

    #[test]
    fn tv_distance_basics() {
        assert_eq!(tv_distance(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
        assert_eq!(tv_distance(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
    }
}
