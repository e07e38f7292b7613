//! Small numerically stable scalar helpers shared across modules.

/// Standard logistic function `1 / (1 + e^{-x})`, stable for large `|x|`.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(sum_i exp(x_i))`. Returns `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// `log(e^m + e^{-m})`.
pub fn log_two_cosh(m: f64) -> f64 {
    let a = m.abs();
    a + (-2.0 * a).exp().ln_1p()
}

/// `½ log(q / (1 - q))`, the map from an agreement probability to an edge weight.
pub fn half_logit(q: f64) -> f64 {
    0.5 * (q / (1.0 - q)).ln()
}

/// Inverse of [`half_logit`]: `e^{2w} / (1 + e^{2w})`.
pub fn half_logit_inv(w: f64) -> f64 {
    logistic(2.0 * w)
}

/// Sign with the tie rule `sign(0) = +1`.
pub fn sign_pos(x: f64) -> i8 {
    if x >= 0.0 {
        1
    } else {
        -1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic_is_stable_at_extremes() {
        assert_eq!(logistic(800.0), 1.0);
        assert_eq!(logistic(-800.0), 0.0);
        assert!((logistic(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn log_two_cosh_matches_direct_form() {
        for &m in &[-3.0, -0.5, 0.0, 0.25, 2.0] {
            let direct = (f64::exp(m) + f64::exp(-m)).ln();
            assert!((log_two_cosh(m) - direct).abs() < 1e-14);
        }
        assert!(log_two_cosh(1000.0).is_finite());
    }

    #[test]
    fn half_logit_round_trip() {
        for &q in &[1e-6, 0.1, 0.5, 0.77, 1.0 - 1e-6] {
            assert!((half_logit_inv(half_logit(q)) - q).abs() < 1e-12);
        }
    }

    #[test]
    fn sign_tie_is_positive() {
        assert_eq!(sign_pos(0.0), 1);
        assert_eq!(sign_pos(-0.0), 1);
        assert_eq!(sign_pos(-1e-300), -1);
    }
}
