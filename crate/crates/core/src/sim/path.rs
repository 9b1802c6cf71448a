/// Integrals of the age over one linear segment `Δ(t) = a + (t - t0)`,
/// `t0 <= t <= t0 + L`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathIntegrals {
    pub first: f64,
    pub second: f64,
    /// `∫ e^{sΔ}` for each requested `s`.
    pub exponential: Vec<f64>,
}

/// Exact integrals of `Δ`, `Δ²` and `e^{sΔ}` over a segment starting at age
/// `a` with length `len`.
pub fn path_accumulate(a: f64, len: f64, s_list: &[f64]) -> PathIntegrals {
    PathIntegrals {
        first: linear_integral(a, len),
        second: square_integral(a, len),
        exponential: s_list.iter().map(|&s| exp_integral(a, len, s)).collect(),
    }
}

#[inline]
pub(crate) fn linear_integral(a: f64, len: f64) -> f64 {
    len * (a + 0.5 * len)
}

/// `((a+L)³ - a³)/3` without the cancellation.
#[inline]
pub(crate) fn square_integral(a: f64, len: f64) -> f64 {
    len * (a * a + a * len + len * len / 3.0)
}

/// `(e^{s(a+L)} - e^{sa})/s`, or `L` at `s = 0`.
#[inline]
pub(crate) fn exp_integral(a: f64, len: f64, s: f64) -> f64 {
    if s == 0.0 {
        len
    } else {
        (s * a).exp() * (s * len).exp_m1() / s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle() {
        let p = path_accumulate(0.0, 5.0, &[0.0]);
        assert_eq!(p.first, 12.5);
        assert!((p.second - 125.0 / 3.0).abs() < 1e-12);
        assert_eq!(p.exponential, vec![5.0]);
    }

    #[test]
    fn exponential_segment() {
        let p = path_accumulate(1.0, 2.0, &[-1.0]);
        let expect = (-1f64).exp() - (-3f64).exp();
        assert!((p.exponential[0] - expect).abs() < 1e-15);
        assert!((expect - 0.318092).abs() < 1e-6);
    }

    #[test]
    fn tiny_segment_is_stable() {
        let p = path_accumulate(1e8, 1e-9, &[-1e-8]);
        assert!((p.second - 1e16 * 1e-9).abs() / (1e16 * 1e-9) < 1e-12);
        let direct = (-1f64).exp() * 1e-9;
        assert!(((p.exponential[0] - direct) / direct).abs() < 1e-9);
    }
}
