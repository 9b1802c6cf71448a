use std::ops::{Add, Mul, Neg, Sub};

/// Real polynomial, coefficients in ascending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(Vec<f64>);

impl Poly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self(coeffs)
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `a + b x`.
    pub fn linear(a: f64, b: f64) -> Self {
        Self::new(vec![a, b])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.0.get(k).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// `sum |c_k| |x|^k`, the scale against which `eval(x)` is compared
    /// when deciding whether it is numerically zero.
    pub fn magnitude(&self, x: f64) -> f64 {
        let ax = x.abs();
        self.0.iter().rev().fold(0.0, |acc, &c| acc * ax + c.abs())
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.0.iter().map(|c| c * k).collect())
    }

    pub fn derivative(&self) -> Self {
        if self.0.len() == 1 {
            return Self::constant(0.0);
        }
        Self::new(
            self.0[1..]
                .iter()
                .enumerate()
                .map(|(k, c)| c * (k + 1) as f64)
                .collect(),
        )
    }

    /// Cauchy bound: every root satisfies `|x| <= 1 + max |c_k / c_n|`.
    pub fn root_bound(&self) -> f64 {
        let lead = self.0[self.degree()];
        1.0 + self.0[..self.degree()]
            .iter()
            .map(|c| (c / lead).abs())
            .fold(0.0, f64::max)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.0.len().max(rhs.0.len());
        Poly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + rhs.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in rhs.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

/// Product of a list of factors.
pub fn product<'a>(factors: impl IntoIterator<Item = &'a Poly>) -> Poly {
    factors
        .into_iter()
        .fold(Poly::constant(1.0), |acc, f| &acc * f)
}

/// First `count` Taylor coefficients at 0 of `num / den`.
///
/// Power-series division: `c_k = (n_k - sum_{j=1..k} d_j c_{k-j}) / d_0`.
pub fn series_quotient(num: &Poly, den: &Poly, count: usize) -> Vec<f64> {
    let d0 = den.coeff(0);
    let mut c = Vec::with_capacity(count);
    for k in 0..count {
        let acc: f64 = (1..=k).map(|j| den.coeff(j) * c[k - j]).sum();
        c.push((num.coeff(k) - acc) / d0);
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let a = Poly::linear(1.0, -1.0); // 1 - x
        let sq = &a * &a;
        assert_eq!(sq.coeffs(), &[1.0, -2.0, 1.0]);
        assert_eq!((&sq - &sq).coeffs(), &[0.0]);
        assert_eq!(sq.eval(3.0), 4.0);
        assert_eq!(product([&a, &a, &a]).coeffs(), &[1.0, -3.0, 3.0, -1.0]);
        assert_eq!(sq.derivative().coeffs(), &[-2.0, 2.0]);
        assert_eq!(Poly::constant(4.0).derivative().coeffs(), &[0.0]);
    }

    #[test]
    fn geometric_series() {
        // 1 / (1 - x) = 1 + x + x^2 + ...
        let c = series_quotient(&Poly::constant(1.0), &Poly::linear(1.0, -1.0), 6);
        assert_eq!(c, vec![1.0; 6]);
        // 1 / (1 - x)^3 has coefficients C(k+2, 2).
        let den = product([&Poly::linear(1.0, -1.0); 3].iter().copied());
        let c = series_quotient(&Poly::constant(1.0), &den, 5);
        assert_eq!(c, vec![1.0, 3.0, 6.0, 10.0, 15.0]);
    }
}
