//! Dense LU solves for the small systems the engine assembles (at most a few
//! dozen unknowns).

use nalgebra::{DMatrix, DVector, Dyn, LU};

pub(crate) struct Factored {
    matrix: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Singular;

impl Factored {
    pub(crate) fn new(matrix: DMatrix<f64>) -> Result<Self, Singular> {
        let lu = matrix.clone().lu();
        if !lu.is_invertible() {
            return Err(Singular);
        }
        Ok(Self { matrix, lu })
    }

    /// Solves and returns the relative residual
    /// `|Ax - b|_inf / (|A|_inf |x|_inf + |b|_inf)`.
    pub(crate) fn solve(&self, rhs: &[f64]) -> Result<(Vec<f64>, f64), Singular> {
        let b = DVector::from_column_slice(rhs);
        let x = self.lu.solve(&b).ok_or(Singular)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Singular);
        }
        let r = &self.matrix * &x - &b;
        let norm_a = self
            .matrix
            .row_iter()
            .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let denom = norm_a * x.amax() + b.amax();
        let residual = if denom > 0.0 { r.amax() / denom } else { 0.0 };
        Ok((x.as_slice().to_vec(), residual))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_two_by_two() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let (x, res) = Factored::new(m).unwrap().solve(&[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-15 && (x[1] - 1.4).abs() < 1e-15);
        assert!(res < 1e-15);
    }

    #[test]
    fn singular_detected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(Factored::new(m).is_err());
    }
}
