//! Deterministic point sets: PCE collocation points and UKF/CKF sigma
//! points.

use super::sqrt::SqrtBelief;
use super::FilterError;
use nalgebra::{DMatrix, DVector};

/// Standard-space collocation points `[diag(-sqrt3) | 0 | diag(sqrt3)]`,
/// the roots of the third-order Hermite polynomial spread along each
/// axis; `2n + 1` columns.
pub fn collocation_points(n: usize) -> DMatrix<f64> {
    let s3 = 3.0_f64.sqrt();
    let mut xi = DMatrix::zeros(n, 2 * n + 1);
    for i in 0..n {
        xi[(i, i)] = -s3;
        xi[(i, n + 1 + i)] = s3;
    }
    xi
}

/// Weighted deterministic sample points in state space.
#[derive(Debug, Clone)]
pub struct WeightedPoints {
    pub points: Vec<DVector<f64>>,
    pub weights: Vec<f64>,
}

impl WeightedPoints {
    pub fn weighted_mean(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.points[0].len());
        for (p, w) in self.points.iter().zip(&self.weights) {
            m += p * *w;
        }
        m
    }
}

/// Classic `2n + 1` unscented points with spread `sqrt(n + kappa)`.
pub fn ukf_points(belief: &SqrtBelief, kappa: f64) -> Result<WeightedPoints, FilterError> {
    let n = belief.dim();
    let spread = n as f64 + kappa;
    if spread <= 0.0 {
        return Err(FilterError::InvalidSpread(spread));
    }
    let c = spread.sqrt();
    let mut points = Vec::with_capacity(2 * n + 1);
    let mut weights = Vec::with_capacity(2 * n + 1);
    points.push(belief.mean.clone());
    weights.push(kappa / spread);
    for i in 0..n {
        let col = belief.sqrt.column(i) * c;
        points.push(&belief.mean + &col);
        points.push(&belief.mean - &col);
        weights.push(0.5 / spread);
        weights.push(0.5 / spread);
    }
    Ok(WeightedPoints { points, weights })
}

/// `2n` cubature points with spread `sqrt(n)` and equal weights.
pub fn ckf_points(belief: &SqrtBelief) -> WeightedPoints {
    let n = belief.dim();
    let c = (n as f64).sqrt();
    let mut points = Vec::with_capacity(2 * n);
    for i in 0..n {
        let col = belief.sqrt.column(i) * c;
        points.push(&belief.mean + &col);
        points.push(&belief.mean - &col);
    }
    WeightedPoints { points, weights: vec![0.5 / n as f64; 2 * n] }
}

/// Collocation points mapped into state space: `mean + S * xi_j`.
pub fn pce_points(belief: &SqrtBelief) -> Vec<DVector<f64>> {
    let n = belief.dim();
    let xi = collocation_points(n);
    (0..xi.ncols())
        .map(|j| &belief.mean + &belief.sqrt * xi.column(j))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_collocation_points() {
        let xi = collocation_points(1);
        let s3 = 3.0_f64.sqrt();
        assert_eq!(xi.ncols(), 3);
        assert_eq!(xi[(0, 0)], -s3);
        assert_eq!(xi[(0, 1)], 0.0);
        assert_eq!(xi[(0, 2)], s3);
    }

    #[test]
    fn nine_state_collocation_count_and_sparsity() {
        let xi = collocation_points(9);
        assert_eq!(xi.ncols(), 19);
        for j in 0..19 {
            let nonzero = xi.column(j).iter().filter(|v| **v != 0.0).count();
            assert!(nonzero <= 1);
        }
    }

    fn test_belief() -> SqrtBelief {
        let mean = DVector::from_column_slice(&[1.0, -2.0]);
        let sqrt = DMatrix::from_row_slice(2, 2, &[1.5, 0.0, 0.3, 0.8]);
        SqrtBelief::new(mean, sqrt)
    }

    #[test]
    fn ckf_point_count_and_weights() {
        let pts = ckf_points(&test_belief());
        assert_eq!(pts.points.len(), 4);
        assert!(pts.weights.iter().all(|w| (*w - 0.25).abs() < 1e-15));
    }

    #[test]
    fn sigma_points_match_first_two_moments() {
        let b = test_belief();
        for pts in [ckf_points(&b), ukf_points(&b, 1.0).unwrap()] {
            let mean = pts.weighted_mean();
            assert!((mean - &b.mean).amax() < 1e-12);
            let mut scatter = DMatrix::zeros(2, 2);
            for (p, w) in pts.points.iter().zip(&pts.weights) {
                let d = p - &b.mean;
                scatter += *w * &d * d.transpose();
            }
            assert!((scatter - b.cov()).abs().max() < 1e-12);
        }
    }

    #[test]
    fn invalid_spread_rejected() {
        assert!(matches!(
            ukf_points(&test_belief(), -2.0),
            Err(FilterError::InvalidSpread(_))
        ));
    }
}
