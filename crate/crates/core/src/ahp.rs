//! Priority weights from reciprocal pairwise comparisons (analytic hierarchy
//! process, principal-eigenvector method).

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::SquareMatrix;

const RECIPROCITY_TOLERANCE: f64 = 1e-9;
const POWER_TOLERANCE: f64 = 1e-10;
const POWER_MAX_ITERATIONS: usize = 1000;
/// Consistency ratios above this are reported as inconsistent.
pub const CONSISTENCY_THRESHOLD: f64 = 0.1;
/// Fixed weight vectors whose sum deviates from 1 by more than this keep
/// their original sum for reporting.
pub const SUM_REPORT_TOLERANCE: f64 = 1e-6;
pub const MAX_ORDER: usize = 15;

/// Saaty's random consistency index for matrices of order 1..=15.
const RANDOM_INDEX: [f64; MAX_ORDER] = [
    0.0, 0.0, 0.58, 0.90, 1.12, 1.24, 1.32, 1.41, 1.45, 1.49, 1.51, 1.48, 1.56, 1.57, 1.59,
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AhpError {
    #[error("comparison matrix must be square")]
    NotSquare,
    #[error("comparison matrix order {0} outside 2..=15")]
    Order(usize),
    #[error("entry ({row}, {col}) = {value} is not a positive finite number")]
    NonPositive { row: usize, col: usize, value: f64 },
    #[error("diagonal entry {0} is not 1")]
    Diagonal(usize),
    #[error("entries ({row}, {col}) and ({col}, {row}) are not reciprocal")]
    NotReciprocal { row: usize, col: usize },
    #[error("weight {index} = {value} is not positive")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("weight vector is empty")]
    Empty,
}

pub fn random_index(order: usize) -> f64 {
    RANDOM_INDEX
        .get(order.wrapping_sub(1))
        .copied()
        .unwrap_or(0.0)
}

/// A validated reciprocal comparison matrix: `a[j][i] = 1 / a[i][j]`,
/// unit diagonal, positive entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparisonMatrix {
    entries: SquareMatrix<f64>,
}

impl PairwiseComparisonMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, AhpError> {
        let entries = SquareMatrix::from_rows(rows).ok_or(AhpError::NotSquare)?;
        let n = entries.n();
        if !(2..=MAX_ORDER).contains(&n) {
            return Err(AhpError::Order(n));
        }
        for i in 0..n {
            for j in 0..n {
                let v = entries[(i, j)];
                if !(v.is_finite() && v > 0.0) {
                    return Err(AhpError::NonPositive {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
            if libm::fabs(entries[(i, i)] - 1.0) > RECIPROCITY_TOLERANCE {
                return Err(AhpError::Diagonal(i));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if libm::fabs(entries[(j, i)] * entries[(i, j)] - 1.0) > RECIPROCITY_TOLERANCE {
                    return Err(AhpError::NotReciprocal { row: i, col: j });
                }
            }
        }
        Ok(PairwiseComparisonMatrix { entries })
    }

    /// The consistent matrix `a[i][j] = w[i] / w[j]` for positive `w`.
    pub fn from_priorities(w: &[f64]) -> Result<Self, AhpError> {
        let rows = w
            .iter()
            .map(|wi| w.iter().map(|wj| wi / wj).collect())
            .collect();
        Self::new(rows)
    }

    pub fn order(&self) -> usize {
        self.entries.n()
    }

    pub fn entries(&self) -> &SquareMatrix<f64> {
        &self.entries
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.entries
            .rows()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Positive weights summing to 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    weights: Vec<f64>,
    consistency_ratio: f64,
    /// Sum of the caller-supplied values, kept when it was not 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    original_sum: Option<f64>,
}

impl WeightVector {
    pub fn uniform(n: usize) -> Self {
        WeightVector {
            weights: alloc::vec![1.0 / n as f64; n],
            consistency_ratio: 0.0,
            original_sum: None,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn consistency_ratio(&self) -> f64 {
        self.consistency_ratio
    }

    pub fn is_consistent(&self) -> bool {
        self.consistency_ratio <= CONSISTENCY_THRESHOLD
    }

    pub fn original_sum(&self) -> Option<f64> {
        self.original_sum
    }
}

/// Principal eigenvector of `pcm` by power iteration, normalized to sum 1,
/// plus Saaty's consistency ratio. Inconsistent matrices still yield weights;
/// check [`WeightVector::is_consistent`].
pub fn derive_weights(pcm: &PairwiseComparisonMatrix) -> Result<WeightVector, AhpError> {
    let n = pcm.order();
    // iterate on the max-normalized vector; exact for uniform comparisons
    let mut x = alloc::vec![1.0; n];
    let mut lambda_max = n as f64;
    for _ in 0..POWER_MAX_ITERATIONS {
        let y = pcm.apply(&x);
        lambda_max = y.iter().fold(0.0f64, |m, v| m.max(*v));
        let next: Vec<f64> = y.iter().map(|v| v / lambda_max).collect();
        let change = next
            .iter()
            .zip(&x)
            .fold(0.0f64, |m, (a, b)| m.max(libm::fabs(a - b)));
        x = next;
        // entries are relative to a maximum of 1
        if change <= POWER_TOLERANCE {
            break;
        }
    }
    let total: f64 = x.iter().sum();
    let x: Vec<f64> = x.iter().map(|v| v / total).collect();

    let nf = n as f64;
    let mut ci = (lambda_max - nf) / (nf - 1.0);
    // lambda_max >= n for positive reciprocal matrices; anything within
    // rounding of n is a consistent matrix
    if ci < nf * f64::EPSILON * 4.0 {
        ci = 0.0;
    }
    let ri = random_index(n);
    let consistency_ratio = if ri > 0.0 { ci / ri } else { 0.0 };
    Ok(WeightVector {
        weights: x,
        consistency_ratio,
        original_sum: None,
    })
}

/// Accepts externally supplied weights, rescaling them to sum to 1.
pub fn load_fixed_weights(values: &[f64]) -> Result<WeightVector, AhpError> {
    if values.is_empty() {
        return Err(AhpError::Empty);
    }
    if let Some((index, &value)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && **v > 0.0))
    {
        return Err(AhpError::NonPositiveWeight { index, value });
    }
    let sum: f64 = values.iter().sum();
    let weights = values.iter().map(|v| v / sum).collect();
    Ok(WeightVector {
        weights,
        consistency_ratio: 0.0,
        original_sum: (libm::fabs(sum - 1.0) > SUM_REPORT_TOLERANCE).then_some(sum),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn uniform_matrix_gives_equal_weights() {
        for n in 2..=10 {
            let pcm = PairwiseComparisonMatrix::new(vec![vec![1.0; n]; n]).unwrap();
            let w = derive_weights(&pcm).unwrap();
            for &wi in w.weights() {
                assert_eq!(wi, 1.0 / n as f64, "n = {n}");
            }
            assert_eq!(w.consistency_ratio(), 0.0);
        }
    }

    #[test]
    fn consistent_matrix_recovers_priorities() {
        let pcm = PairwiseComparisonMatrix::from_priorities(&[0.6, 0.3, 0.1]).unwrap();
        let w = derive_weights(&pcm).unwrap();
        for (got, want) in w.weights().iter().zip([0.6, 0.3, 0.1]) {
            assert!((got - want).abs() < 1e-8);
        }
        assert!(w.consistency_ratio() < 1e-8);
        assert!(w.is_consistent());
    }

    #[test]
    fn non_reciprocal_rejected() {
        let err = PairwiseComparisonMatrix::new(vec![vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap_err();
        assert_eq!(err, AhpError::NotReciprocal { row: 0, col: 1 });
        assert!(matches!(
            PairwiseComparisonMatrix::new(vec![vec![1.0, -1.0], vec![-1.0, 1.0]]),
            Err(AhpError::NonPositive { .. })
        ));
        assert_eq!(
            PairwiseComparisonMatrix::new(vec![vec![1.0]]).unwrap_err(),
            AhpError::Order(1)
        );
    }

    #[test]
    fn badly_inconsistent_matrix_is_flagged() {
        // a > b, b > c, c > a
        let pcm = PairwiseComparisonMatrix::new(vec![
            vec![1.0, 9.0, 1.0 / 9.0],
            vec![1.0 / 9.0, 1.0, 9.0],
            vec![9.0, 1.0 / 9.0, 1.0],
        ])
        .unwrap();
        let w = derive_weights(&pcm).unwrap();
        assert!(!w.is_consistent());
        assert!((w.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fixed_weights_renormalized() {
        let w = load_fixed_weights(&[1.0, 1.0, 2.0]).unwrap();
        assert_eq!(w.weights(), &[0.25, 0.25, 0.5]);
        assert_eq!(w.original_sum(), Some(4.0));

        let w = load_fixed_weights(&[0.5, 0.5]).unwrap();
        assert_eq!(w.weights(), &[0.5, 0.5]);
        assert_eq!(w.original_sum(), None);

        assert_eq!(
            load_fixed_weights(&[0.5, 0.0]).unwrap_err(),
            AhpError::NonPositiveWeight {
                index: 1,
                value: 0.0
            }
        );
    }

    #[test]
    fn published_vector_reports_its_deviation() {
        let published = [
            0.115, 0.351, 0.067, 0.034, 0.021, 0.075, 0.146, 0.083, 0.106,
        ];
        let w = load_fixed_weights(&published).unwrap();
        let sum = w.original_sum().expect("deviation reported");
        assert!((sum - 0.998).abs() < 1e-12);
        assert!((w.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((w.weights()[1] - 0.351 / 0.998).abs() < 1e-15);
    }
}
