//! Mixed-type dissimilarity: weighted Euclidean for numerical variables,
//! simple matching for binary and nominal ones, combined by family weights.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::FamilyWeights;
use crate::features::FeatureVector;
use crate::matrix::SquareMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DistanceError {
    #[error("vector lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("{weights} weights for {values} numerical values")]
    WeightCount { weights: usize, values: usize },
    #[error("no variable family present")]
    NoFamilies,
}

fn same_len(left: usize, right: usize) -> Result<(), DistanceError> {
    if left == right {
        Ok(())
    } else {
        Err(DistanceError::LengthMismatch { left, right })
    }
}

/// `sqrt(sum_q (w_q * (x_q - y_q))^2)` over normalized values. The weight
/// sits inside the square. A `NaN` on either side counts as a full unit
/// difference.
pub fn numerical_distance(x: &[f64], y: &[f64], w: &[f64]) -> Result<f64, DistanceError> {
    same_len(x.len(), y.len())?;
    if w.len() != x.len() {
        return Err(DistanceError::WeightCount {
            weights: w.len(),
            values: x.len(),
        });
    }
    let sum: f64 = x
        .iter()
        .zip(y)
        .zip(w)
        .map(|((a, b), w)| {
            let diff = if a.is_nan() || b.is_nan() { 1.0 } else { a - b };
            let t = w * diff;
            t * t
        })
        .sum();
    Ok(libm::sqrt(sum))
}

/// Simple matching coefficient `(a2 + a3) / (a1 + a2 + a3 + a4)`. An empty
/// vector has distance 0; unknown states count as mismatches.
pub fn binary_distance(x: &[Option<bool>], y: &[Option<bool>]) -> Result<f64, DistanceError> {
    same_len(x.len(), y.len())?;
    if x.is_empty() {
        return Ok(0.0);
    }
    let mismatches = x
        .iter()
        .zip(y)
        .filter(|(a, b)| !matches!((a, b), (Some(p), Some(q)) if p == q))
        .count();
    Ok(mismatches as f64 / x.len() as f64)
}

/// `(beta - gamma) / beta`: the share of nominal variables whose states
/// differ. Unknown states never match.
pub fn nominal_distance<T: PartialEq>(
    x: &[Option<T>],
    y: &[Option<T>],
) -> Result<f64, DistanceError> {
    same_len(x.len(), y.len())?;
    if x.is_empty() {
        return Ok(0.0);
    }
    let matching = x
        .iter()
        .zip(y)
        .filter(|(a, b)| matches!((a, b), (Some(p), Some(q)) if p == q))
        .count();
    Ok((x.len() - matching) as f64 / x.len() as f64)
}

/// `W_num * d_num + W_bin * d_bin + W_nom * d_nom`.
pub fn combine(components: [f64; 3], weights: &FamilyWeights) -> f64 {
    components
        .iter()
        .zip(weights.as_array())
        .map(|(d, w)| d * w)
        .sum()
}

/// Composite distance over one domain, with family weights already
/// redistributed over the families the domain actually has.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositeMetric {
    numeric_weights: Vec<f64>,
    weights: FamilyWeights,
}

impl CompositeMetric {
    pub fn new(
        numeric_weights: Vec<f64>,
        declared: FamilyWeights,
        present: [bool; 3],
    ) -> Result<Self, DistanceError> {
        let weights = declared
            .redistribute(present)
            .ok_or(DistanceError::NoFamilies)?;
        Ok(CompositeMetric {
            numeric_weights,
            weights,
        })
    }

    pub fn family_weights(&self) -> &FamilyWeights {
        &self.weights
    }

    pub fn components(
        &self,
        x: &FeatureVector,
        y: &FeatureVector,
    ) -> Result<[f64; 3], DistanceError> {
        Ok([
            numerical_distance(&x.numeric, &y.numeric, &self.numeric_weights)?,
            binary_distance(&x.binary, &y.binary)?,
            nominal_distance(&x.nominal, &y.nominal)?,
        ])
    }

    pub fn distance(&self, x: &FeatureVector, y: &FeatureVector) -> Result<f64, DistanceError> {
        Ok(combine(self.components(x, y)?, &self.weights))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissimilarityMatrix {
    pub values: SquareMatrix<f64>,
    /// Numerical, binary and nominal component matrices, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<[SquareMatrix<f64>; 3]>,
}

impl DissimilarityMatrix {
    pub fn n(&self) -> usize {
        self.values.n()
    }

    /// Largest off-diagonal entry, 0 for matrices smaller than 2x2.
    pub fn max_off_diagonal(&self) -> f64 {
        let n = self.n();
        let mut max = 0.0f64;
        for i in 0..n {
            for (j, d) in self.values.row(i).iter().enumerate() {
                if i != j {
                    max = max.max(*d);
                }
            }
        }
        max
    }
}

fn pair_components(
    features: &[FeatureVector],
    metric: &CompositeMetric,
    i: usize,
) -> Result<Vec<[f64; 3]>, DistanceError> {
    (0..features.len())
        .map(|j| {
            if i == j {
                Ok([0.0; 3])
            } else {
                metric.components(&features[i], &features[j])
            }
        })
        .collect()
}

fn assemble(
    features: &[FeatureVector],
    metric: &CompositeMetric,
    keep_components: bool,
) -> Result<DissimilarityMatrix, DistanceError> {
    let n = features.len();
    #[cfg(feature = "rayon")]
    let rows: Vec<Vec<[f64; 3]>> = {
        use rayon::prelude::*;
        (0..n)
            .into_par_iter()
            .map(|i| pair_components(features, metric, i))
            .collect::<Result<_, _>>()?
    };
    #[cfg(not(feature = "rayon"))]
    let rows: Vec<Vec<[f64; 3]>> = (0..n)
        .map(|i| pair_components(features, metric, i))
        .collect::<Result<_, _>>()?;

    // Each pair is computed from both ends; take the (i < j) copy so the
    // result is exactly symmetric.
    let comp = |i: usize, j: usize| if i <= j { rows[i][j] } else { rows[j][i] };
    let values = SquareMatrix::from_fn(n, |i, j| combine(comp(i, j), &metric.weights));
    let components = keep_components
        .then(|| core::array::from_fn(|k| SquareMatrix::from_fn(n, |i, j| comp(i, j)[k])));
    Ok(DissimilarityMatrix { values, components })
}

/// Pairwise composite distances between encoded records.
pub fn dissimilarity_matrix(
    features: &[FeatureVector],
    metric: &CompositeMetric,
) -> Result<DissimilarityMatrix, DistanceError> {
    assemble(features, metric, false)
}

/// As [`dissimilarity_matrix`], also keeping the three family components.
pub fn dissimilarity_breakdown(
    features: &[FeatureVector],
    metric: &CompositeMetric,
) -> Result<DissimilarityMatrix, DistanceError> {
    assemble(features, metric, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn b(bits: &[u8]) -> Vec<Option<bool>> {
        bits.iter().map(|x| Some(*x == 1)).collect()
    }

    fn nom(states: &[u32]) -> Vec<Option<u32>> {
        states.iter().copied().map(Some).collect()
    }

    #[test]
    fn numerical_examples() {
        assert_eq!(
            numerical_distance(&[0.3, 0.9], &[0.3, 0.9], &[0.5, 0.5]).unwrap(),
            0.0
        );
        let d = numerical_distance(&[1.0, 1.0], &[0.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!((d - 0.5f64.sqrt()).abs() < 1e-15);
        let d = numerical_distance(&[0.3], &[0.8], &[1.0]).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        assert_eq!(
            numerical_distance(&[0.3], &[0.8, 0.1], &[1.0]),
            Err(DistanceError::LengthMismatch { left: 1, right: 2 })
        );
    }

    #[test]
    fn binary_examples() {
        assert_eq!(
            binary_distance(&b(&[1, 0, 1]), &b(&[1, 0, 1])).unwrap(),
            0.0
        );
        assert_eq!(
            binary_distance(&b(&[1, 0, 1, 1]), &b(&[1, 1, 0, 1])).unwrap(),
            0.5
        );
        assert_eq!(
            binary_distance(&b(&[1, 1, 0]), &b(&[0, 0, 1])).unwrap(),
            1.0
        );
        assert_eq!(
            binary_distance(&[Some(true), None], &[Some(true), None]).unwrap(),
            0.5
        );
        assert!(binary_distance(&b(&[1]), &b(&[1, 0])).is_err());
    }

    #[test]
    fn nominal_examples() {
        assert_eq!(
            nominal_distance(&nom(&[1, 2, 3]), &nom(&[1, 2, 3])).unwrap(),
            0.0
        );
        let d = nominal_distance(&nom(&[1, 2, 3]), &nom(&[1, 0, 0])).unwrap();
        assert_eq!(d, 2.0 / 3.0);
        assert_eq!(nominal_distance(&nom(&[1; 5]), &nom(&[2; 5])).unwrap(), 1.0);
    }

    #[test]
    fn composite_examples() {
        let w = FamilyWeights::new(0.4, 0.3, 0.3).unwrap();
        assert!((combine([0.5, 0.25, 1.0], &w) - 0.575).abs() < 1e-15);

        let only_nominal = CompositeMetric::new(vec![], w, [false, false, true]).unwrap();
        let x = FeatureVector {
            nominal: nom(&[0, 0, 0, 0, 0]),
            ..Default::default()
        };
        let y = FeatureVector {
            nominal: nom(&[0, 1, 0, 1, 0]),
            ..Default::default()
        };
        assert!((only_nominal.distance(&x, &y).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(only_nominal.distance(&x, &x).unwrap(), 0.0);
        assert_eq!(
            CompositeMetric::new(vec![], w, [false; 3]),
            Err(DistanceError::NoFamilies)
        );
    }

    #[test]
    fn matrix_basics() {
        let w = FamilyWeights::equal();
        let metric = CompositeMetric::new(vec![0.5, 0.5], w, [true, true, true]).unwrap();
        let rec = FeatureVector {
            numeric: vec![0.2, 0.7],
            binary: b(&[1, 0]),
            nominal: nom(&[2]),
        };
        let m = dissimilarity_matrix(&[rec.clone(), rec], &metric).unwrap();
        assert_eq!(m.values.as_slice(), &[0.0; 4]);
    }

    fn all_bits(len: usize) -> Vec<Vec<Option<bool>>> {
        (0..1u32 << len)
            .map(|m| (0..len).map(|k| Some(m >> k & 1 == 1)).collect())
            .collect()
    }

    #[test]
    fn matching_distances_satisfy_triangle_inequality_exhaustively() {
        for len in 1..=4 {
            let vs = all_bits(len);
            for x in &vs {
                for y in &vs {
                    let dxy = binary_distance(x, y).unwrap();
                    for z in &vs {
                        let dxz = binary_distance(x, z).unwrap();
                        let dzy = binary_distance(z, y).unwrap();
                        assert!(dxy <= dxz + dzy + 1e-15);
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn family_distances_are_symmetric_and_bounded(
            pairs in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..1.0), 1..10),
            bits in prop::collection::vec((any::<bool>(), any::<bool>()), 0..10),
            states in prop::collection::vec((0u32..4, 0u32..4), 0..10),
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = pairs.iter().map(|p| (p.0, p.1)).unzip();
            let total: f64 = pairs.iter().map(|p| p.2).sum::<f64>().max(1e-9);
            let w: Vec<f64> = pairs.iter().map(|p| p.2 / total).collect();
            let d = numerical_distance(&x, &y, &w).unwrap();
            prop_assert_eq!(d, numerical_distance(&y, &x, &w).unwrap());
            prop_assert!((0.0..=1.0).contains(&d));

            let (bx, by): (Vec<_>, Vec<_>) = bits.iter().map(|(a, b)| (Some(*a), Some(*b))).unzip();
            let d = binary_distance(&bx, &by).unwrap();
            prop_assert_eq!(d, binary_distance(&by, &bx).unwrap());
            prop_assert!((0.0..=1.0).contains(&d));

            let (nx, ny): (Vec<_>, Vec<_>) = states.iter().map(|(a, b)| (Some(*a), Some(*b))).unzip();
            let d = nominal_distance(&nx, &ny).unwrap();
            prop_assert_eq!(d, nominal_distance(&ny, &nx).unwrap());
            prop_assert_eq!(d == 0.0, nx == ny);
        }

        #[test]
        fn composite_is_monotone_in_each_component(
            comps in prop::array::uniform3(0.0f64..=1.0),
            bump in 0.0f64..=1.0,
            k in 0usize..3,
            raw in prop::array::uniform3(0.0f64..1.0),
        ) {
            let s: f64 = raw.iter().sum::<f64>().max(1e-9);
            let w = FamilyWeights { numerical: raw[0] / s, binary: raw[1] / s, nominal: raw[2] / s };
            let mut higher = comps;
            higher[k] = (higher[k] + bump).min(1.0);
            prop_assert!(combine(higher, &w) >= combine(comps, &w));
        }
    }
}
