//! The schema document: variables of both domains plus where their weights
//! come from.

use std::path::Path;

use retail_rules_core::ahp::{
    derive_weights, load_fixed_weights, AhpError, PairwiseComparisonMatrix, WeightVector,
};
use retail_rules_core::domain::{FamilyWeights, FeatureSchema, SchemaError, VariableSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SchemaFileError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
    #[error("functional-requirement weights: {0}")]
    Weights(AhpError),
    #[error("family weights: {0}")]
    FamilyWeights(AhpError),
    #[error("schema document has no {0} weights")]
    MissingWeights(WeightSource),
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

/// Which declared weights to use for the functional requirements.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum WeightSource {
    /// The `fixed` vector, renormalized to sum 1.
    #[default]
    Fixed,
    /// The principal eigenvector of the `comparisons` matrix.
    Ahp,
}

impl std::fmt::Display for WeightSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WeightSource::Fixed => "fixed",
            WeightSource::Ahp => "ahp",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparisons: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemaDocument {
    #[serde(default)]
    pub customer_attrs: Vec<VariableSpec>,
    pub fr_vars: Vec<VariableSpec>,
    pub fr_weights: WeightSpec,
    /// `[numerical, binary, nominal]` as fixed values or a 3x3 comparison
    /// matrix. Equal thirds when omitted.
    #[serde(default)]
    pub family_weights: WeightSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightsReport {
    pub source: WeightSource,
    pub fr: WeightVector,
    pub family: FamilyWeights,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family_consistency_ratio: Option<f64>,
    pub warnings: Vec<String>,
}

fn resolve(spec: &WeightSpec, source: WeightSource) -> Result<Option<WeightVector>, AhpError> {
    match source {
        WeightSource::Fixed => spec.fixed.as_deref().map(load_fixed_weights).transpose(),
        WeightSource::Ahp => spec
            .comparisons
            .clone()
            .map(|m| PairwiseComparisonMatrix::new(m).and_then(|p| derive_weights(&p)))
            .transpose(),
    }
}

impl SchemaDocument {
    pub fn load(path: &Path) -> Result<Self, SchemaFileError> {
        let text = std::fs::read_to_string(path).map_err(|source| SchemaFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| SchemaFileError::Parse {
            path: path.display().to_string(),
            source,
        })
    }

    /// Builds the validated schema, deriving or loading weights as asked.
    pub fn resolve(
        &self,
        source: WeightSource,
    ) -> Result<(FeatureSchema, WeightsReport), SchemaFileError> {
        let mut warnings = Vec::new();
        let fr = resolve(&self.fr_weights, source)
            .map_err(SchemaFileError::Weights)?
            .ok_or(SchemaFileError::MissingWeights(source))?;
        if let Some(sum) = fr.original_sum() {
            warnings.push(format!(
                "functional-requirement weights summed to {sum:.4}; renormalized (deviation {:.3})",
                (sum - 1.0).abs()
            ));
        }
        if !fr.is_consistent() {
            warnings.push(format!(
                "functional-requirement comparisons are inconsistent (CR = {:.3})",
                fr.consistency_ratio()
            ));
        }

        let (family, family_consistency_ratio) =
            match (&self.family_weights.fixed, &self.family_weights.comparisons) {
                (None, None) => (FamilyWeights::equal(), None),
                (Some(fixed), _) => {
                    let w = load_fixed_weights(fixed).map_err(SchemaFileError::FamilyWeights)?;
                    (family_from(&w)?, None)
                }
                (None, Some(m)) => {
                    let w = PairwiseComparisonMatrix::new(m.clone())
                        .and_then(|p| derive_weights(&p))
                        .map_err(SchemaFileError::FamilyWeights)?;
                    if !w.is_consistent() {
                        warnings.push(format!(
                            "family comparisons are inconsistent (CR = {:.3})",
                            w.consistency_ratio()
                        ));
                    }
                    (family_from(&w)?, Some(w.consistency_ratio()))
                }
            };

        let schema = FeatureSchema::new(
            self.customer_attrs.clone(),
            self.fr_vars.clone(),
            fr.clone(),
            family,
        )?;
        Ok((
            schema,
            WeightsReport {
                source,
                fr,
                family,
                family_consistency_ratio,
                warnings,
            },
        ))
    }
}

fn family_from(w: &WeightVector) -> Result<FamilyWeights, SchemaFileError> {
    match w.weights() {
        [n, b, m] => Ok(FamilyWeights::new(*n, *b, *m)?),
        _ => Err(SchemaError::FamilyWeights.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"{
        "customer_attrs": [{"id": "a1", "label": "Cost", "kind": "nominal",
                            "options": [{"code": "a11"}, {"code": "a12"}]}],
        "fr_vars": [
            {"id": "v5", "label": "Age", "kind": "numerical", "range": [0, 60],
             "options": [{"code": "v51", "interval": [0, 20]}]},
            {"id": "v6", "label": "Gender", "kind": "binary",
             "options": [{"code": "v61", "label": "M"}, {"code": "v62", "label": "F"}]}
        ],
        "fr_weights": {"fixed": [3, 1], "comparisons": [[1, 3], [0.3333333333333333, 1]]},
        "family_weights": {"comparisons": [[1, 2, 2], [0.5, 1, 1], [0.5, 1, 1]]}
    }"#;

    #[test]
    fn fixed_and_ahp_weights_agree_on_consistent_input() {
        let doc: SchemaDocument = serde_json::from_str(DOC).unwrap();
        let (fixed, report) = doc.resolve(WeightSource::Fixed).unwrap();
        assert_eq!(fixed.fr_weights.weights(), &[0.75, 0.25]);
        assert_eq!(report.warnings.len(), 1);
        let (ahp, _) = doc.resolve(WeightSource::Ahp).unwrap();
        for (a, b) in ahp
            .fr_weights
            .weights()
            .iter()
            .zip(fixed.fr_weights.weights())
        {
            assert!((a - b).abs() < 1e-9);
        }
        assert!((fixed.family_weights.numerical - 0.5).abs() < 1e-9);
    }

    #[test]
    fn missing_weight_source_is_an_error() {
        let mut doc: SchemaDocument = serde_json::from_str(DOC).unwrap();
        doc.fr_weights.comparisons = None;
        assert!(matches!(
            doc.resolve(WeightSource::Ahp),
            Err(SchemaFileError::MissingWeights(WeightSource::Ahp))
        ));
    }
}
