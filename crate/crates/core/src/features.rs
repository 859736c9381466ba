//! Dense per-domain encoding of records: standardized numbers, binary states
//! and nominal option indices, in schema order.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::distance::{CompositeMetric, DistanceError};
use crate::domain::{Dataset, Domain, FamilyWeights, TransactionRecord, Value, VariableKind};
use crate::preprocess::{standardize, ColumnStats, Method, StandardizedMatrix};

/// One record restricted to one domain. `None`/`NaN` mark values that were
/// not supplied; they compare as a mismatch.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub numeric: Vec<f64>,
    pub binary: Vec<Option<bool>>,
    pub nominal: Vec<Option<u32>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericColumn {
    pub id: String,
    pub stats: ColumnStats,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoricalColumn {
    pub id: String,
    pub codes: Vec<String>,
}

impl CategoricalColumn {
    fn index(&self, value: &Value) -> Option<u32> {
        let code = value.as_code()?;
        self.codes.iter().position(|c| c == code).map(|i| i as u32)
    }
}

/// Fitted encoder for one domain. Carries the standardization statistics so
/// that records seen later (a new customer) land on the same scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainEncoder {
    pub domain: Domain,
    pub method: Method,
    pub numeric: Vec<NumericColumn>,
    pub binary: Vec<CategoricalColumn>,
    pub nominal: Vec<CategoricalColumn>,
    pub family_weights: FamilyWeights,
}

impl DomainEncoder {
    pub fn fit(dataset: &Dataset, domain: Domain, method: Method) -> (Self, StandardizedMatrix) {
        let schema = &dataset.schema;
        let standardized = standardize(dataset, domain, method);
        let weights = schema.variable_weights(domain);
        let mut stats = standardized.columns.iter();
        let mut enc = DomainEncoder {
            domain,
            method,
            numeric: Vec::new(),
            binary: Vec::new(),
            nominal: Vec::new(),
            family_weights: schema.family_weights,
        };
        for (spec, weight) in schema.variables(domain).iter().zip(weights) {
            let categorical = || CategoricalColumn {
                id: spec.id.clone(),
                codes: spec.options.iter().map(|o| o.code.clone()).collect(),
            };
            match spec.kind {
                VariableKind::Numerical => {
                    let col = stats
                        .next()
                        .expect("one standardized column per numerical variable");
                    debug_assert_eq!(col.variable, spec.id);
                    enc.numeric.push(NumericColumn {
                        id: spec.id.clone(),
                        stats: col.stats,
                        weight,
                    });
                }
                VariableKind::Binary => enc.binary.push(categorical()),
                VariableKind::Nominal => enc.nominal.push(categorical()),
            }
        }
        (enc, standardized)
    }

    pub fn present_families(&self) -> [bool; 3] {
        [
            !self.numeric.is_empty(),
            !self.binary.is_empty(),
            !self.nominal.is_empty(),
        ]
    }

    pub fn encode_values(&self, values: &BTreeMap<String, Value>) -> FeatureVector {
        let get = |id: &str| values.get(id).unwrap_or(&Value::Missing);
        FeatureVector {
            numeric: self
                .numeric
                .iter()
                .map(|c| match get(&c.id).as_number() {
                    Some(x) => c.stats.apply(x),
                    None => f64::NAN,
                })
                .collect(),
            binary: self
                .binary
                .iter()
                .map(|c| c.index(get(&c.id)).map(|i| i == 0))
                .collect(),
            nominal: self.nominal.iter().map(|c| c.index(get(&c.id))).collect(),
        }
    }

    pub fn encode_record(&self, record: &TransactionRecord) -> FeatureVector {
        self.encode_values(record.values(self.domain))
    }

    pub fn encode(&self, dataset: &Dataset) -> Vec<FeatureVector> {
        dataset
            .records
            .iter()
            .map(|r| self.encode_record(r))
            .collect()
    }

    pub fn metric(&self) -> Result<CompositeMetric, DistanceError> {
        CompositeMetric::new(
            self.numeric.iter().map(|c| c.weight).collect(),
            self.family_weights,
            self.present_families(),
        )
    }
}
