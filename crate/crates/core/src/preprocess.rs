//! Standardization of numerical variables so that differing units do not
//! dominate the distance.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, Domain, VariableKind};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// `(x - mean) / std` with population standard deviation.
    ZScore,
    /// `(x - min) / (max - min)`, into `[0, 1]`.
    #[default]
    MaxMin,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum ColumnStats {
    ZScore { mean: f64, std: f64 },
    MaxMin { min: f64, max: f64 },
}

impl ColumnStats {
    /// A zero-spread column; every value maps to 0.
    pub fn is_constant(&self) -> bool {
        match *self {
            ColumnStats::ZScore { std, .. } => std == 0.0,
            ColumnStats::MaxMin { min, max } => max == min,
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        if self.is_constant() {
            return 0.0;
        }
        match *self {
            ColumnStats::ZScore { mean, std } => (x - mean) / std,
            ColumnStats::MaxMin { min, max } => (x - min) / (max - min),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardizedColumn {
    pub variable: String,
    pub stats: ColumnStats,
}

/// `T x M'` standardized numerical values; row `i` is record `i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardizedMatrix {
    pub method: Method,
    pub columns: Vec<StandardizedColumn>,
    pub values: Vec<Vec<f64>>,
}

pub fn zscore_column(column: &[f64]) -> (Vec<f64>, ColumnStats) {
    let t = column.len() as f64;
    let mean = column.iter().sum::<f64>() / t;
    let constant = column.windows(2).all(|w| w[0] == w[1]);
    let std = if constant {
        0.0
    } else {
        libm::sqrt(column.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / t)
    };
    let stats = ColumnStats::ZScore { mean, std };
    (column.iter().map(|x| stats.apply(*x)).collect(), stats)
}

pub fn maxmin_column(column: &[f64]) -> (Vec<f64>, ColumnStats) {
    let min = column.iter().copied().fold(f64::INFINITY, f64::min);
    let max = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let stats = ColumnStats::MaxMin { min, max };
    (
        column
            .iter()
            .map(|x| stats.apply(*x).clamp(0.0, 1.0))
            .collect(),
        stats,
    )
}

/// Standardizes every numerical variable of `domain` in a validated dataset.
pub fn standardize(dataset: &Dataset, domain: Domain, method: Method) -> StandardizedMatrix {
    let t = dataset.records.len();
    let mut values = alloc::vec![Vec::new(); t];
    let mut columns = Vec::new();
    for spec in dataset
        .schema
        .variables(domain)
        .iter()
        .filter(|v| v.kind == VariableKind::Numerical)
    {
        let raw: Vec<f64> = dataset
            .records
            .iter()
            .map(|r| r.get(domain, &spec.id).as_number().unwrap_or(f64::NAN))
            .collect();
        let (col, stats) = match method {
            Method::ZScore => zscore_column(&raw),
            Method::MaxMin => maxmin_column(&raw),
        };
        for (row, x) in values.iter_mut().zip(col) {
            row.push(x);
        }
        columns.push(StandardizedColumn {
            variable: spec.id.clone(),
            stats,
        });
    }
    StandardizedMatrix {
        method,
        columns,
        values,
    }
}

pub fn zscore_standardize(dataset: &Dataset) -> StandardizedMatrix {
    standardize(dataset, Domain::Product, Method::ZScore)
}

pub fn maxmin_normalize(dataset: &Dataset) -> StandardizedMatrix {
    standardize(dataset, Domain::Product, Method::MaxMin)
}
