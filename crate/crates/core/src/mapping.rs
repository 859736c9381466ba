//! Bridging the two partitions: cluster profiles, maximum-dependency pairing
//! of customer clusters with product clusters, and re-encoding of the
//! representative transactions into discrete items for rule mining.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distance::{CompositeMetric, DistanceError};
use crate::domain::{Dataset, Domain, Value, VariableKind, VariableSpec};
use crate::features::{DomainEncoder, FeatureVector};
use crate::fuzzy::Partition;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MappingError {
    #[error("cluster is empty")]
    EmptyCluster,
    #[error("no representative transactions: no cluster pair selected")]
    NoSelection,
    #[error("partitions cover {0} and {1} records")]
    UniverseMismatch(usize, usize),
    #[error("no clusters to assign to")]
    NoClusters,
    #[error(transparent)]
    Distance(#[from] DistanceError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericProfile {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoricalProfile {
    pub mode: String,
    pub frequencies: BTreeMap<String, usize>,
}

/// Per-variable summary of one cluster, over both domains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterProfile {
    pub cluster_id: usize,
    pub tids: Vec<String>,
    pub numeric: BTreeMap<String, NumericProfile>,
    pub categorical: BTreeMap<String, CategoricalProfile>,
}

impl ClusterProfile {
    pub fn size(&self) -> usize {
        self.tids.len()
    }

    /// Mean for numerical variables, mode for categorical ones.
    pub fn representative_values(&self) -> BTreeMap<String, Value> {
        self.numeric
            .iter()
            .map(|(k, p)| (k.clone(), Value::Number(p.mean)))
            .chain(
                self.categorical
                    .iter()
                    .map(|(k, p)| (k.clone(), Value::Code(p.mode.clone()))),
            )
            .collect()
    }

    pub fn representative(&self, encoder: &DomainEncoder) -> FeatureVector {
        encoder.encode_values(&self.representative_values())
    }
}

/// Mean and `[min, max]` of numerical variables, mode and frequencies of
/// categorical ones. Mode ties go to the lexicographically smallest code.
pub fn profile_cluster(
    cluster_id: usize,
    members: &[usize],
    dataset: &Dataset,
) -> Result<ClusterProfile, MappingError> {
    if members.is_empty() {
        return Err(MappingError::EmptyCluster);
    }
    let records: Vec<_> = members.iter().map(|&i| &dataset.records[i]).collect();
    let mut profile = ClusterProfile {
        cluster_id,
        tids: records.iter().map(|r| r.tid.clone()).collect(),
        numeric: BTreeMap::new(),
        categorical: BTreeMap::new(),
    };
    for domain in [Domain::Customer, Domain::Product] {
        for spec in dataset.schema.variables(domain) {
            if spec.kind == VariableKind::Numerical {
                let xs: Vec<f64> = records
                    .iter()
                    .filter_map(|r| r.get(domain, &spec.id).as_number())
                    .collect();
                if xs.is_empty() {
                    continue;
                }
                profile.numeric.insert(
                    spec.id.clone(),
                    NumericProfile {
                        mean: xs.iter().sum::<f64>() / xs.len() as f64,
                        min: xs.iter().copied().fold(f64::INFINITY, f64::min),
                        max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    },
                );
            } else {
                let mut frequencies = BTreeMap::<String, usize>::new();
                for r in &records {
                    if let Some(code) = r.get(domain, &spec.id).as_code() {
                        *frequencies.entry(code.to_string()).or_default() += 1;
                    }
                }
                // max_by_key keeps the last maximum; iterate in reverse so
                // the smallest code wins ties
                let Some(mode) = frequencies
                    .iter()
                    .rev()
                    .max_by_key(|(_, n)| **n)
                    .map(|(c, _)| c.clone())
                else {
                    continue;
                };
                profile
                    .categorical
                    .insert(spec.id.clone(), CategoricalProfile { mode, frequencies });
            }
        }
    }
    Ok(profile)
}

/// Jaccard overlap `|g ∩ p| / |g ∪ p|` of two sorted index sets.
pub fn dependency(g: &[usize], p: &[usize]) -> f64 {
    let (mut i, mut j, mut common) = (0, 0, 0usize);
    while i < g.len() && j < p.len() {
        match g[i].cmp(&p[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                common += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = g.len() + p.len() - common;
    if union == 0 {
        0.0
    } else {
        common as f64 / union as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectedPair {
    pub customer: usize,
    pub product: usize,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DependencyTable {
    /// `scores[g][p]` for customer cluster `g`, product cluster `p`.
    pub scores: Vec<Vec<f64>>,
    /// One entry per customer cluster, in customer-cluster order.
    pub selected: Vec<SelectedPair>,
}

/// For every customer cluster, the product cluster of maximum dependency.
/// Ties go to the larger product cluster, then the lower cluster id.
pub fn select_pairs(
    customers: &Partition,
    products: &Partition,
) -> Result<DependencyTable, MappingError> {
    if customers.universe() != products.universe() {
        return Err(MappingError::UniverseMismatch(
            customers.universe(),
            products.universe(),
        ));
    }
    let scores: Vec<Vec<f64>> = customers
        .clusters
        .iter()
        .map(|g| products.clusters.iter().map(|p| dependency(g, p)).collect())
        .collect();
    let selected = scores
        .iter()
        .enumerate()
        .filter_map(|(g, row)| {
            let mut best: Option<usize> = None;
            for (p, &s) in row.iter().enumerate() {
                best = match best {
                    None => Some(p),
                    Some(b) => {
                        let better = s > row[b]
                            || (s == row[b]
                                && products.clusters[p].len() > products.clusters[b].len());
                        Some(if better { p } else { b })
                    }
                };
            }
            best.map(|p| SelectedPair {
                customer: g,
                product: p,
                score: row[p],
            })
        })
        .collect();
    Ok(DependencyTable { scores, selected })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodedTransaction {
    pub tid: String,
    pub customer_cluster: usize,
    pub product_cluster: usize,
    pub items: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EncodedTransactionDB {
    pub transactions: Vec<EncodedTransaction>,
}

impl EncodedTransactionDB {
    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn baskets(&self) -> Vec<Vec<String>> {
        self.transactions.iter().map(|t| t.items.clone()).collect()
    }
}

/// Formats with three significant figures, dropping trailing zeros.
pub fn three_significant(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{}", if x.is_finite() { 0.0 } else { x });
    }
    let magnitude = libm::floor(libm::log10(libm::fabs(x))) as i32;
    let decimals = 2 - magnitude;
    if decimals <= 0 {
        let unit = libm::pow(10.0, f64::from(-decimals));
        format!("{}", libm::round(x / unit) * unit)
    } else {
        let s = format!("{:.*}", decimals as usize, x);
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" {
            "0".to_string()
        } else {
            s.to_string()
        }
    }
}

/// `slug:lo-hi(μmean)`, the item standing for a numerical value inside a
/// cluster.
pub fn interval_item(spec: &VariableSpec, p: &NumericProfile) -> String {
    format!(
        "{}:{}-{}(μ{})",
        spec.slug(),
        three_significant(p.min),
        three_significant(p.max),
        three_significant(p.mean)
    )
}

pub fn state_item(spec: &VariableSpec, code: &str) -> String {
    let label = spec
        .options
        .iter()
        .find(|o| o.code == code)
        .map_or(code, |o| o.display_label());
    format!("{}={}", spec.slug(), label)
}

pub fn group_item(customer_cluster: usize) -> String {
    format!("customer_group=g{}", customer_cluster + 1)
}

/// Restricts the records to those lying in both clusters of a selected pair
/// and rewrites each as items: numerical requirements become their product
/// cluster's interval label, categorical requirements stay as `var=state`,
/// purchased products are kept, and the customer cluster is added.
pub fn encode_for_mining(
    dataset: &Dataset,
    customers: &Partition,
    products: &Partition,
    table: &DependencyTable,
    product_profiles: &[ClusterProfile],
) -> Result<EncodedTransactionDB, MappingError> {
    if table.selected.is_empty() {
        return Err(MappingError::NoSelection);
    }
    let customer_of = customers.labels();
    let product_of = products.labels();
    let chosen: BTreeMap<usize, usize> = table
        .selected
        .iter()
        .map(|s| (s.customer, s.product))
        .collect();

    let mut transactions = Vec::new();
    for (i, record) in dataset.records.iter().enumerate() {
        let (g, p) = (customer_of[i], product_of[i]);
        if chosen.get(&g) != Some(&p) {
            continue;
        }
        let profile = &product_profiles[p];
        let mut items = Vec::new();
        for spec in &dataset.schema.fr_vars {
            match record.get(Domain::Product, &spec.id) {
                Value::Number(_) => {
                    if let Some(np) = profile.numeric.get(&spec.id) {
                        items.push(interval_item(spec, np));
                    }
                }
                Value::Code(code) => items.push(state_item(spec, code)),
                Value::Missing => {}
            }
        }
        items.extend(record.products.iter().cloned());
        items.push(group_item(g));
        items.sort();
        items.dedup();
        transactions.push(EncodedTransaction {
            tid: record.tid.clone(),
            customer_cluster: g,
            product_cluster: p,
            items,
        });
    }
    Ok(EncodedTransactionDB { transactions })
}

/// Index of the candidate nearest to `needs`; ties go to the larger cluster,
/// then the lower index. Candidates are `(representative, cluster size)`.
pub fn assign_new_customer(
    needs: &FeatureVector,
    candidates: &[(FeatureVector, usize)],
    metric: &CompositeMetric,
) -> Result<usize, MappingError> {
    let mut best: Option<(usize, f64, usize)> = None;
    for (idx, (rep, size)) in candidates.iter().enumerate() {
        let d = metric.distance(needs, rep)?;
        let better = match best {
            None => true,
            Some((_, bd, bsize)) => d < bd || (d == bd && *size > bsize),
        };
        if better {
            best = Some((idx, d, *size));
        }
    }
    best.map(|(i, _, _)| i).ok_or(MappingError::NoClusters)
}
