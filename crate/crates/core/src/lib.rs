//! Fuzzy relational clustering and association rule mining for retail
//! transaction data.
//!
//! The crate turns a table of transaction records (customer-need options plus
//! mixed numerical/binary/nominal product requirements) into:
//!
//! * customer and product partitions, obtained by thresholding the max-min
//!   transitive closure of a fuzzy similarity relation ([`fuzzy`]);
//! * a customer-to-product cluster mapping chosen by maximum dependency and a
//!   re-encoded transaction table ([`mapping`]);
//! * association rules mined level-wise from that table ([`apriori`]).
//!
//! Everything here is pure computation over `alloc` collections. The crate is
//! `no_std` unless the `std` feature is enabled; the `rayon` feature
//! parallelizes the matrix kernels over rows without changing their results.

#![cfg_attr(not(any(feature = "std", test)), no_std)]
#![warn(rust_2018_idioms, unused_qualifications)]

extern crate alloc;

pub mod ahp;
pub mod apriori;
pub mod distance;
pub mod domain;
pub mod features;
pub mod fuzzy;
pub mod mapping;
pub mod matrix;
pub mod preprocess;

pub use ahp::{derive_weights, load_fixed_weights, PairwiseComparisonMatrix, WeightVector};
pub use apriori::{
    frequent_itemsets, generate_rules, mine, AssociationRule, Itemset, MiningReport,
};
pub use distance::{CompositeMetric, DissimilarityMatrix};
pub use domain::{
    validate_dataset, Dataset, Domain, FamilyWeights, FeatureSchema, TransactionRecord, Value,
    VariableKind, VariableSpec,
};
pub use features::{DomainEncoder, FeatureVector};
pub use fuzzy::{FuzzyEquivalentRelation, FuzzyRelation, Partition};
pub use mapping::{ClusterProfile, DependencyTable, EncodedTransactionDB};
pub use matrix::SquareMatrix;
pub use preprocess::{Method, StandardizedMatrix};
