//! Level-wise Apriori: frequent itemsets by prefix-join candidate generation
//! with subset pruning, then rules `X => Y` filtered by confidence.
//!
//! Supports are kept as exact counts with the transaction count as divisor;
//! threshold tests divide two integers, which rounds to the same double as
//! the decimal threshold whenever the two rationals are equal.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MiningError {
    #[error("minimum support {0} outside (0, 1]")]
    MinSupport(f64),
    #[error("minimum confidence {0} outside (0, 1]")]
    MinConfidence(f64),
    #[error("transaction database is empty")]
    EmptyDatabase,
    #[error("frequent itemsets are not closed under subsets")]
    NotDownwardClosed,
}

fn check_threshold(x: f64, err: fn(f64) -> MiningError) -> Result<(), MiningError> {
    if x > 0.0 && x <= 1.0 {
        Ok(())
    } else {
        Err(err(x))
    }
}

fn ratio(count: usize, of: usize) -> f64 {
    count as f64 / of as f64
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Itemset {
    /// Sorted, distinct.
    pub items: Vec<String>,
    pub count: usize,
    pub transactions: usize,
}

impl Itemset {
    pub fn support(&self) -> f64 {
        ratio(self.count, self.transactions)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssociationRule {
    pub antecedent: Vec<String>,
    pub consequent: Vec<String>,
    pub support: f64,
    pub confidence: f64,
    /// Transactions containing antecedent and consequent.
    pub count: usize,
    /// Transactions containing the antecedent.
    pub antecedent_count: usize,
    pub transactions: usize,
}

impl AssociationRule {
    pub fn new(
        antecedent: Vec<String>,
        consequent: Vec<String>,
        count: usize,
        antecedent_count: usize,
        transactions: usize,
    ) -> Self {
        AssociationRule {
            antecedent,
            consequent,
            support: ratio(count, transactions),
            confidence: ratio(count, antecedent_count),
            count,
            antecedent_count,
            transactions,
        }
    }

    /// Recomputes support and confidence from the stored counts and checks
    /// them against the thresholds and the structural invariants.
    pub fn satisfies(&self, minsup: f64, minconf: f64) -> bool {
        let disjoint = self.antecedent.iter().all(|a| !self.consequent.contains(a));
        let sup = ratio(self.count, self.transactions);
        let conf = ratio(self.count, self.antecedent_count);
        disjoint
            && !self.antecedent.is_empty()
            && !self.consequent.is_empty()
            && self.count <= self.antecedent_count
            && sup == self.support
            && conf == self.confidence
            && sup >= minsup
            && conf >= minconf
    }

    pub fn items(&self) -> impl Iterator<Item = &String> {
        self.antecedent.iter().chain(&self.consequent)
    }
}

/// Ranking: confidence descending, support descending, then antecedent and
/// consequent lexicographically.
pub fn rule_order(a: &AssociationRule, b: &AssociationRule) -> Ordering {
    // cross-multiplied counts compare the exact rationals
    let conf = (b.count * a.antecedent_count).cmp(&(a.count * b.antecedent_count));
    let sup = (b.count * a.transactions).cmp(&(a.count * b.transactions));
    conf.then(sup)
        .then_with(|| a.antecedent.cmp(&b.antecedent))
        .then_with(|| a.consequent.cmp(&b.consequent))
}

struct Vocabulary {
    names: Vec<String>,
    baskets: Vec<Vec<u64>>,
}

impl Vocabulary {
    /// Item ids follow lexicographic order of the names, so sorted id lists
    /// map to sorted name lists.
    fn build<T: AsRef<[String]>>(db: &[T]) -> Self {
        let names: Vec<String> = db
            .iter()
            .flat_map(|t| t.as_ref().iter().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index: BTreeMap<&str, usize> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let words = names.len().div_ceil(64);
        let baskets = db
            .iter()
            .map(|t| {
                let mut bits = alloc::vec![0u64; words];
                for item in t.as_ref() {
                    let id = index[item.as_str()];
                    bits[id / 64] |= 1 << (id % 64);
                }
                bits
            })
            .collect();
        Vocabulary { names, baskets }
    }

    fn count(&self, candidate: &[usize]) -> usize {
        self.baskets
            .iter()
            .filter(|bits| {
                candidate
                    .iter()
                    .all(|&id| bits[id / 64] >> (id % 64) & 1 == 1)
            })
            .count()
    }
}

/// Joins `(k-1)`-itemsets sharing their first `k-2` items, then drops any
/// candidate with an infrequent `(k-1)`-subset.
fn candidates(level: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let frequent: BTreeSet<&[usize]> = level.iter().map(Vec::as_slice).collect();
    let mut out = Vec::new();
    for (i, a) in level.iter().enumerate() {
        let prefix = &a[..a.len() - 1];
        for b in &level[i + 1..] {
            if &b[..b.len() - 1] != prefix {
                // level is sorted, so no later itemset shares this prefix
                break;
            }
            let mut c = a.clone();
            c.push(*b.last().expect("non-empty"));
            let all_subsets_frequent = (0..c.len()).all(|skip| {
                let sub: Vec<usize> = c
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != skip)
                    .map(|(_, x)| *x)
                    .collect();
                frequent.contains(sub.as_slice())
            });
            if all_subsets_frequent {
                out.push(c);
            }
        }
    }
    out
}

/// All itemsets with support `>= minsup`, level by level, each level sorted
/// lexicographically. `max_len` bounds the itemset size.
pub fn frequent_itemsets<T: AsRef<[String]>>(
    db: &[T],
    minsup: f64,
    max_len: Option<usize>,
) -> Result<Vec<Itemset>, MiningError> {
    check_threshold(minsup, MiningError::MinSupport)?;
    if db.is_empty() {
        return Err(MiningError::EmptyDatabase);
    }
    let n = db.len();
    let vocab = Vocabulary::build(db);
    let max_len = max_len.unwrap_or(usize::MAX);

    let mut out = Vec::new();
    let mut level: Vec<Vec<usize>> = (0..vocab.names.len()).map(|i| alloc::vec![i]).collect();
    let mut k = 1;
    while !level.is_empty() && k <= max_len {
        let mut frequent = Vec::new();
        for candidate in level {
            let count = vocab.count(&candidate);
            if ratio(count, n) >= minsup {
                out.push(Itemset {
                    items: candidate
                        .iter()
                        .map(|&id| vocab.names[id].clone())
                        .collect(),
                    count,
                    transactions: n,
                });
                frequent.push(candidate);
            }
        }
        level = candidates(&frequent);
        k += 1;
    }
    Ok(out)
}

/// Every rule `X => Z \ X` over frequent `Z` and non-empty proper `X ⊂ Z`
/// with confidence `>= minconf`, ranked by [`rule_order`].
pub fn generate_rules(
    frequent: &[Itemset],
    minconf: f64,
) -> Result<Vec<AssociationRule>, MiningError> {
    check_threshold(minconf, MiningError::MinConfidence)?;
    let counts: BTreeMap<&[String], usize> = frequent
        .iter()
        .map(|s| (s.items.as_slice(), s.count))
        .collect();
    let mut rules = Vec::new();
    for z in frequent.iter().filter(|z| z.items.len() >= 2) {
        let len = z.items.len();
        assert!(len < 64, "itemset of {len} items");
        for mask in 1..(1u64 << len) - 1 {
            let (antecedent, consequent): (Vec<_>, Vec<_>) = z
                .items
                .iter()
                .enumerate()
                .partition(|(k, _)| mask >> k & 1 == 1);
            let antecedent: Vec<String> = antecedent.into_iter().map(|(_, s)| s.clone()).collect();
            let x_count = *counts
                .get(antecedent.as_slice())
                .ok_or(MiningError::NotDownwardClosed)?;
            if ratio(z.count, x_count) >= minconf {
                rules.push(AssociationRule::new(
                    antecedent,
                    consequent.into_iter().map(|(_, s)| s.clone()).collect(),
                    z.count,
                    x_count,
                    z.transactions,
                ));
            }
        }
    }
    rules.sort_by(rule_order);
    Ok(rules)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningReport {
    pub transactions: usize,
    /// Number of frequent itemsets of size 1, 2, ...
    pub frequent_per_level: Vec<usize>,
    pub rule_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mined {
    pub itemsets: Vec<Itemset>,
    pub rules: Vec<AssociationRule>,
    pub report: MiningReport,
}

pub fn mine<T: AsRef<[String]>>(
    db: &[T],
    minsup: f64,
    minconf: f64,
    max_len: Option<usize>,
) -> Result<Mined, MiningError> {
    check_threshold(minconf, MiningError::MinConfidence)?;
    let itemsets = frequent_itemsets(db, minsup, max_len)?;
    let rules = generate_rules(&itemsets, minconf)?;
    let mut frequent_per_level = Vec::new();
    for s in &itemsets {
        let k = s.items.len();
        if frequent_per_level.len() < k {
            frequent_per_level.resize(k, 0);
        }
        frequent_per_level[k - 1] += 1;
    }
    let report = MiningReport {
        transactions: db.len(),
        frequent_per_level,
        rule_count: rules.len(),
    };
    Ok(Mined {
        itemsets,
        rules,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn db(rows: &[&str]) -> Vec<Vec<String>> {
        rows.iter()
            .map(|r| r.chars().map(|c| c.to_string()).collect())
            .collect()
    }

    fn items(s: &str) -> Vec<String> {
        s.chars().map(|c| c.to_string()).collect()
    }

    #[test]
    fn small_database_itemsets() {
        let sets = frequent_itemsets(&db(&["ABC", "AB", "AC", "BC", "ABC"]), 0.6, None).unwrap();
        let got: Vec<(String, usize)> = sets.iter().map(|s| (s.items.concat(), s.count)).collect();
        assert_eq!(
            got,
            vec![
                ("A".into(), 4),
                ("B".into(), 4),
                ("C".into(), 4),
                ("AB".into(), 3),
                ("AC".into(), 3),
                ("BC".into(), 3)
            ]
        );
        assert_eq!(sets[3].support(), 0.6);
    }

    #[test]
    fn thresholds() {
        let d = db(&["AB", "A", "AC"]);
        let all = frequent_itemsets(&d, 1.0, None).unwrap();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].items, items("A"));

        let single = frequent_itemsets(&db(&["X"]), 0.5, None).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].support(), 1.0);

        assert_eq!(
            frequent_itemsets(&d, 0.0, None),
            Err(MiningError::MinSupport(0.0))
        );
        assert_eq!(
            frequent_itemsets(&d, 1.5, None),
            Err(MiningError::MinSupport(1.5))
        );
        assert_eq!(
            generate_rules(&[], 0.0),
            Err(MiningError::MinConfidence(0.0))
        );
        let empty: Vec<Vec<String>> = vec![];
        assert_eq!(
            frequent_itemsets(&empty, 0.5, None),
            Err(MiningError::EmptyDatabase)
        );
    }

    #[test]
    fn rules_from_small_database() {
        let m = mine(&db(&["ABC", "AB", "AC", "BC", "ABC"]), 0.6, 0.7, None).unwrap();
        let ab = m
            .rules
            .iter()
            .find(|r| r.antecedent == items("A") && r.consequent == items("B"))
            .unwrap();
        assert_eq!((ab.support, ab.confidence), (0.6, 0.75));
        let ba = m
            .rules
            .iter()
            .find(|r| r.antecedent == items("B") && r.consequent == items("A"))
            .unwrap();
        assert_eq!((ba.support, ba.confidence), (0.6, 0.75));
        assert_eq!(m.report.rule_count, 6);
        assert_eq!(m.report.frequent_per_level, vec![3, 3]);
    }

    #[test]
    fn exact_implication_at_full_confidence() {
        let m = mine(&db(&["AB", "AB", "B"]), 0.5, 1.0, None).unwrap();
        assert_eq!(m.rules.len(), 1);
        assert_eq!(m.rules[0].antecedent, items("A"));
    }

    #[test]
    fn no_rules_without_second_level() {
        let m = mine(&db(&["A", "B", "C"]), 0.3, 0.1, None).unwrap();
        assert_eq!(m.report.frequent_per_level, vec![3]);
        assert!(m.rules.is_empty());
    }

    #[test]
    fn doubling_transactions_keeps_ratios() {
        let base = db(&["ABC", "AB", "AC", "BC", "ABC", "D"]);
        let doubled: Vec<_> = base.iter().chain(&base).cloned().collect();
        let a = mine(&base, 0.3, 0.5, None).unwrap();
        let b = mine(&doubled, 0.3, 0.5, None).unwrap();
        assert_eq!(a.rules.len(), b.rules.len());
        for (x, y) in a.rules.iter().zip(&b.rules) {
            assert_eq!(
                (&x.antecedent, &x.consequent),
                (&y.antecedent, &y.consequent)
            );
            assert_eq!((x.support, x.confidence), (y.support, y.confidence));
        }
    }

    #[test]
    fn max_len_bounds_levels() {
        let sets = frequent_itemsets(&db(&["ABC", "ABC"]), 0.5, Some(2)).unwrap();
        assert!(sets.iter().all(|s| s.items.len() <= 2));
        assert_eq!(sets.len(), 6);
    }

    #[test]
    fn subset_closure_required() {
        let broken = vec![Itemset {
            items: items("AB"),
            count: 1,
            transactions: 2,
        }];
        assert_eq!(
            generate_rules(&broken, 0.5),
            Err(MiningError::NotDownwardClosed)
        );
    }

    #[test]
    fn ranking_breaks_ties_by_support_then_antecedent() {
        let r =
            |a: &str, c: &str, count, ac| AssociationRule::new(items(a), items(c), count, ac, 10);
        let mut rules = [
            r("B", "C", 3, 4),
            r("A", "C", 3, 4),
            r("D", "E", 6, 8),
            r("F", "G", 1, 1),
        ];
        rules.sort_by(rule_order);
        let order: Vec<String> = rules.iter().map(|r| r.antecedent.concat()).collect();
        assert_eq!(order, ["F", "D", "A", "B"]);
    }
}
