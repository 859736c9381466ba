//! The persisted rule knowledge base and the queries served from it.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use retail_rules_core::apriori::{AssociationRule, MiningReport};
use retail_rules_core::domain::{Domain, FeatureSchema, ValidationReport, Value, VariableKind};
use retail_rules_core::features::DomainEncoder;
use retail_rules_core::mapping::{
    assign_new_customer, ClusterProfile, DependencyTable, EncodedTransaction,
};
use retail_rules_core::preprocess::StandardizedColumn;
use serde::{Deserialize, Serialize};

use crate::config::Settings;
use crate::pipeline::{PipelineError, RunArtifacts};
use crate::schema_file::WeightsReport;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KbRule {
    pub id: String,
    #[serde(flatten)]
    pub rule: AssociationRule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleKnowledgeBase {
    pub schema_version: u32,
    pub location: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub config: Settings,
    pub schema: FeatureSchema,
    pub weights: WeightsReport,
    pub validation: ValidationReport,
    pub customer_standardization: Vec<StandardizedColumn>,
    pub product_standardization: Vec<StandardizedColumn>,
    pub customer_encoder: DomainEncoder,
    /// Clusters as lists of TIDs, in cluster-id order.
    pub customer_partition: Vec<Vec<String>>,
    pub product_partition: Vec<Vec<String>>,
    pub customer_profiles: Vec<ClusterProfile>,
    pub product_profiles: Vec<ClusterProfile>,
    pub dependency: DependencyTable,
    pub transactions: Vec<EncodedTransaction>,
    pub mining: MiningReport,
    pub rules: Vec<KbRule>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub rule_id: String,
    pub antecedent: Vec<String>,
    pub consequent: Vec<String>,
    pub support: f64,
    pub confidence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    /// Zero-based customer cluster the needs were assigned to.
    pub customer_cluster: usize,
    pub suggestions: Vec<Suggestion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairTrace {
    pub customer_cluster: usize,
    pub product_cluster: usize,
    pub dependency: f64,
    pub supporting_tids: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub rule: KbRule,
    pub supporting_tids: Vec<String>,
    pub antecedent_tids: Vec<String>,
    pub pairs: Vec<PairTrace>,
}

fn tids_of(partition: &[Vec<usize>], tids: &[String]) -> Vec<Vec<String>> {
    partition
        .iter()
        .map(|c| c.iter().map(|&i| tids[i].clone()).collect())
        .collect()
}

fn contains_all(items: &[String], wanted: &[String]) -> bool {
    // both sides are sorted
    let mut it = items.iter();
    wanted.iter().all(|w| it.by_ref().any(|x| x == w))
}

impl RuleKnowledgeBase {
    pub fn build(run: &RunArtifacts, timestamp: u64) -> Self {
        let tids = run.tids();
        RuleKnowledgeBase {
            schema_version: SCHEMA_VERSION,
            location: run.settings.location.clone(),
            timestamp,
            config: run.settings.clone(),
            schema: run.ingested.dataset.schema.clone(),
            weights: run.ingested.weights.clone(),
            validation: run.ingested.validation.clone(),
            customer_standardization: run.customer.standardized.columns.clone(),
            product_standardization: run.product.standardized.columns.clone(),
            customer_encoder: run.customer.encoder.clone(),
            customer_partition: tids_of(&run.customer.clustering.partition.clusters, &tids),
            product_partition: tids_of(&run.product.clustering.partition.clusters, &tids),
            customer_profiles: run.mapping.customer_profiles.clone(),
            product_profiles: run.mapping.product_profiles.clone(),
            dependency: run.mapping.dependency.clone(),
            transactions: run.mapping.transactions.transactions.clone(),
            mining: run.mined.report.clone(),
            rules: run
                .mined
                .rules
                .iter()
                .enumerate()
                .map(|(i, rule)| KbRule {
                    id: format!("R{}", i + 1),
                    rule: rule.clone(),
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("knowledge base serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        crate::pipeline::write_atomic(path, self.to_json().as_bytes())
    }

    /// Parses a stored knowledge base and re-checks every rule against the
    /// thresholds it was mined with.
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let kb: RuleKnowledgeBase =
            serde_json::from_str(text).map_err(|e| PipelineError::KnowledgeBase(e.to_string()))?;
        if kb.schema_version != SCHEMA_VERSION {
            return Err(PipelineError::KnowledgeBase(format!(
                "schema version {} is not supported (expected {SCHEMA_VERSION})",
                kb.schema_version
            )));
        }
        kb.schema
            .check()
            .map_err(|e| PipelineError::KnowledgeBase(e.to_string()))?;
        for r in &kb.rules {
            if !r.rule.satisfies(kb.config.minsup, kb.config.minconf) {
                return Err(PipelineError::KnowledgeBase(format!(
                    "rule {} does not meet minsup {} / minconf {}",
                    r.id, kb.config.minsup, kb.config.minconf
                )));
            }
        }
        Ok(kb)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn rule(&self, id: &str) -> Option<&KbRule> {
        self.rules.iter().find(|r| r.id == id)
    }

    /// Rejects needs that name unknown variables or unknown options.
    pub fn check_needs(&self, needs: &BTreeMap<String, Value>) -> Result<(), String> {
        for (id, value) in needs {
            let spec = self
                .schema
                .customer_attrs
                .iter()
                .find(|v| &v.id == id)
                .ok_or_else(|| format!("{id} is not a customer attribute"))?;
            let ok = match (spec.kind, value) {
                (_, Value::Missing) => true,
                (VariableKind::Numerical, Value::Number(x)) => x.is_finite(),
                (_, Value::Code(c)) => spec.option_index(c).is_some(),
                _ => false,
            };
            if !ok {
                let shown = match value {
                    Value::Number(x) => x.to_string(),
                    Value::Code(c) => c.clone(),
                    Value::Missing => String::new(),
                };
                return Err(format!("{id}: {shown:?} is not a valid option"));
            }
        }
        Ok(())
    }

    /// Assigns the needs to the nearest customer cluster and returns the
    /// rules whose antecedent only uses items seen in that cluster's encoded
    /// transactions, best first.
    pub fn recommend(
        &self,
        needs: &BTreeMap<String, Value>,
    ) -> Result<Recommendation, PipelineError> {
        let mut values = needs.clone();
        // level codes of numerical attributes stand for their midpoints
        for spec in &self.schema.customer_attrs {
            if let (VariableKind::Numerical, Some(Value::Code(c))) =
                (spec.kind, values.get(&spec.id))
            {
                if let Some(m) = spec
                    .options
                    .iter()
                    .find(|o| &o.code == c)
                    .and_then(|o| o.midpoint())
                {
                    values.insert(spec.id.clone(), Value::Number(m));
                }
            }
        }
        let encoder = &self.customer_encoder;
        debug_assert_eq!(encoder.domain, Domain::Customer);
        let metric = encoder.metric().map_err(PipelineError::Distance)?;
        let x = encoder.encode_values(&values);
        let candidates: Vec<_> = self
            .customer_profiles
            .iter()
            .map(|p| (p.representative(encoder), p.size()))
            .collect();
        let g = assign_new_customer(&x, &candidates, &metric).map_err(PipelineError::Mapping)?;

        let vocabulary: BTreeSet<&String> = self
            .transactions
            .iter()
            .filter(|t| t.customer_cluster == g)
            .flat_map(|t| &t.items)
            .collect();
        let suggestions: Vec<Suggestion> = self
            .rules
            .iter()
            .filter(|r| r.rule.antecedent.iter().all(|i| vocabulary.contains(i)))
            .map(|r| Suggestion {
                rule_id: r.id.clone(),
                antecedent: r.rule.antecedent.clone(),
                consequent: r.rule.consequent.clone(),
                support: r.rule.support,
                confidence: r.rule.confidence,
            })
            .collect();
        let warning = suggestions
            .is_empty()
            .then(|| format!("customer cluster g{} has no applicable rules", g + 1));
        Ok(Recommendation {
            customer_cluster: g,
            suggestions,
            warning,
        })
    }

    /// The transactions and cluster pairs behind a rule.
    pub fn explain(&self, rule_id: &str) -> Result<Explanation, PipelineError> {
        let rule = self
            .rule(rule_id)
            .ok_or_else(|| PipelineError::KnowledgeBase(format!("no rule with id {rule_id}")))?
            .clone();
        let all: Vec<String> = rule
            .rule
            .items()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let supporting: Vec<&EncodedTransaction> = self
            .transactions
            .iter()
            .filter(|t| contains_all(&t.items, &all))
            .collect();
        let antecedent_tids = self
            .transactions
            .iter()
            .filter(|t| contains_all(&t.items, &rule.rule.antecedent))
            .map(|t| t.tid.clone())
            .collect();
        let pairs = self
            .dependency
            .selected
            .iter()
            .filter_map(|s| {
                let tids: Vec<String> = supporting
                    .iter()
                    .filter(|t| t.customer_cluster == s.customer && t.product_cluster == s.product)
                    .map(|t| t.tid.clone())
                    .collect();
                (!tids.is_empty()).then_some(PairTrace {
                    customer_cluster: s.customer,
                    product_cluster: s.product,
                    dependency: s.score,
                    supporting_tids: tids,
                })
            })
            .collect();
        Ok(Explanation {
            supporting_tids: supporting.iter().map(|t| t.tid.clone()).collect(),
            antecedent_tids,
            rule,
            pairs,
        })
    }
}
