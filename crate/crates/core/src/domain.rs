//! Schema and record types shared by every stage, plus dataset validation.
//!
//! A dataset has two variable domains over the same transaction records:
//! customer needs (`a_i`, qualitative options) and functional requirements
//! (`v_q`, the product-side variables). Interval-valued options such as an
//! age band `21-40` are declared on numerical variables and resolve to the
//! interval midpoint.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ahp::WeightVector;

const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariableKind {
    Numerical,
    Binary,
    Nominal,
}

/// Which side of a transaction record a variable belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// Customer needs, the `a_i` attributes.
    Customer,
    /// Functional requirements, the `v_q` variables.
    Product,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Customer => f.write_str("customer"),
            Domain::Product => f.write_str("product"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Numerical variables only: the interval this option stands for.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<[f64; 2]>,
}

impl OptionSpec {
    pub fn new(code: impl Into<String>) -> Self {
        OptionSpec {
            code: code.into(),
            label: None,
            interval: None,
        }
    }

    pub fn labelled(code: impl Into<String>, label: impl Into<String>) -> Self {
        OptionSpec {
            label: Some(label.into()),
            ..OptionSpec::new(code)
        }
    }

    pub fn interval(code: impl Into<String>, lo: f64, hi: f64) -> Self {
        OptionSpec {
            interval: Some([lo, hi]),
            ..OptionSpec::new(code)
        }
    }

    pub fn display_label(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.code)
    }

    pub fn midpoint(&self) -> Option<f64> {
        self.interval.map(|[lo, hi]| (lo + hi) / 2.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub id: String,
    pub label: String,
    pub kind: VariableKind,
    /// Admissible codes. Binary: exactly two, the first is the "present"/1
    /// state. Numerical: optional interval levels.
    #[serde(default)]
    pub options: Vec<OptionSpec>,
    /// Numerical only: admissible `[lo, hi]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
}

impl VariableSpec {
    pub fn nominal(id: &str, label: &str, codes: &[&str]) -> Self {
        VariableSpec {
            id: id.into(),
            label: label.into(),
            kind: VariableKind::Nominal,
            options: codes.iter().map(|c| OptionSpec::new(*c)).collect(),
            range: None,
        }
    }

    pub fn binary(id: &str, label: &str, present: &str, absent: &str) -> Self {
        VariableSpec {
            kind: VariableKind::Binary,
            ..Self::nominal(id, label, &[present, absent])
        }
    }

    pub fn numerical(id: &str, label: &str, lo: f64, hi: f64) -> Self {
        VariableSpec {
            id: id.into(),
            label: label.into(),
            kind: VariableKind::Numerical,
            options: Vec::new(),
            range: Some([lo, hi]),
        }
    }

    pub fn with_options(mut self, options: Vec<OptionSpec>) -> Self {
        self.options = options;
        self
    }

    pub fn option_index(&self, code: &str) -> Option<usize> {
        self.options.iter().position(|o| o.code == code)
    }

    /// Lower-case, underscore-joined label used in item names.
    pub fn slug(&self) -> String {
        let mut out = String::with_capacity(self.label.len());
        for word in self.label.split_whitespace() {
            if !out.is_empty() {
                out.push('_');
            }
            out.extend(word.chars().flat_map(char::to_lowercase));
        }
        if out.is_empty() {
            self.id.clone()
        } else {
            out
        }
    }

    fn check(&self) -> Result<(), SchemaError> {
        let bad = |reason: &str| SchemaError::Variable {
            id: self.id.clone(),
            reason: reason.to_string(),
        };
        let mut codes = BTreeSet::new();
        if !self.options.iter().all(|o| codes.insert(o.code.as_str())) {
            return Err(bad("duplicate option code"));
        }
        match self.kind {
            VariableKind::Binary if self.options.len() != 2 => {
                Err(bad("binary variables need exactly 2 options"))
            }
            VariableKind::Nominal if self.options.len() < 2 => {
                Err(bad("nominal variables need at least 2 options"))
            }
            VariableKind::Numerical => {
                let [lo, hi] = self
                    .range
                    .ok_or_else(|| bad("numerical variables need a range"))?;
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(bad("numerical range needs lo < hi"));
                }
                for o in &self.options {
                    match o.interval {
                        Some([a, b]) if a <= b && a >= lo && b <= hi => {}
                        _ => {
                            return Err(bad("numerical option intervals must lie within the range"))
                        }
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Relative importance of the numerical, binary and nominal distance
/// components. Sums to 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyWeights {
    pub numerical: f64,
    pub binary: f64,
    pub nominal: f64,
}

impl FamilyWeights {
    pub fn new(numerical: f64, binary: f64, nominal: f64) -> Result<Self, SchemaError> {
        let all = [numerical, binary, nominal];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(SchemaError::FamilyWeights);
        }
        if libm::fabs(all.iter().sum::<f64>() - 1.0) > SUM_TOLERANCE {
            return Err(SchemaError::FamilyWeights);
        }
        Ok(FamilyWeights {
            numerical,
            binary,
            nominal,
        })
    }

    pub fn equal() -> Self {
        FamilyWeights {
            numerical: 1.0 / 3.0,
            binary: 1.0 / 3.0,
            nominal: 1.0 / 3.0,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.numerical, self.binary, self.nominal]
    }

    /// Rescales the weights of the families marked present so they sum to 1;
    /// absent families get 0. Present families that all carry zero weight
    /// share equally. `None` when nothing is present.
    pub fn redistribute(&self, present: [bool; 3]) -> Option<FamilyWeights> {
        let w = self.as_array();
        let count = present.iter().filter(|p| **p).count();
        if count == 0 {
            return None;
        }
        let total: f64 = w
            .iter()
            .zip(present)
            .filter(|(_, p)| *p)
            .map(|(w, _)| w)
            .sum();
        let scaled: Vec<f64> = w
            .iter()
            .zip(present)
            .map(|(w, p)| match (p, total > 0.0) {
                (false, _) => 0.0,
                (true, true) => w / total,
                (true, false) => 1.0 / count as f64,
            })
            .collect();
        Some(FamilyWeights {
            numerical: scaled[0],
            binary: scaled[1],
            nominal: scaled[2],
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub customer_attrs: Vec<VariableSpec>,
    pub fr_vars: Vec<VariableSpec>,
    pub fr_weights: WeightVector,
    pub family_weights: FamilyWeights,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemaError {
    #[error("variable {id}: {reason}")]
    Variable { id: String, reason: String },
    #[error("variable id {0} declared more than once")]
    DuplicateId(String),
    #[error("schema declares no functional-requirement variables")]
    NoFrVariables,
    #[error("{weights} functional-requirement weights for {vars} variables")]
    WeightCount { weights: usize, vars: usize },
    #[error("family weights must be non-negative and sum to 1")]
    FamilyWeights,
}

impl FeatureSchema {
    pub fn new(
        customer_attrs: Vec<VariableSpec>,
        fr_vars: Vec<VariableSpec>,
        fr_weights: WeightVector,
        family_weights: FamilyWeights,
    ) -> Result<Self, SchemaError> {
        let schema = FeatureSchema {
            customer_attrs,
            fr_vars,
            fr_weights,
            family_weights,
        };
        schema.check()?;
        Ok(schema)
    }

    pub fn check(&self) -> Result<(), SchemaError> {
        if self.fr_vars.is_empty() {
            return Err(SchemaError::NoFrVariables);
        }
        if self.fr_weights.len() != self.fr_vars.len() {
            return Err(SchemaError::WeightCount {
                weights: self.fr_weights.len(),
                vars: self.fr_vars.len(),
            });
        }
        FamilyWeights::new(
            self.family_weights.numerical,
            self.family_weights.binary,
            self.family_weights.nominal,
        )?;
        let mut seen = BTreeSet::new();
        for v in self.customer_attrs.iter().chain(&self.fr_vars) {
            if !seen.insert(v.id.as_str()) {
                return Err(SchemaError::DuplicateId(v.id.clone()));
            }
            v.check()?;
        }
        Ok(())
    }

    pub fn variables(&self, domain: Domain) -> &[VariableSpec] {
        match domain {
            Domain::Customer => &self.customer_attrs,
            Domain::Product => &self.fr_vars,
        }
    }

    /// Per-variable weights used by the numerical distance of `domain`.
    /// Customer attributes carry no priorities and weigh `1/M` each.
    pub fn variable_weights(&self, domain: Domain) -> Vec<f64> {
        match domain {
            Domain::Product => self.fr_weights.weights().to_vec(),
            Domain::Customer => {
                let m = self.customer_attrs.len();
                alloc::vec![1.0 / m as f64; m]
            }
        }
    }

    pub fn find(&self, id: &str) -> Option<(Domain, &VariableSpec)> {
        self.customer_attrs
            .iter()
            .find(|v| v.id == id)
            .map(|v| (Domain::Customer, v))
            .or_else(|| {
                self.fr_vars
                    .iter()
                    .find(|v| v.id == id)
                    .map(|v| (Domain::Product, v))
            })
    }
}

/// A single cell. Numerical variables hold numbers after validation;
/// categorical variables hold option codes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Number(f64),
    Code(String),
    Missing,
}

impl Value {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_code(&self) -> Option<&str> {
        match self {
            Value::Code(c) => Some(c),
            _ => None,
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Number(x)
    }
}

impl From<&str> for Value {
    fn from(c: &str) -> Self {
        Value::Code(c.into())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransactionRecord {
    pub tid: String,
    pub need_options: BTreeMap<String, Value>,
    pub fr_values: BTreeMap<String, Value>,
    /// Products bought in this transaction.
    #[serde(default)]
    pub products: Vec<String>,
}

impl TransactionRecord {
    pub fn new(tid: impl Into<String>) -> Self {
        TransactionRecord {
            tid: tid.into(),
            need_options: BTreeMap::new(),
            fr_values: BTreeMap::new(),
            products: Vec::new(),
        }
    }

    pub fn values(&self, domain: Domain) -> &BTreeMap<String, Value> {
        match domain {
            Domain::Customer => &self.need_options,
            Domain::Product => &self.fr_values,
        }
    }

    fn values_mut(&mut self, domain: Domain) -> &mut BTreeMap<String, Value> {
        match domain {
            Domain::Customer => &mut self.need_options,
            Domain::Product => &mut self.fr_values,
        }
    }

    pub fn get(&self, domain: Domain, id: &str) -> &Value {
        self.values(domain).get(id).unwrap_or(&Value::Missing)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub schema: FeatureSchema,
    pub records: Vec<TransactionRecord>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RejectedRecord {
    pub tid: String,
    pub reasons: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Repair {
    pub tid: String,
    pub variable: String,
    pub imputed: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub rejected: Vec<RejectedRecord>,
    pub repairs: Vec<Repair>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.rejected.is_empty() && self.repairs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("dataset has no records")]
    Empty,
    #[error("schema: {0}")]
    Schema(#[from] SchemaError),
    #[error("duplicate TIDs: {}", .0.join(", "))]
    DuplicateTids(Vec<String>),
    #[error("T < 2: {valid} valid record(s), pairwise distance needs at least two")]
    TooFewRecords {
        valid: usize,
        report: ValidationReport,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Validated {
    pub dataset: Dataset,
    pub report: ValidationReport,
}

enum Cell {
    Ok(Value),
    Missing,
    Bad(String),
}

fn check_cell(spec: &VariableSpec, value: &Value) -> Cell {
    match (spec.kind, value) {
        (_, Value::Missing) => Cell::Missing,
        (VariableKind::Numerical, Value::Number(x)) => {
            let [lo, hi] = spec.range.unwrap_or([f64::NEG_INFINITY, f64::INFINITY]);
            if x.is_finite() && *x >= lo && *x <= hi {
                Cell::Ok(Value::Number(*x))
            } else {
                Cell::Bad(format!("{}: {} outside [{}, {}]", spec.id, x, lo, hi))
            }
        }
        (VariableKind::Numerical, Value::Code(c)) => {
            match spec
                .options
                .iter()
                .find(|o| &o.code == c)
                .and_then(OptionSpec::midpoint)
            {
                Some(m) => Cell::Ok(Value::Number(m)),
                None => Cell::Bad(format!("{}: unknown level {:?}", spec.id, c)),
            }
        }
        (VariableKind::Binary, Value::Number(x)) if *x == 1.0 || *x == 0.0 => {
            let idx = if *x == 1.0 { 0 } else { 1 };
            Cell::Ok(Value::Code(spec.options[idx].code.clone()))
        }
        (_, Value::Code(c)) if spec.option_index(c).is_some() => Cell::Ok(Value::Code(c.clone())),
        (_, Value::Code(c)) => {
            Cell::Bad(format!("{}: {:?} is not an admissible option", spec.id, c))
        }
        (_, Value::Number(x)) => Cell::Bad(format!(
            "{}: number {} for a categorical variable",
            spec.id, x
        )),
    }
}

/// Checks every record against the schema.
///
/// Numerical level codes are resolved to interval midpoints. Missing
/// numerical cells are imputed with the column mean of the accepted records
/// and listed as repairs; any other defect rejects the record and lists it
/// with reasons. Fails outright on an empty dataset, an invalid schema,
/// duplicate TIDs, or fewer than two surviving records.
pub fn validate_dataset(raw: Dataset) -> Result<Validated, ValidationError> {
    let Dataset { schema, records } = raw;
    if records.is_empty() {
        return Err(ValidationError::Empty);
    }
    schema.check()?;

    let mut seen = BTreeSet::new();
    let mut dups = BTreeSet::new();
    for r in &records {
        if !seen.insert(r.tid.as_str()) {
            dups.insert(r.tid.clone());
        }
    }
    if !dups.is_empty() {
        return Err(ValidationError::DuplicateTids(dups.into_iter().collect()));
    }

    let mut report = ValidationReport::default();
    let mut accepted = Vec::with_capacity(records.len());
    // (tid index in `accepted`, domain, variable id) awaiting imputation
    let mut pending: Vec<(usize, Domain, String)> = Vec::new();

    for record in records {
        let mut reasons = Vec::new();
        let mut clean = TransactionRecord {
            tid: record.tid.clone(),
            need_options: BTreeMap::new(),
            fr_values: BTreeMap::new(),
            products: record.products.clone(),
        };
        let mut missing = Vec::new();
        for domain in [Domain::Customer, Domain::Product] {
            let values = record.values(domain);
            for key in values.keys() {
                if !schema.variables(domain).iter().any(|v| &v.id == key) {
                    reasons.push(format!("{key}: not declared in the schema"));
                }
            }
            for spec in schema.variables(domain) {
                match check_cell(spec, record.get(domain, &spec.id)) {
                    Cell::Ok(v) => {
                        clean.values_mut(domain).insert(spec.id.clone(), v);
                    }
                    Cell::Missing if spec.kind == VariableKind::Numerical => {
                        missing.push((domain, spec.id.clone()));
                    }
                    Cell::Missing => reasons.push(format!("{}: missing value", spec.id)),
                    Cell::Bad(reason) => reasons.push(reason),
                }
            }
        }
        if record.products.iter().any(|p| p.trim().is_empty()) {
            reasons.push("products: empty product name".into());
        }
        if reasons.is_empty() {
            let idx = accepted.len();
            pending.extend(missing.into_iter().map(|(d, id)| (idx, d, id)));
            accepted.push(clean);
        } else {
            report.rejected.push(RejectedRecord {
                tid: record.tid,
                reasons,
            });
        }
    }

    let mut means: BTreeMap<(Domain, String), Option<f64>> = BTreeMap::new();
    for (_, domain, id) in &pending {
        means.entry((*domain, id.clone())).or_insert_with(|| {
            let present: Vec<f64> = accepted
                .iter()
                .filter_map(|r| r.values(*domain).get(id).and_then(Value::as_number))
                .collect();
            (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
        });
    }
    let mut unrepairable = BTreeMap::<usize, Vec<String>>::new();
    for (idx, domain, id) in pending {
        match means[&(domain, id.clone())] {
            Some(mean) => {
                accepted[idx]
                    .values_mut(domain)
                    .insert(id.clone(), Value::Number(mean));
                report.repairs.push(Repair {
                    tid: accepted[idx].tid.clone(),
                    variable: id,
                    imputed: mean,
                });
            }
            None => unrepairable.entry(idx).or_default().push(format!(
                "{id}: missing value and no observed values to impute from"
            )),
        }
    }
    if !unrepairable.is_empty() {
        let mut kept = Vec::with_capacity(accepted.len());
        for (idx, r) in accepted.into_iter().enumerate() {
            match unrepairable.remove(&idx) {
                Some(reasons) => {
                    report.repairs.retain(|rep| rep.tid != r.tid);
                    report.rejected.push(RejectedRecord {
                        tid: r.tid,
                        reasons,
                    });
                }
                None => kept.push(r),
            }
        }
        accepted = kept;
    }

    if accepted.len() < 2 {
        return Err(ValidationError::TooFewRecords {
            valid: accepted.len(),
            report,
        });
    }
    Ok(Validated {
        dataset: Dataset {
            schema,
            records: accepted,
        },
        report,
    })
}
