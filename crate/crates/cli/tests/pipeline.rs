use std::path::{Path, PathBuf};

use retail_rules::config::PipelineConfig;
use retail_rules::formats::{parse_assignments, read_baskets};
use retail_rules::pipeline::{ingest_files, run_pipeline, PipelineError};
use retail_rules::RuleKnowledgeBase;
use retail_rules_core::domain::Value;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn config(out: &Path) -> PipelineConfig {
    let mut c = PipelineConfig::load(&fixtures().join("config.json")).unwrap();
    c.output_dir = out.to_path_buf();
    c
}

/// Copies the fixture data with `edit` applied to the CSV text.
fn edited_config(dir: &Path, edit: impl FnOnce(String) -> String) -> PipelineConfig {
    let csv = std::fs::read_to_string(fixtures().join("transactions.csv")).unwrap();
    let data = dir.join("transactions.csv");
    std::fs::write(&data, edit(csv)).unwrap();
    let mut c = config(&dir.join("out"));
    c.data = data;
    c
}

#[test]
fn fixture_run_writes_kb_report_and_intermediates() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(dir.path());
    c.dump_intermediates = true;
    let outcome = run_pipeline(&c).unwrap();
    assert_eq!(
        outcome.kb_path,
        dir.path().join("knowledge_base_fixture.json")
    );
    assert!(outcome.report_path.is_file());

    let inter = dir.path().join("intermediates_fixture");
    for f in [
        "customer_dissimilarity.csv",
        "product_closure.csv",
        "product_cut.csv",
        "product_distance_numerical.csv",
        "product_distance_binary.csv",
        "product_distance_nominal.csv",
        "partitions.json",
        "transactions.basket",
    ] {
        assert!(inter.join(f).is_file(), "{f}");
    }
    assert!(!dir.path().join("intermediates_fixture.partial").exists());

    let closure = std::fs::read_to_string(inter.join("product_closure.csv")).unwrap();
    assert_eq!(closure.lines().count(), 16);
    assert!(closure.starts_with("tid,T001,T002"));

    let baskets = read_baskets(
        std::fs::File::open(inter.join("transactions.basket")).unwrap(),
        "b",
    )
    .unwrap();
    assert_eq!(baskets.len(), outcome.kb.transactions.len());

    let kb = RuleKnowledgeBase::load(&outcome.kb_path).unwrap();
    assert_eq!(kb, outcome.kb);
    assert_eq!(kb.rules[0].id, "R1");
    assert!(kb.rules.iter().all(|r| r.rule.satisfies(0.4, 0.6)));
}

#[test]
fn recommend_and_explain() {
    let dir = tempfile::tempdir().unwrap();
    let kb = run_pipeline(&config(dir.path())).unwrap().kb;

    // the needs of the beer and cigarettes group
    let needs = parse_assignments("a1=a11,a2=a21,a3=a31,a4=a41,a5=a51,a6=a62").unwrap();
    let rec = kb.recommend(&needs).unwrap();
    assert!(rec.warning.is_none());
    assert!(kb.customer_partition[rec.customer_cluster].contains(&"T001".to_string()));
    assert!(rec
        .suggestions
        .iter()
        .any(|s| s.consequent == ["beer", "cigarettes"]
            && s.antecedent.iter().any(|i| i.starts_with("age:"))));
    // nothing from another group's baskets is suggested on their evidence
    assert!(rec
        .suggestions
        .iter()
        .all(|s| !s.antecedent.contains(&"milk".to_string())));

    assert!(kb
        .check_needs(&parse_assignments("a9=a91").unwrap())
        .is_err());
    assert!(kb
        .check_needs(&parse_assignments("a1=a19").unwrap())
        .is_err());
    let mut partial = needs.clone();
    partial.insert("a2".into(), Value::Missing);
    assert!(kb.recommend(&partial).is_ok());

    let anchor = kb
        .rules
        .iter()
        .find(|r| r.rule.consequent == ["beer", "cigarettes"] && r.rule.antecedent.len() == 2)
        .unwrap();
    let e = kb.explain(&anchor.id).unwrap();
    assert_eq!(e.supporting_tids.len(), anchor.rule.count);
    assert_eq!(e.antecedent_tids.len(), anchor.rule.antecedent_count);
    assert!(e.supporting_tids.contains(&"T001".to_string()));
    assert_eq!(e.pairs.len(), 1);
    assert_eq!(e.pairs[0].dependency, 1.0);
    assert!(matches!(
        kb.explain("R0"),
        Err(PipelineError::KnowledgeBase(_))
    ));
}

#[test]
fn tampered_rules_are_rejected_on_load() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run_pipeline(&config(dir.path())).unwrap();
    let mut kb = outcome.kb.clone();
    kb.rules[0].rule.count -= 1;
    assert!(RuleKnowledgeBase::from_json(&kb.to_json()).is_err());

    let mut kb = outcome.kb.clone();
    kb.config.minconf = 1.0;
    let err = RuleKnowledgeBase::from_json(&kb.to_json()).unwrap_err();
    assert!(err.to_string().contains("minconf"), "{err}");

    let mut kb = outcome.kb;
    kb.schema_version = 99;
    assert!(RuleKnowledgeBase::from_json(&kb.to_json()).is_err());
}

#[test]
fn missing_numbers_are_imputed_and_bad_codes_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let c = edited_config(dir.path(), |csv| {
        csv.replace(
            "T002,a11,a21,a31,a41,a51,a62,v12,v21,v31,v42,35,",
            "T002,a11,a21,a31,a41,a51,a62,v12,v21,v31,v42,,",
        )
        .replace("T005,a13,a23", "T005,a19,a23")
    });
    let ingested = ingest_files(&c).unwrap();
    assert_eq!(ingested.dataset.len(), 14);
    assert_eq!(ingested.validation.rejected.len(), 1);
    assert_eq!(ingested.validation.rejected[0].tid, "T005");
    assert_eq!(ingested.validation.repairs.len(), 1);
    assert_eq!(ingested.validation.repairs[0].variable, "v5");

    let outcome = run_pipeline(&c).unwrap();
    assert_eq!(outcome.kb.validation, ingested.validation);
    let report = std::fs::read_to_string(outcome.report_path).unwrap();
    assert!(report.contains("rejected T005"));
}

#[test]
fn validation_failures_map_to_exit_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let c = edited_config(dir.path(), |csv| {
        csv.lines().take(2).collect::<Vec<_>>().join("\n")
    });
    let err = run_pipeline(&c).unwrap_err();
    assert!(err.to_string().contains("T < 2"), "{err}");
    assert_eq!(err.exit_code(), 1);

    let c = edited_config(dir.path(), |csv| csv.replacen("tid,a1", "tid,a0", 1));
    assert_eq!(run_pipeline(&c).unwrap_err().exit_code(), 1);

    let mut c = config(dir.path());
    c.minsup = 1.0;
    c.max_itemset_len = Some(2);
    // nothing is frequent at 100% support; still a successful, empty run
    let kb = run_pipeline(&c).unwrap().kb;
    assert!(kb.rules.is_empty());
}
