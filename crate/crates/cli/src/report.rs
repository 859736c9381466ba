//! Plain-text summary of a knowledge base.

use std::fmt::Write;

use crate::kb::RuleKnowledgeBase;

const TOP_RULES: usize = 20;

fn sizes(p: &[Vec<String>]) -> String {
    p.iter()
        .map(|c| c.len().to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn render(kb: &RuleKnowledgeBase) -> String {
    let mut s = String::new();
    let c = &kb.config;
    let _ = writeln!(s, "Knowledge base for location {}", kb.location);
    let _ = writeln!(
        s,
        "alpha {}  beta {}  minsup {}  minconf {}  standardization {:?}  weights {}",
        c.alpha, c.beta, c.minsup, c.minconf, c.standardization, c.weights
    );

    let accepted: usize = kb.customer_partition.iter().map(Vec::len).sum();
    let _ = writeln!(s, "\nRecords");
    let _ = writeln!(
        s,
        "  accepted {accepted}, rejected {}, repaired values {}",
        kb.validation.rejected.len(),
        kb.validation.repairs.len()
    );
    for r in &kb.validation.rejected {
        let _ = writeln!(s, "  rejected {}: {}", r.tid, r.reasons.join("; "));
    }

    let _ = writeln!(s, "\nFunctional-requirement weights");
    for (v, w) in kb.schema.fr_vars.iter().zip(kb.weights.fr.weights()) {
        let _ = writeln!(s, "  {:<4} {:<28} {w:.4}", v.id, v.label);
    }
    let _ = writeln!(
        s,
        "  consistency ratio {:.4}",
        kb.weights.fr.consistency_ratio()
    );
    for w in &kb.weights.warnings {
        let _ = writeln!(s, "  warning: {w}");
    }

    let _ = writeln!(s, "\nClusters");
    let _ = writeln!(
        s,
        "  customer needs: {} cluster(s), sizes {}",
        kb.customer_partition.len(),
        sizes(&kb.customer_partition)
    );
    let _ = writeln!(
        s,
        "  functional requirements: {} cluster(s), sizes {}",
        kb.product_partition.len(),
        sizes(&kb.product_partition)
    );
    for pair in &kb.dependency.selected {
        let _ = writeln!(
            s,
            "  g{} -> p{}  dependency {:.3}",
            pair.customer + 1,
            pair.product + 1,
            pair.score
        );
    }

    let _ = writeln!(s, "\nMining");
    let _ = writeln!(
        s,
        "  {} transaction(s), frequent itemsets per level {:?}, {} rule(s)",
        kb.mining.transactions, kb.mining.frequent_per_level, kb.mining.rule_count
    );
    for r in kb.rules.iter().take(TOP_RULES) {
        let _ = writeln!(
            s,
            "  {:<5} {} => {}  (support {:.3}, confidence {:.3})",
            r.id,
            r.rule.antecedent.join(" & "),
            r.rule.consequent.join(" & "),
            r.rule.support,
            r.rule.confidence
        );
    }
    if kb.rules.len() > TOP_RULES {
        let _ = writeln!(s, "  ... {} more", kb.rules.len() - TOP_RULES);
    }
    s
}
