//! Aggregated verification report: assertions grouped by claim, a
//! coverage table, and text/JSON renderings. An in-scope claim with no
//! assertions fails the run (fail closed).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::analysis::claims::{Assertion, ClaimId};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageRow {
    pub claim: String,
    pub statement: String,
    pub assertions: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    pub scope: Vec<String>,
    pub assertions: Vec<Assertion>,
    pub notes: Vec<String>,
    pub coverage: Vec<CoverageRow>,
    pub uncovered: Vec<String>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn build(scope: &[ClaimId], assertions: Vec<Assertion>, notes: Vec<String>) -> Self {
        let mut counts: HashMap<ClaimId, (usize, usize)> = HashMap::new();
        for a in &assertions {
            let entry = counts.entry(a.claim).or_default();
            entry.0 += 1;
            if !a.pass {
                entry.1 += 1;
            }
        }
        let coverage: Vec<CoverageRow> = scope
            .iter()
            .map(|claim| {
                let (n, failures) = counts.get(claim).copied().unwrap_or((0, 0));
                CoverageRow {
                    claim: claim.code().to_string(),
                    statement: claim.statement().to_string(),
                    assertions: n,
                    failures,
                }
            })
            .collect();
        let uncovered: Vec<String> = coverage
            .iter()
            .filter(|row| row.assertions == 0)
            .map(|row| row.claim.clone())
            .collect();
        let passed = assertions.iter().all(|a| a.pass) && uncovered.is_empty();
        VerifyReport {
            scope: scope.iter().map(|c| c.code().to_string()).collect(),
            assertions,
            notes,
            coverage,
            uncovered,
            passed,
        }
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for a in &self.assertions {
            let status = if a.skipped {
                "SKIP"
            } else if a.pass {
                "PASS"
            } else {
                "FAIL"
            };
            out.push_str(&format!(
                "[{status}] {:<12} {} (worst {:+.3e}, tol {:.3e})\n",
                a.claim.code(),
                a.label,
                a.worst,
                a.tolerance
            ));
        }
        if !self.notes.is_empty() {
            out.push('\n');
            for n in &self.notes {
                out.push_str(&format!("note: {n}\n"));
            }
        }
        out.push('\n');
        out.push_str("claim coverage:\n");
        for row in &self.coverage {
            out.push_str(&format!(
                "  {:<12} {:>3} assertions, {:>2} failures — {}\n",
                row.claim, row.assertions, row.failures, row.statement
            ));
        }
        for claim in &self.uncovered {
            out.push_str(&format!("  UNCOVERED CLAIM: {claim}\n"));
        }
        out.push_str(&format!(
            "\noverall: {}\n",
            if self.passed { "PASS" } else { "FAIL" }
        ));
        out
    }
}
