//! Structured verdicts for pipeline runs.
//!
//! A report is a flat list of checks keyed by stable ids, plus artifact
//! summaries (groupoid sizes, cocycle levels, block data) and the seed and
//! working level used. Checks are append-only and order-independent; the
//! same id re-run must produce the same verdict for the run to be coherent.

use serde::{Deserialize, Serialize};

use crate::star::BlockReport;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineKind {
    Imprimitivity,
    Classical,
    Nonabelian,
    Roundtrip,
    Obstruction,
    Fiber,
}

/// One verification step with a re-runnable identity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    /// Stable id, e.g. "psi-closed" or "fiber-blocks@2".
    pub id: String,
    pub passed: bool,
    pub details: String,
}

/// A named intermediate object: enough to re-identify it across runs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Artifact {
    pub id: String,
    pub kind: String,
    /// Object and arrow counts for groupoids, table sizes otherwise.
    pub shape: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DualityReport {
    pub kind: PipelineKind,
    pub level: u32,
    pub seed: u64,
    pub artifacts: Vec<Artifact>,
    pub checks: Vec<Check>,
    /// Block data gathered along the run, keyed like checks.
    pub blocks: Vec<(String, BlockReport)>,
    /// K0 ranks by artifact id, when computed.
    pub k0_ranks: Vec<(String, usize)>,
    pub notes: Vec<String>,
}

impl DualityReport {
    pub fn new(kind: PipelineKind, level: u32, seed: u64) -> DualityReport {
        DualityReport {
            kind,
            level,
            seed,
            artifacts: Vec::new(),
            checks: Vec::new(),
            blocks: Vec::new(),
            k0_ranks: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn artifact(&mut self, id: &str, kind: &str, shape: &[usize]) {
        self.artifacts.push(Artifact {
            id: id.to_string(),
            kind: kind.to_string(),
            shape: shape.to_vec(),
        });
    }

    pub fn check(&mut self, id: &str, passed: bool, details: impl Into<String>) {
        self.checks.push(Check { id: id.to_string(), passed, details: details.into() });
    }

    /// Records a list of violations under one id; passes when empty.
    pub fn check_violations(&mut self, id: &str, violations: &[String]) {
        if violations.is_empty() {
            self.check(id, true, "ok");
        } else {
            self.check(id, false, violations.join("; "));
        }
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_ids(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.id.as_str()).collect()
    }

    /// One line per check, stable order, for terminal output.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:?} report (level {}, seed {})\n",
            self.kind, self.level, self.seed
        ));
        for a in &self.artifacts {
            out.push_str(&format!("  artifact {} [{}] shape {:?}\n", a.id, a.kind, a.shape));
        }
        for c in &self.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("  {mark} {} ({})\n", c.id, c.details));
        }
        for (id, b) in &self.blocks {
            out.push_str(&format!("  blocks {} = {:?}\n", id, b.blocks));
        }
        for (id, r) in &self.k0_ranks {
            out.push_str(&format!("  k0 rank {} = {}\n", id, r));
        }
        for n in &self.notes {
            out.push_str(&format!("  note: {n}\n"));
        }
        out
    }
}
