use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::SplitManifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    /// A test path also appears in a training split.
    Disjointness,
    Missing,
    Unreadable,
    /// The two members of a pair differ in size.
    DimensionMismatch,
    /// A file differs from the expected native resolution.
    UnexpectedResolution,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub kind: IssueKind,
    pub severity: Severity,
    pub path: PathBuf,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn violations(&self) -> usize {
        self.issues.len()
    }

    pub fn errors(&self) -> usize {
        self.issues.iter().filter(|i| i.severity == Severity::Error).count()
    }

    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn count(&self, kind: IssueKind) -> usize {
        self.issues.iter().filter(|i| i.kind == kind).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidateConfig {
    /// When set, every image must have these `(width, height)`.
    pub expected_dims: Option<(u32, u32)>,
}

/// Checks a manifest against its invariants and the files under `root`.
/// Problems are reported, never raised.
pub fn validate_manifest(manifest: &SplitManifest, root: &Path, config: &ValidateConfig) -> ValidationReport {
    let mut issues = Vec::new();

    let train: BTreeSet<&Path> = manifest
        .unpaired_train
        .low
        .iter()
        .chain(&manifest.unpaired_train.restored)
        .chain(manifest.paired_train.iter().flat_map(|p| [&p.good, &p.restored]))
        .map(PathBuf::as_path)
        .collect();
    let test: BTreeSet<&Path> = manifest
        .test
        .iter()
        .flat_map(|p| [p.good.as_path(), p.restored.as_path()])
        .collect();
    for path in test.intersection(&train) {
        issues.push(Issue {
            kind: IssueKind::Disjointness,
            severity: Severity::Error,
            path: path.to_path_buf(),
            detail: "appears in both a training split and the test split".into(),
        });
    }

    let dims_of = |path: &Path, issues: &mut Vec<Issue>| -> Option<(u32, u32)> {
        let abs = root.join(path);
        if !abs.is_file() {
            issues.push(Issue {
                kind: IssueKind::Missing,
                severity: Severity::Error,
                path: path.to_path_buf(),
                detail: "file does not exist".into(),
            });
            return None;
        }
        match image::image_dimensions(&abs) {
            Ok(d) => {
                if let Some(expected) = config.expected_dims {
                    if d != expected {
                        issues.push(Issue {
                            kind: IssueKind::UnexpectedResolution,
                            severity: Severity::Warning,
                            path: path.to_path_buf(),
                            detail: format!("{}x{}, expected {}x{}", d.0, d.1, expected.0, expected.1),
                        });
                    }
                }
                Some(d)
            }
            Err(e) => {
                issues.push(Issue {
                    kind: IssueKind::Unreadable,
                    severity: Severity::Error,
                    path: path.to_path_buf(),
                    detail: e.to_string(),
                });
                None
            }
        }
    };

    for path in &manifest.unpaired_train.low {
        dims_of(path, &mut issues);
    }
    let paired_restored: BTreeSet<&Path> = manifest.paired_train.iter().map(|p| p.restored.as_path()).collect();
    for path in manifest
        .unpaired_train
        .restored
        .iter()
        .filter(|p| !paired_restored.contains(p.as_path()))
    {
        dims_of(path, &mut issues);
    }
    for pair in manifest.paired_train.iter().chain(&manifest.test) {
        let a = dims_of(&pair.good, &mut issues);
        let b = dims_of(&pair.restored, &mut issues);
        if let (Some(a), Some(b)) = (a, b) {
            if a != b {
                issues.push(Issue {
                    kind: IssueKind::DimensionMismatch,
                    severity: Severity::Warning,
                    path: pair.restored.clone(),
                    detail: format!("{}x{} vs source {}x{}", b.0, b.1, a.0, a.1),
                });
            }
        }
    }
    ValidationReport { issues }
}
