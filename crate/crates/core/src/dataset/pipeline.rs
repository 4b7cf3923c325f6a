use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    build_splits, label_quality, load_exclusions, load_records, restore_batch, validate_manifest, BatchOptions,
    LabelConfig, Quality, SiteSet, ValidateConfig, ValidationReport,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub seed: u64,
    pub test_count: usize,
    pub label: LabelConfig,
    pub batch: BatchOptions,
    pub validate: ValidateConfig,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            test_count: 300,
            label: LabelConfig::default(),
            batch: BatchOptions::default(),
            validate: ValidateConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub records: usize,
    pub low: usize,
    pub good: usize,
    pub restored: usize,
    pub excluded: usize,
    pub skipped: Vec<(PathBuf, String)>,
    pub unpaired_low: usize,
    pub unpaired_restored: usize,
    pub paired_train: usize,
    pub test: usize,
    pub validation: ValidationReport,
}

/// Labels `records.json`, restores good frames, applies `exclusions.txt`,
/// and writes the split manifests under `root/manifests`.
pub fn build_dataset(root: &Path, config: &DatasetConfig) -> Result<DatasetSummary> {
    let tag = |module: &'static str| move |e: Error| retag(module, e);

    let mut records = load_records(&root.join("records.json")).map_err(tag("dataset"))?;
    for r in &mut records {
        r.quality = Some(label_quality(r, &config.label).map_err(tag("label"))?);
    }
    let count = |q: Quality| records.iter().filter(|r| r.quality == Some(q)).count();
    let (low, good) = (count(Quality::Low), count(Quality::Good));

    let site_ids: BTreeSet<&str> = records
        .iter()
        .filter(|r| r.quality == Some(Quality::Good))
        .map(|r| r.site_id.as_str())
        .collect();
    let (sites, failed_sites) = SiteSet::load_from_root(root, site_ids);
    for (id, e) in &failed_sites {
        log::warn!("site {id}: {e}");
    }
    let outcome = restore_batch(root, &records, &sites, &config.batch);
    let restored = outcome.restored.len();
    records.extend(outcome.restored);

    let exclusions = load_exclusions(&root.join("exclusions.txt")).map_err(tag("dataset"))?;
    let before = records.len();
    records.retain(|r| {
        !exclusions.contains(&r.path) && !r.source.as_ref().is_some_and(|s| exclusions.contains(s))
    });
    let excluded = before - records.len();

    let manifest = build_splits(&records, config.test_count, config.seed).map_err(tag("split"))?;
    manifest.write(&root.join("manifests")).map_err(tag("split"))?;
    let validation = validate_manifest(&manifest, root, &config.validate);

    Ok(DatasetSummary {
        records: before - restored,
        low,
        good,
        restored,
        excluded,
        skipped: outcome.failures,
        unpaired_low: manifest.unpaired_train.low.len(),
        unpaired_restored: manifest.unpaired_train.restored.len(),
        paired_train: manifest.paired_train.len(),
        test: manifest.test.len(),
        validation,
    })
}

fn retag(module: &str, e: Error) -> Error {
    match e {
        Error::Parse { context, message } => Error::Parse {
            context: format!("[{module}] {context}"),
            message,
        },
        Error::Invariant(m) => Error::Invariant(format!("[{module}] {m}")),
        Error::Shape(m) => Error::Shape(format!("[{module}] {m}")),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{SplitManifest, MANIFEST_FILES};
    use crate::fixtures::write_toy_dataset;

    fn config() -> DatasetConfig {
        DatasetConfig {
            seed: 7,
            test_count: 4,
            ..DatasetConfig::default()
        }
    }

    fn snapshot(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
        let mut out = Vec::new();
        for sub in ["restored", "manifests"] {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(root.join(sub))
                .unwrap()
                .map(|e| e.unwrap().path())
                .collect();
            entries.sort();
            for p in entries {
                out.push((p.clone(), std::fs::read(&p).unwrap()));
            }
        }
        out
    }

    #[test]
    fn toy_build_is_clean_and_conserves_counts() {
        let dir = tempfile::tempdir().unwrap();
        write_toy_dataset(dir.path(), 20, 3).unwrap();
        let s = build_dataset(dir.path(), &config()).unwrap();
        assert_eq!((s.records, s.good, s.low, s.restored, s.excluded), (20, 12, 8, 12, 0));
        assert!(s.skipped.is_empty());
        assert_eq!(s.test, 4);
        assert_eq!(s.paired_train + s.test, s.restored);
        assert_eq!(s.unpaired_low, s.low);
        assert_eq!(s.unpaired_restored, s.paired_train);
        assert!(s.validation.is_clean(), "{}", s.validation.to_json());
        for f in MANIFEST_FILES {
            assert!(dir.path().join("manifests").join(f).is_file());
        }
    }

    #[test]
    fn rebuild_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        write_toy_dataset(dir.path(), 20, 3).unwrap();
        build_dataset(dir.path(), &config()).unwrap();
        let first = snapshot(dir.path());
        build_dataset(dir.path(), &config()).unwrap();
        assert_eq!(first, snapshot(dir.path()));
    }

    #[test]
    fn exclusions_drop_whole_pairs() {
        let dir = tempfile::tempdir().unwrap();
        let records = write_toy_dataset(dir.path(), 20, 3).unwrap();
        std::fs::write(
            dir.path().join("exclusions.txt"),
            format!("# bad frames\n{}\n", records[0].path.display()),
        )
        .unwrap();
        let s = build_dataset(dir.path(), &config()).unwrap();
        assert_eq!(s.excluded, 2);
        assert_eq!(s.paired_train + s.test, 11);
        let m = SplitManifest::read(&dir.path().join("manifests")).unwrap();
        assert!(m.paired_train.iter().chain(&m.test).all(|p| p.good != records[0].path));
    }

    #[test]
    fn unlabeled_record_is_a_tagged_error() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("records.json"),
            r#"[{"path":"raw/x.png","site_id":"s","dive_depth_m":3.0}]"#,
        )
        .unwrap();
        let e = build_dataset(dir.path(), &config()).unwrap_err();
        assert!(e.to_string().contains("[label]"), "{e}");
    }
}
