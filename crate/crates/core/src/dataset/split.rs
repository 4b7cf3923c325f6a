use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use super::{ImageRecord, Quality};
use crate::error::{Error, Result};
use crate::raster::write_atomic;

/// Test pairs are chosen by a Fisher–Yates shuffle of the pairs sorted by
/// good-image path, driven by ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`).
/// Each swap index `j ∈ [0, i]` is drawn from one `u64` by rejection:
/// values `≥ ⌊2⁶⁴/(i+1)⌋·(i+1)` are redrawn, otherwise `j = x mod (i+1)`.
pub const PRNG_NAME: &str = "chacha8-seed_from_u64/fisher-yates-rejection";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub seed: u64,
    pub prng: String,
    pub test_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pair {
    pub good: PathBuf,
    pub restored: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnpairedSet {
    pub low: Vec<PathBuf>,
    pub restored: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitManifest {
    pub header: ManifestHeader,
    pub unpaired_train: UnpairedSet,
    pub paired_train: Vec<Pair>,
    pub test: Vec<Pair>,
}

#[derive(Serialize, Deserialize)]
struct UnpairedFile {
    header: ManifestHeader,
    low: Vec<PathBuf>,
    restored: Vec<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct PairedFile {
    header: ManifestHeader,
    pairs: Vec<Pair>,
}

pub const MANIFEST_FILES: [&str; 3] = ["unpaired_train.json", "paired_train.json", "test.json"];

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("manifest serializes");
    s.push('\n');
    s
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))
}

impl SplitManifest {
    /// Writes the three manifest files into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let unpaired = UnpairedFile {
            header: self.header.clone(),
            low: self.unpaired_train.low.clone(),
            restored: self.unpaired_train.restored.clone(),
        };
        write_atomic(&dir.join(MANIFEST_FILES[0]), to_json(&unpaired).as_bytes())?;
        let paired = PairedFile {
            header: self.header.clone(),
            pairs: self.paired_train.clone(),
        };
        write_atomic(&dir.join(MANIFEST_FILES[1]), to_json(&paired).as_bytes())?;
        let test = PairedFile {
            header: self.header.clone(),
            pairs: self.test.clone(),
        };
        write_atomic(&dir.join(MANIFEST_FILES[2]), to_json(&test).as_bytes())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let unpaired: UnpairedFile = read_json(&dir.join(MANIFEST_FILES[0]))?;
        let paired: PairedFile = read_json(&dir.join(MANIFEST_FILES[1]))?;
        let test: PairedFile = read_json(&dir.join(MANIFEST_FILES[2]))?;
        if paired.header != unpaired.header || test.header != unpaired.header {
            return Err(Error::parse(dir.display().to_string(), "manifest headers disagree"));
        }
        Ok(Self {
            header: unpaired.header,
            unpaired_train: UnpairedSet {
                low: unpaired.low,
                restored: unpaired.restored,
            },
            paired_train: paired.pairs,
            test: test.pairs,
        })
    }
}

fn bounded(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    let zone = (u64::MAX / bound) * bound;
    loop {
        let x = rng.next_u64();
        if x < zone {
            return x % bound;
        }
    }
}

/// In-place Fisher–Yates as described by [`PRNG_NAME`].
pub fn seeded_shuffle<T>(items: &mut [T], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..items.len()).rev() {
        let j = bounded(&mut rng, i as u64 + 1) as usize;
        items.swap(i, j);
    }
}

/// Splits labeled records into unpaired training, paired training and test
/// sets. Restored records must name a good-quality source present in
/// `records`. All Low frames and every restored frame not held out for
/// testing form the unpaired set.
pub fn build_splits(records: &[ImageRecord], test_count: usize, seed: u64) -> Result<SplitManifest> {
    let goods: BTreeMap<&Path, &ImageRecord> = records
        .iter()
        .filter(|r| r.quality == Some(Quality::Good))
        .map(|r| (r.path.as_path(), r))
        .collect();
    let mut pairs = Vec::new();
    for r in records.iter().filter(|r| r.quality == Some(Quality::Restored)) {
        let source = r
            .source
            .as_deref()
            .ok_or_else(|| Error::invariant(format!("{}: restored record without a source", r.path.display())))?;
        if !goods.contains_key(source) {
            return Err(Error::invariant(format!(
                "{}: source {} is not a good-quality record",
                r.path.display(),
                source.display()
            )));
        }
        pairs.push(Pair {
            good: source.to_path_buf(),
            restored: r.path.clone(),
        });
    }
    pairs.sort();
    if let Some(w) = pairs.windows(2).find(|w| w[0].good == w[1].good) {
        return Err(Error::invariant(format!("{} has more than one restored image", w[0].good.display())));
    }
    if test_count > pairs.len() {
        return Err(Error::invariant(format!(
            "test set needs {test_count} pairs but only {} are available",
            pairs.len()
        )));
    }

    let mut order: Vec<usize> = (0..pairs.len()).collect();
    seeded_shuffle(&mut order, seed);
    let mut is_test = vec![false; pairs.len()];
    for &i in &order[..test_count] {
        is_test[i] = true;
    }
    let (mut test, mut paired_train) = (Vec::new(), Vec::new());
    for (pair, held_out) in pairs.into_iter().zip(is_test) {
        if held_out {
            test.push(pair);
        } else {
            paired_train.push(pair);
        }
    }

    let mut low: Vec<PathBuf> = records
        .iter()
        .filter(|r| r.quality == Some(Quality::Low))
        .map(|r| r.path.clone())
        .collect();
    low.sort();
    let restored = paired_train.iter().map(|p| p.restored.clone()).collect();

    Ok(SplitManifest {
        header: ManifestHeader {
            seed,
            prng: PRNG_NAME.to_owned(),
            test_count,
        },
        unpaired_train: UnpairedSet { low, restored },
        paired_train,
        test,
    })
}
