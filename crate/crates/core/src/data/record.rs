//! On-disk trial records and the dataset manifest.
//!
//! Records store seeds and specs, never geometry: scenes and scans are
//! re-rendered deterministically at load time, so a dataset of thousands
//! of trials is a few hundred kilobytes of JSON lines.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::rng::derive_seed;
use crate::sim::items::{ActingObject, ItemFamily};
use crate::sim::trial::FailReason;
use crate::sim::Task;

/// Current dataset format version.
pub const FORMAT_VERSION: u32 = 1;

/// Seeded description of one acting object: enough to rebuild the exact
/// shape, orientation q and scale α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub family: ItemFamily,
    pub seed: u64,
    /// Orientation about +z, radians — denormalized from the seed.
    pub yaw: f64,
    /// Isotropic scale — denormalized from the seed.
    pub scale: f64,
}

impl ObjectSpec {
    pub fn sample(family: ItemFamily, seed: u64) -> (ObjectSpec, ActingObject) {
        let object = ActingObject::sample(family, seed);
        let spec = ObjectSpec { family, seed, yaw: object.yaw, scale: object.scale };
        (spec, object)
    }

    /// Rebuild the acting object this spec was sampled from.
    pub fn realize(&self) -> ActingObject {
        ActingObject::sample(self.family, self.seed)
    }

    /// Seed for the object's surface point cloud.
    pub fn cloud_seed(&self) -> u64 {
        derive_seed(self.seed, 0xc10d)
    }
}

/// One labelled interaction trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub task: Task,
    pub scene_seed: u64,
    pub camera_seed: u64,
    pub object: ObjectSpec,
    /// Index of the interaction point within the rendered scan.
    pub point_index: usize,
    /// Its world coordinates (denormalized for inspection and checks).
    pub point: Point3,
    pub label: u8,
    pub reason: Option<FailReason>,
}

impl TrialRecord {
    pub fn is_positive(&self) -> bool {
        self.label == 1
    }

    pub fn validate(&self) -> Result<()> {
        match (self.label, self.reason) {
            (1, None) | (0, Some(_)) => Ok(()),
            _ => Err(Error::format(format!(
                "record label {} inconsistent with reason {:?}",
                self.label, self.reason
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyCount {
    pub positives: usize,
    pub negatives: usize,
}

/// Index of a stored dataset; counts are exact by construction and
/// re-verified on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub task: Task,
    pub records: usize,
    pub positives: usize,
    pub families: BTreeMap<String, FamilyCount>,
    pub files: Vec<String>,
    /// Scan size n used at collection time (re-rendering must match).
    pub scene_points: usize,
    pub camera_resolution: u32,
}

impl DatasetManifest {
    pub fn tally(
        task: Task,
        records: &[TrialRecord],
        scene_points: usize,
        camera_resolution: u32,
    ) -> DatasetManifest {
        let mut families: BTreeMap<String, FamilyCount> = BTreeMap::new();
        let mut positives = 0;
        for r in records {
            let slot = families.entry(r.object.family.name().to_string()).or_default();
            if r.is_positive() {
                positives += 1;
                slot.positives += 1;
            } else {
                slot.negatives += 1;
            }
        }
        DatasetManifest {
            version: FORMAT_VERSION,
            task,
            records: records.len(),
            positives,
            families,
            files: vec!["records.jsonl".to_string()],
            scene_points,
            camera_resolution,
        }
    }

    /// Counts must match the records exactly.
    pub fn verify(&self, records: &[TrialRecord]) -> Result<()> {
        if self.version != FORMAT_VERSION {
            return Err(Error::format(format!(
                "dataset format v{} (this build reads v{FORMAT_VERSION})",
                self.version
            )));
        }
        let expect = DatasetManifest::tally(self.task, records, self.scene_points, self.camera_resolution);
        if expect.records != self.records
            || expect.positives != self.positives
            || expect.families != self.families
        {
            return Err(Error::format("manifest counts do not match the records"));
        }
        for r in records {
            if r.task != self.task {
                return Err(Error::format(format!(
                    "record task {} in a {} dataset",
                    r.task, self.task
                )));
            }
            r.validate()?;
        }
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::format(format!("manifest encode: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<DatasetManifest> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::format(format!("manifest decode: {e}")))
    }
}

/// Write records one JSON object per line.
pub fn write_records(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    for r in records {
        let line =
            serde_json::to_string(r).map_err(|e| Error::format(format!("record encode: {e}")))?;
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<TrialRecord>> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (ln, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TrialRecord = serde_json::from_str(&line)
            .map_err(|e| Error::format(format!("record line {}: {e}", ln + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_record(seed: u64, label: u8) -> TrialRecord {
        let (object, _) = ObjectSpec::sample(ItemFamily::Box, derive_seed(seed, 3));
        TrialRecord {
            task: Task::Placement,
            scene_seed: derive_seed(seed, 1),
            camera_seed: derive_seed(seed, 2),
            object,
            point_index: (seed % 100) as usize,
            point: Point3::new(0.1 * seed as f64, -0.2, 0.7301234567890123),
            label,
            reason: if label == 1 { None } else { Some(FailReason::UnstableRest) },
        }
    }

    #[test]
    fn records_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        let records: Vec<TrialRecord> = (0..20).map(|i| sample_record(i, (i % 3 == 0) as u8)).collect();
        write_records(&path, &records).unwrap();
        let back = read_records(&path).unwrap();
        assert_eq!(records, back);
    }

    #[test]
    fn manifest_tally_counts_and_verify() {
        let records: Vec<TrialRecord> = (0..10).map(|i| sample_record(i, (i < 4) as u8)).collect();
        let m = DatasetManifest::tally(Task::Placement, &records, 256, 48);
        assert_eq!(m.records, 10);
        assert_eq!(m.positives, 4);
        let total: usize = m.families.values().map(|f| f.positives + f.negatives).sum();
        assert_eq!(total, 10);
        m.verify(&records).unwrap();
    }

    #[test]
    fn manifest_verify_rejects_tampered_counts() {
        let records: Vec<TrialRecord> = (0..6).map(|i| sample_record(i, 0)).collect();
        let mut m = DatasetManifest::tally(Task::Placement, &records, 256, 48);
        m.positives = 3;
        assert!(m.verify(&records).is_err());
    }

    #[test]
    fn label_reason_consistency_enforced() {
        let mut r = sample_record(1, 1);
        r.validate().unwrap();
        r.reason = Some(FailReason::NoContact);
        assert!(r.validate().is_err());
    }

    #[test]
    fn object_spec_realizes_the_sampled_object() {
        for seed in 0..30 {
            let (spec, obj) = ObjectSpec::sample(ItemFamily::Mug, seed);
            let again = spec.realize();
            assert_eq!(obj, again);
            assert_eq!(spec.yaw, obj.yaw);
            assert_eq!(spec.scale, obj.scale);
        }
    }
}
