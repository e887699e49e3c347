//! Loading stored datasets and regenerating their geometry.
//!
//! A dataset directory holds seeds, not point clouds, so the loader
//! re-renders scans on demand.  Records sampled from the same scene share
//! one render through a small cache.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use crate::data::record::{read_records, DatasetManifest, TrialRecord};
use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::sim::render::{render_scan, Scan};
use crate::sim::scene_gen::build_scene;
use crate::sim::trial::{run_trial, TrialOutcome};

pub struct Dataset {
    pub dir: PathBuf,
    pub manifest: DatasetManifest,
    pub records: Vec<TrialRecord>,
    scans: Mutex<HashMap<(u64, u64), Arc<Scan>>>,
    clouds: Mutex<HashMap<(u64, usize), Arc<PointCloud>>>,
}

impl Dataset {
    /// Read a dataset directory, verifying manifest counts, label/reason
    /// consistency and the no-duplicate-(scene, point) invariant.
    pub fn load(dir: &Path) -> Result<Dataset> {
        let manifest = DatasetManifest::read_json(&dir.join("manifest.json"))?;
        let mut records = Vec::new();
        for file in &manifest.files {
            records.extend(read_records(&dir.join(file))?);
        }
        manifest.verify(&records)?;
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert((r.scene_seed, r.point_index)) {
                return Err(Error::format(format!(
                    "duplicate trial at scene seed {} point {}",
                    r.scene_seed, r.point_index
                )));
            }
        }
        Ok(Dataset {
            dir: dir.to_path_buf(),
            manifest,
            records,
            scans: Mutex::new(HashMap::new()),
            clouds: Mutex::new(HashMap::new()),
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Indices of positive records.
    pub fn positives(&self) -> Vec<usize> {
        (0..self.records.len()).filter(|&i| self.records[i].is_positive()).collect()
    }

    /// Indices of negative records.
    pub fn negatives(&self) -> Vec<usize> {
        (0..self.records.len()).filter(|&i| !self.records[i].is_positive()).collect()
    }

    /// The scan this record's point indexes into, re-rendered from seeds.
    /// Cached per (scene seed, camera seed) pair.
    pub fn scan(&self, record: &TrialRecord) -> Result<Arc<Scan>> {
        let key = (record.scene_seed, record.camera_seed);
        if let Some(hit) = self.scans.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let scene = build_scene(record.task, record.scene_seed, self.manifest.camera_resolution)?;
        let scan = Arc::new(render_scan(&scene, record.camera_seed, self.manifest.scene_points)?);
        if scan.cloud.points[record.point_index] != record.point {
            return Err(Error::format(format!(
                "re-rendered scan disagrees with stored point {} of scene seed {}",
                record.point_index, record.scene_seed
            )));
        }
        self.scans.lock().unwrap().insert(key, scan.clone());
        Ok(scan)
    }

    /// The acting object's surface cloud at `m` points, cached per object.
    pub fn object_cloud(&self, record: &TrialRecord, m: usize) -> Result<Arc<PointCloud>> {
        let key = (record.object.seed, m);
        if let Some(hit) = self.clouds.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let object = record.object.realize();
        let cloud = Arc::new(object.sample_cloud(m, record.object.cloud_seed())?);
        self.clouds.lock().unwrap().insert(key, cloud.clone());
        Ok(cloud)
    }

    /// Re-run a record's trial from its stored seeds.  The outcome's label
    /// must match the record for a well-formed dataset.
    pub fn replay(&self, record: &TrialRecord) -> Result<TrialOutcome> {
        let scene = build_scene(record.task, record.scene_seed, self.manifest.camera_resolution)?;
        let object = record.object.realize();
        Ok(run_trial(&scene, &object, record.task, record.point))
    }
}
