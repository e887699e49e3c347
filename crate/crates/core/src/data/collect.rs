//! Deterministic trial sampling and dataset collection.
//!
//! Every random choice is keyed off a caller seed through `derive_seed`, so
//! a trial or a whole dataset can be regenerated bit-for-bit from the seeds
//! stored in its records.

use std::collections::HashSet;
use std::path::Path;

use rand::Rng;

use crate::data::record::{DatasetManifest, ObjectSpec, TrialRecord};
use crate::error::{Error, Result};
use crate::preset::ScaleConfig;
use crate::rng::{derive_seed, rng_from_seed};
use crate::sim::items::ItemFamily;
use crate::sim::render::render_scan;
use crate::sim::scene_gen::build_scene;
use crate::sim::trial::{applicable_possible_mask, run_trial, TrialOutcome};
use crate::sim::Task;

// Sub-seed tags carving independent random streams out of one trial seed.
const TAG_SCENE: u64 = 1;
const TAG_CAMERA: u64 = 2;
const TAG_OBJECT: u64 = 3;
const TAG_POINT: u64 = 4;
const TAG_FAMILY: u64 = 5;

/// Views tried before concluding a scene never exposes a usable point.
pub const CAMERA_ATTEMPTS: usize = 64;

/// Negatives are kept only up to this multiple of the positive target.
pub const NEGATIVE_CAP_RATIO: usize = 4;

/// Knobs for `collect_dataset`.
#[derive(Debug, Clone)]
pub struct CollectConfig {
    pub task: Task,
    pub target_positives: usize,
    pub seed: u64,
    /// Scan size n; stored in the manifest so loads re-render identically.
    pub scene_points: usize,
    pub camera_resolution: u32,
    /// Acting families to balance across.
    pub families: Vec<ItemFamily>,
    /// Interaction points drawn per rendered scene.  Rendering dominates the
    /// cost of a trial, so sharing one scan across several points is the
    /// difference between minutes and hours at full scale.
    pub points_per_scene: usize,
}

impl CollectConfig {
    pub fn new(task: Task, target_positives: usize, seed: u64, scale: &ScaleConfig) -> CollectConfig {
        CollectConfig {
            task,
            target_positives,
            seed,
            scene_points: scale.scene_points,
            camera_resolution: scale.camera_resolution as u32,
            families: ItemFamily::TRAIN.to_vec(),
            points_per_scene: 8,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.target_positives == 0 {
            return Err(Error::invalid("target_positives must be at least 1"));
        }
        if self.families.is_empty() {
            return Err(Error::invalid("need at least one acting family"));
        }
        if self.points_per_scene == 0 {
            return Err(Error::invalid("points_per_scene must be at least 1"));
        }
        Ok(())
    }
}

/// Tallies from a collection run.
#[derive(Debug, Clone, Copy, Default)]
pub struct CollectStats {
    /// Simulated trials, kept or not.
    pub trials: usize,
    /// Scenes that contributed at least one trial.
    pub scenes: usize,
    /// Scenes dropped because generation failed or no view exposed a
    /// possible point.
    pub skipped_scenes: usize,
}

/// Draw and execute a single trial: build the scene, render a scan, pick an
/// interaction point uniformly from the possible mask and simulate.
pub fn sample_trial(task: Task, seed: u64, scene_points: usize, resolution: u32) -> Result<TrialRecord> {
    sample_trial_impl(task, seed, None, scene_points, resolution, false)
}

/// `sample_trial` with the acting family pinned.
pub fn sample_trial_for(
    task: Task,
    seed: u64,
    family: ItemFamily,
    scene_points: usize,
    resolution: u32,
) -> Result<TrialRecord> {
    sample_trial_impl(task, seed, Some(family), scene_points, resolution, false)
}

/// Debugging variant: the point is drawn from the applicable-but-blocked
/// region instead, and labelled negative without running the simulator.
pub fn sample_impossible_trial(
    task: Task,
    seed: u64,
    scene_points: usize,
    resolution: u32,
) -> Result<TrialRecord> {
    sample_trial_impl(task, seed, None, scene_points, resolution, true)
}

fn sample_trial_impl(
    task: Task,
    seed: u64,
    family: Option<ItemFamily>,
    scene_points: usize,
    resolution: u32,
    impossible: bool,
) -> Result<TrialRecord> {
    let scene_seed = derive_seed(seed, TAG_SCENE);
    let scene = build_scene(task, scene_seed, resolution)?;
    let camera_root = derive_seed(seed, TAG_CAMERA);
    for attempt in 0..CAMERA_ATTEMPTS {
        let camera_seed = derive_seed(camera_root, attempt as u64);
        let scan = render_scan(&scene, camera_seed, scene_points)?;
        let masks = applicable_possible_mask(&scene, &scan, task);
        let pool: Vec<usize> = if impossible {
            (0..scan.len())
                .filter(|&i| masks.applicable[i] && !masks.possible[i])
                .collect()
        } else {
            masks.possible_indices()
        };
        if pool.is_empty() {
            continue;
        }
        let mut point_rng = rng_from_seed(derive_seed(seed, TAG_POINT));
        let idx = pool[point_rng.gen_range(0..pool.len())];
        let family = family.unwrap_or_else(|| {
            let mut fam_rng = rng_from_seed(derive_seed(seed, TAG_FAMILY));
            ItemFamily::TRAIN[fam_rng.gen_range(0..ItemFamily::TRAIN.len())]
        });
        let (spec, object) = ObjectSpec::sample(family, derive_seed(seed, TAG_OBJECT));
        let p = scan.cloud.points[idx];
        let outcome = if impossible {
            TrialOutcome::impossible()
        } else {
            run_trial(&scene, &object, task, p)
        };
        return Ok(TrialRecord {
            task,
            scene_seed,
            camera_seed,
            object: spec,
            point_index: idx,
            point: p,
            label: outcome.success as u8,
            reason: outcome.reason,
        });
    }
    Err(Error::Generation(format!(
        "no view of scene seed {seed} exposed a {} interaction point",
        if impossible { "blocked" } else { "possible" }
    )))
}

/// The collection loop's give-up rule: a vanishing positive rate after ten
/// times the target number of trials means the setup is broken.
fn should_abort(trials: usize, positives: usize, target: usize) -> bool {
    trials >= 10 * target && (positives as f64) < 0.001 * trials as f64
}

/// Run trials until `target_positives` successes are recorded.
///
/// Families are balanced by always acting with the family holding the
/// fewest positives so far (earliest listed on ties), which keeps per-family
/// positive counts within one of each other.  Negatives are kept up to four
/// times the target.  Identical configs produce identical record vectors.
pub fn collect_records(cfg: &CollectConfig) -> Result<(Vec<TrialRecord>, CollectStats)> {
    cfg.validate()?;
    let neg_cap = NEGATIVE_CAP_RATIO * cfg.target_positives;
    let scene_budget = (10 * cfg.target_positives).max(64);
    let mut fam_pos = vec![0usize; cfg.families.len()];
    let mut records = Vec::new();
    let mut used: HashSet<(u64, usize)> = HashSet::new();
    let mut stats = CollectStats::default();
    let mut positives = 0usize;
    let mut negatives = 0usize;
    let mut scene_counter = 0u64;

    while positives < cfg.target_positives {
        if stats.scenes + stats.skipped_scenes >= scene_budget {
            return Err(Error::Generation(format!(
                "visited {} scenes but found only {positives}/{} positives",
                scene_budget, cfg.target_positives
            )));
        }
        scene_counter += 1;
        let trial_seed = derive_seed(cfg.seed, scene_counter);
        let scene_seed = derive_seed(trial_seed, TAG_SCENE);
        let scene = match build_scene(cfg.task, scene_seed, cfg.camera_resolution) {
            Ok(s) => s,
            Err(_) => {
                stats.skipped_scenes += 1;
                continue;
            }
        };

        let camera_root = derive_seed(trial_seed, TAG_CAMERA);
        let mut view = None;
        for attempt in 0..CAMERA_ATTEMPTS {
            let camera_seed = derive_seed(camera_root, attempt as u64);
            let scan = match render_scan(&scene, camera_seed, cfg.scene_points) {
                Ok(s) => s,
                Err(_) => continue,
            };
            let pool = applicable_possible_mask(&scene, &scan, cfg.task).possible_indices();
            if !pool.is_empty() {
                view = Some((camera_seed, scan, pool));
                break;
            }
        }
        let Some((camera_seed, scan, mut pool)) = view else {
            stats.skipped_scenes += 1;
            continue;
        };
        stats.scenes += 1;

        // Partial shuffle: the first `take` entries become a uniform draw of
        // distinct interaction points.
        let mut point_rng = rng_from_seed(derive_seed(trial_seed, TAG_POINT));
        let take = cfg.points_per_scene.min(pool.len());
        for j in 0..take {
            let r = point_rng.gen_range(j..pool.len());
            pool.swap(j, r);
        }

        let object_root = derive_seed(trial_seed, TAG_OBJECT);
        for (j, &idx) in pool[..take].iter().enumerate() {
            if positives >= cfg.target_positives {
                break;
            }
            if !used.insert((scene_seed, idx)) {
                continue;
            }
            let fi = (0..cfg.families.len()).min_by_key(|&i| (fam_pos[i], i)).unwrap();
            let (spec, object) = ObjectSpec::sample(cfg.families[fi], derive_seed(object_root, j as u64));
            let p = scan.cloud.points[idx];
            stats.trials += 1;
            let outcome = run_trial(&scene, &object, cfg.task, p);
            if outcome.success {
                positives += 1;
                fam_pos[fi] += 1;
            } else if negatives >= neg_cap {
                continue;
            } else {
                negatives += 1;
            }
            records.push(TrialRecord {
                task: cfg.task,
                scene_seed,
                camera_seed,
                object: spec,
                point_index: idx,
                point: p,
                label: outcome.success as u8,
                reason: outcome.reason,
            });
            if should_abort(stats.trials, positives, cfg.target_positives) {
                return Err(Error::Generation(format!(
                    "aborting collection: {positives} positives in {} trials",
                    stats.trials
                )));
            }
        }
    }
    Ok((records, stats))
}

/// Collect and write a dataset directory: `records.jsonl` + `manifest.json`.
pub fn collect_dataset(cfg: &CollectConfig, dir: &Path) -> Result<DatasetManifest> {
    let (records, _) = collect_records(cfg)?;
    std::fs::create_dir_all(dir)?;
    crate::data::record::write_records(&dir.join("records.jsonl"), &records)?;
    let manifest = DatasetManifest::tally(cfg.task, &records, cfg.scene_points, cfg.camera_resolution);
    manifest.write_json(&dir.join("manifest.json"))?;
    Ok(manifest)
}
