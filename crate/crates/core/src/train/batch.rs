//! Class-balanced batch assembly.

use std::sync::Arc;

use rand::Rng;

use crate::data::{Dataset, TrialRecord};
use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};
use crate::rng::SeedRng;
use crate::sim::render::Scan;

/// One training example: the rendered scene, the acting object's cloud, and
/// the labelled interaction point.
pub struct BatchItem {
    pub scan: Arc<Scan>,
    pub object: Arc<PointCloud>,
    pub point_index: usize,
    pub point: Point3,
    pub label: f64,
}

/// Draw `batch_size` examples, exactly half of them positive.  Both classes
/// are sampled uniformly with replacement, so a minority class simply
/// repeats.  Scans and object clouds come from the dataset's caches.
pub fn make_batch(
    dataset: &Dataset,
    batch_size: usize,
    object_points: usize,
    rng: &mut SeedRng,
) -> Result<Vec<BatchItem>> {
    if batch_size == 0 || batch_size % 2 != 0 {
        return Err(Error::invalid(format!(
            "batch size must be even and positive, got {batch_size}"
        )));
    }
    let positives = dataset.positives();
    let negatives = dataset.negatives();
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::invalid(
            "balanced batches need at least one record of each class",
        ));
    }
    let mut items = Vec::with_capacity(batch_size);
    let mut push = |record: &TrialRecord, items: &mut Vec<BatchItem>| -> Result<()> {
        items.push(BatchItem {
            scan: dataset.scan(record)?,
            object: dataset.object_cloud(record, object_points)?,
            point_index: record.point_index,
            point: record.point,
            label: record.label as f64,
        });
        Ok(())
    };
    for _ in 0..batch_size / 2 {
        let r = &dataset.records[positives[rng.gen_range(0..positives.len())]];
        push(r, &mut items)?;
    }
    for _ in 0..batch_size / 2 {
        let r = &dataset.records[negatives[rng.gen_range(0..negatives.len())]];
        push(r, &mut items)?;
    }
    Ok(items)
}
