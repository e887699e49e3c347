//! Network assembly for every variant, the kernel query, training
//! forward/backward at a labelled point, and dense heatmap prediction.

use ndarray::{arr2, concatenate, s, Array2, Axis};
use rayon::prelude::*;
use serde_json::json;
use std::path::Path;

use super::{Heatmap, Variant};
use crate::backbone::{
    scatter_idw, ObjectCache, ObjectEncoder, SceneCache, SceneEncoder,
};
use crate::error::{Error, Result};
use crate::geometry::{
    furthest_point_sample, idw_combine, idw_interpolate, knn_into, Neighbor, Point3, PointCloud,
};
use crate::nn::{
    load_checkpoint, load_into, max_pool_all, max_pool_segments_backward, save_checkpoint,
    Activation, BnStats, FeatureBatch, GradStore, Linear, Mlp, MlpCache, ParamSet,
};
use crate::preset::ScaleConfig;
use crate::rng::rng_from_seed;

/// Scores “does interacting at this scene point succeed?” for a posed
/// acting-object cloud against a scene scan.
///
/// Construction is deterministic in `(variant, config, seed)`; two models
/// built the same way share parameter names and shapes, which is what the
/// checkpoint loader validates against.
pub struct AffordanceModel {
    variant: Variant,
    config: ScaleConfig,
    params: ParamSet,
    scene_enc: Option<SceneEncoder>,
    object_enc: Option<ObjectEncoder>,
    bbox_global: Option<Mlp>,
    bbox_point: Option<Mlp>,
    scene_global_head: Option<Linear>,
    pos_embed: Option<Mlp>,
    kernel: Option<Mlp>,
    critic: Mlp,
}

/// Intermediates of one supervised forward pass.
pub struct TrainCache {
    scene: Option<SceneCache>,
    object: Option<ObjectCache>,
    bbox_global: Option<MlpCache>,
    bbox_point: Option<MlpCache>,
    /// Pooling of the scene's coarsest level: argmax, row count, head input.
    scene_pool: Option<(Vec<Vec<usize>>, usize, FeatureBatch)>,
    pos_embed: Option<MlpCache>,
    kernel_neighbors: Option<Vec<Vec<Neighbor>>>,
    kernel_mlp: Option<MlpCache>,
    kernel_argmax: Option<Vec<Vec<usize>>>,
    kernel_rows: usize,
    critic: MlpCache,
    point_index: usize,
    scene_rows: usize,
    scene_cols: usize,
    object_rows: usize,
    object_cols: usize,
}

/// Everything that can be computed once per (scene, object) pair and shared
/// across seed evaluations.
pub struct Frozen {
    s_pts: Vec<Point3>,
    f_s: FeatureBatch,
    kernel_pts: Vec<Point3>,
    f_o: FeatureBatch,
    f_g: FeatureBatch,
    scene_global: Option<FeatureBatch>,
}

fn row3(p: Point3) -> FeatureBatch {
    arr2(&[[p.x, p.y, p.z]])
}

fn hcat(parts: &[ndarray::ArrayView2<f64>]) -> FeatureBatch {
    concatenate(Axis(1), parts).expect("matching row counts")
}

/// Raw per-point scene description for the position+normal variant.
fn posnor_features(s_pts: &[Point3], scene: &PointCloud) -> Result<FeatureBatch> {
    let normals = scene
        .normals
        .as_ref()
        .ok_or_else(|| Error::invalid("this variant needs scene normals"))?;
    let mut f = Array2::zeros((s_pts.len(), 6));
    for (r, (p, n)) in s_pts.iter().zip(normals).enumerate() {
        f[[r, 0]] = p.x;
        f[[r, 1]] = p.y;
        f[[r, 2]] = p.z;
        f[[r, 3]] = n.x;
        f[[r, 4]] = n.y;
        f[[r, 5]] = n.z;
    }
    Ok(f)
}

fn bbox_minmax(o_pts: &[Point3]) -> (Point3, Point3) {
    let mut lo = o_pts[0];
    let mut hi = o_pts[0];
    for p in o_pts {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        lo.z = lo.z.min(p.z);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
        hi.z = hi.z.max(p.z);
    }
    (lo, hi)
}

fn bbox_extents(o_pts: &[Point3]) -> FeatureBatch {
    let (lo, hi) = bbox_minmax(o_pts);
    arr2(&[[lo.x, lo.y, lo.z, hi.x, hi.y, hi.z]])
}

/// The eight corners of the axis-aligned box, in a fixed z-major order.
fn bbox_corners(o_pts: &[Point3]) -> Vec<Point3> {
    let (lo, hi) = bbox_minmax(o_pts);
    let mut corners = Vec::with_capacity(8);
    for &z in &[lo.z, hi.z] {
        for &y in &[lo.y, hi.y] {
            for &x in &[lo.x, hi.x] {
                corners.push(Point3::new(x, y, z));
            }
        }
    }
    corners
}

/// Evaluate the scene feature field at every kernel point translated to the
/// seed: the interpolation that makes the acting object an explicit query
/// kernel.  Returns the features and the neighbour lists for the adjoint.
fn query_kernel(
    s_pts: &[Point3],
    f_s: &FeatureBatch,
    kernel_pts: &[Point3],
    seed: Point3,
    t: usize,
) -> (FeatureBatch, Vec<Vec<Neighbor>>) {
    let t = t.min(s_pts.len());
    let cols = f_s.ncols();
    let mut out = Array2::zeros((kernel_pts.len(), cols));
    let mut neighbors = Vec::with_capacity(kernel_pts.len());
    let mut nb = Vec::with_capacity(t);
    let mut blend = vec![0.0; cols];
    for (r, &kp) in kernel_pts.iter().enumerate() {
        knn_into(kp + seed, s_pts, t, &mut nb);
        idw_combine(&nb, f_s.view(), &mut blend);
        for (j, v) in blend.iter().enumerate() {
            out[[r, j]] = *v;
        }
        neighbors.push(nb.clone());
    }
    (out, neighbors)
}

impl AffordanceModel {
    pub fn new(variant: Variant, config: ScaleConfig, seed: u64) -> Result<AffordanceModel> {
        config.validate()?;
        let mut ps = ParamSet::new();
        let mut rng = rng_from_seed(seed);
        let t = config.idw_neighbors;
        let (f1, f2, f3, fg) =
            (config.scene_feat, config.object_feat, config.kernel_feat, config.global_feat);
        let scene_cols = if variant == Variant::BPosnor { 6 } else { f1 };
        let hidden = config.critic_mlp[1];

        let scene_enc = (variant != Variant::BPosnor).then(|| {
            SceneEncoder::new(&mut ps, &mut rng, "scene", &config.scene_encoder, t, f1)
        });
        let object_enc = (variant != Variant::BBbox).then(|| {
            ObjectEncoder::new(&mut ps, &mut rng, "object", &config.object_encoder, t, f2, fg)
        });
        let bbox_global = (variant == Variant::BBbox).then(|| {
            Mlp::new(
                &mut ps,
                &mut rng,
                "bbox_global",
                &[6, hidden, fg],
                false,
                Activation::Relu,
                Activation::None,
            )
        });
        let bbox_point = (variant == Variant::BBbox).then(|| {
            Mlp::new(
                &mut ps,
                &mut rng,
                "bbox_point",
                &[6, hidden, f2],
                false,
                Activation::Relu,
                Activation::None,
            )
        });
        let scene_global_head = (variant == Variant::B3branch).then(|| {
            let coarsest =
                *config.scene_encoder.sa.last().and_then(|s| s.mlp.last()).expect("plan");
            Linear::new(&mut ps, &mut rng, "scene_global", coarsest, f1)
        });
        let pos_embed = (variant == Variant::B3branch).then(|| {
            Mlp::new(
                &mut ps,
                &mut rng,
                "pos_embed",
                &[3, f3],
                false,
                Activation::Relu,
                Activation::Relu,
            )
        });
        let kernel = matches!(variant, Variant::Full | Variant::BPosnor | Variant::BBbox).then(
            || {
                let mut plan = config.kernel_mlp.clone();
                plan[0] = scene_cols + f2;
                Mlp::new(&mut ps, &mut rng, "kernel", &plan, true, Activation::Relu, Activation::Relu)
            },
        );
        let critic = {
            let mut plan = config.critic_mlp.clone();
            plan[0] = match variant {
                Variant::Full | Variant::BBbox => f3 + f1 + fg,
                Variant::BPosnor => f3 + 6 + fg,
                Variant::B3branch => f3 + f1 + fg,
                Variant::Ablated => f1 + fg,
            };
            Mlp::new(
                &mut ps,
                &mut rng,
                "critic",
                &plan,
                false,
                Activation::LeakyRelu,
                Activation::Sigmoid,
            )
        };

        Ok(AffordanceModel {
            variant,
            config,
            params: ps,
            scene_enc,
            object_enc,
            bbox_global,
            bbox_point,
            scene_global_head,
            pos_embed,
            kernel,
            critic,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn config(&self) -> &ScaleConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    fn check_inputs(&self, scene: &PointCloud, object: &PointCloud) -> Result<()> {
        if scene.is_empty() || object.is_empty() {
            return Err(Error::invalid("empty input cloud"));
        }
        if self.variant == Variant::BPosnor && scene.normals.is_none() {
            return Err(Error::invalid("variant b_posnor needs scene normals"));
        }
        Ok(())
    }

    /// Supervised forward pass at one labelled scene point.  Returns the
    /// success probability, the cache for [`Self::backward`], and the batch
    /// statistics of every batch-norm layer touched (in a fixed order).
    pub fn forward_train(
        &self,
        scene: &PointCloud,
        object: &PointCloud,
        point_index: usize,
    ) -> Result<(f64, TrainCache, Vec<BnStats>)> {
        self.check_inputs(scene, object)?;
        if point_index >= scene.len() {
            return Err(Error::invalid(format!(
                "point index {point_index} out of range for {} scene points",
                scene.len()
            )));
        }
        let ps = &self.params;
        let (s_pts, _) = scene.centered_points();
        let (o_pts, _) = object.centered_points();
        let p = s_pts[point_index];
        let mut stats = Vec::new();

        // Scene field.
        let mut scene_cache = None;
        let mut coarsest = None;
        let f_s = match &self.scene_enc {
            None => posnor_features(&s_pts, scene)?,
            Some(enc) => {
                let (f, co, c, st) = enc.forward_train(ps, &s_pts)?;
                stats.extend(st);
                scene_cache = Some(c);
                coarsest = Some(co);
                f
            }
        };

        // Kernel geometry and object features.
        let mut object_cache = None;
        let mut bbox_global_cache = None;
        let mut bbox_point_cache = None;
        let (kernel_pts, f_o, f_g) = match &self.object_enc {
            Some(enc) => {
                let (pp, fg, c, st) = enc.forward_train(ps, &o_pts)?;
                stats.extend(st);
                object_cache = Some(c);
                (o_pts.clone(), pp, fg)
            }
            None => {
                let e = bbox_extents(&o_pts);
                let (fg, cg, _) =
                    self.bbox_global.as_ref().expect("bbox global").forward_train(ps, &e)?;
                let (pf, cp, _) =
                    self.bbox_point.as_ref().expect("bbox point").forward_train(ps, &e)?;
                bbox_global_cache = Some(cg);
                bbox_point_cache = Some(cp);
                let corners = bbox_corners(&o_pts);
                let mut f_o = Array2::zeros((corners.len(), pf.ncols()));
                for mut row in f_o.rows_mut() {
                    row.assign(&pf.row(0));
                }
                (corners, f_o, fg)
            }
        };

        // Object-kernel convolution at the labelled point.
        let mut kernel_neighbors = None;
        let mut kernel_mlp_cache = None;
        let mut kernel_argmax = None;
        let mut kernel_rows = 0;
        let f_so = match &self.kernel {
            Some(kernel) => {
                let (queried, nbs) =
                    query_kernel(&s_pts, &f_s, &kernel_pts, p, self.config.idw_neighbors);
                let x = hcat(&[queried.view(), f_o.view()]);
                let (y, kc, st) = kernel.forward_train(ps, &x)?;
                stats.extend(st);
                let (pooled, am) = max_pool_all(&y);
                kernel_rows = x.nrows();
                kernel_neighbors = Some(nbs);
                kernel_mlp_cache = Some(kc);
                kernel_argmax = Some(am);
                Some(pooled)
            }
            None => None,
        };

        // Critic input.
        let mut scene_pool = None;
        let mut pos_embed_cache = None;
        let point_row = f_s.slice(s![point_index..point_index + 1, ..]);
        let input = match self.variant {
            Variant::Full | Variant::BPosnor | Variant::BBbox => {
                hcat(&[f_so.as_ref().expect("kernel output").view(), point_row, f_g.view()])
            }
            Variant::Ablated => hcat(&[point_row, f_g.view()]),
            Variant::B3branch => {
                let (pe, pec, _) =
                    self.pos_embed.as_ref().expect("pos embed").forward_train(ps, &row3(p))?;
                pos_embed_cache = Some(pec);
                let co = coarsest.as_ref().expect("scene trunk output");
                let (pooled, am) = max_pool_all(co);
                let sg = self.scene_global_head.as_ref().expect("head").forward(ps, &pooled);
                scene_pool = Some((am, co.nrows(), pooled));
                hcat(&[pe.view(), sg.view(), f_g.view()])
            }
        };

        let (out, critic_cache, _) = self.critic.forward_train(ps, &input)?;
        let pred = out[[0, 0]];

        let cache = TrainCache {
            scene: scene_cache,
            object: object_cache,
            bbox_global: bbox_global_cache,
            bbox_point: bbox_point_cache,
            scene_pool,
            pos_embed: pos_embed_cache,
            kernel_neighbors,
            kernel_mlp: kernel_mlp_cache,
            kernel_argmax,
            kernel_rows,
            critic: critic_cache,
            point_index,
            scene_rows: s_pts.len(),
            scene_cols: f_s.ncols(),
            object_rows: f_o.nrows(),
            object_cols: f_o.ncols(),
        };
        Ok((pred, cache, stats))
    }

    /// Accumulate gradients for one sample given `d(loss)/d(prediction)`.
    pub fn backward(&self, cache: &TrainCache, d_pred: f64, g: &mut GradStore) {
        let ps = &self.params;
        let d_out = arr2(&[[d_pred]]);
        let d_in = self.critic.backward(ps, &cache.critic, &d_out, g);
        let f3 = self.config.kernel_feat;
        let sc = cache.scene_cols;

        match self.variant {
            Variant::Full | Variant::BPosnor | Variant::BBbox => {
                let d_fso = d_in.slice(s![.., ..f3]).to_owned();
                let d_fsp = d_in.slice(s![.., f3..f3 + sc]);
                let d_fg = d_in.slice(s![.., f3 + sc..]).to_owned();

                let dy = max_pool_segments_backward(
                    &d_fso,
                    cache.kernel_argmax.as_ref().expect("kernel cache"),
                    cache.kernel_rows,
                );
                let dx = self.kernel.as_ref().expect("kernel").backward(
                    ps,
                    cache.kernel_mlp.as_ref().expect("kernel cache"),
                    &dy,
                    g,
                );
                let d_queried = dx.slice(s![.., ..sc]);
                let d_fo = dx.slice(s![.., sc..]).to_owned();

                let mut d_fs = scatter_idw(
                    cache.kernel_neighbors.as_ref().expect("kernel cache"),
                    d_queried,
                    cache.scene_rows,
                );
                {
                    let mut row = d_fs.row_mut(cache.point_index);
                    row += &d_fsp.row(0);
                }

                if let Some(enc) = &self.scene_enc {
                    enc.backward(ps, cache.scene.as_ref().expect("scene cache"), &d_fs, None, g);
                }
                match &self.object_enc {
                    Some(enc) => enc.backward(
                        ps,
                        cache.object.as_ref().expect("object cache"),
                        &d_fo,
                        &d_fg,
                        g,
                    ),
                    None => {
                        // Corner rows all share the one broadcast feature.
                        let d_pf = d_fo.sum_axis(Axis(0)).insert_axis(Axis(0));
                        self.bbox_point.as_ref().expect("bbox point").backward(
                            ps,
                            cache.bbox_point.as_ref().expect("bbox cache"),
                            &d_pf,
                            g,
                        );
                        self.bbox_global.as_ref().expect("bbox global").backward(
                            ps,
                            cache.bbox_global.as_ref().expect("bbox cache"),
                            &d_fg,
                            g,
                        );
                    }
                }
            }
            Variant::Ablated => {
                let d_fsp = d_in.slice(s![.., ..sc]);
                let d_fg = d_in.slice(s![.., sc..]).to_owned();
                let mut d_fs = Array2::zeros((cache.scene_rows, sc));
                {
                    let mut row = d_fs.row_mut(cache.point_index);
                    row += &d_fsp.row(0);
                }
                let enc = self.scene_enc.as_ref().expect("scene encoder");
                enc.backward(ps, cache.scene.as_ref().expect("scene cache"), &d_fs, None, g);
                let d_fo = Array2::zeros((cache.object_rows, cache.object_cols));
                let obj = self.object_enc.as_ref().expect("object encoder");
                obj.backward(ps, cache.object.as_ref().expect("object cache"), &d_fo, &d_fg, g);
            }
            Variant::B3branch => {
                let f1 = self.config.scene_feat;
                let d_pe = d_in.slice(s![.., ..f3]).to_owned();
                let d_sg = d_in.slice(s![.., f3..f3 + f1]).to_owned();
                let d_fg = d_in.slice(s![.., f3 + f1..]).to_owned();

                self.pos_embed.as_ref().expect("pos embed").backward(
                    ps,
                    cache.pos_embed.as_ref().expect("pos cache"),
                    &d_pe,
                    g,
                );

                let (argmax, rows, pooled) = cache.scene_pool.as_ref().expect("scene pool");
                let d_pooled =
                    self.scene_global_head.as_ref().expect("head").backward(ps, pooled, &d_sg, g);
                let d_coarsest = max_pool_segments_backward(&d_pooled, argmax, *rows);
                let d_fs = Array2::zeros((cache.scene_rows, self.config.scene_feat));
                let enc = self.scene_enc.as_ref().expect("scene encoder");
                enc.backward(
                    ps,
                    cache.scene.as_ref().expect("scene cache"),
                    &d_fs,
                    Some(&d_coarsest),
                    g,
                );

                let d_fo = Array2::zeros((cache.object_rows, cache.object_cols));
                let obj = self.object_enc.as_ref().expect("object encoder");
                obj.backward(ps, cache.object.as_ref().expect("object cache"), &d_fo, &d_fg, g);
            }
        }
    }

    /// Fold a batch's averaged batch-norm statistics into the running state.
    /// `stats` must be the per-layer sequence produced by `forward_train`.
    pub fn update_running(&mut self, stats: &[BnStats]) {
        let params = &mut self.params;
        let mut at = 0;
        if let Some(enc) = &self.scene_enc {
            enc.update_running(params, &stats[at..at + enc.bn_count()]);
            at += enc.bn_count();
        }
        if let Some(enc) = &self.object_enc {
            enc.update_running(params, &stats[at..at + enc.bn_count()]);
            at += enc.bn_count();
        }
        if let Some(kernel) = &self.kernel {
            kernel.update_running(params, &stats[at..at + kernel.bn_count()]);
            at += kernel.bn_count();
        }
        debug_assert_eq!(at, stats.len(), "statistics must cover every BN layer");
    }

    pub fn bn_count(&self) -> usize {
        self.scene_enc.as_ref().map_or(0, SceneEncoder::bn_count)
            + self.object_enc.as_ref().map_or(0, ObjectEncoder::bn_count)
            + self.kernel.as_ref().map_or(0, Mlp::bn_count)
    }

    // -----------------------------------------------------------------
    // Inference

    /// Compute every per-pair feature once (evaluation mode).
    pub fn freeze(&self, scene: &PointCloud, object: &PointCloud) -> Result<Frozen> {
        self.check_inputs(scene, object)?;
        let ps = &self.params;
        let (s_pts, _) = scene.centered_points();
        let (o_pts, _) = object.centered_points();

        let (f_s, coarsest) = match &self.scene_enc {
            Some(enc) => {
                let (f, co) = enc.forward_eval(ps, &s_pts)?;
                (f, Some(co))
            }
            None => (posnor_features(&s_pts, scene)?, None),
        };
        let (kernel_pts, f_o, f_g) = match &self.object_enc {
            Some(enc) => {
                let (pp, fg) = enc.forward_eval(ps, &o_pts)?;
                (o_pts, pp, fg)
            }
            None => {
                let e = bbox_extents(&o_pts);
                let fg = self.bbox_global.as_ref().expect("bbox global").forward_eval(ps, &e);
                let pf = self.bbox_point.as_ref().expect("bbox point").forward_eval(ps, &e);
                let corners = bbox_corners(&o_pts);
                let mut f_o = Array2::zeros((corners.len(), pf.ncols()));
                for mut row in f_o.rows_mut() {
                    row.assign(&pf.row(0));
                }
                (corners, f_o, fg)
            }
        };
        let scene_global = match (&self.scene_global_head, coarsest) {
            (Some(head), Some(co)) => {
                let (pooled, _) = max_pool_all(&co);
                Some(head.forward(ps, &pooled))
            }
            _ => None,
        };
        Ok(Frozen { s_pts, f_s, kernel_pts, f_o, f_g, scene_global })
    }

    /// Critic score at one scene point of a frozen pair.
    pub fn critic_value(&self, fz: &Frozen, index: usize) -> f64 {
        let ps = &self.params;
        let p = fz.s_pts[index];
        let point_row = fz.f_s.slice(s![index..index + 1, ..]);
        let input = match self.variant {
            Variant::Full | Variant::BPosnor | Variant::BBbox => {
                let (queried, _) = query_kernel(
                    &fz.s_pts,
                    &fz.f_s,
                    &fz.kernel_pts,
                    p,
                    self.config.idw_neighbors,
                );
                let x = hcat(&[queried.view(), fz.f_o.view()]);
                let y = self.kernel.as_ref().expect("kernel").forward_eval(ps, &x);
                let (pooled, _) = max_pool_all(&y);
                hcat(&[pooled.view(), point_row, fz.f_g.view()])
            }
            Variant::Ablated => hcat(&[point_row, fz.f_g.view()]),
            Variant::B3branch => {
                let pe = self.pos_embed.as_ref().expect("pos embed").forward_eval(ps, &row3(p));
                let sg = fz.scene_global.as_ref().expect("scene global");
                hcat(&[pe.view(), sg.view(), fz.f_g.view()])
            }
        };
        self.critic.forward_eval(ps, &input)[[0, 0]]
    }

    /// Evaluation-mode score at a single scene point.
    pub fn predict_point(
        &self,
        scene: &PointCloud,
        object: &PointCloud,
        point_index: usize,
    ) -> Result<f64> {
        if point_index >= scene.len() {
            return Err(Error::invalid(format!(
                "point index {point_index} out of range for {} scene points",
                scene.len()
            )));
        }
        let fz = self.freeze(scene, object)?;
        Ok(self.critic_value(&fz, point_index))
    }

    /// Dense heatmap: score `k` furthest-point seeds, then spread the seed
    /// scores to every scene point by inverse-distance interpolation.
    pub fn predict_heatmap(
        &self,
        scene: &PointCloud,
        object: &PointCloud,
        k: usize,
    ) -> Result<Heatmap> {
        let n = scene.len();
        if k == 0 || k > n {
            return Err(Error::invalid(format!("k={k} seeds out of range for {n} points")));
        }
        let fz = self.freeze(scene, object)?;
        let seeds = furthest_point_sample(&fz.s_pts, k, 0)?;
        let seed_vals: Vec<f64> =
            seeds.indices.par_iter().map(|&i| self.critic_value(&fz, i)).collect();

        let seed_pts: Vec<Point3> = seeds.indices.iter().map(|&i| fz.s_pts[i]).collect();
        let vals = Array2::from_shape_vec((k, 1), seed_vals.clone()).expect("k rows");
        let mut seed_of_point = vec![usize::MAX; n];
        for (s, &i) in seeds.indices.iter().enumerate() {
            seed_of_point[i] = s;
        }
        let t = self.config.idw_neighbors.min(k);
        let values: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let v = if seed_of_point[i] != usize::MAX {
                    seed_vals[seed_of_point[i]]
                } else {
                    idw_interpolate(fz.s_pts[i], &seed_pts, vals.view(), t)
                        .expect("valid neighbour count")[0]
                };
                v.clamp(0.0, 1.0)
            })
            .collect();
        Ok(Heatmap { values, seeds })
    }

    // -----------------------------------------------------------------
    // Persistence

    pub fn save(&self, path: &Path) -> Result<()> {
        let config = json!({ "variant": self.variant, "scale": self.config });
        save_checkpoint(path, &config, &self.params)
    }

    pub fn load(path: &Path) -> Result<AffordanceModel> {
        let (config, loaded) = load_checkpoint(path)?;
        let variant: Variant = serde_json::from_value(config["variant"].clone())
            .map_err(|e| Error::format(format!("checkpoint variant: {e}")))?;
        let scale: ScaleConfig = serde_json::from_value(config["scale"].clone())
            .map_err(|e| Error::format(format!("checkpoint scale config: {e}")))?;
        let mut model = AffordanceModel::new(variant, scale, 0)?;
        load_into(&mut model.params, &loaded)?;
        Ok(model)
    }
}
