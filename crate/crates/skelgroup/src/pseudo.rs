//! Cluster-derived action labels: per-actor descriptors are PCA-whitened,
//! L2-normalized and k-means clustered; cluster ids then stand in for action
//! annotations during training.
//!
//! Features can come from an external file (text or binary) or from the
//! built-in descriptor computed directly off the pose and motion streams, so
//! the pipeline runs without any pretrained feature extractor.

use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::streams::assemble_streams;
use crate::{DetRng, Error, Result};

/// Identifies the actor a feature row describes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeatureId {
    pub clip_id: String,
    pub actor_index: usize,
}

/// Dense row-major feature rows with one id per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    ids: Vec<FeatureId>,
    data: Vec<f64>,
    dim: usize,
}

impl FeatureMatrix {
    pub fn from_rows(ids: Vec<FeatureId>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if ids.len() != rows.len() {
            return Err(Error::Config(format!(
                "feature matrix has {} ids but {} rows",
                ids.len(),
                rows.len()
            )));
        }
        let dim = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(ids.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::Config(format!(
                    "feature row {i} has dim {} but row 0 has dim {dim}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        let m = FeatureMatrix { ids, data, dim };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.ids.len());
        for id in &self.ids {
            if !seen.insert(id) {
                return Err(Error::Config(format!(
                    "duplicate feature id {}:{}",
                    id.clip_id, id.actor_index
                )));
            }
        }
        if let Some(pos) = self.data.iter().position(|v| !v.is_finite()) {
            let row = pos / self.dim.max(1);
            return Err(Error::Config(format!(
                "non-finite feature value in row {row}"
            )));
        }
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[FeatureId] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct PseudoConfig {
    /// Principal components kept before clustering (clamped to the feature
    /// dimension by the pipeline).
    pub pca_dim: usize,
    /// Number of clusters, i.e. the number of manufactured action classes.
    pub k: usize,
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for PseudoConfig {
    fn default() -> Self {
        PseudoConfig { pca_dim: 256, k: 20, max_iters: 100, restarts: 5, seed: 0 }
    }
}

impl PseudoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pca_dim == 0 {
            return Err(Error::Config("pca_dim must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("cluster count k must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        Ok(())
    }
}

/// Hand-crafted per-actor descriptor: temporal mean of the normalized pose,
/// temporal standard deviation of the pose, and mean absolute motion, each
/// per joint and channel, concatenated to a `9 * joints` vector. Padded
/// actor slots produce no row.
pub fn stand_in_features(ds: &Dataset) -> Result<FeatureMatrix> {
    ds.ensure_valid()?;
    let n = ds.layout.n_joints;
    let t = ds.n_frames();
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for clip in &ds.clips {
        let streams = assemble_streams(clip, &ds.layout, false)?;
        for k in 0..clip.actors.len() {
            if !clip.mask[k] {
                continue;
            }
            let pose = crate::streams::StreamTensors::actor_block(&streams.pose, k);
            let motion = crate::streams::StreamTensors::actor_block(&streams.motion, k);
            let mut row = vec![0.0; 9 * n];
            for j in 0..n {
                for c in 0..3 {
                    let series = (0..t).map(|f| pose[(f * n + j) * 3 + c]);
                    let mean = series.clone().sum::<f64>() / t as f64;
                    let var =
                        series.map(|v| (v - mean) * (v - mean)).sum::<f64>() / t as f64;
                    let abs_motion = (0..t)
                        .map(|f| motion[(f * n + j) * 3 + c].abs())
                        .sum::<f64>()
                        / t as f64;
                    row[j * 3 + c] = mean;
                    row[3 * n + j * 3 + c] = var.sqrt();
                    row[6 * n + j * 3 + c] = abs_motion;
                }
            }
            ids.push(FeatureId { clip_id: clip.clip_id.clone(), actor_index: k });
            rows.push(row);
        }
    }
    FeatureMatrix::from_rows(ids, rows)
}

/// Ratio below which a component's variance (relative to the leading one)
/// counts as numerically zero and is dropped.
const COMPONENT_VARIANCE_FLOOR: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 60;

#[derive(Debug, Clone)]
pub struct PcaOutcome {
    pub features: FeatureMatrix,
    /// Components requested but dropped for having (numerically) no variance.
    pub dropped_components: usize,
    /// Singular values of the centered data for the kept components.
    pub singular_values: Vec<f64>,
}

/// One-sided Jacobi orthogonalization of the columns of an n x d matrix
/// stored column-major. On return the columns are mutually orthogonal; each
/// column is a left singular vector scaled by its singular value.
fn jacobi_orthogonalize(cols: &mut [Vec<f64>]) -> Result<()> {
    let d = cols.len();
    let tol = 1e-12;
    // Columns this far below the total scale are numerically zero; rotating
    // them only chases rounding noise and never converges. They fall well
    // under the variance floor, so skipping them cannot affect kept output.
    let frob_sq: f64 = cols.iter().flatten().map(|v| v * v).sum();
    let floor = frob_sq * 1e-24;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut converged = true;
        for p in 0..d {
            for q in (p + 1)..d {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for (&vp, &vq) in cols[p].iter().zip(&cols[q]) {
                    alpha += vp * vp;
                    beta += vq * vq;
                    gamma += vp * vq;
                }
                if alpha <= floor || beta <= floor {
                    continue;
                }
                if gamma.abs() <= tol * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                converged = false;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                let (cp, cq) = (&mut left[p], &mut right[0]);
                for i in 0..cp.len() {
                    let vp = cp[i];
                    let vq = cq[i];
                    cp[i] = c * vp - s * vq;
                    cq[i] = s * vp + c * vq;
                }
            }
        }
        if converged {
            return Ok(());
        }
    }
    Err(Error::NoConvergence {
        routine: "one-sided Jacobi singular value decomposition",
        iters: JACOBI_MAX_SWEEPS,
    })
}

/// Centers the rows, projects them onto the top `pca_dim` principal
/// components, and rescales each component so the covariance of the output
/// (over these same rows) is the identity. Directions whose variance is
/// below [`COMPONENT_VARIANCE_FLOOR`] of the leading one are dropped, so the
/// output dimension can be smaller than requested.
pub fn pca_whiten(feats: &FeatureMatrix, pca_dim: usize) -> Result<PcaOutcome> {
    feats.validate()?;
    let n = feats.n_rows();
    let d = feats.dim();
    if n <= pca_dim {
        return Err(Error::Config(format!(
            "whitening needs more samples than components: {n} rows for pca_dim {pca_dim}"
        )));
    }
    if d == 0 {
        return Err(Error::Config("cannot whiten zero-dimensional features".into()));
    }

    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(feats.row(i)) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    // Centered data as columns so the Jacobi sweeps work on contiguous runs.
    let mut cols: Vec<Vec<f64>> = (0..d)
        .map(|j| (0..n).map(|i| feats.row(i)[j] - mean[j]).collect())
        .collect();
    jacobi_orthogonalize(&mut cols)?;

    let mut order: Vec<(f64, usize)> = cols
        .iter()
        .enumerate()
        .map(|(j, col)| (col.iter().map(|v| v * v).sum::<f64>().sqrt(), j))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let leading = order[0].0;
    if leading == 0.0 {
        return Err(Error::Config(
            "features have no variance; nothing to whiten".into(),
        ));
    }
    let keep: Vec<(f64, usize)> = order
        .into_iter()
        .take(pca_dim)
        .filter(|(sigma, _)| sigma * sigma >= COMPONENT_VARIANCE_FLOOR * leading * leading)
        .collect();
    let dropped = pca_dim.min(d) - keep.len();

    // Each kept column is u_j * sigma_j; dividing by sigma_j and scaling by
    // sqrt(n - 1) makes the sample covariance exactly the identity.
    let scale = ((n - 1) as f64).sqrt();
    let r = keep.len();
    let mut data = vec![0.0; n * r];
    let mut singular_values = Vec::with_capacity(r);
    for (out_j, (sigma, j)) in keep.iter().enumerate() {
        singular_values.push(*sigma);
        for i in 0..n {
            data[i * r + out_j] = cols[*j][i] / sigma * scale;
        }
    }
    Ok(PcaOutcome {
        features: FeatureMatrix { ids: feats.ids.clone(), data, dim: r },
        dropped_components: dropped,
        singular_values,
    })
}

/// Scales every row to unit Euclidean norm. All-zero rows are left as zeros;
/// their indices are returned.
pub fn l2_normalize(feats: &FeatureMatrix) -> (FeatureMatrix, Vec<usize>) {
    let mut out = feats.clone();
    let mut zero_rows = Vec::new();
    let dim = out.dim;
    for i in 0..out.n_rows() {
        let row = &mut out.data[i * dim..(i + 1) * dim];
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            zero_rows.push(i);
        } else {
            for v in row {
                *v /= norm;
            }
        }
    }
    (out, zero_rows)
}

#[derive(Debug, Clone)]
pub struct KMeansOutcome {
    /// Cluster id per feature row.
    pub assignments: Vec<usize>,
    /// k x dim, row-major.
    pub centroids: Vec<f64>,
    pub inertia: f64,
    /// Inertia after each assignment step of the winning restart.
    pub inertia_trace: Vec<f64>,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest_centroid(row: &[f64], centroids: &[f64], dim: usize, k: usize) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for c in 0..k {
        let d = squared_distance(row, &centroids[c * dim..(c + 1) * dim]);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    (best, best_d)
}

/// Weighted sampling of centroid seeds: the first uniformly, the rest with
/// probability proportional to squared distance from the nearest seed so far.
fn kmeans_plus_plus(feats: &FeatureMatrix, k: usize, rng: &mut DetRng) -> Vec<f64> {
    let n = feats.n_rows();
    let dim = feats.dim();
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centroids.extend_from_slice(feats.row(first));
    let mut dist2: Vec<f64> = (0..n)
        .map(|i| squared_distance(feats.row(i), feats.row(first)))
        .collect();
    for c in 1..k {
        let total: f64 = dist2.iter().sum();
        let pick = if total > 0.0 {
            let mut threshold = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, d) in dist2.iter().enumerate() {
                threshold -= d;
                if threshold <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            // All remaining mass is zero (duplicate points); any row works.
            rng.random_range(0..n)
        };
        let start = c * dim;
        centroids.extend_from_slice(feats.row(pick));
        for (i, best) in dist2.iter_mut().enumerate() {
            let d = squared_distance(feats.row(i), &centroids[start..start + dim]);
            if d < *best {
                *best = d;
            }
        }
    }
    centroids
}

fn lloyd(
    feats: &FeatureMatrix,
    mut centroids: Vec<f64>,
    k: usize,
    max_iters: usize,
) -> (Vec<usize>, Vec<f64>, f64, Vec<f64>) {
    let n = feats.n_rows();
    let dim = feats.dim();
    let mut assignments = vec![usize::MAX; n];
    let mut inertia = f64::INFINITY;
    let mut trace = Vec::new();
    for _ in 0..max_iters {
        let step: Vec<(usize, f64)> = (0..n)
            .into_par_iter()
            .map(|i| nearest_centroid(feats.row(i), &centroids, dim, k))
            .collect();
        let new_assignments: Vec<usize> = step.iter().map(|&(c, _)| c).collect();
        inertia = step.iter().map(|&(_, d)| d).sum();
        trace.push(inertia);
        if new_assignments == assignments {
            break;
        }
        assignments = new_assignments;

        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for (i, &c) in assignments.iter().enumerate() {
            counts[c] += 1;
            for (s, v) in sums[c * dim..(c + 1) * dim].iter_mut().zip(feats.row(i)) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for (dst, s) in centroids[c * dim..(c + 1) * dim]
                    .iter_mut()
                    .zip(&sums[c * dim..(c + 1) * dim])
                {
                    *dst = s / counts[c] as f64;
                }
            } else {
                // Re-seed an empty cluster with the point farthest from its
                // current centroid (lowest index on ties).
                let far = (0..n)
                    .map(|i| {
                        squared_distance(
                            feats.row(i),
                            &centroids[assignments[i] * dim..(assignments[i] + 1) * dim],
                        )
                    })
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
                    .map(|(i, _)| i)
                    .unwrap();
                centroids[c * dim..(c + 1) * dim].copy_from_slice(feats.row(far));
            }
        }
    }
    (assignments, centroids, inertia, trace)
}

/// k-means with k-means++ seeding, Lloyd iterations to an assignment
/// fixpoint, empty-cluster re-seeding, and best-of-`restarts` selection by
/// inertia. Deterministic per seed.
pub fn kmeans(
    feats: &FeatureMatrix,
    k: usize,
    max_iters: usize,
    restarts: usize,
    seed: u64,
) -> Result<KMeansOutcome> {
    feats.validate()?;
    let n = feats.n_rows();
    if n < k {
        return Err(Error::Config(format!(
            "k-means needs at least as many rows as clusters: {n} rows for k = {k}"
        )));
    }
    if k == 0 || max_iters == 0 || restarts == 0 {
        return Err(Error::Config(
            "k, max_iters and restarts must all be at least 1".into(),
        ));
    }
    let mut rng = DetRng::seed_from_u64(seed);
    let mut best: Option<KMeansOutcome> = None;
    for _ in 0..restarts {
        let seeds = kmeans_plus_plus(feats, k, &mut rng);
        let (assignments, centroids, inertia, trace) = lloyd(feats, seeds, k, max_iters);
        if best.as_ref().is_none_or(|b| inertia < b.inertia) {
            best = Some(KMeansOutcome { assignments, centroids, inertia, inertia_trace: trace });
        }
    }
    Ok(best.unwrap())
}

/// One row of the assignment output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoAssignment {
    pub clip_id: String,
    pub actor_index: usize,
    pub cluster: usize,
}

pub fn assignments_from(ids: &[FeatureId], clusters: &[usize]) -> Vec<PseudoAssignment> {
    ids.iter()
        .zip(clusters)
        .map(|(id, &c)| PseudoAssignment {
            clip_id: id.clip_id.clone(),
            actor_index: id.actor_index,
            cluster: c,
        })
        .collect()
}

/// Copies the dataset with every present actor's action label replaced by
/// its cluster id; the action class list becomes one name per cluster. The
/// input dataset is untouched, so the original labels stay available for
/// evaluation. Mirror augmentation has no known cluster involution, so the
/// copy drops the label flip map.
pub fn assign_pseudolabels(
    ds: &Dataset,
    assignments: &[PseudoAssignment],
) -> Result<Dataset> {
    let mut table = std::collections::HashMap::with_capacity(assignments.len());
    for a in assignments {
        if table.insert((a.clip_id.as_str(), a.actor_index), a.cluster).is_some() {
            return Err(Error::InvalidDataset(format!(
                "duplicate assignment for {}:{}",
                a.clip_id, a.actor_index
            )));
        }
    }
    let k = assignments.iter().map(|a| a.cluster + 1).max().unwrap_or(1);

    let mut out = ds.clone();
    let mut used = 0usize;
    let mut missing: Vec<String> = Vec::new();
    for clip in &mut out.clips {
        for (idx, actor) in clip.actors.iter_mut().enumerate() {
            if !clip.mask[idx] {
                actor.action_label = None;
                continue;
            }
            match table.get(&(clip.clip_id.as_str(), idx)) {
                Some(&c) => {
                    actor.action_label = Some(c);
                    used += 1;
                }
                None => missing.push(format!("{}:{idx}", clip.clip_id)),
            }
        }
    }
    if !missing.is_empty() {
        let shown = missing.iter().take(20).cloned().collect::<Vec<_>>().join(", ");
        let extra = if missing.len() > 20 {
            format!(" and {} more", missing.len() - 20)
        } else {
            String::new()
        };
        return Err(Error::InvalidDataset(format!(
            "no cluster assignment for: {shown}{extra}"
        )));
    }
    if used != assignments.len() {
        return Err(Error::InvalidDataset(format!(
            "{} assignments do not match any present actor",
            assignments.len() - used
        )));
    }
    out.action_classes = (0..k).map(|c| format!("cluster_{c:02}")).collect();
    out.label_flip_map = None;
    out.ensure_valid()?;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct PseudoPipelineOutcome {
    pub dataset: Dataset,
    pub assignments: Vec<PseudoAssignment>,
    pub inertia: f64,
    /// Dimension actually clustered after whitening.
    pub effective_dim: usize,
    pub dropped_components: usize,
    pub zero_rows: usize,
}

/// Whiten, normalize, cluster, and relabel in one pass. `pca_dim` is clamped
/// to the feature dimension and the sample count so default configs work
/// with small descriptors and small datasets.
pub fn run_pseudo_pipeline(
    ds: &Dataset,
    feats: &FeatureMatrix,
    cfg: &PseudoConfig,
) -> Result<PseudoPipelineOutcome> {
    cfg.validate()?;
    let pca_dim = cfg
        .pca_dim
        .min(feats.dim())
        .min(feats.n_rows().saturating_sub(1))
        .max(1);
    let pca = pca_whiten(feats, pca_dim)?;
    let (normed, zero_rows) = l2_normalize(&pca.features);
    let clusters = kmeans(&normed, cfg.k, cfg.max_iters, cfg.restarts, cfg.seed)?;
    let assignments = assignments_from(normed.ids(), &clusters.assignments);
    let dataset = assign_pseudolabels(ds, &assignments)?;
    Ok(PseudoPipelineOutcome {
        dataset,
        assignments,
        inertia: clusters.inertia,
        effective_dim: normed.dim(),
        dropped_components: pca.dropped_components,
        zero_rows: zero_rows.len(),
    })
}

/// Text format: header `n_samples dim`, then one `clip_id actor_index v...`
/// line per row.
pub fn write_features_text(path: &Path, feats: &FeatureMatrix) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "{} {}", feats.n_rows(), feats.dim())?;
        for (i, id) in feats.ids().iter().enumerate() {
            write!(w, "{} {}", id.clip_id, id.actor_index)?;
            for v in feats.row(i) {
                write!(w, " {v}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    };
    emit().map_err(|e| Error::io(path, e))
}

pub fn read_features_text(path: &Path) -> Result<FeatureMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::format(path, "empty feature file"))?;
    let mut parts = header.split_whitespace();
    let parse_count = |s: Option<&str>, what: &str| -> Result<usize> {
        s.and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::format(path, format!("bad {what} in header {header:?}")))
    };
    let n = parse_count(parts.next(), "row count")?;
    let dim = parse_count(parts.next(), "dimension")?;
    let mut ids = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n);
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let clip_id = parts
            .next()
            .ok_or_else(|| Error::format(path, format!("line {}: missing clip id", lineno + 2)))?
            .to_string();
        let actor_index: usize = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| {
                Error::format(path, format!("line {}: bad actor index", lineno + 2))
            })?;
        let row: Vec<f64> = parts
            .map(|v| {
                v.parse::<f64>().map_err(|_| {
                    Error::format(path, format!("line {}: bad value {v:?}", lineno + 2))
                })
            })
            .collect::<Result<_>>()?;
        if row.len() != dim {
            return Err(Error::format(
                path,
                format!("line {}: expected {dim} values, found {}", lineno + 2, row.len()),
            ));
        }
        ids.push(FeatureId { clip_id, actor_index });
        rows.push(row);
    }
    if ids.len() != n {
        return Err(Error::format(
            path,
            format!("header promises {n} rows, file has {}", ids.len()),
        ));
    }
    FeatureMatrix::from_rows(ids, rows)
}

/// Binary format shared with the stream dumps: four u32 little-endian dims
/// `[rows, dim, 1, 1]` followed by row-major f32 values. Ids are not stored;
/// the caller supplies them in row order (normally from dataset traversal).
pub fn write_features_binary(path: &Path, feats: &FeatureMatrix) -> Result<()> {
    let mut bytes =
        Vec::with_capacity(16 + feats.data.len() * std::mem::size_of::<f32>());
    for d in [feats.n_rows() as u32, feats.dim() as u32, 1, 1] {
        bytes.extend_from_slice(&d.to_le_bytes());
    }
    for v in &feats.data {
        bytes.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_features_binary(path: &Path, ids: Vec<FeatureId>) -> Result<FeatureMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 16 {
        return Err(Error::format(path, "truncated header"));
    }
    let dim_at = |i: usize| {
        u32::from_le_bytes(bytes[i * 4..i * 4 + 4].try_into().unwrap()) as usize
    };
    let (n, dim, one_a, one_b) = (dim_at(0), dim_at(1), dim_at(2), dim_at(3));
    if one_a != 1 || one_b != 1 {
        return Err(Error::format(
            path,
            format!("expected trailing dims 1 1, found {one_a} {one_b}"),
        ));
    }
    let expected = 16 + n * dim * 4;
    if bytes.len() != expected {
        return Err(Error::format(
            path,
            format!("expected {expected} bytes for {n} x {dim}, found {}", bytes.len()),
        ));
    }
    if ids.len() != n {
        return Err(Error::format(
            path,
            format!("file has {n} rows but {} ids were supplied", ids.len()),
        ));
    }
    let data: Vec<f64> = bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    let m = FeatureMatrix { ids, data, dim };
    m.validate()?;
    Ok(m)
}

/// Text lines `clip_id actor_index cluster_id`.
pub fn write_assignments(path: &Path, assignments: &[PseudoAssignment]) -> Result<()> {
    let mut out = String::new();
    for a in assignments {
        out.push_str(&format!("{} {} {}\n", a.clip_id, a.actor_index, a.cluster));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_assignments(path: &Path) -> Result<Vec<PseudoAssignment>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::format(
                path,
                format!("line {}: expected 3 fields, found {}", lineno + 1, fields.len()),
            ));
        }
        let parse = |s: &str, what: &str| -> Result<usize> {
            s.parse().map_err(|_| {
                Error::format(path, format!("line {}: bad {what} {s:?}", lineno + 1))
            })
        };
        out.push(PseudoAssignment {
            clip_id: fields[0].to_string(),
            actor_index: parse(fields[1], "actor index")?,
            cluster: parse(fields[2], "cluster id")?,
        });
    }
    Ok(out)
}
