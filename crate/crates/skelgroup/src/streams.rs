//! Turns a clip into the three model input streams.
//!
//! * **pose**: each actor's skeleton, per frame, centered on the mid-hip and
//!   scaled by that frame's torso length. Captures body configuration,
//!   independent of where the actor stands.
//! * **motion**: temporal differences of consecutive pose frames (all three
//!   channels), zero-padded at the final frame. Captures how the
//!   configuration changes.
//! * **pivot_diff**: per-joint offsets from the scene's pivot actor on raw
//!   coordinates, scaled by the pivot's clip-mean torso length. The only
//!   stream that sees where actors are relative to each other.
//!
//! All streams are `[K, T, N, 3]` tensors. Masked-out actor slots are zero
//! everywhere, and joints with zero confidence contribute zeros after each
//! stream's transform.

use crate::dataset::{ClipRecord, Frame, SkeletonLayout};
use crate::nn::Tensor;
use crate::{Error, Result};

/// Torso lengths below this are treated as degenerate and clamped.
pub const TORSO_EPS: f64 = 1e-6;

/// The three assembled input streams for one clip.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamTensors {
    /// Normalized per-actor poses, `[K, T, N, 3]`.
    pub pose: Tensor,
    /// Temporal pose differences, `[K, T, N, 3]`.
    pub motion: Tensor,
    /// Offsets from the pivot actor, `[K, T, N, 3]`.
    pub pivot_diff: Tensor,
    /// Which actor slot served as the pivot.
    pub pivot_index: usize,
}

impl StreamTensors {
    /// The `[T, N, 3]` block of one actor within a stream tensor.
    pub fn actor_block(stream: &Tensor, k: usize) -> &[f64] {
        let per_actor: usize = stream.shape()[1..].iter().product();
        &stream.data()[k * per_actor..(k + 1) * per_actor]
    }
}

/// Distance between the neck and mid-hip joints of a raw frame.
fn torso_length(frame: &Frame, layout: &SkeletonLayout) -> f64 {
    let [hx, hy, _] = frame[layout.mid_hip];
    let [nx, ny, _] = frame[layout.neck];
    ((nx - hx).powi(2) + (ny - hy).powi(2)).sqrt()
}

/// Normalizes one skeleton: centers every joint on the mid-hip and divides
/// by the torso length measured *before* centering. Joints with `p == 0`
/// are zeroed after the transform. Returns the normalized frame and whether
/// the torso was degenerate (shorter than [`TORSO_EPS`], in which case the
/// length is clamped to [`TORSO_EPS`] so the output stays finite).
pub fn normalize_skeleton(frame: &Frame, layout: &SkeletonLayout) -> (Frame, bool) {
    let torso = torso_length(frame, layout);
    let degenerate = torso < TORSO_EPS;
    let scale = if degenerate { TORSO_EPS } else { torso };
    let [hx, hy, _] = frame[layout.mid_hip];
    let out = frame
        .iter()
        .map(|&[x, y, p]| {
            if p == 0.0 {
                [0.0, 0.0, 0.0]
            } else {
                [(x - hx) / scale, (y - hy) / scale, p]
            }
        })
        .collect();
    (out, degenerate)
}

/// Temporal differences of consecutive frames over all three channels; the
/// final frame is zero so the output has the same length as the input.
pub fn compute_motion(frames: &[Frame]) -> Vec<Frame> {
    let n_joints = frames.first().map_or(0, |f| f.len());
    (0..frames.len())
        .map(|t| {
            if t + 1 == frames.len() {
                vec![[0.0; 3]; n_joints]
            } else {
                frames[t]
                    .iter()
                    .zip(&frames[t + 1])
                    .map(|(a, b)| [b[0] - a[0], b[1] - a[1], b[2] - a[2]])
                    .collect()
            }
        })
        .collect()
}

/// Temporal-mean joint centroid of one actor over visible joints (`p > 0`),
/// on raw coordinates. `None` when the actor never has a visible joint.
fn actor_centroid(actor_frames: &[Frame]) -> Option<(f64, f64)> {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for frame in actor_frames {
        for &[x, y, p] in frame {
            if p > 0.0 {
                sx += x;
                sy += y;
                n += 1;
            }
        }
    }
    (n > 0).then(|| (sx / n as f64, sy / n as f64))
}

/// Picks the pivot actor: among real actors with at least one visible
/// joint, the one whose temporal-mean joint centroid lies closest to the
/// mean of all such centroids. Ties go to the lowest actor index. Falls
/// back to the first real actor when nobody has a visible joint; errors
/// when every slot is masked out.
pub fn compute_pivot(clip: &ClipRecord) -> Result<usize> {
    let candidates: Vec<(usize, (f64, f64))> = clip
        .real_actors()
        .filter_map(|k| actor_centroid(&clip.actors[k].frames).map(|c| (k, c)))
        .collect();
    if candidates.is_empty() {
        return clip.real_actors().next().ok_or(Error::AllActorsMasked {
            clip_id: clip.clip_id.clone(),
        });
    }
    let n = candidates.len() as f64;
    let mean = (
        candidates.iter().map(|(_, c)| c.0).sum::<f64>() / n,
        candidates.iter().map(|(_, c)| c.1).sum::<f64>() / n,
    );
    let mut best = candidates[0].0;
    let mut best_d = f64::INFINITY;
    for (k, (cx, cy)) in candidates {
        let d = (cx - mean.0).powi(2) + (cy - mean.1).powi(2);
        if d < best_d {
            best_d = d;
            best = k;
        }
    }
    Ok(best)
}

/// Per-joint offsets from the pivot actor on raw coordinates, scaled by the
/// pivot's clip-mean torso length (clamped to [`TORSO_EPS`]). The `p`
/// channel is the product of both joints' confidences, and positions where
/// that product is zero are zeroed entirely. The pivot's own rows are zero
/// in x and y by construction; masked-out slots stay all zero.
pub fn compute_pivot_diff(
    clip: &ClipRecord,
    layout: &SkeletonLayout,
    pivot: usize,
) -> Tensor {
    let k_total = clip.actors.len();
    let t_total = clip.n_frames();
    let n = layout.n_joints;
    let pivot_frames = &clip.actors[pivot].frames;
    let mean_torso = pivot_frames
        .iter()
        .map(|f| torso_length(f, layout))
        .sum::<f64>()
        / (t_total.max(1)) as f64;
    let scale = mean_torso.max(TORSO_EPS);

    let mut out = Tensor::zeros(&[k_total, t_total, n, 3]);
    let data = out.data_mut();
    for k in 0..k_total {
        if !clip.mask[k] {
            continue;
        }
        for (t, (frame, pivot_frame)) in
            clip.actors[k].frames.iter().zip(pivot_frames.iter()).enumerate()
        {
            for j in 0..n {
                let [x, y, p] = frame[j];
                let [px, py, pp] = pivot_frame[j];
                let conf = p * pp;
                let base = ((k * t_total + t) * n + j) * 3;
                if conf == 0.0 {
                    continue;
                }
                data[base] = (x - px) / scale;
                data[base + 1] = (y - py) / scale;
                data[base + 2] = conf;
            }
        }
    }
    out
}

/// Assembles all three streams for one clip. With `use_pivot_diff = false`
/// the pivot stream is all zeros (the pivot is still chosen, so the report
/// stays comparable). Masked-out actors are zero in every stream.
pub fn assemble_streams(
    clip: &ClipRecord,
    layout: &SkeletonLayout,
    use_pivot_diff: bool,
) -> Result<StreamTensors> {
    let k_total = clip.actors.len();
    let t_total = clip.n_frames();
    let n = layout.n_joints;
    let pivot_index = compute_pivot(clip)?;

    let mut pose = Tensor::zeros(&[k_total, t_total, n, 3]);
    let mut motion = Tensor::zeros(&[k_total, t_total, n, 3]);
    for k in 0..k_total {
        if !clip.mask[k] {
            continue;
        }
        let normalized: Vec<Frame> = clip.actors[k]
            .frames
            .iter()
            .map(|f| normalize_skeleton(f, layout).0)
            .collect();
        let diffs = compute_motion(&normalized);
        for t in 0..t_total {
            for j in 0..n {
                let base = ((k * t_total + t) * n + j) * 3;
                pose.data_mut()[base..base + 3].copy_from_slice(&normalized[t][j]);
                motion.data_mut()[base..base + 3].copy_from_slice(&diffs[t][j]);
            }
        }
    }

    let pivot_diff = if use_pivot_diff {
        compute_pivot_diff(clip, layout, pivot_index)
    } else {
        Tensor::zeros(&[k_total, t_total, n, 3])
    };

    debug_assert!(pose.all_finite() && motion.all_finite() && pivot_diff.all_finite());
    Ok(StreamTensors {
        pose,
        motion,
        pivot_diff,
        pivot_index,
    })
}

/// Writes the three stream tensors to a flat binary file: for each stream
/// in order (pose, motion, pivot_diff), four little-endian `u32` dimensions
/// followed by the row-major values as little-endian `f32`.
pub fn write_streams_binary(path: impl AsRef<std::path::Path>, streams: &StreamTensors) -> Result<()> {
    use std::io::Write;
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for tensor in [&streams.pose, &streams.motion, &streams.pivot_diff] {
        debug_assert_eq!(tensor.shape().len(), 4);
        for &dim in tensor.shape() {
            w.write_all(&(dim as u32).to_le_bytes())
                .map_err(|e| Error::io(path, e))?;
        }
        for &v in tensor.data() {
            w.write_all(&(v as f32).to_le_bytes())
                .map_err(|e| Error::io(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a file written by [`write_streams_binary`].
pub fn read_streams_binary(path: impl AsRef<std::path::Path>) -> Result<[Tensor; 3]> {
    use std::io::Read;
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = std::io::BufReader::new(file);
    let mut tensors = Vec::with_capacity(3);
    for _ in 0..3 {
        let mut dims = [0usize; 4];
        for d in dims.iter_mut() {
            let mut buf = [0u8; 4];
            r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
            *d = u32::from_le_bytes(buf) as usize;
        }
        let len: usize = dims.iter().product();
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            let mut buf = [0u8; 4];
            r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
            data.push(f32::from_le_bytes(buf) as f64);
        }
        tensors.push(Tensor::from_vec(&dims, data)?);
    }
    let mut trailing = [0u8; 1];
    match r.read_exact(&mut trailing) {
        Ok(_) => Err(Error::format(path, "trailing bytes after three tensors")),
        Err(_) => Ok(tensors.try_into().expect("exactly three tensors")),
    }
}
