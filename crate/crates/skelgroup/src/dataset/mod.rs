//! Dataset model: clips of per-actor skeleton sequences with group labels
//! and optional per-actor action labels.
//!
//! A dataset is rectangular once loaded: every clip carries the same number
//! of actor slots `K` (real actors plus zero-padded slots, distinguished by
//! a boolean mask) and every sequence has the same number of frames `T`.

mod io;
pub mod synthetic;
mod validate;

pub use io::{load_dataset, load_dataset_with, save_dataset, LoadOptions};
pub use synthetic::{generate_synthetic_dataset, SyntheticConfig};
pub use validate::{validate_dataset, Violation};

use serde::{Deserialize, Serialize};

use crate::{DetRng, Error, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;

/// One joint observation: `[x, y, p]` where `p` in `[0, 1]` is the detector
/// confidence. `p == 0` means the joint is missing for that frame.
pub type Joint = [f64; 3];

/// One skeleton: the joints of a single actor in a single frame.
pub type Frame = Vec<Joint>;

/// Joint indexing scheme shared by every clip in a dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkeletonLayout {
    /// Number of joints per skeleton.
    pub n_joints: usize,
    /// Joint used as the per-actor origin.
    pub mid_hip: usize,
    /// Joint whose distance to `mid_hip` defines the torso length.
    pub neck: usize,
    /// Left/right mirror table: joint `j` maps to `lr_swap[j]` under a
    /// horizontal flip. Must be an involution.
    pub lr_swap: Vec<usize>,
}

impl SkeletonLayout {
    /// 25-joint full-body layout (nose, neck, arms, legs, feet, face).
    pub fn body25() -> Self {
        let mut lr_swap: Vec<usize> = (0..25).collect();
        for (a, b) in [
            (2usize, 5usize),
            (3, 6),
            (4, 7),
            (9, 12),
            (10, 13),
            (11, 14),
            (15, 16),
            (17, 18),
            (19, 22),
            (20, 23),
            (21, 24),
        ] {
            lr_swap[a] = b;
            lr_swap[b] = a;
        }
        SkeletonLayout {
            n_joints: 25,
            mid_hip: 8,
            neck: 1,
            lr_swap,
        }
    }

    /// Seven-joint stick figure: mid-hip, neck, two arms, two legs, head.
    /// Small enough for fast tests while exercising every layout feature.
    pub fn stick7() -> Self {
        SkeletonLayout {
            n_joints: 7,
            mid_hip: 0,
            neck: 1,
            lr_swap: vec![0, 1, 3, 2, 5, 4, 6],
        }
    }

    /// Mirror-image joint pairs `(a, b)` with `a < b`, ordered by `a`.
    pub fn swap_pairs(&self) -> Vec<(usize, usize)> {
        self.lr_swap
            .iter()
            .enumerate()
            .filter(|&(j, &s)| j < s)
            .map(|(j, &s)| (j, s))
            .collect()
    }
}

/// How class labels change under a horizontal flip. Both tables must be
/// involutions. Absent from a dataset means both are the identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelFlipMap {
    pub group: Vec<usize>,
    pub action: Vec<usize>,
}

/// One actor's sequence within a clip.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorSequence {
    /// Action class, if annotated. Padded actor slots never carry one.
    pub action_label: Option<usize>,
    /// `T` frames of `n_joints` joints each.
    pub frames: Vec<Frame>,
}

impl ActorSequence {
    /// All-zero sequence used for padded actor slots.
    pub fn padding(frames: usize, joints: usize) -> Self {
        ActorSequence {
            action_label: None,
            frames: vec![vec![[0.0; 3]; joints]; frames],
        }
    }
}

/// One labeled clip: a fixed roster of actor slots observed for `T` frames.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipRecord {
    pub clip_id: String,
    pub group_label: usize,
    /// Exactly `K` entries, padded slots included.
    pub actors: Vec<ActorSequence>,
    /// `mask[k]` is true for real actors and false for padded slots.
    pub mask: Vec<bool>,
}

impl ClipRecord {
    pub fn n_frames(&self) -> usize {
        self.actors.first().map_or(0, |a| a.frames.len())
    }

    /// Indices of real (masked-in) actors.
    pub fn real_actors(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(k, _)| k)
    }
}

/// A full dataset: clips plus the shared layout and class name tables.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub clips: Vec<ClipRecord>,
    pub layout: SkeletonLayout,
    pub group_classes: Vec<String>,
    pub action_classes: Vec<String>,
    pub label_flip_map: Option<LabelFlipMap>,
}

impl Dataset {
    /// Actor slots per clip (`K`).
    pub fn n_actors(&self) -> usize {
        self.clips.first().map_or(0, |c| c.actors.len())
    }

    /// Frames per sequence (`T`).
    pub fn n_frames(&self) -> usize {
        self.clips.first().map_or(0, |c| c.n_frames())
    }

    pub fn n_group_classes(&self) -> usize {
        self.group_classes.len()
    }

    pub fn n_action_classes(&self) -> usize {
        self.action_classes.len()
    }

    /// True when every real actor in every clip has an action label.
    pub fn fully_action_labeled(&self) -> bool {
        self.clips.iter().all(|c| {
            c.real_actors()
                .all(|k| c.actors[k].action_label.is_some())
        })
    }

    /// Validates and wraps violations into an error.
    pub fn ensure_valid(&self) -> Result<()> {
        let violations = validate_dataset(self);
        if violations.is_empty() {
            Ok(())
        } else {
            let report = violations
                .iter()
                .map(|v| format!("  {v}"))
                .collect::<Vec<_>>()
                .join("\n");
            Err(Error::InvalidDataset(report))
        }
    }
}

/// Horizontally mirrors one clip: negates every x coordinate, permutes
/// joints by the layout's left/right table, and remaps labels through
/// `flip_map` (identity when `None`).
pub fn flip_clip(
    clip: &ClipRecord,
    layout: &SkeletonLayout,
    flip_map: Option<&LabelFlipMap>,
) -> ClipRecord {
    let actors = clip
        .actors
        .iter()
        .enumerate()
        .map(|(k, actor)| {
            let frames = actor
                .frames
                .iter()
                .map(|frame| {
                    (0..frame.len())
                        .map(|j| {
                            let [x, y, p] = frame[layout.lr_swap[j]];
                            [-x, y, p]
                        })
                        .collect()
                })
                .collect();
            let action_label = actor.action_label.map(|a| match flip_map {
                Some(m) if clip.mask[k] => m.action[a],
                _ => a,
            });
            ActorSequence {
                action_label,
                frames,
            }
        })
        .collect();
    let group_label = match flip_map {
        Some(m) => m.group[clip.group_label],
        None => clip.group_label,
    };
    ClipRecord {
        clip_id: clip.clip_id.clone(),
        group_label,
        actors,
        mask: clip.mask.clone(),
    }
}

/// Splits a dataset into train and validation parts, stratified by group
/// label. Within each class the clips are shuffled with a ChaCha generator
/// seeded from `seed`, the first `round(val_fraction * count)` go to
/// validation, and both halves keep the original clip order.
pub fn split_dataset(ds: &Dataset, val_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(0.0..=1.0).contains(&val_fraction) {
        return Err(Error::Config(format!(
            "val_fraction must be in [0, 1], got {val_fraction}"
        )));
    }
    let mut rng = DetRng::seed_from_u64(seed);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.n_group_classes()];
    for (i, clip) in ds.clips.iter().enumerate() {
        by_class[clip.group_label].push(i);
    }
    let mut val_idx = Vec::new();
    let mut train_idx = Vec::new();
    for mut members in by_class {
        members.shuffle(&mut rng);
        let n_val = ((members.len() as f64) * val_fraction).round() as usize;
        let n_val = n_val.min(members.len());
        val_idx.extend_from_slice(&members[..n_val]);
        train_idx.extend_from_slice(&members[n_val..]);
    }
    val_idx.sort_unstable();
    train_idx.sort_unstable();
    let subset = |idx: &[usize]| Dataset {
        clips: idx.iter().map(|&i| ds.clips[i].clone()).collect(),
        layout: ds.layout.clone(),
        group_classes: ds.group_classes.clone(),
        action_classes: ds.action_classes.clone(),
        label_flip_map: ds.label_flip_map.clone(),
    };
    Ok((subset(&train_idx), subset(&val_idx)))
}
