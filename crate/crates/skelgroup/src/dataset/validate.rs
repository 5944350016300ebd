//! Semantic validation for in-memory datasets.

use std::collections::HashSet;
use std::fmt;

use super::Dataset;

/// One validation failure, locating the offending clip or table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Where the problem is, e.g. `layout`, `clip clip_00003`, `flip map`.
    pub location: String,
    pub message: String,
}

impl Violation {
    fn new(location: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

fn check_involution(table: &[usize], expected_len: usize, loc: &str, out: &mut Vec<Violation>) {
    if table.len() != expected_len {
        out.push(Violation::new(
            loc,
            format!("table has {} entries, expected {}", table.len(), expected_len),
        ));
        return;
    }
    for (i, &m) in table.iter().enumerate() {
        if m >= table.len() {
            out.push(Violation::new(loc, format!("entry {i} maps out of range ({m})")));
        } else if table[m] != i {
            out.push(Violation::new(
                loc,
                format!("not an involution: {i} -> {m} -> {}", table[m]),
            ));
        }
    }
}

/// Checks every structural rule a dataset must satisfy and returns all
/// violations found (empty means valid). Rules: consistent layout tables,
/// rectangular clip/actor/frame/joint dimensions, unique filename-safe clip
/// ids, labels within class tables, finite coordinates with `p` in `[0, 1]`,
/// at least one real actor per clip, and all-zero unlabeled padding slots.
pub fn validate_dataset(ds: &Dataset) -> Vec<Violation> {
    let mut out = Vec::new();
    let layout = &ds.layout;

    if layout.n_joints < 2 {
        out.push(Violation::new("layout", "need at least two joints"));
    }
    if layout.mid_hip >= layout.n_joints {
        out.push(Violation::new("layout", "mid_hip index out of range"));
    }
    if layout.neck >= layout.n_joints {
        out.push(Violation::new("layout", "neck index out of range"));
    }
    if layout.mid_hip == layout.neck {
        out.push(Violation::new("layout", "mid_hip and neck must differ"));
    }
    check_involution(&layout.lr_swap, layout.n_joints, "layout lr_swap", &mut out);

    if let Some(map) = &ds.label_flip_map {
        check_involution(&map.group, ds.group_classes.len(), "flip map group", &mut out);
        check_involution(&map.action, ds.action_classes.len(), "flip map action", &mut out);
    }

    if ds.group_classes.is_empty() {
        out.push(Violation::new("classes", "group class table is empty"));
    }
    if ds.clips.is_empty() {
        out.push(Violation::new("dataset", "no clips"));
        return out;
    }

    let k = ds.clips[0].actors.len();
    let t = ds.clips[0].n_frames();
    if k == 0 {
        out.push(Violation::new("dataset", "clips have zero actor slots"));
    }
    if t == 0 {
        out.push(Violation::new("dataset", "clips have zero frames"));
    }

    let mut seen_ids = HashSet::new();
    for clip in &ds.clips {
        let loc = format!("clip {}", clip.clip_id);
        if clip.clip_id.is_empty()
            || !clip
                .clip_id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        {
            out.push(Violation::new(&loc, "clip_id must be non-empty and filename-safe"));
        }
        if !seen_ids.insert(clip.clip_id.clone()) {
            out.push(Violation::new(&loc, "duplicate clip_id"));
        }
        if clip.actors.len() != k {
            out.push(Violation::new(
                &loc,
                format!("{} actor slots, expected {k}", clip.actors.len()),
            ));
        }
        if clip.mask.len() != clip.actors.len() {
            out.push(Violation::new(&loc, "mask length differs from actor count"));
            continue;
        }
        if !clip.mask.iter().any(|&m| m) {
            out.push(Violation::new(&loc, "no real actors (all slots masked out)"));
        }
        if clip.group_label >= ds.group_classes.len() {
            out.push(Violation::new(
                &loc,
                format!("group label {} out of range", clip.group_label),
            ));
        }
        for (a, actor) in clip.actors.iter().enumerate() {
            let aloc = format!("{loc} actor {a}");
            if actor.frames.len() != t {
                out.push(Violation::new(
                    &aloc,
                    format!("{} frames, expected {t}", actor.frames.len()),
                ));
            }
            for (f, frame) in actor.frames.iter().enumerate() {
                if frame.len() != layout.n_joints {
                    out.push(Violation::new(
                        &aloc,
                        format!("frame {f} has {} joints, expected {}", frame.len(), layout.n_joints),
                    ));
                    continue;
                }
                for (j, &[x, y, p]) in frame.iter().enumerate() {
                    if !x.is_finite() || !y.is_finite() || !p.is_finite() {
                        out.push(Violation::new(
                            &aloc,
                            format!("frame {f} joint {j} has non-finite values"),
                        ));
                    } else if !(0.0..=1.0).contains(&p) {
                        out.push(Violation::new(
                            &aloc,
                            format!("frame {f} joint {j} has p = {p} outside [0, 1]"),
                        ));
                    }
                }
            }
            if clip.mask[a] {
                if let Some(label) = actor.action_label {
                    if label >= ds.action_classes.len() {
                        out.push(Violation::new(
                            &aloc,
                            format!("action label {label} out of range"),
                        ));
                    }
                }
            } else {
                if actor.action_label.is_some() {
                    out.push(Violation::new(&aloc, "padded slot carries an action label"));
                }
                let all_zero = actor
                    .frames
                    .iter()
                    .flatten()
                    .all(|j| j.iter().all(|&v| v == 0.0));
                if !all_zero {
                    out.push(Violation::new(&aloc, "padded slot has non-zero data"));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{ActorSequence, ClipRecord, Dataset, SkeletonLayout};
    use super::*;

    fn valid_dataset() -> Dataset {
        let layout = SkeletonLayout::stick7();
        let mut actor = ActorSequence::padding(2, layout.n_joints);
        actor.action_label = Some(0);
        for frame in actor.frames.iter_mut() {
            for joint in frame.iter_mut() {
                *joint = [1.0, 2.0, 0.8];
            }
        }
        Dataset {
            clips: vec![ClipRecord {
                clip_id: "c0".into(),
                group_label: 0,
                actors: vec![actor, ActorSequence::padding(2, layout.n_joints)],
                mask: vec![true, false],
            }],
            layout,
            group_classes: vec!["g".into()],
            action_classes: vec!["a".into()],
            label_flip_map: None,
        }
    }

    #[test]
    fn valid_dataset_passes() {
        assert!(validate_dataset(&valid_dataset()).is_empty());
    }

    #[test]
    fn catches_bad_swap_table() {
        let mut ds = valid_dataset();
        ds.layout.lr_swap = vec![0, 1, 3, 4, 2, 5, 6];
        let v = validate_dataset(&ds);
        assert!(v.iter().any(|v| v.message.contains("involution")));
    }

    #[test]
    fn catches_confidence_out_of_range() {
        let mut ds = valid_dataset();
        ds.clips[0].actors[0].frames[0][3][2] = 1.5;
        let v = validate_dataset(&ds);
        assert!(v.iter().any(|v| v.message.contains("outside [0, 1]")));
    }

    #[test]
    fn catches_non_finite_coordinate() {
        let mut ds = valid_dataset();
        ds.clips[0].actors[0].frames[1][0][0] = f64::NAN;
        let v = validate_dataset(&ds);
        assert!(v.iter().any(|v| v.message.contains("non-finite")));
    }

    #[test]
    fn catches_label_out_of_range() {
        let mut ds = valid_dataset();
        ds.clips[0].group_label = 3;
        ds.clips[0].actors[0].action_label = Some(9);
        let v = validate_dataset(&ds);
        assert_eq!(
            v.iter().filter(|v| v.message.contains("out of range")).count(),
            2
        );
    }

    #[test]
    fn catches_ragged_frames() {
        let mut ds = valid_dataset();
        ds.clips[0].actors[0].frames.pop();
        let v = validate_dataset(&ds);
        assert!(v.iter().any(|v| v.message.contains("frames, expected")));
    }

    #[test]
    fn catches_dirty_padding_slot() {
        let mut ds = valid_dataset();
        ds.clips[0].actors[1].frames[0][0][1] = 0.5;
        let v = validate_dataset(&ds);
        assert!(v.iter().any(|v| v.message.contains("non-zero data")));
    }

    #[test]
    fn catches_fully_masked_clip() {
        let mut ds = valid_dataset();
        ds.clips[0].mask = vec![false, false];
        ds.clips[0].actors[0] = ActorSequence::padding(2, 7);
        let v = validate_dataset(&ds);
        assert!(v.iter().any(|v| v.message.contains("no real actors")));
    }

    #[test]
    fn catches_duplicate_and_unsafe_ids() {
        let mut ds = valid_dataset();
        let mut second = ds.clips[0].clone();
        second.clip_id = "c0".into();
        ds.clips.push(second);
        let mut third = ds.clips[0].clone();
        third.clip_id = "bad/../id".into();
        ds.clips.push(third);
        let v = validate_dataset(&ds);
        assert!(v.iter().any(|v| v.message.contains("duplicate")));
        assert!(v.iter().any(|v| v.message.contains("filename-safe")));
    }
}
