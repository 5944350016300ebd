//! On-disk dataset format.
//!
//! A dataset directory holds `manifest.json` plus one JSON file per clip.
//! The manifest lists clip files in order and carries the layout and class
//! tables. Clip files store only real actors; loading pads every clip to the
//! dataset-wide maximum actor count with masked-out all-zero slots.

use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ActorSequence, ClipRecord, Dataset, Frame, LabelFlipMap, SkeletonLayout};
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    clips: Vec<String>,
    layout: SkeletonLayout,
    group_classes: Vec<String>,
    action_classes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label_flip_map: Option<LabelFlipMap>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClipFile {
    clip_id: String,
    group_label: usize,
    actors: Vec<ActorFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActorFile {
    action_label: Option<usize>,
    frames: Vec<Frame>,
}

/// Options for [`load_dataset_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// When set, clips longer than this are center-cropped to exactly this
    /// many frames and shorter clips are rejected. When unset, all clips
    /// must already share one length.
    pub target_frames: Option<usize>,
}

/// Writes a dataset directory (manifest plus one file per clip). Only real
/// actors are written; padding slots are reconstructed on load. The dataset
/// is validated first.
pub fn save_dataset(ds: &Dataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    ds.ensure_valid()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = ManifestFile {
        clips: ds.clips.iter().map(|c| format!("{}.json", c.clip_id)).collect(),
        layout: ds.layout.clone(),
        group_classes: ds.group_classes.clone(),
        action_classes: ds.action_classes.clone(),
        label_flip_map: ds.label_flip_map.clone(),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    for clip in &ds.clips {
        let file = ClipFile {
            clip_id: clip.clip_id.clone(),
            group_label: clip.group_label,
            actors: clip
                .real_actors()
                .map(|k| ActorFile {
                    action_label: clip.actors[k].action_label,
                    frames: clip.actors[k].frames.clone(),
                })
                .collect(),
        };
        write_json(&dir.join(format!("{}.json", clip.clip_id)), &file)?;
    }
    Ok(())
}

/// Loads a dataset directory written by [`save_dataset`], requiring all
/// clips to share one frame count.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    load_dataset_with(dir, LoadOptions::default())
}

/// Loads a dataset directory with explicit frame handling (see
/// [`LoadOptions`]). The result is validated before being returned.
pub fn load_dataset_with(dir: impl AsRef<Path>, opts: LoadOptions) -> Result<Dataset> {
    let dir = dir.as_ref();
    let manifest: ManifestFile = read_json(&dir.join("manifest.json"))?;
    let mut clips = Vec::with_capacity(manifest.clips.len());
    let mut max_actors = 0;
    for name in &manifest.clips {
        let path = dir.join(name);
        let file: ClipFile = read_json(&path)?;
        if file.actors.is_empty() {
            return Err(Error::format(&path, "clip has no actors"));
        }
        let mut actors = Vec::with_capacity(file.actors.len());
        for (a, actor) in file.actors.into_iter().enumerate() {
            let frames = match opts.target_frames {
                None => actor.frames,
                Some(t) => {
                    if actor.frames.len() < t {
                        return Err(Error::format(
                            &path,
                            format!(
                                "clip {} actor {a} has {} frames, need at least {t}",
                                file.clip_id,
                                actor.frames.len()
                            ),
                        ));
                    }
                    let start = (actor.frames.len() - t) / 2;
                    actor.frames[start..start + t].to_vec()
                }
            };
            actors.push(ActorSequence {
                action_label: actor.action_label,
                frames,
            });
        }
        max_actors = max_actors.max(actors.len());
        clips.push(ClipRecord {
            clip_id: file.clip_id,
            group_label: file.group_label,
            mask: vec![true; actors.len()],
            actors,
        });
    }
    let frames = clips.first().map_or(0, |c| c.n_frames());
    for clip in clips.iter_mut() {
        while clip.actors.len() < max_actors {
            clip.actors
                .push(ActorSequence::padding(frames, manifest.layout.n_joints));
            clip.mask.push(false);
        }
    }
    let ds = Dataset {
        clips,
        layout: manifest.layout,
        group_classes: manifest.group_classes,
        action_classes: manifest.action_classes,
        label_flip_map: manifest.label_flip_map,
    };
    ds.ensure_valid()?;
    Ok(ds)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, value)
        .map_err(|e| Error::format(path, e.to_string()))?;
    use std::io::Write;
    writer.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    writer.flush().map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::format(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame_of(v: f64, joints: usize) -> Frame {
        (0..joints).map(|j| [v + j as f64, v - j as f64, 0.75]).collect()
    }

    fn sample_dataset() -> Dataset {
        let layout = SkeletonLayout::stick7();
        let clip = |id: &str, g: usize, n_actors: usize, t: usize| ClipRecord {
            clip_id: id.into(),
            group_label: g,
            actors: (0..n_actors)
                .map(|a| ActorSequence {
                    action_label: Some(a % 2),
                    frames: (0..t).map(|f| frame_of((a * 10 + f) as f64, 7)).collect(),
                })
                .collect(),
            mask: vec![true; n_actors],
        };
        Dataset {
            clips: vec![clip("c0", 0, 2, 4), clip("c1", 1, 2, 4)],
            layout,
            group_classes: vec!["g0".into(), "g1".into()],
            action_classes: vec!["a0".into(), "a1".into()],
            label_flip_map: None,
        }
    }

    #[test]
    fn save_load_roundtrip_is_exact() {
        let ds = sample_dataset();
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(loaded, ds);
    }

    #[test]
    fn roundtrip_preserves_full_f64_precision() {
        let mut ds = sample_dataset();
        ds.clips[0].actors[0].frames[0][0] = [
            0.1 + 0.2,                     // 0.30000000000000004
            -1.2345678901234567e-13,
            0.333_333_333_333_333_3,
        ];
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(
            loaded.clips[0].actors[0].frames[0][0],
            ds.clips[0].actors[0].frames[0][0]
        );
    }

    #[test]
    fn ragged_actor_counts_are_padded_and_masked() {
        let ds = sample_dataset();
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        // Drop one actor from the second clip file: clips on disk may have
        // ragged actor counts, and loading pads them back up.
        let path = dir.path().join("c1.json");
        let mut value: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        value["actors"].as_array_mut().unwrap().pop();
        std::fs::write(&path, serde_json::to_string_pretty(&value).unwrap()).unwrap();
        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(loaded.n_actors(), 2);
        assert_eq!(loaded.clips[1].mask, vec![true, false]);
        assert_eq!(loaded.clips[1].actors[1].action_label, None);
        assert!(loaded.clips[1].actors[1]
            .frames
            .iter()
            .flatten()
            .all(|j| *j == [0.0; 3]));
        // Padding slots are not written back out.
        let dir2 = tempfile::tempdir().unwrap();
        save_dataset(&loaded, dir2.path()).unwrap();
        let reloaded = load_dataset(dir2.path()).unwrap();
        assert_eq!(reloaded, loaded);
    }

    #[test]
    fn center_crop_and_short_clip_rejection() {
        let mut ds = sample_dataset();
        // Make both clips 6 frames long.
        for clip in ds.clips.iter_mut() {
            for (a, actor) in clip.actors.iter_mut().enumerate() {
                actor.frames = (0..6).map(|f| frame_of((a * 10 + f) as f64, 7)).collect();
            }
        }
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        let loaded =
            load_dataset_with(dir.path(), LoadOptions { target_frames: Some(4) }).unwrap();
        assert_eq!(loaded.n_frames(), 4);
        // Center crop of 6 -> 4 starts at frame 1.
        assert_eq!(
            loaded.clips[0].actors[0].frames[0],
            ds.clips[0].actors[0].frames[1]
        );
        let err = load_dataset_with(dir.path(), LoadOptions { target_frames: Some(9) });
        match err {
            Err(Error::Format { message, .. }) => assert!(message.contains("need at least 9")),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn corrupt_clip_file_reports_path() {
        let ds = sample_dataset();
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        std::fs::write(dir.path().join("c1.json"), "{ not json").unwrap();
        match load_dataset(dir.path()) {
            Err(Error::Format { path, .. }) => {
                assert!(path.to_string_lossy().ends_with("c1.json"))
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_manifest_keys_are_rejected() {
        let ds = sample_dataset();
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&ds, dir.path()).unwrap();
        let path = dir.path().join("manifest.json");
        let text = std::fs::read_to_string(&path).unwrap();
        let patched = text.replacen("\"clips\"", "\"surprise\": 1, \"clips\"", 1);
        std::fs::write(&path, patched).unwrap();
        match load_dataset(dir.path()) {
            Err(Error::Format { message, .. }) => assert!(message.contains("surprise")),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn missing_directory_is_io_error() {
        match load_dataset("/nonexistent/skelgroup-test") {
            Err(Error::Io { .. }) => {}
            other => panic!("expected io error, got {other:?}"),
        }
    }
}
