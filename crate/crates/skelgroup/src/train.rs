//! Training loop: Adam optimizer, step-decay learning rate schedule, and the
//! three supervision modes (end-to-end joint, group-only, two-stage).
//!
//! Gradient accumulation over a batch is parallelized with rayon but reduced
//! sequentially in sample order, so results are bitwise identical regardless
//! of thread count.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{flip_clip, Dataset};
use crate::model::{forward, Gradients, ModelConfig, ModelParams};
use crate::nn::layers::{argmax, softmax_cross_entropy};
use crate::streams::{assemble_streams, StreamTensors};
use crate::{DetRng, Error, Result};

/// Which parts of the model receive supervision and when.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    /// Joint loss on group and per-actor heads, all parameters updated.
    EndToEnd,
    /// Group loss only; the per-actor action head is never updated.
    GroupOnly,
    /// Stage 1 trains branches, fusion and the action head on per-actor
    /// labels; stage 2 freezes branches and the action head and trains
    /// fusion and the group head on the group loss.
    TwoStage,
}

impl std::fmt::Display for TrainMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TrainMode::EndToEnd => "end_to_end",
            TrainMode::GroupOnly => "group_only",
            TrainMode::TwoStage => "two_stage",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for TrainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "end_to_end" => Ok(TrainMode::EndToEnd),
            "group_only" => Ok(TrainMode::GroupOnly),
            "two_stage" => Ok(TrainMode::TwoStage),
            other => Err(Error::Config(format!(
                "unknown mode '{other}' (expected end_to_end, group_only or two_stage)"
            ))),
        }
    }
}

/// Where per-actor action labels come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    /// Labels stored in the dataset (if any).
    GroundTruth,
    /// Labels produced by the clustering pipeline; training treats them
    /// exactly like ground truth, the distinction is for reporting.
    Pseudo,
}

impl std::fmt::Display for LabelSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            LabelSource::GroundTruth => "ground_truth",
            LabelSource::Pseudo => "pseudo",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for LabelSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ground_truth" => Ok(LabelSource::GroundTruth),
            "pseudo" => Ok(LabelSource::Pseudo),
            other => Err(Error::Config(format!(
                "unknown label source '{other}' (expected ground_truth or pseudo)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Base learning rate; divided by 10 every 30 epochs.
    pub lr0: f64,
    /// Weight of the per-actor action loss in the joint objective.
    pub lambda: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub mode: TrainMode,
    pub label_source: LabelSource,
    /// When false the pivot-difference stream is zeroed (ablation).
    pub use_pivot_diff: bool,
    /// When true every batch also contains the mirrored version of each clip.
    pub augment: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 64,
            lr0: 0.001,
            lambda: 0.7,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            mode: TrainMode::EndToEnd,
            label_source: LabelSource::GroundTruth,
            use_pivot_diff: true,
            augment: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.lr0.is_finite() && self.lr0 > 0.0) {
            return Err(Error::Config(format!("lr0 must be positive, got {}", self.lr0)));
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(b.is_finite() && (0.0..1.0).contains(&b)) {
                return Err(Error::Config(format!("{name} must lie in [0, 1), got {b}")));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// Step decay: the base rate divided by 10 after every 30 epochs.
pub fn lr_schedule(lr0: f64, epoch: usize) -> f64 {
    lr0 / 10f64.powi((epoch / 30) as i32)
}

/// First and second moment estimates for every parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState {
    step: u64,
    m: ModelParams,
    v: ModelParams,
}

impl AdamState {
    pub fn new(cfg: &ModelConfig) -> Self {
        AdamState { step: 0, m: ModelParams::zeros(cfg), v: ModelParams::zeros(cfg) }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One Adam update on a single tensor. `step` is the 1-based update count
/// used for bias correction.
#[allow(clippy::too_many_arguments)]
pub fn adam_update_tensor(
    param: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    step: u64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    lr: f64,
) {
    let bc1 = 1.0 - beta1.powi(step as i32);
    let bc2 = 1.0 - beta2.powi(step as i32);
    for i in 0..param.len() {
        let g = grad[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        param[i] -= lr * m_hat / (v_hat.sqrt() + epsilon);
    }
}

/// Applies one Adam step to every tensor whose name passes `update`.
/// Skipped tensors keep their parameters and moments bitwise unchanged.
/// Returns an error if any gradient that would be applied is non-finite.
pub fn adam_step_filtered(
    params: &mut ModelParams,
    grads: &Gradients,
    state: &mut AdamState,
    cfg: &TrainConfig,
    lr: f64,
    update: impl Fn(&str) -> bool,
) -> Result<()> {
    let grad_list = grads.named();
    for (name, grad) in &grad_list {
        if update(name) && !grad.data().iter().all(|g| g.is_finite()) {
            return Err(Error::NonFiniteGradient { tensor: name.clone() });
        }
    }
    state.step += 1;
    let step = state.step;
    let mut m_list = state.m.named_mut();
    let mut v_list = state.v.named_mut();
    for (i, (name, param)) in params.named_mut().into_iter().enumerate() {
        let (gname, grad) = &grad_list[i];
        debug_assert_eq!(&name, gname);
        if !update(&name) {
            continue;
        }
        adam_update_tensor(
            param.data_mut(),
            grad.data(),
            m_list[i].1.data_mut(),
            v_list[i].1.data_mut(),
            step,
            cfg.beta1,
            cfg.beta2,
            cfg.epsilon,
            lr,
        );
    }
    Ok(())
}

/// Convenience wrapper updating every tensor.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &Gradients,
    state: &mut AdamState,
    cfg: &TrainConfig,
    lr: f64,
) -> Result<()> {
    adam_step_filtered(params, grads, state, cfg, lr, |_| true)
}

/// A clip prepared for training: streams assembled once up front.
pub(crate) struct Sample {
    pub streams: StreamTensors,
    pub mask: Vec<bool>,
    pub group_label: usize,
    pub action_labels: Vec<Option<usize>>,
    pub clip_id: String,
}

pub(crate) fn prepare_samples(
    ds: &Dataset,
    use_pivot_diff: bool,
    with_flips: bool,
) -> Result<Vec<Sample>> {
    let mut out = Vec::with_capacity(ds.clips.len() * if with_flips { 2 } else { 1 });
    for clip in &ds.clips {
        let streams = assemble_streams(clip, &ds.layout, use_pivot_diff)?;
        out.push(Sample {
            streams,
            mask: clip.mask.clone(),
            group_label: clip.group_label,
            action_labels: clip.actors.iter().map(|a| a.action_label).collect(),
            clip_id: clip.clip_id.clone(),
        });
        if with_flips {
            let flipped = flip_clip(clip, &ds.layout, ds.label_flip_map.as_ref());
            let streams = assemble_streams(&flipped, &ds.layout, use_pivot_diff)?;
            out.push(Sample {
                streams,
                mask: flipped.mask.clone(),
                group_label: flipped.group_label,
                action_labels: flipped.actors.iter().map(|a| a.action_label).collect(),
                clip_id: format!("{}#flip", flipped.clip_id),
            });
        }
    }
    Ok(out)
}

/// Per-sample loss pieces and gradients with independent weights on the two
/// objective terms, so stages of two-stage training can silence one side.
struct SampleGrad {
    grads: Gradients,
    loss_group: f64,
    loss_action: Option<f64>,
    group_correct: bool,
    action_correct: usize,
    action_counted: usize,
}

fn sample_gradients(
    model_cfg: &ModelConfig,
    params: &ModelParams,
    sample: &Sample,
    group_weight: f64,
    action_weight: f64,
    use_action_labels: bool,
) -> Result<SampleGrad> {
    let (outputs, cache) = forward(model_cfg, params, &sample.streams, &sample.mask, &sample.clip_id)?;

    let (loss_group, mut d_group) = softmax_cross_entropy(&outputs.group_logits, sample.group_label);
    for g in &mut d_group {
        *g *= group_weight;
    }
    let group_correct = argmax(&outputs.group_logits) == sample.group_label;

    let mut d_action = vec![vec![0.0; model_cfg.action_classes]; model_cfg.actors];
    let labeled: Vec<usize> = if use_action_labels {
        (0..model_cfg.actors)
            .filter(|&k| sample.mask[k] && sample.action_labels[k].is_some())
            .collect()
    } else {
        Vec::new()
    };
    let mut loss_action = None;
    let mut action_correct = 0;
    if !labeled.is_empty() {
        let scale = action_weight / labeled.len() as f64;
        let mut sum = 0.0;
        for &k in &labeled {
            let target = sample.action_labels[k].unwrap();
            let (loss, mut grad) = softmax_cross_entropy(&outputs.action_logits[k], target);
            sum += loss;
            if argmax(&outputs.action_logits[k]) == target {
                action_correct += 1;
            }
            for g in &mut grad {
                *g *= scale;
            }
            d_action[k] = grad;
        }
        loss_action = Some(sum / labeled.len() as f64);
    }

    let mut grads = Gradients::zeros(model_cfg);
    crate::model::backward(model_cfg, params, &cache, &d_group, &d_action, &mut grads);
    Ok(SampleGrad {
        grads,
        loss_group,
        loss_action,
        group_correct,
        action_correct,
        action_counted: labeled.len(),
    })
}

/// Per-epoch record written to the training history.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Stage of two-stage training (1 or 2); 0 for single-stage modes.
    pub stage: usize,
    pub lr: f64,
    pub loss_group: f64,
    pub loss_action: Option<f64>,
    pub train_acc_group: f64,
    pub train_acc_action: Option<f64>,
    pub val_acc_group: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters after the last epoch.
    pub params: ModelParams,
    /// Parameters from the epoch with the highest validation group accuracy
    /// (the earliest such epoch on ties).
    pub best_params: ModelParams,
    pub best_epoch: usize,
    pub best_val_acc: f64,
    pub history: Vec<EpochStats>,
}

/// Writes the per-epoch history as CSV with a fixed header. Optional values
/// are left empty for modes that do not produce them.
pub fn history_to_csv(history: &[EpochStats]) -> String {
    // Runs that never compute an action loss (group_only) drop those columns
    // entirely; mixed runs (two_stage) keep them and leave blanks.
    let with_action = history.iter().any(|r| r.loss_action.is_some());
    let mut out = if with_action {
        String::from(
            "epoch,stage,lr,loss_group,loss_action,train_acc_group,train_acc_action,val_acc_group\n",
        )
    } else {
        String::from("epoch,stage,lr,loss_group,train_acc_group,val_acc_group\n")
    };
    for row in history {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        if with_action {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                row.epoch,
                row.stage,
                row.lr,
                row.loss_group,
                opt(row.loss_action),
                row.train_acc_group,
                opt(row.train_acc_action),
                row.val_acc_group,
            ));
        } else {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                row.epoch, row.stage, row.lr, row.loss_group, row.train_acc_group, row.val_acc_group,
            ));
        }
    }
    out
}

fn group_accuracy(model_cfg: &ModelConfig, params: &ModelParams, samples: &[Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let correct: Result<Vec<bool>> = samples
        .par_iter()
        .map(|s| {
            let (out, _) = forward(model_cfg, params, &s.streams, &s.mask, &s.clip_id)?;
            Ok(argmax(&out.group_logits) == s.group_label)
        })
        .collect();
    let correct = correct?;
    Ok(correct.iter().filter(|&&c| c).count() as f64 / samples.len() as f64)
}

fn check_compatible(ds: &Dataset, model_cfg: &ModelConfig, role: &str) -> Result<()> {
    ds.ensure_valid()?;
    if ds.n_actors() != model_cfg.actors {
        return Err(Error::Config(format!(
            "{role} dataset has {} actor slots but the model expects {}",
            ds.n_actors(),
            model_cfg.actors
        )));
    }
    if ds.n_frames() != model_cfg.frames {
        return Err(Error::Config(format!(
            "{role} dataset has {} frames but the model expects {}",
            ds.n_frames(),
            model_cfg.frames
        )));
    }
    if ds.layout.n_joints != model_cfg.joints {
        return Err(Error::Config(format!(
            "{role} dataset has {} joints but the model expects {}",
            ds.layout.n_joints, model_cfg.joints
        )));
    }
    if ds.n_group_classes() != model_cfg.group_classes {
        return Err(Error::Config(format!(
            "{role} dataset has {} group classes but the model expects {}",
            ds.n_group_classes(),
            model_cfg.group_classes
        )));
    }
    Ok(())
}

/// Which tensors an optimizer step may touch in each phase of training.
fn update_filter(mode: TrainMode, stage: usize) -> impl Fn(&str) -> bool {
    move |name: &str| match (mode, stage) {
        (TrainMode::EndToEnd, _) => true,
        (TrainMode::GroupOnly, _) => !name.starts_with("action_head."),
        (TrainMode::TwoStage, 1) => !name.starts_with("group_head."),
        (TrainMode::TwoStage, _) => name.starts_with("fusion") || name.starts_with("group_head."),
    }
}

/// Trains a model from a fresh He initialization seeded by the config.
pub fn train(
    train_ds: &Dataset,
    val_ds: &Dataset,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    model_cfg.validate()?;
    train_cfg.validate()?;
    check_compatible(train_ds, model_cfg, "training")?;
    check_compatible(val_ds, model_cfg, "validation")?;

    let needs_action_labels = matches!(train_cfg.mode, TrainMode::EndToEnd | TrainMode::TwoStage);
    if needs_action_labels {
        if train_ds.n_action_classes() != model_cfg.action_classes {
            return Err(Error::Config(format!(
                "training dataset has {} action classes but the model expects {}",
                train_ds.n_action_classes(),
                model_cfg.action_classes
            )));
        }
        if !train_ds.fully_action_labeled() {
            return Err(Error::Config(format!(
                "{} training requires an action label on every present actor",
                train_cfg.mode
            )));
        }
    }

    let train_samples = prepare_samples(train_ds, train_cfg.use_pivot_diff, train_cfg.augment)?;
    let val_samples = prepare_samples(val_ds, train_cfg.use_pivot_diff, false)?;

    let mut params = ModelParams::init(model_cfg, train_cfg.seed);
    let mut opt = AdamState::new(model_cfg);
    // Separate stream for shuffling so the init draw sequence stays fixed.
    let mut shuffle_rng = DetRng::seed_from_u64(train_cfg.seed.wrapping_add(1));

    // Two-stage training splits the epoch budget between the stages (the
    // first stage gets the extra epoch when the total is odd). The learning
    // rate schedule restarts with each stage.
    let stages: Vec<(usize, usize)> = match train_cfg.mode {
        TrainMode::TwoStage => {
            vec![(1, train_cfg.epochs.div_ceil(2)), (2, train_cfg.epochs / 2)]
        }
        _ => vec![(0, train_cfg.epochs)],
    };

    let mut history = Vec::with_capacity(train_cfg.epochs);
    let mut best: Option<(f64, usize, ModelParams)> = None;
    let mut epoch_global = 0usize;

    for &(stage, stage_epochs) in &stages {
        let (group_weight, action_weight, use_labels) = match (train_cfg.mode, stage) {
            (TrainMode::EndToEnd, _) => (1.0, train_cfg.lambda, true),
            (TrainMode::GroupOnly, _) => (1.0, 0.0, false),
            (TrainMode::TwoStage, 1) => (0.0, 1.0, true),
            (TrainMode::TwoStage, _) => (1.0, 0.0, false),
        };
        let filter = update_filter(train_cfg.mode, stage);
        // When only the action loss is active, fresh moments avoid carrying
        // stage-1 momentum into the group objective.
        if stage == 2 {
            opt = AdamState::new(model_cfg);
        }

        for stage_epoch in 0..stage_epochs {
            let lr = lr_schedule(train_cfg.lr0, stage_epoch);
            let mut order: Vec<usize> = (0..train_samples.len()).collect();
            order.shuffle(&mut shuffle_rng);

            let mut loss_group_sum = 0.0;
            let mut loss_action_sum = 0.0;
            let mut action_samples = 0usize;
            let mut group_correct = 0usize;
            let mut action_correct = 0usize;
            let mut action_counted = 0usize;

            for batch in order.chunks(train_cfg.batch_size) {
                let per_sample: Result<Vec<SampleGrad>> = batch
                    .par_iter()
                    .map(|&i| {
                        sample_gradients(
                            model_cfg,
                            &params,
                            &train_samples[i],
                            group_weight,
                            action_weight,
                            use_labels,
                        )
                    })
                    .collect();
                let per_sample = per_sample?;

                let mut grads = Gradients::zeros(model_cfg);
                for sg in &per_sample {
                    grads.add_assign(&sg.grads);
                    loss_group_sum += sg.loss_group;
                    if let Some(la) = sg.loss_action {
                        loss_action_sum += la;
                        action_samples += 1;
                    }
                    group_correct += sg.group_correct as usize;
                    action_correct += sg.action_correct;
                    action_counted += sg.action_counted;
                }
                grads.scale(1.0 / batch.len() as f64);
                adam_step_filtered(&mut params, &grads, &mut opt, train_cfg, lr, &filter)?;
            }

            let n = train_samples.len() as f64;
            let loss_group = loss_group_sum / n;
            let loss_action =
                (action_samples > 0).then(|| loss_action_sum / action_samples as f64);
            if !loss_group.is_finite() || loss_action.is_some_and(|l| !l.is_finite()) {
                return Err(Error::NonFiniteLoss { epoch: epoch_global });
            }

            let val_acc_group = group_accuracy(model_cfg, &params, &val_samples)?;
            let stats = EpochStats {
                epoch: epoch_global,
                stage,
                lr,
                loss_group,
                loss_action,
                train_acc_group: group_correct as f64 / n,
                train_acc_action: (action_counted > 0)
                    .then(|| action_correct as f64 / action_counted as f64),
                val_acc_group,
            };
            // Stage 1 of two-stage training never touches the group head, so
            // its group accuracy says nothing about the final model.
            let eligible = stage != 1;
            if eligible && best.as_ref().is_none_or(|(acc, _, _)| val_acc_group > *acc) {
                best = Some((val_acc_group, epoch_global, params.clone()));
            }
            history.push(stats);
            epoch_global += 1;
        }
    }

    let (best_val_acc, best_epoch, best_params) =
        best.unwrap_or((0.0, 0, params.clone()));
    Ok(TrainOutcome { params, best_params, best_epoch, best_val_acc, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synthetic::{generate_synthetic_dataset, SyntheticConfig};
    use crate::dataset::SkeletonLayout;

    fn tiny_synthetic(n_clips: usize, seed: u64) -> Dataset {
        let cfg = SyntheticConfig {
            n_clips,
            actors: 4,
            frames: 8,
            group_classes: 2,
            action_classes: 2,
            noise_std: 0.01,
            seed,
            motif_amp: 0.5,
            formations: 0,
            shared_motif_patterns: false,
            layout: SkeletonLayout::stick7(),
        };
        generate_synthetic_dataset(&cfg).unwrap()
    }

    fn tiny_model() -> ModelConfig {
        ModelConfig {
            joints: 7,
            frames: 8,
            actors: 4,
            branch_channels: [4, 4, 4, 8],
            fusion_hidden: 16,
            feature_dim: 12,
            group_classes: 2,
            action_classes: 2,
        }
    }

    #[test]
    fn lr_schedule_hits_decimal_literals_exactly() {
        assert_eq!(lr_schedule(0.001, 0), 0.001);
        assert_eq!(lr_schedule(0.001, 29), 0.001);
        assert_eq!(lr_schedule(0.001, 30), 0.0001);
        assert_eq!(lr_schedule(0.001, 59), 0.0001);
        assert_eq!(lr_schedule(0.001, 60), 0.00001);
        assert_eq!(lr_schedule(0.001, 65), 0.00001);
        assert_eq!(lr_schedule(0.001, 90), 0.000001);
    }

    #[test]
    fn adam_first_step_matches_closed_form() {
        // With zero moments, one step moves by lr * g / (|g| + eps * sqrt(1 - beta2)).
        // For |g| around 1 that is lr to within ~1e-11.
        for &g in &[0.5, -2.0, 1.0] {
            let mut p = [0.0f64];
            let mut m = [0.0f64];
            let mut v = [0.0f64];
            adam_update_tensor(&mut p, &[g], &mut m, &mut v, 1, 0.9, 0.999, 1e-8, 0.001);
            let expected = -0.001 * g.signum();
            assert!(
                (p[0] - expected).abs() < 1e-8,
                "g={g}: step {} vs {}",
                p[0],
                expected
            );
        }
    }

    #[test]
    fn adam_second_step_matches_hand_rollout() {
        let (b1, b2, eps, lr) = (0.9, 0.999, 1e-8, 0.01);
        let g1 = 0.3;
        let g2 = -0.7;
        let mut p = [1.0f64];
        let mut m = [0.0f64];
        let mut v = [0.0f64];
        adam_update_tensor(&mut p, &[g1], &mut m, &mut v, 1, b1, b2, eps, lr);
        adam_update_tensor(&mut p, &[g2], &mut m, &mut v, 2, b1, b2, eps, lr);

        let m1 = (1.0 - b1) * g1;
        let v1 = (1.0 - b2) * g1 * g1;
        let p1 = 1.0 - lr * (m1 / (1.0 - b1)) / ((v1 / (1.0 - b2)).sqrt() + eps);
        let m2 = b1 * m1 + (1.0 - b1) * g2;
        let v2 = b2 * v1 + (1.0 - b2) * g2 * g2;
        let p2 =
            p1 - lr * (m2 / (1.0 - b1 * b1)) / ((v2 / (1.0 - b2 * b2)).sqrt() + eps);
        assert!((p[0] - p2).abs() < 1e-15, "{} vs {}", p[0], p2);
    }

    #[test]
    fn adam_rejects_non_finite_gradients() {
        let cfg = tiny_model();
        let mut params = ModelParams::init(&cfg, 0);
        let mut grads = Gradients::zeros(&cfg);
        grads.branches[0].conv1.weight.data_mut()[0] = f64::NAN;
        let mut state = AdamState::new(&cfg);
        let tc = TrainConfig::default();
        let err = adam_step(&mut params, &grads, &mut state, &tc, 0.001).unwrap_err();
        match err {
            Error::NonFiniteGradient { tensor } => {
                assert_eq!(tensor, "branch_pose.conv1.weight")
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn filtered_step_leaves_excluded_tensors_bitwise_unchanged() {
        let cfg = tiny_model();
        let mut params = ModelParams::init(&cfg, 3);
        let before: Vec<Vec<f64>> =
            params.named().iter().map(|(_, t)| t.data().to_vec()).collect();
        let mut grads = Gradients::zeros(&cfg);
        for (_, t) in grads.named_mut() {
            for g in t.data_mut() {
                *g = 0.25;
            }
        }
        let mut state = AdamState::new(&cfg);
        let tc = TrainConfig::default();
        adam_step_filtered(&mut params, &grads, &mut state, &tc, 0.001, |name| {
            !name.starts_with("action_head.")
        })
        .unwrap();
        for (i, (name, t)) in params.named().into_iter().enumerate() {
            let unchanged = t.data() == before[i].as_slice();
            if name.starts_with("action_head.") {
                assert!(unchanged, "{name} should be frozen");
            } else {
                assert!(!unchanged, "{name} should have moved");
            }
        }
    }

    #[test]
    fn initial_group_loss_is_near_uniform_entropy() {
        let ds = tiny_synthetic(16, 7);
        let cfg = tiny_model();
        let tc = TrainConfig {
            epochs: 1,
            batch_size: 8,
            ..TrainConfig::default()
        };
        let out = train(&ds, &ds, &cfg, &tc).unwrap();
        let ln_g = (cfg.group_classes as f64).ln();
        let loss0 = out.history[0].loss_group;
        assert!(
            loss0 > 0.9 * ln_g && loss0 < 1.1 * ln_g,
            "epoch-0 group loss {loss0} outside [{}, {}]",
            0.9 * ln_g,
            1.1 * ln_g
        );
    }

    #[test]
    fn training_is_deterministic_for_fixed_seed() {
        let ds = tiny_synthetic(12, 1);
        let cfg = tiny_model();
        let tc = TrainConfig { epochs: 2, batch_size: 4, ..TrainConfig::default() };
        let a = train(&ds, &ds, &cfg, &tc).unwrap();
        let b = train(&ds, &ds, &cfg, &tc).unwrap();
        for ((_, ta), (_, tb)) in a.params.named().into_iter().zip(b.params.named()) {
            assert_eq!(ta.data(), tb.data());
        }
        assert_eq!(a.history.len(), b.history.len());
        for (ra, rb) in a.history.iter().zip(&b.history) {
            assert_eq!(ra.loss_group, rb.loss_group);
            assert_eq!(ra.val_acc_group, rb.val_acc_group);
        }
    }

    #[test]
    fn group_only_never_touches_action_head() {
        let ds = tiny_synthetic(12, 2);
        let cfg = tiny_model();
        let init = ModelParams::init(&cfg, 5);
        let tc = TrainConfig {
            epochs: 3,
            batch_size: 4,
            mode: TrainMode::GroupOnly,
            seed: 5,
            ..TrainConfig::default()
        };
        let out = train(&ds, &ds, &cfg, &tc).unwrap();
        assert_eq!(
            out.params.action_head.weight.data(),
            init.action_head.weight.data(),
            "action head weight moved in group-only mode"
        );
        assert_eq!(out.params.action_head.bias.data(), init.action_head.bias.data());
        assert!(
            out.params.group_head.weight.data() != init.group_head.weight.data(),
            "group head should train"
        );
        for row in &out.history {
            assert!(row.loss_action.is_none());
            assert!(row.train_acc_action.is_none());
        }
        let csv = history_to_csv(&out.history);
        assert!(!csv.contains("loss_action"), "group-only history keeps no action column");
    }

    #[test]
    fn two_stage_freezes_branches_and_action_head_in_stage_two() {
        let ds = tiny_synthetic(12, 3);
        let cfg = tiny_model();
        let tc = TrainConfig {
            epochs: 4,
            batch_size: 4,
            mode: TrainMode::TwoStage,
            seed: 9,
            ..TrainConfig::default()
        };

        // Two runs sharing seed and stage-1 length (two epochs) but with one
        // vs two stage-2 epochs. Stage 2 freezes branches and the action
        // head, so those tensors must agree bitwise across the runs even
        // though the trainable tensors diverge with the extra epoch.
        let out4 = train(&ds, &ds, &cfg, &tc).unwrap();
        assert_eq!(out4.history.len(), 4);
        assert_eq!(
            out4.history.iter().map(|r| r.stage).collect::<Vec<_>>(),
            [1, 1, 2, 2]
        );

        let tc3 = TrainConfig { epochs: 3, ..tc.clone() };
        let out3 = train(&ds, &ds, &cfg, &tc3).unwrap();
        assert_eq!(
            out3.history.iter().map(|r| r.stage).collect::<Vec<_>>(),
            [1, 1, 2]
        );
        for ((name, t4), (_, t3)) in
            out4.params.named().into_iter().zip(out3.params.named())
        {
            let frozen = name.starts_with("branch_") || name.starts_with("action_head.");
            if frozen {
                assert_eq!(t4.data(), t3.data(), "{name} changed during stage 2");
            }
        }
        assert!(
            out4.params.group_head.weight.data() != out3.params.group_head.weight.data(),
            "group head should keep training through stage 2"
        );
        // Stage 1 trains the action head; it must differ from init.
        let init = ModelParams::init(&cfg, 9);
        assert!(out4.params.action_head.weight.data() != init.action_head.weight.data());
        // Stage-1 epochs never update the group head, so best-model tracking
        // must come from stage-2 epochs only.
        assert!(out4.best_epoch >= 2);
    }

    #[test]
    fn two_stage_stage_one_skips_group_head() {
        let ds = tiny_synthetic(8, 4);
        let cfg = tiny_model();
        let tc = TrainConfig {
            epochs: 1,
            batch_size: 4,
            mode: TrainMode::TwoStage,
            seed: 2,
            ..TrainConfig::default()
        };
        // One total epoch: ceil(1/2) = 1 stage-1 epoch, zero stage-2 epochs.
        let out = train(&ds, &ds, &cfg, &tc).unwrap();
        let init = ModelParams::init(&cfg, 2);
        assert_eq!(out.params.group_head.weight.data(), init.group_head.weight.data());
        assert_eq!(out.params.group_head.bias.data(), init.group_head.bias.data());
    }

    #[test]
    fn modes_requiring_labels_reject_unlabeled_data() {
        let mut ds = tiny_synthetic(8, 5);
        for clip in &mut ds.clips {
            for actor in &mut clip.actors {
                actor.action_label = None;
            }
        }
        let cfg = tiny_model();
        for mode in [TrainMode::EndToEnd, TrainMode::TwoStage] {
            let tc = TrainConfig { epochs: 1, mode, ..TrainConfig::default() };
            let err = train(&ds, &ds, &cfg, &tc).unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{mode}: {err:?}");
        }
        // Group-only mode accepts the same unlabeled data.
        let tc = TrainConfig {
            epochs: 1,
            batch_size: 4,
            mode: TrainMode::GroupOnly,
            ..TrainConfig::default()
        };
        train(&ds, &ds, &cfg, &tc).unwrap();
    }

    #[test]
    fn augmentation_doubles_samples_and_stays_deterministic() {
        let ds = tiny_synthetic(8, 6);
        let samples = prepare_samples(&ds, true, true).unwrap();
        assert_eq!(samples.len(), 16);
        assert!(samples[1].clip_id.contains("flip"));

        let cfg = tiny_model();
        let tc = TrainConfig {
            epochs: 2,
            batch_size: 4,
            augment: true,
            ..TrainConfig::default()
        };
        let a = train(&ds, &ds, &cfg, &tc).unwrap();
        let b = train(&ds, &ds, &cfg, &tc).unwrap();
        for ((_, ta), (_, tb)) in a.params.named().into_iter().zip(b.params.named()) {
            assert_eq!(ta.data(), tb.data());
        }
    }

    #[test]
    fn loss_decreases_on_small_overfit_run() {
        let ds = tiny_synthetic(8, 8);
        let cfg = tiny_model();
        let tc = TrainConfig {
            epochs: 60,
            batch_size: 8,
            lr0: 0.003,
            ..TrainConfig::default()
        };
        let out = train(&ds, &ds, &cfg, &tc).unwrap();
        let first = out.history.first().unwrap().loss_group;
        let last = out.history.last().unwrap().loss_group;
        let curve: Vec<f64> = out.history.iter().map(|r| r.loss_group).collect();
        assert!(
            last < 0.6 * first,
            "group loss failed to drop: {first} -> {last}; curve {curve:?}"
        );
    }

    #[test]
    fn history_csv_has_header_and_blank_optionals() {
        let row = |loss_action: Option<f64>| EpochStats {
            epoch: 0,
            stage: 0,
            lr: 0.001,
            loss_group: 1.5,
            loss_action,
            train_acc_group: 0.25,
            train_acc_action: None,
            val_acc_group: 0.5,
        };
        // A run with any action loss keeps the columns, blanks for gaps.
        let csv = history_to_csv(&[row(Some(2.0)), row(None)]);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "epoch,stage,lr,loss_group,loss_action,train_acc_group,train_acc_action,val_acc_group"
        );
        assert_eq!(lines.next().unwrap(), "0,0,0.001,1.5,2,0.25,,0.5");
        assert_eq!(lines.next().unwrap(), "0,0,0.001,1.5,,0.25,,0.5");
        // A run that never computed one drops the action columns.
        let csv = history_to_csv(&[row(None)]);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "epoch,stage,lr,loss_group,train_acc_group,val_acc_group"
        );
        assert_eq!(lines.next().unwrap(), "0,0,0.001,1.5,0.25,0.5");
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let ok = TrainConfig::default();
        ok.validate().unwrap();
        for bad in [
            TrainConfig { epochs: 0, ..ok.clone() },
            TrainConfig { batch_size: 0, ..ok.clone() },
            TrainConfig { lr0: 0.0, ..ok.clone() },
            TrainConfig { lr0: f64::NAN, ..ok.clone() },
            TrainConfig { lambda: -0.1, ..ok.clone() },
            TrainConfig { beta1: 1.0, ..ok.clone() },
            TrainConfig { beta2: -0.2, ..ok.clone() },
            TrainConfig { epsilon: 0.0, ..ok.clone() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn mismatched_dataset_and_model_are_rejected() {
        let ds = tiny_synthetic(8, 1);
        let mut cfg = tiny_model();
        cfg.actors = 5;
        let tc = TrainConfig { epochs: 1, ..TrainConfig::default() };
        assert!(matches!(train(&ds, &ds, &cfg, &tc), Err(Error::Config(_))));
    }
}
