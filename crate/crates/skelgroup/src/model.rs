//! The three-branch group activity model.
//!
//! Each input stream (pose, motion, pivot_diff) passes through its own
//! convolutional branch with identical structure but independent weights:
//! a 1x1 channel mix, a temporal 3x1 convolution, a transpose that moves
//! the joint axis into the channels, and two strided 3x3 convolutions.
//! The flattened branch outputs of one actor are concatenated and fused by
//! two shared dense layers into a per-actor feature vector. An action head
//! classifies each actor individually; an element-wise max over the real
//! actors pools the features, and a group head classifies the scene.

use serde::{Deserialize, Serialize};

use crate::nn::init::he_normal;
use crate::nn::layers::{
    conv2d_backward, conv2d_forward, linear_backward, linear_forward, masked_max_pool,
    masked_max_pool_backward, relu_backward_inplace, relu_inplace, softmax_cross_entropy,
    transpose_wc, ConvShape,
};
use crate::nn::Tensor;
use crate::streams::StreamTensors;
use crate::{DetRng, Error, Result};
use rand::SeedableRng;

/// Names of the three input streams, in tensor order.
pub const STREAM_NAMES: [&str; 3] = ["pose", "motion", "pivot_diff"];

/// Architecture hyperparameters. Every dimension of the network follows
/// from these values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Actor slots per clip (`K`).
    pub actors: usize,
    /// Frames per clip (`T`).
    pub frames: usize,
    /// Joints per skeleton (`N`).
    pub joints: usize,
    /// Output channels of the four branch convolutions.
    pub branch_channels: [usize; 4],
    /// Width of the first fusion layer.
    pub fusion_hidden: usize,
    /// Per-actor feature dimension (`F`).
    pub feature_dim: usize,
    /// Individual action classes (`A`).
    pub action_classes: usize,
    /// Group activity classes (`G`).
    pub group_classes: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            actors: 12,
            frames: 10,
            joints: 25,
            branch_channels: [32, 16, 32, 64],
            fusion_hidden: 256,
            feature_dim: 256,
            action_classes: 9,
            group_classes: 8,
        }
    }
}

impl ModelConfig {
    /// Small configuration used for gradient checks and fast tests.
    pub fn tiny() -> Self {
        ModelConfig {
            actors: 3,
            frames: 4,
            joints: 5,
            branch_channels: [4, 4, 4, 8],
            fusion_hidden: 16,
            feature_dim: 12,
            action_classes: 3,
            group_classes: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("actors", self.actors),
            ("frames", self.frames),
            ("joints", self.joints),
            ("fusion_hidden", self.fusion_hidden),
            ("feature_dim", self.feature_dim),
            ("action_classes", self.action_classes),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.group_classes < 2 {
            return Err(Error::Config("need at least two group classes".into()));
        }
        if self.branch_channels.contains(&0) {
            return Err(Error::Config("branch channels must be positive".into()));
        }
        Ok(())
    }

    /// Geometry of the four branch convolutions, in order. The transpose
    /// between the second and third stage swaps joints into the channels,
    /// which is why the third stage's input channels equal `joints`.
    pub fn conv_shapes(&self) -> [ConvShape; 4] {
        let [c1, c2, c3, c4] = self.branch_channels;
        let s1 = ConvShape {
            h: self.frames,
            w: self.joints,
            cin: 3,
            kh: 1,
            kw: 1,
            cout: c1,
            stride: 1,
        };
        let s2 = ConvShape {
            h: self.frames,
            w: self.joints,
            cin: c1,
            kh: 3,
            kw: 1,
            cout: c2,
            stride: 1,
        };
        let s3 = ConvShape {
            h: self.frames,
            w: c2,
            cin: self.joints,
            kh: 3,
            kw: 3,
            cout: c3,
            stride: 2,
        };
        let s4 = ConvShape {
            h: s3.out_h(),
            w: s3.out_w(),
            cin: c3,
            kh: 3,
            kw: 3,
            cout: c4,
            stride: 2,
        };
        [s1, s2, s3, s4]
    }

    /// Flattened output size of one branch.
    pub fn branch_flat_dim(&self) -> usize {
        self.conv_shapes()[3].output_len()
    }

    /// Size of the concatenated three-branch vector per actor.
    pub fn concat_dim(&self) -> usize {
        3 * self.branch_flat_dim()
    }
}

/// Weights of one convolution: kernel `[kh, kw, cin, cout]` plus bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    pub weight: Tensor,
    pub bias: Tensor,
}

/// Weights of one dense layer: `[out, in]` plus bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    pub weight: Tensor,
    pub bias: Tensor,
}

/// The four convolution stages of one stream branch.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchParams {
    pub conv1: ConvParams,
    pub conv2: ConvParams,
    pub conv3: ConvParams,
    pub conv4: ConvParams,
}

/// All trainable parameters. The same structure doubles as the gradient
/// container ([`Gradients`]).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// One branch per stream, ordered as [`STREAM_NAMES`].
    pub branches: [BranchParams; 3],
    pub fusion1: LinearParams,
    pub fusion2: LinearParams,
    pub action_head: LinearParams,
    pub group_head: LinearParams,
}

/// Gradients mirror the parameter structure exactly.
pub type Gradients = ModelParams;

impl ModelParams {
    /// He-initialized parameters; biases start at zero. Deterministic in
    /// `seed`.
    pub fn init(cfg: &ModelConfig, seed: u64) -> Self {
        let mut rng = DetRng::seed_from_u64(seed);
        let shapes = cfg.conv_shapes();
        let conv = |rng: &mut DetRng, s: &ConvShape| ConvParams {
            weight: he_normal(rng, &[s.kh, s.kw, s.cin, s.cout], s.kh * s.kw * s.cin),
            bias: Tensor::zeros(&[s.cout]),
        };
        let linear = |rng: &mut DetRng, out: usize, inp: usize| LinearParams {
            weight: he_normal(rng, &[out, inp], inp),
            bias: Tensor::zeros(&[out]),
        };
        // Classifier heads start 10x smaller than the fan-in scale. Full
        // variance-preserving init leaves the logits with O(1) spread, which
        // biases the initial cross entropy well above ln(classes); shrinking
        // only the final layers keeps the first predictions near uniform.
        let head = |rng: &mut DetRng, out: usize, inp: usize| {
            let mut p = linear(rng, out, inp);
            for w in p.weight.data_mut() {
                *w *= 0.1;
            }
            p
        };
        let branches = std::array::from_fn(|_| BranchParams {
            conv1: conv(&mut rng, &shapes[0]),
            conv2: conv(&mut rng, &shapes[1]),
            conv3: conv(&mut rng, &shapes[2]),
            conv4: conv(&mut rng, &shapes[3]),
        });
        ModelParams {
            branches,
            fusion1: linear(&mut rng, cfg.fusion_hidden, cfg.concat_dim()),
            fusion2: linear(&mut rng, cfg.feature_dim, cfg.fusion_hidden),
            action_head: head(&mut rng, cfg.action_classes, cfg.feature_dim),
            group_head: head(&mut rng, cfg.group_classes, cfg.feature_dim),
        }
    }

    /// All-zero parameters with the same shapes as an initialized model.
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let mut p = ModelParams::init(cfg, 0);
        for (_, t) in p.named_mut() {
            t.data_mut().fill(0.0);
        }
        p
    }

    /// Stable `(name, tensor)` listing. The order is fixed and defines the
    /// layout of checkpoints and optimizer state.
    pub fn named(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::with_capacity(28);
        for (b, branch) in self.branches.iter().enumerate() {
            let prefix = format!("branch_{}", STREAM_NAMES[b]);
            for (stage, conv) in [
                ("conv1", &branch.conv1),
                ("conv2", &branch.conv2),
                ("conv3", &branch.conv3),
                ("conv4", &branch.conv4),
            ] {
                out.push((format!("{prefix}.{stage}.weight"), &conv.weight));
                out.push((format!("{prefix}.{stage}.bias"), &conv.bias));
            }
        }
        for (name, lin) in [
            ("fusion1", &self.fusion1),
            ("fusion2", &self.fusion2),
            ("action_head", &self.action_head),
            ("group_head", &self.group_head),
        ] {
            out.push((format!("{name}.weight"), &lin.weight));
            out.push((format!("{name}.bias"), &lin.bias));
        }
        out
    }

    /// Mutable variant of [`ModelParams::named`], same order.
    pub fn named_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = Vec::with_capacity(28);
        for (b, branch) in self.branches.iter_mut().enumerate() {
            let prefix = format!("branch_{}", STREAM_NAMES[b]);
            for (stage, conv) in [
                ("conv1", &mut branch.conv1),
                ("conv2", &mut branch.conv2),
                ("conv3", &mut branch.conv3),
                ("conv4", &mut branch.conv4),
            ] {
                out.push((format!("{prefix}.{stage}.weight"), &mut conv.weight));
                out.push((format!("{prefix}.{stage}.bias"), &mut conv.bias));
            }
        }
        for (name, lin) in [
            ("fusion1", &mut self.fusion1),
            ("fusion2", &mut self.fusion2),
            ("action_head", &mut self.action_head),
            ("group_head", &mut self.group_head),
        ] {
            out.push((format!("{name}.weight"), &mut lin.weight));
            out.push((format!("{name}.bias"), &mut lin.bias));
        }
        out
    }

    pub fn n_params(&self) -> usize {
        self.named().iter().map(|(_, t)| t.len()).sum()
    }

    /// Adds `other` into `self`, tensor by tensor.
    pub fn add_assign(&mut self, other: &ModelParams) {
        for ((_, a), (_, b)) in self.named_mut().into_iter().zip(other.named()) {
            for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
                *x += y;
            }
        }
    }

    /// Multiplies every value by `factor`.
    pub fn scale(&mut self, factor: f64) {
        for (_, t) in self.named_mut() {
            for v in t.data_mut() {
                *v *= factor;
            }
        }
    }
}

/// Human-readable architecture summary: one line per layer plus totals.
pub fn model_summary(cfg: &ModelConfig) -> String {
    let shapes = cfg.conv_shapes();
    let mut lines = vec![format!(
        "input: 3 streams of [{}, {}, 3] per actor, {} actor slots",
        cfg.frames, cfg.joints, cfg.actors
    )];
    let mut total = 0usize;
    let mut push = |name: String, shape: String, count: usize| {
        total += count;
        lines.push(format!("{name:<28} {shape:<24} {count:>8} params"));
    };
    for stream in STREAM_NAMES {
        for (i, s) in shapes.iter().enumerate() {
            push(
                format!("branch_{stream}.conv{}", i + 1),
                format!(
                    "{}x{}x{}x{} /{} -> [{}, {}, {}]",
                    s.kh,
                    s.kw,
                    s.cin,
                    s.cout,
                    s.stride,
                    s.out_h(),
                    s.out_w(),
                    s.cout
                ),
                s.weight_len() + s.cout,
            );
        }
    }
    push(
        "fusion1".into(),
        format!("{} -> {}", cfg.concat_dim(), cfg.fusion_hidden),
        cfg.fusion_hidden * cfg.concat_dim() + cfg.fusion_hidden,
    );
    push(
        "fusion2".into(),
        format!("{} -> {}", cfg.fusion_hidden, cfg.feature_dim),
        cfg.feature_dim * cfg.fusion_hidden + cfg.feature_dim,
    );
    push(
        "action_head".into(),
        format!("{} -> {}", cfg.feature_dim, cfg.action_classes),
        cfg.action_classes * cfg.feature_dim + cfg.action_classes,
    );
    push(
        "group_head".into(),
        format!("{} -> {} (after max-pool)", cfg.feature_dim, cfg.group_classes),
        cfg.group_classes * cfg.feature_dim + cfg.group_classes,
    );
    lines.push(format!("total trainable parameters: {total}"));
    lines.join("\n")
}

/// Network outputs for one clip.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutputs {
    /// Group logits, length `G`.
    pub group_logits: Vec<f64>,
    /// Per-actor action logits, `K` rows of length `A`; masked-out rows are
    /// zero.
    pub action_logits: Vec<Vec<f64>>,
    /// Per-actor fused features, `K` rows of length `F`; masked-out rows
    /// are zero.
    pub actor_features: Vec<Vec<f64>>,
    /// Max-pooled scene feature, length `F`.
    pub pooled: Vec<f64>,
}

struct BranchCache {
    input: Vec<f64>,
    a1: Vec<f64>,
    a2: Vec<f64>,
    a2t: Vec<f64>,
    a3: Vec<f64>,
    a4: Vec<f64>,
}

struct ActorCache {
    branches: [BranchCache; 3],
    concat: Vec<f64>,
    hidden: Vec<f64>,
    features: Vec<f64>,
}

/// Intermediate activations needed by [`backward`].
pub struct ForwardCache {
    actors: Vec<Option<ActorCache>>,
    pool_argmax: Vec<usize>,
    pooled: Vec<f64>,
}

fn branch_forward(shapes: &[ConvShape; 4], params: &BranchParams, input: &[f64]) -> BranchCache {
    let mut a1 = conv2d_forward(&shapes[0], input, params.conv1.weight.data(), params.conv1.bias.data());
    relu_inplace(&mut a1);
    let mut a2 = conv2d_forward(&shapes[1], &a1, params.conv2.weight.data(), params.conv2.bias.data());
    relu_inplace(&mut a2);
    let a2t = transpose_wc(&a2, shapes[1].out_h(), shapes[1].out_w(), shapes[1].cout);
    let mut a3 = conv2d_forward(&shapes[2], &a2t, params.conv3.weight.data(), params.conv3.bias.data());
    relu_inplace(&mut a3);
    let mut a4 = conv2d_forward(&shapes[3], &a3, params.conv4.weight.data(), params.conv4.bias.data());
    relu_inplace(&mut a4);
    BranchCache {
        input: input.to_vec(),
        a1,
        a2,
        a2t,
        a3,
        a4,
    }
}

/// Runs the network on one clip's streams. `mask` marks real actors;
/// masked-out slots produce zero features and zero action logits and are
/// excluded from pooling. `clip_id` is only used in error messages.
pub fn forward(
    cfg: &ModelConfig,
    params: &ModelParams,
    streams: &StreamTensors,
    mask: &[bool],
    clip_id: &str,
) -> Result<(ModelOutputs, ForwardCache)> {
    let shapes = cfg.conv_shapes();
    let k_total = mask.len();
    let mut actor_features = vec![vec![0.0; cfg.feature_dim]; k_total];
    let mut action_logits = vec![vec![0.0; cfg.action_classes]; k_total];
    let mut actors: Vec<Option<ActorCache>> = Vec::with_capacity(k_total);

    for k in 0..k_total {
        if !mask[k] {
            actors.push(None);
            continue;
        }
        let branches: [BranchCache; 3] = [
            branch_forward(&shapes, &params.branches[0], StreamTensors::actor_block(&streams.pose, k)),
            branch_forward(&shapes, &params.branches[1], StreamTensors::actor_block(&streams.motion, k)),
            branch_forward(&shapes, &params.branches[2], StreamTensors::actor_block(&streams.pivot_diff, k)),
        ];
        let mut concat = Vec::with_capacity(cfg.concat_dim());
        for b in &branches {
            concat.extend_from_slice(&b.a4);
        }
        let mut hidden = linear_forward(
            params.fusion1.weight.data(),
            params.fusion1.bias.data(),
            cfg.concat_dim(),
            &concat,
        );
        relu_inplace(&mut hidden);
        let mut features = linear_forward(
            params.fusion2.weight.data(),
            params.fusion2.bias.data(),
            cfg.fusion_hidden,
            &hidden,
        );
        relu_inplace(&mut features);
        action_logits[k] = linear_forward(
            params.action_head.weight.data(),
            params.action_head.bias.data(),
            cfg.feature_dim,
            &features,
        );
        actor_features[k] = features.clone();
        actors.push(Some(ActorCache {
            branches,
            concat,
            hidden,
            features,
        }));
    }

    let (pooled, pool_argmax) =
        masked_max_pool(&actor_features, mask).ok_or_else(|| Error::AllActorsMasked {
            clip_id: clip_id.to_string(),
        })?;
    let group_logits = linear_forward(
        params.group_head.weight.data(),
        params.group_head.bias.data(),
        cfg.feature_dim,
        &pooled,
    );

    Ok((
        ModelOutputs {
            group_logits,
            action_logits,
            actor_features,
            pooled: pooled.clone(),
        },
        ForwardCache {
            actors,
            pool_argmax,
            pooled,
        },
    ))
}

#[allow(clippy::too_many_arguments)]
fn branch_backward(
    shapes: &[ConvShape; 4],
    params: &BranchParams,
    grads: &mut BranchParams,
    cache: &BranchCache,
    mut d_a4: Vec<f64>,
) {
    relu_backward_inplace(&mut d_a4, &cache.a4);
    let mut d_a3 = vec![0.0; shapes[3].input_len()];
    conv2d_backward(
        &shapes[3],
        &cache.a3,
        params.conv4.weight.data(),
        &d_a4,
        grads.conv4.weight.data_mut(),
        grads.conv4.bias.data_mut(),
        Some(&mut d_a3),
    );
    relu_backward_inplace(&mut d_a3, &cache.a3);
    let mut d_a2t = vec![0.0; shapes[2].input_len()];
    conv2d_backward(
        &shapes[2],
        &cache.a2t,
        params.conv3.weight.data(),
        &d_a3,
        grads.conv3.weight.data_mut(),
        grads.conv3.bias.data_mut(),
        Some(&mut d_a2t),
    );
    // Undo the joints-to-channels transpose.
    let mut d_a2 = transpose_wc(&d_a2t, shapes[1].out_h(), shapes[1].cout, shapes[1].out_w());
    relu_backward_inplace(&mut d_a2, &cache.a2);
    let mut d_a1 = vec![0.0; shapes[1].input_len()];
    conv2d_backward(
        &shapes[1],
        &cache.a1,
        params.conv2.weight.data(),
        &d_a2,
        grads.conv2.weight.data_mut(),
        grads.conv2.bias.data_mut(),
        Some(&mut d_a1),
    );
    relu_backward_inplace(&mut d_a1, &cache.a1);
    conv2d_backward(
        &shapes[0],
        &cache.input,
        params.conv1.weight.data(),
        &d_a1,
        grads.conv1.weight.data_mut(),
        grads.conv1.bias.data_mut(),
        None,
    );
}

/// Backpropagates logit gradients through the whole model and accumulates
/// parameter gradients into `grads`. `d_action_logits` rows for masked-out
/// actors must be zero (they are ignored).
pub fn backward(
    cfg: &ModelConfig,
    params: &ModelParams,
    cache: &ForwardCache,
    d_group_logits: &[f64],
    d_action_logits: &[Vec<f64>],
    grads: &mut Gradients,
) {
    let k_total = cache.actors.len();
    let d_pooled = linear_backward(
        params.group_head.weight.data(),
        cfg.feature_dim,
        &cache.pooled,
        d_group_logits,
        grads.group_head.weight.data_mut(),
        grads.group_head.bias.data_mut(),
    );
    let mut d_features = vec![vec![0.0; cfg.feature_dim]; k_total];
    masked_max_pool_backward(&d_pooled, &cache.pool_argmax, &mut d_features);

    for k in 0..k_total {
        let Some(actor) = &cache.actors[k] else {
            continue;
        };
        let mut d_feat = std::mem::take(&mut d_features[k]);
        let d_action = &d_action_logits[k];
        if d_action.iter().any(|&g| g != 0.0) {
            let extra = linear_backward(
                params.action_head.weight.data(),
                cfg.feature_dim,
                &actor.features,
                d_action,
                grads.action_head.weight.data_mut(),
                grads.action_head.bias.data_mut(),
            );
            for (a, b) in d_feat.iter_mut().zip(extra) {
                *a += b;
            }
        }
        if d_feat.iter().all(|&g| g == 0.0) {
            continue;
        }
        relu_backward_inplace(&mut d_feat, &actor.features);
        let mut d_hidden = linear_backward(
            params.fusion2.weight.data(),
            cfg.fusion_hidden,
            &actor.hidden,
            &d_feat,
            grads.fusion2.weight.data_mut(),
            grads.fusion2.bias.data_mut(),
        );
        relu_backward_inplace(&mut d_hidden, &actor.hidden);
        let d_concat = linear_backward(
            params.fusion1.weight.data(),
            cfg.concat_dim(),
            &actor.concat,
            &d_hidden,
            grads.fusion1.weight.data_mut(),
            grads.fusion1.bias.data_mut(),
        );
        let flat = cfg.branch_flat_dim();
        let shapes = cfg.conv_shapes();
        for b in 0..3 {
            branch_backward(
                &shapes,
                &params.branches[b],
                &mut grads.branches[b],
                &actor.branches[b],
                d_concat[b * flat..(b + 1) * flat].to_vec(),
            );
        }
    }
}

/// Loss breakdown for one clip, together with the logit gradients that seed
/// [`backward`].
#[derive(Debug, Clone)]
pub struct LossTerms {
    /// `group + lambda * action` (just `group` when no actor is labeled).
    pub total: f64,
    /// Cross-entropy of the group prediction.
    pub group: f64,
    /// Mean cross-entropy over labeled real actors; `None` when there are
    /// none.
    pub action: Option<f64>,
    pub d_group_logits: Vec<f64>,
    /// Already scaled by `lambda / n_labeled`; zero rows for unlabeled or
    /// masked-out actors.
    pub d_action_logits: Vec<Vec<f64>>,
}

/// Joint loss: group cross-entropy plus `lambda` times the mean action
/// cross-entropy over labeled real actors.
pub fn joint_loss(
    outputs: &ModelOutputs,
    group_label: usize,
    action_labels: &[Option<usize>],
    mask: &[bool],
    lambda: f64,
) -> LossTerms {
    let (group, d_group_logits) = softmax_cross_entropy(&outputs.group_logits, group_label);
    let labeled: Vec<usize> = (0..mask.len())
        .filter(|&k| mask[k] && action_labels[k].is_some())
        .collect();
    let mut d_action_logits = vec![vec![0.0; outputs.action_logits[0].len()]; mask.len()];
    let action = if labeled.is_empty() {
        None
    } else {
        let scale = lambda / labeled.len() as f64;
        let mut sum = 0.0;
        for &k in &labeled {
            let (l, mut g) = softmax_cross_entropy(
                &outputs.action_logits[k],
                action_labels[k].expect("filtered above"),
            );
            sum += l;
            for v in g.iter_mut() {
                *v *= scale;
            }
            d_action_logits[k] = g;
        }
        Some(sum / labeled.len() as f64)
    };
    let total = group + lambda * action.unwrap_or(0.0);
    LossTerms {
        total,
        group,
        action,
        d_group_logits,
        d_action_logits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic_dataset, SkeletonLayout, SyntheticConfig};
    use crate::streams::assemble_streams;

    fn tiny_cfg() -> ModelConfig {
        ModelConfig::tiny()
    }

    fn tiny_streams(seed: u64) -> (StreamTensors, Vec<bool>) {
        let cfg = tiny_cfg();
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = crate::DetRng::seed_from_u64(seed);
        let shape = [cfg.actors, cfg.frames, cfg.joints, 3];
        let mut make = || {
            let data = (0..shape.iter().product::<usize>())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            Tensor::from_vec(&shape, data).unwrap()
        };
        let streams = StreamTensors {
            pose: make(),
            motion: make(),
            pivot_diff: make(),
            pivot_index: 0,
        };
        (streams, vec![true; cfg.actors])
    }

    #[test]
    fn tiny_config_has_expected_parameter_count() {
        // conv stages: 16 + 52 + 184 + 296 per branch, three branches,
        // then 400 + 204 + 39 + 39 for fusion and heads.
        let p = ModelParams::init(&tiny_cfg(), 0);
        assert_eq!(p.n_params(), 2326);
    }

    #[test]
    fn named_listing_is_stable_and_unique() {
        let p = ModelParams::init(&tiny_cfg(), 0);
        let names: Vec<String> = p.named().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names.len(), 32);
        let unique: std::collections::HashSet<&String> = names.iter().collect();
        assert_eq!(unique.len(), names.len());
        assert_eq!(names[0], "branch_pose.conv1.weight");
        assert_eq!(names[31], "group_head.bias");
        let mut p2 = ModelParams::init(&tiny_cfg(), 0);
        let names2: Vec<String> = p2.named_mut().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names, names2);
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let cfg = tiny_cfg();
        assert_eq!(ModelParams::init(&cfg, 5), ModelParams::init(&cfg, 5));
        assert_ne!(ModelParams::init(&cfg, 5), ModelParams::init(&cfg, 6));
        // Branches share structure but not weights.
        let p = ModelParams::init(&cfg, 5);
        assert_ne!(p.branches[0].conv1.weight, p.branches[1].conv1.weight);
    }

    #[test]
    fn init_scales_match_fan_in_with_small_heads() {
        let cfg = ModelConfig::default();
        let sample_std = |t: &Tensor| {
            let n = t.len() as f64;
            let mean: f64 = t.data().iter().sum::<f64>() / n;
            (t.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
        };
        let p = ModelParams::init(&cfg, 11);
        let fusion_expect = (2.0 / cfg.concat_dim() as f64).sqrt();
        let got = sample_std(&p.fusion1.weight);
        assert!((got / fusion_expect - 1.0).abs() < 0.1, "fusion1 std {got}");
        // Heads sit an order of magnitude below the fan-in scale so the
        // softmax starts near uniform.
        let head_expect = 0.1 * (2.0 / cfg.feature_dim as f64).sqrt();
        let got = sample_std(&p.group_head.weight);
        assert!((got / head_expect - 1.0).abs() < 0.2, "group head std {got}");
        let got = sample_std(&p.action_head.weight);
        assert!((got / head_expect - 1.0).abs() < 0.2, "action head std {got}");
    }

    #[test]
    fn forward_shapes_and_determinism() {
        let cfg = tiny_cfg();
        let params = ModelParams::init(&cfg, 1);
        let (streams, mask) = tiny_streams(2);
        let (out, _) = forward(&cfg, &params, &streams, &mask, "t").unwrap();
        assert_eq!(out.group_logits.len(), cfg.group_classes);
        assert_eq!(out.action_logits.len(), cfg.actors);
        assert_eq!(out.action_logits[0].len(), cfg.action_classes);
        assert_eq!(out.pooled.len(), cfg.feature_dim);
        let (out2, _) = forward(&cfg, &params, &streams, &mask, "t").unwrap();
        assert_eq!(out, out2);
    }

    #[test]
    fn masked_actor_contributes_nothing() {
        let cfg = tiny_cfg();
        let params = ModelParams::init(&cfg, 1);
        let (streams, _) = tiny_streams(3);
        let mask = vec![true, false, true];
        let (out, _) = forward(&cfg, &params, &streams, &mask, "t").unwrap();
        assert!(out.actor_features[1].iter().all(|&v| v == 0.0));
        assert!(out.action_logits[1].iter().all(|&v| v == 0.0));
        // Garbage in the masked slot must not change anything.
        let mut streams2 = streams.clone();
        let block_len = cfg.frames * cfg.joints * 3;
        for v in &mut streams2.pose.data_mut()[block_len..2 * block_len] {
            *v = 99.0;
        }
        let (out2, _) = forward(&cfg, &params, &streams2, &mask, "t").unwrap();
        assert_eq!(out, out2);
    }

    #[test]
    fn fully_masked_clip_is_an_error() {
        let cfg = tiny_cfg();
        let params = ModelParams::init(&cfg, 1);
        let (streams, _) = tiny_streams(4);
        let err = forward(&cfg, &params, &streams, &[false, false, false], "clip_x");
        assert!(matches!(err, Err(Error::AllActorsMasked { clip_id }) if clip_id == "clip_x"));
    }

    #[test]
    fn pooled_features_are_elementwise_max() {
        let cfg = tiny_cfg();
        let params = ModelParams::init(&cfg, 1);
        let (streams, mask) = tiny_streams(5);
        let (out, _) = forward(&cfg, &params, &streams, &mask, "t").unwrap();
        for f in 0..cfg.feature_dim {
            let want = out
                .actor_features
                .iter()
                .map(|row| row[f])
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(out.pooled[f], want);
        }
    }

    #[test]
    fn loss_combines_terms_linearly() {
        let cfg = tiny_cfg();
        let params = ModelParams::init(&cfg, 2);
        let (streams, mask) = tiny_streams(6);
        let labels = vec![Some(0), Some(2), Some(1)];
        for lambda in [0.0, 0.35, 0.7] {
            let (out, _) = forward(&cfg, &params, &streams, &mask, "t").unwrap();
            let terms = joint_loss(&out, 1, &labels, &mask, lambda);
            let expect = terms.group + lambda * terms.action.unwrap();
            assert!((terms.total - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_without_labels_is_group_only() {
        let cfg = tiny_cfg();
        let params = ModelParams::init(&cfg, 2);
        let (streams, mask) = tiny_streams(7);
        let terms = {
            let (out, _) = forward(&cfg, &params, &streams, &mask, "t").unwrap();
            joint_loss(&out, 0, &[None, None, None], &mask, 0.7)
        };
        assert!(terms.action.is_none());
        assert_eq!(terms.total, terms.group);
        assert!(terms
            .d_action_logits
            .iter()
            .all(|row| row.iter().all(|&g| g == 0.0)));
    }

    #[test]
    fn unlabeled_actors_are_excluded_from_action_loss() {
        let cfg = tiny_cfg();
        let params = ModelParams::init(&cfg, 2);
        let (streams, mask) = tiny_streams(8);
        let (out, _) = forward(&cfg, &params, &streams, &mask, "t").unwrap();
        let partial = joint_loss(&out, 0, &[Some(1), None, None], &mask, 1.0);
        let (l, _) = crate::nn::layers::softmax_cross_entropy(&out.action_logits[0], 1);
        assert!((partial.action.unwrap() - l).abs() < 1e-15);
        assert!(partial.d_action_logits[1].iter().all(|&g| g == 0.0));
    }

    #[test]
    fn backward_matches_finite_differences_on_a_few_weights() {
        let cfg = tiny_cfg();
        let params = ModelParams::init(&cfg, 3);
        let (streams, mask) = tiny_streams(9);
        let labels = vec![Some(0), Some(1), Some(2)];
        let loss_of = |p: &ModelParams| -> f64 {
            let (out, _) = forward(&cfg, p, &streams, &mask, "t").unwrap();
            joint_loss(&out, 2, &labels, &mask, 0.7).total
        };
        let (out, cache) = forward(&cfg, &params, &streams, &mask, "t").unwrap();
        let terms = joint_loss(&out, 2, &labels, &mask, 0.7);
        let mut grads = ModelParams::zeros(&cfg);
        backward(&cfg, &params, &cache, &terms.d_group_logits, &terms.d_action_logits, &mut grads);

        // Spot-check one weight in every layer kind.
        let picks = [
            ("branch_pose.conv1.weight", 3),
            ("branch_motion.conv3.weight", 17),
            ("branch_pivot_diff.conv4.bias", 2),
            ("fusion1.weight", 101),
            ("fusion2.bias", 5),
            ("action_head.weight", 11),
            ("group_head.weight", 7),
        ];
        let h = 1e-5;
        for (name, idx) in picks {
            let analytic = grads
                .named()
                .into_iter()
                .find(|(n, _)| n == name)
                .unwrap()
                .1
                .data()[idx];
            let mut plus = params.clone();
            plus.named_mut()
                .into_iter()
                .find(|(n, _)| n == name)
                .unwrap()
                .1
                .data_mut()[idx] += h;
            let mut minus = params.clone();
            minus
                .named_mut()
                .into_iter()
                .find(|(n, _)| n == name)
                .unwrap()
                .1
                .data_mut()[idx] -= h;
            let numeric = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h);
            let denom = analytic.abs().max(numeric.abs()).max(1e-12);
            assert!(
                (analytic - numeric).abs() / denom < 1e-6,
                "{name}[{idx}]: analytic {analytic} vs numeric {numeric}"
            );
        }
    }

    #[test]
    fn actor_permutation_permutes_outputs() {
        let cfg = ModelConfig {
            actors: 5,
            frames: 8,
            joints: 7,
            ..tiny_cfg()
        };
        let params = ModelParams::init(&cfg, 4);
        let ds = generate_synthetic_dataset(&SyntheticConfig {
            n_clips: 4,
            actors: 5,
            frames: 8,
            noise_std: 0.01,
            layout: SkeletonLayout::stick7(),
            ..Default::default()
        })
        .unwrap();
        let perm = [3usize, 0, 4, 1, 2];
        for clip in &ds.clips {
            let mut permuted = clip.clone();
            for (new_k, &old_k) in perm.iter().enumerate() {
                permuted.actors[new_k] = clip.actors[old_k].clone();
                permuted.mask[new_k] = clip.mask[old_k];
            }
            let s1 = assemble_streams(clip, &ds.layout, true).unwrap();
            let s2 = assemble_streams(&permuted, &ds.layout, true).unwrap();
            let (o1, _) = forward(&cfg, &params, &s1, &clip.mask, "a").unwrap();
            let (o2, _) = forward(&cfg, &params, &s2, &permuted.mask, "b").unwrap();
            for (new_k, &old_k) in perm.iter().enumerate() {
                for (a, b) in o1.action_logits[old_k].iter().zip(&o2.action_logits[new_k]) {
                    assert!((a - b).abs() < 1e-9);
                }
            }
            for (a, b) in o1.group_logits.iter().zip(&o2.group_logits) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn summary_lists_every_layer_and_total() {
        let s = model_summary(&tiny_cfg());
        assert!(s.contains("branch_pose.conv1"));
        assert!(s.contains("branch_pivot_diff.conv4"));
        assert!(s.contains("group_head"));
        assert!(s.contains("total trainable parameters: 2326"));
    }
}
