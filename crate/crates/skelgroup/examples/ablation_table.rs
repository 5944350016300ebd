//! Compare training configurations over a shared seed set: ground-truth
//! action supervision, cluster-derived pseudo-labels, group loss alone,
//! and the model without its pivot-difference stream.

use skelgroup::dataset::{generate_synthetic_dataset, SkeletonLayout, SyntheticConfig};
use skelgroup::eval::{ablation_table, run_ablation_suite, AblationRow};
use skelgroup::model::ModelConfig;
use skelgroup::pseudo::PseudoConfig;
use skelgroup::train::{LabelSource, TrainConfig, TrainMode};

fn main() {
    let data = |seed| SyntheticConfig {
        n_clips: 48,
        actors: 4,
        frames: 8,
        group_classes: 3,
        action_classes: 3,
        noise_std: 0.02,
        seed,
        motif_amp: 0.5,
        formations: 0,
        shared_motif_patterns: false,
        layout: SkeletonLayout::stick7(),
    };
    let train_ds = generate_synthetic_dataset(&data(1)).expect("valid config");
    let val_ds = generate_synthetic_dataset(&data(2)).expect("valid config");

    let model_cfg = ModelConfig {
        actors: 4,
        frames: 8,
        joints: 7,
        branch_channels: [8, 8, 8, 16],
        fusion_hidden: 32,
        feature_dim: 24,
        action_classes: 3,
        group_classes: 3,
    };
    let base = TrainConfig { epochs: 20, batch_size: 16, lr0: 0.002, ..TrainConfig::default() };
    let rows = vec![
        AblationRow { name: "supervised".into(), train: base.clone() },
        AblationRow {
            name: "pseudo".into(),
            train: TrainConfig { label_source: LabelSource::Pseudo, ..base.clone() },
        },
        AblationRow {
            name: "group_only".into(),
            train: TrainConfig { mode: TrainMode::GroupOnly, ..base.clone() },
        },
        AblationRow {
            name: "no_pivot_diff".into(),
            train: TrainConfig { use_pivot_diff: false, ..base.clone() },
        },
    ];

    let pseudo_cfg = PseudoConfig { k: 6, ..PseudoConfig::default() };
    let outcome = run_ablation_suite(&train_ds, &val_ds, &model_cfg, &rows, &pseudo_cfg, &[0, 1])
        .expect("suite runs");
    print!("{}", ablation_table(&outcome));
}
