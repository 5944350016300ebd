//! Sweep the pseudo-label cluster count and plot validation accuracy
//! against it. Over-segmenting (more clusters than true action classes)
//! usually costs little, while under-segmenting merges distinct behaviors.

use skelgroup::dataset::{generate_synthetic_dataset, SkeletonLayout, SyntheticConfig};
use skelgroup::eval::{sweep_csv, sweep_k, write_line_plot_svg};
use skelgroup::model::ModelConfig;
use skelgroup::pseudo::PseudoConfig;
use skelgroup::train::TrainConfig;

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
        action_classes: 3, // overwritten per swept k
        group_classes: 3,
    };
    let train_cfg = TrainConfig { epochs: 15, batch_size: 16, lr0: 0.002, ..TrainConfig::default() };
    let pseudo_cfg = PseudoConfig::default();

    let ks = [3, 6, 12];
    let seeds = [0, 1];
    let outcome = sweep_k(&train_ds, &val_ds, &ks, &model_cfg, &train_cfg, &pseudo_cfg, &seeds)
        .expect("sweep runs");

    for &(k, acc) in &outcome.curve {
        let bar = "#".repeat((acc * 40.0) as usize);
        println!("k {k:>3}: mean val acc {acc:.3} {bar}");
    }

    let dir = std::env::temp_dir();
    let csv_path = dir.join("skelgroup_sweep_example.csv");
    let svg_path = dir.join("skelgroup_sweep_example.svg");
    std::fs::write(&csv_path, sweep_csv(&outcome)).expect("temp dir is writable");
    let series: Vec<(f64, f64)> =
        outcome.curve.iter().map(|&(k, acc)| (k as f64, acc)).collect();
    write_line_plot_svg(&svg_path, "accuracy by cluster count", "clusters", "accuracy", &series)
        .expect("plot writes");
    println!("wrote {} and {}", csv_path.display(), svg_path.display());
}
