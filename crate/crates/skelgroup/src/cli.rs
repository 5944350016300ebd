//! Command-line front end: one executable, eight subcommands, all pure
//! functions of config plus seed. Every successful run ends with a
//! machine-parsable `RESULT key=value ...` line on standard output. Exit
//! codes: 0 ok, 1 config or usage, 2 I/O or format, 3 numerical failure,
//! 4 gradient-check failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{load_run_config, RunConfig};
use crate::dataset::{load_dataset, save_dataset, split_dataset, Dataset};
use crate::eval::{
    ablation_csv, ablation_table, evaluate_with, run_ablation_suite, sweep_csv, sweep_k,
    write_line_plot_svg, AblationRow,
};
use crate::model::{model_summary, ModelConfig, ModelParams};
use crate::nn::checkpoint::{load_checkpoint, save_checkpoint};
use crate::nn::gradcheck::{
    check_layer_gradients_with, check_model_gradients, GradCheckConfig, ModelCheckInput,
};
use crate::pseudo::{
    assign_pseudolabels, read_assignments, read_features_text, run_pseudo_pipeline,
    stand_in_features, write_assignments, PseudoAssignment,
};
use crate::streams::{assemble_streams, write_streams_binary};
use crate::train::{history_to_csv, train, LabelSource, TrainConfig, TrainMode};
use crate::{dataset::flip_clip, Error, Result};

#[derive(Parser)]
#[command(
    name = "skelgroup",
    version,
    about = "Group activity recognition from skeleton streams"
)]
struct Cli {
    /// Worker thread cap (0 = one per core). Any setting produces
    /// bit-identical outputs.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset (manifest plus one JSON file per clip).
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Train a model and write checkpoint plus history CSV.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Training dataset directory.
        #[arg(long)]
        data: PathBuf,
        /// Validation dataset directory; without it, --val-fraction of
        /// --data is split off deterministically.
        #[arg(long)]
        val_data: Option<PathBuf>,
        #[arg(long, default_value_t = 0.25)]
        val_fraction: f64,
        /// Pseudo-label assignment file (required when label_source=pseudo).
        #[arg(long)]
        assignments: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Score a checkpoint on a dataset and write the confusion matrix.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Cluster per-actor descriptors into pseudo action labels.
    Pseudolabel {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Per-actor feature file in the text format; mutually exclusive
        /// with --stand-in.
        #[arg(long, conflicts_with = "stand_in")]
        features: Option<PathBuf>,
        /// Build the statistics descriptor from the dataset itself.
        #[arg(long)]
        stand_in: bool,
        /// Output assignment file.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Train with pseudo-labels across several cluster counts and plot
    /// validation accuracy against k.
    SweepK {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        val_data: PathBuf,
        /// Cluster counts; default is A, 2A, 4A for A action classes.
        #[arg(long, value_delimiter = ',')]
        ks: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [0u64, 1, 2, 3, 4])]
        seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Train and score a named set of configurations over shared seeds.
    Ablate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        val_data: PathBuf,
        /// Comma-separated row names: supervised, group_only, pseudo,
        /// two_stage, no_pivot_diff, augment.
        #[arg(long, value_delimiter = ',', default_values_t = ["supervised".to_string(), "group_only".to_string(), "pseudo".to_string()])]
        rows: Vec<String>,
        #[arg(long, value_delimiter = ',', default_values_t = [0u64, 1, 2, 3, 4])]
        seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Verify analytic gradients of every layer and of a small full model
    /// against central differences.
    Gradcheck {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Negative control: corrupt the analytic gradients and require the
        /// checker to notice.
        #[arg(long, hide = true)]
        inject_sign_bug: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Dump the three input streams of one clip and of its mirrored twin
    /// to flat binary files for inspection.
    FlipDump {
        #[arg(long)]
        data: PathBuf,
        /// Clip id as listed in the manifest.
        #[arg(long)]
        clip: String,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Flag overrides applied on top of the config file.
#[derive(Args, Clone, Default)]
struct Overrides {
    /// Override train.epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Override train.batch_size.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Override train.lr0.
    #[arg(long)]
    lr0: Option<f64>,
    /// Override train.lambda.
    #[arg(long)]
    lambda: Option<f64>,
    /// Override train.mode (end_to_end, group_only, two_stage).
    #[arg(long)]
    mode: Option<TrainMode>,
    /// Override train.label_source (ground_truth, pseudo).
    #[arg(long)]
    label_source: Option<LabelSource>,
    /// Override train.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override train.use_pivot_diff.
    #[arg(long)]
    use_pivot_diff: Option<bool>,
    /// Override train.augment.
    #[arg(long)]
    augment: Option<bool>,
    /// Override pseudo.k.
    #[arg(long)]
    k: Option<usize>,
    /// Override data.n_clips.
    #[arg(long)]
    n_clips: Option<usize>,
    /// Override data.noise_std.
    #[arg(long)]
    noise_std: Option<f64>,
    /// Override data.seed.
    #[arg(long)]
    data_seed: Option<u64>,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value {
                    $field = v;
                }
            };
        }
        set!(cfg.train.epochs, self.epochs);
        set!(cfg.train.batch_size, self.batch_size);
        set!(cfg.train.lr0, self.lr0);
        set!(cfg.train.lambda, self.lambda);
        set!(cfg.train.mode, self.mode);
        set!(cfg.train.label_source, self.label_source);
        set!(cfg.train.seed, self.seed);
        set!(cfg.train.use_pivot_diff, self.use_pivot_diff);
        set!(cfg.train.augment, self.augment);
        set!(cfg.pseudo.k, self.k);
        set!(cfg.data.n_clips, self.n_clips);
        set!(cfg.data.noise_std, self.noise_std);
        set!(cfg.data.seed, self.data_seed);
        cfg.validate()
    }
}

/// Entry point used by the binary. Parses, dispatches, and turns errors
/// into exit codes; never panics on bad input.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    // First caller wins; later in-process calls keep the existing pool,
    // which is harmless because results are thread-count invariant.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global();
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Generate { config, out, overrides } => {
            let cfg = resolved(&config, &overrides)?;
            cmd_generate(&cfg, &out)
        }
        Command::Train { config, data, val_data, val_fraction, assignments, out, overrides } => {
            let cfg = resolved(&config, &overrides)?;
            cmd_train(&cfg, &data, val_data.as_deref(), val_fraction, assignments.as_deref(), &out)
        }
        Command::Eval { config, data, checkpoint, out, overrides } => {
            let cfg = resolved(&config, &overrides)?;
            cmd_eval(&cfg, &data, &checkpoint, &out)
        }
        Command::Pseudolabel { config, data, features, stand_in, out, overrides } => {
            let cfg = resolved(&config, &overrides)?;
            cmd_pseudolabel(&cfg, &data, features.as_deref(), stand_in, &out)
        }
        Command::SweepK { config, data, val_data, ks, seeds, out, overrides } => {
            let cfg = resolved(&config, &overrides)?;
            cmd_sweep_k(&cfg, &data, &val_data, &ks, &seeds, &out)
        }
        Command::Ablate { config, data, val_data, rows, seeds, out, overrides } => {
            let cfg = resolved(&config, &overrides)?;
            cmd_ablate(&cfg, &data, &val_data, &rows, &seeds, &out)
        }
        Command::Gradcheck { config, inject_sign_bug, overrides } => {
            let cfg = match config {
                Some(path) => resolved(&path, &overrides)?,
                None => {
                    let mut cfg = RunConfig::default();
                    overrides.apply(&mut cfg)?;
                    cfg
                }
            };
            cmd_gradcheck(&cfg, inject_sign_bug)
        }
        Command::FlipDump { data, clip, out } => cmd_flip_dump(&data, &clip, &out),
    }
}

fn resolved(config: &Path, overrides: &Overrides) -> Result<RunConfig> {
    let mut cfg = load_run_config(config)?;
    overrides.apply(&mut cfg)?;
    Ok(cfg)
}

fn ensure_out_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn cmd_generate(cfg: &RunConfig, out: &Path) -> Result<()> {
    let ds = crate::dataset::generate_synthetic_dataset(&cfg.data)?;
    save_dataset(&ds, out)?;
    println!(
        "generated {} clips: {} group classes, {} action classes",
        ds.clips.len(),
        ds.n_group_classes(),
        ds.n_action_classes()
    );
    println!(
        "geometry: actors={} frames={} joints={} noise_std={}",
        ds.n_actors(),
        ds.n_frames(),
        ds.layout.n_joints,
        cfg.data.noise_std
    );
    println!(
        "RESULT clips={} group_classes={} action_classes={} dir={}",
        ds.clips.len(),
        ds.n_group_classes(),
        ds.n_action_classes(),
        out.display()
    );
    Ok(())
}

/// Drops assignments whose clip id is absent from `ds`, so an assignment
/// file covering a full dataset still applies to a split of it.
fn filter_assignments(asg: Vec<PseudoAssignment>, ds: &Dataset) -> Vec<PseudoAssignment> {
    let ids: std::collections::HashSet<&str> =
        ds.clips.iter().map(|c| c.clip_id.as_str()).collect();
    asg.into_iter().filter(|a| ids.contains(a.clip_id.as_str())).collect()
}

fn cmd_train(
    cfg: &RunConfig,
    data: &Path,
    val_data: Option<&Path>,
    val_fraction: f64,
    assignments: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let full = load_dataset(data)?;
    let (mut train_ds, val_ds) = match val_data {
        Some(dir) => (full, load_dataset(dir)?),
        None => split_dataset(&full, val_fraction, cfg.train.seed)?,
    };
    let mut model_cfg = cfg.model.clone();
    let pseudo_labels =
        cfg.train.label_source == LabelSource::Pseudo && cfg.train.mode != TrainMode::GroupOnly;
    if pseudo_labels {
        let Some(path) = assignments else {
            return Err(Error::Config(
                "label_source = pseudo requires --assignments <file>".into(),
            ));
        };
        let asg = filter_assignments(read_assignments(path)?, &train_ds);
        train_ds = assign_pseudolabels(&train_ds, &asg)?;
        model_cfg.action_classes = train_ds.n_action_classes();
    }
    ensure_out_dir(out)?;
    println!("{}", model_summary(&model_cfg));
    let outcome = train(&train_ds, &val_ds, &model_cfg, &cfg.train)?;
    let every = (cfg.train.epochs / 10).max(1);
    for row in &outcome.history {
        if (row.epoch + 1) % every == 0 || row.epoch + 1 == outcome.history.len() {
            println!(
                "epoch {:>3} stage {} lr {:.6} loss_group {:.4} val_acc {:.4}",
                row.epoch, row.stage, row.lr, row.loss_group, row.val_acc_group
            );
        }
    }
    let ckpt = out.join("checkpoint.ckpt");
    save_checkpoint(&ckpt, &outcome.best_params)?;
    write_text(&out.join("history.csv"), &history_to_csv(&outcome.history))?;
    println!(
        "best validation accuracy {:.4} at epoch {}",
        outcome.best_val_acc, outcome.best_epoch
    );
    println!(
        "RESULT val_acc={} best_epoch={} epochs={} checkpoint={}",
        outcome.best_val_acc,
        outcome.best_epoch,
        outcome.history.len(),
        ckpt.display()
    );
    Ok(())
}

fn cmd_eval(cfg: &RunConfig, data: &Path, checkpoint: &Path, out: &Path) -> Result<()> {
    let ds = load_dataset(data)?;
    let model_cfg = cfg.effective_model();
    let params = load_checkpoint(checkpoint, &model_cfg)?;
    let report = evaluate_with(&params, &ds, &model_cfg, cfg.train.use_pivot_diff)?;
    ensure_out_dir(out)?;
    let csv_path = out.join("confusion.csv");
    write_text(&csv_path, &report.confusion_csv(&ds.group_classes))?;
    println!("clips scored: {}", report.n_clips());
    for (name, recall) in ds.group_classes.iter().zip(&report.per_class_recall) {
        println!("recall {name}: {recall:.4}");
    }
    let mut line = format!("RESULT group_acc={}", report.group_accuracy);
    if let Some(ind) = report.individual_accuracy {
        line.push_str(&format!(" individual_acc={ind}"));
    }
    line.push_str(&format!(" confusion={}", csv_path.display()));
    println!("{line}");
    Ok(())
}

fn cmd_pseudolabel(
    cfg: &RunConfig,
    data: &Path,
    features: Option<&Path>,
    stand_in: bool,
    out: &Path,
) -> Result<()> {
    if features.is_none() && !stand_in {
        return Err(Error::Config(
            "pseudolabel needs a feature source: --features <file> or --stand-in".into(),
        ));
    }
    let ds = load_dataset(data)?;
    let feats = match features {
        Some(path) => read_features_text(path)?,
        None => stand_in_features(&ds)?,
    };
    let pipeline = run_pseudo_pipeline(&ds, &feats, &cfg.pseudo)?;
    if let Some(dir) = out.parent() {
        if !dir.as_os_str().is_empty() {
            ensure_out_dir(dir)?;
        }
    }
    write_assignments(out, &pipeline.assignments)?;
    let mut counts = vec![0usize; cfg.pseudo.k];
    for a in &pipeline.assignments {
        counts[a.cluster] += 1;
    }
    let peak = counts.iter().copied().max().unwrap_or(1).max(1);
    println!("cluster sizes ({} actors over {} clusters):", pipeline.assignments.len(), cfg.pseudo.k);
    for (c, &n) in counts.iter().enumerate() {
        let bar = "#".repeat(n * 40 / peak);
        println!("  {c:>3}: {n:>6} {bar}");
    }
    println!(
        "RESULT assignments={} clusters={} inertia={} effective_dim={} dropped_components={} zero_rows={}",
        out.display(),
        cfg.pseudo.k,
        pipeline.inertia,
        pipeline.effective_dim,
        pipeline.dropped_components,
        pipeline.zero_rows
    );
    Ok(())
}

fn cmd_sweep_k(
    cfg: &RunConfig,
    data: &Path,
    val_data: &Path,
    ks: &[usize],
    seeds: &[u64],
    out: &Path,
) -> Result<()> {
    let train_ds = load_dataset(data)?;
    let val_ds = load_dataset(val_data)?;
    let a = cfg.data.action_classes;
    let ks = if ks.is_empty() { vec![a, 2 * a, 4 * a] } else { ks.to_vec() };
    let outcome = sweep_k(&train_ds, &val_ds, &ks, &cfg.model, &cfg.train, &cfg.pseudo, seeds)?;
    ensure_out_dir(out)?;
    let csv_path = out.join("sweep.csv");
    write_text(&csv_path, &sweep_csv(&outcome))?;
    let svg_path = out.join("sweep.svg");
    let series: Vec<(f64, f64)> =
        outcome.curve.iter().map(|&(k, acc)| (k as f64, acc)).collect();
    write_line_plot_svg(&svg_path, "validation accuracy by cluster count", "clusters", "accuracy", &series)?;
    for &(k, acc) in &outcome.curve {
        println!("k {k:>4}: mean val acc {acc:.4}");
    }
    let (best_k, best_acc) = outcome
        .curve
        .iter()
        .copied()
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
        .expect("sweep requires at least one k");
    println!(
        "RESULT best_k={best_k} best_acc={best_acc} csv={} svg={}",
        csv_path.display(),
        svg_path.display()
    );
    Ok(())
}

fn ablation_row(name: &str, base: &TrainConfig) -> Result<AblationRow> {
    let mut t = base.clone();
    t.mode = TrainMode::EndToEnd;
    t.label_source = LabelSource::GroundTruth;
    match name {
        "supervised" => {}
        "group_only" => t.mode = TrainMode::GroupOnly,
        "two_stage" => t.mode = TrainMode::TwoStage,
        "pseudo" => t.label_source = LabelSource::Pseudo,
        "no_pivot_diff" => t.use_pivot_diff = false,
        "augment" => t.augment = true,
        other => {
            return Err(Error::Config(format!(
                "unknown ablation row '{other}' (expected supervised, group_only, pseudo, two_stage, no_pivot_diff or augment)"
            )))
        }
    }
    Ok(AblationRow { name: name.to_string(), train: t })
}

fn cmd_ablate(
    cfg: &RunConfig,
    data: &Path,
    val_data: &Path,
    rows: &[String],
    seeds: &[u64],
    out: &Path,
) -> Result<()> {
    let train_ds = load_dataset(data)?;
    let val_ds = load_dataset(val_data)?;
    let rows: Result<Vec<AblationRow>> =
        rows.iter().map(|name| ablation_row(name, &cfg.train)).collect();
    let rows = rows?;
    let outcome = run_ablation_suite(&train_ds, &val_ds, &cfg.model, &rows, &cfg.pseudo, seeds)?;
    ensure_out_dir(out)?;
    let csv_path = out.join("ablation.csv");
    write_text(&csv_path, &ablation_csv(&outcome))?;
    let table = ablation_table(&outcome);
    let table_path = out.join("ablation.txt");
    write_text(&table_path, &table)?;
    print!("{table}");
    println!(
        "RESULT rows={} seeds={} csv={} table={}",
        rows.len(),
        seeds.len(),
        csv_path.display(),
        table_path.display()
    );
    Ok(())
}

fn cmd_gradcheck(cfg: &RunConfig, inject_sign_bug: bool) -> Result<()> {
    let gc = GradCheckConfig::default();
    let mut reports = check_layer_gradients_with(cfg.train.seed, &gc, inject_sign_bug)?;
    let model_cfg = ModelConfig::tiny();
    let params = ModelParams::init(&model_cfg, 42);
    let input = ModelCheckInput::random(&model_cfg, 7);
    for (name, report) in check_model_gradients(&model_cfg, &params, &input, &gc)? {
        reports.push((format!("model.{name}"), report));
    }
    let mut worst = ("-".to_string(), 0.0f64);
    let mut failures = Vec::new();
    for (name, report) in &reports {
        println!(
            "layer {name}: max rel err {:.3e} over {} checks (worst at {})",
            report.max_rel_err, report.checked, report.worst
        );
        if report.max_rel_err > worst.1 {
            worst = (name.clone(), report.max_rel_err);
        }
        if !report.passed(gc.tolerance) {
            failures.push(format!("{name} ({:.3e})", report.max_rel_err));
        }
    }
    if !failures.is_empty() {
        return Err(Error::GradCheck(format!(
            "tolerance {:.0e} exceeded by: {}",
            gc.tolerance,
            failures.join(", ")
        )));
    }
    println!(
        "RESULT layers={} max_rel_err={:.3e} worst_layer={}",
        reports.len(),
        worst.1,
        worst.0
    );
    Ok(())
}

fn cmd_flip_dump(data: &Path, clip_id: &str, out: &Path) -> Result<()> {
    let ds = load_dataset(data)?;
    let clip = ds
        .clips
        .iter()
        .find(|c| c.clip_id == clip_id)
        .ok_or_else(|| Error::Config(format!("clip '{clip_id}' not found in {}", data.display())))?;
    ensure_out_dir(out)?;
    let original = assemble_streams(clip, &ds.layout, true)?;
    let flipped_clip = flip_clip(clip, &ds.layout, ds.label_flip_map.as_ref());
    let flipped = assemble_streams(&flipped_clip, &ds.layout, true)?;
    let orig_path = out.join(format!("{clip_id}_streams.bin"));
    let flip_path = out.join(format!("{clip_id}_flipped_streams.bin"));
    write_streams_binary(&orig_path, &original)?;
    write_streams_binary(&flip_path, &flipped)?;
    println!(
        "streams for '{clip_id}': shape [{}, {}, {}, 3] per stream, pivot actor {} (flipped pivot {})",
        ds.n_actors(),
        ds.n_frames(),
        ds.layout.n_joints,
        original.pivot_index,
        flipped.pivot_index
    );
    println!(
        "RESULT original={} flipped={} pivot={}",
        orig_path.display(),
        flip_path.display(),
        original.pivot_index
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_one_and_help_exits_zero() {
        assert_eq!(run_from(["skelgroup", "no-such-command"]), 1);
        assert_eq!(run_from(["skelgroup", "train"]), 1);
        assert_eq!(run_from(["skelgroup", "--help"]), 0);
        assert_eq!(run_from(["skelgroup", "generate", "--help"]), 0);
    }

    #[test]
    fn ablation_row_names_map_to_configs() {
        let base = TrainConfig::default();
        assert_eq!(ablation_row("group_only", &base).unwrap().train.mode, TrainMode::GroupOnly);
        assert_eq!(
            ablation_row("pseudo", &base).unwrap().train.label_source,
            LabelSource::Pseudo
        );
        assert!(!ablation_row("no_pivot_diff", &base).unwrap().train.use_pivot_diff);
        assert!(ablation_row("augment", &base).unwrap().train.augment);
        assert!(matches!(ablation_row("bogus", &base), Err(Error::Config(_))));
    }

    #[test]
    fn overrides_apply_and_revalidate() {
        let mut cfg = RunConfig::default();
        let ov = Overrides {
            epochs: Some(3),
            lambda: Some(0.5),
            mode: Some(TrainMode::GroupOnly),
            k: Some(9),
            ..Overrides::default()
        };
        ov.apply(&mut cfg).unwrap();
        assert_eq!(cfg.train.epochs, 3);
        assert_eq!(cfg.train.lambda, 0.5);
        assert_eq!(cfg.train.mode, TrainMode::GroupOnly);
        assert_eq!(cfg.pseudo.k, 9);

        let bad = Overrides { lambda: Some(-1.0), ..Overrides::default() };
        assert!(bad.apply(&mut cfg).is_err());
    }
}
