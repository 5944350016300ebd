//! Evaluation: accuracy and confusion reporting, the cluster-count sweep,
//! and the ablation suite. Sweep and ablation cells each run a full training
//! job, so everything here is a pure function of (data, configs, seeds).

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::model::{forward, ModelConfig, ModelParams};
use crate::nn::layers::argmax;
use crate::pseudo::{run_pseudo_pipeline, stand_in_features, PseudoConfig};
use crate::train::{prepare_samples, train, LabelSource, TrainConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub group_accuracy: f64,
    /// Accuracy over present actors that carry a label; `None` when the
    /// dataset has no labels or its class count differs from the model's.
    pub individual_accuracy: Option<f64>,
    /// `confusion[true][predicted]`, one count per clip.
    pub confusion: Vec<Vec<usize>>,
    /// Diagonal over row sum; 0 for classes with no support.
    pub per_class_recall: Vec<f64>,
}

impl EvalReport {
    pub fn n_clips(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    /// Row-major counts with a class-name header column and row.
    pub fn confusion_csv(&self, class_names: &[String]) -> String {
        let mut out = String::from("true\\pred");
        for name in class_names {
            let _ = write!(out, ",{name}");
        }
        out.push('\n');
        for (row, name) in self.confusion.iter().zip(class_names) {
            let _ = write!(out, "{name}");
            for count in row {
                let _ = write!(out, ",{count}");
            }
            out.push('\n');
        }
        out
    }
}

/// Tallies predictions against labels into a report. Separated from the
/// model so the counting can be checked by hand.
pub(crate) fn report_from_predictions(
    predictions: &[usize],
    labels: &[usize],
    n_classes: usize,
) -> EvalReport {
    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    let mut correct = 0usize;
    for (&pred, &label) in predictions.iter().zip(labels) {
        confusion[label][pred] += 1;
        correct += (pred == label) as usize;
    }
    let per_class_recall = confusion
        .iter()
        .enumerate()
        .map(|(c, row)| {
            let support: usize = row.iter().sum();
            if support == 0 {
                0.0
            } else {
                confusion[c][c] as f64 / support as f64
            }
        })
        .collect();
    EvalReport {
        group_accuracy: correct as f64 / predictions.len().max(1) as f64,
        individual_accuracy: None,
        confusion,
        per_class_recall,
    }
}

/// Runs the model over every clip and tallies group and per-actor accuracy.
/// Prediction ties resolve to the lowest class id.
pub fn evaluate(
    params: &ModelParams,
    ds: &Dataset,
    model_cfg: &ModelConfig,
) -> Result<EvalReport> {
    evaluate_with(params, ds, model_cfg, true)
}

/// [`evaluate`] with the pivot-difference stream optionally zeroed, so
/// models trained without it are scored on the inputs they saw.
pub fn evaluate_with(
    params: &ModelParams,
    ds: &Dataset,
    model_cfg: &ModelConfig,
    use_pivot_diff: bool,
) -> Result<EvalReport> {
    ds.ensure_valid()?;
    if ds.n_actors() != model_cfg.actors
        || ds.n_frames() != model_cfg.frames
        || ds.layout.n_joints != model_cfg.joints
        || ds.n_group_classes() != model_cfg.group_classes
    {
        return Err(Error::Config(format!(
            "dataset geometry {}x{}x{} with {} group classes does not match the model",
            ds.n_actors(),
            ds.n_frames(),
            ds.layout.n_joints,
            ds.n_group_classes()
        )));
    }
    let samples = prepare_samples(ds, use_pivot_diff, false)?;
    let outputs: Result<Vec<_>> = samples
        .par_iter()
        .map(|s| {
            let (out, _) = forward(model_cfg, params, &s.streams, &s.mask, &s.clip_id)?;
            let group_pred = argmax(&out.group_logits);
            let action_preds: Vec<usize> =
                out.action_logits.iter().map(|l| argmax(l)).collect();
            Ok((group_pred, action_preds))
        })
        .collect();
    let outputs = outputs?;

    let predictions: Vec<usize> = outputs.iter().map(|(g, _)| *g).collect();
    let labels: Vec<usize> = samples.iter().map(|s| s.group_label).collect();
    let mut report =
        report_from_predictions(&predictions, &labels, model_cfg.group_classes);

    if ds.n_action_classes() == model_cfg.action_classes {
        let mut correct = 0usize;
        let mut total = 0usize;
        for (sample, (_, action_preds)) in samples.iter().zip(&outputs) {
            for ((&present, &label), &pred) in
                sample.mask.iter().zip(&sample.action_labels).zip(action_preds)
            {
                if let (true, Some(label)) = (present, label) {
                    total += 1;
                    correct += (pred == label) as usize;
                }
            }
        }
        report.individual_accuracy = (total > 0).then(|| correct as f64 / total as f64);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub k: usize,
    pub seed: u64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub points: Vec<SweepPoint>,
    /// Mean validation accuracy per swept k, in input order.
    pub curve: Vec<(usize, f64)>,
}

pub fn sweep_csv(outcome: &SweepOutcome) -> String {
    let mut out = String::from("k,seed,val_acc\n");
    for p in &outcome.points {
        let _ = writeln!(out, "{},{},{}", p.k, p.seed, p.accuracy);
    }
    out
}

/// For each cluster count: build pseudo-labels from the stand-in descriptor,
/// train with them under every seed, and score group accuracy on the
/// validation set. Clustering uses the fixed seed from `pseudo_cfg`; the
/// seeds parameter varies initialization and batch order of training.
pub fn sweep_k(
    train_ds: &Dataset,
    val_ds: &Dataset,
    ks: &[usize],
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    pseudo_cfg: &PseudoConfig,
    seeds: &[u64],
) -> Result<SweepOutcome> {
    if ks.is_empty() {
        return Err(Error::Config("sweep needs at least one cluster count".into()));
    }
    if seeds.is_empty() {
        return Err(Error::Config("sweep needs at least one seed".into()));
    }
    let feats = stand_in_features(train_ds)?;
    let mut points = Vec::with_capacity(ks.len() * seeds.len());
    let mut curve = Vec::with_capacity(ks.len());
    for &k in ks {
        let pcfg = PseudoConfig { k, ..pseudo_cfg.clone() };
        let pipeline = run_pseudo_pipeline(train_ds, &feats, &pcfg)?;
        let mcfg = ModelConfig { action_classes: k, ..model_cfg.clone() };
        let mut sum = 0.0;
        for &seed in seeds {
            let tcfg = TrainConfig {
                seed,
                label_source: LabelSource::Pseudo,
                ..train_cfg.clone()
            };
            let outcome = train(&pipeline.dataset, val_ds, &mcfg, &tcfg)?;
            let report =
                evaluate_with(&outcome.best_params, val_ds, &mcfg, tcfg.use_pivot_diff)?;
            sum += report.group_accuracy;
            points.push(SweepPoint { k, seed, accuracy: report.group_accuracy });
        }
        curve.push((k, sum / seeds.len() as f64));
    }
    Ok(SweepOutcome { points, curve })
}

#[derive(Debug, Clone)]
pub struct AblationRow {
    pub name: String,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationCell {
    pub name: String,
    pub seed: u64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationOutcome {
    pub cells: Vec<AblationCell>,
    /// (name, mean, standard deviation) per row, in input order.
    pub summary: Vec<(String, f64, f64)>,
}

pub fn ablation_csv(outcome: &AblationOutcome) -> String {
    let mut out = String::from("name,seed,val_acc\n");
    for c in &outcome.cells {
        let _ = writeln!(out, "{},{},{}", c.name, c.seed, c.accuracy);
    }
    out
}

/// Fixed-width text table of per-row mean and standard deviation.
pub fn ablation_table(outcome: &AblationOutcome) -> String {
    let width = outcome
        .summary
        .iter()
        .map(|(name, _, _)| name.len())
        .max()
        .unwrap_or(4)
        .max(4);
    let mut out = format!("{:<width$}  {:>8}  {:>8}\n", "name", "mean", "std");
    for (name, mean, std) in &outcome.summary {
        let _ = writeln!(out, "{name:<width$}  {mean:>8.4}  {std:>8.4}");
    }
    out
}

/// Trains and scores every named configuration over a shared seed set.
/// Rows with `label_source = pseudo` first run the clustering pipeline on
/// the stand-in descriptor with `pseudo_cfg` (the model's action head is
/// resized to the cluster count for those rows).
pub fn run_ablation_suite(
    train_ds: &Dataset,
    val_ds: &Dataset,
    model_cfg: &ModelConfig,
    rows: &[AblationRow],
    pseudo_cfg: &PseudoConfig,
    seeds: &[u64],
) -> Result<AblationOutcome> {
    if seeds.is_empty() {
        return Err(Error::Config("ablation needs at least one seed".into()));
    }
    let mut cells = Vec::with_capacity(rows.len() * seeds.len());
    let mut summary = Vec::with_capacity(rows.len());
    for row in rows {
        row.train.validate()?;
        let (data, mcfg);
        if row.train.label_source == LabelSource::Pseudo {
            let feats = stand_in_features(train_ds)?;
            let pipeline = run_pseudo_pipeline(train_ds, &feats, pseudo_cfg)?;
            mcfg = ModelConfig { action_classes: pseudo_cfg.k, ..model_cfg.clone() };
            data = pipeline.dataset;
        } else {
            mcfg = model_cfg.clone();
            data = train_ds.clone();
        }
        let mut accs = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let tcfg = TrainConfig { seed, ..row.train.clone() };
            let outcome = train(&data, val_ds, &mcfg, &tcfg)?;
            let report =
                evaluate_with(&outcome.best_params, val_ds, &mcfg, tcfg.use_pivot_diff)?;
            accs.push(report.group_accuracy);
            cells.push(AblationCell {
                name: row.name.clone(),
                seed,
                accuracy: report.group_accuracy,
            });
        }
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        let var = accs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>()
            / accs.len() as f64;
        summary.push((row.name.clone(), mean, var.sqrt()));
    }
    Ok(AblationOutcome { cells, summary })
}

/// Writes a self-contained single-series line plot. Output is plain SVG
/// markup, deterministic for identical input.
pub fn write_line_plot_svg(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(f64, f64)],
) -> Result<()> {
    if series.is_empty() {
        return Err(Error::Config("cannot plot an empty series".into()));
    }
    let (w, h, ml, mr, mt, mb) = (640.0, 420.0, 70.0, 25.0, 45.0, 55.0);
    let (pw, ph) = (w - ml - mr, h - mt - mb);
    let xs: Vec<f64> = series.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = series.iter().map(|p| p.1).collect();
    let (x_min, x_max) = (
        xs.iter().cloned().fold(f64::INFINITY, f64::min),
        xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let (y_min, y_max) = (
        ys.iter().cloned().fold(f64::INFINITY, f64::min),
        ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let x_span = (x_max - x_min).max(1e-9);
    let y_span = (y_max - y_min).max(1e-9);
    let px = |x: f64| ml + (x - x_min) / x_span * pw;
    let py = |y: f64| mt + ph - (y - y_min) / y_span * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{title}</text>",
        w / 2.0
    );
    // Axes.
    let _ = writeln!(
        svg,
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{:.1}\" stroke=\"black\"/>",
        mt + ph
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{ml}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>",
        mt + ph,
        ml + pw,
        mt + ph
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">{x_label}</text>",
        ml + pw / 2.0,
        h - 12.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 {:.1})\">{y_label}</text>",
        mt + ph / 2.0,
        mt + ph / 2.0
    );
    // Ticks: one per data x, five on y.
    for &x in &xs {
        let sx = px(x);
        let _ = writeln!(
            svg,
            "<line x1=\"{sx:.1}\" y1=\"{:.1}\" x2=\"{sx:.1}\" y2=\"{:.1}\" stroke=\"black\"/>",
            mt + ph,
            mt + ph + 5.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{sx:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{x}</text>",
            mt + ph + 20.0
        );
    }
    for i in 0..=4 {
        let y = y_min + y_span * i as f64 / 4.0;
        let sy = py(y);
        let _ = writeln!(
            svg,
            "<line x1=\"{:.1}\" y1=\"{sy:.1}\" x2=\"{ml}\" y2=\"{sy:.1}\" stroke=\"black\"/>",
            ml - 5.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{y:.3}</text>",
            ml - 9.0,
            sy + 4.0
        );
    }
    let pts: Vec<String> = series
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
        .collect();
    let _ = writeln!(
        svg,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\"/>",
        pts.join(" ")
    );
    for &(x, y) in series {
        let _ = writeln!(
            svg,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"steelblue\"/>",
            px(x),
            py(y)
        );
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}
