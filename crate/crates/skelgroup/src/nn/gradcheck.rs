//! Central-difference gradient verification.
//!
//! Compares analytic gradients against `(f(x + h) - f(x - h)) / 2h` using a
//! per-element relative error `|a - n| / max(|a|, |n|, 1e-12)`. Large
//! parameter sets are subsampled deterministically.

use rand::seq::SliceRandom;
use rand::SeedableRng;

use crate::model::{backward, forward, joint_loss, ModelConfig, ModelParams};
use crate::streams::StreamTensors;
use crate::{DetRng, Error, Result};

/// Settings for a gradient check.
#[derive(Debug, Clone, Copy)]
pub struct GradCheckConfig {
    /// Central-difference step.
    pub step: f64,
    /// Maximum allowed relative error.
    pub tolerance: f64,
    /// Check at most this many parameters; more are subsampled.
    pub max_checks: usize,
    /// Seed for the subsampling choice.
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            step: 1e-4,
            tolerance: 1e-4,
            max_checks: 10_000,
            seed: 0,
        }
    }
}

/// Result of one gradient check.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Largest relative error observed.
    pub max_rel_err: f64,
    /// Where it occurred, e.g. `fusion1.weight[17]`.
    pub worst: String,
    /// Number of parameters compared.
    pub checked: usize,
}

impl GradCheckReport {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.max_rel_err < tolerance
    }
}

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-12)
}

/// Checks an analytic gradient for a scalar function over a flat parameter
/// vector. `f` must be deterministic.
pub fn check_gradient(
    f: impl Fn(&[f64]) -> f64,
    params: &[f64],
    analytic: &[f64],
    cfg: &GradCheckConfig,
) -> Result<GradCheckReport> {
    if params.len() != analytic.len() {
        return Err(Error::Shape {
            op: "check_gradient",
            message: format!(
                "{} params but {} gradient entries",
                params.len(),
                analytic.len()
            ),
        });
    }
    if !analytic.iter().all(|g| g.is_finite()) {
        return Err(Error::GradCheck("analytic gradient is not finite".into()));
    }
    let mut indices: Vec<usize> = (0..params.len()).collect();
    if indices.len() > cfg.max_checks {
        let mut rng = DetRng::seed_from_u64(cfg.seed);
        indices.shuffle(&mut rng);
        indices.truncate(cfg.max_checks);
        indices.sort_unstable();
    }
    let mut work = params.to_vec();
    let mut max_rel_err = 0.0;
    let mut worst = String::from("(none)");
    for &i in &indices {
        let orig = work[i];
        work[i] = orig + cfg.step;
        let up = f(&work);
        work[i] = orig - cfg.step;
        let down = f(&work);
        work[i] = orig;
        let numeric = (up - down) / (2.0 * cfg.step);
        if !numeric.is_finite() {
            return Err(Error::GradCheck(format!(
                "numeric gradient at index {i} is not finite"
            )));
        }
        let e = rel_err(analytic[i], numeric);
        if e > max_rel_err {
            max_rel_err = e;
            worst = format!("[{i}]");
        }
    }
    Ok(GradCheckReport {
        max_rel_err,
        worst,
        checked: indices.len(),
    })
}

/// Fixed scenario for whole-model gradient checks: streams, mask and labels
/// for one synthetic clip-sized input.
pub struct ModelCheckInput {
    pub streams: StreamTensors,
    pub mask: Vec<bool>,
    pub group_label: usize,
    pub action_labels: Vec<Option<usize>>,
    pub lambda: f64,
}

impl ModelCheckInput {
    /// Deterministic random scenario for `cfg`, with every actor real and
    /// labeled. Values are drawn away from ReLU kinks by construction of
    /// the seed, keeping central differences meaningful.
    pub fn random(cfg: &ModelConfig, seed: u64) -> Self {
        use crate::nn::Tensor;
        use rand::Rng;
        let mut rng = DetRng::seed_from_u64(seed);
        let shape = [cfg.actors, cfg.frames, cfg.joints, 3];
        let mut make = || {
            let data = (0..shape.iter().product::<usize>())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect::<Vec<f64>>();
            Tensor::from_vec(&shape, data).expect("shape matches data")
        };
        let streams = StreamTensors {
            pose: make(),
            motion: make(),
            pivot_diff: make(),
            pivot_index: 0,
        };
        let group_label = rng.random_range(0..cfg.group_classes);
        let action_labels = (0..cfg.actors)
            .map(|_| Some(rng.random_range(0..cfg.action_classes)))
            .collect();
        ModelCheckInput {
            streams,
            mask: vec![true; cfg.actors],
            group_label,
            action_labels,
            lambda: 0.7,
        }
    }
}

/// Runs a central-difference check of the full model's parameter gradients
/// on one scenario. Returns one report per named tensor.
pub fn check_model_gradients(
    model_cfg: &ModelConfig,
    params: &ModelParams,
    input: &ModelCheckInput,
    cfg: &GradCheckConfig,
) -> Result<Vec<(String, GradCheckReport)>> {
    let scenario_loss = |p: &ModelParams| -> f64 {
        let (out, _) = forward(model_cfg, p, &input.streams, &input.mask, "gradcheck")
            .expect("mask has real actors");
        joint_loss(
            &out,
            input.group_label,
            &input.action_labels,
            &input.mask,
            input.lambda,
        )
        .total
    };

    let (out, cache) = forward(model_cfg, params, &input.streams, &input.mask, "gradcheck")?;
    let terms = joint_loss(
        &out,
        input.group_label,
        &input.action_labels,
        &input.mask,
        input.lambda,
    );
    let mut grads = ModelParams::zeros(model_cfg);
    backward(
        model_cfg,
        params,
        &cache,
        &terms.d_group_logits,
        &terms.d_action_logits,
        &mut grads,
    );

    let total: usize = params.named().iter().map(|(_, t)| t.len()).sum();
    // Split the global budget across tensors proportionally.
    let mut reports = Vec::new();
    let mut rng = DetRng::seed_from_u64(cfg.seed);
    for ((name, tensor), (gname, grad)) in params.named().into_iter().zip(grads.named()) {
        debug_assert_eq!(name, gname);
        let budget = if total <= cfg.max_checks {
            tensor.len()
        } else {
            ((tensor.len() * cfg.max_checks) / total).max(1)
        };
        let mut indices: Vec<usize> = (0..tensor.len()).collect();
        if indices.len() > budget {
            indices.shuffle(&mut rng);
            indices.truncate(budget);
            indices.sort_unstable();
        }
        let mut max_rel_err = 0.0;
        let mut worst = format!("{name}[-]");
        for &i in &indices {
            let orig = tensor.data()[i];
            let mut work = params.clone();
            set_named(&mut work, &name, i, orig + cfg.step);
            let up = scenario_loss(&work);
            set_named(&mut work, &name, i, orig - cfg.step);
            let down = scenario_loss(&work);
            let numeric = (up - down) / (2.0 * cfg.step);
            let e = rel_err(grad.data()[i], numeric);
            if e > max_rel_err {
                max_rel_err = e;
                worst = format!("{name}[{i}]");
            }
        }
        reports.push((
            name,
            GradCheckReport {
                max_rel_err,
                worst,
                checked: indices.len(),
            },
        ));
    }
    Ok(reports)
}

fn set_named(params: &mut ModelParams, name: &str, index: usize, value: f64) {
    let (_, tensor) = params
        .named_mut()
        .into_iter()
        .find(|(n, _)| n == name)
        .expect("name comes from the same listing");
    tensor.data_mut()[index] = value;
}

/// Checks every layer primitive in isolation against central differences.
/// Each check packs the layer's inputs and parameters into one flat vector
/// and compares the analytic gradient of a random linear probe of the
/// output. Returns one report per primitive.
pub fn check_layer_gradients(
    seed: u64,
    cfg: &GradCheckConfig,
) -> Result<Vec<(String, GradCheckReport)>> {
    check_layer_gradients_with(seed, cfg, false)
}

/// [`check_layer_gradients`] with an optional negative control: when
/// `negate_analytic` is set the analytic gradients are sign-flipped before
/// comparison, so every check must fail. Exists to prove the checker can
/// reject a wrong gradient.
pub fn check_layer_gradients_with(
    seed: u64,
    cfg: &GradCheckConfig,
    negate_analytic: bool,
) -> Result<Vec<(String, GradCheckReport)>> {
    use crate::nn::layers::{
        conv2d_backward, conv2d_forward, linear_backward, linear_forward, masked_max_pool,
        masked_max_pool_backward, relu_backward_inplace, relu_inplace, softmax_cross_entropy,
        transpose_wc, ConvShape,
    };
    use rand::Rng;

    let mut rng = DetRng::seed_from_u64(seed);
    // Keep magnitudes around 1 and away from ReLU and max-pool kinks.
    let sample = |n: usize, rng: &mut DetRng| -> Vec<f64> {
        (0..n).map(|_| rng.random_range(0.1..1.0) * if rng.random_range(0..2) == 0 { -1.0 } else { 1.0 }).collect()
    };
    let maybe_negate = |grad: &mut Vec<f64>| {
        if negate_analytic {
            for g in grad.iter_mut() {
                *g = -*g;
            }
        }
    };

    let mut reports = Vec::new();

    // Convolutions: 1x1 stride 1, 3x1 stride 1, 3x3 stride 2. The packed
    // vector is [weight | bias | input]; the probe projects the output map.
    let conv_cases = [
        ("conv1x1", ConvShape { h: 5, w: 4, cin: 3, kh: 1, kw: 1, cout: 4, stride: 1 }),
        ("conv3x1", ConvShape { h: 5, w: 4, cin: 3, kh: 3, kw: 1, cout: 4, stride: 1 }),
        ("conv3x3_stride2", ConvShape { h: 5, w: 4, cin: 3, kh: 3, kw: 3, cout: 4, stride: 2 }),
    ];
    for (name, shape) in conv_cases {
        let probe = sample(shape.output_len(), &mut rng);
        let packed = [
            sample(shape.weight_len(), &mut rng),
            sample(shape.cout, &mut rng),
            sample(shape.input_len(), &mut rng),
        ]
        .concat();
        let split = |p: &[f64]| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
            let w = p[..shape.weight_len()].to_vec();
            let b = p[shape.weight_len()..shape.weight_len() + shape.cout].to_vec();
            let x = p[shape.weight_len() + shape.cout..].to_vec();
            (w, b, x)
        };
        let (w, b, x) = split(&packed);
        let mut d_w = vec![0.0; w.len()];
        let mut d_b = vec![0.0; b.len()];
        let mut d_x = vec![0.0; x.len()];
        conv2d_backward(&shape, &x, &w, &probe, &mut d_w, &mut d_b, Some(&mut d_x));
        let mut analytic = [d_w, d_b, d_x].concat();
        maybe_negate(&mut analytic);
        let probe_ref = &probe;
        let report = check_gradient(
            |p| {
                let (w, b, x) = split(p);
                conv2d_forward(&shape, &x, &w, &b)
                    .iter()
                    .zip(probe_ref)
                    .map(|(o, q)| o * q)
                    .sum()
            },
            &packed,
            &analytic,
            cfg,
        )?;
        reports.push((name.to_string(), report));
    }

    // Axis transpose is linear: its gradient is the inverse transpose.
    {
        let (h, w, c) = (4, 5, 3);
        let x = sample(h * w * c, &mut rng);
        let probe = sample(h * w * c, &mut rng);
        let mut analytic = transpose_wc(&probe, h, c, w);
        maybe_negate(&mut analytic);
        let probe_ref = &probe;
        let report = check_gradient(
            |p| transpose_wc(p, h, w, c).iter().zip(probe_ref).map(|(o, q)| o * q).sum(),
            &x,
            &analytic,
            cfg,
        )?;
        reports.push(("transpose".to_string(), report));
    }

    // Fully connected layer, packed as [weight | bias | input].
    {
        let (in_dim, out_dim) = (7, 4);
        let probe = sample(out_dim, &mut rng);
        let packed = [
            sample(out_dim * in_dim, &mut rng),
            sample(out_dim, &mut rng),
            sample(in_dim, &mut rng),
        ]
        .concat();
        let split = |p: &[f64]| {
            (
                p[..out_dim * in_dim].to_vec(),
                p[out_dim * in_dim..out_dim * in_dim + out_dim].to_vec(),
                p[out_dim * in_dim + out_dim..].to_vec(),
            )
        };
        let (w, _, x) = split(&packed);
        let mut d_w = vec![0.0; out_dim * in_dim];
        let mut d_b = vec![0.0; out_dim];
        let d_x = linear_backward(&w, in_dim, &x, &probe, &mut d_w, &mut d_b);
        let mut analytic = [d_w, d_b, d_x].concat();
        maybe_negate(&mut analytic);
        let probe_ref = &probe;
        let report = check_gradient(
            |p| {
                let (w, b, x) = split(p);
                linear_forward(&w, &b, in_dim, &x)
                    .iter()
                    .zip(probe_ref)
                    .map(|(o, q)| o * q)
                    .sum()
            },
            &packed,
            &analytic,
            cfg,
        )?;
        reports.push(("linear".to_string(), report));
    }

    // ReLU: inputs are sampled at least 0.1 from the kink.
    {
        let x = sample(24, &mut rng);
        let probe = sample(24, &mut rng);
        let mut activated = x.clone();
        relu_inplace(&mut activated);
        let mut analytic = probe.clone();
        relu_backward_inplace(&mut analytic, &activated);
        maybe_negate(&mut analytic);
        let probe_ref = &probe;
        let report = check_gradient(
            |p| {
                let mut a = p.to_vec();
                relu_inplace(&mut a);
                a.iter().zip(probe_ref).map(|(o, q)| o * q).sum()
            },
            &x,
            &analytic,
            cfg,
        )?;
        reports.push(("relu".to_string(), report));
    }

    // Masked max over actor rows. Column values are spread out so the
    // argmax cannot change under the finite-difference step.
    {
        let (rows, dim) = (4, 6);
        let mask = [true, false, true, true];
        let mut flat = sample(rows * dim, &mut rng);
        for f in 0..dim {
            let mut order: Vec<usize> = (0..rows).collect();
            order.sort_by(|&a, &b| flat[a * dim + f].total_cmp(&flat[b * dim + f]));
            for (rank, &r) in order.iter().enumerate() {
                flat[r * dim + f] += rank as f64 * 0.05;
            }
        }
        let probe = sample(dim, &mut rng);
        let as_rows = |p: &[f64]| -> Vec<Vec<f64>> {
            (0..rows).map(|r| p[r * dim..(r + 1) * dim].to_vec()).collect()
        };
        let (_, argmax) = masked_max_pool(&as_rows(&flat), &mask).expect("mask has rows");
        let mut d_rows = vec![vec![0.0; dim]; rows];
        masked_max_pool_backward(&probe, &argmax, &mut d_rows);
        let mut analytic: Vec<f64> = d_rows.concat();
        maybe_negate(&mut analytic);
        let probe_ref = &probe;
        let report = check_gradient(
            |p| {
                let (pooled, _) = masked_max_pool(&as_rows(p), &mask).expect("mask has rows");
                pooled.iter().zip(probe_ref).map(|(o, q)| o * q).sum()
            },
            &flat,
            &analytic,
            cfg,
        )?;
        reports.push(("masked_max_pool".to_string(), report));
    }

    // Softmax cross entropy: the loss itself is the scalar.
    {
        let logits = sample(5, &mut rng);
        let target = 2;
        let (_, mut analytic) = softmax_cross_entropy(&logits, target);
        maybe_negate(&mut analytic);
        let report = check_gradient(
            |p| softmax_cross_entropy(p, target).0,
            &logits,
            &analytic,
            cfg,
        )?;
        reports.push(("softmax_cross_entropy".to_string(), report));
    }

    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_correct_gradient_of_quadratic() {
        // f(x) = sum(x_i^2), gradient 2x.
        let params = vec![0.3, -1.2, 2.0, 0.07];
        let analytic: Vec<f64> = params.iter().map(|x| 2.0 * x).collect();
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum();
        let report =
            check_gradient(f, &params, &analytic, &GradCheckConfig::default()).unwrap();
        assert!(report.passed(1e-6), "max err {}", report.max_rel_err);
        assert_eq!(report.checked, 4);
    }

    #[test]
    fn rejects_wrong_gradient() {
        let params = vec![0.5, 1.5];
        let analytic = vec![1.0, 3.0 + 0.1]; // second entry off by 0.1
        let f = |x: &[f64]| x[0] + 1.5 * x[1] * x[1] / 1.5 * 1.0; // x0 + x1^2
        let report =
            check_gradient(f, &params, &analytic, &GradCheckConfig::default()).unwrap();
        assert!(!report.passed(1e-4));
        assert_eq!(report.worst, "[1]");
    }

    #[test]
    fn subsampling_is_deterministic_and_bounded() {
        let n = 500;
        let params: Vec<f64> = (0..n).map(|i| i as f64 * 0.01).collect();
        let analytic: Vec<f64> = params.iter().map(|x| 2.0 * x).collect();
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum();
        let cfg = GradCheckConfig {
            max_checks: 50,
            ..Default::default()
        };
        let a = check_gradient(f, &params, &analytic, &cfg).unwrap();
        let b = check_gradient(f, &params, &analytic, &cfg).unwrap();
        assert_eq!(a.checked, 50);
        assert_eq!(a.max_rel_err, b.max_rel_err);
    }

    #[test]
    fn non_finite_analytic_gradient_is_reported() {
        let params = vec![1.0];
        let analytic = vec![f64::NAN];
        let f = |x: &[f64]| x[0];
        assert!(matches!(
            check_gradient(f, &params, &analytic, &GradCheckConfig::default()),
            Err(Error::GradCheck(_))
        ));
    }

    #[test]
    fn layer_suite_passes_and_sign_flip_fails() {
        let cfg = GradCheckConfig::default();
        let reports = check_layer_gradients(0, &cfg).unwrap();
        let names: Vec<&str> = reports.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(
            names,
            [
                "conv1x1",
                "conv3x1",
                "conv3x3_stride2",
                "transpose",
                "linear",
                "relu",
                "masked_max_pool",
                "softmax_cross_entropy"
            ]
        );
        for (name, report) in &reports {
            assert!(
                report.passed(cfg.tolerance),
                "{name}: max rel err {} at {}",
                report.max_rel_err,
                report.worst
            );
        }
        // Negative control: flipping the analytic sign must break every
        // layer whose gradient is nonzero.
        let flipped = check_layer_gradients_with(0, &cfg, true).unwrap();
        for (name, report) in &flipped {
            assert!(
                !report.passed(cfg.tolerance),
                "{name} still passed with a sign-flipped gradient"
            );
        }
    }

    #[test]
    fn full_tiny_model_passes() {
        let model_cfg = ModelConfig::tiny();
        let params = ModelParams::init(&model_cfg, 42);
        let input = ModelCheckInput::random(&model_cfg, 7);
        let reports = check_model_gradients(
            &model_cfg,
            &params,
            &input,
            &GradCheckConfig::default(),
        )
        .unwrap();
        assert_eq!(reports.len(), 32);
        for (name, report) in &reports {
            assert!(
                report.passed(1e-4),
                "{name}: max rel err {} at {}",
                report.max_rel_err,
                report.worst
            );
        }
    }
}
