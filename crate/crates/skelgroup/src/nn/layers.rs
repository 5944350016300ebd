//! Forward / backward layer primitives.
//!
//! Activations use a channels-last layout: an image of height `h`, width `w`
//! and `c` channels is a row-major `[h, w, c]` buffer, so the channel values
//! of one pixel are contiguous. Convolution kernels are `[kh, kw, cin, cout]`
//! row-major, which lets the kernel double as a `(kh*kw*cin) x cout` matrix
//! without copying. Convolutions lower to im2col plus a small hand-rolled
//! matmul; backward passes rebuild the im2col buffer instead of caching it.

/// Geometry of one convolution call.
///
/// Padding is always "same": the output spatial size is `ceil(in / stride)`
/// and the input is zero-padded as evenly as possible, with the extra row or
/// column (when the total padding is odd) going to the bottom/right.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvShape {
    pub h: usize,
    pub w: usize,
    pub cin: usize,
    pub kh: usize,
    pub kw: usize,
    pub cout: usize,
    pub stride: usize,
}

impl ConvShape {
    pub fn out_h(&self) -> usize {
        self.h.div_ceil(self.stride)
    }

    pub fn out_w(&self) -> usize {
        self.w.div_ceil(self.stride)
    }

    fn pad_top(&self) -> usize {
        same_pad_begin(self.h, self.kh, self.stride)
    }

    fn pad_left(&self) -> usize {
        same_pad_begin(self.w, self.kw, self.stride)
    }

    pub fn weight_len(&self) -> usize {
        self.kh * self.kw * self.cin * self.cout
    }

    pub fn input_len(&self) -> usize {
        self.h * self.w * self.cin
    }

    pub fn output_len(&self) -> usize {
        self.out_h() * self.out_w() * self.cout
    }
}

/// Leading zero-padding for "same" convolution of size `n`, kernel `k`,
/// stride `s`: half (rounded down) of the total padding needed to make the
/// output exactly `ceil(n / s)`.
fn same_pad_begin(n: usize, k: usize, s: usize) -> usize {
    let out = n.div_ceil(s);
    let total = ((out - 1) * s + k).saturating_sub(n);
    total / 2
}

/// C += A * B where A is m x k, B is k x n, C is m x n, all row-major.
pub(crate) fn matmul_accum(c: &mut [f64], a: &[f64], m: usize, k: usize, b: &[f64], n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let c_row = &mut c[i * n..(i + 1) * n];
        for (p, &av) in a_row.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let b_row = &b[p * n..(p + 1) * n];
            for j in 0..n {
                c_row[j] += av * b_row[j];
            }
        }
    }
}

/// C += A^T * B where A is m x k, B is m x n, C is k x n, all row-major.
pub(crate) fn matmul_at_accum(c: &mut [f64], a: &[f64], m: usize, k: usize, b: &[f64], n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), m * n);
    debug_assert_eq!(c.len(), k * n);
    for r in 0..m {
        let a_row = &a[r * k..(r + 1) * k];
        let b_row = &b[r * n..(r + 1) * n];
        for (p, &av) in a_row.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let c_row = &mut c[p * n..(p + 1) * n];
            for j in 0..n {
                c_row[j] += av * b_row[j];
            }
        }
    }
}

/// Unrolls input patches into a `(out_h*out_w) x (kh*kw*cin)` row-major
/// matrix. Out-of-bounds positions stay zero.
fn im2col(shape: &ConvShape, input: &[f64]) -> Vec<f64> {
    let (oh, ow) = (shape.out_h(), shape.out_w());
    let patch = shape.kh * shape.kw * shape.cin;
    let pad_top = shape.pad_top() as isize;
    let pad_left = shape.pad_left() as isize;
    let mut col = vec![0.0; oh * ow * patch];
    for oy in 0..oh {
        for ox in 0..ow {
            let row = &mut col[(oy * ow + ox) * patch..(oy * ow + ox + 1) * patch];
            for ki in 0..shape.kh {
                let iy = (oy * shape.stride) as isize - pad_top + ki as isize;
                if iy < 0 || iy >= shape.h as isize {
                    continue;
                }
                for kj in 0..shape.kw {
                    let ix = (ox * shape.stride) as isize - pad_left + kj as isize;
                    if ix < 0 || ix >= shape.w as isize {
                        continue;
                    }
                    let src = (iy as usize * shape.w + ix as usize) * shape.cin;
                    let dst = (ki * shape.kw + kj) * shape.cin;
                    row[dst..dst + shape.cin].copy_from_slice(&input[src..src + shape.cin]);
                }
            }
        }
    }
    col
}

/// Scatter-adds an im2col-layout gradient back onto the input grid.
fn col2im_accum(shape: &ConvShape, d_col: &[f64], d_input: &mut [f64]) {
    let (oh, ow) = (shape.out_h(), shape.out_w());
    let patch = shape.kh * shape.kw * shape.cin;
    let pad_top = shape.pad_top() as isize;
    let pad_left = shape.pad_left() as isize;
    for oy in 0..oh {
        for ox in 0..ow {
            let row = &d_col[(oy * ow + ox) * patch..(oy * ow + ox + 1) * patch];
            for ki in 0..shape.kh {
                let iy = (oy * shape.stride) as isize - pad_top + ki as isize;
                if iy < 0 || iy >= shape.h as isize {
                    continue;
                }
                for kj in 0..shape.kw {
                    let ix = (ox * shape.stride) as isize - pad_left + kj as isize;
                    if ix < 0 || ix >= shape.w as isize {
                        continue;
                    }
                    let dst = (iy as usize * shape.w + ix as usize) * shape.cin;
                    let src = (ki * shape.kw + kj) * shape.cin;
                    for c in 0..shape.cin {
                        d_input[dst + c] += row[src + c];
                    }
                }
            }
        }
    }
}

/// 2D convolution, channels-last, "same" padding.
///
/// `input` is `[h, w, cin]`, `weight` is `[kh, kw, cin, cout]`, `bias` is
/// `[cout]`; the result is `[out_h, out_w, cout]`.
pub fn conv2d_forward(shape: &ConvShape, input: &[f64], weight: &[f64], bias: &[f64]) -> Vec<f64> {
    debug_assert_eq!(input.len(), shape.input_len());
    debug_assert_eq!(weight.len(), shape.weight_len());
    debug_assert_eq!(bias.len(), shape.cout);
    let rows = shape.out_h() * shape.out_w();
    let patch = shape.kh * shape.kw * shape.cin;
    let col = im2col(shape, input);
    let mut out = Vec::with_capacity(rows * shape.cout);
    for _ in 0..rows {
        out.extend_from_slice(bias);
    }
    matmul_accum(&mut out, &col, rows, patch, weight, shape.cout);
    out
}

/// Backward pass of [`conv2d_forward`].
///
/// Adds the weight and bias gradients into `d_weight` / `d_bias` and, when
/// `d_input` is `Some`, adds the input gradient as well (the first layer of a
/// network can skip it).
pub fn conv2d_backward(
    shape: &ConvShape,
    input: &[f64],
    weight: &[f64],
    d_out: &[f64],
    d_weight: &mut [f64],
    d_bias: &mut [f64],
    d_input: Option<&mut [f64]>,
) {
    let rows = shape.out_h() * shape.out_w();
    let patch = shape.kh * shape.kw * shape.cin;
    debug_assert_eq!(d_out.len(), rows * shape.cout);
    for row in 0..rows {
        let src = &d_out[row * shape.cout..(row + 1) * shape.cout];
        for (b, &g) in d_bias.iter_mut().zip(src) {
            *b += g;
        }
    }
    let col = im2col(shape, input);
    matmul_at_accum(d_weight, &col, rows, patch, d_out, shape.cout);
    if let Some(d_input) = d_input {
        let mut w_t = vec![0.0; shape.cout * patch];
        for p in 0..patch {
            for co in 0..shape.cout {
                w_t[co * patch + p] = weight[p * shape.cout + co];
            }
        }
        let mut d_col = vec![0.0; rows * patch];
        matmul_accum(&mut d_col, d_out, rows, shape.cout, &w_t, patch);
        col2im_accum(shape, &d_col, d_input);
    }
}

/// Swaps the last two axes of a `[h, w, c]` buffer, producing `[h, c, w]`.
///
/// Used between convolution stages to move the joint axis into the channel
/// position so later kernels mix joints.
pub fn transpose_wc(input: &[f64], h: usize, w: usize, c: usize) -> Vec<f64> {
    debug_assert_eq!(input.len(), h * w * c);
    let mut out = vec![0.0; h * w * c];
    for y in 0..h {
        let plane = &input[y * w * c..(y + 1) * w * c];
        let dst = &mut out[y * w * c..(y + 1) * w * c];
        for x in 0..w {
            for ch in 0..c {
                dst[ch * w + x] = plane[x * c + ch];
            }
        }
    }
    out
}

/// Dense layer `y = W x + b` with `weight` stored `[out_dim, in_dim]`.
pub fn linear_forward(weight: &[f64], bias: &[f64], in_dim: usize, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), in_dim);
    debug_assert_eq!(weight.len() % in_dim, 0);
    weight
        .chunks_exact(in_dim)
        .zip(bias)
        .map(|(row, &b)| b + row.iter().zip(x).map(|(&w, &xv)| w * xv).sum::<f64>())
        .collect()
}

/// Backward pass of [`linear_forward`]; accumulates into the gradient
/// buffers and returns the input gradient.
pub fn linear_backward(
    weight: &[f64],
    in_dim: usize,
    x: &[f64],
    d_out: &[f64],
    d_weight: &mut [f64],
    d_bias: &mut [f64],
) -> Vec<f64> {
    let out_dim = d_out.len();
    debug_assert_eq!(weight.len(), out_dim * in_dim);
    let mut d_x = vec![0.0; in_dim];
    for o in 0..out_dim {
        let g = d_out[o];
        d_bias[o] += g;
        if g == 0.0 {
            continue;
        }
        let w_row = &weight[o * in_dim..(o + 1) * in_dim];
        let dw_row = &mut d_weight[o * in_dim..(o + 1) * in_dim];
        for i in 0..in_dim {
            dw_row[i] += g * x[i];
            d_x[i] += g * w_row[i];
        }
    }
    d_x
}

/// In-place rectified linear unit.
pub fn relu_inplace(x: &mut [f64]) {
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Backward pass of ReLU given the *post-activation* values: the subgradient
/// at zero is zero, so positions where the output is zero pass nothing.
pub fn relu_backward_inplace(d_out: &mut [f64], activated: &[f64]) {
    for (g, &a) in d_out.iter_mut().zip(activated) {
        if a <= 0.0 {
            *g = 0.0;
        }
    }
}

/// Element-wise max over the masked-in rows of `features` (one row per
/// actor). Returns the pooled vector and, per output element, the index of
/// the contributing row; ties go to the lowest row index. `None` when the
/// mask admits no rows.
pub fn masked_max_pool(features: &[Vec<f64>], mask: &[bool]) -> Option<(Vec<f64>, Vec<usize>)> {
    debug_assert_eq!(features.len(), mask.len());
    let mut iter = mask.iter().enumerate().filter(|(_, &m)| m).map(|(k, _)| k);
    let first = iter.next()?;
    let dim = features[first].len();
    let mut pooled = features[first].clone();
    let mut argmax = vec![first; dim];
    for k in iter {
        debug_assert_eq!(features[k].len(), dim);
        for (f, &v) in features[k].iter().enumerate() {
            if v > pooled[f] {
                pooled[f] = v;
                argmax[f] = k;
            }
        }
    }
    Some((pooled, argmax))
}

/// Routes the pooled gradient back to each element's argmax row.
pub fn masked_max_pool_backward(
    d_pooled: &[f64],
    argmax: &[usize],
    d_features: &mut [Vec<f64>],
) {
    for (f, (&g, &k)) in d_pooled.iter().zip(argmax).enumerate() {
        d_features[k][f] += g;
    }
}

/// Softmax cross-entropy loss and its gradient with respect to the logits.
///
/// Computed through a max-shifted log-sum-exp so large logits cannot
/// overflow. The gradient is `softmax(logits) - onehot(target)`.
pub fn softmax_cross_entropy(logits: &[f64], target: usize) -> (f64, Vec<f64>) {
    debug_assert!(target < logits.len());
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut grad: Vec<f64> = logits.iter().map(|&z| (z - m).exp()).collect();
    let sum: f64 = grad.iter().sum();
    let loss = m + sum.ln() - logits[target];
    for g in grad.iter_mut() {
        *g /= sum;
    }
    grad[target] -= 1.0;
    (loss, grad)
}

/// Index of the largest element; ties go to the lowest index.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in xs.iter().enumerate().skip(1) {
        if v > xs[best] {
            best = i;
        }
    }
    best
}
