//! Minimal differentiable Q-network: four 3x3 same-padded convolutions
//! with 2x2 max pooling, a dense embedding of the scalar step input, two
//! dense head layers, LeakyReLU activations, exact reverse-mode
//! gradients, and an Adam optimizer. Double precision throughout.

use alloc::vec::Vec;

use rand::Rng;

use crate::field::GridField;
use crate::rng::{self, SeedMix};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NnError {
    #[error("invalid network spec: {0}")]
    BadSpec(&'static str),
    #[error("invalid network input: {0}")]
    BadInput(&'static str),
}

/// Shaped row-major buffer of doubles.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Tensor { shape: shape.to_vec(), data: alloc::vec![0.0; len] }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self, NnError> {
        if shape.iter().product::<usize>() != data.len() {
            return Err(NnError::BadInput("tensor data length does not match shape"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(NnError::BadInput("tensor holds non-finite values"));
        }
        Ok(Tensor { shape: shape.to_vec(), data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// `x` for non-negative inputs, `alpha * x` otherwise.
pub fn leaky_relu(x: f64, alpha: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        alpha * x
    }
}

fn leaky_grad(pre: f64, alpha: f64) -> f64 {
    if pre >= 0.0 {
        1.0
    } else {
        alpha
    }
}

/// Architecture description. The three state grids enter as channels in
/// the fixed order (mean, variance, position); the scalar step input runs
/// through its own embedding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetSpec {
    /// Input grids are `input_hw x input_hw`.
    pub input_hw: usize,
    /// Output channels of the four 3x3 convolution layers.
    pub conv_channels: [usize; 4],
    /// Width of the scalar-input embedding.
    pub scalar_embed: usize,
    /// Width of the first head layer.
    pub hidden: usize,
    /// Number of Q outputs.
    pub actions: usize,
    /// LeakyReLU negative slope.
    pub leaky_alpha: f64,
}

impl NetSpec {
    /// Full-scale architecture for 32x32 fields.
    pub fn paper(actions: usize) -> Self {
        NetSpec {
            input_hw: 32,
            conv_channels: [64, 128, 256, 256],
            scalar_embed: 8,
            hidden: 1024,
            actions,
            leaky_alpha: 0.01,
        }
    }

    /// Reduced architecture for 16x16 fields; quick enough for CI.
    pub fn desk(actions: usize) -> Self {
        NetSpec {
            input_hw: 16,
            conv_channels: [8, 16, 32, 32],
            scalar_embed: 8,
            hidden: 1024,
            actions,
            leaky_alpha: 0.01,
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        if self.input_hw < 8 || self.input_hw % 8 != 0 {
            return Err(NnError::BadSpec("input size must be a positive multiple of 8"));
        }
        if self.conv_channels.iter().any(|&c| c == 0) {
            return Err(NnError::BadSpec("conv channels must be positive"));
        }
        if self.scalar_embed == 0 || self.hidden == 0 || self.actions == 0 {
            return Err(NnError::BadSpec("layer widths must be positive"));
        }
        if !(self.leaky_alpha.is_finite() && self.leaky_alpha >= 0.0) {
            return Err(NnError::BadSpec("leaky_alpha must be non-negative"));
        }
        Ok(())
    }

    /// Spatial sizes before each conv layer and after the final pool.
    pub fn spatial_sizes(&self) -> [usize; 5] {
        let mut s = [0usize; 5];
        s[0] = self.input_hw;
        for i in 0..4 {
            s[i + 1] = s[i].div_ceil(2);
        }
        s
    }

    /// Length of the flattened convolutional output.
    pub fn flatten_len(&self) -> usize {
        let s = self.spatial_sizes()[4];
        s * s * self.conv_channels[3]
    }

    /// Stable digest of the layer stack and the state-channel ordering;
    /// checkpoints are rejected when it does not match.
    pub fn fingerprint(&self) -> u64 {
        SeedMix::new(0x9e7_cafe)
            .str("conv3x3")
            .u64(self.conv_channels[0] as u64)
            .u64(self.conv_channels[1] as u64)
            .u64(self.conv_channels[2] as u64)
            .u64(self.conv_channels[3] as u64)
            .str("pool2-ceil")
            .u64(self.input_hw as u64)
            .str("embed")
            .u64(self.scalar_embed as u64)
            .str("head")
            .u64(self.hidden as u64)
            .u64(self.actions as u64)
            .str("leaky")
            .u64(self.leaky_alpha.to_bits())
            .str("channels:mean,variance,position")
            .build()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    /// `[out_channels, in_channels, 3, 3]`
    pub weight: Tensor,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `[out, in]`
    pub weight: Tensor,
    pub bias: Vec<f64>,
}

/// All learnable parameters of the Q-network.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetworkParams {
    pub spec: NetSpec,
    pub conv: Vec<ConvLayer>,
    pub scalar_fc: DenseLayer,
    pub fc1: DenseLayer,
    pub fc2: DenseLayer,
}

/// Borrowed network input: the three state grids plus the scalar.
#[derive(Debug, Clone, Copy)]
pub struct StateInput<'a> {
    pub mean: &'a GridField,
    pub variance: &'a GridField,
    pub position: &'a GridField,
    pub t_norm: f64,
}

impl QNetworkParams {
    /// He-style scaled-uniform initialization with zero biases,
    /// deterministic in `seed`.
    pub fn init(spec: NetSpec, seed: u64) -> Result<Self, NnError> {
        spec.validate()?;
        let mut rng = rng::rng_from_seed(SeedMix::new(seed).str("qnet-init").build());
        let mut draw = |fan_in: usize, shape: &[usize]| -> Tensor {
            let bound = (6.0 / fan_in as f64).sqrt();
            let len: usize = shape.iter().product();
            let data: Vec<f64> = (0..len).map(|_| rng.gen_range(-bound..bound)).collect();
            Tensor { shape: shape.to_vec(), data }
        };
        let mut conv = Vec::with_capacity(4);
        let mut in_c = 3usize;
        for &out_c in &spec.conv_channels {
            conv.push(ConvLayer {
                weight: draw(in_c * 9, &[out_c, in_c, 3, 3]),
                bias: alloc::vec![0.0; out_c],
            });
            in_c = out_c;
        }
        let scalar_fc = DenseLayer {
            weight: draw(1, &[spec.scalar_embed, 1]),
            bias: alloc::vec![0.0; spec.scalar_embed],
        };
        let concat = spec.flatten_len() + spec.scalar_embed;
        let fc1 = DenseLayer {
            weight: draw(concat, &[spec.hidden, concat]),
            bias: alloc::vec![0.0; spec.hidden],
        };
        let fc2 = DenseLayer {
            weight: draw(spec.hidden, &[spec.actions, spec.hidden]),
            bias: alloc::vec![0.0; spec.actions],
        };
        Ok(QNetworkParams { spec, conv, scalar_fc, fc1, fc2 })
    }

    pub fn num_params(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    /// Fixed flattening order shared with [`Gradients`] and Adam state.
    pub(crate) fn param_slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(2 * self.conv.len() + 6);
        for layer in &self.conv {
            out.push(layer.weight.data());
            out.push(&layer.bias);
        }
        out.push(self.scalar_fc.weight.data());
        out.push(&self.scalar_fc.bias);
        out.push(self.fc1.weight.data());
        out.push(&self.fc1.bias);
        out.push(self.fc2.weight.data());
        out.push(&self.fc2.bias);
        out
    }

    pub(crate) fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(2 * self.conv.len() + 6);
        for layer in &mut self.conv {
            out.push(layer.weight.data_mut());
            out.push(&mut layer.bias);
        }
        out.push(self.scalar_fc.weight.data_mut());
        out.push(&mut self.scalar_fc.bias);
        out.push(self.fc1.weight.data_mut());
        out.push(&mut self.fc1.bias);
        out.push(self.fc2.weight.data_mut());
        out.push(&mut self.fc2.bias);
        out
    }
}

/// Per-parameter gradients, shape-congruent with [`QNetworkParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub conv: Vec<(Tensor, Vec<f64>)>,
    pub scalar_fc: (Tensor, Vec<f64>),
    pub fc1: (Tensor, Vec<f64>),
    pub fc2: (Tensor, Vec<f64>),
}

impl Gradients {
    pub fn zeros(spec: &NetSpec) -> Self {
        let mut conv = Vec::with_capacity(4);
        let mut in_c = 3usize;
        for &out_c in &spec.conv_channels {
            conv.push((Tensor::zeros(&[out_c, in_c, 3, 3]), alloc::vec![0.0; out_c]));
            in_c = out_c;
        }
        let concat = spec.flatten_len() + spec.scalar_embed;
        Gradients {
            conv,
            scalar_fc: (Tensor::zeros(&[spec.scalar_embed, 1]), alloc::vec![0.0; spec.scalar_embed]),
            fc1: (Tensor::zeros(&[spec.hidden, concat]), alloc::vec![0.0; spec.hidden]),
            fc2: (Tensor::zeros(&[spec.actions, spec.hidden]), alloc::vec![0.0; spec.actions]),
        }
    }

    pub(crate) fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(2 * self.conv.len() + 6);
        for (w, b) in &self.conv {
            out.push(w.data());
            out.push(b);
        }
        out.push(self.scalar_fc.0.data());
        out.push(&self.scalar_fc.1);
        out.push(self.fc1.0.data());
        out.push(&self.fc1.1);
        out.push(self.fc2.0.data());
        out.push(&self.fc2.1);
        out
    }

    pub fn scale(&mut self, factor: f64) {
        for (w, b) in &mut self.conv {
            w.data.iter_mut().for_each(|v| *v *= factor);
            b.iter_mut().for_each(|v| *v *= factor);
        }
        for (w, b) in [&mut self.scalar_fc, &mut self.fc1, &mut self.fc2] {
            w.data.iter_mut().for_each(|v| *v *= factor);
            b.iter_mut().for_each(|v| *v *= factor);
        }
    }
}

/// Cached intermediate activations from one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Inputs to each conv layer (x0 is the assembled 3-channel state).
    conv_inputs: Vec<Vec<f64>>,
    /// Pre-activation conv outputs.
    conv_pre: Vec<Vec<f64>>,
    /// For each pooled output element, the index of its source in the
    /// activated conv output (first occurrence on ties).
    pool_argmax: Vec<Vec<usize>>,
    flatten: Vec<f64>,
    scalar_in: f64,
    scalar_pre: Vec<f64>,
    concat: Vec<f64>,
    fc1_pre: Vec<f64>,
    fc1_act: Vec<f64>,
}

fn assemble_input(spec: &NetSpec, input: &StateInput<'_>) -> Result<Vec<f64>, NnError> {
    let hw = spec.input_hw;
    for grid in [input.mean, input.variance, input.position] {
        if grid.dims() != (hw, hw) {
            return Err(NnError::BadInput("state grid does not match the network input size"));
        }
    }
    if !input.t_norm.is_finite() {
        return Err(NnError::BadInput("t_norm must be finite"));
    }
    let mut x = Vec::with_capacity(3 * hw * hw);
    x.extend_from_slice(input.mean.values());
    x.extend_from_slice(input.variance.values());
    x.extend_from_slice(input.position.values());
    Ok(x)
}

/// Q-values for a state. Pure: parameters and input are untouched.
pub fn forward_q(params: &QNetworkParams, input: &StateInput<'_>) -> Result<Vec<f64>, NnError> {
    forward_cached(params, input).map(|(q, _)| q)
}

/// Forward pass that retains every intermediate needed by [`backward`].
pub fn forward_cached(
    params: &QNetworkParams,
    input: &StateInput<'_>,
) -> Result<(Vec<f64>, ForwardCache), NnError> {
    let spec = &params.spec;
    let alpha = spec.leaky_alpha;
    let sizes = spec.spatial_sizes();
    let mut conv_inputs = Vec::with_capacity(4);
    let mut conv_pre = Vec::with_capacity(4);
    let mut pool_argmax = Vec::with_capacity(4);
    let mut x = assemble_input(spec, input)?;
    let mut in_c = 3usize;
    for (l, layer) in params.conv.iter().enumerate() {
        let s = sizes[l];
        let out_c = spec.conv_channels[l];
        let z = conv3x3_same(&x, in_c, s, layer.weight.data(), &layer.bias, out_c);
        let mut a = z.clone();
        a.iter_mut().for_each(|v| *v = leaky_relu(*v, alpha));
        let (pooled, argmax) = maxpool2(&a, out_c, s);
        conv_inputs.push(x);
        conv_pre.push(z);
        pool_argmax.push(argmax);
        x = pooled;
        in_c = out_c;
    }
    let flatten = x;
    debug_assert_eq!(flatten.len(), spec.flatten_len());

    let scalar_in = input.t_norm;
    let scalar_pre: Vec<f64> = params
        .scalar_fc
        .weight
        .data()
        .iter()
        .zip(&params.scalar_fc.bias)
        .map(|(w, b)| w * scalar_in + b)
        .collect();
    let scalar_act: Vec<f64> = scalar_pre.iter().map(|&z| leaky_relu(z, alpha)).collect();

    let mut concat = Vec::with_capacity(flatten.len() + scalar_act.len());
    concat.extend_from_slice(&flatten);
    concat.extend_from_slice(&scalar_act);

    let fc1_pre = dense_forward(&params.fc1, &concat);
    let fc1_act: Vec<f64> = fc1_pre.iter().map(|&z| leaky_relu(z, alpha)).collect();
    let q = dense_forward(&params.fc2, &fc1_act);

    let cache = ForwardCache {
        conv_inputs,
        conv_pre,
        pool_argmax,
        flatten,
        scalar_in,
        scalar_pre,
        concat,
        fc1_pre,
        fc1_act,
    };
    Ok((q, cache))
}

/// Accumulates exact gradients of `sum_j upstream[j] * q[j]` into `grads`.
pub fn backward(
    params: &QNetworkParams,
    cache: &ForwardCache,
    upstream: &[f64],
    grads: &mut Gradients,
) {
    let spec = &params.spec;
    let alpha = spec.leaky_alpha;
    let sizes = spec.spatial_sizes();

    // Head: fc2 (linear output).
    let hidden = spec.hidden;
    let mut d_fc1_act = alloc::vec![0.0f64; hidden];
    for (j, &g) in upstream.iter().enumerate() {
        grads.fc2.1[j] += g;
        let row = &params.fc2.weight.data()[j * hidden..(j + 1) * hidden];
        let grow = &mut grads.fc2.0.data_mut()[j * hidden..(j + 1) * hidden];
        for i in 0..hidden {
            grow[i] += g * cache.fc1_act[i];
            d_fc1_act[i] += g * row[i];
        }
    }

    // fc1 with LeakyReLU.
    let concat_len = cache.concat.len();
    let mut d_concat = alloc::vec![0.0f64; concat_len];
    for j in 0..hidden {
        let dz = d_fc1_act[j] * leaky_grad(cache.fc1_pre[j], alpha);
        if dz == 0.0 {
            continue;
        }
        grads.fc1.1[j] += dz;
        let row = &params.fc1.weight.data()[j * concat_len..(j + 1) * concat_len];
        let grow = &mut grads.fc1.0.data_mut()[j * concat_len..(j + 1) * concat_len];
        for i in 0..concat_len {
            grow[i] += dz * cache.concat[i];
            d_concat[i] += dz * row[i];
        }
    }

    // Split the concat gradient into conv-flatten and scalar branches.
    let flat_len = cache.flatten.len();
    let d_flatten = &d_concat[..flat_len];
    let d_scalar_act = &d_concat[flat_len..];
    for j in 0..spec.scalar_embed {
        let dz = d_scalar_act[j] * leaky_grad(cache.scalar_pre[j], alpha);
        grads.scalar_fc.1[j] += dz;
        grads.scalar_fc.0.data_mut()[j] += dz * cache.scalar_in;
    }

    // Conv stack in reverse: unpool, activation gate, conv backward.
    let mut d_pooled: Vec<f64> = d_flatten.to_vec();
    for l in (0..4).rev() {
        let s = sizes[l];
        let out_c = spec.conv_channels[l];
        let in_c = if l == 0 { 3 } else { spec.conv_channels[l - 1] };
        let mut d_act = alloc::vec![0.0f64; out_c * s * s];
        for (out_idx, &src) in cache.pool_argmax[l].iter().enumerate() {
            d_act[src] += d_pooled[out_idx];
        }
        let pre = &cache.conv_pre[l];
        let mut dz = d_act;
        for (v, &z) in dz.iter_mut().zip(pre.iter()) {
            *v *= leaky_grad(z, alpha);
        }
        let input = &cache.conv_inputs[l];
        let (gw, gb) = &mut grads.conv[l];
        let d_input = conv3x3_backward(
            input,
            in_c,
            s,
            params.conv[l].weight.data(),
            out_c,
            &dz,
            gw.data_mut(),
            gb,
            l > 0,
        );
        if l > 0 {
            d_pooled = d_input;
        }
    }
}

fn dense_forward(layer: &DenseLayer, input: &[f64]) -> Vec<f64> {
    let out_len = layer.bias.len();
    let in_len = input.len();
    let w = layer.weight.data();
    let mut out = Vec::with_capacity(out_len);
    for j in 0..out_len {
        let row = &w[j * in_len..(j + 1) * in_len];
        let mut acc = layer.bias[j];
        for i in 0..in_len {
            acc += row[i] * input[i];
        }
        out.push(acc);
    }
    out
}

/// Stride-1 zero-padded 3x3 convolution preserving spatial size.
fn conv3x3_same(
    input: &[f64],
    in_c: usize,
    s: usize,
    weight: &[f64],
    bias: &[f64],
    out_c: usize,
) -> Vec<f64> {
    let plane = s * s;
    let mut out = alloc::vec![0.0f64; out_c * plane];
    for oc in 0..out_c {
        let out_plane = &mut out[oc * plane..(oc + 1) * plane];
        out_plane.iter_mut().for_each(|v| *v = bias[oc]);
        for ic in 0..in_c {
            let in_plane = &input[ic * plane..(ic + 1) * plane];
            let k = &weight[(oc * in_c + ic) * 9..(oc * in_c + ic) * 9 + 9];
            for y in 0..s {
                let y0 = y.wrapping_sub(1);
                for ky in 0..3 {
                    let yy = y0.wrapping_add(ky);
                    if yy >= s {
                        continue;
                    }
                    let krow = &k[ky * 3..ky * 3 + 3];
                    let src_row = &in_plane[yy * s..yy * s + s];
                    let dst_row = &mut out_plane[y * s..y * s + s];
                    for x in 0..s {
                        let x0 = x.wrapping_sub(1);
                        let mut acc = 0.0;
                        for kx in 0..3 {
                            let xx = x0.wrapping_add(kx);
                            if xx < s {
                                acc += krow[kx] * src_row[xx];
                            }
                        }
                        dst_row[x] += acc;
                    }
                }
            }
        }
    }
    out
}

/// Gradients of a 3x3 same convolution: accumulates dW and db, returns
/// dInput when requested.
#[allow(clippy::too_many_arguments)]
fn conv3x3_backward(
    input: &[f64],
    in_c: usize,
    s: usize,
    weight: &[f64],
    out_c: usize,
    dz: &[f64],
    gw: &mut [f64],
    gb: &mut [f64],
    need_dinput: bool,
) -> Vec<f64> {
    let plane = s * s;
    let mut d_input = if need_dinput { alloc::vec![0.0f64; in_c * plane] } else { Vec::new() };
    for oc in 0..out_c {
        let dz_plane = &dz[oc * plane..(oc + 1) * plane];
        gb[oc] += dz_plane.iter().sum::<f64>();
        for ic in 0..in_c {
            let in_plane = &input[ic * plane..(ic + 1) * plane];
            let k = &weight[(oc * in_c + ic) * 9..(oc * in_c + ic) * 9 + 9];
            let gk = &mut gw[(oc * in_c + ic) * 9..(oc * in_c + ic) * 9 + 9];
            for y in 0..s {
                let y0 = y.wrapping_sub(1);
                for x in 0..s {
                    let g = dz_plane[y * s + x];
                    if g == 0.0 {
                        continue;
                    }
                    let x0 = x.wrapping_sub(1);
                    for ky in 0..3 {
                        let yy = y0.wrapping_add(ky);
                        if yy >= s {
                            continue;
                        }
                        for kx in 0..3 {
                            let xx = x0.wrapping_add(kx);
                            if xx >= s {
                                continue;
                            }
                            gk[ky * 3 + kx] += g * in_plane[yy * s + xx];
                            if need_dinput {
                                d_input[ic * plane + yy * s + xx] += g * k[ky * 3 + kx];
                            }
                        }
                    }
                }
            }
        }
    }
    d_input
}

/// 2x2/stride-2 max pooling with border windows clipped (ceil semantics),
/// recording the flat index of each maximum; ties keep the first element
/// in row-major window order.
fn maxpool2(a: &[f64], channels: usize, s: usize) -> (Vec<f64>, Vec<usize>) {
    let out_s = s.div_ceil(2);
    let plane = s * s;
    let out_plane = out_s * out_s;
    let mut out = alloc::vec![0.0f64; channels * out_plane];
    let mut argmax = alloc::vec![0usize; channels * out_plane];
    for c in 0..channels {
        for oy in 0..out_s {
            for ox in 0..out_s {
                let mut best = f64::NEG_INFINITY;
                let mut best_idx = 0usize;
                for dy in 0..2 {
                    let y = oy * 2 + dy;
                    if y >= s {
                        continue;
                    }
                    for dx in 0..2 {
                        let x = ox * 2 + dx;
                        if x >= s {
                            continue;
                        }
                        let idx = c * plane + y * s + x;
                        if a[idx] > best {
                            best = a[idx];
                            best_idx = idx;
                        }
                    }
                }
                out[c * out_plane + oy * out_s + ox] = best;
                argmax[c * out_plane + oy * out_s + ox] = best_idx;
            }
        }
    }
    (out, argmax)
}

/// Adam first/second moment state over the flattened parameter vector.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(params: &QNetworkParams) -> Self {
        let n = params.num_params();
        AdamState {
            m: alloc::vec![0.0; n],
            v: alloc::vec![0.0; n],
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Applies one Adam update. If any gradient entry is non-finite the whole
/// update is skipped and `false` is returned.
pub fn optimizer_step(
    params: &mut QNetworkParams,
    grads: &Gradients,
    adam: &mut AdamState,
    learning_rate: f64,
) -> bool {
    let gslices = grads.slices();
    if gslices.iter().any(|s| s.iter().any(|g| !g.is_finite())) {
        return false;
    }
    adam.step += 1;
    let t = adam.step as i32;
    let bc1 = 1.0 - adam.beta1.powi(t);
    let bc2 = 1.0 - adam.beta2.powi(t);
    let mut cursor = 0usize;
    let mut pslices = params.param_slices_mut();
    for (pslice, gslice) in pslices.iter_mut().zip(gslices.iter()) {
        for (p, &g) in pslice.iter_mut().zip(gslice.iter()) {
            let m = &mut adam.m[cursor];
            let v = &mut adam.v[cursor];
            *m = adam.beta1 * *m + (1.0 - adam.beta1) * g;
            *v = adam.beta2 * *v + (1.0 - adam.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= learning_rate * m_hat / (v_hat.sqrt() + adam.epsilon);
            cursor += 1;
        }
    }
    true
}
