//! Uniform INT8 quantization: parameter derivation from dynamic ranges,
//! quantize/dequantize/fake-quantize, min-max calibration observers, and the
//! integer convolution kernel with INT32 accumulation and requantization.
//!
//! Conventions, fixed across the crate:
//!
//! - scale S = (β − α) / (2^b − 1) for a range [α, β];
//! - asymmetric zero point Z = −round(α/S) − 2^(b−1), symmetric Z = 0;
//! - quantize(x) = clamp(round(x/S) + Z, −2^(b−1), 2^(b−1)−1);
//! - dequantize(q) = (q − Z)·S;
//! - every `round` is round-half-to-even;
//! - requantization multiplies an INT32 accumulator by
//!   M = f64(S_x)·f64(S_w)/f64(S_y) in double precision, rounds half-even,
//!   adds Z_y and saturates.
//!
//! Keeping the multiplier in double precision is what makes the integer
//! pipeline bit-exactly reproducible by an FP32 simulation of the same graph
//! (see `model`): the INT32 accumulator value is exactly representable in
//! both domains, so the only rounding happens inside the shared requant map.

use crate::tensor::{ConvDescriptor, Shape, Tensor, TensorError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuantError {
    #[error("invalid range: alpha {alpha} must be < beta {beta}")]
    InvalidRange { alpha: f32, beta: f32 },
    #[error("range endpoints must be finite, got [{alpha}, {beta}]")]
    NonFiniteRange { alpha: f32, beta: f32 },
    #[error("bit width {0} out of range (expected 2..=8)")]
    BadBits(u32),
    #[error("empty input")]
    EmptyInput,
    #[error("zero-width weight tensor (all elements equal {0}); cannot derive a symmetric scale")]
    ZeroWidthWeights(f32),
    #[error(
        "INT32 accumulator could overflow: {terms} terms x max product {max_product} + bias bound {bias_bound}"
    )]
    AccumulatorOverflow {
        terms: usize,
        max_product: i64,
        bias_bound: i64,
    },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Quantization scheme. Weights use `Symmetric` (Z = 0); activations use
/// `Asymmetric`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Symmetric,
    Asymmetric,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Symmetric => "symmetric",
            Scheme::Asymmetric => "asymmetric",
        }
    }
}

/// Per-tensor quantization parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuantParams {
    pub scale: f32,
    pub zero_point: i32,
    pub bits: u32,
    pub scheme: Scheme,
    /// The real-valued range [α, β] the parameters were derived from.
    pub range: (f32, f32),
}

impl QuantParams {
    /// Smallest representable code, −2^(b−1).
    pub fn qmin(&self) -> i32 {
        -(1 << (self.bits - 1))
    }

    /// Largest representable code, 2^(b−1) − 1.
    pub fn qmax(&self) -> i32 {
        (1 << (self.bits - 1)) - 1
    }

    /// Derives parameters from a range. For `Symmetric` the range is first
    /// symmetrized to [−m, m] with m = max(|α|, |β|) and the zero point is 0.
    pub fn from_range(
        alpha: f32,
        beta: f32,
        bits: u32,
        scheme: Scheme,
    ) -> Result<Self, QuantError> {
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(QuantError::NonFiniteRange { alpha, beta });
        }
        let (alpha, beta) = match scheme {
            Scheme::Asymmetric => (alpha, beta),
            Scheme::Symmetric => {
                let m = alpha.abs().max(beta.abs());
                (-m, m)
            }
        };
        let scale = scale_from_range(alpha, beta, bits)?;
        let zero_point = match scheme {
            Scheme::Asymmetric => zero_point_asymmetric(alpha, scale, bits),
            Scheme::Symmetric => 0,
        };
        Ok(QuantParams {
            scale,
            zero_point,
            bits,
            scheme,
            range: (alpha, beta),
        })
    }
}

/// S = (β − α) / (2^b − 1), evaluated in double precision and narrowed once.
pub fn scale_from_range(alpha: f32, beta: f32, bits: u32) -> Result<f32, QuantError> {
    if !(2..=8).contains(&bits) {
        return Err(QuantError::BadBits(bits));
    }
    if !alpha.is_finite() || !beta.is_finite() {
        return Err(QuantError::NonFiniteRange { alpha, beta });
    }
    if beta <= alpha {
        return Err(QuantError::InvalidRange { alpha, beta });
    }
    let levels = ((1u32 << bits) - 1) as f64;
    Ok(((beta as f64 - alpha as f64) / levels) as f32)
}

/// Z = −round(α/S) − 2^(b−1), round half to even.
pub fn zero_point_asymmetric(alpha: f32, scale: f32, bits: u32) -> i32 {
    let q = (alpha as f64 / scale as f64).round_ties_even();
    -(q as i32) - (1 << (bits - 1))
}

/// clamp(round(x/S) + Z, qmin, qmax). The division runs in double precision
/// with half-even rounding.
#[inline]
pub fn quantize_scalar(x: f32, qp: &QuantParams) -> i8 {
    let q = (x as f64 / qp.scale as f64).round_ties_even() + qp.zero_point as f64;
    q.clamp(qp.qmin() as f64, qp.qmax() as f64) as i8
}

/// (q − Z)·S per element.
#[inline]
pub fn dequantize_scalar(q: i8, qp: &QuantParams) -> f32 {
    (q as i32 - qp.zero_point) as f32 * qp.scale
}

pub fn quantize(xs: &[f32], qp: &QuantParams) -> Vec<i8> {
    xs.iter().map(|&x| quantize_scalar(x, qp)).collect()
}

pub fn dequantize(qs: &[i8], qp: &QuantParams) -> Vec<f32> {
    qs.iter().map(|&q| dequantize_scalar(q, qp)).collect()
}

/// dequantize(quantize(x)): projects onto the representable grid. Idempotent
/// and monotone.
pub fn fake_quantize(xs: &[f32], qp: &QuantParams) -> Vec<f32> {
    xs.iter()
        .map(|&x| dequantize_scalar(quantize_scalar(x, qp), qp))
        .collect()
}

pub fn quantize_tensor(t: &Tensor<f32>, qp: &QuantParams) -> Tensor<i8> {
    t.map(|v| quantize_scalar(v, qp))
}

pub fn dequantize_tensor(t: &Tensor<i8>, qp: &QuantParams) -> Tensor<f32> {
    t.map(|q| dequantize_scalar(q, qp))
}

/// Running min/max envelope used for calibration. Observers are plain values:
/// `observe` and `merge` return the updated observer, so sharing across
/// threads reduces to merging per-thread envelopes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinMaxObserver {
    min: f32,
    max: f32,
    count: u64,
}

impl Default for MinMaxObserver {
    fn default() -> Self {
        Self::new()
    }
}

impl MinMaxObserver {
    pub fn new() -> Self {
        MinMaxObserver {
            min: f32::INFINITY,
            max: f32::NEG_INFINITY,
            count: 0,
        }
    }

    /// Extends the envelope with the min/max of `xs`; counts elements seen.
    #[must_use]
    pub fn observe(mut self, xs: &[f32]) -> Self {
        for &x in xs {
            self.min = self.min.min(x);
            self.max = self.max.max(x);
        }
        self.count += xs.len() as u64;
        self
    }

    /// Envelope union of two observers.
    #[must_use]
    pub fn merge(a: Self, b: Self) -> Self {
        MinMaxObserver {
            min: a.min.min(b.min),
            max: a.max.max(b.max),
            count: a.count + b.count,
        }
    }

    /// Elements observed so far.
    pub fn count(&self) -> u64 {
        self.count
    }

    /// (min, max) once at least one element has been observed.
    pub fn envelope(&self) -> Option<(f32, f32)> {
        (self.count > 0).then_some((self.min, self.max))
    }

    /// Derives quantization parameters from the observed envelope. An
    /// all-constant envelope [c, c] is widened to [c − 1/2, c + 1/2] so the
    /// scale stays well-defined.
    pub fn qparams(&self, bits: u32, scheme: Scheme) -> Result<QuantParams, QuantError> {
        let (min, max) = self.envelope().ok_or(QuantError::EmptyInput)?;
        let (alpha, beta) = widen_degenerate(min, max);
        QuantParams::from_range(alpha, beta, bits, scheme)
    }
}

fn widen_degenerate(min: f32, max: f32) -> (f32, f32) {
    if min == max {
        (min - 0.5, max + 0.5)
    } else {
        (min, max)
    }
}

/// Per-call quantization parameters from the data itself: asymmetric uses
/// [min, max], symmetric uses [−m, m] with m = max(|x|).
pub fn dynamic_qparams(xs: &[f32], bits: u32, scheme: Scheme) -> Result<QuantParams, QuantError> {
    if xs.is_empty() {
        return Err(QuantError::EmptyInput);
    }
    MinMaxObserver::new().observe(xs).qparams(bits, scheme)
}

/// Double-precision requantization multiplier M = S_x·S_w / S_y.
#[inline]
pub fn requant_multiplier(s_in: f32, s_w: f32, s_out: f32) -> f64 {
    (s_in as f64 * s_w as f64) / s_out as f64
}

/// Maps an INT32 accumulator to an output code:
/// clamp(round_half_even(acc·M) + Z, qmin, qmax).
#[inline]
pub fn requantize_acc(acc: i32, multiplier: f64, out_qp: &QuantParams) -> i8 {
    let v = (acc as f64 * multiplier).round_ties_even() + out_qp.zero_point as f64;
    v.clamp(out_qp.qmin() as f64, out_qp.qmax() as f64) as i8
}

/// Re-expresses a code under different parameters (used where two quantized
/// tensors must share a site scale, e.g. residual adds and concatenation):
/// clamp(round_half_even((q − Z_in)·S_in/S_out) + Z_out).
#[inline]
pub fn requantize_code(q: i8, in_qp: &QuantParams, out_qp: &QuantParams) -> i8 {
    let m = in_qp.scale as f64 / out_qp.scale as f64;
    let v = ((q as i32 - in_qp.zero_point) as f64 * m).round_ties_even()
        + out_qp.zero_point as f64;
    v.clamp(out_qp.qmin() as f64, out_qp.qmax() as f64) as i8
}

/// Integer convolution on quantized tensors.
///
/// The accumulator works in the zero-point-shifted domain:
/// acc = bias[o] + Σ (x_q − Z_x)(w_q − Z_w), all in INT32, visiting weights in
/// `(c, i, j)` order. Out-of-bounds taps contribute (Z_x − Z_x) = 0, which is
/// exactly the FP32 kernel's zero padding. `bias` must already be quantized to
/// the accumulator scale S_x·S_w. The accumulator is then requantized to
/// `out_qp` with the double-precision multiplier.
///
/// Overflow is ruled out up front from the worst-case term count and bias
/// magnitude; an instance that could overflow is rejected.
pub fn qconv2d(
    input: &Tensor<i8>,
    in_qp: &QuantParams,
    weights: &Tensor<i8>,
    w_qp: &QuantParams,
    bias: &[i32],
    out_qp: &QuantParams,
    desc: &ConvDescriptor,
) -> Result<Tensor<i8>, QuantError> {
    if input.shape().c != desc.in_channels {
        return Err(TensorError::ShapeMismatch {
            expected: format!("{} input channels", desc.in_channels),
            got: format!("{} channels ({})", input.shape().c, input.shape()),
        }
        .into());
    }
    if weights.shape() != desc.weight_shape() {
        return Err(TensorError::ShapeMismatch {
            expected: desc.weight_shape().to_string(),
            got: weights.shape().to_string(),
        }
        .into());
    }
    if bias.len() != desc.out_channels {
        return Err(TensorError::ChannelParamLength {
            got: bias.len(),
            channels: desc.out_channels,
        }
        .into());
    }

    let terms = desc.fan_in();
    let max_product: i64 = 255 * 255;
    let bias_bound = bias.iter().map(|&b| (b as i64).abs()).max().unwrap_or(0);
    if terms as i64 * max_product + bias_bound > i32::MAX as i64 {
        return Err(QuantError::AccumulatorOverflow {
            terms,
            max_product,
            bias_bound,
        });
    }

    let Shape { n, h, w, .. } = input.shape();
    let (kh, kw) = desc.kernel;
    let (ph, pw) = desc.padding();
    let cpg = desc.in_channels / desc.groups;
    let opg = desc.out_channels / desc.groups;
    let plane = h * w;

    // Pre-shift into i16 so the inner loop is a plain multiply-accumulate.
    let x_shift: Vec<i16> = input
        .data()
        .iter()
        .map(|&q| q as i16 - in_qp.zero_point as i16)
        .collect();
    let w_shift: Vec<i16> = weights
        .data()
        .iter()
        .map(|&q| q as i16 - w_qp.zero_point as i16)
        .collect();

    let m = requant_multiplier(in_qp.scale, w_qp.scale, out_qp.scale);
    let mut out = Tensor::zeros(Shape::new(n, desc.out_channels, h, w));
    let odata = out.data_mut();

    // Row-sliced accumulation (see conv2d); integer sums are order-free, so
    // this is exactly the per-pixel accumulate-then-rescale it replaces.
    let mut acc = vec![0i32; plane];
    for bn in 0..n {
        let in_batch = &x_shift[bn * desc.in_channels * plane..][..desc.in_channels * plane];
        for oc in 0..desc.out_channels {
            let g = oc / opg;
            let w_oc = &w_shift[oc * cpg * kh * kw..][..cpg * kh * kw];
            acc.fill(bias[oc]);
            for c in 0..cpg {
                let in_ch = &in_batch[(g * cpg + c) * plane..][..plane];
                let w_c = &w_oc[c * kh * kw..][..kh * kw];
                for i in 0..kh {
                    let y0 = ph.saturating_sub(i);
                    let y1 = (h + ph).saturating_sub(i).min(h);
                    for j in 0..kw {
                        let wv = w_c[i * kw + j] as i32;
                        let x0 = pw.saturating_sub(j);
                        let x1 = (w + pw).saturating_sub(j).min(w);
                        if x0 >= x1 {
                            continue;
                        }
                        for y in y0..y1 {
                            let iy = y + i - ph;
                            let src = &in_ch[iy * w + x0 + j - pw..][..x1 - x0];
                            let dst = &mut acc[y * w + x0..][..x1 - x0];
                            for (d, s) in dst.iter_mut().zip(src) {
                                *d += wv * *s as i32;
                            }
                        }
                    }
                }
            }
            let o_plane = &mut odata[(bn * desc.out_channels + oc) * plane..][..plane];
            for (o, &a) in o_plane.iter_mut().zip(&acc) {
                *o = requantize_acc(a, m, out_qp);
            }
        }
    }
    Ok(out)
}
