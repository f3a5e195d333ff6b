//! NCHW tensor storage and the FP32 compute kernels: convolution, batch
//! normalization (and its folding into convolution), the bounded activations,
//! channel concatenation and residual addition.
//!
//! All kernels are pure functions over immutable inputs. Convolutions use
//! stride 1 and zero padding of (k − 1)/2 on each side, so spatial dims are
//! preserved. The accumulation order inside a convolution is fixed to
//! channel-major `(c, i, j)` and there is no internal parallelism, which makes
//! results bit-reproducible across runs.

use thiserror::Error;

/// Errors raised by tensor construction and the FP32 kernels.
#[derive(Debug, Error)]
pub enum TensorError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("data length {len} does not match shape {shape:?} ({want} elements)")]
    DataLength { len: usize, shape: Shape, want: usize },
    #[error("kernel dims must be odd, got {kh}x{kw}")]
    EvenKernel { kh: usize, kw: usize },
    #[error("channels not divisible by groups: in={in_c}, out={out_c}, groups={groups}")]
    GroupMismatch { in_c: usize, out_c: usize, groups: usize },
    #[error("zero-sized descriptor field: {0}")]
    ZeroDim(&'static str),
    #[error("per-channel parameter length {got} does not match {channels} channels")]
    ChannelParamLength { got: usize, channels: usize },
}

/// NCHW shape. `n` is batch, `c` channels, `h` rows, `w` columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shape {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl Shape {
    pub fn new(n: usize, c: usize, h: usize, w: usize) -> Self {
        Shape { n, c, h, w }
    }

    /// Total element count.
    pub fn len(&self) -> usize {
        self.n * self.c * self.h * self.w
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of element (n, c, y, x) in row-major NCHW order.
    #[inline]
    pub fn index(&self, n: usize, c: usize, y: usize, x: usize) -> usize {
        ((n * self.c + c) * self.h + y) * self.w + x
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}x{}", self.n, self.c, self.h, self.w)
    }
}

/// Dense NCHW tensor over a copyable element type (f32 activations, i8 codes,
/// i32 accumulators).
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    shape: Shape,
    data: Vec<T>,
}

impl<T: Copy> Tensor<T> {
    pub fn zeros(shape: Shape) -> Self
    where
        T: Default,
    {
        Tensor {
            shape,
            data: vec![T::default(); shape.len()],
        }
    }

    pub fn filled(shape: Shape, value: T) -> Self {
        Tensor {
            shape,
            data: vec![value; shape.len()],
        }
    }

    pub fn from_vec(shape: Shape, data: Vec<T>) -> Result<Self, TensorError> {
        if data.len() != shape.len() {
            return Err(TensorError::DataLength {
                len: data.len(),
                shape,
                want: shape.len(),
            });
        }
        Ok(Tensor { shape, data })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn at(&self, n: usize, c: usize, y: usize, x: usize) -> T {
        self.data[self.shape.index(n, c, y, x)]
    }

    #[inline]
    pub fn set(&mut self, n: usize, c: usize, y: usize, x: usize, v: T) {
        let i = self.shape.index(n, c, y, x);
        self.data[i] = v;
    }

    /// Element-wise map into a new tensor (same shape).
    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Tensor<U> {
        Tensor {
            shape: self.shape,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// Static description of a convolution layer: stride is always 1 and padding
/// is always (k − 1)/2, so only channel counts, kernel size and grouping vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConvDescriptor {
    pub in_channels: usize,
    pub out_channels: usize,
    /// (kh, kw), both odd.
    pub kernel: (usize, usize),
    /// 1 for dense convolution, `in_channels` for depthwise.
    pub groups: usize,
}

impl ConvDescriptor {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        kernel: (usize, usize),
        groups: usize,
    ) -> Result<Self, TensorError> {
        if in_channels == 0 || out_channels == 0 {
            return Err(TensorError::ZeroDim("channels"));
        }
        if kernel.0 == 0 || kernel.1 == 0 {
            return Err(TensorError::ZeroDim("kernel"));
        }
        if groups == 0 {
            return Err(TensorError::ZeroDim("groups"));
        }
        if kernel.0 % 2 == 0 || kernel.1 % 2 == 0 {
            return Err(TensorError::EvenKernel {
                kh: kernel.0,
                kw: kernel.1,
            });
        }
        if in_channels % groups != 0 || out_channels % groups != 0 {
            return Err(TensorError::GroupMismatch {
                in_c: in_channels,
                out_c: out_channels,
                groups,
            });
        }
        Ok(ConvDescriptor {
            in_channels,
            out_channels,
            kernel,
            groups,
        })
    }

    /// Zero padding on each side: (k − 1)/2 per axis.
    pub fn padding(&self) -> (usize, usize) {
        ((self.kernel.0 - 1) / 2, (self.kernel.1 - 1) / 2)
    }

    /// Expected weight tensor shape (out, in/groups, kh, kw).
    pub fn weight_shape(&self) -> Shape {
        Shape::new(
            self.out_channels,
            self.in_channels / self.groups,
            self.kernel.0,
            self.kernel.1,
        )
    }

    /// Receptive-field size feeding one output element.
    pub fn fan_in(&self) -> usize {
        (self.in_channels / self.groups) * self.kernel.0 * self.kernel.1
    }
}

fn check_conv_shapes<T: Copy, W: Copy, B>(
    input: &Tensor<T>,
    weights: &Tensor<W>,
    bias: &[B],
    desc: &ConvDescriptor,
) -> Result<(), TensorError> {
    if input.shape().c != desc.in_channels {
        return Err(TensorError::ShapeMismatch {
            expected: format!("{} input channels", desc.in_channels),
            got: format!("{} channels ({})", input.shape().c, input.shape()),
        });
    }
    if weights.shape() != desc.weight_shape() {
        return Err(TensorError::ShapeMismatch {
            expected: desc.weight_shape().to_string(),
            got: weights.shape().to_string(),
        });
    }
    if bias.len() != desc.out_channels {
        return Err(TensorError::ChannelParamLength {
            got: bias.len(),
            channels: desc.out_channels,
        });
    }
    Ok(())
}

/// FP32 convolution: stride 1, zero padding (k − 1)/2, optional grouping.
///
/// Output shape is (n, out_channels, h, w); spatial dims are preserved. The
/// accumulator visits weights in `(c, i, j)` order per output element, which
/// fixes the floating-point result bit-for-bit.
pub fn conv2d(
    input: &Tensor<f32>,
    weights: &Tensor<f32>,
    bias: &[f32],
    desc: &ConvDescriptor,
) -> Result<Tensor<f32>, TensorError> {
    check_conv_shapes(input, weights, bias, desc)?;
    let Shape { n, h, w, .. } = input.shape();
    let (kh, kw) = desc.kernel;
    let (ph, pw) = desc.padding();
    let cpg = desc.in_channels / desc.groups;
    let out_per_group = desc.out_channels / desc.groups;
    let in_plane = h * w;

    let idata = input.data();
    let wdata = weights.data();
    let mut out = Tensor::zeros(Shape::new(n, desc.out_channels, h, w));
    let odata = out.data_mut();

    // Accumulates one shifted input row into the output row per kernel tap,
    // which keeps the inner loop on contiguous slices. Per output element the
    // terms still arrive in bias, (channel, ky, kx) order, so the sums are
    // bit-identical to the naive triple loop.
    for bn in 0..n {
        let in_batch = &idata[bn * desc.in_channels * in_plane..][..desc.in_channels * in_plane];
        for oc in 0..desc.out_channels {
            let g = oc / out_per_group;
            let w_oc = &wdata[oc * cpg * kh * kw..][..cpg * kh * kw];
            let o_plane = &mut odata[(bn * desc.out_channels + oc) * in_plane..][..in_plane];
            o_plane.fill(bias[oc]);
            for c in 0..cpg {
                let in_ch = &in_batch[(g * cpg + c) * in_plane..][..in_plane];
                let w_c = &w_oc[c * kh * kw..][..kh * kw];
                for i in 0..kh {
                    let y0 = ph.saturating_sub(i);
                    let y1 = (h + ph).saturating_sub(i).min(h);
                    for j in 0..kw {
                        let wv = w_c[i * kw + j];
                        let x0 = pw.saturating_sub(j);
                        let x1 = (w + pw).saturating_sub(j).min(w);
                        if x0 >= x1 {
                            continue;
                        }
                        for y in y0..y1 {
                            let iy = y + i - ph;
                            let src = &in_ch[iy * w + x0 + j - pw..][..x1 - x0];
                            let dst = &mut o_plane[y * w + x0..][..x1 - x0];
                            for (d, s) in dst.iter_mut().zip(src) {
                                *d += wv * s;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Per-channel batch normalization statistics and affine parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchNormParams {
    pub gamma: Vec<f32>,
    pub beta: Vec<f32>,
    pub mean: Vec<f32>,
    pub variance: Vec<f32>,
    pub epsilon: f32,
}

impl BatchNormParams {
    /// Identity normalization for `channels` channels.
    pub fn identity(channels: usize, epsilon: f32) -> Self {
        BatchNormParams {
            gamma: vec![1.0; channels],
            beta: vec![0.0; channels],
            mean: vec![0.0; channels],
            variance: vec![1.0; channels],
            epsilon,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    fn check(&self, channels: usize) -> Result<(), TensorError> {
        for len in [
            self.gamma.len(),
            self.beta.len(),
            self.mean.len(),
            self.variance.len(),
        ] {
            if len != channels {
                return Err(TensorError::ChannelParamLength { got: len, channels });
            }
        }
        Ok(())
    }

    /// Per-channel multiplier gamma / sqrt(var + eps).
    fn scales(&self) -> Vec<f32> {
        self.gamma
            .iter()
            .zip(&self.variance)
            .map(|(&g, &v)| g / (v + self.epsilon).sqrt())
            .collect()
    }
}

/// Inference-mode batch normalization:
/// y = gamma · (x − mean) / sqrt(var + eps) + beta, per channel.
pub fn batchnorm(input: &Tensor<f32>, bn: &BatchNormParams) -> Result<Tensor<f32>, TensorError> {
    let Shape { n, c, h, w } = input.shape();
    bn.check(c)?;
    let k = bn.scales();
    let mut out = input.clone();
    let data = out.data_mut();
    let plane = h * w;
    for bi in 0..n {
        for ch in 0..c {
            let base = (bi * c + ch) * plane;
            let (kc, mc, bc) = (k[ch], bn.mean[ch], bn.beta[ch]);
            for v in &mut data[base..base + plane] {
                *v = (*v - mc) * kc + bc;
            }
        }
    }
    Ok(out)
}

/// Folds a batch normalization into the preceding convolution:
/// w'[o] = w[o] · gamma[o] / sqrt(var[o] + eps),
/// b'[o] = (b[o] − mean[o]) · gamma[o] / sqrt(var[o] + eps) + beta[o].
///
/// `conv2d(x, w', b')` matches `batchnorm(conv2d(x, w, b))` up to FP32
/// reassociation.
pub fn fold_batchnorm(
    weights: &Tensor<f32>,
    bias: &[f32],
    bn: &BatchNormParams,
) -> Result<(Tensor<f32>, Vec<f32>), TensorError> {
    let out_c = weights.shape().n;
    bn.check(out_c)?;
    if bias.len() != out_c {
        return Err(TensorError::ChannelParamLength {
            got: bias.len(),
            channels: out_c,
        });
    }
    let k = bn.scales();
    let per_filter = weights.shape().len() / out_c;
    let mut wdata = weights.data().to_vec();
    for (o, chunk) in wdata.chunks_mut(per_filter).enumerate() {
        for v in chunk {
            *v *= k[o];
        }
    }
    let folded_bias = bias
        .iter()
        .enumerate()
        .map(|(o, &b)| (b - bn.mean[o]) * k[o] + bn.beta[o])
        .collect();
    Ok((Tensor::from_vec(weights.shape(), wdata)?, folded_bias))
}

/// ReLU6: min(max(0, x), 6).
pub fn relu6(input: &Tensor<f32>) -> Tensor<f32> {
    input.map(|v| v.clamp(0.0, 6.0))
}

/// Hardtanh clamped to the unit interval: min(max(0, x), 1).
pub fn hardtanh01(input: &Tensor<f32>) -> Tensor<f32> {
    input.map(|v| v.clamp(0.0, 1.0))
}

/// Channel concatenation: (n, c_a, h, w) ++ (n, c_b, h, w) → (n, c_a + c_b, h, w).
/// Channels of `a` come first.
pub fn concat_channels<T: Copy + Default>(
    a: &Tensor<T>,
    b: &Tensor<T>,
) -> Result<Tensor<T>, TensorError> {
    let (sa, sb) = (a.shape(), b.shape());
    if sa.n != sb.n || sa.h != sb.h || sa.w != sb.w {
        return Err(TensorError::ShapeMismatch {
            expected: format!("batch/spatial dims of {sa}"),
            got: sb.to_string(),
        });
    }
    let plane = sa.h * sa.w;
    let mut out = Tensor::zeros(Shape::new(sa.n, sa.c + sb.c, sa.h, sa.w));
    let odata = out.data_mut();
    let out_c = sa.c + sb.c;
    for n in 0..sa.n {
        let dst = &mut odata[n * out_c * plane..][..out_c * plane];
        dst[..sa.c * plane].copy_from_slice(&a.data()[n * sa.c * plane..][..sa.c * plane]);
        dst[sa.c * plane..].copy_from_slice(&b.data()[n * sb.c * plane..][..sb.c * plane]);
    }
    Ok(out)
}

/// Element-wise residual addition of two tensors of identical shape.
pub fn add(a: &Tensor<f32>, b: &Tensor<f32>) -> Result<Tensor<f32>, TensorError> {
    if a.shape() != b.shape() {
        return Err(TensorError::ShapeMismatch {
            expected: a.shape().to_string(),
            got: b.shape().to_string(),
        });
    }
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| x + y)
        .collect();
    Tensor::from_vec(a.shape(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn rand_tensor(rng: &mut ChaCha12Rng, shape: Shape) -> Tensor<f32> {
        let data = (0..shape.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Tensor::from_vec(shape, data).unwrap()
    }

    /// Independent reference convolution: per-element gather with explicit
    /// bounds checks, accumulated in (i, j, c) order so it does not share the
    /// implementation's loop structure.
    fn conv2d_reference(
        input: &Tensor<f32>,
        weights: &Tensor<f32>,
        bias: &[f32],
        desc: &ConvDescriptor,
    ) -> Tensor<f32> {
        let Shape { n, h, w, .. } = input.shape();
        let (kh, kw) = desc.kernel;
        let (ph, pw) = desc.padding();
        let cpg = desc.in_channels / desc.groups;
        let opg = desc.out_channels / desc.groups;
        let mut out = Tensor::zeros(Shape::new(n, desc.out_channels, h, w));
        for bn in 0..n {
            for oc in 0..desc.out_channels {
                let g = oc / opg;
                for y in 0..h {
                    for x in 0..w {
                        let mut acc = bias[oc];
                        for i in 0..kh {
                            for j in 0..kw {
                                for c in 0..cpg {
                                    let iy = y as isize + i as isize - ph as isize;
                                    let ix = x as isize + j as isize - pw as isize;
                                    if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                        continue;
                                    }
                                    acc += input.at(bn, g * cpg + c, iy as usize, ix as usize)
                                        * weights.at(oc, c, i, j);
                                }
                            }
                        }
                        out.set(bn, oc, y, x, acc);
                    }
                }
            }
        }
        out
    }

    fn assert_close(a: &Tensor<f32>, b: &Tensor<f32>, tol: f32) {
        assert_eq!(a.shape(), b.shape());
        for (i, (&x, &y)) in a.data().iter().zip(b.data()).enumerate() {
            assert!(
                (x - y).abs() <= tol,
                "element {i}: {x} vs {y} (|diff| = {})",
                (x - y).abs()
            );
        }
    }

    #[test]
    fn conv_identity_kernel_returns_input() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let input = rand_tensor(&mut rng, Shape::new(1, 1, 7, 5));
        let desc = ConvDescriptor::new(1, 1, (3, 3), 1).unwrap();
        let mut w = Tensor::zeros(desc.weight_shape());
        w.set(0, 0, 1, 1, 1.0);
        let out = conv2d(&input, &w, &[0.0], &desc).unwrap();
        assert_eq!(out, input, "identity 3x3 kernel must reproduce the input exactly");
    }

    #[test]
    fn conv_matches_reference_on_random_instances() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let cases = [
            ConvDescriptor::new(4, 24, (3, 3), 1).unwrap(),
            ConvDescriptor::new(4, 4, (3, 3), 4).unwrap(),
            ConvDescriptor::new(28, 6, (1, 1), 1).unwrap(),
            ConvDescriptor::new(6, 4, (5, 3), 2).unwrap(),
        ];
        for desc in cases {
            let input = rand_tensor(&mut rng, Shape::new(2, desc.in_channels, 9, 7));
            let weights = rand_tensor(&mut rng, desc.weight_shape());
            let bias: Vec<f32> = (0..desc.out_channels)
                .map(|_| rng.gen_range(-0.5..0.5))
                .collect();
            let got = conv2d(&input, &weights, &bias, &desc).unwrap();
            let want = conv2d_reference(&input, &weights, &bias, &desc);
            assert_close(&got, &want, 1e-5);
        }
    }

    #[test]
    fn conv_zero_padding_shows_at_borders() {
        // A 3x3 all-ones kernel over an all-ones image counts the in-bounds
        // neighborhood: 4 at corners, 6 at edges, 9 inside.
        let input = Tensor::filled(Shape::new(1, 1, 4, 4), 1.0);
        let desc = ConvDescriptor::new(1, 1, (3, 3), 1).unwrap();
        let w = Tensor::filled(desc.weight_shape(), 1.0);
        let out = conv2d(&input, &w, &[0.0], &desc).unwrap();
        assert_eq!(out.at(0, 0, 0, 0), 4.0);
        assert_eq!(out.at(0, 0, 0, 1), 6.0);
        assert_eq!(out.at(0, 0, 1, 1), 9.0);
        assert_eq!(out.at(0, 0, 3, 3), 4.0);
    }

    #[test]
    fn conv_rejects_bad_shapes() {
        assert!(matches!(
            ConvDescriptor::new(4, 8, (2, 3), 1),
            Err(TensorError::EvenKernel { .. })
        ));
        assert!(matches!(
            ConvDescriptor::new(4, 6, (3, 3), 4),
            Err(TensorError::GroupMismatch { .. })
        ));
        let desc = ConvDescriptor::new(4, 8, (3, 3), 1).unwrap();
        let input = Tensor::filled(Shape::new(1, 3, 5, 5), 0.0);
        let w = Tensor::filled(desc.weight_shape(), 0.0);
        assert!(conv2d(&input, &w, &[0.0; 8], &desc).is_err());
        let input = Tensor::filled(Shape::new(1, 4, 5, 5), 0.0);
        assert!(conv2d(&input, &w, &[0.0; 7], &desc).is_err());
    }

    #[test]
    fn conv_is_deterministic() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let desc = ConvDescriptor::new(8, 8, (3, 3), 1).unwrap();
        let input = rand_tensor(&mut rng, Shape::new(1, 8, 16, 16));
        let weights = rand_tensor(&mut rng, desc.weight_shape());
        let bias = vec![0.1; 8];
        let a = conv2d(&input, &weights, &bias, &desc).unwrap();
        let b = conv2d(&input, &weights, &bias, &desc).unwrap();
        assert_eq!(a, b, "repeated conv2d calls must be bit-identical");
    }

    #[test]
    fn batchnorm_matches_scalar_formula() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let input = rand_tensor(&mut rng, Shape::new(2, 3, 4, 4));
        let bn = BatchNormParams {
            gamma: vec![1.5, -0.5, 2.0],
            beta: vec![0.1, 0.2, -0.3],
            mean: vec![0.4, -0.2, 0.0],
            variance: vec![1.0, 0.25, 4.0],
            epsilon: 1e-5,
        };
        let out = batchnorm(&input, &bn).unwrap();
        for n in 0..2 {
            for c in 0..3 {
                for y in 0..4 {
                    for x in 0..4 {
                        let v = input.at(n, c, y, x);
                        let want = bn.gamma[c] * (v - bn.mean[c])
                            / (bn.variance[c] + bn.epsilon).sqrt()
                            + bn.beta[c];
                        let got = out.at(n, c, y, x);
                        assert!((got - want).abs() <= 1e-6, "{got} vs {want}");
                    }
                }
            }
        }
    }

    #[test]
    fn identity_batchnorm_with_eps_zero_is_identity() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let input = rand_tensor(&mut rng, Shape::new(1, 4, 3, 3));
        let bn = BatchNormParams::identity(4, 0.0);
        let out = batchnorm(&input, &bn).unwrap();
        assert_eq!(out, input);
    }

    #[test]
    fn fold_batchnorm_matches_composition() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        for _ in 0..100 {
            let desc = ConvDescriptor::new(3, 5, (3, 3), 1).unwrap();
            let input = rand_tensor(&mut rng, Shape::new(1, 3, 6, 6));
            let weights = rand_tensor(&mut rng, desc.weight_shape());
            let bias: Vec<f32> = (0..5).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let bn = BatchNormParams {
                gamma: (0..5).map(|_| rng.gen_range(0.5..1.5)).collect(),
                beta: (0..5).map(|_| rng.gen_range(-0.5..0.5)).collect(),
                mean: (0..5).map(|_| rng.gen_range(-0.5..0.5)).collect(),
                variance: (0..5).map(|_| rng.gen_range(0.1..2.0)).collect(),
                epsilon: 1e-5,
            };
            let composed = batchnorm(&conv2d(&input, &weights, &bias, &desc).unwrap(), &bn).unwrap();
            let (wf, bf) = fold_batchnorm(&weights, &bias, &bn).unwrap();
            let folded = conv2d(&input, &wf, &bf, &desc).unwrap();
            assert_close(&folded, &composed, 1e-5);
        }
    }

    #[test]
    fn relu6_clamps_both_sides() {
        let t = Tensor::from_vec(
            Shape::new(1, 1, 1, 5),
            vec![-1.0, 0.0, 3.0, 6.0, 7.5],
        )
        .unwrap();
        assert_eq!(relu6(&t).data(), &[0.0, 0.0, 3.0, 6.0, 6.0]);
    }

    #[test]
    fn hardtanh01_clamps_to_unit_interval() {
        let t = Tensor::from_vec(
            Shape::new(1, 1, 1, 5),
            vec![-0.2, 0.0, 0.5, 1.0, 1.3],
        )
        .unwrap();
        assert_eq!(hardtanh01(&t).data(), &[0.0, 0.0, 0.5, 1.0, 1.0]);
    }

    #[test]
    fn concat_places_b_channels_after_a() {
        let a = Tensor::from_vec(Shape::new(1, 2, 1, 2), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = Tensor::from_vec(Shape::new(1, 1, 1, 2), vec![9.0, 8.0]).unwrap();
        let out = concat_channels(&a, &b).unwrap();
        assert_eq!(out.shape(), Shape::new(1, 3, 1, 2));
        assert_eq!(out.at(0, 2, 0, 0), 9.0, "b's channel 0 must land at channel 2");
        assert_eq!(out.data(), &[1.0, 2.0, 3.0, 4.0, 9.0, 8.0]);
    }

    #[test]
    fn concat_with_zero_channel_tensor_is_identity() {
        let a = Tensor::from_vec(Shape::new(1, 2, 1, 2), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let empty: Tensor<f32> = Tensor::zeros(Shape::new(1, 0, 1, 2));
        let out = concat_channels(&a, &empty).unwrap();
        assert_eq!(out.shape(), a.shape());
        assert_eq!(out.data(), a.data());
    }

    #[test]
    fn concat_rejects_mismatched_spatial_dims() {
        let a: Tensor<f32> = Tensor::zeros(Shape::new(1, 2, 3, 3));
        let b: Tensor<f32> = Tensor::zeros(Shape::new(1, 2, 4, 3));
        assert!(concat_channels(&a, &b).is_err());
    }

    #[test]
    fn add_requires_identical_shapes() {
        let a: Tensor<f32> = Tensor::zeros(Shape::new(1, 2, 3, 3));
        let b: Tensor<f32> = Tensor::zeros(Shape::new(1, 3, 3, 3));
        assert!(add(&a, &b).is_err());
    }

    proptest! {
        // conv2d(x + y) == conv2d(x) + conv2d(y) with zero bias, up to FP32
        // reassociation.
        #[test]
        fn conv_is_linear(seed in 0u64..1000) {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let desc = ConvDescriptor::new(2, 3, (3, 3), 1).unwrap();
            let x = rand_tensor(&mut rng, Shape::new(1, 2, 5, 5));
            let y = rand_tensor(&mut rng, Shape::new(1, 2, 5, 5));
            let w = rand_tensor(&mut rng, desc.weight_shape());
            let zero = vec![0.0; 3];
            let lhs = conv2d(&add(&x, &y).unwrap(), &w, &zero, &desc).unwrap();
            let rhs = add(
                &conv2d(&x, &w, &zero, &desc).unwrap(),
                &conv2d(&y, &w, &zero, &desc).unwrap(),
            )
            .unwrap();
            for (a, b) in lhs.data().iter().zip(rhs.data()) {
                prop_assert!((a - b).abs() <= 1e-5);
            }
        }

        #[test]
        fn relu6_bounds_hold(v in -100.0f32..100.0) {
            let t = Tensor::filled(Shape::new(1, 1, 1, 1), v);
            let r = relu6(&t).data()[0];
            prop_assert!((0.0..=6.0).contains(&r));
            if (0.0..=6.0).contains(&v) {
                prop_assert_eq!(r, v);
            }
        }
    }
}
