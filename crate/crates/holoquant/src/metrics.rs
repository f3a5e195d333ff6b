//! Quality and cost metrics: MSE, PSNR, SSIM, the amplitude/phase training
//! loss, and byte-level size accounting for serialized models.
//!
//! Internals accumulate in f64; results narrow to f32 at the API boundary.
//! PSNR and SSIM on phase compare the normalized [0,1] phase channels; the
//! hologram loss weighs phase in radians with the 1/(2π) factor.

use crate::tensor::Tensor;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("image lengths differ: {a} vs {b}")]
    ShapeMismatch { a: usize, b: usize },
    #[error("empty image")]
    EmptyImage,
    #[error("max_value must be positive and finite, got {0}")]
    BadMaxValue(f32),
    #[error("image {width}x{height} is smaller than the {window}x{window} SSIM window")]
    TooSmallForWindow {
        width: usize,
        height: usize,
        window: usize,
    },
    #[error("channel count mismatch: {0} vs {1}")]
    ChannelCountMismatch(usize, usize),
    #[error("expected a (1, 6, H, W) output tensor, got {0}")]
    BadOutputShape(String),
}

/// PSNR/SSIM on amplitude and phase, each averaged over the color channels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QualityReport {
    pub psnr_amplitude: f32,
    pub psnr_phase: f32,
    pub ssim_amplitude: f32,
    pub ssim_phase: f32,
}

/// Mean squared difference.
pub fn mse(a: &[f32], b: &[f32]) -> Result<f32, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::ShapeMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    if a.is_empty() {
        return Err(MetricsError::EmptyImage);
    }
    let sum: f64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum();
    Ok((sum / a.len() as f64) as f32)
}

/// 10·log10(max_value² / MSE), in dB; +infinity for identical images.
pub fn psnr(a: &[f32], b: &[f32], max_value: f32) -> Result<f32, MetricsError> {
    if !(max_value.is_finite() && max_value > 0.0) {
        return Err(MetricsError::BadMaxValue(max_value));
    }
    let e = mse(a, b)? as f64;
    if e == 0.0 {
        return Ok(f32::INFINITY);
    }
    let m = max_value as f64;
    Ok((10.0 * (m * m / e).log10()) as f32)
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

fn gaussian_window() -> [f64; SSIM_WINDOW * SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW * SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    let mut sum = 0.0;
    for i in 0..SSIM_WINDOW {
        for j in 0..SSIM_WINDOW {
            let d2 = (i as f64 - c).powi(2) + (j as f64 - c).powi(2);
            let g = (-d2 / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
            w[i * SSIM_WINDOW + j] = g;
            sum += g;
        }
    }
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Mean structural similarity with the canonical 11×11 Gaussian window
/// (σ = 1.5, K1 = 0.01, K2 = 0.03) over all fully interior window positions;
/// `max_value` is the dynamic range L.
pub fn ssim(
    a: &[f32],
    b: &[f32],
    width: usize,
    height: usize,
    max_value: f32,
) -> Result<f32, MetricsError> {
    if a.len() != b.len() || a.len() != width * height {
        return Err(MetricsError::ShapeMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    if !(max_value.is_finite() && max_value > 0.0) {
        return Err(MetricsError::BadMaxValue(max_value));
    }
    if width < SSIM_WINDOW || height < SSIM_WINDOW {
        return Err(MetricsError::TooSmallForWindow {
            width,
            height,
            window: SSIM_WINDOW,
        });
    }
    let win = gaussian_window();
    let l = max_value as f64;
    let c1 = (SSIM_K1 * l) * (SSIM_K1 * l);
    let c2 = (SSIM_K2 * l) * (SSIM_K2 * l);

    let mut total = 0.0f64;
    let mut count = 0usize;
    for top in 0..=(height - SSIM_WINDOW) {
        for left in 0..=(width - SSIM_WINDOW) {
            let mut mu_a = 0.0;
            let mut mu_b = 0.0;
            let mut aa = 0.0;
            let mut bb = 0.0;
            let mut ab = 0.0;
            for i in 0..SSIM_WINDOW {
                let row = (top + i) * width + left;
                for j in 0..SSIM_WINDOW {
                    let w = win[i * SSIM_WINDOW + j];
                    let x = a[row + j] as f64;
                    let y = b[row + j] as f64;
                    mu_a += w * x;
                    mu_b += w * y;
                    aa += w * x * x;
                    bb += w * y * y;
                    ab += w * x * y;
                }
            }
            let var_a = aa - mu_a * mu_a;
            let var_b = bb - mu_b * mu_b;
            let cov = ab - mu_a * mu_b;
            let num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
            let den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
            total += num / den;
            count += 1;
        }
    }
    Ok((total / count as f64) as f32)
}

/// Training loss over N channels: l = Σ_n [MSE(a_n, â_n) + (1/2π)·MSE(φ_n, φ̂_n)],
/// phases in radians.
pub fn hologram_loss(
    target_amp: &[&[f32]],
    target_phase: &[&[f32]],
    pred_amp: &[&[f32]],
    pred_phase: &[&[f32]],
) -> Result<f32, MetricsError> {
    let n = target_amp.len();
    for other in [target_phase.len(), pred_amp.len(), pred_phase.len()] {
        if other != n {
            return Err(MetricsError::ChannelCountMismatch(n, other));
        }
    }
    let mut total = 0.0f64;
    for ch in 0..n {
        total += mse(target_amp[ch], pred_amp[ch])? as f64;
        total += mse(target_phase[ch], pred_phase[ch])? as f64 / std::f64::consts::TAU;
    }
    Ok(total as f32)
}

/// Compares two (1, 6, H, W) outputs (channels 0–2 amplitude, 3–5 normalized
/// phase), averaging PSNR/SSIM per group. Dynamic range is 1.
pub fn compare_outputs(a: &Tensor<f32>, b: &Tensor<f32>) -> Result<QualityReport, MetricsError> {
    let shape = a.shape();
    if b.shape() != shape || shape.n != 1 || shape.c != 6 {
        return Err(MetricsError::BadOutputShape(format!(
            "{} vs {}",
            a.shape(),
            b.shape()
        )));
    }
    let plane = shape.h * shape.w;
    let ch = |t: &'_ Tensor<f32>, c: usize| -> Vec<f32> { t.data()[c * plane..][..plane].to_vec() };

    let mut psnr_sum = [0.0f32; 2];
    let mut ssim_sum = [0.0f32; 2];
    for c in 0..6 {
        let group = c / 3;
        let (xa, xb) = (ch(a, c), ch(b, c));
        psnr_sum[group] += psnr(&xa, &xb, 1.0)?;
        ssim_sum[group] += ssim(&xa, &xb, shape.w, shape.h, 1.0)?;
    }
    Ok(QualityReport {
        psnr_amplitude: psnr_sum[0] / 3.0,
        psnr_phase: psnr_sum[1] / 3.0,
        ssim_amplitude: ssim_sum[0] / 3.0,
        ssim_phase: ssim_sum[1] / 3.0,
    })
}

/// Byte accounting for a serialized store; produced by `WeightStore::size_report`.
#[derive(Clone, Debug, PartialEq)]
pub struct SizeReport {
    pub payload_bytes: usize,
    pub manifest_bytes: usize,
    pub total_bytes: usize,
    /// (tensor name, payload bytes), in store order.
    pub per_tensor: Vec<(String, usize)>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_image(n: usize, seed: u64) -> Vec<f32> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(0.0..1.0)).collect()
    }

    #[test]
    fn mse_direct_evaluations() {
        let x = random_image(100, 1);
        assert_eq!(mse(&x, &x).unwrap(), 0.0);
        let y: Vec<f32> = x.iter().map(|v| v + 0.1).collect();
        let e = mse(&x, &y).unwrap();
        assert!((e - 0.01).abs() < 1e-7, "got {e}");
        assert!(mse(&x, &y[1..]).is_err());
        assert!(mse(&[], &[]).is_err());
    }

    #[test]
    fn mse_matches_naive_loop() {
        let a = random_image(257, 2);
        let b = random_image(257, 3);
        let mut acc = 0.0f64;
        for i in 0..a.len() {
            acc += (a[i] as f64 - b[i] as f64).powi(2);
        }
        let want = (acc / a.len() as f64) as f32;
        assert_eq!(mse(&a, &b).unwrap(), want);
    }

    #[test]
    fn psnr_anchors() {
        let x = vec![0.4f32; 64];
        let y = vec![0.5f32; 64];
        let p = psnr(&x, &y, 1.0).unwrap();
        assert!((p - 20.0).abs() < 1e-3, "got {p}");
        // Halving the error adds 20·log10(2) ≈ 6.0206 dB.
        let y2 = vec![0.45f32; 64];
        let p2 = psnr(&x, &y2, 1.0).unwrap();
        assert!((p2 - p - 6.0206).abs() < 1e-3, "got step {}", p2 - p);
        assert_eq!(psnr(&x, &x, 1.0).unwrap(), f32::INFINITY);
        assert!(psnr(&x, &y, 0.0).is_err());
    }

    #[test]
    fn psnr_decreases_as_mse_grows() {
        let x = vec![0.5f32; 128];
        let mut last = f32::INFINITY;
        for step in 1..=8 {
            let y: Vec<f32> = x.iter().map(|v| v + 0.01 * step as f32).collect();
            let p = psnr(&x, &y, 1.0).unwrap();
            assert!(p < last, "PSNR must fall as the offset grows");
            last = p;
        }
    }

    #[test]
    fn mse_and_psnr_are_permutation_invariant() {
        let a = random_image(256, 4);
        let b = random_image(256, 5);
        let mut idx: Vec<usize> = (0..a.len()).collect();
        idx.shuffle(&mut ChaCha12Rng::seed_from_u64(6));
        let pa: Vec<f32> = idx.iter().map(|&i| a[i]).collect();
        let pb: Vec<f32> = idx.iter().map(|&i| b[i]).collect();
        assert_eq!(mse(&a, &b).unwrap(), mse(&pa, &pb).unwrap());
        assert_eq!(psnr(&a, &b, 1.0).unwrap(), psnr(&pa, &pb, 1.0).unwrap());
    }

    #[test]
    fn ssim_of_identical_images_is_exactly_one() {
        let x = random_image(32 * 24, 7);
        assert_eq!(ssim(&x, &x, 32, 24, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn ssim_is_symmetric_and_bounded() {
        let a = random_image(16 * 16, 8);
        let b = random_image(16 * 16, 9);
        let s1 = ssim(&a, &b, 16, 16, 1.0).unwrap();
        let s2 = ssim(&b, &a, 16, 16, 1.0).unwrap();
        assert!((s1 - s2).abs() < 1e-6);
        assert!((-1.0..=1.0).contains(&s1), "got {s1}");
    }

    #[test]
    fn ssim_of_inverted_binary_image_is_negative() {
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let a: Vec<f32> = (0..24 * 24)
            .map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 })
            .collect();
        let b: Vec<f32> = a.iter().map(|v| 1.0 - v).collect();
        let s = ssim(&a, &b, 24, 24, 1.0).unwrap();
        assert!(s < 0.0, "anti-correlated image pair must score negative, got {s}");
    }

    #[test]
    fn ssim_rejects_small_images() {
        let x = vec![0.0f32; 64];
        assert!(matches!(
            ssim(&x, &x, 8, 8, 1.0),
            Err(MetricsError::TooSmallForWindow { .. })
        ));
        // 11×11 is exactly one window position.
        let x = vec![0.25f32; 121];
        assert_eq!(ssim(&x, &x, 11, 11, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn ssim_penalizes_noise_more_at_higher_variance() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let a = random_image(32 * 32, 12);
        let small: Vec<f32> = a.iter().map(|v| v + rng.gen_range(-0.01..0.01)).collect();
        let large: Vec<f32> = a.iter().map(|v| v + rng.gen_range(-0.3..0.3)).collect();
        let s_small = ssim(&a, &small, 32, 32, 1.0).unwrap();
        let s_large = ssim(&a, &large, 32, 32, 1.0).unwrap();
        assert!(s_small > s_large);
        assert!(s_small > 0.9, "got {s_small}");
    }

    #[test]
    fn hologram_loss_direct_evaluations() {
        let plane = 64;
        let amp_t = vec![0.5f32; plane];
        let amp_p = vec![0.3f32; plane];
        // Phase offset sqrt(2π) radians gives phase MSE of exactly 2π, so the
        // weighted phase term is 1 and the total is 0.04 + 1.
        let ph_t = vec![0.0f32; plane];
        let ph_p = vec![std::f32::consts::TAU.sqrt(); plane];
        let l = hologram_loss(&[&amp_t], &[&ph_t], &[&amp_p], &[&ph_p]).unwrap();
        assert!((l - 1.04).abs() < 1e-6, "got {l}");

        let zero = hologram_loss(&[&amp_t], &[&ph_t], &[&amp_t], &[&ph_t]).unwrap();
        assert_eq!(zero, 0.0);
        assert!(hologram_loss(&[&amp_t], &[], &[&amp_p], &[&ph_p]).is_err());
    }

    #[test]
    fn hologram_loss_phase_term_is_quadratic() {
        let plane = 32;
        let zero = vec![0.0f32; plane];
        let ph1 = vec![0.25f32; plane];
        let ph2: Vec<f32> = ph1.iter().map(|v| v * std::f32::consts::TAU).collect();
        let l1 = hologram_loss(&[&zero], &[&zero], &[&zero], &[&ph1]).unwrap();
        let l2 = hologram_loss(&[&zero], &[&zero], &[&zero], &[&ph2]).unwrap();
        let ratio = l2 / l1;
        let want = std::f32::consts::TAU * std::f32::consts::TAU;
        assert!((ratio - want).abs() / want < 1e-5, "ratio {ratio}");
    }

    #[test]
    fn hologram_loss_sums_over_channels() {
        let plane = 16;
        let t = vec![0.5f32; plane];
        let p = vec![0.4f32; plane];
        let z = vec![0.0f32; plane];
        let one = hologram_loss(&[&t], &[&z], &[&p], &[&z]).unwrap();
        let three = hologram_loss(
            &[&t, &t, &t],
            &[&z, &z, &z],
            &[&p, &p, &p],
            &[&z, &z, &z],
        )
        .unwrap();
        assert!((three - 3.0 * one).abs() < 1e-7);
    }

    #[test]
    fn compare_outputs_shapes_and_identity() {
        use crate::tensor::Shape;
        let shape = Shape::new(1, 6, 16, 16);
        let data = random_image(shape.len(), 13);
        let a = Tensor::from_vec(shape, data.clone()).unwrap();
        let r = compare_outputs(&a, &a).unwrap();
        assert_eq!(r.psnr_amplitude, f32::INFINITY);
        assert_eq!(r.ssim_amplitude, 1.0);
        assert_eq!(r.ssim_phase, 1.0);

        let mut other = data;
        for v in &mut other {
            *v = (*v + 0.05).min(1.0);
        }
        let b = Tensor::from_vec(shape, other).unwrap();
        let r = compare_outputs(&a, &b).unwrap();
        assert!(r.psnr_amplitude > 10.0 && r.psnr_amplitude < 40.0);
        assert!(r.ssim_amplitude > 0.5);

        let bad = Tensor::<f32>::zeros(Shape::new(1, 3, 16, 16));
        assert!(compare_outputs(&a, &bad).is_err());
    }
}
