//! Iterative radix-2 FFT over complex doubles.
//!
//! Natural-order input and output (bit-reversal handled internally), with the
//! 1/N normalization split symmetrically: both directions scale by 1/sqrt(N),
//! so a forward/inverse roundtrip is unit-gain and either direction alone
//! preserves energy (Parseval). The forward kernel is exp(−2πi·jk/N).

use num_complex::Complex;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FftError {
    #[error("FFT length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("buffer length {len} does not match {width}x{height}")]
    BadDimensions {
        len: usize,
        width: usize,
        height: usize,
    },
}

/// In-place forward FFT, kernel exp(−2πi·jk/N), scaled by 1/sqrt(N).
pub fn fft(data: &mut [Complex<f64>]) -> Result<(), FftError> {
    let tw = twiddles(check_len(data.len())?, -1.0);
    transform(data, &tw);
    Ok(())
}

/// In-place inverse FFT, kernel exp(+2πi·jk/N), scaled by 1/sqrt(N).
pub fn ifft(data: &mut [Complex<f64>]) -> Result<(), FftError> {
    let tw = twiddles(check_len(data.len())?, 1.0);
    transform(data, &tw);
    Ok(())
}

/// In-place 2-D FFT of a row-major height×width buffer: rows, then columns.
pub fn fft2(data: &mut [Complex<f64>], width: usize, height: usize) -> Result<(), FftError> {
    transform2(data, width, height, -1.0)
}

/// In-place 2-D inverse FFT of a row-major height×width buffer.
pub fn ifft2(data: &mut [Complex<f64>], width: usize, height: usize) -> Result<(), FftError> {
    transform2(data, width, height, 1.0)
}

fn check_len(n: usize) -> Result<usize, FftError> {
    if n.is_power_of_two() {
        Ok(n)
    } else {
        Err(FftError::NotPowerOfTwo(n))
    }
}

/// Unit roots exp(sign·2πi·k/n) for k in 0..n/2, indexed per stage by stride.
fn twiddles(n: usize, sign: f64) -> Vec<Complex<f64>> {
    (0..n / 2)
        .map(|k| Complex::from_polar(1.0, sign * TAU * k as f64 / n as f64))
        .collect()
}

fn transform(data: &mut [Complex<f64>], tw: &[Complex<f64>]) {
    let n = data.len();
    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            data.swap(i, j);
        }
    }
    // Butterfly stages; twiddles are read from the shared table at the
    // stage's stride so every root comes from one sin/cos evaluation.
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let stride = n / len;
        for block in data.chunks_exact_mut(len) {
            for k in 0..half {
                let w = tw[k * stride];
                let u = block[k];
                let v = block[k + half] * w;
                block[k] = u + v;
                block[k + half] = u - v;
            }
        }
        len <<= 1;
    }
    let scale = 1.0 / (n as f64).sqrt();
    for v in data.iter_mut() {
        *v *= scale;
    }
}

fn transform2(
    data: &mut [Complex<f64>],
    width: usize,
    height: usize,
    sign: f64,
) -> Result<(), FftError> {
    if data.len() != width * height {
        return Err(FftError::BadDimensions {
            len: data.len(),
            width,
            height,
        });
    }
    let tw_w = twiddles(check_len(width)?, sign);
    let tw_h = twiddles(check_len(height)?, sign);
    for row in data.chunks_exact_mut(width) {
        transform(row, &tw_w);
    }
    let mut col = vec![Complex::new(0.0, 0.0); height];
    for c in 0..width {
        for r in 0..height {
            col[r] = data[r * width + c];
        }
        transform(&mut col, &tw_h);
        for r in 0..height {
            data[r * width + c] = col[r];
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_signal(n: usize, seed: u64) -> Vec<Complex<f64>> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    fn rms(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
        let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
        (s / a.len() as f64).sqrt()
    }

    /// O(n²) DFT with the same orthonormal scaling, as an independent oracle.
    fn naive_dft(x: &[Complex<f64>], sign: f64) -> Vec<Complex<f64>> {
        let n = x.len();
        let scale = 1.0 / (n as f64).sqrt();
        (0..n)
            .map(|k| {
                let mut acc = Complex::new(0.0, 0.0);
                for (j, &v) in x.iter().enumerate() {
                    let ang = sign * TAU * (j * k % n) as f64 / n as f64;
                    acc += v * Complex::from_polar(1.0, ang);
                }
                acc * scale
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft_in_natural_order() {
        let x = random_signal(16, 1);
        let mut got = x.clone();
        fft(&mut got).unwrap();
        let want = naive_dft(&x, -1.0);
        assert!(rms(&got, &want) < 1e-13, "rms {}", rms(&got, &want));
        let mut back = x.clone();
        ifft(&mut back).unwrap();
        let want = naive_dft(&x, 1.0);
        assert!(rms(&back, &want) < 1e-13);
    }

    #[test]
    fn roundtrip_is_unit_gain() {
        let x = random_signal(256, 2);
        let mut y = x.clone();
        fft(&mut y).unwrap();
        ifft(&mut y).unwrap();
        assert!(rms(&x, &y) < 1e-14, "rms {}", rms(&x, &y));
    }

    #[test]
    fn forward_alone_preserves_energy() {
        let x = random_signal(512, 3);
        let e_in: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        let mut y = x;
        fft(&mut y).unwrap();
        let e_out: f64 = y.iter().map(|v| v.norm_sqr()).sum();
        assert!((e_in - e_out).abs() / e_in < 1e-13);
    }

    #[test]
    fn impulse_and_dc_spectra() {
        let n = 8;
        let mut x = vec![Complex::new(0.0, 0.0); n];
        x[0] = Complex::new(1.0, 0.0);
        fft(&mut x).unwrap();
        let flat = 1.0 / (n as f64).sqrt();
        for v in &x {
            assert!((v - Complex::new(flat, 0.0)).norm() < 1e-15);
        }
        let mut ones = vec![Complex::new(1.0, 0.0); n];
        fft(&mut ones).unwrap();
        assert!((ones[0].re - (n as f64).sqrt()).abs() < 1e-14);
        for v in &ones[1..] {
            assert!(v.norm() < 1e-14);
        }
    }

    #[test]
    fn forward_kernel_sign_places_positive_tone_at_positive_bin() {
        let n = 16;
        let mut x: Vec<Complex<f64>> = (0..n)
            .map(|j| Complex::from_polar(1.0, TAU * 3.0 * j as f64 / n as f64))
            .collect();
        fft(&mut x).unwrap();
        for (k, v) in x.iter().enumerate() {
            if k == 3 {
                assert!((v.norm() - (n as f64).sqrt()).abs() < 1e-12);
            } else {
                assert!(v.norm() < 1e-12, "leakage at bin {k}: {}", v.norm());
            }
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        let mut x = vec![Complex::new(0.0, 0.0); 12];
        assert_eq!(fft(&mut x).unwrap_err(), FftError::NotPowerOfTwo(12));
        let mut x = vec![Complex::new(0.0, 0.0); 8];
        assert_eq!(
            fft2(&mut x, 4, 4).unwrap_err(),
            FftError::BadDimensions {
                len: 8,
                width: 4,
                height: 4
            }
        );
    }

    #[test]
    fn two_dimensional_roundtrip_and_impulse() {
        let (w, h) = (16, 8);
        let x = random_signal(w * h, 4);
        let mut y = x.clone();
        fft2(&mut y, w, h).unwrap();
        ifft2(&mut y, w, h).unwrap();
        assert!(rms(&x, &y) < 1e-14);

        let mut d = vec![Complex::new(0.0, 0.0); w * h];
        d[0] = Complex::new(1.0, 0.0);
        fft2(&mut d, w, h).unwrap();
        let flat = 1.0 / ((w * h) as f64).sqrt();
        for v in &d {
            assert!((v - Complex::new(flat, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn length_one_is_identity() {
        let mut x = vec![Complex::new(0.7, -0.2)];
        fft(&mut x).unwrap();
        assert_eq!(x[0], Complex::new(0.7, -0.2));
    }
}
