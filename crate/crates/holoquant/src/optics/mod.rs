//! Scalar diffraction for verifying holograms numerically: complex field
//! representation, point-source hologram synthesis by spherical-wave
//! summation, and angular-spectrum propagation between parallel planes.
//!
//! All field math runs in double precision; amplitudes and phases cross into
//! FP32 only at the tensor boundary.

pub mod fft;

use num_complex::Complex;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OpticsError {
    #[error("plane shapes differ: {a} vs {b} values for {width}x{height}")]
    ShapeMismatch {
        a: usize,
        b: usize,
        width: usize,
        height: usize,
    },
    #[error("pitch must be positive and finite, got {0}")]
    BadPitch(f64),
    #[error("wavelength must be positive and finite, got {0}")]
    BadWavelength(f64),
    #[error("scene point depth must be positive, got {0} m")]
    BadDepth(f64),
    #[error("scene point amplitude must be finite and non-negative, got {0}")]
    BadAmplitude(f64),
    #[error("scene must contain at least one point")]
    EmptyScene,
    #[error("field contains a non-finite value")]
    NonFinite,
    #[error(transparent)]
    Fft(#[from] fft::FftError),
}

/// A sampled complex wavefield on a regular grid.
///
/// `values` is row-major height×width. Physical coordinates put the origin at
/// pixel (width/2, height/2): x = (col − width/2)·pitch, y = (row − height/2)·pitch.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    width: usize,
    height: usize,
    pitch: f64,
    wavelength: f64,
    values: Vec<Complex<f64>>,
}

impl ComplexField {
    pub fn new(
        width: usize,
        height: usize,
        pitch: f64,
        wavelength: f64,
        values: Vec<Complex<f64>>,
    ) -> Result<Self, OpticsError> {
        if !(pitch.is_finite() && pitch > 0.0) {
            return Err(OpticsError::BadPitch(pitch));
        }
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(OpticsError::BadWavelength(wavelength));
        }
        if values.len() != width * height {
            return Err(OpticsError::ShapeMismatch {
                a: values.len(),
                b: width * height,
                width,
                height,
            });
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(OpticsError::NonFinite);
        }
        Ok(ComplexField {
            width,
            height,
            pitch,
            wavelength,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn values(&self) -> &[Complex<f64>] {
        &self.values
    }

    pub fn at(&self, row: usize, col: usize) -> Complex<f64> {
        self.values[row * self.width + col]
    }

    /// Physical x coordinate of a column, meters.
    pub fn x_of(&self, col: usize) -> f64 {
        (col as f64 - self.width as f64 / 2.0) * self.pitch
    }

    /// Physical y coordinate of a row, meters.
    pub fn y_of(&self, row: usize) -> f64 {
        (row as f64 - self.height as f64 / 2.0) * self.pitch
    }
}

/// A self-luminous point of the target scene, z meters in front of the
/// hologram plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScenePoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub amplitude: f64,
}

/// Builds a field from amplitude and phase planes, both in [0, 1]:
/// value = amp·exp(i·(phase01 − 0.5)·2π), so 0.5 decodes to zero phase.
pub fn field_from_amp_phase(
    amp: &[f32],
    phase01: &[f32],
    width: usize,
    height: usize,
    pitch: f64,
    wavelength: f64,
) -> Result<ComplexField, OpticsError> {
    if amp.len() != phase01.len() || amp.len() != width * height {
        return Err(OpticsError::ShapeMismatch {
            a: amp.len(),
            b: phase01.len(),
            width,
            height,
        });
    }
    let values = amp
        .iter()
        .zip(phase01)
        .map(|(&a, &p)| Complex::from_polar(a as f64, (p as f64 - 0.5) * TAU))
        .collect();
    ComplexField::new(width, height, pitch, wavelength, values)
}

/// |value|² per pixel, row-major.
pub fn intensity(field: &ComplexField) -> Vec<f32> {
    field.values.iter().map(|v| v.norm_sqr() as f32).collect()
}

fn fftfreq(k: usize, n: usize, pitch: f64) -> f64 {
    let k = if k < n.div_ceil(2) {
        k as f64
    } else {
        k as f64 - n as f64
    };
    k / (n as f64 * pitch)
}

/// Propagates a field by `z` meters (negative z back-propagates) with the
/// transfer-function angular spectrum method:
/// U_out = IFFT[FFT[U_in]·H], H = exp(i·2π·z·sqrt(1/λ² − f_x² − f_y²)),
/// with evanescent components (f_x² + f_y² > 1/λ²) cut to zero.
///
/// Grid dimensions must be powers of two. Energy in the propagating band is
/// conserved (|H| = 1 there).
pub fn asm_propagate(field: &ComplexField, z: f64) -> Result<ComplexField, OpticsError> {
    let (w, h) = (field.width, field.height);
    let mut spec = field.values.clone();
    fft::fft2(&mut spec, w, h)?;

    let inv_wl_sq = 1.0 / (field.wavelength * field.wavelength);
    for row in 0..h {
        let fy = fftfreq(row, h, field.pitch);
        for col in 0..w {
            let fx = fftfreq(col, w, field.pitch);
            let s = inv_wl_sq - fx * fx - fy * fy;
            let v = &mut spec[row * w + col];
            if s >= 0.0 {
                *v *= Complex::from_polar(1.0, TAU * z * s.sqrt());
            } else {
                *v = Complex::new(0.0, 0.0);
            }
        }
    }

    fft::ifft2(&mut spec, w, h)?;
    ComplexField::new(w, h, field.pitch, field.wavelength, spec)
}

/// Radius on the hologram plane inside which a point at depth `z` is sampled
/// without aliasing: the spherical wave's local fringe frequency reaches the
/// grid's Nyquist limit 1/(2·pitch) at ρ = z·tan(asin(λ/(2·pitch))).
fn valid_zone_radius(z: f64, pitch: f64, wavelength: f64) -> f64 {
    let s = wavelength / (2.0 * pitch);
    if s >= 1.0 {
        f64::INFINITY
    } else {
        z * s.asin().tan()
    }
}

/// Point-based hologram: each scene point contributes an exact spherical
/// wave, h(x,y) = Σ_j (a_j/r_j)·exp(i·2π·r_j/λ) with
/// r_j = sqrt((x−x_j)² + (y−y_j)² + z_j²).
///
/// Each point's contribution is restricted to the zone where the grid can
/// sample its fringes (see `valid_zone_radius`); outside it the fringe
/// frequency exceeds Nyquist and the aliased energy would reconstruct at
/// false locations rather than add useful signal.
pub fn pbm_hologram(
    points: &[ScenePoint],
    width: usize,
    height: usize,
    pitch: f64,
    wavelength: f64,
) -> Result<ComplexField, OpticsError> {
    if points.is_empty() {
        return Err(OpticsError::EmptyScene);
    }
    for p in points {
        if !(p.z.is_finite() && p.z > 0.0) {
            return Err(OpticsError::BadDepth(p.z));
        }
        if !(p.amplitude.is_finite() && p.amplitude >= 0.0) {
            return Err(OpticsError::BadAmplitude(p.amplitude));
        }
    }
    let field = ComplexField::new(
        width,
        height,
        pitch,
        wavelength,
        vec![Complex::new(0.0, 0.0); width * height],
    )?;
    let mut values = field.values;
    let k = TAU / wavelength;
    for p in points {
        let zone = valid_zone_radius(p.z, pitch, wavelength);
        let zone_sq = zone * zone;
        for row in 0..height {
            let dy = (row as f64 - height as f64 / 2.0) * pitch - p.y;
            for col in 0..width {
                let dx = (col as f64 - width as f64 / 2.0) * pitch - p.x;
                let rho_sq = dx * dx + dy * dy;
                if rho_sq > zone_sq {
                    continue;
                }
                let r = (rho_sq + p.z * p.z).sqrt();
                values[row * width + col] += (p.amplitude / r) * Complex::from_polar(1.0, k * r);
            }
        }
    }
    ComplexField::new(width, height, pitch, wavelength, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    const PITCH: f64 = 8e-6;
    const GREEN: f64 = 520e-9;

    fn random_field(w: usize, h: usize, seed: u64) -> ComplexField {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let values = (0..w * h)
            .map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        ComplexField::new(w, h, PITCH, GREEN, values).unwrap()
    }

    fn rms_diff(a: &ComplexField, b: &ComplexField) -> f64 {
        let s: f64 = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum();
        (s / a.values().len() as f64).sqrt()
    }

    fn energy(f: &ComplexField) -> f64 {
        f.values().iter().map(|v| v.norm_sqr()).sum()
    }

    #[test]
    fn field_from_amp_phase_decodes_the_convention() {
        let f = field_from_amp_phase(&[1.0], &[0.5], 1, 1, PITCH, GREEN).unwrap();
        assert!((f.at(0, 0) - Complex::new(1.0, 0.0)).norm() < 1e-12);
        let f = field_from_amp_phase(&[1.0], &[0.75], 1, 1, PITCH, GREEN).unwrap();
        assert!((f.at(0, 0) - Complex::new(0.0, 1.0)).norm() < 1e-12, "got {}", f.at(0, 0));
        let f = field_from_amp_phase(&[0.0], &[0.123], 1, 1, PITCH, GREEN).unwrap();
        assert_eq!(f.at(0, 0), Complex::new(0.0, 0.0));
        assert!(field_from_amp_phase(&[1.0], &[0.5, 0.5], 1, 1, PITCH, GREEN).is_err());
    }

    #[test]
    fn intensity_is_squared_magnitude() {
        let f = ComplexField::new(
            2,
            1,
            PITCH,
            GREEN,
            vec![Complex::new(1.0, 0.0), Complex::new(3.0, 4.0)],
        )
        .unwrap();
        assert_eq!(intensity(&f), vec![1.0, 25.0]);
        let amp = [0.3f32, 0.8];
        let f = field_from_amp_phase(&amp, &[0.1, 0.9], 2, 1, PITCH, GREEN).unwrap();
        let i = intensity(&f);
        for (got, a) in i.iter().zip(amp) {
            assert!((got - a * a).abs() < 1e-6);
        }
    }

    #[test]
    fn field_construction_validates() {
        assert!(matches!(
            ComplexField::new(1, 1, 0.0, GREEN, vec![Complex::new(0.0, 0.0)]),
            Err(OpticsError::BadPitch(_))
        ));
        assert!(matches!(
            ComplexField::new(1, 1, PITCH, -1.0, vec![Complex::new(0.0, 0.0)]),
            Err(OpticsError::BadWavelength(_))
        ));
        assert!(matches!(
            ComplexField::new(1, 1, PITCH, GREEN, vec![Complex::new(f64::NAN, 0.0)]),
            Err(OpticsError::NonFinite)
        ));
    }

    #[test]
    fn asm_zero_distance_is_identity() {
        let f = random_field(64, 64, 10);
        let g = asm_propagate(&f, 0.0).unwrap();
        assert!(rms_diff(&f, &g) < 1e-12, "rms {}", rms_diff(&f, &g));
    }

    #[test]
    fn asm_roundtrip_is_unitary() {
        // At 8 µm pitch every representable frequency propagates at 520 nm,
        // so any field on this grid is band-limited.
        let f = random_field(128, 128, 11);
        let fwd = asm_propagate(&f, 6e-3).unwrap();
        let back = asm_propagate(&fwd, -6e-3).unwrap();
        let num: f64 = f
            .values()
            .iter()
            .zip(back.values())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum();
        let den = energy(&f);
        assert!((num / den).sqrt() < 1e-6, "relative rms {}", (num / den).sqrt());
        let drift = (energy(&fwd) - den).abs() / den;
        assert!(drift < 1e-10, "energy drift {drift}");
    }

    #[test]
    fn asm_plane_wave_gains_global_phase() {
        let (w, h) = (32, 32);
        let ones = vec![Complex::new(1.0, 0.0); w * h];
        let f = ComplexField::new(w, h, PITCH, GREEN, ones).unwrap();
        let z = 6e-3;
        let g = asm_propagate(&f, z).unwrap();
        let want = Complex::from_polar(1.0, TAU * z / GREEN);
        for v in g.values() {
            assert!((v - want).norm() < 1e-9, "got {v}, want {want}");
        }
    }

    #[test]
    fn asm_propagations_compose() {
        let f = random_field(64, 64, 12);
        let two_hop = asm_propagate(&asm_propagate(&f, 2e-3).unwrap(), -5e-3).unwrap();
        let direct = asm_propagate(&f, -3e-3).unwrap();
        assert!(rms_diff(&two_hop, &direct) < 1e-9);
    }

    #[test]
    fn asm_is_linear() {
        let f = random_field(32, 32, 13);
        let g = random_field(32, 32, 14);
        let a = Complex::new(0.7, -0.4);
        let combo_vals: Vec<Complex<f64>> = f
            .values()
            .iter()
            .zip(g.values())
            .map(|(x, y)| a * x + y)
            .collect();
        let combo = ComplexField::new(32, 32, PITCH, GREEN, combo_vals).unwrap();
        let lhs = asm_propagate(&combo, 4e-3).unwrap();
        let pf = asm_propagate(&f, 4e-3).unwrap();
        let pg = asm_propagate(&g, 4e-3).unwrap();
        for ((l, x), y) in lhs.values().iter().zip(pf.values()).zip(pg.values()) {
            assert!((l - (a * x + y)).norm() < 1e-12);
        }
    }

    #[test]
    fn asm_rejects_non_power_of_two_grids() {
        let f = ComplexField::new(
            12,
            12,
            PITCH,
            GREEN,
            vec![Complex::new(0.0, 0.0); 144],
        )
        .unwrap();
        assert!(matches!(
            asm_propagate(&f, 1e-3),
            Err(OpticsError::Fft(fft::FftError::NotPowerOfTwo(12)))
        ));
    }

    fn single_point(x: f64, y: f64, z: f64) -> ScenePoint {
        ScenePoint {
            x,
            y,
            z,
            amplitude: 1.0,
        }
    }

    #[test]
    fn pbm_single_point_is_radially_symmetric() {
        let h = pbm_hologram(&[single_point(0.0, 0.0, 6e-3)], 128, 128, PITCH, GREEN).unwrap();
        for row in 1..128 {
            for col in 1..128 {
                let a = h.at(row, col).norm();
                let b = h.at(128 - row, 128 - col).norm();
                assert!((a - b).abs() <= 1e-9, "asymmetry at ({row},{col}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn pbm_superposition_is_exact() {
        let p1 = single_point(2e-4, -1e-4, 5e-3);
        let p2 = ScenePoint {
            x: -3e-4,
            y: 2e-4,
            z: 8e-3,
            amplitude: 0.6,
        };
        let both = pbm_hologram(&[p1, p2], 64, 64, PITCH, GREEN).unwrap();
        let h1 = pbm_hologram(&[p1], 64, 64, PITCH, GREEN).unwrap();
        let h2 = pbm_hologram(&[p2], 64, 64, PITCH, GREEN).unwrap();
        for ((b, x), y) in both.values().iter().zip(h1.values()).zip(h2.values()) {
            assert_eq!(*b, x + y, "summation must be exactly linear");
        }
    }

    #[test]
    fn pbm_conjugate_flips_phase_sign() {
        let p = single_point(1e-4, 5e-5, 4e-3);
        let h = pbm_hologram(&[p], 32, 32, PITCH, GREEN).unwrap();
        // Reference with the phase sign negated, same traversal.
        let k = TAU / GREEN;
        let zone = 4e-3 * ((GREEN / (2.0 * PITCH)).asin()).tan();
        for row in 0..32 {
            for col in 0..32 {
                let dy = (row as f64 - 16.0) * PITCH - p.y;
                let dx = (col as f64 - 16.0) * PITCH - p.x;
                let rho_sq = dx * dx + dy * dy;
                let want = if rho_sq > zone * zone {
                    Complex::new(0.0, 0.0)
                } else {
                    let r = (rho_sq + p.z * p.z).sqrt();
                    (1.0 / r) * Complex::from_polar(1.0, -k * r)
                };
                assert!((h.at(row, col).conj() - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn pbm_validates_scene() {
        assert!(matches!(
            pbm_hologram(&[], 8, 8, PITCH, GREEN),
            Err(OpticsError::EmptyScene)
        ));
        assert!(matches!(
            pbm_hologram(&[single_point(0.0, 0.0, -1e-3)], 8, 8, PITCH, GREEN),
            Err(OpticsError::BadDepth(_))
        ));
        let bad = ScenePoint {
            x: 0.0,
            y: 0.0,
            z: 1e-3,
            amplitude: -0.5,
        };
        assert!(matches!(
            pbm_hologram(&[bad], 8, 8, PITCH, GREEN),
            Err(OpticsError::BadAmplitude(_))
        ));
    }

    /// Back-propagating a point hologram must focus at the point.
    fn assert_focus(x: f64, y: f64, z: f64) {
        let (w, h) = (128usize, 128usize);
        let holo = pbm_hologram(&[single_point(x, y, z)], w, h, PITCH, GREEN).unwrap();
        let rec = asm_propagate(&holo, -z).unwrap();
        let img = intensity(&rec);
        let argmax = img
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        let (row, col) = (argmax / w, argmax % w);
        let want_col = x / PITCH + w as f64 / 2.0;
        let want_row = y / PITCH + h as f64 / 2.0;
        let err = ((row as f64 - want_row).powi(2) + (col as f64 - want_col).powi(2)).sqrt();
        assert!(
            err <= 1.0,
            "focus error {err:.2} px at ({x}, {y}, {z}): argmax ({row}, {col}), want ({want_row}, {want_col})"
        );
    }

    #[test]
    fn point_hologram_focuses_at_the_point() {
        assert_focus(0.0, 0.0, 6e-3);
        assert_focus(2e-4, -3e-4, 6e-3);
        assert_focus(-2e-4, 3e-4, 3e-3);
    }
}
