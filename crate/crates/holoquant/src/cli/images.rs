//! PNG I/O for the command-line tools.
//!
//! Network inputs arrive as an 8- or 16-bit RGB image plus an 8- or 16-bit
//! single-channel depth map; hologram planes travel as 16-bit RGB PNGs with
//! values scaled by 65535. Everything internal is f32 in [0, 1], row-major
//! planes.

use super::CliError;
use crate::model::arch::IN_CHANNELS;
use crate::tensor::{Shape, Tensor};
use image::{DynamicImage, ImageBuffer, Rgb};
use std::path::Path;

fn open(path: &Path) -> Result<DynamicImage, CliError> {
    image::open(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Loads an RGB image as three [0, 1] planes (8- or 16-bit).
pub fn load_rgb01(path: &Path) -> Result<(usize, usize, [Vec<f32>; 3]), CliError> {
    let (w, h, pixels, max) = match open(path)? {
        DynamicImage::ImageRgb8(b) => {
            let (w, h) = b.dimensions();
            let px: Vec<f32> = b.into_raw().iter().map(|&v| v as f32).collect();
            (w, h, px, 255.0f32)
        }
        DynamicImage::ImageRgb16(b) => {
            let (w, h) = b.dimensions();
            let px: Vec<f32> = b.into_raw().iter().map(|&v| v as f32).collect();
            (w, h, px, 65535.0)
        }
        _ => {
            return Err(CliError::Data(format!(
                "{}: expected an 8- or 16-bit RGB image without alpha",
                path.display()
            )))
        }
    };
    let (w, h) = (w as usize, h as usize);
    let mut planes = [
        vec![0.0f32; w * h],
        vec![0.0f32; w * h],
        vec![0.0f32; w * h],
    ];
    for (i, chunk) in pixels.chunks_exact(3).enumerate() {
        for c in 0..3 {
            planes[c][i] = chunk[c] / max;
        }
    }
    Ok((w, h, planes))
}

/// Loads a single-channel depth map as one [0, 1] plane (8- or 16-bit).
pub fn load_depth01(path: &Path) -> Result<(usize, usize, Vec<f32>), CliError> {
    let (w, h, plane) = match open(path)? {
        DynamicImage::ImageLuma8(b) => {
            let (w, h) = b.dimensions();
            let p = b.into_raw().iter().map(|&v| v as f32 / 255.0).collect();
            (w, h, p)
        }
        DynamicImage::ImageLuma16(b) => {
            let (w, h) = b.dimensions();
            let p = b.into_raw().iter().map(|&v| v as f32 / 65535.0).collect();
            (w, h, p)
        }
        _ => {
            return Err(CliError::Data(format!(
                "{}: expected an 8- or 16-bit single-channel image",
                path.display()
            )))
        }
    };
    Ok((w as usize, h as usize, plane))
}

/// Stacks an RGB image and a depth map into the network input (1, 4, H, W).
pub fn input_tensor(rgb: &Path, depth: &Path) -> Result<Tensor<f32>, CliError> {
    let (w, h, rgb_planes) = load_rgb01(rgb)?;
    let (dw, dh, d_plane) = load_depth01(depth)?;
    if (w, h) != (dw, dh) {
        return Err(CliError::Data(format!(
            "dimension mismatch: {} is {w}x{h}, {} is {dw}x{dh}",
            rgb.display(),
            depth.display()
        )));
    }
    let mut data = Vec::with_capacity(IN_CHANNELS * w * h);
    for p in &rgb_planes {
        data.extend_from_slice(p);
    }
    data.extend_from_slice(&d_plane);
    Ok(Tensor::from_vec(Shape::new(1, IN_CHANNELS, h, w), data)
        .expect("plane sizes add up"))
}

/// Writes three [0, 1] planes as a 16-bit RGB PNG, value = round(v·65535).
pub fn save_rgb16(
    path: &Path,
    width: usize,
    height: usize,
    planes: [&[f32]; 3],
) -> Result<(), CliError> {
    for p in planes {
        if p.len() != width * height {
            return Err(CliError::Internal(format!(
                "plane length {} does not match {width}x{height}",
                p.len()
            )));
        }
    }
    let buf = ImageBuffer::<Rgb<u16>, Vec<u16>>::from_fn(
        width as u32,
        height as u32,
        |x, y| {
            let i = y as usize * width + x as usize;
            Rgb([encode16(planes[0][i]), encode16(planes[1][i]), encode16(planes[2][i])])
        },
    );
    buf.save(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn encode16(v: f32) -> u16 {
    (v.clamp(0.0, 1.0) * 65535.0).round() as u16
}

/// Splits a (1, 6, H, W) network output into amplitude and phase planes.
pub fn split_output(out: &Tensor<f32>) -> (Vec<&[f32]>, Vec<&[f32]>) {
    let s = out.shape();
    let plane = s.h * s.w;
    let chans: Vec<&[f32]> = out.data().chunks_exact(plane).collect();
    (chans[0..3].to_vec(), chans[3..6].to_vec())
}

/// Linear depth-to-distance map: 0 → z_near, 1 → z_far (meters).
pub fn depth_to_z(d01: f32, z_near: f64, z_far: f64) -> f64 {
    z_near + d01.clamp(0.0, 1.0) as f64 * (z_far - z_near)
}

/// Loads every `NAME.rgb.png` + `NAME.depth.png` pair in a directory, in
/// lexical order.
pub fn load_calibration_dir(dir: &Path) -> Result<Vec<Tensor<f32>>, CliError> {
    let mut rgb_paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with(".rgb.png"))
        })
        .collect();
    rgb_paths.sort();
    let mut inputs = Vec::new();
    for rgb in &rgb_paths {
        let name = rgb.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let depth = rgb.with_file_name(name.replace(".rgb.png", ".depth.png"));
        if !depth.exists() {
            return Err(CliError::Data(format!(
                "calibration sample {} has no matching {}",
                rgb.display(),
                depth.display()
            )));
        }
        inputs.push(input_tensor(rgb, &depth)?);
    }
    if inputs.is_empty() {
        return Err(CliError::Data(format!(
            "no calibration samples in {} (expected NAME.rgb.png with NAME.depth.png)",
            dir.display()
        )));
    }
    Ok(inputs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rgb16_roundtrip_is_within_one_code() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.png");
        let (w, h) = (5, 4);
        let planes: Vec<Vec<f32>> = (0..3)
            .map(|c| {
                (0..w * h)
                    .map(|i| ((i * 7 + c * 13) % 100) as f32 / 99.0)
                    .collect()
            })
            .collect();
        save_rgb16(&path, w, h, [&planes[0], &planes[1], &planes[2]]).unwrap();
        let (rw, rh, back) = load_rgb01(&path).unwrap();
        assert_eq!((rw, rh), (w, h));
        for c in 0..3 {
            for (a, b) in planes[c].iter().zip(&back[c]) {
                assert!((a - b).abs() <= 0.5 / 65535.0 + 1e-7, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn input_tensor_stacks_rgb_then_depth() {
        let dir = tempfile::tempdir().unwrap();
        let rgb = dir.path().join("f.rgb.png");
        let depth = dir.path().join("f.depth.png");
        let (w, h) = (4, 3);
        let r: Vec<f32> = (0..w * h).map(|i| i as f32 / 20.0).collect();
        save_rgb16(&rgb, w, h, [&r, &vec![0.5; w * h], &vec![0.25; w * h]]).unwrap();
        let d: Vec<u8> = (0..w * h).map(|i| (i * 9) as u8).collect();
        image::ImageBuffer::<image::Luma<u8>, Vec<u8>>::from_raw(w as u32, h as u32, d.clone())
            .unwrap()
            .save(&depth)
            .unwrap();
        let t = input_tensor(&rgb, &depth).unwrap();
        assert_eq!(t.shape(), Shape::new(1, 4, h, w));
        assert!((t.at(0, 0, 0, 1) - 1.0 / 20.0).abs() < 1e-4);
        assert!((t.at(0, 3, 0, 1) - 9.0 / 255.0).abs() < 1e-6);
        // Directory scan finds the pair.
        let calib = load_calibration_dir(dir.path()).unwrap();
        assert_eq!(calib.len(), 1);
        assert_eq!(calib[0].data(), t.data());
    }

    #[test]
    fn mismatched_depth_dimensions_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let rgb = dir.path().join("f.rgb.png");
        let depth = dir.path().join("f.depth.png");
        save_rgb16(&rgb, 4, 3, [&vec![0.0; 12], &vec![0.0; 12], &vec![0.0; 12]]).unwrap();
        image::ImageBuffer::<image::Luma<u8>, Vec<u8>>::from_raw(3, 3, vec![0; 9])
            .unwrap()
            .save(&depth)
            .unwrap();
        assert!(matches!(
            input_tensor(&rgb, &depth),
            Err(CliError::Data(_))
        ));
    }

    #[test]
    fn depth_to_z_brackets_the_working_range() {
        assert_eq!(depth_to_z(0.0, 3e-3, 9e-3), 3e-3);
        assert_eq!(depth_to_z(1.0, 3e-3, 9e-3), 9e-3);
        assert!((depth_to_z(0.5, 3e-3, 9e-3) - 6e-3).abs() < 1e-12);
    }
}
