//! The `holoquant` command line: weight generation, quantization, inference,
//! numerical reconstruction, comparison, and benchmarking.
//!
//! Exit codes: 0 success, 2 usage error, 3 data or format error, 4 internal
//! invariant violation.

pub mod images;

use crate::metrics::{compare_outputs, psnr, MetricsError};
use crate::model::{
    build_reference_arch, calibrate, convert_int8_dynamic, convert_int8_static,
    forward_int8_dynamic, init_weights, FoldedModel, Int8Model, ModelError, StoreError,
    StoreKind, WeightStore,
};
use crate::optics::{asm_propagate, field_from_amp_phase, intensity, OpticsError};
use crate::quant::QuantError;
use crate::tensor::{Shape, Tensor, TensorError};
use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

macro_rules! data_error_from {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )*};
}

data_error_from!(ModelError, StoreError, OpticsError, MetricsError, QuantError, TensorError);

#[derive(Parser, Debug)]
#[command(
    name = "holoquant",
    version,
    about = "Quantized hologram-generation CNN: weights, PTQ, inference, optics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    Fp32,
    Int8Static,
    Int8Dynamic,
}

impl Precision {
    fn as_str(self) -> &'static str {
        match self {
            Precision::Fp32 => "fp32",
            Precision::Int8Static => "int8-static",
            Precision::Int8Dynamic => "int8-dynamic",
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum QuantMode {
    Static,
    Dynamic,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a deterministic random FP32 weight store.
    GenWeights {
        /// RNG seed; the same seed always yields a byte-identical file.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Output .holow path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Quantize an FP32 store to INT8 (static or dynamic).
    Quantize {
        /// Input FP32 .holow store.
        #[arg(long)]
        weights: PathBuf,
        /// Directory of NAME.rgb.png + NAME.depth.png calibration pairs
        /// (required in static mode).
        #[arg(long)]
        calib_dir: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: QuantMode,
        /// Output .holow path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the network on an RGB-D frame and write amplitude/phase PNGs.
    Infer {
        #[arg(long)]
        weights: PathBuf,
        /// 8- or 16-bit RGB image.
        #[arg(long)]
        rgb: PathBuf,
        /// 8- or 16-bit single-channel depth map, same dimensions.
        #[arg(long)]
        depth: PathBuf,
        #[arg(long, value_enum)]
        precision: Precision,
        /// 16-bit RGB PNG for the three amplitude channels.
        #[arg(long)]
        out_amp: PathBuf,
        /// 16-bit RGB PNG for the three phase channels.
        #[arg(long)]
        out_phase: PathBuf,
    },
    /// Propagate a hologram numerically and write the intensity image.
    Reconstruct {
        /// Amplitude planes (RGB PNG).
        #[arg(long)]
        amp: PathBuf,
        /// Phase planes (RGB PNG, 0.5 = zero phase).
        #[arg(long)]
        phase: PathBuf,
        /// Reconstruction distance in millimeters.
        #[arg(long, default_value_t = 6.0)]
        z: f64,
        /// Per-channel wavelengths in nanometers.
        #[arg(long, value_delimiter = ',', default_values_t = [638.0, 520.0, 450.0])]
        wavelengths: Vec<f64>,
        /// Pixel pitch in micrometers.
        #[arg(long, default_value_t = 8.0)]
        pitch: f64,
        /// Output intensity image (16-bit RGB PNG, normalized to max 1).
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare two amplitude/phase pairs: PSNR and SSIM per group.
    Compare {
        #[arg(long)]
        a_amp: PathBuf,
        #[arg(long)]
        a_phase: PathBuf,
        #[arg(long)]
        b_amp: PathBuf,
        #[arg(long)]
        b_phase: PathBuf,
    },
    /// Measure single-frame inference latency on random input.
    Bench {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long, value_enum)]
        precision: Precision,
        #[arg(long, default_value_t = 1280)]
        width: usize,
        #[arg(long, default_value_t = 720)]
        height: usize,
        /// Timed iterations (at least 1).
        #[arg(long, default_value_t = 30)]
        iters: u32,
        /// Untimed warmup iterations.
        #[arg(long, default_value_t = 5)]
        warmup: u32,
        /// Seed for the random input frame.
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenWeights { seed, out } => cmd_gen_weights(seed, &out),
        Command::Quantize {
            weights,
            calib_dir,
            mode,
            out,
        } => cmd_quantize(&weights, calib_dir.as_deref(), mode, &out),
        Command::Infer {
            weights,
            rgb,
            depth,
            precision,
            out_amp,
            out_phase,
        } => cmd_infer(&weights, &rgb, &depth, precision, &out_amp, &out_phase),
        Command::Reconstruct {
            amp,
            phase,
            z,
            wavelengths,
            pitch,
            out,
        } => cmd_reconstruct(&amp, &phase, z, &wavelengths, pitch, &out),
        Command::Compare {
            a_amp,
            a_phase,
            b_amp,
            b_phase,
        } => cmd_compare(&a_amp, &a_phase, &b_amp, &b_phase),
        Command::Bench {
            weights,
            precision,
            width,
            height,
            iters,
            warmup,
            seed,
        } => cmd_bench(&weights, precision, width, height, iters, warmup, seed),
    }
}

fn cmd_gen_weights(seed: u64, out: &Path) -> Result<(), CliError> {
    let store = init_weights(&build_reference_arch(), seed);
    store.save(out)?;
    println!(
        "wrote {} (fp32, {} tensors, {} payload bytes, seed {seed})",
        out.display(),
        store.manifest().tensors.len(),
        store.payload().len()
    );
    Ok(())
}

fn cmd_quantize(
    weights: &Path,
    calib_dir: Option<&Path>,
    mode: QuantMode,
    out: &Path,
) -> Result<(), CliError> {
    let store = WeightStore::load(weights)?;
    let fp32_bytes = store.payload().len();
    let quantized = match mode {
        QuantMode::Static => {
            let dir = calib_dir.ok_or_else(|| {
                CliError::Usage("static mode requires --calib-dir".to_string())
            })?;
            let inputs = images::load_calibration_dir(dir)?;
            let record = calibrate(&store, &inputs)?;
            let q = convert_int8_static(&store, &record)?;
            println!("calibrated on {} samples", inputs.len());
            q
        }
        QuantMode::Dynamic => convert_int8_dynamic(&store)?,
    };
    quantized.save(out)?;
    println!(
        "wrote {} ({}, payload {} bytes = {:.1}% of fp32)",
        out.display(),
        quantized.kind().as_str(),
        quantized.payload().len(),
        100.0 * quantized.payload().len() as f64 / fp32_bytes as f64
    );
    Ok(())
}

fn cmd_infer(
    weights: &Path,
    rgb: &Path,
    depth: &Path,
    precision: Precision,
    out_amp: &Path,
    out_phase: &Path,
) -> Result<(), CliError> {
    let store = WeightStore::load(weights)?;
    let input = images::input_tensor(rgb, depth)?;
    let output = match precision {
        Precision::Fp32 => FoldedModel::from_store(&store)?.forward(&input)?,
        Precision::Int8Static => Int8Model::from_store(&store)?.forward(&input)?,
        Precision::Int8Dynamic => forward_int8_dynamic(&store, &input)?,
    };
    if precision != Precision::Fp32 {
        // How far the quantized output sits from the same store's FP32
        // (dequantized-weight) forward pass.
        let reference = FoldedModel::from_store(&store)?.forward(&input)?;
        let p = psnr(reference.data(), output.data(), 1.0)?;
        eprintln!("PSNR vs FP32 reference: {p:.2} dB");
    }
    let s = output.shape();
    let (amp, phase) = images::split_output(&output);
    images::save_rgb16(out_amp, s.w, s.h, [amp[0], amp[1], amp[2]])?;
    images::save_rgb16(out_phase, s.w, s.h, [phase[0], phase[1], phase[2]])?;
    println!(
        "wrote {} and {} ({}x{}, {})",
        out_amp.display(),
        out_phase.display(),
        s.w,
        s.h,
        precision.as_str()
    );
    Ok(())
}

fn cmd_reconstruct(
    amp_path: &Path,
    phase_path: &Path,
    z_mm: f64,
    wavelengths_nm: &[f64],
    pitch_um: f64,
    out: &Path,
) -> Result<(), CliError> {
    if wavelengths_nm.len() != 3 {
        return Err(CliError::Usage(format!(
            "--wavelengths needs exactly three comma-separated values, got {}",
            wavelengths_nm.len()
        )));
    }
    let (w, h, amp) = images::load_rgb01(amp_path)?;
    let (pw, ph, phase) = images::load_rgb01(phase_path)?;
    if (w, h) != (pw, ph) {
        return Err(CliError::Data(format!(
            "amplitude is {w}x{h} but phase is {pw}x{ph}"
        )));
    }
    let z = z_mm * 1e-3;
    let pitch = pitch_um * 1e-6;

    // The spectral propagator works on power-of-two grids; anything else is
    // zero-padded around the center and cropped back after propagation.
    let (gw, gh) = (w.next_power_of_two(), h.next_power_of_two());
    let (ox, oy) = ((gw - w) / 2, (gh - h) / 2);
    if (gw, gh) != (w, h) {
        eprintln!("zero-padded {w}x{h} to {gw}x{gh} for propagation");
    }

    let mut planes: Vec<Vec<f32>> = Vec::with_capacity(3);
    for c in 0..3 {
        let mut a = vec![0.0f32; gw * gh];
        let mut p = vec![0.5f32; gw * gh];
        for y in 0..h {
            for x in 0..w {
                a[(y + oy) * gw + (x + ox)] = amp[c][y * w + x];
                p[(y + oy) * gw + (x + ox)] = phase[c][y * w + x];
            }
        }
        let field = field_from_amp_phase(&a, &p, gw, gh, pitch, wavelengths_nm[c] * 1e-9)?;
        // Positive z looks back toward the scene side of the hologram.
        let back = asm_propagate(&field, -z)?;
        let inten = intensity(&back);
        let mut cropped = vec![0.0f32; w * h];
        for y in 0..h {
            for x in 0..w {
                cropped[y * w + x] = inten[(y + oy) * gw + (x + ox)];
            }
        }
        planes.push(cropped);
    }

    let peak = planes
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f32, |m, &v| m.max(v));
    if peak > 0.0 {
        for p in &mut planes {
            for v in p {
                *v /= peak;
            }
        }
    }
    images::save_rgb16(out, w, h, [&planes[0], &planes[1], &planes[2]])?;
    println!(
        "wrote {} (z = {z_mm} mm, pitch = {pitch_um} um, normalized to peak)",
        out.display()
    );
    Ok(())
}

fn cmd_compare(
    a_amp: &Path,
    a_phase: &Path,
    b_amp: &Path,
    b_phase: &Path,
) -> Result<(), CliError> {
    let load_pair = |amp: &Path, phase: &Path| -> Result<Tensor<f32>, CliError> {
        let (w, h, a) = images::load_rgb01(amp)?;
        let (pw, ph, p) = images::load_rgb01(phase)?;
        if (w, h) != (pw, ph) {
            return Err(CliError::Data(format!(
                "{} is {w}x{h} but {} is {pw}x{ph}",
                amp.display(),
                phase.display()
            )));
        }
        let mut data = Vec::with_capacity(6 * w * h);
        for plane in a.iter().chain(p.iter()) {
            data.extend_from_slice(plane);
        }
        Ok(Tensor::from_vec(Shape::new(1, 6, h, w), data).expect("plane sizes add up"))
    };
    let a = load_pair(a_amp, a_phase)?;
    let b = load_pair(b_amp, b_phase)?;
    if a.shape() != b.shape() {
        return Err(CliError::Data(format!(
            "pair A is {} but pair B is {}",
            a.shape(),
            b.shape()
        )));
    }
    let report = compare_outputs(&a, &b)?;
    let fmt_psnr = |p: f32| {
        if p.is_finite() {
            format!("{p:.3}")
        } else {
            "inf".to_string()
        }
    };
    println!("group      psnr_db    ssim");
    println!(
        "amplitude  {:<9}  {:.4}",
        fmt_psnr(report.psnr_amplitude),
        report.ssim_amplitude
    );
    println!(
        "phase      {:<9}  {:.4}",
        fmt_psnr(report.psnr_phase),
        report.ssim_phase
    );
    // Machine-readable copy; non-finite PSNR serializes as null.
    println!(
        "{}",
        serde_json::json!({
            "psnr_amplitude": report.psnr_amplitude,
            "psnr_phase": report.psnr_phase,
            "ssim_amplitude": report.ssim_amplitude,
            "ssim_phase": report.ssim_phase,
        })
    );
    Ok(())
}

fn cmd_bench(
    weights: &Path,
    precision: Precision,
    width: usize,
    height: usize,
    iters: u32,
    warmup: u32,
    seed: u64,
) -> Result<(), CliError> {
    if iters == 0 {
        return Err(CliError::Usage("--iters must be at least 1".to_string()));
    }
    if width < 3 || height < 3 {
        return Err(CliError::Usage(
            "--width and --height must be at least 3".to_string(),
        ));
    }
    let store = WeightStore::load(weights)?;
    let input = random_frame(seed, height, width);

    enum Engine {
        Fp32(Box<FoldedModel>),
        Static(Box<Int8Model>),
        Dynamic(WeightStore),
    }
    let engine = match precision {
        Precision::Fp32 => Engine::Fp32(Box::new(FoldedModel::from_store(&store)?)),
        Precision::Int8Static => Engine::Static(Box::new(Int8Model::from_store(&store)?)),
        Precision::Int8Dynamic => {
            if store.kind() == StoreKind::Int8Static {
                return Err(CliError::Data(
                    "int8-dynamic needs an fp32 or int8-dynamic store".to_string(),
                ));
            }
            Engine::Dynamic(store.clone())
        }
    };
    let run_once = |engine: &Engine| -> Result<Tensor<f32>, CliError> {
        Ok(match engine {
            Engine::Fp32(m) => m.forward(&input)?,
            Engine::Static(m) => m.forward(&input)?,
            Engine::Dynamic(s) => forward_int8_dynamic(s, &input)?,
        })
    };

    for _ in 0..warmup {
        std::hint::black_box(run_once(&engine)?);
    }
    let mut times_ms = Vec::with_capacity(iters as usize);
    for _ in 0..iters {
        let t0 = Instant::now();
        std::hint::black_box(run_once(&engine)?);
        times_ms.push(t0.elapsed().as_secs_f64() * 1e3);
    }
    times_ms.sort_by(f64::total_cmp);
    let pick = |q: f64| times_ms[((times_ms.len() - 1) as f64 * q).round() as usize];
    let (median, p10, p90) = (pick(0.5), pick(0.1), pick(0.9));

    // Theoretical weight traffic of this store against the FP32 layout.
    let fp32_bytes = build_reference_arch().param_count() * 4;
    let ratio = match store.kind() {
        StoreKind::Fp32 => 1.0,
        _ => store.payload().len() as f64 / fp32_bytes as f64,
    };

    println!(
        "bench {}x{} {} ({} iters, {} warmup)",
        width,
        height,
        precision.as_str(),
        iters,
        warmup
    );
    println!("latency_ms median {median:.3}  p10 {p10:.3}  p90 {p90:.3}");
    println!("throughput {:.3} fps", 1e3 / median);
    println!("weight_bytes {} ratio_vs_fp32 {ratio:.4}", store.payload().len());
    Ok(())
}

fn random_frame(seed: u64, h: usize, w: usize) -> Tensor<f32> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let shape = Shape::new(1, 4, h, w);
    let data = (0..shape.len()).map(|_| rng.gen::<f32>()).collect();
    Tensor::from_vec(shape, data).expect("shape matches data")
}
