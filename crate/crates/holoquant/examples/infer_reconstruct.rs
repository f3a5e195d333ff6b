//! The full frame path: a synthetic RGB-D scene goes through the network in
//! FP32 and INT8, the predicted hologram is written as amplitude/phase PNGs,
//! and the green channel is propagated back to the scene depths.
//!
//! Writes images under target/example-out/. Run with
//! `cargo run --release --example infer_reconstruct`.

use holoquant::cli::images::{depth_to_z, save_rgb16, split_output};
use holoquant::metrics::psnr;
use holoquant::model::{
    build_reference_arch, calibrate, convert_int8_static, forward_int8_static, init_weights,
    FoldedModel,
};
use holoquant::optics::{asm_propagate, field_from_amp_phase, intensity};
use holoquant::tensor::{Shape, Tensor};
use std::path::Path;

const W: usize = 64;
const H: usize = 64;

// Three colored tiles at different depths, mid-gray floor behind them.
fn scene() -> Tensor<f32> {
    let mut t = Tensor::filled(Shape::new(1, 4, H, W), 0.0);
    let plane = H * W;
    let data = t.data_mut();
    for i in 0..plane {
        data[3 * plane + i] = 0.5; // default depth mid-range
    }
    let tiles = [
        (8usize, 8usize, 0usize, 0.0f32),   // red tile, near
        (26, 26, 1, 0.5),                   // green tile, middle
        (44, 44, 2, 1.0),                   // blue tile, far
    ];
    for &(x0, y0, ch, d) in &tiles {
        for y in y0..y0 + 12 {
            for x in x0..x0 + 12 {
                data[ch * plane + y * W + x] = 0.9;
                data[3 * plane + y * W + x] = d;
            }
        }
    }
    t
}

fn main() {
    let out_dir = Path::new("target/example-out");
    std::fs::create_dir_all(out_dir).unwrap();

    let arch = build_reference_arch();
    let store = init_weights(&arch, 7);
    let input = scene();

    let fp32_out = FoldedModel::from_store(&store)
        .unwrap()
        .forward(&input)
        .unwrap();

    // Quantize with the input itself as the calibration set and run the
    // integer engine on the same frame.
    let record = calibrate(&store, std::slice::from_ref(&input)).unwrap();
    let int8_store = convert_int8_static(&store, &record).unwrap();
    let int8_out = forward_int8_static(&int8_store, &input).unwrap();
    println!(
        "int8 vs fp32 output: {:.2} dB",
        psnr(fp32_out.data(), int8_out.data(), 1.0).unwrap()
    );

    let (amp, phase) = split_output(&fp32_out);
    save_rgb16(&out_dir.join("amp.png"), W, H, [amp[0], amp[1], amp[2]]).unwrap();
    save_rgb16(&out_dir.join("phase.png"), W, H, [phase[0], phase[1], phase[2]]).unwrap();
    println!("wrote {}/amp.png and phase.png", out_dir.display());

    // Reconstruct the green channel at each tile depth. Phase channel
    // values are normalized turns; the field builder expands them.
    let lambda = 520e-9;
    let pitch = 8e-6;
    for d in [0.0f32, 0.5, 1.0] {
        let z = depth_to_z(d, 3e-3, 9e-3);
        let field = field_from_amp_phase(amp[1], phase[1], W, H, pitch, lambda).unwrap();
        let back = asm_propagate(&field, -z).unwrap();
        let inten = intensity(&back);
        let peak = inten.iter().fold(0.0f32, |m, &v| m.max(v)).max(1e-12);
        let frame: Vec<f32> = inten.iter().map(|v| v / peak).collect();
        let name = format!("recon_z{:.0}mm.png", z * 1e3);
        save_rgb16(&out_dir.join(&name), W, H, [&frame, &frame, &frame]).unwrap();
        println!("wrote {}/{name}", out_dir.display());
    }

    // Untrained weights produce a hologram-shaped output, not a focused
    // image; the reconstructions show speckle rather than the tiles. The
    // pipeline wiring is what this example demonstrates.
}
