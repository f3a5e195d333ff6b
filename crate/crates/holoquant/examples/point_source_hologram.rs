//! Optics sanity loop with no network involved: build a hologram of a few
//! point emitters analytically, then propagate it back and check that each
//! point refocuses where it was placed.
//!
//! Run with `cargo run --release --example point_source_hologram`.

use holoquant::cli::images::depth_to_z;
use holoquant::optics::{asm_propagate, intensity, pbm_hologram, ScenePoint};

const N: usize = 128;
const PITCH: f64 = 8e-6;
const LAMBDA: f64 = 520e-9;

// Grid coordinate of an (x, y) scene position, centered convention.
fn to_px(x: f64, y: f64) -> (usize, usize) {
    let cx = (x / PITCH + N as f64 / 2.0).round() as usize;
    let cy = (y / PITCH + N as f64 / 2.0).round() as usize;
    (cx, cy)
}

fn main() {
    // Depth values as an 8-bit depth map would deliver them, mapped onto
    // the working range 3 mm (near) to 9 mm (far).
    let depths = [0.0f32, 0.5, 1.0];
    let points: Vec<ScenePoint> = depths
        .iter()
        .enumerate()
        .map(|(i, &d)| ScenePoint {
            x: (i as f64 - 1.0) * 120e-6,
            y: (1.0 - i as f64) * 80e-6,
            z: depth_to_z(d, 3e-3, 9e-3),
            amplitude: 1.0,
        })
        .collect();
    for p in &points {
        println!(
            "emitter at ({:+.0} um, {:+.0} um, {:.1} mm)",
            p.x * 1e6,
            p.y * 1e6,
            p.z * 1e3
        );
    }

    let holo = pbm_hologram(&points, N, N, PITCH, LAMBDA).unwrap();
    println!("hologram {N}x{N}, pitch {} um, lambda {} nm", PITCH * 1e6, LAMBDA * 1e9);

    // Propagating the conjugate distance refocuses one plane at a time: the
    // emitter at that depth collapses to a bright pixel, the others stay
    // defocused rings.
    for p in &points {
        let refocused = asm_propagate(&holo, -p.z).unwrap();
        let inten = intensity(&refocused);
        let peak = inten
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        let (px, py) = (peak % N, peak / N);
        let (ex, ey) = to_px(p.x, p.y);
        let hit = px.abs_diff(ex) <= 1 && py.abs_diff(ey) <= 1;
        println!(
            "z = {:.1} mm: peak at ({px}, {py}), emitter at ({ex}, {ey}) -> {}",
            p.z * 1e3,
            if hit { "in focus" } else { "MISSED" }
        );
    }

    // Round trip through the propagator is lossless: the kernel is a pure
    // phase factor, so forward then backward returns the field.
    let there = asm_propagate(&holo, 6e-3).unwrap();
    let back = asm_propagate(&there, -6e-3).unwrap();
    let rms: f64 = holo
        .values()
        .iter()
        .zip(back.values())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt()
        / holo.values().iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    println!("round-trip relative error {rms:.2e}");
}
