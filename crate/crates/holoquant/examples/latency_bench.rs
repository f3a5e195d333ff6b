//! Times one forward pass per precision on the same random frame and
//! reports the weight-byte footprint next to it.
//!
//! Run with `cargo run --release --example latency_bench -- [edge]`, where
//! the optional edge (default 96) is the square input size.

use holoquant::model::{
    build_reference_arch, calibrate, convert_int8_static, forward_int8_dynamic, init_weights,
    FoldedModel, Int8Model,
};
use holoquant::tensor::{Shape, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::time::Instant;

fn median_ms(mut f: impl FnMut(), reps: usize) -> f64 {
    let mut times: Vec<f64> = (0..reps)
        .map(|_| {
            let t0 = Instant::now();
            f();
            t0.elapsed().as_secs_f64() * 1e3
        })
        .collect();
    times.sort_by(f64::total_cmp);
    times[times.len() / 2]
}

fn main() {
    let edge: usize = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(96);
    let arch = build_reference_arch();
    let store = init_weights(&arch, 7);

    let mut rng = ChaCha12Rng::seed_from_u64(42);
    let shape = Shape::new(1, 4, edge, edge);
    let input =
        Tensor::from_vec(shape, (0..shape.len()).map(|_| rng.gen()).collect()).unwrap();

    let record = calibrate(&store, std::slice::from_ref(&input)).unwrap();
    let static_store = convert_int8_static(&store, &record).unwrap();
    let fp32_model = FoldedModel::from_store(&store).unwrap();
    let int8_model = Int8Model::from_store(&static_store).unwrap();

    println!("input 4x{edge}x{edge}, {} parameters", arch.param_count());
    let reps = 5;

    let t = median_ms(|| { std::hint::black_box(fp32_model.forward(&input).unwrap()); }, reps);
    println!(
        "fp32          {t:8.2} ms   {} weight bytes",
        store.payload().len()
    );

    let t = median_ms(|| { std::hint::black_box(int8_model.forward(&input).unwrap()); }, reps);
    println!(
        "int8 static   {t:8.2} ms   {} weight bytes ({:.1}%)",
        static_store.payload().len(),
        100.0 * static_store.payload().len() as f64 / store.payload().len() as f64
    );

    // Dynamic pays for an extra FP32 observation pass every call; it trades
    // runtime for not needing a calibration set.
    let t = median_ms(
        || { std::hint::black_box(forward_int8_dynamic(&store, &input).unwrap()); },
        reps,
    );
    println!("int8 dynamic  {t:8.2} ms   (ranges measured per call)");
}
