//! The uniform affine quantizer on its own: grid construction, the
//! roundtrip error bound, and what a conv looks like in integer form.
//!
//! Run with `cargo run --example quantization_basics`.

use holoquant::quant::{
    dequantize, dynamic_qparams, fake_quantize, qconv2d, quantize, quantize_tensor,
    requant_multiplier, requantize_acc, QuantParams, Scheme,
};
use holoquant::tensor::{conv2d, ConvDescriptor, Shape, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn main() {
    // An 8-bit asymmetric grid over [-0.3, 5.1]. The scale is the step
    // between adjacent codes; the zero point is the code that represents 0.
    let qp = QuantParams::from_range(-0.3, 5.1, 8, Scheme::Asymmetric).unwrap();
    println!(
        "range [-0.3, 5.1] -> scale {}, zero_point {}",
        qp.scale, qp.zero_point
    );
    println!("codes run {}..={}", qp.qmin(), qp.qmax());

    // Both interval endpoints land exactly on the outermost codes.
    let ends = quantize(&[-0.3, 5.1], &qp);
    println!("quantize(alpha) = {}, quantize(beta) = {}", ends[0], ends[1]);

    // Roundtrip error never exceeds half a step for values inside the range.
    let mut rng = ChaCha12Rng::seed_from_u64(1);
    let xs: Vec<f32> = (0..10_000).map(|_| rng.gen_range(-0.3..=5.1)).collect();
    let back = dequantize(&quantize(&xs, &qp), &qp);
    let worst = xs
        .iter()
        .zip(&back)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f32, f32::max);
    println!(
        "worst roundtrip error {worst:.6} vs half step {:.6}",
        qp.scale / 2.0
    );

    // fake_quantize = dequantize(quantize(x)): the FP32 simulation of the
    // grid. Integer kernels are validated against exactly this.
    let fq = fake_quantize(&xs[..4], &qp);
    println!("fake quantize {:?} -> {:?}", &xs[..4], fq);

    // Weights use a symmetric grid (zero point 0) so the integer conv can
    // skip the weight offset entirely.
    let w_vals: Vec<f32> = (0..8 * 3 * 3 * 3).map(|_| rng.gen_range(-0.9..0.9)).collect();
    let w_qp = dynamic_qparams(&w_vals, 8, Scheme::Symmetric).unwrap();
    println!("symmetric weight grid: zero_point = {}", w_qp.zero_point);

    // A quantized conv: INT8 codes in, INT32 accumulation, one rescale out.
    // The check below reproduces it in FP32 on the same grids and matches
    // bit for bit.
    let desc = ConvDescriptor::new(3, 8, (3, 3), 1).unwrap();
    let in_shape = Shape::new(1, 3, 12, 12);
    let x_vals: Vec<f32> = (0..in_shape.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
    let x = Tensor::from_vec(in_shape, x_vals).unwrap();
    let w = Tensor::from_vec(Shape::new(8, 3, 3, 3), w_vals).unwrap();
    let bias = vec![0.05f32; 8];

    let in_qp = dynamic_qparams(x.data(), 8, Scheme::Asymmetric).unwrap();
    let fq_t = |t: &Tensor<f32>, qp: &QuantParams| {
        Tensor::from_vec(t.shape(), fake_quantize(t.data(), qp)).unwrap()
    };
    let ref_out = conv2d(&fq_t(&x, &in_qp), &fq_t(&w, &w_qp), &bias, &desc).unwrap();
    let out_qp = dynamic_qparams(ref_out.data(), 8, Scheme::Asymmetric).unwrap();

    let s = in_qp.scale as f64 * w_qp.scale as f64;
    let bias_q: Vec<i32> = bias.iter().map(|b| (*b as f64 / s).round() as i32).collect();
    let xq = quantize_tensor(&x, &in_qp);
    let wq = quantize_tensor(&w, &w_qp);
    let q_out = qconv2d(&xq, &in_qp, &wq, &w_qp, &bias_q, &out_qp, &desc).unwrap();

    // The same conv, simulated: offset-corrected codes as exact f32
    // integers, one f32 convolution, the shared rescale. Sums stay far
    // below 2^24 here, so this is the integer computation verbatim and the
    // two agree code for code.
    let as_f32 = |t: &Tensor<i8>, zp: i32| {
        Tensor::from_vec(
            t.shape(),
            t.data().iter().map(|&q| (q as i32 - zp) as f32).collect(),
        )
        .unwrap()
    };
    let bias_f: Vec<f32> = bias_q.iter().map(|&b| b as f32).collect();
    let acc = conv2d(
        &as_f32(&xq, in_qp.zero_point),
        &as_f32(&wq, 0),
        &bias_f,
        &desc,
    )
    .unwrap();
    let m = requant_multiplier(in_qp.scale, w_qp.scale, out_qp.scale);
    let sim: Vec<i8> = acc
        .data()
        .iter()
        .map(|&a| requantize_acc(a as i32, m, &out_qp))
        .collect();
    println!(
        "integer conv vs simulated conv: {} ({} output codes)",
        if q_out.data() == sim.as_slice() { "bit-exact" } else { "MISMATCH" },
        sim.len()
    );

    // And against the plain FP32 conv on the same (fake-quantized) data the
    // integer path stays within a code or so of the real answer.
    let steps = q_out
        .data()
        .iter()
        .zip(ref_out.data())
        .map(|(&q, &r)| (holoquant::quant::dequantize_scalar(q, &out_qp) - r).abs() / out_qp.scale)
        .fold(0.0f32, f32::max);
    println!("worst deviation from the fp32 conv: {steps:.3} output steps");
}
