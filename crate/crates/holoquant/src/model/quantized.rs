//! Post-training quantization of the reference network and the INT8
//! inference engine.
//!
//! Static quantization (PTSQ) observes activation ranges over a calibration
//! set and bakes them into the store; dynamic quantization (PTDQ) observes
//! them per input at inference time. Both feed the same integer engine:
//! convolutions accumulate INT32 in the zero-point-shifted domain and
//! requantize with a double-precision multiplier, residual adds re-express
//! both addends at the sum site, and activations clamp codes in place.
//!
//! `forward_int8_static_sim` runs the same graph as a fake-quantized FP32
//! simulation. Every tensor it carries sits on its site's dequantization
//! grid, every convolution runs over exactly-recovered integer codes (all
//! partial sums stay below 2^24, so f32 addition is exact), and every
//! element-wise transition shares the integer path's scalar definitions.
//! The two engines therefore agree bit for bit, which the tests pin.

use super::arch::{build_reference_arch, ArchitectureSpec, ARCH_ID, NUM_BLOCKS};
use super::fp32::{validate_input, FoldedConv, FoldedModel};
use super::store::{SiteRecord, StoreKind, WeightStore, WeightStoreBuilder};
use super::ModelError;
use crate::quant::{
    dequantize_scalar, dynamic_qparams, quantize_scalar, quantize_tensor, qconv2d,
    requant_multiplier, requantize_acc, requantize_code, MinMaxObserver, QuantParams, Scheme,
};
use crate::tensor::{concat_channels, conv2d, ConvDescriptor, Tensor};
use std::collections::BTreeMap;

/// Quantized biases must stay within ±2^23 so the fake-quant simulation's
/// f32 accumulators remain exact alongside the INT32 engine.
const BIAS_LIMIT: i64 = 1 << 23;

const ACT_BITS: u32 = 8;

/// Per-site activation quantization parameters, in observation order.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationRecord {
    sites: Vec<(String, QuantParams)>,
}

impl CalibrationRecord {
    pub fn qparams(&self, site: &str) -> Result<&QuantParams, ModelError> {
        self.sites
            .iter()
            .find(|(n, _)| n == site)
            .map(|(_, qp)| qp)
            .ok_or_else(|| ModelError::MissingSite(site.to_string()))
    }

    pub fn sites(&self) -> &[(String, QuantParams)] {
        &self.sites
    }

    /// Serializable view, e.g. for a calibration file next to a store.
    pub fn to_records(&self) -> Vec<SiteRecord> {
        self.sites
            .iter()
            .map(|(name, qp)| SiteRecord {
                name: name.clone(),
                qparams: super::store::QuantParamsRecord::from_params(qp),
            })
            .collect()
    }

    pub fn from_records(records: &[SiteRecord]) -> Result<Self, ModelError> {
        let sites = records
            .iter()
            .map(|r| Ok((r.name.clone(), r.qparams.to_params()?)))
            .collect::<Result<Vec<_>, ModelError>>()?;
        Ok(CalibrationRecord { sites })
    }
}

/// Runs the folded FP32 network over a calibration set and derives 8-bit
/// asymmetric parameters for every activation site.
pub fn calibrate(
    store: &WeightStore,
    inputs: &[Tensor<f32>],
) -> Result<CalibrationRecord, ModelError> {
    let folded = FoldedModel::from_store(store)?;
    calibrate_folded(&folded, inputs)
}

pub(crate) fn calibrate_folded(
    folded: &FoldedModel,
    inputs: &[Tensor<f32>],
) -> Result<CalibrationRecord, ModelError> {
    if inputs.is_empty() {
        return Err(ModelError::EmptyCalibrationSet);
    }
    let names = folded.arch().site_names();
    let mut observers: BTreeMap<&str, MinMaxObserver> = names
        .iter()
        .map(|n| (n.as_str(), MinMaxObserver::new()))
        .collect();
    for input in inputs {
        folded.forward_observed(input, |site, xs| {
            let slot = observers
                .get_mut(site)
                .expect("forward reports only known sites");
            let seen = std::mem::replace(slot, MinMaxObserver::new());
            *slot = seen.observe(xs);
        })?;
    }
    let mut sites = Vec::with_capacity(names.len());
    for name in &names {
        let qp = observers[name.as_str()].qparams(ACT_BITS, Scheme::Asymmetric)?;
        sites.push((name.clone(), qp));
    }
    Ok(CalibrationRecord { sites })
}

/// One quantized convolution: INT8 weight codes, INT32 bias at the
/// accumulator scale S_in·S_w, and the site parameters on both ends.
#[derive(Clone, Debug)]
struct QConv {
    name: String,
    desc: ConvDescriptor,
    codes: Tensor<i8>,
    w_qp: QuantParams,
    bias_q: Vec<i32>,
    in_qp: QuantParams,
    out_qp: QuantParams,
}

/// The fully wired INT8 network.
#[derive(Clone, Debug)]
pub struct Int8Model {
    arch: ArchitectureSpec,
    convs: Vec<QConv>,
    input_qp: QuantParams,
    sum_qps: Vec<QuantParams>,
    concat_qp: QuantParams,
}

/// The activation site fed by a convolution's output.
fn output_site_of(conv: &str) -> String {
    match conv {
        "trunk.conv0" => "site.conv0".to_string(),
        "skip.dw" => "site.skip".to_string(),
        name => format!("site.{name}"),
    }
}

fn quantize_bias(name: &str, bias: &[f32], s_in: f32, s_w: f32) -> Result<Vec<i32>, ModelError> {
    let acc_scale = s_in as f64 * s_w as f64;
    bias.iter()
        .map(|&b| {
            let q = (b as f64 / acc_scale).round_ties_even();
            if q.abs() > BIAS_LIMIT as f64 {
                return Err(ModelError::BiasOutOfRange {
                    name: name.to_string(),
                    value: q as i64,
                });
            }
            Ok(q as i32)
        })
        .collect()
}

fn quantize_conv(
    name: &str,
    fc: &FoldedConv,
    in_qp: &QuantParams,
    out_qp: &QuantParams,
) -> Result<QConv, ModelError> {
    let w_qp = dynamic_qparams(fc.weights.data(), ACT_BITS, Scheme::Symmetric)?;
    let codes = quantize_tensor(&fc.weights, &w_qp);
    let bias_q = quantize_bias(name, &fc.bias, in_qp.scale, w_qp.scale)?;
    Ok(QConv {
        name: name.to_string(),
        desc: fc.desc,
        codes,
        w_qp,
        bias_q,
        in_qp: in_qp.clone(),
        out_qp: out_qp.clone(),
    })
}

impl Int8Model {
    /// Quantizes a folded FP32 network against a calibration record.
    pub(crate) fn from_folded(
        folded: &FoldedModel,
        record: &CalibrationRecord,
    ) -> Result<Self, ModelError> {
        let arch = folded.arch().clone();
        let mut convs = Vec::with_capacity(arch.convs().len());
        for c in arch.convs() {
            let in_site = arch
                .input_site_of(&c.name)
                .expect("reference convs all have input sites");
            let in_qp = record.qparams(&in_site)?;
            let out_qp = record.qparams(&output_site_of(&c.name))?;
            convs.push(quantize_conv(&c.name, folded.conv(&c.name), in_qp, out_qp)?);
        }
        let input_qp = record.qparams("site.input")?.clone();
        let sum_qps = (0..NUM_BLOCKS)
            .map(|k| Ok(record.qparams(&format!("site.block{k}.sum"))?.clone()))
            .collect::<Result<Vec<_>, ModelError>>()?;
        let concat_qp = record.qparams("site.concat")?.clone();
        Ok(Int8Model {
            arch,
            convs,
            input_qp,
            sum_qps,
            concat_qp,
        })
    }

    /// Loads a statically quantized store.
    pub fn from_store(store: &WeightStore) -> Result<Self, ModelError> {
        if store.kind() != StoreKind::Int8Static {
            return Err(ModelError::WrongKind {
                expected: StoreKind::Int8Static.as_str(),
                got: store.kind().as_str(),
            });
        }
        super::fp32::check_architecture(store)?;
        let arch = build_reference_arch();
        let mut convs = Vec::with_capacity(arch.convs().len());
        for c in arch.convs() {
            let wname = format!("{}.weight", c.name);
            let ws = c.desc.weight_shape();
            let rec = store.record(&wname)?;
            if rec.shape != [ws.n, ws.c, ws.h, ws.w] {
                return Err(ModelError::BadInput(format!(
                    "tensor {wname} has shape {:?}, expected {ws}",
                    rec.shape
                )));
            }
            let codes = Tensor::from_vec(ws, store.i8_data(&wname)?)?;
            let w_qp = store
                .tensor_qparams(&wname)?
                .ok_or_else(|| ModelError::BadInput(format!("{wname} carries no qparams")))?;
            let bias_q = store.i32_data(&format!("{}.bias", c.name))?;
            if bias_q.len() != c.desc.out_channels {
                return Err(ModelError::BadInput(format!(
                    "bias {}.bias has length {}, expected {}",
                    c.name,
                    bias_q.len(),
                    c.desc.out_channels
                )));
            }
            if let Some(&b) = bias_q.iter().find(|b| (b.unsigned_abs() as i64) > BIAS_LIMIT) {
                return Err(ModelError::BiasOutOfRange {
                    name: format!("{}.bias", c.name),
                    value: b as i64,
                });
            }
            let in_site = arch
                .input_site_of(&c.name)
                .expect("reference convs all have input sites");
            convs.push(QConv {
                name: c.name.clone(),
                desc: c.desc,
                codes,
                w_qp,
                bias_q,
                in_qp: store.site_qparams(&in_site)?,
                out_qp: store.site_qparams(&output_site_of(&c.name))?,
            });
        }
        let input_qp = store.site_qparams("site.input")?;
        let sum_qps = (0..NUM_BLOCKS)
            .map(|k| Ok(store.site_qparams(&format!("site.block{k}.sum"))?))
            .collect::<Result<Vec<_>, ModelError>>()?;
        let concat_qp = store.site_qparams("site.concat")?;
        Ok(Int8Model {
            arch,
            convs,
            input_qp,
            sum_qps,
            concat_qp,
        })
    }

    /// Wires stored INT8 weights of a dynamic store to a per-input record.
    fn from_dynamic_store(
        store: &WeightStore,
        record: &CalibrationRecord,
    ) -> Result<Self, ModelError> {
        let arch = build_reference_arch();
        let mut convs = Vec::with_capacity(arch.convs().len());
        for c in arch.convs() {
            let wname = format!("{}.weight", c.name);
            let ws = c.desc.weight_shape();
            let codes = Tensor::from_vec(ws, store.i8_data(&wname)?)?;
            let w_qp = store
                .tensor_qparams(&wname)?
                .ok_or_else(|| ModelError::BadInput(format!("{wname} carries no qparams")))?;
            let bias = store.f32_data(&format!("{}.bias", c.name))?;
            let in_site = arch
                .input_site_of(&c.name)
                .expect("reference convs all have input sites");
            let in_qp = record.qparams(&in_site)?.clone();
            let out_qp = record.qparams(&output_site_of(&c.name))?.clone();
            let bias_q = quantize_bias(&c.name, &bias, in_qp.scale, w_qp.scale)?;
            convs.push(QConv {
                name: c.name.clone(),
                desc: c.desc,
                codes,
                w_qp,
                bias_q,
                in_qp,
                out_qp,
            });
        }
        let input_qp = record.qparams("site.input")?.clone();
        let sum_qps = (0..NUM_BLOCKS)
            .map(|k| Ok(record.qparams(&format!("site.block{k}.sum"))?.clone()))
            .collect::<Result<Vec<_>, ModelError>>()?;
        let concat_qp = record.qparams("site.concat")?.clone();
        Ok(Int8Model {
            arch,
            convs,
            input_qp,
            sum_qps,
            concat_qp,
        })
    }

    fn conv(&self, name: &str) -> &QConv {
        self.convs
            .iter()
            .find(|c| c.name == name)
            .expect("construction covers the whole architecture")
    }

    /// INT8 forward pass; the output is dequantized to [0, 1] floats.
    pub fn forward(&self, input: &Tensor<f32>) -> Result<Tensor<f32>, ModelError> {
        Ok(self.output(&self.forward_codes(input)?))
    }

    /// Fake-quantized FP32 forward pass, bit-identical to `forward`.
    pub fn forward_sim(&self, input: &Tensor<f32>) -> Result<Tensor<f32>, ModelError> {
        Ok(self.output(&self.forward_codes_sim(input)?))
    }

    fn output(&self, codes: &Tensor<i8>) -> Tensor<f32> {
        let qp = &self.conv("head.pw").out_qp;
        codes.map(|q| dequantize_scalar(q, qp).clamp(0.0, 1.0))
    }

    /// The integer engine. Tensors between layers are INT8 codes under their
    /// site parameters.
    fn forward_codes(&self, input: &Tensor<f32>) -> Result<Tensor<i8>, ModelError> {
        validate_input(input)?;
        let q_in = quantize_tensor(input, &self.input_qp);
        let run = |name: &str, x: &Tensor<i8>| -> Result<Tensor<i8>, ModelError> {
            let c = self.conv(name);
            Ok(qconv2d(x, &c.in_qp, &c.codes, &c.w_qp, &c.bias_q, &c.out_qp, &c.desc)?)
        };
        let mut t = run("trunk.conv0", &q_in)?;
        let mut t_qp = &self.conv("trunk.conv0").out_qp;
        for k in 0..NUM_BLOCKS {
            let c1 = self.conv(&format!("block{k}.conv1"));
            let a = clamp_codes(&run(&c1.name.clone(), &t)?, 0.0, 6.0, &c1.out_qp);
            let c2 = self.conv(&format!("block{k}.conv2"));
            let b = run(&c2.name.clone(), &a)?;
            let sum_qp = &self.sum_qps[k];
            let sum = add_codes(&b, &c2.out_qp, &t, t_qp, sum_qp)?;
            t = clamp_codes(&sum, 0.0, 6.0, sum_qp);
            t_qp = sum_qp;
        }
        let skip = run("skip.dw", &q_in)?;
        let tc = requant_codes(&t, t_qp, &self.concat_qp);
        let sc = requant_codes(&skip, &self.conv("skip.dw").out_qp, &self.concat_qp);
        let cat = concat_channels(&tc, &sc)?;
        let d = run("head.dw", &cat)?;
        let p = run("head.pw", &d)?;
        Ok(clamp_codes(&p, 0.0, 1.0, &self.conv("head.pw").out_qp))
    }

    /// The fake-quant twin: carries f32 values on each site's dequantization
    /// grid and recovers the exact codes wherever integer logic applies.
    fn forward_codes_sim(&self, input: &Tensor<f32>) -> Result<Tensor<i8>, ModelError> {
        validate_input(input)?;
        let v_in = input.map(|x| {
            dequantize_scalar(quantize_scalar(x, &self.input_qp), &self.input_qp)
        });
        let run = |name: &str, v: &Tensor<f32>| -> Result<Tensor<f32>, ModelError> {
            self.conv(name).run_sim(v)
        };
        let mut t = run("trunk.conv0", &v_in)?;
        let mut t_qp = &self.conv("trunk.conv0").out_qp;
        for k in 0..NUM_BLOCKS {
            let c1_qp = &self.conv(&format!("block{k}.conv1")).out_qp;
            let a = clamp_values(&run(&format!("block{k}.conv1"), &t)?, 0.0, 6.0, c1_qp);
            let c2_qp = &self.conv(&format!("block{k}.conv2")).out_qp;
            let b = run(&format!("block{k}.conv2"), &a)?;
            let sum_qp = &self.sum_qps[k];
            let sum = add_values(&b, c2_qp, &t, t_qp, sum_qp)?;
            t = clamp_values(&sum, 0.0, 6.0, sum_qp);
            t_qp = sum_qp;
        }
        let skip = run("skip.dw", &v_in)?;
        let tc = requant_values(&t, t_qp, &self.concat_qp);
        let sc = requant_values(&skip, &self.conv("skip.dw").out_qp, &self.concat_qp);
        let cat = concat_channels(&tc, &sc)?;
        let d = run("head.dw", &cat)?;
        let p = run("head.pw", &d)?;
        let out_qp = &self.conv("head.pw").out_qp;
        Ok(clamp_codes(&recover_codes(&p, out_qp), 0.0, 1.0, out_qp))
    }
}

impl QConv {
    /// Fake-quantized convolution: recovers the zero-point-shifted input
    /// codes, convolves them as f32 (exact: every partial sum is an integer
    /// below 2^24), and requantizes through the shared scalar path.
    fn run_sim(&self, v: &Tensor<f32>) -> Result<Tensor<f32>, ModelError> {
        let xs = v.map(|x| recover_shifted(x, &self.in_qp) as f32);
        let ws = self
            .codes
            .map(|c| (c as i32 - self.w_qp.zero_point) as f32);
        let bias: Vec<f32> = self.bias_q.iter().map(|&b| b as f32).collect();
        let acc = conv2d(&xs, &ws, &bias, &self.desc)?;
        let m = requant_multiplier(self.in_qp.scale, self.w_qp.scale, self.out_qp.scale);
        Ok(acc.map(|a| dequantize_scalar(requantize_acc(a as i32, m, &self.out_qp), &self.out_qp)))
    }
}

/// Rounds a grid value back to its zero-point-shifted code q − Z. Values on
/// the dequantization grid recover exactly: the f64 quotient sits within
/// 1e-13 of the integer.
fn recover_shifted(x: f32, qp: &QuantParams) -> i32 {
    (x as f64 / qp.scale as f64).round_ties_even() as i32
}

fn recover_code(x: f32, qp: &QuantParams) -> i8 {
    let q = recover_shifted(x, qp) + qp.zero_point;
    debug_assert!(qp.qmin() <= q && q <= qp.qmax(), "off-grid value {x}");
    q as i8
}

fn recover_codes(v: &Tensor<f32>, qp: &QuantParams) -> Tensor<i8> {
    v.map(|x| recover_code(x, qp))
}

/// Residual add on codes: re-express both addends at the sum site, add the
/// shifted values, saturate.
fn add_code(a: i8, a_qp: &QuantParams, b: i8, b_qp: &QuantParams, c_qp: &QuantParams) -> i8 {
    let ra = requantize_code(a, a_qp, c_qp) as i32;
    let rb = requantize_code(b, b_qp, c_qp) as i32;
    (ra + rb - c_qp.zero_point).clamp(c_qp.qmin(), c_qp.qmax()) as i8
}

fn add_codes(
    a: &Tensor<i8>,
    a_qp: &QuantParams,
    b: &Tensor<i8>,
    b_qp: &QuantParams,
    c_qp: &QuantParams,
) -> Result<Tensor<i8>, ModelError> {
    if a.shape() != b.shape() {
        return Err(crate::tensor::TensorError::ShapeMismatch {
            expected: a.shape().to_string(),
            got: b.shape().to_string(),
        }
        .into());
    }
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&qa, &qb)| add_code(qa, a_qp, qb, b_qp, c_qp))
        .collect();
    Ok(Tensor::from_vec(a.shape(), data)?)
}

fn add_values(
    a: &Tensor<f32>,
    a_qp: &QuantParams,
    b: &Tensor<f32>,
    b_qp: &QuantParams,
    c_qp: &QuantParams,
) -> Result<Tensor<f32>, ModelError> {
    if a.shape() != b.shape() {
        return Err(crate::tensor::TensorError::ShapeMismatch {
            expected: a.shape().to_string(),
            got: b.shape().to_string(),
        }
        .into());
    }
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&va, &vb)| {
            let code = add_code(
                recover_code(va, a_qp),
                a_qp,
                recover_code(vb, b_qp),
                b_qp,
                c_qp,
            );
            dequantize_scalar(code, c_qp)
        })
        .collect();
    Ok(Tensor::from_vec(a.shape(), data)?)
}

/// Activation clamp in code space: quantize both bounds (saturating to the
/// representable range) and clamp every code between them.
fn clamp_codes(t: &Tensor<i8>, lo: f32, hi: f32, qp: &QuantParams) -> Tensor<i8> {
    let qlo = quantize_scalar(lo, qp);
    let qhi = quantize_scalar(hi, qp);
    t.map(|q| q.clamp(qlo, qhi))
}

/// The same clamp on grid values. Dequantization is strictly monotone over
/// codes, so clamping values at the bound codes' grid points flips exactly
/// the elements the code clamp would.
fn clamp_values(t: &Tensor<f32>, lo: f32, hi: f32, qp: &QuantParams) -> Tensor<f32> {
    let glo = dequantize_scalar(quantize_scalar(lo, qp), qp);
    let ghi = dequantize_scalar(quantize_scalar(hi, qp), qp);
    t.map(|v| v.clamp(glo, ghi))
}

fn requant_codes(t: &Tensor<i8>, from: &QuantParams, to: &QuantParams) -> Tensor<i8> {
    t.map(|q| requantize_code(q, from, to))
}

fn requant_values(t: &Tensor<f32>, from: &QuantParams, to: &QuantParams) -> Tensor<f32> {
    t.map(|v| dequantize_scalar(requantize_code(recover_code(v, from), from, to), to))
}

/// Converts an FP32 store to a statically quantized one: folds batch norms,
/// quantizes weights symmetrically per tensor, quantizes biases to INT32 at
/// S_in·S_w, and embeds the calibration record's site table.
pub fn convert_int8_static(
    store: &WeightStore,
    record: &CalibrationRecord,
) -> Result<WeightStore, ModelError> {
    if store.kind() != StoreKind::Fp32 {
        return Err(ModelError::WrongKind {
            expected: StoreKind::Fp32.as_str(),
            got: store.kind().as_str(),
        });
    }
    let folded = FoldedModel::from_store(store)?;
    let model = Int8Model::from_folded(&folded, record)?;
    let mut builder = WeightStoreBuilder::new(StoreKind::Int8Static, ARCH_ID);
    for qc in &model.convs {
        let ws = qc.desc.weight_shape();
        builder.push_i8(
            &format!("{}.weight", qc.name),
            &[ws.n, ws.c, ws.h, ws.w],
            qc.codes.data(),
            qc.w_qp.clone(),
        )?;
        builder.push_i32(
            &format!("{}.bias", qc.name),
            &[qc.desc.out_channels],
            &qc.bias_q,
        )?;
    }
    for name in model.arch.site_names() {
        builder.push_site(&name, record.qparams(&name)?);
    }
    Ok(builder.finish())
}

/// Converts an FP32 store to a dynamically quantized one: INT8 weights with
/// the same symmetric parameters as static conversion, biases kept in FP32,
/// no site table (activations are observed per input).
pub fn convert_int8_dynamic(store: &WeightStore) -> Result<WeightStore, ModelError> {
    if store.kind() != StoreKind::Fp32 {
        return Err(ModelError::WrongKind {
            expected: StoreKind::Fp32.as_str(),
            got: store.kind().as_str(),
        });
    }
    let folded = FoldedModel::from_store(store)?;
    let mut builder = WeightStoreBuilder::new(StoreKind::Int8Dynamic, ARCH_ID);
    for c in folded.arch().convs() {
        let fc = folded.conv(&c.name);
        let w_qp = dynamic_qparams(fc.weights.data(), ACT_BITS, Scheme::Symmetric)?;
        let codes = quantize_tensor(&fc.weights, &w_qp);
        let ws = c.desc.weight_shape();
        builder.push_i8(
            &format!("{}.weight", c.name),
            &[ws.n, ws.c, ws.h, ws.w],
            codes.data(),
            w_qp.clone(),
        )?;
        builder.push_f32(&format!("{}.bias", c.name), &[c.desc.out_channels], &fc.bias)?;
    }
    Ok(builder.finish())
}

/// INT8 inference with a statically quantized store.
pub fn forward_int8_static(
    store: &WeightStore,
    input: &Tensor<f32>,
) -> Result<Tensor<f32>, ModelError> {
    Int8Model::from_store(store)?.forward(input)
}

/// The fake-quantized FP32 simulation of `forward_int8_static`. Bit-equal
/// outputs are a correctness invariant, not an approximation.
pub fn forward_int8_static_sim(
    store: &WeightStore,
    input: &Tensor<f32>,
) -> Result<Tensor<f32>, ModelError> {
    Int8Model::from_store(store)?.forward_sim(input)
}

/// Dynamic INT8 inference: observes activation ranges on the given input,
/// then runs the integer engine. Accepts an FP32 store (weights quantized on
/// the fly) or an int8-dynamic store (stored weight codes, per-input
/// activation parameters).
pub fn forward_int8_dynamic(
    store: &WeightStore,
    input: &Tensor<f32>,
) -> Result<Tensor<f32>, ModelError> {
    let folded = FoldedModel::from_store(store)?;
    let record = calibrate_folded(&folded, std::slice::from_ref(input))?;
    let model = match store.kind() {
        StoreKind::Fp32 => Int8Model::from_folded(&folded, &record)?,
        StoreKind::Int8Dynamic => Int8Model::from_dynamic_store(store, &record)?,
        StoreKind::Int8Static => {
            return Err(ModelError::WrongKind {
                expected: "fp32 or int8-dynamic",
                got: StoreKind::Int8Static.as_str(),
            })
        }
    };
    model.forward(input)
}
