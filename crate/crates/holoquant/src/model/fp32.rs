//! FP32 inference over the reference network, in two forms: the literal
//! layer graph with explicit batch norms, and the folded graph where every
//! batch norm is absorbed into its convolution. The folded graph is what
//! calibration observes and what quantization converts, so both INT8 paths
//! inherit its exact weight values.

use super::arch::{build_reference_arch, ArchitectureSpec, ARCH_ID, IN_CHANNELS, NUM_BLOCKS};
use super::store::{ElemKind, StoreKind, WeightStore};
use super::ModelError;
use crate::quant::dequantize;
use crate::tensor::{
    add, batchnorm, concat_channels, conv2d, fold_batchnorm, hardtanh01, relu6,
    BatchNormParams, ConvDescriptor, Tensor,
};

/// One convolution with its (not yet folded) batch norm.
#[derive(Clone, Debug)]
pub struct ConvParams {
    pub desc: ConvDescriptor,
    pub weights: Tensor<f32>,
    pub bias: Vec<f32>,
    pub bn: Option<BatchNormParams>,
}

/// The literal FP32 network as stored: convolutions plus batch norms.
#[derive(Clone, Debug)]
pub struct Fp32Model {
    arch: ArchitectureSpec,
    convs: Vec<(String, ConvParams)>,
}

/// The inference network after batch-norm folding: convolutions only.
#[derive(Clone, Debug)]
pub struct FoldedModel {
    arch: ArchitectureSpec,
    convs: Vec<(String, FoldedConv)>,
}

#[derive(Clone, Debug)]
pub struct FoldedConv {
    pub desc: ConvDescriptor,
    pub weights: Tensor<f32>,
    pub bias: Vec<f32>,
}

pub(crate) fn check_architecture(store: &WeightStore) -> Result<(), ModelError> {
    if store.architecture() != ARCH_ID {
        return Err(ModelError::WrongArchitecture {
            want: ARCH_ID,
            got: store.architecture().to_string(),
        });
    }
    Ok(())
}

/// Validates a network input: (1, 4, H, W), H and W at least 3, every value
/// finite and inside [0, 1].
pub(crate) fn validate_input(input: &Tensor<f32>) -> Result<(), ModelError> {
    let s = input.shape();
    if s.n != 1 || s.c != IN_CHANNELS {
        return Err(ModelError::BadInput(format!(
            "expected shape (1, {IN_CHANNELS}, H, W), got {s}"
        )));
    }
    if s.h < 3 || s.w < 3 {
        return Err(ModelError::BadInput(format!(
            "spatial size {}x{} is below the 3x3 receptive field",
            s.h, s.w
        )));
    }
    for &v in input.data() {
        if !(0.0..=1.0).contains(&v) {
            return Err(ModelError::BadInput(format!(
                "input value {v} outside [0, 1]"
            )));
        }
    }
    Ok(())
}

fn fetch_f32(store: &WeightStore, name: &str, shape: &[usize]) -> Result<Vec<f32>, ModelError> {
    let rec = store.record(name)?;
    if rec.shape != shape {
        return Err(ModelError::BadInput(format!(
            "tensor {name} has shape {:?}, expected {:?}",
            rec.shape, shape
        )));
    }
    Ok(store.f32_data(name)?)
}

impl Fp32Model {
    /// Parses an FP32 store, validating kind, architecture, and every shape.
    pub fn from_store(store: &WeightStore) -> Result<Self, ModelError> {
        if store.kind() != StoreKind::Fp32 {
            return Err(ModelError::WrongKind {
                expected: StoreKind::Fp32.as_str(),
                got: store.kind().as_str(),
            });
        }
        check_architecture(store)?;
        let arch = build_reference_arch();
        let mut convs = Vec::with_capacity(arch.convs().len());
        for c in arch.convs() {
            let ws = c.desc.weight_shape();
            let weights = Tensor::from_vec(
                ws,
                fetch_f32(store, &format!("{}.weight", c.name), &[ws.n, ws.c, ws.h, ws.w])?,
            )?;
            let bias = fetch_f32(store, &format!("{}.bias", c.name), &[c.desc.out_channels])?;
            let bn = match &c.bn {
                Some(bn_name) => {
                    let ch = [c.desc.out_channels];
                    Some(BatchNormParams {
                        gamma: fetch_f32(store, &format!("{bn_name}.gamma"), &ch)?,
                        beta: fetch_f32(store, &format!("{bn_name}.beta"), &ch)?,
                        mean: fetch_f32(store, &format!("{bn_name}.mean"), &ch)?,
                        variance: fetch_f32(store, &format!("{bn_name}.var"), &ch)?,
                        epsilon: fetch_f32(store, &format!("{bn_name}.eps"), &[1])?[0],
                    })
                }
                None => None,
            };
            convs.push((
                c.name.clone(),
                ConvParams {
                    desc: c.desc,
                    weights,
                    bias,
                    bn,
                },
            ));
        }
        Ok(Fp32Model { arch, convs })
    }

    pub fn arch(&self) -> &ArchitectureSpec {
        &self.arch
    }

    fn conv(&self, name: &str) -> &ConvParams {
        &self
            .convs
            .iter()
            .find(|(n, _)| n == name)
            .expect("construction covers the whole architecture")
            .1
    }

    /// The literal forward pass: batch norms applied explicitly.
    pub fn forward(&self, input: &Tensor<f32>) -> Result<Tensor<f32>, ModelError> {
        validate_input(input)?;
        let apply = |name: &str, x: &Tensor<f32>| -> Result<Tensor<f32>, ModelError> {
            let c = self.conv(name);
            let y = conv2d(x, &c.weights, &c.bias, &c.desc)?;
            Ok(match &c.bn {
                Some(bn) => batchnorm(&y, bn)?,
                None => y,
            })
        };
        let mut t = apply("trunk.conv0", input)?;
        for k in 0..NUM_BLOCKS {
            let a = relu6(&apply(&format!("block{k}.conv1"), &t)?);
            let b = apply(&format!("block{k}.conv2"), &a)?;
            t = relu6(&add(&b, &t)?);
        }
        let skip = apply("skip.dw", input)?;
        let cat = concat_channels(&t, &skip)?;
        let d = apply("head.dw", &cat)?;
        Ok(hardtanh01(&apply("head.pw", &d)?))
    }
}

impl FoldedModel {
    /// Folds every batch norm of an FP32 model into its convolution.
    pub fn from_fp32(model: &Fp32Model) -> Result<Self, ModelError> {
        let mut convs = Vec::with_capacity(model.convs.len());
        for (name, c) in &model.convs {
            let (weights, bias) = match &c.bn {
                Some(bn) => fold_batchnorm(&c.weights, &c.bias, bn)?,
                None => (c.weights.clone(), c.bias.clone()),
            };
            convs.push((
                name.clone(),
                FoldedConv {
                    desc: c.desc,
                    weights,
                    bias,
                },
            ));
        }
        Ok(FoldedModel {
            arch: model.arch.clone(),
            convs,
        })
    }

    /// Builds the folded inference graph from any store kind. FP32 stores
    /// are parsed and folded; quantized stores are dequantized, so this is
    /// the FP32 reference that an INT8 forward should be compared against.
    pub fn from_store(store: &WeightStore) -> Result<Self, ModelError> {
        match store.kind() {
            StoreKind::Fp32 => Self::from_fp32(&Fp32Model::from_store(store)?),
            StoreKind::Int8Static | StoreKind::Int8Dynamic => Self::from_quantized(store),
        }
    }

    fn from_quantized(store: &WeightStore) -> Result<Self, ModelError> {
        check_architecture(store)?;
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
            let codes = store.i8_data(&wname)?;
            let qp = store
                .tensor_qparams(&wname)?
                .ok_or_else(|| ModelError::BadInput(format!("{wname} carries no qparams")))?;
            let weights = Tensor::from_vec(ws, dequantize(&codes, &qp))?;
            let bname = format!("{}.bias", c.name);
            let bias = match store.record(&bname)?.elem_kind {
                ElemKind::F32 => fetch_f32(store, &bname, &[c.desc.out_channels])?,
                ElemKind::I32 => {
                    // Static stores keep biases as INT32 at scale S_x * S_w
                    // (input site scale times weight scale).
                    let site = self_input_site(&arch, &c.name)?;
                    let s_x = store.site_qparams(&site)?.scale as f64;
                    let s_w = qp.scale as f64;
                    store
                        .i32_data(&bname)?
                        .iter()
                        .map(|&q| (q as f64 * s_x * s_w) as f32)
                        .collect()
                }
                ElemKind::I8 => {
                    return Err(ModelError::BadInput(format!(
                        "bias {bname} stored as int8"
                    )))
                }
            };
            convs.push((
                c.name.clone(),
                FoldedConv {
                    desc: c.desc,
                    weights,
                    bias,
                },
            ));
        }
        Ok(FoldedModel { arch, convs })
    }

    pub fn arch(&self) -> &ArchitectureSpec {
        &self.arch
    }

    pub fn conv(&self, name: &str) -> &FoldedConv {
        &self
            .convs
            .iter()
            .find(|(n, _)| n == name)
            .expect("construction covers the whole architecture")
            .1
    }

    pub fn forward(&self, input: &Tensor<f32>) -> Result<Tensor<f32>, ModelError> {
        self.forward_observed(input, |_, _| {})
    }

    /// Forward pass that reports every activation site to `observe`. The
    /// residual-sum site sees three slices (both addends and the raw sum)
    /// so a calibration built on it covers the whole add in one
    /// representation; every other site sees exactly one slice.
    pub fn forward_observed(
        &self,
        input: &Tensor<f32>,
        mut observe: impl FnMut(&str, &[f32]),
    ) -> Result<Tensor<f32>, ModelError> {
        validate_input(input)?;
        observe("site.input", input.data());
        let run = |name: &str, x: &Tensor<f32>| -> Result<Tensor<f32>, ModelError> {
            let c = self.conv(name);
            Ok(conv2d(x, &c.weights, &c.bias, &c.desc)?)
        };
        let mut t = run("trunk.conv0", input)?;
        observe("site.conv0", t.data());
        for k in 0..NUM_BLOCKS {
            let a = relu6(&run(&format!("block{k}.conv1"), &t)?);
            observe(&format!("site.block{k}.conv1"), a.data());
            let b = run(&format!("block{k}.conv2"), &a)?;
            observe(&format!("site.block{k}.conv2"), b.data());
            let sum = add(&b, &t)?;
            let sum_site = format!("site.block{k}.sum");
            observe(&sum_site, b.data());
            observe(&sum_site, t.data());
            observe(&sum_site, sum.data());
            t = relu6(&sum);
        }
        let skip = run("skip.dw", input)?;
        observe("site.skip", skip.data());
        let cat = concat_channels(&t, &skip)?;
        observe("site.concat", cat.data());
        let d = run("head.dw", &cat)?;
        observe("site.head.dw", d.data());
        let out = hardtanh01(&run("head.pw", &d)?);
        observe("site.head.pw", out.data());
        Ok(out)
    }
}

fn self_input_site(arch: &ArchitectureSpec, conv: &str) -> Result<String, ModelError> {
    arch.input_site_of(conv)
        .ok_or_else(|| ModelError::MissingSite(format!("input site of {conv}")))
}

/// Random test input in [0, 1], shaped (1, 4, h, w).
#[cfg(test)]
pub(crate) fn random_input(seed: u64, h: usize, w: usize) -> Tensor<f32> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let shape = crate::tensor::Shape::new(1, IN_CHANNELS, h, w);
    let data = (0..shape.len()).map(|_| rng.gen::<f32>()).collect();
    Tensor::from_vec(shape, data).unwrap()
}

#[cfg(test)]
mod tests {
    use super::super::init::init_weights;
    use super::super::store::WeightStoreBuilder;
    use super::*;
    use crate::tensor::Shape;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    /// An FP32 store whose batch norms carry non-trivial statistics, so
    /// folding is actually exercised.
    fn store_with_live_bn(seed: u64) -> WeightStore {
        let arch = build_reference_arch();
        let base = init_weights(&arch, seed);
        let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x5eed);
        let mut builder = WeightStoreBuilder::new(StoreKind::Fp32, ARCH_ID);
        for rec in &base.manifest().tensors {
            let data = base.f32_data(&rec.name).unwrap();
            let data: Vec<f32> = if rec.name.ends_with(".gamma") {
                data.iter().map(|_| 1.0 + 0.2 * rng.gen::<f32>()).collect()
            } else if rec.name.ends_with(".beta") || rec.name.ends_with(".mean") {
                data.iter().map(|_| 0.3 * (rng.gen::<f32>() - 0.5)).collect()
            } else if rec.name.ends_with(".var") {
                data.iter().map(|_| 0.5 + rng.gen::<f32>()).collect()
            } else {
                data
            };
            builder.push_f32(&rec.name, &rec.shape, &data).unwrap();
        }
        builder.finish()
    }

    #[test]
    fn folded_forward_matches_the_literal_graph() {
        let store = store_with_live_bn(11);
        let model = Fp32Model::from_store(&store).unwrap();
        let folded = FoldedModel::from_fp32(&model).unwrap();
        let input = random_input(1, 10, 12);
        let a = model.forward(&input).unwrap();
        let b = folded.forward(&input).unwrap();
        assert_eq!(a.shape(), b.shape());
        let worst = a
            .data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f32, f32::max);
        // Thirty stacked convolutions reassociate enough f32 sums that a
        // few 1e-5 of drift is the honest floor; a fold bug (dropped beta,
        // unscaled bias) lands at 1e-2 or worse.
        assert!(worst <= 3e-4, "fold drift {worst}");
        assert!(worst > 0.0, "live batch norms must make folding non-trivial");
    }

    #[test]
    fn forward_shape_and_range() {
        let store = init_weights(&build_reference_arch(), 2);
        let folded = FoldedModel::from_store(&store).unwrap();
        let input = random_input(2, 9, 7);
        let out = folded.forward(&input).unwrap();
        assert_eq!(out.shape(), Shape::new(1, 6, 9, 7));
        assert!(out.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        // Determinism: a second run is bit-identical.
        assert_eq!(out.data(), folded.forward(&input).unwrap().data());
    }

    #[test]
    fn zero_input_maps_to_zero_under_identity_norms() {
        // Fresh weights have zero biases and identity batch norms, so the
        // all-black frame propagates as exact zeros into the clamp.
        let store = init_weights(&build_reference_arch(), 3);
        let folded = FoldedModel::from_store(&store).unwrap();
        let input = Tensor::filled(Shape::new(1, IN_CHANNELS, 6, 6), 0.0);
        let out = folded.forward(&input).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn observation_covers_every_site() {
        let arch = build_reference_arch();
        let store = init_weights(&arch, 4);
        let folded = FoldedModel::from_store(&store).unwrap();
        let input = random_input(5, 8, 8);
        let mut counts = std::collections::BTreeMap::<String, usize>::new();
        folded
            .forward_observed(&input, |site, _| {
                *counts.entry(site.to_string()).or_insert(0) += 1;
            })
            .unwrap();
        for site in arch.site_names() {
            let want = if site.ends_with(".sum") { 3 } else { 1 };
            assert_eq!(counts.get(&site), Some(&want), "{site}");
        }
        assert_eq!(counts.len(), arch.site_names().len());
    }

    #[test]
    fn input_validation_rejects_bad_frames() {
        let store = init_weights(&build_reference_arch(), 5);
        let folded = FoldedModel::from_store(&store).unwrap();
        let wrong_c = Tensor::filled(Shape::new(1, 3, 8, 8), 0.5);
        assert!(matches!(
            folded.forward(&wrong_c),
            Err(ModelError::BadInput(_))
        ));
        let tiny = Tensor::filled(Shape::new(1, IN_CHANNELS, 2, 8), 0.5);
        assert!(matches!(folded.forward(&tiny), Err(ModelError::BadInput(_))));
        let mut hot = Tensor::filled(Shape::new(1, IN_CHANNELS, 8, 8), 0.5);
        hot.set(0, 0, 0, 0, 1.5);
        assert!(matches!(folded.forward(&hot), Err(ModelError::BadInput(_))));
        let mut nan = Tensor::filled(Shape::new(1, IN_CHANNELS, 8, 8), 0.5);
        nan.set(0, 1, 2, 3, f32::NAN);
        assert!(matches!(folded.forward(&nan), Err(ModelError::BadInput(_))));
    }

    #[test]
    fn from_store_checks_kind_and_architecture() {
        let bogus = WeightStoreBuilder::new(StoreKind::Fp32, "other-arch").finish();
        assert!(matches!(
            Fp32Model::from_store(&bogus),
            Err(ModelError::WrongArchitecture { .. })
        ));
        let int8 = WeightStoreBuilder::new(StoreKind::Int8Static, ARCH_ID).finish();
        assert!(matches!(
            Fp32Model::from_store(&int8),
            Err(ModelError::WrongKind { .. })
        ));
    }
}
