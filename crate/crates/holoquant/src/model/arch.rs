//! The reference network: a 4-channel RGB-D input mapped to a 6-channel
//! amplitude/phase hologram (3 amplitude + 3 phase, each in [0, 1]).
//!
//! Topology: one 3×3 input convolution (4→24), fourteen residual blocks
//! (conv 3×3 + BN + ReLU6, conv 3×3 + BN, residual add, ReLU6), a depthwise
//! 3×3 + BN skip path on the raw input, channel concatenation (24 + 4 = 28),
//! then a depthwise-separable output head (depthwise 3×3 on 28 channels,
//! pointwise 1×1 to 6) finished by a Hardtanh clamped to [0, 1]. The trunk
//! holds exactly 29 convolutions of 24 output kernels each.

use crate::tensor::ConvDescriptor;

pub const ARCH_ID: &str = "refined-cgh-v1";
pub const IN_CHANNELS: usize = 4;
pub const TRUNK_CHANNELS: usize = 24;
pub const NUM_BLOCKS: usize = 14;
pub const CONCAT_CHANNELS: usize = TRUNK_CHANNELS + IN_CHANNELS;
pub const OUT_CHANNELS: usize = 6;

/// One convolution of the architecture: tensor base name, geometry, and the
/// name of the batch norm folded into it (if any).
#[derive(Clone, Debug)]
pub struct ConvSpec {
    pub name: String,
    pub desc: ConvDescriptor,
    pub bn: Option<String>,
}

/// The ordered layer structure of the reference network.
#[derive(Clone, Debug)]
pub struct ArchitectureSpec {
    convs: Vec<ConvSpec>,
}

/// Builds the reference architecture description.
pub fn build_reference_arch() -> ArchitectureSpec {
    let conv = |name: &str, i, o, k, g, bn: Option<String>| ConvSpec {
        name: name.to_string(),
        desc: ConvDescriptor::new(i, o, (k, k), g).expect("reference geometry is valid"),
        bn,
    };
    let mut convs = vec![conv(
        "trunk.conv0",
        IN_CHANNELS,
        TRUNK_CHANNELS,
        3,
        1,
        None,
    )];
    for k in 0..NUM_BLOCKS {
        convs.push(conv(
            &format!("block{k}.conv1"),
            TRUNK_CHANNELS,
            TRUNK_CHANNELS,
            3,
            1,
            Some(format!("block{k}.bn1")),
        ));
        convs.push(conv(
            &format!("block{k}.conv2"),
            TRUNK_CHANNELS,
            TRUNK_CHANNELS,
            3,
            1,
            Some(format!("block{k}.bn2")),
        ));
    }
    convs.push(conv(
        "skip.dw",
        IN_CHANNELS,
        IN_CHANNELS,
        3,
        IN_CHANNELS,
        Some("skip.bn".to_string()),
    ));
    convs.push(conv("head.dw", CONCAT_CHANNELS, CONCAT_CHANNELS, 3, CONCAT_CHANNELS, None));
    convs.push(conv("head.pw", CONCAT_CHANNELS, OUT_CHANNELS, 1, 1, None));
    ArchitectureSpec { convs }
}

impl ArchitectureSpec {
    pub fn id(&self) -> &'static str {
        ARCH_ID
    }

    /// Every convolution, in graph order.
    pub fn convs(&self) -> &[ConvSpec] {
        &self.convs
    }

    pub fn conv(&self, name: &str) -> &ConvSpec {
        self.convs
            .iter()
            .find(|c| c.name == name)
            .unwrap_or_else(|| panic!("architecture has no conv named {name:?}"))
    }

    /// Trunk convolutions: the input conv plus the residual-block convs,
    /// excluding the depthwise-separable output head and the skip path.
    pub fn trunk_convs(&self) -> impl Iterator<Item = &ConvSpec> {
        self.convs
            .iter()
            .filter(|c| c.name.starts_with("trunk.") || c.name.starts_with("block"))
    }

    /// Activation sites recorded during calibration, in observation order.
    /// Each block contributes three: the post-ReLU6 conv1 output, the raw
    /// conv2 output, and the residual-sum site (calibrated over both addends
    /// and the raw sum so the integer add works in a shared representation).
    pub fn site_names(&self) -> Vec<String> {
        let mut names = vec!["site.input".to_string(), "site.conv0".to_string()];
        for k in 0..NUM_BLOCKS {
            names.push(format!("site.block{k}.conv1"));
            names.push(format!("site.block{k}.conv2"));
            names.push(format!("site.block{k}.sum"));
        }
        names.extend(
            ["site.skip", "site.concat", "site.head.dw", "site.head.pw"]
                .map(str::to_string),
        );
        names
    }

    /// The activation site feeding a convolution's input. Residual blocks
    /// chain through the sum sites; the skip path reads the network input.
    pub fn input_site_of(&self, conv: &str) -> Option<String> {
        match conv {
            "trunk.conv0" | "skip.dw" => Some("site.input".to_string()),
            "head.dw" => Some("site.concat".to_string()),
            "head.pw" => Some("site.head.dw".to_string()),
            _ => {
                let rest = conv.strip_prefix("block")?;
                let (k, which) = rest.split_once('.')?;
                let k: usize = k.parse().ok().filter(|&k| k < NUM_BLOCKS)?;
                match which {
                    "conv1" if k == 0 => Some("site.conv0".to_string()),
                    "conv1" => Some(format!("site.block{}.sum", k - 1)),
                    "conv2" => Some(format!("site.block{k}.conv1")),
                    _ => None,
                }
            }
        }
    }

    /// The FP32 tensor table: (name, shape), in store order.
    pub fn fp32_tensor_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        for c in &self.convs {
            let ws = c.desc.weight_shape();
            out.push((format!("{}.weight", c.name), vec![ws.n, ws.c, ws.h, ws.w]));
            out.push((format!("{}.bias", c.name), vec![c.desc.out_channels]));
            if let Some(bn) = &c.bn {
                for p in ["gamma", "beta", "mean", "var"] {
                    out.push((format!("{bn}.{p}"), vec![c.desc.out_channels]));
                }
                out.push((format!("{bn}.eps"), vec![1]));
            }
        }
        out
    }

    /// Total FP32 parameter count (conv weights/biases plus BN parameters).
    pub fn param_count(&self) -> usize {
        self.fp32_tensor_shapes()
            .iter()
            .map(|(_, s)| s.iter().product::<usize>())
            .sum()
    }
}
