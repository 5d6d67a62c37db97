use std::fmt;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Activation {
    Tanh,
    Linear,
}

impl Activation {
    fn tag(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Linear => "linear",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Layer {
    Dense { width: usize, activation: Activation },
    /// Valid-padding, stride-1 cross-correlation.
    Conv1d { filters: usize, kernel: usize, activation: Activation },
    Flatten,
}

/// Length and channel count of the activation flowing between layers.
/// Multi-channel activations are stored position-major: `pos * channels + ch`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shape {
    pub len: usize,
    pub channels: usize,
}

impl Shape {
    pub fn width(&self) -> usize {
        self.len * self.channels
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec {
    pub input_len: usize,
    pub input_channels: usize,
    pub layers: Vec<Layer>,
}

/// Layer widths of the communication-channel network.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CeDnnWidths {
    pub filters1: usize,
    pub filters2: usize,
    pub dense: usize,
}

impl Default for CeDnnWidths {
    fn default() -> Self {
        CeDnnWidths {
            filters1: 128,
            filters2: 64,
            dense: 1024,
        }
    }
}

pub const CE_KERNEL: usize = 4;
pub const SE_HIDDEN: usize = 256;

impl NetworkSpec {
    pub fn new(input_len: usize, input_channels: usize, layers: Vec<Layer>) -> Result<Self> {
        let spec = NetworkSpec {
            input_len,
            input_channels,
            layers,
        };
        spec.shapes()?;
        Ok(spec)
    }

    pub fn input_shape(&self) -> Shape {
        Shape {
            len: self.input_len,
            channels: self.input_channels,
        }
    }

    pub fn input_width(&self) -> usize {
        self.input_shape().width()
    }

    /// Activation shapes, starting with the input and ending with the output.
    pub fn shapes(&self) -> Result<Vec<Shape>> {
        let mut cur = self.input_shape();
        if cur.width() == 0 {
            return Err(Error::config("network input is empty"));
        }
        let mut out = vec![cur];
        for (i, layer) in self.layers.iter().enumerate() {
            cur = match *layer {
                Layer::Dense { width, .. } => {
                    if cur.channels != 1 {
                        return Err(Error::config(format!(
                            "layer {i}: dense layer needs a flattened input"
                        )));
                    }
                    if width == 0 {
                        return Err(Error::config(format!("layer {i}: zero-width dense layer")));
                    }
                    Shape { len: width, channels: 1 }
                }
                Layer::Conv1d { filters, kernel, .. } => {
                    if filters == 0 || kernel == 0 || kernel > cur.len {
                        return Err(Error::config(format!(
                            "layer {i}: kernel {kernel} does not fit input length {}",
                            cur.len
                        )));
                    }
                    Shape {
                        len: cur.len - kernel + 1,
                        channels: filters,
                    }
                }
                Layer::Flatten => Shape {
                    len: cur.width(),
                    channels: 1,
                },
            };
            out.push(cur);
        }
        Ok(out)
    }

    pub fn output_len(&self) -> usize {
        self.shapes()
            .expect("spec validated at construction")
            .last()
            .map_or(0, Shape::width)
    }

    /// `(weight rows, weight cols, bias len)` per layer; `None` for flatten.
    pub fn param_shapes(&self) -> Vec<Option<(usize, usize, usize)>> {
        let shapes = self.shapes().expect("spec validated at construction");
        self.layers
            .iter()
            .zip(&shapes)
            .map(|(layer, input)| match *layer {
                Layer::Dense { width, .. } => Some((width, input.width(), width)),
                Layer::Conv1d { filters, kernel, .. } => {
                    Some((filters, kernel * input.channels, filters))
                }
                Layer::Flatten => None,
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.param_shapes()
            .into_iter()
            .flatten()
            .map(|(r, c, b)| r * c + b)
            .sum()
    }

    /// Canonical one-line description; the fingerprint hashes this.
    pub fn describe(&self) -> String {
        let mut s = format!("in={}x{}", self.input_len, self.input_channels);
        for layer in &self.layers {
            match layer {
                Layer::Dense { width, activation } => {
                    s.push_str(&format!(";dense:{width}:{}", activation.tag()))
                }
                Layer::Conv1d {
                    filters,
                    kernel,
                    activation,
                } => s.push_str(&format!(";conv1d:{filters}:{kernel}:{}", activation.tag())),
                Layer::Flatten => s.push_str(";flatten"),
            }
        }
        s
    }

    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.describe().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl fmt::Display for NetworkSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

/// Sensing-channel network: two 256-wide tanh layers and a linear output of
/// width `2M²`.
pub fn build_se_dnn(m: usize, p: usize, c: usize) -> Result<NetworkSpec> {
    build_se_dnn_with(m, p, c, SE_HIDDEN)
}

pub fn build_se_dnn_with(m: usize, p: usize, c: usize, hidden: usize) -> Result<NetworkSpec> {
    if m == 0 || p == 0 || c == 0 {
        return Err(Error::config("SE-DNN dimensions must be positive"));
    }
    NetworkSpec::new(
        2 * m * p * c,
        1,
        vec![
            Layer::Dense { width: hidden, activation: Activation::Tanh },
            Layer::Dense { width: hidden, activation: Activation::Tanh },
            Layer::Dense { width: 2 * m * m, activation: Activation::Linear },
        ],
    )
}

/// Communication-channel network: two tanh convolutions with kernel 4, a
/// linear dense layer and a linear output of width `2ML`.
pub fn build_ce_dnn(p: usize, c: usize, m: usize, l: usize) -> Result<NetworkSpec> {
    build_ce_dnn_with(p, c, m, l, CeDnnWidths::default())
}

pub fn build_ce_dnn_with(p: usize, c: usize, m: usize, l: usize, widths: CeDnnWidths) -> Result<NetworkSpec> {
    let input = 2 * p * c;
    if input < 2 * CE_KERNEL - 1 {
        return Err(Error::config(format!(
            "CE-DNN input of length {input} is too short for two kernel-{CE_KERNEL} convolutions"
        )));
    }
    if m == 0 || l == 0 {
        return Err(Error::config("CE-DNN dimensions must be positive"));
    }
    NetworkSpec::new(
        input,
        1,
        vec![
            Layer::Conv1d {
                filters: widths.filters1,
                kernel: CE_KERNEL,
                activation: Activation::Tanh,
            },
            Layer::Conv1d {
                filters: widths.filters2,
                kernel: CE_KERNEL,
                activation: Activation::Tanh,
            },
            Layer::Flatten,
            Layer::Dense { width: widths.dense, activation: Activation::Linear },
            Layer::Dense { width: 2 * m * l, activation: Activation::Linear },
        ],
    )
}
