use std::fs;
use std::io::{BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array1, Array2};

use super::spec::NetworkSpec;
use crate::dataset::{expect_eof, get_f64s, parse_field, put_f64s, read_file, read_header};
use crate::error::{Error, Result};
use crate::numerics::RngStream;

const PARAMS_MAGIC: &str = "IRSISAC-NN1";

static NEXT_VERSION: AtomicU64 = AtomicU64::new(1);

fn next_version() -> u64 {
    NEXT_VERSION.fetch_add(1, Ordering::Relaxed)
}

/// Weight matrix and bias vector of one trainable layer. Dense weights are
/// `out x in`; convolution weights are `filters x (kernel * in_channels)`
/// with column `tap * in_channels + channel`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamTensors {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl ParamTensors {
    pub fn zeros(rows: usize, cols: usize, bias: usize) -> Self {
        ParamTensors {
            weight: Array2::zeros((rows, cols)),
            bias: Array1::zeros(bias),
        }
    }

    pub fn len(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-layer tensors (`None` for parameter-free layers) tagged with a
/// process-unique version that changes on every mutation.
#[derive(Clone, Debug)]
pub struct NetworkParams {
    layers: Vec<Option<ParamTensors>>,
    version: u64,
}

impl PartialEq for NetworkParams {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

fn shapes_of(spec: &NetworkSpec) -> Vec<Option<(usize, usize, usize)>> {
    spec.param_shapes()
}

impl NetworkParams {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        NetworkParams::from_layers(
            shapes_of(spec)
                .into_iter()
                .map(|s| s.map(|(r, c, b)| ParamTensors::zeros(r, c, b)))
                .collect(),
        )
    }

    /// Glorot-uniform weights with fan-based limit `√(6/(fan_in+fan_out))`;
    /// zero biases.
    pub fn init(spec: &NetworkSpec, rng: &mut RngStream) -> Self {
        NetworkParams::init_scaled(spec, 1.0, rng)
    }

    /// [`init`](NetworkParams::init) with the uniform limit multiplied by
    /// `gain`.
    pub fn init_scaled(spec: &NetworkSpec, gain: f64, rng: &mut RngStream) -> Self {
        let mut p = NetworkParams::zeros(spec);
        for (layer, t) in spec.layers.iter().zip(p.layers.iter_mut()) {
            let Some(t) = t else { continue };
            let (fan_in, fan_out) = match *layer {
                super::spec::Layer::Conv1d { filters, kernel, .. } => (t.weight.ncols(), filters * kernel),
                _ => (t.weight.ncols(), t.weight.nrows()),
            };
            let limit = gain * (6.0 / (fan_in + fan_out) as f64).sqrt();
            t.weight.mapv_inplace(|_| (2.0 * rng.uniform() - 1.0) * limit);
        }
        p
    }

    pub fn from_layers(layers: Vec<Option<ParamTensors>>) -> Self {
        NetworkParams {
            layers,
            version: next_version(),
        }
    }

    pub fn layers(&self) -> &[Option<ParamTensors>] {
        &self.layers
    }

    /// Mutable access; invalidates outstanding forward caches.
    pub fn layers_mut(&mut self) -> &mut [Option<ParamTensors>] {
        self.version = next_version();
        &mut self.layers
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn len(&self) -> usize {
        self.layers.iter().flatten().map(ParamTensors::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .flatten()
            .all(|t| t.weight.iter().chain(t.bias.iter()).all(|x| x.is_finite()))
    }

    pub fn matches(&self, spec: &NetworkSpec) -> bool {
        let expected = shapes_of(spec);
        expected.len() == self.layers.len()
            && expected.iter().zip(&self.layers).all(|(s, t)| match (s, t) {
                (None, None) => true,
                (Some((r, c, b)), Some(t)) => t.weight.dim() == (*r, *c) && t.bias.len() == *b,
                _ => false,
            })
    }

    /// Header line with the spec fingerprint and tensor shapes, then every
    /// weight (row-major) and bias as little-endian `f64`, in layer order.
    pub fn write_to(&self, spec: &NetworkSpec, w: &mut impl Write) -> Result<()> {
        if spec.layers.is_empty() {
            return Err(Error::config("refusing to save a network with no layers"));
        }
        if !self.matches(spec) {
            return Err(Error::shape("parameters do not match the network spec"));
        }
        writeln!(
            w,
            "{PARAMS_MAGIC},{},{},{}",
            spec.fingerprint(),
            self.layers.len(),
            shape_list(&self.layers)
        )?;
        for t in self.layers.iter().flatten() {
            put_f64s(w, t.weight.as_slice().expect("standard layout"))?;
            put_f64s(w, t.bias.as_slice().expect("standard layout"))?;
        }
        Ok(())
    }

    pub fn to_bytes(&self, spec: &NetworkSpec) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_to(spec, &mut buf)?;
        Ok(buf)
    }

    pub fn save(&self, spec: &NetworkSpec, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes(spec)?)?;
        Ok(())
    }

    pub fn load(spec: &NetworkSpec, path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        NetworkParams::from_bytes(spec, &bytes, path)
    }

    pub fn from_bytes(spec: &NetworkSpec, bytes: &[u8], origin: &Path) -> Result<Self> {
        let mut r = BufReader::new(bytes);
        let header = read_header(&mut r, origin)?;
        let fields: Vec<&str> = header.split(',').collect();
        if fields.len() != 4 || fields[0] != PARAMS_MAGIC {
            return Err(Error::format(origin, "not a parameter file"));
        }
        let expected = spec.fingerprint();
        if fields[1] != expected {
            return Err(Error::Fingerprint {
                expected,
                found: fields[1].to_string(),
            });
        }
        let n_layers: usize = parse_field(fields[2], origin)?;
        let template = NetworkParams::zeros(spec);
        if n_layers != template.layers.len() || fields[3] != shape_list(&template.layers) {
            return Err(Error::format(origin, "layer shapes disagree with the network spec"));
        }
        let mut layers = Vec::with_capacity(n_layers);
        for t in template.layers {
            layers.push(match t {
                None => None,
                Some(t) => {
                    let (rows, cols) = t.weight.dim();
                    let w = get_f64s(&mut r, rows * cols, origin)?;
                    let b = get_f64s(&mut r, t.bias.len(), origin)?;
                    Some(ParamTensors {
                        weight: Array2::from_shape_vec((rows, cols), w).expect("sized above"),
                        bias: Array1::from(b),
                    })
                }
            });
        }
        expect_eof(&mut r, origin)?;
        Ok(NetworkParams::from_layers(layers))
    }
}

fn shape_list(layers: &[Option<ParamTensors>]) -> String {
    layers
        .iter()
        .map(|t| match t {
            None => "-".to_string(),
            Some(t) => format!("{}x{}+{}", t.weight.nrows(), t.weight.ncols(), t.bias.len()),
        })
        .collect::<Vec<_>>()
        .join(";")
}
