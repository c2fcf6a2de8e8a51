//! Quantum building blocks: BasicEntangler ansatz, amplitude-encoded word and
//! sentence embeddings, 1-D quantum convolutions and the quantum fully
//! connected layer. Each maps real vectors to real vectors through
//! statevector circuits.

mod ansatz;
mod circuit;

pub use ansatz::{apply_basic_entangler, ring_pairs, AnsatzParameters};
pub use circuit::{AngleVqc, PreparedVqc, Readout};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevector::{amplitude_encode, qubits_for_len};

fn embed_prepared(
    prepared: &crate::statevector::Statevector,
    p: &AnsatzParameters,
) -> Result<Vec<f64>> {
    if prepared.n_qubits() != p.n_qubits() {
        return Err(Error::Config(format!(
            "embedding ansatz has {} qubits, data needs {}",
            p.n_qubits(),
            prepared.n_qubits()
        )));
    }
    let mut out = vec![0.0; p.n_qubits()];
    PreparedVqc {
        prepared,
        depth: p.depth(),
    }
    .run(p.angles(), &mut out)?;
    Ok(out)
}

/// One-hot vector of length `vocab_size` with a 1 at `index`.
pub fn one_hot(index: usize, vocab_size: usize) -> Result<Vec<f64>> {
    if index >= vocab_size {
        return Err(Error::Lookup(format!(
            "token index {index} outside a vocabulary of {vocab_size}"
        )));
    }
    let mut v = vec![0.0; vocab_size];
    v[index] = 1.0;
    Ok(v)
}

/// Amplitude-encodes the one-hot vector of `index` (the basis state
/// `|index⟩` on `⌈log₂N⌉` qubits), applies the ansatz and returns per-qubit
/// ⟨Z⟩.
pub fn quantum_word_embed(
    index: usize,
    vocab_size: usize,
    p: &AnsatzParameters,
) -> Result<Vec<f64>> {
    let prepared = amplitude_encode(&one_hot(index, vocab_size)?, qubits_for_len(vocab_size))?;
    embed_prepared(&prepared, p)
}

/// Same circuit as the word embedding, fed a TF-IDF vector instead of a
/// one-hot vector.
pub fn quantum_sentence_embed(tfidf: &[f64], p: &AnsatzParameters) -> Result<Vec<f64>> {
    let prepared = amplitude_encode(tfidf, qubits_for_len(tfidf.len()))?;
    embed_prepared(&prepared, p)
}

/// Angle-encodes `x` (one value per qubit), applies the ansatz and returns
/// per-qubit ⟨Z⟩.
pub fn quantum_fully_connected(x: &[f64], p: &AnsatzParameters) -> Result<Vec<f64>> {
    if x.len() != p.n_qubits() {
        return Err(Error::Config(format!(
            "fully connected layer has {} qubits, input has {} values",
            p.n_qubits(),
            x.len()
        )));
    }
    let vqc = AngleVqc {
        n_qubits: p.n_qubits(),
        depth: p.depth(),
        readout: Readout::PerQubit,
    };
    let mut angles = x.to_vec();
    angles.extend_from_slice(p.angles());
    let mut out = vec![0.0; p.n_qubits()];
    vqc.run(&angles, &mut out)?;
    Ok(out)
}

/// Kernel size, stride and number of stacked layers of a 1-D convolution.
/// Padding is always symmetric zero padding ("same").
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub kernel_size: usize,
    pub stride: usize,
    pub n_layers: usize,
}

impl ConvSpec {
    pub fn validate(&self) -> Result<()> {
        if self.kernel_size == 0 || self.stride == 0 || self.n_layers == 0 {
            return Err(Error::Config(format!(
                "kernel size, stride and layer count must be >= 1, got K={} S={} L={}",
                self.kernel_size, self.stride, self.n_layers
            )));
        }
        Ok(())
    }

    /// Output length `⌈m/S⌉` of one layer over a length-`m` input.
    pub fn output_len(&self, m: usize) -> usize {
        m.div_ceil(self.stride)
    }

    fn left_pad(&self, m: usize) -> usize {
        let out = self.output_len(m);
        ((out - 1) * self.stride + self.kernel_size).saturating_sub(m) / 2
    }

    /// Source positions of the `K` window inputs for output position `t`;
    /// `None` marks zero padding.
    pub fn window(&self, m: usize, t: usize) -> impl Iterator<Item = Option<usize>> {
        let start = (t * self.stride) as isize - self.left_pad(m) as isize;
        (0..self.kernel_size as isize).map(move |k| {
            let pos = start + k;
            (pos >= 0 && (pos as usize) < m).then_some(pos as usize)
        })
    }

    /// Input position whose mask bit an output position inherits.
    pub fn center(&self, m: usize, t: usize) -> usize {
        let c = (t * self.stride + (self.kernel_size - 1) / 2).saturating_sub(self.left_pad(m));
        c.min(m - 1)
    }
}

/// `C` channels of length `m`, row-major `[C][m]`, with a validity mask over
/// positions. Masked-out columns hold zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSequence {
    channels: usize,
    length: usize,
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl ChannelSequence {
    pub fn new(
        channels: usize,
        length: usize,
        mut values: Vec<f64>,
        mask: Vec<bool>,
    ) -> Result<Self> {
        if channels == 0 || length == 0 {
            return Err(Error::Config(
                "channel sequence needs >= 1 channel and position".into(),
            ));
        }
        if values.len() != channels * length || mask.len() != length {
            return Err(Error::Config(format!(
                "channel sequence {channels}x{length} given {} values and {} mask bits",
                values.len(),
                mask.len()
            )));
        }
        for c in 0..channels {
            for (t, &valid) in mask.iter().enumerate() {
                if !valid {
                    values[c * length + t] = 0.0;
                }
            }
        }
        Ok(ChannelSequence {
            channels,
            length,
            values,
            mask,
        })
    }

    /// Builds the `[E][m]` sequence from `m` per-position vectors of length
    /// `E` (position-major input, channel-major storage).
    pub fn from_positions(positions: &[Vec<f64>], mask: Vec<bool>) -> Result<Self> {
        let length = positions.len();
        let channels = positions.first().map_or(0, Vec::len);
        let mut values = vec![0.0; channels * length];
        for (t, v) in positions.iter().enumerate() {
            if v.len() != channels {
                return Err(Error::Config("ragged position vectors".into()));
            }
            for (c, &x) in v.iter().enumerate() {
                values[c * length + t] = x;
            }
        }
        Self::new(channels, length, values, mask)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.length == 0
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.values[c * self.length..(c + 1) * self.length]
    }

    pub fn get(&self, c: usize, t: usize) -> f64 {
        self.values[c * self.length + t]
    }

    /// Mean over valid positions for every channel.
    pub fn masked_mean(&self) -> Vec<f64> {
        let n_valid = self.mask.iter().filter(|&&m| m).count();
        (0..self.channels)
            .map(|c| {
                if n_valid == 0 {
                    return 0.0;
                }
                let sum: f64 = self
                    .channel(c)
                    .iter()
                    .zip(&self.mask)
                    .filter(|(_, &m)| m)
                    .map(|(v, _)| v)
                    .sum();
                sum / n_valid as f64
            })
            .collect()
    }

    /// Angle inputs of the window at output position `t` of channel `c`.
    pub fn window_inputs(&self, spec: &ConvSpec, c: usize, t: usize) -> Vec<f64> {
        spec.window(self.length, t)
            .map(|pos| pos.map_or(0.0, |p| self.get(c, p)))
            .collect()
    }

    pub(crate) fn output_mask(&self, spec: &ConvSpec) -> Vec<bool> {
        (0..spec.output_len(self.length))
            .map(|t| self.mask[spec.center(self.length, t)])
            .collect()
    }
}

fn kernel_vqc(p: &AnsatzParameters) -> AngleVqc {
    AngleVqc {
        n_qubits: p.n_qubits(),
        depth: p.depth(),
        readout: Readout::Summed,
    }
}

/// Runs one kernel on one window: angle-encode the `K` inputs, apply the
/// ansatz, sum every qubit's ⟨Z⟩.
pub fn kernel_window(window: &[f64], p: &AnsatzParameters) -> Result<f64> {
    let mut angles = window.to_vec();
    angles.extend_from_slice(p.angles());
    let mut out = [0.0];
    kernel_vqc(p).run(&angles, &mut out)?;
    Ok(out[0])
}

fn check_kernel(p: &AnsatzParameters, spec: &ConvSpec) -> Result<()> {
    spec.validate()?;
    if p.n_qubits() != spec.kernel_size {
        return Err(Error::Config(format!(
            "kernel circuit has {} qubits but kernel size is {}",
            p.n_qubits(),
            spec.kernel_size
        )));
    }
    Ok(())
}

/// One shared kernel circuit slid over every channel independently. Output
/// has the same channel count as the input; output positions whose mask bit
/// is false are zeroed. Runs `C × ⌈m/S⌉` circuits.
pub fn quantum_depthwise_conv1d(
    x: &ChannelSequence,
    p: &AnsatzParameters,
    spec: &ConvSpec,
) -> Result<ChannelSequence> {
    check_kernel(p, spec)?;
    let out_len = spec.output_len(x.len());
    let mut values = Vec::with_capacity(x.channels() * out_len);
    for c in 0..x.channels() {
        for t in 0..out_len {
            values.push(kernel_window(&x.window_inputs(spec, c, t), p)?);
        }
    }
    ChannelSequence::new(x.channels(), out_len, values, x.output_mask(spec))
}

/// `C_out × C_in` grid of kernel circuits, row-major by output channel.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelGrid {
    pub c_out: usize,
    pub c_in: usize,
    pub kernels: Vec<AnsatzParameters>,
}

impl KernelGrid {
    pub fn kernel(&self, j: usize, i: usize) -> &AnsatzParameters {
        &self.kernels[j * self.c_in + i]
    }
}

/// Output channel `j` at window `t` is `Σᵢ kernel(j,i)(window of channel i)`.
/// Runs `C_in × C_out × ⌈m/S⌉` circuits.
pub fn quantum_standard_conv1d(
    x: &ChannelSequence,
    grid: &KernelGrid,
    spec: &ConvSpec,
) -> Result<ChannelSequence> {
    if grid.c_in != x.channels() || grid.kernels.len() != grid.c_in * grid.c_out || grid.c_out == 0
    {
        return Err(Error::Config(format!(
            "kernel grid {}x{} with {} kernels does not fit {} input channels",
            grid.c_out,
            grid.c_in,
            grid.kernels.len(),
            x.channels()
        )));
    }
    for k in &grid.kernels {
        check_kernel(k, spec)?;
    }
    let out_len = spec.output_len(x.len());
    let mut values = vec![0.0; grid.c_out * out_len];
    for t in 0..out_len {
        let windows: Vec<Vec<f64>> = (0..grid.c_in)
            .map(|i| x.window_inputs(spec, i, t))
            .collect();
        for j in 0..grid.c_out {
            let mut acc = 0.0;
            for (i, w) in windows.iter().enumerate() {
                acc += kernel_window(w, grid.kernel(j, i))?;
            }
            values[j * out_len + t] = acc;
        }
    }
    ChannelSequence::new(grid.c_out, out_len, values, x.output_mask(spec))
}

/// Trainable-parameter layout of one layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerDescription {
    /// Embedding or fully connected layer: one BasicEntangler circuit.
    Entangler { n_qubits: usize, depth: usize },
    /// Stack of `n_layers` depthwise layers, one shared kernel each.
    DepthwiseConv {
        kernel_size: usize,
        depth: usize,
        n_layers: usize,
    },
    /// Stack of standard layers, a `C_out × C_in` kernel grid each.
    StandardConv {
        c_in: usize,
        c_out: usize,
        kernel_size: usize,
        depth: usize,
        n_layers: usize,
    },
}

pub fn layer_param_count(layer: LayerDescription) -> usize {
    match layer {
        LayerDescription::Entangler { n_qubits, depth } => n_qubits * depth,
        LayerDescription::DepthwiseConv {
            kernel_size,
            depth,
            n_layers,
        } => n_layers * kernel_size * depth,
        LayerDescription::StandardConv {
            c_in,
            c_out,
            kernel_size,
            depth,
            n_layers,
        } => n_layers * c_in * c_out * kernel_size * depth,
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::instrument::CircuitTally;

    fn k3() -> ConvSpec {
        ConvSpec {
            kernel_size: 3,
            stride: 1,
            n_layers: 1,
        }
    }

    fn seq(c: usize, m: usize, f: impl Fn(usize, usize) -> f64) -> ChannelSequence {
        let values = (0..c)
            .flat_map(|ci| (0..m).map(move |t| (ci, t)))
            .map(|(ci, t)| f(ci, t))
            .collect();
        ChannelSequence::new(c, m, values, vec![true; m]).unwrap()
    }

    /// Image of a basis index under one CNOT ring, by bit manipulation.
    fn ring_image(mut index: usize, n: usize) -> usize {
        for (c, t) in ring_pairs(n) {
            if index >> (n - 1 - c) & 1 == 1 {
                index ^= 1 << (n - 1 - t);
            }
        }
        index
    }

    fn bit_pattern(index: usize, n: usize) -> Vec<f64> {
        (0..n)
            .map(|q| {
                if index >> (n - 1 - q) & 1 == 0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect()
    }

    #[test]
    fn word_embedding_zero_angles_gives_ring_permuted_bits() {
        // Ry(0) is the identity but the CNOT ring still permutes basis
        // states: 00101 -> 00110.
        let p = AnsatzParameters::zeros(5, 1).unwrap();
        assert_eq!(ring_image(5, 5), 0b00110);
        assert_eq!(
            quantum_word_embed(5, 17, &p).unwrap(),
            vec![1.0, 1.0, -1.0, -1.0, 1.0]
        );
        for n_vocab in [17, 115] {
            let n = qubits_for_len(n_vocab);
            let p = AnsatzParameters::zeros(n, 1).unwrap();
            for i in 0..n_vocab {
                assert_eq!(
                    quantum_word_embed(i, n_vocab, &p).unwrap(),
                    bit_pattern(ring_image(i, n), n)
                );
            }
        }
        assert_eq!(qubits_for_len(17), 5);
        assert_eq!(qubits_for_len(115), 7);
        assert!(matches!(
            quantum_word_embed(17, 17, &p),
            Err(Error::Lookup(_))
        ));
        assert!(quantum_word_embed(3, 17, &AnsatzParameters::zeros(4, 1).unwrap()).is_err());
    }

    #[test]
    fn sentence_embedding_cases() {
        let p = AnsatzParameters::new(5, 2, (0..10).map(|i| i as f64 * 0.37).collect()).unwrap();
        let mut single = vec![0.0; 17];
        single[9] = 0.8;
        assert_eq!(
            quantum_sentence_embed(&single, &p).unwrap(),
            quantum_word_embed(9, 17, &p).unwrap()
        );

        let z = quantum_sentence_embed(&[1.0; 4], &AnsatzParameters::zeros(2, 1).unwrap()).unwrap();
        assert_abs_diff_eq!(z[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z[1], 0.0, epsilon = 1e-15);

        assert!(matches!(
            quantum_sentence_embed(&[0.0; 17], &p),
            Err(Error::DegenerateVector { .. })
        ));
    }

    #[test]
    fn fully_connected_cases() {
        let p = AnsatzParameters::zeros(5, 1).unwrap();
        assert_eq!(
            quantum_fully_connected(&[0.0; 5], &p).unwrap(),
            vec![1.0; 5]
        );
        assert_eq!(p.param_count(), 5);
        assert!(quantum_fully_connected(&[0.0; 4], &p).is_err());
    }

    #[test]
    fn zero_window_sums_to_kernel_size() {
        let x = seq(1, 4, |_, _| 0.0);
        let y =
            quantum_depthwise_conv1d(&x, &AnsatzParameters::zeros(3, 1).unwrap(), &k3()).unwrap();
        assert_eq!(y.values(), &[3.0; 4]);
    }

    #[test]
    fn identical_channels_stay_identical() {
        let x = seq(2, 5, |_, t| 0.3 * t as f64 - 0.4);
        let p = AnsatzParameters::new(3, 2, vec![0.1, 0.9, -1.3, 2.2, 0.5, 1.7]).unwrap();
        let y = quantum_depthwise_conv1d(&x, &p, &k3()).unwrap();
        assert_eq!(y.channel(0), y.channel(1));
    }

    #[test]
    fn standard_zero_input_sums_over_input_channels() {
        let x = seq(2, 4, |_, _| 0.0);
        let grid = KernelGrid {
            c_out: 1,
            c_in: 2,
            kernels: vec![AnsatzParameters::zeros(3, 1).unwrap(); 2],
        };
        let y = quantum_standard_conv1d(&x, &grid, &k3()).unwrap();
        assert_eq!(y.values(), &[6.0; 4]);
    }

    #[test]
    fn standard_with_one_channel_equals_depthwise() {
        let x = seq(1, 4, |_, t| [0.3, -1.1, 2.0, 0.7][t]);
        let p = AnsatzParameters::new(3, 1, vec![0.5, -0.2, 1.4]).unwrap();
        let grid = KernelGrid {
            c_out: 1,
            c_in: 1,
            kernels: vec![p.clone()],
        };
        assert_eq!(
            quantum_standard_conv1d(&x, &grid, &k3()).unwrap(),
            quantum_depthwise_conv1d(&x, &p, &k3()).unwrap()
        );
    }

    #[test]
    fn execution_counts() {
        let x = seq(5, 4, |c, t| (c * 4 + t) as f64 * 0.1);
        let p = AnsatzParameters::zeros(3, 1).unwrap();
        let tally = CircuitTally::start();
        quantum_depthwise_conv1d(&x, &p, &k3()).unwrap();
        assert_eq!(tally.count(), 5 * 4);

        let grid = KernelGrid {
            c_out: 5,
            c_in: 5,
            kernels: vec![p; 25],
        };
        let tally = CircuitTally::start();
        quantum_standard_conv1d(&x, &grid, &k3()).unwrap();
        assert_eq!(tally.count(), 25 * 4);
    }

    #[test]
    fn parameter_counts() {
        let std = LayerDescription::StandardConv {
            c_in: 5,
            c_out: 5,
            kernel_size: 3,
            depth: 1,
            n_layers: 1,
        };
        let dw = LayerDescription::DepthwiseConv {
            kernel_size: 3,
            depth: 1,
            n_layers: 1,
        };
        assert_eq!(layer_param_count(std), 75);
        assert_eq!(layer_param_count(dw), 3);
        assert_eq!(
            layer_param_count(LayerDescription::Entangler {
                n_qubits: 7,
                depth: 5
            }),
            35
        );
    }

    #[test]
    fn same_padding_windows() {
        let spec = k3();
        assert_eq!(
            spec.window(4, 0).collect::<Vec<_>>(),
            vec![None, Some(0), Some(1)]
        );
        assert_eq!(
            spec.window(4, 3).collect::<Vec<_>>(),
            vec![Some(2), Some(3), None]
        );
        assert_eq!(spec.output_len(4), 4);
        let strided = ConvSpec {
            kernel_size: 3,
            stride: 2,
            n_layers: 1,
        };
        assert_eq!(strided.output_len(5), 3);
        assert_eq!(
            strided.window(5, 0).collect::<Vec<_>>(),
            vec![None, Some(0), Some(1)]
        );
        assert_eq!(
            strided.window(5, 2).collect::<Vec<_>>(),
            vec![Some(3), Some(4), None]
        );
        assert_eq!(strided.center(5, 1), 2);
    }

    #[test]
    fn masked_columns_are_zero_and_excluded_from_mean() {
        let x = ChannelSequence::new(
            1,
            4,
            vec![1.0, 2.0, 3.0, 9.0],
            vec![true, true, true, false],
        )
        .unwrap();
        assert_eq!(x.values(), &[1.0, 2.0, 3.0, 0.0]);
        assert_eq!(x.masked_mean(), vec![2.0]);
        let y =
            quantum_depthwise_conv1d(&x, &AnsatzParameters::zeros(3, 1).unwrap(), &k3()).unwrap();
        assert_eq!(y.mask(), x.mask());
        assert_eq!(y.get(0, 3), 0.0);
    }
}
