//! Forward pass and parameter-shift backpropagation for the quantum variants.

use crate::error::Result;
use crate::gradient::{parameter_shift_jacobian, EmbeddingGradient, VectorCircuit};
use crate::layers::{
    one_hot, quantum_depthwise_conv1d, quantum_standard_conv1d, AngleVqc, AnsatzParameters,
    ChannelSequence, KernelGrid, PreparedVqc, Readout,
};
use crate::model::{
    cross_entropy, logit_gradient, window_sources, Branches, ClassProbabilities, ConvKind,
    ExampleGradient, Model,
};
use crate::statevector::{amplitude_encode, Statevector};
use crate::text::EncodedExample;

struct WordTrace {
    /// Amplitude-encoded one-hot state of each valid position.
    prepared: Vec<Option<Statevector>>,
    /// Input of every convolution layer (index 0 holds the embeddings).
    conv_inputs: Vec<ChannelSequence>,
    output: ChannelSequence,
}

struct Trace {
    word: Option<WordTrace>,
    sentence: Option<Statevector>,
    fused: Vec<f64>,
    probs: ClassProbabilities,
}

fn conv_layer(model: &Model, layer: usize, x: &ChannelSequence) -> Result<ChannelSequence> {
    let cfg = &model.config;
    let layout = model.layout();
    let theta = &model.params.values[layout.conv[layer].clone()];
    let spec = cfg.conv_spec();
    let per_kernel = cfg.d_qconv * cfg.kernel;
    match cfg.variant.conv_kind() {
        ConvKind::Depthwise => {
            let p = AnsatzParameters::new(cfg.kernel, cfg.d_qconv, theta.to_vec())?;
            quantum_depthwise_conv1d(x, &p, &spec)
        }
        ConvKind::Standard => {
            let kernels = theta
                .chunks_exact(per_kernel)
                .map(|k| AnsatzParameters::new(cfg.kernel, cfg.d_qconv, k.to_vec()))
                .collect::<Result<Vec<_>>>()?;
            let grid = KernelGrid {
                c_out: cfg.e,
                c_in: cfg.e,
                kernels,
            };
            quantum_standard_conv1d(x, &grid, &spec)
        }
    }
}

fn run_prepared(prepared: &Statevector, depth: usize, theta: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; prepared.n_qubits()];
    PreparedVqc { prepared, depth }.run(theta, &mut out)?;
    Ok(out)
}

fn head_vqc(model: &Model) -> AngleVqc {
    AngleVqc {
        n_qubits: model.config.n_qfc,
        depth: model.config.d_qfc,
        readout: Readout::PerQubit,
    }
}

fn trace(model: &Model, ex: &EncodedExample, branches: Branches) -> Result<Trace> {
    let cfg = &model.config;
    let layout = model.layout();
    let values = &model.params.values;
    let e = cfg.e;
    let mut fused = vec![0.0; e];

    let word = if branches.word {
        let theta = &values[layout.word.clone()];
        let mut prepared = Vec::with_capacity(cfg.m);
        let mut positions = Vec::with_capacity(cfg.m);
        for (&idx, &valid) in ex.indices.iter().zip(&ex.mask) {
            if valid {
                let state = amplitude_encode(&one_hot(idx, cfg.n_vocab)?, e)?;
                positions.push(run_prepared(&state, cfg.d_qemb, theta)?);
                prepared.push(Some(state));
            } else {
                positions.push(vec![0.0; e]);
                prepared.push(None);
            }
        }
        let mut x = ChannelSequence::from_positions(&positions, ex.mask.clone())?;
        let mut conv_inputs = Vec::with_capacity(cfg.layers);
        for layer in 0..cfg.layers {
            let y = conv_layer(model, layer, &x)?;
            conv_inputs.push(x);
            x = y;
        }
        for (f, w) in fused.iter_mut().zip(x.masked_mean()) {
            *f += w;
        }
        Some(WordTrace {
            prepared,
            conv_inputs,
            output: x,
        })
    } else {
        None
    };

    let sentence = if branches.sentence {
        let state = amplitude_encode(&ex.tfidf, e)?;
        let s = run_prepared(&state, cfg.d_qemb, &values[layout.sentence.clone()])?;
        for (f, v) in fused.iter_mut().zip(s) {
            *f += v;
        }
        Some(state)
    } else {
        None
    };

    let mut angles = fused.clone();
    angles.extend_from_slice(&values[layout.head.clone()]);
    let mut head_out = vec![0.0; cfg.n_qfc];
    head_vqc(model).run(&angles, &mut head_out)?;
    let probs = ClassProbabilities::from_logits(&head_out[..cfg.n_classes]);
    Ok(Trace {
        word,
        sentence,
        fused,
        probs,
    })
}

pub(super) fn forward(
    model: &Model,
    ex: &EncodedExample,
    branches: Branches,
) -> Result<ClassProbabilities> {
    Ok(trace(model, ex, branches)?.probs)
}

fn accumulate(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// Backpropagates `g_out` (shape `[C_out][out_len]`) through one convolution
/// layer, adding parameter gradients into `g_theta` and returning the
/// gradient with respect to the layer input `[C_in][m]`.
fn conv_backward(
    model: &Model,
    layer: usize,
    x: &ChannelSequence,
    g_out: &[f64],
    g_theta: &mut [f64],
) -> Vec<f64> {
    let cfg = &model.config;
    let theta = &model.params.values[model.layout().conv[layer].clone()];
    let spec = cfg.conv_spec();
    let (k, m) = (cfg.kernel, x.len());
    let out_len = spec.output_len(m);
    let per_kernel = cfg.d_qconv * k;
    let vqc = AngleVqc {
        n_qubits: k,
        depth: cfg.d_qconv,
        readout: Readout::Summed,
    };
    let mut g_x = vec![0.0; x.channels() * m];
    let mut angles = vec![0.0; vqc.arity()];
    let mut visit = |c_in: usize, c_out: usize, t: usize, kernel: &[f64], g_kernel: &mut [f64]| {
        let sources = window_sources(&spec, x.mask(), t);
        for (slot, src) in angles[..k].iter_mut().zip(&sources) {
            *slot = src.map_or(0.0, |p| x.get(c_in, p));
        }
        angles[k..].copy_from_slice(kernel);
        let jac = parameter_shift_jacobian(&vqc, &angles, 0..vqc.arity());
        let g = g_out[c_out * out_len + t];
        for (kk, src) in sources.iter().enumerate() {
            if let Some(p) = src {
                g_x[c_in * m + p] += g * jac.values[kk];
            }
        }
        for (gt, j) in g_kernel.iter_mut().zip(&jac.values[k..]) {
            *gt += g * j;
        }
    };
    match cfg.variant.conv_kind() {
        ConvKind::Depthwise => {
            for c in 0..x.channels() {
                for t in 0..out_len {
                    visit(c, c, t, theta, g_theta);
                }
            }
        }
        ConvKind::Standard => {
            let c_in = x.channels();
            for t in 0..out_len {
                for j in 0..cfg.e {
                    for i in 0..c_in {
                        let r = (j * c_in + i) * per_kernel..(j * c_in + i + 1) * per_kernel;
                        visit(i, j, t, &theta[r.clone()], &mut g_theta[r]);
                    }
                }
            }
        }
    }
    g_x
}

fn embedding_vjp(
    circuit: &PreparedVqc,
    theta: &[f64],
    upstream: &[f64],
    method: EmbeddingGradient,
) -> Result<Vec<f64>> {
    match method {
        EmbeddingGradient::Adjoint => {
            let mut out = vec![0.0; upstream.len()];
            circuit.adjoint_vjp(theta, upstream, &mut out)
        }
        EmbeddingGradient::ParameterShift => {
            Ok(parameter_shift_jacobian(circuit, theta, 0..theta.len()).vjp(upstream))
        }
    }
}

pub(super) fn loss_and_gradient(
    model: &Model,
    ex: &EncodedExample,
    method: EmbeddingGradient,
) -> Result<ExampleGradient> {
    let cfg = &model.config;
    let layout = model.layout();
    let values = &model.params.values;
    let e = cfg.e;
    let tr = trace(model, ex, Branches::of(cfg.variant))?;
    let loss = cross_entropy(&tr.probs, ex.label);
    let mut grad = vec![0.0; layout.total];

    // Head: only the first c outputs feed the softmax.
    let mut g_head_out = vec![0.0; cfg.n_qfc];
    g_head_out[..cfg.n_classes].copy_from_slice(&logit_gradient(&tr.probs, ex.label));
    let head = head_vqc(model);
    let mut angles = tr.fused.clone();
    angles.extend_from_slice(&values[layout.head.clone()]);
    let g_angles = parameter_shift_jacobian(&head, &angles, 0..head.arity()).vjp(&g_head_out);
    let g_fused = &g_angles[..e];
    grad[layout.head.clone()].copy_from_slice(&g_angles[e..]);

    if let Some(state) = &tr.sentence {
        let circuit = PreparedVqc {
            prepared: state,
            depth: cfg.d_qemb,
        };
        let theta = &values[layout.sentence.clone()];
        let g = embedding_vjp(&circuit, theta, g_fused, method)?;
        accumulate(&mut grad[layout.sentence.clone()], &g);
    }

    if let Some(word) = &tr.word {
        let n_valid = ex.n_tokens() as f64;
        let out = &word.output;
        let mut g_seq = vec![0.0; out.channels() * out.len()];
        for c in 0..out.channels() {
            for (t, &valid) in out.mask().iter().enumerate() {
                if valid {
                    g_seq[c * out.len() + t] = g_fused[c] / n_valid;
                }
            }
        }
        for layer in (0..cfg.layers).rev() {
            let r = layout.conv[layer].clone();
            let mut g_theta = vec![0.0; r.len()];
            g_seq = conv_backward(model, layer, &word.conv_inputs[layer], &g_seq, &mut g_theta);
            accumulate(&mut grad[r], &g_theta);
        }
        let theta = &values[layout.word.clone()];
        let m = cfg.m;
        for (t, state) in word.prepared.iter().enumerate() {
            let Some(state) = state else { continue };
            let g_z: Vec<f64> = (0..e).map(|c| g_seq[c * m + t]).collect();
            let circuit = PreparedVqc {
                prepared: state,
                depth: cfg.d_qemb,
            };
            let g = embedding_vjp(&circuit, theta, &g_z, method)?;
            accumulate(&mut grad[layout.word.clone()], &g);
        }
    }

    Ok(ExampleGradient {
        loss,
        probs: tr.probs,
        grad,
    })
}
