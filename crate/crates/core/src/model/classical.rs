//! Classical counterparts: embedding table, linear 1-D convolutions, dense
//! sentence projection and dense head, with hand-written backpropagation.
//! Activations are identity throughout.

use crate::error::Result;
use crate::layers::ChannelSequence;
use crate::model::{
    cross_entropy, logit_gradient, window_sources, Branches, ClassProbabilities, ConvKind,
    ExampleGradient, Model,
};
use crate::text::EncodedExample;

struct Trace {
    conv_inputs: Vec<ChannelSequence>,
    output: ChannelSequence,
    fused: Vec<f64>,
    probs: ClassProbabilities,
}

/// `[E][E][K]` weights followed by `E` biases for standard convolution; `K`
/// shared weights and one shared bias for depthwise.
fn conv_forward(model: &Model, layer: usize, x: &ChannelSequence) -> Result<ChannelSequence> {
    let cfg = &model.config;
    let theta = &model.params.values[model.layout().conv[layer].clone()];
    let spec = cfg.conv_spec();
    let (k, c) = (cfg.kernel, x.channels());
    let out_len = spec.output_len(x.len());
    let mut values = vec![0.0; c * out_len];
    for t in 0..out_len {
        let sources = window_sources(&spec, x.mask(), t);
        match cfg.variant.conv_kind() {
            ConvKind::Depthwise => {
                for ch in 0..c {
                    let mut acc = theta[k];
                    for (kk, src) in sources.iter().enumerate() {
                        if let Some(p) = src {
                            acc += theta[kk] * x.get(ch, *p);
                        }
                    }
                    values[ch * out_len + t] = acc;
                }
            }
            ConvKind::Standard => {
                for j in 0..c {
                    let mut acc = theta[c * c * k + j];
                    for i in 0..c {
                        for (kk, src) in sources.iter().enumerate() {
                            if let Some(p) = src {
                                acc += theta[(j * c + i) * k + kk] * x.get(i, *p);
                            }
                        }
                    }
                    values[j * out_len + t] = acc;
                }
            }
        }
    }
    ChannelSequence::new(c, out_len, values, x.output_mask(&spec))
}

fn trace(model: &Model, ex: &EncodedExample, branches: Branches) -> Result<Trace> {
    let cfg = &model.config;
    let layout = model.layout();
    let values = &model.params.values;
    let (e, n) = (cfg.e, cfg.n_vocab);
    let mut fused = vec![0.0; e];

    let positions: Vec<Vec<f64>> = ex
        .indices
        .iter()
        .zip(&ex.mask)
        .map(|(&idx, &valid)| {
            if branches.word && valid {
                values[layout.word.start + idx * e..layout.word.start + (idx + 1) * e].to_vec()
            } else {
                vec![0.0; e]
            }
        })
        .collect();
    let mut x = ChannelSequence::from_positions(&positions, ex.mask.clone())?;
    let mut conv_inputs = Vec::new();
    if branches.word {
        for layer in 0..cfg.layers {
            let y = conv_forward(model, layer, &x)?;
            conv_inputs.push(x);
            x = y;
        }
        for (f, w) in fused.iter_mut().zip(x.masked_mean()) {
            *f += w;
        }
    }

    if branches.sentence {
        let s0 = layout.sentence.start;
        for (r, f) in fused.iter_mut().enumerate() {
            let row = &values[s0 + r * n..s0 + (r + 1) * n];
            *f +=
                values[s0 + e * n + r] + row.iter().zip(&ex.tfidf).map(|(w, t)| w * t).sum::<f64>();
        }
    }

    let h0 = layout.head.start;
    let logits: Vec<f64> = (0..cfg.n_classes)
        .map(|r| {
            values[h0 + cfg.n_classes * e + r]
                + values[h0 + r * e..h0 + (r + 1) * e]
                    .iter()
                    .zip(&fused)
                    .map(|(w, f)| w * f)
                    .sum::<f64>()
        })
        .collect();
    Ok(Trace {
        conv_inputs,
        output: x,
        fused,
        probs: ClassProbabilities::from_logits(&logits),
    })
}

pub(super) fn forward(
    model: &Model,
    ex: &EncodedExample,
    branches: Branches,
) -> Result<ClassProbabilities> {
    Ok(trace(model, ex, branches)?.probs)
}

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
    let (k, c, m) = (cfg.kernel, x.channels(), x.len());
    let out_len = spec.output_len(m);
    let mut g_x = vec![0.0; c * m];
    for t in 0..out_len {
        let sources = window_sources(&spec, x.mask(), t);
        match cfg.variant.conv_kind() {
            ConvKind::Depthwise => {
                for ch in 0..c {
                    let g = g_out[ch * out_len + t];
                    g_theta[k] += g;
                    for (kk, src) in sources.iter().enumerate() {
                        if let Some(p) = src {
                            g_theta[kk] += g * x.get(ch, *p);
                            g_x[ch * m + p] += g * theta[kk];
                        }
                    }
                }
            }
            ConvKind::Standard => {
                for j in 0..c {
                    let g = g_out[j * out_len + t];
                    g_theta[c * c * k + j] += g;
                    for i in 0..c {
                        for (kk, src) in sources.iter().enumerate() {
                            if let Some(p) = src {
                                let w = (j * c + i) * k + kk;
                                g_theta[w] += g * x.get(i, *p);
                                g_x[i * m + p] += g * theta[w];
                            }
                        }
                    }
                }
            }
        }
    }
    g_x
}

pub(super) fn loss_and_gradient(model: &Model, ex: &EncodedExample) -> Result<ExampleGradient> {
    let cfg = &model.config;
    let layout = model.layout();
    let values = &model.params.values;
    let (e, n, nc) = (cfg.e, cfg.n_vocab, cfg.n_classes);
    let branches = Branches::of(cfg.variant);
    let tr = trace(model, ex, branches)?;
    let loss = cross_entropy(&tr.probs, ex.label);
    let mut grad = vec![0.0; layout.total];

    let g_logits = logit_gradient(&tr.probs, ex.label);
    let h0 = layout.head.start;
    let mut g_fused = vec![0.0; e];
    for (r, &g) in g_logits.iter().enumerate() {
        grad[h0 + nc * e + r] += g;
        for q in 0..e {
            grad[h0 + r * e + q] += g * tr.fused[q];
            g_fused[q] += g * values[h0 + r * e + q];
        }
    }

    if branches.sentence {
        let s0 = layout.sentence.start;
        for (r, &g) in g_fused.iter().enumerate() {
            grad[s0 + e * n + r] += g;
            for (w, &t) in grad[s0 + r * n..s0 + (r + 1) * n].iter_mut().zip(&ex.tfidf) {
                *w += g * t;
            }
        }
    }

    if branches.word {
        let out = &tr.output;
        let n_valid = ex.n_tokens() as f64;
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
            g_seq = conv_backward(model, layer, &tr.conv_inputs[layer], &g_seq, &mut g_theta);
            for (d, s) in grad[r].iter_mut().zip(&g_theta) {
                *d += s;
            }
        }
        let m = cfg.m;
        let w0 = layout.word.start;
        for (t, (&idx, &valid)) in ex.indices.iter().zip(&ex.mask).enumerate() {
            if valid {
                for q in 0..e {
                    grad[w0 + idx * e + q] += g_seq[q * m + t];
                }
            }
        }
    }

    Ok(ExampleGradient {
        loss,
        probs: tr.probs,
        grad,
    })
}
