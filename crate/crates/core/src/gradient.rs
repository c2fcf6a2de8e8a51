//! Exact circuit gradients by the parameter-shift rule, plus a central
//! finite-difference oracle.
//!
//! Every angle in this crate drives an `Ry` gate, so shifting one angle by
//! `±π/2` gives the exact derivative of any Pauli-Z expectation:
//! `∂f/∂aᵢ = [f(aᵢ + π/2) - f(aᵢ - π/2)] / 2`. Data-encoding angles are
//! treated exactly like trainable ones, which is what lets stacked layers
//! chain gradients through their inputs. Amplitude-encoded embedding circuits
//! can instead be differentiated by an adjoint sweep, see
//! [`EmbeddingGradient`].

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

/// Default finite-difference step for the oracle.
pub const FD_STEP: f64 = 1e-4;

/// How the amplitude-encoded embedding circuits are differentiated. Their
/// inputs are data, so only the ansatz angles need derivatives; angle-encoded
/// circuits always use the parameter-shift rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingGradient {
    /// One forward and one reverse statevector sweep per circuit.
    #[default]
    Adjoint,
    /// Two shifted executions per ansatz angle.
    ParameterShift,
}

/// A deterministic vector-valued function of a flat angle vector.
pub trait VectorCircuit {
    fn arity(&self) -> usize;
    fn output_len(&self) -> usize;
    fn evaluate_into(&self, angles: &[f64], out: &mut [f64]);

    fn evaluate(&self, angles: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.output_len()];
        self.evaluate_into(angles, &mut out);
        out
    }
}

/// A deterministic scalar-valued function of a flat angle vector.
pub trait ScalarCircuit {
    fn arity(&self) -> usize;
    fn evaluate(&self, angles: &[f64]) -> f64;
}

/// Wraps a closure as a [`ScalarCircuit`].
pub struct FnCircuit<F> {
    arity: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64> FnCircuit<F> {
    pub fn new(arity: usize, f: F) -> Self {
        FnCircuit { arity, f }
    }
}

impl<F: Fn(&[f64]) -> f64> ScalarCircuit for FnCircuit<F> {
    fn arity(&self) -> usize {
        self.arity
    }

    fn evaluate(&self, angles: &[f64]) -> f64 {
        (self.f)(angles)
    }
}

/// Weighted sum of the outputs of a vector circuit, `Σₖ wₖ·fₖ`.
pub struct Contracted<'a, C: ?Sized> {
    pub circuit: &'a C,
    pub weights: &'a [f64],
}

impl<C: VectorCircuit + ?Sized> ScalarCircuit for Contracted<'_, C> {
    fn arity(&self) -> usize {
        self.circuit.arity()
    }

    fn evaluate(&self, angles: &[f64]) -> f64 {
        self.circuit
            .evaluate(angles)
            .iter()
            .zip(self.weights)
            .map(|(f, w)| f * w)
            .sum()
    }
}

/// Gradient of a scalar circuit, one entry per angle.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientVector {
    pub values: Vec<f64>,
}

/// Row-major `output_len × arity` matrix of partial derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct Jacobian {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl Jacobian {
    pub fn get(&self, output: usize, angle: usize) -> f64 {
        self.values[output * self.cols + angle]
    }

    /// `uᵀ J`: the gradient of `Σₖ uₖ fₖ` with respect to every angle.
    pub fn vjp(&self, upstream: &[f64]) -> Vec<f64> {
        assert_eq!(upstream.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &u) in upstream.iter().enumerate() {
            if u == 0.0 {
                continue;
            }
            let row = &self.values[r * self.cols..(r + 1) * self.cols];
            for (o, &j) in out.iter_mut().zip(row) {
                *o += u * j;
            }
        }
        out
    }
}

fn shifted(angles: &[f64], i: usize, delta: f64) -> Vec<f64> {
    let mut a = angles.to_vec();
    a[i] += delta;
    a
}

/// `[c(aᵢ + π/2) - c(aᵢ - π/2)] / 2`.
pub fn parameter_shift_grad<C: ScalarCircuit + ?Sized>(c: &C, angles: &[f64], i: usize) -> f64 {
    assert!(i < c.arity(), "angle index {i} out of range");
    let plus = c.evaluate(&shifted(angles, i, FRAC_PI_2));
    let minus = c.evaluate(&shifted(angles, i, -FRAC_PI_2));
    (plus - minus) / 2.0
}

/// `[c(aᵢ + h) - c(aᵢ - h)] / 2h`.
pub fn finite_diff_grad<C: ScalarCircuit + ?Sized>(c: &C, angles: &[f64], i: usize, h: f64) -> f64 {
    assert!(i < c.arity(), "angle index {i} out of range");
    let plus = c.evaluate(&shifted(angles, i, h));
    let minus = c.evaluate(&shifted(angles, i, -h));
    (plus - minus) / (2.0 * h)
}

/// Parameter-shift derivative at every angle, data-encoding angles included.
pub fn full_gradient<C: ScalarCircuit + ?Sized>(c: &C, angles: &[f64]) -> GradientVector {
    GradientVector {
        values: (0..c.arity())
            .map(|i| parameter_shift_grad(c, angles, i))
            .collect(),
    }
}

/// Parameter-shift Jacobian of a vector circuit restricted to the angles in
/// `wrt` (columns appear in that order). Costs `2·wrt.len()` evaluations.
pub fn parameter_shift_jacobian<C: VectorCircuit + ?Sized>(
    c: &C,
    angles: &[f64],
    wrt: std::ops::Range<usize>,
) -> Jacobian {
    assert!(wrt.end <= c.arity());
    let rows = c.output_len();
    let cols = wrt.len();
    let mut values = vec![0.0; rows * cols];
    let mut work = angles.to_vec();
    let mut plus = vec![0.0; rows];
    let mut minus = vec![0.0; rows];
    for (col, i) in wrt.enumerate() {
        let a = work[i];
        work[i] = a + FRAC_PI_2;
        c.evaluate_into(&work, &mut plus);
        work[i] = a - FRAC_PI_2;
        c.evaluate_into(&work, &mut minus);
        work[i] = a;
        for r in 0..rows {
            values[r * cols + col] = (plus[r] - minus[r]) / 2.0;
        }
    }
    Jacobian { rows, cols, values }
}

/// Central-difference Jacobian over every angle.
pub fn finite_diff_jacobian<C: VectorCircuit + ?Sized>(c: &C, angles: &[f64], h: f64) -> Jacobian {
    let rows = c.output_len();
    let cols = c.arity();
    let mut values = vec![0.0; rows * cols];
    for i in 0..cols {
        let plus = c.evaluate(&shifted(angles, i, h));
        let minus = c.evaluate(&shifted(angles, i, -h));
        for r in 0..rows {
            values[r * cols + i] = (plus[r] - minus[r]) / (2.0 * h);
        }
    }
    Jacobian { rows, cols, values }
}

/// Relative error with an absolute floor, `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
