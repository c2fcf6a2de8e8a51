//! The two variational circuit shapes used by every quantum layer.

use std::f64::consts::PI;

use crate::error::Result;
use crate::gradient::VectorCircuit;
use crate::instrument;
use crate::layers::ansatz::{apply_layers, ring_pairs};
use crate::statevector::{init_zero, Statevector};

/// How a circuit's per-qubit ⟨Z⟩ values are reported.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Readout {
    /// One ⟨Z⟩ per qubit.
    PerQubit,
    /// Σ_q ⟨Z_q⟩ as a single scalar (convolution kernels).
    Summed,
}

impl Readout {
    fn len(self, n_qubits: usize) -> usize {
        match self {
            Readout::PerQubit => n_qubits,
            Readout::Summed => 1,
        }
    }
}

fn finish(state: &Statevector, readout: Readout, out: &mut [f64]) {
    instrument::record_execution();
    if instrument::audit_enabled() {
        instrument::audit_norm(state.norm_sqr());
    }
    match readout {
        Readout::PerQubit => state.z_expectations_into(out),
        Readout::Summed => {
            let mut z = vec![0.0; state.n_qubits()];
            state.z_expectations_into(&mut z);
            out[0] = z.iter().sum();
        }
    }
}

/// Angle encoding followed by a BasicEntangler ansatz.
///
/// The angle vector is `[inputs (n_qubits), ansatz angles (depth·n_qubits)]`.
#[derive(Clone, Copy, Debug)]
pub struct AngleVqc {
    pub n_qubits: usize,
    pub depth: usize,
    pub readout: Readout,
}

impl AngleVqc {
    pub fn run(&self, angles: &[f64], out: &mut [f64]) -> Result<()> {
        let (inputs, params) = angles.split_at(self.n_qubits);
        let mut state = init_zero(self.n_qubits)?;
        for (q, &x) in inputs.iter().enumerate() {
            state.apply_ry(q, x)?;
        }
        apply_layers(&mut state, self.depth, params)?;
        finish(&state, self.readout, out);
        Ok(())
    }
}

impl VectorCircuit for AngleVqc {
    fn arity(&self) -> usize {
        self.n_qubits * (1 + self.depth)
    }

    fn output_len(&self) -> usize {
        self.readout.len(self.n_qubits)
    }

    fn evaluate_into(&self, angles: &[f64], out: &mut [f64]) {
        if self.run(angles, out).is_err() {
            out.iter_mut().for_each(|v| *v = f64::NAN);
        }
    }
}

/// A fixed prepared state (amplitude-encoded data) followed by a
/// BasicEntangler ansatz; only the ansatz angles are circuit arguments.
#[derive(Clone, Copy, Debug)]
pub struct PreparedVqc<'a> {
    pub prepared: &'a Statevector,
    pub depth: usize,
}

impl PreparedVqc<'_> {
    pub fn run(&self, params: &[f64], out: &mut [f64]) -> Result<()> {
        let mut state = self.prepared.clone();
        apply_layers(&mut state, self.depth, params)?;
        finish(&state, Readout::PerQubit, out);
        Ok(())
    }

    /// Writes the outputs to `out` and returns `Σ_q upstream[q]·∂⟨Z_q⟩/∂θ`
    /// by adjoint differentiation: one forward sweep, then the gates are
    /// undone one by one while a co-state carries the observable back.
    /// Counts as a single circuit execution.
    pub fn adjoint_vjp(
        &self,
        params: &[f64],
        upstream: &[f64],
        out: &mut [f64],
    ) -> Result<Vec<f64>> {
        let n = self.prepared.n_qubits();
        let mut psi = self.prepared.clone();
        apply_layers(&mut psi, self.depth, params)?;
        finish(&psi, Readout::PerQubit, out);
        let mut lambda = psi.clone();
        lambda.apply_weighted_z(upstream);
        let pairs: Vec<(usize, usize)> = ring_pairs(n).collect();
        let mut grad = vec![0.0; params.len()];
        for (d, layer) in params.chunks_exact(n).enumerate().rev() {
            for &(c, t) in pairs.iter().rev() {
                psi.apply_cnot(c, t)?;
                lambda.apply_cnot(c, t)?;
            }
            for (q, &theta) in layer.iter().enumerate().rev() {
                psi.apply_ry(q, -theta)?;
                // ∂Ry(θ)/∂θ = Ry(θ + π) / 2
                let mut mu = psi.clone();
                mu.apply_ry(q, theta + PI)?;
                grad[d * n + q] = lambda.overlap_re(&mu);
                lambda.apply_ry(q, -theta)?;
            }
        }
        Ok(grad)
    }
}

impl VectorCircuit for PreparedVqc<'_> {
    fn arity(&self) -> usize {
        self.prepared.n_qubits() * self.depth
    }

    fn output_len(&self) -> usize {
        self.prepared.n_qubits()
    }

    fn evaluate_into(&self, angles: &[f64], out: &mut [f64]) {
        if self.run(angles, out).is_err() {
            out.iter_mut().for_each(|v| *v = f64::NAN);
        }
    }
}
