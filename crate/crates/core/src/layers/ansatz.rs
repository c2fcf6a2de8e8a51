use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevector::Statevector;

/// Rotation angles of a BasicEntangler circuit, stored row-major as
/// `[depth][n_qubits]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzParameters {
    n_qubits: usize,
    depth: usize,
    angles: Vec<f64>,
}

impl AnsatzParameters {
    pub fn new(n_qubits: usize, depth: usize, angles: Vec<f64>) -> Result<Self> {
        if n_qubits == 0 || depth == 0 {
            return Err(Error::Config(format!(
                "ansatz needs at least one qubit and one layer, got {n_qubits} qubits x depth {depth}"
            )));
        }
        if angles.len() != n_qubits * depth {
            return Err(Error::Config(format!(
                "ansatz {depth}x{n_qubits} needs {} angles, got {}",
                n_qubits * depth,
                angles.len()
            )));
        }
        if let Some(bad) = angles.iter().find(|a| !a.is_finite()) {
            return Err(Error::NumericInput(format!("ansatz angle {bad}")));
        }
        Ok(AnsatzParameters {
            n_qubits,
            depth,
            angles,
        })
    }

    pub fn zeros(n_qubits: usize, depth: usize) -> Result<Self> {
        Self::new(n_qubits, depth, vec![0.0; n_qubits * depth])
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn angle(&self, layer: usize, qubit: usize) -> f64 {
        self.angles[layer * self.n_qubits + qubit]
    }

    pub fn param_count(&self) -> usize {
        self.angles.len()
    }
}

/// CNOT (control, target) pairs of the closed ring on `n` qubits.
///
/// Two qubits get a single CNOT(0→1) and one qubit gets none.
pub fn ring_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    let count = match n {
        0 | 1 => 0,
        2 => 1,
        _ => n,
    };
    (0..count).map(move |q| (q, (q + 1) % n))
}

/// Applies `depth` BasicEntangler layers with angles given row-major.
pub(crate) fn apply_layers(state: &mut Statevector, depth: usize, angles: &[f64]) -> Result<()> {
    let n = state.n_qubits();
    debug_assert_eq!(angles.len(), n * depth);
    for layer in angles.chunks_exact(n) {
        for (q, &theta) in layer.iter().enumerate() {
            state.apply_ry(q, theta)?;
        }
        for (c, t) in ring_pairs(n) {
            state.apply_cnot(c, t)?;
        }
    }
    Ok(())
}

/// Each layer: `Ry(angles[d][q])` on every qubit, then the CNOT ring
/// `q → q+1 mod n`.
pub fn apply_basic_entangler(state: &mut Statevector, p: &AnsatzParameters) -> Result<()> {
    if state.n_qubits() != p.n_qubits {
        return Err(Error::Config(format!(
            "ansatz built for {} qubits applied to a {}-qubit state",
            p.n_qubits,
            state.n_qubits()
        )));
    }
    apply_layers(state, p.depth, &p.angles)
}
