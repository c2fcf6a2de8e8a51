//! Dense statevector simulation of small registers.
//!
//! Basis indices are big-endian: qubit 0 is the most significant bit, so for
//! `n` qubits qubit `q` owns bit `n - 1 - q` of the index. Every module in the
//! crate uses this one convention.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 12;

/// Inputs with an L2 norm at or below this are rejected by amplitude encoding.
pub const MIN_ENCODABLE_NORM: f64 = 1e-12;

/// Pure state of an `n`-qubit register as `2^n` complex amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

fn check_register(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::Config(format!(
            "register size {n_qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

/// |0...0⟩ on `n_qubits` qubits.
pub fn init_zero(n_qubits: usize) -> Result<Statevector> {
    check_register(n_qubits)?;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
    amplitudes[0] = Complex64::new(1.0, 0.0);
    Ok(Statevector {
        n_qubits,
        amplitudes,
    })
}

/// Product state `⊗ᵢ Ry(values[i])|0⟩`, one qubit per value.
pub fn angle_encode(values: &[f64]) -> Result<Statevector> {
    if values.is_empty() {
        return Err(Error::Config(
            "angle encoding needs at least one value".into(),
        ));
    }
    let mut state = init_zero(values.len())?;
    for (q, &theta) in values.iter().enumerate() {
        state.apply_ry(q, theta)?;
    }
    Ok(state)
}

/// Number of qubits needed to amplitude-encode `len` values, `⌈log₂ len⌉`
/// (at least one).
pub fn qubits_for_len(len: usize) -> usize {
    if len <= 2 {
        1
    } else {
        (usize::BITS - (len - 1).leading_zeros()) as usize
    }
}

/// Writes `values`, zero-padded to `2^n_qubits` and L2-normalized, into the
/// amplitudes. Input position `i` becomes basis index `i`.
pub fn amplitude_encode(values: &[f64], n_qubits: usize) -> Result<Statevector> {
    check_register(n_qubits)?;
    if values.is_empty() {
        return Err(Error::Config(
            "amplitude encoding needs at least one value".into(),
        ));
    }
    if qubits_for_len(values.len()) != n_qubits {
        return Err(Error::Config(format!(
            "{} values need {} qubits, got {n_qubits}",
            values.len(),
            qubits_for_len(values.len())
        )));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::NumericInput(format!("non-finite amplitude {bad}")));
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= MIN_ENCODABLE_NORM {
        return Err(Error::DegenerateVector { norm });
    }
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
    for (amp, &v) in amplitudes.iter_mut().zip(values) {
        *amp = Complex64::new(v / norm, 0.0);
    }
    Ok(Statevector {
        n_qubits,
        amplitudes,
    })
}

/// Computational basis state `|index⟩`.
pub fn basis_state(index: usize, n_qubits: usize) -> Result<Statevector> {
    check_register(n_qubits)?;
    if index >= 1 << n_qubits {
        return Err(Error::Config(format!(
            "basis index {index} out of range for {n_qubits} qubits"
        )));
    }
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
    amplitudes[index] = Complex64::new(1.0, 0.0);
    Ok(Statevector {
        n_qubits,
        amplitudes,
    })
}

impl Statevector {
    /// Builds a state from raw amplitudes. The length must be a power of two
    /// and the vector must be normalized to within 1e-10.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Config(format!(
                "amplitude vector length {len} is not a power of two >= 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_register(n_qubits)?;
        let state = Statevector {
            n_qubits,
            amplitudes,
        };
        let dev = (state.norm_sqr() - 1.0).abs();
        if dev.is_nan() || dev > 1e-10 {
            return Err(Error::NumericInput(format!(
                "amplitudes are not normalized (|norm² - 1| = {dev:e})"
            )));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Σ|amplitude|².
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn bit_mask(&self, q: usize) -> Result<usize> {
        if q >= self.n_qubits {
            return Err(Error::Config(format!(
                "qubit {q} out of range for a {}-qubit register",
                self.n_qubits
            )));
        }
        Ok(1 << (self.n_qubits - 1 - q))
    }

    /// Applies `Ry(theta) = [[cos θ/2, -sin θ/2], [sin θ/2, cos θ/2]]` to qubit
    /// `q` in place.
    pub fn apply_ry(&mut self, q: usize, theta: f64) -> Result<()> {
        let mask = self.bit_mask(q)?;
        if !theta.is_finite() {
            return Err(Error::NumericInput(format!("rotation angle {theta}")));
        }
        let (s, c) = (theta / 2.0).sin_cos();
        let dim = self.amplitudes.len();
        let mut block = 0;
        while block < dim {
            for i in block..block + mask {
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[i | mask];
                self.amplitudes[i] = a0 * c - a1 * s;
                self.amplitudes[i | mask] = a0 * s + a1 * c;
            }
            block += mask << 1;
        }
        Ok(())
    }

    /// Flips `target` on every basis state whose `control` bit is 1.
    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        let cmask = self.bit_mask(control)?;
        let tmask = self.bit_mask(target)?;
        if control == target {
            return Err(Error::Config(format!(
                "CNOT control and target are both qubit {control}"
            )));
        }
        for i in 0..self.amplitudes.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amplitudes.swap(i, i | tmask);
            }
        }
        Ok(())
    }

    /// Analytic ⟨Z⟩ on qubit `q`.
    pub fn z_expectation(&self, q: usize) -> Result<f64> {
        let mask = self.bit_mask(q)?;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if i & mask == 0 {
                    a.norm_sqr()
                } else {
                    -a.norm_sqr()
                }
            })
            .sum())
    }

    /// ⟨Z⟩ for every qubit, computed in one pass over the amplitudes.
    pub fn z_expectations(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_qubits];
        self.z_expectations_into(&mut out);
        out
    }

    /// Multiplies every amplitude by the eigenvalue of `Σ_q weights[q]·Z_q`.
    pub(crate) fn apply_weighted_z(&mut self, weights: &[f64]) {
        debug_assert_eq!(weights.len(), self.n_qubits);
        let n = self.n_qubits;
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            let eig: f64 = weights
                .iter()
                .enumerate()
                .map(|(q, w)| if i >> (n - 1 - q) & 1 == 0 { *w } else { -*w })
                .sum();
            *a *= eig;
        }
    }

    /// `Re⟨self|other⟩`.
    pub(crate) fn overlap_re(&self, other: &Statevector) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    pub(crate) fn z_expectations_into(&self, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.n_qubits);
        out.iter_mut().for_each(|v| *v = 0.0);
        let n = self.n_qubits;
        for (i, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            for (q, acc) in out.iter_mut().enumerate() {
                if i >> (n - 1 - q) & 1 == 0 {
                    *acc += p;
                } else {
                    *acc -= p;
                }
            }
        }
    }
}
