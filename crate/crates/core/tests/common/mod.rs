//! Dense-matrix reference simulator: every gate is a full `2ⁿ × 2ⁿ` unitary
//! built from Kronecker products, and expectations are `tr(ρ Z_q)`.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

pub type Mat = DMatrix<Complex64>;
pub type Vector = DVector<Complex64>;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn ry(theta: f64) -> Mat {
    let (s, c) = (theta / 2.0).sin_cos();
    Mat::from_row_slice(2, 2, &[re(c), re(-s), re(s), re(c)])
}

fn pauli_x() -> Mat {
    Mat::from_row_slice(2, 2, &[re(0.0), re(1.0), re(1.0), re(0.0)])
}

fn pauli_z() -> Mat {
    Mat::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re(-1.0)])
}

fn projector(bit: usize) -> Mat {
    let mut m = Mat::zeros(2, 2);
    m[(bit, bit)] = re(1.0);
    m
}

/// `⊗ factors`, qubit 0 leftmost (most significant).
fn kron_all(factors: Vec<Mat>) -> Mat {
    factors
        .into_iter()
        .reduce(|acc, f| acc.kronecker(&f))
        .expect("at least one factor")
}

fn on_qubits(n: usize, place: impl Fn(usize) -> Option<Mat>) -> Mat {
    kron_all(
        (0..n)
            .map(|k| place(k).unwrap_or_else(|| Mat::identity(2, 2)))
            .collect(),
    )
}

pub fn single(gate: &Mat, q: usize, n: usize) -> Mat {
    on_qubits(n, |k| (k == q).then(|| gate.clone()))
}

pub fn cnot(control: usize, target: usize, n: usize) -> Mat {
    let idle = on_qubits(n, |k| (k == control).then(|| projector(0)));
    let flip = on_qubits(n, |k| {
        if k == control {
            Some(projector(1))
        } else if k == target {
            Some(pauli_x())
        } else {
            None
        }
    });
    idle + flip
}

/// One BasicEntangler layer per row of `angles`: `Ry` on every qubit, then
/// CNOTs `0→1, 1→2, …, (n-1)→0` (a single CNOT for two qubits).
pub fn entangler(n: usize, angles: &[f64]) -> Mat {
    let dim = 1 << n;
    let mut u = Mat::identity(dim, dim);
    let ring: Vec<(usize, usize)> = match n {
        1 => vec![],
        2 => vec![(0, 1)],
        _ => (0..n).map(|q| (q, (q + 1) % n)).collect(),
    };
    for layer in angles.chunks(n) {
        for (q, &theta) in layer.iter().enumerate() {
            u = single(&ry(theta), q, n) * u;
        }
        for &(c, t) in &ring {
            u = cnot(c, t, n) * u;
        }
    }
    u
}

pub fn zero_state(n: usize) -> Vector {
    basis(0, n)
}

pub fn basis(index: usize, n: usize) -> Vector {
    let mut v = Vector::zeros(1 << n);
    v[index] = re(1.0);
    v
}

/// `⊗_q Ry(x_q)|0⟩`, built directly as a tensor product.
pub fn angle_state(inputs: &[f64]) -> Vector {
    inputs
        .iter()
        .map(|&x| {
            let (s, c) = (x / 2.0).sin_cos();
            Vector::from_vec(vec![re(c), re(s)])
        })
        .reduce(|acc, f| acc.kronecker(&f))
        .expect("at least one qubit")
}

/// Zero-padded, L2-normalized real amplitudes on `n` qubits.
pub fn amplitude_state(values: &[f64], n: usize) -> Vector {
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut v = Vector::zeros(1 << n);
    for (i, x) in values.iter().enumerate() {
        v[i] = re(x / norm);
    }
    v
}

/// `tr(|ψ⟩⟨ψ| Z_q)` for every qubit.
pub fn z_expectations(psi: &Vector, n: usize) -> Vec<f64> {
    let rho = psi * psi.adjoint();
    (0..n)
        .map(|q| (&rho * single(&pauli_z(), q, n)).trace().re)
        .collect()
}

pub fn run(psi: &Vector, n: usize, angles: &[f64]) -> Vec<f64> {
    z_expectations(&(entangler(n, angles) * psi), n)
}

/// Angle-encoded circuit readout per qubit.
pub fn angle_circuit(inputs: &[f64], angles: &[f64]) -> Vec<f64> {
    run(&angle_state(inputs), inputs.len(), angles)
}

/// Depthwise convolution with "same" zero padding and stride 1:
/// output `[c][t] = Σ_q ⟨Z_q⟩` of the kernel on `x[c][t-⌊(K-1)/2⌋ ..]`.
/// Masked input positions read as zero and masked output positions are 0.
pub fn depthwise_conv(x: &[Vec<f64>], mask: &[bool], k: usize, angles: &[f64]) -> Vec<Vec<f64>> {
    let m = mask.len();
    let left = (k - 1) / 2;
    x.iter()
        .map(|row| {
            (0..m)
                .map(|t| {
                    if !mask[t] {
                        return 0.0;
                    }
                    let window: Vec<f64> = (0..k)
                        .map(|j| {
                            let pos = t as isize + j as isize - left as isize;
                            if pos < 0 || pos as usize >= m || !mask[pos as usize] {
                                0.0
                            } else {
                                row[pos as usize]
                            }
                        })
                        .collect();
                    angle_circuit(&window, angles).iter().sum()
                })
                .collect()
        })
        .collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let exp: Vec<f64> = logits.iter().map(|l| l.exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.iter().map(|e| e / total).collect()
}

pub fn random_angles<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len)
        .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect()
}
