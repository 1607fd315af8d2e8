//! Dense oracles built from scratch with Kronecker products, independent of
//! the engine's own state-vector kernels.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use vcqds::engine::{PauliSum, StateVector};

fn single(c: char) -> DMatrix<C64> {
    let (o, i, z) = (C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0));
    match c {
        'I' => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        'X' => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        'Y' => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        'Z' => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => panic!("bad Pauli {c}"),
    }
}

/// Matrix of a label with qubit 0 leftmost and least significant.
pub fn label_matrix(label: &str) -> DMatrix<C64> {
    let mut m = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    for c in label.chars() {
        // later (higher) qubits are more significant, so they go on the left
        m = single(c).kronecker(&m);
    }
    m
}

pub fn dense(h: &PauliSum) -> DMatrix<C64> {
    let d = 1 << h.n_qubits();
    let mut m = DMatrix::zeros(d, d);
    for (p, c) in h.iter() {
        m += label_matrix(&p.label()) * C64::new(c, 0.0);
    }
    m
}

pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

/// Ascending eigenpairs of a Hermitian matrix.
pub fn eigh(m: &DMatrix<C64>) -> Eigen {
    let e = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..e.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let values = order.iter().map(|&k| e.eigenvalues[k]).collect();
    let vectors = DMatrix::from_columns(&order.iter().map(|&k| e.eigenvectors.column(k).into_owned()).collect::<Vec<_>>());
    Eigen { values, vectors }
}

impl Eigen {
    /// `e^{-iHt} ψ`
    pub fn evolve(&self, psi: &DVector<C64>, t: f64) -> DVector<C64> {
        let coeffs = self.vectors.adjoint() * psi;
        let phased = DVector::from_iterator(
            coeffs.len(),
            coeffs.iter().zip(&self.values).map(|(c, &e)| c * C64::from_polar(1.0, -e * t)),
        );
        &self.vectors * phased
    }
}

pub fn vector(s: &StateVector) -> DVector<C64> {
    DVector::from_column_slice(s.amplitudes())
}

/// `1 - |<a|b>|²` for normalized vectors, clamped at zero.
pub fn infidelity(a: &DVector<C64>, b: &DVector<C64>) -> f64 {
    (1.0 - a.dotc(b).norm_sqr()).max(0.0)
}

/// Excitation energies from the ground state reachable through `op`, with
/// weights `|<k|op|g>|²`, degenerate levels merged; largest weight first.
pub fn transitions(h: &DMatrix<C64>, op: &DMatrix<C64>) -> Vec<(f64, f64)> {
    let e = eigh(h);
    let g = e.vectors.column(0).into_owned();
    let og = op * &g;
    let mut levels: Vec<(f64, f64)> = Vec::new();
    for k in 1..e.values.len() {
        let w = e.vectors.column(k).dotc(&og).norm_sqr();
        let gap = e.values[k] - e.values[0];
        match levels.iter_mut().find(|(x, _)| (x - gap).abs() < 1e-9) {
            Some(l) => l.1 += w,
            None => levels.push((gap, w)),
        }
    }
    levels.retain(|l| l.1 > 1e-20);
    levels.sort_by(|a, b| b.1.total_cmp(&a.1));
    levels
}
