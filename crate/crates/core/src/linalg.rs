//! Thin wrappers over `nalgebra` for the dense oracles and the small
//! McLachlan solves.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::math::C64;
use crate::pauli::{PauliString, PauliSum};

/// Dense `2^n x 2^n` matrix of a Pauli string, qubit 0 the least significant bit.
pub fn string_matrix(p: &PauliString) -> DMatrix<C64> {
    let d = 1usize << p.n_qubits();
    let mut m = DMatrix::zeros(d, d);
    for col in 0..d {
        let (row, amp) = string_action(p, col);
        m[(row, col)] = amp;
    }
    m
}

/// `P|b> = amp |row>`.
#[inline]
pub fn string_action(p: &PauliString, b: usize) -> (usize, C64) {
    let b64 = b as u64;
    let sign = if (b64 & p.z_mask()).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
    let y = p.y_count() % 4;
    let amp = match y {
        0 => C64::new(sign, 0.0),
        1 => C64::new(0.0, sign),
        2 => C64::new(-sign, 0.0),
        _ => C64::new(0.0, -sign),
    };
    ((b64 ^ p.x_mask()) as usize, amp)
}

pub fn sum_matrix(h: &PauliSum) -> DMatrix<C64> {
    let d = 1usize << h.n_qubits();
    let mut m = DMatrix::zeros(d, d);
    for (p, c) in h.iter() {
        for col in 0..d {
            let (row, amp) = string_action(p, col);
            m[(row, col)] += amp * c;
        }
    }
    m
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Condition number of a symmetric positive semidefinite matrix; infinite when singular.
pub fn spd_condition(m: &DMatrix<f64>) -> f64 {
    let ev = symmetric_eigenvalues(m);
    match (ev.first(), ev.last()) {
        (Some(&lo), Some(&hi)) if lo > 0.0 => hi / lo,
        (Some(_), Some(&hi)) if hi > 0.0 => f64::INFINITY,
        _ => 1.0,
    }
}

/// Solves `(m + reg I) x = v` for symmetric positive semidefinite `m`.
pub fn solve_regularized(m: &DMatrix<f64>, v: &DVector<f64>, reg: f64) -> DVector<f64> {
    let n = m.nrows();
    let shifted = m + DMatrix::<f64>::identity(n, n) * reg;
    match shifted.clone().cholesky() {
        Some(ch) => ch.solve(v),
        // not positive definite (reg = 0 on a singular matrix): fall back to a pseudo-inverse
        None => pseudo_solve(&shifted, v, 1e-14),
    }
}

/// Minimum-norm solution of the symmetric system `m x = v` with relative cutoff `rcond`.
pub fn pseudo_solve(m: &DMatrix<f64>, v: &DVector<f64>, rcond: f64) -> DVector<f64> {
    let eig = m.clone().symmetric_eigen();
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let mut x = DVector::zeros(m.nrows());
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam.abs() > rcond * top && lam.abs() > 0.0 {
            let u = eig.eigenvectors.column(k);
            x += u * (u.dot(v) / lam);
        }
    }
    x
}

/// Minimum-norm least squares `min ||a x - b||` via SVD with relative cutoff `rcond`.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rcond: f64) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    let top = svd.singular_values.iter().fold(0.0f64, |m, &s| m.max(s));
    let (u, vt) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
    let mut x = DVector::zeros(a.ncols());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > rcond * top && s > 0.0 {
            let coef = u.column(k).dot(b) / s;
            x += vt.row(k).transpose() * coef;
        }
    }
    x
}
