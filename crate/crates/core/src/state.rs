//! Dense `2^n` state vectors and the eigendecomposition propagator used as
//! the reference for every other propagation route.
//!
//! Amplitude `b` belongs to the basis state whose bit `q` is the value of
//! qubit `q` (qubit 0 fastest); `|0>` is spin up (`Z = +1`).

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::math::{self, C64};
use crate::pauli::{PauliString, PauliSum};

/// Hard cap on the register size of a dense state.
pub const MAX_STATE_QUBITS: usize = 14;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    fn check(n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::BadQubitCount(0));
        }
        if n > MAX_STATE_QUBITS {
            return Err(Error::TooManyQubits { got: n, max: MAX_STATE_QUBITS });
        }
        Ok(())
    }

    /// Computational basis state `|b>`.
    pub fn basis(n: usize, b: usize) -> Result<Self> {
        Self::check(n)?;
        if b >> n != 0 {
            return Err(Error::InvalidArgument(alloc::format!("basis index {b} out of range")));
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[b] = C64::new(1.0, 0.0);
        Ok(StateVector { n, amps })
    }

    /// Basis state from a bitstring, leftmost character qubit 0.
    pub fn from_bitstring(bits: &str) -> Result<Self> {
        let mut b = 0usize;
        let mut n = 0;
        for (q, c) in bits.trim().chars().enumerate() {
            match c {
                '0' => {}
                '1' => b |= 1 << q,
                _ => return Err(Error::InvalidArgument(alloc::format!("bad bitstring {bits:?}"))),
            }
            n = q + 1;
        }
        Self::basis(n, b)
    }

    /// Wraps raw amplitudes; the length must be a power of two. Not normalized.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidArgument(alloc::format!("{len} amplitudes is not a power of two")));
        }
        let n = len.trailing_zeros() as usize;
        Self::check(n)?;
        Ok(StateVector { n, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        math::sqrt(self.amps.iter().map(|a| a.norm_sqr()).sum())
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.amps.iter_mut().for_each(|a| *a /= n);
        }
    }

    /// `<self|other>`
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|<self|other>|^2`
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: C64, other: &StateVector) {
        self.amps.iter_mut().zip(&other.amps).for_each(|(a, b)| *a += c * b);
    }

    pub fn scale(&mut self, c: C64) {
        self.amps.iter_mut().for_each(|a| *a *= c);
    }

    pub fn zeros_like(&self) -> StateVector {
        StateVector { n: self.n, amps: vec![C64::new(0.0, 0.0); self.amps.len()] }
    }

    fn check_string(&self, p: &PauliString) -> Result<()> {
        if p.n_qubits() != self.n {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: 1 << p.n_qubits() });
        }
        Ok(())
    }

    /// In-place `e^{-i theta P}` as `cos(theta) - i sin(theta) P` in one pass.
    pub fn rotate(&mut self, p: &PauliString, theta: f64) -> Result<()> {
        self.check_string(p)?;
        self.rotate_unchecked(p, theta);
        Ok(())
    }

    pub(crate) fn rotate_unchecked(&mut self, p: &PauliString, theta: f64) {
        if theta == 0.0 {
            return;
        }
        let (s, c) = math::sin_cos(theta);
        let ms = C64::new(0.0, -s);
        let x = p.x_mask() as usize;
        if x == 0 {
            for (b, a) in self.amps.iter_mut().enumerate() {
                let (_, amp) = linalg::string_action(p, b);
                *a *= c + ms * amp;
            }
            return;
        }
        for b in 0..self.amps.len() {
            let partner = b ^ x;
            if partner < b {
                continue;
            }
            // (P psi)_b = amp(partner -> b) psi_partner
            let (_, to_b) = linalg::string_action(p, partner);
            let (_, to_partner) = linalg::string_action(p, b);
            let (ab, ap) = (self.amps[b], self.amps[partner]);
            self.amps[b] = ab * c + ms * to_b * ap;
            self.amps[partner] = ap * c + ms * to_partner * ab;
        }
    }

    /// `P |psi>`
    pub fn apply_string(&self, p: &PauliString) -> StateVector {
        let mut out = self.zeros_like();
        for (b, a) in self.amps.iter().enumerate() {
            let (row, amp) = linalg::string_action(p, b);
            out.amps[row] = amp * a;
        }
        out
    }

    /// `H |psi>` for a real Pauli sum.
    pub fn apply_sum(&self, h: &PauliSum) -> Result<StateVector> {
        if h.n_qubits() != self.n {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: 1 << h.n_qubits() });
        }
        let mut out = self.zeros_like();
        for (p, c) in h.iter() {
            for (b, a) in self.amps.iter().enumerate() {
                let (row, amp) = linalg::string_action(p, b);
                out.amps[row] += amp * a * c;
            }
        }
        Ok(out)
    }

    /// `<psi|P|psi>` (real for a Hermitian string).
    pub fn string_expectation(&self, p: &PauliString) -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for (b, a) in self.amps.iter().enumerate() {
            let (row, amp) = linalg::string_action(p, b);
            acc += self.amps[row].conj() * amp * a;
        }
        acc.re
    }
}

/// `e^{-i theta P}|psi>`
pub fn apply_pauli_rotation(state: &StateVector, p: &PauliString, theta: f64) -> Result<StateVector> {
    let mut out = state.clone();
    out.rotate(p, theta)?;
    Ok(out)
}

/// `<psi|O|psi>` for a Hermitian (real-coefficient) Pauli sum.
pub fn expectation(state: &StateVector, o: &PauliSum) -> Result<f64> {
    let hpsi = state.apply_sum(o)?;
    let v = state.inner(&hpsi);
    debug_assert!(v.im.abs() < 1e-12 * (1.0 + o.norm()), "expectation has imaginary part {}", v.im);
    Ok(v.re)
}

/// Eigendecomposition of the Hermitian matrix of a Pauli sum.
#[derive(Clone, Debug)]
pub struct DensePropagator {
    n: usize,
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<C64>,
}

impl DensePropagator {
    pub fn new(h: &PauliSum) -> Result<Self> {
        StateVector::check(h.n_qubits())?;
        let m = linalg::sum_matrix(h);
        let (eigenvalues, eigenvectors) = linalg::hermitian_eigen(&m);
        Ok(DensePropagator { n: h.n_qubits(), eigenvalues, eigenvectors })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    /// Ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvector(&self, k: usize) -> StateVector {
        let amps = self.eigenvectors.column(k).iter().copied().collect();
        StateVector { n: self.n, amps }
    }

    /// `U diag(lambda) U^dagger`
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&e| C64::new(e, 0.0)),
        ));
        &self.eigenvectors * d * self.eigenvectors.adjoint()
    }

    /// `U e^{-i diag(lambda) t} U^dagger |psi>`
    pub fn propagate(&self, state: &StateVector, t: f64) -> Result<StateVector> {
        if state.n != self.n {
            return Err(Error::DimensionMismatch { expected: 1 << self.n, got: state.dim() });
        }
        let psi = DVector::from_column_slice(&state.amps);
        let mut coeffs = self.eigenvectors.adjoint() * psi;
        for (c, &e) in coeffs.iter_mut().zip(&self.eigenvalues) {
            *c *= math::cis(-e * t);
        }
        let out = &self.eigenvectors * coeffs;
        Ok(StateVector { n: self.n, amps: out.iter().copied().collect() })
    }
}

pub fn exact_propagate(prop: &DensePropagator, state: &StateVector, t: f64) -> Result<StateVector> {
    prop.propagate(state, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::PI;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn assert_state(a: &StateVector, want: &[C64], tol: f64) {
        for (x, y) in a.amplitudes().iter().zip(want) {
            assert!((x - y).norm() < tol, "{x} vs {y}");
        }
    }

    #[test]
    fn rotation_examples() {
        let zero = StateVector::basis(1, 0).unwrap();
        let theta = 0.37;
        let out = apply_pauli_rotation(&zero, &ps("Z"), theta).unwrap();
        assert_state(&out, &[math::cis(-theta), C64::new(0.0, 0.0)], 1e-15);
        let out = apply_pauli_rotation(&zero, &ps("X"), PI / 2.0).unwrap();
        assert_state(&out, &[C64::new(0.0, 0.0), C64::new(0.0, -1.0)], 1e-15);
        let out = apply_pauli_rotation(&zero, &ps("X"), 0.0).unwrap();
        assert_eq!(out, zero);
        assert!(apply_pauli_rotation(&zero, &ps("XX"), 0.1).is_err());
    }

    #[test]
    fn rotation_matches_dense_exponential() {
        // e^{-i theta P} = cos theta - i sin theta P for every string on 3 qubits
        let mut psi = StateVector::from_amplitudes(
            (0..8).map(|k| C64::new(0.1 * k as f64 + 0.3, 0.05 * (k * k) as f64 - 0.2)).collect(),
        )
        .unwrap();
        psi.normalize();
        for x in 0..8u64 {
            for z in 0..8u64 {
                let p = PauliString::from_masks(3, x, z).unwrap();
                let theta = 0.7;
                let m = linalg::string_matrix(&p);
                let v = DVector::from_column_slice(psi.amplitudes());
                let want = v.clone() * C64::new(math::cos(theta), 0.0) - (&m * v) * C64::new(0.0, math::sin(theta));
                let got = apply_pauli_rotation(&psi, &p, theta).unwrap();
                assert_state(&got, want.as_slice(), 1e-14);
                assert!((got.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn expectation_examples() {
        let zero = StateVector::basis(1, 0).unwrap();
        assert_eq!(expectation(&zero, &PauliSum::parse_inline("1 Z").unwrap()).unwrap(), 1.0);

        let r = 1.0 / math::sqrt(2.0);
        // (|up down> - |down up>)/sqrt2: qubit0=0,qubit1=1 is index 2
        let singlet = StateVector::from_amplitudes(vec![
            C64::new(0.0, 0.0),
            C64::new(-r, 0.0),
            C64::new(r, 0.0),
            C64::new(0.0, 0.0),
        ])
        .unwrap();
        let sz = PauliSum::parse_inline("0.5 ZI; 0.5 IZ").unwrap();
        assert!(expectation(&singlet, &sz).unwrap().abs() < 1e-15);

        let bonds = [(1, 2), (1, 3), (2, 4), (3, 4), (3, 5), (4, 6), (5, 6)];
        let c = PauliSum::from_terms(
            6,
            bonds.iter().map(|&(a, b)| {
                (
                    1.0 / 7.0,
                    PauliString::from_ops(6, &[(a - 1, crate::Pauli::Z), (b - 1, crate::Pauli::Z)]).unwrap(),
                )
            }),
        )
        .unwrap();
        let all_zero = StateVector::basis(6, 0).unwrap();
        assert!((expectation(&all_zero, &c).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn propagator_examples() {
        let h = PauliSum::parse_inline("1 Z").unwrap();
        let prop = DensePropagator::new(&h).unwrap();
        let zero = StateVector::basis(1, 0).unwrap();
        let out = prop.propagate(&zero, PI).unwrap();
        assert_state(&out, &[C64::new(-1.0, 0.0), C64::new(0.0, 0.0)], 1e-14);
        assert_state(&prop.propagate(&zero, 0.0).unwrap(), zero.amplitudes(), 1e-15);
    }

    fn random_state(n: usize, seed: u64) -> StateVector {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut s = StateVector::from_amplitudes(
            (0..1 << n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect(),
        )
        .unwrap();
        s.normalize();
        s
    }

    #[test]
    fn propagator_group_property_and_reconstruction() {
        let h = PauliSum::parse_inline("0.7 XXI; -0.3 IYY; 0.25 ZIZ; 1.1 XIX; 0.5 IZI").unwrap();
        let prop = DensePropagator::new(&h).unwrap();
        let rec = prop.reconstruct();
        let m = linalg::sum_matrix(&h);
        assert!((rec - m).iter().all(|d| d.norm() < 1e-10));
        let psi = random_state(3, 7);
        let a = prop.propagate(&prop.propagate(&psi, 0.8).unwrap(), 1.7).unwrap();
        let b = prop.propagate(&psi, 2.5).unwrap();
        assert_state(&a, b.amplitudes(), 1e-12);
        assert!((b.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn propagator_first_order_bound() {
        let h = PauliSum::parse_inline("0.7 XX; -0.3 YY; 0.25 ZI").unwrap();
        let prop = DensePropagator::new(&h).unwrap();
        let psi = random_state(2, 3);
        let hnorm = prop.eigenvalues().iter().fold(0.0f64, |m, e| m.max(e.abs()));
        for &t in &[1e-2, 1e-3, 1e-4] {
            let exact = prop.propagate(&psi, t).unwrap();
            let mut first = psi.clone();
            first.axpy(C64::new(0.0, -t), &psi.apply_sum(&h).unwrap());
            let mut diff = exact.clone();
            diff.axpy(C64::new(-1.0, 0.0), &first);
            assert!(diff.norm() <= hnorm * hnorm * t * t / 2.0 * (1.0 + 1e-6));
        }
    }

    #[test]
    fn rotation_inverse_restores() {
        let psi = random_state(4, 11);
        let p = ps("XYZI");
        let mut out = apply_pauli_rotation(&psi, &p, 0.91).unwrap();
        out.rotate(&p, -0.91).unwrap();
        assert_state(&out, psi.amplitudes(), 1e-13);
    }

    #[test]
    fn state_cap() {
        assert!(matches!(StateVector::basis(15, 0), Err(Error::TooManyQubits { .. })));
        assert_eq!(StateVector::from_bitstring("10").unwrap().amplitudes()[1], C64::new(1.0, 0.0));
    }
}
