//! Parameterized circuits of exponentiated Pauli generators.
//!
//! Groups are stored in application order: group 0 acts on the input state
//! first. A group `G = Σ w_k P_k` of mutually commuting strings shares one
//! parameter and contributes `e^{-i θ G} = Π_k e^{-i θ w_k P_k}`.

use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::math::C64;
use crate::pauli::{PauliString, PauliSum};
use crate::state::StateVector;

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorGroup {
    terms: Vec<(f64, PauliString)>,
}

impl GeneratorGroup {
    pub fn new(terms: Vec<(f64, PauliString)>) -> Result<Self> {
        let Some((_, first)) = terms.first() else {
            return Err(Error::InvalidArgument("empty generator group".into()));
        };
        let n = first.n_qubits();
        if let Some((_, p)) = terms.iter().find(|(_, p)| p.n_qubits() != n) {
            return Err(Error::QubitMismatch { left: n, right: p.n_qubits() });
        }
        Ok(GeneratorGroup { terms })
    }

    pub fn single(p: PauliString) -> Self {
        GeneratorGroup { terms: alloc::vec![(1.0, p)] }
    }

    /// Unit-weight group of several strings.
    pub fn of(strings: &[PauliString]) -> Result<Self> {
        Self::new(strings.iter().map(|p| (1.0, *p)).collect())
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn n_qubits(&self) -> usize {
        self.terms[0].1.n_qubits()
    }

    fn mutually_commuting(&self) -> bool {
        self.terms
            .iter()
            .enumerate()
            .all(|(i, (_, p))| self.terms[..i].iter().all(|(_, q)| p.commutes_with(q)))
    }

    pub fn as_sum(&self) -> PauliSum {
        let mut s = PauliSum::new(self.n_qubits()).expect("valid qubit count");
        for &(w, p) in &self.terms {
            s.add_term(p, w).expect("same qubit count");
        }
        s
    }

    fn apply(&self, state: &mut StateVector, theta: f64) {
        for &(w, p) in &self.terms {
            state.rotate_unchecked(&p, theta * w);
        }
    }

    /// `-i G |psi>`
    fn apply_generator(&self, state: &StateVector) -> StateVector {
        let mut out = state.zeros_like();
        for &(w, p) in &self.terms {
            out.axpy(C64::new(0.0, -w), &state.apply_string(&p));
        }
        out
    }
}

/// Ordered product of exponentiated generator groups with one real
/// parameter per group.
#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzCircuit {
    n: usize,
    groups: Vec<GeneratorGroup>,
    thetas: Vec<f64>,
    layers: Vec<Range<usize>>,
}

impl AnsatzCircuit {
    /// Builds a circuit from layers of groups, each in application order.
    /// All parameters start at zero.
    pub fn from_layers(layers: Vec<Vec<GeneratorGroup>>) -> Result<Self> {
        let mut groups = Vec::new();
        let mut ranges = Vec::new();
        for layer in layers {
            let start = groups.len();
            groups.extend(layer);
            ranges.push(start..groups.len());
        }
        let first = groups.first().ok_or_else(|| Error::InvalidArgument("empty ansatz".into()))?;
        let n = first.n_qubits();
        for (i, g) in groups.iter().enumerate() {
            if g.n_qubits() != n {
                return Err(Error::QubitMismatch { left: n, right: g.n_qubits() });
            }
            if !g.mutually_commuting() {
                return Err(Error::NonCommutingGroup(i));
            }
        }
        let thetas = alloc::vec![0.0; groups.len()];
        Ok(AnsatzCircuit { n, groups, thetas, layers: ranges })
    }

    /// `layers` repetitions of one group per term of `terms` (identity terms
    /// skipped), in term order.
    pub fn hamiltonian_ansatz(terms: &[&PauliSum], layers: usize) -> Result<Self> {
        let mut layer = Vec::new();
        for sum in terms {
            for (p, _) in sum.iter() {
                if !p.is_identity() && !layer.iter().any(|g: &GeneratorGroup| g.terms[0].1 == *p) {
                    layer.push(GeneratorGroup::single(*p));
                }
            }
        }
        Self::from_layers(core::iter::repeat_n(layer, layers.max(1)).collect())
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn n_params(&self) -> usize {
        self.groups.len()
    }

    pub fn groups(&self) -> &[GeneratorGroup] {
        &self.groups
    }

    pub fn layers(&self) -> &[Range<usize>] {
        &self.layers
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn set_thetas(&mut self, thetas: &[f64]) -> Result<()> {
        if thetas.len() != self.thetas.len() {
            return Err(Error::ParameterMismatch { expected: self.thetas.len(), got: thetas.len() });
        }
        self.thetas.copy_from_slice(thetas);
        Ok(())
    }

    fn check_state(&self, psi0: &StateVector) -> Result<()> {
        if psi0.n_qubits() != self.n {
            return Err(Error::DimensionMismatch { expected: 1 << self.n, got: psi0.dim() });
        }
        Ok(())
    }

    /// `U(θ)|ψ0>`
    pub fn apply(&self, psi0: &StateVector) -> Result<StateVector> {
        self.check_state(psi0)?;
        let mut psi = psi0.clone();
        for (g, &t) in self.groups.iter().zip(&self.thetas) {
            g.apply(&mut psi, t);
        }
        Ok(psi)
    }

    /// `U(θ)|ψ0>` together with `∂_j U(θ)|ψ0> = U_{>j} (-i G_j) U_{≤j} |ψ0>`
    /// for every parameter.
    pub fn apply_and_derivatives(&self, psi0: &StateVector) -> Result<(StateVector, Vec<StateVector>)> {
        self.check_state(psi0)?;
        let mut prefix = Vec::with_capacity(self.groups.len());
        let mut psi = psi0.clone();
        for (g, &t) in self.groups.iter().zip(&self.thetas) {
            g.apply(&mut psi, t);
            prefix.push(psi.clone());
        }
        let derivs = prefix
            .iter()
            .enumerate()
            .map(|(j, phi)| {
                let mut d = self.groups[j].apply_generator(phi);
                for (g, &t) in self.groups[j + 1..].iter().zip(&self.thetas[j + 1..]) {
                    g.apply(&mut d, t);
                }
                d
            })
            .collect();
        Ok((psi, derivs))
    }
}

pub fn ansatz_apply_and_derivatives(
    circuit: &AnsatzCircuit,
    psi0: &StateVector,
) -> Result<(StateVector, Vec<StateVector>)> {
    circuit.apply_and_derivatives(psi0)
}
