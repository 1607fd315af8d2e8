//! Model constructors: the 2×3 transverse-field Ising lattice, Heisenberg
//! chains, and molecular Hamiltonians supplied as Pauli sums.
//!
//! Sites are numbered from 0 here; site `i` is qubit `i`.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::ansatz::{AnsatzCircuit, GeneratorGroup};
use crate::error::{Error, Result};
use crate::math::{sqrt, C64};
use crate::pauli::{Pauli, PauliString, PauliSum};
use crate::state::{DensePropagator, StateVector};

/// A repeated layer of generator groups, in application order.
#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzSpec {
    pub layer: Vec<GeneratorGroup>,
    pub layers: usize,
}

impl AnsatzSpec {
    pub fn build(&self) -> Result<AnsatzCircuit> {
        AnsatzCircuit::from_layers(vec![self.layer.clone(); self.layers])
    }

    pub fn with_layers(&self, layers: usize) -> AnsatzSpec {
        AnsatzSpec { layer: self.layer.clone(), layers }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelBundle {
    pub name: String,
    pub h0: PauliSum,
    pub initial: StateVector,
    /// Named observables recorded by default.
    pub observables: Vec<(String, PauliSum)>,
    /// Default kick operator `D`, if the model has one.
    pub coupling: Option<PauliSum>,
    pub ansatz: AnsatzSpec,
    pub bonds: Vec<(usize, usize)>,
    pub positions: Vec<(f64, f64)>,
}

impl ModelBundle {
    pub fn n_qubits(&self) -> usize {
        self.h0.n_qubits()
    }

    pub fn observable(&self, name: &str) -> Option<&PauliSum> {
        self.observables.iter().find(|(n, _)| n == name).map(|(_, o)| o)
    }

    /// Replaces the initial state by the lowest eigenvector of `H₀`.
    pub fn with_ground_state(mut self) -> Result<Self> {
        self.initial = ground_state(&self.h0)?;
        Ok(self)
    }
}

fn zz(n: usize, a: usize, b: usize) -> Result<PauliString> {
    PauliString::from_ops(n, &[(a, Pauli::Z), (b, Pauli::Z)])
}

fn single(n: usize, q: usize, p: Pauli) -> Result<PauliString> {
    PauliString::single(n, q, p)
}

/// Nearest-neighbour bonds of the 2×3 lattice. Rows are `(0,1)`, `(2,3)`,
/// `(4,5)`; site `2r + c` sits at column `c`, row `r`.
pub const ISING_2X3_BONDS: [(usize, usize); 7] = [(0, 1), (0, 2), (1, 3), (2, 3), (2, 4), (3, 5), (4, 5)];

/// `H = (J/4) Σ Z_i Z_j + d Σ X_i` on the 2×3 lattice, starting from `|000000>`.
///
/// The ansatz is `U_h³ U_s U_h³ U_s` in operator order, so the first `U_s`
/// acts first. `U_h` has five parameters shared by the row-symmetric bond
/// groups `{Z4Z5}, {Z2Z4, Z3Z5}, {Z2Z3}, {Z0Z2, Z1Z3}, {Z0Z1}`; `U_s` has one
/// parameter per `X_i`. The observable `C` is the bond-averaged `Z_i Z_j`.
pub fn ising_2x3(j: f64, d: f64) -> Result<ModelBundle> {
    if d == 0.0 || !d.is_finite() || !j.is_finite() {
        return Err(Error::InvalidArgument("ising_2x3 needs finite J and nonzero finite d".into()));
    }
    let n = 6;
    let mut h0 = PauliSum::new(n)?;
    let mut corr = PauliSum::new(n)?;
    for &(a, b) in &ISING_2X3_BONDS {
        h0.add_term(zz(n, a, b)?, j / 4.0)?;
        corr.add_term(zz(n, a, b)?, 1.0 / ISING_2X3_BONDS.len() as f64)?;
    }
    for q in 0..n {
        h0.add_term(single(n, q, Pauli::X)?, d)?;
    }

    // operator product Z5Z6 · (Z3Z5+Z4Z6) · Z3Z4 · (Z1Z3+Z2Z4) · Z1Z2 over 1-based sites, rightmost first
    let u_h: Vec<GeneratorGroup> = [
        vec![(0, 1)],
        vec![(0, 2), (1, 3)],
        vec![(2, 3)],
        vec![(2, 4), (3, 5)],
        vec![(4, 5)],
    ]
    .iter()
    .map(|bonds| GeneratorGroup::of(&bonds.iter().map(|&(a, b)| zz(n, a, b)).collect::<Result<Vec<_>>>()?))
    .collect::<Result<_>>()?;
    let u_s: Vec<GeneratorGroup> =
        (0..n).map(|q| single(n, q, Pauli::X).map(GeneratorGroup::single)).collect::<Result<_>>()?;
    let mut layer = u_s;
    for _ in 0..3 {
        layer.extend(u_h.iter().cloned());
    }

    Ok(ModelBundle {
        name: "ising2x3".to_string(),
        h0,
        initial: StateVector::basis(n, 0)?,
        observables: vec![("C".to_string(), corr)],
        coupling: None,
        ansatz: AnsatzSpec { layer, layers: 2 },
        bonds: ISING_2X3_BONDS.to_vec(),
        positions: (0..n).map(|s| ((s % 2) as f64, (s / 2) as f64)).collect(),
    })
}

/// Nearest-neighbour chain bonds; the closing bond is added when `periodic`
/// and `n > 2`.
pub fn chain_bonds(n: usize, periodic: bool) -> Vec<(usize, usize)> {
    let mut bonds: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
    if periodic && n > 2 {
        bonds.push((0, n - 1));
    }
    bonds
}

/// `H = Σ_<ij> Jx X_iX_j + Jy Y_iY_j + Jz Z_iZ_j` in Pauli units.
///
/// The initial state is the singlet for two sites and the ground state of `H`
/// otherwise. The coupling operator is `Z_0`, the observables `sz{i} = Z_i/2`
/// and `sz_total`. The ansatz layer groups the bonds into orbits under the
/// reflection `i -> -i mod n` with one parameter per orbit and Pauli type
/// (`XX` and `YY` share one on single-bond orbits), followed by a `Z_0`
/// parameter, so every generator preserves the reflection symmetry of the
/// kick.
pub fn heisenberg_chain(n: usize, jx: f64, jy: f64, jz: f64, periodic: bool) -> Result<ModelBundle> {
    if n < 2 {
        return Err(Error::InvalidArgument("a chain needs at least two sites".into()));
    }
    let bonds = chain_bonds(n, periodic);
    let mut h0 = PauliSum::new(n)?;
    for &(a, b) in &bonds {
        for (p, c) in [(Pauli::X, jx), (Pauli::Y, jy), (Pauli::Z, jz)] {
            if c != 0.0 {
                h0.add_term(PauliString::from_ops(n, &[(a, p), (b, p)])?, c)?;
            }
        }
    }
    if h0.is_empty() {
        return Err(Error::InvalidArgument("all couplings are zero".into()));
    }
    let initial = if n == 2 { singlet()? } else { ground_state(&h0)? };

    let mut observables = Vec::with_capacity(n + 1);
    let mut total = PauliSum::new(n)?;
    for q in 0..n {
        let z = single(n, q, Pauli::Z)?;
        observables.push((alloc::format!("sz{q}"), PauliSum::from_terms(n, [(0.5, z)])?));
        total.add_term(z, 0.5)?;
    }
    observables.push(("sz_total".to_string(), total));

    let mirror = |i: usize| (n - i) % n;
    let canonical = |(a, b): (usize, usize)| if a < b { (a, b) } else { (b, a) };
    let mut orbits: Vec<Vec<(usize, usize)>> = Vec::new();
    for &bond in &bonds {
        if orbits.iter().any(|o| o.contains(&bond)) {
            continue;
        }
        let image = canonical((mirror(bond.0), mirror(bond.1)));
        let mut orbit = vec![bond];
        if image != bond && bonds.contains(&image) {
            orbit.push(image);
        }
        orbits.push(orbit);
    }
    let mut layer = Vec::new();
    for orbit in &orbits {
        let group = |p: Pauli, c: f64| -> Result<Vec<(f64, PauliString)>> {
            if c == 0.0 {
                return Ok(Vec::new());
            }
            orbit.iter().map(|&(a, b)| Ok((c, PauliString::from_ops(n, &[(a, p), (b, p)])?))).collect()
        };
        let (xx, yy, zz) = (group(Pauli::X, jx)?, group(Pauli::Y, jy)?, group(Pauli::Z, jz)?);
        // X_aX_b and Y_aY_b commute on one bond but not across two bonds
        // sharing a site
        let groups = if orbit.len() == 1 { vec![[xx, yy].concat(), zz] } else { vec![xx, yy, zz] };
        for terms in groups.into_iter().filter(|t| !t.is_empty()) {
            layer.push(GeneratorGroup::new(terms)?);
        }
    }
    layer.push(GeneratorGroup::single(single(n, 0, Pauli::Z)?));

    Ok(ModelBundle {
        name: alloc::format!("heisenberg{n}"),
        h0,
        initial,
        observables,
        coupling: Some(PauliSum::from_terms(n, [(1.0, single(n, 0, Pauli::Z)?)])?),
        ansatz: AnsatzSpec { layer, layers: 2 },
        bonds,
        positions: (0..n).map(|i| (i as f64, 0.0)).collect(),
    })
}

/// `(|01> - |10>)/√2`
pub fn singlet() -> Result<StateVector> {
    let r = 1.0 / sqrt(2.0);
    let mut amps = vec![C64::new(0.0, 0.0); 4];
    // index bit q is qubit q, so "01" (qubit 1 up) is index 2
    amps[2] = C64::new(r, 0.0);
    amps[1] = C64::new(-r, 0.0);
    StateVector::from_amplitudes(amps)
}

/// Lowest eigenvector of `h` by dense diagonalization, with the phase fixed
/// so that its largest amplitude is real and positive. For a degenerate
/// ground level this is one arbitrary (but deterministic) member.
pub fn ground_state(h: &PauliSum) -> Result<StateVector> {
    let prop = DensePropagator::new(h)?;
    let mut psi = prop.eigenvector(0);
    let (_, big) = psi.amplitudes().iter().enumerate().fold((0, C64::new(0.0, 0.0)), |best, (i, &z)| {
        if z.norm() > best.1.norm() + 1e-12 {
            (i, z)
        } else {
            best
        }
    });
    psi.scale(big.conj() / big.norm());
    Ok(psi)
}

/// Molecular model from an ingested Hamiltonian and dipole operator, starting
/// from the reference determinant `reference` (qubit 0 leftmost). The dipole
/// is both the coupling and the observable `dipole`. The ansatz layer has one
/// group per non-identity term of `H₀` followed by one per term of the dipole.
pub fn molecular(h0: PauliSum, dipole: PauliSum, reference: &str) -> Result<ModelBundle> {
    if h0.n_qubits() != dipole.n_qubits() {
        return Err(Error::QubitMismatch { left: h0.n_qubits(), right: dipole.n_qubits() });
    }
    let n = h0.n_qubits();
    if reference.len() != n {
        return Err(Error::InvalidArgument(alloc::format!(
            "reference {reference:?} has {} sites, the Hamiltonian {n}",
            reference.len()
        )));
    }
    let initial = StateVector::from_bitstring(reference)?;
    let mut layer = Vec::new();
    for sum in [&h0, &dipole] {
        for (p, _) in sum.iter() {
            if !p.is_identity() {
                layer.push(GeneratorGroup::single(*p));
            }
        }
    }
    if layer.is_empty() {
        // nothing to vary; keep a harmless single parameter
        layer.push(GeneratorGroup::single(PauliString::identity(n)?));
    }
    Ok(ModelBundle {
        name: "molecular".to_string(),
        h0,
        initial,
        observables: vec![("dipole".to_string(), dipole.clone())],
        coupling: Some(dipole),
        ansatz: AnsatzSpec { layer, layers: 2 },
        bonds: Vec::new(),
        positions: (0..n).map(|i| (i as f64, 0.0)).collect(),
    })
}

/// Built-in models by name: `ising2x3` (J = d = 1), `heisenberg2`,
/// `heisenberg4` (periodic, J = 1).
pub fn by_name(name: &str) -> Result<ModelBundle> {
    match name {
        "ising2x3" => ising_2x3(1.0, 1.0),
        "heisenberg2" => heisenberg_chain(2, 1.0, 1.0, 1.0, true),
        "heisenberg4" => heisenberg_chain(4, 1.0, 1.0, 1.0, true),
        other => Err(Error::InvalidArgument(alloc::format!("unknown model {other:?}"))),
    }
}
