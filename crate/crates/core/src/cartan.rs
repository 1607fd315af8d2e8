//! Cartan decomposition `g = k ⊕ m` of a dynamical Lie algebra and the
//! fixed-depth propagator `e^{-iH t} = K e^{-i h t} K†`.
//!
//! `K = Π_i e^{i a_i k_i}` (product in `k` order, leftmost factor `i = 0`).
//! Everything during the optimization happens in the adjoint representation:
//! a real coefficient vector over the basis of `g` and, per `k_i`, the list of
//! basis pairs it rotates into each other.

mod optimize;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math::{cis, dot, norm2, pow, sin_cos, PI};
use crate::pauli::{lie_closure, LieBasis, PauliString, PauliSum};
use crate::state::StateVector;

/// The involution `θ(g) = -gᵀ`, realized on Pauli strings as Y-count parity:
/// odd Y-count strings are fixed (`k`), even ones are negated (`m`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum InvolutionTag {
    #[default]
    EvenY,
}

impl InvolutionTag {
    pub fn in_k(self, p: &PauliString) -> bool {
        match self {
            InvolutionTag::EvenY => p.y_count() % 2 == 1,
        }
    }

    /// `+1` on `k`, `-1` on `m`.
    pub fn sign(self, p: &PauliString) -> i8 {
        if self.in_k(p) {
            1
        } else {
            -1
        }
    }
}

impl fmt::Display for InvolutionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("even-y")
    }
}

impl FromStr for InvolutionTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "even-y" | "even_y" | "eveny" => Ok(InvolutionTag::EvenY),
            other => Err(Error::InvalidArgument(alloc::format!("unknown involution {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CartanSplit {
    pub involution: InvolutionTag,
    pub g: LieBasis,
    pub k_part: Vec<PauliString>,
    pub m_part: Vec<PauliString>,
    pub h_part: Vec<PauliString>,
}

impl CartanSplit {
    /// Checks `[k,k] ⊂ k`, `[m,m] ⊂ k`, `[k,m] ⊂ m` on every anticommuting
    /// pair, with each commutator a member of `g`.
    pub fn verify_relations(&self) -> Result<()> {
        let el = self.g.elements();
        for (i, p) in el.iter().enumerate() {
            for q in &el[..i] {
                if p.commutes_with(q) {
                    continue;
                }
                let r = p.product(q).1;
                if !self.g.contains(&r) {
                    return Err(Error::InvolutionViolation(alloc::format!("[{p}, {q}] ∝ {r} is outside g")));
                }
                let want_k = self.involution.in_k(p) == self.involution.in_k(q);
                if self.involution.in_k(&r) != want_k {
                    return Err(Error::InvolutionViolation(alloc::format!("[{p}, {q}] ∝ {r} in the wrong part")));
                }
            }
        }
        Ok(())
    }

    /// Pairwise commutation within `h` and maximality inside `m`.
    pub fn h_is_maximal_abelian(&self) -> bool {
        let h = &self.h_part;
        let abelian = h.iter().enumerate().all(|(i, p)| h[..i].iter().all(|q| p.commutes_with(q)));
        abelian
            && self
                .m_part
                .iter()
                .filter(|p| !h.contains(p))
                .all(|p| h.iter().any(|q| !p.commutes_with(q)))
    }
}

/// Splits a closed basis by Y-count parity and verifies the Cartan relations.
pub fn involution_split(g: &LieBasis) -> Result<CartanSplit> {
    let inv = InvolutionTag::EvenY;
    let (k_part, m_part) = g.elements().iter().partition(|p| inv.in_k(p));
    let split = CartanSplit { involution: inv, g: g.clone(), k_part, m_part, h_part: Vec::new() };
    split.verify_relations()?;
    Ok(split)
}

/// Greedy maximal abelian subalgebra of `m`, starting from the first string of
/// `seed` that lies in `m` and scanning `m` in basis order.
pub fn cartan_subalgebra(split: &CartanSplit, seed: &PauliSum) -> Result<CartanSplit> {
    let first = seed.strings().find(|p| split.m_part.contains(p)).ok_or(Error::SeedNotInM)?;
    let mut h = vec![*first];
    for p in &split.m_part {
        if !h.contains(p) && h.iter().all(|q| p.commutes_with(q)) {
            h.push(*p);
        }
    }
    Ok(CartanSplit { h_part: h, ..split.clone() })
}

/// `e^{i a k} S e^{-i a k}` computed term by term.
pub fn adjoint_rotate(sum: &PauliSum, k: &PauliString, a: f64) -> Result<PauliSum> {
    if k.n_qubits() != sum.n_qubits() {
        return Err(Error::QubitMismatch { left: sum.n_qubits(), right: k.n_qubits() });
    }
    let (s, c) = sin_cos(2.0 * a);
    let mut out = PauliSum::with_threshold(sum.n_qubits(), sum.threshold())?;
    for (p, coef) in sum.iter() {
        if k.commutes_with(p) {
            out.add_term(*p, coef)?;
        } else {
            // e^{2iak} P = cos 2a P + i sin 2a (kP)
            let (phase, r) = k.product(p);
            out.add_term(*p, coef * c)?;
            out.add_term(r, coef * s * rotation_sign(phase))?;
        }
    }
    Ok(out)
}

/// `Re(i · phase)` for an anticommuting product `kP = phase · R`.
fn rotation_sign(phase: crate::pauli::Phase) -> f64 {
    phase.times_i_real()
}

/// Per `k` generator, the basis pairs `(b, r, f)` with `Ad(b) = cos 2a b + sin 2a f r`
/// and `Ad(r) = cos 2a r - sin 2a f b`; each unordered pair appears once.
#[derive(Clone, Debug)]
pub(crate) struct AdjointTable {
    pairs: Vec<Vec<(u32, u32, f64)>>,
}

impl AdjointTable {
    pub(crate) fn new(g: &LieBasis, ks: &[PauliString]) -> Result<Self> {
        let mut pairs = Vec::with_capacity(ks.len());
        for k in ks {
            let mut list = Vec::new();
            for (bi, b) in g.elements().iter().enumerate() {
                if k.commutes_with(b) {
                    continue;
                }
                let (phase, r) = k.product(b);
                let ri = g.position(&r).ok_or_else(|| Error::InvolutionViolation(alloc::format!("{k}·{b} outside g")))?;
                if bi < ri {
                    list.push((bi as u32, ri as u32, rotation_sign(phase)));
                }
            }
            pairs.push(list);
        }
        Ok(AdjointTable { pairs })
    }

    #[inline]
    pub(crate) fn rotate(&self, j: usize, a: f64, v: &mut [f64]) {
        let (s, c) = sin_cos(2.0 * a);
        for &(b, r, f) in &self.pairs[j] {
            let (b, r) = (b as usize, r as usize);
            let (vb, vr) = (v[b], v[r]);
            v[b] = c * vb - s * f * vr;
            v[r] = c * vr + s * f * vb;
        }
    }

    /// `<i[k_j, x], w>`
    #[inline]
    fn derivative(&self, j: usize, x: &[f64], w: &[f64]) -> f64 {
        let mut acc = 0.0;
        for &(b, r, f) in &self.pairs[j] {
            let (b, r) = (b as usize, r as usize);
            acc += f * (x[b] * w[r] - x[r] * w[b]);
        }
        2.0 * acc
    }

    /// `Ad_K(v) = Ad_0(Ad_1(... Ad_{m-1}(v)))`. Angles past the number of
    /// generators continue cyclically (repeated sweeps).
    pub(crate) fn conjugate(&self, angles: &[f64], v: &mut [f64]) {
        for j in (0..angles.len()).rev() {
            self.rotate(j % self.pairs.len(), angles[j], v);
        }
    }

    /// `Ad_K^{-1}(v) = K† v K`
    pub(crate) fn conjugate_inverse(&self, angles: &[f64], v: &mut [f64]) {
        for (j, &a) in angles.iter().enumerate() {
            self.rotate(j % self.pairs.len(), -a, v);
        }
    }

    /// `f(a) = <Ad_K(v), w>` and its gradient, in one backward sweep without storage.
    fn value_and_gradient(&self, angles: &[f64], v: &[f64], h: &[f64], grad: &mut [f64]) -> f64 {
        let mut x = v.to_vec();
        self.conjugate(angles, &mut x);
        let value = dot(&x, h);
        let mut w = h.to_vec();
        for (j, &a) in angles.iter().enumerate() {
            grad[j] = self.derivative(j, &x, &w);
            self.rotate(j, -a, &mut x);
            self.rotate(j, -a, &mut w);
        }
        value
    }

    /// `out = i[k_j, x]`
    fn apply_derivation(&self, j: usize, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for &(b, r, f) in &self.pairs[j] {
            let (b, r) = (b as usize, r as usize);
            out[r] += 2.0 * f * x[b];
            out[b] -= 2.0 * f * x[r];
        }
    }

    /// Exact Hessian of `f(a) = <Ad_K(v), w>`. With `A_j` the factor rotations
    /// and `D_j = i[k_j, ·]`, entry `(j, l)` for `j ≤ l` is
    /// `-<A_j ⋯ A_{l-1} D_l A_l ⋯ A_m v, D_j A_{j-1}^{-1} ⋯ A_1^{-1} w>`.
    fn hessian(&self, angles: &[f64], v: &[f64], w: &[f64]) -> DMatrix<f64> {
        let m = angles.len();
        let mut tails = vec![v.to_vec(); m + 1];
        for l in (0..m).rev() {
            let mut x = tails[l + 1].clone();
            self.rotate(l, angles[l], &mut x);
            tails[l] = x;
        }
        let mut heads = Vec::with_capacity(m);
        let mut wj = w.to_vec();
        for (j, &a) in angles.iter().enumerate() {
            let mut u = vec![0.0; wj.len()];
            self.apply_derivation(j, &wj, &mut u);
            heads.push(u);
            self.rotate(j, -a, &mut wj);
        }
        let mut hess = DMatrix::zeros(m, m);
        let mut z = vec![0.0; v.len()];
        for l in 0..m {
            self.apply_derivation(l, &tails[l], &mut z);
            for j in (0..=l).rev() {
                if j < l {
                    self.rotate(j, angles[j], &mut z);
                }
                let val = -dot(&z, &heads[j]);
                hess[(j, l)] = val;
                hess[(l, j)] = val;
            }
        }
        hess
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CartanOptions {
    /// Largest accepted residual outside `span(h)`, relative to `‖H₀‖`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Stop once every gradient component of the normalized objective is below this.
    pub gradient_floor: f64,
    pub seed: u64,
    /// Random restarts after a converged but non-Cartan point.
    pub max_retries: usize,
    pub closure_cap: usize,
}

impl Default for CartanOptions {
    fn default() -> Self {
        CartanOptions {
            tolerance: 1e-10,
            max_iterations: 10_000,
            gradient_floor: 1e-12,
            seed: 0,
            max_retries: 5,
            closure_cap: 4096,
        }
    }
}

/// Result of the `f(K)` minimization: everything needed to apply
/// `e^{-i H₀ t}` at any `t` with a fixed gate count.
#[derive(Clone, Debug, PartialEq)]
pub struct CartanFactorization {
    n_qubits: usize,
    /// Absent when the factorization was loaded from an artifact.
    pub split: Option<CartanSplit>,
    pub involution: InvolutionTag,
    pub k_angles: Vec<(PauliString, f64)>,
    pub h_coeffs: Vec<(PauliString, f64)>,
    /// Coefficient of the identity in `H₀`, applied as a global phase.
    pub identity_coeff: f64,
    /// Norm of the part of `K† H₀ K` outside `span(h)`, relative to `‖H₀‖`.
    pub residual_norm: f64,
    pub iterations: usize,
}

impl CartanFactorization {
    pub fn from_parts(
        n_qubits: usize,
        involution: InvolutionTag,
        k_angles: Vec<(PauliString, f64)>,
        h_coeffs: Vec<(PauliString, f64)>,
        identity_coeff: f64,
        residual_norm: f64,
    ) -> Result<Self> {
        for p in k_angles.iter().map(|x| &x.0).chain(h_coeffs.iter().map(|x| &x.0)) {
            if p.n_qubits() != n_qubits {
                return Err(Error::QubitMismatch { left: n_qubits, right: p.n_qubits() });
            }
        }
        for (i, (p, _)) in h_coeffs.iter().enumerate() {
            if h_coeffs[..i].iter().any(|(q, _)| !p.commutes_with(q)) {
                return Err(Error::InvalidArgument(alloc::format!("h element {p} does not commute with the rest")));
            }
        }
        Ok(CartanFactorization {
            n_qubits,
            split: None,
            involution,
            k_angles,
            h_coeffs,
            identity_coeff,
            residual_norm,
            iterations: 0,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// `h = Σ_j c_j h_j` (without the identity term).
    pub fn h_sum(&self) -> PauliSum {
        PauliSum::from_terms(self.n_qubits, self.h_coeffs.iter().map(|&(p, c)| (c, p))).expect("consistent qubit count")
    }

    /// `K h K† + c_0 I`, rebuilt with term-wise adjoint rotations.
    pub fn reconstruct(&self) -> PauliSum {
        let mut s = self.h_sum();
        for &(k, a) in self.k_angles.iter().rev() {
            s = adjoint_rotate(&s, &k, a).expect("consistent qubit count");
        }
        let id = PauliString::identity(self.n_qubits).expect("valid qubit count");
        s.add_term(id, self.identity_coeff).expect("consistent qubit count");
        s
    }

    /// `‖K h K† - H₀‖ / ‖H₀‖` in the coefficient 2-norm.
    pub fn reconstruction_error(&self, h0: &PauliSum) -> Result<f64> {
        let diff = self.reconstruct().add_scaled(h0, -1.0)?;
        Ok(diff.norm() / h0.norm().max(f64::MIN_POSITIVE))
    }

    /// Number of Pauli rotations in the circuit; independent of `t`.
    pub fn gate_count(&self) -> usize {
        2 * self.k_angles.len() + self.h_coeffs.len()
    }

    /// `K e^{-i h t} K† |state>` times the identity-term phase.
    pub fn fast_forward(&self, state: &StateVector, t: f64) -> Result<StateVector> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch { expected: 1 << self.n_qubits, got: state.dim() });
        }
        let mut psi = state.clone();
        // K† = Π_{i descending} e^{-i a_i k_i}; the i = 0 factor acts first
        for &(k, a) in &self.k_angles {
            psi.rotate_unchecked(&k, a);
        }
        for &(p, c) in &self.h_coeffs {
            psi.rotate_unchecked(&p, c * t);
        }
        for &(k, a) in self.k_angles.iter().rev() {
            psi.rotate_unchecked(&k, -a);
        }
        if self.identity_coeff != 0.0 {
            psi.scale(cis(-self.identity_coeff * t));
        }
        Ok(psi)
    }
}

pub fn fast_forward_apply(fact: &CartanFactorization, t: f64, state: &StateVector) -> Result<StateVector> {
    fact.fast_forward(state, t)
}

/// Coefficients of the element `v ∈ h` whose orbit is minimized against `H₀`:
/// `γ_i = π^i`, normalized. Each power exceeds the sum of all smaller ones,
/// so no signed combination of them vanishes and `v` is regular.
pub fn v_coefficients(n_h: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n_h).map(|i| pow(PI, i as f64)).collect();
    let norm = norm2(&raw);
    raw.into_iter().map(|x| x / norm).collect()
}

/// Minimizes `f(K) = <K v K†, H₀>` over the angles of `K` and extracts `h = K† H₀ K`.
pub fn minimize_fk(split: &CartanSplit, h0: &PauliSum, opts: &CartanOptions) -> Result<CartanFactorization> {
    if split.h_part.is_empty() {
        return Err(Error::InvalidArgument("empty Cartan subalgebra".into()));
    }
    let n = split.g.n_qubits();
    if h0.n_qubits() != n {
        return Err(Error::QubitMismatch { left: n, right: h0.n_qubits() });
    }
    let identity_coeff = h0.identity_coeff();
    let mut target = vec![0.0; split.g.len()];
    for (p, c) in h0.iter() {
        if p.is_identity() {
            continue;
        }
        match split.g.position(p) {
            Some(i) if !split.involution.in_k(p) => target[i] = c,
            _ => return Err(Error::NotInM(p.label())),
        }
    }
    let h_norm = norm2(&target);
    if h_norm == 0.0 {
        // H₀ ∝ I: nothing to diagonalize
        return Ok(CartanFactorization {
            n_qubits: n,
            split: Some(split.clone()),
            involution: split.involution,
            k_angles: split.k_part.iter().map(|&k| (k, 0.0)).collect(),
            h_coeffs: split.h_part.iter().map(|&p| (p, 0.0)).collect(),
            identity_coeff,
            residual_norm: 0.0,
            iterations: 0,
        });
    }
    let table = AdjointTable::new(&split.g, &split.k_part)?;
    let h_index: Vec<usize> = split.h_part.iter().map(|p| split.g.position(p).expect("h ⊂ g")).collect();
    let mut v = vec![0.0; split.g.len()];
    for (&i, g) in h_index.iter().zip(v_coefficients(h_index.len())) {
        v[i] = g;
    }
    let unit_target: Vec<f64> = target.iter().map(|x| x / h_norm).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start = vec![0.0; split.k_part.len()];
    let mut last_err = None;
    for attempt in 0..=opts.max_retries {
        if attempt > 0 {
            start.iter_mut().for_each(|a| *a = rng.random_range(-PI..PI));
        }
        let (angles, iterations, grad_norm, exhausted) = optimize_angles(&table, &start, &v, &unit_target, &h_index, opts);
        let (h_coeffs, residual) = extract_h(&table, &angles, &target, &h_index, h_norm);
        if residual <= opts.tolerance {
            return Ok(CartanFactorization {
                n_qubits: n,
                split: Some(split.clone()),
                involution: split.involution,
                k_angles: split.k_part.iter().copied().cycle().zip(angles).collect(),
                h_coeffs: split.h_part.iter().copied().zip(h_coeffs).collect(),
                identity_coeff,
                residual_norm: residual,
                iterations,
            });
        }
        last_err = Some(if exhausted {
            Error::NoConvergence { iterations, gradient_norm: grad_norm }
        } else {
            Error::ResidualTooLarge { residual, tolerance: opts.tolerance }
        });
    }
    Err(last_err.expect("at least one attempt"))
}

/// Gradient size at which BFGS hands over to the Newton stages.
const NEWTON_SWITCH: f64 = 1e-4;
/// Trust-region steps per stage before the target is re-centred.
const STAGE_STEPS: usize = 20;
const FIRST_CHART_STEPS: usize = 8;
const MAX_STAGES: usize = 16;

/// BFGS from `start` until close to a critical point, then trust-region
/// Newton in stages. A product of O(1) angles is a badly conditioned chart in
/// the directions that near-degenerate levels of `H₀` leave almost flat, so
/// each stage conjugates the target by everything found so far and optimizes
/// a fresh sweep of angles starting from zero. The returned angles are the
/// concatenated sweeps. Returns `(angles, iterations, grad_norm, exhausted)`.
fn optimize_angles(
    table: &AdjointTable,
    start: &[f64],
    v: &[f64],
    target: &[f64],
    h_index: &[usize],
    opts: &CartanOptions,
) -> (Vec<f64>, usize, f64, bool) {
    let m = start.len();
    if m == 0 {
        return (Vec::new(), 0, 0.0, false);
    }
    // stop well below the acceptance tolerance so long-time propagation keeps its accuracy
    let goal = 1e-2 * opts.tolerance;
    let gtol = opts.gradient_floor.max(NEWTON_SWITCH);
    let out = optimize::bfgs(start, |a, g| table.value_and_gradient(a, v, target, g), gtol, opts.max_iterations);
    let mut iterations = out.iterations;
    let mut angles = out.x;
    // a few Newton steps in the original chart finish well-conditioned problems in one sweep
    iterations += trust_region(table, &mut angles, v, target, opts.gradient_floor, FIRST_CHART_STEPS);
    let mut w = target.to_vec();
    table.conjugate_inverse(&angles, &mut w);
    let mut residual = off_h_norm(&w, h_index);
    let mut idle = 0;
    for _ in 0..MAX_STAGES {
        if residual <= goal || iterations >= opts.max_iterations || idle >= 2 {
            break;
        }
        let mut a = vec![0.0; m];
        iterations += trust_region(table, &mut a, v, &w, opts.gradient_floor, STAGE_STEPS);
        if a.iter().all(|&x| x == 0.0) {
            break;
        }
        table.conjugate_inverse(&a, &mut w);
        angles.extend_from_slice(&a);
        let next = off_h_norm(&w, h_index);
        idle = if next < 0.5 * residual { 0 } else { idle + 1 };
        residual = next;
    }
    let mut g = vec![0.0; m];
    table.value_and_gradient(&vec![0.0; m], v, &w, &mut g);
    let grad_norm = inf_norm(&g);
    let exhausted = out.status == optimize::Status::MaxIterations || iterations >= opts.max_iterations;
    (angles, iterations, grad_norm, exhausted && residual > goal)
}

fn off_h_norm(w: &[f64], h_index: &[usize]) -> f64 {
    let rest: f64 = w.iter().enumerate().filter(|(i, _)| !h_index.contains(i)).fold(0.0, |s, (_, x)| s + x * x);
    crate::math::sqrt(rest)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Trust-region Newton on `f` with the exact Hessian. The subproblem is
/// solved in the Hessian eigenbasis, so negative curvature is followed
/// rather than avoided. Returns the number of iterations.
fn trust_region(table: &AdjointTable, angles: &mut [f64], v: &[f64], h: &[f64], floor: f64, max_iter: usize) -> usize {
    let m = angles.len();
    let mut g = vec![0.0; m];
    let mut gt = vec![0.0; m];
    let mut trial = vec![0.0; m];
    let mut f0 = table.value_and_gradient(angles, v, h, &mut g);
    let mut radius = 0.5;
    let mut hess_eig = None;
    for it in 0..max_iter {
        if inf_norm(&g) < floor {
            return it;
        }
        let eig = hess_eig.get_or_insert_with(|| table.hessian(angles, v, h).symmetric_eigen());
        let gq: Vec<f64> = (0..m).map(|k| eig.eigenvectors.column(k).iter().zip(&g).map(|(a, b)| a * b).sum()).collect();
        let lam = &eig.eigenvalues;
        let lo = lam.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        let step_norm = |nu: f64| -> f64 {
            crate::math::sqrt(gq.iter().zip(lam.iter()).map(|(c, l)| { let r = c / (l + nu); r * r }).sum())
        };
        // smallest shift nu >= max(0, -lo) with |p(nu)| <= radius
        let base = if lo > 0.0 { 0.0 } else { -lo + 1e-12 * lam.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1e-300) };
        let nu = if step_norm(base) <= radius {
            base
        } else {
            let (mut a, mut b) = (base, base + 1.0);
            while step_norm(b) > radius {
                b = base + 2.0 * (b - base);
            }
            for _ in 0..100 {
                let mid = 0.5 * (a + b);
                if step_norm(mid) > radius {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            b
        };
        let coeffs: Vec<f64> = gq.iter().zip(lam.iter()).map(|(c, l)| -c / (l + nu)).collect();
        let mut predicted = 0.0;
        for k in 0..m {
            predicted += gq[k] * coeffs[k] + 0.5 * lam[k] * coeffs[k] * coeffs[k];
        }
        let step = &eig.eigenvectors * nalgebra::DVector::from_column_slice(&coeffs);
        for i in 0..m {
            trial[i] = angles[i] + step[i];
        }
        let ft = table.value_and_gradient(&trial, v, h, &mut gt);
        let actual = ft - f0;
        let rho = if predicted < 0.0 { actual / predicted } else { -1.0 };
        let snorm = step.norm();
        // rounding makes tiny predicted decreases unreliable; accept if the gradient shrinks
        let noisy = predicted.abs() < 1e-13 * f0.abs().max(1.0);
        if rho > 0.1 || (noisy && inf_norm(&gt) < inf_norm(&g)) {
            angles.copy_from_slice(&trial);
            core::mem::swap(&mut g, &mut gt);
            f0 = ft;
            hess_eig = None;
            if rho > 0.75 && snorm > 0.8 * radius {
                radius = (2.0 * radius).min(4.0);
            }
        } else {
            radius = 0.25 * snorm.min(radius);
            if radius < 1e-14 {
                return it + 1;
            }
        }
    }
    max_iter
}

/// `h = K† H₀ K`: coefficients on `h` and the relative norm of everything else.
fn extract_h(table: &AdjointTable, angles: &[f64], target: &[f64], h_index: &[usize], h_norm: f64) -> (Vec<f64>, f64) {
    let mut w = target.to_vec();
    table.conjugate_inverse(angles, &mut w);
    let coeffs = h_index.iter().map(|&i| w[i]).collect();
    (coeffs, off_h_norm(&w, h_index) / h_norm)
}

/// Closure of `H₀`'s terms, even-Y split, subalgebra seeded by `H₀`'s first
/// non-identity term, then [`minimize_fk`].
pub fn factorize(h0: &PauliSum, opts: &CartanOptions) -> Result<CartanFactorization> {
    let gens: Vec<PauliString> = h0.strings().filter(|p| !p.is_identity()).copied().collect();
    if gens.is_empty() {
        let n = h0.n_qubits();
        return Ok(CartanFactorization {
            n_qubits: n,
            split: None,
            involution: InvolutionTag::EvenY,
            k_angles: Vec::new(),
            h_coeffs: Vec::new(),
            identity_coeff: h0.identity_coeff(),
            residual_norm: 0.0,
            iterations: 0,
        });
    }
    let g = lie_closure(&gens, opts.closure_cap)?;
    let split = involution_split(&g)?;
    let split = cartan_subalgebra(&split, &h0.traceless())?;
    minimize_fk(&split, h0, opts)
}

/// Human-readable one-line summary.
pub fn describe(f: &CartanFactorization) -> String {
    alloc::format!(
        "|k| = {}, |h| = {}, residual = {:.3e}, iterations = {}",
        f.k_angles.len(),
        f.h_coeffs.len(),
        f.residual_norm,
        f.iterations
    )
}

/// Sorted map view of `h`, handy for comparisons.
pub fn h_map(f: &CartanFactorization) -> BTreeMap<PauliString, f64> {
    f.h_coeffs.iter().copied().collect()
}

#[cfg(test)]
mod tests;
