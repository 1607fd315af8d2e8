//! Pauli strings in symplectic `(x, z)` form, real Pauli sums and the
//! commutator closure of a set of strings.
//!
//! A string on `n` qubits stores two masks: bit `q` of `x` marks an `X`
//! component on qubit `q`, bit `q` of `z` a `Z` component; both set means `Y`.
//! Labels are written with qubit 0 leftmost, so `"ZX"` is `Z` on qubit 0 and
//! `X` on qubit 1. The canonical form carries no phase: [`PauliString::product`]
//! returns the phase of a product separately.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::math::{self, C64};

/// Largest register a [`PauliString`] can describe.
pub const MAX_QUBITS: usize = 64;

/// Default magnitude below which [`PauliSum`] coefficients are dropped.
pub const DEFAULT_PRUNE: f64 = 1e-14;

/// Single-qubit Pauli operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// A power of `i`: one of `+1, +i, -1, -i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    /// `i^k`
    pub fn from_exponent(k: u32) -> Self {
        Phase((k % 4) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn is_real(self) -> bool {
        self.0.is_multiple_of(2)
    }

    pub fn to_complex(self) -> C64 {
        match self.0 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    }

    /// The real number `i * self`, defined when `self` is `±i`.
    pub(crate) fn times_i_real(self) -> f64 {
        match self.0 {
            1 => -1.0,
            3 => 1.0,
            _ => panic!("phase {self:?} is real"),
        }
    }
}

impl core::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

impl core::ops::Neg for Phase {
    type Output = Phase;
    fn neg(self) -> Phase {
        Phase((self.0 + 2) % 4)
    }
}

/// An `n`-qubit Pauli string without phase.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n: u8,
    x: u64,
    z: u64,
}

impl PauliString {
    fn check_n(n: usize) -> Result<()> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::BadQubitCount(n));
        }
        Ok(())
    }

    fn mask(n: usize) -> u64 {
        if n == 64 {
            u64::MAX
        } else {
            (1u64 << n) - 1
        }
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::check_n(n)?;
        Ok(PauliString { n: n as u8, x: 0, z: 0 })
    }

    /// Builds a string from raw masks. Bits at or above `n` are rejected.
    pub fn from_masks(n: usize, x: u64, z: u64) -> Result<Self> {
        Self::check_n(n)?;
        let m = Self::mask(n);
        if x & !m != 0 || z & !m != 0 {
            return Err(Error::InvalidArgument("mask bits beyond qubit count".to_string()));
        }
        Ok(PauliString { n: n as u8, x, z })
    }

    /// `p` on qubit `q`, identity elsewhere.
    pub fn single(n: usize, q: usize, p: Pauli) -> Result<Self> {
        Self::from_ops(n, &[(q, p)])
    }

    /// Product of single-qubit operators on distinct qubits.
    pub fn from_ops(n: usize, ops: &[(usize, Pauli)]) -> Result<Self> {
        let mut s = Self::identity(n)?;
        for &(q, p) in ops {
            if q >= n {
                return Err(Error::InvalidArgument(alloc::format!("qubit {q} out of range for {n} qubits")));
            }
            s.set(q, p);
        }
        Ok(s)
    }

    fn set(&mut self, q: usize, p: Pauli) {
        let (bx, bz) = p.bits();
        let bit = 1u64 << q;
        self.x = if bx { self.x | bit } else { self.x & !bit };
        self.z = if bz { self.z | bit } else { self.z & !bit };
    }

    pub fn n_qubits(&self) -> usize {
        self.n as usize
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn get(&self, q: usize) -> Pauli {
        Pauli::from_bits(self.x >> q & 1 == 1, self.z >> q & 1 == 1)
    }

    /// Number of `Y` factors.
    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// `P Q = phase * R`, without the size check.
    ///
    /// Writing `P = i^{y_P} X^{x_P} Z^{z_P}`, moving `Z^{z_P}` past `X^{x_Q}`
    /// costs `(-1)^{|z_P & x_Q|}`, and `R` absorbs `i^{y_R}`.
    #[inline]
    pub fn product(&self, other: &PauliString) -> (Phase, PauliString) {
        debug_assert_eq!(self.n, other.n);
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let y_r = (x & z).count_ones();
        let k = self.y_count() + other.y_count() + 2 * (self.z & other.x).count_ones() + 4 * MAX_QUBITS as u32 - y_r;
        (Phase::from_exponent(k), PauliString { n: self.n, x, z })
    }

    /// Symplectic commutation test, without the size check.
    #[inline]
    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    pub fn label(&self) -> String {
        (0..self.n as usize).map(|q| self.get(q).as_char()).collect()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n as usize {
            write!(f, "{}", self.get(q).as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let n = s.chars().count();
        let mut out = PauliString::identity(n).map_err(|_| Error::InvalidLabel(s.to_string()))?;
        for (q, c) in s.chars().enumerate() {
            let p = Pauli::from_char(c).ok_or_else(|| Error::InvalidLabel(s.to_string()))?;
            out.set(q, p);
        }
        Ok(out)
    }
}

fn same_size(p: &PauliString, q: &PauliString) -> Result<()> {
    if p.n != q.n {
        return Err(Error::QubitMismatch { left: p.n_qubits(), right: q.n_qubits() });
    }
    Ok(())
}

/// Matrix product `P Q` as `(phase, R)`.
pub fn multiply(p: &PauliString, q: &PauliString) -> Result<(Phase, PauliString)> {
    same_size(p, q)?;
    Ok(p.product(q))
}

pub fn commutes(p: &PauliString, q: &PauliString) -> Result<bool> {
    same_size(p, q)?;
    Ok(p.commutes_with(q))
}

/// `[P, Q] = coeff * R`, or `None` when the strings commute. The coefficient
/// is always `±2i`.
pub fn commutator(p: &PauliString, q: &PauliString) -> Result<Option<(C64, PauliString)>> {
    same_size(p, q)?;
    if p.commutes_with(q) {
        return Ok(None);
    }
    let (phase, r) = p.product(q);
    Ok(Some((phase.to_complex() * 2.0, r)))
}

/// Real linear combination of Pauli strings, kept in insertion order.
///
/// Coefficients whose magnitude falls below the prune threshold are removed.
#[derive(Clone)]
pub struct PauliSum {
    n: usize,
    terms: Vec<(PauliString, f64)>,
    index: BTreeMap<PauliString, usize>,
    threshold: f64,
}

impl PauliSum {
    pub fn new(n: usize) -> Result<Self> {
        PauliString::check_n(n)?;
        Ok(PauliSum { n, terms: Vec::new(), index: BTreeMap::new(), threshold: DEFAULT_PRUNE })
    }

    pub fn with_threshold(n: usize, threshold: f64) -> Result<Self> {
        let mut s = Self::new(n)?;
        s.threshold = threshold;
        Ok(s)
    }

    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, PauliString)>,
    {
        let mut s = Self::new(n)?;
        for (c, p) in terms {
            s.add_term(p, c)?;
        }
        Ok(s)
    }

    /// Parses `"0.5 ZZ; -1 XI"`-style inline sums (terms separated by `;`).
    pub fn parse_inline(text: &str) -> Result<Self> {
        let mut n = None;
        let mut terms = Vec::new();
        for chunk in text.split(';').map(str::trim).filter(|c| !c.is_empty()) {
            let mut parts = chunk.split_whitespace();
            let (a, b) = (parts.next(), parts.next());
            let (coeff, label) = match (a, b) {
                (Some(a), Some(b)) => (
                    a.parse::<f64>().map_err(|_| Error::InvalidArgument(alloc::format!("bad coefficient {a:?}")))?,
                    b,
                ),
                (Some(a), None) => (1.0, a),
                _ => unreachable!(),
            };
            if parts.next().is_some() {
                return Err(Error::InvalidArgument(alloc::format!("trailing text in term {chunk:?}")));
            }
            let p: PauliString = label.parse()?;
            n = Some(p.n_qubits());
            terms.push((coeff, p));
        }
        let n = n.ok_or_else(|| Error::InvalidArgument("empty Pauli sum".to_string()))?;
        Self::from_terms(n, terms)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, f64)> + '_ {
        self.terms.iter().map(|(p, c)| (p, *c))
    }

    pub fn strings(&self) -> impl Iterator<Item = &PauliString> + '_ {
        self.terms.iter().map(|(p, _)| p)
    }

    pub fn coeff(&self, p: &PauliString) -> f64 {
        self.index.get(p).map_or(0.0, |&i| self.terms[i].1)
    }

    /// Adds `c * p`, merging with an existing term.
    pub fn add_term(&mut self, p: PauliString, c: f64) -> Result<()> {
        if p.n_qubits() != self.n {
            return Err(Error::QubitMismatch { left: self.n, right: p.n_qubits() });
        }
        match self.index.get(&p) {
            Some(&i) => {
                self.terms[i].1 += c;
                if self.terms[i].1.abs() < self.threshold {
                    self.remove_at(i);
                }
            }
            None => {
                if c.abs() >= self.threshold {
                    self.index.insert(p, self.terms.len());
                    self.terms.push((p, c));
                }
            }
        }
        Ok(())
    }

    fn remove_at(&mut self, i: usize) {
        let (p, _) = self.terms.remove(i);
        self.index.remove(&p);
        for v in self.index.values_mut() {
            if *v > i {
                *v -= 1;
            }
        }
    }

    pub fn scaled(&self, factor: f64) -> PauliSum {
        let mut out = PauliSum { n: self.n, terms: Vec::new(), index: BTreeMap::new(), threshold: self.threshold };
        for &(p, c) in &self.terms {
            let _ = out.add_term(p, c * factor);
        }
        out
    }

    /// `self + factor * other`
    pub fn add_scaled(&self, other: &PauliSum, factor: f64) -> Result<PauliSum> {
        if other.n != self.n {
            return Err(Error::QubitMismatch { left: self.n, right: other.n });
        }
        let mut out = self.clone();
        for &(p, c) in &other.terms {
            out.add_term(p, c * factor)?;
        }
        Ok(out)
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        math::sqrt(self.terms.iter().fold(0.0, |s, (_, c)| s + c * c))
    }

    /// Coefficient of the identity string.
    pub fn identity_coeff(&self) -> f64 {
        self.terms.iter().find(|(p, _)| p.is_identity()).map_or(0.0, |t| t.1)
    }

    /// The sum with its identity term removed.
    pub fn traceless(&self) -> PauliSum {
        let mut out = PauliSum { n: self.n, terms: Vec::new(), index: BTreeMap::new(), threshold: self.threshold };
        for &(p, c) in &self.terms {
            if !p.is_identity() {
                let _ = out.add_term(p, c);
            }
        }
        out
    }

    /// The real sum `S` with `[self, other] = i S`.
    pub fn commutator(&self, other: &PauliSum) -> Result<PauliSum> {
        if other.n != self.n {
            return Err(Error::QubitMismatch { left: self.n, right: other.n });
        }
        let mut out = PauliSum::with_threshold(self.n, self.threshold)?;
        for &(p, a) in &self.terms {
            for &(q, b) in &other.terms {
                if !p.commutes_with(&q) {
                    let (phase, r) = p.product(&q);
                    // [P,Q] = 2 phase R, phase = ±i, so i S gets 2 * (phase / i) = -2 i*phase
                    out.add_term(r, -2.0 * a * b * phase.times_i_real())?;
                }
            }
        }
        Ok(out)
    }

    /// Largest absolute coefficient difference to `other`.
    pub fn max_abs_diff(&self, other: &PauliSum) -> f64 {
        let mut m: f64 = 0.0;
        for &(p, c) in &self.terms {
            m = m.max((c - other.coeff(&p)).abs());
        }
        for &(p, c) in &other.terms {
            if !self.index.contains_key(&p) {
                m = m.max(c.abs());
            }
        }
        m
    }
}

impl fmt::Debug for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut l = f.debug_list();
        for (p, c) in &self.terms {
            l.entry(&(c, p));
        }
        l.finish()
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (p, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{c} {p}")?;
        }
        Ok(())
    }
}

impl PartialEq for PauliSum {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.terms.len() == other.terms.len()
            && self.terms.iter().all(|(p, c)| other.index.get(p).is_some_and(|&i| other.terms[i].1 == *c))
    }
}

/// Killing-type trace form `2^{n+1} Tr(XY)` on real Pauli sums. With
/// `Tr(P_i P_j) = 2^n δ_ij` this is `2^{2n+1}` times the coefficient dot product.
pub fn killing_inner(a: &PauliSum, b: &PauliSum) -> Result<f64> {
    if a.n != b.n {
        return Err(Error::QubitMismatch { left: a.n, right: b.n });
    }
    let dot: f64 = a.iter().map(|(p, c)| c * b.coeff(p)).sum();
    Ok(killing_scale(a.n) * dot)
}

pub(crate) fn killing_scale(n: usize) -> f64 {
    math::pow(2.0, (2 * n + 1) as f64)
}

/// Ordered, duplicate-free set of Pauli strings closed under commutation.
#[derive(Clone, Debug, PartialEq)]
pub struct LieBasis {
    n: usize,
    elements: Vec<PauliString>,
    index: BTreeMap<PauliString, usize>,
}

impl LieBasis {
    /// Basis from explicit, distinct, non-identity strings without closing it.
    pub fn from_elements(elements: &[PauliString]) -> Result<Self> {
        let first = elements.first().ok_or_else(|| Error::InvalidArgument("empty basis".to_string()))?;
        let n = first.n_qubits();
        let mut index = BTreeMap::new();
        for (i, p) in elements.iter().enumerate() {
            same_size(first, p)?;
            if p.is_identity() || index.insert(*p, i).is_some() {
                return Err(Error::InvalidArgument(alloc::format!("repeated or identity basis element {p}")));
            }
        }
        Ok(LieBasis { n, elements: elements.to_vec(), index })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn elements(&self) -> &[PauliString] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn position(&self, p: &PauliString) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn contains(&self, p: &PauliString) -> bool {
        self.index.contains_key(p)
    }

    /// Exhaustive check that every anticommuting pair lands back in the set.
    pub fn is_closed(&self) -> bool {
        self.elements.iter().enumerate().all(|(i, p)| {
            self.elements[..i].iter().all(|q| p.commutes_with(q) || self.contains(&p.product(q).1))
        })
    }
}

/// Commutator closure of `generators`, capped at `cap` elements.
///
/// Elements keep insertion order: the (deduplicated) generators first, then
/// each new string in the order it is found while pairing element `i` with
/// every earlier element `j < i`, for growing `i`. Identity strings are skipped
/// because they commute with everything and lie outside `su(2^n)`.
pub fn lie_closure(generators: &[PauliString], cap: usize) -> Result<LieBasis> {
    let first = generators.first().ok_or_else(|| Error::InvalidArgument("empty generator set".to_string()))?;
    let n = first.n_qubits();
    let mut basis = LieBasis { n, elements: Vec::new(), index: BTreeMap::new() };
    let push = |basis: &mut LieBasis, p: PauliString| -> Result<()> {
        if p.is_identity() || basis.index.contains_key(&p) {
            return Ok(());
        }
        if basis.elements.len() >= cap {
            return Err(Error::ClosureCapExceeded { dim: basis.elements.len() + 1, cap });
        }
        basis.index.insert(p, basis.elements.len());
        basis.elements.push(p);
        Ok(())
    };
    for g in generators {
        same_size(first, g)?;
        push(&mut basis, *g)?;
    }
    let mut i = 0;
    while i < basis.elements.len() {
        for j in 0..i {
            let (p, q) = (basis.elements[i], basis.elements[j]);
            if !p.commutes_with(&q) {
                push(&mut basis, p.product(&q).1)?;
            }
        }
        i += 1;
    }
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    /// Dense matrix of a string, qubit 0 as the least significant index bit.
    fn dense(p: &PauliString) -> Vec<Vec<C64>> {
        let single = |c: Pauli| -> [[C64; 2]; 2] {
            let (o, z, i) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
            match c {
                Pauli::I => [[o, z], [z, o]],
                Pauli::X => [[z, o], [o, z]],
                Pauli::Y => [[z, -i], [i, z]],
                Pauli::Z => [[o, z], [z, -o]],
            }
        };
        let n = p.n_qubits();
        let d = 1 << n;
        let mut m = vec![vec![C64::new(0.0, 0.0); d]; d];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                let mut acc = C64::new(1.0, 0.0);
                for q in 0..n {
                    acc *= single(p.get(q))[r >> q & 1][c >> q & 1];
                }
                *v = acc;
            }
        }
        m
    }

    fn matmul(a: &[Vec<C64>], b: &[Vec<C64>]) -> Vec<Vec<C64>> {
        let d = a.len();
        (0..d).map(|r| (0..d).map(|c| (0..d).map(|k| a[r][k] * b[k][c]).sum()).collect()).collect()
    }

    fn close(a: &[Vec<C64>], b: &[Vec<C64>]) -> bool {
        a.iter().flatten().zip(b.iter().flatten()).all(|(x, y)| (x - y).norm() < 1e-12)
    }

    #[test]
    fn multiply_examples() {
        assert_eq!(multiply(&ps("X"), &ps("Y")).unwrap(), (Phase::I, ps("Z")));
        assert_eq!(multiply(&ps("Y"), &ps("Y")).unwrap(), (Phase::ONE, ps("I")));
        assert_eq!(multiply(&ps("ZZ"), &ps("XI")).unwrap(), (Phase::I, ps("YZ")));
        assert!(matches!(multiply(&ps("X"), &ps("XX")), Err(Error::QubitMismatch { .. })));
    }

    #[test]
    fn commutes_examples() {
        assert!(commutes(&ps("ZZ"), &ps("ZI")).unwrap());
        assert!(!commutes(&ps("X"), &ps("Z")).unwrap());
        assert!(commutes(&ps("YZ"), &ps("ZY")).unwrap());
        // brute force for the last one
        let (a, b) = (dense(&ps("YZ")), dense(&ps("ZY")));
        assert!(close(&matmul(&a, &b), &matmul(&b, &a)));
    }

    #[test]
    fn commutator_examples() {
        let i2 = C64::new(0.0, 2.0);
        assert_eq!(commutator(&ps("X"), &ps("Y")).unwrap(), Some((i2, ps("Z"))));
        assert_eq!(commutator(&ps("ZZ"), &ps("XI")).unwrap(), Some((i2, ps("YZ"))));
        assert_eq!(commutator(&ps("ZZ"), &ps("ZZ")).unwrap(), None);
    }

    #[test]
    fn labels_round_trip() {
        let p = ps("IXYZ");
        assert_eq!(p.to_string(), "IXYZ");
        assert_eq!(p.get(1), Pauli::X);
        assert_eq!(p.y_count(), 1);
        assert!("XQ".parse::<PauliString>().is_err());
        assert!("".parse::<PauliString>().is_err());
    }

    #[test]
    fn closure_of_two_site_tfim() {
        let g = lie_closure(&[ps("ZZ"), ps("XI"), ps("IX")], 100).unwrap();
        let want: Vec<_> = ["ZZ", "XI", "IX", "YZ", "ZY", "YY"].iter().map(|s| ps(s)).collect();
        assert_eq!(g.elements(), &want[..]);
        assert!(g.is_closed());
    }

    #[test]
    fn closure_of_abelian_singleton() {
        let g = lie_closure(&[ps("Z")], 10).unwrap();
        assert_eq!(g.elements(), &[ps("Z")]);
    }

    #[test]
    fn closure_cap() {
        let err = lie_closure(&[ps("ZZ"), ps("XI"), ps("IX")], 5).unwrap_err();
        assert_eq!(err, Error::ClosureCapExceeded { dim: 6, cap: 5 });
    }

    /// Independent fixpoint: keep adding all pairwise products until nothing changes.
    fn brute_closure(gens: &[PauliString]) -> alloc::collections::BTreeSet<PauliString> {
        let mut set: alloc::collections::BTreeSet<_> = gens.iter().copied().collect();
        loop {
            let items: Vec<_> = set.iter().copied().collect();
            let before = set.len();
            for a in &items {
                for b in &items {
                    let (ma, mb) = (dense(a), dense(b));
                    let ab = matmul(&ma, &mb);
                    let ba = matmul(&mb, &ma);
                    if !close(&ab, &ba) {
                        set.insert(a.product(b).1);
                    }
                }
            }
            if set.len() == before {
                return set;
            }
        }
    }

    #[test]
    fn closure_of_periodic_heisenberg_ring_matches_fixpoint() {
        let mut gens = Vec::new();
        for b in 0..4 {
            for p in [Pauli::X, Pauli::Y, Pauli::Z] {
                gens.push(PauliString::from_ops(4, &[(b, p), ((b + 1) % 4, p)]).unwrap());
            }
        }
        let g = lie_closure(&gens, 1000).unwrap();
        let oracle = brute_closure(&gens);
        assert_eq!(g.len(), oracle.len());
        assert!(g.elements().iter().all(|p| oracle.contains(p)));
        assert_eq!(g.len(), 60);
    }

    #[test]
    fn closure_is_idempotent() {
        let g = lie_closure(&[ps("ZZI"), ps("IZZ"), ps("XII"), ps("IXI"), ps("IIX")], 1000).unwrap();
        let again = lie_closure(g.elements(), 1000).unwrap();
        assert_eq!(g.elements(), again.elements());
    }

    #[test]
    fn killing_examples() {
        let x = PauliSum::parse_inline("1 X").unwrap();
        let z = PauliSum::parse_inline("1 Z").unwrap();
        assert_eq!(killing_inner(&x, &x).unwrap(), 8.0);
        assert_eq!(killing_inner(&x, &z).unwrap(), 0.0);
        let a = PauliSum::parse_inline("1 ZZ; 0.5 XI").unwrap();
        let b = PauliSum::parse_inline("1 ZZ").unwrap();
        assert_eq!(killing_inner(&a, &b).unwrap(), 32.0);
        assert!(killing_inner(&a, &x).is_err());
    }

    #[test]
    fn sums_prune_and_merge() {
        let mut s = PauliSum::new(2).unwrap();
        s.add_term(ps("ZZ"), 1.0).unwrap();
        s.add_term(ps("XI"), 1e-15).unwrap();
        assert_eq!(s.len(), 1);
        s.add_term(ps("ZZ"), -1.0 + 1e-16).unwrap();
        assert!(s.is_empty());
        assert!(s.add_term(ps("Z"), 1.0).is_err());
    }

    #[test]
    fn sum_commutator_is_hermitian_part() {
        // [ZZ, XI] = 2i YZ  ->  S = 2 YZ
        let a = PauliSum::parse_inline("1 ZZ").unwrap();
        let b = PauliSum::parse_inline("1 XI").unwrap();
        let s = a.commutator(&b).unwrap();
        assert_eq!(s.coeff(&ps("YZ")), 2.0);
        assert_eq!(s.len(), 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn string3() -> impl Strategy<Value = PauliString> {
            (0u64..8, 0u64..8).prop_map(|(x, z)| PauliString::from_masks(3, x, z).unwrap())
        }

        proptest! {
            #[test]
            fn product_matches_dense(p in string3(), q in string3()) {
                let (phase, r) = p.product(&q);
                let lhs = matmul(&dense(&p), &dense(&q));
                let rhs: Vec<Vec<C64>> = dense(&r).into_iter()
                    .map(|row| row.into_iter().map(|v| v * phase.to_complex()).collect()).collect();
                prop_assert!(close(&lhs, &rhs));
            }

            #[test]
            fn commutes_matches_dense(p in string3(), q in string3()) {
                let (a, b) = (dense(&p), dense(&q));
                prop_assert_eq!(p.commutes_with(&q), close(&matmul(&a, &b), &matmul(&b, &a)));
            }

            #[test]
            fn commutator_matches_dense(p in string3(), q in string3()) {
                let (a, b) = (dense(&p), dense(&q));
                let ab = matmul(&a, &b);
                let ba = matmul(&b, &a);
                let diff: Vec<Vec<C64>> = ab.iter().zip(&ba)
                    .map(|(r1, r2)| r1.iter().zip(r2).map(|(x, y)| x - y).collect()).collect();
                match commutator(&p, &q).unwrap() {
                    None => prop_assert!(diff.iter().flatten().all(|v| v.norm() < 1e-12)),
                    Some((c, r)) => {
                        prop_assert!(c.re == 0.0 && c.im.abs() == 2.0);
                        let want: Vec<Vec<C64>> = dense(&r).into_iter()
                            .map(|row| row.into_iter().map(|v| v * c).collect()).collect();
                        prop_assert!(close(&diff, &want));
                    }
                }
            }

            #[test]
            fn product_order_symmetry(p in string3(), q in string3()) {
                let (f1, r1) = p.product(&q);
                let (f2, r2) = q.product(&p);
                prop_assert_eq!(r1, r2);
                if p.commutes_with(&q) {
                    prop_assert_eq!(f1, f2);
                } else {
                    prop_assert_eq!(f1, -f2);
                }
            }

            #[test]
            fn killing_symmetric_bilinear(a in proptest::collection::vec(-2.0f64..2.0, 4),
                                          b in proptest::collection::vec(-2.0f64..2.0, 4),
                                          s in -3.0f64..3.0) {
                let labels = ["ZZ", "XI", "IX", "YY"];
                let mk = |v: &[f64]| PauliSum::from_terms(2, v.iter().zip(labels).map(|(c, l)| (*c, ps(l)))).unwrap();
                let (x, y) = (mk(&a), mk(&b));
                let k = killing_inner(&x, &y).unwrap();
                prop_assert!((k - killing_inner(&y, &x).unwrap()).abs() < 1e-9);
                let lhs = killing_inner(&x.add_scaled(&y, s).unwrap(), &y).unwrap();
                let rhs = k + s * killing_inner(&y, &y).unwrap();
                prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + rhs.abs()));
            }

            #[test]
            fn killing_of_unit_string(x in 0u64..16, z in 0u64..16) {
                let p = PauliString::from_masks(4, x, z).unwrap();
                let s = PauliSum::from_terms(4, [(1.0, p)]).unwrap();
                prop_assert_eq!(killing_inner(&s, &s).unwrap(), 512.0);
            }
        }
    }
}
