use super::*;
use crate::linalg::{hermitian_eigen, sum_matrix};
use crate::math::C64;
use crate::pauli::killing_inner;
use crate::state::DensePropagator;
use proptest::prelude::*;

fn ps(s: &str) -> PauliString {
    s.parse().unwrap()
}

fn strings(v: &[&str]) -> Vec<PauliString> {
    v.iter().map(|s| ps(s)).collect()
}

fn tfim2() -> PauliSum {
    PauliSum::parse_inline("1 ZZ; 1 XI; 1 IX").unwrap()
}

fn heisenberg(n: usize, periodic: bool) -> PauliSum {
    let mut h = PauliSum::new(n).unwrap();
    let bonds = if periodic { n } else { n - 1 };
    for i in 0..bonds {
        let j = (i + 1) % n;
        for p in [crate::pauli::Pauli::X, crate::pauli::Pauli::Y, crate::pauli::Pauli::Z] {
            h.add_term(PauliString::from_ops(n, &[(i, p), (j, p)]).unwrap(), 1.0).unwrap();
        }
    }
    h
}

fn split_of(h: &PauliSum) -> CartanSplit {
    let gens: Vec<_> = h.strings().copied().collect();
    let s = involution_split(&lie_closure(&gens, 4096).unwrap()).unwrap();
    cartan_subalgebra(&s, h).unwrap()
}

#[test]
fn tfim2_split_and_subalgebra() {
    let g = lie_closure(&strings(&["ZZ", "XI", "IX"]), 100).unwrap();
    let s = involution_split(&g).unwrap();
    assert_eq!(s.k_part, strings(&["YZ", "ZY"]));
    assert_eq!(s.m_part, strings(&["ZZ", "XI", "IX", "YY"]));
    let s = cartan_subalgebra(&s, &tfim2()).unwrap();
    assert_eq!(s.h_part, strings(&["ZZ", "YY"]));
    assert!(s.h_is_maximal_abelian());
}

#[test]
fn singleton_split() {
    let g = lie_closure(&[ps("Z")], 10).unwrap();
    let s = involution_split(&g).unwrap();
    assert!(s.k_part.is_empty());
    assert_eq!(s.m_part, vec![ps("Z")]);
    let s = cartan_subalgebra(&s, &PauliSum::parse_inline("1 Z").unwrap()).unwrap();
    assert_eq!(s.h_part, vec![ps("Z")]);
}

#[test]
fn heisenberg_terms_land_in_m() {
    let s = split_of(&heisenberg(2, false));
    assert!(s.k_part.is_empty());
    assert_eq!(s.h_part, s.m_part);
    let s = split_of(&heisenberg(4, true));
    assert_eq!((s.g.len(), s.k_part.len(), s.m_part.len()), (60, 24, 36));
    for p in heisenberg(4, true).strings() {
        assert!(s.m_part.contains(p));
    }
    assert!(s.h_is_maximal_abelian());
}

#[test]
fn non_closed_input_is_rejected() {
    // {X, Z} without Y is not closed under commutators
    let g = LieBasis::from_elements(&strings(&["X", "Z"])).unwrap();
    assert!(matches!(involution_split(&g), Err(Error::InvolutionViolation(_))));
}

#[test]
fn seed_outside_m() {
    let s = involution_split(&lie_closure(&strings(&["ZZ", "XI", "IX"]), 100).unwrap()).unwrap();
    assert_eq!(cartan_subalgebra(&s, &PauliSum::parse_inline("1 YZ").unwrap()), Err(Error::SeedNotInM));
}

#[test]
fn adjoint_rotate_examples() {
    let z = PauliSum::parse_inline("1 Z").unwrap();
    let r = adjoint_rotate(&z, &ps("X"), PI / 4.0).unwrap();
    assert!((r.coeff(&ps("Y")) - 1.0).abs() < 1e-15);
    assert!(r.coeff(&ps("Z")).abs() < 1e-15);
    let h = tfim2();
    assert_eq!(adjoint_rotate(&h, &ps("YZ"), 0.0).unwrap().max_abs_diff(&h), 0.0);
    let zz = PauliSum::parse_inline("2 ZZ; -1 ZI").unwrap();
    assert_eq!(adjoint_rotate(&zz, &ps("ZZ"), 0.7).unwrap(), zz);
}

/// Dense `e^{iak} S e^{-iak}` projected back onto Pauli strings.
fn dense_conjugation(sum: &PauliSum, k: &PauliString, a: f64) -> DMatrix<C64> {
    let km = crate::linalg::string_matrix(k);
    let d = km.nrows();
    let u = DMatrix::<C64>::identity(d, d) * C64::new(crate::math::cos(a), 0.0) + km * C64::new(0.0, crate::math::sin(a));
    &u * sum_matrix(sum) * u.adjoint()
}

use nalgebra::DMatrix;

proptest! {
    #[test]
    fn adjoint_rotate_matches_dense_conjugation(
        terms in proptest::collection::vec((0u64..8, 0u64..8, -1.0f64..1.0), 1..6),
        kx in 0u64..8, kz in 0u64..8, a in -3.0f64..3.0,
    ) {
        let mut s = PauliSum::new(3).unwrap();
        for (x, z, c) in terms {
            s.add_term(PauliString::from_masks(3, x, z).unwrap(), c).unwrap();
        }
        let k = PauliString::from_masks(3, kx, kz).unwrap();
        let r = adjoint_rotate(&s, &k, a).unwrap();
        let diff = sum_matrix(&r) - dense_conjugation(&s, &k, a);
        prop_assert!(diff.norm() < 1e-12);
        let (before, after) = (killing_inner(&s, &s).unwrap(), killing_inner(&r, &r).unwrap());
        prop_assert!((before - after).abs() <= 1e-12 * before.max(1.0));
    }
}

#[test]
fn table_rotation_agrees_with_term_rotation() {
    let h = heisenberg(4, true);
    let s = split_of(&h);
    let table = AdjointTable::new(&s.g, &s.k_part).unwrap();
    let mut v = vec![0.0; s.g.len()];
    let mut sum = PauliSum::new(4).unwrap();
    for (i, p) in s.g.elements().iter().enumerate() {
        v[i] = 0.1 * i as f64 - 1.0;
        sum.add_term(*p, v[i]).unwrap();
    }
    for (j, k) in s.k_part.iter().enumerate().take(6) {
        let a = 0.3 + 0.17 * j as f64;
        table.rotate(j, a, &mut v);
        sum = adjoint_rotate(&sum, k, a).unwrap();
        for (i, p) in s.g.elements().iter().enumerate() {
            assert!((v[i] - sum.coeff(p)).abs() < 1e-13);
        }
    }
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    let h = heisenberg(4, true);
    let s = split_of(&h);
    let table = AdjointTable::new(&s.g, &s.k_part).unwrap();
    let mut v = vec![0.0; s.g.len()];
    for (p, g) in s.h_part.iter().zip(v_coefficients(s.h_part.len())) {
        v[s.g.position(p).unwrap()] = g;
    }
    let mut target = vec![0.0; s.g.len()];
    for (p, c) in h.iter() {
        target[s.g.position(p).unwrap()] = c;
    }
    let angles: Vec<f64> = (0..s.k_part.len()).map(|i| (i as f64 * 0.37).sin()).collect();
    let mut g = vec![0.0; angles.len()];
    table.value_and_gradient(&angles, &v, &target, &mut g);
    let mut scratch = vec![0.0; angles.len()];
    let eps = 1e-6;
    for j in 0..angles.len() {
        let mut a = angles.clone();
        a[j] += eps;
        let fp = table.value_and_gradient(&a, &v, &target, &mut scratch);
        a[j] -= 2.0 * eps;
        let fm = table.value_and_gradient(&a, &v, &target, &mut scratch);
        assert!(((fp - fm) / (2.0 * eps) - g[j]).abs() < 1e-8);
    }
}

#[test]
fn trivial_factorization_for_abelian_h() {
    let h = heisenberg(2, false);
    let f = factorize(&h, &CartanOptions::default()).unwrap();
    assert!(f.k_angles.is_empty());
    for (p, c) in &f.h_coeffs {
        assert!((c - h.coeff(p)).abs() < 1e-15);
    }
    assert_eq!(f.residual_norm, 0.0);
}

fn assert_isospectral(a: &PauliSum, b: &PauliSum) {
    let (ea, _) = hermitian_eigen(&sum_matrix(a));
    let (eb, _) = hermitian_eigen(&sum_matrix(b));
    for (x, y) in ea.iter().zip(&eb) {
        assert!((x - y).abs() < 1e-10, "{ea:?} vs {eb:?}");
    }
}

#[test]
fn tfim2_factorization() {
    let h = tfim2();
    let f = factorize(&h, &CartanOptions::default()).unwrap();
    assert!(f.residual_norm < 1e-10);
    assert!(f.reconstruction_error(&h).unwrap() < 1e-10);
    assert_isospectral(&f.h_sum(), &h);
    let psi0 = StateVector::from_bitstring("01").unwrap();
    let exact = DensePropagator::new(&h).unwrap().propagate(&psi0, 5.0).unwrap();
    let ff = f.fast_forward(&psi0, 5.0).unwrap();
    assert!(ff.fidelity(&exact) >= 1.0 - 1e-10);
    assert!(f.fast_forward(&psi0, 0.0).unwrap().fidelity(&psi0) > 1.0 - 1e-14);
}

#[test]
fn scale_invariance() {
    let h = tfim2();
    let opts = CartanOptions::default();
    let f1 = factorize(&h, &opts).unwrap();
    let f2 = factorize(&h.scaled(2.0), &opts).unwrap();
    for ((k1, a1), (k2, a2)) in f1.k_angles.iter().zip(&f2.k_angles) {
        assert_eq!(k1, k2);
        assert!((a1 - a2).abs() < 1e-9);
    }
    for ((p1, c1), (p2, c2)) in f1.h_coeffs.iter().zip(&f2.h_coeffs) {
        assert_eq!(p1, p2);
        assert!((2.0 * c1 - c2).abs() < 1e-9);
    }
}

#[test]
fn identity_term_becomes_global_phase() {
    let h = PauliSum::parse_inline("0.7 II; 1 ZZ; 1 XI; 1 IX").unwrap();
    let f = factorize(&h, &CartanOptions::default()).unwrap();
    assert_eq!(f.identity_coeff, 0.7);
    let psi0 = StateVector::from_bitstring("10").unwrap();
    let exact = DensePropagator::new(&h).unwrap().propagate(&psi0, 2.5).unwrap();
    let ff = f.fast_forward(&psi0, 2.5).unwrap();
    assert!((exact.inner(&ff) - C64::new(1.0, 0.0)).norm() < 1e-10);
}

#[test]
fn singlet_is_stationary() {
    let h = heisenberg(2, false);
    let f = factorize(&h, &CartanOptions::default()).unwrap();
    let s = 1.0 / crate::math::sqrt(2.0);
    let singlet = StateVector::from_amplitudes(vec![
        C64::new(0.0, 0.0),
        C64::new(-s, 0.0),
        C64::new(s, 0.0),
        C64::new(0.0, 0.0),
    ])
    .unwrap();
    for t in [0.3, 7.0, 123.0] {
        assert!((f.fast_forward(&singlet, t).unwrap().inner(&singlet).norm() - 1.0).abs() < 1e-13);
    }
}

fn objective(f: &CartanFactorization, h: &PauliSum) -> impl Fn(&[f64]) -> f64 {
    let split = f.split.clone().unwrap();
    let table = AdjointTable::new(&split.g, &split.k_part).unwrap();
    let mut v = vec![0.0; split.g.len()];
    for (p, g) in split.h_part.iter().zip(v_coefficients(split.h_part.len())) {
        v[split.g.position(p).unwrap()] = g;
    }
    let mut target = vec![0.0; split.g.len()];
    for (p, c) in h.iter() {
        target[split.g.position(p).unwrap()] = c;
    }
    move |a: &[f64]| {
        let mut x = v.clone();
        table.conjugate(a, &mut x);
        dot(&x, &target)
    }
}

#[test]
fn heisenberg4_factorization_is_stationary_and_exact() {
    let h = heisenberg(4, true);
    let f = factorize(&h, &CartanOptions::default()).unwrap();
    assert!(f.reconstruction_error(&h).unwrap() < 1e-9);
    assert_isospectral(&f.h_sum(), &h);
    let obj = objective(&f, &h);
    let a: Vec<f64> = f.k_angles.iter().map(|x| x.1).collect();
    let eps = 1e-5;
    let mut g2 = 0.0;
    for j in 0..a.len() {
        let mut b = a.clone();
        b[j] += eps;
        let fp = obj(&b);
        b[j] -= 2.0 * eps;
        let fm = obj(&b);
        g2 += ((fp - fm) / (2.0 * eps)).powi(2);
    }
    assert!(g2.sqrt() <= 1e-6, "{}", g2.sqrt());
    let psi0 = StateVector::from_bitstring("1000").unwrap();
    let prop = DensePropagator::new(&h).unwrap();
    for t in [1.0, 10.0, 100.0, 1000.0] {
        let fid = f.fast_forward(&psi0, t).unwrap().fidelity(&prop.propagate(&psi0, t).unwrap());
        assert!(fid >= 1.0 - 1e-8, "t = {t}: {fid}");
    }
}

#[test]
fn gate_count_is_time_independent() {
    let f = factorize(&tfim2(), &CartanOptions::default()).unwrap();
    assert_eq!(f.gate_count(), 2 * 2 + 2);
}

#[test]
fn parts_round_trip_reproduces_propagator() {
    let h = tfim2();
    let f = factorize(&h, &CartanOptions::default()).unwrap();
    let g = CartanFactorization::from_parts(2, f.involution, f.k_angles.clone(), f.h_coeffs.clone(), 0.0, f.residual_norm).unwrap();
    let psi0 = StateVector::basis(2, 0).unwrap();
    assert_eq!(f.fast_forward(&psi0, 3.0).unwrap(), g.fast_forward(&psi0, 3.0).unwrap());
}



#[test]
fn hessian_matches_finite_differences() {
    let h = PauliSum::parse_inline("1 XXII; 1 YYII; 1 ZZII; 1 IXXI; 1 IYYI; 1 IZZI; 0.7 IIXX; 0.7 IIYY; 0.7 IIZZ").unwrap();
    let s = split_of(&h);
    let table = AdjointTable::new(&s.g, &s.k_part).unwrap();
    let mut v = vec![0.0; s.g.len()];
    for (p, g) in s.h_part.iter().zip(v_coefficients(s.h_part.len())) {
        v[s.g.position(p).unwrap()] = g;
    }
    let mut w = vec![0.0; s.g.len()];
    for (p, c) in h.iter() {
        w[s.g.position(p).unwrap()] = c;
    }
    let m = s.k_part.len();
    let a: Vec<f64> = (0..m).map(|i| 0.3 * libm::sin(1.7 * i as f64 + 0.2)).collect();
    let hess = table.hessian(&a, &v, &w);
    let eps = 1e-5;
    let (mut gp, mut gm) = (vec![0.0; m], vec![0.0; m]);
    for l in 0..m {
        let mut ap = a.clone();
        ap[l] += eps;
        table.value_and_gradient(&ap, &v, &w, &mut gp);
        ap[l] -= 2.0 * eps;
        table.value_and_gradient(&ap, &v, &w, &mut gm);
        for j in 0..m {
            let fd = (gp[j] - gm[j]) / (2.0 * eps);
            assert!((fd - hess[(j, l)]).abs() < 1e-7, "({j},{l}) {fd} vs {}", hess[(j, l)]);
        }
    }
}
