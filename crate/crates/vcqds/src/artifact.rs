//! Text artifact for a Cartan factorization. Angles and coefficients carry 17
//! significant digits, so a reloaded factorization applies the identical
//! circuit without re-optimizing.
//!
//! ```text
//! # cartan factorization
//! n_qubits 2
//! involution even-y
//! identity 0.0000000000000000e0
//! residual 0.0000000000000000e0
//! iterations 0
//! h 2
//! 1.0000000000000000e0 XX
//! 1.0000000000000000e0 ZZ
//! k 0
//! ```
//!
//! `h` lines are `<coefficient> <string>`, `k` lines `<string> <angle>` in
//! circuit order.

use std::path::Path;

use vcqds_core::{CartanFactorization, InvolutionTag, PauliString};

use crate::error::{CliError, Result};
use crate::io;

pub fn format_factorization(f: &CartanFactorization) -> String {
    let mut out = String::from("# cartan factorization\n");
    out += &format!("n_qubits {}\n", f.n_qubits());
    out += &format!("involution {}\n", f.involution);
    out += &format!("identity {:.16e}\n", f.identity_coeff);
    out += &format!("residual {:.16e}\n", f.residual_norm);
    out += &format!("iterations {}\n", f.iterations);
    out += &format!("h {}\n", f.h_coeffs.len());
    for (p, c) in &f.h_coeffs {
        out += &format!("{c:.16e} {p}\n");
    }
    out += &format!("k {}\n", f.k_angles.len());
    for (p, a) in &f.k_angles {
        out += &format!("{p} {a:.16e}\n");
    }
    out
}

pub fn parse_factorization(text: &str) -> std::result::Result<CartanFactorization, (usize, String)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut next = |key: &str| -> std::result::Result<(usize, String), (usize, String)> {
        let (n, l) = lines.next().ok_or((0, format!("missing `{key}` entry")))?;
        if key.is_empty() {
            return Ok((n, l.to_string()));
        }
        let rest = l.strip_prefix(key).filter(|r| r.starts_with(' ')).ok_or((n, format!("expected `{key}`")))?;
        Ok((n, rest.trim().to_string()))
    };
    fn num<T: std::str::FromStr>(n: usize, s: &str) -> std::result::Result<T, (usize, String)> {
        s.parse().map_err(|_| (n, format!("bad number {s:?}")))
    }
    fn string(n: usize, s: &str) -> std::result::Result<PauliString, (usize, String)> {
        s.parse().map_err(|e| (n, format!("{e}")))
    }
    let (ln, v) = next("n_qubits")?;
    let n_qubits: usize = num(ln, &v)?;
    let (ln, v) = next("involution")?;
    let involution: InvolutionTag = v.parse().map_err(|e| (ln, format!("{e}")))?;
    let (ln, v) = next("identity")?;
    let identity = num(ln, &v)?;
    let (ln, v) = next("residual")?;
    let residual = num(ln, &v)?;
    let (ln, v) = next("iterations")?;
    let iterations = num(ln, &v)?;
    let (ln, v) = next("h")?;
    let mut h = Vec::new();
    for _ in 0..num::<usize>(ln, &v)? {
        let (ln, l) = next("")?;
        let (c, p) = l.split_once(' ').ok_or((ln, "expected `<coefficient> <string>`".to_string()))?;
        h.push((string(ln, p.trim())?, num(ln, c)?));
    }
    let (ln, v) = next("k")?;
    let mut k = Vec::new();
    for _ in 0..num::<usize>(ln, &v)? {
        let (ln, l) = next("")?;
        let (p, a) = l.split_once(' ').ok_or((ln, "expected `<string> <angle>`".to_string()))?;
        k.push((string(ln, p)?, num(ln, a.trim())?));
    }
    if let Some((ln, _)) = lines.next() {
        return Err((ln, "unexpected content after the k list".into()));
    }
    let mut f = CartanFactorization::from_parts(n_qubits, involution, k, h, identity, residual).map_err(|e| (0, e.to_string()))?;
    f.iterations = iterations;
    Ok(f)
}

pub fn write_factorization(path: &Path, f: &CartanFactorization) -> Result<()> {
    io::write_text(path, &format_factorization(f))
}

pub fn read_factorization(path: &Path) -> Result<CartanFactorization> {
    let text = io::read_text(path)?;
    parse_factorization(&text).map_err(|(line, message)| CliError::Parse { path: path.to_path_buf(), line, message })
}

#[cfg(test)]
mod tests {
    use super::*;
    use vcqds_core::cartan::{factorize, CartanOptions};
    use vcqds_core::PauliSum;

    #[test]
    fn round_trip_is_exact() {
        let h = PauliSum::parse_inline("1 XXI; 1 IXX; 0.7 ZII; 0.7 IZI; 0.7 IIZ; 0.3 III").unwrap();
        let f = factorize(&h, &CartanOptions::default()).unwrap();
        let g = parse_factorization(&format_factorization(&f)).unwrap();
        assert_eq!(g.k_angles, f.k_angles);
        assert_eq!(g.h_coeffs, f.h_coeffs);
        assert_eq!(g.identity_coeff, f.identity_coeff);
        assert_eq!(g.residual_norm, f.residual_norm);
        assert_eq!(g.iterations, f.iterations);
        assert!(g.split.is_none());
        let psi = vcqds_core::StateVector::from_bitstring("010").unwrap();
        assert_eq!(g.fast_forward(&psi, 3.7).unwrap(), f.fast_forward(&psi, 3.7).unwrap());
    }

    #[test]
    fn malformed_artifacts_report_lines() {
        let good = "n_qubits 2\ninvolution even-y\nidentity 0\nresidual 0\niterations 0\nh 1\n1 ZZ\nk 0\n";
        assert!(parse_factorization(good).is_ok());
        assert_eq!(parse_factorization(&good.replace("1 ZZ", "1 ZQ")).unwrap_err().0, 7);
        assert_eq!(parse_factorization(&good.replace("h 1", "h x")).unwrap_err().0, 6);
        assert!(parse_factorization(&format!("{good}XX 1\n")).is_err());
        assert!(parse_factorization("n_qubits 2\n").is_err());
    }
}
