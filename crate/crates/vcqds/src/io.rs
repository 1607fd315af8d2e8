//! Text formats: Pauli-sum files and CSV records.
//!
//! Pauli-sum files hold one `<coefficient> <string>` term per line, qubit 0
//! leftmost. `#` starts a comment; the header comments `# n_qubits: N` and
//! `# ref: 1100` are read when present.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vcqds_core::models::{self, ModelBundle};
use vcqds_core::spectra::{Peak, RealSpectrum, Spectrum, TimeSeries};
use vcqds_core::{PauliString, PauliSum};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PauliFile {
    pub sum: PauliSum,
    /// Reference determinant from `# ref:`, qubit 0 leftmost.
    pub reference: Option<String>,
}

/// Parse failure at a 1-based line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn header<'a>(comment: &'a str, key: &str) -> Option<&'a str> {
    let rest = comment.trim().strip_prefix(key)?;
    Some(rest.trim_start().strip_prefix(':')?.trim())
}

pub fn parse_pauli_text(text: &str) -> std::result::Result<PauliFile, ParseError> {
    let err = |line: usize, message: String| ParseError { line, message };
    let mut declared: Option<usize> = None;
    let mut reference = None;
    let mut terms: Vec<(f64, PauliString)> = Vec::new();
    let mut width: Option<(usize, usize)> = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let (body, comment) = match raw.find('#') {
            Some(i) => (&raw[..i], Some(&raw[i + 1..])),
            None => (raw, None),
        };
        if let Some(c) = comment {
            if let Some(v) = header(c, "n_qubits") {
                declared = Some(v.parse().map_err(|_| err(line, format!("bad qubit count {v:?}")))?);
            } else if let Some(v) = header(c, "ref") {
                if v.is_empty() || !v.chars().all(|c| c == '0' || c == '1') {
                    return Err(err(line, format!("reference {v:?} is not a bitstring")));
                }
                reference = Some(v.to_string());
            }
        }
        let mut parts = body.split_whitespace();
        let Some(first) = parts.next() else { continue };
        let Some(label) = parts.next() else {
            return Err(err(line, format!("expected `<coefficient> <pauli string>`, got {:?}", body.trim())));
        };
        if let Some(extra) = parts.next() {
            return Err(err(line, format!("unexpected trailing text {extra:?}")));
        }
        let coeff: f64 = first.parse().map_err(|_| err(line, format!("bad coefficient {first:?}")))?;
        if !coeff.is_finite() {
            return Err(err(line, format!("coefficient {first:?} is not finite")));
        }
        let p: PauliString = label.parse().map_err(|e| err(line, format!("{e}")))?;
        match width {
            Some((w, at)) if w != p.n_qubits() => {
                return Err(err(line, format!("{label:?} has {} qubits, line {at} has {w}", p.n_qubits())));
            }
            None => width = Some((p.n_qubits(), line)),
            _ => {}
        }
        terms.push((coeff, p));
    }
    let n = match (declared, width) {
        (Some(d), Some((w, at))) if d != w => return Err(err(at, format!("header declares {d} qubits, terms have {w}"))),
        (_, Some((w, _))) => w,
        (Some(d), None) => d,
        (None, None) => return Err(err(text.lines().count().max(1), "no terms and no `# n_qubits:` header".into())),
    };
    if let Some(r) = &reference {
        if r.len() != n {
            return Err(err(1, format!("reference {r:?} has {} sites, the operator {n}", r.len())));
        }
    }
    let sum = PauliSum::from_terms(n, terms).map_err(|e| err(1, e.to_string()))?;
    Ok(PauliFile { sum, reference })
}

pub fn read_pauli_file(path: &Path) -> Result<PauliFile> {
    let text = read_text(path)?;
    parse_pauli_text(&text).map_err(|e| CliError::Parse { path: path.to_path_buf(), line: e.line, message: e.message })
}

/// Inverse of [`parse_pauli_text`]; coefficients are written in shortest round-trip form.
pub fn format_pauli_text(sum: &PauliSum, reference: Option<&str>) -> String {
    let mut out = format!("# n_qubits: {}\n", sum.n_qubits());
    if let Some(r) = reference {
        out += &format!("# ref: {r}\n");
    }
    for (p, c) in sum.iter() {
        out += &format!("{c:e} {p}\n");
    }
    out
}

/// Molecular model from a Hamiltonian file and a dipole file. The reference
/// determinant comes from the Hamiltonian header, else the dipole header.
pub fn ingest_molecular(hamiltonian: &Path, dipole: &Path) -> Result<ModelBundle> {
    let h = read_pauli_file(hamiltonian)?;
    let d = read_pauli_file(dipole)?;
    if h.sum.n_qubits() != d.sum.n_qubits() {
        return Err(CliError::Input(format!(
            "{} acts on {} qubits but {} on {}",
            hamiltonian.display(),
            h.sum.n_qubits(),
            dipole.display(),
            d.sum.n_qubits()
        )));
    }
    let reference = h.reference.or(d.reference).ok_or_else(|| {
        CliError::Input(format!("{}: missing `# ref:` header with the reference determinant", hamiltonian.display()))
    })?;
    Ok(models::molecular(h.sum, d.sum, &reference)?)
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn csv_text<R: Serialize>(rows: impl IntoIterator<Item = R>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv output is utf-8")
}

#[derive(Serialize, Deserialize)]
struct SeriesRow {
    t: f64,
    value: f64,
}

/// `t,value` rows.
pub fn series_csv(series: &TimeSeries) -> String {
    csv_text(series.times().zip(&series.values).map(|(t, &value)| SeriesRow { t, value }))
}

pub fn write_series(path: &Path, series: &TimeSeries) -> Result<()> {
    write_text(path, &series_csv(series))
}

/// Reads a `t,value` file; the grid must be uniform. The label is the file stem.
pub fn read_series(path: &Path) -> Result<TimeSeries> {
    let text = read_text(path)?;
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let mut t = Vec::new();
    let mut v = Vec::new();
    for (k, row) in rd.deserialize::<SeriesRow>().enumerate() {
        let row = row.map_err(|e| CliError::Parse { path: path.to_path_buf(), line: k + 2, message: e.to_string() })?;
        t.push(row.t);
        v.push(row.value);
    }
    if t.len() < 2 {
        return Err(CliError::Input(format!("{}: need at least two samples", path.display())));
    }
    // steps are checked against the first one, so the error names the row
    // where the grid breaks
    let first = t[1] - t[0];
    for (k, w) in t.windows(2).enumerate() {
        if ((w[1] - w[0]) - first).abs() > 1e-9 * first.abs().max(1e-300) {
            return Err(CliError::Parse { path: path.to_path_buf(), line: k + 3, message: "time grid is not uniform".into() });
        }
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(TimeSeries::new(label, t[0], dt, v)?)
}

#[derive(Serialize)]
struct SpectrumRow {
    omega: f64,
    re: f64,
    im: f64,
}

/// `omega,re,im` rows; `omega_scale` converts the frequency axis (1 unless atomic units are reported in eV).
pub fn spectrum_csv(s: &Spectrum, omega_scale: f64) -> String {
    csv_text(s.omegas.iter().zip(&s.values).map(|(&w, z)| SpectrumRow { omega: w * omega_scale, re: z.re, im: z.im }))
}

#[derive(Serialize)]
struct SigmaRow {
    omega: f64,
    sigma: f64,
}

/// `omega,sigma` rows.
pub fn cross_section_csv(s: &RealSpectrum, omega_scale: f64) -> String {
    csv_text(s.omegas.iter().zip(&s.values).map(|(&w, &sigma)| SigmaRow { omega: w * omega_scale, sigma }))
}

#[derive(Serialize)]
struct PeakRow {
    omega: f64,
    height: f64,
    fwhm: Option<f64>,
}

/// Peak summary sidecar: `omega,height,fwhm` (empty `fwhm` when the peak is not resolved).
pub fn peaks_csv(peaks: &[Peak], omega_scale: f64) -> String {
    let rows: Vec<PeakRow> = peaks
        .iter()
        .map(|p| PeakRow { omega: p.omega * omega_scale, height: p.height, fwhm: p.fwhm.map(|f| f * omega_scale) })
        .collect();
    if rows.is_empty() {
        return "omega,height,fwhm\n".into();
    }
    csv_text(rows)
}

/// `dir/name` made absolute against the working directory.
pub fn absolute(path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        std::env::current_dir().map(|d| d.join(path)).unwrap_or_else(|_| path.to_path_buf())
    }
}
