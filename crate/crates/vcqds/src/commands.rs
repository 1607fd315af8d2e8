//! Subcommand bodies. Each writes its outputs under the plan's output
//! directory together with `manifest.toml`, and returns a short report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use vcqds_core::cartan::{factorize, CartanFactorization};
use vcqds_core::models::ising_2x3;
use vcqds_core::pipeline::{self, HybridRun, RunRecord};
use vcqds_core::spectra::{self, Peak, TimeSeries, HARTREE_EV};
use vcqds_core::state::expectation;
use vcqds_core::vqds::VqdsOptions;
use vcqds_core::{PauliSum, StateVector};

use crate::artifact;
use crate::error::{CliError, Result};
use crate::io;
use crate::plan::{resolve, Overrides, PlanFile, Resolved};

/// Phase-2 samples on the rayon pool; rows come back in `taus` order.
pub fn parallel_samples(
    f: &CartanFactorization,
    handoff: &StateVector,
    taus: &[f64],
    observables: &[(String, PauliSum)],
) -> vcqds_core::Result<Vec<Vec<f64>>> {
    taus.par_iter()
        .map(|&tau| {
            let psi = f.fast_forward(handoff, tau)?;
            observables.iter().map(|(_, o)| expectation(&psi, o)).collect()
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct CartanReport {
    pub model: String,
    pub n_qubits: usize,
    pub closure_dimension: usize,
    pub k_dimension: usize,
    pub m_dimension: usize,
    pub h_dimension: usize,
    pub k_angles: usize,
    pub gate_count: usize,
    pub residual: f64,
    pub reconstruction_error: f64,
    pub iterations: usize,
}

pub fn cartan(r: &Resolved) -> Result<(CartanReport, CartanFactorization)> {
    let f = factorize(&r.model.h0, &r.model_cartan_options())?;
    let (g, k, m) = f.split.as_ref().map_or((0, 0, 0), |s| (s.g.len(), s.k_part.len(), s.m_part.len()));
    let report = CartanReport {
        model: r.model.name.clone(),
        n_qubits: r.model.n_qubits(),
        closure_dimension: g,
        k_dimension: k,
        m_dimension: m,
        h_dimension: f.h_coeffs.len(),
        k_angles: f.k_angles.len(),
        gate_count: f.gate_count(),
        residual: f.residual_norm,
        reconstruction_error: f.reconstruction_error(&r.model.h0)?,
        iterations: f.iterations,
    };
    let dir = &r.output_dir;
    artifact::write_factorization(&dir.join("factorization.txt"), &f)?;
    io::write_text(&dir.join("cartan_report.json"), &(serde_json::to_string_pretty(&report).expect("report") + "\n"))?;
    io::write_text(&dir.join("manifest.toml"), &r.manifest("cartan"))?;
    Ok((report, f))
}

impl Resolved {
    fn model_cartan_options(&self) -> vcqds_core::cartan::CartanOptions {
        vcqds_core::cartan::CartanOptions { seed: self.seed, ..Default::default() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EvolveReport {
    pub samples: usize,
    pub t_handoff: f64,
    pub max_residual: f64,
    pub ill_conditioned_steps: usize,
    pub cartan_residual: f64,
    pub gate_count: usize,
    /// Largest `|hybrid - exact|` per observable, with `--with-exact`.
    pub exact_max_deviation: Option<BTreeMap<String, f64>>,
}

fn write_record(dir: &Path, record: &RunRecord) -> Result<()> {
    for s in &record.series {
        io::write_series(&dir.join(format!("{}.csv", s.label)), s)?;
    }
    Ok(())
}

pub fn evolve(r: &Resolved) -> Result<(EvolveReport, HybridRun)> {
    let plan = r.simulation()?;
    let f = factorize(&plan.h0, &plan.cartan)?;
    let run = pipeline::run_hybrid_sampled(plan, f, parallel_samples)?;
    let dir = &r.output_dir;
    write_record(dir, &run.record)?;
    io::write_series(&dir.join("field.csv"), &plan.field_series()?)?;
    artifact::write_factorization(&dir.join("factorization.txt"), &run.factorization)?;
    let exact_max_deviation = if r.with_exact {
        let exact = pipeline::run_exact_reference(plan)?;
        write_record(&dir.join("exact"), &exact)?;
        Some(
            run.record
                .series
                .iter()
                .zip(&exact.series)
                .map(|(a, b)| {
                    let d = a.values.iter().zip(&b.values).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
                    (a.label.clone(), d)
                })
                .collect(),
        )
    } else {
        None
    };
    let report = EvolveReport {
        samples: run.record.series.first().map_or(0, |s| s.len()),
        t_handoff: run.record.t_handoff,
        max_residual: run.max_residual,
        ill_conditioned_steps: run.ill_conditioned_steps,
        cartan_residual: run.factorization.residual_norm,
        gate_count: run.factorization.gate_count(),
        exact_max_deviation,
    };
    io::write_text(&dir.join("evolve_report.json"), &(serde_json::to_string_pretty(&report).expect("report") + "\n"))?;
    io::write_text(&dir.join("manifest.toml"), &r.manifest("evolve"))?;
    Ok((report, run))
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub kind: String,
    /// Output file name → up to three highest peaks as (frequency, height).
    pub peaks: BTreeMap<String, Vec<(f64, f64)>>,
}

/// Peaks listed in a sidecar: at least this fraction of the highest one.
const PEAK_THRESHOLD: f64 = 0.05;
const MAX_PEAKS: usize = 10;

/// Positive-frequency peaks, highest first.
fn positive_peaks(omegas: &[f64], values: &[f64]) -> Vec<Peak> {
    let hi = omegas.last().copied().unwrap_or(0.0);
    let mut p = spectra::local_maxima(omegas, values, 0.0, hi, PEAK_THRESHOLD);
    p.truncate(MAX_PEAKS);
    p
}

fn series_in(dir: &Path, name: &str) -> Result<TimeSeries> {
    let path = dir.join(format!("{name}.csv"));
    if !path.exists() {
        return Err(CliError::Input(format!("missing series {} (run `evolve` first)", path.display())));
    }
    io::read_series(&path)
}

pub fn spectrum(r: &Resolved) -> Result<SpectrumReport> {
    let dir = &r.output_dir;
    let cfg = &r.spectrum;
    let e0 = r.file.e0.expect("resolved");
    let scale = if cfg.atomic { HARTREE_EV } else { 1.0 };
    let mut peaks = BTreeMap::new();
    let mut emit = |name: String, omegas: &[f64], values: &[f64], text: String| -> Result<()> {
        let p = positive_peaks(omegas, values);
        io::write_text(&dir.join(format!("peaks_{name}")), &io::peaks_csv(&p, scale))?;
        peaks.insert(name.clone(), p.iter().take(3).map(|p| (p.omega * scale, p.height)).collect());
        io::write_text(&dir.join(name), &text)
    };
    match cfg.kind.as_str() {
        "absorption" => {
            let d = series_in(dir, "dipole")?.deviation();
            let e = series_in(dir, "field")?;
            let alpha = spectra::polarizability(
                &spectra::damped_dft(&d, cfg.damping)?,
                &spectra::damped_dft(&e, cfg.damping)?,
                e0,
            )?;
            let sigma = spectra::absorption_cross_section(&alpha, cfg.shift_ev / HARTREE_EV);
            io::write_text(&dir.join("polarizability.csv"), &io::spectrum_csv(&alpha, scale))?;
            emit("cross_section.csv".into(), &sigma.omegas, &sigma.values, io::cross_section_csv(&sigma, scale))?;
        }
        "susceptibility" => {
            let kicked = 0;
            for i in 0..r.model.n_qubits() {
                let s = series_in(dir, &format!("sz{i}"))?.deviation();
                let chi = spectra::susceptibility(&spectra::damped_dft(&s, cfg.damping)?, e0)?;
                let corr = spectra::correlation_from_susceptibility(&chi);
                io::write_text(&dir.join(format!("corr_{i}_{kicked}.csv")), &io::spectrum_csv(&corr, scale))?;
                let mag = chi.abs();
                emit(format!("chi_{i}_{kicked}.csv"), &chi.omegas, &mag, io::spectrum_csv(&chi, scale))?;
            }
        }
        "magnon" => {
            let n = r.model.n_qubits();
            let mut corr = BTreeMap::new();
            for i in 0..n {
                corr.insert((i, 0), series_in(dir, &format!("sz{i}"))?.deviation().scaled(1.0 / e0));
            }
            let positions: Vec<f64> = r.model.positions.iter().map(|p| p.0).collect();
            for (m, (_, s)) in spectra::magnon_spectrum(&corr, &positions, cfg.damping)?.into_iter().enumerate() {
                let mag = s.abs();
                emit(format!("magnon_q{m}.csv"), &s.omegas, &mag, io::spectrum_csv(&s, scale))?;
            }
        }
        other => return Err(CliError::Input(format!("unknown spectrum kind {other:?}"))),
    }
    let report = SpectrumReport { kind: cfg.kind.clone(), peaks };
    io::write_text(&dir.join("manifest.toml"), &r.manifest("spectrum"))?;
    Ok(report)
}

/// Damped transform of plain `t,value` files, with a peak sidecar per input.
pub fn spectrum_of_files(inputs: &[PathBuf], damping: f64, out: &Path) -> Result<SpectrumReport> {
    if !(damping >= 0.0) {
        return Err(CliError::Input("damping must be nonnegative".into()));
    }
    let mut peaks = BTreeMap::new();
    for path in inputs {
        let s = io::read_series(path)?;
        let f = spectra::damped_dft(&s, damping)?;
        let mag = f.abs();
        let p = positive_peaks(&f.omegas, &mag);
        io::write_text(&out.join(format!("spectrum_{}.csv", s.label)), &io::spectrum_csv(&f, 1.0))?;
        io::write_text(&out.join(format!("peaks_{}.csv", s.label)), &io::peaks_csv(&p, 1.0))?;
        peaks.insert(s.label.clone(), p.iter().take(3).map(|p| (p.omega, p.height)).collect());
    }
    Ok(SpectrumReport { kind: "plain".into(), peaks })
}

/// Sample Hamiltonian and dipole shipped with the crate: a 4-qubit
/// two-orbital, two-electron active space in the Jordan–Wigner encoding.
pub const CAS22_HAMILTONIAN: &str = include_str!("../data/cas22_hamiltonian.txt");
pub const CAS22_DIPOLE: &str = include_str!("../data/cas22_dipole.txt");

/// Atomic units of time per femtosecond.
pub const AU_PER_FS: f64 = 41.341373335;

#[derive(Clone, Debug, Serialize)]
pub struct IsingRow {
    pub j_over_d: f64,
    pub max_abs_error: f64,
    pub max_residual: f64,
}

/// Variational vs exact `C(t)` on the 2×3 Ising lattice for each `J/d`, `d = 1`.
pub fn reproduce_fig2(out: &Path, ratios: &[f64], dt: f64, t_total: f64) -> Result<Vec<IsingRow>> {
    let mut rows = Vec::new();
    for &jd in ratios {
        let m = ising_2x3(jd, 1.0)?;
        let obs = vec![("C".to_string(), m.observable("C").expect("ising observable").clone())];
        let var = pipeline::run_variational(&m.h0, &m.initial, &m.ansatz, &obs, dt, t_total, &VqdsOptions::default())?;
        let exact = pipeline::run_exact_static(&m.h0, &m.initial, &obs, dt, t_total)?;
        let sub = out.join(format!("jd_{jd}"));
        io::write_series(&sub.join("C_vqds.csv"), &var.series[0])?;
        io::write_series(&sub.join("C_exact.csv"), &exact[0])?;
        let err = var.series[0].values.iter().zip(&exact[0].values).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        rows.push(IsingRow { j_over_d: jd, max_abs_error: err, max_residual: var.max_residual });
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).expect("in-memory csv");
    }
    io::write_text(&out.join("errors.csv"), &String::from_utf8(w.into_inner().expect("csv")).expect("utf-8"))?;
    Ok(rows)
}

/// Resolves a built-in figure plan with overrides; the output directory defaults to `out/<name>`.
fn figure_plan(name: &str, mut p: PlanFile, o: &Overrides) -> Result<Resolved> {
    p.output_dir = Some(io::absolute(&o.output_dir.clone().unwrap_or_else(|| PathBuf::from("out")).join(name)));
    let mut o = o.clone();
    o.output_dir = None;
    p.apply(&o);
    resolve(p)
}

fn section(kind: &str, damping: f64, shift_ev: f64) -> Option<crate::plan::SpectrumSection> {
    Some(crate::plan::SpectrumSection {
        kind: Some(kind.into()),
        damping: Some(damping),
        units: None,
        shift_ev: Some(shift_ev),
    })
}

/// Molecular kick on the bundled active-space model: dipole record and absorption cross-section.
pub fn reproduce_fig3(o: &Overrides) -> Result<(EvolveReport, SpectrumReport)> {
    let dir = io::absolute(&o.output_dir.clone().unwrap_or_else(|| PathBuf::from("out")).join("fig3"));
    io::write_text(&dir.join("cas22_hamiltonian.txt"), CAS22_HAMILTONIAN)?;
    io::write_text(&dir.join("cas22_dipole.txt"), CAS22_DIPOLE)?;
    let p = PlanFile {
        hamiltonian_file: Some(dir.join("cas22_hamiltonian.txt")),
        dipole_file: Some(dir.join("cas22_dipole.txt")),
        initial: Some("ground".into()),
        e0: Some(0.01),
        gamma: Some(0.25),
        dt_kick: Some(0.005),
        dt_record: Some(0.5),
        t_total: Some(1000.0 * AU_PER_FS),
        spectrum: section("absorption", 0.001, -1.9),
        ..Default::default()
    };
    let r = figure_plan("fig3", p, o)?;
    let (ev, _) = evolve(&r)?;
    Ok((ev, spectrum(&r)?))
}

/// Two-site Heisenberg kick: per-site `S_z` records and susceptibilities.
pub fn reproduce_fig5(o: &Overrides) -> Result<(EvolveReport, SpectrumReport)> {
    let p = PlanFile {
        model: Some("heisenberg2".into()),
        e0: Some(1e-5),
        gamma: Some(0.25),
        t_total: Some(50.0),
        spectrum: section("susceptibility", 0.01, 0.0),
        ..Default::default()
    };
    let r = figure_plan("fig5", p, o)?;
    let (ev, _) = evolve(&r)?;
    Ok((ev, spectrum(&r)?))
}

/// Four-site periodic Heisenberg kick: per-site `S_z` records and magnon spectra.
pub fn reproduce_fig6(o: &Overrides) -> Result<(EvolveReport, SpectrumReport)> {
    let p = PlanFile {
        model: Some("heisenberg4".into()),
        e0: Some(1e-5),
        gamma: Some(0.25),
        t_total: Some(200.0),
        spectrum: section("magnon", 0.01, 0.0),
        ..Default::default()
    };
    let r = figure_plan("fig6", p, o)?;
    let (ev, _) = evolve(&r)?;
    Ok((ev, spectrum(&r)?))
}
