//! Run plans: a TOML document naming the model and the kick/propagation
//! parameters. Every key is optional except the model source; `resolve`
//! fills the defaults and the filled document is written back as the run
//! manifest, which is itself a valid plan.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vcqds_core::cartan::CartanOptions;
use vcqds_core::models::{self, ModelBundle};
use vcqds_core::pipeline::{KickCenter, KickField, SimulationPlan, DEFAULT_WINDOW_WIDTHS, KICK_RCOND};
use vcqds_core::vqds::{Scheme, Solver, VqdsOptions, DEFAULT_REGULARIZATION};
use vcqds_core::StateVector;

use crate::error::{CliError, Result};
use crate::io;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    /// Built-in model: `ising2x3`, `heisenberg2`, `heisenberg4`, or `heisenberg` with `sites`.
    pub model: Option<String>,
    pub hamiltonian_file: Option<PathBuf>,
    pub dipole_file: Option<PathBuf>,
    /// Ising coupling and field.
    pub j: Option<f64>,
    pub d: Option<f64>,
    /// Chain length for `model = "heisenberg"`.
    pub sites: Option<usize>,
    pub e0: Option<f64>,
    pub gamma: Option<f64>,
    pub tf: Option<f64>,
    /// `origin` or `window`.
    pub kick_center: Option<String>,
    pub dt_kick: Option<f64>,
    pub dt_record: Option<f64>,
    pub t_total: Option<f64>,
    pub ansatz_layers: Option<usize>,
    pub observables: Option<Vec<String>>,
    /// `model` (the model's own initial state), `ground`, or a bitstring.
    pub initial: Option<String>,
    /// `euler` or `rk4`.
    pub scheme: Option<String>,
    /// `lstsq` (default) or `tikhonov`.
    pub solver: Option<String>,
    pub regularization: Option<f64>,
    pub rcond: Option<f64>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub with_exact: Option<bool>,
    pub spectrum: Option<SpectrumSection>,
    /// Written into manifests; ignored on input.
    pub provenance: Option<Provenance>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    /// `absorption`, `susceptibility` or `magnon`; defaults by model.
    pub kind: Option<String>,
    /// Exponential damping rate applied before the transform.
    pub damping: Option<f64>,
    /// `atomic` (frequencies reported in eV) or `natural`.
    pub units: Option<String>,
    /// Rigid shift of the cross-section frequency axis, in eV.
    pub shift_ev: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub version: String,
    pub command: String,
}

/// Command-line overrides, applied on top of the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub e0: Option<f64>,
    pub gamma: Option<f64>,
    pub dt: Option<f64>,
    pub t_total: Option<f64>,
    pub seed: Option<u64>,
    pub with_exact: bool,
    pub output_dir: Option<PathBuf>,
}

impl PlanFile {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1).unwrap_or(0);
            CliError::Parse { path: path.to_path_buf(), line, message: e.message().to_string() }
        })
    }

    /// Reads a plan; relative file paths inside it are taken relative to its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut p = Self::parse(&io::read_text(path)?, path)?;
        let base = io::absolute(path.parent().unwrap_or(Path::new(".")));
        for f in [&mut p.hamiltonian_file, &mut p.dipole_file, &mut p.output_dir].into_iter().flatten() {
            if f.is_relative() {
                *f = base.join(&*f);
            }
        }
        Ok(p)
    }

    pub fn apply(&mut self, o: &Overrides) {
        let set = |slot: &mut Option<f64>, v: Option<f64>| {
            if v.is_some() {
                *slot = v;
            }
        };
        set(&mut self.e0, o.e0);
        set(&mut self.gamma, o.gamma);
        set(&mut self.dt_kick, o.dt);
        set(&mut self.t_total, o.t_total);
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if o.with_exact {
            self.with_exact = Some(true);
        }
        if let Some(d) = &o.output_dir {
            self.output_dir = Some(io::absolute(d));
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plan serializes")
    }
}

#[derive(Clone, Debug)]
pub struct SpectrumConfig {
    pub kind: String,
    pub damping: f64,
    pub atomic: bool,
    pub shift_ev: f64,
}

/// A plan with every default filled in.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub model: ModelBundle,
    /// The filled plan document.
    pub file: PlanFile,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub with_exact: bool,
    pub spectrum: SpectrumConfig,
    /// `None` when the model has no coupling operator.
    pub simulation: Option<SimulationPlan>,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(bad(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Builds the model named by the plan (without applying `initial` or layers).
pub fn build_model(p: &PlanFile) -> Result<ModelBundle> {
    match (&p.model, &p.hamiltonian_file) {
        (Some(_), Some(_)) => Err(bad("give either `model` or `hamiltonian_file`, not both")),
        (None, None) => Err(bad("plan names no model: set `model` or `hamiltonian_file`")),
        (None, Some(h)) => {
            let d = p.dipole_file.as_ref().ok_or_else(|| bad("`hamiltonian_file` needs a `dipole_file`"))?;
            io::ingest_molecular(h, d)
        }
        (Some(name), None) => {
            let (j, d) = (p.j.unwrap_or(1.0), p.d.unwrap_or(1.0));
            Ok(match name.as_str() {
                "ising2x3" => models::ising_2x3(j, d)?,
                "heisenberg2" => models::heisenberg_chain(2, j, j, j, true)?,
                "heisenberg4" => models::heisenberg_chain(4, j, j, j, true)?,
                "heisenberg" => {
                    let n = p.sites.ok_or_else(|| bad("`model = \"heisenberg\"` needs `sites`"))?;
                    models::heisenberg_chain(n, j, j, j, true)?
                }
                other => models::by_name(other)?,
            })
        }
    }
}

pub fn resolve(mut p: PlanFile) -> Result<Resolved> {
    let mut model = build_model(&p)?;
    let molecular = p.hamiltonian_file.is_some();
    if p.model.is_some() {
        p.j.get_or_insert(1.0);
    }
    if p.model.as_deref() == Some("ising2x3") {
        p.d.get_or_insert(1.0);
    }

    let initial = p.initial.get_or_insert_with(|| "model".into()).clone();
    match initial.as_str() {
        "model" => {}
        "ground" => model = model.with_ground_state()?,
        bits => {
            let s = StateVector::from_bitstring(bits).map_err(|_| bad(format!("initial state {bits:?} is not model|ground|bitstring")))?;
            if s.n_qubits() != model.n_qubits() {
                return Err(bad(format!("initial bitstring {bits:?} has {} sites, the model {}", s.n_qubits(), model.n_qubits())));
            }
            model.initial = s;
        }
    }
    let layers = *p.ansatz_layers.get_or_insert(model.ansatz.layers);
    if layers == 0 {
        return Err(bad("ansatz_layers must be at least 1"));
    }
    model.ansatz = model.ansatz.clone().with_layers(layers);

    let names = p.observables.get_or_insert_with(|| model.observables.iter().map(|(n, _)| n.clone()).collect()).clone();
    let mut observables = Vec::new();
    for n in &names {
        let o = model.observable(n).ok_or_else(|| {
            let known: Vec<&str> = model.observables.iter().map(|(k, _)| k.as_str()).collect();
            bad(format!("unknown observable {n:?}; the model provides {known:?}"))
        })?;
        observables.push((n.clone(), o.clone()));
    }

    let e0 = *p.e0.get_or_insert(if molecular { 0.01 } else { 1e-5 });
    if !e0.is_finite() {
        return Err(bad("e0 must be finite"));
    }
    let gamma = positive("gamma", *p.gamma.get_or_insert(0.25))?;
    let tf = positive("tf", *p.tf.get_or_insert(DEFAULT_WINDOW_WIDTHS * gamma))?;
    let center = match p.kick_center.get_or_insert_with(|| "origin".into()).as_str() {
        "origin" => KickCenter::Origin,
        "window" => KickCenter::Window,
        other => return Err(bad(format!("kick_center must be origin or window, got {other:?}"))),
    };
    let dt_kick = positive("dt_kick", *p.dt_kick.get_or_insert(0.005))?;
    let dt_record = positive("dt_record", *p.dt_record.get_or_insert(10.0 * dt_kick))?;
    let t_total = positive("t_total", *p.t_total.get_or_insert(50.0))?;
    let scheme = match p.scheme.get_or_insert_with(|| "euler".into()).as_str() {
        "euler" => Scheme::Euler,
        "rk4" => Scheme::Rk4,
        other => return Err(bad(format!("scheme must be euler or rk4, got {other:?}"))),
    };
    let solver = match p.solver.get_or_insert_with(|| "lstsq".into()).as_str() {
        "tikhonov" => Solver::Tikhonov { reg: *p.regularization.get_or_insert(DEFAULT_REGULARIZATION) },
        "lstsq" => Solver::LeastSquares { rcond: *p.rcond.get_or_insert(KICK_RCOND) },
        other => return Err(bad(format!("solver must be tikhonov or lstsq, got {other:?}"))),
    };
    let seed = *p.seed.get_or_insert(0);
    let output_dir = p.output_dir.get_or_insert_with(|| io::absolute(Path::new("out"))).clone();
    let with_exact = *p.with_exact.get_or_insert(false);

    let sec = p.spectrum.get_or_insert_with(Default::default);
    let default_kind = if molecular { "absorption" } else { "susceptibility" };
    let spectrum = SpectrumConfig {
        kind: sec.kind.get_or_insert_with(|| default_kind.into()).clone(),
        damping: *sec.damping.get_or_insert(0.01),
        atomic: match sec.units.get_or_insert_with(|| if molecular { "atomic" } else { "natural" }.into()).as_str() {
            "atomic" => true,
            "natural" => false,
            other => return Err(bad(format!("units must be atomic or natural, got {other:?}"))),
        },
        shift_ev: *sec.shift_ev.get_or_insert(0.0),
    };
    if !matches!(spectrum.kind.as_str(), "absorption" | "susceptibility" | "magnon") {
        return Err(bad(format!("spectrum kind must be absorption, susceptibility or magnon, got {:?}", spectrum.kind)));
    }
    if !(spectrum.damping >= 0.0) {
        return Err(bad("spectrum damping must be nonnegative"));
    }

    let simulation = match &model.coupling {
        None => None,
        Some(coupling) => {
            let plan = SimulationPlan {
                h0: model.h0.clone(),
                kick: KickField::with_window(e0, gamma, coupling.clone(), tf, center)?,
                initial: model.initial.clone(),
                dt_kick,
                dt_record,
                t_total,
                observables,
                ansatz: model.ansatz.clone(),
                vqds: VqdsOptions { scheme, solver, ..Default::default() },
                cartan: CartanOptions { seed, ..Default::default() },
            };
            plan.validate()?;
            Some(plan)
        }
    };
    p.provenance = None;
    Ok(Resolved { model, file: p, seed, output_dir, with_exact, spectrum, simulation })
}

impl Resolved {
    pub fn simulation(&self) -> Result<&SimulationPlan> {
        self.simulation.as_ref().ok_or_else(|| bad(format!("model {} has no coupling operator to kick", self.model.name)))
    }

    /// The filled plan plus provenance, as written next to the outputs.
    pub fn manifest(&self, command: &str) -> String {
        let mut f = self.file.clone();
        f.provenance = Some(Provenance { version: env!("CARGO_PKG_VERSION").into(), command: command.into() });
        f.to_toml()
    }
}
