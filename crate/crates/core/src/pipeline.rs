//! Kicked dynamics: variational propagation while the Lorentzian field is
//! on, then Cartan fast-forwarding from the materialized state.
//!
//! All records share the grid `t_k = k · dt_record`, `0 ≤ t_k ≤ t_total`.
//! Inside the kick window the grid must land on variational steps, so
//! `dt_record` has to be a whole multiple of `dt_kick`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::cartan::{factorize, CartanFactorization, CartanOptions};
use crate::error::{Error, Result};
use crate::math::{round, PI};
use crate::models::{AnsatzSpec, ModelBundle};
use crate::pauli::PauliSum;
use crate::spectra::TimeSeries;
use crate::state::{expectation, DensePropagator, StateVector};
use crate::vqds::{self, Solver, VqdsOptions};

/// Default window length in units of `Γ`; the amplitude has fallen to 1/401 of its peak.
pub const DEFAULT_WINDOW_WIDTHS: f64 = 20.0;

/// Largest accepted `amplitude(t_f) / amplitude(peak)`.
pub const WINDOW_CUTOFF: f64 = 0.01;

/// `(E₀/π) Γ / (Γ² + t²)`
pub fn kick_amplitude(t: f64, e0: f64, gamma: f64) -> f64 {
    e0 / PI * gamma / (gamma * gamma + t * t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum KickCenter {
    /// Peak at `t = 0`; the run sees half of the full impulse.
    #[default]
    Origin,
    /// Peak in the middle of the window; the run sees (almost) all of it.
    Window,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KickField {
    pub e0: f64,
    pub gamma: f64,
    pub coupling: PauliSum,
    pub t_f: f64,
    pub center: KickCenter,
}

impl KickField {
    /// Field centred at the origin with the default window `20Γ`.
    pub fn new(e0: f64, gamma: f64, coupling: PauliSum) -> Result<Self> {
        Self::with_window(e0, gamma, coupling, DEFAULT_WINDOW_WIDTHS * gamma, KickCenter::Origin)
    }

    pub fn with_window(e0: f64, gamma: f64, coupling: PauliSum, t_f: f64, center: KickCenter) -> Result<Self> {
        if !e0.is_finite() {
            return Err(Error::InvalidArgument("field strength must be finite".into()));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidArgument("kick width must be positive".into()));
        }
        if !(t_f > 0.0) || !t_f.is_finite() {
            return Err(Error::InvalidArgument("kick window must be positive".into()));
        }
        let k = KickField { e0, gamma, coupling, t_f, center };
        let tail = kick_amplitude(t_f - k.peak_time(), 1.0, gamma) / kick_amplitude(0.0, 1.0, gamma);
        if tail > WINDOW_CUTOFF {
            return Err(Error::InvalidArgument(alloc::format!(
                "kick window {t_f} leaves {tail:.3e} of the peak amplitude (limit {WINDOW_CUTOFF})"
            )));
        }
        Ok(k)
    }

    pub fn peak_time(&self) -> f64 {
        match self.center {
            KickCenter::Origin => 0.0,
            KickCenter::Window => 0.5 * self.t_f,
        }
    }

    /// Lorentzian amplitude at `t`; zero after the window closes.
    pub fn amplitude(&self, t: f64) -> f64 {
        if t > self.t_f {
            0.0
        } else {
            kick_amplitude(t - self.peak_time(), self.e0, self.gamma)
        }
    }

    /// The field seen by a dipole coupled as `V = -μ E`, i.e. `E(t) = -amplitude(t)`.
    pub fn field(&self, t: f64) -> f64 {
        -self.amplitude(t)
    }

    /// `H₀ + amplitude(t) D`
    pub fn hamiltonian(&self, h0: &PauliSum, t: f64) -> Result<PauliSum> {
        h0.add_scaled(&self.coupling, self.amplitude(t))
    }
}

/// Cutoff of the SVD solve used for kicked runs. A Tikhonov shift would
/// compete with the O(E0²) curvature of the kicked directions and make the
/// response depend on the field strength.
pub const KICK_RCOND: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationPlan {
    pub h0: PauliSum,
    pub kick: KickField,
    pub initial: StateVector,
    pub dt_kick: f64,
    pub dt_record: f64,
    pub t_total: f64,
    pub observables: Vec<(String, PauliSum)>,
    pub ansatz: AnsatzSpec,
    pub vqds: VqdsOptions,
    pub cartan: CartanOptions,
}

impl SimulationPlan {
    /// Plan for a model with its default coupling, observables and ansatz.
    pub fn for_model(model: &ModelBundle, e0: f64, gamma: f64, dt_kick: f64, dt_record: f64, t_total: f64) -> Result<Self> {
        let coupling = model
            .coupling
            .clone()
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("model {} has no coupling operator", model.name)))?;
        let plan = SimulationPlan {
            h0: model.h0.clone(),
            kick: KickField::new(e0, gamma, coupling)?,
            initial: model.initial.clone(),
            dt_kick,
            dt_record,
            t_total,
            observables: model.observables.clone(),
            ansatz: model.ansatz.clone(),
            vqds: VqdsOptions { solver: Solver::LeastSquares { rcond: KICK_RCOND }, ..Default::default() },
            cartan: CartanOptions::default(),
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.h0.n_qubits();
        let check = |m: usize| if m == n { Ok(()) } else { Err(Error::QubitMismatch { left: n, right: m }) };
        check(self.kick.coupling.n_qubits())?;
        check(self.initial.n_qubits())?;
        for (_, o) in &self.observables {
            check(o.n_qubits())?;
        }
        for g in &self.ansatz.layer {
            check(g.n_qubits())?;
        }
        for (name, v) in [("dt_kick", self.dt_kick), ("dt_record", self.dt_record), ("t_total", self.t_total)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(alloc::format!("{name} must be positive")));
            }
        }
        if self.kick.t_f > self.t_total {
            return Err(Error::InvalidArgument("kick window extends past t_total".into()));
        }
        self.kick_steps()?;
        self.record_stride()?;
        Ok(())
    }

    /// Number of variational steps covering the window.
    pub fn kick_steps(&self) -> Result<usize> {
        whole_ratio(self.kick.t_f, self.dt_kick, "t_f", "dt_kick")
    }

    /// Variational steps per record interval.
    pub fn record_stride(&self) -> Result<usize> {
        whole_ratio(self.dt_record, self.dt_kick, "dt_record", "dt_kick")
    }

    /// Record times `k · dt_record` up to `t_total`.
    pub fn record_times(&self) -> Vec<f64> {
        let count = (self.t_total / self.dt_record * (1.0 + 1e-12)) as usize;
        (0..=count).map(|k| k as f64 * self.dt_record).collect()
    }

    /// `E(t)` on the record grid.
    pub fn field_series(&self) -> Result<TimeSeries> {
        TimeSeries::new("field", 0.0, self.dt_record, self.record_times().iter().map(|&t| self.kick.field(t)).collect())
    }
}

fn whole_ratio(a: f64, b: f64, na: &str, nb: &str) -> Result<usize> {
    let r = round(a / b);
    if r < 1.0 || (r * b - a).abs() > 1e-9 * a.abs().max(b) {
        return Err(Error::InvalidArgument(alloc::format!("{na} = {a} is not a whole multiple of {nb} = {b}")));
    }
    Ok(r as usize)
}

/// Observable records of one run, one series per observable in plan order.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub series: Vec<TimeSeries>,
    /// State at the end of the kick window.
    pub handoff: StateVector,
    pub t_handoff: f64,
}

impl RunRecord {
    pub fn get(&self, label: &str) -> Option<&TimeSeries> {
        self.series.iter().find(|s| s.label == label)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridRun {
    pub record: RunRecord,
    pub factorization: CartanFactorization,
    /// Largest phase-projected McLachlan residual over the variational steps.
    pub max_residual: f64,
    pub ill_conditioned_steps: usize,
}

struct Recorder<'a> {
    observables: &'a [(String, PauliSum)],
    values: Vec<Vec<f64>>,
}

impl<'a> Recorder<'a> {
    fn new(observables: &'a [(String, PauliSum)], capacity: usize) -> Self {
        Recorder { observables, values: observables.iter().map(|_| Vec::with_capacity(capacity)).collect() }
    }

    fn push(&mut self, psi: &StateVector) -> Result<()> {
        for ((_, o), vals) in self.observables.iter().zip(&mut self.values) {
            vals.push(expectation(psi, o)?);
        }
        Ok(())
    }

    fn finish(self, dt: f64) -> Result<Vec<TimeSeries>> {
        self.observables
            .iter()
            .zip(self.values)
            .map(|((name, _), vals)| TimeSeries::new(name.clone(), 0.0, dt, vals))
            .collect()
    }
}

/// Expectation values of `observables` at `e^{-i H₀ τ} |handoff>` for each
/// `τ`, one independent fast-forward per sample; order does not matter.
pub fn fast_forward_samples(
    factorization: &CartanFactorization,
    handoff: &StateVector,
    taus: &[f64],
    observables: &[(String, PauliSum)],
) -> Result<Vec<Vec<f64>>> {
    taus.iter()
        .map(|&tau| {
            let psi = factorization.fast_forward(handoff, tau)?;
            observables.iter().map(|(_, o)| expectation(&psi, o)).collect()
        })
        .collect()
}

/// Factorizes `H₀` and runs [`run_hybrid_with`].
pub fn run_hybrid(plan: &SimulationPlan) -> Result<HybridRun> {
    plan.validate()?;
    let factorization = factorize(&plan.h0, &plan.cartan)?;
    run_hybrid_with(plan, factorization)
}

/// Variational steps through the kick window, then fast-forwarding from the
/// materialized state to every later record time.
pub fn run_hybrid_with(plan: &SimulationPlan, factorization: CartanFactorization) -> Result<HybridRun> {
    run_hybrid_sampled(plan, factorization, fast_forward_samples)
}

/// [`run_hybrid_with`] with a caller-supplied phase-2 sampler, which gets the
/// same arguments as [`fast_forward_samples`] and must return rows in `taus`
/// order. This is the hook for sampling on several threads.
pub fn run_hybrid_sampled<S>(plan: &SimulationPlan, factorization: CartanFactorization, sampler: S) -> Result<HybridRun>
where
    S: FnOnce(&CartanFactorization, &StateVector, &[f64], &[(String, PauliSum)]) -> Result<Vec<Vec<f64>>>,
{
    plan.validate()?;
    if factorization.n_qubits() != plan.h0.n_qubits() {
        return Err(Error::QubitMismatch { left: plan.h0.n_qubits(), right: factorization.n_qubits() });
    }
    let times = plan.record_times();
    let steps = plan.kick_steps()?;
    let stride = plan.record_stride()?;
    let mut rec = Recorder::new(&plan.observables, times.len());
    rec.push(&plan.initial)?;

    let mut circuit = plan.ansatz.build()?;
    let mut max_residual = 0.0f64;
    let mut ill = 0;
    let h_of_t = |t: f64| plan.kick.hamiltonian(&plan.h0, t).expect("validated qubit counts");
    let mut recorded = 1;
    vqds::evolve(&mut circuit, &plan.initial, h_of_t, 0.0, plan.dt_kick, steps, &plan.vqds, |k, _, c, d| {
        max_residual = max_residual.max(d.projected_residual);
        ill += d.ill_conditioned as usize;
        if (k + 1) % stride == 0 && recorded < times.len() {
            rec.push(&c.apply(&plan.initial)?)?;
            recorded += 1;
        }
        Ok(())
    })?;
    let handoff = circuit.apply(&plan.initial)?;
    let t_handoff = steps as f64 * plan.dt_kick;

    let taus: Vec<f64> = times[recorded..].iter().map(|&t| t - t_handoff).collect();
    let samples = sampler(&factorization, &handoff, &taus, &plan.observables)?;
    for row in samples {
        for (vals, x) in rec.values.iter_mut().zip(row) {
            vals.push(x);
        }
    }
    Ok(HybridRun {
        record: RunRecord { series: rec.finish(plan.dt_record)?, handoff, t_handoff },
        factorization,
        max_residual,
        ill_conditioned_steps: ill,
    })
}

/// Dense reference: piecewise-constant `H(t_k)` over each `dt_kick` step of
/// the window (first order in `dt_kick`), exact `e^{-i H₀ τ}` afterwards.
pub fn run_exact_reference(plan: &SimulationPlan) -> Result<RunRecord> {
    run_exact_with_step(plan, plan.dt_kick)
}

fn run_exact_with_step(plan: &SimulationPlan, dt: f64) -> Result<RunRecord> {
    plan.validate()?;
    let times = plan.record_times();
    let steps = whole_ratio(plan.kick.t_f, dt, "t_f", "dt")?;
    let stride = whole_ratio(plan.dt_record, dt, "dt_record", "dt")?;
    let mut rec = Recorder::new(&plan.observables, times.len());
    let mut psi = plan.initial.clone();
    rec.push(&psi)?;
    let mut recorded = 1;
    for k in 0..steps {
        let h = plan.kick.hamiltonian(&plan.h0, k as f64 * dt)?;
        psi = DensePropagator::new(&h)?.propagate(&psi, dt)?;
        if (k + 1) % stride == 0 && recorded < times.len() {
            rec.push(&psi)?;
            recorded += 1;
        }
    }
    let t_handoff = steps as f64 * dt;
    let prop = DensePropagator::new(&plan.h0)?;
    for &t in &times[recorded..] {
        rec.push(&prop.propagate(&psi, t - t_handoff)?)?;
    }
    Ok(RunRecord { series: rec.finish(plan.dt_record)?, handoff: psi, t_handoff })
}

/// Largest change of any observable at the window end when the reference
/// step is halved: `(dt → dt/2, dt/2 → dt/4)`.
pub fn reference_halving_changes(plan: &SimulationPlan) -> Result<(f64, f64)> {
    let end = |dt: f64| -> Result<Vec<f64>> {
        let mut p = plan.clone();
        p.dt_kick = dt;
        p.dt_record = plan.kick.t_f;
        p.t_total = plan.kick.t_f;
        let r = run_exact_with_step(&p, dt)?;
        Ok(r.series.iter().map(|s| *s.values.last().expect("two samples")).collect())
    };
    let (a, b, c) = (end(plan.dt_kick)?, end(plan.dt_kick / 2.0)?, end(plan.dt_kick / 4.0)?);
    let diff = |x: &[f64], y: &[f64]| x.iter().zip(y).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
    Ok((diff(&a, &b), diff(&b, &c)))
}

/// Variational propagation of `initial` under a fixed `h` over the whole
/// record grid, without a kick or a handoff.
pub fn run_variational(
    h: &PauliSum,
    initial: &StateVector,
    ansatz: &AnsatzSpec,
    observables: &[(String, PauliSum)],
    dt: f64,
    t_total: f64,
    options: &VqdsOptions,
) -> Result<TimeSeriesBundle> {
    let steps = whole_ratio(t_total, dt, "t_total", "dt")?;
    let mut circuit = ansatz.build()?;
    let mut rec = Recorder::new(observables, steps + 1);
    rec.push(initial)?;
    let mut max_residual = 0.0f64;
    vqds::evolve(&mut circuit, initial, |_| h.clone(), 0.0, dt, steps, options, |_, _, c, d| {
        max_residual = max_residual.max(d.projected_residual);
        rec.push(&c.apply(initial)?)
    })?;
    Ok(TimeSeriesBundle { series: rec.finish(dt)?, max_residual, thetas: circuit.thetas().to_vec() })
}

/// Exact counterpart of [`run_variational`].
pub fn run_exact_static(
    h: &PauliSum,
    initial: &StateVector,
    observables: &[(String, PauliSum)],
    dt: f64,
    t_total: f64,
) -> Result<Vec<TimeSeries>> {
    let steps = whole_ratio(t_total, dt, "t_total", "dt")?;
    let prop = DensePropagator::new(h)?;
    let mut rec = Recorder::new(observables, steps + 1);
    for k in 0..=steps {
        rec.push(&prop.propagate(initial, k as f64 * dt)?)?;
    }
    rec.finish(dt)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesBundle {
    pub series: Vec<TimeSeries>,
    /// Largest phase-projected McLachlan residual.
    pub max_residual: f64,
    /// Final circuit parameters.
    pub thetas: Vec<f64>,
}
