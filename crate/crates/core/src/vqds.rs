//! McLachlan variational propagation.
//!
//! With `a_i = Im <ψ|∂_iψ>` and `E = <ψ|H|ψ>` the phase-corrected system is
//! `M_ij = Re A_ij - a_i a_j`, `V_i = Im C_i + a_i E`, which is the normal
//! equation of `min ‖Q (Σ_j ∂_jψ θ̇_j + i H ψ)‖` with `Q = 1 - |ψ><ψ|`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::ansatz::AnsatzCircuit;
use crate::error::Result;
use crate::linalg;
use crate::math::C64;
use crate::pauli::PauliSum;
use crate::state::StateVector;

/// Condition numbers above this are flagged in the step diagnostics.
pub const CONDITION_WARNING: f64 = 1e12;

pub const DEFAULT_REGULARIZATION: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Equation {
    /// Global-phase corrected system (default).
    #[default]
    PhaseCorrected,
    /// `Re A θ̇ = Im C` without the phase correction.
    RealTheta,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Solver {
    /// `(M + reg I) θ̇ = V`
    Tikhonov { reg: f64 },
    /// Minimum-norm SVD least squares on the tangent vectors themselves, with
    /// singular values below `rcond * σ_max` discarded. The singular values
    /// scale like the square roots of the eigenvalues of `M`, so this keeps
    /// directions that a diagonal shift on `M` would suppress.
    LeastSquares { rcond: f64 },
}

impl Default for Solver {
    fn default() -> Self {
        Solver::Tikhonov { reg: DEFAULT_REGULARIZATION }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    Euler,
    Rk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct VqdsOptions {
    pub scheme: Scheme,
    pub solver: Solver,
    pub equation: Equation,
}

#[derive(Clone, Debug)]
pub struct McLachlanSystem {
    pub a: DMatrix<C64>,
    pub c: DVector<C64>,
    pub m: DMatrix<f64>,
    pub v: DVector<f64>,
    pub theta_dot: DVector<f64>,
    /// `‖(∂_t + iH)|ψ>‖²` at `theta_dot`.
    pub residual: f64,
    pub energy: f64,
    pub h_squared: f64,
    /// `Im <ψ|∂_iψ>`
    pub connection: DVector<f64>,
    pub equation: Equation,
    /// Real embedding `[Re; Im]` of the (projected) tangent vectors, one column per parameter.
    tangent: DMatrix<f64>,
    /// Real embedding of the (projected) target `-iHψ`.
    target: DVector<f64>,
}

impl McLachlanSystem {
    /// Value of the error functional for an arbitrary velocity.
    pub fn residual_at(&self, theta_dot: &DVector<f64>) -> f64 {
        let re_a = self.a.map(|z| z.re);
        let im_c = self.c.map(|z| z.im);
        (theta_dot.transpose() * re_a * theta_dot)[(0, 0)] - 2.0 * im_c.dot(theta_dot) + self.h_squared
    }

    /// Error functional with the global phase projected out.
    pub fn projected_residual(&self) -> f64 {
        let r = &self.tangent * &self.theta_dot - &self.target;
        match self.equation {
            Equation::PhaseCorrected => r.norm_squared(),
            Equation::RealTheta => self.residual,
        }
    }

    pub fn condition_number(&self) -> f64 {
        linalg::spd_condition(&self.m)
    }

    pub fn n_params(&self) -> usize {
        self.v.len()
    }
}

/// Assembles `A`, `C`, `M`, `V` at the circuit's current parameters. The
/// velocity is left at zero and the residual at `<H²>`; see [`solve_theta_dot`].
pub fn assemble_system(circuit: &AnsatzCircuit, psi0: &StateVector, h: &PauliSum) -> Result<McLachlanSystem> {
    assemble_with(circuit, psi0, h, Equation::PhaseCorrected)
}

pub fn assemble_with(
    circuit: &AnsatzCircuit,
    psi0: &StateVector,
    h: &PauliSum,
    equation: Equation,
) -> Result<McLachlanSystem> {
    let (psi, derivs) = circuit.apply_and_derivatives(psi0)?;
    let h_psi = psi.apply_sum(h)?;
    let p = derivs.len();
    let energy = psi.inner(&h_psi).re;
    let h_squared = h_psi.inner(&h_psi).re;

    let mut a = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let z = derivs[i].inner(&derivs[j]);
            a[(i, j)] = z;
            a[(j, i)] = z.conj();
        }
    }
    let c = DVector::from_iterator(p, derivs.iter().map(|d| d.inner(&h_psi)));
    let overlaps: Vec<C64> = derivs.iter().map(|d| psi.inner(d)).collect();
    let connection = DVector::from_iterator(p, overlaps.iter().map(|z| z.im));

    let (m, v) = match equation {
        Equation::PhaseCorrected => (
            DMatrix::from_fn(p, p, |i, j| a[(i, j)].re - connection[i] * connection[j]),
            DVector::from_fn(p, |i, _| c[i].im + connection[i] * energy),
        ),
        Equation::RealTheta => (a.map(|z| z.re), c.map(|z| z.im)),
    };

    let dim = psi.dim();
    let project = equation == Equation::PhaseCorrected;
    let mut tangent = DMatrix::zeros(2 * dim, p);
    for (j, d) in derivs.iter().enumerate() {
        let shift = if project { overlaps[j] } else { C64::new(0.0, 0.0) };
        for (k, (&dk, &pk)) in d.amplitudes().iter().zip(psi.amplitudes()).enumerate() {
            let z = dk - pk * shift;
            tangent[(k, j)] = z.re;
            tangent[(dim + k, j)] = z.im;
        }
    }
    let e_shift = if project { energy } else { 0.0 };
    let mut target = DVector::zeros(2 * dim);
    for (k, (&hk, &pk)) in h_psi.amplitudes().iter().zip(psi.amplitudes()).enumerate() {
        // -i (Hψ - Eψ)
        let z = (hk - pk * e_shift) * C64::new(0.0, -1.0);
        target[k] = z.re;
        target[dim + k] = z.im;
    }

    Ok(McLachlanSystem {
        a,
        c,
        m,
        v,
        theta_dot: DVector::zeros(p),
        residual: h_squared,
        energy,
        h_squared,
        connection,
        equation,
        tangent,
        target,
    })
}

/// Tikhonov-regularized solve of `M θ̇ = V`.
pub fn solve_theta_dot(system: &McLachlanSystem, reg: f64) -> DVector<f64> {
    linalg::solve_regularized(&system.m, &system.v, reg)
}

/// Solves for the velocity with `solver`, storing it and the resulting residual.
pub fn solve_with(system: &mut McLachlanSystem, solver: Solver) -> &DVector<f64> {
    let td = match solver {
        Solver::Tikhonov { reg } => solve_theta_dot(system, reg),
        Solver::LeastSquares { rcond } => linalg::lstsq(&system.tangent, &system.target, rcond),
    };
    system.residual = system.residual_at(&td);
    system.theta_dot = td;
    &system.theta_dot
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepDiagnostics {
    pub t: f64,
    pub residual: f64,
    /// The residual with the global phase projected out (equal to `residual` for the uncorrected equation).
    pub projected_residual: f64,
    pub condition: f64,
    pub ill_conditioned: bool,
    /// Parameters after the step.
    pub thetas: Vec<f64>,
}

fn velocity(
    circuit: &AnsatzCircuit,
    psi0: &StateVector,
    h: &PauliSum,
    options: &VqdsOptions,
) -> Result<McLachlanSystem> {
    let mut sys = assemble_with(circuit, psi0, h, options.equation)?;
    solve_with(&mut sys, options.solver);
    Ok(sys)
}

/// Advances the circuit parameters by one step of size `dt` starting at `t`.
/// The diagnostics describe the system assembled at the start of the step.
pub fn step<F>(
    circuit: &mut AnsatzCircuit,
    psi0: &StateVector,
    h_of_t: F,
    t: f64,
    dt: f64,
    options: &VqdsOptions,
) -> Result<StepDiagnostics>
where
    F: Fn(f64) -> PauliSum,
{
    if !(dt > 0.0) {
        return Err(crate::Error::InvalidArgument("dt must be positive".into()));
    }
    let theta0 = DVector::from_column_slice(circuit.thetas());
    let sys = velocity(circuit, psi0, &h_of_t(t), options)?;
    let k1 = sys.theta_dot.clone();
    let next = match options.scheme {
        Scheme::Euler => &theta0 + &k1 * dt,
        Scheme::Rk4 => {
            let mut stage = circuit.clone();
            let mut eval = |shift: &DVector<f64>, s: f64| -> Result<DVector<f64>> {
                stage.set_thetas((&theta0 + shift).as_slice())?;
                Ok(velocity(&stage, psi0, &h_of_t(t + s), options)?.theta_dot)
            };
            let k2 = eval(&(&k1 * (dt / 2.0)), dt / 2.0)?;
            let k3 = eval(&(&k2 * (dt / 2.0)), dt / 2.0)?;
            let k4 = eval(&(&k3 * dt), dt)?;
            &theta0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
        }
    };
    circuit.set_thetas(next.as_slice())?;
    let condition = sys.condition_number();
    Ok(StepDiagnostics {
        t,
        residual: sys.residual,
        projected_residual: sys.projected_residual(),
        condition,
        ill_conditioned: condition > CONDITION_WARNING,
        thetas: circuit.thetas().to_vec(),
    })
}

/// Runs `n_steps` steps from `t0`, calling `observe(step_index, t_after, circuit, diagnostics)` after each.
pub fn evolve<F, O>(
    circuit: &mut AnsatzCircuit,
    psi0: &StateVector,
    h_of_t: F,
    t0: f64,
    dt: f64,
    n_steps: usize,
    options: &VqdsOptions,
    mut observe: O,
) -> Result<()>
where
    F: Fn(f64) -> PauliSum,
    O: FnMut(usize, f64, &AnsatzCircuit, &StepDiagnostics) -> Result<()>,
{
    for k in 0..n_steps {
        let t = t0 + dt * k as f64;
        let diag = step(circuit, psi0, &h_of_t, t, dt, options)?;
        observe(k, t0 + dt * (k + 1) as f64, circuit, &diag)?;
    }
    Ok(())
}
