//! Numerical propagation of the spacecraft state and its sensitivities.

use nalgebra::{Matrix3, Matrix6, Matrix6x3, SVector, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use super::epoch::Epoch;
use super::forces::Dynamics;
use super::frames::{FrameId, StateVector};
use super::integrator::{Control, Dopri5, Failure, FailureKind, Solution, Step};
use crate::error::{Error, Result};

/// Integrator settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationOptions {
    pub rtol: f64,
    /// Absolute position tolerance [m].
    pub atol_pos: f64,
    /// Absolute velocity tolerance [m/s].
    pub atol_vel: f64,
    pub max_steps: usize,
    /// Largest allowed step [s].
    pub max_step: Option<f64>,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol_pos: 1e-6,
            atol_vel: 1e-9,
            max_steps: 500_000,
            max_step: None,
        }
    }
}

impl PropagationOptions {
    fn solver<const N: usize>(&self, atol: SVector<f64, N>) -> Dopri5<N> {
        let mut solver = Dopri5::new(self.rtol, atol);
        solver.max_steps = self.max_steps;
        solver.max_step = self.max_step;
        solver
    }

    fn state_atol(&self) -> Vector6<f64> {
        Vector6::new(
            self.atol_pos,
            self.atol_pos,
            self.atol_pos,
            self.atol_vel,
            self.atol_vel,
            self.atol_vel,
        )
    }
}

/// State transition matrix, ordered (position, velocity).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stm {
    pub phi: Matrix6<f64>,
}

impl Stm {
    pub fn identity() -> Self {
        Self {
            phi: Matrix6::identity(),
        }
    }

    pub fn rr(&self) -> Matrix3<f64> {
        self.phi.fixed_view::<3, 3>(0, 0).into()
    }

    pub fn rv(&self) -> Matrix3<f64> {
        self.phi.fixed_view::<3, 3>(0, 3).into()
    }

    pub fn vr(&self) -> Matrix3<f64> {
        self.phi.fixed_view::<3, 3>(3, 0).into()
    }

    pub fn vv(&self) -> Matrix3<f64> {
        self.phi.fixed_view::<3, 3>(3, 3).into()
    }

    /// `self` after `earlier`, i.e. Phi(t2, t0) = Phi(t2, t1) Phi(t1, t0).
    pub fn after(&self, earlier: &Stm) -> Stm {
        Stm {
            phi: self.phi * earlier.phi,
        }
    }
}

/// Dense samples of a propagated trajectory, in time order of propagation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<StateVector>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&StateVector> {
        self.samples.last()
    }
}

/// Transition of the state and of its sensitivities to the filter's
/// dynamic parameters over one interval.
#[derive(Clone, Debug)]
pub struct AugmentedTransition {
    pub state: StateVector,
    pub stm: Stm,
    /// Sensitivity to the initial per-axis SRP scale error, which decays
    /// with its correlation time.
    pub gamma_srp: Matrix6x3<f64>,
    /// Sensitivity to the initial unmodeled acceleration, decaying likewise.
    pub gamma_res: Matrix6x3<f64>,
    /// Sensitivity to the total gravitational parameter.
    pub dmu: Vector6<f64>,
}

fn check_input(state0: &StateVector) -> Result<()> {
    if state0.frame != FrameId::DidymosEclipJ2000 {
        return Err(Error::InvalidModel(
            "propagation requires a DidymosEclipJ2000 state".into(),
        ));
    }
    if !(state0
        .r
        .iter()
        .chain(state0.v.iter())
        .all(|x| x.is_finite()))
    {
        return Err(Error::Numerical("non-finite initial state".into()));
    }
    Ok(())
}

fn failure<const N: usize>(f: Failure<N, Error>) -> Error {
    let reason = match f.kind {
        FailureKind::Rhs(e) => e.to_string(),
        FailureKind::StepUnderflow(h) => format!("step size underflow (h = {h:e} s)"),
        FailureKind::MaxSteps(n) => format!("maximum number of steps ({n}) exceeded"),
        FailureKind::NonFinite => "non-finite error estimate".into(),
    };
    let last = StateVector::new(
        f.y.fixed_rows::<3>(0).into(),
        f.y.fixed_rows::<3>(3).into(),
        Epoch::from_seconds(f.t),
    );
    Error::Propagation {
        epoch: f.t,
        reason,
        last_state: Some(Box::new(last)),
    }
}

fn state_rhs(dynamics: &Dynamics, t: f64, y: &Vector6<f64>) -> Result<Vector6<f64>> {
    let r: Vector3<f64> = y.fixed_rows::<3>(0).into();
    let env = dynamics.environment(Epoch::from_seconds(t))?;
    let a = dynamics.accel_parts(&r, &env)?.total;
    let mut dy = Vector6::zeros();
    dy.fixed_rows_mut::<3>(0).copy_from(&y.fixed_rows::<3>(3));
    dy.fixed_rows_mut::<3>(3).copy_from(&a);
    Ok(dy)
}

fn run_state<O>(
    state0: &StateVector,
    tf: Epoch,
    dynamics: &Dynamics,
    opts: &PropagationOptions,
    observer: O,
) -> Result<Solution<6>>
where
    O: FnMut(&Step<6>) -> Control,
{
    check_input(state0)?;
    opts.solver(opts.state_atol())
        .integrate(
            |t, y| state_rhs(dynamics, t, y),
            state0.epoch.seconds(),
            state0.to_vector(),
            tf.seconds(),
            observer,
        )
        .map_err(failure)
}

/// Propagates a state to `tf` (which may precede the initial epoch).
pub fn propagate(
    state0: &StateVector,
    tf: Epoch,
    dynamics: &Dynamics,
    opts: &PropagationOptions,
) -> Result<StateVector> {
    let sol = run_state(state0, tf, dynamics, opts, |_| Control::Continue)?;
    Ok(StateVector::from_vector(&sol.y, tf))
}

/// Propagates to `tf`, sampling the trajectory every `cadence` seconds
/// from the initial epoch. Both end points are included.
pub fn propagate_dense(
    state0: &StateVector,
    tf: Epoch,
    dynamics: &Dynamics,
    opts: &PropagationOptions,
    cadence: f64,
) -> Result<Trajectory> {
    if !(cadence > 0.0) {
        return Err(Error::Config(format!(
            "sampling cadence {cadence} must be positive"
        )));
    }
    let t0 = state0.epoch.seconds();
    let dir = (tf.seconds() - t0).signum();
    let mut samples = vec![state0.clone()];
    let mut k = 1u64;
    let sol = run_state(state0, tf, dynamics, opts, |step| {
        loop {
            let t = t0 + dir * cadence * k as f64;
            if (t - step.t1) * dir >= 0.0 {
                break;
            }
            samples.push(StateVector::from_vector(
                &step.interpolate(t),
                Epoch::from_seconds(t),
            ));
            k += 1;
        }
        Control::Continue
    })?;
    if tf != state0.epoch {
        samples.push(StateVector::from_vector(&sol.y, tf));
    }
    Ok(Trajectory { samples })
}

/// Propagates to `tf` unless `stop` returns true for the state at the end
/// of an integrator step. Returns the final state and whether it stopped.
pub fn propagate_until<S>(
    state0: &StateVector,
    tf: Epoch,
    dynamics: &Dynamics,
    opts: &PropagationOptions,
    mut stop: S,
) -> Result<(StateVector, bool)>
where
    S: FnMut(&StateVector) -> bool,
{
    let sol = run_state(state0, tf, dynamics, opts, |step| {
        let st = StateVector::from_vector(&step.y1, Epoch::from_seconds(step.t1));
        if stop(&st) {
            Control::Stop
        } else {
            Control::Continue
        }
    })?;
    let epoch = if sol.stopped {
        Epoch::from_seconds(sol.t)
    } else {
        tf
    };
    Ok((StateVector::from_vector(&sol.y, epoch), sol.stopped))
}

const STM_LEN: usize = 42;

fn stm_atol(opts: &PropagationOptions) -> SVector<f64, STM_LEN> {
    let mut atol = SVector::<f64, STM_LEN>::zeros();
    atol.fixed_rows_mut::<6>(0).copy_from(&opts.state_atol());
    for col in 0..6 {
        for row in 0..6 {
            // Column-major 6x6 block after the state.
            atol[6 + 6 * col + row] = match (row < 3, col < 3) {
                (true, true) => 1e-9,
                (true, false) => 1e-6,
                (false, true) => 1e-15,
                (false, false) => 1e-9,
            };
        }
    }
    atol
}

/// Propagates the state together with its transition matrix.
pub fn propagate_with_stm(
    state0: &StateVector,
    tf: Epoch,
    dynamics: &Dynamics,
    opts: &PropagationOptions,
) -> Result<(StateVector, Stm)> {
    check_input(state0)?;
    let mut y0 = SVector::<f64, STM_LEN>::zeros();
    y0.fixed_rows_mut::<6>(0).copy_from(&state0.to_vector());
    for i in 0..6 {
        y0[6 + 7 * i] = 1.0;
    }
    let rhs = |t: f64, y: &SVector<f64, STM_LEN>| -> Result<SVector<f64, STM_LEN>> {
        let r: Vector3<f64> = y.fixed_rows::<3>(0).into();
        let env = dynamics.environment(Epoch::from_seconds(t))?;
        let a = dynamics.accel_parts(&r, &env)?.total;
        let g = dynamics.accel_gradient(&r, &env)?;
        let mut dy = SVector::<f64, STM_LEN>::zeros();
        dy.fixed_rows_mut::<3>(0).copy_from(&y.fixed_rows::<3>(3));
        dy.fixed_rows_mut::<3>(3).copy_from(&a);
        for col in 0..6 {
            let base = 6 + 6 * col;
            let pr: Vector3<f64> = y.fixed_rows::<3>(base).into();
            let pv: Vector3<f64> = y.fixed_rows::<3>(base + 3).into();
            dy.fixed_rows_mut::<3>(base).copy_from(&pv);
            dy.fixed_rows_mut::<3>(base + 3).copy_from(&(g * pr));
        }
        Ok(dy)
    };
    let sol = opts
        .solver(stm_atol(opts))
        .integrate(rhs, state0.epoch.seconds(), y0, tf.seconds(), |_| {
            Control::Continue
        })
        .map_err(failure)?;
    let phi = Matrix6::from_column_slice(&sol.y.as_slice()[6..42]);
    let x: Vector6<f64> = sol.y.fixed_rows::<6>(0).into();
    Ok((StateVector::from_vector(&x, tf), Stm { phi }))
}

const AUG_LEN: usize = 84;

/// Propagates the state, its transition matrix and the sensitivities to the
/// filter's dynamic parameters. `tau_srp` and `tau_res` are the correlation
/// times [s] of the SRP scale and residual acceleration processes.
pub fn propagate_augmented(
    state0: &StateVector,
    tf: Epoch,
    dynamics: &Dynamics,
    opts: &PropagationOptions,
    tau_srp: f64,
    tau_res: f64,
) -> Result<AugmentedTransition> {
    check_input(state0)?;
    let t0 = state0.epoch.seconds();
    let mut y0 = SVector::<f64, AUG_LEN>::zeros();
    y0.fixed_rows_mut::<6>(0).copy_from(&state0.to_vector());
    for i in 0..6 {
        y0[6 + 7 * i] = 1.0;
    }
    let mut atol = SVector::<f64, AUG_LEN>::zeros();
    atol.fixed_rows_mut::<STM_LEN>(0).copy_from(&stm_atol(opts));
    for k in 0..7 {
        // Gamma columns and the gravity sensitivity.
        let base = STM_LEN + 6 * k;
        let (p, v) = if k < 3 {
            (1e-6, 1e-12)
        } else if k < 6 {
            (1e-3, 1e-9)
        } else {
            (1e-6, 1e-12)
        };
        atol.fixed_rows_mut::<3>(base).fill(p);
        atol.fixed_rows_mut::<3>(base + 3).fill(v);
    }
    let mu_total = dynamics.sys.mu_total() * dynamics.pert.mu_scale;
    let rhs = |t: f64, y: &SVector<f64, AUG_LEN>| -> Result<SVector<f64, AUG_LEN>> {
        let r: Vector3<f64> = y.fixed_rows::<3>(0).into();
        let env = dynamics.environment(Epoch::from_seconds(t))?;
        let parts = dynamics.accel_parts(&r, &env)?;
        let g = dynamics.accel_gradient(&r, &env)?;
        let dt = (t - t0).abs();
        let decay_srp = (-dt / tau_srp).exp();
        let decay_res = (-dt / tau_res).exp();
        let mut dy = SVector::<f64, AUG_LEN>::zeros();
        dy.fixed_rows_mut::<3>(0).copy_from(&y.fixed_rows::<3>(3));
        dy.fixed_rows_mut::<3>(3).copy_from(&parts.total);
        for col in 0..13 {
            let base = 6 + 6 * col;
            let pr: Vector3<f64> = y.fixed_rows::<3>(base).into();
            let pv: Vector3<f64> = y.fixed_rows::<3>(base + 3).into();
            let mut acc = g * pr;
            match col {
                6..=8 => acc[col - 6] += parts.srp[col - 6] * decay_srp,
                9..=11 => acc[col - 9] += decay_res,
                12 => acc += parts.gravity / mu_total,
                _ => {}
            }
            dy.fixed_rows_mut::<3>(base).copy_from(&pv);
            dy.fixed_rows_mut::<3>(base + 3).copy_from(&acc);
        }
        Ok(dy)
    };
    let sol = opts
        .solver(atol)
        .integrate(rhs, t0, y0, tf.seconds(), |_| Control::Continue)
        .map_err(failure)?;
    let s = sol.y.as_slice();
    let x: Vector6<f64> = sol.y.fixed_rows::<6>(0).into();
    Ok(AugmentedTransition {
        state: StateVector::from_vector(&x, tf),
        stm: Stm {
            phi: Matrix6::from_column_slice(&s[6..42]),
        },
        gamma_srp: Matrix6x3::from_column_slice(&s[42..60]),
        gamma_res: Matrix6x3::from_column_slice(&s[60..78]),
        dmu: Vector6::from_column_slice(&s[78..84]),
    })
}
