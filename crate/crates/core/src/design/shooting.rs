//! Ballistic arcs between two positions under the full force model.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::lambert::lambert;
use crate::dynamics::{propagate_with_stm, Dynamics, Epoch, PropagationOptions, StateVector, HOUR};
use crate::error::{Error, Result};

/// Settings of the single-shooting solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShootingOptions {
    /// Position residual at which iterations stop [m].
    pub tol: f64,
    /// Largest residual still accepted when iterations stall [m].
    pub accept: f64,
    pub max_iter: usize,
    /// Smallest reciprocal condition number of the position/velocity block.
    pub min_rcond: f64,
    /// Shortest allowed time of flight [s].
    pub min_duration: f64,
    pub propagation: PropagationOptions,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            accept: 1.0,
            max_iter: 50,
            min_rcond: 1e-12,
            min_duration: 48.0 * HOUR,
            propagation: PropagationOptions::default(),
        }
    }
}

/// Converged ballistic arc.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArcSolution {
    /// Departure velocity [m/s].
    pub v0: Vector3<f64>,
    /// Arrival velocity [m/s].
    pub v1: Vector3<f64>,
    pub iterations: usize,
    /// Final position miss distance [m].
    pub residual: f64,
}

/// Finds the departure velocity that carries the spacecraft from `r0` at
/// `t0` to `r1` at `t1`. `t1` may precede `t0`.
///
/// Newton iterations on the position/velocity block of the transition
/// matrix, with step halving whenever the miss distance grows. Starting
/// guesses are tried in order: `v_guess`, the short-way and long-way Lambert
/// transfers about the total system mass, and the straight line.
pub fn solve_arc(
    r0: &Vector3<f64>,
    r1: &Vector3<f64>,
    t0: Epoch,
    t1: Epoch,
    dynamics: &Dynamics,
    opts: &ShootingOptions,
    v_guess: Option<Vector3<f64>>,
) -> Result<ArcSolution> {
    let dt = t1 - t0;
    if dt.abs() < opts.min_duration {
        return Err(Error::Constraint(format!(
            "arc of {:.2} h is shorter than the {:.2} h minimum",
            dt.abs() / HOUR,
            opts.min_duration / HOUR
        )));
    }
    if (r1 - r0).norm() == 0.0 {
        return Err(Error::Constraint(
            "rest-to-rest arc with identical endpoints".into(),
        ));
    }

    let mut guesses: Vec<Vector3<f64>> = v_guess.into_iter().collect();
    let mu = dynamics.sys.mu_total();
    // Short-way transfer first, then the long way round. Backward arcs are
    // guessed from the forward-time transfer between the same points.
    let (first, second) = if dt > 0.0 { (r0, r1) } else { (r1, r0) };
    let mut normal = first.cross(second);
    if normal.norm() < 1e-9 * r0.norm() * r1.norm() {
        normal = dynamics.sys.pole;
    }
    for prograde in [true, false] {
        let lam = if dt > 0.0 {
            lambert(r0, r1, dt, mu, &normal, prograde).map(|(v, _)| v)
        } else {
            lambert(r1, r0, -dt, mu, &normal, prograde).map(|(_, v)| v)
        };
        if let Ok(v) = lam {
            guesses.push(v);
        }
    }
    guesses.push((r1 - r0) / dt);

    let mut last_err = None;
    for v in guesses {
        match shoot(r0, r1, t0, t1, dynamics, opts, v) {
            Ok(sol) => return Ok(sol),
            Err(e) => {
                let better = match (&last_err, &e) {
                    (None, _) => true,
                    (
                        Some(Error::BvpFailure { residual: a, .. }),
                        Error::BvpFailure { residual: b, .. },
                    ) => b < a,
                    _ => false,
                };
                if better {
                    last_err = Some(e);
                }
            }
        }
    }
    Err(last_err.unwrap_or(Error::BvpFailure {
        iterations: 0,
        residual: f64::INFINITY,
    }))
}

fn shoot(
    r0: &Vector3<f64>,
    r1: &Vector3<f64>,
    t0: Epoch,
    t1: Epoch,
    dynamics: &Dynamics,
    opts: &ShootingOptions,
    v_init: Vector3<f64>,
) -> Result<ArcSolution> {
    let run = |v: &Vector3<f64>| {
        propagate_with_stm(
            &StateVector::new(*r0, *v, t0),
            t1,
            dynamics,
            &opts.propagation,
        )
    };
    let mut v = v_init;
    let (mut end, mut stm) = run(&v)?;
    let mut miss = r1 - end.r;
    let mut iterations = 0;
    while iterations < opts.max_iter && miss.norm() > opts.tol {
        iterations += 1;
        let block = stm.rv();
        let sv = block.singular_values();
        let rcond = sv.min() / sv.max();
        if !(rcond >= opts.min_rcond) {
            return Err(Error::Conditioning { rcond });
        }
        let Some(step) = block.lu().solve(&miss) else {
            return Err(Error::Conditioning { rcond });
        };
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..12 {
            let trial = v + step * lambda;
            if let Ok((e, s)) = run(&trial) {
                let m = r1 - e.r;
                if m.norm() < miss.norm() {
                    v = trial;
                    end = e;
                    stm = s;
                    miss = m;
                    improved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    let residual = miss.norm();
    if residual <= opts.accept {
        Ok(ArcSolution {
            v0: v,
            v1: end.v,
            iterations,
            residual,
        })
    } else {
        Err(Error::BvpFailure {
            iterations,
            residual,
        })
    }
}
