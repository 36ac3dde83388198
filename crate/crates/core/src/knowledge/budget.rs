use nalgebra::Matrix6;
use serde::{Deserialize, Serialize};

use crate::dynamics::DAY;
use crate::error::{Error, Result};

/// First-order Gauss-Markov process.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussMarkov {
    /// Steady-state 1-sigma.
    pub sigma: f64,
    /// Correlation time [days].
    pub tau_days: f64,
}

impl GaussMarkov {
    pub fn tau(&self) -> f64 {
        self.tau_days * DAY
    }

    /// Transition factor over `dt` seconds.
    pub fn decay(&self, dt: f64) -> f64 {
        (-dt.abs() / self.tau()).exp()
    }

    /// Variance of the driving noise accumulated over `dt` seconds.
    pub fn process_variance(&self, dt: f64) -> f64 {
        self.sigma * self.sigma * -(-2.0 * dt.abs() / self.tau()).exp_m1()
    }
}

/// Uncertainties on the dynamics and on maneuver execution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UncertaintyBudget {
    /// Total gravitational parameter [m^3/s^2].
    pub sigma_mu: f64,
    /// Relative magnitude error assumed by the filter.
    pub thrust_sigma_mag_knowledge: f64,
    /// Pointing error assumed by the filter [rad].
    pub thrust_sigma_dir_knowledge: f64,
    /// Per-axis relative SRP error.
    pub srp_gm: GaussMarkov,
    /// Per-axis unmodeled acceleration [m/s^2].
    pub resid_gm: GaussMarkov,
    /// Relative magnitude error of the executed impulses.
    pub thrust_sigma_mag_dispersion: f64,
    /// Pointing error of the executed impulses [rad].
    pub thrust_sigma_dir_dispersion: f64,
}

impl Default for UncertaintyBudget {
    fn default() -> Self {
        Self {
            sigma_mu: 1e-4,
            thrust_sigma_mag_knowledge: 0.0167,
            thrust_sigma_dir_knowledge: 0.67_f64.to_radians(),
            srp_gm: GaussMarkov {
                sigma: 0.08,
                tau_days: 1.0,
            },
            resid_gm: GaussMarkov {
                sigma: 5e-9,
                tau_days: 1.0,
            },
            thrust_sigma_mag_dispersion: 0.05 / 3.0,
            thrust_sigma_dir_dispersion: (2.0_f64 / 3.0).to_radians(),
        }
    }
}

impl UncertaintyBudget {
    /// Budget with every uncertainty set to zero.
    pub fn zero() -> Self {
        let d = Self::default();
        Self {
            sigma_mu: 0.0,
            thrust_sigma_mag_knowledge: 0.0,
            thrust_sigma_dir_knowledge: 0.0,
            srp_gm: GaussMarkov {
                sigma: 0.0,
                ..d.srp_gm
            },
            resid_gm: GaussMarkov {
                sigma: 0.0,
                ..d.resid_gm
            },
            thrust_sigma_mag_dispersion: 0.0,
            thrust_sigma_dir_dispersion: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sigmas = [
            self.sigma_mu,
            self.thrust_sigma_mag_knowledge,
            self.thrust_sigma_dir_knowledge,
            self.srp_gm.sigma,
            self.resid_gm.sigma,
            self.thrust_sigma_mag_dispersion,
            self.thrust_sigma_dir_dispersion,
        ];
        if sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::Config(
                "budget sigmas must be finite and non-negative".into(),
            ));
        }
        if !(self.srp_gm.tau_days > 0.0 && self.resid_gm.tau_days > 0.0) {
            return Err(Error::Config(
                "Gauss-Markov correlation times must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Diagonal state covariance given by per-axis sigmas.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialCovariance {
    pub sigma_pos_m: f64,
    pub sigma_vel_mps: f64,
}

impl Default for InitialCovariance {
    fn default() -> Self {
        Self {
            sigma_pos_m: 100.0,
            sigma_vel_mps: 1e-3,
        }
    }
}

impl InitialCovariance {
    pub fn matrix(&self) -> Matrix6<f64> {
        let (p, v) = (self.sigma_pos_m.powi(2), self.sigma_vel_mps.powi(2));
        Matrix6::from_diagonal(&nalgebra::Vector6::new(p, p, p, v, v, v))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_pos_m >= 0.0 && self.sigma_vel_mps >= 0.0) {
            return Err(Error::Config("initial sigmas must be non-negative".into()));
        }
        Ok(())
    }
}
