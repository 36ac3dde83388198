use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::dynamics::Stm;
use crate::error::{Error, Result};

/// Weighting of the correction law.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuidanceConfig {
    /// Weight of the arrival velocity deviation [s^2]. `None` uses the
    /// squared duration of the targeted leg.
    pub q: Option<f64>,
    /// Also correct at the last node (velocity nulling).
    pub apply_final_impulse: bool,
}

impl GuidanceConfig {
    /// Weight for a leg lasting `duration` seconds.
    pub fn weight(&self, duration: f64) -> f64 {
        self.q.unwrap_or(duration * duration)
    }

    pub fn validate(&self) -> Result<()> {
        match self.q {
            Some(q) if !(q.is_finite() && q >= 0.0) => Err(Error::Config(format!(
                "guidance weight {q} must be finite and non-negative"
            ))),
            _ => Ok(()),
        }
    }
}

/// Correction impulse that minimises the weighted sum of squared position
/// and velocity deviations at the end of the leg described by `stm`, given
/// the estimated deviations `dr`, `dv` just before the impulse.
pub fn differential_guidance(
    dr: &Vector3<f64>,
    dv: &Vector3<f64>,
    stm: &Stm,
    q: f64,
) -> Result<Vector3<f64>> {
    let (rr, rv, vr, vv) = (stm.rr(), stm.rv(), stm.vr(), stm.vv());
    let normal = rv.transpose() * rv + vv.transpose() * vv * q;
    let eig = normal.symmetric_eigenvalues();
    let rcond = eig.min() / eig.max();
    if !(rcond > 1e-14) {
        return Err(Error::Guidance { rcond });
    }
    let rhs = (rv.transpose() * rr + vv.transpose() * vr * q) * dr;
    let Some(x) = normal.cholesky().map(|c| c.solve(&rhs)) else {
        return Err(Error::Guidance { rcond });
    };
    Ok(-x - dv)
}
