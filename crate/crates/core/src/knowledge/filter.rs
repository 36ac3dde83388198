use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, RowVector6, Vector3};
use serde::{Deserialize, Serialize};

use super::budget::UncertaintyBudget;
use crate::dynamics::{
    propagate_augmented, Dynamics, Epoch, PropagationOptions, StateVector, HOUR,
};
use crate::error::{Error, Result};
use crate::measurements::{IslModel, MeasurementKind, NavCamModel};

/// Whether measurement biases are estimated or only considered.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasTreatment {
    Consider,
    #[default]
    Estimate,
}

/// Measurement biases carried by the filter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bias {
    NavCamRange,
    NavCamAzimuth,
    NavCamElevation,
    IslRange,
    IslRangeRate,
}

const BIASES: [Bias; 5] = [
    Bias::NavCamRange,
    Bias::NavCamAzimuth,
    Bias::NavCamElevation,
    Bias::IslRange,
    Bias::IslRangeRate,
];

/// Ordering of the filter vector: position, velocity, SRP scale, residual
/// acceleration, then estimated biases; the consider parameters (gravity,
/// then considered biases) follow.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub biases: BiasTreatment,
}

impl Layout {
    pub const SRP: usize = 6;
    pub const RES: usize = 9;

    pub fn n_est(&self) -> usize {
        match self.biases {
            BiasTreatment::Consider => 12,
            BiasTreatment::Estimate => 17,
        }
    }

    pub fn n(&self) -> usize {
        17 + 1
    }

    pub fn mu(&self) -> usize {
        self.n_est()
    }

    pub fn bias(&self, b: Bias) -> usize {
        let k = BIASES.iter().position(|x| *x == b).unwrap_or(0);
        match self.biases {
            BiasTreatment::Estimate => 12 + k,
            BiasTreatment::Consider => 13 + k,
        }
    }
}

/// Consider-filter covariance over the estimated and consider parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterState {
    pub epoch: Epoch,
    pub layout: Layout,
    /// Estimated deviation from the nominal.
    pub x_hat: DVector<f64>,
    /// Full covariance; the trailing block belongs to consider parameters.
    pub p: DMatrix<f64>,
}

impl FilterState {
    /// Prior with the given state covariance, steady-state Gauss-Markov
    /// variances and bias variances from the measurement models.
    pub fn new(
        epoch: Epoch,
        p0: &Matrix6<f64>,
        budget: &UncertaintyBudget,
        navcam: &NavCamModel,
        isl: &IslModel,
        biases: BiasTreatment,
    ) -> Self {
        let layout = Layout { biases };
        let mut p = DMatrix::zeros(layout.n(), layout.n());
        p.view_mut((0, 0), (6, 6)).copy_from(p0);
        for i in 0..3 {
            p[(Layout::SRP + i, Layout::SRP + i)] = budget.srp_gm.sigma.powi(2);
            p[(Layout::RES + i, Layout::RES + i)] = budget.resid_gm.sigma.powi(2);
        }
        p[(layout.mu(), layout.mu())] = budget.sigma_mu.powi(2);
        let prior = [
            navcam.bias_range,
            navcam.bias_angle,
            navcam.bias_angle,
            isl.bias_range,
            isl.bias_rr,
        ];
        for (b, s) in BIASES.iter().zip(prior) {
            let k = layout.bias(*b);
            p[(k, k)] = s * s;
        }
        Self {
            epoch,
            layout,
            x_hat: DVector::zeros(layout.n_est()),
            p,
        }
    }

    pub fn pxx(&self) -> Matrix6<f64> {
        self.p.fixed_view::<6, 6>(0, 0).into_owned()
    }

    pub fn pxc(&self) -> DMatrix<f64> {
        let (ne, n) = (self.layout.n_est(), self.layout.n());
        self.p.view((0, ne), (ne, n - ne)).into_owned()
    }

    pub fn pcc(&self) -> DMatrix<f64> {
        let (ne, n) = (self.layout.n_est(), self.layout.n());
        self.p.view((ne, ne), (n - ne, n - ne)).into_owned()
    }

    /// Root-sum-square position sigma [m].
    pub fn sigma_pos(&self) -> f64 {
        (0..3).map(|i| self.p[(i, i)]).sum::<f64>().max(0.0).sqrt()
    }

    /// Root-sum-square velocity sigma [m/s].
    pub fn sigma_vel(&self) -> f64 {
        (3..6).map(|i| self.p[(i, i)]).sum::<f64>().max(0.0).sqrt()
    }

    fn symmetrize(&mut self) {
        let t = self.p.transpose();
        self.p += t;
        self.p *= 0.5;
    }

    fn restore_consider(&mut self, pcc: &DMatrix<f64>) {
        let ne = self.layout.n_est();
        let nc = self.layout.n() - ne;
        self.p.view_mut((ne, ne), (nc, nc)).copy_from(pcc);
    }
}

/// Linear time update along the nominal from `nominal` (at the filter
/// epoch) to `to`, in steps no longer than `max_step` seconds. Returns the
/// nominal state at `to`.
pub fn time_update(
    fs: &mut FilterState,
    nominal: &StateVector,
    to: Epoch,
    dynamics: &Dynamics,
    prop: &PropagationOptions,
    budget: &UncertaintyBudget,
    max_step: f64,
) -> Result<StateVector> {
    if to < fs.epoch {
        return Err(Error::Numerical(
            "filter time update must move forward".into(),
        ));
    }
    let mut state = nominal.clone();
    let step = if max_step > 0.0 { max_step } else { HOUR };
    while fs.epoch < to {
        let next = if to - fs.epoch > step {
            fs.epoch + step
        } else {
            to
        };
        let aug = propagate_augmented(
            &state,
            next,
            dynamics,
            prop,
            budget.srp_gm.tau(),
            budget.resid_gm.tau(),
        )?;
        let dt = next - fs.epoch;
        let layout = fs.layout;
        let n = layout.n();
        let mut phi = DMatrix::identity(n, n);
        phi.view_mut((0, 0), (6, 6)).copy_from(&aug.stm.phi);
        phi.view_mut((0, Layout::SRP), (6, 3))
            .copy_from(&aug.gamma_srp);
        phi.view_mut((0, Layout::RES), (6, 3))
            .copy_from(&aug.gamma_res);
        phi.view_mut((0, layout.mu()), (6, 1)).copy_from(&aug.dmu);
        let (ds, dr) = (budget.srp_gm.decay(dt), budget.resid_gm.decay(dt));
        for i in 0..3 {
            phi[(Layout::SRP + i, Layout::SRP + i)] = ds;
            phi[(Layout::RES + i, Layout::RES + i)] = dr;
        }
        let pcc = fs.pcc();
        fs.p = &phi * &fs.p * phi.transpose();
        let (qs, qr) = (
            budget.srp_gm.process_variance(dt),
            budget.resid_gm.process_variance(dt),
        );
        for i in 0..3 {
            fs.p[(Layout::SRP + i, Layout::SRP + i)] += qs;
            fs.p[(Layout::RES + i, Layout::RES + i)] += qr;
        }
        let ne = layout.n_est();
        let xh = phi.view((0, 0), (ne, ne)) * &fs.x_hat;
        fs.x_hat = xh;
        fs.symmetrize();
        fs.restore_consider(&pcc);
        fs.epoch = next;
        state = aug.state;
    }
    Ok(state)
}

/// One scalar observable row over the full filter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationRow {
    pub h: DVector<f64>,
    pub sigma: f64,
    /// Observed minus nominal-predicted value.
    pub innovation: f64,
}

/// Builds the filter rows of an observable from the state partials and the
/// bias it carries.
pub fn observation_rows(
    layout: Layout,
    kind: MeasurementKind,
    partials: &[RowVector6<f64>],
    sigmas: &[f64],
) -> Vec<ObservationRow> {
    let biases: &[Bias] = match kind {
        MeasurementKind::NavCamRange => &[Bias::NavCamRange],
        MeasurementKind::NavCamAngles => &[Bias::NavCamAzimuth, Bias::NavCamElevation],
        MeasurementKind::IslRange => &[Bias::IslRange],
        MeasurementKind::IslRangeRate => &[Bias::IslRangeRate],
    };
    partials
        .iter()
        .zip(sigmas)
        .zip(biases)
        .map(|((row, sigma), bias)| {
            let mut h = DVector::zeros(layout.n());
            for j in 0..6 {
                h[j] = row[j];
            }
            h[layout.bias(*bias)] = 1.0;
            ObservationRow {
                h,
                sigma: *sigma,
                innovation: 0.0,
            }
        })
        .collect()
}

/// Schmidt consider update with one scalar observable, Joseph form. The
/// consider rows of the gain are zero, so their covariance never changes.
pub fn schmidt_update(fs: &mut FilterState, obs: &ObservationRow) -> Result<()> {
    if !(obs.sigma > 0.0) {
        return Err(Error::Numerical(format!(
            "measurement sigma {} is not positive",
            obs.sigma
        )));
    }
    let layout = fs.layout;
    let (n, ne) = (layout.n(), layout.n_est());
    let r = obs.sigma * obs.sigma;
    let ph = &fs.p * &obs.h;
    let w = obs.h.dot(&ph) + r;
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::Numerical(format!(
            "innovation variance {w:e} is not positive"
        )));
    }
    let mut k = ph / w;
    for i in ne..n {
        k[i] = 0.0;
    }
    let pcc = fs.pcc();
    let a = DMatrix::identity(n, n) - &k * obs.h.transpose();
    fs.p = &a * &fs.p * a.transpose() + &k * k.transpose() * r;
    let predicted = obs.h.rows(0, ne).dot(&fs.x_hat);
    let gain = k.rows(0, ne).into_owned();
    fs.x_hat += gain * (obs.innovation - predicted);
    fs.symmetrize();
    fs.restore_consider(&pcc);
    Ok(())
}

/// Execution-error covariance of an impulse: magnitude error along the
/// impulse and equal pointing errors on the two transverse axes.
pub fn execution_covariance(dv: &Vector3<f64>, sigma_mag: f64, sigma_dir: f64) -> Matrix3<f64> {
    let m = dv.norm();
    if m == 0.0 {
        return Matrix3::zeros();
    }
    let u = dv / m;
    let along = u * u.transpose();
    let transverse = Matrix3::identity() - along;
    along * (sigma_mag * m).powi(2) + transverse * (m * sigma_dir.tan()).powi(2)
}

/// Inflates the velocity covariance by the execution error of `dv`.
pub fn apply_maneuver_knowledge(
    fs: &mut FilterState,
    dv: &Vector3<f64>,
    budget: &UncertaintyBudget,
) {
    let e = execution_covariance(
        dv,
        budget.thrust_sigma_mag_knowledge,
        budget.thrust_sigma_dir_knowledge,
    );
    let mut block = fs.p.fixed_view_mut::<3, 3>(3, 3);
    block += e;
}
