//! Dormand-Prince 5(4) integrator with dense output.
//!
//! Works on fixed-size vectors so that the state, the state transition matrix
//! and the parameter sensitivities can all be integrated without allocation.

use nalgebra::SVector;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Step-size control settings.
#[derive(Clone, Debug)]
pub struct Dopri5<const N: usize> {
    pub rtol: f64,
    pub atol: SVector<f64, N>,
    pub max_steps: usize,
    /// Upper bound on |h| [s]; `None` leaves it to the error control.
    pub max_step: Option<f64>,
    pub initial_step: Option<f64>,
}

/// What the observer wants after an accepted step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// One accepted step, with continuous extension over `[t0, t1]`.
pub struct Step<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y0: SVector<f64, N>,
    pub y1: SVector<f64, N>,
    cont: [SVector<f64, N>; 4],
}

impl<const N: usize> Step<N> {
    /// Fifth-order interpolant; valid for `t` between `t0` and `t1`.
    pub fn interpolate(&self, t: f64) -> SVector<f64, N> {
        if t == self.t1 {
            return self.y1;
        }
        let h = self.t1 - self.t0;
        let s = (t - self.t0) / h;
        let s1 = 1.0 - s;
        let [c2, c3, c4, c5] = &self.cont;
        self.y0 + (c2 + (c3 + (c4 + c5 * s1) * s) * s1) * s
    }
}

/// Integration outcome.
#[derive(Clone, Debug)]
pub struct Solution<const N: usize> {
    pub t: f64,
    pub y: SVector<f64, N>,
    /// True when the observer stopped the integration before the final time.
    pub stopped: bool,
    pub accepted: usize,
    pub rejected: usize,
}

/// Failure with the last accepted point.
#[derive(Clone, Debug)]
pub struct Failure<const N: usize, E> {
    pub t: f64,
    pub y: SVector<f64, N>,
    pub kind: FailureKind<E>,
}

#[derive(Clone, Debug)]
pub enum FailureKind<E> {
    /// The right-hand side reported an error.
    Rhs(E),
    StepUnderflow(f64),
    MaxSteps(usize),
    NonFinite,
}

impl<const N: usize> Dopri5<N> {
    pub fn new(rtol: f64, atol: SVector<f64, N>) -> Self {
        Self {
            rtol,
            atol,
            max_steps: 500_000,
            max_step: None,
            initial_step: None,
        }
    }

    fn scaled_norm(&self, v: &SVector<f64, N>, ya: &SVector<f64, N>, yb: &SVector<f64, N>) -> f64 {
        let mut sum = 0.0;
        for i in 0..N {
            let sk = self.atol[i] + self.rtol * ya[i].abs().max(yb[i].abs());
            let q = v[i] / sk;
            sum += q * q;
        }
        (sum / N as f64).sqrt()
    }

    fn initial_step<E, F>(
        &self,
        f: &mut F,
        t0: f64,
        y0: &SVector<f64, N>,
        f0: &SVector<f64, N>,
        dir: f64,
    ) -> Result<f64, E>
    where
        F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>, E>,
    {
        let d0 = self.scaled_norm(y0, y0, y0);
        let d1 = self.scaled_norm(f0, y0, y0);
        let mut h0 = if d0 < 1e-10 || d1 < 1e-10 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        if let Some(hmax) = self.max_step {
            h0 = h0.min(hmax);
        }
        let y1 = y0 + f0 * (dir * h0);
        let f1 = f(t0 + dir * h0, &y1)?;
        let d2 = self.scaled_norm(&(f1 - f0), y0, y0) / h0;
        let dm = d1.max(d2);
        let h1 = if dm <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / dm).powf(0.2)
        };
        let mut h = (100.0 * h0).min(h1);
        if let Some(hmax) = self.max_step {
            h = h.min(hmax);
        }
        Ok(h)
    }

    /// Integrates `y' = f(t, y)` from `t0` to `tf` (forward or backward).
    ///
    /// `observer` sees every accepted step and may stop the integration.
    pub fn integrate<E, F, O>(
        &self,
        mut f: F,
        t0: f64,
        y0: SVector<f64, N>,
        tf: f64,
        mut observer: O,
    ) -> Result<Solution<N>, Failure<N, E>>
    where
        F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>, E>,
        O: FnMut(&Step<N>) -> Control,
    {
        let mut t = t0;
        let mut y = y0;
        let fail = |t: f64, y: SVector<f64, N>, kind| Failure { t, y, kind };
        let mut sol = Solution {
            t,
            y,
            stopped: false,
            accepted: 0,
            rejected: 0,
        };
        if tf == t0 {
            return Ok(sol);
        }
        let dir = (tf - t0).signum();
        let mut k1 = f(t, &y).map_err(|e| fail(t, y, FailureKind::Rhs(e)))?;
        let mut h = match self.initial_step {
            Some(h) => h.abs(),
            None => self
                .initial_step(&mut f, t, &y, &k1, dir)
                .map_err(|e| fail(t, y, FailureKind::Rhs(e)))?,
        };
        let mut last_rejected = false;
        let mut steps = 0usize;

        loop {
            if steps >= self.max_steps {
                return Err(fail(t, y, FailureKind::MaxSteps(steps)));
            }
            steps += 1;
            let h_min = 16.0 * f64::EPSILON * t.abs().max((tf - t0).abs()).max(1.0);
            if h < h_min {
                return Err(fail(t, y, FailureKind::StepUnderflow(h)));
            }
            let remaining = (tf - t).abs();
            let last = h >= remaining;
            let hs = if last { dir * remaining } else { dir * h };

            let stages = (|| {
                let k2 = f(t + C2 * hs, &(y + k1 * (A21 * hs)))?;
                let k3 = f(t + C3 * hs, &(y + (k1 * A31 + k2 * A32) * hs))?;
                let k4 = f(t + C4 * hs, &(y + (k1 * A41 + k2 * A42 + k3 * A43) * hs))?;
                let k5 = f(
                    t + C5 * hs,
                    &(y + (k1 * A51 + k2 * A52 + k3 * A53 + k4 * A54) * hs),
                )?;
                let k6 = f(
                    t + hs,
                    &(y + (k1 * A61 + k2 * A62 + k3 * A63 + k4 * A64 + k5 * A65) * hs),
                )?;
                let y1 = y + (k1 * A71 + k3 * A73 + k4 * A74 + k5 * A75 + k6 * A76) * hs;
                let k7 = f(t + hs, &y1)?;
                Ok((k2, k3, k4, k5, k6, k7, y1))
            })();
            let (_k2, k3, k4, k5, k6, k7, y1) = match stages {
                Ok(s) => s,
                Err(e) => {
                    // A failing stage (e.g. a probe inside a body) is retried
                    // with a smaller step before giving up.
                    if h * 0.25 < h_min {
                        return Err(fail(t, y, FailureKind::Rhs(e)));
                    }
                    h *= 0.25;
                    last_rejected = true;
                    sol.rejected += 1;
                    continue;
                }
            };
            let err_vec = (k1 * E1 + k3 * E3 + k4 * E4 + k5 * E5 + k6 * E6 + k7 * E7) * hs;
            let err = self.scaled_norm(&err_vec, &y, &y1);
            if !err.is_finite() {
                if h * 0.25 < h_min {
                    return Err(fail(t, y, FailureKind::NonFinite));
                }
                h *= 0.25;
                last_rejected = true;
                sol.rejected += 1;
                continue;
            }

            let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
            fac = fac.clamp(0.2, 5.0);
            if err <= 1.0 {
                let t1 = if last { tf } else { t + hs };
                let ydiff = y1 - y;
                let bspl = k1 * hs - ydiff;
                let step = Step {
                    t0: t,
                    t1,
                    y0: y,
                    y1,
                    cont: [
                        ydiff,
                        bspl,
                        ydiff - k7 * hs - bspl,
                        (k1 * D1 + k3 * D3 + k4 * D4 + k5 * D5 + k6 * D6 + k7 * D7) * hs,
                    ],
                };
                sol.accepted += 1;
                t = t1;
                y = y1;
                k1 = k7;
                let control = observer(&step);
                if control == Control::Stop {
                    sol.stopped = !last;
                    break;
                }
                if last {
                    break;
                }
                if last_rejected {
                    fac = fac.min(1.0);
                }
                last_rejected = false;
                h *= fac;
                if let Some(hmax) = self.max_step {
                    h = h.min(hmax);
                }
            } else {
                last_rejected = true;
                sol.rejected += 1;
                h *= fac.min(1.0);
            }
        }
        sol.t = t;
        sol.y = y;
        Ok(sol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;

    fn oscillator(_: f64, y: &Vector2<f64>) -> Result<Vector2<f64>, ()> {
        Ok(Vector2::new(y[1], -y[0]))
    }

    #[test]
    fn harmonic_oscillator_accuracy() {
        let solver = Dopri5::new(1e-11, Vector2::repeat(1e-12));
        let sol = solver
            .integrate(oscillator, 0.0, Vector2::new(1.0, 0.0), 20.0, |_| {
                Control::Continue
            })
            .unwrap();
        assert_eq!(sol.t, 20.0);
        assert!((sol.y[0] - 20f64.cos()).abs() < 1e-9);
        assert!((sol.y[1] + 20f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn backward_integration() {
        let solver = Dopri5::new(1e-11, Vector2::repeat(1e-12));
        let y0 = Vector2::new(3f64.cos(), -3f64.sin());
        let sol = solver
            .integrate(oscillator, 3.0, y0, 0.0, |_| Control::Continue)
            .unwrap();
        assert!((sol.y - Vector2::new(1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn dense_output_accuracy() {
        let solver = Dopri5::new(1e-10, Vector2::repeat(1e-12));
        let mut worst = 0.0f64;
        solver
            .integrate(oscillator, 0.0, Vector2::new(1.0, 0.0), 10.0, |s| {
                for k in 1..4 {
                    let t = s.t0 + (s.t1 - s.t0) * k as f64 / 4.0;
                    let y = s.interpolate(t);
                    worst = worst.max((y[0] - t.cos()).abs());
                }
                assert_eq!(s.interpolate(s.t1), s.y1);
                Control::Continue
            })
            .unwrap();
        assert!(worst < 1e-8, "interpolation error {worst}");
    }

    #[test]
    fn observer_can_stop() {
        let solver = Dopri5::new(1e-8, Vector2::repeat(1e-10));
        let sol = solver
            .integrate(oscillator, 0.0, Vector2::new(1.0, 0.0), 10.0, |s| {
                if s.y1[0] < 0.0 {
                    Control::Stop
                } else {
                    Control::Continue
                }
            })
            .unwrap();
        assert!(sol.stopped);
        assert!(sol.t < 10.0 && sol.y[0] < 0.0);
    }

    #[test]
    fn reports_underflow_at_singularity() {
        // y' = 1 / (1 - t) blows up at t = 1.
        let solver = Dopri5::new(1e-10, nalgebra::Vector1::repeat(1e-10));
        let res = solver.integrate(
            |t, _y: &nalgebra::Vector1<f64>| -> Result<_, ()> {
                Ok(nalgebra::Vector1::new(1.0 / (1.0 - t).powi(2)))
            },
            0.0,
            nalgebra::Vector1::zeros(),
            2.0,
            |_| Control::Continue,
        );
        assert!(res.is_err());
    }
}
