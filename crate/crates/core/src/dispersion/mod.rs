//! Monte Carlo dispersion analysis with differential-guidance corrections.
//!
//! Samples are flown leg by leg: the truth drifts under perturbed dynamics,
//! orbit determination at each cut-off is emulated by perturbing the true
//! deviation with the ground knowledge, and the correction computed from it
//! is added to the next nominal impulse.

mod guidance;
mod run;
mod sample;

pub use guidance::{differential_guidance, GuidanceConfig};
pub use run::{
    nav_cost_cdf, run_dispersion, write_dispersion_csv, write_nav_cost_cdf_csv, write_nav_cost_csv,
    DispersionResult, EarlyStop, EpochStats, SampleSummary,
};
pub use sample::{
    execute_impulse, psd_sqrt, simulate_sample, DispersionConfig, SampleRun, Termination,
    TerminationKind,
};
