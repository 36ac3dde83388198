//! Column documentation written next to every CSV output.

use serde::Serialize;

#[derive(Serialize)]
pub struct Column {
    pub name: &'static str,
    pub unit: &'static str,
    pub description: &'static str,
}

#[derive(Serialize)]
pub struct FileSchema {
    pub file: &'static str,
    pub description: &'static str,
    pub columns: Vec<Column>,
}

fn col(name: &'static str, unit: &'static str, description: &'static str) -> Column {
    Column {
        name,
        unit,
        description,
    }
}

pub fn trajectory() -> FileSchema {
    FileSchema {
        file: "trajectory.csv",
        description:
            "Dense nominal trajectory, arc by arc; each arc starts just after its node impulse",
        columns: vec![
            col("epoch_s", "s", "time since the scenario epoch"),
            col("arc", "-", "index of the ballistic arc"),
            col("frame", "-", "frame of the position and velocity columns"),
            col("x_m", "m", "position x"),
            col("y_m", "m", "position y"),
            col("z_m", "m", "position z"),
            col("vx_mps", "m/s", "velocity x"),
            col("vy_mps", "m/s", "velocity y"),
            col("vz_mps", "m/s", "velocity z"),
            col("range_d1_m", "m", "distance to the primary"),
            col("range_d2_m", "m", "distance to the secondary"),
            col(
                "phase_d1_deg",
                "deg",
                "Sun-body-spacecraft angle at the primary",
            ),
            col(
                "phase_d2_deg",
                "deg",
                "Sun-body-spacecraft angle at the secondary",
            ),
        ],
    }
}

pub fn measurements() -> FileSchema {
    FileSchema {
        file: "measurements.csv",
        description: "Simulated observables along the nominal plan",
        columns: vec![
            col("epoch_s", "s", "observation time"),
            col("leg", "-", "index of the leg between commanded maneuvers"),
            col("kind", "-", "observable type"),
            col(
                "value_1",
                "m | m/s | rad",
                "range, range rate or first angle",
            ),
            col("value_2", "rad", "second angle, optical angles only"),
            col("sigma_1", "as value_1", "1-sigma noise of value_1"),
            col("sigma_2", "rad", "1-sigma noise of value_2"),
            col(
                "post_cot",
                "-",
                "observed after the leg's knowledge cut-off",
            ),
        ],
    }
}

pub fn knowledge() -> FileSchema {
    FileSchema {
        file: "knowledge.csv",
        description: "Navigation knowledge, root-sum-square of the per-axis 1-sigma",
        columns: vec![
            col("epoch_s", "s", "record time"),
            col("leg", "-", "index of the leg"),
            col(
                "sigma_pos_ground_m",
                "m",
                "position knowledge from data up to the cut-off",
            ),
            col(
                "sigma_vel_ground_mps",
                "m/s",
                "velocity knowledge from data up to the cut-off",
            ),
            col(
                "sigma_pos_post_m",
                "m",
                "position knowledge from all data so far",
            ),
            col(
                "sigma_vel_post_mps",
                "m/s",
                "velocity knowledge from all data so far",
            ),
            col("maneuver", "-", "a commanded maneuver happens here"),
            col("cot", "-", "this is a knowledge cut-off"),
        ],
    }
}

pub fn dispersion() -> FileSchema {
    FileSchema {
        file: "dispersion.csv",
        description: "Monte Carlo position dispersion about the nominal",
        columns: vec![
            col("epoch_s", "s", "sampling time"),
            col("n_active", "-", "samples still flying"),
            col(
                "abs_sigma_m",
                "m",
                "root of the trace of the sample position covariance",
            ),
            col("rel_sigma_pct", "%", "abs_sigma_m over nominal_range_m"),
            col(
                "nominal_range_m",
                "m",
                "nominal distance to the closer body",
            ),
            col("maneuver", "-", "a commanded maneuver happens here"),
        ],
    }
}

pub fn nav_cost() -> FileSchema {
    FileSchema {
        file: "nav_cost.csv",
        description: "Correction cost of each sample",
        columns: vec![
            col("sample", "-", "sample index, also its random stream index"),
            col("nav_cost_mps", "m/s", "sum of the correction magnitudes"),
        ],
    }
}

pub fn nav_cost_cdf() -> FileSchema {
    FileSchema {
        file: "nav_cost_cdf.csv",
        description: "Empirical distribution of the correction cost",
        columns: vec![
            col("nav_cost_mps", "m/s", "distinct cost value"),
            col(
                "probability",
                "-",
                "fraction of samples with cost at most nav_cost_mps",
            ),
        ],
    }
}
