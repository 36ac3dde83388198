//! Scenario files.
//!
//! A scenario is one TOML file. Its optional `include` array names files,
//! relative to the including file, whose tables are merged in first; the
//! including file's own keys win. Every setting has a default, so a
//! scenario only lists what differs. Relative `nodes` and `out` paths are
//! taken from the directory of the top-level scenario file.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use binarynav::design::{Constraints, OptionLabel, ShootingOptions};
use binarynav::dispersion::DispersionConfig;
use binarynav::dynamics::{Dynamics, ForceFlags, FrameId, SpacecraftModel, SystemModel};
use binarynav::knowledge::{KnowledgeConfig, UncertaintyBudget};
use binarynav::measurements::{IslModel, NavCamModel, ScheduleRule};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{CliError, CliResult};

/// Everything a command needs; a function of the file and the overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub option: OptionLabel,
    /// Node file of a custom plan.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<PathBuf>,
    pub out: PathBuf,
    /// Master seed of every random stream.
    pub seed: u64,
    /// Monte Carlo sample count.
    pub samples: usize,
    /// Simulate and process the scheduled observables.
    pub observables: bool,
    /// Sampling interval of the trajectory CSV [s].
    pub trajectory_step_s: f64,
    pub trajectory_frame: FrameId,
    pub system: SystemModel,
    pub spacecraft: SpacecraftModel,
    pub forces: ForceFlags,
    pub shooting: ShootingOptions,
    pub constraints: Constraints,
    pub schedule: ScheduleRule,
    pub navcam: NavCamModel,
    pub isl: IslModel,
    pub budget: UncertaintyBudget,
    pub knowledge: KnowledgeConfig,
    /// Its sample count and seed follow `samples` and `seed`.
    pub dispersion: DispersionConfig,
}

/// Command-line settings that take precedence over the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub option: Option<OptionLabel>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
}

impl Scenario {
    /// Built-in scenario of a reference option.
    pub fn defaults(option: OptionLabel) -> Self {
        let dispersion = DispersionConfig::default();
        Self {
            option,
            nodes: None,
            out: PathBuf::from("out"),
            seed: dispersion.seed,
            samples: dispersion.n_samples,
            observables: true,
            trajectory_step_s: 600.0,
            trajectory_frame: FrameId::DidymosEquatorialSunSouth,
            system: SystemModel::default(),
            spacecraft: SpacecraftModel::default(),
            forces: ForceFlags::default(),
            shooting: ShootingOptions::default(),
            constraints: Constraints::default(),
            schedule: ScheduleRule::for_option(option),
            navcam: NavCamModel::default(),
            isl: IslModel::default(),
            budget: UncertaintyBudget::default(),
            knowledge: KnowledgeConfig::default(),
            dispersion,
        }
    }

    /// Loads `path`, or the built-in defaults when it is `None`, and applies
    /// the overrides. Relative paths are resolved before validation.
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> CliResult<Self> {
        let (mut user, base_dir) = match path {
            Some(p) => {
                let mut seen = BTreeSet::new();
                let dir = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (read_with_includes(p, &mut seen)?, dir)
            }
            None => (Table::new(), PathBuf::new()),
        };
        apply_overrides(&mut user, overrides)?;

        let option = match user.get("option") {
            Some(v) => option_from_value(v)?,
            None => OptionLabel::A,
        };
        let mut merged = to_table(&Scenario::defaults(option))?;
        merge(&mut merged, user);
        let mut scenario: Scenario = Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;

        scenario.out = resolve(&base_dir, &scenario.out);
        scenario.nodes = scenario.nodes.map(|n| resolve(&base_dir, &n));
        scenario.dispersion.seed = scenario.seed;
        scenario.dispersion.n_samples = scenario.samples;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.system.validate()?;
        self.spacecraft.validate()?;
        self.schedule.validate()?;
        self.navcam.validate()?;
        self.isl.validate()?;
        self.budget.validate()?;
        self.knowledge.initial.validate()?;
        self.dispersion.validate()?;
        match (self.option, &self.nodes) {
            (OptionLabel::Custom, None) => {
                return Err(CliError::Config(
                    "a custom plan needs a `nodes` file".into(),
                ));
            }
            (OptionLabel::Custom, Some(n)) if !n.is_file() => {
                return Err(CliError::Config(format!(
                    "node file {} does not exist",
                    n.display()
                )));
            }
            (OptionLabel::A | OptionLabel::B, Some(_)) => {
                return Err(CliError::Config(
                    "`nodes` is only read for option = \"custom\"".into(),
                ));
            }
            _ => {}
        }
        if !(self.trajectory_step_s.is_finite() && self.trajectory_step_s > 0.0) {
            return Err(CliError::Config(
                "trajectory_step_s must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn dynamics(&self) -> Dynamics {
        Dynamics::new(self.system.clone(), self.spacecraft.clone()).with_flags(self.forces)
    }

    /// Copy with paths relative to the output directory, where a custom
    /// node file is expected as `nodes.toml`.
    pub fn relocated(&self) -> Scenario {
        let mut copy = self.clone();
        copy.out = PathBuf::from(".");
        if copy.nodes.is_some() {
            copy.nodes = Some(PathBuf::from("nodes.toml"));
        }
        copy
    }

    /// Scenario text that reproduces this run from inside its output
    /// directory.
    pub fn echo(&self) -> CliResult<String> {
        toml::to_string(&self.relocated()).map_err(|e| CliError::Config(e.to_string()))
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn option_from_value(v: &Value) -> CliResult<OptionLabel> {
    v.as_str()
        .ok_or_else(|| CliError::Config("`option` must be a string".into()))?
        .parse()
        .map_err(CliError::from)
}

fn to_table<T: Serialize>(value: &T) -> CliResult<Table> {
    match Value::try_from(value).map_err(|e| CliError::Config(e.to_string()))? {
        Value::Table(t) => Ok(t),
        _ => unreachable!("structs serialize to tables"),
    }
}

fn apply_overrides(table: &mut Table, o: &Overrides) -> CliResult<()> {
    if let Some(option) = o.option {
        table.insert("option".into(), Value::String(option.to_string()));
    }
    if let Some(out) = &o.out {
        // Command-line paths are relative to the working directory.
        let abs = std::path::absolute(out).map_err(CliError::io(out))?;
        table.insert(
            "out".into(),
            Value::String(abs.to_string_lossy().into_owned()),
        );
    }
    if let Some(seed) = o.seed {
        let seed =
            i64::try_from(seed).map_err(|_| CliError::Config("seed must be below 2^63".into()))?;
        table.insert("seed".into(), Value::Integer(seed));
    }
    if let Some(n) = o.samples {
        table.insert("samples".into(), Value::Integer(n as i64));
    }
    Ok(())
}

/// Reads `path` with its includes merged underneath, depth first.
fn read_with_includes(path: &Path, seen: &mut BTreeSet<PathBuf>) -> CliResult<Table> {
    let canonical = fs::canonicalize(path).map_err(CliError::io(path))?;
    if !seen.insert(canonical.clone()) {
        return Err(CliError::Config(format!(
            "include cycle through {}",
            path.display()
        )));
    }
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    let mut table: Table = text.parse().map_err(|e: toml::de::Error| {
        CliError::Config(format!("{}: {}", path.display(), e.message()))
    })?;
    let includes = match table.remove("include") {
        None => Vec::new(),
        Some(Value::Array(items)) => items
            .into_iter()
            .map(|v| match v {
                Value::String(s) => Ok(PathBuf::from(s)),
                _ => Err(CliError::Config(format!(
                    "{}: include entries must be strings",
                    path.display()
                ))),
            })
            .collect::<CliResult<_>>()?,
        Some(_) => {
            return Err(CliError::Config(format!(
                "{}: `include` must be an array",
                path.display()
            )))
        }
    };
    let dir = path.parent().unwrap_or(Path::new(""));
    let mut merged = Table::new();
    for inc in includes {
        let t = read_with_includes(&dir.join(inc), seen)?;
        merge(&mut merged, t);
    }
    merge(&mut merged, table);
    seen.remove(&canonical);
    Ok(merged)
}

/// Deep merge; tables merge key by key, anything else is replaced.
fn merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
