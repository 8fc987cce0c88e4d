//! Reading cases and scenarios from JSON, and writing results atomically.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::grid::{validate, validate_case, DamageScenario, DemandOverride, GridCase, LineId, ValidationReport};
use crate::model::RestorationPlan;

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },
    /// Malformed JSON or a field of the wrong shape; `field` is the path to
    /// the offending value, e.g. `lines[3].f_max`.
    #[error("{}: at {field}: {message}", path.display())]
    Parse { path: PathBuf, field: String, message: String },
    #[error("{}: {report}", path.display())]
    Invalid { path: PathBuf, report: ValidationReport },
}

/// Scenario as stored on disk; `horizon` may be omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    damaged_line_ids: Vec<LineId>,
    budget: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    horizon: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    demand_profile: Vec<DemandOverride>,
}

fn parse<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T, InputError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| InputError::Parse {
        path: path.to_path_buf(),
        field: e.path().to_string(),
        message: e.into_inner().to_string(),
    })
}

fn read(path: &Path) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|source| InputError::Read { path: path.to_path_buf(), source })
}

/// Parse and validate a case document. `origin` only labels errors.
pub fn parse_case(text: &str, origin: &Path) -> Result<GridCase, InputError> {
    let case: GridCase = parse(text, origin)?;
    let report = validate_case(&case);
    if !report.is_empty() {
        return Err(InputError::Invalid { path: origin.to_path_buf(), report });
    }
    Ok(case)
}

pub fn load_case(path: &Path) -> Result<GridCase, InputError> {
    parse_case(&read(path)?, path)
}

/// Parse a scenario document and validate it against `case`. A missing
/// horizon defaults to [`DamageScenario::default_horizon`].
pub fn parse_scenario(text: &str, origin: &Path, case: &GridCase) -> Result<DamageScenario, InputError> {
    let file: ScenarioFile = parse(text, origin)?;
    let horizon = file
        .horizon
        .unwrap_or_else(|| DamageScenario::default_horizon(file.damaged_line_ids.len(), file.budget));
    let scenario = DamageScenario {
        damaged_line_ids: file.damaged_line_ids,
        budget: file.budget,
        horizon,
        demand_profile: file.demand_profile,
    };
    let report = validate(case, &scenario);
    if !report.is_empty() {
        return Err(InputError::Invalid { path: origin.to_path_buf(), report });
    }
    Ok(scenario)
}

pub fn load_scenario(path: &Path, case: &GridCase) -> Result<DamageScenario, InputError> {
    parse_scenario(&read(path)?, path, case)
}

/// Write `bytes` to `path` through a temporary file in the same directory,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut buf = serde_json::to_vec_pretty(value).map_err(io::Error::other)?;
    buf.push(b'\n');
    write_atomic(path, &buf)
}

pub fn write_case(path: &Path, case: &GridCase) -> io::Result<()> {
    write_json(path, case)
}

pub fn write_scenario(path: &Path, scenario: &DamageScenario) -> io::Result<()> {
    write_json(path, scenario)
}

pub fn write_plan(path: &Path, plan: &RestorationPlan) -> io::Result<()> {
    write_json(path, plan)
}
