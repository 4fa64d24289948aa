//! Flag parsers and input files.

use std::fs::File;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::Value;
use tomokit::grids::{Grid1D, Grid2D};
use tomokit::io::{read_density, read_phase_field, read_tomograms, read_wavefunction};
use tomokit::states::{DensityMatrix, GaussianParams, PhaseSpaceField, PointState, WaveFunction};
use tomokit::tomography::{Ray, TomogramField};

use crate::error::CliError;

/// Parses `min:max:n`.
pub fn parse_grid(s: &str) -> Result<Grid1D, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [min, max, n] = parts.as_slice() else {
        return Err(format!("expected min:max:n, got {s:?}"));
    };
    let min: f64 = min.trim().parse().map_err(|_| format!("bad grid minimum {min:?}"))?;
    let max: f64 = max.trim().parse().map_err(|_| format!("bad grid maximum {max:?}"))?;
    let n: usize = n.trim().parse().map_err(|_| format!("bad grid size {n:?}"))?;
    Grid1D::new(min, max, n).map_err(|e| e.to_string())
}

/// Parses `mu,nu`.
pub fn parse_ray(s: &str) -> Result<Ray, String> {
    let (mu, nu) = s.split_once(',').ok_or_else(|| format!("expected mu,nu, got {s:?}"))?;
    let mu: f64 = mu.trim().parse().map_err(|_| format!("bad mu {mu:?}"))?;
    let nu: f64 = nu.trim().parse().map_err(|_| format!("bad nu {nu:?}"))?;
    Ray::new(mu, nu).map_err(|e| e.to_string())
}

/// A state loaded from a JSON description.
#[derive(Clone, Debug)]
pub enum State {
    Gaussian(GaussianParams),
    Point(PointState),
    PhaseField(PhaseSpaceField),
    WaveFunction(WaveFunction),
    Density(DensityMatrix),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRef {
    #[allow(dead_code)]
    kind: String,
    path: PathBuf,
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn config_err(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{}: {msg}", path.display()))
}

/// Reads a state file. Without a `kind` key the object is a Gaussian
/// (`qbar`, `pbar`, `sqq`, `spp`, `sqp`); otherwise `kind` is one of
/// `gaussian`, `point`, `phase-field`, `wavefunction`, `density`, and the
/// last three carry a `path` to a CSV relative to the JSON file.
pub fn load_state(path: &Path) -> Result<State, CliError> {
    let mut value: Value = serde_json::from_reader(open(path)?).map_err(|e| config_err(path, e))?;
    let kind = match value.as_object_mut() {
        Some(obj) => match obj.get("kind") {
            Some(Value::String(k)) => k.clone(),
            Some(_) => return Err(config_err(path, "\"kind\" must be a string")),
            None => "gaussian".to_string(),
        },
        None => return Err(config_err(path, "state must be a JSON object")),
    };
    let strip_kind = |mut v: Value| {
        if let Some(obj) = v.as_object_mut() {
            obj.remove("kind");
        }
        v
    };
    let base = path.parent().unwrap_or(Path::new("."));
    let csv_path = |v: Value| -> Result<PathBuf, CliError> {
        let r: FileRef = serde_json::from_value(v).map_err(|e| config_err(path, e))?;
        Ok(base.join(r.path))
    };
    Ok(match kind.as_str() {
        "gaussian" => {
            let p: GaussianParams = serde_json::from_value(strip_kind(value)).map_err(|e| config_err(path, e))?;
            p.validate().map_err(|e| config_err(path, e))?;
            State::Gaussian(p)
        }
        "point" => State::Point(serde_json::from_value(strip_kind(value)).map_err(|e| config_err(path, e))?),
        "phase-field" => {
            let p = csv_path(value)?;
            State::PhaseField(read_phase_field(open(&p)?)?)
        }
        "wavefunction" => {
            let p = csv_path(value)?;
            State::WaveFunction(read_wavefunction(open(&p)?)?)
        }
        "density" => {
            let p = csv_path(value)?;
            State::Density(read_density(open(&p)?)?)
        }
        other => return Err(config_err(path, format!("unknown state kind {other:?}"))),
    })
}

pub fn load_tomograms(path: &Path) -> Result<Vec<TomogramField>, CliError> {
    Ok(read_tomograms(open(path)?)?)
}

pub fn phase_grid(q: Grid1D, p: Option<Grid1D>) -> Grid2D {
    Grid2D::new(q, p.unwrap_or(q))
}
