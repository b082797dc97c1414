use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qflow_core::io::{parse_game, parse_json, MatrixJson, RunConfig};
use qflow_core::{DensityMatrix, Error, QuantumGame, Result, SimulationConfig, StateProfile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Diagnostic {
    Regret,
    Fenchel,
    Recurrence,
    Vsprobe,
    Bloch,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceState {
    Primal(MatrixJson),
    PrimalDiagonal(Vec<f64>),
}

fn default_r_out() -> f64 {
    0.1
}
fn default_vs_radius() -> f64 {
    0.1
}
fn default_vs_samples() -> usize {
    500
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub game: PathBuf,
    pub config: RunConfig,
    #[serde(default)]
    pub diagnostics: Vec<Diagnostic>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Comparison profile for the Fenchel and variational-stability
    /// diagnostics, usually an equilibrium.
    #[serde(default)]
    pub reference: Option<Vec<ReferenceState>>,
    #[serde(default = "default_r_out")]
    pub r_out: f64,
    #[serde(default = "default_vs_radius")]
    pub vs_radius: f64,
    #[serde(default = "default_vs_samples")]
    pub vs_samples: usize,
}

/// A manifest with its game loaded and paths resolved against the manifest's
/// directory.
pub struct LoadedRun {
    pub manifest: RunManifest,
    pub game_path: PathBuf,
    pub output_dir: PathBuf,
    pub game: QuantumGame,
    pub config: SimulationConfig,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: format!("cannot read file: {e}"),
    })
}

fn in_file(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse {
            path: field,
            message,
        } => Error::Parse {
            path: format!("{}: {field}", path.display()),
            message,
        },
        other => other,
    }
}

pub fn load(manifest_path: &Path) -> Result<LoadedRun> {
    let manifest: RunManifest =
        parse_json(&read(manifest_path)?).map_err(|e| in_file(manifest_path, e))?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let game_path = base.join(&manifest.game);
    let output_dir = base.join(&manifest.output_dir);
    let game = parse_game(&read(&game_path)?).map_err(|e| in_file(&game_path, e))?;
    let config = manifest
        .config
        .build(game.num_players())
        .map_err(|e| in_file(manifest_path, e))?;
    config.validate(&game).map_err(|e| Error::Parse {
        path: format!("{}: config", manifest_path.display()),
        message: e.to_string(),
    })?;
    for (name, value) in [("r_out", manifest.r_out), ("vs_radius", manifest.vs_radius)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Parse {
                path: format!("{}: {name}", manifest_path.display()),
                message: format!("must be positive, got {value}"),
            });
        }
    }
    Ok(LoadedRun {
        manifest,
        game_path,
        output_dir,
        game,
        config,
    })
}

impl LoadedRun {
    pub fn reference(&self) -> Result<StateProfile> {
        let field = "reference".to_string();
        let states = self
            .manifest
            .reference
            .as_ref()
            .ok_or_else(|| Error::Parse {
                path: field.clone(),
                message: "required by the fenchel and vsprobe diagnostics".into(),
            })?;
        if states.len() != self.game.num_players() {
            return Err(Error::Parse {
                path: field,
                message: format!(
                    "{} states given for {} players",
                    states.len(),
                    self.game.num_players()
                ),
            });
        }
        let states = states
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let state = match s {
                    ReferenceState::Primal(m) => qflow_core::io::matrix_from_json(m, "reference")
                        .and_then(DensityMatrix::from_matrix),
                    ReferenceState::PrimalDiagonal(p) => DensityMatrix::from_probabilities(p),
                };
                let state = state.map_err(|e| Error::Parse {
                    path: format!("reference[{i}]"),
                    message: e.to_string(),
                })?;
                if state.dim() != self.game.player_dims()[i] {
                    return Err(Error::Parse {
                        path: format!("reference[{i}]"),
                        message: format!(
                            "dimension {} but player has dimension {}",
                            state.dim(),
                            self.game.player_dims()[i]
                        ),
                    });
                }
                Ok(state)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StateProfile::new(states))
    }
}
