//! JSON and CSV formats.
//!
//! Complex scalars are `[re, im]` pairs and matrices are row-major nested
//! arrays of them. Input also accepts a bare number for a real scalar.
//! f64 values are written with shortest round-trip formatting in JSON and with
//! 17 significant digits in CSV.

use std::fmt::Write as _;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::analysis::{bloch_coords, purity};
use crate::dynamics::{InitialCondition, SimulationConfig, StateSpace, Trajectory};
use crate::error::{Error, Result};
use crate::game::{ClassicalTable, PovmOutcome, QuantumGame};
use crate::matrix::{c, hermitian_eig, CMatrix, DensityMatrix, HermitianMatrix};
use crate::ode::Method;
use crate::regularizer::{builtin_kernel, KernelRef};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexJson {
    Pair([f64; 2]),
    Real(f64),
}

pub type MatrixJson = Vec<Vec<ComplexJson>>;

pub fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|a| {
            (0..m.ncols())
                .map(|b| ComplexJson::Pair([m[(a, b)].re, m[(a, b)].im]))
                .collect()
        })
        .collect()
}

pub fn matrix_from_json(rows: &MatrixJson, what: &str) -> Result<CMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(Error::Parse {
            path: what.into(),
            message: "matrix must be a non-empty rectangular array".into(),
        });
    }
    Ok(CMatrix::from_fn(n, rows[0].len(), |a, b| {
        match rows[a][b] {
            ComplexJson::Pair([re, im]) => c(re, im),
            ComplexJson::Real(re) => c(re, 0.0),
        }
    }))
}

fn hermitian_from_json(rows: &MatrixJson, what: &str) -> Result<HermitianMatrix> {
    HermitianMatrix::new(matrix_from_json(rows, what)?).map_err(|e| Error::Parse {
        path: what.into(),
        message: e.to_string(),
    })
}

fn density_from_json(rows: &MatrixJson, what: &str) -> Result<DensityMatrix> {
    DensityMatrix::new(hermitian_from_json(rows, what)?).map_err(|e| Error::Parse {
        path: what.into(),
        message: e.to_string(),
    })
}

pub mod density_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        x: &DensityMatrix,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        matrix_to_json(x.matrix()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<DensityMatrix, D::Error> {
        let rows = MatrixJson::deserialize(d)?;
        density_from_json(&rows, "state").map_err(serde::de::Error::custom)
    }
}

/// Deserializes JSON text, reporting the failing field path and position.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        Error::Parse {
            path: if path.is_empty() || path == "." {
                format!("line {} column {}", inner.line(), inner.column())
            } else {
                format!("{path} (line {} column {})", inner.line(), inner.column())
            },
            message: inner.to_string(),
        }
    })
}

// ---------------------------------------------------------------------------
// Game specs

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeJson {
    #[serde(default)]
    pub label: Option<String>,
    pub operator: MatrixJson,
    pub payoffs: Vec<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub player_dims: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<Vec<OutcomeJson>>,
    /// One nested array per player, indexed by joint pure action.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classical_tables: Option<Vec<serde_json::Value>>,
    #[serde(default)]
    pub zero_sum: bool,
}

fn table_from_value(v: &serde_json::Value, path: &str) -> Result<ClassicalTable> {
    fn walk(
        v: &serde_json::Value,
        depth: usize,
        shape: &mut Vec<usize>,
        out: &mut Vec<f64>,
        path: &str,
    ) -> Result<()> {
        match v {
            serde_json::Value::Number(n) => {
                if depth != shape.len() && !(shape.is_empty() && depth == 0) {
                    return Err(Error::Parse {
                        path: path.into(),
                        message: "ragged payoff table".into(),
                    });
                }
                out.push(n.as_f64().unwrap());
                Ok(())
            }
            serde_json::Value::Array(items) => {
                if depth == shape.len() {
                    if !out.is_empty() {
                        return Err(Error::Parse {
                            path: path.into(),
                            message: "ragged payoff table".into(),
                        });
                    }
                    shape.push(items.len());
                } else if shape[depth] != items.len() {
                    return Err(Error::Parse {
                        path: path.into(),
                        message: "ragged payoff table".into(),
                    });
                }
                items
                    .iter()
                    .try_for_each(|it| walk(it, depth + 1, shape, out, path))
            }
            _ => Err(Error::Parse {
                path: path.into(),
                message: "payoff tables hold numbers".into(),
            }),
        }
    }
    let mut shape = Vec::new();
    let mut values = Vec::new();
    walk(v, 0, &mut shape, &mut values, path)?;
    ClassicalTable::new(shape, values).map_err(|e| Error::Parse {
        path: path.into(),
        message: e.to_string(),
    })
}

impl GameSpec {
    pub fn build(&self) -> Result<QuantumGame> {
        match (&self.classical_tables, &self.outcomes) {
            (Some(tables), None) => {
                let tables = tables
                    .iter()
                    .enumerate()
                    .map(|(i, t)| table_from_value(t, &format!("classical_tables[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                let game = QuantumGame::from_classical(&tables).map_err(|e| Error::Parse {
                    path: "classical_tables".into(),
                    message: e.to_string(),
                })?;
                if self.zero_sum && !game.is_zero_sum() {
                    return Err(Error::Parse {
                        path: "zero_sum".into(),
                        message: "declared zero-sum but tables do not sum to zero".into(),
                    });
                }
                Ok(game)
            }
            (None, Some(outcomes)) => {
                let dims = self.player_dims.clone().ok_or_else(|| Error::Parse {
                    path: "player_dims".into(),
                    message: "required when outcomes are given".into(),
                })?;
                let outcomes = outcomes
                    .iter()
                    .enumerate()
                    .map(|(k, o)| {
                        Ok(PovmOutcome {
                            label: o.label.clone().unwrap_or_else(|| k.to_string()),
                            operator: hermitian_from_json(
                                &o.operator,
                                &format!("outcomes[{k}].operator"),
                            )?,
                            payoffs: o.payoffs.clone(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                QuantumGame::new(dims, outcomes, self.zero_sum).map_err(|e| Error::Parse {
                    path: "outcomes".into(),
                    message: e.to_string(),
                })
            }
            _ => Err(Error::Parse {
                path: "outcomes".into(),
                message: "give exactly one of `outcomes` or `classical_tables`".into(),
            }),
        }
    }

    pub fn from_game(game: &QuantumGame) -> Self {
        Self {
            player_dims: Some(game.player_dims().to_vec()),
            outcomes: Some(
                game.outcomes()
                    .iter()
                    .map(|o| OutcomeJson {
                        label: Some(o.label.clone()),
                        operator: matrix_to_json(o.operator.matrix()),
                        payoffs: o.payoffs.clone(),
                    })
                    .collect(),
            ),
            classical_tables: None,
            zero_sum: game.is_zero_sum(),
        }
    }
}

pub fn parse_game(text: &str) -> Result<QuantumGame> {
    parse_json::<GameSpec>(text)?.build()
}

// ---------------------------------------------------------------------------
// Run configs

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelsJson {
    One(String),
    PerPlayer(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase", deny_unknown_fields)]
pub enum IntegratorJson {
    Rk4 {
        #[serde(default = "default_rk4_step")]
        step: f64,
    },
    Dopri45 {
        #[serde(default = "default_rtol")]
        rtol: f64,
        #[serde(default = "default_atol")]
        atol: f64,
    },
}

fn default_rk4_step() -> f64 {
    1e-3
}
fn default_rtol() -> f64 {
    1e-9
}
fn default_atol() -> f64 {
    1e-11
}
fn default_stride() -> f64 {
    0.01
}

impl Default for IntegratorJson {
    fn default() -> Self {
        Self::Dopri45 {
            rtol: default_rtol(),
            atol: default_atol(),
        }
    }
}

impl IntegratorJson {
    pub fn method(&self) -> Method {
        match *self {
            Self::Rk4 { step } => Method::Rk4 { step },
            Self::Dopri45 { rtol, atol } => Method::Dopri45 { rtol, atol },
        }
    }

    pub fn from_method(m: Method) -> Self {
        match m {
            Method::Rk4 { step } => Self::Rk4 { step },
            Method::Dopri45 { rtol, atol } => Self::Dopri45 { rtol, atol },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialJson {
    Primal(MatrixJson),
    PrimalDiagonal(Vec<f64>),
    Dual(MatrixJson),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceJson {
    #[default]
    Dual,
    Primal,
    Quotient,
}

impl From<SpaceJson> for StateSpace {
    fn from(s: SpaceJson) -> Self {
        match s {
            SpaceJson::Dual => StateSpace::Dual,
            SpaceJson::Primal => StateSpace::Primal,
            SpaceJson::Quotient => StateSpace::Quotient,
        }
    }
}

impl From<StateSpace> for SpaceJson {
    fn from(s: StateSpace) -> Self {
        match s {
            StateSpace::Dual => SpaceJson::Dual,
            StateSpace::Primal => SpaceJson::Primal,
            StateSpace::Quotient => SpaceJson::Quotient,
        }
    }
}

/// JSON mirror of [`SimulationConfig`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kernels: KernelsJson,
    pub horizon: f64,
    #[serde(default)]
    pub integrator: IntegratorJson,
    #[serde(default = "default_stride")]
    pub record_stride: f64,
    pub initial: Vec<InitialJson>,
    #[serde(default)]
    pub space: SpaceJson,
}

fn config_err(path: String) -> impl FnOnce(Error) -> Error {
    move |e| match e {
        Error::Parse { .. } => e,
        other => Error::Parse {
            path,
            message: other.to_string(),
        },
    }
}

impl RunConfig {
    pub fn kernel_names(&self, players: usize) -> Vec<String> {
        match &self.kernels {
            KernelsJson::One(name) => vec![name.clone(); players],
            KernelsJson::PerPlayer(names) => names.clone(),
        }
    }

    pub fn build(&self, players: usize) -> Result<SimulationConfig> {
        let kernels = self
            .kernel_names(players)
            .iter()
            .enumerate()
            .map(|(i, name)| {
                builtin_kernel(name)
                    .map(|k| k.into_ref())
                    .map_err(config_err(format!("config.kernels[{i}]")))
            })
            .collect::<Result<Vec<KernelRef>>>()?;
        let initial = self
            .initial
            .iter()
            .enumerate()
            .map(|(i, ic)| {
                let path = format!("config.initial[{i}]");
                match ic {
                    InitialJson::Primal(m) => {
                        density_from_json(m, &path).map(InitialCondition::Primal)
                    }
                    InitialJson::PrimalDiagonal(p) => DensityMatrix::from_probabilities(p)
                        .map(InitialCondition::Primal)
                        .map_err(config_err(path)),
                    InitialJson::Dual(m) => {
                        hermitian_from_json(m, &path).map(InitialCondition::Dual)
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SimulationConfig {
            kernels,
            horizon: self.horizon,
            method: self.integrator.method(),
            record_stride: self.record_stride,
            initial,
            space: self.space.into(),
        })
    }
}

// ---------------------------------------------------------------------------
// Trajectories

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrajectoryJson {
    pub space: SpaceJson,
    pub player_dims: Vec<usize>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<MatrixJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual_scores: Option<Vec<Vec<MatrixJson>>>,
    pub gradients: Vec<Vec<MatrixJson>>,
}

fn matrices_json<'a>(ms: impl IntoIterator<Item = &'a CMatrix>) -> Vec<MatrixJson> {
    ms.into_iter().map(matrix_to_json).collect()
}

impl TrajectoryJson {
    pub fn from_trajectory(traj: &Trajectory) -> Self {
        Self {
            space: traj.space.into(),
            player_dims: traj
                .states
                .first()
                .map_or(Vec::new(), |p| p.iter().map(|x| x.dim()).collect()),
            times: traj.times.clone(),
            states: traj
                .states
                .iter()
                .map(|p| matrices_json(p.iter().map(|x| x.matrix())))
                .collect(),
            dual_scores: traj.dual_scores.as_ref().map(|s| {
                s.iter()
                    .map(|p| matrices_json(p.iter().map(|y| y.matrix())))
                    .collect()
            }),
            gradients: traj
                .gradients
                .iter()
                .map(|p| matrices_json(p.iter().map(|v| v.matrix())))
                .collect(),
        }
    }

    pub fn into_trajectory(self) -> Result<Trajectory> {
        let herms = |rows: Vec<Vec<MatrixJson>>, what: &str| -> Result<Vec<Vec<HermitianMatrix>>> {
            rows.iter()
                .enumerate()
                .map(|(k, p)| {
                    p.iter()
                        .enumerate()
                        .map(|(i, m)| hermitian_from_json(m, &format!("{what}[{k}][{i}]")))
                        .collect()
                })
                .collect()
        };
        let states = self
            .states
            .iter()
            .enumerate()
            .map(|(k, p)| {
                p.iter()
                    .enumerate()
                    .map(|(i, m)| density_from_json(m, &format!("states[{k}][{i}]")))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Trajectory {
            space: self.space.into(),
            times: self.times,
            dual_scores: self
                .dual_scores
                .map(|s| herms(s, "dual_scores"))
                .transpose()?,
            states,
            gradients: herms(self.gradients, "gradients")?,
        })
    }
}

pub fn trajectory_to_json(traj: &Trajectory) -> String {
    serde_json::to_string(&TrajectoryJson::from_trajectory(traj)).expect("trajectory serializes")
}

pub fn trajectory_from_json(text: &str) -> Result<Trajectory> {
    parse_json::<TrajectoryJson>(text)?.into_trajectory()
}

/// Formats a real with 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// One row per record time: `t`, then per player the descending eigenvalues,
/// purity, payoff `tr(X_i V_i)`, and Bloch coordinates for qubits.
pub fn trajectory_csv(traj: &Trajectory) -> Result<String> {
    let mut out = String::new();
    let dims: Vec<usize> = traj
        .states
        .first()
        .map_or(Vec::new(), |p| p.iter().map(|x| x.dim()).collect());
    let mut header = vec!["t".to_string()];
    for (i, &d) in dims.iter().enumerate() {
        for k in 0..d {
            header.push(format!("p{i}_eig{k}"));
        }
        header.push(format!("p{i}_purity"));
        header.push(format!("p{i}_payoff"));
        if d == 2 {
            for axis in ["x", "y", "z"] {
                header.push(format!("p{i}_bloch_{axis}"));
            }
        }
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for (k, &t) in traj.times.iter().enumerate() {
        let mut row = vec![fmt_real(t)];
        for (i, x) in traj.states[k].iter().enumerate() {
            let e = hermitian_eig(x.hermitian())?;
            row.extend(e.eigenvalues.iter().map(|&v| fmt_real(v)));
            row.push(fmt_real(purity(x)));
            row.push(fmt_real(x.hermitian().inner(&traj.gradients[k][i])));
            if x.dim() == 2 {
                row.extend(bloch_coords(x)?.iter().map(|&v| fmt_real(v)));
            }
        }
        let _ = writeln!(out, "{}", row.join(","));
    }
    Ok(out)
}

/// Qubit Bloch series: `t, p0_x, p0_y, p0_z, p1_x, …`.
pub fn bloch_csv(traj: &Trajectory) -> Result<String> {
    let n = traj.num_players();
    let mut out = String::from("t");
    for i in 0..n {
        let _ = write!(out, ",p{i}_x,p{i}_y,p{i}_z");
    }
    out.push('\n');
    for (k, &t) in traj.times.iter().enumerate() {
        out.push_str(&fmt_real(t));
        for x in &traj.states[k] {
            for v in bloch_coords(x)? {
                out.push(',');
                out.push_str(&fmt_real(v));
            }
        }
        out.push('\n');
    }
    Ok(out)
}
