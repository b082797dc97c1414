//! Continuous-time regularized learning: the dual score flow, its traceless
//! quotient, and the primal state field it induces.
//!
//! In the dual, `dY_i/dt = V_i(Q_1(Y_1), …, Q_N(Y_N))`. The primal field
//! [`qd_field`] gives `dX/dt` for `X = Q(Y)` directly in the eigenbasis of
//! `X`; [`qrd_field`] is its closed form for the von Neumann kernel.

use crate::error::{Error, Result};
use crate::game::{QuantumGame, StateProfile};
use crate::matrix::{c, hermitian_eig, CMatrix, DensityMatrix, HermitianMatrix};
use crate::ode::{self, Method};
use crate::regularizer::{dual_of, mirror, Kernel, KernelRef, EIGEN_FLOOR};

/// Relative eigenvalue gap below which the secant coefficient switches to
/// its limit `1/θ″` at the midpoint.
const DEGENERATE_GAP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateSpace {
    Dual,
    Primal,
    Quotient,
}

impl StateSpace {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Dual => "dual",
            Self::Primal => "primal",
            Self::Quotient => "quotient",
        }
    }
}

#[derive(Clone, Debug)]
pub enum InitialCondition {
    Dual(HermitianMatrix),
    Primal(DensityMatrix),
}

impl InitialCondition {
    pub fn dim(&self) -> usize {
        match self {
            Self::Dual(y) => y.dim(),
            Self::Primal(x) => x.dim(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimulationConfig {
    pub kernels: Vec<KernelRef>,
    pub horizon: f64,
    pub method: Method,
    pub record_stride: f64,
    pub initial: Vec<InitialCondition>,
    pub space: StateSpace,
}

impl SimulationConfig {
    pub fn validate(&self, game: &QuantumGame) -> Result<()> {
        let n = game.num_players();
        if self.kernels.len() != n {
            return Err(Error::InvalidConfig(format!(
                "{} kernels given for {n} players",
                self.kernels.len()
            )));
        }
        if self.initial.len() != n {
            return Err(Error::InvalidConfig(format!(
                "{} initial conditions given for {n} players",
                self.initial.len()
            )));
        }
        for (i, (ic, &d)) in self.initial.iter().zip(game.player_dims()).enumerate() {
            if ic.dim() != d {
                return Err(Error::InvalidConfig(format!(
                    "initial condition of player {i} has dimension {} but the player has dimension {d}",
                    ic.dim()
                )));
            }
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if !(self.record_stride > 0.0 && self.record_stride.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "record stride must be positive, got {}",
                self.record_stride
            )));
        }
        self.method.validate()?;
        if self.space == StateSpace::Primal {
            if let Some(k) = self.kernels.iter().find(|k| !k.is_steep()) {
                return Err(Error::InvalidConfig(format!(
                    "primal integration needs steep kernels; {} is not steep",
                    k.name()
                )));
            }
        }
        Ok(())
    }
}

/// Time-indexed record of one run; outer index is time, inner is player.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub space: StateSpace,
    pub times: Vec<f64>,
    pub dual_scores: Option<Vec<Vec<HermitianMatrix>>>,
    pub states: Vec<Vec<DensityMatrix>>,
    pub gradients: Vec<Vec<HermitianMatrix>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn num_players(&self) -> usize {
        self.states.first().map_or(0, |s| s.len())
    }

    pub fn profile(&self, k: usize) -> StateProfile {
        StateProfile::new(self.states[k].clone())
    }

    pub fn final_profile(&self) -> StateProfile {
        self.profile(self.len() - 1)
    }
}

fn profile_from_scores(kernels: &[KernelRef], ys: &[HermitianMatrix]) -> Result<StateProfile> {
    ys.iter()
        .zip(kernels)
        .map(|(y, k)| mirror(k.as_ref(), y))
        .collect::<Result<Vec<_>>>()
        .map(StateProfile::new)
}

/// `V_i(Q_1(Y_1), …, Q_N(Y_N))` for every player.
pub fn dual_field(
    game: &QuantumGame,
    kernels: &[KernelRef],
    ys: &[HermitianMatrix],
) -> Result<Vec<HermitianMatrix>> {
    if ys.len() != game.num_players() || kernels.len() != game.num_players() {
        return Err(Error::DimensionMismatch(format!(
            "{} scores and {} kernels for {} players",
            ys.len(),
            kernels.len(),
            game.num_players()
        )));
    }
    game.gradients(&profile_from_scores(kernels, ys)?)
}

/// Dual field with each player's trace component removed; the flow on the
/// quotient by multiples of the identity.
pub fn quotient_field(
    game: &QuantumGame,
    kernels: &[KernelRef],
    zs: &[HermitianMatrix],
) -> Result<Vec<HermitianMatrix>> {
    for z in zs {
        let tr = z.trace();
        if tr.abs() > 1e-10 * z.frobenius_norm().max(1.0) {
            return Err(Error::NotTraceless(tr));
        }
    }
    Ok(dual_field(game, kernels, zs)?
        .into_iter()
        .map(|v| v.traceless_part())
        .collect())
}

/// Spectrum of `x` with the eigenvalue floor applied; rejects states whose
/// eigenvalues fall below `−1e-10`.
fn floored_spectrum(x: &DensityMatrix) -> Result<crate::matrix::EigenDecomposition> {
    let mut e = x.eigen()?;
    let min = e.min_eigenvalue();
    if min < -crate::matrix::DENSITY_TOL {
        return Err(Error::BoundaryCollision {
            t: f64::NAN,
            detail: format!("state has eigenvalue {min:e}"),
        });
    }
    for v in &mut e.eigenvalues {
        *v = v.max(EIGEN_FLOOR);
    }
    Ok(e)
}

/// `(x_l − x_k) / (θ′(x_l) − θ′(x_k))`, continued by `1/θ″` on the diagonal.
fn secant_coefficient<K: Kernel + ?Sized>(kernel: &K, xk: f64, xl: f64) -> f64 {
    if (xk - xl).abs() <= DEGENERATE_GAP * xk.max(xl) {
        1.0 / kernel.ddtheta(0.5 * (xk + xl))
    } else {
        (xl - xk) / (kernel.dtheta(xl) - kernel.dtheta(xk))
    }
}

fn check_pair(x: &DensityMatrix, v: &HermitianMatrix) -> Result<()> {
    if x.dim() != v.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state has dimension {} but payoff gradient has dimension {}",
            x.dim(),
            v.dim()
        )));
    }
    Ok(())
}

/// `dX/dt` at state `X` under payoff gradient `V` for a steep kernel.
pub fn qd_field<K: Kernel + ?Sized>(
    kernel: &K,
    x: &DensityMatrix,
    v: &HermitianMatrix,
) -> Result<HermitianMatrix> {
    check_pair(x, v)?;
    let e = floored_spectrum(x)?;
    let d = e.dim();
    let vh = e.to_basis(v.matrix());
    let xs = &e.eigenvalues;
    // w_k = 1/θ″(x_k)
    let w: Vec<f64> = xs.iter().map(|&xk| 1.0 / kernel.ddtheta(xk)).collect();
    let w_total: f64 = w.iter().sum();
    let weighted: f64 = (0..d).map(|l| vh[(l, l)].re * w[l]).sum();
    let mut m = CMatrix::zeros(d, d);
    for k in 0..d {
        m[(k, k)] = c(w[k] * (vh[(k, k)].re - weighted / w_total), 0.0);
        for l in (k + 1)..d {
            let z = vh[(k, l)] * secant_coefficient(kernel, xs[k], xs[l]);
            m[(k, l)] = z;
            m[(l, k)] = z.conj();
        }
    }
    Ok(HermitianMatrix::hermitize(e.from_basis(&m)))
}

/// Closed-form primal field of the von Neumann kernel:
/// diagonal `x_k(V̂_kk − Σ_l x_l V̂_ll)`, off-diagonal
/// `(x_l − x_k)/(log x_l − log x_k)·V̂_kl`.
pub fn qrd_field(x: &DensityMatrix, v: &HermitianMatrix) -> Result<HermitianMatrix> {
    check_pair(x, v)?;
    let e = floored_spectrum(x)?;
    let d = e.dim();
    let vh = e.to_basis(v.matrix());
    let xs = &e.eigenvalues;
    let mean: f64 = (0..d).map(|l| xs[l] * vh[(l, l)].re).sum::<f64>() / xs.iter().sum::<f64>();
    let mut m = CMatrix::zeros(d, d);
    for k in 0..d {
        m[(k, k)] = c(xs[k] * (vh[(k, k)].re - mean), 0.0);
        for l in (k + 1)..d {
            let (xk, xl) = (xs[k], xs[l]);
            let coef = if (xk - xl).abs() <= DEGENERATE_GAP * xk.max(xl) {
                0.5 * (xk + xl)
            } else {
                (xl - xk) / (xl.ln() - xk.ln())
            };
            let z = vh[(k, l)] * coef;
            m[(k, l)] = z;
            m[(l, k)] = z.conj();
        }
    }
    Ok(HermitianMatrix::hermitize(e.from_basis(&m)))
}

/// Per-player `qd_field` evaluated at a profile with its own gradients.
pub fn primal_field(
    game: &QuantumGame,
    kernels: &[KernelRef],
    profile: &StateProfile,
) -> Result<Vec<HermitianMatrix>> {
    let vs = game.gradients(profile)?;
    profile
        .states()
        .iter()
        .zip(&vs)
        .zip(kernels)
        .map(|((x, v), k)| qd_field(k.as_ref(), x, v))
        .collect()
}

struct Layout {
    dims: Vec<usize>,
    offsets: Vec<usize>,
    traceless: bool,
}

impl Layout {
    fn new(dims: &[usize], traceless: bool) -> Self {
        let mut offsets = vec![0];
        for &d in dims {
            let size = if traceless { d * d - 1 } else { d * d };
            offsets.push(offsets.last().unwrap() + size);
        }
        Self {
            dims: dims.to_vec(),
            offsets,
            traceless,
        }
    }

    fn len(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    fn unpack(&self, y: &[f64]) -> Vec<HermitianMatrix> {
        self.dims
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                let s = &y[self.offsets[i]..self.offsets[i + 1]];
                if self.traceless {
                    HermitianMatrix::from_traceless_coords(d, s)
                } else {
                    HermitianMatrix::from_coords(d, s)
                }
            })
            .collect()
    }

    fn pack_into(&self, ms: &[HermitianMatrix], out: &mut [f64]) {
        for (i, m) in ms.iter().enumerate() {
            let coords = if self.traceless {
                m.to_traceless_coords()
            } else {
                m.to_coords()
            };
            out[self.offsets[i]..self.offsets[i + 1]].copy_from_slice(&coords);
        }
    }

    fn pack(&self, ms: &[HermitianMatrix]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.pack_into(ms, &mut out);
        out
    }
}

fn initial_scores(config: &SimulationConfig) -> Result<Vec<HermitianMatrix>> {
    config
        .initial
        .iter()
        .zip(&config.kernels)
        .enumerate()
        .map(|(i, (ic, k))| match ic {
            InitialCondition::Dual(y) => Ok(y.clone()),
            InitialCondition::Primal(x) => {
                if k.is_steep() && x.eigen()?.min_eigenvalue() <= 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "initial state of player {i} must be full rank for steep kernel {}",
                        k.name()
                    )));
                }
                dual_of(k.as_ref(), x)
            }
        })
        .collect()
}

fn initial_states(config: &SimulationConfig) -> Result<Vec<DensityMatrix>> {
    config
        .initial
        .iter()
        .zip(&config.kernels)
        .map(|(ic, k)| match ic {
            InitialCondition::Dual(y) => mirror(k.as_ref(), y),
            InitialCondition::Primal(x) => Ok(x.clone()),
        })
        .collect()
}

fn at_time(t: f64, e: Error) -> Error {
    match e {
        Error::BoundaryCollision { detail, .. } => Error::BoundaryCollision { t, detail },
        other => other,
    }
}

/// Integrates the selected flow to the horizon, recording every stride.
pub fn integrate(game: &QuantumGame, config: &SimulationConfig) -> Result<Trajectory> {
    config.validate(game)?;
    let times = ode::record_grid(config.horizon, config.record_stride);
    let kernels = &config.kernels;
    let mut traj = Trajectory {
        space: config.space,
        times: Vec::with_capacity(times.len()),
        dual_scores: match config.space {
            StateSpace::Primal => None,
            _ => Some(Vec::with_capacity(times.len())),
        },
        states: Vec::with_capacity(times.len()),
        gradients: Vec::with_capacity(times.len()),
    };

    match config.space {
        StateSpace::Dual | StateSpace::Quotient => {
            let traceless = config.space == StateSpace::Quotient;
            let layout = Layout::new(game.player_dims(), traceless);
            let mut y0 = initial_scores(config)?;
            if traceless {
                y0 = y0.iter().map(|y| y.traceless_part()).collect();
            }
            let field = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
                let ys = layout.unpack(y);
                let vs = dual_field(game, kernels, &ys)?;
                let vs: Vec<HermitianMatrix> = if traceless {
                    vs.into_iter().map(|v| v.traceless_part()).collect()
                } else {
                    vs
                };
                layout.pack_into(&vs, dy);
                Ok(())
            };
            ode::integrate(config.method, field, &layout.pack(&y0), &times, |t, y| {
                let ys = layout.unpack(y);
                let profile = profile_from_scores(kernels, &ys)?;
                traj.gradients.push(game.gradients(&profile)?);
                traj.states.push(profile.into_inner());
                traj.dual_scores.as_mut().unwrap().push(ys);
                traj.times.push(t);
                Ok(())
            })?;
        }
        StateSpace::Primal => {
            let layout = Layout::new(game.player_dims(), false);
            let x0: Vec<HermitianMatrix> = initial_states(config)?
                .iter()
                .map(|x| x.hermitian().clone())
                .collect();
            let to_profile = |t: f64, y: &[f64]| -> Result<StateProfile> {
                layout
                    .unpack(y)
                    .into_iter()
                    .map(|h| {
                        DensityMatrix::new(h).map_err(|e| Error::BoundaryCollision {
                            t,
                            detail: e.to_string(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(StateProfile::new)
            };
            let field = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
                let profile = to_profile(t, y)?;
                let fs = primal_field(game, kernels, &profile).map_err(|e| at_time(t, e))?;
                layout.pack_into(&fs, dy);
                Ok(())
            };
            ode::integrate(config.method, field, &layout.pack(&x0), &times, |t, y| {
                let profile = to_profile(t, y)?;
                traj.gradients.push(game.gradients(&profile)?);
                traj.states.push(profile.into_inner());
                traj.times.push(t);
                Ok(())
            })?;
        }
    }
    Ok(traj)
}

/// Advances dual scores by `h` (possibly negative) with `substeps` RK4 steps.
pub fn dual_advance(
    game: &QuantumGame,
    kernels: &[KernelRef],
    ys: &[HermitianMatrix],
    h: f64,
    substeps: usize,
) -> Result<Vec<HermitianMatrix>> {
    let layout = Layout::new(game.player_dims(), false);
    let field = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let vs = dual_field(game, kernels, &layout.unpack(y))?;
        layout.pack_into(&vs, dy);
        Ok(())
    };
    let mut y = layout.pack(ys);
    let dt = h / substeps.max(1) as f64;
    for k in 0..substeps.max(1) {
        y = ode::rk4_step(&field, k as f64 * dt, &y, dt)?;
    }
    Ok(layout.unpack(&y))
}

/// Real coordinates of the traceless quotient for a game, and the quotient
/// field expressed in them.
pub fn quotient_chart_field(
    game: &QuantumGame,
    kernels: &[KernelRef],
    coords: &[f64],
) -> Result<Vec<f64>> {
    let layout = Layout::new(game.player_dims(), true);
    if coords.len() != layout.len() {
        return Err(Error::DimensionMismatch(format!(
            "expected {} traceless coordinates, got {}",
            layout.len(),
            coords.len()
        )));
    }
    let zs = layout.unpack(coords);
    Ok(layout.pack(&quotient_field(game, kernels, &zs)?))
}

pub fn quotient_chart_dim(game: &QuantumGame) -> usize {
    game.player_dims().iter().map(|d| d * d - 1).sum()
}

/// Smallest eigenvalue of each recorded state in a trajectory.
pub fn min_eigenvalues(traj: &Trajectory) -> Result<Vec<f64>> {
    traj.states
        .iter()
        .map(|profile| {
            profile
                .iter()
                .map(|x| hermitian_eig(x.hermitian()).map(|e| e.min_eigenvalue()))
                .try_fold(f64::INFINITY, |acc, m| m.map(|m| acc.min(m)))
        })
        .collect()
}
