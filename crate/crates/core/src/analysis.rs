//! Diagnostics computed from games and trajectories: regret against the best
//! fixed state, Fenchel-coupling energy, recurrence statistics, sampled
//! variational stability, purity and Bloch coordinates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{qd_field, Trajectory};
use crate::error::{Error, Result};
use crate::game::{QuantumGame, StateProfile};
use crate::matrix::{hermitian_eig, DensityMatrix, HermitianMatrix};
use crate::random;
use crate::regularizer::{
    fenchel_coupling, mirror, regularizer_range, BuiltinKernel, Kernel, KernelRef,
};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegretReport {
    pub player: usize,
    pub realized_regret: f64,
    pub bound: f64,
    /// Best fixed state in hindsight, as a row-major `[re, im]` matrix.
    #[serde(with = "crate::io::density_serde")]
    pub best_fixed_state: DensityMatrix,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConservationReport {
    pub times: Vec<f64>,
    pub series: Vec<f64>,
    pub max_drift: f64,
}

impl ConservationReport {
    /// Largest increase between consecutive samples (≤ 0 for a
    /// non-increasing series).
    pub fn max_increase(&self) -> f64 {
        self.series
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecurrenceReport {
    /// First record time with distance from the start above `r_out`.
    pub departure_time: Option<f64>,
    /// Closest approach to the start after departure (after `t = 0` when the
    /// trajectory never departs).
    pub return_distance: f64,
    pub return_time: Option<f64>,
    pub r_out: f64,
    pub horizon: f64,
}

impl RecurrenceReport {
    pub fn departed(&self) -> bool {
        self.departure_time.is_some()
    }

    pub fn returned_within(&self, radius: f64) -> bool {
        self.departed() && self.return_distance < radius
    }
}

fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Realized regret of `player` over the recorded run and the bound
/// `|d·θ(1/d) − θ(1)|`.
pub fn regret<K: Kernel + ?Sized>(
    game: &QuantumGame,
    player: usize,
    kernel: &K,
    traj: &Trajectory,
) -> Result<RegretReport> {
    if player >= game.num_players() {
        return Err(Error::DimensionMismatch(format!("no player {player}")));
    }
    if traj.gradients.len() != traj.len() || traj.is_empty() {
        return Err(Error::MissingData(
            "trajectory carries no payoff gradients".into(),
        ));
    }
    let d = game.player_dims()[player];
    let mut cumulative = HermitianMatrix::zeros(d);
    for (k, w) in traj.times.windows(2).enumerate() {
        let h = 0.5 * (w[1] - w[0]);
        cumulative = cumulative
            .axpy(h, &traj.gradients[k][player])
            .axpy(h, &traj.gradients[k + 1][player]);
    }
    let realized: Vec<f64> = traj
        .states
        .iter()
        .zip(&traj.gradients)
        .map(|(x, v)| x[player].hermitian().inner(&v[player]))
        .collect();
    let earned = trapezoid(&traj.times, &realized);
    let e = hermitian_eig(&cumulative)?;
    Ok(RegretReport {
        player,
        realized_regret: e.max_eigenvalue() - earned,
        bound: regularizer_range(kernel, d),
        best_fixed_state: e.top_projector(),
    })
}

/// `Σ_i F_i(P_i, Y_i(t))` along the recorded dual scores.
pub fn fenchel_series(
    kernels: &[KernelRef],
    reference: &StateProfile,
    traj: &Trajectory,
) -> Result<ConservationReport> {
    let scores = traj
        .dual_scores
        .as_ref()
        .ok_or_else(|| Error::MissingData("trajectory carries no dual scores".into()))?;
    if reference.len() != kernels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} reference states for {} kernels",
            reference.len(),
            kernels.len()
        )));
    }
    let series = scores
        .iter()
        .map(|ys| {
            ys.iter()
                .zip(reference.states())
                .zip(kernels)
                .map(|((y, p), k)| fenchel_coupling(k.as_ref(), p, y))
                .sum::<Result<f64>>()
        })
        .collect::<Result<Vec<f64>>>()?;
    let f0 = series.first().copied().unwrap_or(0.0);
    let max_drift = series.iter().map(|f| (f - f0).abs()).fold(0.0, f64::max);
    Ok(ConservationReport {
        times: traj.times.clone(),
        series,
        max_drift,
    })
}

/// Per-time Frobenius distance of the recorded profile from the initial one.
pub fn distances_from_start(traj: &Trajectory) -> Vec<f64> {
    let start = traj.profile(0);
    (0..traj.len())
        .map(|k| traj.profile(k).distance(&start))
        .collect()
}

pub fn recurrence_stats(traj: &Trajectory, r_out: f64) -> RecurrenceReport {
    let dist = distances_from_start(traj);
    let horizon = traj.times.last().copied().unwrap_or(0.0);
    let departure = dist.iter().position(|&r| r > r_out);
    let from = departure.map_or(1, |k| k + 1);
    let best = (from..dist.len()).min_by(|&a, &b| dist[a].total_cmp(&dist[b]));
    let (return_distance, return_time) = match (departure, best) {
        (_, Some(k)) => (dist[k], Some(traj.times[k])),
        (None, None) => (0.0, None),
        (Some(_), None) => (f64::INFINITY, None),
    };
    RecurrenceReport {
        departure_time: departure.map(|k| traj.times[k]),
        return_distance,
        return_time: if departure.is_some() {
            return_time
        } else {
            None
        },
        r_out,
        horizon,
    }
}

/// Maximum over sampled profiles `X` near `reference` (per-player distance at
/// most `radius`) of `Σ_i tr[V_i(X)(X_i − P_i)]`. A negative value certifies
/// the variational-stability inequality on the sample set.
pub fn vs_probe(
    game: &QuantumGame,
    reference: &StateProfile,
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "probe radius must be positive, got {radius}"
        )));
    }
    let euclid = BuiltinKernel::Euclidean;
    let margins = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64 + 1);
            let profile = loop {
                let states = reference
                    .states()
                    .iter()
                    .map(|p| {
                        let dir = random::hermitian(&mut rng, p.dim(), 1.0);
                        let n = dir.frobenius_norm();
                        let step = dir.scale(radius * rng.random_range(0.0..1.0f64).max(1e-3) / n);
                        mirror(&euclid, &p.hermitian().add(&step))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let near = states
                    .iter()
                    .zip(reference.states())
                    .all(|(x, p)| x.distance(p) <= radius);
                let moved = states
                    .iter()
                    .zip(reference.states())
                    .any(|(x, p)| x.distance(p) > 1e-12);
                if near && moved {
                    break StateProfile::new(states);
                }
            };
            variational_gap(game, &profile, reference)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(margins.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// `Σ_i tr[V_i(X)(X_i − P_i)]`; the time derivative of the summed Fenchel
/// coupling against `P` along the dual flow.
pub fn variational_gap(game: &QuantumGame, x: &StateProfile, p: &StateProfile) -> Result<f64> {
    let vs = game.gradients(x)?;
    Ok(vs
        .iter()
        .zip(x.states().iter().zip(p.states()))
        .map(|(v, (xi, pi))| xi.hermitian().sub(pi.hermitian()).inner(v))
        .sum())
}

/// `tr(X²)`.
pub fn purity(x: &DensityMatrix) -> f64 {
    x.hermitian().inner(x.hermitian())
}

/// `|⟨ψ|X|ψ⟩|` for a pure target `ψψ†`, i.e. `tr(X P)`.
pub fn fidelity_with_pure(x: &DensityMatrix, target: &DensityMatrix) -> f64 {
    x.hermitian().inner(target.hermitian())
}

/// Pauli coordinates with `X = (I + xσx + yσy + zσz)/2`.
pub fn bloch_coords(x: &DensityMatrix) -> Result<[f64; 3]> {
    if x.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "Bloch coordinates need a qubit, got dimension {}",
            x.dim()
        )));
    }
    let m = x.matrix();
    Ok([
        2.0 * m[(0, 1)].re,
        -2.0 * m[(0, 1)].im,
        m[(0, 0)].re - m[(1, 1)].re,
    ])
}

/// `Σ_i ‖qd_field(θ_i, P_i, V_i(P))‖_F`.
pub fn stationarity_residual(
    game: &QuantumGame,
    kernels: &[KernelRef],
    p: &StateProfile,
) -> Result<f64> {
    let vs = game.gradients(p)?;
    p.states()
        .iter()
        .zip(&vs)
        .zip(kernels)
        .map(|((x, v), k)| qd_field(k.as_ref(), x, v).map(|f| f.frobenius_norm()))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, InitialCondition, SimulationConfig, StateSpace};
    use crate::game::{matching_pennies, strict_ne_game, ClassicalTable};
    use crate::matrix::{c, CMatrix};
    use crate::ode::Method;

    fn diag(p: &[f64]) -> DensityMatrix {
        DensityMatrix::from_probabilities(p).unwrap()
    }

    fn vn2() -> Vec<KernelRef> {
        vec![
            BuiltinKernel::VonNeumann.into_ref(),
            BuiltinKernel::VonNeumann.into_ref(),
        ]
    }

    fn run(game: &QuantumGame, initial: Vec<InitialCondition>, horizon: f64) -> Trajectory {
        let config = SimulationConfig {
            kernels: vn2(),
            horizon,
            method: Method::dopri_default(),
            record_stride: 0.01,
            initial,
            space: StateSpace::Dual,
        };
        integrate(game, &config).unwrap()
    }

    fn strict_ne() -> StateProfile {
        StateProfile::new(vec![diag(&[1.0, 0.0]), diag(&[0.0, 1.0])])
    }

    #[test]
    fn purity_examples() {
        assert!((purity(&DensityMatrix::maximally_mixed(2)) - 0.5).abs() < 1e-15);
        assert!((purity(&diag(&[1.0, 0.0])) - 1.0).abs() < 1e-15);
        assert!((purity(&diag(&[0.75, 0.25])) - 0.625).abs() < 1e-15);
    }

    #[test]
    fn bloch_examples() {
        assert_eq!(
            bloch_coords(&DensityMatrix::maximally_mixed(2)).unwrap(),
            [0.0, 0.0, 0.0]
        );
        assert_eq!(bloch_coords(&diag(&[1.0, 0.0])).unwrap(), [0.0, 0.0, 1.0]);
        let plus = DensityMatrix::from_matrix(CMatrix::from_element(2, 2, c(0.5, 0.0))).unwrap();
        let r = bloch_coords(&plus).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-15 && r[1].abs() < 1e-15 && r[2].abs() < 1e-15);
        assert!(bloch_coords(&DensityMatrix::maximally_mixed(3)).is_err());
        // y = +1 for the σy eigenstate (1, i)/√2
        let s = 1.0 / 2f64.sqrt();
        let yplus = DensityMatrix::pure(&[c(s, 0.0), c(0.0, s)]).unwrap();
        assert!((bloch_coords(&yplus).unwrap()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn regret_examples() {
        let t1 = ClassicalTable::new(vec![2, 2], vec![0.7; 4]).unwrap();
        let t2 = ClassicalTable::new(vec![2, 2], vec![0.1; 4]).unwrap();
        let g = QuantumGame::from_classical(&[t1, t2]).unwrap();
        let traj = run(
            &g,
            vec![
                InitialCondition::Primal(diag(&[0.3, 0.7])),
                InitialCondition::Primal(diag(&[0.5, 0.5])),
            ],
            2.0,
        );
        let r = regret(&g, 0, &BuiltinKernel::VonNeumann, &traj).unwrap();
        assert!(r.realized_regret.abs() < 1e-12);
        assert!((r.bound - 2f64.ln()).abs() < 1e-15);
        let r = regret(&g, 0, &BuiltinKernel::Euclidean, &traj).unwrap();
        assert!((r.bound - 0.25).abs() < 1e-15);
    }

    #[test]
    fn fenchel_series_examples() {
        let g = strict_ne_game();
        let traj = run(
            &g,
            vec![
                InitialCondition::Primal(diag(&[0.2, 0.8])),
                InitialCondition::Primal(diag(&[0.8, 0.2])),
            ],
            20.0,
        );
        let own = fenchel_series(&vn2(), &traj.profile(0), &traj).unwrap();
        assert!(own.series[0].abs() < 1e-12);
        let energy = fenchel_series(&vn2(), &strict_ne(), &traj).unwrap();
        assert!(energy.max_increase() < 0.0, "{}", energy.max_increase());
    }

    #[test]
    fn fenchel_needs_dual_scores() {
        let g = strict_ne_game();
        let config = SimulationConfig {
            kernels: vn2(),
            horizon: 1.0,
            method: Method::dopri_default(),
            record_stride: 0.1,
            initial: vec![
                InitialCondition::Primal(diag(&[0.2, 0.8])),
                InitialCondition::Primal(diag(&[0.8, 0.2])),
            ],
            space: StateSpace::Primal,
        };
        let traj = integrate(&g, &config).unwrap();
        assert!(matches!(
            fenchel_series(&vn2(), &strict_ne(), &traj),
            Err(Error::MissingData(_))
        ));
    }

    #[test]
    fn recurrence_examples() {
        let g = QuantumGame::from_classical(&[
            ClassicalTable::new(vec![2, 2], vec![1.0; 4]).unwrap(),
            ClassicalTable::new(vec![2, 2], vec![1.0; 4]).unwrap(),
        ])
        .unwrap();
        let still = run(
            &g,
            vec![
                InitialCondition::Primal(diag(&[0.3, 0.7])),
                InitialCondition::Primal(diag(&[0.5, 0.5])),
            ],
            1.0,
        );
        let r = recurrence_stats(&still, 0.1);
        assert!(!r.departed());
        assert!(r.return_distance < 1e-12);

        let converging = run(
            &strict_ne_game(),
            vec![
                InitialCondition::Primal(diag(&[0.2, 0.8])),
                InitialCondition::Primal(diag(&[0.8, 0.2])),
            ],
            50.0,
        );
        let r = recurrence_stats(&converging, 0.1);
        assert!(r.departed());
        assert!(r.return_distance > 0.1);
    }

    #[test]
    fn vs_probe_examples() {
        let g = strict_ne_game();
        let m = vs_probe(&g, &strict_ne(), 0.1, 200, 7).unwrap();
        assert!(m < 0.0);
        let small = vs_probe(&g, &strict_ne(), 1e-6, 50, 7).unwrap();
        assert!(small < 0.0 && small > -1e-5);
        let mp = matching_pennies();
        let m = vs_probe(&mp, &StateProfile::uniform(&[2, 2]), 0.3, 200, 1).unwrap();
        assert!(m.abs() < 1e-10);
        assert_eq!(
            vs_probe(&g, &strict_ne(), 0.1, 64, 3).unwrap(),
            vs_probe(&g, &strict_ne(), 0.1, 64, 3).unwrap()
        );
    }

    #[test]
    fn stationarity_examples() {
        let r = stationarity_residual(&matching_pennies(), &vn2(), &StateProfile::uniform(&[2, 2]))
            .unwrap();
        assert!(r <= 1e-10);
        let r = stationarity_residual(&strict_ne_game(), &vn2(), &strict_ne()).unwrap();
        assert!(r <= 1e-8);
        let interior = StateProfile::new(vec![diag(&[0.4, 0.6]), diag(&[0.7, 0.3])]);
        assert!(stationarity_residual(&strict_ne_game(), &vn2(), &interior).unwrap() > 1e-3);
    }
}
