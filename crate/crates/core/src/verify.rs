//! The built-in property suite behind `qflow verify`.
//!
//! Each property is a public function returning an [`Outcome`] so that tests
//! can run it with their own sizes; [`run_suite`] runs all of them with the
//! default sizes and reports one [`CheckResult`] per property.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    bloch_coords, fenchel_series, fidelity_with_pure, purity, recurrence_stats, regret,
    stationarity_residual, variational_gap, vs_probe,
};
use crate::dynamics::{
    dual_advance, integrate, min_eigenvalues, qd_field, qrd_field, quotient_chart_dim,
    quotient_chart_field, quotient_field, InitialCondition, SimulationConfig, StateSpace,
    Trajectory,
};
use crate::error::{Error, Result};
use crate::game::{matching_pennies, strict_ne_game, ClassicalTable, QuantumGame, StateProfile};
use crate::io::{trajectory_csv, trajectory_from_json, trajectory_to_json};
use crate::matrix::{
    c, commutator_norm, frobenius, func_calculus, hermitian_eig, partial_trace_general,
    tensor_product, CMatrix, DensityMatrix, HermitianMatrix,
};
use crate::ode::Method;
use crate::oracle::{
    brute_force_mirror, divergence, hermitian_basis, mirror_objective, replicator_by_quadrature,
};
use crate::random;
use crate::regularizer::{
    conjugate, dual_of, fenchel_coupling, mirror, regularizer_range, BuiltinKernel, KernelRef,
};

/// Measured value of one property against its tolerance.
#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl Outcome {
    pub fn at_most(measured: f64, tolerance: f64) -> Self {
        Self {
            measured,
            tolerance,
            passed: measured <= tolerance,
            detail: String::new(),
        }
    }

    pub fn at_least(measured: f64, tolerance: f64) -> Self {
        Self {
            measured,
            tolerance,
            passed: measured >= tolerance,
            detail: String::new(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    fn and(mut self, ok: bool, why: impl Into<String>) -> Self {
        if !ok {
            self.passed = false;
            let why = why.into();
            self.detail = if self.detail.is_empty() {
                why
            } else {
                format!("{}; {why}", self.detail)
            };
        }
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub module: &'static str,
    pub property: &'static str,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    /// Multiply every tolerance by 10.
    pub loose: bool,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            loose: false,
            seed: 7,
        }
    }
}

fn vn() -> KernelRef {
    BuiltinKernel::VonNeumann.into_ref()
}

fn tsallis_half() -> KernelRef {
    BuiltinKernel::tsallis(0.5).unwrap().into_ref()
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn worst(acc: &mut f64, v: f64) {
    if !(v <= *acc) {
        *acc = if v.is_nan() { f64::INFINITY } else { v };
    }
}

/// Random classical tables with entries uniform in `[−scale, scale]`, lifted
/// to the joint space and rotated by a Haar-random joint unitary.
pub fn random_lifted_game<R: Rng + ?Sized>(
    rng: &mut R,
    dims: &[usize],
    scale: f64,
) -> Result<QuantumGame> {
    let n: usize = dims.iter().product();
    let tables = (0..dims.len())
        .map(|_| {
            ClassicalTable::new(
                dims.to_vec(),
                (0..n)
                    .map(|_| scale * rng.random_range(-1.0..1.0))
                    .collect(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    QuantumGame::from_classical(&tables)?.conjugated(&random::unitary(rng, n))
}

fn random_profile<R: Rng + ?Sized>(rng: &mut R, dims: &[usize]) -> StateProfile {
    StateProfile::new(dims.iter().map(|&d| random::density(rng, d)).collect())
}

fn dual_config(
    kernels: Vec<KernelRef>,
    initial: Vec<InitialCondition>,
    horizon: f64,
    stride: f64,
    method: Method,
) -> SimulationConfig {
    SimulationConfig {
        kernels,
        horizon,
        method,
        record_stride: stride,
        initial,
        space: StateSpace::Dual,
    }
}

fn primal_initial(p: &[f64]) -> InitialCondition {
    InitialCondition::Primal(DensityMatrix::from_probabilities(p).unwrap())
}

// ---------------------------------------------------------------------------
// matrixcore

pub fn eig_invariants(cases: usize, seed: u64, tol: f64) -> Result<Outcome> {
    let mut rng = rng_for(seed, 1);
    let mut recon = 0.0;
    let mut unit = 0.0;
    let mut sorted = true;
    for k in 0..cases {
        let d = 1 + k % 6;
        let h = random::hermitian(&mut rng, d, 1.0 + k as f64 % 3.0);
        let e = hermitian_eig(&h)?;
        worst(
            &mut recon,
            e.reconstruct().distance(&h) / (1.0 + h.frobenius_norm()),
        );
        let gram = e.eigenvectors.adjoint() * &e.eigenvectors - CMatrix::identity(d, d);
        worst(&mut unit, frobenius(&gram));
        sorted &= e.eigenvalues.windows(2).all(|w| w[0] >= w[1]);
    }
    Ok(Outcome::at_most(recon.max(unit), tol)
        .with_detail(format!("reconstruction {recon:.2e}, unitarity {unit:.2e}"))
        .and(sorted, "eigenvalues not sorted descending"))
}

pub fn partial_trace_properties(cases: usize, seed: u64, tol: f64) -> Result<Outcome> {
    let mut rng = rng_for(seed, 2);
    let shapes: [&[usize]; 3] = [&[2, 3], &[3, 2, 2], &[2, 2, 2]];
    let mut err = 0.0;
    for k in 0..cases {
        let dims = shapes[k % shapes.len()];
        let n: usize = dims.iter().product();
        let a = random::ginibre(&mut rng, n, n);
        let b = random::ginibre(&mut rng, n, n);
        let alpha = rng.random_range(-2.0..2.0);
        let tr_a = a.trace();
        for keep in 0..dims.len() {
            let pa = partial_trace_general(&a, dims, keep)?;
            let pb = partial_trace_general(&b, dims, keep)?;
            let pab = partial_trace_general(&(&a + &b * c(alpha, 0.0)), dims, keep)?;
            worst(&mut err, (pa.trace() - tr_a).norm() / tr_a.norm().max(1.0));
            let lin = frobenius(&(pab - pa - pb * c(alpha, 0.0)));
            worst(&mut err, lin / frobenius(&a).max(1.0));
        }
    }
    Ok(Outcome::at_most(err, tol))
}

pub fn func_calculus_composition(cases: usize, seed: u64, tol: f64) -> Result<Outcome> {
    let mut rng = rng_for(seed, 3);
    let mut err = 0.0;
    for k in 0..cases {
        let d = 1 + k % 6;
        let x = random::density_with_floor(&mut rng, d, 0.01 / d as f64);
        let h = x.hermitian().scale(1.0 + 4.0 * rng.random_range(0.0..1.0));
        let direct = func_calculus(&h, |v| v.ln().exp())?;
        let chained = func_calculus(&func_calculus(&h, f64::ln)?, f64::exp)?;
        worst(&mut err, direct.distance(&chained));
        worst(&mut err, direct.distance(&h));
    }
    Ok(Outcome::at_most(err, tol))
}

pub fn tensor_associativity(cases: usize, seed: u64) -> Result<Outcome> {
    let mut rng = rng_for(seed, 4);
    let mut int_matrix = |r: usize, s: usize| {
        CMatrix::from_fn(r, s, |_, _| {
            c(
                rng.random_range(-4i32..=4) as f64,
                rng.random_range(-4i32..=4) as f64,
            )
        })
    };
    let mut err = 0.0;
    for k in 0..cases {
        let (p, q, r) = (1 + k % 3, 1 + (k / 3) % 3, 2 + k % 2);
        let a = int_matrix(p, q);
        let b = int_matrix(q, r);
        let cm = int_matrix(r, p);
        let left = tensor_product(&tensor_product(&a, &b), &cm);
        let right = tensor_product(&a, &tensor_product(&b, &cm));
        worst(&mut err, frobenius(&(left - right)));
    }
    Ok(Outcome::at_most(err, 0.0))
}

// ---------------------------------------------------------------------------
// game

fn sample_games(seed: u64) -> Result<Vec<QuantumGame>> {
    let mut rng = rng_for(seed, 10);
    Ok(vec![
        strict_ne_game(),
        random_lifted_game(&mut rng, &[2, 3], 1.0)?,
        random_lifted_game(&mut rng, &[2, 2, 2], 1.0)?,
    ])
}

pub fn payoff_linearity(profiles: usize, seed: u64, tol: f64) -> Result<Outcome> {
    let mut rng = rng_for(seed, 11);
    let mut err = 0.0;
    for game in sample_games(seed)? {
        for _ in 0..profiles {
            let p = random_profile(&mut rng, game.player_dims());
            for i in 0..game.num_players() {
                let d = game.player_dims()[i];
                let (x, x2) = (random::density(&mut rng, d), random::density(&mut rng, d));
                let alpha = rng.random_range(0.0..1.0);
                let mix = DensityMatrix::new(
                    x.hermitian().scale(alpha).axpy(1.0 - alpha, x2.hermitian()),
                )?;
                let lhs = game.payoff(i, &p.with_state(i, mix))?;
                let rhs = alpha * game.payoff(i, &p.with_state(i, x))?
                    + (1.0 - alpha) * game.payoff(i, &p.with_state(i, x2))?;
                worst(&mut err, (lhs - rhs).abs());
            }
        }
    }
    Ok(Outcome::at_most(err, tol))
}

pub fn gradient_consistency(profiles: usize, seed: u64, tol: f64) -> Result<Outcome> {
    let mut rng = rng_for(seed, 12);
    let mut err = 0.0;
    for game in sample_games(seed)? {
        for _ in 0..profiles {
            let p = random_profile(&mut rng, game.player_dims());
            for i in 0..game.num_players() {
                let v = game.gradient_field(i, &p)?;
                worst(
                    &mut err,
                    (game.payoff(i, &p)? - p.get(i).hermitian().inner(&v)).abs(),
                );
            }
        }
    }
    Ok(Outcome::at_most(err, tol))
}

pub fn gradient_finite_differences(profiles: usize, seed: u64, tol: f64) -> Result<Outcome> {
    let mut rng = rng_for(seed, 13);
    let h = 1e-4;
    let mut err = 0.0;
    for game in sample_games(seed)? {
        for _ in 0..profiles {
            let dims = game.player_dims().to_vec();
            let p = StateProfile::new(
                dims.iter()
                    .map(|&d| random::density_with_floor(&mut rng, d, 0.05))
                    .collect(),
            );
            for i in 0..game.num_players() {
                let dir = random::traceless_direction(&mut rng, dims[i]);
                // Payoff is affine in ρ_i, so the shifted points need not be states.
                let at = |s: f64| -> Result<f64> {
                    let shifted = DensityMatrix::new_unchecked(p.get(i).hermitian().axpy(s, &dir));
                    game.payoff(i, &p.with_state(i, shifted))
                };
                let fd = (at(h)? - at(-h)?) / (2.0 * h);
                worst(
                    &mut err,
                    (fd - dir.inner(&game.gradient_field(i, &p)?)).abs(),
                );
            }
        }
    }
    Ok(Outcome::at_most(err, tol))
}

pub fn gradient_ignores_own_state(profiles: usize, seed: u64) -> Result<Outcome> {
    let mut rng = rng_for(seed, 14);
    let mut mismatches = 0usize;
    for game in sample_games(seed)? {
        for _ in 0..profiles {
            let p = random_profile(&mut rng, game.player_dims());
            for i in 0..game.num_players() {
                let other = p.with_state(i, random::density(&mut rng, game.player_dims()[i]));
                if game.gradient_field(i, &p)? != game.gradient_field(i, &other)? {
                    mismatches += 1;
                }
            }
        }
    }
    Ok(Outcome::at_most(mismatches as f64, 0.0)
        .with_detail(format!("{mismatches} differing gradients")))
}

pub fn probability_normalization(profiles: usize, seed: u64, tol: f64) -> Result<Outcome> {
    let mut rng = rng_for(seed, 15);
    let mut sum_err = 0.0;
    let mut neg: f64 = 0.0;
    for game in sample_games(seed)? {
        for _ in 0..profiles {
            let probs =
                game.outcome_probabilities(&random_profile(&mut rng, game.player_dims()))?;
            worst(&mut sum_err, (probs.iter().sum::<f64>() - 1.0).abs());
            neg = neg.max(probs.iter().map(|&p| -p).fold(0.0, f64::max));
        }
    }
    Ok(Outcome::at_most(sum_err, tol)
        .with_detail(format!("most negative probability {:.2e}", -neg))
        .and(neg <= tol, "negative outcome probability"))
}

pub fn zero_sum_property(profiles: usize, seed: u64, tol: f64) -> Result<Outcome> {
    let mut rng = rng_for(seed, 16);
    let mut err = 0.0;
    let u = random::unitary(&mut rng, 4);
    for game in [
        strict_ne_game(),
        matching_pennies(),
        matching_pennies().conjugated(&u)?,
    ] {
        if !game.is_zero_sum() {
            return Ok(
                Outcome::at_most(f64::INFINITY, tol).with_detail("zero-sum game not recognised")
            );
        }
        for _ in 0..profiles {
            let p = random_profile(&mut rng, game.player_dims());
            let total: f64 = (0..game.num_players())
                .map(|i| game.payoff(i, &p))
                .sum::<Result<f64>>()?;
            worst(&mut err, total.abs());
        }
    }
    Ok(Outcome::at_most(err, tol))
}

// ---------------------------------------------------------------------------
// regmirror

pub fn standard_kernels() -> Vec<KernelRef> {
    vec![BuiltinKernel::Euclidean.into_ref(), vn(), tsallis_half()]
}

/// Compares `mirror` under each kernel with projected-gradient maximization of
/// `tr(YX) − tr θ(X)` from several random starts.
pub fn mirror_optimality(
    kernels: &[KernelRef],
    cases: usize,
    starts: usize,
    seed: u64,
    tol: f64,
) -> Result<Outcome> {
    let mut rng = rng_for(seed, 20);
    let problems: Vec<(KernelRef, HermitianMatrix, Vec<DensityMatrix>)> = (0..cases)
        .map(|k| {
            let d = rng.random_range(1..=4);
            let scale = rng.random_range(0.3..2.0);
            let y = random::hermitian(&mut rng, d, scale);
            let s = (0..starts).map(|_| random::density(&mut rng, d)).collect();
            (kernels[k % kernels.len()].clone(), y, s)
        })
        .collect();
    let found = problems
        .par_iter()
        .map(|(k, y, s)| -> Result<(f64, f64)> {
            let q = mirror(k.as_ref(), y)?;
            let fq = mirror_objective(k.as_ref(), y, &q)?;
            let mut dist: f64 = 0.0;
            let mut gain = f64::NEG_INFINITY;
            for start in s {
                let x = brute_force_mirror(k.as_ref(), y, start, 10_000)?;
                dist = dist.max(x.distance(&q));
                gain = gain.max(mirror_objective(k.as_ref(), y, &x)? - fq);
            }
            Ok((dist, gain))
        })
        .collect::<Result<Vec<_>>>()?;
    let dist = found.iter().map(|r| r.0).fold(0.0, f64::max);
    let gain = found.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let gain_tol = tol * 1e-2;
    Ok(Outcome::at_most(dist, tol)
        .with_detail(format!("objective excess {gain:.2e}"))
        .and(
            gain <= gain_tol,
            format!("brute force beats mirror by more than {gain_tol:e}"),
        ))
}

pub fn mirror_shift_invariance(cases: usize, seed: u64, tol: f64) -> Result<Outcome> {
    let mut rng = rng_for(seed, 21);
    let mut err = 0.0;
    for k in 0..cases {
        let kernel = &standard_kernels()[k % 3];
        let y = random::hermitian(&mut rng, 1 + k % 4, 1.0);
        let q = mirror(kernel.as_ref(), &y)?;
        for s in [-10.0, 0.3, 7.0] {
            worst(&mut err, mirror(kernel.as_ref(), &y.shift(s))?.distance(&q));
        }
    }
    Ok(Outcome::at_most(err, tol))
}

pub fn mirror_commutation(cases: usize, seed: u64, tol: f64) -> Result<Outcome> {
    let mut rng = rng_for(seed, 22);
    let mut err = 0.0;
    for k in 0..cases {
        let kernel = &standard_kernels()[k % 3];
        let y = random::hermitian(&mut rng, 1 + k % 4, 1.5);
        worst(
            &mut err,
            commutator_norm(mirror(kernel.as_ref(), &y)?.matrix(), y.matrix()),
        );
    }
    Ok(Outcome::at_most(err, tol))
}

pub fn mirror_lipschitz(cases: usize, seed: u64, tol: f64) -> Result<Outcome> {
    let mut rng = rng_for(seed, 23);
    let mut excess = f64::NEG_INFINITY;
    for k in 0..cases {
        let kernel = &standard_kernels()[k % 3];
        let d = 1 + k % 4;
        let y = random::hermitian(&mut rng, d, 1.0);
        let scale = 10f64.powf(rng.random_range(-3.0..0.0));
        let y2 = y.add(&random::hermitian(&mut rng, d, scale));
        let lhs = mirror(kernel.as_ref(), &y)?.distance(&mirror(kernel.as_ref(), &y2)?);
        worst(
            &mut excess,
            lhs - y.distance(&y2) / kernel.strong_convexity(),
        );
    }
    Ok(Outcome::at_most(excess, tol))
}

pub fn fenchel_lower_bound(cases: usize, seed: u64, tol: f64) -> Result<Outcome> {
    let mut rng = rng_for(seed, 24);
    let mut excess = f64::NEG_INFINITY;
    for k in 0..cases {
        let kernel = &standard_kernels()[k % 3];
        let d = 1 + k % 4;
        let p = random::density(&mut rng, d);
        let y = random::hermitian(&mut rng, d, 1.5);
        let q = mirror(kernel.as_ref(), &y)?;
        let bound = 0.5 * kernel.strong_convexity() * q.distance(&p).powi(2);
        worst(
            &mut excess,
            bound - fenchel_coupling(kernel.as_ref(), &p, &y)?,
        );
    }
    Ok(Outcome::at_most(excess, tol))
}

/// `F(P, θ′(P_n) + c_n I)` along `P_n → P`; returns the final coupling and
/// whether the sequence decreased monotonically.
pub fn fenchel_reciprocity(cases: usize, seed: u64, tol: f64) -> Result<Outcome> {
    let mut rng = rng_for(seed, 25);
    let mut last = 0.0;
    let mut monotone = true;
    for k in 0..cases {
        let kernel = &standard_kernels()[k % 3];
        let d = 2 + k % 3;
        let p = random::density_with_floor(&mut rng, d, 0.02);
        let target = random::density(&mut rng, d);
        let mut prev = f64::INFINITY;
        for n in 0..=12 {
            let eps = 0.5f64.powi(2 * n);
            let pn =
                DensityMatrix::new(p.hermitian().scale(1.0 - eps).axpy(eps, target.hermitian()))?;
            let yn = dual_of(kernel.as_ref(), &pn)?.shift(rng.random_range(-5.0..5.0));
            let f = fenchel_coupling(kernel.as_ref(), &p, &yn)?;
            monotone &= f <= prev + 1e-14;
            prev = f;
        }
        worst(&mut last, prev);
    }
    Ok(Outcome::at_most(last, tol).and(monotone, "coupling not decreasing along the sequence"))
}

pub fn envelope_identity(cases: usize, seed: u64, tol: f64) -> Result<Outcome> {
    let mut rng = rng_for(seed, 26);
    let h = 1e-5;
    let mut err = 0.0;
    for k in 0..cases {
        let kernel = &standard_kernels()[k % 3];
        let d = 1 + k % 4;
        let y = random::hermitian(&mut rng, d, 1.0);
        let q = mirror(kernel.as_ref(), &y)?;
        for e in hermitian_basis(d) {
            let fd = (conjugate(kernel.as_ref(), &y.axpy(h, &e))?
                - conjugate(kernel.as_ref(), &y.axpy(-h, &e))?)
                / (2.0 * h);
            worst(&mut err, (fd - q.hermitian().inner(&e)).abs());
        }
    }
    Ok(Outcome::at_most(err, tol))
}

// ---------------------------------------------------------------------------
// dynamics

/// Central differences of `t ↦ Q(Y(t))` along a recorded dual run against
/// `qd_field(X(t), V(t))`, entrywise.
pub fn primal_dual_consistency(
    game: &QuantumGame,
    kernels: &[KernelRef],
    initial: Vec<InitialCondition>,
    horizon: f64,
    samples: usize,
    tol: f64,
) -> Result<Outcome> {
    let cfg = dual_config(
        kernels.to_vec(),
        initial,
        horizon,
        horizon / samples as f64,
        Method::dopri_default(),
    );
    let traj = integrate(game, &cfg)?;
    let scores = traj.dual_scores.as_ref().unwrap();
    let h = 1e-4;
    let errs = (1..traj.len())
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let ys = &scores[k];
            let plus = dual_advance(game, kernels, ys, h, 4)?;
            let minus = dual_advance(game, kernels, ys, -h, 4)?;
            let mut err: f64 = 0.0;
            for i in 0..ys.len() {
                let xp = mirror(kernels[i].as_ref(), &plus[i])?;
                let xm = mirror(kernels[i].as_ref(), &minus[i])?;
                let fd = (xp.matrix() - xm.matrix()) / c(2.0 * h, 0.0);
                let field = qd_field(
                    kernels[i].as_ref(),
                    &traj.states[k][i],
                    &traj.gradients[k][i],
                )?;
                err = err.max(
                    (fd - field.matrix())
                        .iter()
                        .map(|z| z.norm())
                        .fold(0.0, f64::max),
                );
            }
            Ok(err)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = errs.len();
    Ok(Outcome::at_most(errs.into_iter().fold(0.0, f64::max), tol)
        .with_detail(format!("{n} sample times")))
}

pub fn replicator_quadrature(cases: usize, seed: u64, tol: f64) -> Result<Outcome> {
    let mut rng = rng_for(seed, 30);
    let mut err = 0.0;
    for k in 0..cases {
        let d = 1 + k % 5;
        let x = random::density_with_floor(&mut rng, d, 1e-3 / d as f64);
        let v = random::hermitian(&mut rng, d, 1.0);
        let closed = qrd_field(&x, &v)?;
        let quad = replicator_by_quadrature(&x, &v, 32)?;
        worst(&mut err, closed.max_abs_entry_diff(&quad));
    }
    Ok(Outcome::at_most(err, tol))
}

pub fn entropic_specialization(cases: usize, seed: u64, tol: f64) -> Result<Outcome> {
    let mut rng = rng_for(seed, 31);
    let mut err = 0.0;
    for k in 0..cases {
        let d = 1 + k % 5;
        let x = random::density(&mut rng, d);
        let v = random::hermitian(&mut rng, d, 1.0);
        worst(
            &mut err,
            qd_field(&BuiltinKernel::VonNeumann, &x, &v)?.max_abs_entry_diff(&qrd_field(&x, &v)?),
        );
    }
    Ok(Outcome::at_most(err, tol))
}

pub fn trace_conservation(
    cases: usize,
    seed: u64,
    tol_primal: f64,
    tol_quotient: f64,
) -> Result<Outcome> {
    let mut rng = rng_for(seed, 32);
    let mut primal = 0.0;
    for k in 0..cases {
        let kernel = &[vn(), tsallis_half()][k % 2];
        let d = 1 + k % 5;
        let x = random::density(&mut rng, d);
        let v = random::hermitian(&mut rng, d, 1.0);
        worst(
            &mut primal,
            qd_field(kernel.as_ref(), &x, &v)?.trace().abs(),
        );
    }
    let mut quotient = 0.0;
    for game in sample_games(seed)? {
        let kernels: Vec<KernelRef> = game.player_dims().iter().map(|_| vn()).collect();
        for _ in 0..cases / 3 + 1 {
            let zs: Vec<HermitianMatrix> = game
                .player_dims()
                .iter()
                .map(|&d| random::hermitian(&mut rng, d, 2.0).traceless_part())
                .collect();
            for f in quotient_field(&game, &kernels, &zs)? {
                worst(&mut quotient, f.trace().abs());
            }
        }
    }
    Ok(Outcome::at_most(primal, tol_primal)
        .with_detail(format!("quotient field trace {quotient:.2e}"))
        .and(quotient <= tol_quotient, "quotient field not traceless"))
}

/// Primal runs from states with all eigenvalues at least `1e-3` keep every
/// eigenvalue positive.
pub fn rank_invariance(runs: usize, horizon: f64, seed: u64) -> Result<Outcome> {
    let mut rng = rng_for(seed, 33);
    let mut lowest = f64::INFINITY;
    for k in 0..runs {
        let dims = [[2, 2], [2, 3], [3, 3], [3, 2]][k % 4];
        let game = random_lifted_game(&mut rng, &dims, 0.5)?;
        let kernel = [vn(), tsallis_half()][k % 2].clone();
        let initial = dims
            .iter()
            .map(|&d| InitialCondition::Primal(random::density_with_floor(&mut rng, d, 1e-3)))
            .collect();
        let cfg = SimulationConfig {
            kernels: vec![kernel.clone(), kernel],
            horizon,
            method: Method::dopri_default(),
            record_stride: 0.05,
            initial,
            space: StateSpace::Primal,
        };
        let traj = integrate(&game, &cfg)?;
        lowest = lowest.min(
            min_eigenvalues(&traj)?
                .into_iter()
                .fold(f64::INFINITY, f64::min),
        );
    }
    Ok(Outcome {
        measured: lowest,
        tolerance: 0.0,
        passed: lowest > 0.0,
        detail: "smallest eigenvalue seen; must stay positive".into(),
    })
}

pub fn equilibrium_stationarity(tol: f64) -> Result<Outcome> {
    let game = matching_pennies();
    let p = StateProfile::uniform(game.player_dims());
    let vs = game.gradients(&p)?;
    let mut residual = 0.0;
    for kernel in [vn(), tsallis_half()] {
        for (x, v) in p.states().iter().zip(&vs) {
            worst(
                &mut residual,
                qd_field(kernel.as_ref(), x, v)?.frobenius_norm(),
            );
        }
    }
    Ok(Outcome::at_most(residual, tol))
}

/// Central-difference divergence of the quotient field in traceless
/// coordinates, relative to the field norm, at random points of each game.
pub fn incompressibility(
    games: &[QuantumGame],
    points: usize,
    seed: u64,
    tol: f64,
) -> Result<Outcome> {
    let mut rng = rng_for(seed, 34);
    let mut rel = 0.0;
    for game in games {
        let kernels: Vec<KernelRef> = game.player_dims().iter().map(|_| vn()).collect();
        let n = quotient_chart_dim(game);
        for _ in 0..points {
            let z: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
            let field = |p: &[f64]| quotient_chart_field(game, &kernels, p);
            let norm = field(&z)?.iter().map(|v| v * v).sum::<f64>().sqrt();
            let div = divergence(field, &z, 1e-4)?;
            worst(&mut rel, div.abs() / norm.max(1e-300));
        }
    }
    Ok(Outcome::at_most(rel, tol))
}

// ---------------------------------------------------------------------------
// analysis

/// Realized regret minus the bound, maximized over players of random
/// two-player games started from zero scores.
pub fn regret_bound(games: usize, horizon: f64, seed: u64, tol: f64) -> Result<Outcome> {
    let dims = [[2, 2], [2, 3], [3, 2], [3, 3]];
    let excess = (0..games)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let mut rng = rng_for(seed, 1000 + k as u64);
            let dims = dims[k % dims.len()];
            let game = random_lifted_game(&mut rng, &dims, 1.0)?;
            let kernels = vec![vn(), vn()];
            let initial = dims
                .iter()
                .map(|&d| InitialCondition::Dual(HermitianMatrix::zeros(d)))
                .collect();
            let traj = integrate(
                &game,
                &dual_config(
                    kernels.clone(),
                    initial,
                    horizon,
                    0.01,
                    Method::dopri_default(),
                ),
            )?;
            let mut worst_excess = f64::NEG_INFINITY;
            for (i, &d) in dims.iter().enumerate() {
                let r = regret(&game, i, kernels[i].as_ref(), &traj)?;
                worst_excess = worst_excess.max(r.realized_regret - (d as f64).ln());
            }
            Ok(worst_excess)
        })
        .collect::<Result<Vec<_>>>()?;
    let bound2 = regularizer_range(&BuiltinKernel::VonNeumann, 2);
    let bound_err = (bound2 - std::f64::consts::LN_2).abs();
    Ok(
        Outcome::at_most(excess.into_iter().fold(f64::NEG_INFINITY, f64::max), tol)
            .with_detail(format!("d=2 bound {bound2:.6}"))
            .and(bound_err <= 1e-12, "d=2 bound differs from log 2"),
    )
}

fn total_coupling(kernels: &[KernelRef], p: &StateProfile, ys: &[HermitianMatrix]) -> Result<f64> {
    kernels
        .iter()
        .zip(p.states())
        .zip(ys)
        .map(|((k, pi), y)| fenchel_coupling(k.as_ref(), pi, y))
        .sum()
}

/// Central differences of `t ↦ F(P, Y(t))` against `Σ tr[V(X)(X − P)]`.
pub fn fenchel_derivative(samples: usize, seed: u64, tol: f64) -> Result<Outcome> {
    let mut rng = rng_for(seed, 40);
    let h = 1e-4;
    let mut err = 0.0;
    let game = random_lifted_game(&mut rng, &[2, 3], 1.0)?;
    let cases = [
        (
            strict_ne_game(),
            vec![vn(), vn()],
            vec![primal_initial(&[0.2, 0.8]), primal_initial(&[0.8, 0.2])],
        ),
        (
            game,
            vec![vn(), tsallis_half()],
            vec![
                InitialCondition::Primal(random::density(&mut rng, 2)),
                InitialCondition::Primal(random::density(&mut rng, 3)),
            ],
        ),
    ];
    for (game, kernels, initial) in cases {
        let refs = [
            StateProfile::new(
                game.player_dims()
                    .iter()
                    .map(|&d| random::density(&mut rng, d))
                    .collect(),
            ),
            StateProfile::new(
                game.player_dims()
                    .iter()
                    .map(|&d| {
                        DensityMatrix::pure(
                            &random::ginibre(&mut rng, d, 1)
                                .iter()
                                .copied()
                                .collect::<Vec<_>>(),
                        )
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
        ];
        let traj = integrate(
            &game,
            &dual_config(
                kernels.clone(),
                initial,
                5.0,
                5.0 / samples as f64,
                Method::dopri_default(),
            ),
        )?;
        let scores = traj.dual_scores.as_ref().unwrap();
        for k in 1..traj.len() {
            let plus = dual_advance(&game, &kernels, &scores[k], h, 4)?;
            let minus = dual_advance(&game, &kernels, &scores[k], -h, 4)?;
            for p in &refs {
                let fd = (total_coupling(&kernels, p, &plus)?
                    - total_coupling(&kernels, p, &minus)?)
                    / (2.0 * h);
                worst(
                    &mut err,
                    (fd - variational_gap(&game, &traj.profile(k), p)?).abs(),
                );
            }
        }
    }
    Ok(Outcome::at_most(err, tol))
}

/// Random dual start for matching pennies whose states have Bloch
/// `|z| ≥ min_z` for both players; only the `σz` component oscillates, so this
/// guarantees the orbit swings by at least `√2·min_z` in Frobenius distance.
fn matching_pennies_start<R: Rng + ?Sized>(rng: &mut R, min_z: f64) -> Vec<InitialCondition> {
    let kernel = BuiltinKernel::VonNeumann;
    loop {
        let ys: Vec<HermitianMatrix> = (0..2).map(|_| random::hermitian(rng, 2, 0.8)).collect();
        let swings = ys.iter().all(|y| {
            mirror(&kernel, y)
                .and_then(|x| bloch_coords(&x))
                .map(|r| r[2].abs() >= min_z)
                .unwrap_or(false)
        });
        if swings {
            return ys.into_iter().map(InitialCondition::Dual).collect();
        }
    }
}

/// Fenchel drift against the uniform equilibrium of matching pennies at the
/// default tolerances and at 100× tighter ones, maximized over starts.
pub fn conservation_drifts(starts: usize, horizon: f64, seed: u64) -> Result<(f64, f64)> {
    let mut rng = rng_for(seed, 41);
    let game = matching_pennies();
    let p = StateProfile::uniform(game.player_dims());
    let kernels = vec![vn(), vn()];
    let mut drifts = (0.0f64, 0.0f64);
    for _ in 0..starts {
        let initial = matching_pennies_start(&mut rng, 0.2);
        for (slot, method) in [
            (0, Method::dopri_default()),
            (
                1,
                Method::Dopri45 {
                    rtol: 1e-11,
                    atol: 1e-13,
                },
            ),
        ] {
            let traj = integrate(
                &game,
                &dual_config(kernels.clone(), initial.clone(), horizon, 0.01, method),
            )?;
            let drift = fenchel_series(&kernels, &p, &traj)?.max_drift;
            if slot == 0 {
                drifts.0 = drifts.0.max(drift);
            } else {
                drifts.1 = drifts.1.max(drift);
            }
        }
    }
    Ok(drifts)
}

pub fn conservation(starts: usize, horizon: f64, seed: u64, tol: f64) -> Result<Outcome> {
    let (loose, tight) = conservation_drifts(starts, horizon, seed)?;
    let ratio = loose / tight.max(f64::MIN_POSITIVE);
    Ok(Outcome::at_most(loose, tol)
        .with_detail(format!("tight drift {tight:.2e}, ratio {ratio:.1}"))
        .and(
            ratio >= 10.0,
            "drift does not shrink tenfold at 100x tighter tolerances",
        ))
}

/// Closest return after departure beyond `r_out`, maximized over random
/// matching-pennies starts.
pub fn recurrence(starts: usize, horizon: f64, r_out: f64, seed: u64, tol: f64) -> Result<Outcome> {
    let mut rng = rng_for(seed, 42);
    let initials: Vec<_> = (0..starts)
        .map(|_| matching_pennies_start(&mut rng, 0.2))
        .collect();
    let game = matching_pennies();
    let reports = initials
        .into_par_iter()
        .map(|initial| {
            let traj = integrate(
                &game,
                &dual_config(
                    vec![vn(), vn()],
                    initial,
                    horizon,
                    0.01,
                    Method::dopri_default(),
                ),
            )?;
            Ok(recurrence_stats(&traj, r_out))
        })
        .collect::<Result<Vec<_>>>()?;
    let departed = reports.iter().all(|r| r.departed());
    let distance = reports
        .iter()
        .map(|r| r.return_distance)
        .fold(0.0, f64::max);
    Ok(Outcome::at_most(distance, tol).and(departed, "a run never left the r_out ball"))
}

/// Reference run of the strict-NE game from `diag(0.2, 0.8)` and
/// `diag(0.8, 0.2)` under the entropic kernel.
pub fn strict_ne_run(horizon: f64, stride: f64) -> Result<Trajectory> {
    integrate(
        &strict_ne_game(),
        &dual_config(
            vec![vn(), vn()],
            vec![primal_initial(&[0.2, 0.8]), primal_initial(&[0.8, 0.2])],
            horizon,
            stride,
            Method::dopri_default(),
        ),
    )
}

fn strict_ne_profile() -> StateProfile {
    StateProfile::new(vec![
        DensityMatrix::from_probabilities(&[1.0, 0.0]).unwrap(),
        DensityMatrix::from_probabilities(&[0.0, 1.0]).unwrap(),
    ])
}

/// Minimum over players of purity and of fidelity with the strict-NE lift at
/// the end of the run.
pub fn purity_collapse(traj: &Trajectory, tol: f64) -> Result<Outcome> {
    let last = traj.final_profile();
    let target = strict_ne_profile();
    let pur = last
        .states()
        .iter()
        .map(purity)
        .fold(f64::INFINITY, f64::min);
    let fid = last
        .states()
        .iter()
        .zip(target.states())
        .map(|(x, p)| fidelity_with_pure(x, p))
        .fold(f64::INFINITY, f64::min);
    Ok(Outcome::at_least(pur, tol)
        .with_detail(format!("fidelity {fid:.6}"))
        .and(fid >= tol, "state does not approach the strict equilibrium"))
}

/// `F(P*, Y(t))` along runs started within `radius` of the strict-NE lift;
/// reports the largest increase between records.
pub fn monotone_energy(
    runs: usize,
    radius: f64,
    horizon: f64,
    seed: u64,
    tol: f64,
) -> Result<Outcome> {
    let mut rng = rng_for(seed, 43);
    let game = strict_ne_game();
    let target = strict_ne_profile();
    let kernels = vec![vn(), vn()];
    let mut increase = f64::NEG_INFINITY;
    let mut decrease = 0.0f64;
    for _ in 0..runs {
        let initial: Vec<InitialCondition> = target
            .states()
            .iter()
            .map(|p| {
                let noise = random::density(&mut rng, 2);
                let eps = rng.random_range(0.2..1.0) * radius / p.distance(&noise);
                InitialCondition::Primal(
                    DensityMatrix::new(p.hermitian().scale(1.0 - eps).axpy(eps, noise.hermitian()))
                        .unwrap(),
                )
            })
            .collect();
        let traj = integrate(
            &game,
            &dual_config(
                kernels.clone(),
                initial,
                horizon,
                0.01,
                Method::dopri_default(),
            ),
        )?;
        let report = fenchel_series(&kernels, &target, &traj)?;
        increase = increase.max(report.max_increase());
        decrease = decrease.max(report.series[0] - report.series.last().unwrap());
    }
    Ok(Outcome::at_most(increase, tol)
        .with_detail(format!("largest total decrease {decrease:.3e}"))
        .and(decrease > 0.0, "energy did not decrease"))
}

/// `‖r‖ ≤ 1` and `‖r‖² = 2 tr(X²) − 1` for qubit states along runs.
pub fn bloch_norm(traj: &Trajectory, seed: u64, tol: f64) -> Result<Outcome> {
    let mut rng = rng_for(seed, 44);
    let mut states: Vec<DensityMatrix> = traj.states.iter().flatten().cloned().collect();
    states.extend((0..200).map(|_| random::density(&mut rng, 2)));
    states.push(DensityMatrix::from_probabilities(&[1.0, 0.0])?);
    let mut excess = f64::NEG_INFINITY;
    let mut identity = 0.0;
    for x in &states {
        let r = bloch_coords(x)?;
        let norm2 = r.iter().map(|v| v * v).sum::<f64>();
        worst(&mut excess, norm2.sqrt() - 1.0);
        worst(&mut identity, (norm2 - (2.0 * purity(x) - 1.0)).abs());
    }
    Ok(Outcome::at_most(excess, tol)
        .with_detail(format!("purity identity {identity:.2e}"))
        .and(identity <= tol, "Bloch norm does not track purity"))
}

pub fn vs_attractor(samples: usize, seed: u64) -> Result<Outcome> {
    let margin = vs_probe(&strict_ne_game(), &strict_ne_profile(), 0.1, samples, seed)?;
    Ok(Outcome {
        measured: margin,
        tolerance: 0.0,
        passed: margin < 0.0,
        detail: "sampled margin must be negative".into(),
    })
}

pub fn pure_stationarity(tol: f64) -> Result<Outcome> {
    let game = strict_ne_game();
    let mut residual = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            let mut pa = [0.0; 2];
            let mut pb = [0.0; 2];
            pa[a] = 1.0;
            pb[b] = 1.0;
            let profile = StateProfile::new(vec![
                DensityMatrix::from_probabilities(&pa)?,
                DensityMatrix::from_probabilities(&pb)?,
            ]);
            worst(
                &mut residual,
                stationarity_residual(&game, &[vn(), vn()], &profile)?,
            );
        }
    }
    Ok(Outcome::at_most(residual, tol))
}

// ---------------------------------------------------------------------------
// cli-level properties, in memory

pub fn csv_determinism() -> Result<Outcome> {
    let a = trajectory_csv(&strict_ne_run(5.0, 0.05)?)?;
    let b = trajectory_csv(&strict_ne_run(5.0, 0.05)?)?;
    let same = a == b;
    Ok(Outcome {
        measured: if same { 0.0 } else { 1.0 },
        tolerance: 0.0,
        passed: same,
        detail: format!("{} bytes", a.len()),
    })
}

pub fn json_roundtrip() -> Result<Outcome> {
    let traj = strict_ne_run(5.0, 0.05)?;
    let back = trajectory_from_json(&trajectory_to_json(&traj))?;
    let same = back.times == traj.times
        && back.states == traj.states
        && back.dual_scores == traj.dual_scores
        && back.gradients == traj.gradients;
    Ok(Outcome {
        measured: if same { 0.0 } else { 1.0 },
        tolerance: 0.0,
        passed: same,
        detail: String::new(),
    })
}

// ---------------------------------------------------------------------------

type CheckFn = Box<dyn Fn(u64, f64) -> Result<Outcome> + Send + Sync>;

fn checks() -> Vec<(&'static str, &'static str, CheckFn)> {
    let mut v: Vec<(&'static str, &'static str, CheckFn)> = Vec::new();
    macro_rules! check {
        ($module:expr, $name:expr, |$seed:ident, $s:ident| $body:expr) => {
            v.push(($module, $name, Box::new(move |$seed: u64, $s: f64| $body)));
        };
    }
    check!(
        "matrixcore",
        "eigendecomposition reconstruction and unitarity",
        |seed, s| eig_invariants(300, seed, 1e-10 * s)
    );
    check!(
        "matrixcore",
        "partial trace linear and trace-preserving",
        |seed, s| partial_trace_properties(30, seed, 1e-12 * s)
    );
    check!("matrixcore", "functional calculus composes", |seed, s| {
        func_calculus_composition(100, seed, 1e-9 * s)
    });
    check!("matrixcore", "tensor product associative", |seed, _s| {
        tensor_associativity(60, seed)
    });
    check!("game", "payoff linear in own state", |seed, s| {
        payoff_linearity(30, seed, 1e-10 * s)
    });
    check!("game", "payoff equals tr(X V)", |seed, s| {
        gradient_consistency(100, seed, 1e-10 * s)
    });
    check!("game", "gradient matches finite differences", |seed, s| {
        gradient_finite_differences(30, seed, 1e-6 * s)
    });
    check!("game", "gradient independent of own state", |seed, _s| {
        gradient_ignores_own_state(30, seed)
    });
    check!("game", "outcome probabilities normalized", |seed, s| {
        probability_normalization(50, seed, 1e-10 * s)
    });
    check!("game", "zero-sum payoffs cancel", |seed, s| {
        zero_sum_property(50, seed, 1e-10 * s)
    });
    check!(
        "regmirror",
        "mirror map optimal (brute force)",
        |seed, s| mirror_optimality(&standard_kernels(), 50, 5, seed, 1e-5 * s)
    );
    check!("regmirror", "mirror map shift invariant", |seed, s| {
        mirror_shift_invariance(60, seed, 1e-12 * s)
    });
    check!(
        "regmirror",
        "mirror image commutes with score",
        |seed, s| mirror_commutation(60, seed, 1e-9 * s)
    );
    check!("regmirror", "mirror map (1/K)-Lipschitz", |seed, s| {
        mirror_lipschitz(200, seed, 1e-9 * s)
    });
    check!("regmirror", "Fenchel coupling lower bound", |seed, s| {
        fenchel_lower_bound(200, seed, 1e-9 * s)
    });
    check!("regmirror", "Fenchel reciprocity", |seed, s| {
        fenchel_reciprocity(30, seed, 1e-8 * s)
    });
    check!(
        "regmirror",
        "conjugate gradient equals mirror map",
        |seed, s| envelope_identity(30, seed, 1e-6 * s)
    );
    check!("dynamics", "primal field matches dual flow", |_seed, s| {
        primal_dual_consistency(
            &strict_ne_game(),
            &[vn(), vn()],
            vec![primal_initial(&[0.2, 0.8]), primal_initial(&[0.8, 0.2])],
            10.0,
            100,
            1e-5 * s,
        )
    });
    check!(
        "dynamics",
        "primal field matches dual flow (Tsallis, random game)",
        |seed, s| {
            let mut rng = rng_for(seed, 35);
            let game = random_lifted_game(&mut rng, &[2, 3], 1.0)?;
            let initial = vec![
                InitialCondition::Primal(random::density(&mut rng, 2)),
                InitialCondition::Primal(random::density(&mut rng, 3)),
            ];
            primal_dual_consistency(&game, &[tsallis_half(), vn()], initial, 5.0, 50, 1e-5 * s)
        }
    );
    check!(
        "dynamics",
        "replicator field equals quadrature form",
        |seed, s| replicator_quadrature(100, seed, 1e-8 * s)
    );
    check!(
        "dynamics",
        "entropic field equals replicator field",
        |seed, s| entropic_specialization(100, seed, 1e-12 * s)
    );
    check!(
        "dynamics",
        "fields traceless",
        |seed, s| trace_conservation(100, seed, 1e-10 * s, 1e-12 * s)
    );
    check!(
        "dynamics",
        "support preserved on the interior",
        |seed, _s| rank_invariance(4, 10.0, seed)
    );
    check!(
        "dynamics",
        "full-rank equilibrium stationary",
        |_seed, s| equilibrium_stationarity(1e-10 * s)
    );
    check!("dynamics", "quotient field divergence-free", |seed, s| {
        let mut rng = rng_for(seed, 36);
        incompressibility(
            &[
                strict_ne_game(),
                random_lifted_game(&mut rng, &[2, 3], 1.0)?,
            ],
            20,
            seed,
            1e-6 * s,
        )
    });
    check!("analysis", "regret below bound", |seed, s| regret_bound(
        20,
        100.0,
        seed,
        1e-4 * s
    ));
    check!("analysis", "Fenchel derivative identity", |seed, s| {
        fenchel_derivative(50, seed, 1e-5 * s)
    });
    check!(
        "analysis",
        "Fenchel energy conserved in zero-sum play",
        |seed, s| conservation(2, 100.0, seed, 1e-6 * s)
    );
    check!(
        "analysis",
        "energy non-increasing near strict equilibrium",
        |seed, s| monotone_energy(5, 0.1, 10.0, seed, 1e-12 * s)
    );
    check!(
        "analysis",
        "purity collapse at strict equilibrium",
        |_seed, s| purity_collapse(&strict_ne_run(100.0, 0.1)?, 1.0 - 0.01 * s)
    );
    check!("analysis", "Bloch vectors inside the ball", |seed, s| {
        bloch_norm(&strict_ne_run(100.0, 0.1)?, seed, 1e-10 * s)
    });
    check!("analysis", "sampled variational stability", |seed, _s| {
        vs_attractor(500, seed)
    });
    check!("analysis", "pure profiles stationary", |_seed, s| {
        pure_stationarity(1e-8 * s)
    });
    check!("analysis", "orbits recur in zero-sum play", |seed, s| {
        recurrence(10, 200.0, 0.1, seed, 0.05 * s.min(2.0))
    });
    check!(
        "cli",
        "trajectory CSV byte-identical across runs",
        |_seed, _s| csv_determinism()
    );
    check!("cli", "trajectory JSON round-trips exactly", |_seed, _s| {
        json_roundtrip()
    });
    v
}

/// Runs every property in parallel and returns the results in a fixed order.
pub fn run_suite(options: VerifyOptions) -> Vec<CheckResult> {
    let scale = if options.loose { 10.0 } else { 1.0 };
    checks()
        .into_par_iter()
        .map(|(module, property, f)| {
            let started = Instant::now();
            let outcome = f(options.seed, scale).unwrap_or_else(|e| Outcome {
                measured: f64::NAN,
                tolerance: f64::NAN,
                passed: false,
                detail: format!("error: {e}"),
            });
            CheckResult {
                module,
                property,
                measured: outcome.measured,
                tolerance: outcome.tolerance,
                passed: outcome.passed,
                detail: outcome.detail,
                seconds: started.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

/// Fixed-width pass/fail table.
pub fn format_table(results: &[CheckResult]) -> String {
    let mut out = format!(
        "{:<6} {:<11} {:<52} {:>11} {:>11} {:>8}\n",
        "status", "module", "property", "measured", "tolerance", "seconds"
    );
    for r in results {
        out.push_str(&format!(
            "{:<6} {:<11} {:<52} {:>11.3e} {:>11.3e} {:>8.2}{}\n",
            if r.passed { "PASS" } else { "FAIL" },
            r.module,
            r.property,
            r.measured,
            r.tolerance,
            r.seconds,
            if r.detail.is_empty() {
                String::new()
            } else {
                format!("  {}", r.detail)
            }
        ));
    }
    out
}

impl From<Error> for Outcome {
    fn from(e: Error) -> Self {
        Outcome {
            measured: f64::NAN,
            tolerance: f64::NAN,
            passed: false,
            detail: format!("error: {e}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularizer::Kernel;

    #[derive(Debug)]
    struct Corrupted;

    impl Kernel for Corrupted {
        fn name(&self) -> String {
            "corrupted".into()
        }
        fn theta(&self, x: f64) -> f64 {
            BuiltinKernel::VonNeumann.theta(x)
        }
        fn dtheta(&self, x: f64) -> f64 {
            BuiltinKernel::VonNeumann.dtheta(x)
        }
        fn ddtheta(&self, x: f64) -> f64 {
            BuiltinKernel::VonNeumann.ddtheta(x)
        }
        fn inv_dtheta(&self, y: f64) -> f64 {
            (1.5 * (y - 1.0)).exp()
        }
        fn is_steep(&self) -> bool {
            true
        }
        fn strong_convexity(&self) -> f64 {
            1.0
        }
    }

    #[test]
    fn corrupted_kernel_fails_mirror_oracle() {
        let k: KernelRef = std::sync::Arc::new(Corrupted);
        let out = mirror_optimality(&[k], 10, 2, 3, 1e-5).unwrap();
        assert!(!out.passed, "{out:?}");
        let ok = mirror_optimality(&standard_kernels(), 9, 2, 3, 1e-5).unwrap();
        assert!(ok.passed, "{ok:?}");
    }

    #[test]
    fn cheap_properties_pass() {
        for out in [
            eig_invariants(60, 1, 1e-10),
            tensor_associativity(20, 1),
            gradient_consistency(10, 1, 1e-10),
            gradient_ignores_own_state(5, 1),
            replicator_quadrature(20, 1, 1e-8),
            equilibrium_stationarity(1e-10),
            pure_stationarity(1e-8),
        ] {
            let out = out.unwrap();
            assert!(out.passed, "{out:?}");
        }
    }

    #[test]
    fn table_lists_every_check() {
        let results = vec![CheckResult {
            module: "game",
            property: "x",
            measured: 1e-12,
            tolerance: 1e-10,
            passed: true,
            detail: String::new(),
            seconds: 0.1,
        }];
        let table = format_table(&results);
        assert_eq!(table.lines().count(), 2);
        assert!(table.lines().nth(1).unwrap().starts_with("PASS"));
    }
}
