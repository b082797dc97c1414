//! Reference computations that reach the same quantities as the production
//! code by unrelated routes: brute-force optimization, quadrature and finite
//! differences.

use crate::error::Result;
use crate::matrix::{c, func_calculus, hermitian_eig, CMatrix, DensityMatrix, HermitianMatrix};
use crate::regularizer::{Kernel, EIGEN_FLOOR};

/// Euclidean projection of `v` onto the probability simplex (sort-based).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumulative += uj;
        let t = (cumulative - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Frobenius-nearest density matrix to a Hermitian matrix.
pub fn project_spectraplex(h: &HermitianMatrix) -> Result<DensityMatrix> {
    let e = hermitian_eig(h)?;
    let p = project_simplex(&e.eigenvalues);
    DensityMatrix::new(e.compose(&p))
}

/// `tr(Y X) − tr θ(X)`.
pub fn mirror_objective<K: Kernel + ?Sized>(
    kernel: &K,
    y: &HermitianMatrix,
    x: &DensityMatrix,
) -> Result<f64> {
    let e = x.eigen()?;
    let h: f64 = e
        .eigenvalues
        .iter()
        .map(|&v| kernel.theta(v.max(0.0)))
        .sum();
    Ok(y.inner(x.hermitian()) - h)
}

fn ascent_direction<K: Kernel + ?Sized>(
    kernel: &K,
    y: &HermitianMatrix,
    x: &HermitianMatrix,
) -> Result<HermitianMatrix> {
    Ok(y.sub(&func_calculus(x, |v| kernel.dtheta(v.max(EIGEN_FLOOR)))?))
}

/// Accelerated projected gradient ascent with backtracking and restarts for
/// `max tr(YX) − tr θ(X)` over the spectraplex, started from `start`.
///
/// Every iterate is a convex combination of projections, so it stays a
/// density matrix and `θ′` is only ever evaluated on the spectraplex.
pub fn brute_force_mirror<K: Kernel + ?Sized>(
    kernel: &K,
    y: &HermitianMatrix,
    start: &DensityMatrix,
    max_iters: usize,
) -> Result<DensityMatrix> {
    let mut x = start.hermitian().clone();
    let mut v = x.clone();
    let mut fx = mirror_objective(kernel, y, start)?;
    let mut gamma = 1.0f64;
    let mut step = 1.0f64;
    let mut still = 0;
    for _ in 0..max_iters {
        let probe = x.scale(1.0 - gamma).axpy(gamma, &v);
        let probe_state = DensityMatrix::new_unchecked(probe.clone());
        let f_probe = mirror_objective(kernel, y, &probe_state)?;
        let grad = ascent_direction(kernel, y, &probe)?;
        let mut next = None;
        for _ in 0..100 {
            let v_new = project_spectraplex(&v.axpy(step / gamma, &grad))?;
            let x_new = x.scale(1.0 - gamma).axpy(gamma, v_new.hermitian());
            let delta = x_new.sub(&probe);
            let f_new = mirror_objective(kernel, y, &DensityMatrix::new_unchecked(x_new.clone()))?;
            let model = f_probe + grad.inner(&delta) - delta.inner(&delta) / (2.0 * step);
            if f_new >= model - 1e-15 * (1.0 + f_probe.abs()) {
                next = Some((v_new.hermitian().clone(), x_new, f_new));
                break;
            }
            step *= 0.5;
        }
        let Some((v_new, x_new, f_new)) = next else {
            break;
        };
        let progressed = f_new - fx > 1e-16 * (1.0 + fx.abs());
        still = if progressed { 0 } else { still + 1 };
        if still >= 50 {
            break;
        }
        if f_new < fx {
            // Momentum overshot: restart from the best point.
            v = x.clone();
            gamma = 1.0;
            continue;
        }
        x = x_new;
        v = v_new;
        fx = f_new;
        gamma = 0.5 * ((gamma.powi(4) + 4.0 * gamma * gamma).sqrt() - gamma * gamma);
        step = (step * 1.2).min(1e4);
        if step / gamma > 1e6 {
            v = x.clone();
            gamma = 1.0;
        }
    }
    DensityMatrix::new(x)
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(0.5 * (1.0 - x));
        weights.push(1.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// `∫₀¹ X^{1−s} V X^s ds − tr(XV) X` by Gauss–Legendre quadrature.
pub fn replicator_by_quadrature(
    x: &DensityMatrix,
    v: &HermitianMatrix,
    nodes: usize,
) -> Result<HermitianMatrix> {
    let (s, w) = gauss_legendre(nodes);
    let mut acc = CMatrix::zeros(x.dim(), x.dim());
    for (&sk, &wk) in s.iter().zip(&w) {
        let left = func_calculus(x.hermitian(), |l| l.max(0.0).powf(1.0 - sk))?;
        let right = func_calculus(x.hermitian(), |l| l.max(0.0).powf(sk))?;
        acc += (left.matrix() * v.matrix() * right.matrix()) * c(wk, 0.0);
    }
    let mean = x.hermitian().inner(v);
    Ok(HermitianMatrix::hermitize(acc).axpy(-mean, x.hermitian()))
}

/// Central-difference divergence `Σ_j ∂F_j/∂z_j` of a vector field.
pub fn divergence<F>(field: F, z: &[f64], h: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut point = z.to_vec();
    let mut div = 0.0;
    for j in 0..z.len() {
        point[j] = z[j] + h;
        let plus = field(&point)?[j];
        point[j] = z[j] - h;
        let minus = field(&point)?[j];
        point[j] = z[j];
        div += (plus - minus) / (2.0 * h);
    }
    Ok(div)
}

/// Hermitian basis directions `E` with `tr(Q E)` equal to, in order, the
/// diagonal of `Q` then `2 Re Q_ab` and `2 Im Q_ab` for `a < b`.
pub fn hermitian_basis(d: usize) -> Vec<HermitianMatrix> {
    let mut out = Vec::with_capacity(d * d);
    for a in 0..d {
        let mut m = CMatrix::zeros(d, d);
        m[(a, a)] = c(1.0, 0.0);
        out.push(HermitianMatrix::hermitize(m));
    }
    for a in 0..d {
        for b in a + 1..d {
            let mut re = CMatrix::zeros(d, d);
            re[(a, b)] = c(1.0, 0.0);
            re[(b, a)] = c(1.0, 0.0);
            out.push(HermitianMatrix::hermitize(re));
            let mut im = CMatrix::zeros(d, d);
            im[(a, b)] = c(0.0, 1.0);
            im[(b, a)] = c(0.0, -1.0);
            out.push(HermitianMatrix::hermitize(im));
        }
    }
    out
}
