//! Trace-function regularizers `h(X) = tr θ(X)` and the maps they induce on
//! the spectraplex: the regularized best response `Q`, the convex conjugate
//! `h*` and the Fenchel coupling.
//!
//! Every spectraplex problem here reduces to the eigenvalues of the score:
//! `Q(Y)` shares an eigenbasis with `Y`, and its spectrum solves the
//! simplex problem `max Σ y_k x_k − θ(x_k)`. That problem is solved by a
//! monotone search for the multiplier `λ` with `Σ_k [θ′⁻¹(y_k − λ)]₊ = 1`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matrix::{hermitian_eig, DensityMatrix, EigenDecomposition, HermitianMatrix};

/// Eigenvalue floor used wherever `θ′` or `θ″` is evaluated on a state.
pub const EIGEN_FLOOR: f64 = 1e-14;

const MAX_BISECTIONS: usize = 400;
const MAX_EXPANSIONS: usize = 200;

/// Scalar kernel `θ` on `[0, 1]` with `θ(0) = 0` and `θ″ ≥ K > 0`.
pub trait Kernel: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn theta(&self, x: f64) -> f64;
    fn dtheta(&self, x: f64) -> f64;
    fn ddtheta(&self, x: f64) -> f64;
    /// Inverse of `θ′` on its range; may return values below zero (clipped by
    /// callers) or `+∞` above the range.
    fn inv_dtheta(&self, y: f64) -> f64;
    /// `θ′(x) → −∞` as `x → 0⁺`.
    fn is_steep(&self) -> bool;
    /// Lower bound on `θ″` over `(0, 1]`.
    fn strong_convexity(&self) -> f64;
}

pub type KernelRef = Arc<dyn Kernel>;

/// The three standard kernels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BuiltinKernel {
    /// `θ(x) = x²/2`.
    Euclidean,
    /// `θ(x) = x log x`.
    VonNeumann,
    /// `θ(x) = (x − x^q) / (q(1 − q))`.
    Tsallis { q: f64, strong_convexity: f64 },
}

impl BuiltinKernel {
    pub fn tsallis(q: f64) -> Result<Self> {
        if !(q > 0.0 && q <= 2.0) || q == 1.0 || !q.is_finite() {
            return Err(Error::InvalidKernel(format!(
                "Tsallis exponent must lie in (0,1) or (1,2], got {q}"
            )));
        }
        // θ″(x) = x^(q−2); take the infimum over a log grid of [1e-14, 1].
        let k = (0..=1400)
            .map(|i| 10f64.powf(-14.0 * i as f64 / 1400.0).powf(q - 2.0))
            .fold(f64::INFINITY, f64::min);
        Ok(Self::Tsallis {
            q,
            strong_convexity: k,
        })
    }

    pub fn into_ref(self) -> KernelRef {
        Arc::new(self)
    }
}

/// Parses `"euclidean"`, `"vonneumann"` or `"tsallis:<q>"`.
pub fn builtin_kernel(name: &str) -> Result<BuiltinKernel> {
    match name.trim() {
        "euclidean" => Ok(BuiltinKernel::Euclidean),
        "vonneumann" => Ok(BuiltinKernel::VonNeumann),
        other => match other.strip_prefix("tsallis:") {
            Some(q) => {
                let q: f64 = q.parse().map_err(|_| {
                    Error::InvalidKernel(format!("bad Tsallis exponent in {other:?}"))
                })?;
                BuiltinKernel::tsallis(q)
            }
            None => Err(Error::InvalidKernel(format!("unknown kernel {other:?}"))),
        },
    }
}

impl Kernel for BuiltinKernel {
    fn name(&self) -> String {
        match self {
            Self::Euclidean => "euclidean".into(),
            Self::VonNeumann => "vonneumann".into(),
            Self::Tsallis { q, .. } => format!("tsallis:{q}"),
        }
    }

    fn theta(&self, x: f64) -> f64 {
        match *self {
            Self::Euclidean => 0.5 * x * x,
            Self::VonNeumann => {
                if x <= 0.0 {
                    0.0
                } else {
                    x * x.ln()
                }
            }
            Self::Tsallis { q, .. } => {
                if x <= 0.0 {
                    0.0
                } else {
                    (x - x.powf(q)) / (q * (1.0 - q))
                }
            }
        }
    }

    fn dtheta(&self, x: f64) -> f64 {
        match *self {
            Self::Euclidean => x,
            Self::VonNeumann => 1.0 + x.ln(),
            Self::Tsallis { q, .. } => (1.0 - q * x.powf(q - 1.0)) / (q * (1.0 - q)),
        }
    }

    fn ddtheta(&self, x: f64) -> f64 {
        match *self {
            Self::Euclidean => 1.0,
            Self::VonNeumann => 1.0 / x,
            Self::Tsallis { q, .. } => x.powf(q - 2.0),
        }
    }

    fn inv_dtheta(&self, y: f64) -> f64 {
        match *self {
            Self::Euclidean => y,
            Self::VonNeumann => (y - 1.0).exp(),
            Self::Tsallis { q, .. } => {
                // x^(q−1) = (1 − q(1−q) y) / q
                let base = (1.0 - q * (1.0 - q) * y) / q;
                if base <= 0.0 {
                    if q < 1.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    }
                } else {
                    base.powf(1.0 / (q - 1.0))
                }
            }
        }
    }

    fn is_steep(&self) -> bool {
        match *self {
            Self::Euclidean => false,
            Self::VonNeumann => true,
            Self::Tsallis { q, .. } => q < 1.0,
        }
    }

    fn strong_convexity(&self) -> f64 {
        match *self {
            Self::Euclidean | Self::VonNeumann => 1.0,
            Self::Tsallis {
                strong_convexity, ..
            } => strong_convexity,
        }
    }
}

fn clipped_inverse<K: Kernel + ?Sized>(kernel: &K, y: f64) -> f64 {
    let x = kernel.inv_dtheta(y);
    if x.is_nan() {
        0.0
    } else {
        x.max(0.0)
    }
}

fn mass<K: Kernel + ?Sized>(kernel: &K, y: &[f64], lambda: f64) -> f64 {
    y.iter()
        .map(|&yk| clipped_inverse(kernel, yk - lambda))
        .sum()
}

/// `argmax_{x ∈ Δ} Σ_k y_k x_k − θ(x_k)`.
pub fn simplex_argmax<K: Kernel + ?Sized>(kernel: &K, y: &[f64]) -> Result<Vec<f64>> {
    let d = y.len();
    if d == 0 {
        return Err(Error::DimensionMismatch("empty score vector".into()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if d == 1 {
        return Ok(vec![1.0]);
    }
    let ymax = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // At lo the leading coordinate alone carries unit mass; at hi no
    // coordinate exceeds 1/d.
    let mut lo = ymax - kernel.dtheta(1.0);
    let mut hi = ymax - kernel.dtheta(1.0 / d as f64);
    if !lo.is_finite() || !hi.is_finite() || hi < lo {
        return Err(Error::InvalidKernel(format!(
            "kernel {} has a degenerate derivative on [1/d, 1]",
            kernel.name()
        )));
    }
    let mut width = (hi - lo).max(1.0);
    let mut expansions = 0;
    while mass(kernel, y, lo) < 1.0 {
        lo -= width;
        width *= 2.0;
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            return Err(Error::RootFinding(expansions));
        }
    }
    while mass(kernel, y, hi) > 1.0 {
        hi += width;
        width *= 2.0;
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            return Err(Error::RootFinding(expansions));
        }
    }
    let mut lambda = 0.5 * (lo + hi);
    for _ in 0..MAX_BISECTIONS {
        lambda = 0.5 * (lo + hi);
        let g = mass(kernel, y, lambda) - 1.0;
        if g.abs() <= 1e-15 || lambda <= lo || lambda >= hi {
            break;
        }
        if g > 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
    }
    let mut x: Vec<f64> = y
        .iter()
        .map(|&yk| clipped_inverse(kernel, yk - lambda))
        .collect();
    let total: f64 = x.iter().sum();
    if !total.is_finite() || (total - 1.0).abs() > 1e-10 {
        return Err(Error::RootFinding(MAX_BISECTIONS));
    }
    for v in &mut x {
        *v /= total;
    }
    Ok(x)
}

/// Spectral form of the mirror image: the eigendecomposition of `Y` and the
/// probability vector placed on its eigenvectors.
#[derive(Clone, Debug)]
pub struct MirrorSpectrum {
    pub eigen: EigenDecomposition,
    pub probabilities: Vec<f64>,
}

impl MirrorSpectrum {
    pub fn state(&self) -> DensityMatrix {
        DensityMatrix::new_unchecked(self.eigen.compose(&self.probabilities))
    }
}

pub fn mirror_spectrum<K: Kernel + ?Sized>(
    kernel: &K,
    y: &HermitianMatrix,
) -> Result<MirrorSpectrum> {
    let eigen = hermitian_eig(y)?;
    let probabilities = simplex_argmax(kernel, &eigen.eigenvalues)?;
    Ok(MirrorSpectrum {
        eigen,
        probabilities,
    })
}

/// Regularized best response `Q(Y) = argmax_X tr(YX) − tr θ(X)`.
pub fn mirror<K: Kernel + ?Sized>(kernel: &K, y: &HermitianMatrix) -> Result<DensityMatrix> {
    Ok(mirror_spectrum(kernel, y)?.state())
}

/// `h*(Y) = tr(Y Q(Y)) − tr θ(Q(Y))`.
pub fn conjugate<K: Kernel + ?Sized>(kernel: &K, y: &HermitianMatrix) -> Result<f64> {
    let s = mirror_spectrum(kernel, y)?;
    Ok(s.eigen
        .eigenvalues
        .iter()
        .zip(&s.probabilities)
        .map(|(&yk, &xk)| yk * xk - kernel.theta(xk))
        .sum())
}

/// `h(P) = tr θ(P)`, with eigenvalues clipped at zero.
pub fn regularizer_value<K: Kernel + ?Sized>(kernel: &K, p: &DensityMatrix) -> Result<f64> {
    let e = p.eigen()?;
    Ok(e.eigenvalues
        .iter()
        .map(|&x| kernel.theta(x.max(0.0)))
        .sum())
}

/// `F(P, Y) = h(P) + h*(Y) − tr(PY)`.
pub fn fenchel_coupling<K: Kernel + ?Sized>(
    kernel: &K,
    p: &DensityMatrix,
    y: &HermitianMatrix,
) -> Result<f64> {
    if p.dim() != y.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state has dimension {} but score has dimension {}",
            p.dim(),
            y.dim()
        )));
    }
    let h = regularizer_value(kernel, p)?;
    let value = h + conjugate(kernel, y)? - p.hermitian().inner(y);
    if !value.is_finite() {
        return Err(Error::Domain(value));
    }
    Ok(value)
}

/// `θ′(X)` with eigenvalues floored at [`EIGEN_FLOOR`]; a score whose mirror
/// image is `X` for interior `X`.
pub fn dual_of<K: Kernel + ?Sized>(kernel: &K, x: &DensityMatrix) -> Result<HermitianMatrix> {
    let e = x.eigen()?;
    let values: Vec<f64> = e
        .eigenvalues
        .iter()
        .map(|&v| kernel.dtheta(v.max(EIGEN_FLOOR)))
        .collect();
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(*bad));
    }
    Ok(e.compose(&values))
}

/// `|d·θ(1/d) − θ(1)|`: the range of `h` over the `d`-dimensional spectraplex.
pub fn regularizer_range<K: Kernel + ?Sized>(kernel: &K, d: usize) -> f64 {
    let d = d as f64;
    (d * kernel.theta(1.0 / d) - kernel.theta(1.0)).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{c, commutator_norm, CMatrix};
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn all_kernels() -> Vec<BuiltinKernel> {
        vec![
            BuiltinKernel::Euclidean,
            BuiltinKernel::VonNeumann,
            BuiltinKernel::tsallis(0.5).unwrap(),
            BuiltinKernel::tsallis(1.5).unwrap(),
            BuiltinKernel::tsallis(2.0).unwrap(),
        ]
    }

    #[test]
    fn parse_names() {
        assert_eq!(
            builtin_kernel("euclidean").unwrap(),
            BuiltinKernel::Euclidean
        );
        assert_eq!(
            builtin_kernel("vonneumann").unwrap(),
            BuiltinKernel::VonNeumann
        );
        let t = builtin_kernel("tsallis:0.5").unwrap();
        assert_eq!(t.name(), "tsallis:0.5");
        assert!(builtin_kernel("tsallis:1").is_err());
        assert!(builtin_kernel("tsallis:2.5").is_err());
        assert!(builtin_kernel("tsallis:0").is_err());
        assert!(builtin_kernel("shannon").is_err());
    }

    #[test]
    fn kernel_values() {
        let vn = BuiltinKernel::VonNeumann;
        assert_eq!(vn.theta(1.0), 0.0);
        for x in [0.1, 0.5, 0.9] {
            assert!((vn.dtheta(x) - (1.0 + f64::ln(x))).abs() < 1e-15);
        }
        assert_eq!(BuiltinKernel::Euclidean.ddtheta(0.3), 1.0);
        let t = BuiltinKernel::tsallis(0.5).unwrap();
        assert!((t.theta(0.25) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn kernel_invariants() {
        for k in all_kernels() {
            assert_eq!(k.theta(0.0), 0.0, "{}", k.name());
            let kk = k.strong_convexity();
            for i in 1..=1000 {
                let x = i as f64 / 1000.0;
                assert!(k.ddtheta(x) >= kk * (1.0 - 1e-12), "{} at {x}", k.name());
                let back = k.inv_dtheta(k.dtheta(x));
                assert!((back - x).abs() < 1e-9, "{} at {x}: {back}", k.name());
            }
            // steepness: θ′ keeps falling without bound near zero
            let drop = k.dtheta(1.0) - k.dtheta(1e-12);
            if k.is_steep() {
                assert!(
                    drop > 20.0 && k.dtheta(1e-24) < k.dtheta(1e-12) - 20.0,
                    "{}",
                    k.name()
                );
            } else {
                assert!(k.dtheta(0.0).is_finite(), "{}", k.name());
            }
        }
    }

    #[test]
    fn simplex_examples() {
        let vn = BuiltinKernel::VonNeumann;
        let x = simplex_argmax(&vn, &[0.0, 0.0]).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-15 && (x[1] - 0.5).abs() < 1e-15);
        let x = simplex_argmax(&vn, &[3f64.ln(), 0.0]).unwrap();
        assert!((x[0] - 0.75).abs() < 1e-14 && (x[1] - 0.25).abs() < 1e-14);
        let x = simplex_argmax(&BuiltinKernel::Euclidean, &[2.0, 0.5]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && x[1].abs() < 1e-14);
    }

    #[test]
    fn simplex_kkt() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in all_kernels() {
            for _ in 0..50 {
                let y: Vec<f64> = random::hermitian(&mut rng, 5, 2.0)
                    .matrix()
                    .diagonal()
                    .iter()
                    .map(|z| z.re)
                    .collect();
                let x = simplex_argmax(&k, &y).unwrap();
                assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-10);
                let support: Vec<usize> = (0..5).filter(|&i| x[i] > 1e-9).collect();
                let lambdas: Vec<f64> = support.iter().map(|&i| y[i] - k.dtheta(x[i])).collect();
                for l in &lambdas {
                    assert!((l - lambdas[0]).abs() < 1e-6, "{}: {lambdas:?}", k.name());
                }
                for i in 0..5 {
                    if x[i] <= 1e-9 && !k.is_steep() {
                        // inactive coordinates cannot profit from mass
                        assert!(y[i] - k.dtheta(0.0) <= lambdas[0] + 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn extreme_scores_stay_normalized() {
        let vn = BuiltinKernel::VonNeumann;
        let x = simplex_argmax(&vn, &[500.0, -500.0, 0.0]).unwrap();
        assert_eq!(x[0], 1.0);
        let x = simplex_argmax(&BuiltinKernel::tsallis(0.5).unwrap(), &[1e4, 0.0]).unwrap();
        assert!(x[0] > 0.999 && x[1] > 0.0);
    }

    #[test]
    fn mirror_examples() {
        for k in all_kernels() {
            let q = mirror(&k, &HermitianMatrix::zeros(3)).unwrap();
            assert!(q.distance(&DensityMatrix::maximally_mixed(3)) < 1e-14);
        }
        let q = mirror(
            &BuiltinKernel::VonNeumann,
            &HermitianMatrix::from_real_diagonal(&[3f64.ln(), 0.0]),
        )
        .unwrap();
        assert!(q.distance(&DensityMatrix::from_probabilities(&[0.75, 0.25]).unwrap()) < 1e-14);

        let y = HermitianMatrix::new(CMatrix::from_row_slice(
            2,
            2,
            &[c(0.0, 0.0), c(1.5, 0.0), c(1.5, 0.0), c(0.0, 0.0)],
        ))
        .unwrap();
        let q = mirror(&BuiltinKernel::Euclidean, &y).unwrap();
        let want = CMatrix::from_element(2, 2, c(0.5, 0.0));
        assert!(crate::matrix::frobenius(&(q.matrix() - want)) < 1e-14);
    }

    #[test]
    fn mirror_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for k in all_kernels() {
            for _ in 0..20 {
                let y = random::hermitian(&mut rng, 4, 1.5);
                let q = mirror(&k, &y).unwrap();
                assert!(commutator_norm(q.matrix(), y.matrix()) <= 1e-9);
                for shift in [-10.0, 0.3, 7.0] {
                    let qs = mirror(&k, &y.shift(shift)).unwrap();
                    assert!(qs.distance(&q) <= 1e-12, "{} shift {shift}", k.name());
                }
                if k.is_steep() {
                    assert!(q.eigen().unwrap().min_eigenvalue() > 0.0);
                }
                let y2 = y.add(&random::hermitian(&mut rng, 4, 0.3));
                let q2 = mirror(&k, &y2).unwrap();
                assert!(q.distance(&q2) <= y.distance(&y2) / k.strong_convexity() + 1e-9);
            }
        }
    }

    #[test]
    fn tsallis_two_matches_euclidean() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let t2 = BuiltinKernel::tsallis(2.0).unwrap();
        for _ in 0..20 {
            let y = random::hermitian(&mut rng, 3, 1.0);
            // θ_2(x) = x²/2 − x/2: the affine part shifts scores by a multiple of I
            let a = mirror(&t2, &y).unwrap();
            let b = mirror(&BuiltinKernel::Euclidean, &y).unwrap();
            assert!(a.distance(&b) < 1e-12);
        }
    }

    #[test]
    fn conjugate_examples() {
        let z = HermitianMatrix::zeros(2);
        assert!((conjugate(&BuiltinKernel::VonNeumann, &z).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((conjugate(&BuiltinKernel::Euclidean, &z).unwrap() + 0.25).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for k in all_kernels().into_iter().filter(|k| k.is_steep()) {
            let p = random::density_with_floor(&mut rng, 3, 0.05);
            let y = dual_of(&k, &p).unwrap();
            let e = p.eigen().unwrap();
            let want: f64 = e
                .eigenvalues
                .iter()
                .map(|&x| x * k.dtheta(x) - k.theta(x))
                .sum();
            assert!((conjugate(&k, &y).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn fenchel_examples() {
        let vn = BuiltinKernel::VonNeumann;
        let y = HermitianMatrix::from_real_diagonal(&[3f64.ln(), 0.0]);
        let q = mirror(&vn, &y).unwrap();
        assert!(fenchel_coupling(&vn, &q, &y).unwrap().abs() < 1e-14);

        let p = DensityMatrix::maximally_mixed(2);
        let f = fenchel_coupling(&vn, &p, &y).unwrap();
        let l3 = 3f64.ln();
        let want =
            -2f64.ln() + (0.75 * l3 - (0.75 * 0.75f64.ln() + 0.25 * 0.25f64.ln())) - l3 / 2.0;
        assert!((f - want).abs() < 1e-14);
        assert!(f >= 0.5 * q.distance(&p).powi(2));

        for k in all_kernels() {
            let y = HermitianMatrix::from_real_diagonal(&[0.4, -0.2, 0.1]);
            let q = mirror(&k, &y).unwrap();
            assert!(fenchel_coupling(&k, &q, &y.shift(3.7)).unwrap().abs() < 1e-13);
        }
    }

    #[test]
    fn regret_ranges() {
        assert!((regularizer_range(&BuiltinKernel::VonNeumann, 2) - 2f64.ln()).abs() < 1e-15);
        assert!((regularizer_range(&BuiltinKernel::Euclidean, 2) - 0.25).abs() < 1e-15);
    }
}
