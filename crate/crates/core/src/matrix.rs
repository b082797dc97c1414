//! Complex Hermitian linear algebra.
//!
//! Dense `nalgebra` matrices over `Complex64` back every type here. The
//! newtypes [`HermitianMatrix`] and [`DensityMatrix`] carry their invariants
//! from construction onwards; arithmetic that is Hermitian in exact arithmetic
//! goes through [`HermitianMatrix::hermitize`] so roundoff never breaks them.
//!
//! Joint index convention for tensor products: factor 0 is the most
//! significant digit, so `(A ⊗ B)[(a·rB + r), (b·cB + c)] = A[a,b]·B[r,c]`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Relative Hermiticity tolerance applied at construction.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Trace and positivity tolerance for density matrices.
pub const DENSITY_TOL: f64 = 1e-10;

const EIG_MAX_SWEEPS: usize = 10_000;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Validates squareness, finiteness and Hermiticity, then stores the
    /// exactly Hermitian part `(M + M†)/2`.
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "expected a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut residual: f64 = 0.0;
        for a in 0..m.nrows() {
            for b in a..m.ncols() {
                residual = residual.max((m[(a, b)] - m[(b, a)].conj()).norm());
            }
        }
        let allowed = HERMITIAN_TOL * scale;
        if residual > allowed {
            return Err(Error::NotHermitian { residual, allowed });
        }
        Ok(Self::hermitize(m))
    }

    /// Takes the Hermitian part without validation; for results that are
    /// Hermitian up to roundoff.
    pub fn hermitize(m: CMatrix) -> Self {
        let adj = m.adjoint();
        Self((m + adj) * c(0.5, 0.0))
    }

    pub fn zeros(d: usize) -> Self {
        Self(CMatrix::zeros(d, d))
    }

    pub fn identity(d: usize) -> Self {
        Self(CMatrix::identity(d, d))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        Self(CMatrix::from_fn(d, d, |a, b| {
            if a == b {
                c(diag[a], 0.0)
            } else {
                c(0.0, 0.0)
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|a| self.0[(a, a)].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `tr(self · other)`, real for Hermitian arguments.
    pub fn inner(&self, other: &HermitianMatrix) -> f64 {
        trace_product(&self.0, &other.0).re
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * c(s, 0.0))
    }

    pub fn add(&self, other: &HermitianMatrix) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &HermitianMatrix) -> Self {
        Self(&self.0 - &other.0)
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &HermitianMatrix) -> Self {
        Self(&self.0 + &other.0 * c(s, 0.0))
    }

    pub fn shift(&self, s: f64) -> Self {
        let mut m = self.0.clone();
        for a in 0..self.dim() {
            m[(a, a)] += c(s, 0.0);
        }
        Self(m)
    }

    /// `self − (tr self / d)·I`.
    pub fn traceless_part(&self) -> Self {
        self.shift(-self.trace() / self.dim() as f64)
    }

    pub fn distance(&self, other: &HermitianMatrix) -> f64 {
        self.sub(other).frobenius_norm()
    }

    pub fn max_abs_entry_diff(&self, other: &HermitianMatrix) -> f64 {
        (&self.0 - &other.0)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Real coordinates of the `d²`-dimensional space of Hermitian matrices:
    /// the diagonal, then `(re, im)` of each strictly upper entry in row order.
    pub fn to_coords(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(d * d);
        self.write_coords(&mut out);
        out
    }

    pub fn write_coords(&self, out: &mut Vec<f64>) {
        let d = self.dim();
        for a in 0..d {
            out.push(self.0[(a, a)].re);
        }
        for a in 0..d {
            for b in (a + 1)..d {
                out.push(self.0[(a, b)].re);
                out.push(self.0[(a, b)].im);
            }
        }
    }

    pub fn from_coords(d: usize, coords: &[f64]) -> Self {
        assert_eq!(coords.len(), d * d, "coordinate length must be d^2");
        let mut m = CMatrix::zeros(d, d);
        for a in 0..d {
            m[(a, a)] = c(coords[a], 0.0);
        }
        let mut k = d;
        for a in 0..d {
            for b in (a + 1)..d {
                let z = c(coords[k], coords[k + 1]);
                m[(a, b)] = z;
                m[(b, a)] = z.conj();
                k += 2;
            }
        }
        Self(m)
    }

    /// Coordinates of a traceless matrix: the first `d − 1` diagonal entries
    /// (the last is minus their sum), then the off-diagonal pairs.
    pub fn to_traceless_coords(&self) -> Vec<f64> {
        let mut full = self.to_coords();
        full.remove(self.dim() - 1);
        full
    }

    pub fn from_traceless_coords(d: usize, coords: &[f64]) -> Self {
        assert_eq!(coords.len(), d * d - 1, "coordinate length must be d^2 - 1");
        let mut full = Vec::with_capacity(d * d);
        full.extend_from_slice(&coords[..d - 1]);
        full.push(-coords[..d - 1].iter().sum::<f64>());
        full.extend_from_slice(&coords[d - 1..]);
        Self::from_coords(d, &full)
    }
}

/// A point of the spectraplex: Hermitian, positive semi-definite, unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(HermitianMatrix);

impl DensityMatrix {
    pub fn new(h: HermitianMatrix) -> Result<Self> {
        let tr = h.trace();
        if (tr - 1.0).abs() > DENSITY_TOL {
            return Err(Error::NotDensity(format!("trace {tr} differs from 1")));
        }
        let eig = hermitian_eig(&h)?;
        let min = eig.min_eigenvalue();
        if min < -DENSITY_TOL {
            return Err(Error::NotDensity(format!(
                "minimum eigenvalue {min:e} is negative"
            )));
        }
        Ok(Self(h))
    }

    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        Self::new(HermitianMatrix::new(m)?)
    }

    /// Skips validation. Callers guarantee the invariants (mirror outputs,
    /// spectral reconstructions from a probability vector).
    pub(crate) fn new_unchecked(h: HermitianMatrix) -> Self {
        Self(h)
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self(HermitianMatrix::identity(d).scale(1.0 / d as f64))
    }

    pub fn from_probabilities(p: &[f64]) -> Result<Self> {
        Self::new(HermitianMatrix::from_real_diagonal(p))
    }

    /// `|ψ⟩⟨ψ|` for the normalized vector `psi`.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotDensity(
                "state vector has zero or non-finite norm".into(),
            ));
        }
        let d = psi.len();
        let m = CMatrix::from_fn(d, d, |a, b| psi[a] * psi[b].conj() / (norm * norm));
        Ok(Self(HermitianMatrix::hermitize(m)))
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.0
    }

    pub fn matrix(&self) -> &CMatrix {
        self.0.matrix()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn distance(&self, other: &DensityMatrix) -> f64 {
        self.0.distance(&other.0)
    }

    pub fn eigen(&self) -> Result<EigenDecomposition> {
        hermitian_eig(&self.0)
    }
}

/// Spectral data of a Hermitian matrix. Eigenvalues descend; column `k` of
/// `eigenvectors` is the unit eigenvector for `eigenvalues[k]`, phase-fixed
/// so its first non-negligible component is real and positive.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    /// `U diag(values) U†`.
    pub fn compose(&self, values: &[f64]) -> HermitianMatrix {
        let u = &self.eigenvectors;
        let d = self.dim();
        let mut scaled = u.clone();
        for k in 0..d {
            let s = c(values[k], 0.0);
            for a in 0..d {
                scaled[(a, k)] *= s;
            }
        }
        HermitianMatrix::hermitize(scaled * u.adjoint())
    }

    /// Expresses `m` in this eigenbasis: `U† m U`.
    pub fn to_basis(&self, m: &CMatrix) -> CMatrix {
        self.eigenvectors.adjoint() * m * &self.eigenvectors
    }

    /// Maps an eigenbasis matrix back: `U m U†`.
    pub fn from_basis(&self, m: &CMatrix) -> CMatrix {
        &self.eigenvectors * m * self.eigenvectors.adjoint()
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.compose(&self.eigenvalues)
    }

    pub fn top_projector(&self) -> DensityMatrix {
        let psi: Vec<Complex64> = self.eigenvectors.column(0).iter().copied().collect();
        DensityMatrix::pure(&psi).expect("eigenvectors have unit norm")
    }
}

pub fn hermitian_eig(h: &HermitianMatrix) -> Result<EigenDecomposition> {
    let d = h.dim();
    let eig = SymmetricEigen::try_new(h.matrix().clone(), f64::EPSILON, EIG_MAX_SWEEPS)
        .ok_or(Error::EigenConvergence)?;
    let mut order: Vec<usize> = (0..d).collect();
    // Stable sort keeps the solver's (deterministic) order among ties.
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = CMatrix::zeros(d, d);
    for (k, &i) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(i);
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let pivot = col
            .iter()
            .find(|z| z.norm() > 1e-12 * norm)
            .copied()
            .unwrap_or(c(1.0, 0.0));
        let phase = pivot.conj() / (pivot.norm() * norm);
        for a in 0..d {
            eigenvectors[(a, k)] = col[a] * phase;
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// `Σ_k f(x_k) u_k u_k†` over the spectrum of `h`.
pub fn func_calculus(h: &HermitianMatrix, f: impl Fn(f64) -> f64) -> Result<HermitianMatrix> {
    let eig = hermitian_eig(h)?;
    let mut values = Vec::with_capacity(eig.dim());
    for &x in &eig.eigenvalues {
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::Domain(x));
        }
        values.push(v);
    }
    Ok(eig.compose(&values))
}

pub fn tensor_product(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn tensor_product_all<'a>(factors: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    factors
        .into_iter()
        .fold(CMatrix::identity(1, 1), |acc, f| acc.kronecker(f))
}

/// Traces out every factor except `keep` of a square matrix on `⊗ dims`.
pub fn partial_trace_general(m: &CMatrix, dims: &[usize], keep: usize) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if m.nrows() != total || m.ncols() != total {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{} but factor dimensions {:?} multiply to {}",
            m.nrows(),
            m.ncols(),
            dims,
            total
        )));
    }
    if keep >= dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "factor {keep} out of range for {} factors",
            dims.len()
        )));
    }
    let dk = dims[keep];
    let left: usize = dims[..keep].iter().product();
    let right: usize = dims[keep + 1..].iter().product();
    let mut out = CMatrix::zeros(dk, dk);
    for a in 0..dk {
        for b in 0..dk {
            let mut acc = c(0.0, 0.0);
            for l in 0..left {
                for r in 0..right {
                    acc += m[((l * dk + a) * right + r, (l * dk + b) * right + r)];
                }
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

pub fn partial_trace(m: &HermitianMatrix, dims: &[usize], keep: usize) -> Result<HermitianMatrix> {
    partial_trace_general(m.matrix(), dims, keep).map(HermitianMatrix::hermitize)
}

/// `tr(A·B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let mut acc = c(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖AB − BA‖_F`.
pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    frobenius(&(a * b - b * a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn real(rows: &[&[f64]]) -> CMatrix {
        CMatrix::from_fn(rows.len(), rows[0].len(), |a, b| c(rows[a][b], 0.0))
    }

    fn diag(v: &[f64]) -> CMatrix {
        HermitianMatrix::from_real_diagonal(v).into_matrix()
    }

    #[test]
    fn tensor_product_examples() {
        let i2 = CMatrix::identity(2, 2);
        assert_eq!(tensor_product(&i2, &i2), CMatrix::identity(4, 4));
        assert_eq!(
            tensor_product(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0])),
            diag(&[0.0, 1.0, 0.0, 0.0])
        );
        let a = real(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let b = diag(&[2.0, 3.0]);
        let expected = real(&[
            &[0.0, 0.0, 2.0, 0.0],
            &[0.0, 0.0, 0.0, 3.0],
            &[2.0, 0.0, 0.0, 0.0],
            &[0.0, 3.0, 0.0, 0.0],
        ]);
        assert_eq!(tensor_product(&a, &b), expected);
    }

    #[test]
    fn partial_trace_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random::hermitian(&mut rng, 2, 1.0);
        let b = random::hermitian(&mut rng, 3, 1.0);
        let ab = HermitianMatrix::hermitize(tensor_product(a.matrix(), b.matrix()));
        let reduced = partial_trace(&ab, &[2, 3], 0).unwrap();
        assert!(reduced.max_abs_entry_diff(&a.scale(b.trace())) < 1e-12);

        let r = partial_trace(&HermitianMatrix::identity(4), &[2, 2], 1).unwrap();
        assert_eq!(r, HermitianMatrix::identity(2).scale(2.0));

        let bell_mix = HermitianMatrix::from_real_diagonal(&[1.0, 0.0, 0.0, 1.0]);
        let r = partial_trace(&bell_mix, &[2, 2], 0).unwrap();
        assert_eq!(r, HermitianMatrix::identity(2));
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let m = HermitianMatrix::identity(4);
        assert!(matches!(
            partial_trace(&m, &[2, 3], 0),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(partial_trace(&m, &[2, 2], 2).is_err());
    }

    #[test]
    fn eig_examples() {
        let e = hermitian_eig(&HermitianMatrix::from_real_diagonal(&[1.0, 3.0])).unwrap();
        assert_eq!(e.eigenvalues, vec![3.0, 1.0]);
        assert!((e.eigenvectors[(1, 0)].norm() - 1.0).abs() < 1e-14);
        assert!((e.eigenvectors[(0, 1)].norm() - 1.0).abs() < 1e-14);

        let x = HermitianMatrix::new(real(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        let e = hermitian_eig(&x).unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] + 1.0).abs() < 1e-14);

        let m =
            CMatrix::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let e = hermitian_eig(&HermitianMatrix::new(m).unwrap()).unwrap();
        assert!((e.eigenvalues[0] - 3.0).abs() < 1e-13);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn eig_phase_convention_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = random::hermitian(&mut rng, 4, 1.0);
        let e1 = hermitian_eig(&h).unwrap();
        let e2 = hermitian_eig(&h.clone()).unwrap();
        assert_eq!(e1.eigenvalues, e2.eigenvalues);
        assert_eq!(e1.eigenvectors, e2.eigenvectors);
        for k in 0..4 {
            let first = e1
                .eigenvectors
                .column(k)
                .iter()
                .find(|z| z.norm() > 1e-12)
                .copied()
                .unwrap();
            assert!(first.im.abs() < 1e-15 && first.re > 0.0);
        }
    }

    #[test]
    fn func_calculus_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = random::hermitian(&mut rng, 3, 1.0);
        assert!(func_calculus(&h, |x| x).unwrap().max_abs_entry_diff(&h) < 1e-10);

        let e = func_calculus(
            &HermitianMatrix::from_real_diagonal(&[0.0, 2f64.ln()]),
            f64::exp,
        )
        .unwrap();
        assert!(e.max_abs_entry_diff(&HermitianMatrix::from_real_diagonal(&[1.0, 2.0])) < 1e-14);

        let s = func_calculus(
            &HermitianMatrix::from_real_diagonal(&[0.25, 0.75]),
            f64::sqrt,
        )
        .unwrap();
        let want = HermitianMatrix::from_real_diagonal(&[0.5, 3f64.sqrt() / 2.0]);
        assert!(s.max_abs_entry_diff(&want) < 1e-14);
    }

    #[test]
    fn func_calculus_domain_error() {
        let h = HermitianMatrix::from_real_diagonal(&[1.0, -0.5]);
        assert!(matches!(func_calculus(&h, f64::ln), Err(Error::Domain(_))));
    }

    #[test]
    fn hermitian_validation() {
        let bad =
            CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(
            HermitianMatrix::new(bad),
            Err(Error::NotHermitian { .. })
        ));
        let nan = CMatrix::from_element(2, 2, c(f64::NAN, 0.0));
        assert!(matches!(HermitianMatrix::new(nan), Err(Error::NonFinite)));
        assert!(HermitianMatrix::new(CMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn density_validation() {
        assert!(DensityMatrix::from_probabilities(&[0.5, 0.6]).is_err());
        assert!(DensityMatrix::from_probabilities(&[1.2, -0.2]).is_err());
        assert!(DensityMatrix::from_probabilities(&[0.3, 0.7]).is_ok());
    }

    #[test]
    fn coordinate_charts_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random::hermitian(&mut rng, 3, 1.0);
        assert_eq!(HermitianMatrix::from_coords(3, &h.to_coords()), h);
        let z = h.traceless_part();
        let back = HermitianMatrix::from_traceless_coords(3, &z.to_traceless_coords());
        assert!(back.max_abs_entry_diff(&z) < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn eig_reconstructs(seed in any::<u64>(), d in 1usize..=6) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let h = random::hermitian(&mut rng, d, 2.0);
                let e = hermitian_eig(&h).unwrap();
                let err = e.reconstruct().distance(&h);
                prop_assert!(err <= 1e-10 * (1.0 + h.frobenius_norm()));
                let gram = e.eigenvectors.adjoint() * &e.eigenvectors;
                prop_assert!(frobenius(&(gram - CMatrix::identity(d, d))) <= 1e-10);
                prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
            }

            #[test]
            fn partial_trace_preserves_trace(seed in any::<u64>(), da in 1usize..4, db in 1usize..4, keep in 0usize..2) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let m = random::hermitian(&mut rng, da * db, 1.0);
                let r = partial_trace(&m, &[da, db], keep).unwrap();
                prop_assert!((r.trace() - m.trace()).abs() <= 1e-12 * (1.0 + m.trace().abs()));
            }

            #[test]
            fn tensor_associative(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                // Small-integer entries keep every product exact in floating point.
                let mut int_matrix = |r: usize, k: usize| {
                    CMatrix::from_fn(r, k, |_, _| {
                        c(rng.random_range(-4i32..=4) as f64, rng.random_range(-4i32..=4) as f64)
                    })
                };
                let a = int_matrix(2, 3);
                let b = int_matrix(3, 2);
                let cc = int_matrix(2, 2);
                let left = tensor_product(&tensor_product(&a, &b), &cc);
                let right = tensor_product(&a, &tensor_product(&b, &cc));
                prop_assert_eq!(left, right);
            }
        }
    }
}
