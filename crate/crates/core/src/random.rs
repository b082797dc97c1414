//! Seeded random ensembles used by property checks and probes.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::matrix::{c, CMatrix, DensityMatrix, HermitianMatrix};

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// GUE-style Hermitian matrix with entries of order `scale`.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize, scale: f64) -> HermitianMatrix {
    let g = ginibre(rng, d, d);
    HermitianMatrix::hermitize(g * c(scale, 0.0))
}

/// Random Hermitian direction with unit Frobenius norm and zero trace.
pub fn traceless_direction<R: Rng + ?Sized>(rng: &mut R, d: usize) -> HermitianMatrix {
    let h = hermitian(rng, d, 1.0).traceless_part();
    let n = h.frobenius_norm();
    h.scale(1.0 / n)
}

/// Haar-distributed unitary via QR of a Ginibre matrix with phase correction.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let qr = ginibre(rng, d, d).qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..d {
        let z = r[(k, k)];
        let phase = if z.norm() > 0.0 {
            z / z.norm()
        } else {
            c(1.0, 0.0)
        };
        for a in 0..d {
            q[(a, k)] *= phase;
        }
    }
    q
}

/// Full-rank density matrix `G G† / tr(G G†)`.
pub fn density<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DensityMatrix {
    let g = ginibre(rng, d, d);
    let w = &g * g.adjoint();
    let tr: f64 = (0..d).map(|a| w[(a, a)].re).sum();
    DensityMatrix::new_unchecked(HermitianMatrix::hermitize(w * c(1.0 / tr, 0.0)))
}

/// Density matrix whose eigenvalues are all at least `floor` (requires `floor·d < 1`).
pub fn density_with_floor<R: Rng + ?Sized>(rng: &mut R, d: usize, floor: f64) -> DensityMatrix {
    let rho = density(rng, d);
    let w = 1.0 - floor * d as f64;
    DensityMatrix::new_unchecked(
        rho.hermitian()
            .scale(w)
            .add(&HermitianMatrix::identity(d).scale(floor)),
    )
}
