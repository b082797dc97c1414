//! Regularized learning dynamics in quantum games.
//!
//! Players hold density matrices, accumulate payoff gradients as dual
//! scores, and map scores back to states through a regularized best
//! response. The crate provides the game model, the mirror maps for trace
//! regularizers, integrators for the dual and primal flows, and diagnostics
//! (regret, Fenchel energy, recurrence, variational stability).
//!
//! ```
//! use qflow_core::{integrate, strict_ne_game, BuiltinKernel, DensityMatrix, InitialCondition,
//!                  Method, SimulationConfig, StateSpace};
//!
//! let game = strict_ne_game();
//! let vn = BuiltinKernel::VonNeumann.into_ref();
//! let config = SimulationConfig {
//!     kernels: vec![vn.clone(), vn],
//!     horizon: 5.0,
//!     method: Method::dopri_default(),
//!     record_stride: 0.5,
//!     initial: vec![
//!         InitialCondition::Primal(DensityMatrix::from_probabilities(&[0.2, 0.8]).unwrap()),
//!         InitialCondition::Primal(DensityMatrix::from_probabilities(&[0.8, 0.2]).unwrap()),
//!     ],
//!     space: StateSpace::Dual,
//! };
//! let traj = integrate(&game, &config).unwrap();
//! assert_eq!(traj.len(), 11);
//! ```

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod game;
pub mod io;
pub mod matrix;
pub mod ode;
pub mod oracle;
pub mod random;
pub mod regularizer;
pub mod verify;

pub use analysis::{
    bloch_coords, fenchel_series, fidelity_with_pure, purity, recurrence_stats, regret,
    stationarity_residual, vs_probe, ConservationReport, RecurrenceReport, RegretReport,
};
pub use dynamics::{
    dual_field, integrate, primal_field, qd_field, qrd_field, quotient_field, InitialCondition,
    SimulationConfig, StateSpace, Trajectory,
};
pub use error::{Error, Result};
pub use game::{
    matching_pennies, strict_ne_game, ClassicalTable, PovmOutcome, QuantumGame, StateProfile,
};
pub use matrix::{
    func_calculus, hermitian_eig, partial_trace, tensor_product, CMatrix, DensityMatrix,
    EigenDecomposition, HermitianMatrix,
};
pub use num_complex::Complex64;
pub use ode::Method;
pub use regularizer::{
    builtin_kernel, conjugate, fenchel_coupling, mirror, BuiltinKernel, Kernel, KernelRef,
};
