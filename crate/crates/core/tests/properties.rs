use std::sync::Arc;

use proptest::prelude::*;
use qflow_core::io::{parse_game, parse_json, RunConfig};
use qflow_core::verify::{mirror_optimality, standard_kernels};
use qflow_core::{
    integrate, mirror, regret, BuiltinKernel, ClassicalTable, DensityMatrix, HermitianMatrix,
    InitialCondition, Kernel, KernelRef, Method, QuantumGame, SimulationConfig, StateSpace,
};

#[derive(Debug)]
struct ShiftedInverse;

impl Kernel for ShiftedInverse {
    fn name(&self) -> String {
        "shifted-inverse".into()
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
fn mirror_oracle_rejects_corrupted_inverse() {
    let bad: KernelRef = Arc::new(ShiftedInverse);
    let out = mirror_optimality(&[bad], 12, 2, 5, 1e-5).unwrap();
    assert!(!out.passed && out.measured > 1e-3, "{out:?}");
}

/// Classical replicator dynamics `ẋ_a = x_a (u_a − ū)` for a bimatrix game,
/// integrated with a fixed-step RK4 written out here.
fn classical_replicator(
    a: &[[f64; 2]; 2],
    b: &[[f64; 2]; 2],
    x0: [f64; 2],
    y0: [f64; 2],
    t: f64,
    steps: usize,
) -> ([f64; 2], [f64; 2]) {
    let field = |s: [f64; 4]| -> [f64; 4] {
        let (x, y) = ([s[0], s[1]], [s[2], s[3]]);
        let ux = [
            a[0][0] * y[0] + a[0][1] * y[1],
            a[1][0] * y[0] + a[1][1] * y[1],
        ];
        let uy = [
            b[0][0] * x[0] + b[1][0] * x[1],
            b[0][1] * x[0] + b[1][1] * x[1],
        ];
        let mx = x[0] * ux[0] + x[1] * ux[1];
        let my = y[0] * uy[0] + y[1] * uy[1];
        [
            x[0] * (ux[0] - mx),
            x[1] * (ux[1] - mx),
            y[0] * (uy[0] - my),
            y[1] * (uy[1] - my),
        ]
    };
    let h = t / steps as f64;
    let mut s = [x0[0], x0[1], y0[0], y0[1]];
    let add = |s: [f64; 4], k: [f64; 4], w: f64| {
        [
            s[0] + w * k[0],
            s[1] + w * k[1],
            s[2] + w * k[2],
            s[3] + w * k[3],
        ]
    };
    for _ in 0..steps {
        let k1 = field(s);
        let k2 = field(add(s, k1, h / 2.0));
        let k3 = field(add(s, k2, h / 2.0));
        let k4 = field(add(s, k3, h));
        for i in 0..4 {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    ([s[0], s[1]], [s[2], s[3]])
}

#[test]
fn diagonal_states_follow_classical_replicator() {
    let a = [[3.0, -1.0], [0.5, 1.0]];
    let b = [[-2.0, 1.0], [1.5, -0.5]];
    let rows = |m: &[[f64; 2]; 2]| ClassicalTable::from_rows(&[&m[0][..], &m[1][..]]).unwrap();
    let game = QuantumGame::from_classical(&[rows(&a), rows(&b)]).unwrap();
    let vn = BuiltinKernel::VonNeumann.into_ref();
    for space in [StateSpace::Dual, StateSpace::Primal] {
        let cfg = SimulationConfig {
            kernels: vec![vn.clone(), vn.clone()],
            horizon: 3.0,
            method: Method::dopri_default(),
            record_stride: 0.5,
            initial: vec![
                InitialCondition::Primal(DensityMatrix::from_probabilities(&[0.3, 0.7]).unwrap()),
                InitialCondition::Primal(DensityMatrix::from_probabilities(&[0.6, 0.4]).unwrap()),
            ],
            space,
        };
        let traj = integrate(&game, &cfg).unwrap();
        let (x, y) = classical_replicator(&a, &b, [0.3, 0.7], [0.6, 0.4], 3.0, 30_000);
        let last = traj.final_profile();
        for (state, expect) in last.states().iter().zip([x, y]) {
            let m = state.matrix();
            assert!(
                (m[(0, 0)].re - expect[0]).abs() < 1e-8,
                "{space:?}: {} vs {}",
                m[(0, 0)].re,
                expect[0]
            );
            assert!(m[(0, 1)].norm() < 1e-12);
        }
    }
}

#[test]
fn json_pipeline_respects_regret_bound() {
    let game =
        parse_game(r#"{ "classical_tables": [[[1, 0, 2], [0, 3, -1]], [[0, 2, 1], [1, -1, 0]]] }"#)
            .unwrap();
    let cfg: RunConfig = parse_json(
        r#"{ "kernels": ["vonneumann", "tsallis:0.5"], "horizon": 20, "record_stride": 0.01,
             "initial": [{"primal_diagonal": [0.5, 0.5]}, {"primal_diagonal": [0.3333333333333333, 0.3333333333333333, 0.3333333333333334]}] }"#,
    )
    .unwrap();
    let sim = cfg.build(2).unwrap();
    let traj = integrate(&game, &sim).unwrap();
    for i in 0..2 {
        let r = regret(&game, i, sim.kernels[i].as_ref(), &traj).unwrap();
        assert!(
            r.realized_regret <= r.bound + 1e-4,
            "player {i}: {} > {}",
            r.realized_regret,
            r.bound
        );
    }
    let r0 = regret(&game, 0, sim.kernels[0].as_ref(), &traj).unwrap();
    assert!((r0.bound - std::f64::consts::LN_2).abs() < 1e-15);
}

fn hermitian_from(d: usize, v: &[f64]) -> HermitianMatrix {
    let mut coords = vec![0.0; d * d];
    coords.copy_from_slice(&v[..d * d]);
    HermitianMatrix::from_coords(d, &coords)
}

proptest! {
    #[test]
    fn mirror_outputs_are_states(d in 1usize..=5, scale in 0.01f64..20.0, k in 0usize..3,
                                 v in proptest::collection::vec(-1.0f64..1.0, 25)) {
        let y = hermitian_from(d, &v).scale(scale);
        let kernel = &standard_kernels()[k];
        let x = mirror(kernel.as_ref(), &y).unwrap();
        let e = x.eigen().unwrap();
        prop_assert!((x.hermitian().trace() - 1.0).abs() < 1e-10);
        prop_assert!(e.min_eigenvalue() >= -1e-10);
        let comm = x.matrix() * y.matrix() - y.matrix() * x.matrix();
        prop_assert!(comm.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() <= 1e-9 * (1.0 + y.frobenius_norm()));
    }
}
