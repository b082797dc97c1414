//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::time::{Duration, Instant};

use qflow_core::analysis::{fidelity_with_pure, purity, stationarity_residual};
use qflow_core::dynamics::InitialCondition;
use qflow_core::io::bloch_csv;
use qflow_core::matrix::c;
use qflow_core::verify::{self, standard_kernels, VerifyOptions};
use qflow_core::{
    func_calculus, matching_pennies, qrd_field, random, regularizer, strict_ne_game, BuiltinKernel,
    CMatrix, DensityMatrix, HermitianMatrix, KernelRef, StateProfile,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 2024;

struct Line {
    passed: bool,
    text: String,
}

fn report(id: usize, title: &str, f: impl FnOnce() -> Result<(bool, String), String>) -> Line {
    let started = Instant::now();
    let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    let text = format!(
        "[{}] {id:>2}. {title}: {detail} ({:.1} s)",
        if passed { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    println!("{text}");
    Line { passed, text }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn vn() -> KernelRef {
    BuiltinKernel::VonNeumann.into_ref()
}

fn diag(p: &[f64]) -> DensityMatrix {
    DensityMatrix::from_probabilities(p).unwrap()
}

/// Composite Simpson rule for `∫₀¹ X^{1−s} V X^s ds − tr(XV) X`.
fn replicator_by_simpson(
    x: &DensityMatrix,
    v: &HermitianMatrix,
    intervals: usize,
) -> HermitianMatrix {
    let d = x.dim();
    let mut acc = CMatrix::zeros(d, d);
    let h = 1.0 / intervals as f64;
    for k in 0..=intervals {
        let s = k as f64 * h;
        let w = if k == 0 || k == intervals {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let left = func_calculus(x.hermitian(), |l| l.powf(1.0 - s)).unwrap();
        let right = func_calculus(x.hermitian(), |l| l.powf(s)).unwrap();
        acc += (left.matrix() * v.matrix() * right.matrix()) * c(w * h / 3.0, 0.0);
    }
    HermitianMatrix::hermitize(acc).axpy(-x.hermitian().inner(v), x.hermitian())
}

fn main() {
    let mut lines = Vec::new();

    lines.push(report(
        1,
        "mirror map vs projected-gradient brute force (50 cases, d <= 4)",
        || {
            let started = Instant::now();
            let out = verify::mirror_optimality(&standard_kernels(), 50, 5, SEED, 1e-5)
                .map_err(|e| e.to_string())?;
            let t = started.elapsed();
            Ok((
                out.passed && within(t, 30.0),
                format!(
                    "max Frobenius distance {:.3e} <= 1e-5, {}, runtime {:.1} s < 30 s",
                    out.measured,
                    out.detail,
                    t.as_secs_f64()
                ),
            ))
        },
    ));

    lines.push(report(
        2,
        "finite-difference dX/dt vs qd_field along the strict-NE dual run",
        || {
            let started = Instant::now();
            let out = verify::primal_dual_consistency(
                &strict_ne_game(),
                &[vn(), vn()],
                vec![
                    InitialCondition::Primal(diag(&[0.2, 0.8])),
                    InitialCondition::Primal(diag(&[0.8, 0.2])),
                ],
                10.0,
                100,
                1e-5,
            )
            .map_err(|e| e.to_string())?;
            let t = started.elapsed();
            Ok((
                out.passed && within(t, 60.0),
                format!(
                    "max entry error {:.3e} <= 1e-5 over {}, runtime {:.1} s < 60 s",
                    out.measured,
                    out.detail,
                    t.as_secs_f64()
                ),
            ))
        },
    ));

    lines.push(report(3, "replicator field vs 32-node quadrature (100 cases, d <= 5)", || {
        let started = Instant::now();
        let out = verify::replicator_quadrature(100, SEED, 1e-8).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let mut simpson: f64 = 0.0;
        for k in 0..20 {
            let d = 1 + k % 5;
            let x = random::density_with_floor(&mut rng, d, 0.01);
            let v = random::hermitian(&mut rng, d, 1.0);
            simpson = simpson.max(qrd_field(&x, &v).unwrap().max_abs_entry_diff(&replicator_by_simpson(&x, &v, 2000)));
        }
        let t = started.elapsed();
        Ok((
            out.passed && simpson <= 1e-8 && within(t, 10.0),
            format!(
                "max entry error {:.3e} <= 1e-8 (Simpson cross-check {simpson:.3e}), runtime {:.1} s < 10 s",
                out.measured,
                t.as_secs_f64()
            ),
        ))
    }));

    lines.push(report(
        4,
        "realized regret <= log d on 20 random games, T = 100",
        || {
            let started = Instant::now();
            let out = verify::regret_bound(20, 100.0, SEED, 1e-4).map_err(|e| e.to_string())?;
            let bound = regularizer::regularizer_range(&BuiltinKernel::VonNeumann, 2);
            let bound_ok =
                (bound - 0.6931).abs() < 5e-5 && (bound - std::f64::consts::LN_2).abs() < 1e-15;
            let t = started.elapsed();
            Ok((
                out.passed && bound_ok && within(t, 600.0),
                format!(
                "max(regret - log d) {:.3e} <= 1e-4, d=2 bound {bound:.6}, runtime {:.1} s < 600 s",
                out.measured,
                t.as_secs_f64()
            ),
            ))
        },
    ));

    lines.push(report(5, "Fenchel energy conservation in matching pennies, T = 100", || {
        let (loose, tight) = verify::conservation_drifts(3, 100.0, SEED).map_err(|e| e.to_string())?;
        let ratio = loose / tight;
        Ok((
            loose <= 1e-6 && ratio >= 10.0,
            format!("max drift {loose:.3e} <= 1e-6, tightened drift {tight:.3e}, ratio {ratio:.1} >= 10"),
        ))
    }));

    lines.push(report(
        6,
        "Poincare recurrence in matching pennies (10 starts, T = 200)",
        || {
            let out = verify::recurrence(10, 200.0, 0.1, SEED, 0.05).map_err(|e| e.to_string())?;
            Ok((
                out.passed,
                format!(
                    "worst closest return {:.3e} < 0.05 after leaving r_out = 0.1{}",
                    out.measured,
                    if out.detail.is_empty() {
                        String::new()
                    } else {
                        format!(", {}", out.detail)
                    }
                ),
            ))
        },
    ));

    lines.push(report(7, "strict-NE reproduction: purity and fidelity at T = 100", || {
        let traj = verify::strict_ne_run(100.0, 0.01).map_err(|e| e.to_string())?;
        let last = traj.final_profile();
        let purities: Vec<f64> = last.states().iter().map(purity).collect();
        let f1 = fidelity_with_pure(last.get(0), &diag(&[1.0, 0.0]));
        let f2 = fidelity_with_pure(last.get(1), &diag(&[0.0, 1.0]));
        let csv = bloch_csv(&traj).map_err(|e| e.to_string())?;
        let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("strict_ne_bloch.csv");
        std::fs::write(&path, &csv).map_err(|e| e.to_string())?;
        let rows = csv.lines().count() - 1;
        Ok((
            purities.iter().all(|&p| p >= 0.99) && f1 >= 0.99 && f2 >= 0.99 && rows == traj.len(),
            format!(
                "purity {:.6}/{:.6} >= 0.99, fidelity {f1:.6}/{f2:.6} >= 0.99, Bloch CSV with {rows} rows at {}",
                purities[0],
                purities[1],
                path.display()
            ),
        ))
    }));

    lines.push(report(
        8,
        "quotient field divergence at 20 points of two games",
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(SEED);
            let games = [
                strict_ne_game(),
                verify::random_lifted_game(&mut rng, &[2, 3], 1.0).map_err(|e| e.to_string())?,
            ];
            let out =
                verify::incompressibility(&games, 20, SEED, 1e-6).map_err(|e| e.to_string())?;
            Ok((
                out.passed,
                format!("max |div| / |field| {:.3e} <= 1e-6", out.measured),
            ))
        },
    ));

    lines.push(report(9, "stationarity residual at equilibria", || {
        let kernels = [vn(), vn()];
        let mp = matching_pennies();
        let interior = stationarity_residual(&mp, &kernels, &StateProfile::uniform(&[2, 2])).map_err(|e| e.to_string())?;
        let pure = StateProfile::new(vec![diag(&[1.0, 0.0]), diag(&[0.0, 1.0])]);
        let boundary = stationarity_residual(&strict_ne_game(), &kernels, &pure).map_err(|e| e.to_string())?;
        Ok((
            interior <= 1e-10 && boundary <= 1e-8,
            format!("matching pennies {interior:.3e} <= 1e-10, floored pure profile {boundary:.3e} <= 1e-8"),
        ))
    }));

    lines.push(report(
        10,
        "full property suite passes in under 5 minutes",
        || {
            let started = Instant::now();
            let results = verify::run_suite(VerifyOptions::default());
            let t = started.elapsed();
            let failed: Vec<String> = results
                .iter()
                .filter(|r| !r.passed)
                .map(|r| format!("{}: {} ({})", r.module, r.property, r.detail))
                .collect();
            Ok((
                failed.is_empty() && within(t, 300.0),
                if failed.is_empty() {
                    format!(
                        "{} properties passed, runtime {:.1} s < 300 s",
                        results.len(),
                        t.as_secs_f64()
                    )
                } else {
                    format!("failed: {}", failed.join("; "))
                },
            ))
        },
    ));

    let failed: Vec<&Line> = lines.iter().filter(|l| !l.passed).collect();
    println!(
        "acceptance: {} of {} criteria passed",
        lines.len() - failed.len(),
        lines.len()
    );
    if !failed.is_empty() {
        for l in failed {
            eprintln!("{}", l.text);
        }
        std::process::exit(1);
    }
}
