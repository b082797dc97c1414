use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde_json::json;

use qflow_core::io::{
    bloch_csv, fmt_real, trajectory_csv, trajectory_from_json, trajectory_to_json,
};
use qflow_core::verify::{format_table, run_suite, VerifyOptions};
use qflow_core::{
    bloch_coords, fenchel_series, integrate, purity, recurrence_stats, regret, vs_probe, Error,
    Trajectory,
};

use crate::manifest::{load, Diagnostic, LoadedRun};

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: String) -> Self {
        Self { code: 2, message }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_integration_failure() {
            3
        } else if matches!(e, Error::MissingData(_)) {
            4
        } else {
            2
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, contents)
        .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::usage(format!("cannot create {}: {e}", dir.display())))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

pub fn simulate(manifest_path: &Path) -> Result<(), Failure> {
    let run = load(manifest_path)?;
    let started = Instant::now();
    let traj = integrate(&run.game, &run.config)?;
    let wall = started.elapsed().as_secs_f64();
    create_dir(&run.output_dir)?;
    write(&run.output_dir, "trajectory.csv", &trajectory_csv(&traj)?)?;
    write(
        &run.output_dir,
        "trajectory.json",
        &trajectory_to_json(&traj),
    )?;
    let metadata = json!({
        "manifest": manifest_path.display().to_string(),
        "game": run.game_path.display().to_string(),
        "config": run.manifest.config,
        "seed": run.manifest.seed,
        "player_dims": run.game.player_dims(),
        "records": traj.len(),
        "versions": { "qflow": env!("CARGO_PKG_VERSION") },
        "threads": rayon::current_num_threads(),
        "wall_time_seconds": wall,
    });
    write(&run.output_dir, "metadata.json", &to_json(&metadata))?;
    println!(
        "wrote {} records to {}",
        traj.len(),
        run.output_dir.display()
    );
    Ok(())
}

fn trajectory_for(run: &LoadedRun) -> Result<Trajectory, Failure> {
    let stored = run.output_dir.join("trajectory.json");
    if !stored.exists() {
        return Ok(integrate(&run.game, &run.config)?);
    }
    let text = fs::read_to_string(&stored)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", stored.display())))?;
    let traj = trajectory_from_json(&text).map_err(|e| match e {
        Error::Parse { path, message } => {
            Failure::usage(format!("{}: {path}: {message}", stored.display()))
        }
        other => other.into(),
    })?;
    let dims: Vec<usize> = traj
        .states
        .first()
        .map_or(Vec::new(), |p| p.iter().map(|x| x.dim()).collect());
    if dims != run.game.player_dims() {
        return Err(Failure::usage(format!(
            "{} has player dimensions {dims:?} but the game has {:?}",
            stored.display(),
            run.game.player_dims()
        )));
    }
    Ok(traj)
}

pub fn diagnose(manifest_path: &Path) -> Result<(), Failure> {
    let run = load(manifest_path)?;
    let needs_reference = run
        .manifest
        .diagnostics
        .iter()
        .any(|d| matches!(d, Diagnostic::Fenchel | Diagnostic::Vsprobe));
    let reference = if needs_reference {
        Some(run.reference()?)
    } else {
        None
    };
    let traj = trajectory_for(&run)?;
    if traj.is_empty() {
        return Err(Error::MissingData("trajectory has no records".into()).into());
    }
    create_dir(&run.output_dir)?;
    let kernels = &run.config.kernels;
    let mut energy: Option<Vec<f64>> = None;
    for diagnostic in &run.manifest.diagnostics {
        match diagnostic {
            Diagnostic::Regret => {
                let reports = (0..run.game.num_players())
                    .map(|i| regret(&run.game, i, kernels[i].as_ref(), &traj))
                    .collect::<Result<Vec<_>, _>>()?;
                for r in &reports {
                    println!(
                        "regret player {}: {:.6e} (bound {:.6e})",
                        r.player, r.realized_regret, r.bound
                    );
                }
                write(&run.output_dir, "regret.json", &to_json(&reports))?;
            }
            Diagnostic::Fenchel => {
                let report = fenchel_series(kernels, reference.as_ref().unwrap(), &traj)?;
                println!("fenchel max drift: {:.6e}", report.max_drift);
                write(&run.output_dir, "fenchel.json", &to_json(&report))?;
                energy = Some(report.series);
            }
            Diagnostic::Recurrence => {
                let report = recurrence_stats(&traj, run.manifest.r_out);
                println!(
                    "recurrence: departed {}, closest return {:.6e}",
                    report.departed(),
                    report.return_distance
                );
                write(&run.output_dir, "recurrence.json", &to_json(&report))?;
            }
            Diagnostic::Vsprobe => {
                let margin = vs_probe(
                    &run.game,
                    reference.as_ref().unwrap(),
                    run.manifest.vs_radius,
                    run.manifest.vs_samples,
                    run.manifest.seed,
                )?;
                println!("vs margin: {margin:.6e}");
                let report = json!({
                    "margin": margin,
                    "radius": run.manifest.vs_radius,
                    "samples": run.manifest.vs_samples,
                    "seed": run.manifest.seed,
                    "certified_on_samples": margin < 0.0,
                });
                write(&run.output_dir, "vsprobe.json", &to_json(&report))?;
            }
            Diagnostic::Bloch => {
                if run.game.player_dims().iter().any(|&d| d != 2) {
                    return Err(Error::MissingData(
                        "Bloch coordinates need every player to be a qubit".into(),
                    )
                    .into());
                }
                write(&run.output_dir, "bloch.csv", &bloch_csv(&traj)?)?;
            }
        }
    }
    write(
        &run.output_dir,
        "series.csv",
        &series_csv(&traj, energy.as_deref())?,
    )?;
    Ok(())
}

/// `t`, the Fenchel energy when computed, then per player the realized
/// payoff rate `tr(X_i V_i)`, purity and qubit Bloch coordinates.
fn series_csv(traj: &Trajectory, energy: Option<&[f64]>) -> Result<String, Error> {
    let dims: Vec<usize> = traj.states[0].iter().map(|x| x.dim()).collect();
    let mut out = String::from("t");
    if energy.is_some() {
        out.push_str(",fenchel");
    }
    for (i, &d) in dims.iter().enumerate() {
        let _ = write!(out, ",p{i}_payoff,p{i}_purity");
        if d == 2 {
            let _ = write!(out, ",p{i}_bloch_x,p{i}_bloch_y,p{i}_bloch_z");
        }
    }
    out.push('\n');
    for (k, &t) in traj.times.iter().enumerate() {
        out.push_str(&fmt_real(t));
        if let Some(f) = energy {
            let _ = write!(out, ",{}", fmt_real(f[k]));
        }
        for (i, x) in traj.states[k].iter().enumerate() {
            let payoff = x.hermitian().inner(&traj.gradients[k][i]);
            let _ = write!(out, ",{},{}", fmt_real(payoff), fmt_real(purity(x)));
            if x.dim() == 2 {
                for v in bloch_coords(x)? {
                    let _ = write!(out, ",{}", fmt_real(v));
                }
            }
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn verify(loose: bool, seed: u64) -> Result<(), Failure> {
    let started = Instant::now();
    let results = run_suite(VerifyOptions { loose, seed });
    print!("{}", format_table(&results));
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| format!("{}: {}", r.module, r.property))
        .collect();
    println!(
        "{} of {} properties passed in {:.1} s{}",
        results.len() - failed.len(),
        results.len(),
        started.elapsed().as_secs_f64(),
        if loose { " (loose tolerances)" } else { "" }
    );
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: format!("failed properties: {}", failed.join("; ")),
        })
    }
}
