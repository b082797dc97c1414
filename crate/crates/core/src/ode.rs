//! Explicit Runge–Kutta integrators over flat `f64` state vectors.
//!
//! [`Method::Dopri45`] is the Dormand–Prince 5(4) pair with FSAL, the
//! Hairer step-size controller and the 5-coefficient continuous extension,
//! so record times never constrain the step size. [`Method::Rk4`] takes the
//! largest uniform step no larger than the requested one that lands on every
//! record time.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    Rk4 { step: f64 },
    Dopri45 { rtol: f64, atol: f64 },
}

impl Method {
    pub fn dopri_default() -> Self {
        Self::Dopri45 {
            rtol: 1e-9,
            atol: 1e-11,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Rk4 { step } if !(step > 0.0 && step.is_finite()) => Err(Error::InvalidConfig(
                format!("RK4 step must be positive, got {step}"),
            )),
            Self::Dopri45 { rtol, atol } if !(rtol > 0.0 && atol > 0.0) => {
                Err(Error::InvalidConfig(format!(
                    "tolerances must be positive, got rtol={rtol} atol={atol}"
                )))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const MAX_STEPS: usize = 20_000_000;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Integrates `y' = f(t, y)` from `record_times[0]` through the last record
/// time, calling `on_record(t, y)` at each record time (including the first).
/// `record_times` must be strictly increasing.
pub fn integrate<F, R>(
    method: Method,
    f: F,
    y0: &[f64],
    record_times: &[f64],
    mut on_record: R,
) -> Result<Stats>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<()>,
    R: FnMut(f64, &[f64]) -> Result<()>,
{
    method.validate()?;
    if record_times.is_empty() {
        return Ok(Stats::default());
    }
    if record_times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig(
            "record times must be strictly increasing".into(),
        ));
    }
    on_record(record_times[0], y0)?;
    match method {
        Method::Rk4 { step } => rk4(&f, y0, record_times, step, &mut on_record),
        Method::Dopri45 { rtol, atol } => dopri(&f, y0, record_times, rtol, atol, &mut on_record),
    }
}

fn axpy_into(out: &mut [f64], y: &[f64], terms: &[(f64, &[f64])]) {
    for i in 0..out.len() {
        let mut acc = y[i];
        for (s, k) in terms {
            acc += s * k[i];
        }
        out[i] = acc;
    }
}

/// One classical RK4 step of size `h`.
pub fn rk4_step<F>(f: &F, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    f(t, y, &mut k1)?;
    axpy_into(&mut tmp, y, &[(0.5 * h, &k1)]);
    f(t + 0.5 * h, &tmp, &mut k2)?;
    axpy_into(&mut tmp, y, &[(0.5 * h, &k2)]);
    f(t + 0.5 * h, &tmp, &mut k3)?;
    axpy_into(&mut tmp, y, &[(h, &k3)]);
    f(t + h, &tmp, &mut k4)?;
    let mut out = vec![0.0; n];
    axpy_into(
        &mut out,
        y,
        &[
            (h / 6.0, &k1),
            (h / 3.0, &k2),
            (h / 3.0, &k3),
            (h / 6.0, &k4),
        ],
    );
    Ok(out)
}

fn rk4<F, R>(f: &F, y0: &[f64], times: &[f64], step: f64, on_record: &mut R) -> Result<Stats>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<()>,
    R: FnMut(f64, &[f64]) -> Result<()>,
{
    let mut stats = Stats::default();
    let mut y = y0.to_vec();
    for w in times.windows(2) {
        let span = w[1] - w[0];
        let n = ((span / step) - 1e-9).ceil().max(1.0) as usize;
        let h = span / n as f64;
        for k in 0..n {
            y = rk4_step(f, w[0] + k as f64 * h, &y, h)?;
            stats.accepted += 1;
            stats.evaluations += 4;
        }
        on_record(w[1], &y)?;
    }
    Ok(stats)
}

fn error_norm(err: &[f64], y: &[f64], y_new: &[f64], rtol: f64, atol: f64) -> f64 {
    let n = err.len().max(1) as f64;
    let s: f64 = err
        .iter()
        .zip(y.iter().zip(y_new))
        .map(|(e, (a, b))| {
            let sc = atol + rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

fn initial_step<F>(
    f: &F,
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    t_end: f64,
    rtol: f64,
    atol: f64,
) -> Result<f64>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y0.len().max(1) as f64;
    let scaled = |v: &[f64]| -> f64 {
        (v.iter()
            .zip(y0)
            .map(|(x, y)| (x / (atol + rtol * y.abs())).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
    };
    let d0 = scaled(y0);
    let d1 = scaled(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h0 = h0.min(t_end - t0);
    let mut y1 = vec![0.0; y0.len()];
    axpy_into(&mut y1, y0, &[(h0, f0)]);
    let mut f1 = vec![0.0; y0.len()];
    f(t0 + h0, &y1, &mut f1)?;
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = scaled(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(t_end - t0))
}

fn dopri<F, R>(
    f: &F,
    y0: &[f64],
    times: &[f64],
    rtol: f64,
    atol: f64,
    on_record: &mut R,
) -> Result<Stats>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<()>,
    R: FnMut(f64, &[f64]) -> Result<()>,
{
    let n = y0.len();
    let t_end = *times.last().unwrap();
    let mut t = times[0];
    let mut y = y0.to_vec();
    let mut stats = Stats::default();
    let mut next_record = 1;
    if next_record >= times.len() {
        return Ok(stats);
    }

    let mut k1 = vec![0.0; n];
    f(t, &y, &mut k1)?;
    stats.evaluations += 1;
    let mut h = initial_step(f, t, &y, &k1, t_end, rtol, atol)?;
    stats.evaluations += 1;

    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut dense = vec![0.0; n];
    let mut last_rejected = false;

    while next_record < times.len() {
        if stats.accepted + stats.rejected > MAX_STEPS {
            return Err(Error::TooManySteps(t));
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow(t));
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }

        axpy_into(&mut tmp, &y, &[(h * A21, &k1)]);
        f(t + C2 * h, &tmp, &mut k2)?;
        axpy_into(&mut tmp, &y, &[(h * A31, &k1), (h * A32, &k2)]);
        f(t + C3 * h, &tmp, &mut k3)?;
        axpy_into(
            &mut tmp,
            &y,
            &[(h * A41, &k1), (h * A42, &k2), (h * A43, &k3)],
        );
        f(t + C4 * h, &tmp, &mut k4)?;
        axpy_into(
            &mut tmp,
            &y,
            &[
                (h * A51, &k1),
                (h * A52, &k2),
                (h * A53, &k3),
                (h * A54, &k4),
            ],
        );
        f(t + C5 * h, &tmp, &mut k5)?;
        axpy_into(
            &mut tmp,
            &y,
            &[
                (h * A61, &k1),
                (h * A62, &k2),
                (h * A63, &k3),
                (h * A64, &k4),
                (h * A65, &k5),
            ],
        );
        f(t + h, &tmp, &mut k6)?;
        axpy_into(
            &mut y_new,
            &y,
            &[
                (h * B1, &k1),
                (h * B3, &k3),
                (h * B4, &k4),
                (h * B5, &k5),
                (h * B6, &k6),
            ],
        );
        f(t + h, &y_new, &mut k7)?;
        stats.evaluations += 6;

        for i in 0..n {
            err[i] =
                h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let e = error_norm(&err, &y, &y_new, rtol, atol);
        if !e.is_finite() {
            stats.rejected += 1;
            last_rejected = true;
            h *= 0.2;
            continue;
        }
        let fac = (0.9 * e.powf(-0.2)).clamp(0.2, 10.0);

        if e <= 1.0 {
            stats.accepted += 1;
            let t_new = if last { t_end } else { t + h };
            for i in 0..n {
                dense[i] = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            while next_record < times.len() && times[next_record] <= t_new {
                let tr = times[next_record];
                if tr == t_new {
                    on_record(tr, &y_new)?;
                } else {
                    let s = (tr - t) / h;
                    let s1 = 1.0 - s;
                    for i in 0..n {
                        let ydiff = y_new[i] - y[i];
                        let bspl = h * k1[i] - ydiff;
                        let c4 = ydiff - h * k7[i] - bspl;
                        tmp[i] = y[i] + s * (ydiff + s1 * (bspl + s * (c4 + s1 * dense[i])));
                    }
                    on_record(tr, &tmp)?;
                }
                next_record += 1;
            }
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            h *= if last_rejected { fac.min(1.0) } else { fac };
            last_rejected = false;
        } else {
            stats.rejected += 1;
            last_rejected = true;
            h *= fac.min(1.0);
        }
    }
    Ok(stats)
}

/// `0, stride, 2·stride, …` up to and including `horizon`.
pub fn record_grid(horizon: f64, stride: f64) -> Vec<f64> {
    let n = (horizon / stride + 1e-9).floor() as usize;
    let mut times: Vec<f64> = (0..=n).map(|k| k as f64 * stride).collect();
    if horizon - times[n] > 1e-9 * stride {
        times.push(horizon);
    } else {
        times[n] = horizon;
    }
    times
}
