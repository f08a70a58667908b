//! Dormand–Prince 5(4) with Hairer's continuous extension.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest admissible step before giving up.
    pub h_min: f64,
    /// Largest step; keeps quiescent stretches inside the stability region.
    pub h_max: f64,
    pub max_steps: usize,
    /// Treat the state as a probability vector: clamp and renormalize after
    /// each accepted step, reject steps that dip below `-10 atol`.
    pub simplex: bool,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-9,
            atol: 1e-9,
            h_min: 1e-14,
            h_max: f64::INFINITY,
            max_steps: 10_000_000,
            simplex: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Scaled error norm of the last accepted step.
    pub last_error: f64,
    /// Smallest state component seen at an accepted step or output, before
    /// any simplex projection.
    pub min_component: f64,
}

impl Default for OdeStats {
    fn default() -> Self {
        OdeStats {
            accepted: 0,
            rejected: 0,
            evaluations: 0,
            last_error: 0.0,
            min_component: f64::INFINITY,
        }
    }
}

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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
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

fn project_simplex(y: &mut [f64]) {
    let mut s = 0.0;
    for v in y.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
        s += *v;
    }
    for v in y.iter_mut() {
        *v /= s;
    }
}

/// Integrates `y' = f(t, y)` from `t0` and reports the state at each of
/// `out_times` (ascending, within `[t0, t_end]`) through dense output.
///
/// `f` writes the derivative into its third argument. Returns the output
/// states in order together with step statistics.
pub fn integrate<F>(
    mut f: F,
    y0: &[f64],
    t0: f64,
    out_times: &[f64],
    opts: &OdeOptions,
) -> Result<(Vec<Vec<f64>>, OdeStats)>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y0.len();
    let mut stats = OdeStats::default();
    let mut out = Vec::with_capacity(out_times.len());
    if out_times.windows(2).any(|w| w[1] < w[0]) || out_times.first().is_some_and(|&t| t < t0) {
        return Err(Error::invalid("output times must be ascending and start at or after t0"));
    }
    let Some(&t_end) = out_times.last() else {
        return Ok((out, stats));
    };
    let mut next_out = 0;
    while next_out < out_times.len() && out_times[next_out] <= t0 {
        out.push(y0.to_vec());
        next_out += 1;
    }

    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ys = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];

    f(t, &y, &mut k1)?;
    stats.evaluations += 1;
    let mut h = initial_step(&mut f, t, &y, &k1, t_end - t0, opts, &mut stats)?;
    let mut last_rejected = false;

    while next_out < out_times.len() {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::StepSizeUnderflow { t, step: h, state: y });
        }
        if h < opts.h_min {
            return Err(Error::StepSizeUnderflow { t, step: h, state: y });
        }
        h = h.min(opts.h_max);
        if t + h > t_end {
            h = t_end - t;
        }

        for i in 0..n {
            ys[i] = y[i] + h * A21 * k1[i];
        }
        f(t + C2 * h, &ys, &mut k2)?;
        for i in 0..n {
            ys[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * h, &ys, &mut k3)?;
        for i in 0..n {
            ys[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * h, &ys, &mut k4)?;
        for i in 0..n {
            ys[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * h, &ys, &mut k5)?;
        for i in 0..n {
            ys[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t + h, &ys, &mut k6)?;
        for i in 0..n {
            y_new[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(t + h, &y_new, &mut k7)?;
        stats.evaluations += 6;

        let mut norm = 0.0;
        for i in 0..n {
            err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            norm += (err[i] / sc).powi(2);
        }
        let norm = (norm / n as f64).sqrt();
        let dips = opts.simplex && y_new.iter().any(|&v| v < -10.0 * opts.atol);

        if norm <= 1.0 && !dips {
            stats.accepted += 1;
            stats.last_error = norm;
            stats.min_component = y_new.iter().copied().fold(stats.min_component, f64::min);
            let t_new = t + h;
            while next_out < out_times.len() && out_times[next_out] <= t_new {
                let to = out_times[next_out];
                let mut yo = if to == t_new {
                    y_new.clone()
                } else {
                    dense(&y, &y_new, &k1, &k3, &k4, &k5, &k6, &k7, h, (to - t) / h)
                };
                stats.min_component = yo.iter().copied().fold(stats.min_component, f64::min);
                if opts.simplex {
                    project_simplex(&mut yo);
                }
                out.push(yo);
                next_out += 1;
            }
            let moved = opts.simplex && {
                let before = y_new.clone();
                project_simplex(&mut y_new);
                before != y_new
            };
            std::mem::swap(&mut y, &mut y_new);
            t = t_new;
            if moved {
                f(t, &y, &mut k1)?;
                stats.evaluations += 1;
            } else {
                std::mem::swap(&mut k1, &mut k7);
            }
            let mut fac = 0.9 * norm.max(1e-10).powf(-0.2);
            fac = fac.clamp(0.2, 10.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            last_rejected = false;
            h *= fac;
        } else {
            stats.rejected += 1;
            last_rejected = true;
            let fac = if dips { 0.5 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 1.0) };
            h *= fac;
        }
    }
    Ok((out, stats))
}

#[allow(clippy::too_many_arguments)]
fn dense(
    y: &[f64],
    y_new: &[f64],
    k1: &[f64],
    k3: &[f64],
    k4: &[f64],
    k5: &[f64],
    k6: &[f64],
    k7: &[f64],
    h: f64,
    theta: f64,
) -> Vec<f64> {
    let th1 = 1.0 - theta;
    (0..y.len())
        .map(|i| {
            let ydiff = y_new[i] - y[i];
            let bspl = h * k1[i] - ydiff;
            let r5 = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            y[i] + theta * (ydiff + th1 * (bspl + theta * (ydiff - h * k7[i] - bspl + th1 * r5)))
        })
        .collect()
}

fn initial_step<F>(
    f: &mut F,
    t: f64,
    y: &[f64],
    f0: &[f64],
    span: f64,
    opts: &OdeOptions,
    stats: &mut OdeStats,
) -> Result<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len() as f64;
    let sc: Vec<f64> = y.iter().map(|v| opts.atol + opts.rtol * v.abs()).collect();
    let d0 = (y.iter().zip(&sc).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (f0.iter().zip(&sc).map(|(v, s)| (v / s).powi(2)).sum::<f64>() / n).sqrt();
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span);
    let y1: Vec<f64> = y.iter().zip(f0).map(|(v, d)| v + h0 * d).collect();
    let mut f1 = vec![0.0; y.len()];
    f(t + h0, &y1, &mut f1)?;
    stats.evaluations += 1;
    let d2 = (f1
        .iter()
        .zip(f0)
        .zip(&sc)
        .map(|((a, b), s)| ((a - b) / s).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(span))
}
