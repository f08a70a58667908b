//! Finite-N jump process on empirical distributions, driven by the
//! limiting rates, and its law-of-large-numbers error against the flow.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate_flow, FieldEvaluator, FlowOptions, FlowTrajectory};
use crate::error::{Error, Result};
use crate::model::{Model, Vec2};
use crate::simplex::{tv_distance, SimplexVector};

/// Particle counts per arc.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupationState {
    pub counts: Vec<u64>,
    pub n_total: u64,
}

impl OccupationState {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::invalid("need at least two arcs"));
        }
        let n_total: u64 = counts.iter().sum();
        if n_total == 0 {
            return Err(Error::invalid("occupation needs at least one particle"));
        }
        Ok(OccupationState { counts, n_total })
    }

    /// Rounds `N nu` to integers by largest remainder; ties go to the lowest index.
    pub fn from_simplex(nu: &SimplexVector, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("N must be at least 1"));
        }
        let scaled: Vec<f64> = nu.weights().iter().map(|w| w * n as f64).collect();
        let mut counts: Vec<u64> = scaled.iter().map(|s| s.floor() as u64).collect();
        let assigned: u64 = counts.iter().sum();
        let mut order: Vec<usize> = (0..counts.len()).collect();
        // stable sort keeps lower indices first among equal remainders
        order.sort_by(|&a, &b| {
            let ra = scaled[a] - scaled[a].floor();
            let rb = scaled[b] - scaled[b].floor();
            rb.total_cmp(&ra)
        });
        let missing = n.saturating_sub(assigned) as usize;
        for &i in order.iter().take(missing) {
            counts[i] += 1;
        }
        OccupationState::new(counts)
    }

    pub fn fractions(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.n_total as f64).collect()
    }

    pub fn to_simplex(&self) -> SimplexVector {
        SimplexVector::project(self.fractions())
    }
}

/// One simulated path. States are stored as the sequence of jumping arcs;
/// [`JumpPath::states`] replays them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpPath {
    pub initial: OccupationState,
    pub event_times: Vec<f64>,
    /// 0-based arc a particle left at each event (it moved to the next arc).
    pub jumps: Vec<usize>,
    pub t_final: f64,
    pub seed: u64,
}

impl JumpPath {
    pub fn len(&self) -> usize {
        self.event_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.event_times.is_empty()
    }

    /// Initial state followed by the state after each event.
    pub fn states(&self) -> impl Iterator<Item = OccupationState> + '_ {
        let q = self.initial.counts.len();
        let mut cur = self.initial.clone();
        std::iter::once(cur.clone()).chain(self.jumps.iter().map(move |&k| {
            cur.counts[k] -= 1;
            cur.counts[(k + 1) % q] += 1;
            cur.clone()
        }))
    }

    pub fn final_state(&self) -> OccupationState {
        self.states().last().expect("states include the initial one")
    }

    /// Counts at time `t` (the state after all events at or before `t`).
    pub fn state_at(&self, t: f64) -> OccupationState {
        let n = self.event_times.partition_point(|&s| s <= t);
        self.states().nth(n).expect("index within the event count")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SimOptions {
    /// Re-solve the magnetization only after the empirical measure moved this
    /// far in TV since the last solve. `None` re-solves after every jump.
    pub lazy_threshold: Option<f64>,
}

/// Gillespie simulation with rates `c(k, counts/N)` up to `t_final`.
pub fn simulate_path(
    model: &Model,
    initial: &OccupationState,
    t_final: f64,
    seed: u64,
    options: SimOptions,
) -> Result<JumpPath> {
    let q = model.q();
    if initial.counts.len() != q {
        return Err(Error::invalid(format!(
            "occupation has {} arcs, model has q = {q}",
            initial.counts.len()
        )));
    }
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::invalid(format!("t_final must be positive, got {t_final}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ev = FieldEvaluator::new(model);
    let n = initial.n_total as f64;
    let mut counts = initial.counts.clone();
    let mut path = JumpPath {
        initial: initial.clone(),
        event_times: Vec::new(),
        jumps: Vec::new(),
        t_final,
        seed,
    };
    let mut frac: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let mut solved_at = frac.clone();
    let mut c = vec![0.0; q];
    let mut t = 0.0;
    let mut fresh = true;
    loop {
        let stale = match options.lazy_threshold {
            None => true,
            Some(th) => fresh || tv_distance(&frac, &solved_at) >= th,
        };
        if stale {
            match ev.rates(&frac, &mut c) {
                Ok(_) => {}
                Err(e) => {
                    return Err(Error::SimulationAborted {
                        t,
                        events: path.len(),
                        source: Box::new(e),
                        partial: Box::new(path),
                    })
                }
            }
            solved_at.copy_from_slice(&frac);
            fresh = false;
        }
        let total: f64 = counts.iter().zip(&c).map(|(&k, r)| k as f64 * r).sum();
        let u: f64 = rng.gen();
        t += -(1.0 - u).ln() / total;
        if t > t_final {
            break;
        }
        let mut target = rng.gen::<f64>() * total;
        let mut k = q - 1;
        for i in 0..q {
            let w = counts[i] as f64 * c[i];
            if target < w {
                k = i;
                break;
            }
            target -= w;
        }
        // guard against roundoff landing on an empty arc
        while counts[k] == 0 {
            k = (k + q - 1) % q;
        }
        counts[k] -= 1;
        counts[(k + 1) % q] += 1;
        frac[k] = counts[k] as f64 / n;
        frac[(k + 1) % q] = counts[(k + 1) % q] as f64 / n;
        path.event_times.push(t);
        path.jumps.push(k);
    }
    Ok(path)
}

/// `sup_t TV(X^N_t, phi(t))` evaluated just before and just after each
/// event, against the flow interpolated on its output grid.
pub fn sup_tv_error(path: &JumpPath, flow: &FlowTrajectory) -> f64 {
    let mut err = 0.0f64;
    for (i, st) in path.states().enumerate() {
        let x = st.fractions();
        let t = if i == 0 { 0.0 } else { path.event_times[i - 1] };
        // x holds from its event until the next one (or t_final)
        let t_next = path.event_times.get(i).copied().unwrap_or(path.t_final);
        err = err
            .max(tv_distance(&x, &flow.interpolate(t)))
            .max(tv_distance(&x, &flow.interpolate(t_next)));
    }
    err
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LlnRow {
    pub n: u64,
    pub seed: u64,
    pub sup_tv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlnTable {
    /// Sorted by `(n, seed)`.
    pub rows: Vec<LlnRow>,
}

impl LlnTable {
    /// `(N, median sup-TV)` in increasing N.
    pub fn medians(&self) -> Vec<(u64, f64)> {
        let mut ns: Vec<u64> = self.rows.iter().map(|r| r.n).collect();
        ns.dedup();
        ns.into_iter()
            .map(|n| {
                let mut v: Vec<f64> = self.rows.iter().filter(|r| r.n == n).map(|r| r.sup_tv).collect();
                v.sort_by(f64::total_cmp);
                let m = v.len();
                let med = if m % 2 == 1 { v[m / 2] } else { 0.5 * (v[m / 2 - 1] + v[m / 2]) };
                (n, med)
            })
            .collect()
    }
}

/// Grid spacing of the reference flow used by [`lln_error`].
pub const LLN_FLOW_DT: f64 = 1e-3;

/// Sup-TV distance between simulated paths and the flow from `initial`,
/// for every `(N, seed)` pair.
pub fn lln_error(
    model: &Model,
    initial: &SimplexVector,
    n_list: &[u64],
    t_final: f64,
    seeds: &[u64],
    options: SimOptions,
) -> Result<LlnTable> {
    if n_list.is_empty() || seeds.is_empty() {
        return Err(Error::invalid("need at least one N and one seed"));
    }
    let flow = integrate_flow(
        model,
        initial,
        t_final,
        FlowOptions {
            output_dt: LLN_FLOW_DT,
            ..FlowOptions::default()
        },
    )?;
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let mut seeds = seeds.to_vec();
    seeds.sort_unstable();
    seeds.dedup();
    let mut rows = Vec::with_capacity(ns.len() * seeds.len());
    for &n in &ns {
        let start = OccupationState::from_simplex(initial, n)?;
        for &seed in &seeds {
            let path = simulate_path(model, &start, t_final, seed, options)?;
            rows.push(LlnRow {
                n,
                seed,
                sup_tv: sup_tv_error(&path, &flow),
            });
        }
    }
    Ok(LlnTable { rows })
}

/// Magnetization of the empirical measure along the path, sampled at `times`.
pub fn magnetization_series(model: &Model, path: &JumpPath, times: &[f64]) -> Result<Vec<Vec2>> {
    let mut ev = FieldEvaluator::new(model);
    times
        .iter()
        .map(|&t| ev.magnetization(&path.state_at(t).fractions()))
        .collect()
}
