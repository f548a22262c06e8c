//! Path simulation of the process killed on leaving `[a, b]`, with plain,
//! reflected (at `b`) or refracted dynamics.
//!
//! Jumps of size at least `eps` are simulated exactly; smaller jumps of an
//! infinite activity measure are replaced by a Gaussian with the same
//! variance. Barrier crossings between grid points are detected by sampling
//! the maximum and minimum of the Brownian bridge.
//!
//! Path `i` draws from the ChaCha8 stream `i` of the seed, and paths are
//! reduced in fixed chunks in index order, so results do not depend on the
//! number of threads.

pub mod estimators;

pub use estimators::*;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Open01, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_model::{Activity, JumpSampler, LevyTriplet};

/// Environment variable capping the worker threads of the simulator.
pub const THREADS_ENV: &str = "LEVYFLUCT_THREADS";

/// Capped fraction above which results carry a warning.
pub const CAPPED_WARNING: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    pub paths: u64,
    pub dt: f64,
    pub eps: f64,
    pub seed: u64,
    pub bridge: bool,
    /// Paths still alive at this time are counted as capped. Defaults to
    /// `50 / q`; required when `q = 0`.
    pub horizon: Option<f64>,
    pub small_jumps: SmallJumpMode,
    #[serde(skip)]
    pub chunk: usize,
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            paths: 100_000,
            dt: 1e-3,
            eps: 1e-3,
            seed: 0,
            bridge: true,
            horizon: None,
            small_jumps: SmallJumpMode::GaussianApprox,
            chunk: 1024,
            threads: None,
        }
    }
}

impl McConfig {
    pub fn with_paths(mut self, paths: u64) -> Self {
        self.paths = paths;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.paths < 2 {
            return Err(Error::param("paths", "need at least 2 paths"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", "must be positive"));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::param("eps", "must lie in (0, 1)"));
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::param("horizon", "must be positive"));
            }
        }
        if self.chunk == 0 {
            return Err(Error::param("chunk", "must be positive"));
        }
        Ok(())
    }
}

/// Treatment of jumps smaller than `eps` of an infinite activity measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmallJumpMode {
    /// Replaced by their compensating drift only.
    DriftOnly,
    /// Replaced by a Brownian motion with the same variance.
    #[default]
    GaussianApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Dynamics {
    Plain,
    /// Reflected at the upper barrier `b`: `U = X - ξ`, `ξ_t = sup_{s≤t}(X_s - b) ∨ 0`.
    Reflected,
    /// `dU = dX - δ 1{U > c} dt`.
    Refracted { delta: f64, c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Up,
    /// Passage below `a` by a jump.
    Down,
    /// Continuous passage through `a`.
    Creep,
    Capped,
}

/// One simulated path, up to its exit.
#[derive(Debug, Clone)]
pub struct PathRecord {
    pub tau: f64,
    pub exit: Exit,
    /// Position at exit: `b`, `a` or the undershoot.
    pub position: f64,
    /// `e^{-q τ}` (zero for capped paths).
    pub discount: f64,
    /// `∫₀^τ e^{-qs} dξ_s` for reflected dynamics.
    pub regulator: f64,
    /// Discounted occupation time `∫₀^τ e^{-qs} 1{U_s ∈ bin} ds` of equal bins on `[a, b]`.
    pub occupation: Vec<f64>,
    /// `∫₀^τ e^{-qs} ds`.
    pub discounted_time: f64,
    /// Discounted time spent held at `b` (reflected dynamics without a
    /// Gaussian part).
    pub at_upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McProblem {
    pub a: f64,
    pub b: f64,
    pub q: f64,
    pub x: f64,
    pub dynamics: Dynamics,
    /// Number of occupation bins recorded per path (0 disables).
    pub occupation_bins: usize,
}

impl McProblem {
    pub fn plain(a: f64, b: f64, q: f64, x: f64) -> Self {
        McProblem {
            a,
            b,
            q,
            x,
            dynamics: Dynamics::Plain,
            occupation_bins: 0,
        }
    }

    pub fn with_dynamics(mut self, dynamics: Dynamics) -> Self {
        self.dynamics = dynamics;
        self
    }

    pub fn with_occupation(mut self, bins: usize) -> Self {
        self.occupation_bins = bins;
        self
    }

    fn validate(&self, model: &LevyTriplet) -> Result<()> {
        if !(self.a < self.b) {
            return Err(Error::param("a", "need a < b"));
        }
        if !(self.x >= self.a && self.x <= self.b) {
            return Err(Error::param("x", "must lie in [a, b]"));
        }
        if !(self.q >= 0.0) {
            return Err(Error::param("q", "must be >= 0"));
        }
        if let Dynamics::Refracted { delta, c } = self.dynamics {
            if !(delta >= 0.0) {
                return Err(Error::param("delta", "must be >= 0"));
            }
            if let Some(d) = model.natural_drift() {
                if model.sigma() == 0.0 && delta >= d {
                    return Err(Error::param("delta", format!("refraction needs delta < natural drift {d}")));
                }
            }
            if !c.is_finite() {
                return Err(Error::param("c", "must be finite"));
            }
        }
        Ok(())
    }
}

/// Running mean and variance (Welford), mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Welford {
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    pub fn merge(&mut self, o: &Welford) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64 * o.n as f64) / n as f64;
        self.n = n;
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ExitCounts {
    pub up: u64,
    pub down: u64,
    pub creep: u64,
    pub capped: u64,
}

impl ExitCounts {
    fn add(&mut self, e: Exit) {
        match e {
            Exit::Up => self.up += 1,
            Exit::Down => self.down += 1,
            Exit::Creep => self.creep += 1,
            Exit::Capped => self.capped += 1,
        }
    }

    fn merge(&mut self, o: &ExitCounts) {
        self.up += o.up;
        self.down += o.down;
        self.creep += o.creep;
        self.capped += o.capped;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McSummary {
    pub stats: Vec<Welford>,
    pub counts: ExitCounts,
    pub n_paths: u64,
}

impl McSummary {
    pub fn mean(&self, k: usize) -> f64 {
        self.stats[k].mean
    }

    pub fn stderr(&self, k: usize) -> f64 {
        self.stats[k].stderr()
    }

    pub fn capped_fraction(&self) -> f64 {
        self.counts.capped as f64 / self.n_paths as f64
    }
}

/// Per-model simulation constants.
struct Stepper {
    drift: f64,
    sigma: f64,
    sampler: JumpSampler,
    creeps: bool,
}

impl Stepper {
    fn new(model: &LevyTriplet, eps: f64, mode: SmallJumpMode) -> Result<Self> {
        let m = model.measure();
        let (drift, small_var, sampler) = if m.activity() == Activity::FiniteActivity {
            let comp = m.first_moment_near_zero().unwrap_or(0.0);
            (model.gamma() + comp, 0.0, m.jump_sampler(0.0)?)
        } else {
            let var = match mode {
                SmallJumpMode::DriftOnly => 0.0,
                SmallJumpMode::GaussianApprox => m.moment_below(2, eps)?,
            };
            (model.gamma() + m.moment_between(1, eps, 1.0)?, var, m.jump_sampler(eps)?)
        };
        Ok(Stepper {
            drift,
            sigma: (model.sigma().powi(2) + small_var).sqrt(),
            sampler,
            creeps: model.sigma() > 0.0,
        })
    }
}

/// Whether a bridge from `u0` to `u1` can reach `level` with probability
/// above `e^{-40}`; the crossing probability is `exp(-2 d0 d1 / var)`.
fn may_cross(u0: f64, u1: f64, level: f64, var: f64) -> bool {
    2.0 * (level - u0) * (level - u1) < 40.0 * var
}

fn bridge_max(u0: f64, u1: f64, var: f64, rng: &mut ChaCha8Rng) -> f64 {
    let v: f64 = Open01.sample(rng);
    0.5 * (u0 + u1 + ((u1 - u0).powi(2) - 2.0 * var * v.ln()).sqrt())
}

fn bridge_min(u0: f64, u1: f64, var: f64, rng: &mut ChaCha8Rng) -> f64 {
    let v: f64 = Open01.sample(rng);
    0.5 * (u0 + u1 - ((u1 - u0).powi(2) - 2.0 * var * v.ln()).sqrt())
}

fn discounted_time(q: f64, t0: f64, t1: f64) -> f64 {
    if q == 0.0 {
        t1 - t0
    } else {
        (-q * t0).exp() * -(-q * (t1 - t0)).exp_m1() / q
    }
}

fn simulate_path(st: &Stepper, prob: &McProblem, cfg: &McConfig, horizon: f64, rng: &mut ChaCha8Rng) -> PathRecord {
    let (a, b, q) = (prob.a, prob.b, prob.q);
    let rate = st.sampler.rate;
    let next_arrival = |rng: &mut ChaCha8Rng| -> f64 {
        if rate > 0.0 {
            let e: f64 = Exp1.sample(rng);
            e / rate
        } else {
            f64::INFINITY
        }
    };
    let mut rec = PathRecord {
        tau: horizon,
        exit: Exit::Capped,
        position: prob.x,
        discount: 0.0,
        regulator: 0.0,
        occupation: vec![0.0; prob.occupation_bins],
        discounted_time: 0.0,
        at_upper: 0.0,
    };
    let bins = prob.occupation_bins;
    let bin_width = (b - a) / bins.max(1) as f64;
    let reflected = prob.dynamics == Dynamics::Reflected;
    let (delta, c) = match prob.dynamics {
        Dynamics::Refracted { delta, c } => (delta, c),
        _ => (0.0, f64::INFINITY),
    };

    let finish = |rec: &mut PathRecord, t: f64, exit: Exit, pos: f64| {
        rec.tau = t;
        rec.exit = exit;
        rec.position = pos;
        rec.discount = (-q * t).exp();
    };

    let mut t = 0.0;
    let mut u = prob.x;
    let mut next_jump = next_arrival(rng);
    let n_steps = (horizon / cfg.dt).ceil() as u64;
    for step in 0..n_steps {
        let t_end = ((step + 1) as f64 * cfg.dt).min(horizon);
        while t < t_end {
            let seg_end = next_jump.min(t_end);
            let s = seg_end - t;
            let mu = if u > c { st.drift - delta } else { st.drift };
            let var = st.sigma * st.sigma * s;
            let z: f64 = if st.sigma > 0.0 { StandardNormal.sample(rng) } else { 0.0 };
            let mut u1 = u + mu * s + var.sqrt() * z;
            let down_exit = if st.creeps { Exit::Creep } else { Exit::Down };
            let mut pinned = false;

            if reflected {
                let top = if cfg.bridge && var > 0.0 && may_cross(u, u1, b, var) {
                    bridge_max(u, u1, var, rng)
                } else {
                    u.max(u1)
                };
                if top > b {
                    let push = top - b;
                    rec.regulator += (-q * (t + 0.5 * s)).exp() * push;
                    u1 -= push;
                    pinned = var == 0.0 && u >= b;
                }
                let low = if cfg.bridge && var > 0.0 && may_cross(u, u1, a, var) {
                    bridge_min(u, u1, var, rng)
                } else {
                    u.min(u1)
                };
                if low <= a {
                    let frac = if u1 < a { (u - a) / (u - u1) } else { 0.5 };
                    add_occupation(&mut rec, a, bin_width, q, t, t + frac * s, u.max(a));
                    finish(&mut rec, t + frac * s, down_exit, a);
                    return rec;
                }
            } else {
                let hit_up = if u1 >= b {
                    Some((b - u) / (u1 - u))
                } else if cfg.bridge && var > 0.0 && may_cross(u, u1, b, var) && bridge_max(u, u1, var, rng) >= b {
                    Some(0.5)
                } else {
                    None
                };
                let hit_down = if u1 <= a {
                    Some((u - a) / (u - u1))
                } else if cfg.bridge && var > 0.0 && may_cross(u, u1, a, var) && bridge_min(u, u1, var, rng) <= a {
                    Some(0.5)
                } else {
                    None
                };
                let exit = match (hit_up, hit_down) {
                    (Some(f), None) => Some((Exit::Up, f, b)),
                    (None, Some(f)) => Some((down_exit, f, a)),
                    (Some(fu), Some(fd)) => {
                        if u1 >= b {
                            Some((Exit::Up, fu, b))
                        } else if u1 <= a {
                            Some((down_exit, fd, a))
                        } else if rng.random::<bool>() {
                            Some((Exit::Up, fu, b))
                        } else {
                            Some((down_exit, fd, a))
                        }
                    }
                    (None, None) => None,
                };
                if let Some((e, frac, pos)) = exit {
                    let frac = frac.clamp(0.0, 1.0);
                    add_occupation(&mut rec, a, bin_width, q, t, t + frac * s, 0.5 * (u + pos));
                    finish(&mut rec, t + frac * s, e, pos);
                    return rec;
                }
            }
            if pinned {
                let held = discounted_time(q, t, seg_end);
                rec.at_upper += held;
                rec.discounted_time += held;
            } else {
                add_occupation(&mut rec, a, bin_width, q, t, seg_end, 0.5 * (u + u1));
            }
            u = u1;
            t = seg_end;
            if seg_end == next_jump {
                u -= st.sampler.sample(rng);
                next_jump += next_arrival(rng);
                if u < a {
                    finish(&mut rec, t, Exit::Down, u);
                    return rec;
                }
            }
        }
    }
    rec.position = u;
    rec
}

fn add_occupation(rec: &mut PathRecord, a: f64, width: f64, q: f64, t0: f64, t1: f64, at: f64) {
    if t1 <= t0 {
        return;
    }
    let dt = discounted_time(q, t0, t1);
    rec.discounted_time += dt;
    let occ = &mut rec.occupation;
    if !occ.is_empty() {
        let i = (((at - a) / width).floor().max(0.0) as usize).min(occ.len() - 1);
        occ[i] += dt;
    }
}

/// Number of worker threads: the config, else the environment variable,
/// else the rayon default.
pub fn thread_count(cfg: &McConfig) -> Option<usize> {
    cfg.threads.or_else(|| {
        std::env::var(THREADS_ENV)
            .ok()
            .and_then(|s| s.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
    })
}

/// Simulates `cfg.paths` paths and accumulates the `k` statistics written by
/// `observe` for each path.
pub fn simulate<F>(model: &LevyTriplet, prob: &McProblem, cfg: &McConfig, k: usize, observe: F) -> Result<McSummary>
where
    F: Fn(&PathRecord, &mut [f64]) + Sync,
{
    cfg.validate()?;
    prob.validate(model)?;
    let st = Stepper::new(model, cfg.eps, cfg.small_jumps)?;
    let horizon = match cfg.horizon {
        Some(h) => h,
        None if prob.q > 0.0 => 50.0 / prob.q,
        None => return Err(Error::param("horizon", "required when q = 0")),
    };
    let chunk = cfg.chunk as u64;
    let n_chunks = cfg.paths.div_ceil(chunk);

    let run_chunk = |ci: u64| -> (Vec<Welford>, ExitCounts) {
        let mut stats = vec![Welford::default(); k];
        let mut counts = ExitCounts::default();
        let mut out = vec![0.0; k];
        let lo = ci * chunk;
        let hi = (lo + chunk).min(cfg.paths);
        for i in lo..hi {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i);
            let rec = simulate_path(&st, prob, cfg, horizon, &mut rng);
            counts.add(rec.exit);
            out.iter_mut().for_each(|v| *v = 0.0);
            observe(&rec, &mut out);
            for (s, v) in stats.iter_mut().zip(&out) {
                s.push(*v);
            }
        }
        (stats, counts)
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(cfg).unwrap_or(0))
        .build()
        .map_err(|e| Error::param("threads", e.to_string()))?;
    let parts: Vec<(Vec<Welford>, ExitCounts)> = pool.install(|| (0..n_chunks).into_par_iter().map(run_chunk).collect());

    let mut stats = vec![Welford::default(); k];
    let mut counts = ExitCounts::default();
    for (s, c) in &parts {
        for (acc, v) in stats.iter_mut().zip(s) {
            acc.merge(v);
        }
        counts.merge(c);
    }
    Ok(McSummary {
        stats,
        counts,
        n_paths: cfg.paths,
    })
}
