//! Monte Carlo estimators of exit functionals.

use serde::Serialize;

use super::{simulate, Exit, ExitCounts, McConfig, McProblem, McSummary, CAPPED_WARNING};
use crate::error::Result;
use crate::generator::Penalty;
use crate::gerber_shiu::{ExitProblem, ScaleOfScale};
use crate::levy_model::LevyTriplet;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: u64,
    pub capped_fraction: f64,
    /// Settings the estimate was produced with.
    #[serde(skip)]
    pub scheme: McConfig,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl McEstimate {
    pub(crate) fn from_summary(s: &McSummary, k: usize, scheme: &McConfig) -> Self {
        let capped = s.capped_fraction();
        let mut notes = Vec::new();
        if capped > CAPPED_WARNING {
            notes.push(format!("{:.2e} of paths reached the time horizon", capped));
        }
        McEstimate {
            mean: s.mean(k),
            stderr: s.stderr(k),
            n_paths: s.n_paths,
            capped_fraction: capped,
            scheme: *scheme,
            notes,
        }
    }

    /// Whether `value` lies within `k` standard errors plus `slack`.
    pub fn agrees_with(&self, value: f64, k: f64, slack: f64) -> bool {
        (self.mean - value).abs() <= k * self.stderr + slack
    }
}

/// Several functionals estimated from one set of paths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExitFunctionals {
    /// `E[e^{-qτ} f(X_τ); τ_a^- < τ_b^+]` per penalty, with `f(a)` on creeping paths.
    pub penalties: Vec<McEstimate>,
    pub exit_up: McEstimate,
    pub creeping: McEstimate,
    /// `q ∫₀^τ e^{-qs} ds`, the mass of the killed resolvent.
    pub killed_mass: McEstimate,
    /// Per path: killed mass + up exit + down exit, which is 1 for uncapped paths.
    pub mass_balance: McEstimate,
    /// Resolvent density on equal bins of `[a, b]` (empty unless requested).
    pub resolvent_density: Vec<McEstimate>,
    pub counts: ExitCounts,
}

pub fn exit_functionals(model: &LevyTriplet, prob: &McProblem, penalties: &[&Penalty], cfg: &McConfig) -> Result<ExitFunctionals> {
    let np = penalties.len();
    let bins = prob.occupation_bins;
    let k = np + 4 + bins;
    let (a, q) = (prob.a, prob.q);
    let summary = simulate(model, prob, cfg, k, |rec, out| {
        let killed = q * rec.discounted_time;
        match rec.exit {
            Exit::Down | Exit::Creep => {
                let at = if rec.exit == Exit::Creep { a } else { rec.position };
                for (o, f) in out.iter_mut().zip(penalties) {
                    *o = rec.discount * f.value(at);
                }
                if rec.exit == Exit::Creep {
                    out[np + 1] = rec.discount;
                }
            }
            Exit::Up => out[np] = rec.discount,
            Exit::Capped => {}
        }
        out[np + 2] = killed;
        out[np + 3] = killed + if rec.exit == Exit::Capped { 0.0 } else { rec.discount };
        for (o, v) in out[np + 4..].iter_mut().zip(&rec.occupation) {
            *o = *v;
        }
    })?;
    let width = (prob.b - prob.a) / bins.max(1) as f64;
    let resolvent_density = (0..bins)
        .map(|i| {
            let mut e = McEstimate::from_summary(&summary, np + 4 + i, cfg);
            e.mean /= width;
            e.stderr /= width;
            e
        })
        .collect();
    Ok(ExitFunctionals {
        penalties: (0..np).map(|i| McEstimate::from_summary(&summary, i, cfg)).collect(),
        exit_up: McEstimate::from_summary(&summary, np, cfg),
        creeping: McEstimate::from_summary(&summary, np + 1, cfg),
        killed_mass: McEstimate::from_summary(&summary, np + 2, cfg),
        mass_balance: McEstimate::from_summary(&summary, np + 3, cfg),
        resolvent_density,
        counts: summary.counts,
    })
}

/// `E_x[e^{-qτ_a^-} f(X_{τ_a^-}); τ_a^- < τ_b^+]` by simulation.
pub fn mc_gerber_shiu(model: &LevyTriplet, prob: &ExitProblem, f: &Penalty, cfg: &McConfig) -> Result<McEstimate> {
    let mp = McProblem::plain(prob.a, prob.b, prob.q, prob.x);
    Ok(exit_functionals(model, &mp, &[f], cfg)?.penalties.remove(0))
}

/// Overshoot of the scale function `W^(q)` for `Y_t = X_t - δt` killed at rate `p`.
pub fn mc_overshoot_of_scale_function(s: &ScaleOfScale, a: f64, b: f64, x: f64, cfg: &McConfig) -> Result<McEstimate> {
    let f = Penalty::scale_function(s.inner.clone());
    let y = s.outer.model();
    let mp = McProblem::plain(a, b, s.outer.q(), x);
    Ok(exit_functionals(y, &mp, &[&f], cfg)?.penalties.remove(0))
}
