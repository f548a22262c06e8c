//! The expected discounted penalty at passage below `a` for the process
//! reflected at its upper barrier `b`, and for the process refracted by a
//! drift `δ` above the level `c` and killed above `b`.
//!
//! Both identities take the same shape as the plain one: a boundary term, the
//! generator `(A - q)f̃` (minus `δ f̃'` above `c` when refracted) integrated
//! against the resolvent density, and a creeping correction. The ingredients
//! come either from scale-function formulas or from simulation.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{generator_parts, ExtendedPenalty};
use crate::gerber_shiu::{check_interval, check_q, integrate_against_generator, scale_error, ExitProblem, GsOptions, Terms};
use crate::levy_model::{LevyTriplet, PathVariation};
use crate::montecarlo::{simulate, Dynamics, Exit, McConfig, McProblem};
use crate::numerics::{integrate_domain_lenient, Domain, Tolerance};
use crate::scale::ScaleFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    ClosedForm,
    Mc,
}

/// Source of the exit ingredients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provider {
    ClosedForm,
    MonteCarlo { config: McConfig, bins: usize },
}

impl Provider {
    pub fn monte_carlo(config: McConfig) -> Self {
        Provider::MonteCarlo { config, bins: 200 }
    }

    pub fn kind(&self) -> ProviderKind {
        match self {
            Provider::ClosedForm => ProviderKind::ClosedForm,
            Provider::MonteCarlo { .. } => ProviderKind::Mc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Refraction {
    pub delta: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarrierValue {
    pub value: f64,
    pub terms: Terms,
    /// Deterministic numerical error estimate.
    pub accuracy: f64,
    /// Standard error when the ingredients are simulated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    pub provider: ProviderKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn reject_boundary_start(prob: &ExitProblem) -> Result<()> {
    if prob.x <= prob.a {
        return Err(Error::Unsupported("start at the lower barrier; use a > x".into()));
    }
    Ok(())
}

/// `E_x[∫₀^σ e^{-qt} dξ_t]` for the process reflected at `b` and killed below `a`.
pub fn reflected_regulator(sf: &ScaleFunction, prob: &ExitProblem) -> f64 {
    sf.w(prob.x - prob.a) / sf.w_prime(prob.b - prob.a)
}

/// Mass of the resolvent at `b` (positive for bounded variation only).
pub fn reflected_atom(sf: &ScaleFunction, prob: &ExitProblem) -> f64 {
    sf.w0() * reflected_regulator(sf, prob)
}

/// Density of the resolvent of the reflected process on `(a, b)`.
pub fn reflected_resolvent_density(sf: &ScaleFunction, prob: &ExitProblem, z: f64) -> f64 {
    let (a, b, x) = (prob.a, prob.b, prob.x);
    let u = z - a;
    let slope = reflected_slope_at_a(sf, prob);
    if u < 1e-6 * (x - a) {
        return u * slope;
    }
    sf.w(x - a) * sf.w_prime(b - z) / sf.w_prime(b - a) - sf.w(x - z)
}

fn reflected_slope_at_a(sf: &ScaleFunction, prob: &ExitProblem) -> f64 {
    let (a, b, x) = (prob.a, prob.b, prob.x);
    sf.w_prime(x - a) - sf.w(x - a) * sf.w_second(b - a) / sf.w_prime(b - a)
}

/// `E_x[e^{-qσ}; U_σ = a]` for the reflected process.
pub fn reflected_creeping(sf: &ScaleFunction, prob: &ExitProblem) -> f64 {
    let s = sf.model().sigma();
    if s == 0.0 {
        return 0.0;
    }
    0.5 * s * s * reflected_slope_at_a(sf, prob)
}

/// Scale functions of the refracted process, built from `W^(q)` of `X` and
/// `𝕎^(q)` of `Y_t = X_t - δt`.
#[derive(Debug, Clone)]
pub struct RefractedScale {
    pub x_scale: Arc<ScaleFunction>,
    pub y_scale: Arc<ScaleFunction>,
    pub refraction: Refraction,
    pub tol: Tolerance,
}

impl RefractedScale {
    pub fn new(sf: Arc<ScaleFunction>, refraction: Refraction) -> Result<Self> {
        check_refraction(sf.model(), refraction)?;
        let y = sf.model().with_drift_shift(refraction.delta)?;
        let ys = ScaleFunction::with_options(&y, sf.q(), *sf.options())?;
        Ok(RefractedScale {
            x_scale: sf,
            y_scale: Arc::new(ys),
            refraction,
            tol: Tolerance::new(1e-14, 1e-12).with_max_panels(400),
        })
    }

    fn convolve(&self, x: f64, lo: f64, z: f64, kernel: &dyn Fn(f64) -> f64) -> f64 {
        if x <= lo {
            return 0.0;
        }
        let ww = &self.y_scale;
        let dom = Domain::interval(lo, x)
            .graded_toward(lo, x, crate::gerber_shiu::usable_decades(lo, x - lo, 16))
            .graded_toward(x, lo, crate::gerber_shiu::usable_decades(x, x - lo, 16));
        let (est, _) = integrate_domain_lenient(|y| ww.w(x - y) * kernel(y - z), &dom, &self.tol);
        est.value
    }

    /// `w(x; z) = W(x-z) + δ ∫_{c∨z}^x 𝕎(x-y) W(dy - z)`, the measure `W(dy)`
    /// including its atom `W(0)` at zero.
    pub fn w(&self, x: f64, z: f64) -> f64 {
        let w = &self.x_scale;
        let Refraction { delta, c } = self.refraction;
        let base = w.w(x - z);
        if delta == 0.0 || x <= c || x < z {
            return base;
        }
        let lo = c.max(z);
        let mut v = base + delta * self.convolve(x, lo, z, &|u| w.w_prime(u));
        if z >= c {
            v += delta * w.w0() * self.y_scale.w(x - z);
        }
        v
    }

    /// `-∂_z w(x; z)` at `z = a < c`.
    fn v(&self, x: f64, a: f64) -> f64 {
        let w = &self.x_scale;
        let Refraction { delta, c } = self.refraction;
        let base = w.w_prime(x - a);
        if delta == 0.0 || x <= c {
            return base;
        }
        base + delta * self.convolve(x, c, a, &|u| w.w_second(u))
    }

    /// `E_x[e^{-qκ_b^+}; κ_b^+ < κ_a^-]`.
    pub fn exit_up(&self, prob: &ExitProblem) -> f64 {
        self.w(prob.x, prob.a) / self.w(prob.b, prob.a)
    }

    pub fn resolvent(&self, prob: &ExitProblem) -> RefractedResolvent<'_> {
        let (a, b, x) = (prob.a, prob.b, prob.x);
        let wxa = self.w(x, a);
        let wba = self.w(b, a);
        let ratio = wxa / wba;
        let slope = self.v(x, a) - ratio * self.v(b, a);
        RefractedResolvent {
            scale: self,
            a,
            b,
            x,
            ratio,
            slope,
        }
    }

    /// `E_x[e^{-qκ_a^-}; U_{κ_a^-} = a, κ_a^- < κ_b^+]`.
    pub fn creeping(&self, prob: &ExitProblem) -> f64 {
        let s = self.x_scale.model().sigma();
        if s == 0.0 {
            return 0.0;
        }
        0.5 * s * s * self.resolvent(prob).slope
    }
}

/// `z ↦ w(x;a) w(b;z) / w(b;a) - w(x;z)`.
pub struct RefractedResolvent<'s> {
    scale: &'s RefractedScale,
    a: f64,
    b: f64,
    x: f64,
    ratio: f64,
    slope: f64,
}

impl RefractedResolvent<'_> {
    pub fn density(&self, z: f64) -> f64 {
        let u = z - self.a;
        if u < 1e-6 * (self.x - self.a) {
            return u * self.slope;
        }
        self.ratio * self.scale.w(self.b, z) - self.scale.w(self.x, z)
    }
}

fn check_refraction(model: &LevyTriplet, r: Refraction) -> Result<()> {
    if !(r.delta >= 0.0 && r.delta.is_finite()) {
        return Err(Error::param("delta", "must be >= 0"));
    }
    if !r.c.is_finite() {
        return Err(Error::param("c", "must be finite"));
    }
    if model.path_variation() == PathVariation::Bounded {
        let d = model.natural_drift().unwrap_or(0.0);
        if r.delta >= d {
            return Err(Error::param(
                "delta",
                format!("bounded variation needs delta below the natural drift {d}"),
            ));
        }
    }
    Ok(())
}

/// The functional for the process reflected at `b`.
pub fn eval_reflected(
    p: &ExtendedPenalty,
    sf: &ScaleFunction,
    prob: &ExitProblem,
    provider: &Provider,
    opts: &GsOptions,
) -> Result<BarrierValue> {
    check_q(sf, prob)?;
    check_interval(p, prob)?;
    reject_boundary_start(prob)?;
    match provider {
        Provider::ClosedForm => {
            let model = sf.model();
            let boundary = p.ext(prob.x) - reflected_regulator(sf, prob) * p.ext_d1(prob.b);
            let (mut integral, err) = integrate_against_generator(
                p,
                model,
                prob.q,
                prob.a,
                prob.b,
                Some(prob.x),
                None,
                &|z| reflected_resolvent_density(sf, prob, z),
                opts,
            )?;
            let atom = reflected_atom(sf, prob);
            if atom != 0.0 {
                integral += atom * generator_parts(p, model, prob.q, prob.b, &opts.generator)?.total();
            }
            let jump = p.f(prob.a) - p.right_limit_at_a();
            let creeping = if jump == 0.0 { 0.0 } else { jump * reflected_creeping(sf, prob) };
            let terms = Terms {
                boundary,
                integral,
                creeping,
            };
            Ok(closed_value(terms, err + scale_error(sf, boundary.abs() + integral.abs())))
        }
        Provider::MonteCarlo { config, bins } => {
            mc_identity(p, sf.model(), prob, Dynamics::Reflected, None, config, *bins, opts)
        }
    }
}

/// The functional for the refracted process.
pub fn eval_refracted(
    p: &ExtendedPenalty,
    sf: &Arc<ScaleFunction>,
    prob: &ExitProblem,
    refraction: Refraction,
    provider: &Provider,
    opts: &GsOptions,
) -> Result<BarrierValue> {
    check_q(sf, prob)?;
    check_interval(p, prob)?;
    reject_boundary_start(prob)?;
    check_refraction(sf.model(), refraction)?;
    if !(refraction.c > prob.a && refraction.c < prob.b) {
        return Err(Error::param("c", "refraction level must lie in (a, b)"));
    }
    let rd = Some((refraction.delta, refraction.c));
    match provider {
        Provider::ClosedForm => {
            let rs = RefractedScale::new(sf.clone(), refraction)?;
            let boundary = p.ext(prob.x) - rs.exit_up(prob) * p.ext(prob.b);
            let res = rs.resolvent(prob);
            let (integral, err) = integrate_against_generator(
                p,
                sf.model(),
                prob.q,
                prob.a,
                prob.b,
                Some(prob.x),
                rd,
                &|z| res.density(z),
                opts,
            )?;
            let jump = p.f(prob.a) - p.right_limit_at_a();
            let creeping = if jump == 0.0 { 0.0 } else { jump * rs.creeping(prob) };
            let terms = Terms {
                boundary,
                integral,
                creeping,
            };
            Ok(closed_value(terms, err + scale_error(sf, boundary.abs() + integral.abs())))
        }
        Provider::MonteCarlo { config, bins } => mc_identity(
            p,
            sf.model(),
            prob,
            Dynamics::Refracted {
                delta: refraction.delta,
                c: refraction.c,
            },
            rd,
            config,
            *bins,
            opts,
        ),
    }
}

fn closed_value(terms: Terms, accuracy: f64) -> BarrierValue {
    BarrierValue {
        value: terms.boundary + terms.integral + terms.creeping,
        terms,
        accuracy,
        stderr: None,
        provider: ProviderKind::ClosedForm,
        n_paths: None,
        notes: Vec::new(),
    }
}

/// Evaluates the identity path by path: each path contributes its own
/// boundary term, its binned occupation against bin averages of the
/// integrand, and its creeping indicator.
#[allow(clippy::too_many_arguments)]
fn mc_identity(
    p: &ExtendedPenalty,
    model: &LevyTriplet,
    prob: &ExitProblem,
    dynamics: Dynamics,
    refraction: Option<(f64, f64)>,
    cfg: &McConfig,
    bins: usize,
    opts: &GsOptions,
) -> Result<BarrierValue> {
    if bins == 0 {
        return Err(Error::param("bins", "must be positive"));
    }
    let (a, b, q, x) = (prob.a, prob.b, prob.q, prob.x);
    let width = (b - a) / bins as f64;
    let coarse = GsOptions {
        grading_decades: 2,
        ..*opts
    };
    let mut averages = Vec::with_capacity(bins);
    let mut quad_err = 0.0;
    for k in 0..bins {
        let lo = a + k as f64 * width;
        let hi = if k + 1 == bins { b } else { lo + width };
        let o = if k == 0 { opts } else { &coarse };
        let (v, e) = integrate_against_generator(p, model, q, lo, hi, None, refraction, &|_| 1.0, o).map_err(|e| {
            Error::HypothesisViolation(format!("generator not integrable on [{lo}, {hi}]: {e}"))
        })?;
        averages.push(v / width);
        quad_err += e;
    }
    let at_b = if dynamics == Dynamics::Reflected {
        generator_parts(p, model, q, b, &opts.generator)?.total()
    } else {
        0.0
    };
    let fx = p.ext(x);
    let fb = p.ext(b);
    let dfb = p.ext_d1(b);
    let jump = p.f(a) - p.right_limit_at_a();
    let mp = McProblem::plain(a, b, q, x).with_dynamics(dynamics).with_occupation(bins);
    let summary = simulate(model, &mp, cfg, 4, |rec, out| {
        let boundary = match dynamics {
            Dynamics::Reflected => fx - rec.regulator * dfb,
            _ => fx - if rec.exit == Exit::Up { rec.discount * fb } else { 0.0 },
        };
        let integral: f64 = rec.occupation.iter().zip(&averages).map(|(o, g)| o * g).sum::<f64>() + rec.at_upper * at_b;
        let creeping = if rec.exit == Exit::Creep { jump * rec.discount } else { 0.0 };
        out[0] = boundary;
        out[1] = integral;
        out[2] = creeping;
        out[3] = boundary + integral + creeping;
    })?;
    let mut notes = vec![format!("integrand averaged over {bins} bins")];
    if summary.capped_fraction() > crate::montecarlo::CAPPED_WARNING {
        notes.push(format!("{:.2e} of paths reached the time horizon", summary.capped_fraction()));
    }
    Ok(BarrierValue {
        value: summary.mean(3),
        terms: Terms {
            boundary: summary.mean(0),
            integral: summary.mean(1),
            creeping: summary.mean(2),
        },
        accuracy: quad_err,
        stderr: Some(summary.stderr(3)),
        provider: ProviderKind::Mc,
        n_paths: Some(summary.n_paths),
        notes,
    })
}
