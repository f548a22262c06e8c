//! Exit identities and the expected discounted penalty at first passage below
//! `a` before exceeding `b`.

use std::cell::RefCell;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{
    check_membership, generator_parts, ExtendedPenalty, GeneratorOptions, MembershipOptions, MembershipReport, Penalty,
};
use crate::levy_model::{Activity, LevyTriplet, PathVariation};
use crate::numerics::{integrate_domain_lenient, Domain, Tolerance};
use crate::scale::{ScaleFunction, ScaleOptions};

/// Interval `[a, b]`, killing rate `q` and starting point `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitProblem {
    pub a: f64,
    pub b: f64,
    pub q: f64,
    pub x: f64,
}

impl ExitProblem {
    pub fn new(a: f64, b: f64, q: f64, x: f64) -> Result<Self> {
        let p = ExitProblem { a, b, q, x };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.b.is_finite() && self.a < self.b) {
            return Err(Error::param("a", format!("need a < b (got a={}, b={})", self.a, self.b)));
        }
        if !(self.q >= 0.0 && self.q.is_finite()) {
            return Err(Error::param("q", format!("must be >= 0 (got {})", self.q)));
        }
        if !(self.x >= self.a && self.x <= self.b) {
            return Err(Error::param("x", format!("must lie in [a, b] (got {})", self.x)));
        }
        Ok(())
    }

    pub fn with_x(&self, x: f64) -> Self {
        ExitProblem { x, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula {
    General,
    Simple,
    ZeroExtension,
    BoundaryStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaChoice {
    /// Simple form when a simplification condition holds, general form otherwise;
    /// boundary start when `x = a`.
    #[default]
    Auto,
    General,
    Simple,
    ZeroExtension,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Terms {
    pub boundary: f64,
    pub integral: f64,
    pub creeping: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GerberShiuValue {
    pub value: f64,
    pub terms: Terms,
    pub formula_used: Formula,
    /// Heuristic absolute error: quadrature estimates plus propagated
    /// generator and scale-function errors.
    pub accuracy: f64,
    pub notes: Vec<String>,
}

impl GerberShiuValue {
    fn from_terms(terms: Terms, formula_used: Formula, accuracy: f64, notes: Vec<String>) -> Self {
        GerberShiuValue {
            value: terms.boundary + terms.integral + terms.creeping,
            terms,
            formula_used,
            accuracy,
            notes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsOptions {
    pub tol: Tolerance,
    /// An outer integral stalled by noise in its integrand is accepted when
    /// the error estimate is below this.
    pub accept: f64,
    pub generator: GeneratorOptions,
    /// Panel budget of generator evaluations inside outer integrals, where a
    /// stalled inner integral is weighted by a vanishing factor.
    pub lenient_generator_panels: usize,
    pub grading_decades: u32,
    /// Refuse evaluation when the membership check fails.
    pub strict: bool,
    pub membership: MembershipOptions,
}

impl Default for GsOptions {
    fn default() -> Self {
        GsOptions {
            tol: Tolerance::new(1e-12, 1e-11).with_max_panels(600),
            accept: 1e-7,
            generator: GeneratorOptions::default(),
            lenient_generator_panels: 120,
            grading_decades: 24,
            strict: false,
            membership: MembershipOptions::default(),
        }
    }
}

pub(crate) fn check_q(sf: &ScaleFunction, prob: &ExitProblem) -> Result<()> {
    prob.validate()?;
    if sf.q() != prob.q {
        return Err(Error::param("q", format!("scale function built for q = {} but problem has q = {}", sf.q(), prob.q)));
    }
    Ok(())
}

/// `E_x[e^{-q τ_b^+} 1{τ_b^+ < τ_a^-}] = W(x-a) / W(b-a)`.
pub fn two_sided_exit_up(sf: &ScaleFunction, prob: &ExitProblem) -> f64 {
    if prob.x > prob.b {
        return 1.0;
    }
    sf.w(prob.x - prob.a) / sf.w(prob.b - prob.a)
}

/// `z ↦ R W(b-z) - W(x-z)` with `R = W(x-a)/W(b-a)`. Close to `a` the two
/// terms cancel, and the second-order expansion in `z - a` is used instead so
/// that errors in `W` are not amplified by singular integrands there.
pub(crate) struct ResolventWeight<'s> {
    sf: &'s ScaleFunction,
    a: f64,
    b: f64,
    x: f64,
    ratio: f64,
    taylor_below: f64,
    d1: f64,
    d2: f64,
}

impl<'s> ResolventWeight<'s> {
    pub(crate) fn new(sf: &'s ScaleFunction, prob: &ExitProblem) -> Self {
        let ratio = two_sided_exit_up(sf, prob);
        let (a, b, x) = (prob.a, prob.b, prob.x);
        let mut w = ResolventWeight {
            sf,
            a,
            b,
            x,
            ratio,
            taylor_below: 0.0,
            d1: 0.0,
            d2: 0.0,
        };
        if x > a {
            w.taylor_below = 1e-4 * (x - a);
            w.d1 = ratio * sf.w_prime(b - a) - sf.w_prime(x - a);
            w.d2 = ratio * sf.w_second(b - a) - sf.w_second(x - a);
        }
        w
    }

    pub(crate) fn ratio(&self) -> f64 {
        self.ratio
    }

    pub(crate) fn eval(&self, z: f64) -> f64 {
        let u = z - self.a;
        if u < self.taylor_below {
            return -u * self.d1 + 0.5 * u * u * self.d2;
        }
        self.ratio * self.sf.w(self.b - z) - self.sf.w(self.x - z)
    }
}

/// Density at `z` of the `q`-resolvent of the process killed on leaving `[a, b]`.
pub fn resolvent_density(sf: &ScaleFunction, prob: &ExitProblem, z: f64) -> Result<f64> {
    check_q(sf, prob)?;
    if !(z >= prob.a && z <= prob.b) {
        return Err(Error::param("z", format!("must lie in [a, b] (got {z})")));
    }
    let weight = ResolventWeight::new(sf, prob);
    let r = weight.eval(z);
    let tol = 1e-9 * (weight.ratio() * sf.w(prob.b - z)).abs().max(1e-12);
    if r < -tol {
        return Err(Error::NumericalAccuracy {
            what: format!("resolvent density at z = {z} is negative"),
            achieved: r,
            target: 0.0,
        });
    }
    Ok(r.max(0.0))
}

/// `E_x[e^{-q τ_a^-} 1{X_{τ_a^-} = a, τ_a^- < τ_b^+}]`.
pub fn creeping_transform(sf: &ScaleFunction, prob: &ExitProblem) -> f64 {
    let sigma = sf.model().sigma();
    if sigma == 0.0 {
        return 0.0;
    }
    if prob.x <= prob.a {
        return 1.0;
    }
    let ratio = two_sided_exit_up(sf, prob);
    0.5 * sigma * sigma * (sf.w_prime(prob.x - prob.a) - ratio * sf.w_prime(prob.b - prob.a))
}

/// Number of decades a geometric grading toward `point` can use before the
/// breakpoints collapse onto it in floating point.
pub(crate) fn usable_decades(point: f64, span: f64, max: u32) -> u32 {
    if span <= 0.0 {
        return 0;
    }
    let resolution = 64.0 * f64::EPSILON * point.abs().max(f64::MIN_POSITIVE);
    let d = (span / resolution).log10().floor();
    (d.max(0.0) as u32).min(max)
}

pub(crate) fn outer_domain(lo: f64, hi: f64, x: Option<f64>, kinks: &[f64], decades: u32) -> Domain {
    let mut dom = Domain::interval(lo, hi).with_breaks(kinks.iter().copied());
    let span = hi - lo;
    dom = dom.graded_toward(lo, hi, usable_decades(lo, span, decades));
    dom = dom.graded_toward(hi, lo, usable_decades(hi, span, decades));
    if let Some(x) = x {
        if x > lo && x < hi {
            dom = dom
                .with_breaks([x])
                .graded_toward(x, lo, usable_decades(x, x - lo, decades))
                .graded_toward(x, hi, usable_decades(x, hi - x, decades.min(4)));
        }
    }
    dom
}

/// Width of the grid cell around `z` in a grid graded geometrically toward
/// the points in `singular`.
fn local_cell(z: f64, lo: f64, hi: f64, singular: &[f64]) -> f64 {
    let d = singular.iter().map(|s| (z - s).abs()).fold(hi - lo, f64::min);
    (10.0 * d).min(hi - lo)
}

/// Integrates `weight(z) · (A - q)f̃(z)` over `[lo, hi]`, returning the value
/// and an error estimate. With `refraction = Some((δ, c))` the integrand is
/// `weight(z) · ((A - q)f̃(z) - δ 1{z > c} f̃'(z))`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn integrate_against_generator(
    p: &ExtendedPenalty,
    model: &LevyTriplet,
    q: f64,
    lo: f64,
    hi: f64,
    x: Option<f64>,
    refraction: Option<(f64, f64)>,
    weight: &dyn Fn(f64) -> f64,
    opts: &GsOptions,
) -> Result<(f64, f64)> {
    if hi <= lo {
        return Ok((0.0, 0.0));
    }
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let gen_err = RefCell::new(0.0f64);
    let mut kinks: Vec<f64> = p.kinks().into_iter().filter(|&k| k > lo && k < hi).collect();
    if let Some((_, c)) = refraction {
        if c > lo && c < hi {
            kinks.push(c);
        }
    }
    let mut singular = vec![lo, hi];
    singular.extend(x);
    singular.extend(kinks.iter().copied());
    let dom = outer_domain(lo, hi, x, &kinks, opts.grading_decades);
    let gen_opts = GeneratorOptions {
        lenient: true,
        tol: opts.generator.tol.with_max_panels(opts.lenient_generator_panels),
        ..opts.generator
    };
    let (est, quad_failure) = integrate_domain_lenient(
        |z: f64| {
            if z <= p.a() || failure.borrow().is_some() {
                return 0.0;
            }
            let w = weight(z);
            if w == 0.0 {
                return 0.0;
            }
            match generator_parts(p, model, q, z, &gen_opts) {
                Ok(g) => {
                    let mut e = gen_err.borrow_mut();
                    *e = e.max(g.error * w.abs() * local_cell(z, lo, hi, &singular));
                    let shift = match refraction {
                        Some((delta, c)) if z > c => delta * p.ext_d1(z),
                        _ => 0.0,
                    };
                    (g.total() - shift) * w
                }
                Err(e) => {
                    *failure.borrow_mut() = Some(e);
                    0.0
                }
            }
        },
        &dom,
        &opts.tol,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    if let Some(e) = quad_failure {
        if !(est.error <= opts.accept) {
            return Err(e);
        }
    }
    Ok((est.value, est.error + gen_err.into_inner()))
}

pub(crate) fn scale_error(sf: &ScaleFunction, magnitude: f64) -> f64 {
    let rel = match sf.method() {
        crate::scale::ScaleMethod::ClosedForm => 1e-14,
        crate::scale::ScaleMethod::LaplaceInversion => 1e-10,
    };
    rel * magnitude.abs()
}

/// The identity valid for every admissible extension, with the creeping
/// correction for a jump of `f̃` at `a`.
pub fn overshoot_functional_general(
    p: &ExtendedPenalty,
    sf: &ScaleFunction,
    prob: &ExitProblem,
    opts: &GsOptions,
) -> Result<GerberShiuValue> {
    check_q(sf, prob)?;
    check_interval(p, prob)?;
    if prob.x <= prob.a {
        return Err(Error::param("x", "general form needs a < x; use boundary_start at x = a"));
    }
    let weight = ResolventWeight::new(sf, prob);
    let boundary = p.ext(prob.x) - weight.ratio() * p.ext(prob.b);
    let (integral, err) =
        integrate_against_generator(p, sf.model(), prob.q, prob.a, prob.b, Some(prob.x), None, &|z| weight.eval(z), opts)?;
    let jump = p.f(prob.a) - p.right_limit_at_a();
    let creeping = if jump == 0.0 { 0.0 } else { jump * creeping_transform(sf, prob) };
    let terms = Terms {
        boundary,
        integral,
        creeping,
    };
    let accuracy = err + scale_error(sf, boundary.abs() + integral.abs() + creeping.abs());
    Ok(GerberShiuValue::from_terms(terms, Formula::General, accuracy, Vec::new()))
}

pub(crate) fn check_interval(p: &ExtendedPenalty, prob: &ExitProblem) -> Result<()> {
    if p.a() != prob.a || p.b() != prob.b {
        return Err(Error::param(
            "a",
            format!("penalty built on ({}, {}] but problem uses [{}, {}]", p.a(), p.b(), prob.a, prob.b),
        ));
    }
    Ok(())
}

fn simplification_gate(report: &MembershipReport) -> Result<()> {
    if report.simple_form_admissible() {
        return Ok(());
    }
    let failed: Vec<String> = report
        .failed()
        .iter()
        .map(|c| format!("{} failed ({})", c.name, c.evidence))
        .collect();
    let mut msg = format!(
        "none of the conditions for the simple form holds ((i) integrable small jumps and sigma = 0; \
         (ii) integrable small jumps and an extension continuous at a; (iii) non-integrable small jumps \
         and h Lipschitz around a); found: {}; use the general form",
        report.simplification_evidence
    );
    if !failed.is_empty() {
        msg.push_str(&format!(". Membership: {}", failed.join("; ")));
    }
    Err(Error::ConditionNotMet(msg))
}

/// The simplified identity, available when one of the simplification conditions holds.
pub fn overshoot_functional_simple(
    p: &ExtendedPenalty,
    sf: &ScaleFunction,
    prob: &ExitProblem,
    report: &MembershipReport,
    opts: &GsOptions,
) -> Result<GerberShiuValue> {
    check_q(sf, prob)?;
    check_interval(p, prob)?;
    simplification_gate(report)?;
    if prob.x <= prob.a {
        return Err(Error::param("x", "simple form needs a < x; use boundary_start at x = a"));
    }
    let model = sf.model();
    let (a, b, x) = (prob.a, prob.b, prob.x);
    let ratio = two_sided_exit_up(sf, prob);
    let (ix, ex) = integrate_against_generator(p, model, prob.q, a, x, None, None, &|z| sf.w(x - z), opts)?;
    let (ib, eb) = integrate_against_generator(p, model, prob.q, a, b, None, None, &|z| sf.w(b - z), opts)?;
    let boundary = p.ext(x) - ratio * p.ext(b);
    let integral = -ix + ratio * ib;
    let terms = Terms {
        boundary,
        integral,
        creeping: 0.0,
    };
    let accuracy = ex + ratio * eb + scale_error(sf, boundary.abs() + ix.abs() + ratio * ib.abs());
    let notes = vec![format!(
        "simplification condition(s) {} verified numerically",
        report.simplification.labels().join(", ")
    )];
    Ok(GerberShiuValue::from_terms(terms, Formula::Simple, accuracy, notes))
}

/// `∫_{z-a}^∞ f(z - θ) Π(dθ)`.
fn overshoot_kernel(f: &Penalty, model: &LevyTriplet, a: f64, z: f64, opts: &GsOptions) -> Result<(f64, f64)> {
    let m = model.measure();
    let lower = z - a;
    if let Some(c) = f.as_constant() {
        return Ok((c * m.tail(lower), 0.0));
    }
    let mut breaks: Vec<f64> = f.kinks().iter().map(|k| z - k).collect();
    breaks.extend(m.breakpoints());
    breaks.push(1.0);
    let mut dom = Domain::half_line(lower).with_breaks(breaks);
    if m.activity() == Activity::InfiniteActivity {
        dom = dom.graded_toward(lower, lower + 1.0, usable_decades(lower, 1.0, 12));
    }
    let (est, failure) = integrate_domain_lenient(|t| f.value(z - t) * m.density(t), &dom, &opts.generator.tol);
    if let Some(e) = failure {
        if !(est.error <= opts.generator.accept * (1.0 + est.value.abs())) {
            return Err(Error::HypothesisViolation(format!("overshoot kernel at z = {z}: {e}")));
        }
    }
    Ok((est.value, est.error))
}

/// The zero-extension form: overshoot kernel against the resolvent, plus
/// `f(a)` times the creeping transform.
pub fn overshoot_zero_extension(f: &Penalty, sf: &ScaleFunction, prob: &ExitProblem, opts: &GsOptions) -> Result<GerberShiuValue> {
    check_q(sf, prob)?;
    if prob.x <= prob.a {
        return Err(Error::param("x", "zero-extension form needs a < x"));
    }
    let model = sf.model();
    let weight = ResolventWeight::new(sf, prob);
    let creeping = f.value(prob.a) * creeping_transform(sf, prob);
    let (integral, err) = if model.measure().is_zero() {
        (0.0, 0.0)
    } else {
        let failure: RefCell<Option<Error>> = RefCell::new(None);
        let kerr = RefCell::new(0.0f64);
        let dom = outer_domain(prob.a, prob.b, Some(prob.x), &[], opts.grading_decades);
        let (est, quad_failure) = integrate_domain_lenient(
            |z: f64| {
                if z <= prob.a || failure.borrow().is_some() {
                    return 0.0;
                }
                let w = weight.eval(z);
                if w == 0.0 {
                    return 0.0;
                }
                match overshoot_kernel(f, model, prob.a, z, opts) {
                    Ok((k, e)) => {
                        let mut acc = kerr.borrow_mut();
                        *acc = acc.max(e * w.abs() * local_cell(z, prob.a, prob.b, &[prob.a, prob.x, prob.b]));
                        k * w
                    }
                    Err(e) => {
                        *failure.borrow_mut() = Some(e);
                        0.0
                    }
                }
            },
            &dom,
            &opts.tol,
        );
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        if let Some(e) = quad_failure {
            if !(est.error <= opts.accept) {
                return Err(e);
            }
        }
        (est.value, est.error + kerr.into_inner())
    };
    let terms = Terms {
        boundary: 0.0,
        integral,
        creeping,
    };
    let accuracy = err + scale_error(sf, integral.abs() + creeping.abs());
    Ok(GerberShiuValue::from_terms(terms, Formula::ZeroExtension, accuracy, Vec::new()))
}

/// The functional started exactly at `x = a`.
pub fn boundary_start(p: &ExtendedPenalty, sf: &ScaleFunction, prob: &ExitProblem, opts: &GsOptions) -> Result<GerberShiuValue> {
    check_q(sf, prob)?;
    check_interval(p, prob)?;
    if prob.x != prob.a {
        return Err(Error::param("x", "boundary start requires x = a exactly"));
    }
    let model = sf.model();
    match model.path_variation() {
        PathVariation::Unbounded => {
            let terms = Terms {
                boundary: p.f(prob.a),
                integral: 0.0,
                creeping: 0.0,
            };
            Ok(GerberShiuValue::from_terms(
                terms,
                Formula::BoundaryStart,
                0.0,
                vec!["unbounded variation: immediate passage at a".into()],
            ))
        }
        PathVariation::Bounded => {
            let (a, b) = (prob.a, prob.b);
            let ratio = sf.w0() / sf.w(b - a);
            let (ib, eb) = integrate_against_generator(p, model, prob.q, a, b, None, None, &|z| sf.w(b - z), opts)?;
            let terms = Terms {
                boundary: p.right_limit_at_a() - ratio * p.ext(b),
                integral: ratio * ib,
                creeping: 0.0,
            };
            let accuracy = ratio * eb + scale_error(sf, terms.boundary.abs() + terms.integral.abs());
            Ok(GerberShiuValue::from_terms(terms, Formula::BoundaryStart, accuracy, Vec::new()))
        }
    }
}

/// Evaluates with the requested formula. `report` may be supplied to skip the
/// membership check.
pub fn evaluate(
    p: &ExtendedPenalty,
    sf: &ScaleFunction,
    prob: &ExitProblem,
    choice: FormulaChoice,
    report: Option<&MembershipReport>,
    opts: &GsOptions,
) -> Result<GerberShiuValue> {
    if prob.x == prob.a && choice != FormulaChoice::ZeroExtension {
        return boundary_start(p, sf, prob, opts);
    }
    let owned;
    let report = match report {
        Some(r) => r,
        None => {
            owned = check_membership(p, sf.model(), &opts.membership);
            &owned
        }
    };
    if !report.member && opts.strict {
        return Err(Error::HypothesisViolation(format!(
            "membership check failed: {:?}",
            report.failed().iter().map(|c| c.name).collect::<Vec<_>>()
        )));
    }
    let mut v = match choice {
        FormulaChoice::General => overshoot_functional_general(p, sf, prob, opts)?,
        FormulaChoice::Simple => overshoot_functional_simple(p, sf, prob, report, opts)?,
        FormulaChoice::ZeroExtension => overshoot_zero_extension(p.penalty(), sf, prob, opts)?,
        FormulaChoice::Auto => {
            if report.simple_form_admissible() {
                overshoot_functional_simple(p, sf, prob, report, opts)?
            } else {
                overshoot_functional_general(p, sf, prob, opts)?
            }
        }
    };
    if !report.member {
        v.notes.extend(report.notes.iter().cloned());
    }
    Ok(v)
}

/// Scale functions of `X` (at rate `q`) and of `Y_t = X_t - δt` (at rate `p`).
#[derive(Debug, Clone)]
pub struct ScaleOfScale {
    pub inner: Arc<ScaleFunction>,
    pub outer: Arc<ScaleFunction>,
    pub delta: f64,
}

impl ScaleOfScale {
    pub fn new(model: &LevyTriplet, delta: f64, p_kill: f64, q_inner: f64, options: ScaleOptions) -> Result<Self> {
        if !(delta >= 0.0) {
            return Err(Error::param("delta", "must be >= 0"));
        }
        let y = model.with_drift_shift(delta)?;
        Ok(ScaleOfScale {
            inner: Arc::new(ScaleFunction::with_options(model, q_inner, options)?),
            outer: Arc::new(ScaleFunction::with_options(&y, p_kill, options)?),
            delta,
        })
    }
}

/// `E_x[e^{-p ν_a^-} W^(q)(Y_{ν_a^-}) 1{ν_a^- < ν_b^+}]` for `Y_t = X_t - δt`,
/// where `ν` are the passage times of `Y` and `W^(q)` is the scale function of `X`.
pub fn overshoot_of_scale_function(s: &ScaleOfScale, a: f64, b: f64, x: f64, opts: &GsOptions) -> Result<GerberShiuValue> {
    if !(0.0 <= a && a <= x && x < b) {
        return Err(Error::param("x", format!("need 0 <= a <= x < b (got a={a}, x={x}, b={b})")));
    }
    let w = &s.inner;
    let ww = &s.outer;
    let (q, p, delta) = (w.q(), ww.q(), s.delta);
    let g = |z: f64| (q - p) * w.w(z) - delta * w.w_prime(z);
    let integral = |upper: f64| -> Result<(f64, f64)> {
        if upper <= a {
            return Ok((0.0, 0.0));
        }
        let dom = outer_domain(a, upper, None, &[0.0], opts.grading_decades);
        let (est, failure) = integrate_domain_lenient(|z| if z <= 0.0 { 0.0 } else { g(z) * ww.w(upper - z) }, &dom, &opts.tol);
        if let Some(e) = failure {
            if !(est.error <= opts.accept) {
                return Err(e);
            }
        }
        Ok((est.value, est.error))
    };
    let (ix, ex) = integral(x)?;
    let (ib, eb) = integral(b)?;
    let ratio = ww.w(x - a) / ww.w(b - a);
    let terms = Terms {
        boundary: w.w(x) - ratio * w.w(b),
        integral: -ix + ratio * ib,
        creeping: 0.0,
    };
    let accuracy = ex + ratio * eb + scale_error(w, terms.boundary.abs() + terms.integral.abs()) + scale_error(ww, ix.abs() + ib.abs());
    Ok(GerberShiuValue::from_terms(terms, Formula::Simple, accuracy, Vec::new()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::ExtensionRecipe;
    use crate::levy_model::catalog::CanonicalModel;

    #[test]
    fn exit_up_edge_cases() {
        let m = CanonicalModel::TemperedStable.build();
        let sf = ScaleFunction::new(&m, 0.1).unwrap();
        let prob = ExitProblem::new(0.0, 2.0, 0.1, 2.0).unwrap();
        assert_eq!(two_sided_exit_up(&sf, &prob), 1.0);
        assert_eq!(two_sided_exit_up(&sf, &prob.with_x(0.0)), 0.0);
        let mut below = prob;
        below.x = -0.5;
        assert_eq!(two_sided_exit_up(&sf, &below), 0.0);
    }

    #[test]
    fn creeping_vanishes_without_gaussian_part() {
        for m in [CanonicalModel::CramerLundberg, CanonicalModel::TemperedStable] {
            let sf = ScaleFunction::new(&m.build(), 0.1).unwrap();
            let prob = ExitProblem::new(0.0, 2.0, 0.1, 1.0).unwrap();
            assert_eq!(creeping_transform(&sf, &prob), 0.0);
        }
    }

    #[test]
    fn constant_penalty_simple_form_is_z_identity() {
        let m = CanonicalModel::JumpDiffusion.build();
        let sf = ScaleFunction::new(&m, 0.1).unwrap();
        let prob = ExitProblem::new(0.0, 2.0, 0.1, 0.7).unwrap();
        let p = ExtendedPenalty::new(&Penalty::constant(1.0), ExtensionRecipe::ConstantOne, 0.0, 2.0).unwrap();
        let report = check_membership(&p, &m, &MembershipOptions::default());
        let v = overshoot_functional_simple(&p, &sf, &prob, &report, &GsOptions::default()).unwrap();
        let expected = sf.z(0.7).unwrap() - sf.w(0.7) * sf.z(2.0).unwrap() / sf.w(2.0);
        assert!((v.value - expected).abs() < 1e-10, "{} vs {expected}", v.value);
        assert_eq!(v.value, v.terms.boundary + v.terms.integral + v.terms.creeping);
    }

    #[test]
    fn unbounded_variation_boundary_start_returns_penalty() {
        let m = CanonicalModel::TemperedStable.build();
        let sf = ScaleFunction::new(&m, 0.1).unwrap();
        let prob = ExitProblem::new(0.0, 2.0, 0.1, 0.0).unwrap();
        let p = ExtendedPenalty::new(&Penalty::exponential(1.0), ExtensionRecipe::Zero, 0.0, 2.0).unwrap();
        let v = boundary_start(&p, &sf, &prob, &GsOptions::default()).unwrap();
        assert_eq!(v.value, 1.0);
    }

    #[test]
    fn simple_form_refused_without_simplification_condition() {
        let m = CanonicalModel::TemperedStable.build();
        let sf = ScaleFunction::new(&m, 0.1).unwrap();
        let prob = ExitProblem::new(0.0, 2.0, 0.1, 1.0).unwrap();
        let p = ExtendedPenalty::new(&Penalty::constant(1.0), ExtensionRecipe::Zero, 0.0, 2.0).unwrap();
        let r = evaluate(&p, &sf, &prob, FormulaChoice::Simple, None, &GsOptions::default());
        assert!(matches!(r, Err(Error::ConditionNotMet(_))));
    }
}
