//! Penalties with extensions, and the compensated generator `(A - q)h`.

pub mod membership;
pub mod penalty;

pub use membership::{check_membership, ConditionCheck, SimplificationFlags, IntegrabilityCheck, MembershipOptions, MembershipReport};
pub use penalty::{CustomExtension, DeclaredBounds, ExtendedPenalty, ExtensionRecipe, Penalty, RealFn, RecipeKind};

use crate::error::{Error, Result};
use crate::levy_model::{Activity, LevyTriplet};
use crate::numerics::{integrate_domain_lenient, Domain, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorOptions {
    /// Jumps below this size are handled by the second-order Taylor term
    /// `½ h''(x) ∫₀^ε θ² Π(dθ)` (infinite activity only).
    pub taylor_cutoff: f64,
    /// Cutoff of the fourth-order expansion used when `h` carries
    /// numerical noise.
    pub noisy_cutoff: f64,
    pub tol: Tolerance,
    /// A jump integral that stalls on cancellation noise is still accepted
    /// when its error estimate is below `accept · (1 + |h(x)|)`.
    pub accept: f64,
    /// Return the best estimate with its error instead of failing. Callers
    /// that multiply the result by a vanishing weight use this.
    pub lenient: bool,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        GeneratorOptions {
            taylor_cutoff: 1e-5,
            noisy_cutoff: 1e-2,
            tol: Tolerance::new(1e-13, 1e-11).with_max_panels(600),
            accept: 1e-8,
            lenient: false,
        }
    }
}

/// The pieces of `(A - q)h(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorValue {
    pub drift: f64,
    pub diffusion: f64,
    pub jumps: f64,
    pub killing: f64,
    pub error: f64,
}

impl GeneratorValue {
    pub fn total(&self) -> f64 {
        self.drift + self.diffusion + self.jumps + self.killing
    }
}

/// `(A - q)h(x)` for `x ∈ (a, b]`, where `h` is built from `p`.
pub fn apply_generator(p: &ExtendedPenalty, model: &LevyTriplet, q: f64, x: f64) -> Result<f64> {
    Ok(generator_parts(p, model, q, x, &GeneratorOptions::default())?.total())
}

pub fn generator_parts(
    p: &ExtendedPenalty,
    model: &LevyTriplet,
    q: f64,
    x: f64,
    opts: &GeneratorOptions,
) -> Result<GeneratorValue> {
    let (a, b) = (p.a(), p.b());
    if !(x > a && x <= b) {
        return Err(Error::param("x", format!("generator is evaluated on (a, b] = ({a}, {b}], got {x}")));
    }
    let hx = p.ext(x);
    let d1 = p.ext_d1(x);
    let sigma = model.sigma();
    let measure = model.measure();
    let infinite = measure.activity() == Activity::InfiniteActivity;
    let needs_d2 = sigma > 0.0 || infinite;
    let d2 = if needs_d2 { p.ext_d2(x) } else { 0.0 };

    let drift = model.gamma() * d1;
    let diffusion = 0.5 * sigma * sigma * d2;
    let killing = -q * hx;

    let (jumps, error) = if measure.is_zero() {
        (0.0, 0.0)
    } else {
        // Differences of noisy values are divided by θ^{1+α} near zero, so a
        // numerically computed h gets a longer, fourth-order expansion.
        let noisy = infinite && p.noise() > 0.0;
        let eps = if !infinite {
            0.0
        } else if noisy {
            let below = p.kinks().iter().filter(|&&k| k > a && k < x).fold(x - a, |m, &k| m.min(x - k));
            opts.noisy_cutoff.min(0.5 * below)
        } else {
            opts.taylor_cutoff.min(0.5 * (x - a))
        };
        let taylor = if !infinite {
            0.0
        } else if noisy {
            let h = eps;
            let (dm2, dm1, dp1, dp2) = (p.ext_d1(x - 2.0 * h), p.ext_d1(x - h), p.ext_d1(x + h), p.ext_d1(x + 2.0 * h));
            let d3 = (dp1 - 2.0 * d1 + dm1) / (h * h);
            let d4 = (dp2 - 2.0 * dp1 + 2.0 * dm1 - dm2) / (2.0 * h * h * h);
            0.5 * d2 * measure.moment_below(2, eps)? - d3 / 6.0 * measure.moment_below(3, eps)?
                + d4 / 24.0 * measure.moment_below(4, eps)?
        } else {
            0.5 * d2 * measure.moment_below(2, eps)?
        };
        let mut breaks = vec![x - a, 1.0];
        breaks.extend(p.kinks().iter().filter(|&&k| k < x).map(|k| x - k));
        breaks.extend(measure.breakpoints());
        if eps > 0.0 {
            let mut t = eps * 10.0;
            while t < 1.0 {
                breaks.push(t);
                t *= 10.0;
            }
            // resolve the branch switch at θ = x - a when it sits close to ε
            let mut t = (x - a) * 0.5;
            while t > eps * 1.5 {
                breaks.push(t);
                t *= 0.1;
            }
        }
        let dom = Domain::half_line(eps).with_breaks(breaks);
        let mut tol = opts.tol;
        if noisy {
            // no point refining below the noise floor of the integrand
            tol.abs = tol.abs.max(4.0 * p.noise() * (1.0 + hx.abs()) * measure.tail(eps));
        }
        let (est, failure) = integrate_domain_lenient(
            |theta: f64| {
                let dens = measure.density(theta);
                if dens == 0.0 {
                    return 0.0;
                }
                let comp = if theta <= 1.0 { d1 * theta } else { 0.0 };
                (p.h(x - theta) - hx + comp) * dens
            },
            &dom,
            &tol,
        );
        if let Some(e) = failure {
            if !opts.lenient && !(est.error <= opts.accept * (1.0 + hx.abs())) {
                return Err(e);
            }
        }
        (taylor + est.value, est.error)
    };
    Ok(GeneratorValue {
        drift,
        diffusion,
        jumps,
        killing,
        error,
    })
}

/// Reusable evaluator of `z ↦ (A - q)f̃(z)` for one penalty and model.
pub struct Generator<'a> {
    pub penalty: &'a ExtendedPenalty,
    pub model: &'a LevyTriplet,
    pub q: f64,
    pub options: GeneratorOptions,
}

impl<'a> Generator<'a> {
    pub fn new(penalty: &'a ExtendedPenalty, model: &'a LevyTriplet, q: f64) -> Self {
        Generator {
            penalty,
            model,
            q,
            options: GeneratorOptions::default(),
        }
    }

    pub fn with_options(mut self, options: GeneratorOptions) -> Self {
        self.options = options;
        self
    }

    pub fn eval(&self, z: f64) -> Result<GeneratorValue> {
        generator_parts(self.penalty, self.model, self.q, z, &self.options)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_model::catalog::{self, CanonicalModel};

    #[test]
    fn constants_are_harmonic() {
        for (_, m) in catalog::canonical_models() {
            let p = ExtendedPenalty::new(&Penalty::constant(1.0), ExtensionRecipe::ConstantOne, 0.0, 2.0).unwrap();
            for &x in &[0.01, 0.7, 2.0] {
                assert!((apply_generator(&p, &m, 0.3, x).unwrap() + 0.3).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn exponentials_are_eigenfunctions() {
        let lam = 0.8;
        for (name, m) in catalog::canonical_models() {
            let f = Penalty::exponential(lam);
            let ext = CustomExtension {
                f: std::sync::Arc::new(move |y: f64| (lam * y).exp()),
                d1: Some(std::sync::Arc::new(move |y: f64| lam * (lam * y).exp())),
                d2: Some(std::sync::Arc::new(move |y: f64| lam * lam * (lam * y).exp())),
                kinks: vec![],
            };
            let p = ExtendedPenalty::new(&f, ExtensionRecipe::Custom(ext), -1.0, 1.5).unwrap();
            let psi = m.laplace_exponent(lam).unwrap();
            for &x in &[-0.99, 0.0, 0.4, 1.5] {
                let v = apply_generator(&p, &m, 0.1, x).unwrap();
                let exact = (psi - 0.1) * (lam * x).exp();
                let tol = if name == CanonicalModel::TemperedStable { 1e-7 } else { 1e-10 };
                assert!((v - exact).abs() < tol * exact.abs().max(1.0), "{name:?} x={x}: {v} vs {exact}");
            }
        }
    }

    #[test]
    fn rejects_points_outside_interval() {
        let p = ExtendedPenalty::new(&Penalty::constant(1.0), ExtensionRecipe::ConstantOne, 0.0, 1.0).unwrap();
        let m = CanonicalModel::BrownianMotion.build();
        assert!(apply_generator(&p, &m, 0.0, 0.0).is_err());
        assert!(apply_generator(&p, &m, 0.0, 1.1).is_err());
    }
}
