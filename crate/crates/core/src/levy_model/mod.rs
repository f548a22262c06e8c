//! Spectrally negative Lévy processes given by their triplet `(γ, σ, Π)`.

pub mod catalog;
pub mod measure;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{exp_compensated, integrate_domain, roots, Domain, Tolerance};

pub use catalog::{canonical_models, CanonicalModel};
pub use measure::{Activity, Interpolation, JumpSampler, LevyMeasure, MeasureFamily, SmallJumps};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathVariation {
    Bounded,
    Unbounded,
}

/// Options for the real-axis quadrature of the jump part of `ψ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentOptions {
    /// Below this jump size the integrand is replaced by its Taylor expansion.
    pub taylor_cutoff: f64,
    pub tol: Tolerance,
}

impl Default for ExponentOptions {
    fn default() -> Self {
        ExponentOptions {
            taylor_cutoff: 1e-6,
            tol: Tolerance::new(1e-14, 1e-13),
        }
    }
}

/// Serialized form of a model, as found in spec files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyTripletSpec {
    pub gamma: f64,
    pub sigma: f64,
    #[serde(default = "no_measure")]
    pub measure: MeasureFamily,
}

fn no_measure() -> MeasureFamily {
    MeasureFamily::None
}

#[derive(Debug, Clone)]
pub struct LevyTriplet {
    gamma: f64,
    sigma: f64,
    measure: LevyMeasure,
    options: ExponentOptions,
}

impl LevyTriplet {
    pub fn new(gamma: f64, sigma: f64, measure: LevyMeasure) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::InvalidModel(format!("gamma must be finite (got {gamma})")));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidModel(format!("sigma must be non-negative (got {sigma})")));
        }
        let model = LevyTriplet {
            gamma,
            sigma,
            measure,
            options: ExponentOptions::default(),
        };
        if sigma == 0.0 {
            if let Some(d) = model.natural_drift() {
                if d <= 0.0 {
                    return Err(Error::InvalidModel(format!(
                        "natural drift {d} <= 0 without Gaussian part: paths are monotone decreasing"
                    )));
                }
            }
        }
        Ok(model)
    }

    pub fn from_spec(spec: &LevyTripletSpec) -> Result<Self> {
        LevyTriplet::new(spec.gamma, spec.sigma, LevyMeasure::new(spec.measure.clone())?)
    }

    pub fn to_spec(&self) -> LevyTripletSpec {
        LevyTripletSpec {
            gamma: self.gamma,
            sigma: self.sigma,
            measure: self.measure.family().clone(),
        }
    }

    pub fn with_options(mut self, options: ExponentOptions) -> Self {
        self.options = options;
        self
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn measure(&self) -> &LevyMeasure {
        &self.measure
    }

    /// The same process with its drift lowered by `delta`, i.e. `X_t - δt`.
    pub fn with_drift_shift(&self, delta: f64) -> Result<Self> {
        Ok(LevyTriplet::new(self.gamma - delta, self.sigma, self.measure.clone())?.with_options(self.options))
    }

    /// `γ + ∫₀¹ θ Π(dθ)`, defined when small jumps are integrable.
    pub fn natural_drift(&self) -> Option<f64> {
        self.measure.first_moment_near_zero().map(|m| self.gamma + m)
    }

    pub fn path_variation(&self) -> PathVariation {
        if self.sigma == 0.0 && self.measure.small_jumps() == SmallJumps::IntegrableSmallJumps {
            PathVariation::Bounded
        } else {
            PathVariation::Unbounded
        }
    }

    /// `E X_1 = ψ'(0+) = γ - ∫₁^∞ θ Π(dθ)`.
    pub fn mean(&self) -> f64 {
        self.gamma - self.measure.large_jump_mean()
    }

    /// `ψ(λ)` for real `λ ≥ 0`, with the jump integral computed by adaptive
    /// quadrature.
    pub fn laplace_exponent(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(Error::param("lambda", format!("must be >= 0 (got {lambda})")));
        }
        if lambda == 0.0 {
            return Ok(0.0);
        }
        let diffusive = self.gamma * lambda + 0.5 * self.sigma * self.sigma * lambda * lambda;
        Ok(diffusive + self.jump_part(lambda)?)
    }

    fn jump_part(&self, lambda: f64) -> Result<f64> {
        if self.measure.is_zero() {
            return Ok(0.0);
        }
        let m = &self.measure;
        let eps = self.options.taylor_cutoff.min(1e-3 / lambda.max(1.0));
        // ∫₀^ε (e^{-λθ} - 1 + λθ) Π(dθ) = Σ_{k≥2} (-λ)^k m_k(ε) / k!
        let mut taylor = 0.0;
        let mut coef = 0.5 * lambda * lambda;
        for k in 2..=5u32 {
            taylor += coef * m.moment_below(k, eps)?;
            coef *= -lambda / (k + 1) as f64;
        }
        let mut breaks = m.breakpoints();
        breaks.push(1.0);
        let mut p = eps;
        while p < 1.0 {
            breaks.push(p);
            p *= 10.0;
        }
        let dom = Domain::half_line(eps).with_breaks(breaks);
        let est = integrate_domain(
            |t: f64| {
                let d = m.density(t);
                if d == 0.0 {
                    return 0.0;
                }
                let c = if t <= 1.0 { exp_compensated(lambda * t) } else { (-lambda * t).exp_m1() };
                c * d
            },
            &dom,
            &self.options.tol,
        )?;
        Ok(taylor + est.value)
    }

    /// Analytic `ψ(s)` on the half plane where the measure's exponent is
    /// analytic; used for transform inversion.
    pub fn laplace_exponent_complex(&self, s: Complex64) -> Complex64 {
        s * self.gamma + s * s * (0.5 * self.sigma * self.sigma) + self.measure.jump_exponent(s)
    }

    /// `ψ'(s)` when available in closed form.
    pub fn laplace_exponent_derivative_complex(&self, s: Complex64) -> Option<Complex64> {
        self.measure
            .jump_exponent_derivative(s)
            .map(|j| j + self.gamma + s * (self.sigma * self.sigma))
    }

    /// `Φ(q)`, the largest root of `ψ(λ) = q`.
    pub fn right_inverse_phi(&self, q: f64) -> Result<f64> {
        if !(q >= 0.0 && q.is_finite()) {
            return Err(Error::param("q", format!("must be >= 0 (got {q})")));
        }
        let psi = |l: f64| self.laplace_exponent(l).unwrap_or(f64::NAN);
        if q == 0.0 && self.mean() >= 0.0 {
            return Ok(0.0);
        }
        let mut hi = 1.0;
        let mut tries = 0;
        while psi(hi) <= q {
            hi *= 2.0;
            tries += 1;
            if tries > 200 || !psi(hi).is_finite() {
                return Err(Error::RootFinding(format!("could not bracket ψ(λ) = {q}")));
            }
        }
        let lo = if q > 0.0 {
            0.0
        } else {
            roots::golden_min(psi, 0.0, hi, 200)
        };
        if q == 0.0 && psi(lo) >= 0.0 {
            return Ok(0.0);
        }
        roots::brent(|l| psi(l) - q, lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cl(c: f64, eta: f64, rho: f64) -> LevyTriplet {
        let m = LevyMeasure::new(MeasureFamily::Exponential { rate: eta, decay: rho }).unwrap();
        let m1 = m.first_moment_near_zero().unwrap();
        LevyTriplet::new(c - m1, 0.0, m).unwrap()
    }

    #[test]
    fn quadrature_exponent_matches_cramer_lundberg_closed_form() {
        let x = cl(1.5, 1.0, 1.0);
        for i in 0..=100 {
            let l = 0.5 * i as f64;
            let exact = 1.5 * l - l / (1.0 + l);
            let v = x.laplace_exponent(l).unwrap();
            assert!((v - exact).abs() <= 1e-10 * exact.abs().max(1e-300), "λ={l}: {v} vs {exact}");
        }
    }

    #[test]
    fn path_variation_classes() {
        assert_eq!(cl(1.5, 1.0, 1.0).path_variation(), PathVariation::Bounded);
        let bm = LevyTriplet::new(0.3, 1.0, LevyMeasure::none()).unwrap();
        assert_eq!(bm.path_variation(), PathVariation::Unbounded);
        let ts = LevyMeasure::new(MeasureFamily::TemperedStable { scale: 0.2, alpha: 1.5, decay: 1.0 }).unwrap();
        let x = LevyTriplet::new(0.3, 0.0, ts).unwrap();
        assert_eq!(x.path_variation(), PathVariation::Unbounded);
        assert!(x.natural_drift().is_none());
    }

    #[test]
    fn rejects_decreasing_paths() {
        let m = LevyMeasure::new(MeasureFamily::Exponential { rate: 1.0, decay: 1.0 }).unwrap();
        let m1 = m.first_moment_near_zero().unwrap();
        assert!(LevyTriplet::new(-m1, 0.0, m.clone()).is_err());
        assert!(LevyTriplet::new(-m1, 0.1, m).is_ok());
        assert!(LevyTriplet::new(0.0, 0.0, LevyMeasure::none()).is_err());
        assert!(LevyTriplet::new(1.0, -0.1, LevyMeasure::none()).is_err());
    }

    #[test]
    fn phi_brownian_quadratic_formula() {
        let (mu, s) = (0.3, 1.2);
        let x = LevyTriplet::new(mu, s, LevyMeasure::none()).unwrap();
        assert_eq!(x.right_inverse_phi(0.0).unwrap(), 0.0);
        for &q in &[0.01, 0.5, 3.0] {
            let exact = (-mu + (mu * mu + 2.0 * q * s * s).sqrt()) / (s * s);
            assert!((x.right_inverse_phi(q).unwrap() - exact).abs() < 1e-13);
        }
        let neg = LevyTriplet::new(-0.4, 1.0, LevyMeasure::none()).unwrap();
        assert!((neg.right_inverse_phi(0.0).unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn complex_exponent_agrees_on_real_axis() {
        let ts = LevyMeasure::new(MeasureFamily::TemperedStable { scale: 0.2, alpha: 1.5, decay: 1.0 }).unwrap();
        let x = LevyTriplet::new(0.4, 0.0, ts).unwrap();
        for &l in &[0.1, 1.0, 7.0, 50.0] {
            let a = x.laplace_exponent_complex(Complex64::new(l, 0.0)).re;
            let q = x.laplace_exponent(l).unwrap();
            assert!(((a - q) / a).abs() < 1e-10, "λ={l}: {a} vs {q}");
        }
    }
}
