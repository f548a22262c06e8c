//! The q-scale functions `W^(q)` and `Z^(q)`.
//!
//! `W^(q)` is the function on `[0, ∞)` whose Laplace transform is
//! `1 / (ψ(λ) - q)` for `λ > Φ(q)`, extended by zero on the negative half line.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::levy_model::{LevyTriplet, MeasureFamily, PathVariation};
use crate::numerics::{integrate, integrate_domain, Domain, EulerInversion, MonotoneCubic, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMethod {
    ClosedForm,
    LaplaceInversion,
}

/// Which evaluation route to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MethodChoice {
    /// Closed form when the measure is exponential or absent, inversion otherwise.
    #[default]
    Auto,
    ClosedForm,
    LaplaceInversion,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleOptions {
    pub method: MethodChoice,
    pub inversion: EulerInversion,
    /// Relative accuracy required of checked evaluations.
    pub target: f64,
    pub z_tol: Tolerance,
}

impl Default for ScaleOptions {
    fn default() -> Self {
        ScaleOptions {
            method: MethodChoice::Auto,
            inversion: EulerInversion::default(),
            target: 1e-8,
            z_tol: Tolerance::new(1e-13, 1e-12),
        }
    }
}

#[derive(Debug, Clone)]
struct ExpSum {
    // W(x) = w0 + Σ c_k (e^{r_k x} - 1)
    rates: Vec<f64>,
    coefs: Vec<f64>,
}

#[derive(Debug, Clone)]
struct GridCache {
    upper: f64,
    w: MonotoneCubic,
    error: f64,
}

/// Evaluator bundle for `W^(q)`, its derivatives and `Z^(q)` of one model.
#[derive(Debug, Clone)]
pub struct ScaleFunction {
    model: LevyTriplet,
    q: f64,
    phi: f64,
    w0: f64,
    method: ScaleMethod,
    options: ScaleOptions,
    closed: Option<ExpSum>,
    cache: Option<GridCache>,
}

/// A value together with an estimate of its absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluated {
    pub value: f64,
    pub error: f64,
}

impl ScaleFunction {
    pub fn new(model: &LevyTriplet, q: f64) -> Result<Self> {
        Self::with_options(model, q, ScaleOptions::default())
    }

    pub fn with_options(model: &LevyTriplet, q: f64, options: ScaleOptions) -> Result<Self> {
        if !(q >= 0.0 && q.is_finite()) {
            return Err(Error::param("q", format!("must be >= 0 (got {q})")));
        }
        let phi = model.right_inverse_phi(q)?;
        let w0 = match model.path_variation() {
            PathVariation::Unbounded => 0.0,
            PathVariation::Bounded => 1.0 / model.natural_drift().expect("bounded variation has a natural drift"),
        };
        let closed = match options.method {
            MethodChoice::LaplaceInversion => None,
            MethodChoice::Auto => exponential_sum(model, q, w0),
            MethodChoice::ClosedForm => Some(exponential_sum(model, q, w0).ok_or_else(|| {
                Error::Unsupported("no closed form scale function for this measure family".into())
            })?),
        };
        let method = if closed.is_some() {
            ScaleMethod::ClosedForm
        } else {
            ScaleMethod::LaplaceInversion
        };
        Ok(ScaleFunction {
            model: model.clone(),
            q,
            phi,
            w0,
            method,
            options,
            closed,
            cache: None,
        })
    }

    pub fn model(&self) -> &LevyTriplet {
        &self.model
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `Φ(q)`.
    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// `W^(q)(0+)`.
    pub fn w0(&self) -> f64 {
        self.w0
    }

    pub fn method(&self) -> ScaleMethod {
        self.method
    }

    pub fn options(&self) -> &ScaleOptions {
        &self.options
    }

    /// Replaces direct inversion on `(0, upper]` by a shape-preserving cubic
    /// through `nodes` geometrically spaced inverted values. The interpolation
    /// error measured at cell midpoints is folded into [`Self::w_checked`].
    pub fn with_grid_cache(mut self, upper: f64, nodes: usize) -> Result<Self> {
        if self.method == ScaleMethod::ClosedForm {
            return Ok(self);
        }
        if !(upper > 0.0) || nodes < 4 {
            return Err(Error::param("nodes", "grid cache needs upper > 0 and at least 4 nodes"));
        }
        let lo = upper * 1e-6;
        let ratio = (upper / lo).powf(1.0 / (nodes - 2) as f64);
        let mut xs = vec![0.0];
        let mut x = lo;
        for _ in 0..nodes - 1 {
            xs.push(x.min(upper));
            x *= ratio;
        }
        let ys: Vec<f64> = xs.iter().map(|&x| self.w_direct(x)).collect();
        let w = MonotoneCubic::new(xs.clone(), ys);
        let mut error: f64 = 0.0;
        for pair in xs.windows(2).skip(1) {
            let m = 0.5 * (pair[0] + pair[1]);
            let exact = self.w_direct(m);
            error = error.max((w.eval(m) - exact).abs() / exact.abs().max(1e-300));
        }
        self.cache = Some(GridCache { upper, w, error });
        Ok(self)
    }

    /// Relative interpolation error of the grid cache, if one is in use.
    pub fn grid_cache_error(&self) -> Option<f64> {
        self.cache.as_ref().map(|c| c.error)
    }

    /// Relative point-to-point noise of `w`: rounding in the inversion sum
    /// is not smooth in `x`, which matters for differences of nearby values.
    pub fn value_noise(&self) -> f64 {
        match self.method() {
            ScaleMethod::ClosedForm => 0.0,
            ScaleMethod::LaplaceInversion => 1e-11,
        }
    }

    /// `W^(q)(x)`; zero for `x < 0` and `W^(q)(0+)` at zero.
    pub fn w(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if x == 0.0 {
            return self.w0;
        }
        if let Some(c) = &self.cache {
            if x <= c.upper {
                return c.w.eval(x);
            }
        }
        self.w_direct(x)
    }

    fn w_direct(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return if x < 0.0 { 0.0 } else { self.w0 };
        }
        match &self.closed {
            Some(e) => self.w0 + e.rates.iter().zip(&e.coefs).map(|(r, c)| c * (r * x).exp_m1()).sum::<f64>(),
            None => self.invert_w(x).value,
        }
    }

    fn invert_w(&self, x: f64) -> Evaluated {
        let q = self.q;
        let r = self
            .options
            .inversion
            .invert(|s| 1.0 / (self.model.laplace_exponent_complex(s) - q), x, self.phi);
        Evaluated {
            value: r.value,
            error: r.error,
        }
    }

    /// `W^(q)(x)` with an error estimate, failing when the estimate exceeds
    /// the configured relative target.
    pub fn w_checked(&self, x: f64) -> Result<Evaluated> {
        if !x.is_finite() {
            return Err(Error::param("x", "must be finite"));
        }
        if x <= 0.0 {
            return Ok(Evaluated {
                value: self.w(x),
                error: 0.0,
            });
        }
        let ev = match &self.closed {
            Some(_) => {
                let v = self.w_direct(x);
                Evaluated {
                    value: v,
                    error: 8.0 * f64::EPSILON * v.abs(),
                }
            }
            None => {
                let mut ev = self.invert_w(x);
                if let Some(c) = &self.cache {
                    if x <= c.upper {
                        ev.value = c.w.eval(x);
                        ev.error += c.error * ev.value.abs();
                    }
                }
                ev
            }
        };
        if !(ev.value.is_finite()) || ev.error > self.options.target * ev.value.abs() {
            return Err(Error::NumericalAccuracy {
                what: format!("W^({})({x})", self.q),
                achieved: ev.error / ev.value.abs(),
                target: self.options.target,
            });
        }
        Ok(ev)
    }

    /// Left derivative `W^(q)'(x-)`; zero for `x ≤ 0`.
    pub fn w_prime(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match &self.closed {
            Some(e) => e.rates.iter().zip(&e.coefs).map(|(r, c)| c * r * (r * x).exp()).sum(),
            None => {
                let q = self.q;
                let w0 = self.w0;
                self.options
                    .inversion
                    .invert(|s| s / (self.model.laplace_exponent_complex(s) - q) - w0, x, self.phi)
                    .value
            }
        }
    }

    /// Second derivative of `W^(q)` at `x > 0`.
    pub fn w_second(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match &self.closed {
            Some(e) => e.rates.iter().zip(&e.coefs).map(|(r, c)| c * r * r * (r * x).exp()).sum(),
            None => {
                let h = 1e-3 * x.min(1.0);
                let d = |h: f64| (self.w_prime(x + h) - self.w_prime(x - h)) / (2.0 * h);
                (4.0 * d(0.5 * h) - d(h)) / 3.0
            }
        }
    }

    /// `Z^(q)(x) = 1 + q ∫₀^x W^(q)(z) dz`.
    pub fn z(&self, x: f64) -> Result<f64> {
        if x <= 0.0 || self.q == 0.0 {
            return Ok(1.0);
        }
        if let Some(e) = &self.closed {
            // ∫₀^x (w0 + Σ c (e^{rz} - 1)) dz
            let mut integral = self.w0 * x;
            for (r, c) in e.rates.iter().zip(&e.coefs) {
                integral += c * if *r == 0.0 { 0.0 } else { (r * x).exp_m1() / r - x };
            }
            return Ok(1.0 + self.q * integral);
        }
        let dom = Domain::interval(0.0, x).graded_toward(0.0, x, 12);
        let est = integrate_domain(|z| self.w(z), &dom, &self.options.z_tol)?;
        Ok(1.0 + self.q * est.value)
    }

    /// Numerical Laplace transform `∫₀^∞ e^{-λx} W^(q)(x) dx`, with quadrature
    /// on `[0, X]` and the tail beyond `X` from the asymptotic growth `e^{Φ(q) x}`.
    pub fn laplace_transform(&self, lambda: f64) -> Result<f64> {
        let gap = lambda - self.phi;
        if !(gap > 0.0) {
            return Err(Error::param("lambda", "must exceed Φ(q)"));
        }
        let upper = 30.0 / gap;
        let tol = Tolerance::new(1e-14, 1e-11);
        let dom = Domain::interval(0.0, upper).graded_toward(0.0, upper.min(1.0), 10);
        let body = integrate_domain(|x| (-lambda * x).exp() * self.w(x), &dom, &tol)?.value;
        let tail = self.w(upper) * (-lambda * upper).exp() / gap;
        Ok(body + tail)
    }

    /// Exact transform `1 / (ψ(λ) - q)` from the quadrature exponent.
    pub fn transform_target(&self, lambda: f64) -> Result<f64> {
        Ok(1.0 / (self.model.laplace_exponent(lambda)? - self.q))
    }
}

/// `W` as a finite sum of exponentials when `1/(ψ - q)` is rational.
fn exponential_sum(model: &LevyTriplet, q: f64, w0: f64) -> Option<ExpSum> {
    let s2 = 0.5 * model.sigma() * model.sigma();
    let d = model.natural_drift()?;
    // (ψ(λ) - q) · N(λ) = P(λ) with polynomial coefficients in ascending order.
    let (numerator, poly): (Vec<f64>, Vec<f64>) = match model.measure().family() {
        _ if model.measure().is_zero() => (vec![1.0], vec![-q, d, s2]),
        MeasureFamily::Exponential { rate, decay } => {
            // (dλ + s2 λ² - q)(ρ + λ) - ηλ
            let (eta, rho) = (*rate, *decay);
            (vec![rho, 1.0], vec![-q * rho, d * rho - q - eta, d + s2 * rho, s2])
        }
        _ => return None,
    };
    let mut poly = poly;
    while poly.len() > 1 && *poly.last().unwrap() == 0.0 {
        poly.pop();
    }
    let rates = real_roots(&poly)?;
    let eval = |c: &[f64], x: f64| c.iter().rev().fold(0.0, |acc, k| acc * x + k);
    let deriv: Vec<f64> = poly.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect();
    let coefs: Vec<f64> = rates.iter().map(|&r| eval(&numerator, r) / eval(&deriv, r)).collect();
    let total: f64 = coefs.iter().sum();
    if !coefs.iter().all(|c| c.is_finite()) || (total - w0).abs() > 1e-9 * coefs.iter().map(|c| c.abs()).sum::<f64>() {
        return None;
    }
    Some(ExpSum { rates, coefs })
}

/// All real roots of a polynomial of degree 1 to 3 that has only real,
/// simple roots; `None` otherwise.
fn real_roots(c: &[f64]) -> Option<Vec<f64>> {
    let mut roots = match c.len() {
        2 => vec![-c[0] / c[1]],
        3 => {
            let (a, b, cc) = (c[2], c[1], c[0]);
            let disc = b * b - 4.0 * a * cc;
            if disc <= 0.0 {
                return None;
            }
            let t = -0.5 * (b + b.signum() * disc.sqrt());
            let b_zero = b == 0.0;
            let t = if b_zero { -0.5 * disc.sqrt() } else { t };
            let r1 = t / a;
            let r2 = if t == 0.0 { 0.0 } else { cc / t };
            vec![r1, r2]
        }
        4 => {
            // depressed cubic via Viète's trigonometric form
            let (a3, a2, a1, a0) = (c[3], c[2], c[1], c[0]);
            let (b, cq, dq) = (a2 / a3, a1 / a3, a0 / a3);
            let p = cq - b * b / 3.0;
            let qq = 2.0 * b * b * b / 27.0 - b * cq / 3.0 + dq;
            if p >= 0.0 {
                return None;
            }
            let m = 2.0 * (-p / 3.0).sqrt();
            let arg = 3.0 * qq / (p * m);
            if arg.abs() > 1.0 {
                return None;
            }
            let th = arg.acos() / 3.0;
            (0..3)
                .map(|k| m * (th - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - b / 3.0)
                .collect()
        }
        _ => return None,
    };
    let eval = |x: f64| c.iter().rev().fold(0.0, |acc, k| acc * x + k);
    let deriv = |x: f64| {
        c.iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (i, k)| acc * x + i as f64 * k)
    };
    for r in roots.iter_mut() {
        for _ in 0..4 {
            let dp = deriv(*r);
            if dp == 0.0 {
                break;
            }
            let step = eval(*r) / dp;
            *r -= step;
            if step.abs() <= 1e-16 * r.abs() {
                break;
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    let scale = roots.iter().map(|r| r.abs()).fold(1e-3, f64::max);
    if roots.windows(2).any(|w| w[1] - w[0] < 1e-6 * scale) {
        return None;
    }
    Some(roots)
}

/// Reference transform for tests: `1/(ψ(s) - q)` at complex `s`.
pub fn scale_transform(model: &LevyTriplet, q: f64, s: Complex64) -> Complex64 {
    1.0 / (model.laplace_exponent_complex(s) - q)
}

/// Quadrature of `W` on `[lo, hi]`; used by identities needing `∫ W`.
pub fn integral_of_w(sf: &ScaleFunction, lo: f64, hi: f64, tol: &Tolerance) -> Result<f64> {
    Ok(integrate(|z| sf.w(z), lo.max(0.0), hi.max(0.0), tol)?.value)
}
