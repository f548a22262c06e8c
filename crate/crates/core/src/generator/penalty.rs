use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scale::ScaleFunction;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A penalty `f` on `(-∞, a]`.
#[derive(Clone)]
pub struct Penalty {
    label: String,
    f: RealFn,
    derivative: Option<RealFn>,
    kinks: Vec<f64>,
    constant: Option<f64>,
    noise: f64,
}

impl fmt::Debug for Penalty {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("Penalty").field("label", &self.label).finish()
    }
}

impl Penalty {
    pub fn new(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Penalty {
            label: label.into(),
            f: Arc::new(f),
            derivative: None,
            kinks: Vec::new(),
            constant: None,
            noise: 0.0,
        }
    }

    /// Supplies the left derivative `f'₋`.
    pub fn with_derivative(mut self, d: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.derivative = Some(Arc::new(d));
        self
    }

    /// Points where `f` or its derivative is not smooth.
    pub fn with_kinks(mut self, kinks: impl IntoIterator<Item = f64>) -> Self {
        self.kinks.extend(kinks);
        self
    }

    /// Relative noise of point values, for functions computed numerically.
    pub fn with_noise(mut self, rel: f64) -> Self {
        self.noise = rel;
        self
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Penalty::new(format!("{c}"), move |_| c).with_derivative(|_| 0.0);
        p.constant = Some(c);
        p
    }

    /// `f(y) = e^{rate·y}`.
    pub fn exponential(rate: f64) -> Self {
        Penalty::new(format!("exp({rate}*y)"), move |y| (rate * y).exp()).with_derivative(move |y| rate * (rate * y).exp())
    }

    /// `f(y) = max(0, level - y)`.
    pub fn hinge(level: f64) -> Self {
        Penalty::new(format!("max(0, {level} - y)"), move |y| (level - y).max(0.0))
            .with_derivative(move |y| if y <= level { -1.0 } else { 0.0 })
            .with_kinks([level])
    }

    /// `f(y) = W^(q)(y)`.
    pub fn scale_function(sf: Arc<ScaleFunction>) -> Self {
        let s1 = sf.clone();
        let s2 = sf.clone();
        Penalty::new(format!("W^({})", sf.q()), move |y| s1.w(y))
            .with_derivative(move |y| s2.w_prime(y))
            .with_kinks([0.0])
            .with_noise(sf.value_noise())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value(&self, y: f64) -> f64 {
        (self.f)(y)
    }

    /// `f'₋(y)`, analytic when supplied, else a Richardson-refined backward
    /// difference quotient.
    pub fn left_derivative(&self, y: f64) -> f64 {
        if let Some(d) = &self.derivative {
            return d(y);
        }
        let h = 1e-5 * y.abs().max(1.0);
        let q = |h: f64| (self.value(y) - self.value(y - h)) / h;
        2.0 * q(0.5 * h) - q(h)
    }

    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    /// `Some(c)` when the penalty is known to be the constant `c`.
    pub fn as_constant(&self) -> Option<f64> {
        self.constant
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecipeKind {
    Zero,
    ConstantOne,
    AffineAtA,
    ScaleFunction,
    Custom,
}

/// User-supplied extension with its derivatives.
#[derive(Clone)]
pub struct CustomExtension {
    pub f: RealFn,
    pub d1: Option<RealFn>,
    pub d2: Option<RealFn>,
    pub kinks: Vec<f64>,
}

impl fmt::Debug for CustomExtension {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("CustomExtension").field("kinks", &self.kinks).finish()
    }
}

/// How the penalty is continued onto `(a, b]`.
#[derive(Debug, Clone)]
pub enum ExtensionRecipe {
    /// `f̃ ≡ 0`.
    Zero,
    /// `f̃ ≡ 1`.
    ConstantOne,
    /// `f̃(y) = f'₋(a)·y + f(a)`.
    AffineAtA,
    /// `f̃(y) = W^(q)(y)`.
    ScaleFunction(Arc<ScaleFunction>),
    Custom(CustomExtension),
}

impl ExtensionRecipe {
    pub fn kind(&self) -> RecipeKind {
        match self {
            ExtensionRecipe::Zero => RecipeKind::Zero,
            ExtensionRecipe::ConstantOne => RecipeKind::ConstantOne,
            ExtensionRecipe::AffineAtA => RecipeKind::AffineAtA,
            ExtensionRecipe::ScaleFunction(_) => RecipeKind::ScaleFunction,
            ExtensionRecipe::Custom(_) => RecipeKind::Custom,
        }
    }
}

/// Declared bounds on `|f̃'|` and `|f̃''|` over `(a, b)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct DeclaredBounds {
    pub first: Option<f64>,
    pub second: Option<f64>,
}

/// A penalty on `(-∞, a]` together with an extension `f̃` on `(a, b]`.
///
/// The combined function `h` equals `f̃` on `(a, b]`, `f` below `a`, and
/// `f̃(a+)` at `a`.
#[derive(Clone)]
pub struct ExtendedPenalty {
    a: f64,
    b: f64,
    penalty: Penalty,
    kind: RecipeKind,
    ext: RealFn,
    ext_d1: RealFn,
    ext_d2: Option<RealFn>,
    right_limit_at_a: f64,
    kinks: Vec<f64>,
    bounds: DeclaredBounds,
    noise: f64,
}

impl fmt::Debug for ExtendedPenalty {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("ExtendedPenalty")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("penalty", &self.penalty.label)
            .field("extension", &self.kind)
            .finish()
    }
}

impl ExtendedPenalty {
    pub fn new(penalty: &Penalty, recipe: ExtensionRecipe, a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::param("a", format!("need finite a < b (got a={a}, b={b})")));
        }
        let kind = recipe.kind();
        let mut noise = penalty.noise();
        let mut kinks: Vec<f64> = penalty.kinks().iter().copied().filter(|&k| k < a).collect();
        let (ext, ext_d1, ext_d2): (RealFn, RealFn, Option<RealFn>) = match recipe {
            ExtensionRecipe::Zero => (Arc::new(|_| 0.0), Arc::new(|_| 0.0), Some(Arc::new(|_| 0.0))),
            ExtensionRecipe::ConstantOne => (Arc::new(|_| 1.0), Arc::new(|_| 0.0), Some(Arc::new(|_| 0.0))),
            ExtensionRecipe::AffineAtA => {
                let slope = penalty.left_derivative(a);
                let level = penalty.value(a);
                (
                    Arc::new(move |y| slope * y + level),
                    Arc::new(move |_| slope),
                    Some(Arc::new(|_| 0.0)),
                )
            }
            ExtensionRecipe::ScaleFunction(sf) => {
                if a < 0.0 && b > 0.0 {
                    kinks.push(0.0);
                }
                noise = noise.max(sf.value_noise());
                let (s0, s1, s2) = (sf.clone(), sf.clone(), sf);
                (
                    Arc::new(move |y| s0.w(y)),
                    Arc::new(move |y| s1.w_prime(y)),
                    Some(Arc::new(move |y| s2.w_second(y))),
                )
            }
            ExtensionRecipe::Custom(c) => {
                kinks.extend(c.kinks.iter().copied().filter(|&k| k > a && k < b));
                let d1 = match c.d1 {
                    Some(d) => d,
                    None => {
                        let f = c.f.clone();
                        let h = 1e-5 * (b - a);
                        Arc::new(move |y: f64| {
                            let q = |h: f64| (f(y) - f(y - h)) / h;
                            2.0 * q(0.5 * h) - q(h)
                        }) as RealFn
                    }
                };
                (c.f, d1, c.d2)
            }
        };
        let right_limit_at_a = ext(a);
        kinks.sort_by(f64::total_cmp);
        kinks.dedup();
        Ok(ExtendedPenalty {
            a,
            b,
            penalty: penalty.clone(),
            kind,
            ext,
            ext_d1,
            ext_d2,
            right_limit_at_a,
            kinks,
            bounds: DeclaredBounds::default(),
            noise,
        })
    }

    pub fn with_bounds(mut self, bounds: DeclaredBounds) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn with_noise(mut self, rel: f64) -> Self {
        self.noise = self.noise.max(rel);
        self
    }

    /// Relative noise of point values of `h`.
    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn penalty(&self) -> &Penalty {
        &self.penalty
    }

    pub fn recipe(&self) -> RecipeKind {
        self.kind
    }

    pub fn bounds(&self) -> DeclaredBounds {
        self.bounds
    }

    /// `f(y)` for `y ≤ a`.
    pub fn f(&self, y: f64) -> f64 {
        self.penalty.value(y)
    }

    /// `f̃(y)` for `y ∈ (a, b]`.
    pub fn ext(&self, y: f64) -> f64 {
        (self.ext)(y)
    }

    /// `f̃'₋(y)`.
    pub fn ext_d1(&self, y: f64) -> f64 {
        (self.ext_d1)(y)
    }

    /// A version of the density of `f̃'`, analytic when available and
    /// otherwise a central second difference with step `1e-5·(b - a)`.
    pub fn ext_d2(&self, y: f64) -> f64 {
        if let Some(d) = &self.ext_d2 {
            return d(y);
        }
        let h = (1e-5 * (self.b - self.a)).min(0.5 * (y - self.a)).max(1e-12);
        (self.ext(y + h) - 2.0 * self.ext(y) + self.ext(y - h)) / (h * h)
    }

    pub fn has_analytic_second_derivative(&self) -> bool {
        self.ext_d2.is_some()
    }

    /// `f̃(a+)`.
    pub fn right_limit_at_a(&self) -> f64 {
        self.right_limit_at_a
    }

    /// Whether `f(a) = f̃(a+)` up to rounding.
    pub fn continuous_at_a(&self) -> bool {
        let fa = self.f(self.a);
        (fa - self.right_limit_at_a).abs() <= 1e-12 * (1.0 + fa.abs())
    }

    /// The combined function `h`.
    pub fn h(&self, y: f64) -> f64 {
        if y > self.a {
            self.ext(y)
        } else if y == self.a {
            self.right_limit_at_a
        } else {
            self.f(y)
        }
    }

    /// Points where `h` may fail to be smooth, including `a`.
    pub fn kinks(&self) -> Vec<f64> {
        let mut k = self.kinks.clone();
        k.push(self.a);
        k
    }
}
