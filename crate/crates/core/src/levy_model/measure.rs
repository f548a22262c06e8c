//! Lévy measures of downward jumps, recorded on the positive half line.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Open01};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_lr, gamma_ur};

use crate::error::{Error, Result};
use crate::numerics::{integrate_domain, Domain, Tolerance};

/// Parametric description of a Lévy measure `Π(dθ) = π(θ) dθ` on `(0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MeasureFamily {
    /// No jumps.
    None,
    /// `π(θ) = rate · decay · e^{-decay θ}`: jumps arrive at `rate` with
    /// exponentially distributed sizes of mean `1 / decay`.
    Exponential { rate: f64, decay: f64 },
    /// `π(θ) = scale · θ^{-1-alpha} · e^{-decay θ}` with `alpha ∈ (0,1) ∪ (1,2)`.
    TemperedStable { scale: f64, alpha: f64, decay: f64 },
    /// Density samples `(θ, π(θ))`, log-linearly interpolated between nodes and
    /// zero outside them.
    Table {
        points: Vec<[f64; 2]>,
        #[serde(default)]
        interpolation: Interpolation,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    LogLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Activity {
    FiniteActivity,
    InfiniteActivity,
}

/// Whether `∫₀¹ θ Π(dθ)` is finite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SmallJumps {
    IntegrableSmallJumps,
    NonIntegrableSmallJumps,
}

#[derive(Debug, Clone)]
struct Segment {
    lo: f64,
    hi: f64,
    // density at lo and log-slope
    p_lo: f64,
    slope: f64,
    mass: f64,
}

/// A validated Lévy measure together with the summary integrals the rest of
/// the library needs.
#[derive(Debug, Clone)]
pub struct LevyMeasure {
    family: MeasureFamily,
    activity: Activity,
    small_jumps: SmallJumps,
    /// `∫₀¹ θ² Π(dθ)`
    mass_near_zero: f64,
    /// `∫₀¹ θ Π(dθ)`, `None` when infinite
    first_moment_near_zero: Option<f64>,
    /// `∫₁^∞ θ Π(dθ)`
    large_jump_mean: f64,
    segments: Vec<Segment>,
}

/// Upper bound accepted for `∫ (1 ∧ θ²) Π(dθ)`.
pub const ADMISSIBILITY_BOUND: f64 = 1e12;

fn upper_gamma(s: f64, x: f64) -> f64 {
    // Γ(s, x) for x > 0 and any non-integer s > -3 via downward recurrence
    // Γ(s, x) = (Γ(s+1, x) - x^s e^{-x}) / s.
    if s > 0.0 {
        return gamma_ur(s, x) * gamma(s);
    }
    let up = upper_gamma(s + 1.0, x);
    (up - x.powf(s) * (-x).exp()) / s
}

fn lower_gamma(s: f64, x: f64) -> f64 {
    debug_assert!(s > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    gamma_lr(s, x) * gamma(s)
}

fn phi1(w: Complex64) -> Complex64 {
    // (e^w - 1) / w
    if w.norm() < 1e-3 {
        Complex64::new(1.0, 0.0) + w * (0.5 + w * (1.0 / 6.0 + w / 24.0))
    } else {
        (w.exp() - 1.0) / w
    }
}

fn phi1_real(w: f64) -> f64 {
    if w.abs() < 1e-8 {
        1.0 + 0.5 * w
    } else {
        w.exp_m1() / w
    }
}

impl LevyMeasure {
    pub fn new(family: MeasureFamily) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        let mut segments = Vec::new();
        let (activity, small_jumps) = match &family {
            MeasureFamily::None => (Activity::FiniteActivity, SmallJumps::IntegrableSmallJumps),
            MeasureFamily::Exponential { rate, decay } => {
                if !(*rate >= 0.0 && rate.is_finite() && *decay > 0.0 && decay.is_finite()) {
                    return bad(format!("exponential measure needs rate >= 0, decay > 0 (got {rate}, {decay})"));
                }
                (Activity::FiniteActivity, SmallJumps::IntegrableSmallJumps)
            }
            MeasureFamily::TemperedStable { scale, alpha, decay } => {
                if !(*scale > 0.0 && scale.is_finite()) {
                    return bad(format!("tempered stable scale must be positive (got {scale})"));
                }
                if !(*alpha > 0.0 && *alpha < 2.0) || (*alpha - 1.0).abs() < 1e-9 {
                    return bad(format!("tempered stable alpha must lie in (0,1) or (1,2) (got {alpha})"));
                }
                if !(*decay > 0.0 && decay.is_finite()) {
                    return bad(format!("tempered stable decay must be positive (got {decay})"));
                }
                let sj = if *alpha < 1.0 {
                    SmallJumps::IntegrableSmallJumps
                } else {
                    SmallJumps::NonIntegrableSmallJumps
                };
                (Activity::InfiniteActivity, sj)
            }
            MeasureFamily::Table { points, .. } => {
                if points.len() < 2 {
                    return bad("table measure needs at least two points".into());
                }
                for w in points.windows(2) {
                    if !(w[1][0] > w[0][0]) {
                        return bad("table abscissae must be strictly increasing".into());
                    }
                }
                if !(points[0][0] > 0.0) {
                    return bad("table abscissae must be positive".into());
                }
                if points.iter().any(|p| !(p[1] > 0.0 && p[1].is_finite())) {
                    return bad("table densities must be positive and finite for log-linear interpolation".into());
                }
                for w in points.windows(2) {
                    let h = w[1][0] - w[0][0];
                    let slope = (w[1][1].ln() - w[0][1].ln()) / h;
                    let mass = w[0][1] * h * phi1_real(slope * h);
                    segments.push(Segment {
                        lo: w[0][0],
                        hi: w[1][0],
                        p_lo: w[0][1],
                        slope,
                        mass,
                    });
                }
                (Activity::FiniteActivity, SmallJumps::IntegrableSmallJumps)
            }
        };
        let mut m = LevyMeasure {
            family,
            activity,
            small_jumps,
            mass_near_zero: 0.0,
            first_moment_near_zero: Some(0.0),
            large_jump_mean: 0.0,
            segments,
        };
        m.mass_near_zero = m.moment_below(2, 1.0)?;
        m.first_moment_near_zero = match small_jumps {
            SmallJumps::IntegrableSmallJumps => Some(m.moment_below(1, 1.0)?),
            SmallJumps::NonIntegrableSmallJumps => None,
        };
        m.large_jump_mean = m.compute_large_jump_mean()?;
        m.validate()?;
        Ok(m)
    }

    pub fn none() -> Self {
        LevyMeasure::new(MeasureFamily::None).expect("zero measure is valid")
    }

    fn validate(&self) -> Result<()> {
        let admissible = self.mass_near_zero + self.tail(1.0);
        if !(admissible.is_finite() && admissible < ADMISSIBILITY_BOUND) {
            return Err(Error::InvalidModel(format!(
                "∫(1 ∧ θ²) Π(dθ) = {admissible:e} is not below {ADMISSIBILITY_BOUND:e}"
            )));
        }
        let mut prev = f64::INFINITY;
        for k in -8..=12 {
            let th = 2f64.powi(k);
            let t = self.tail(th);
            if !(t.is_finite() && t >= 0.0 && t <= prev * (1.0 + 1e-12)) {
                return Err(Error::InvalidModel(format!("tail not non-increasing at θ = {th}")));
            }
            prev = t;
        }
        if self.tail(1e6) > 1e-12 {
            return Err(Error::InvalidModel("tail does not vanish at infinity".into()));
        }
        if self.activity == Activity::FiniteActivity && !self.tail(0.0).is_finite() {
            return Err(Error::InvalidModel("finite activity measure with infinite mass".into()));
        }
        Ok(())
    }

    pub fn family(&self) -> &MeasureFamily {
        &self.family
    }

    pub fn activity(&self) -> Activity {
        self.activity
    }

    pub fn small_jumps(&self) -> SmallJumps {
        self.small_jumps
    }

    pub fn is_zero(&self) -> bool {
        match &self.family {
            MeasureFamily::None => true,
            MeasureFamily::Exponential { rate, .. } => *rate == 0.0,
            _ => false,
        }
    }

    /// `∫₀¹ θ² Π(dθ)`.
    pub fn mass_near_zero(&self) -> f64 {
        self.mass_near_zero
    }

    /// `∫₀¹ θ Π(dθ)`, or `None` when small jumps are not integrable.
    pub fn first_moment_near_zero(&self) -> Option<f64> {
        self.first_moment_near_zero
    }

    /// `∫₁^∞ θ Π(dθ)`.
    pub fn large_jump_mean(&self) -> f64 {
        self.large_jump_mean
    }

    pub fn density(&self, theta: f64) -> f64 {
        if !(theta > 0.0) {
            return 0.0;
        }
        match &self.family {
            MeasureFamily::None => 0.0,
            MeasureFamily::Exponential { rate, decay } => rate * decay * (-decay * theta).exp(),
            MeasureFamily::TemperedStable { scale, alpha, decay } => {
                scale * theta.powf(-1.0 - alpha) * (-decay * theta).exp()
            }
            MeasureFamily::Table { .. } => match self.segment_of(theta) {
                Some(s) => s.p_lo * (s.slope * (theta - s.lo)).exp(),
                None => 0.0,
            },
        }
    }

    fn segment_of(&self, theta: f64) -> Option<&Segment> {
        let first = self.segments.first()?;
        let last = self.segments.last()?;
        if theta < first.lo || theta > last.hi {
            return None;
        }
        let i = self.segments.partition_point(|s| s.hi < theta);
        self.segments.get(i)
    }

    /// Upper tail `Π(θ, ∞)`; `Π(0, ∞)` may be infinite.
    pub fn tail(&self, theta: f64) -> f64 {
        let theta = theta.max(0.0);
        match &self.family {
            MeasureFamily::None => 0.0,
            MeasureFamily::Exponential { rate, decay } => rate * (-decay * theta).exp(),
            MeasureFamily::TemperedStable { scale, alpha, decay } => {
                if theta == 0.0 {
                    return f64::INFINITY;
                }
                let x = decay * theta;
                if x > 600.0 {
                    return 0.0;
                }
                (scale * decay.powf(*alpha) * upper_gamma(-alpha, x)).max(0.0)
            }
            MeasureFamily::Table { .. } => {
                let mut total = 0.0;
                for s in self.segments.iter().rev() {
                    if s.hi <= theta {
                        break;
                    }
                    if s.lo >= theta {
                        total += s.mass;
                    } else {
                        let h = s.hi - theta;
                        let p = s.p_lo * (s.slope * (theta - s.lo)).exp();
                        total += p * h * phi1_real(s.slope * h);
                    }
                }
                total
            }
        }
    }

    /// `Π(θ, ∞)` recomputed from the density by quadrature.
    pub fn tail_by_quadrature(&self, theta: f64) -> Result<f64> {
        let dom = Domain::half_line(theta)
            .with_breaks(self.breakpoints())
            .graded_toward(theta, theta + 1.0, 6);
        let est = integrate_domain(|t| self.density(t), &dom, &Tolerance::new(1e-15, 1e-12))?;
        Ok(est.value)
    }

    /// Points where the density is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.family {
            MeasureFamily::Table { points, .. } => points.iter().map(|p| p[0]).collect(),
            _ => Vec::new(),
        }
    }

    /// `∫₀^ε θ^k Π(dθ)` for `k ≥ 1` (for `k = 1` only when small jumps are integrable).
    pub fn moment_below(&self, k: u32, eps: f64) -> Result<f64> {
        if eps <= 0.0 {
            return Ok(0.0);
        }
        let kf = k as f64;
        Ok(match &self.family {
            MeasureFamily::None => 0.0,
            MeasureFamily::Exponential { rate, decay } => {
                rate * decay.powf(-kf) * lower_gamma(kf + 1.0, decay * eps)
            }
            MeasureFamily::TemperedStable { scale, alpha, decay } => {
                let s = kf - alpha;
                if s <= 0.0 {
                    return Err(Error::param("k", format!("moment of order {k} diverges at 0")));
                }
                scale * decay.powf(-s) * lower_gamma(s, decay * eps)
            }
            MeasureFamily::Table { .. } => {
                let lo = self.segments[0].lo;
                if eps <= lo {
                    0.0
                } else {
                    let dom = Domain::interval(lo, eps).with_breaks(self.breakpoints());
                    integrate_domain(|t| t.powi(k as i32) * self.density(t), &dom, &Tolerance::new(1e-16, 1e-13))?.value
                }
            }
        })
    }

    /// `∫_lo^hi θ^k Π(dθ)` for `0 < lo < hi`.
    pub fn moment_between(&self, k: i32, lo: f64, hi: f64) -> Result<f64> {
        if hi <= lo {
            return Ok(0.0);
        }
        let dom = Domain::interval(lo, hi)
            .with_breaks(self.breakpoints())
            .graded_toward(lo, hi, ((hi / lo).log10().ceil().max(0.0) as u32).min(30));
        Ok(integrate_domain(|t| t.powi(k) * self.density(t), &dom, &Tolerance::new(1e-15, 1e-13))?.value)
    }

    fn compute_large_jump_mean(&self) -> Result<f64> {
        Ok(match &self.family {
            MeasureFamily::None => 0.0,
            MeasureFamily::Exponential { rate, decay } => rate * (-decay).exp() * (1.0 + 1.0 / decay),
            MeasureFamily::TemperedStable { scale, alpha, decay } => {
                scale * decay.powf(alpha - 1.0) * upper_gamma(1.0 - alpha, *decay)
            }
            MeasureFamily::Table { .. } => {
                let last = self.segments.last().unwrap().hi;
                if last <= 1.0 {
                    0.0
                } else {
                    self.moment_between(1, 1.0_f64.max(self.segments[0].lo), last)?
                }
            }
        })
    }

    /// Analytic continuation of `J(s) = ∫ (e^{-sθ} - 1 + sθ 1{θ≤1}) Π(dθ)` to
    /// `Re s > -(decay)` (all of ℂ for finite tables).
    pub fn jump_exponent(&self, s: Complex64) -> Complex64 {
        match &self.family {
            MeasureFamily::None => Complex64::new(0.0, 0.0),
            MeasureFamily::Exponential { rate, decay } => {
                let m1 = self.first_moment_near_zero.unwrap_or(0.0);
                -s * *rate / (s + *decay) + s * m1
            }
            MeasureFamily::TemperedStable { scale, alpha, decay } => {
                let g = gamma(-alpha);
                let b = Complex64::new(*decay, 0.0);
                let full = (b + s).powf(*alpha) - decay.powf(*alpha) - s * (alpha * decay.powf(alpha - 1.0));
                full * (scale * g) - s * self.large_jump_mean
            }
            MeasureFamily::Table { .. } => {
                let mut total = Complex64::new(0.0, 0.0);
                let mut mass = 0.0;
                for seg in &self.segments {
                    let h = seg.hi - seg.lo;
                    let w = (Complex64::new(seg.slope, 0.0) - s) * h;
                    total += (-s * seg.lo).exp() * seg.p_lo * h * phi1(w);
                    mass += seg.mass;
                }
                let m1 = self.first_moment_near_zero.unwrap_or(0.0);
                total - mass + s * m1
            }
        }
    }

    /// Derivative `J'(s)` of [`jump_exponent`](Self::jump_exponent), for the
    /// families that admit it in closed form.
    pub fn jump_exponent_derivative(&self, s: Complex64) -> Option<Complex64> {
        match &self.family {
            MeasureFamily::None => Some(Complex64::new(0.0, 0.0)),
            MeasureFamily::Exponential { rate, decay } => {
                let m1 = self.first_moment_near_zero.unwrap_or(0.0);
                Some(-(*rate * *decay) / ((s + *decay) * (s + *decay)) + m1)
            }
            MeasureFamily::TemperedStable { scale, alpha, decay } => {
                let g = gamma(-alpha);
                let b = Complex64::new(*decay, 0.0);
                let d = ((b + s).powf(alpha - 1.0) - decay.powf(alpha - 1.0)) * (alpha * scale * g);
                Some(d - self.large_jump_mean)
            }
            MeasureFamily::Table { .. } => None,
        }
    }

    /// Left edge of the half plane where `jump_exponent` is analytic.
    pub fn analytic_abscissa(&self) -> f64 {
        match &self.family {
            MeasureFamily::None | MeasureFamily::Table { .. } => f64::NEG_INFINITY,
            MeasureFamily::Exponential { decay, .. } => -decay,
            MeasureFamily::TemperedStable { decay, .. } => -decay,
        }
    }

    /// Sampler for jumps of size at least `eps` (all jumps when `eps = 0` and
    /// the measure is finite).
    pub fn jump_sampler(&self, eps: f64) -> Result<JumpSampler> {
        let rate = if eps > 0.0 { self.tail(eps) } else { self.tail(0.0) };
        if !rate.is_finite() {
            return Err(Error::param("eps", "truncation must be positive for infinite activity measures"));
        }
        let kind = match &self.family {
            MeasureFamily::None => SamplerKind::Nothing,
            MeasureFamily::Exponential { decay, .. } => SamplerKind::Exponential { decay: *decay, shift: eps },
            MeasureFamily::TemperedStable { alpha, decay, .. } => SamplerKind::TemperedPareto {
                eps,
                alpha: *alpha,
                decay: *decay,
            },
            MeasureFamily::Table { .. } => {
                let mut cum = Vec::new();
                let mut segs = Vec::new();
                let mut acc = 0.0;
                for s in &self.segments {
                    if s.hi <= eps {
                        continue;
                    }
                    let lo = s.lo.max(eps);
                    let p_lo = s.p_lo * (s.slope * (lo - s.lo)).exp();
                    let h = s.hi - lo;
                    acc += p_lo * h * phi1_real(s.slope * h);
                    cum.push(acc);
                    segs.push((lo, s.hi, s.slope));
                }
                SamplerKind::Table { cum, segs }
            }
        };
        Ok(JumpSampler { rate, kind })
    }
}

/// Draws jump sizes from `Π` restricted to `[eps, ∞)` and normalised.
#[derive(Debug, Clone)]
pub struct JumpSampler {
    /// Total intensity `Π(eps, ∞)` of the simulated jumps.
    pub rate: f64,
    kind: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Nothing,
    Exponential { decay: f64, shift: f64 },
    TemperedPareto { eps: f64, alpha: f64, decay: f64 },
    Table { cum: Vec<f64>, segs: Vec<(f64, f64, f64)> },
}

impl JumpSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            SamplerKind::Nothing => 0.0,
            SamplerKind::Exponential { decay, shift } => {
                let e: f64 = Exp1.sample(rng);
                shift + e / decay
            }
            SamplerKind::TemperedPareto { eps, alpha, decay } => loop {
                let u: f64 = Open01.sample(rng);
                let theta = eps * u.powf(-1.0 / alpha);
                let v: f64 = rng.random();
                if v < (-decay * (theta - eps)).exp() {
                    break theta;
                }
            },
            SamplerKind::Table { cum, segs } => {
                let total = *cum.last().unwrap();
                let u: f64 = rng.random::<f64>() * total;
                let i = cum.partition_point(|c| *c <= u).min(segs.len() - 1);
                let (lo, hi, slope) = segs[i];
                let h = hi - lo;
                let v: f64 = rng.random();
                let off = if (slope * h).abs() < 1e-12 {
                    v * h
                } else {
                    (v * (slope * h).exp_m1()).ln_1p() / slope
                };
                (lo + off).min(hi)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::exp_compensated;

    fn ts() -> LevyMeasure {
        LevyMeasure::new(MeasureFamily::TemperedStable {
            scale: 0.2,
            alpha: 1.5,
            decay: 1.0,
        })
        .unwrap()
    }

    #[test]
    fn tempered_stable_tail_matches_quadrature() {
        let m = ts();
        for &t in &[1e-3, 0.01, 0.3, 1.0, 4.0, 20.0] {
            let a = m.tail(t);
            let q = m.tail_by_quadrature(t).unwrap();
            assert!((a - q).abs() < 1e-10 * q + 1e-14, "θ={t}: {a} vs {q}");
        }
    }

    #[test]
    fn table_tail_matches_quadrature() {
        let m = LevyMeasure::new(MeasureFamily::Table {
            points: vec![[0.1, 2.0], [0.5, 1.0], [1.5, 0.2], [3.0, 0.01]],
            interpolation: Interpolation::LogLinear,
        })
        .unwrap();
        for &t in &[0.0, 0.2, 0.5, 1.0, 2.9] {
            let a = m.tail(t);
            let q = m.tail_by_quadrature(t.max(1e-9)).unwrap();
            assert!((a - q).abs() < 1e-11 * (1.0 + q), "θ={t}: {a} vs {q}");
        }
        assert_eq!(m.tail(3.5), 0.0);
    }

    #[test]
    fn moments_match_quadrature() {
        let m = ts();
        // the strip (0, 1e-12) adds 0.2 · 2 · 1e-6 to the quadrature
        let q2 = m.moment_between(2, 1e-12, 1.0).unwrap() + 0.4e-6;
        assert!(((m.mass_near_zero() - q2) / q2).abs() < 1e-10, "{} vs {q2}", m.mass_near_zero());
        let l1 = m.moment_between(1, 1.0, 80.0).unwrap();
        assert!(((m.large_jump_mean() - l1) / l1).abs() < 1e-10);
        assert!(m.first_moment_near_zero().is_none());

        let e = LevyMeasure::new(MeasureFamily::Exponential { rate: 0.7, decay: 2.0 }).unwrap();
        let q1 = e.moment_between(1, 1e-14, 1.0).unwrap();
        assert!((e.first_moment_near_zero().unwrap() - q1).abs() < 1e-13);
    }

    #[test]
    fn jump_exponent_matches_real_quadrature() {
        let m = ts();
        for &lam in &[0.5, 3.0, 20.0] {
            let analytic = m.jump_exponent(Complex64::new(lam, 0.0)).re;
            let dom = Domain::half_line(1e-9).with_breaks([1.0]).graded_toward(1e-9, 1.0, 9);
            let q = integrate_domain(
                |t: f64| {
                    let c = if t <= 1.0 { exp_compensated(lam * t) } else { (-lam * t).exp_m1() };
                    c * m.density(t)
                },
                &dom,
                &Tolerance::new(1e-14, 1e-13),
            )
            .unwrap()
            .value;
            // the (0, 1e-9) strip contributes ~ λ²/2 · ∫θ² π < 1e-5 · λ²... compensate
            let strip = 0.5 * lam * lam * m.moment_below(2, 1e-9).unwrap();
            assert!(((analytic - q - strip) / analytic).abs() < 1e-10, "λ={lam}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(LevyMeasure::new(MeasureFamily::TemperedStable { scale: 1.0, alpha: 1.0, decay: 1.0 }).is_err());
        assert!(LevyMeasure::new(MeasureFamily::Exponential { rate: 1.0, decay: -1.0 }).is_err());
        assert!(LevyMeasure::new(MeasureFamily::Table { points: vec![[1.0, 1.0], [0.5, 1.0]], interpolation: Interpolation::LogLinear }).is_err());
    }

    #[test]
    fn tempered_sampler_matches_tail_ratio() {
        use rand::SeedableRng;
        let m = ts();
        let eps = 1e-2;
        let s = m.jump_sampler(eps).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 200_000;
        let above = (0..n).filter(|_| s.sample(&mut rng) > 0.1).count() as f64 / n as f64;
        let expect = m.tail(0.1) / m.tail(eps);
        let se = (expect * (1.0 - expect) / n as f64).sqrt();
        assert!((above - expect).abs() < 4.0 * se, "{above} vs {expect}");
    }
}
