//! Grid-based, advisory checks of the regularity class required by the
//! overshoot identities.

use serde::Serialize;

use super::{generator_parts, ExtendedPenalty, GeneratorOptions};
use crate::levy_model::{LevyTriplet, PathVariation, SmallJumps};
use crate::numerics::{integrate_domain, Domain, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipOptions {
    pub grid: usize,
    pub tol: f64,
    pub tail_points: usize,
    /// The tail integral starts at `tail_lambda_factor · (b - a)`.
    pub tail_lambda_factor: f64,
    /// Anything above this counts as unbounded.
    pub bound: f64,
    pub integrability_check: bool,
}

impl Default for MembershipOptions {
    fn default() -> Self {
        MembershipOptions {
            grid: 1024,
            tol: 1e-6,
            tail_points: 64,
            tail_lambda_factor: 1.5,
            bound: 1e10,
            integrability_check: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub passed: bool,
    pub evidence: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SimplificationFlags {
    /// Integrable small jumps and no Gaussian part.
    pub i: bool,
    /// Integrable small jumps and `f̃` right-continuous at `a`.
    pub ii: bool,
    /// Non-integrable small jumps and `h` Lipschitz around `a`.
    pub iii: bool,
}

impl SimplificationFlags {
    pub fn any(&self) -> bool {
        self.i || self.ii || self.iii
    }

    pub fn labels(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.i {
            v.push("i");
        }
        if self.ii {
            v.push("ii");
        }
        if self.iii {
            v.push("iii");
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegrabilityCheck {
    pub hypotheses_met: bool,
    /// `∫_a^b |A h|` on two successively refined graded grids.
    pub integrals: Option<(f64, f64)>,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipReport {
    pub checks: Vec<ConditionCheck>,
    pub member: bool,
    pub simplification: SimplificationFlags,
    /// The facts behind `simplification`.
    pub simplification_evidence: String,
    pub integrability: IntegrabilityCheck,
    pub notes: Vec<String>,
}

impl MembershipReport {
    pub fn simple_form_admissible(&self) -> bool {
        self.simplification.any()
    }

    pub fn failed(&self) -> Vec<&ConditionCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Largest jump of `g` on `(lo, hi]`: the worst grid cells are bisected
/// towards their larger half until the cell is tiny; a continuous function
/// leaves a vanishing increment.
fn largest_jump(g: &dyn Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    let h = (hi - lo) / n as f64;
    let pts: Vec<f64> = (1..=n).map(|i| lo + i as f64 * h).collect();
    let vals: Vec<f64> = pts.iter().map(|&y| g(y)).collect();
    let mut cells: Vec<(f64, usize)> = (0..n - 1).map(|i| ((vals[i + 1] - vals[i]).abs(), i)).collect();
    cells.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut worst = (0.0f64, lo);
    for &(_, i) in cells.iter().take(8) {
        let (mut l, mut r) = (pts[i], pts[i + 1]);
        let (mut gl, mut gr) = (vals[i], vals[i + 1]);
        for _ in 0..45 {
            let m = 0.5 * (l + r);
            if m <= l || m >= r {
                break;
            }
            let gm = g(m);
            if (gm - gl).abs() >= (gr - gm).abs() {
                r = m;
                gr = gm;
            } else {
                l = m;
                gl = gm;
            }
        }
        let jump = (gr - gl).abs();
        if jump > worst.0 {
            worst = (jump, 0.5 * (l + r));
        }
    }
    worst
}

fn sup_abs(g: &dyn Fn(f64) -> f64, pts: &[f64]) -> f64 {
    pts.iter().map(|&y| g(y).abs()).fold(0.0, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v) })
}

pub fn check_membership(p: &ExtendedPenalty, model: &LevyTriplet, opts: &MembershipOptions) -> MembershipReport {
    let (a, b) = (p.a(), p.b());
    let n = opts.grid.max(8);
    let grid: Vec<f64> = (1..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    let scale = 1.0 + sup_abs(&|y| p.ext(y), &grid);
    let mut checks = Vec::new();
    let mut notes = vec!["conditions verified numerically on grids".to_string()];

    // (i) continuity on (a, b]
    let (jump, at) = largest_jump(&|y| p.ext(y), a, b, n);
    checks.push(ConditionCheck {
        name: "continuity_on_(a,b]",
        passed: jump <= opts.tol * scale,
        evidence: format!("largest residual increment {jump:.3e} near y = {at:.6}"),
    });

    // (ii) tail integrability of f below x - λ
    let lambda = opts.tail_lambda_factor * (b - a);
    let measure = model.measure();
    let m = opts.tail_points.max(2);
    let mut worst_tail: f64 = 0.0;
    let mut tail_ok = true;
    let mut tail_note = String::new();
    if !measure.is_zero() {
        for i in 0..m {
            let x = a + (b - a) * (i as f64 + 0.5) / m as f64;
            let breaks: Vec<f64> = p.penalty().kinks().iter().map(|k| x - k).chain(measure.breakpoints()).collect();
            let dom = Domain::half_line(lambda).with_breaks(breaks);
            match integrate_domain(|t| p.f(x - t).abs() * measure.density(t), &dom, &Tolerance::new(1e-12, 1e-8)) {
                Ok(e) if e.value.is_finite() => worst_tail = worst_tail.max(e.value),
                Ok(_) => {
                    tail_ok = false;
                    tail_note = format!("non-finite tail integral at x = {x}");
                }
                Err(e) => {
                    tail_ok = false;
                    tail_note = format!("tail integral failed at x = {x}: {e}");
                }
            }
        }
    }
    tail_ok &= worst_tail <= opts.bound;
    checks.push(ConditionCheck {
        name: "tail_integrability",
        passed: tail_ok,
        evidence: if tail_note.is_empty() {
            format!("sup over {m} points of ∫_λ^∞ |f(x-θ)| Π(dθ) = {worst_tail:.3e}, λ = {lambda}")
        } else {
            tail_note
        },
    });

    // (iii)/(iv) smoothness by variation class
    let interior: Vec<f64> = grid[..n - 1].to_vec();
    let near_a = a + (b - a) * 1e-7;
    let near_b = b - (b - a) * 1e-7;
    match model.path_variation() {
        PathVariation::Bounded => {
            let d1max = sup_abs(&|y| p.ext_d1(y), &interior).max(p.ext_d1(near_a).abs()).max(p.ext_d1(near_b).abs());
            let tv: f64 = interior.windows(2).map(|w| (p.ext_d1(w[1]) - p.ext_d1(w[0])).abs()).sum();
            let bound = p.bounds().first.unwrap_or(opts.bound);
            checks.push(ConditionCheck {
                name: "bounded_variation_density",
                passed: d1max <= bound && tv.is_finite() && tv <= opts.bound,
                evidence: format!("sup |f̃'| ≈ {d1max:.3e}, total variation of f̃' ≈ {tv:.3e}"),
            });
        }
        PathVariation::Unbounded => {
            let (jump1, at1) = largest_jump(&|y| p.ext_d1(y), a, b, n.min(256));
            let d1scale = 1.0 + sup_abs(&|y| p.ext_d1(y), &interior);
            let d2_near = p.ext_d2(near_a).abs().max(p.ext_d2(near_b).abs());
            let d2max = sup_abs(&|y| p.ext_d2(y), &interior);
            let bound = p.bounds().second.unwrap_or(opts.bound);
            // a bounded density keeps its size as the evaluation point approaches the ends
            let grows = d2_near > 100.0 * (1.0 + d2max);
            checks.push(ConditionCheck {
                name: "c1_with_bounded_second_density",
                passed: jump1 <= 1e3 * opts.tol * d1scale && d2max <= bound && !grows && d2_near.is_finite(),
                evidence: format!(
                    "largest jump of f̃' {jump1:.3e} near {at1:.6}; sup |f̃''| on grid {d2max:.3e}, at ends {d2_near:.3e}"
                ),
            });
            if !p.has_analytic_second_derivative() {
                notes.push("second derivative from finite differences".into());
            }
        }
    }
    let member = checks.iter().all(|c| c.passed);

    // simplification conditions
    let integrable = measure.small_jumps() == SmallJumps::IntegrableSmallJumps;
    let continuous = p.continuous_at_a();
    let lipschitz_at_a = continuous && {
        let delta = 0.05 * (b - a);
        let quotient = |k: usize| {
            let h = delta / k as f64;
            (0..2 * k)
                .map(|i| {
                    let y = a - delta + i as f64 * h;
                    ((p.h(y + h) - p.h(y)) / h).abs()
                })
                .fold(0.0, f64::max)
        };
        let coarse = quotient(64);
        let fine = quotient(512);
        fine.is_finite() && fine < opts.bound && fine <= 2.0 * coarse + 1e-9
    };
    let simplification = SimplificationFlags {
        i: integrable && model.sigma() == 0.0,
        ii: integrable && continuous,
        iii: !integrable && lipschitz_at_a,
    };

    let simplification_evidence = format!(
        "small jumps {}, sigma = {}, extension continuous at a: {continuous}, h Lipschitz around a: {lipschitz_at_a}",
        if integrable { "integrable" } else { "not integrable" },
        model.sigma()
    );

    // integrability: ∫_a^b |A h| < ∞
    let hypotheses_met = member && (integrable || lipschitz_at_a);
    let mut integrability = IntegrabilityCheck {
        hypotheses_met,
        integrals: None,
        stable: false,
    };
    if hypotheses_met && opts.integrability_check {
        let gopts = GeneratorOptions::default();
        // graded midpoint rule: z = a + (b - a) u², u uniform
        let integral = |k: usize| -> Option<f64> {
            let mut s = 0.0;
            for i in 0..k {
                let u = (i as f64 + 0.5) / k as f64;
                let z = a + (b - a) * u * u;
                let v = generator_parts(p, model, 0.0, z, &gopts).ok()?.total();
                s += v.abs() * 2.0 * u * (b - a) / k as f64;
            }
            Some(s)
        };
        if let (Some(c), Some(f)) = (integral(48), integral(96)) {
            integrability.integrals = Some((c, f));
            integrability.stable = f.is_finite() && (f - c).abs() <= 0.01 * f.abs().max(1e-12);
        }
    }
    if !member {
        notes.push("membership unverified: evaluation proceeds but the identity may not apply".into());
    }
    MembershipReport {
        checks,
        member,
        simplification,
        simplification_evidence,
        integrability,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{ExtensionRecipe, Penalty};
    use crate::levy_model::catalog::CanonicalModel;
    use crate::scale::ScaleFunction;
    use std::sync::Arc;

    #[test]
    fn constants_pass_everything() {
        for m in CanonicalModel::ALL {
            let model = m.build();
            let p = ExtendedPenalty::new(&Penalty::constant(1.0), ExtensionRecipe::ConstantOne, 0.0, 2.0).unwrap();
            let r = check_membership(&p, &model, &MembershipOptions::default());
            assert!(r.member, "{m:?}: {:?}", r.failed());
            assert!(r.simple_form_admissible());
            if model.measure().small_jumps() == SmallJumps::IntegrableSmallJumps {
                assert!(r.simplification.ii);
            }
            assert!(r.integrability.stable, "{m:?}: {:?}", r.integrability);
        }
    }

    #[test]
    fn zero_extension_on_unbounded_variation_without_gaussian_part_needs_general_form() {
        let model = CanonicalModel::TemperedStable.build();
        let p = ExtendedPenalty::new(&Penalty::constant(1.0), ExtensionRecipe::Zero, 0.0, 2.0).unwrap();
        let r = check_membership(&p, &model, &MembershipOptions::default());
        assert!(!r.simplification.any());
        assert!(!r.simple_form_admissible());
    }

    #[test]
    fn scale_extension_is_admissible() {
        for m in [CanonicalModel::CramerLundberg, CanonicalModel::JumpDiffusion] {
            let model = m.build();
            let sf = Arc::new(ScaleFunction::new(&model, 0.1).unwrap());
            let p = ExtendedPenalty::new(&Penalty::scale_function(sf.clone()), ExtensionRecipe::ScaleFunction(sf), 0.5, 2.0).unwrap();
            let r = check_membership(&p, &model, &MembershipOptions { integrability_check: false, ..Default::default() });
            assert!(r.member, "{m:?}: {:?}", r.failed());
        }
    }

    #[test]
    fn detects_discontinuous_extension() {
        let model = CanonicalModel::BrownianMotion.build();
        let ext = crate::generator::CustomExtension {
            f: Arc::new(|y: f64| if y > 1.0 { 1.0 } else { 0.0 }),
            d1: Some(Arc::new(|_| 0.0)),
            d2: Some(Arc::new(|_| 0.0)),
            kinks: vec![1.0],
        };
        let p = ExtendedPenalty::new(&Penalty::constant(0.0), ExtensionRecipe::Custom(ext), 0.0, 2.0).unwrap();
        let r = check_membership(&p, &model, &MembershipOptions { integrability_check: false, ..Default::default() });
        assert!(!r.checks[0].passed);
        assert!(!r.member);
    }
}
