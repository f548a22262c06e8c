//! Parametric fixtures: one model per path-behaviour class.

use serde::Serialize;

use super::{LevyMeasure, LevyTriplet, MeasureFamily};
use crate::error::Result;

/// Brownian motion with drift `mu` and volatility `sigma`.
pub fn brownian_motion(mu: f64, sigma: f64) -> Result<LevyTriplet> {
    LevyTriplet::new(mu, sigma, LevyMeasure::none())
}

/// Premium rate `premium` minus compound Poisson claims arriving at
/// `claim_rate` with exponential sizes of mean `1 / claim_decay`.
pub fn cramer_lundberg(premium: f64, claim_rate: f64, claim_decay: f64) -> Result<LevyTriplet> {
    jump_diffusion(premium, 0.0, claim_rate, claim_decay)
}

/// Cramér–Lundberg plus a Brownian perturbation of volatility `sigma`.
pub fn jump_diffusion(premium: f64, sigma: f64, claim_rate: f64, claim_decay: f64) -> Result<LevyTriplet> {
    let m = LevyMeasure::new(MeasureFamily::Exponential {
        rate: claim_rate,
        decay: claim_decay,
    })?;
    let m1 = m.first_moment_near_zero().unwrap_or(0.0);
    LevyTriplet::new(premium - m1, sigma, m)
}

/// Drift plus tempered stable downward jumps with density
/// `scale · θ^{-1-alpha} e^{-decay θ}`, no Gaussian part. The drift is chosen
/// so that `E X_1 = mean`.
pub fn tempered_stable(mean: f64, scale: f64, alpha: f64, decay: f64) -> Result<LevyTriplet> {
    let m = LevyMeasure::new(MeasureFamily::TemperedStable { scale, alpha, decay })?;
    let gamma = mean + m.large_jump_mean();
    LevyTriplet::new(gamma, 0.0, m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CanonicalModel {
    BrownianMotion,
    CramerLundberg,
    JumpDiffusion,
    TemperedStable,
}

impl CanonicalModel {
    pub const ALL: [CanonicalModel; 4] = [
        CanonicalModel::BrownianMotion,
        CanonicalModel::CramerLundberg,
        CanonicalModel::JumpDiffusion,
        CanonicalModel::TemperedStable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CanonicalModel::BrownianMotion => "brownian_motion",
            CanonicalModel::CramerLundberg => "cramer_lundberg",
            CanonicalModel::JumpDiffusion => "jump_diffusion",
            CanonicalModel::TemperedStable => "tempered_stable",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }

    /// The default parametrisation used by tests and examples.
    pub fn build(self) -> LevyTriplet {
        match self {
            CanonicalModel::BrownianMotion => brownian_motion(0.3, 1.0),
            CanonicalModel::CramerLundberg => cramer_lundberg(1.5, 1.0, 1.0),
            CanonicalModel::JumpDiffusion => jump_diffusion(1.0, 0.5, 0.8, 2.0),
            CanonicalModel::TemperedStable => tempered_stable(0.3, 0.2, 1.5, 1.0),
        }
        .expect("catalog parameters are valid")
    }
}

pub fn canonical_models() -> Vec<(CanonicalModel, LevyTriplet)> {
    CanonicalModel::ALL.into_iter().map(|m| (m, m.build())).collect()
}
