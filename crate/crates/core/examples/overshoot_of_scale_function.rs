//! The penalty W^(q) of X applied to the overshoot of Y = X - δt killed at rate p.

use levyfluct::gerber_shiu::{overshoot_of_scale_function, GsOptions, ScaleOfScale};
use levyfluct::levy_model::CanonicalModel;
use levyfluct::montecarlo::{mc_overshoot_of_scale_function, McConfig};
use levyfluct::scale::ScaleOptions;

fn main() -> levyfluct::Result<()> {
    let (p, q, delta) = (0.05, 0.1, 0.1);
    let (a, b, x) = (0.5, 2.0, 1.2);
    for m in [CanonicalModel::BrownianMotion, CanonicalModel::CramerLundberg] {
        let s = ScaleOfScale::new(&m.build(), delta, p, q, ScaleOptions::default())?;
        let v = overshoot_of_scale_function(&s, a, b, x, &GsOptions::default())?;
        let e = mc_overshoot_of_scale_function(&s, a, b, x, &McConfig::default().with_paths(20_000))?;
        println!("{}: analytic {:.6}, simulated {:.6} ± {:.6}", m.name(), v.value, e.mean, e.stderr);
    }
    Ok(())
}
