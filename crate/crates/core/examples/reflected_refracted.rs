//! The functional for the reflected and the refracted process, from closed-form
//! ingredients and from simulated ones.

use std::sync::Arc;

use levyfluct::generator::{ExtendedPenalty, ExtensionRecipe, Penalty};
use levyfluct::gerber_shiu::{ExitProblem, GsOptions};
use levyfluct::levy_model::CanonicalModel;
use levyfluct::montecarlo::McConfig;
use levyfluct::reflected_refracted::{eval_reflected, eval_refracted, Provider, Refraction};
use levyfluct::scale::ScaleFunction;

fn main() -> levyfluct::Result<()> {
    let (a, b, q, x) = (0.0, 1.5, 0.1, 0.75);
    let prob = ExitProblem::new(a, b, q, x)?;
    let opts = GsOptions::default();
    let model = CanonicalModel::CramerLundberg.build();
    let sf = Arc::new(ScaleFunction::new(&model, q)?);
    let p = ExtendedPenalty::new(&Penalty::exponential(1.0), ExtensionRecipe::ConstantOne, a, b)?;
    let mc = Provider::monte_carlo(McConfig { horizon: Some(200.0), ..McConfig::default() }.with_paths(10_000));
    let refr = Refraction { delta: 0.2, c: 1.0 };
    for (name, provider) in [("closed form", Provider::ClosedForm), ("simulated", mc)] {
        let r = eval_reflected(&p, &sf, &prob, &provider, &opts)?;
        let s = eval_refracted(&p, &sf, &prob, refr, &provider, &opts)?;
        println!("{name:<12} reflected {:.6} (stderr {:?})  refracted {:.6} (stderr {:?})", r.value, r.stderr, s.value, s.stderr);
    }
    Ok(())
}
