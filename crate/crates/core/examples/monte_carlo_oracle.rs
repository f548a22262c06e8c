//! Simulated exit functionals against the analytic values.

use levyfluct::generator::{ExtendedPenalty, ExtensionRecipe, Penalty};
use levyfluct::gerber_shiu::{evaluate, two_sided_exit_up, ExitProblem, FormulaChoice, GsOptions};
use levyfluct::levy_model::CanonicalModel;
use levyfluct::montecarlo::{exit_functionals, McConfig, McProblem};
use levyfluct::scale::ScaleFunction;

fn main() -> levyfluct::Result<()> {
    let (a, b, q, x) = (0.0, 1.5, 0.1, 0.75);
    let prob = ExitProblem::new(a, b, q, x)?;
    let cfg = McConfig::default().with_paths(20_000).with_seed(1);
    let f = Penalty::exponential(1.0);
    for m in [CanonicalModel::BrownianMotion, CanonicalModel::CramerLundberg, CanonicalModel::JumpDiffusion] {
        let model = m.build();
        let sf = ScaleFunction::new(&model, q)?;
        let p = ExtendedPenalty::new(&f, ExtensionRecipe::AffineAtA, a, b)?;
        let v = evaluate(&p, &sf, &prob, FormulaChoice::Auto, None, &GsOptions::default())?;
        let mc = exit_functionals(&model, &McProblem::plain(a, b, q, x), &[&f], &cfg)?;
        let e = &mc.penalties[0];
        println!("{}", m.name());
        println!("  penalty: analytic {:.6}, simulated {:.6} ± {:.6}", v.value, e.mean, e.stderr);
        println!("  up exit: analytic {:.6}, simulated {:.6} ± {:.6}", two_sided_exit_up(&sf, &prob), mc.exit_up.mean, mc.exit_up.stderr);
        println!("  exits {:?}, mass balance {:.6}", mc.counts, mc.mass_balance.mean);
    }
    Ok(())
}
