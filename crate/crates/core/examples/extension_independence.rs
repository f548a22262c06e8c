//! Different extensions of the same penalty give the same functional.

use levyfluct::generator::{check_membership, ExtendedPenalty, ExtensionRecipe, Penalty};
use levyfluct::gerber_shiu::{evaluate, ExitProblem, FormulaChoice, GsOptions};
use levyfluct::levy_model::CanonicalModel;
use levyfluct::scale::ScaleFunction;

fn main() -> levyfluct::Result<()> {
    let (a, b, q, x) = (0.0, 2.0, 0.1, 1.0);
    let prob = ExitProblem::new(a, b, q, x)?;
    let opts = GsOptions::default();
    let f = Penalty::hinge(a);
    for m in [CanonicalModel::BrownianMotion, CanonicalModel::CramerLundberg, CanonicalModel::TemperedStable] {
        let model = m.build();
        let sf = ScaleFunction::new(&model, q)?;
        println!("{}", m.name());
        for (name, recipe) in [
            ("zero", ExtensionRecipe::Zero),
            ("constant_one", ExtensionRecipe::ConstantOne),
            ("affine_at_a", ExtensionRecipe::AffineAtA),
        ] {
            let p = ExtendedPenalty::new(&f, recipe, a, b)?;
            let report = check_membership(&p, &model, &opts.membership);
            let v = evaluate(&p, &sf, &prob, FormulaChoice::Auto, Some(&report), &opts)?;
            println!("  {name:<13} {:?} {:.12} (simple form admissible: {})", v.formula_used, v.value, report.simple_form_admissible());
        }
    }
    Ok(())
}
