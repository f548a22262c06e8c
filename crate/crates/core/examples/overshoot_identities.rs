//! The general, simple and zero-extension forms of the Gerber-Shiu functional
//! for an expression penalty, with the term breakdown.

use std::sync::Arc;

use levyfluct::expr::{Bindings, Expr};
use levyfluct::generator::{ExtendedPenalty, ExtensionRecipe};
use levyfluct::gerber_shiu::{evaluate, ExitProblem, FormulaChoice, GsOptions};
use levyfluct::levy_model::CanonicalModel;
use levyfluct::scale::ScaleFunction;

fn main() -> levyfluct::Result<()> {
    let (a, b, q, x) = (0.0, 2.0, 0.1, 1.0);
    let prob = ExitProblem::new(a, b, q, x)?;
    let opts = GsOptions::default();
    for m in [CanonicalModel::CramerLundberg, CanonicalModel::JumpDiffusion] {
        let sf = Arc::new(ScaleFunction::new(&m.build(), q)?);
        let f = Expr::parse("exp(y) + 0.5*max(0, a - 1 - y)", Bindings { a, b, q }, Some(sf.clone()))?.to_penalty(a - 50.0, b);
        let p = ExtendedPenalty::new(&f, ExtensionRecipe::AffineAtA, a, b)?;
        println!("{}", m.name());
        for choice in [FormulaChoice::General, FormulaChoice::Simple, FormulaChoice::ZeroExtension] {
            let v = evaluate(&p, &sf, &prob, choice, None, &opts)?;
            println!(
                "  {:?}: {:.12} (boundary {:.6}, integral {:.6}, creeping {:.6}, accuracy {:.1e})",
                v.formula_used, v.value, v.terms.boundary, v.terms.integral, v.terms.creeping, v.accuracy
            );
        }
    }
    Ok(())
}
