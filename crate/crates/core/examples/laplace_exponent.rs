//! Laplace exponent, variation class and Φ(q) of the catalog models, plus a
//! model read from a table of density samples.

use levyfluct::levy_model::{canonical_models, LevyTriplet, LevyTripletSpec};

fn main() -> levyfluct::Result<()> {
    for (m, model) in canonical_models() {
        println!("{} ({:?} variation)", m.name(), model.path_variation());
        for lam in [0.5, 1.0, 5.0] {
            println!("  psi({lam}) = {:.10}", model.laplace_exponent(lam)?);
        }
        println!("  Phi(0.1) = {:.10}", model.right_inverse_phi(0.1)?);
    }

    let spec: LevyTripletSpec = serde_json::from_str(include_str!("specs/model_table.json")).expect("valid spec");
    let model = LevyTriplet::from_spec(&spec)?;
    println!("table model: natural drift {:?}, psi(2) = {:.10}", model.natural_drift(), model.laplace_exponent(2.0)?);
    Ok(())
}
