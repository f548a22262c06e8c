//! W, W' and Z on a grid, and the numerical round trip of the Laplace transform.

use levyfluct::levy_model::CanonicalModel;
use levyfluct::scale::ScaleFunction;

fn main() -> levyfluct::Result<()> {
    let q = 0.05;
    for m in CanonicalModel::ALL {
        let sf = ScaleFunction::new(&m.build(), q)?;
        println!("{}: method {:?}, W(0) = {}, Phi = {:.8}", m.name(), sf.method(), sf.w0(), sf.phi());
        println!("  {:>5} {:>14} {:>14} {:>14}", "x", "W", "W'", "Z");
        for x in [0.1, 0.5, 1.0, 2.0, 4.0] {
            println!("  {x:>5} {:>14.10} {:>14.10} {:>14.10}", sf.w(x), sf.w_prime(x), sf.z(x)?);
        }
        let lam = sf.phi() + 1.0;
        println!("  transform at {lam:.4}: {:.12} vs 1/(psi - q) = {:.12}", sf.laplace_transform(lam)?, sf.transform_target(lam)?);
    }
    Ok(())
}
