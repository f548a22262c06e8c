//! Numerical building blocks: quadrature, root finding, Laplace inversion and
//! interpolation.

pub mod interp;
pub mod inversion;
pub mod quadrature;
pub mod roots;

pub use interp::MonotoneCubic;
pub use inversion::{EulerInversion, Inverted};
pub use quadrature::{integrate, integrate_domain, integrate_domain_lenient, integrate_to_infinity, Domain, Estimate, Tolerance};

/// `e^{-x} - 1 + x`, accurate for small `x`.
pub fn exp_compensated(x: f64) -> f64 {
    if x.abs() < 0.1 {
        // alternating Taylor series x^2/2 - x^3/6 + ...
        let mut term = x * x / 2.0;
        let mut sum = term;
        for k in 3..20 {
            term *= -x / k as f64;
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        (-x).exp_m1() + x
    }
}
