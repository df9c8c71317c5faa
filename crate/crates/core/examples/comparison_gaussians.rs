//! Gaussians with prescribed entropies that extremize a forward-reverse
//! inequality for `X + Z, Y + Z`.

use gausscouple::datum::{ConstraintFunction, Datum};
use gausscouple::frbl::comparison_gaussians;
use gausscouple::SolverOptions;
use nalgebra::DMatrix;

fn main() {
    let datum = Datum::from_parts(
        vec![1, 1, 1],
        vec![2.0 / 3.0; 3],
        vec![1.0],
        vec![DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0])],
    )
    .unwrap();
    let entropies = [1.0, 1.5, 0.8];
    let r = comparison_gaussians(&datum, &entropies, &ConstraintFunction::independent(3), &SolverOptions::default())
        .unwrap();
    for (k, h) in r.z_covariances.iter().zip(&r.entropies) {
        println!("Var {:.6}  h {:.6}", k.as_sym().get(0, 0), h);
    }
    println!("h(X + Z, Y + Z) >= {:.8} ({})", r.lhs_reference, r.status.as_str());
}
