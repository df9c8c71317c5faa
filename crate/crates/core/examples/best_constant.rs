//! Brascamp-Lieb constants: the scalar-sum family against `-h(lambda)`,
//! then the exponent search with both sides of the minimax identity.

use gausscouple::datum::{scalar_sum_datum, ConstraintFunction, Datum};
use gausscouple::frbl::{best_constant, binary_entropy, compute_dg};
use gausscouple::SolverOptions;
use nalgebra::DMatrix;

fn main() {
    let opts = SolverOptions::default();
    println!("lambda   D_g(free)      -h(lambda)    D_g(independent)");
    for lambda in [0.1, 0.3, 0.5] {
        let datum = scalar_sum_datum([lambda, 1.0 - lambda]);
        let free = compute_dg(&datum, datum.c(), &ConstraintFunction::unconstrained(), &opts).unwrap();
        let indep = compute_dg(&datum, datum.c(), &ConstraintFunction::independent(2), &opts).unwrap();
        println!("{lambda:<8} {:<14.9} {:<13.9} {:.9}", free.value, -binary_entropy(lambda), indep.value);
    }

    let zf = Datum::from_parts(
        vec![1, 1, 1],
        vec![2.0 / 3.0; 3],
        vec![1.0],
        vec![DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0])],
    )
    .unwrap();
    let r = best_constant(&zf, &opts).unwrap();
    let c: Vec<f64> = r.c_star.as_ref().map(|c| c.c().iter().map(|x| x * r.scale).collect()).unwrap_or_default();
    println!("\nX + Z, Y + Z: best c {c:.4?}, constant {:.9} ({})", r.scale * r.value, r.status.as_str());
    println!("  max_c inf F     {:.9}", r.inner_value);
    println!("  inf det=1 max   {:.9}", r.minimax_rhs.unwrap());
}
