//! Maximum-entropy coupling of two scalar Gaussians for `log Var(X + Y)`,
//! free and under a mutual-information budget, with the multiplier and the
//! gradient of the optimal value.

use gausscouple::coupling::max_coupling;
use gausscouple::datum::{scalar_sum_datum, ConstraintFunction, Subset};
use gausscouple::pd::PdMatrix;
use gausscouple::SolverOptions;

fn main() {
    let datum = scalar_sum_datum([0.5, 0.5]);
    let marginals = vec![PdMatrix::from_row_slice(1, &[1.0]).unwrap(), PdMatrix::from_row_slice(1, &[4.0]).unwrap()];
    let opts = SolverOptions::default();

    for budget in [f64::INFINITY, 0.5 * 2f64.ln(), 0.0] {
        let mut nu = ConstraintFunction::unconstrained();
        nu.set(Subset::full(2), budget, 2).unwrap();
        let sol = max_coupling(&datum, &marginals, &nu, &opts).unwrap();
        let cov = sol.optimizer.matrix().get(0, 1);
        println!("I <= {budget:<8.5}  value {:.10}  Cov(X, Y) {cov:+.6}  boundary {}", sol.value, sol.boundary);
        for (s, lambda) in &sol.multipliers {
            println!("  lambda{:?} = {lambda:.6}", s.one_based());
        }
        if let Some(u) = &sol.marginal_gradient {
            println!("  d value / d K_i = {:.6}, {:.6}", u[0].get(0, 0), u[1].get(0, 0));
        }
    }
}
