//! Primal maximum coupling against its dual: the gap closes to the constant
//! `sum_j d_j dim E^j`.

use gausscouple::coupling::max_coupling;
use gausscouple::datum::{ConstraintFunction, Datum};
use gausscouple::dual::{duality_gap, solve_dual};
use gausscouple::sample::{gaussian_matrix, random_pd};
use gausscouple::SolverOptions;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let maps = vec![gaussian_matrix(&mut rng, 2, 4), gaussian_matrix(&mut rng, 1, 4)];
    let datum = Datum::from_parts(vec![2, 1, 1], vec![1.0; 3], vec![1.0, 0.7], maps).unwrap();
    let marginals = vec![random_pd(&mut rng, 2, 10.0), random_pd(&mut rng, 1, 1.0), random_pd(&mut rng, 1, 1.0)];
    let opts = SolverOptions::default();

    let primal = max_coupling(&datum, &marginals, &ConstraintFunction::unconstrained(), &opts).unwrap();
    let cert = solve_dual(&datum, &marginals, &opts).unwrap();
    println!("primal            {:.12}", primal.value);
    println!("dual              {:.12}", cert.value);
    println!("sum d_j dim E^j   {:.12}", datum.weighted_codomain_dim());
    println!("gap               {:.3e}", duality_gap(&datum, &primal, &cert));
    println!("min eig of slack  {:.3e}", cert.slack.min_eigenvalue());
}
