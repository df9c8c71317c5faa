//! Entropy power of a sum under a mutual-information budget: the closed-form
//! bound against the maximum-entropy Gaussian coupling.

use gausscouple::inequalities::{dep_epi_bound, max_coupled_sum_entropy, EntropyPower};
use gausscouple::sample::random_pd;
use gausscouple::SolverOptions;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 2;
    let k1 = random_pd(&mut rng, n, 10.0);
    let k2 = k1.scale(2.5).unwrap();
    let (p1, p2) = (EntropyPower::of_gaussian(&k1), EntropyPower::of_gaussian(&k2));
    let opts = SolverOptions::default();

    println!("zeta     bound entropy   max coupling entropy");
    for zeta in [0.0, 0.05, 0.2, 1.0, f64::INFINITY] {
        let bound = 0.5 * n as f64 * dep_epi_bound(&p1, &p2, zeta).unwrap().ln();
        let h = max_coupled_sum_entropy(&k1, &k2, zeta, &opts).unwrap();
        println!("{zeta:<8} {bound:<15.10} {h:.10}");
    }
}
