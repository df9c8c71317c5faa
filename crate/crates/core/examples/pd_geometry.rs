//! Matrix geometric mean, the affine-invariant distance and the
//! operator-monotonicity properties on random positive definite matrices.

use gausscouple::pd::{delta2, geometric_mean, PdMatrix};
use gausscouple::sample::{random_pd, random_psd};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a = random_pd(&mut rng, 3, 20.0);
    let b = random_pd(&mut rng, 3, 20.0);

    println!("delta2(A, B)           = {:.6}", delta2(&a, &b));
    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let g = geometric_mean(&a, &b, t);
        println!(
            "t = {t:<4}  delta2(A, A#B) = {:.6}   log det = {:.6}",
            delta2(&a, &g),
            g.log_det()
        );
    }

    // monotone in each argument
    let bigger = PdMatrix::from_sym(a.as_sym().add(&random_psd(&mut rng, 3, 1))).unwrap();
    let gap = geometric_mean(&bigger, &b, 0.5).as_sym().sub(geometric_mean(&a, &b, 0.5).as_sym());
    println!("min eig (A'#B - A#B)   = {:.3e}  (A' >= A)", gap.min_eigenvalue());
}
