//! Information-budget game: Gaussian saddle value and a random deviation
//! test around the isotropic strategies.

use gausscouple::inequalities::{game_value_gaussian, saddle_deviation_test, GameSpec};
use gausscouple::SolverOptions;

fn main() {
    let opts = SolverOptions::default();
    for (n, p, q, zeta) in [(1, 1.0, 1.0, 0.0), (2, 2.0, 1.0, 0.5), (3, 1.0, 3.0, 2.0)] {
        let spec = GameSpec::new(n, p, q, zeta).unwrap();
        let r = saddle_deviation_test(&spec, 100, 5, &opts).unwrap();
        println!(
            "n={n} P={p} N={q} zeta={zeta}: value {:.9}, worst signal gain {:.1e}, worst noise gain {:.1e}",
            game_value_gaussian(&spec),
            r.worst_signal_excess,
            r.worst_noise_deficit
        );
    }
}
