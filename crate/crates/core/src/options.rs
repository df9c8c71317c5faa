/// Which primal algorithm `max_coupling` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Path-following log-det barrier with Newton centering steps.
    #[default]
    Barrier,
    /// Projected gradient ascent with Armijo backtracking and Dykstra
    /// projection. Unconstrained problems only; used as a cross-check.
    ProjectedGradient,
}

/// Tolerances and limits shared by the solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Target accuracy of optimal values.
    pub tol: f64,
    /// Iteration cap for the primal and dual solvers (Newton steps or
    /// gradient steps).
    pub max_iters: usize,
    /// Iteration cap for one Dykstra projection.
    pub max_proj_iters: usize,
    /// Acceptable primal/dual gap.
    pub gap_tol: f64,
    /// Distance (in `delta_2`) after which the marginal descent is declared
    /// divergent.
    pub divergence_radius: f64,
    /// Outer iteration cap for the marginal descent and the exponent search.
    pub outer_iters: usize,
    /// Random tuples tried by the dimension-condition check.
    pub dimension_trials: usize,
    pub seed: u64,
    pub method: Method,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iters: 10_000,
            max_proj_iters: 200_000,
            gap_tol: 1e-6,
            divergence_radius: 50.0,
            outer_iters: 2_000,
            dimension_trials: 200,
            seed: 0,
            method: Method::Barrier,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }
}
